#pragma once

#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapo/analysis.hpp"
#include "mapo/estimators.hpp"
#include "mapo/memory.hpp"

namespace mapo {

enum class EstimatorKind { Mapo, Reinforce, Mml, HardEm, Iml };

const char* estimator_name(EstimatorKind e);
bool parse_estimator(const std::string& s, EstimatorKind& out);

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg)
      : std::runtime_error(msg), field(std::move(f)) {}
};

struct TrainerConfig {
  EstimatorKind estimator = EstimatorKind::Mapo;
  int n_actors = 1;
  int batch_examples = 25;
  int sync_period = 4;  // M: snapshot publish interval, in batches
  double learning_rate = 1e-3;
  std::string optimizer = "adam";  // adam | sgd
  int total_steps = 400;
  int eval_period = 50;
  int beam_size = 5;
  double alpha = 0.1;
  BufferGradMode buffer_mode = BufferGradMode::Enumerate;
  int n_onpolicy = 1;
  int buffer_top_k = 5;  // 0 = no truncation
  int queue_capacity = 8;
  bool train_explore = true;            // systematic exploration during training
  bool onpolicy_buffer_updates = true;  // rewarded on-policy samples enter the buffer
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError naming the offending field
  std::string to_json() const;
  static TrainerConfig from_json(const std::string& text);
};

// Weighted trajectories one actor assembled from one batch of examples.
struct SampleBatch {
  int actor_id = 0;
  std::int64_t policy_version_used = 0;
  std::vector<Trajectory> items;
  // batch-level diagnostics for the metrics stream
  int n_nonempty_buffers = 0;
  int n_clipped = 0;
  double sum_pi_b = 0.0;
  int n_onpolicy_draws = 0;
  double sum_onpolicy_reward = 0.0;
};

// Bounded FIFO between actors and the learner. push blocks when full
// (backpressure, never drops); pop blocks when empty; close releases both.
class SampleQueue {
 public:
  explicit SampleQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(SampleBatch batch);          // false once closed
  bool pop(SampleBatch& out);            // false once closed and drained
  void close();
  std::size_t depth() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<SampleBatch> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

// Latest published policy snapshot (single writer, many readers).
class PolicyMailbox {
 public:
  void publish(std::shared_ptr<const Policy> p);
  std::shared_ptr<const Policy> fetch() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Policy> latest_;
};

struct MetricsRow {
  int step = 0;
  std::string estimator;
  double mean_reward = 0.0;
  double dev_accuracy = 0.0;
  double clip_fraction = 0.0;
  double mean_pi_b = 0.0;
  std::size_t queue_depth = 0;
  std::int64_t version = 0;
  std::int64_t staleness = 0;  // learner version minus batch snapshot version
};

struct TrainingLog {
  std::vector<MetricsRow> rows;
  double best_dev_accuracy = 0.0;
  int best_dev_step = 0;
  Policy best_policy;
  Policy final_policy;
  long total_samples = 0;  // trajectories consumed by the learner
};

// Fraction of examples whose top beam program earns reward 1. An empty
// dataset evaluates to 0 with a warning on stderr.
double evaluate(const Policy& policy, const Dataset& dataset, int beam_size);

// Per-example training state owned by exactly one actor.
struct TrainState {
  std::unordered_map<std::string, MemoryBuffer> buffers;
  std::unordered_map<std::string, ExploredSet> explored;
};

// One actor batch against a fixed snapshot: exploration, buffer draws,
// on-policy draws, Algorithm-2 weights. Exposed for the trainer loops and
// the single-process equivalence tests.
SampleBatch assemble_batch(const std::vector<const Example*>& batch_examples,
                           const Policy& snapshot, TrainState& state,
                           const TrainerConfig& config, int actor_id, Rng& rng);

// The full loop: in-process actors + learner. n_actors == 1 runs in
// lockstep (strictly alternating produce/consume) and is bitwise
// reproducible; n_actors > 1 runs actors on threads.
TrainingLog train(const Dataset& train_set, const Dataset& dev_set, TrainState& state,
                  const TrainerConfig& config, std::ofstream* metrics_stream = nullptr);

struct ExperimentResult {
  TrainingLog log;
  std::string metrics_path;
  std::string best_checkpoint_path;
  std::string final_checkpoint_path;
};

// Orchestrates dataset loading, optional warm-start loading, training,
// periodic evaluation, metrics CSV and checkpoints under out_dir.
ExperimentResult run_experiment(const TrainerConfig& config, const std::string& corpus_dir,
                                const std::string& warmstart_dir, const std::string& out_dir);

inline constexpr const char* kMetricsHeader =
    "step,estimator,mean_reward,dev_accuracy,clip_fraction,mean_pi_b,queue_depth,version";

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
void append_metrics_row(std::ofstream& out, const MetricsRow& row);

}  // namespace mapo

#include "mapo/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "mapo/interpreter.hpp"

namespace mapo {

using nlohmann::json;

const char* estimator_name(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Mapo: return "mapo";
    case EstimatorKind::Reinforce: return "reinforce";
    case EstimatorKind::Mml: return "mml";
    case EstimatorKind::HardEm: return "hard_em";
    case EstimatorKind::Iml: return "iml";
  }
  return "?";
}

bool parse_estimator(const std::string& s, EstimatorKind& out) {
  for (EstimatorKind e : {EstimatorKind::Mapo, EstimatorKind::Reinforce, EstimatorKind::Mml,
                          EstimatorKind::HardEm, EstimatorKind::Iml}) {
    if (s == estimator_name(e)) {
      out = e;
      return true;
    }
  }
  return false;
}

void TrainerConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("alpha", "alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (n_actors < 1) throw ConfigError("n_actors", "n_actors must be >= 1");
  if (batch_examples < 1) throw ConfigError("batch_examples", "batch_examples must be >= 1");
  if (sync_period < 1) throw ConfigError("sync_period", "sync_period must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate", "learning_rate must be > 0");
  if (optimizer != "adam" && optimizer != "sgd") {
    throw ConfigError("optimizer", "optimizer must be adam or sgd, got " + optimizer);
  }
  if (total_steps < 0) throw ConfigError("total_steps", "total_steps must be >= 0");
  if (eval_period < 1) throw ConfigError("eval_period", "eval_period must be >= 1");
  if (beam_size < 1) throw ConfigError("beam_size", "beam_size must be >= 1");
  if (n_onpolicy < 1) throw ConfigError("n_onpolicy", "n_onpolicy must be >= 1");
  if (buffer_top_k < 0) throw ConfigError("buffer_top_k", "buffer_top_k must be >= 0");
  if (queue_capacity < n_actors) {
    throw ConfigError("queue_capacity", "queue_capacity must be >= n_actors");
  }
}

std::string TrainerConfig::to_json() const {
  json j;
  j["estimator"] = estimator_name(estimator);
  j["n_actors"] = n_actors;
  j["batch_examples"] = batch_examples;
  j["sync_period"] = sync_period;
  j["learning_rate"] = learning_rate;
  j["optimizer"] = optimizer;
  j["total_steps"] = total_steps;
  j["eval_period"] = eval_period;
  j["beam_size"] = beam_size;
  j["alpha"] = alpha;
  j["buffer_mode"] = buffer_mode == BufferGradMode::Enumerate ? "enumerate" : "sample";
  j["n_onpolicy"] = n_onpolicy;
  j["buffer_top_k"] = buffer_top_k;
  j["queue_capacity"] = queue_capacity;
  j["train_explore"] = train_explore;
  j["onpolicy_buffer_updates"] = onpolicy_buffer_updates;
  j["seed"] = seed;
  return j.dump(2);
}

TrainerConfig TrainerConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  TrainerConfig c;
  if (j.contains("estimator")) {
    if (!parse_estimator(j["estimator"].get<std::string>(), c.estimator)) {
      throw ConfigError("estimator", "unknown estimator " + j["estimator"].get<std::string>());
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("n_actors", c.n_actors);
  get("batch_examples", c.batch_examples);
  get("sync_period", c.sync_period);
  get("learning_rate", c.learning_rate);
  get("optimizer", c.optimizer);
  get("total_steps", c.total_steps);
  get("eval_period", c.eval_period);
  get("beam_size", c.beam_size);
  get("alpha", c.alpha);
  if (j.contains("buffer_mode")) {
    std::string m = j["buffer_mode"].get<std::string>();
    if (m == "enumerate") {
      c.buffer_mode = BufferGradMode::Enumerate;
    } else if (m == "sample") {
      c.buffer_mode = BufferGradMode::Sample;
    } else {
      throw ConfigError("buffer_mode", "buffer_mode must be enumerate or sample, got " + m);
    }
  }
  get("n_onpolicy", c.n_onpolicy);
  get("buffer_top_k", c.buffer_top_k);
  get("queue_capacity", c.queue_capacity);
  get("train_explore", c.train_explore);
  get("onpolicy_buffer_updates", c.onpolicy_buffer_updates);
  get("seed", c.seed);
  c.validate();
  return c;
}

bool SampleQueue::push(SampleBatch batch) {
  std::unique_lock<std::mutex> lock(mu_);
  not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
  if (closed_) return false;
  items_.push_back(std::move(batch));
  not_empty_.notify_one();
  return true;
}

bool SampleQueue::pop(SampleBatch& out) {
  std::unique_lock<std::mutex> lock(mu_);
  not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
  if (items_.empty()) return false;  // closed and drained
  out = std::move(items_.front());
  items_.pop_front();
  not_full_.notify_one();
  return true;
}

void SampleQueue::close() {
  std::lock_guard<std::mutex> lock(mu_);
  closed_ = true;
  not_full_.notify_all();
  not_empty_.notify_all();
}

std::size_t SampleQueue::depth() const {
  std::lock_guard<std::mutex> lock(mu_);
  return items_.size();
}

void PolicyMailbox::publish(std::shared_ptr<const Policy> p) {
  std::lock_guard<std::mutex> lock(mu_);
  latest_ = std::move(p);
}

std::shared_ptr<const Policy> PolicyMailbox::fetch() const {
  std::lock_guard<std::mutex> lock(mu_);
  return latest_;
}

double evaluate(const Policy& policy, const Dataset& dataset, int beam_size) {
  if (dataset.examples.empty()) {
    std::cerr << "warning: evaluating on an empty dataset\n";
    return 0.0;
  }
  int correct = 0;
  for (const Example& ex : dataset.examples) {
    std::vector<Program> beams = beam_search(policy, ex, beam_size);
    if (!beams.empty() && reward(beams.front(), ex) == 1) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.examples.size());
}

namespace {

std::vector<Program> buffer_view(const MemoryBuffer& buffer, const Policy& policy,
                                 const Example& ex, int top_k) {
  if (top_k > 0 && static_cast<int>(buffer.size()) > top_k) {
    return truncate_top_k(buffer, policy, ex, top_k);
  }
  return buffer.programs();
}

bool in_view(const std::vector<Program>& view, const Program& p) {
  for (const Program& q : view) {
    if (q == p) return true;
  }
  return false;
}

}  // namespace

SampleBatch assemble_batch(const std::vector<const Example*>& batch_examples,
                           const Policy& snapshot, TrainState& state,
                           const TrainerConfig& config, int actor_id, Rng& rng) {
  SampleBatch batch;
  batch.actor_id = actor_id;
  batch.policy_version_used = snapshot.version;

  for (const Example* exp : batch_examples) {
    const Example& ex = *exp;
    auto buf_it = state.buffers.try_emplace(ex.id, MemoryBuffer(ex.id)).first;
    auto exp_it = state.explored.try_emplace(ex.id, ExploredSet()).first;
    MemoryBuffer& buffer = buf_it->second;

    if (config.train_explore && config.estimator != EstimatorKind::Reinforce) {
      systematic_explore(ex, snapshot, exp_it->second, buffer, nullptr, rng);
    }

    if (config.estimator == EstimatorKind::Reinforce) {
      for (int i = 0; i < config.n_onpolicy; ++i) {
        Trajectory t = sample(snapshot, ex, rng);
        ++batch.n_onpolicy_draws;
        batch.sum_onpolicy_reward += t.reward;
        t.weight = 1.0;
        batch.items.push_back(std::move(t));
      }
      continue;
    }

    std::vector<Program> view = buffer_view(buffer, snapshot, ex, config.buffer_top_k);

    if (config.estimator != EstimatorKind::Mapo) {
      // likelihood-family estimators: ship the buffer, the learner reweights
      if (!view.empty()) {
        ++batch.n_nonempty_buffers;
        double pi_b = 0.0;
        for (const Program& p : view) {
          Trajectory t;
          t.example_id = ex.id;
          t.program = p;
          t.reward = 1;
          t.log_prob = log_prob(snapshot, ex, p);
          t.policy_version = snapshot.version;
          t.weight = 1.0;
          pi_b += std::exp(t.log_prob);
          batch.items.push_back(std::move(t));
        }
        batch.sum_pi_b += pi_b;
        if (pi_b < config.alpha) ++batch.n_clipped;
      }
      continue;
    }

    // MAPO per the distributed algorithm
    double pi_b = 0.0;
    std::vector<double> lps;
    lps.reserve(view.size());
    for (const Program& p : view) {
      lps.push_back(log_prob(snapshot, ex, p));
      pi_b += std::exp(lps.back());
    }
    const double w_plus = view.empty() ? 0.0 : clip_weight(pi_b, config.alpha);
    if (!view.empty()) {
      ++batch.n_nonempty_buffers;
      batch.sum_pi_b += pi_b;
      if (pi_b < config.alpha) ++batch.n_clipped;
      if (config.buffer_mode == BufferGradMode::Sample) {
        Trajectory t = sample_in_buffer(snapshot, ex, view, rng);
        t.weight = w_plus;
        batch.items.push_back(std::move(t));
      } else {
        for (std::size_t i = 0; i < view.size(); ++i) {
          Trajectory t;
          t.example_id = ex.id;
          t.program = view[i];
          t.reward = 1;
          t.log_prob = lps[i];
          t.policy_version = snapshot.version;
          t.weight = w_plus * std::exp(lps[i]) / pi_b;
          batch.items.push_back(std::move(t));
        }
      }
    }

    Trajectory onpolicy = sample(snapshot, ex, rng);
    ++batch.n_onpolicy_draws;
    batch.sum_onpolicy_reward += onpolicy.reward;
    // stratum membership is the full buffer; the view only caps the
    // inside-term enumeration
    const bool rejected = buffer.contains(onpolicy.program) || in_view(view, onpolicy.program);
    if (config.onpolicy_buffer_updates && onpolicy.reward == 1) {
      buffer.insert(onpolicy.program, ex);
    }
    if (!rejected) {
      onpolicy.weight = 1.0 - w_plus;
      batch.items.push_back(std::move(onpolicy));
    }
  }
  return batch;
}

namespace {

// Adam in lazy-sparse form: only ids present in the gradient move, so a zero
// gradient leaves the parameters untouched.
class Optimizer {
 public:
  Optimizer(std::string kind, double lr) : kind_(std::move(kind)), lr_(lr) {}

  // gradient ascent on the expected return
  void step(Policy& policy, const SparseVec& grad) {
    SparseVec delta;
    if (kind_ == "sgd") {
      delta.axpy(lr_, grad);
    } else {
      ++t_;
      const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
      for (const auto& [id, g] : grad.sorted_items()) {
        double m = b1 * m_.get(id) + (1.0 - b1) * g;
        double v = b2 * v_.get(id) + (1.0 - b2) * g * g;
        m_.set(id, m);
        v_.set(id, v);
        delta.set(id, lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps));
      }
    }
    policy.apply_update(delta);  // bumps version even when delta is empty
  }

 private:
  std::string kind_;
  double lr_;
  long t_ = 0;
  SparseVec m_;
  SparseVec v_;
};

struct LearnerState {
  Policy policy;
  Optimizer optimizer;
  const Dataset& train_set;
  const Dataset& dev_set;
  const TrainerConfig& config;
  PolicyMailbox& mailbox;
  std::unordered_map<std::string, const Example*> by_id;
  TrainingLog log;
  int step = 0;
  double last_dev_accuracy = 0.0;
  std::ofstream* metrics_stream = nullptr;  // incremental flush when set

  LearnerState(Policy p, const Dataset& tr, const Dataset& dv, const TrainerConfig& cfg,
               PolicyMailbox& mb)
      : policy(std::move(p)),
        optimizer(cfg.optimizer, cfg.learning_rate),
        train_set(tr),
        dev_set(dv),
        config(cfg),
        mailbox(mb) {
    for (const Example& ex : tr.examples) by_id[ex.id] = &ex;
    mailbox.publish(std::make_shared<Policy>(policy));
    last_dev_accuracy = evaluate(policy, dev_set, config.beam_size);
    maybe_track_best();
  }

  void maybe_track_best() {
    if (log.rows.empty() || last_dev_accuracy > log.best_dev_accuracy) {
      log.best_dev_accuracy = last_dev_accuracy;
      log.best_dev_step = step;
      log.best_policy = policy;
    }
  }

  const Example& example_of(const Trajectory& t) const { return *by_id.at(t.example_id); }

  SparseVec batch_gradient(const SampleBatch& batch) {
    SparseVec d;
    switch (config.estimator) {
      case EstimatorKind::Mapo:
      case EstimatorKind::Reinforce:
        for (const Trajectory& t : batch.items) {
          double coeff = t.weight * t.reward;
          if (coeff == 0.0) continue;
          d.axpy(coeff, grad_log_prob(policy, example_of(t), t.program));
        }
        break;
      case EstimatorKind::Iml:
        for (const Trajectory& t : batch.items) {
          d.axpy(1.0, grad_log_prob(policy, example_of(t), t.program));
        }
        break;
      case EstimatorKind::Mml:
      case EstimatorKind::HardEm: {
        // consecutive runs of one example id form that example's buffer
        std::size_t i = 0;
        while (i < batch.items.size()) {
          std::size_t j = i;
          std::vector<Program> group;
          while (j < batch.items.size() &&
                 batch.items[j].example_id == batch.items[i].example_id) {
            group.push_back(batch.items[j].program);
            ++j;
          }
          const Example& ex = example_of(batch.items[i]);
          if (config.estimator == EstimatorKind::Mml) {
            d.axpy(1.0, mml_gradient(ex, group, policy));
          } else {
            d.axpy(1.0, hard_em_gradient(ex, group, policy));
          }
          i = j;
        }
        break;
      }
    }
    d.scale(1.0 / static_cast<double>(config.batch_examples));
    return d;
  }

  void consume(const SampleBatch& batch, std::size_t queue_depth) {
    SparseVec d = batch_gradient(batch);
    optimizer.step(policy, d);
    ++step;
    log.total_samples += static_cast<long>(batch.items.size());

    if (step % config.sync_period == 0) {
      mailbox.publish(std::make_shared<Policy>(policy));
    }
    bool eval_now = step % config.eval_period == 0 || step == config.total_steps;
    if (eval_now) {
      last_dev_accuracy = evaluate(policy, dev_set, config.beam_size);
      maybe_track_best();
    }

    MetricsRow row;
    row.step = step;
    row.estimator = estimator_name(config.estimator);
    row.mean_reward = batch.n_onpolicy_draws > 0
                          ? batch.sum_onpolicy_reward / batch.n_onpolicy_draws
                          : 0.0;
    row.dev_accuracy = last_dev_accuracy;
    row.clip_fraction = batch.n_nonempty_buffers > 0
                            ? static_cast<double>(batch.n_clipped) / batch.n_nonempty_buffers
                            : 0.0;
    row.mean_pi_b =
        batch.n_nonempty_buffers > 0 ? batch.sum_pi_b / batch.n_nonempty_buffers : 0.0;
    row.queue_depth = queue_depth;
    row.version = policy.version;
    row.staleness = policy.version - 1 - batch.policy_version_used;
    if (metrics_stream) {
      append_metrics_row(*metrics_stream, row);
      metrics_stream->flush();
    }
    log.rows.push_back(std::move(row));
  }
};

std::vector<std::vector<const Example*>> shard_examples(const Dataset& ds, int n_actors) {
  std::vector<std::vector<const Example*>> shards(static_cast<std::size_t>(n_actors));
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    shards[i % static_cast<std::size_t>(n_actors)].push_back(&ds.examples[i]);
  }
  return shards;
}

std::vector<const Example*> next_batch(const std::vector<const Example*>& shard,
                                       std::size_t& cursor, int batch_examples) {
  std::vector<const Example*> out;
  if (shard.empty()) return out;
  for (int i = 0; i < batch_examples; ++i) {
    out.push_back(shard[cursor % shard.size()]);
    ++cursor;
  }
  return out;
}

}  // namespace

TrainingLog train(const Dataset& train_set, const Dataset& dev_set, TrainState& state,
                  const TrainerConfig& config, std::ofstream* metrics_stream) {
  config.validate();
  RngStreams streams(config.seed);

  Policy init;
  init.config.max_decode_tokens = 25;

  PolicyMailbox mailbox;
  SampleQueue queue(static_cast<std::size_t>(config.queue_capacity));
  LearnerState learner(init, train_set, dev_set, config, mailbox);
  learner.metrics_stream = metrics_stream;

  auto shards = shard_examples(train_set, config.n_actors);

  if (config.n_actors == 1) {
    // lockstep: strictly alternating produce/consume, bitwise reproducible
    Rng rng = streams.stream("actor/0");
    std::size_t cursor = 0;
    for (int s = 0; s < config.total_steps; ++s) {
      auto batch_exs = next_batch(shards[0], cursor, config.batch_examples);
      std::shared_ptr<const Policy> snapshot = mailbox.fetch();
      SampleBatch batch = assemble_batch(batch_exs, *snapshot, state, config, 0, rng);
      queue.push(std::move(batch));
      SampleBatch popped;
      queue.pop(popped);
      learner.consume(popped, queue.depth());
    }
    queue.close();
  } else {
    // threaded actors; each owns its shard's buffers via the shared state
    // (shards are disjoint, so per-example state has a single writer)
    std::atomic<bool> stop{false};
    std::vector<std::thread> actors;
    for (int a = 0; a < config.n_actors; ++a) {
      actors.emplace_back([&, a] {
        Rng rng = streams.stream("actor/" + std::to_string(a));
        std::size_t cursor = 0;
        while (!stop.load(std::memory_order_relaxed)) {
          auto batch_exs = next_batch(shards[static_cast<std::size_t>(a)], cursor,
                                      config.batch_examples);
          if (batch_exs.empty()) break;
          std::shared_ptr<const Policy> snapshot = mailbox.fetch();
          SampleBatch batch = assemble_batch(batch_exs, *snapshot, state, config, a, rng);
          if (!queue.push(std::move(batch))) break;
        }
      });
    }
    for (int s = 0; s < config.total_steps; ++s) {
      SampleBatch batch;
      if (!queue.pop(batch)) break;
      learner.consume(batch, queue.depth());
    }
    stop.store(true);
    queue.close();
    for (std::thread& t : actors) t.join();
  }

  learner.log.final_policy = learner.policy;
  if (learner.log.rows.empty()) {
    learner.log.best_policy = learner.policy;
  }
  return std::move(learner.log);
}

void append_metrics_row(std::ofstream& out, const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f,%.6f,%.9g,%zu,%lld\n", r.step,
                r.estimator.c_str(), r.mean_reward, r.dev_accuracy, r.clip_fraction,
                r.mean_pi_b, r.queue_depth, static_cast<long long>(r.version));
  out << buf;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << kMetricsHeader << "\n";
  for (const MetricsRow& r : rows) append_metrics_row(out, r);
}

ExperimentResult run_experiment(const TrainerConfig& config, const std::string& corpus_dir,
                                const std::string& warmstart_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  config.validate();
  fs::create_directories(out_dir);

  Dataset train_set = load_dataset((fs::path(corpus_dir) / "train.jsonl").string(),
                                   (fs::path(corpus_dir) / "tables").string());
  Dataset dev_set = load_dataset((fs::path(corpus_dir) / "dev.jsonl").string(),
                                 (fs::path(corpus_dir) / "tables").string());

  TrainState state;
  if (!warmstart_dir.empty()) {
    state.buffers = load_buffers((fs::path(warmstart_dir) / "buffers.jsonl").string(), train_set);
    fs::path explored_path = fs::path(warmstart_dir) / "explored.jsonl";
    if (fs::exists(explored_path)) {
      state.explored = load_explored(explored_path.string());
    }
  }

  ExperimentResult result;
  result.metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  std::ofstream metrics_out(result.metrics_path);
  if (!metrics_out) throw std::runtime_error("cannot write metrics: " + result.metrics_path);
  metrics_out << kMetricsHeader << "\n";
  TrainingLog log = train(train_set, dev_set, state, config, &metrics_out);
  metrics_out.close();
  result.best_checkpoint_path = (fs::path(out_dir) / "best_policy.json").string();
  save_policy(log.best_policy, result.best_checkpoint_path);
  result.final_checkpoint_path = (fs::path(out_dir) / "final_policy.json").string();
  save_policy(log.final_policy, result.final_checkpoint_path);
  save_buffers(state.buffers, (fs::path(out_dir) / "buffers.jsonl").string());
  std::ofstream cfg_out(fs::path(out_dir) / "config.json");
  cfg_out << config.to_json() << "\n";
  result.log = std::move(log);
  return result;
}

}  // namespace mapo

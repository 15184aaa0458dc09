#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mapo/policy.hpp"

namespace mapo {

// Per-example set of discovered reward-1 programs. Insertion revalidates the
// reward; duplicates are dropped.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(std::string example_id) : example_id_(std::move(example_id)) {}

  // Returns true if inserted (reward 1 and not already present).
  bool insert(const Program& program, const Example& example);
  bool contains(const Program& program) const;

  const std::vector<Program>& programs() const { return programs_; }
  const std::string& example_id() const { return example_id_; }
  bool empty() const { return programs_.empty(); }
  std::size_t size() const { return programs_.size(); }

 private:
  std::string example_id_;
  std::vector<Program> programs_;
  std::unordered_set<std::string> keys_;  // canonical renderings
};

// Set of fully explored sequences (complete programs and dead-end prefixes).
// Exact mode is a hash set; bloom mode trades memory for a false-positive
// rate, which can permanently hide an unexplored program.
class ExploredSet {
 public:
  // exact mode
  ExploredSet() = default;
  // bloom mode sized for `capacity` entries at false-positive rate `epsilon`
  ExploredSet(std::int64_t capacity, double epsilon, std::uint64_t seed = 0x5eed);

  void insert(const Program& sequence);
  bool contains(const Program& sequence) const;

  // canonical-rendering fast path (key = render_program(sequence))
  void insert_key(const std::string& key);
  bool contains_key(const std::string& key) const;

  bool bloom_mode() const { return !bits_.empty(); }
  std::int64_t inserted() const { return inserted_; }
  std::int64_t capacity() const { return capacity_; }
  bool over_capacity() const { return bloom_mode() && inserted_ > capacity_; }

  std::string to_json() const;
  static ExploredSet from_json(const std::string& text);

 private:
  // exact mode
  std::unordered_set<std::string> exact_;
  // bloom mode
  std::vector<std::uint64_t> bits_;
  std::int64_t n_bits_ = 0;
  int n_hashes_ = 0;
  std::uint64_t seed_ = 0;
  std::int64_t capacity_ = 0;
  std::int64_t inserted_ = 0;
};

// Trigger gate for random exploration: a constrained function may start an
// expression only when one of its trigger words (or POS tags) occurs in the
// question. Unlisted functions are unconstrained.
struct PruningRules {
  std::unordered_map<FunctionId, std::vector<std::string>> triggers;

  static PruningRules standard();  // the WikiTableQuestions trigger table
  bool allows(FunctionId f, const Example& example) const;
};

struct ExploreOutcome {
  bool completed = false;              // false: dead end, prefix marked explored
  std::optional<Trajectory> trajectory;  // set when completed
};

// One policy-guided descent that never revisits fully explored sequences.
// Samples from the policy renormalized over the unexplored valid tokens;
// marks dead-end prefixes and finished programs in `explored`; adds reward-1
// completions to `buffer`. `rules`, when given, prunes function tokens
// (random-exploration mode only).
ExploreOutcome systematic_explore(const Example& example, const Policy& policy,
                                  ExploredSet& explored, MemoryBuffer& buffer,
                                  const PruningRules* rules, Rng& rng);

struct WarmStartResult {
  std::unordered_map<std::string, MemoryBuffer> buffers;
  std::unordered_map<std::string, ExploredSet> explored;
  int examples_with_programs = 0;
  double mean_buffer_size = 0.0;
};

struct WarmStartOptions {
  int attempts_per_example = 1000;
  int extra_attempts_no_rules = 0;  // second unpruned pass per example
  bool use_rules = true;
  bool exact_explored_set = false;  // default: bloom at the scale settings below
  std::int64_t bloom_capacity = 1'000'000;
  double bloom_epsilon = 1e-4;
};

// Random-policy systematic exploration, run attempts_per_example times per
// example with a per-example rng stream.
WarmStartResult warm_start(const Dataset& dataset, const Policy& policy,
                           const WarmStartOptions& options, const RngStreams& streams);

// Keep the k most probable programs under `policy`; ties by rendering.
std::vector<Program> truncate_top_k(const MemoryBuffer& buffer, const Policy& policy,
                                    const Example& example, int k);

// Checkpoints: JSON-lines {"id","programs":[...]} for buffers; one JSON
// object per line {"id","explored":{...}} for explored sets.
void save_buffers(const std::unordered_map<std::string, MemoryBuffer>& buffers,
                  const std::string& path);
std::unordered_map<std::string, MemoryBuffer> load_buffers(const std::string& path,
                                                           const Dataset& dataset);
void save_explored(const std::unordered_map<std::string, ExploredSet>& sets,
                   const std::string& path);
std::unordered_map<std::string, ExploredSet> load_explored(const std::string& path);

}  // namespace mapo

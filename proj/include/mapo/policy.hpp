#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapo/dataset.hpp"
#include "mapo/features.hpp"
#include "mapo/grammar.hpp"
#include "mapo/rng.hpp"

namespace mapo {

struct PolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DeadEndPrefix : PolicyError {
  DeadEndPrefix() : PolicyError("no valid next token") {}
};
struct InvalidProgram : PolicyError {
  explicit InvalidProgram(const std::string& msg) : PolicyError(msg) {}
};
struct EmptyBuffer : PolicyError {
  EmptyBuffer() : PolicyError("empty memory buffer") {}
};

// Which feature templates are active plus the decode-length cap (EOS becomes
// the only valid continuation as the cap approaches).
struct FeatureConfig {
  bool token_identity = true;
  bool token_bigram = true;
  bool token_trigger = true;
  bool kind_position = true;
  bool column_overlap = true;
  bool bias = true;
  int max_decode_tokens = 25;

  std::uint64_t hash() const;
  std::string to_json() const;
  static FeatureConfig from_json(const std::string& text);
  bool operator==(const FeatureConfig&) const = default;
};

// Sparse log-linear autoregressive policy over valid DSL tokens.
struct Policy {
  SparseVec params;
  FeatureConfig config;
  std::int64_t version = 0;

  // one optimizer step; bumps the version
  void apply_update(const SparseVec& delta) {
    params.axpy(1.0, delta);
    ++version;
  }
};

struct Trajectory {
  std::string example_id;
  Program program;
  int reward = 0;
  double log_prob = 0.0;       // under the policy version below
  std::int64_t policy_version = 0;
  double weight = 1.0;         // estimator weight
};

// Incremental decoding context: one token at a time, with the per-step
// candidate set, features and softmax probabilities cached between pushes.
// All sampling, scoring, gradient and beam code funnels through this class,
// so probabilities agree bit for bit across those paths.
class PolicyWalk {
 public:
  PolicyWalk(const Policy& policy, const Example& example);

  struct Step {
    std::vector<Token> candidates;       // sorted canonically
    std::vector<std::string> renders;    // canonical text per candidate
    std::vector<double> probs;           // softmax over the candidates

    // features of candidate i live in feature_pool[feature_offsets[i] ..
    // feature_offsets[i+1])
    std::vector<std::pair<FeatureId, double>> feature_pool;
    std::vector<std::uint32_t> feature_offsets;

    std::span<const std::pair<FeatureId, double>> feats(std::size_t i) const {
      return {feature_pool.data() + feature_offsets[i],
              feature_pool.data() + feature_offsets[i + 1]};
    }
  };

  // Valid-continuation distribution at the current prefix. Throws
  // DeadEndPrefix when empty. Cached until the next push.
  const Step& step() const;

  void push_index(std::size_t candidate_index);
  void push_token(const Token& t);  // throws InvalidProgram when not a candidate

  bool complete() const { return state_.complete(); }
  const Program& tokens() const { return tokens_; }
  double log_prob_sum() const { return log_prob_; }
  const Example& example() const { return *example_; }
  const Policy& policy() const { return *policy_; }

  Features features_for(const Token& candidate) const;

 private:
  const Policy* policy_;
  const Example* example_;
  PrefixState state_;
  std::vector<std::string> triggers_;  // question trigger words / tags present
  Program tokens_;
  std::string prev_render_ = "<BOS>";
  double log_prob_ = 0.0;
  mutable std::optional<Step> cached_step_;

  void features_into(const Token& candidate, const std::string& render,
                     std::vector<std::pair<FeatureId, double>>& pool) const;
};

// Feature extraction for one candidate continuation of a prefix.
Features featurize(const FeatureConfig& config, const Example& example, const Program& prefix,
                   const Token& candidate);

// Per-step distribution over the valid continuations of a prefix.
struct TokenProb {
  Token token;
  double prob;
};
std::vector<TokenProb> token_distribution(const Policy& policy, const Example& example,
                                          const Program& prefix);

// Sum of per-step log probabilities. Throws InvalidProgram if any token is
// outside its prefix's valid set.
double log_prob(const Policy& policy, const Example& example, const Program& program);

// Ancestral sample constrained to valid tokens; records reward and log_prob.
Trajectory sample(const Policy& policy, const Example& example, Rng& rng);

// Draw from the buffer renormalized by current probability mass.
Trajectory sample_in_buffer(const Policy& policy, const Example& example,
                            const std::vector<Program>& buffer, Rng& rng);

// One ancestral draw; nullopt when it landed inside the buffer (the single
// conditional draw of the training algorithm, not retry-until-accept).
std::optional<Trajectory> rejection_sample_outside(const Policy& policy, const Example& example,
                                                   const std::vector<Program>& buffer, Rng& rng);

// Exact softmax score-function gradient of log pi(program).
SparseVec grad_log_prob(const Policy& policy, const Example& example, const Program& program);

// Length-synchronized beam over log_prob; up to beam_size complete programs,
// best first, ties broken by canonical rendering.
std::vector<Program> beam_search(const Policy& policy, const Example& example, int beam_size);

// Checkpoint I/O; round-trips parameters bit-exactly.
std::string policy_to_json(const Policy& p);
Policy policy_from_json(const std::string& text);
void save_policy(const Policy& p, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace mapo

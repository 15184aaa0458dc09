#pragma once

#include "mapo/enumerate.hpp"
#include "mapo/policy.hpp"

namespace mapo {

enum class BufferGradMode { Enumerate, Sample };
enum class BaselineMode { None, BatchMean };

struct EstimatorConfig {
  double alpha = 0.1;  // memory weight clip
  BufferGradMode buffer_mode = BufferGradMode::Enumerate;
  int n_buffer_samples = 1;  // Sample mode draws
  int n_onpolicy = 1;
};

struct GradientDiagnostics {
  double pi_b = 0.0;
  bool clipped = false;
  int n_buffer_samples = 0;
  int n_onpolicy_kept = 0;
};

struct GradientEstimate {
  SparseVec grad;
  GradientDiagnostics diagnostics;
};

// max(pi_B, alpha)
double clip_weight(double pi_b, double alpha);

// Ground-truth gradient of the expected return by full enumeration:
// sum over programs of pi(a) R(a) grad log pi(a). Throws SpaceTooLarge.
SparseVec exact_gradient(const Example& example, const Policy& policy, int max_tokens);

// (1/K) sum_k grad log pi(a_k) (R_k - b), b = 0 or the batch mean reward.
GradientEstimate reinforce_gradient(const Example& example, const Policy& policy, int k,
                                    BaselineMode baseline, Rng& rng);

// Memory augmented estimator: the expected return split into the buffer
// stratum (scored exactly or by renormalized sampling, weighted by the
// clipped memory weight) and the outside stratum (single-draw rejection
// samples, kept-sample average, weighted by one minus the clipped weight).
GradientEstimate mapo_gradient(const Example& example, const std::vector<Program>& buffer,
                               const Policy& policy, const EstimatorConfig& config, Rng& rng);

// Gradient of log sum_{a in B} pi(a): posterior-weighted buffer gradients.
SparseVec mml_gradient(const Example& example, const std::vector<Program>& buffer,
                       const Policy& policy);

// grad log pi of the most probable buffer program (ties by rendering).
SparseVec hard_em_gradient(const Example& example, const std::vector<Program>& buffer,
                           const Policy& policy);

// Gradient of sum_{a in B} log pi(a): uniform weights over the buffer.
SparseVec iml_gradient(const Example& example, const std::vector<Program>& buffer,
                       const Policy& policy);

}  // namespace mapo

#pragma once

#include <functional>
#include <string>
#include <unordered_map>

#include "mapo/estimators.hpp"
#include "mapo/memory.hpp"

namespace mapo {

// Share of non-empty-buffer examples whose memory weight falls below alpha
// (the examples whose gradient the clip biases). 0 when no buffer is
// non-empty.
double clipping_fraction(const Dataset& dataset,
                         const std::unordered_map<std::string, MemoryBuffer>& buffers,
                         const Policy& policy, double alpha);

struct VarianceReport {
  std::string estimator_name;
  long n_trials = 0;
  SparseVec mean_grad;
  double trace_cov = 0.0;
  SparseVec per_component_var;
};

// Sample mean and trace of the sample covariance of a stochastic gradient
// estimator over independent trials. Requires n_trials >= 2.
VarianceReport estimator_variance(const std::string& name,
                                  const std::function<SparseVec(Rng&)>& estimator, long n_trials,
                                  Rng& rng);

// Ratio of gradient-estimate variances, baseline over no-baseline, for
// binary rewards with an exhaustive buffer:
//   (1 + sigma_minus^2 / sigma_plus^2) * (1 - pi_b)^2
// Throws std::invalid_argument when sigma_plus_sq <= 0.
double variance_ratio_with_baseline(double sigma_plus_sq, double sigma_minus_sq, double pi_b);

// Optimal stratified allocation k+/k- = pi_b sqrt(Var+) / ((1-pi_b) sqrt(Var-)).
// Equals 1 under Var+ = (1-pi_b)^2 s^2, Var- = pi_b^2 s^2.
double optimal_allocation_ratio(double pi_b, double var_plus, double var_minus);

// Type-preserving table perturbation: rows permuted, number cells redrawn.
Table perturb_table(const Table& table, Rng& rng);

struct SpuriousnessReport {
  int n_examples = 0;
  int n_correct = 0;   // top beam program earns reward 1
  int n_spurious = 0;  // correct but disagrees with gold on a perturbed table
  double fraction = 0.0;  // n_spurious / n_correct (0 when none correct)
};

// Among examples the policy answers correctly, how many predicted programs
// diverge from the sidecar gold program on perturbed tables.
SpuriousnessReport spuriousness_report(
    const Policy& policy, const Dataset& dataset,
    const std::unordered_map<std::string, Program>& gold_programs, int beam_size,
    int n_perturbations, Rng& rng);

}  // namespace mapo

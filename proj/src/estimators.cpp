#include "mapo/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace mapo {

double clip_weight(double pi_b, double alpha) { return std::max(pi_b, alpha); }

SparseVec exact_gradient(const Example& example, const Policy& policy, int max_tokens) {
  SparseVec g;
  for (const EnumeratedProgram& ep : enumerate_programs(example, max_tokens)) {
    if (ep.reward == 0) continue;
    double p = std::exp(log_prob(policy, example, ep.program));
    g.axpy(p * ep.reward, grad_log_prob(policy, example, ep.program));
  }
  return g;
}

GradientEstimate reinforce_gradient(const Example& example, const Policy& policy, int k,
                                    BaselineMode baseline, Rng& rng) {
  std::vector<Trajectory> samples;
  samples.reserve(static_cast<std::size_t>(k));
  double reward_sum = 0.0;
  for (int i = 0; i < k; ++i) {
    samples.push_back(sample(policy, example, rng));
    reward_sum += samples.back().reward;
  }
  double b = baseline == BaselineMode::BatchMean ? reward_sum / static_cast<double>(k) : 0.0;
  GradientEstimate est;
  for (const Trajectory& t : samples) {
    double coeff = (t.reward - b) / static_cast<double>(k);
    if (coeff != 0.0) {
      est.grad.axpy(coeff, grad_log_prob(policy, example, t.program));
    }
  }
  est.diagnostics.n_onpolicy_kept = k;
  return est;
}

GradientEstimate mapo_gradient(const Example& example, const std::vector<Program>& buffer,
                               const Policy& policy, const EstimatorConfig& config, Rng& rng) {
  GradientEstimate est;

  double pi_b = 0.0;
  std::vector<double> buffer_lps;
  buffer_lps.reserve(buffer.size());
  for (const Program& p : buffer) {
    buffer_lps.push_back(log_prob(policy, example, p));
    pi_b += std::exp(buffer_lps.back());
  }
  est.diagnostics.pi_b = pi_b;

  const double w_plus = buffer.empty() ? 0.0 : clip_weight(pi_b, config.alpha);
  est.diagnostics.clipped = !buffer.empty() && pi_b < config.alpha;

  SparseVec inside;
  if (!buffer.empty()) {
    if (config.buffer_mode == BufferGradMode::Enumerate) {
      for (std::size_t i = 0; i < buffer.size(); ++i) {
        inside.axpy(std::exp(buffer_lps[i]) / pi_b, grad_log_prob(policy, example, buffer[i]));
      }
      est.diagnostics.n_buffer_samples = static_cast<int>(buffer.size());
    } else {
      for (int i = 0; i < config.n_buffer_samples; ++i) {
        Trajectory t = sample_in_buffer(policy, example, buffer, rng);
        inside.axpy(1.0 / config.n_buffer_samples, grad_log_prob(policy, example, t.program));
      }
      est.diagnostics.n_buffer_samples = config.n_buffer_samples;
    }
  }

  SparseVec outside;
  int kept = 0;
  std::vector<std::pair<double, SparseVec>> kept_grads;
  for (int i = 0; i < config.n_onpolicy; ++i) {
    std::optional<Trajectory> t = rejection_sample_outside(policy, example, buffer, rng);
    if (!t) continue;
    ++kept;
    if (t->reward != 0) {
      kept_grads.emplace_back(static_cast<double>(t->reward),
                              grad_log_prob(policy, example, t->program));
    }
  }
  // kept-sample average; rejected draws only shrink the denominator
  if (kept > 0) {
    for (const auto& [r, g] : kept_grads) outside.axpy(r / kept, g);
  }
  est.diagnostics.n_onpolicy_kept = kept;

  est.grad.axpy(w_plus, inside);
  est.grad.axpy(1.0 - w_plus, outside);
  return est;
}

namespace {

std::vector<double> buffer_log_probs(const Example& example, const std::vector<Program>& buffer,
                                     const Policy& policy) {
  if (buffer.empty()) throw EmptyBuffer();
  std::vector<double> lps;
  lps.reserve(buffer.size());
  for (const Program& p : buffer) lps.push_back(log_prob(policy, example, p));
  return lps;
}

}  // namespace

SparseVec mml_gradient(const Example& example, const std::vector<Program>& buffer,
                       const Policy& policy) {
  std::vector<double> lps = buffer_log_probs(example, buffer, policy);
  double max_lp = *std::max_element(lps.begin(), lps.end());
  double z = 0.0;
  for (double lp : lps) z += std::exp(lp - max_lp);
  SparseVec g;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    g.axpy(std::exp(lps[i] - max_lp) / z, grad_log_prob(policy, example, buffer[i]));
  }
  return g;
}

SparseVec hard_em_gradient(const Example& example, const std::vector<Program>& buffer,
                           const Policy& policy) {
  std::vector<double> lps = buffer_log_probs(example, buffer, policy);
  std::size_t best = 0;
  for (std::size_t i = 1; i < buffer.size(); ++i) {
    if (lps[i] > lps[best] ||
        (lps[i] == lps[best] &&
         render_program(buffer[i]) < render_program(buffer[best]))) {
      best = i;
    }
  }
  return grad_log_prob(policy, example, buffer[best]);
}

SparseVec iml_gradient(const Example& example, const std::vector<Program>& buffer,
                       const Policy& policy) {
  if (buffer.empty()) throw EmptyBuffer();
  SparseVec g;
  for (const Program& p : buffer) {
    g.axpy(1.0, grad_log_prob(policy, example, p));
  }
  return g;
}

}  // namespace mapo

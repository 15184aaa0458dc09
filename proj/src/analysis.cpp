#include "mapo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mapo/interpreter.hpp"

namespace mapo {

double clipping_fraction(const Dataset& dataset,
                         const std::unordered_map<std::string, MemoryBuffer>& buffers,
                         const Policy& policy, double alpha) {
  int non_empty = 0;
  int clipped = 0;
  for (const Example& ex : dataset.examples) {
    auto it = buffers.find(ex.id);
    if (it == buffers.end() || it->second.empty()) continue;
    ++non_empty;
    double pi_b = 0.0;
    for (const Program& p : it->second.programs()) {
      pi_b += std::exp(log_prob(policy, ex, p));
    }
    if (pi_b < alpha) ++clipped;
  }
  if (non_empty == 0) return 0.0;
  return static_cast<double>(clipped) / static_cast<double>(non_empty);
}

VarianceReport estimator_variance(const std::string& name,
                                  const std::function<SparseVec(Rng&)>& estimator, long n_trials,
                                  Rng& rng) {
  if (n_trials < 2) throw std::invalid_argument("estimator_variance needs n_trials >= 2");
  SparseVec sum;
  SparseVec sum_sq;
  for (long t = 0; t < n_trials; ++t) {
    SparseVec g = estimator(rng);
    for (const auto& [id, v] : g.sorted_items()) {
      sum.add(id, v);
      sum_sq.add(id, v * v);
    }
  }
  VarianceReport report;
  report.estimator_name = name;
  report.n_trials = n_trials;
  report.mean_grad = sum;
  report.mean_grad.scale(1.0 / static_cast<double>(n_trials));
  const double n = static_cast<double>(n_trials);
  for (const auto& [id, sq] : sum_sq.sorted_items()) {
    double mu = sum.get(id) / n;
    double var = (sq - n * mu * mu) / (n - 1.0);
    if (var < 0.0) var = 0.0;  // rounding
    report.per_component_var.set(id, var);
    report.trace_cov += var;
  }
  return report;
}

double variance_ratio_with_baseline(double sigma_plus_sq, double sigma_minus_sq, double pi_b) {
  if (sigma_plus_sq <= 0.0) {
    throw std::invalid_argument("sigma_plus_sq must be positive");
  }
  return (1.0 + sigma_minus_sq / sigma_plus_sq) * (1.0 - pi_b) * (1.0 - pi_b);
}

double optimal_allocation_ratio(double pi_b, double var_plus, double var_minus) {
  double denom = (1.0 - pi_b) * std::sqrt(var_minus);
  if (denom <= 0.0) throw std::invalid_argument("degenerate denominator");
  return pi_b * std::sqrt(var_plus) / denom;
}

Table perturb_table(const Table& table, Rng& rng) {
  Table out = table;
  rng.shuffle(out.rows);
  for (int c = 0; c < out.num_columns(); ++c) {
    if (out.columns[c].kind != ColumnKind::Number) continue;
    // fresh distinct values keep superlatives and comparisons well defined
    std::vector<int> universe;
    for (int v = 1; v <= 200; ++v) universe.push_back(v);
    rng.shuffle(universe);
    int next = 0;
    for (auto& row : out.rows) {
      if (row[c]) row[c] = Cell(static_cast<double>(universe[next++]));
    }
  }
  return out;
}

namespace {

std::string denotation_key(const Value& v) {
  auto strings = value_answer_strings(v);
  if (!strings) return "<none>";
  std::sort(strings->begin(), strings->end());
  std::string key;
  for (const std::string& s : *strings) {
    key += s;
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

SpuriousnessReport spuriousness_report(
    const Policy& policy, const Dataset& dataset,
    const std::unordered_map<std::string, Program>& gold_programs, int beam_size,
    int n_perturbations, Rng& rng) {
  SpuriousnessReport report;
  for (const Example& ex : dataset.examples) {
    ++report.n_examples;
    auto gold_it = gold_programs.find(ex.id);
    if (gold_it == gold_programs.end()) {
      throw std::runtime_error("spuriousness_report: no gold program for " + ex.id);
    }
    std::vector<Program> beams = beam_search(policy, ex, beam_size);
    if (beams.empty()) continue;
    const Program& predicted = beams.front();
    if (reward(predicted, ex) != 1) continue;
    ++report.n_correct;
    bool spurious = false;
    for (int i = 0; i < n_perturbations && !spurious; ++i) {
      Table perturbed = perturb_table(*ex.table, rng);
      Value pv = execute(predicted, perturbed);
      Value gv = execute(gold_it->second, perturbed);
      if (denotation_key(pv) != denotation_key(gv)) spurious = true;
    }
    if (spurious) ++report.n_spurious;
  }
  if (report.n_correct > 0) {
    report.fraction = static_cast<double>(report.n_spurious) /
                      static_cast<double>(report.n_correct);
  }
  return report;
}

}  // namespace mapo

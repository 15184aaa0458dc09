#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mapo {

using FeatureId = std::uint64_t;

// Sparse feature activations for one (prefix, candidate token) pair.
// Kept as a flat list: featurize() emits a handful of entries and dot
// products iterate them in emission order, which keeps float results
// reproducible.
struct Features {
  std::vector<std::pair<FeatureId, double>> items;

  void add(FeatureId id, double value) { items.emplace_back(id, value); }
  std::size_t size() const { return items.size(); }
};

// Parameter / gradient vector indexed by hashed feature ids.
// Invariant: no entry holds exactly 0.0.
class SparseVec {
 public:
  double get(FeatureId id) const {
    auto it = map_.find(id);
    return it == map_.end() ? 0.0 : it->second;
  }

  void set(FeatureId id, double value) {
    if (value == 0.0) {
      map_.erase(id);
    } else {
      map_[id] = value;
    }
  }

  void add(FeatureId id, double delta) {
    if (delta == 0.0) return;
    auto [it, inserted] = map_.try_emplace(id, delta);
    if (!inserted) {
      it->second += delta;
      if (it->second == 0.0) map_.erase(it);
    }
  }

  // this += scale * f
  void axpy(double scale, const Features& f) {
    if (scale == 0.0) return;
    for (const auto& [id, v] : f.items) add(id, scale * v);
  }

  // this += scale * other (deterministic order: other's sorted ids)
  void axpy(double scale, const SparseVec& other) {
    if (scale == 0.0) return;
    for (const auto& [id, v] : other.sorted_items()) add(id, scale * v);
  }

  void scale(double s) {
    if (s == 0.0) {
      map_.clear();
      return;
    }
    for (auto& [id, v] : map_) v *= s;
  }

  double dot(const Features& f) const {
    double acc = 0.0;
    for (const auto& [id, v] : f.items) acc += get(id) * v;
    return acc;
  }

  double norm2_sq() const {
    double acc = 0.0;
    for (const auto& [id, v] : map_) acc += v * v;
    return acc;
  }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  void clear() { map_.clear(); }

  std::vector<std::pair<FeatureId, double>> sorted_items() const {
    std::vector<std::pair<FeatureId, double>> out(map_.begin(), map_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  const std::unordered_map<FeatureId, double>& raw() const { return map_; }

  bool operator==(const SparseVec& other) const { return map_ == other.map_; }

 private:
  std::unordered_map<FeatureId, double> map_;
};

}  // namespace mapo

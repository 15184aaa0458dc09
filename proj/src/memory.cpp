#include "mapo/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mapo/interpreter.hpp"

namespace mapo {

using nlohmann::json;

bool MemoryBuffer::insert(const Program& program, const Example& example) {
  std::string key = render_program(program);
  if (keys_.count(key)) return false;
  if (reward(program, example) != 1) return false;  // revalidate on insert
  keys_.insert(key);
  programs_.push_back(program);
  return true;
}

bool MemoryBuffer::contains(const Program& program) const {
  return keys_.count(render_program(program)) > 0;
}

ExploredSet::ExploredSet(std::int64_t capacity, double epsilon, std::uint64_t seed)
    : seed_(seed), capacity_(capacity) {
  // m = -n ln(eps) / ln(2)^2, k = m/n ln(2)
  const double ln2 = std::log(2.0);
  double m = -static_cast<double>(capacity) * std::log(epsilon) / (ln2 * ln2);
  n_bits_ = std::max<std::int64_t>(64, static_cast<std::int64_t>(std::ceil(m)));
  n_hashes_ = std::max(1, static_cast<int>(std::lround(
                              static_cast<double>(n_bits_) / static_cast<double>(capacity) * ln2)));
  bits_.assign(static_cast<std::size_t>((n_bits_ + 63) / 64), 0);
}

void ExploredSet::insert_key(const std::string& key) {
  ++inserted_;
  if (!bloom_mode()) {
    exact_.insert(key);
    return;
  }
  std::uint64_t h1 = fnv1a64(key, seed_);
  std::uint64_t h2 = fnv1a64(key, seed_ ^ 0x517cc1b727220a95ull) | 1;
  for (int i = 0; i < n_hashes_; ++i) {
    std::uint64_t idx = (h1 + static_cast<std::uint64_t>(i) * h2) % static_cast<std::uint64_t>(n_bits_);
    bits_[idx >> 6] |= 1ull << (idx & 63);
  }
}

bool ExploredSet::contains_key(const std::string& key) const {
  if (!bloom_mode()) return exact_.count(key) > 0;
  std::uint64_t h1 = fnv1a64(key, seed_);
  std::uint64_t h2 = fnv1a64(key, seed_ ^ 0x517cc1b727220a95ull) | 1;
  for (int i = 0; i < n_hashes_; ++i) {
    std::uint64_t idx = (h1 + static_cast<std::uint64_t>(i) * h2) % static_cast<std::uint64_t>(n_bits_);
    if (!(bits_[idx >> 6] & (1ull << (idx & 63)))) return false;
  }
  return true;
}

void ExploredSet::insert(const Program& sequence) { insert_key(render_program(sequence)); }

bool ExploredSet::contains(const Program& sequence) const {
  return contains_key(render_program(sequence));
}

std::string ExploredSet::to_json() const {
  json j;
  if (bloom_mode()) {
    j["mode"] = "bloom";
    j["m"] = n_bits_;
    j["k"] = n_hashes_;
    j["seed"] = seed_;
    j["capacity"] = capacity_;
    j["inserted"] = inserted_;
    static const char* hex = "0123456789abcdef";
    std::string encoded;
    encoded.reserve(bits_.size() * 16);
    for (std::uint64_t w : bits_) {
      for (int nib = 15; nib >= 0; --nib) encoded.push_back(hex[(w >> (nib * 4)) & 0xf]);
    }
    j["bits"] = encoded;
  } else {
    j["mode"] = "exact";
    j["inserted"] = inserted_;
    std::vector<std::string> items(exact_.begin(), exact_.end());
    std::sort(items.begin(), items.end());
    j["items"] = items;
  }
  return j.dump();
}

ExploredSet ExploredSet::from_json(const std::string& text) {
  json j = json::parse(text);
  ExploredSet s;
  if (j.at("mode") == "bloom") {
    s.n_bits_ = j.at("m").get<std::int64_t>();
    s.n_hashes_ = j.at("k").get<int>();
    s.seed_ = j.at("seed").get<std::uint64_t>();
    s.capacity_ = j.at("capacity").get<std::int64_t>();
    s.inserted_ = j.at("inserted").get<std::int64_t>();
    std::string encoded = j.at("bits").get<std::string>();
    s.bits_.assign(encoded.size() / 16, 0);
    for (std::size_t w = 0; w < s.bits_.size(); ++w) {
      std::uint64_t v = 0;
      for (int c = 0; c < 16; ++c) {
        char ch = encoded[w * 16 + c];
        v = (v << 4) | static_cast<std::uint64_t>(ch <= '9' ? ch - '0' : ch - 'a' + 10);
      }
      s.bits_[w] = v;
    }
  } else {
    s.inserted_ = j.at("inserted").get<std::int64_t>();
    for (const auto& item : j.at("items")) {
      s.exact_.insert(item.get<std::string>());
    }
  }
  return s;
}

PruningRules PruningRules::standard() {
  PruningRules r;
  auto set = [&](FunctionId f, std::vector<std::string> words) {
    r.triggers[f] = std::move(words);
  };
  set(FunctionId::Count, {"how", "many", "total", "number"});
  set(FunctionId::FilterNotIn, {"not", "other", "besides"});
  set(FunctionId::First, {"first", "top"});
  set(FunctionId::Last, {"last", "bottom"});
  set(FunctionId::Argmin, {"JJR", "JJS", "RBR", "RBS", "top", "first", "bottom", "last"});
  set(FunctionId::Argmax, {"JJR", "JJS", "RBR", "RBS", "top", "first", "bottom", "last"});
  set(FunctionId::Sum, {"all", "combine", "total"});
  set(FunctionId::Average, {"average"});
  set(FunctionId::Max, {"JJR", "JJS", "RBR", "RBS"});
  set(FunctionId::Min, {"JJR", "JJS", "RBR", "RBS"});
  set(FunctionId::Mode, {"most"});
  set(FunctionId::Previous, {"next", "previous", "after", "before", "above", "below"});
  set(FunctionId::Next, {"next", "previous", "after", "before", "above", "below"});
  set(FunctionId::SameAs, {"same"});
  set(FunctionId::Diff, {"difference", "more", "than"});
  set(FunctionId::FilterGe, {"RBR", "JJR", "more", "than", "least", "above", "after"});
  set(FunctionId::FilterLe, {"RBR", "JJR", "less", "than", "most", "below", "before", "under"});
  set(FunctionId::FilterGt, {"RBR", "JJR", "more", "than", "least", "above", "after"});
  set(FunctionId::FilterLt, {"RBR", "JJR", "less", "than", "most", "below", "before", "under"});
  return r;
}

static bool is_pos_tag(const std::string& s) {
  return s == "JJR" || s == "JJS" || s == "RBR" || s == "RBS";
}

bool PruningRules::allows(FunctionId f, const Example& example) const {
  auto it = triggers.find(f);
  if (it == triggers.end()) return true;
  for (const std::string& trig : it->second) {
    if (is_pos_tag(trig)) {
      for (const std::string& tag : example.pos_tags) {
        if (tag == trig) return true;
      }
    } else {
      for (const std::string& word : example.folded_tokens) {
        if (word == trig) return true;
      }
    }
  }
  return false;
}

ExploreOutcome systematic_explore(const Example& example, const Policy& policy,
                                  ExploredSet& explored, MemoryBuffer& buffer,
                                  const PruningRules* rules, Rng& rng) {
  // which functions the rules admit for this question, resolved once
  bool func_allowed[kNumFunctions];
  for (int i = 0; i < kNumFunctions; ++i) {
    FunctionId f = static_cast<FunctionId>(i);
    func_allowed[i] = rules == nullptr || rules->allows(f, example);
  }

  PolicyWalk walk(policy, example);
  std::string prefix_render;
  for (;;) {
    const PolicyWalk::Step& s = walk.step();
    std::vector<std::size_t> allowed;
    std::vector<double> weights;
    std::string extended;
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const Token& t = s.candidates[i];
      if (t.kind == TokenKind::Func && !func_allowed[static_cast<int>(t.func)]) continue;
      extended = prefix_render;
      append_token_render(extended, t, walk.tokens().empty() ? nullptr : &walk.tokens().back());
      if (explored.contains_key(extended)) continue;
      allowed.push_back(i);
      weights.push_back(s.probs[i]);
    }
    if (allowed.empty()) {
      explored.insert_key(prefix_render);
      return {};
    }
    std::size_t pick = allowed[rng.categorical(weights)];
    const Token chosen = s.candidates[pick];
    append_token_render(prefix_render, chosen,
                        walk.tokens().empty() ? nullptr : &walk.tokens().back());
    walk.push_index(pick);
    if (chosen.kind == TokenKind::Eos) {
      explored.insert_key(prefix_render);
      Trajectory t;
      t.example_id = example.id;
      t.program = walk.tokens();
      t.reward = reward(t.program, example);
      t.log_prob = walk.log_prob_sum();  // unconstrained policy
      t.policy_version = policy.version;
      if (t.reward > 0) buffer.insert(t.program, example);
      ExploreOutcome out;
      out.completed = true;
      out.trajectory = std::move(t);
      return out;
    }
  }
}

WarmStartResult warm_start(const Dataset& dataset, const Policy& policy,
                           const WarmStartOptions& options, const RngStreams& streams) {
  WarmStartResult result;
  PruningRules rules = PruningRules::standard();
  std::size_t total_programs = 0;
  for (const Example& ex : dataset.examples) {
    Rng rng = streams.stream("warmstart/" + ex.id);
    auto [buf_it, b_ins] = result.buffers.emplace(ex.id, MemoryBuffer(ex.id));
    auto [exp_it, e_ins] = result.explored.emplace(
        ex.id, options.exact_explored_set
                   ? ExploredSet()
                   : ExploredSet(options.bloom_capacity, options.bloom_epsilon,
                                 streams.master_seed()));
    bool exhausted = false;
    for (int attempt = 0; attempt < options.attempts_per_example && !exhausted; ++attempt) {
      ExploreOutcome out = systematic_explore(ex, policy, exp_it->second, buf_it->second,
                                              options.use_rules ? &rules : nullptr, rng);
      // dead end at the root means the whole space is exhausted
      exhausted = !out.completed && exp_it->second.contains(Program{});
    }
    for (int attempt = 0; attempt < options.extra_attempts_no_rules && !exhausted; ++attempt) {
      ExploreOutcome out =
          systematic_explore(ex, policy, exp_it->second, buf_it->second, nullptr, rng);
      exhausted = !out.completed && exp_it->second.contains(Program{});
    }
    if (!buf_it->second.empty()) ++result.examples_with_programs;
    total_programs += buf_it->second.size();
  }
  if (!dataset.examples.empty()) {
    result.mean_buffer_size =
        static_cast<double>(total_programs) / static_cast<double>(dataset.examples.size());
  }
  return result;
}

std::vector<Program> truncate_top_k(const MemoryBuffer& buffer, const Policy& policy,
                                    const Example& example, int k) {
  struct Scored {
    double lp;
    std::string key;
    const Program* program;
  };
  std::vector<Scored> scored;
  scored.reserve(buffer.size());
  for (const Program& p : buffer.programs()) {
    scored.push_back({log_prob(policy, example, p), render_program(p), &p});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.lp != b.lp) return a.lp > b.lp;
    return a.key < b.key;
  });
  std::vector<Program> out;
  for (const Scored& s : scored) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(*s.program);
  }
  return out;
}

void save_buffers(const std::unordered_map<std::string, MemoryBuffer>& buffers,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write buffers: " + path);
  std::vector<std::string> ids;
  ids.reserve(buffers.size());
  for (const auto& [id, buf] : buffers) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const std::string& id : ids) {
    json j;
    j["id"] = id;
    json programs = json::array();
    for (const Program& p : buffers.at(id).programs()) programs.push_back(render_program(p));
    j["programs"] = programs;
    out << j.dump() << "\n";
  }
}

std::unordered_map<std::string, MemoryBuffer> load_buffers(const std::string& path,
                                                           const Dataset& dataset) {
  std::unordered_map<std::string, const Example*> by_id;
  for (const Example& ex : dataset.examples) by_id[ex.id] = &ex;
  std::unordered_map<std::string, MemoryBuffer> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read buffers: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string id = j.at("id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;  // checkpoint may cover a superset
    MemoryBuffer buf(id);
    for (const auto& pj : j.at("programs")) {
      buf.insert(parse_program(pj.get<std::string>()), *it->second);
    }
    out.emplace(id, std::move(buf));
  }
  return out;
}

void save_explored(const std::unordered_map<std::string, ExploredSet>& sets,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write explored sets: " + path);
  std::vector<std::string> ids;
  ids.reserve(sets.size());
  for (const auto& [id, s] : sets) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const std::string& id : ids) {
    json j;
    j["id"] = id;
    j["explored"] = json::parse(sets.at(id).to_json());
    out << j.dump() << "\n";
  }
}

std::unordered_map<std::string, ExploredSet> load_explored(const std::string& path) {
  std::unordered_map<std::string, ExploredSet> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read explored sets: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out.emplace(j.at("id").get<std::string>(), ExploredSet::from_json(j.at("explored").dump()));
  }
  return out;
}

}  // namespace mapo

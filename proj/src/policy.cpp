#include "mapo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mapo {

using nlohmann::json;

namespace {

const std::vector<std::string>& trigger_words() {
  static const std::vector<std::string> words = {
      "how",  "many",   "total",  "number", "not",  "other",   "besides",    "first",
      "top",  "last",   "bottom", "all",    "combine", "average", "most",    "next",
      "previous", "after", "before", "above", "below", "same", "difference", "more",
      "than", "least",  "less",   "under"};
  return words;
}

const std::vector<std::string>& trigger_tags() {
  static const std::vector<std::string> tags = {"JJR", "JJS", "RBR", "RBS"};
  return tags;
}

char token_kind_char(const Token& t) {
  switch (t.kind) {
    case TokenKind::Open: return '(';
    case TokenKind::Close: return ')';
    case TokenKind::Func: return 'f';
    case TokenKind::Column: return 'c';
    case TokenKind::Var: return 'v';
    case TokenKind::Literal: return 'l';
    case TokenKind::Eos: return 'e';
  }
  return '?';
}

std::vector<std::string> present_triggers(const Example& ex) {
  std::vector<std::string> out;
  for (const std::string& w : trigger_words()) {
    for (const std::string& q : ex.folded_tokens) {
      if (q == w) {
        out.push_back(w);
        break;
      }
    }
  }
  for (const std::string& tag : trigger_tags()) {
    for (const std::string& t : ex.pos_tags) {
      if (t == tag) {
        out.push_back(tag);
        break;
      }
    }
  }
  return out;
}

}  // namespace

PolicyWalk::PolicyWalk(const Policy& policy, const Example& example)
    : policy_(&policy),
      example_(&example),
      state_(*example.table, example.literal_pool),
      triggers_(present_triggers(example)) {}

void PolicyWalk::features_into(const Token& candidate, const std::string& render,
                               std::vector<std::pair<FeatureId, double>>& pool) const {
  const FeatureConfig& cfg = policy_->config;
  // ids chain fnv over the labeled parts; no intermediate strings
  const std::uint64_t ident = fnv1a64(render, fnv1a64("t="));
  if (cfg.token_identity) pool.emplace_back(ident, 1.0);
  if (cfg.token_bigram) {
    pool.emplace_back(fnv1a64(prev_render_, fnv1a64("|p=", ident)), 1.0);
  }
  if (cfg.token_trigger) {
    std::uint64_t base = fnv1a64("|trig=", ident);
    for (const std::string& w : triggers_) {
      pool.emplace_back(fnv1a64(w, base), 1.0);
    }
  }
  if (cfg.kind_position) {
    // bucket of two positions: fine enough to separate "start another
    // expression" from "stop" at every boundary the gold programs reach
    int bucket = std::min(static_cast<int>(tokens_.size()) / 2, 12);
    char tag[16] = {'k', '=', token_kind_char(candidate), '|', 'p', 'o', 's', '=',
                    static_cast<char>('a' + bucket), '\0'};
    pool.emplace_back(fnv1a64(tag), 1.0);
  }
  if (cfg.column_overlap && candidate.kind == TokenKind::Column) {
    int idx = example_->table->column_index(candidate.col_id);
    if (idx >= 0 && idx < static_cast<int>(example_->column_overlap.size()) &&
        example_->column_overlap[idx] > 0) {
      pool.emplace_back(fnv1a64("col_overlap"),
                        static_cast<double>(example_->column_overlap[idx]));
    }
  }
  if (cfg.bias) pool.emplace_back(fnv1a64("bias"), 1.0);
}

Features PolicyWalk::features_for(const Token& candidate) const {
  Features f;
  features_into(candidate, render_token(candidate), f.items);
  return f;
}

const PolicyWalk::Step& PolicyWalk::step() const {
  if (cached_step_) return *cached_step_;
  Step s;
  s.candidates = state_.valid_next(policy_->config.max_decode_tokens);
  if (s.candidates.empty()) throw DeadEndPrefix();
  const std::size_t n = s.candidates.size();
  s.renders.reserve(n);
  s.feature_pool.reserve(n * (triggers_.size() + 5));
  s.feature_offsets.reserve(n + 1);
  s.feature_offsets.push_back(0);
  std::vector<double> scores;
  scores.reserve(n);
  double max_score = -1e300;
  for (const Token& c : s.candidates) {
    s.renders.push_back(render_token(c));
    features_into(c, s.renders.back(), s.feature_pool);
    s.feature_offsets.push_back(static_cast<std::uint32_t>(s.feature_pool.size()));
    double score = 0.0;
    for (auto it = s.feature_pool.begin() + s.feature_offsets[s.feature_offsets.size() - 2];
         it != s.feature_pool.end(); ++it) {
      score += policy_->params.get(it->first) * it->second;
    }
    scores.push_back(score);
    max_score = std::max(max_score, score);
  }
  double z = 0.0;
  for (double sc : scores) z += std::exp(sc - max_score);
  s.probs.reserve(n);
  for (double sc : scores) s.probs.push_back(std::exp(sc - max_score) / z);
  cached_step_ = std::move(s);
  return *cached_step_;
}

void PolicyWalk::push_index(std::size_t candidate_index) {
  const Step& s = step();
  const Token t = s.candidates[candidate_index];
  log_prob_ += std::log(s.probs[candidate_index]);
  prev_render_ = s.renders[candidate_index];
  state_.advance(t, policy_->config.max_decode_tokens);
  tokens_.push_back(t);
  cached_step_.reset();
}

void PolicyWalk::push_token(const Token& t) {
  const Step& s = step();
  auto it = std::find(s.candidates.begin(), s.candidates.end(), t);
  if (it == s.candidates.end()) {
    throw InvalidProgram("token " + render_token(t) + " invalid after \"" +
                         render_program(tokens_) + "\"");
  }
  push_index(static_cast<std::size_t>(it - s.candidates.begin()));
}

Features featurize(const FeatureConfig& config, const Example& example, const Program& prefix,
                   const Token& candidate) {
  Policy tmp;
  tmp.config = config;
  PolicyWalk w(tmp, example);
  for (const Token& t : prefix) w.push_token(t);
  return w.features_for(candidate);
}

std::vector<TokenProb> token_distribution(const Policy& policy, const Example& example,
                                          const Program& prefix) {
  PolicyWalk w(policy, example);
  for (const Token& t : prefix) w.push_token(t);
  const PolicyWalk::Step& s = w.step();
  std::vector<TokenProb> out;
  out.reserve(s.candidates.size());
  for (std::size_t i = 0; i < s.candidates.size(); ++i) {
    out.push_back({s.candidates[i], s.probs[i]});
  }
  return out;
}

double log_prob(const Policy& policy, const Example& example, const Program& program) {
  if (!program_complete(program)) throw InvalidProgram("program must end with <EOS>");
  PolicyWalk w(policy, example);
  for (const Token& t : program) w.push_token(t);
  return w.log_prob_sum();
}

Trajectory sample(const Policy& policy, const Example& example, Rng& rng) {
  PolicyWalk w(policy, example);
  while (!w.complete()) {
    w.push_index(rng.categorical(w.step().probs));
  }
  Trajectory t;
  t.example_id = example.id;
  t.program = w.tokens();
  t.reward = reward(t.program, example);
  t.log_prob = w.log_prob_sum();
  t.policy_version = policy.version;
  return t;
}

Trajectory sample_in_buffer(const Policy& policy, const Example& example,
                            const std::vector<Program>& buffer, Rng& rng) {
  if (buffer.empty()) throw EmptyBuffer();
  std::vector<double> lps;
  lps.reserve(buffer.size());
  double max_lp = -1e300;
  for (const Program& p : buffer) {
    lps.push_back(log_prob(policy, example, p));
    max_lp = std::max(max_lp, lps.back());
  }
  std::vector<double> weights;
  weights.reserve(lps.size());
  for (double lp : lps) weights.push_back(std::exp(lp - max_lp));
  std::size_t pick = rng.categorical(weights);
  Trajectory t;
  t.example_id = example.id;
  t.program = buffer[pick];
  t.reward = 1;  // buffers hold revalidated reward-1 programs
  t.log_prob = lps[pick];
  t.policy_version = policy.version;
  return t;
}

std::optional<Trajectory> rejection_sample_outside(const Policy& policy, const Example& example,
                                                   const std::vector<Program>& buffer, Rng& rng) {
  Trajectory t = sample(policy, example, rng);
  for (const Program& p : buffer) {
    if (p == t.program) return std::nullopt;
  }
  return t;
}

SparseVec grad_log_prob(const Policy& policy, const Example& example, const Program& program) {
  if (!program_complete(program)) throw InvalidProgram("program must end with <EOS>");
  PolicyWalk w(policy, example);
  SparseVec g;
  for (const Token& t : program) {
    const PolicyWalk::Step& s = w.step();
    auto it = std::find(s.candidates.begin(), s.candidates.end(), t);
    if (it == s.candidates.end()) {
      throw InvalidProgram("token " + render_token(t) + " outside valid set");
    }
    std::size_t chosen = static_cast<std::size_t>(it - s.candidates.begin());
    for (const auto& [id, v] : s.feats(chosen)) g.add(id, v);
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const double p = s.probs[i];
      for (const auto& [id, v] : s.feats(i)) g.add(id, -p * v);
    }
    w.push_index(chosen);
  }
  return g;
}

std::vector<Program> beam_search(const Policy& policy, const Example& example, int beam_size) {
  struct Item {
    PolicyWalk walk;
    double lp;
    std::string key;  // rendered tokens, for deterministic ties
  };
  auto better = [](const Item& a, const Item& b) {
    if (a.lp != b.lp) return a.lp > b.lp;
    return a.key < b.key;
  };

  std::vector<Item> active;
  active.push_back({PolicyWalk(policy, example), 0.0, ""});
  std::vector<Item> finished;

  while (!active.empty()) {
    std::vector<Item> expanded;
    for (Item& item : active) {
      const PolicyWalk::Step& s = item.walk.step();
      for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        Item child{item.walk, item.lp + std::log(s.probs[i]), ""};
        child.walk.push_index(i);
        child.key = render_program(child.walk.tokens());
        if (child.walk.complete()) {
          finished.push_back(std::move(child));
        } else {
          expanded.push_back(std::move(child));
        }
      }
    }
    std::sort(expanded.begin(), expanded.end(), better);
    if (static_cast<int>(expanded.size()) > beam_size) {
      expanded.erase(expanded.begin() + beam_size, expanded.end());
    }
    active = std::move(expanded);
  }

  std::sort(finished.begin(), finished.end(), better);
  std::vector<Program> out;
  for (const Item& item : finished) {
    if (static_cast<int>(out.size()) >= beam_size) break;
    out.push_back(item.walk.tokens());
  }
  return out;
}

std::uint64_t FeatureConfig::hash() const { return fnv1a64(to_json()); }

std::string FeatureConfig::to_json() const {
  json j;
  j["token_identity"] = token_identity;
  j["token_bigram"] = token_bigram;
  j["token_trigger"] = token_trigger;
  j["kind_position"] = kind_position;
  j["column_overlap"] = column_overlap;
  j["bias"] = bias;
  j["max_decode_tokens"] = max_decode_tokens;
  return j.dump();
}

FeatureConfig FeatureConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  FeatureConfig c;
  c.token_identity = j.value("token_identity", true);
  c.token_bigram = j.value("token_bigram", true);
  c.token_trigger = j.value("token_trigger", true);
  c.kind_position = j.value("kind_position", true);
  c.column_overlap = j.value("column_overlap", true);
  c.bias = j.value("bias", true);
  c.max_decode_tokens = j.value("max_decode_tokens", 25);
  return c;
}

std::string policy_to_json(const Policy& p) {
  json j;
  j["version"] = p.version;
  j["feature_config"] = json::parse(p.config.to_json());
  j["feature_config_hash"] = p.config.hash();
  json params = json::object();
  for (const auto& [id, w] : p.params.sorted_items()) {
    params[std::to_string(id)] = w;
  }
  j["params"] = params;
  return j.dump(2);
}

Policy policy_from_json(const std::string& text) {
  json j = json::parse(text);
  Policy p;
  p.version = j.at("version").get<std::int64_t>();
  p.config = FeatureConfig::from_json(j.at("feature_config").dump());
  if (j.contains("feature_config_hash") &&
      j["feature_config_hash"].get<std::uint64_t>() != p.config.hash()) {
    throw PolicyError("feature_config hash mismatch in checkpoint");
  }
  for (const auto& [key, value] : j.at("params").items()) {
    p.params.set(std::stoull(key), value.get<double>());
  }
  return p;
}

void save_policy(const Policy& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PolicyError("cannot write checkpoint: " + path);
  out << policy_to_json(p) << "\n";
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PolicyError("cannot read checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace mapo

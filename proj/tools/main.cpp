#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapo/analysis.hpp"
#include "mapo/interpreter.hpp"
#include "mapo/toy_corpus.hpp"
#include "mapo/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mapo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t corpus_hash(const std::string& corpus_dir) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char* name : {"train.jsonl", "dev.jsonl", "gold.jsonl", "meta.json"}) {
    fs::path p = fs::path(corpus_dir) / name;
    if (fs::exists(p)) h = fnv1a64(read_file(p.string()), h);
  }
  std::vector<fs::path> tables;
  fs::path tdir = fs::path(corpus_dir) / "tables";
  if (fs::exists(tdir)) {
    for (const auto& entry : fs::directory_iterator(tdir)) tables.push_back(entry.path());
    std::sort(tables.begin(), tables.end());
    for (const fs::path& t : tables) h = fnv1a64(read_file(t.string()), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require_writable_dir(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ConfigError("out", "output directory " + dir + " is not empty (use --force)");
  }
  fs::create_directories(dir);
}

std::unordered_map<std::string, Program> load_gold_sidecar(const std::string& path) {
  std::unordered_map<std::string, Program> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gold sidecar: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out[j.at("id").get<std::string>()] = parse_program(j.at("gold_program").get<std::string>());
  }
  return out;
}

void write_manifest(const std::string& out_dir, const TrainerConfig& config,
                    const std::string& corpus_dir, const std::vector<std::string>& artifacts) {
  json m;
  std::uint64_t chash = corpus_hash(corpus_dir);
  m["run_id"] = hex64(fnv1a64(config.to_json(), chash ^ config.seed));
  m["config"] = json::parse(config.to_json());
  m["corpus_path"] = corpus_dir;
  m["corpus_hash"] = hex64(chash);
  m["seed"] = config.seed;
  m["artifacts"] = artifacts;
  m["created_unix"] = static_cast<long long>(::time(nullptr));
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << m.dump(2) << "\n";
}

int cmd_gen_corpus(std::uint64_t seed, int tables, int per_table, const std::string& out,
                   bool force) {
  require_writable_dir(out, force);
  if (tables == 0) {
    std::cerr << "warning: generating an empty corpus (--tables 0)\n";
  }
  CorpusSummary s = make_toy_corpus(seed, tables, per_table, out);
  std::cout << "corpus: " << s.n_tables << " tables, " << s.n_train << " train / " << s.n_dev
            << " dev examples -> " << out << "\n";
  return kExitOk;
}

int cmd_explore(const std::string& corpus, int attempts, const std::string& rules_mode,
                const std::string& explored_mode, const std::string& out, std::uint64_t seed,
                bool force) {
  require_writable_dir(out, force);
  Dataset train_set = load_dataset((fs::path(corpus) / "train.jsonl").string(),
                                   (fs::path(corpus) / "tables").string());
  Policy random_policy;  // zero weights: uniform over valid tokens

  WarmStartOptions opts;
  opts.attempts_per_example = attempts;
  opts.use_rules = rules_mode != "off";
  if (rules_mode == "both") opts.extra_attempts_no_rules = attempts;
  opts.exact_explored_set = explored_mode != "bloom";
  RngStreams streams(seed);
  WarmStartResult result = warm_start(train_set, random_policy, opts, streams);

  save_buffers(result.buffers, (fs::path(out) / "buffers.jsonl").string());
  save_explored(result.explored, (fs::path(out) / "explored.jsonl").string());

  json summary;
  summary["examples"] = train_set.examples.size();
  summary["examples_with_programs"] = result.examples_with_programs;
  summary["coverage"] = train_set.examples.empty()
                            ? 0.0
                            : static_cast<double>(result.examples_with_programs) /
                                  static_cast<double>(train_set.examples.size());
  summary["mean_buffer_size"] = result.mean_buffer_size;
  summary["attempts_per_example"] = attempts;
  summary["rules"] = opts.use_rules;
  std::ofstream sum_out(fs::path(out) / "summary.json");
  sum_out << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& estimator,
              const std::string& corpus, const std::string& warmstart, const std::string& out,
              std::uint64_t seed, bool seed_set, int n_actors_flag, bool force) {
  TrainerConfig config;
  if (!config_path.empty()) config = TrainerConfig::from_json(read_file(config_path));
  if (!estimator.empty()) {
    if (!parse_estimator(estimator, config.estimator)) {
      throw ConfigError("estimator", "unknown estimator: " + estimator);
    }
  }
  if (seed_set) config.seed = seed;
  if (const char* env = std::getenv("MAPO_NUM_ACTORS")) {
    config.n_actors = std::atoi(env);
    if (config.queue_capacity < config.n_actors) config.queue_capacity = config.n_actors;
  }
  if (n_actors_flag > 0) {
    config.n_actors = n_actors_flag;
    if (config.queue_capacity < config.n_actors) config.queue_capacity = config.n_actors;
  }
  config.validate();
  require_writable_dir(out, force);

  ExperimentResult result = run_experiment(config, corpus, warmstart, out);
  write_manifest(out, config, corpus,
                 {result.metrics_path, result.best_checkpoint_path,
                  result.final_checkpoint_path});
  std::cout << "trained " << estimator_name(config.estimator) << " for "
            << config.total_steps << " steps; best dev accuracy "
            << result.log.best_dev_accuracy << " at step " << result.log.best_dev_step << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& corpus, int beam,
             const std::string& split, const std::string& out_path) {
  Policy policy = load_policy(checkpoint);
  Dataset ds = load_dataset((fs::path(corpus) / (split + ".jsonl")).string(),
                            (fs::path(corpus) / "tables").string());
  std::ofstream pred(out_path);
  if (!pred) throw std::runtime_error("cannot write predictions: " + out_path);
  int correct = 0;
  for (const Example& ex : ds.examples) {
    std::vector<Program> beams = beam_search(policy, ex, beam);
    json j;
    j["id"] = ex.id;
    if (!beams.empty()) {
      int r = reward(beams.front(), ex);
      correct += r;
      j["program"] = render_program(beams.front());
      j["reward"] = r;
      auto answer = value_answer_strings(execute(beams.front(), *ex.table));
      j["prediction"] = answer ? json(*answer) : json(nullptr);
    } else {
      j["program"] = nullptr;
      j["reward"] = 0;
    }
    pred << j.dump() << "\n";
  }
  double acc = ds.examples.empty() ? 0.0
                                   : static_cast<double>(correct) /
                                         static_cast<double>(ds.examples.size());
  std::cout << "accuracy " << acc << " on " << ds.examples.size() << " " << split
            << " examples (beam " << beam << ")\n";
  return kExitOk;
}

int cmd_analyze(const std::string& run_dir, bool variance, bool clipping, bool allocation,
                bool spuriousness, std::uint64_t seed) {
  json manifest = json::parse(read_file((fs::path(run_dir) / "manifest.json").string()));
  std::string corpus_dir = manifest.at("corpus_path").get<std::string>();
  TrainerConfig config = TrainerConfig::from_json(manifest.at("config").dump());
  json report;
  RngStreams streams(seed);

  if (clipping) {
    // time series straight from the run's metrics, plus a recomputed final value
    std::ifstream metrics((fs::path(run_dir) / "metrics.csv").string());
    if (!metrics) throw std::runtime_error("missing metrics.csv in " + run_dir);
    std::string line;
    std::getline(metrics, line);  // header
    std::vector<int> steps;
    std::vector<double> series;
    while (std::getline(metrics, line)) {
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      steps.push_back(std::stoi(fields[0]));
      series.push_back(std::stod(fields[4]));
    }
    report["clipping"]["steps"] = steps;
    report["clipping"]["clip_fraction"] = series;

    Dataset train_set = load_dataset((fs::path(corpus_dir) / "train.jsonl").string(),
                                     (fs::path(corpus_dir) / "tables").string());
    Policy final_policy = load_policy((fs::path(run_dir) / "final_policy.json").string());
    auto buffers = load_buffers((fs::path(run_dir) / "buffers.jsonl").string(), train_set);
    report["clipping"]["final_recomputed"] =
        clipping_fraction(train_set, buffers, final_policy, config.alpha);
  }

  if (allocation) {
    // the variance substitutions collapse the ratio to 1 for any pi_b, s2
    Rng rng = streams.stream("analyze/allocation");
    json rows = json::array();
    for (int i = 0; i < 20; ++i) {
      double pi_b = 0.05 + 0.9 * rng.uniform01();
      double s2 = 0.5 + 4.0 * rng.uniform01();
      double var_plus = (1.0 - pi_b) * (1.0 - pi_b) * s2;
      double var_minus = pi_b * pi_b * s2;
      rows.push_back({{"pi_b", pi_b},
                      {"s2", s2},
                      {"ratio", optimal_allocation_ratio(pi_b, var_plus, var_minus)}});
    }
    report["allocation"] = rows;
  }

  if (variance) {
    Dataset train_set = load_dataset((fs::path(corpus_dir) / "train.jsonl").string(),
                                     (fs::path(corpus_dir) / "tables").string());
    if (train_set.examples.empty()) throw std::runtime_error("empty corpus");
    const Example& ex = train_set.examples.front();
    auto buffers = load_buffers((fs::path(run_dir) / "buffers.jsonl").string(), train_set);
    Policy policy = load_policy((fs::path(run_dir) / "final_policy.json").string());
    auto it = buffers.find(ex.id);
    std::vector<Program> view =
        it == buffers.end() ? std::vector<Program>{} : it->second.programs();
    EstimatorConfig ecfg;
    ecfg.alpha = config.alpha;
    ecfg.n_onpolicy = 2;
    Rng rng = streams.stream("analyze/variance");
    VarianceReport mapo_rep = estimator_variance(
        "mapo", [&](Rng& r) { return mapo_gradient(ex, view, policy, ecfg, r).grad; }, 2000,
        rng);
    VarianceReport reinforce_rep = estimator_variance(
        "reinforce",
        [&](Rng& r) { return reinforce_gradient(ex, policy, 2, BaselineMode::None, r).grad; },
        2000, rng);
    report["variance"]["example"] = ex.id;
    report["variance"]["mapo_trace"] = mapo_rep.trace_cov;
    report["variance"]["reinforce_trace"] = reinforce_rep.trace_cov;
  }

  if (spuriousness) {
    Dataset dev_set = load_dataset((fs::path(corpus_dir) / "dev.jsonl").string(),
                                   (fs::path(corpus_dir) / "tables").string());
    auto gold = load_gold_sidecar((fs::path(corpus_dir) / "gold.jsonl").string());
    Policy policy = load_policy((fs::path(run_dir) / "best_policy.json").string());
    Rng rng = streams.stream("analyze/spuriousness");
    SpuriousnessReport sp = spuriousness_report(policy, dev_set, gold, config.beam_size, 5, rng);
    report["spuriousness"]["n_examples"] = sp.n_examples;
    report["spuriousness"]["n_correct"] = sp.n_correct;
    report["spuriousness"]["n_spurious"] = sp.n_spurious;
    report["spuriousness"]["fraction"] = sp.fraction;
  }

  std::ofstream out(fs::path(run_dir) / "analysis.json");
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory augmented policy optimization for table program synthesis"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic toy corpus");
  std::uint64_t gen_seed = 7;
  int gen_tables = 20, gen_per_table = 5;
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--tables", gen_tables, "number of tables");
  gen->add_option("--per-table", gen_per_table, "questions per table");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--force", gen_force, "overwrite a non-empty output directory");

  // explore
  auto* explore = app.add_subcommand("explore", "warm-start exploration with a random policy");
  std::string ex_corpus, ex_out, ex_rules = "on", ex_explored = "exact";
  int ex_attempts = 2000;
  std::uint64_t ex_seed = 1;
  bool ex_force = false;
  explore->add_option("--corpus", ex_corpus, "corpus directory")->required();
  explore->add_option("--attempts", ex_attempts, "exploration attempts per example");
  explore->add_option("--rules", ex_rules,
                      "trigger-word pruning: on|off|both (both = pruned pass then unpruned)")
      ->check(CLI::IsMember({"on", "off", "both"}));
  explore->add_option("--explored", ex_explored, "explored-set mode: exact|bloom")
      ->check(CLI::IsMember({"exact", "bloom"}));
  explore->add_option("--seed", ex_seed, "master seed");
  explore->add_option("--out", ex_out, "output directory")->required();
  explore->add_flag("--force", ex_force, "overwrite a non-empty output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "run the actor-learner trainer");
  std::string tr_config, tr_estimator, tr_corpus, tr_warmstart, tr_out;
  std::uint64_t tr_seed = 1;
  int tr_actors = 0;
  bool tr_force = false;
  train_cmd->add_option("--config", tr_config, "JSON config file");
  train_cmd->add_option("--estimator", tr_estimator,
                        "mapo|reinforce|mml|hard_em|iml (overrides config)");
  train_cmd->add_option("--corpus", tr_corpus, "corpus directory")->required();
  train_cmd->add_option("--warmstart", tr_warmstart, "warm-start directory from `explore`");
  train_cmd->add_option("--out", tr_out, "output directory")->required();
  auto* seed_opt = train_cmd->add_option("--seed", tr_seed, "seed (overrides config)");
  train_cmd->add_option("--actors", tr_actors, "actor count (overrides config and env)");
  train_cmd->add_flag("--force", tr_force, "overwrite a non-empty output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "beam-search evaluation of a checkpoint");
  std::string ev_checkpoint, ev_corpus, ev_split = "dev", ev_out = "predictions.jsonl";
  int ev_beam = 5;
  eval_cmd->add_option("--checkpoint", ev_checkpoint, "policy checkpoint")->required();
  eval_cmd->add_option("--corpus", ev_corpus, "corpus directory")->required();
  eval_cmd->add_option("--beam", ev_beam, "beam size");
  eval_cmd->add_option("--split", ev_split, "train|dev")->check(CLI::IsMember({"train", "dev"}));
  eval_cmd->add_option("--out", ev_out, "predictions output file");

  // analyze
  auto* an = app.add_subcommand("analyze", "diagnostics for a finished run");
  std::string an_run;
  bool an_variance = false, an_clipping = false, an_allocation = false, an_spurious = false;
  std::uint64_t an_seed = 1;
  an->add_option("--run", an_run, "run directory from `train`")->required();
  an->add_flag("--variance", an_variance, "estimator variance comparison");
  an->add_flag("--clipping", an_clipping, "clipping-fraction series");
  an->add_flag("--allocation", an_allocation, "optimal sample allocation sweep");
  an->add_flag("--spuriousness", an_spurious, "spurious-program fraction");
  an->add_option("--seed", an_seed, "seed for analysis sampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_corpus(gen_seed, gen_tables, gen_per_table, gen_out, gen_force);
    }
    if (explore->parsed()) {
      return cmd_explore(ex_corpus, ex_attempts, ex_rules, ex_explored, ex_out, ex_seed,
                         ex_force);
    }
    if (train_cmd->parsed()) {
      return cmd_train(tr_config, tr_estimator, tr_corpus, tr_warmstart, tr_out, tr_seed,
                       seed_opt->count() > 0, tr_actors, tr_force);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(ev_checkpoint, ev_corpus, ev_beam, ev_split, ev_out);
    }
    if (an->parsed()) {
      return cmd_analyze(an_run, an_variance, an_clipping, an_allocation, an_spurious, an_seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "validation error";
    if (!e.field.empty()) std::cerr << " (" << e.field << ")";
    std::cerr << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DatasetError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    if (msg.rfind("cannot", 0) == 0 || msg.rfind("missing", 0) == 0) {
      std::cerr << "io error: " << msg << "\n";
      return kExitIo;
    }
    std::cerr << "internal error: " << msg << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

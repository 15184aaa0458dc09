#pragma once

#include <cstdint>
#include <string>

namespace mapo {

struct CorpusSummary {
  int n_tables = 0;
  int n_train = 0;
  int n_dev = 0;
};

// Generates a small synthetic corpus of (question, table, answer) triples
// under <out_dir>: tables/*.json, train.jsonl, dev.jsonl, gold.jsonl
// (sidecar with the hidden gold programs) and meta.json. Questions are
// templated over five categories (superlative, difference, before/after,
// compare & count, exclusion); answers are computed by executing the gold
// program, which is never written into the training files. Byte-identical
// output for identical arguments.
CorpusSummary make_toy_corpus(std::uint64_t seed, int n_tables, int n_questions_per_table,
                              const std::string& out_dir);

}  // namespace mapo

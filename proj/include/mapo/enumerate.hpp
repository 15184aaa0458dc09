#pragma once

#include <stdexcept>
#include <vector>

#include "mapo/dataset.hpp"

namespace mapo {

struct SpaceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumeratedProgram {
  Program program;
  int reward;
};

// Every complete program of at most max_tokens tokens accepted token-by-token
// by the grammar oracle, with its reward, in lexicographic order of the
// canonical rendering. Aborts with SpaceTooLarge past `node_guard` search
// nodes (default 10^7). Ground truth for the estimator tests.
std::vector<EnumeratedProgram> enumerate_programs(const Example& example, int max_tokens,
                                                  long node_guard = 10'000'000L);

}  // namespace mapo

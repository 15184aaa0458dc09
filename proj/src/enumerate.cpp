#include "mapo/enumerate.hpp"

#include "mapo/grammar.hpp"

namespace mapo {

namespace {

struct Enumerator {
  const Example& example;
  int max_tokens;
  long guard;
  long nodes = 0;
  Program prefix;
  std::vector<EnumeratedProgram> out;

  void descend(const PrefixState& st) {
    if (++nodes > guard) {
      throw SpaceTooLarge("enumeration exceeded " + std::to_string(guard) + " nodes");
    }
    for (const Token& t : st.valid_next(max_tokens)) {
      PrefixState next = st;
      next.advance(t, max_tokens);
      prefix.push_back(t);
      if (next.complete()) {
        out.push_back({prefix, reward(prefix, example)});
      } else {
        descend(next);
      }
      prefix.pop_back();
    }
  }
};

}  // namespace

std::vector<EnumeratedProgram> enumerate_programs(const Example& example, int max_tokens,
                                                  long node_guard) {
  Enumerator e{example, max_tokens, node_guard, 0, {}, {}};
  PrefixState root(*example.table, example.literal_pool);
  e.descend(root);
  return e.out;
}

}  // namespace mapo

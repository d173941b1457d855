#pragma once

// Trace-monoid view of the bounded pipeline. A run is a word of single-cycle
// operations (element, stage); two operations commute iff they share neither
// the element nor the stage. The q-capped Foata normal form regroups the word
// into blocks of at most q pairwise independent operations, and its height is
// the number of cycles the bounded pipeline needs.

#include <compare>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bpl/model.hpp"

namespace bpl {

struct Op {
  std::int64_t element = 1;
  std::int64_t stage = 1;

  friend auto operator<=>(const Op&, const Op&) = default;
};

using Trace = std::vector<Op>;

struct FoataForm {
  std::vector<std::vector<Op>> blocks;
  std::int64_t cap = 1;
};

/// Sequential order of a pipeline run: element-major, stage-minor.
inline Trace pipeline_trace(std::int64_t p, std::int64_t n) {
  if (p < 1 || n < 1) throw invalid_config("p and n must be >= 1");
  Trace t;
  t.reserve(static_cast<std::size_t>(p * n));
  for (std::int64_t e = 1; e <= n; ++e)
    for (std::int64_t s = 1; s <= p; ++s) t.push_back({e, s});
  return t;
}

/// Same element: data dependence. Same stage: the stage's latch/resource.
inline bool independent(const Op& a, const Op& b) {
  return a.element != b.element && a.stage != b.stage;
}

/// Block selection priority: deeper stage first, then smaller element.
struct DeeperStageFirst {
  bool operator()(const Op& a, const Op& b) const {
    if (a.stage != b.stage) return a.stage > b.stage;
    return a.element < b.element;
  }
};

/// Capped Foata factorization of `word` under an arbitrary independence
/// relation. Each block takes up to `cap` operations whose dependent
/// predecessors all sit in strictly earlier blocks, ordered by `before`.
/// Returns blocks as indices into `word`.
template <class T, class IndependentFn, class PriorityLess>
std::vector<std::vector<std::size_t>> capped_foata_blocks(std::span<const T> word,
                                                         std::size_t cap,
                                                         IndependentFn&& indep,
                                                         PriorityLess&& before) {
  if (cap == 0) throw invalid_config("block cap must be >= 1");
  const auto size = word.size();
  std::vector<std::vector<std::size_t>> succ(size);
  std::vector<std::size_t> pending(size, 0);
  for (std::size_t j = 0; j < size; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (!indep(word[i], word[j])) {
        succ[i].push_back(j);
        ++pending[j];
      }

  auto order = [&](std::size_t a, std::size_t b) {
    if (before(word[a], word[b])) return true;
    if (before(word[b], word[a])) return false;
    return a < b;
  };
  std::set<std::size_t, decltype(order)> ready(order);
  for (std::size_t j = 0; j < size; ++j)
    if (pending[j] == 0) ready.insert(j);

  std::vector<std::vector<std::size_t>> blocks;
  while (!ready.empty()) {
    std::vector<std::size_t> block;
    for (auto it = ready.begin(); it != ready.end() && block.size() < cap;) {
      block.push_back(*it);
      it = ready.erase(it);
    }
    for (auto i : block)
      for (auto j : succ[i])
        if (--pending[j] == 0) ready.insert(j);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

inline FoataForm foata_normal_form(const Trace& t, std::int64_t cap) {
  if (cap < 1) throw invalid_config("block cap must be >= 1");
  const auto idx = capped_foata_blocks(std::span<const Op>(t), static_cast<std::size_t>(cap),
                                       independent, DeeperStageFirst{});
  FoataForm f;
  f.cap = cap;
  f.blocks.reserve(idx.size());
  for (const auto& b : idx) {
    std::vector<Op> ops;
    ops.reserve(b.size());
    for (auto i : b) ops.push_back(t[i]);
    f.blocks.push_back(std::move(ops));
  }
  return f;
}

inline std::int64_t height(const FoataForm& f) {
  return static_cast<std::int64_t>(f.blocks.size());
}

inline Trace flatten(const FoataForm& f) {
  Trace out;
  for (const auto& b : f.blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// One line per block: `index: (element,stage) (element,stage) ...`.
inline std::string serialize(const FoataForm& f) {
  std::ostringstream os;
  for (std::size_t i = 0; i < f.blocks.size(); ++i) {
    os << (i + 1) << ':';
    for (const auto& op : f.blocks[i]) os << " (" << op.element << ',' << op.stage << ')';
    os << '\n';
  }
  return os.str();
}

}  // namespace bpl

#include "finespan/similarity.hpp"

#include <algorithm>

#include "finespan/text.hpp"

namespace finespan::nereval {

namespace {

/// Longest block a[alo, ahi) == b[blo, bhi), scanning `a` left to right so
/// the first maximum found is the earliest in `a`, then in `b`.
MatchingBlock longest_match(std::u32string_view a, std::u32string_view b, std::size_t alo, std::size_t ahi,
                            std::size_t blo, std::size_t bhi, std::vector<std::size_t>& prev,
                            std::vector<std::size_t>& cur) {
  MatchingBlock best{alo, blo, 0};
  std::fill(prev.begin() + static_cast<std::ptrdiff_t>(blo), prev.begin() + static_cast<std::ptrdiff_t>(bhi) + 1, 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    cur[blo] = 0;
    for (std::size_t j = blo; j < bhi; ++j) {
      // cur[j + 1]: length of the common suffix of a[.., i] and b[.., j].
      const std::size_t k = a[i] == b[j] ? prev[j] + 1 : 0;
      cur[j + 1] = k;
      if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
    }
    std::swap(prev, cur);
  }
  return best;
}

}  // namespace

std::vector<MatchingBlock> matching_blocks(std::u32string_view a, std::u32string_view b) {
  std::vector<MatchingBlock> blocks;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  struct Range {
    std::size_t alo, ahi, blo, bhi;
  };
  std::vector<Range> stack{{0, a.size(), 0, b.size()}};
  while (!stack.empty()) {
    const Range r = stack.back();
    stack.pop_back();
    if (r.alo >= r.ahi || r.blo >= r.bhi) continue;
    const MatchingBlock m = longest_match(a, b, r.alo, r.ahi, r.blo, r.bhi, prev, cur);
    if (m.size == 0) continue;
    blocks.push_back(m);
    stack.push_back({r.alo, m.a, r.blo, m.b});
    stack.push_back({m.a + m.size, r.ahi, m.b + m.size, r.bhi});
  }
  std::sort(blocks.begin(), blocks.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  return blocks;
}

double similarity_ratio(std::u32string_view a, std::u32string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  std::size_t matched = 0;
  for (const auto& block : matching_blocks(a, b)) matched += block.size;
  return 2.0 * static_cast<double>(matched) / static_cast<double>(total);
}

double similarity_ratio(std::string_view a, std::string_view b) {
  return similarity_ratio(text::to_u32(a), text::to_u32(b));
}

}  // namespace finespan::nereval

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace finespan::nereval {

struct MatchingBlock {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t size = 0;
};

/// Ratcliff-Obershelp matching blocks over the two code-point sequences,
/// ordered by position. The longest common block is taken first (earliest
/// in `a`, then earliest in `b` on ties) and both sides are recursed. No
/// junk heuristic is applied.
std::vector<MatchingBlock> matching_blocks(std::u32string_view a, std::u32string_view b);

/// 2M/T over code points, where M is the matched length and T the combined
/// length. Two empty strings give 1.0.
double similarity_ratio(std::u32string_view a, std::u32string_view b);

/// UTF-8 convenience overload.
double similarity_ratio(std::string_view a, std::string_view b);

}  // namespace finespan::nereval

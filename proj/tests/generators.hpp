#pragma once

// Seeded generators and brute-force oracles shared by the unit tests and
// the acceptance runner.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "finespan/aggregate.hpp"
#include "finespan/hmm.hpp"
#include "finespan/nereval.hpp"
#include "finespan/tagcodec.hpp"

namespace testing_support {

using finespan::aggregate::kAbstain;
using finespan::aggregate::VoteMatrix;
using finespan::tagcodec::TaggedSentence;
using finespan::tagcodec::TagScheme;
namespace hmm = finespan::hmm;

// -- seq2seq codec ------------------------------------------------------------

/// Random valid sentence: entity tokens avoid `[`, `]` and `|`; outside
/// tokens may contain them as long as they cannot read back as markup.
inline TaggedSentence random_sentence(std::mt19937& rng, const TagScheme& scheme, std::size_t id) {
  static const std::vector<std::string> pieces = {"a", "lucro", "líquido", "R$", "10,8", "_", "\\", "x_y", "a\\_b",
                                                  "%", "ção", "2T22", "-", "ü", ".", "Itaú", "__", "\\\\"};
  static const std::vector<std::string> outside_only = {"[", "]", "|", "a|b", "[x", "y]", "a|B]", "[]"};
  TaggedSentence t;
  t.id = "r" + std::to_string(id);
  const std::size_t n = 1 + rng() % 12;
  std::string previous_label;
  for (std::size_t i = 0; i < n; ++i) {
    std::string token;
    const std::size_t parts = 1 + rng() % 3;
    for (std::size_t p = 0; p < parts; ++p) token += pieces[rng() % pieces.size()];
    const auto roll = rng() % 10;
    if (roll < 4) {
      if (rng() % 4 == 0) token = outside_only[rng() % outside_only.size()];
      t.tokens.push_back(token);
      t.tags.push_back("O");
      previous_label.clear();
    } else if (roll < 7 && !previous_label.empty()) {
      t.tokens.push_back(token);
      t.tags.push_back("I-" + previous_label);
    } else {
      previous_label = scheme.labels()[rng() % scheme.labels().size()];
      t.tokens.push_back(token);
      t.tags.push_back("B-" + previous_label);
    }
  }
  return t;
}

/// Arbitrary bytes drawn from markup characters, labels and broken UTF-8.
inline std::string fuzz_string(std::mt19937& rng) {
  static const std::string alphabet = "ab [ ] | _ \\ LUCRO COMPANY X ç\xC3\xA9\xFF\t\n";
  std::string s;
  const std::size_t n = rng() % 60;
  for (std::size_t k = 0; k < n; ++k) s.push_back(alphabet[rng() % alphabet.size()]);
  return s;
}

// -- HMM ------------------------------------------------------------------------

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RandomHmm {
  std::vector<double> log_initial;
  hmm::Matrix log_transition;
  hmm::Matrix log_emission;
};

inline RandomHmm random_hmm(std::mt19937& rng, std::size_t states, std::size_t length) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RandomHmm m{std::vector<double>(states), hmm::Matrix(states, states), hmm::Matrix(length, states)};
  const auto fill_row = [&](std::span<double> row, bool sparse) {
    double sum = 0.0;
    std::vector<double> p(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      p[i] = (sparse && i > 0 && rng() % 4 == 0) ? 0.0 : u(rng);
      sum += p[i];
    }
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = p[i] > 0.0 ? std::log(p[i] / sum) : kNegInf;
  };
  fill_row(m.log_initial, false);
  for (std::size_t s = 0; s < states; ++s) fill_row(m.log_transition.row(s), true);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t s = 0; s < states; ++s) m.log_emission(t, s) = std::log(u(rng));
  return m;
}

/// Every path, scored by direct summation.
inline void enumerate(const RandomHmm& m, std::vector<std::size_t>& path, double& best, std::vector<std::size_t>& best_path,
               std::vector<double>& all) {
  const std::size_t length = m.log_emission.rows();
  const std::size_t states = m.log_initial.size();
  if (path.size() == length) {
    double lp = m.log_initial[path[0]] + m.log_emission(0, path[0]);
    for (std::size_t t = 1; t < length; ++t) lp += m.log_transition(path[t - 1], path[t]) + m.log_emission(t, path[t]);
    all.push_back(lp);
    if (lp > best) {
      best = lp;
      best_path = path;
    }
    return;
  }
  for (std::size_t s = 0; s < states; ++s) {
    path.push_back(s);
    enumerate(m, path, best, best_path, all);
    path.pop_back();
  }
}

inline TagScheme two_labels() { return TagScheme::build({"A", "B"}); }

/// Ground-truth tag sequences from a small BIO chain over labels A and B.
inline std::vector<std::vector<int>> truth_sequences(std::mt19937& rng, std::size_t sentences) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    const std::size_t n = 5 + rng() % 11;
    std::vector<int> tags;
    int prev = 0;
    for (std::size_t t = 0; t < n; ++t) {
      int next = 0;
      const auto roll = rng() % 100;
      if (prev != 0 && roll < 40) {
        next = TagScheme::is_begin(prev) ? prev + 1 : prev;
      } else if (roll < 70) {
        next = 0;
      } else {
        next = (rng() % 2 == 0) ? 1 : 3;
      }
      tags.push_back(next);
      prev = next;
    }
    out.push_back(std::move(tags));
  }
  return out;
}

/// Three functions vote on every token; function f replaces the true tag
/// with a uniformly chosen different tag with probability noise[f].
inline std::vector<VoteMatrix> noisy_votes(std::mt19937& rng, const std::vector<std::vector<int>>& truth,
                                    const std::vector<double>& noise) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VoteMatrix> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    VoteMatrix m;
    m.sentence_id = "syn" + std::to_string(i);
    for (std::size_t t = 0; t < truth[i].size(); ++t) m.tokens.push_back("w" + std::to_string(t));
    for (std::size_t f = 0; f < noise.size(); ++f) {
      m.functions.push_back("f" + std::to_string(f));
      std::vector<int> row;
      for (int tag : truth[i]) {
        int vote = tag;
        if (u(rng) < noise[f]) {
          vote = static_cast<int>(rng() % 4);
          if (vote >= tag) ++vote;
        }
        row.push_back(vote);
      }
      m.votes.push_back(std::move(row));
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline double accuracy(const std::vector<std::vector<std::string>>& predicted, const std::vector<std::vector<int>>& truth,
                const TagScheme& scheme) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t t = 0; t < truth[i].size(); ++t) {
      hit += scheme.id(predicted[i][t]) == truth[i][t];
      ++total;
    }
  return static_cast<double>(hit) / static_cast<double>(total);
}

// -- MUC --------------------------------------------------------------------------

inline const std::vector<std::string> kLabels = {"LUCRO", "MONEY", "YEAR"};

inline std::string label_of(const std::string& tag) { return tag == "O" ? "" : tag.substr(2); }

/// Random BIO-valid tags over kLabels.
inline std::vector<std::string> random_tags(std::mt19937& rng, std::size_t n) {
  std::vector<std::string> tags;
  std::string open;
  for (std::size_t i = 0; i < n; ++i) {
    const auto roll = rng() % 10;
    if (!open.empty() && roll < 3) {
      tags.push_back("I-" + open);
    } else if (roll < 6) {
      tags.push_back("O");
      open.clear();
    } else {
      open = kLabels[rng() % kLabels.size()];
      tags.push_back("B-" + open);
    }
  }
  return tags;
}

inline TaggedSentence sentence(const std::string& id, std::vector<std::string> tags) {
  TaggedSentence s{id, {}, std::move(tags)};
  for (std::size_t i = 0; i < s.tags.size(); ++i) s.tokens.push_back("t" + std::to_string(i));
  return s;
}

/// The four per-token rules applied directly to label strings.
inline finespan::nereval::MucCounts muc_brute(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  finespan::nereval::MucCounts c;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    const auto g = label_of(gold[t]);
    const auto p = label_of(pred[t]);
    if (!g.empty() && p == g) ++c.cor;
    else if (!g.empty() && !p.empty()) ++c.inc;
    else if (!g.empty()) ++c.mis;
    else if (!p.empty()) ++c.spu;
  }
  return c;
}

// -- similarity ---------------------------------------------------------------------

inline std::u32string decode_utf8(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = n == 1 ? c : c & (0xFF >> (n + 1));
    for (std::size_t k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += n;
  }
  return out;
}

/// Two-byte sequences suffice for the alphabets used here.
inline std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

/// Matched length by recursive longest-common-substring, each found with a
/// full quadratic table; ties go to the smallest start in a, then in b.
inline std::size_t matched_dp(const std::u32string& a, std::size_t alo, std::size_t ahi, const std::u32string& b,
                       std::size_t blo, std::size_t bhi) {
  if (alo >= ahi || blo >= bhi) return 0;
  std::vector<std::vector<std::size_t>> run(ahi - alo + 1, std::vector<std::size_t>(bhi - blo + 1, 0));
  std::size_t best = 0;
  std::size_t bi = alo;
  std::size_t bj = blo;
  for (std::size_t i = ahi; i-- > alo;)
    for (std::size_t j = bhi; j-- > blo;) {
      if (a[i] != b[j]) continue;
      const std::size_t len = 1 + run[i - alo + 1][j - blo + 1];
      run[i - alo][j - blo] = len;
    }
  for (std::size_t i = alo; i < ahi; ++i)
    for (std::size_t j = blo; j < bhi; ++j)
      if (run[i - alo][j - blo] > best) {
        best = run[i - alo][j - blo];
        bi = i;
        bj = j;
      }
  if (best == 0) return 0;
  return best + matched_dp(a, alo, bi, b, blo, bj) + matched_dp(a, bi + best, ahi, b, bj + best, bhi);
}

inline double ratio_dp(const std::string& x, const std::string& y) {
  const auto a = decode_utf8(x);
  const auto b = decode_utf8(y);
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(matched_dp(a, 0, a.size(), b, 0, b.size())) / static_cast<double>(total);
}

}  // namespace testing_support

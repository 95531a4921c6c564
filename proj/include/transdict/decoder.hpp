// Two-stage search: prune per-token candidate lists to the acoustic top-n,
// then Viterbi over the candidate x class lattice under combined acoustic
// and translation scores. A guarded exhaustive decoder serves as the
// correctness oracle.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transdict/phonosim.hpp"
#include "transdict/transmodel.hpp"
#include "transdict/util.hpp"

namespace transdict {

struct DecodeResult {
  std::vector<Token> words;
  std::vector<ClassId> classes;
  double log_score = kNegInf;
  // Gap between the best and runner-up class decision at each position along
  // the returned path; +inf when only one class was admissible.
  std::optional<std::vector<double>> per_position_margins;
};

// Keeps the top-n candidates per position by acoustic score; ties at the cut
// keep the lexicographically smaller word. The optimum may be lost here:
// nothing guarantees the best full sentence survives per-token pruning.
inline NBestLattice prune(const NBestLattice& lat, std::size_t n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  NBestLattice out;
  out.positions.reserve(lat.positions.size());
  for (const NBestList& list : lat.positions) {
    std::vector<Candidate> entries = list.entries;
    std::sort(entries.begin(), entries.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.word < b.word;
              });
    if (entries.size() > n) entries.resize(n);
    NBestList pruned;
    pruned.entries = std::move(entries);
    if (list.truth_rank) {
      const Token& truth = list.entries[*list.truth_rank].word;
      for (std::size_t r = 0; r < pruned.entries.size(); ++r)
        if (pruned.entries[r].word == truth) {
          pruned.truth_rank = r;
          break;
        }
    }
    out.positions.push_back(std::move(pruned));
  }
  return out;
}

// Log score of one explicit (word, class) assignment through the lattice:
// acoustic_weight * sum acoustic + sum [log p(c_i|c_{i-2},c_{i-1}) +
// log smoothed(w_i, c_i, e)] + end event.
inline double score_decode_path(const NBestLattice& lat,
                                const std::vector<Token>& words,
                                const std::vector<ClassId>& classes,
                                const std::vector<Token>& e_sent,
                                const TransModel& model,
                                const SmoothingConfig& cfg,
                                double acoustic_weight = 1.0) {
  if (words.size() != lat.positions.size() || classes.size() != words.size())
    throw std::invalid_argument("path length mismatch");
  if (words.empty()) throw std::invalid_argument("empty path");
  const ContextualParams& ctx = model.lm.contextual;
  const std::size_t B = ctx.boundary();
  std::span<const Token> e_span(e_sent);
  std::size_t p2 = B, p1 = B;
  double total = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const Candidate* cand = nullptr;
    for (const Candidate& c : lat.positions[i].entries)
      if (c.word == words[i]) {
        cand = &c;
        break;
      }
    if (cand == nullptr)
      throw std::invalid_argument("word not in lattice at position " +
                                  std::to_string(i) + ": " + words[i]);
    total += acoustic_weight * cand->score;
    total += std::log(ctx.at(p2, p1, classes[i]));
    total += std::log(smoothed_score(words[i], classes[i], e_span, model, cfg));
    p2 = p1;
    p1 = classes[i];
  }
  total += std::log(ctx.at(p2, p1, ctx.end_event()));
  return total;
}

namespace detail {

struct EmissionTable {
  std::size_t C = 0;
  std::vector<double> score;      // [i * C + c], -inf = barred
  std::vector<std::uint32_t> rank;  // candidate rank attaining score[i, c]

  double at(std::size_t i, std::size_t c) const { return score[i * C + c]; }
};

// Best candidate per (position, class): acoustic_weight * acoustic +
// log smoothed. Lower rank wins ties. Throws when some position admits no
// (candidate, class) pair at all.
inline EmissionTable build_emissions(const NBestLattice& lat,
                                     const std::vector<Token>& e_sent,
                                     const TransModel& model,
                                     const SmoothingConfig& cfg,
                                     double acoustic_weight) {
  const std::size_t C = model.lm.class_count();
  EmissionTable t;
  t.C = C;
  t.score.assign(lat.positions.size() * C, kNegInf);
  t.rank.assign(lat.positions.size() * C, 0);
  std::span<const Token> e_span(e_sent);
  for (std::size_t i = 0; i < lat.positions.size(); ++i) {
    const auto& entries = lat.positions[i].entries;
    if (entries.empty())
      throw std::invalid_argument("position " + std::to_string(i) +
                                  " has no candidates");
    bool any = false;
    for (std::uint32_t r = 0; r < entries.size(); ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        double sm = smoothed_score(entries[r].word, static_cast<ClassId>(c),
                                   e_span, model, cfg);
        if (sm <= 0.0) continue;
        double v = acoustic_weight * entries[r].score + std::log(sm);
        double& cur = t.score[i * C + c];
        if (v > cur) {
          cur = v;
          t.rank[i * C + c] = r;
          any = true;
        }
      }
    }
    if (!any)
      throw std::runtime_error(
          "position " + std::to_string(i) +
          ": every candidate/class pair has zero probability");
  }
  return t;
}

}  // namespace detail

// Joint argmax over word choices and class sequences. DP state is (previous
// class, current class); the best candidate per (position, class) factors
// out because the word choice only enters through its own position's score.
// Ties resolve to the path whose (candidate rank, class index) pair sequence
// is lexicographically smallest.
inline DecodeResult decode(const NBestLattice& lat,
                           const std::vector<Token>& e_sent,
                           const TransModel& model, const SmoothingConfig& cfg,
                           double acoustic_weight = 1.0) {
  if (lat.positions.empty()) throw std::invalid_argument("empty lattice");
  const std::size_t m = lat.positions.size();
  const std::size_t C = model.lm.class_count();
  const std::size_t S = C + 1;
  const std::size_t B = C;
  detail::EmissionTable emis =
      detail::build_emissions(lat, e_sent, model, cfg, acoustic_weight);
  detail::LogCtx lctx(model.lm.contextual);

  // suffix[i][p * C + c]: best completion after position i from state
  // (c_{i-1}=p, c_i=c), including the end event.
  std::vector<std::vector<double>> suffix(m, std::vector<double>(S * C, kNegInf));
  for (std::size_t p = 0; p < S; ++p)
    for (std::size_t c = 0; c < C; ++c) suffix[m - 1][p * C + c] = lctx(p, c, C);
  for (std::size_t i = m - 1; i-- > 0;)
    for (std::size_t p = 0; p < S; ++p)
      for (std::size_t c = 0; c < C; ++c) {
        double best = kNegInf;
        for (std::size_t c2 = 0; c2 < C; ++c2) {
          double e = emis.at(i + 1, c2);
          if (e == kNegInf) continue;
          double v = lctx(p, c, c2) + e + suffix[i + 1][c * C + c2];
          if (v > best) best = v;
        }
        suffix[i][p * C + c] = best;
      }

  double best = kNegInf;
  for (std::size_t c = 0; c < C; ++c) {
    double e = emis.at(0, c);
    if (e == kNegInf) continue;
    double v = lctx(B, B, c) + e + suffix[0][B * C + c];
    if (v > best) best = v;
  }
  if (best == kNegInf)
    throw std::runtime_error("no feasible decode path");

  DecodeResult out;
  out.words.resize(m);
  out.classes.resize(m);
  out.log_score = best;
  std::vector<double> margins(m, kInf);

  std::size_t prev = B, cur = B;
  for (std::size_t i = 0; i < m; ++i) {
    double target = i == 0 ? best : suffix[i - 1][prev * C + cur];
    std::size_t pp = i == 0 ? B : prev;
    std::size_t pc = i == 0 ? B : cur;
    std::size_t chosen = C;
    double first = kNegInf, second = kNegInf;
    for (std::size_t c = 0; c < C; ++c) {
      double e = emis.at(i, c);
      if (e == kNegInf) continue;
      double v = lctx(pp, pc, c) + e + suffix[i][pc * C + c];
      if (v > first) {
        second = first;
        first = v;
      } else if (v > second) {
        second = v;
      }
      if (v == target && chosen == C) chosen = c;
      else if (v == target && chosen != C) {
        // keep the pair-lexicographic winner: lower rank first, then class
        std::uint32_t r_new = emis.rank[i * C + c];
        std::uint32_t r_old = emis.rank[i * C + chosen];
        if (r_new < r_old) chosen = c;
      }
    }
    if (chosen == C) throw std::logic_error("decode reconstruction lost optimum");
    margins[i] = second == kNegInf ? kInf : first - second;
    out.classes[i] = static_cast<ClassId>(chosen);
    out.words[i] = lat.positions[i].entries[emis.rank[i * C + chosen]].word;
    prev = i == 0 ? B : cur;
    cur = chosen;
  }
  out.per_position_margins = std::move(margins);
  return out;
}

// Exhaustive oracle: enumerates every (word, class) assignment with the same
// scoring and tie-breaking as decode. Guarded against blowup.
inline DecodeResult brute_force_decode(const NBestLattice& lat,
                                       const std::vector<Token>& e_sent,
                                       const TransModel& model,
                                       const SmoothingConfig& cfg,
                                       double acoustic_weight = 1.0) {
  if (lat.positions.empty()) throw std::invalid_argument("empty lattice");
  const std::size_t m = lat.positions.size();
  const std::size_t C = model.lm.class_count();
  std::size_t nmax = 1;
  for (const NBestList& l : lat.positions) nmax = std::max(nmax, l.entries.size());
  double combos = std::pow(static_cast<double>(nmax), static_cast<double>(m)) *
                  std::pow(static_cast<double>(C), static_cast<double>(m));
  if (combos > 1e7)
    throw std::invalid_argument("brute force guard exceeded: n^|f| * C^|f| > 1e7");
  // same per-position feasibility contract as decode
  (void)detail::build_emissions(lat, e_sent, model, cfg, acoustic_weight);

  std::vector<std::size_t> ranks(m, 0), classes(m, 0);
  std::vector<Token> words(m);
  std::vector<ClassId> cls(m);
  DecodeResult best;
  std::vector<std::size_t> best_ranks;
  bool have = false;

  auto lex_smaller = [&](const std::vector<std::size_t>& r1,
                         const std::vector<ClassId>& c1,
                         const std::vector<std::size_t>& r2,
                         const std::vector<ClassId>& c2) {
    for (std::size_t i = 0; i < r1.size(); ++i) {
      if (r1[i] != r2[i]) return r1[i] < r2[i];
      if (c1[i] != c2[i]) return c1[i] < c2[i];
    }
    return false;
  };

  while (true) {
    for (std::size_t i = 0; i < m; ++i) {
      words[i] = lat.positions[i].entries[ranks[i]].word;
      cls[i] = static_cast<ClassId>(classes[i]);
    }
    double score = score_decode_path(lat, words, cls, e_sent, model, cfg,
                                     acoustic_weight);
    if (score != kNegInf) {
      bool better = !have || score > best.log_score ||
                    (score == best.log_score &&
                     lex_smaller(ranks, cls, best_ranks, best.classes));
      if (better) {
        best.words = words;
        best.classes = cls;
        best.log_score = score;
        best_ranks = ranks;
        have = true;
      }
    }
    // odometer over (rank, class) per position, rank fastest
    std::size_t i = m;
    while (i-- > 0) {
      if (++ranks[i] < lat.positions[i].entries.size()) break;
      ranks[i] = 0;
      if (++classes[i] < C) break;
      classes[i] = 0;
      if (i == 0) {
        if (!have) throw std::runtime_error("no feasible decode path");
        return best;
      }
    }
  }
}

}  // namespace transdict

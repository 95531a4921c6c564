// Tri-class language model: class-trigram contextual parameters
// p(c_i | c_{i-2}, c_{i-1}), per-class lexical emissions p(f | c), EM
// training over lexicon-constrained class sequences, Viterbi tagging and
// forward-sum sentence scoring.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transdict/corpus.hpp"
#include "transdict/util.hpp"

namespace transdict {

// Dense class-trigram table. Predecessor indices run over the C real classes
// plus the synthetic boundary class (index C); successor indices run over the
// C real classes plus the end-of-sentence event (index C). Each (p2, p1) row
// is a distribution over the C+1 successors.
struct ContextualParams {
  ContextualParams() = default;
  explicit ContextualParams(std::size_t classes)
      : C(classes), table((classes + 1) * (classes + 1) * (classes + 1), 0.0) {}

  std::size_t C = 0;
  std::vector<double> table;

  std::size_t boundary() const { return C; }
  std::size_t end_event() const { return C; }
  std::size_t states() const { return C + 1; }

  double at(std::size_t p2, std::size_t p1, std::size_t next) const {
    return table[(p2 * (C + 1) + p1) * (C + 1) + next];
  }
  double& at(std::size_t p2, std::size_t p1, std::size_t next) {
    return table[(p2 * (C + 1) + p1) * (C + 1) + next];
  }

  void fill_uniform() {
    double u = 1.0 / static_cast<double>(C + 1);
    std::fill(table.begin(), table.end(), u);
  }

  // Largest |row sum - 1| over all (p2, p1) rows.
  double max_row_deviation() const {
    double worst = 0.0;
    for (std::size_t p2 = 0; p2 <= C; ++p2)
      for (std::size_t p1 = 0; p1 <= C; ++p1) {
        double s = 0.0;
        for (std::size_t nx = 0; nx <= C; ++nx) s += at(p2, p1, nx);
        worst = std::max(worst, std::fabs(s - 1.0));
      }
    return worst;
  }

  // Add-lambda smoothing over every row so no successor is exactly zero.
  void smooth_rows(double lambda) {
    if (lambda <= 0.0) return;
    double denom = 1.0 + lambda * static_cast<double>(C + 1);
    for (std::size_t p2 = 0; p2 <= C; ++p2)
      for (std::size_t p1 = 0; p1 <= C; ++p1)
        for (std::size_t nx = 0; nx <= C; ++nx)
          at(p2, p1, nx) = (at(p2, p1, nx) + lambda) / denom;
  }
};

// Sparse per-class lexical emissions. Rows are per word (class, prob) lists
// sorted by class id; normalization is per class over the vocabulary.
struct LexicalParams {
  std::size_t C = 0;
  std::unordered_map<Token, std::vector<std::pair<ClassId, double>>> table;

  double prob(const Token& f, ClassId c) const {
    auto it = table.find(f);
    if (it == table.end()) return 0.0;
    for (const auto& [cls, p] : it->second)
      if (cls == c) return p;
    return 0.0;
  }

  const std::vector<std::pair<ClassId, double>>* row(const Token& f) const {
    auto it = table.find(f);
    return it == table.end() ? nullptr : &it->second;
  }

  // Largest |class sum - 1| over classes that have any support.
  double max_class_deviation() const {
    std::vector<double> sums(C, 0.0);
    std::vector<bool> seen(C, false);
    for (const auto& [w, row] : table)
      for (const auto& [c, p] : row) {
        sums[c] += p;
        seen[c] = true;
      }
    double worst = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      if (seen[c]) worst = std::max(worst, std::fabs(sums[c] - 1.0));
    return worst;
  }
};

struct ClassLM {
  ContextualParams contextual;
  LexicalParams lexical;
  Lexicon lexicon;

  std::size_t class_count() const { return contextual.C; }
};

namespace detail {

// Per-call cache of log contextual probabilities.
struct LogCtx {
  explicit LogCtx(const ContextualParams& ctx) : S(ctx.C + 1), t(S * S * S) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::log(ctx.table[i]);
  }
  std::size_t S;
  std::vector<double> t;
  double operator()(std::size_t p2, std::size_t p1, std::size_t nx) const {
    return t[(p2 * S + p1) * S + nx];
  }
};

}  // namespace detail

// Forward sum over class sequences in the log domain. emis_row(i, out) must
// fill out[c] with the linear emission probability of position i under class
// c; exact zeros mark inadmissible classes. Returns -inf when no sequence
// has positive probability.
template <class EmisRow>
double forward_logprob_over_classes(std::size_t len, const ContextualParams& ctx,
                                    EmisRow&& emis_row) {
  const std::size_t C = ctx.C;
  const std::size_t S = C + 1;
  const std::size_t B = ctx.boundary();
  detail::LogCtx lctx(ctx);

  // alpha[p * C + c]: log prob of the prefix ending in state (c_{i-1}=p, c_i=c).
  std::vector<double> alpha(S * C, kNegInf), next(S * C, kNegInf);
  std::vector<double> emis(C, 0.0);

  emis_row(0, std::span<double>(emis));
  for (std::size_t c = 0; c < C; ++c)
    if (emis[c] > 0.0) alpha[B * C + c] = lctx(B, B, c) + std::log(emis[c]);

  for (std::size_t i = 1; i < len; ++i) {
    emis_row(i, std::span<double>(emis));
    std::fill(next.begin(), next.end(), kNegInf);
    for (std::size_t c = 0; c < C; ++c) {
      if (emis[c] <= 0.0) continue;
      double le = std::log(emis[c]);
      for (std::size_t p = 0; p < C; ++p) {
        double acc = kNegInf;
        // p2 runs over real classes plus the boundary state from position 0
        for (std::size_t p2 = 0; p2 < S; ++p2) {
          double a = alpha[p2 * C + p];
          if (a == kNegInf) continue;
          acc = log_add(acc, a + lctx(p2, p, c));
        }
        if (acc != kNegInf) next[p * C + c] = acc + le;
      }
    }
    alpha.swap(next);
  }

  double total = kNegInf;
  for (std::size_t p = 0; p < S; ++p)
    for (std::size_t c = 0; c < C; ++c) {
      double a = alpha[p * C + c];
      if (a == kNegInf) continue;
      total = log_add(total, a + lctx(p, c, ctx.end_event()));
    }
  return total;
}

namespace detail {

// Fills the emission row for one word of a sentence under the pure LM.
// Throws when the word is entirely unknown; a known word whose classes all
// have zero probability yields an all-zero row (the caller decides whether
// that is an error or a -inf score).
inline void lm_emission_row(const ClassLM& lm, const Token& word,
                            std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto* row = lm.lexical.row(word);
  if (row == nullptr) {
    if (!lm.lexicon.contains(word))
      throw std::runtime_error("word not in lexicon or model: " + word);
    return;
  }
  for (const auto& [c, p] : *row) out[c] = p;
}

}  // namespace detail

// log sum over all class sequences of p(c) * prod_i p(f_i | c_i).
inline double lm_sentence_logprob(const std::vector<Token>& sentence,
                                  const ClassLM& lm) {
  if (sentence.empty()) throw std::invalid_argument("empty sentence");
  return forward_logprob_over_classes(
      sentence.size(), lm.contextual, [&](std::size_t i, std::span<double> out) {
        detail::lm_emission_row(lm, sentence[i], out);
      });
}

namespace detail {

// Viterbi over class sequences with suffix DP, reconstructed front-to-back so
// that among equal-scoring sequences the lexicographically smallest (by class
// index) is returned. emis[i * C + c] holds log emissions (-inf = barred).
// Returns the class sequence; best_score receives the path log score.
inline std::vector<ClassId> viterbi_classes(std::size_t len, std::size_t C,
                                            const LogCtx& lctx,
                                            const std::vector<double>& emis,
                                            double* best_score) {
  const std::size_t S = C + 1;
  const std::size_t B = C;
  // suffix[i][p * C + c]: best log score of everything after position i given
  // state (c_{i-1}=p, c_i=c), including the end event.
  std::vector<std::vector<double>> suffix(len,
                                          std::vector<double>(S * C, kNegInf));
  for (std::size_t p = 0; p < S; ++p)
    for (std::size_t c = 0; c < C; ++c)
      suffix[len - 1][p * C + c] = lctx(p, c, C);
  for (std::size_t i = len - 1; i-- > 0;) {
    for (std::size_t p = 0; p < S; ++p)
      for (std::size_t c = 0; c < C; ++c) {
        double best = kNegInf;
        for (std::size_t c2 = 0; c2 < C; ++c2) {
          double e = emis[(i + 1) * C + c2];
          if (e == kNegInf) continue;
          double v = lctx(p, c, c2) + e + suffix[i + 1][c * C + c2];
          if (v > best) best = v;
        }
        suffix[i][p * C + c] = best;
      }
  }

  double best = kNegInf;
  for (std::size_t c = 0; c < C; ++c) {
    double e = emis[c];
    if (e == kNegInf) continue;
    double v = lctx(B, B, c) + e + suffix[0][B * C + c];
    if (v > best) best = v;
  }
  if (best == kNegInf)
    throw std::runtime_error("no admissible class sequence for sentence");
  if (best_score != nullptr) *best_score = best;

  std::vector<ClassId> out(len);
  std::size_t prev = B;
  std::size_t cur = B;  // unused until one class is fixed
  for (std::size_t i = 0; i < len; ++i) {
    double target = i == 0 ? best : suffix[i - 1][prev * C + cur];
    std::size_t chosen = C;
    for (std::size_t c = 0; c < C; ++c) {
      double e = emis[i * C + c];
      if (e == kNegInf) continue;
      std::size_t pp = i == 0 ? B : prev;
      std::size_t pc = i == 0 ? B : cur;
      double v = lctx(pp, pc, c) + e + suffix[i][pc * C + c];
      if (v == target) {
        chosen = c;
        break;
      }
    }
    if (chosen == C)
      throw std::logic_error("viterbi reconstruction lost the optimum");
    prev = i == 0 ? B : cur;
    cur = chosen;
    out[i] = static_cast<ClassId>(chosen);
  }
  return out;
}

}  // namespace detail

// Most likely class sequence under p(c) * prod p(f_i | c_i). Ties resolve to
// the lexicographically smallest sequence of class indices.
inline std::vector<ClassId> tag(const std::vector<Token>& sentence,
                                const ClassLM& lm) {
  if (sentence.empty()) throw std::invalid_argument("empty sentence");
  const std::size_t C = lm.class_count();
  std::vector<double> emis(sentence.size() * C, kNegInf);
  std::vector<double> row(C);
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    detail::lm_emission_row(lm, sentence[i], std::span<double>(row));
    bool any = false;
    for (std::size_t c = 0; c < C; ++c)
      if (row[c] > 0.0) {
        emis[i * C + c] = std::log(row[c]);
        any = true;
      }
    if (!any)
      throw std::runtime_error("no class with nonzero lexical probability: " +
                               sentence[i]);
  }
  detail::LogCtx lctx(lm.contextual);
  return detail::viterbi_classes(sentence.size(), C, lctx, emis, nullptr);
}

// Log score of one explicit class sequence (boundary and end included).
inline double class_sequence_logprob(const std::vector<Token>& sentence,
                                     const std::vector<ClassId>& classes,
                                     const ClassLM& lm) {
  if (sentence.size() != classes.size())
    throw std::invalid_argument("sentence/class length mismatch");
  if (sentence.empty()) throw std::invalid_argument("empty sentence");
  const std::size_t B = lm.contextual.boundary();
  std::size_t p2 = B, p1 = B;
  double total = 0.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    total += std::log(lm.contextual.at(p2, p1, classes[i]));
    total += std::log(lm.lexical.prob(sentence[i], classes[i]));
    p2 = p1;
    p1 = classes[i];
  }
  total += std::log(lm.contextual.at(p2, p1, lm.contextual.end_event()));
  return total;
}

struct LmTrainConfig {
  std::size_t max_iters = 20;
  double rel_tol = 1e-4;
  // Final add-lambda smoothing of contextual rows; keeps decode-time
  // trigrams away from exact zero.
  double ctx_lambda = 1e-6;
  int threads = 1;
};

struct TrainStats {
  std::vector<double> log_likelihood;  // one entry per EM iteration
  std::size_t iterations = 0;
  std::size_t unknown_words = 0;  // distinct words absent from the lexicon
};

// EM training of the tri-class model on raw sentences. Hidden class
// sequences are constrained to each word's lexicon class set; words absent
// from the lexicon get the full set (counted in stats->unknown_words).
inline ClassLM train_class_lm(const std::vector<std::vector<Token>>& sentences,
                              const Lexicon& lexicon,
                              const LmTrainConfig& cfg = {},
                              TrainStats* stats = nullptr) {
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (lexicon.class_count() < 2)
    throw std::invalid_argument("lexicon needs at least 2 classes");
  const std::size_t C = lexicon.class_count();
  const std::size_t S = C + 1;
  const std::size_t B = C;

  // Intern words and resolve class sets once.
  std::unordered_map<Token, std::uint32_t> ids;
  std::vector<const Token*> words;
  std::vector<std::vector<ClassId>> allowed;
  std::size_t unknown = 0;
  std::vector<std::vector<std::uint32_t>> corpus(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].empty())
      throw std::invalid_argument("empty sentence at index " +
                                  std::to_string(s));
    corpus[s].reserve(sentences[s].size());
    for (const Token& w : sentences[s]) {
      auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(words.size()));
      if (inserted) {
        words.push_back(&it->first);
        std::uint64_t m = lexicon.mask(w);
        if (m == 0) {
          m = lexicon.full_mask();
          ++unknown;
        }
        std::vector<ClassId> cs;
        for (ClassId c = 0; c < C; ++c)
          if (m & (std::uint64_t{1} << c)) cs.push_back(c);
        if (cs.empty())
          throw std::runtime_error("word has empty class set: " + w);
        allowed.push_back(std::move(cs));
      }
      corpus[s].push_back(it->second);
    }
  }
  const std::size_t W = words.size();

  // Uniform initialization: contextual rows uniform, lexical uniform per
  // class over the words that admit it.
  ContextualParams ctx(C);
  ctx.fill_uniform();
  std::vector<double> lex(W * C, 0.0);
  {
    std::vector<double> per_class(C, 0.0);
    for (std::size_t w = 0; w < W; ++w)
      for (ClassId c : allowed[w]) per_class[c] += 1.0;
    for (std::size_t w = 0; w < W; ++w)
      for (ClassId c : allowed[w]) lex[w * C + c] = 1.0 / per_class[c];
  }

  const std::size_t ctx_size = S * S * S;
  std::size_t nthreads =
      cfg.threads < 1 ? 1 : std::min<std::size_t>(cfg.threads, sentences.size());
  if (nthreads == 0) nthreads = 1;

  TrainStats local_stats;
  TrainStats& st = stats != nullptr ? *stats : local_stats;
  st.log_likelihood.clear();
  st.unknown_words = unknown;
  st.iterations = 0;

  const ClassId boundary_class = static_cast<ClassId>(B);
  const std::vector<ClassId> boundary_only{boundary_class};

  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<std::vector<double>> ctx_counts(
        nthreads, std::vector<double>(ctx_size, 0.0));
    std::vector<std::vector<double>> lex_counts(
        nthreads, std::vector<double>(W * C, 0.0));
    std::vector<double> lls(nthreads, 0.0);
    std::vector<std::exception_ptr> errors(nthreads);

    parallel_blocks(corpus.size(), static_cast<int>(nthreads),
                    [&](std::size_t blk, std::size_t lo, std::size_t hi) {
      try {
        std::vector<double>& cc = ctx_counts[blk];
        std::vector<double>& lc = lex_counts[blk];
        double ll = 0.0;
        std::vector<double> ahat, bhat, scale;
        for (std::size_t sidx = lo; sidx < hi; ++sidx) {
          const std::vector<std::uint32_t>& sent = corpus[sidx];
          const std::size_t m = sent.size();
          ahat.assign(m * S * C, 0.0);
          bhat.assign(m * S * C, 0.0);
          scale.assign(m, 0.0);
          auto A = [&](std::size_t i, std::size_t p, std::size_t c) -> double& {
            return ahat[(i * S + p) * C + c];
          };
          auto Bk = [&](std::size_t i, std::size_t p, std::size_t c) -> double& {
            return bhat[(i * S + p) * C + c];
          };
          auto emis = [&](std::size_t i, ClassId c) {
            return lex[sent[i] * C + c];
          };
          // classes admissible for the state slot "previous class" at position i
          auto prev_set = [&](std::size_t i) -> const std::vector<ClassId>& {
            return i == 0 ? boundary_only : allowed[sent[i - 1]];
          };

          // scaled forward: A(i,p,c) = alpha_i / prod_{k<=i} scale_k
          double s0 = 0.0;
          for (ClassId c : allowed[sent[0]]) {
            double v = ctx.at(B, B, c) * emis(0, c);
            A(0, B, c) = v;
            s0 += v;
          }
          if (s0 <= 0.0)
            throw std::runtime_error("sentence " + std::to_string(sidx) +
                                     " has no admissible class path");
          scale[0] = s0;
          for (ClassId c : allowed[sent[0]]) A(0, B, c) /= s0;
          for (std::size_t i = 1; i < m; ++i) {
            double si = 0.0;
            for (ClassId c : allowed[sent[i]]) {
              double e = emis(i, c);
              if (e <= 0.0) continue;
              for (ClassId p : allowed[sent[i - 1]]) {
                double acc = 0.0;
                for (ClassId p2 : prev_set(i - 1)) acc += A(i - 1, p2, p) * ctx.at(p2, p, c);
                double v = acc * e;
                A(i, p, c) = v;
                si += v;
              }
            }
            if (si <= 0.0)
              throw std::runtime_error("sentence " + std::to_string(sidx) +
                                       " has no admissible class path");
            scale[i] = si;
            for (ClassId c : allowed[sent[i]])
              for (ClassId p : allowed[sent[i - 1]]) A(i, p, c) /= si;
          }

          double zhat = 0.0;
          for (ClassId p : prev_set(m - 1))
            for (ClassId c : allowed[sent[m - 1]])
              zhat += A(m - 1, p, c) * ctx.at(p, c, B);
          if (zhat <= 0.0)
            throw std::runtime_error("sentence " + std::to_string(sidx) +
                                     " has no admissible class path");
          for (std::size_t i = 0; i < m; ++i) ll += std::log(scale[i]);
          ll += std::log(zhat);

          // scaled backward: Bk(i,p,c) = beta_i / prod_{k>i} scale_k
          for (ClassId p : prev_set(m - 1))
            for (ClassId c : allowed[sent[m - 1]]) Bk(m - 1, p, c) = ctx.at(p, c, B);
          for (std::size_t i = m - 1; i-- > 0;) {
            for (ClassId p : prev_set(i))
              for (ClassId c : allowed[sent[i]]) {
                double acc = 0.0;
                for (ClassId c2 : allowed[sent[i + 1]]) {
                  double e = emis(i + 1, c2);
                  if (e <= 0.0) continue;
                  acc += ctx.at(p, c, c2) * e * Bk(i + 1, c, c2);
                }
                Bk(i, p, c) = acc / scale[i + 1];
              }
          }

          // expected counts
          for (ClassId c : allowed[sent[0]]) {
            double g = A(0, B, c) * Bk(0, B, c) / zhat;
            cc[(B * S + B) * S + c] += g;
            lc[sent[0] * C + c] += g;
          }
          for (std::size_t i = 1; i < m; ++i) {
            for (ClassId c : allowed[sent[i]]) {
              double e = emis(i, c);
              if (e <= 0.0) continue;
              for (ClassId p : allowed[sent[i - 1]]) {
                double tail = e * Bk(i, p, c) / (zhat * scale[i]);
                if (tail == 0.0) continue;
                for (ClassId p2 : prev_set(i - 1)) {
                  double x = A(i - 1, p2, p) * ctx.at(p2, p, c) * tail;
                  cc[(static_cast<std::size_t>(p2) * S + p) * S + c] += x;
                }
                lc[sent[i] * C + c] += A(i, p, c) * Bk(i, p, c) / zhat;
              }
            }
          }
          for (ClassId p : prev_set(m - 1))
            for (ClassId c : allowed[sent[m - 1]])
              cc[(static_cast<std::size_t>(p) * S + c) * S + B] +=
                  A(m - 1, p, c) * ctx.at(p, c, B) / zhat;
        }
        lls[blk] = ll;
      } catch (...) {
        errors[blk] = std::current_exception();
      }
    });

    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);

    // merge per-block accumulators in block order
    for (std::size_t blk = 1; blk < nthreads; ++blk) {
      for (std::size_t k = 0; k < ctx_size; ++k)
        ctx_counts[0][k] += ctx_counts[blk][k];
      for (std::size_t k = 0; k < W * C; ++k)
        lex_counts[0][k] += lex_counts[blk][k];
    }
    double ll = 0.0;
    for (double v : lls) ll += v;
    st.log_likelihood.push_back(ll);
    st.iterations = iter;

    // M-step
    for (std::size_t p2 = 0; p2 < S; ++p2)
      for (std::size_t p1 = 0; p1 < S; ++p1) {
        double tot = 0.0;
        for (std::size_t nx = 0; nx <= C; ++nx)
          tot += ctx_counts[0][(p2 * S + p1) * S + nx];
        if (tot > 0.0) {
          for (std::size_t nx = 0; nx <= C; ++nx)
            ctx.at(p2, p1, nx) = ctx_counts[0][(p2 * S + p1) * S + nx] / tot;
        } else {
          for (std::size_t nx = 0; nx <= C; ++nx)
            ctx.at(p2, p1, nx) = 1.0 / static_cast<double>(C + 1);
        }
      }
    std::vector<double> class_tot(C, 0.0);
    for (std::size_t w = 0; w < W; ++w)
      for (ClassId c : allowed[w]) class_tot[c] += lex_counts[0][w * C + c];
    for (std::size_t w = 0; w < W; ++w)
      for (ClassId c : allowed[w])
        lex[w * C + c] =
            class_tot[c] > 0.0 ? lex_counts[0][w * C + c] / class_tot[c] : 0.0;

    if (iter >= 2) {
      double prev = st.log_likelihood[iter - 2];
      double gain = ll - prev;
      if (gain < cfg.rel_tol * std::fabs(prev)) break;
    }
  }

  ctx.smooth_rows(cfg.ctx_lambda);

  ClassLM lm;
  lm.contextual = std::move(ctx);
  lm.lexical.C = C;
  for (std::size_t w = 0; w < W; ++w) {
    std::vector<std::pair<ClassId, double>> row;
    for (ClassId c : allowed[w])
      if (lex[w * C + c] > 0.0) row.emplace_back(c, lex[w * C + c]);
    if (!row.empty()) lm.lexical.table.emplace(*words[w], std::move(row));
  }
  lm.lexicon = lexicon;
  return lm;
}

// --- model file format -----------------------------------------------------
//
//   TRICLASS v1
//   CLASSES NAME1,NAME2,...
//   CTX <p2> <p1> <next> <prob>     (labels; <B> = boundary, <E> = end)
//   LEX <word> <class> <prob>
//
// Probabilities are printed with 17 significant digits so a save/load cycle
// reproduces the exact doubles.

inline void save_class_lm(const ClassLM& lm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const std::size_t C = lm.class_count();
  auto prev_label = [&](std::size_t i) -> std::string {
    return i == C ? "<B>" : lm.lexicon.class_name(static_cast<ClassId>(i));
  };
  auto next_label = [&](std::size_t i) -> std::string {
    return i == C ? "<E>" : lm.lexicon.class_name(static_cast<ClassId>(i));
  };
  out << "TRICLASS v1\n";
  out << "CLASSES " << join(lm.lexicon.class_names(), ',') << "\n";
  for (std::size_t p2 = 0; p2 <= C; ++p2)
    for (std::size_t p1 = 0; p1 <= C; ++p1)
      for (std::size_t nx = 0; nx <= C; ++nx)
        out << "CTX " << prev_label(p2) << ' ' << prev_label(p1) << ' '
            << next_label(nx) << ' ' << g17(lm.contextual.at(p2, p1, nx))
            << "\n";
  std::vector<const Token*> words;
  words.reserve(lm.lexical.table.size());
  for (const auto& [w, row] : lm.lexical.table) words.push_back(&w);
  std::sort(words.begin(), words.end(),
            [](const Token* a, const Token* b) { return *a < *b; });
  for (const Token* w : words)
    for (const auto& [c, p] : lm.lexical.table.at(*w))
      out << "LEX " << *w << ' ' << lm.lexicon.class_name(c) << ' ' << g17(p)
          << "\n";
}

inline ClassLM load_class_lm(const std::string& path) {
  std::string content = detail::read_file(path);
  std::vector<std::string_view> lines = detail::lines_of(content);
  if (lines.empty() || lines[0] != "TRICLASS v1")
    throw ParseError(path, 1, "expected TRICLASS v1 header");
  if (lines.size() < 2 || lines[1].substr(0, 8) != "CLASSES ")
    throw ParseError(path, 2, "expected CLASSES line");
  std::vector<std::string> names;
  for (std::string_view n : split(lines[1].substr(8), ',')) names.emplace_back(n);
  Lexicon lex_names(names);  // class inventory; word entries filled from LEX
  const std::size_t C = names.size();

  ClassLM lm;
  lm.contextual = ContextualParams(C);
  lm.lexical.C = C;

  auto prev_index = [&](std::string_view s, std::size_t lineno) -> std::size_t {
    if (s == "<B>") return C;
    auto id = lex_names.class_id(s);
    if (!id) throw ParseError(path, lineno, "unknown class: " + std::string(s));
    return *id;
  };
  auto next_index = [&](std::string_view s, std::size_t lineno) -> std::size_t {
    if (s == "<E>") return C;
    auto id = lex_names.class_id(s);
    if (!id) throw ParseError(path, lineno, "unknown class: " + std::string(s));
    return *id;
  };

  for (std::size_t i = 2; i < lines.size(); ++i) {
    std::size_t lineno = i + 1;
    std::vector<std::string_view> f = split(lines[i], ' ');
    if (f.size() == 5 && f[0] == "CTX") {
      lm.contextual.at(prev_index(f[1], lineno), prev_index(f[2], lineno),
                       next_index(f[3], lineno)) = std::stod(std::string(f[4]));
    } else if (f.size() == 4 && f[0] == "LEX") {
      auto id = lex_names.class_id(f[2]);
      if (!id)
        throw ParseError(path, lineno, "unknown class: " + std::string(f[2]));
      Token w(f[1]);
      lm.lexical.table[w].emplace_back(*id, std::stod(std::string(f[3])));
      lex_names.add(w, *id);
    } else {
      throw ParseError(path, lineno, "unrecognized record");
    }
  }
  for (auto& [w, row] : lm.lexical.table)
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  lm.lexicon = std::move(lex_names);
  return lm;
}

}  // namespace transdict

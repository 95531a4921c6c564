// Bi-lexical translation parameters. Joint parameters p(f,c|e) are trained
// by EM under a uniform-alignment model (every French position links to one
// English position or to the null token), then transformed into conditional
// parameters p(f|c,e). Sentence scoring averages p(f|c,e_j) over the English
// sentence and combines the result with the pure-LM lexical backoff p(f|c)
// under one of three smoothing schemes.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transdict/classlm.hpp"
#include "transdict/corpus.hpp"
#include "transdict/util.hpp"

namespace transdict {

inline const std::string kNullToken = "<NULL>";

class TokenIndex {
public:
  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }
  std::optional<std::uint32_t> find(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct TaggedPair {
  SentencePair pair;
  std::vector<ClassId> classes;  // one class per French token
};

namespace detail {
// (f, c, e) packed into one key: e in the high bits so conditioners group by
// shifting. f: 32 bits, c: 8 bits, e: 24 bits.
inline std::uint64_t fce_key(std::uint32_t f, ClassId c, std::uint32_t e) {
  return (static_cast<std::uint64_t>(e) << 40) |
         (static_cast<std::uint64_t>(c & 0xff) << 32) | f;
}
}  // namespace detail

// Sparse joint parameters p(f, c | e); english id 0 is the null token.
struct JointParams {
  std::vector<std::string> class_names;
  TokenIndex french;
  TokenIndex english;
  std::unordered_map<std::uint64_t, double> table;

  JointParams() { english.intern(kNullToken); }

  double prob_ids(std::uint32_t f, ClassId c, std::uint32_t e) const {
    auto it = table.find(detail::fce_key(f, c, e));
    return it == table.end() ? 0.0 : it->second;
  }
  double prob(const Token& f, ClassId c, const Token& e) const {
    auto fi = french.find(f);
    auto ei = english.find(e);
    if (!fi || !ei) return 0.0;
    return prob_ids(*fi, c, *ei);
  }

  // Largest |sum_{f,c} p(f,c|e) - 1| over conditioning english tokens.
  double max_conditioner_deviation() const {
    std::unordered_map<std::uint32_t, double> sums;
    for (const auto& [k, v] : table) sums[static_cast<std::uint32_t>(k >> 40)] += v;
    double worst = 0.0;
    for (const auto& [e, s] : sums) worst = std::max(worst, std::fabs(s - 1.0));
    return worst;
  }
};

// Sparse conditional parameters p(f | c, e); rows are (c, e) pairs.
struct BiLexicalParams {
  std::vector<std::string> class_names;
  TokenIndex french;
  TokenIndex english;
  std::unordered_map<std::uint64_t, double> table;

  BiLexicalParams() { english.intern(kNullToken); }

  double prob_ids(std::uint32_t f, ClassId c, std::uint32_t e) const {
    auto it = table.find(detail::fce_key(f, c, e));
    return it == table.end() ? 0.0 : it->second;
  }
  double prob(const Token& f, ClassId c, const Token& e) const {
    auto fi = french.find(f);
    auto ei = english.find(e);
    if (!fi || !ei) return 0.0;
    return prob_ids(*fi, c, *ei);
  }

  // Largest |sum_f p(f|c,e) - 1| over (c, e) rows with support.
  double max_row_deviation() const {
    std::unordered_map<std::uint64_t, double> sums;
    for (const auto& [k, v] : table) sums[k >> 32] += v;
    double worst = 0.0;
    for (const auto& [ce, s] : sums) worst = std::max(worst, std::fabs(s - 1.0));
    return worst;
  }
};

struct TransModel {
  BiLexicalParams bilexical;
  ClassLM lm;
};

struct SmoothingConfig {
  enum class Method { kInterpolate, kMaximum, kETest };
  Method method = Method::kInterpolate;
  double weight = 0.85;     // interpolate only
  double threshold = 0.30;  // e_test only

  static SmoothingConfig interpolate(double w) {
    if (w < 0.0 || w > 1.0)
      throw std::invalid_argument("interpolation weight must be in [0,1]");
    SmoothingConfig c;
    c.method = Method::kInterpolate;
    c.weight = w;
    return c;
  }
  static SmoothingConfig maximum() {
    SmoothingConfig c;
    c.method = Method::kMaximum;
    return c;
  }
  static SmoothingConfig e_test(double threshold) {
    if (threshold <= 0.0)
      throw std::invalid_argument("e_test threshold must be positive");
    SmoothingConfig c;
    c.method = Method::kETest;
    c.threshold = threshold;
    return c;
  }

  std::string label() const {
    switch (method) {
      case Method::kInterpolate: return "interp:" + g17(weight);
      case Method::kMaximum: return "max";
      case Method::kETest: return "etest:" + g17(threshold);
    }
    return "?";
  }
};

// Spec grammar: "interp:W" | "max" | "etest:T".
inline SmoothingConfig parse_smoothing_spec(const std::string& spec) {
  if (spec == "max") return SmoothingConfig::maximum();
  auto parse_num = [&](std::string_view s) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(std::string(s), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad smoothing spec: " + spec);
    }
    if (used != s.size()) throw std::invalid_argument("bad smoothing spec: " + spec);
    return v;
  };
  static constexpr std::string_view kInterp = "interp:";
  static constexpr std::string_view kEtest = "etest:";
  std::string_view sv(spec);
  if (sv.substr(0, kInterp.size()) == kInterp && sv.size() > kInterp.size())
    return SmoothingConfig::interpolate(parse_num(sv.substr(kInterp.size())));
  if (sv.substr(0, kEtest.size()) == kEtest && sv.size() > kEtest.size())
    return SmoothingConfig::e_test(parse_num(sv.substr(kEtest.size())));
  throw std::invalid_argument("bad smoothing spec: " + spec);
}

// Number of alignment vectors for a sentence pair: (|e|+1)^|f|.
inline std::uint64_t alignment_count(std::size_t f_len, std::size_t e_len) {
  if (f_len < 1) throw std::invalid_argument("f_len must be >= 1");
  std::uint64_t base = static_cast<std::uint64_t>(e_len) + 1;
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < f_len; ++i) {
    if (__builtin_mul_overflow(out, base, &out))
      throw std::overflow_error("alignment count exceeds 64 bits; use "
                                "log_alignment_count");
  }
  return out;
}

inline double log_alignment_count(std::size_t f_len, std::size_t e_len) {
  if (f_len < 1) throw std::invalid_argument("f_len must be >= 1");
  return static_cast<double>(f_len) * std::log(static_cast<double>(e_len) + 1.0);
}

struct TmTrainConfig {
  std::size_t max_iters = 10;
  double rel_tol = 1e-4;
  double prune_floor = 1e-9;
  int threads = 1;
};

// Corpus log-likelihood of tagged pairs under joint parameters:
// sum_i log( sum_j p(f_i, c_i | e_j) / (|e|+1) ).
inline double bilexical_corpus_loglik(const std::vector<TaggedPair>& pairs,
                                      const JointParams& params) {
  double ll = 0.0;
  for (const TaggedPair& tp : pairs) {
    const std::size_t elen = tp.pair.english.size();
    for (std::size_t i = 0; i < tp.pair.french.size(); ++i) {
      double denom = params.prob(tp.pair.french[i], tp.classes[i], kNullToken);
      for (const Token& e : tp.pair.english)
        denom += params.prob(tp.pair.french[i], tp.classes[i], e);
      ll += std::log(denom) - std::log(static_cast<double>(elen) + 1.0);
    }
  }
  return ll;
}

// EM estimation of p(f, c | e) from tagged pairs under the uniform-alignment
// model. The null token participates like any english word. Initialization
// is uniform over each conditioner's co-occurrence support.
inline JointParams train_bilexical(const std::vector<TaggedPair>& pairs,
                                   const TmTrainConfig& cfg = {},
                                   TrainStats* stats = nullptr) {
  if (pairs.empty()) throw std::invalid_argument("empty training set");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  JointParams params;
  // interned corpus
  std::vector<std::vector<std::uint32_t>> fr(pairs.size());
  std::vector<std::vector<std::uint32_t>> en(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const TaggedPair& tp = pairs[k];
    if (tp.classes.size() != tp.pair.french.size())
      throw std::invalid_argument("class sequence length mismatch at pair " +
                                  std::to_string(k));
    if (tp.pair.french.empty() || tp.pair.english.empty())
      throw std::invalid_argument("empty sentence at pair " + std::to_string(k));
    fr[k].reserve(tp.pair.french.size());
    for (const Token& w : tp.pair.french) fr[k].push_back(params.french.intern(w));
    en[k].reserve(tp.pair.english.size());
    for (const Token& w : tp.pair.english) en[k].push_back(params.english.intern(w));
  }

  // uniform init over co-occurrence support
  for (std::size_t k = 0; k < pairs.size(); ++k)
    for (std::size_t i = 0; i < fr[k].size(); ++i) {
      ClassId c = pairs[k].classes[i];
      params.table.emplace(detail::fce_key(fr[k][i], c, 0), 0.0);
      for (std::uint32_t e : en[k])
        params.table.emplace(detail::fce_key(fr[k][i], c, e), 0.0);
    }
  {
    std::unordered_map<std::uint32_t, double> support(params.english.size());
    for (const auto& [key, v] : params.table)
      support[static_cast<std::uint32_t>(key >> 40)] += 1.0;
    for (auto& [key, v] : params.table)
      v = 1.0 / support[static_cast<std::uint32_t>(key >> 40)];
  }

  std::size_t nthreads =
      cfg.threads < 1 ? 1 : std::min<std::size_t>(cfg.threads, pairs.size());
  TrainStats local_stats;
  TrainStats& st = stats != nullptr ? *stats : local_stats;
  st.log_likelihood.clear();
  st.iterations = 0;

  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<std::unordered_map<std::uint64_t, double>> counts(nthreads);
    std::vector<double> lls(nthreads, 0.0);
    std::vector<std::exception_ptr> errors(nthreads);

    parallel_blocks(pairs.size(), static_cast<int>(nthreads),
                    [&](std::size_t blk, std::size_t lo, std::size_t hi) {
      try {
        auto& cnt = counts[blk];
        double ll = 0.0;
        std::vector<double> post;
        for (std::size_t k = lo; k < hi; ++k) {
          const std::size_t elen = en[k].size();
          for (std::size_t i = 0; i < fr[k].size(); ++i) {
            ClassId c = pairs[k].classes[i];
            post.assign(elen + 1, 0.0);
            double denom = 0.0;
            post[0] = params.prob_ids(fr[k][i], c, 0);
            denom += post[0];
            for (std::size_t j = 0; j < elen; ++j) {
              post[j + 1] = params.prob_ids(fr[k][i], c, en[k][j]);
              denom += post[j + 1];
            }
            if (denom <= 0.0)
              throw std::runtime_error(
                  "zero posterior mass at pair " + std::to_string(k) +
                  " position " + std::to_string(i) +
                  " (prune_floor too aggressive?)");
            if (post[0] > 0.0)
              cnt[detail::fce_key(fr[k][i], c, 0)] += post[0] / denom;
            for (std::size_t j = 0; j < elen; ++j)
              if (post[j + 1] > 0.0)
                cnt[detail::fce_key(fr[k][i], c, en[k][j])] += post[j + 1] / denom;
            ll += std::log(denom) - std::log(static_cast<double>(elen) + 1.0);
          }
        }
        lls[blk] = ll;
      } catch (...) {
        errors[blk] = std::current_exception();
      }
    });
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);

    for (std::size_t blk = 1; blk < nthreads; ++blk)
      for (const auto& [k, v] : counts[blk]) counts[0][k] += v;
    double ll = 0.0;
    for (double v : lls) ll += v;
    st.log_likelihood.push_back(ll);
    st.iterations = iter;

    // M-step: normalize per conditioner, prune, renormalize survivors.
    std::unordered_map<std::uint32_t, double> totals(params.english.size());
    for (const auto& [key, v] : counts[0])
      totals[static_cast<std::uint32_t>(key >> 40)] += v;
    std::unordered_map<std::uint64_t, double> next(counts[0].size());
    std::unordered_map<std::uint32_t, double> kept(params.english.size());
    for (const auto& [key, v] : counts[0]) {
      double tot = totals[static_cast<std::uint32_t>(key >> 40)];
      if (tot <= 0.0) continue;
      double p = v / tot;
      if (p >= cfg.prune_floor) {
        next.emplace(key, p);
        kept[static_cast<std::uint32_t>(key >> 40)] += p;
      }
    }
    for (auto& [key, v] : next) v /= kept[static_cast<std::uint32_t>(key >> 40)];
    params.table = std::move(next);

    if (iter >= 2) {
      double prev = st.log_likelihood[iter - 2];
      if (ll - prev < cfg.rel_tol * std::fabs(prev)) break;
    }
  }
  return params;
}

// p(f | c, e) = p(f, c | e) / sum_f p(f, c | e). Rows with zero mass are
// absent from the result.
inline BiLexicalParams to_bilexical(const JointParams& joint) {
  BiLexicalParams out;
  out.class_names = joint.class_names;
  out.french = joint.french;
  out.english = joint.english;
  std::unordered_map<std::uint64_t, double> row_sums;
  for (const auto& [key, v] : joint.table) row_sums[key >> 32] += v;
  out.table.reserve(joint.table.size());
  for (const auto& [key, v] : joint.table) {
    double s = row_sums[key >> 32];
    if (s > 0.0 && v > 0.0) out.table.emplace(key, v / s);
  }
  return out;
}

// Sentence-conditioned lexical probability:
// p(f | c, e_sent) = sum_{j=0..|e|} p(f | c, e_j) / (|e| + 1), j=0 = null.
inline double sentence_lexical(const Token& f, ClassId c,
                               std::span<const Token> e_sent,
                               const BiLexicalParams& params) {
  auto fi = params.french.find(f);
  if (!fi) return 0.0;
  double sum = params.prob_ids(*fi, c, 0);
  for (const Token& e : e_sent) {
    auto ei = params.english.find(e);
    if (ei) sum += params.prob_ids(*fi, c, *ei);
  }
  return sum / (static_cast<double>(e_sent.size()) + 1.0);
}

// Combined translation/backoff score for one (f, c) against an English
// sentence. Only the interpolate method returns a normalized distribution;
// maximum and e_test are unnormalized scores.
inline double smoothed_score(const Token& f, ClassId c,
                             std::span<const Token> e_sent,
                             const TransModel& model,
                             const SmoothingConfig& cfg) {
  double p_trans = sentence_lexical(f, c, e_sent, model.bilexical);
  double p_lex = model.lm.lexical.prob(f, c);
  switch (cfg.method) {
    case SmoothingConfig::Method::kInterpolate:
      return cfg.weight * p_trans + (1.0 - cfg.weight) * p_lex;
    case SmoothingConfig::Method::kMaximum:
      return std::max(p_trans, p_lex);
    case SmoothingConfig::Method::kETest: {
      if (p_trans <= 0.0) return p_lex;  // no translation evidence at all
      auto fi = model.bilexical.french.find(f);
      double best = model.bilexical.prob_ids(*fi, c, 0);
      for (const Token& e : e_sent) {
        auto ei = model.bilexical.english.find(e);
        if (ei) best = std::max(best, model.bilexical.prob_ids(*fi, c, *ei));
      }
      return best / p_trans > cfg.threshold ? p_trans : p_lex;
    }
  }
  return 0.0;
}

// Forward-sum sentence log score under the translation model: the pure LM
// with lexical emissions replaced by smoothed sentence-conditioned scores.
inline double tm_sentence_logprob(const SentencePair& pair,
                                  const TransModel& model,
                                  const SmoothingConfig& cfg) {
  if (pair.french.empty()) throw std::invalid_argument("empty sentence");
  const std::size_t C = model.lm.class_count();
  for (const Token& w : pair.french) {
    if (!model.lm.lexicon.contains(w) && model.lm.lexical.row(w) == nullptr &&
        !model.bilexical.french.find(w))
      throw std::runtime_error("word not in lexicon or model: " + w);
  }
  std::span<const Token> e_sent(pair.english);
  return forward_logprob_over_classes(
      pair.french.size(), model.lm.contextual,
      [&](std::size_t i, std::span<double> out) {
        for (std::size_t c = 0; c < C; ++c)
          out[c] = smoothed_score(pair.french[i], static_cast<ClassId>(c),
                                  e_sent, model, cfg);
      });
}

// --- model file format -----------------------------------------------------
//
//   BILEX v1
//   CLASSES NAME1,NAME2,...
//   J <french> <class> <english> <prob>     (english <NULL> = null token)

inline void save_joint_params(const JointParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "BILEX v1\n";
  out << "CLASSES " << join(params.class_names, ',') << "\n";
  struct Rec {
    const std::string* f;
    const std::string* e;
    ClassId c;
    double p;
  };
  std::vector<Rec> recs;
  recs.reserve(params.table.size());
  for (const auto& [key, v] : params.table) {
    std::uint32_t f = static_cast<std::uint32_t>(key & 0xffffffffu);
    ClassId c = static_cast<ClassId>((key >> 32) & 0xff);
    std::uint32_t e = static_cast<std::uint32_t>(key >> 40);
    recs.push_back({&params.french.name(f), &params.english.name(e), c, v});
  }
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    if (*a.e != *b.e) return *a.e < *b.e;
    if (a.c != b.c) return a.c < b.c;
    return *a.f < *b.f;
  });
  for (const Rec& r : recs)
    out << "J " << *r.f << ' ' << params.class_names.at(r.c) << ' ' << *r.e
        << ' ' << g17(r.p) << "\n";
}

inline JointParams load_joint_params(const std::string& path) {
  std::string content = detail::read_file(path);
  std::vector<std::string_view> lines = detail::lines_of(content);
  if (lines.empty() || lines[0] != "BILEX v1")
    throw ParseError(path, 1, "expected BILEX v1 header");
  if (lines.size() < 2 || lines[1].substr(0, 8) != "CLASSES ")
    throw ParseError(path, 2, "expected CLASSES line");
  JointParams params;
  std::unordered_map<std::string, ClassId> class_ids;
  for (std::string_view n : split(lines[1].substr(8), ',')) {
    class_ids.emplace(std::string(n),
                      static_cast<ClassId>(params.class_names.size()));
    params.class_names.emplace_back(n);
  }
  for (std::size_t i = 2; i < lines.size(); ++i) {
    std::size_t lineno = i + 1;
    std::vector<std::string_view> f = split(lines[i], ' ');
    if (f.size() != 5 || f[0] != "J")
      throw ParseError(path, lineno, "unrecognized record");
    auto cit = class_ids.find(std::string(f[2]));
    if (cit == class_ids.end())
      throw ParseError(path, lineno, "unknown class: " + std::string(f[2]));
    std::uint32_t fid = params.french.intern(std::string(f[1]));
    std::uint32_t eid = params.english.intern(std::string(f[3]));
    params.table[detail::fce_key(fid, cit->second, eid)] =
        std::stod(std::string(f[4]));
  }
  return params;
}

}  // namespace transdict

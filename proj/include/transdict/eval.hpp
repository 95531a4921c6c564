// Word accuracy with content/function error accounting, and perplexity.
// Evaluation is positional (isolated-word dictation): hypothesis and
// reference sentences must have equal lengths.
#pragma once

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "transdict/classlm.hpp"
#include "transdict/transmodel.hpp"
#include "transdict/util.hpp"

namespace transdict {

struct EvalReport {
  std::size_t words_total = 0;
  std::size_t words_correct = 0;
  std::size_t content_errors = 0;
  std::size_t function_errors = 0;
  // Errors whose reference class is PUNCT, reported separately for
  // information; they are already included in the content/function split.
  std::size_t punct_errors = 0;
  std::optional<double> perplexity;
};

// Content classes present in this inventory, by conventional name.
inline std::set<ClassId> default_content_classes(const Lexicon& lex) {
  std::set<ClassId> out;
  for (const char* name : {"NOUN", "VERB", "ADJ", "ADV", "PROPER", "NUM"}) {
    auto id = lex.class_id(name);
    if (id) out.insert(*id);
  }
  return out;
}

// Position-wise exact-match accuracy. An error counts as a content error
// when the reference word's Viterbi-tagged class is in content_classes.
inline EvalReport word_accuracy(const std::vector<std::vector<Token>>& hyps,
                                const std::vector<std::vector<Token>>& refs,
                                const std::set<ClassId>& content_classes,
                                const ClassLM& lm) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument("hypothesis/reference sentence count mismatch");
  EvalReport rep;
  auto punct_id = lm.lexicon.class_id("PUNCT");
  for (std::size_t s = 0; s < refs.size(); ++s) {
    if (hyps[s].size() != refs[s].size())
      throw std::invalid_argument("length mismatch at sentence " +
                                  std::to_string(s));
    std::vector<ClassId> ref_classes = tag(refs[s], lm);
    for (std::size_t i = 0; i < refs[s].size(); ++i) {
      ++rep.words_total;
      if (hyps[s][i] == refs[s][i]) {
        ++rep.words_correct;
        continue;
      }
      if (content_classes.count(ref_classes[i]))
        ++rep.content_errors;
      else
        ++rep.function_errors;
      if (punct_id && ref_classes[i] == *punct_id) ++rep.punct_errors;
    }
  }
  return rep;
}

struct PerplexityResult {
  double value = 0.0;
  std::vector<std::size_t> infinite_sentences;  // indices with -inf log prob
};

// exp(-(sum of sentence log probs) / (french tokens + sentences)); the end
// event counts once per sentence in the normalizer. Requires interpolate
// smoothing: the other schemes are unnormalized and admit no perplexity.
inline PerplexityResult perplexity(const std::vector<SentencePair>& pairs,
                                   const TransModel& model,
                                   const SmoothingConfig& cfg) {
  if (cfg.method != SmoothingConfig::Method::kInterpolate)
    throw std::invalid_argument(
        "perplexity requires interpolate smoothing (normalized scores)");
  PerplexityResult r;
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    double lp = tm_sentence_logprob(pairs[s], model, cfg);
    if (lp == kNegInf) r.infinite_sentences.push_back(s);
    total += lp;
    tokens += pairs[s].french.size();
  }
  if (!r.infinite_sentences.empty()) {
    r.value = kInf;
    return r;
  }
  r.value = std::exp(-total / static_cast<double>(tokens + pairs.size()));
  return r;
}

inline std::string format_percent(std::size_t num, std::size_t den) {
  char buf[32];
  double pct = den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
  std::snprintf(buf, sizeof buf, "%.1f%%", pct);
  return buf;
}

// Aligned summary table plus a machine-readable key=value block.
inline std::string format_report(const EvalReport& rep,
                                 const std::string& model_label) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-18s %s\n", "Model", "Words Correct",
                "Perplexity");
  out += line;
  std::string correct = std::to_string(rep.words_correct) + "/" +
                        std::to_string(rep.words_total) + " (" +
                        format_percent(rep.words_correct, rep.words_total) + ")";
  std::string ppl = rep.perplexity ? (std::isinf(*rep.perplexity)
                                          ? std::string("inf")
                                          : g17(*rep.perplexity))
                                   : std::string("--");
  std::snprintf(line, sizeof line, "%-22s %-18s %s\n", model_label.c_str(),
                correct.c_str(), ppl.c_str());
  out += line;
  out += "\n";
  out += "words_total=" + std::to_string(rep.words_total) + "\n";
  out += "words_correct=" + std::to_string(rep.words_correct) + "\n";
  std::size_t errors = rep.words_total - rep.words_correct;
  out += "word_errors=" + std::to_string(errors) + "\n";
  out += "content_errors=" + std::to_string(rep.content_errors) + "\n";
  out += "function_errors=" + std::to_string(rep.function_errors) + "\n";
  out += "punctuation_errors=" + std::to_string(rep.punct_errors) + "\n";
  if (rep.perplexity) out += "perplexity=" + ppl + "\n";
  return out;
}

}  // namespace transdict

// Synthetic bilingual corpus generator. Samples a ground-truth model
// (contextual class trigrams, concentrated bi-lexical translation rows,
// random pronunciations), then samples sentence pairs from it. Everything is
// driven by one seed, so corpora are byte-reproducible, and the ground-truth
// tables are kept for parameter-recovery checks.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "transdict/classlm.hpp"
#include "transdict/corpus.hpp"
#include "transdict/phonosim.hpp"
#include "transdict/rng.hpp"
#include "transdict/util.hpp"

namespace transdict {

struct SynthConfig {
  std::size_t french_vocab = 200;
  std::size_t english_vocab = 200;
  std::size_t classes = 5;
  // Ground-truth mass on the designated translation of each (class, english
  // word) pair; 1.0 makes the mapping deterministic.
  double concentration = 0.9;
  // Fraction of French words carrying a second admissible class.
  double ambiguity = 0.2;
  std::size_t train_pairs = 5000;
  std::size_t test_pairs = 50;
  std::size_t train_min_len = 8;
  std::size_t train_max_len = 20;
  std::size_t test_min_len = 15;
  std::size_t test_max_len = 20;
  std::size_t phone_symbols = 12;
  std::size_t pron_min = 3;
  std::size_t pron_max = 6;
  std::uint64_t seed = 1;
};

struct SynthData {
  std::vector<SentencePair> train;
  std::vector<SentencePair> test;
  Lexicon lexicon;
  PhoneticDict dict;
  std::vector<Token> french_words;
  std::vector<Token> english_words;
  // Per class: French word ids admitting that class.
  std::vector<std::vector<std::uint32_t>> class_words;
  // truth_translation[c][e] = French word id the pair (c, e) concentrates on.
  std::vector<std::vector<std::uint32_t>> truth_translation;
  // Sampled (class, english word) link counts over the training half.
  std::map<std::pair<ClassId, std::uint32_t>, std::size_t> link_counts;
  // Ground-truth contextual rows over real classes: [(p2*(C+1)+p1)*C + c].
  std::vector<double> truth_contextual;
  double concentration = 0.0;
};

namespace detail {

inline std::vector<std::string> synth_class_names(std::size_t n) {
  static const char* kStandard[] = {"NOUN", "VERB", "ADJ",    "ADV",    "PRON",
                                    "DET",  "PREP", "CONJ",   "NUM",    "AUX",
                                    "PROPER", "INTERJ", "PART", "PUNCT", "OTHER"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(i < 15 ? kStandard[i] : "CLS" + std::to_string(i));
  return out;
}

inline Token padded_name(const char* prefix, std::size_t i, std::size_t width) {
  std::string s = std::to_string(i);
  while (s.size() < width) s.insert(s.begin(), '0');
  return prefix + s;
}

}  // namespace detail

inline SynthData synthesize(const SynthConfig& cfg) {
  if (cfg.classes < 2 || cfg.classes > 15 + 49)
    throw std::invalid_argument("class count out of range");
  if (cfg.french_vocab < cfg.classes)
    throw std::invalid_argument("french vocabulary smaller than class count");
  if (cfg.english_vocab < 1) throw std::invalid_argument("empty english vocabulary");
  if (cfg.train_min_len < 1 || cfg.train_min_len > cfg.train_max_len ||
      cfg.test_min_len < 1 || cfg.test_min_len > cfg.test_max_len)
    throw std::invalid_argument("bad sentence length range");
  if (cfg.pron_min < 1 || cfg.pron_min > cfg.pron_max)
    throw std::invalid_argument("bad pronunciation length range");
  if (cfg.concentration <= 0.0 || cfg.concentration > 1.0)
    throw std::invalid_argument("concentration must be in (0,1]");
  if (cfg.ambiguity < 0.0 || cfg.ambiguity >= 1.0)
    throw std::invalid_argument("ambiguity must be in [0,1)");

  const std::size_t C = cfg.classes;
  Rng rng(cfg.seed);
  SynthData out;
  out.concentration = cfg.concentration;
  out.lexicon = Lexicon(detail::synth_class_names(C));

  const std::size_t fw = std::to_string(cfg.french_vocab - 1).size();
  const std::size_t ew = std::to_string(cfg.english_vocab - 1).size();
  for (std::size_t i = 0; i < cfg.french_vocab; ++i)
    out.french_words.push_back(detail::padded_name("f", i, fw));
  for (std::size_t i = 0; i < cfg.english_vocab; ++i)
    out.english_words.push_back(detail::padded_name("e", i, ew));

  // class assignment: first C words pin one class each so none is empty
  out.class_words.assign(C, {});
  for (std::size_t i = 0; i < cfg.french_vocab; ++i) {
    ClassId primary = i < C ? static_cast<ClassId>(i)
                            : static_cast<ClassId>(rng.uniform(C));
    out.lexicon.add(out.french_words[i], primary);
    out.class_words[primary].push_back(static_cast<std::uint32_t>(i));
    if (rng.unit() < cfg.ambiguity) {
      ClassId secondary = static_cast<ClassId>(rng.uniform(C - 1));
      if (secondary >= primary) ++secondary;
      out.lexicon.add(out.french_words[i], secondary);
      out.class_words[secondary].push_back(static_cast<std::uint32_t>(i));
    }
  }

  // pronunciations over a small inventory; collisions become homophones
  for (std::size_t p = 0; p < cfg.phone_symbols; ++p)
    out.dict.inventory.intern("p" + std::to_string(p));
  for (std::size_t i = 0; i < cfg.french_vocab; ++i) {
    std::size_t len = cfg.pron_min + rng.uniform(cfg.pron_max - cfg.pron_min + 1);
    PhoneString ps(len);
    for (std::size_t k = 0; k < len; ++k)
      ps[k] = static_cast<Phone>(rng.uniform(cfg.phone_symbols));
    out.dict.add_interned(out.french_words[i], std::move(ps));
  }

  // ground-truth contextual rows (over real classes; sentence length is
  // forced by the sampler, so no end event here)
  const std::size_t S = C + 1;
  out.truth_contextual.assign(S * S * C, 0.0);
  for (std::size_t p2 = 0; p2 < S; ++p2)
    for (std::size_t p1 = 0; p1 < S; ++p1) {
      double tot = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        double w = rng.exponential();
        out.truth_contextual[(p2 * S + p1) * C + c] = w;
        tot += w;
      }
      for (std::size_t c = 0; c < C; ++c)
        out.truth_contextual[(p2 * S + p1) * C + c] /= tot;
    }

  // designated translations
  out.truth_translation.assign(C, std::vector<std::uint32_t>(cfg.english_vocab, 0));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t e = 0; e < cfg.english_vocab; ++e)
      out.truth_translation[c][e] =
          out.class_words[c][rng.uniform(out.class_words[c].size())];

  // samples one French word from the ground-truth row for (c, linked english
  // word); no link means the broad null row
  constexpr std::uint32_t kNullLink = static_cast<std::uint32_t>(-1);
  auto sample_french = [&](ClassId c, std::uint32_t e_word) -> std::uint32_t {
    const std::vector<std::uint32_t>& cw = out.class_words[c];
    if (e_word == kNullLink) return cw[rng.uniform(cw.size())];
    std::uint32_t designated = out.truth_translation[c][e_word];
    if (cw.size() == 1 || rng.unit() < cfg.concentration) return designated;
    std::size_t pick = rng.uniform(cw.size() - 1);
    for (std::size_t k = 0, seen = 0; k < cw.size(); ++k) {
      if (cw[k] == designated) continue;
      if (seen++ == pick) return cw[k];
    }
    return designated;  // unreachable
  };

  auto sample_pair = [&](std::size_t min_len, std::size_t max_len,
                         bool count_links) {
    std::size_t lf = min_len + rng.uniform(max_len - min_len + 1);
    std::size_t le = lf >= 4 ? lf - 3 + rng.uniform(7) : 1 + rng.uniform(lf + 3);
    SentencePair pair;
    std::vector<std::uint32_t> eids(le);
    for (std::size_t j = 0; j < le; ++j) {
      eids[j] = static_cast<std::uint32_t>(rng.uniform(cfg.english_vocab));
      pair.english.push_back(out.english_words[eids[j]]);
    }
    std::size_t p2 = C, p1 = C;  // boundary
    for (std::size_t i = 0; i < lf; ++i) {
      double u = rng.unit();
      double acc = 0.0;
      ClassId c = 0;
      for (std::size_t k = 0; k < C; ++k) {
        acc += out.truth_contextual[(p2 * S + p1) * C + k];
        if (u < acc) {
          c = static_cast<ClassId>(k);
          break;
        }
        c = static_cast<ClassId>(k);  // rounding tail falls on the last class
      }
      std::size_t align = rng.uniform(le + 1);
      std::uint32_t linked = align == 0 ? kNullLink : eids[align - 1];
      std::uint32_t fid = sample_french(c, linked);
      pair.french.push_back(out.french_words[fid]);
      if (count_links && align > 0) ++out.link_counts[{c, linked}];
      p2 = p1;
      p1 = c;
    }
    return pair;
  };

  out.train.reserve(cfg.train_pairs);
  for (std::size_t k = 0; k < cfg.train_pairs; ++k)
    out.train.push_back(sample_pair(cfg.train_min_len, cfg.train_max_len, true));
  out.test.reserve(cfg.test_pairs);
  for (std::size_t k = 0; k < cfg.test_pairs; ++k)
    out.test.push_back(sample_pair(cfg.test_min_len, cfg.test_max_len, false));
  return out;
}

// Writes the corpus and ground-truth tables into a directory:
// train.bitext, test.bitext, lexicon.tsv, phones.tsv, truth_bilex.tsv,
// truth_counts.tsv, truth_contextual.tsv.
inline void write_synth(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
  save_bitext(data.train, at("train.bitext"));
  save_bitext(data.test, at("test.bitext"));
  save_lexicon(data.lexicon, at("lexicon.tsv"));
  save_phonetic_dict(data.dict, at("phones.tsv"));

  const std::size_t C = data.class_words.size();
  {
    std::ofstream out(at("truth_bilex.tsv"), std::ios::binary);
    out << "#class\tenglish\tfrench\tprob\n";
    for (std::size_t c = 0; c < C; ++c) {
      const auto& cw = data.class_words[c];
      for (std::size_t e = 0; e < data.english_words.size(); ++e) {
        std::uint32_t designated = data.truth_translation[c][e];
        double rest = cw.size() == 1
                          ? 0.0
                          : (1.0 - data.concentration) /
                                static_cast<double>(cw.size() - 1);
        for (std::uint32_t f : cw) {
          double p = f == designated
                         ? (cw.size() == 1 ? 1.0 : data.concentration)
                         : rest;
          out << data.lexicon.class_names()[c] << '\t' << data.english_words[e]
              << '\t' << data.french_words[f] << '\t' << g17(p) << "\n";
        }
      }
      // null row: uniform over the class words
      for (std::uint32_t f : cw)
        out << data.lexicon.class_names()[c] << "\t<NULL>\t"
            << data.french_words[f] << '\t'
            << g17(1.0 / static_cast<double>(cw.size())) << "\n";
    }
  }
  {
    std::ofstream out(at("truth_counts.tsv"), std::ios::binary);
    out << "#class\tenglish\tcount\n";
    for (const auto& [key, count] : data.link_counts)
      out << data.lexicon.class_names()[key.first] << '\t'
          << data.english_words[key.second] << '\t' << count << "\n";
  }
  {
    std::ofstream out(at("truth_contextual.tsv"), std::ios::binary);
    out << "#p2\tp1\tc\tprob\n";
    const std::size_t S = C + 1;
    auto label = [&](std::size_t i) {
      return i == C ? std::string("<B>") : data.lexicon.class_names()[i];
    };
    for (std::size_t p2 = 0; p2 < S; ++p2)
      for (std::size_t p1 = 0; p1 < S; ++p1)
        for (std::size_t c = 0; c < C; ++c)
          out << label(p2) << '\t' << label(p1) << '\t'
              << data.lexicon.class_names()[c] << '\t'
              << g17(data.truth_contextual[(p2 * S + p1) * C + c]) << "\n";
  }
}

}  // namespace transdict

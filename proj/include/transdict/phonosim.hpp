// Compressed phonetic lexicon graph and the simulated acoustic front end.
// The simulator stands in for a real recognizer: every vocabulary
// pronunciation is scored against the spoken form by weighted phone edit
// distance plus seeded gaussian noise, and the top-n words per token are
// returned as an n-best list. Homophones share one path and one score.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transdict/corpus.hpp"
#include "transdict/rng.hpp"
#include "transdict/util.hpp"

namespace transdict {

using Phone = std::uint16_t;
using PhoneString = std::vector<Phone>;

class PhoneInventory {
public:
  Phone intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<Phone>(names_.size()));
    if (inserted) names_.push_back(s);
    return it->second;
  }
  std::optional<Phone> find(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(Phone p) const { return names_.at(p); }
  std::size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Phone> ids_;
};

namespace detail {
// Crude letter-to-phone fallback for words missing from the dictionary.
// Longest-match over a small digraph table (including two-byte UTF-8
// accented letters), then single characters mapped to themselves.
inline const std::vector<std::pair<std::string, std::string>>& g2p_digraphs() {
  static const std::vector<std::pair<std::string, std::string>> t = {
      {"ch", "S"},  {"ou", "u"},  {"an", "A"},  {"on", "O"},  {"in", "E"},
      {"un", "9"},  {"eu", "2"},  {"au", "o"},  {"ai", "e"},  {"oi", "w a"},
      {"gn", "N"},  {"é", "e"},   {"è", "e"},   {"ê", "e"},   {"ë", "e"},
      {"à", "a"},   {"â", "a"},   {"ç", "s"},   {"ô", "o"},   {"û", "u"},
      {"ù", "u"},   {"î", "i"},   {"ï", "i"},   {"œ", "2"}};
  return t;
}
}  // namespace detail

inline std::vector<std::string> g2p_fallback(const Token& word) {
  std::vector<std::string> phones;
  std::size_t i = 0;
  while (i < word.size()) {
    bool matched = false;
    for (const auto& [graph, phone] : detail::g2p_digraphs()) {
      if (word.compare(i, graph.size(), graph) == 0) {
        for (std::string_view p : split(phone, ' ')) phones.emplace_back(p);
        i += graph.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      phones.push_back(word.substr(i, 1));
      i += 1;
    }
  }
  if (phones.empty()) phones.push_back("_");
  return phones;
}

// Pronunciation dictionary. Per-word pronunciations keep file order; the
// first one is the canonical spoken form used by the simulator.
class PhoneticDict {
public:
  PhoneInventory inventory;

  void add(const Token& word, const std::vector<std::string>& phones) {
    if (phones.empty()) throw std::invalid_argument("empty pronunciation");
    PhoneString ps;
    ps.reserve(phones.size());
    for (const std::string& p : phones) ps.push_back(inventory.intern(p));
    add_interned(word, std::move(ps));
  }

  void add_interned(const Token& word, PhoneString ps) {
    auto [it, inserted] = prons_.emplace(word, std::vector<PhoneString>{});
    if (inserted) order_.push_back(word);
    for (const PhoneString& old : it->second)
      if (old == ps) return;  // repeated identical pronunciation
    it->second.push_back(std::move(ps));
  }

  bool contains(const Token& word) const { return prons_.count(word) != 0; }

  const std::vector<PhoneString>* prons(const Token& word) const {
    auto it = prons_.find(word);
    return it == prons_.end() ? nullptr : &it->second;
  }

  const PhoneString& spoken(const Token& word) const {
    auto it = prons_.find(word);
    if (it == prons_.end())
      throw std::runtime_error("word not in phonetic dictionary: " + word);
    return it->second.front();
  }

  // Adds a fallback pronunciation when the word is missing. Returns true
  // when the fallback was used.
  bool ensure_pronunciation(const Token& word) {
    if (contains(word)) return false;
    add(word, g2p_fallback(word));
    return true;
  }

  std::size_t size() const { return prons_.size(); }
  const std::vector<Token>& words() const { return order_; }

private:
  std::unordered_map<Token, std::vector<PhoneString>> prons_;
  std::vector<Token> order_;
};

// File format: word<TAB>phone phone ..., one pronunciation per line,
// repeated words allowed.
inline PhoneticDict load_phonetic_dict(const std::string& path) {
  std::string content = detail::read_file(path);
  PhoneticDict dict;
  std::size_t lineno = 0;
  for (std::string_view line : detail::lines_of(content)) {
    ++lineno;
    if (!valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path, lineno, "missing tab separator");
    std::string_view word = line.substr(0, tab);
    if (word.empty()) throw ParseError(path, lineno, "empty word");
    std::vector<std::string> phones;
    for (std::string_view p : split(line.substr(tab + 1), ' ')) {
      if (p.empty()) throw ParseError(path, lineno, "empty phone symbol");
      phones.emplace_back(p);
    }
    if (phones.empty()) throw ParseError(path, lineno, "empty pronunciation");
    dict.add(Token(word), phones);
  }
  return dict;
}

inline void save_phonetic_dict(const PhoneticDict& dict, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const Token& w : dict.words())
    for (const PhoneString& ps : *dict.prons(w)) {
      out << w << '\t';
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (i) out << ' ';
        out << dict.inventory.name(ps[i]);
      }
      out << "\n";
    }
}

// --- compressed lexicon graph ----------------------------------------------

struct GraphNode {
  std::map<Phone, std::uint32_t> children;  // ordered for deterministic walks
  std::int32_t path = -1;                   // index into paths when final
};

struct GraphPath {
  PhoneString phones;
  std::vector<Token> words;  // homophones sharing this pronunciation, sorted
};

// Rooted acyclic graph over pronunciations: prefixes are shared, every
// root-to-final path is a distinct phone sequence, and each final node
// carries the set of words pronounced that way.
class PhoneticGraph {
public:
  std::vector<GraphNode> nodes;
  std::vector<GraphPath> paths;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t path_count() const { return paths.size(); }

  // Walks the graph and returns every root-to-final path with its word set.
  std::vector<GraphPath> enumerate_paths() const {
    std::vector<GraphPath> out;
    PhoneString prefix;
    walk(0, prefix, out);
    return out;
  }

private:
  void walk(std::uint32_t node, PhoneString& prefix,
            std::vector<GraphPath>& out) const {
    const GraphNode& n = nodes[node];
    if (n.path >= 0) out.push_back({prefix, paths[n.path].words});
    for (const auto& [phone, child] : n.children) {
      prefix.push_back(phone);
      walk(child, prefix, out);
      prefix.pop_back();
    }
  }
};

inline PhoneticGraph build_graph(const PhoneticDict& dict) {
  if (dict.size() == 0) throw std::invalid_argument("empty dictionary");
  // Distinct pronunciations with their homophone sets, in phone-sequence
  // order so construction is deterministic.
  std::map<PhoneString, std::set<Token>> groups;
  for (const Token& w : dict.words())
    for (const PhoneString& ps : *dict.prons(w)) groups[ps].insert(w);

  PhoneticGraph g;
  g.nodes.emplace_back();  // root
  for (const auto& [phones, words] : groups) {
    std::uint32_t cur = 0;
    for (Phone p : phones) {
      auto it = g.nodes[cur].children.find(p);
      if (it == g.nodes[cur].children.end()) {
        std::uint32_t next = static_cast<std::uint32_t>(g.nodes.size());
        g.nodes[cur].children.emplace(p, next);
        g.nodes.emplace_back();
        cur = next;
      } else {
        cur = it->second;
      }
    }
    g.nodes[cur].path = static_cast<std::int32_t>(g.paths.size());
    g.paths.push_back({phones, {words.begin(), words.end()}});
  }
  return g;
}

// Unit-cost phone edit distance.
inline std::size_t edit_distance(std::span<const Phone> a,
                                 std::span<const Phone> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    prev.swap(cur);
  }
  return prev[b.size()];
}

// --- acoustic channel simulation ---------------------------------------------

struct ChannelConfig {
  double distance_weight = 2.0;
  double noise_sd = 1.0;
  std::size_t n = 20;
  std::uint64_t seed = 0;
};

struct Candidate {
  Token word;
  double score;  // synthetic acoustic log score
};

struct NBestList {
  std::vector<Candidate> entries;              // sorted by descending score
  std::optional<std::size_t> truth_rank;       // position of the spoken word
};

struct NBestLattice {
  std::vector<NBestList> positions;
};

// Scores the whole vocabulary against one spoken token. Noise is drawn per
// distinct pronunciation (path), so homophones share one score exactly.
class AcousticSimulator {
public:
  explicit AcousticSimulator(const PhoneticDict& dict) {
    std::map<PhoneString, std::set<Token>> groups;
    for (const Token& w : dict.words())
      for (const PhoneString& ps : *dict.prons(w)) groups[ps].insert(w);
    for (auto& [phones, words] : groups)
      paths_.emplace_back(phones, std::vector<Token>(words.begin(), words.end()));
    dict_ = &dict;
  }

  NBestList simulate_token(const Token& truth, const ChannelConfig& ch) const {
    if (ch.n < 1) throw std::invalid_argument("n must be >= 1");
    if (ch.noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
    if (ch.distance_weight <= 0.0)
      throw std::invalid_argument("distance_weight must be positive");
    const PhoneString& spoken = dict_->spoken(truth);
    Rng rng(ch.seed);
    std::unordered_map<Token, double> best;
    best.reserve(dict_->size());
    for (const auto& [phones, words] : paths_) {
      double d = static_cast<double>(
          edit_distance(std::span<const Phone>(phones), std::span<const Phone>(spoken)));
      double score = -ch.distance_weight * d + ch.noise_sd * rng.gauss();
      for (const Token& w : words) {
        auto [it, inserted] = best.emplace(w, score);
        if (!inserted && score > it->second) it->second = score;
      }
    }
    std::vector<Candidate> all;
    all.reserve(best.size());
    for (const auto& [w, s] : best) all.push_back({w, s});
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.word < b.word;
    });
    if (all.size() > ch.n) all.resize(ch.n);
    NBestList out;
    out.entries = std::move(all);
    for (std::size_t r = 0; r < out.entries.size(); ++r)
      if (out.entries[r].word == truth) {
        out.truth_rank = r;
        break;
      }
    return out;
  }

  // Per-position sub-seeds derived from the channel seed keep sentences
  // reproducible and positions independent.
  NBestLattice simulate_sentence(const std::vector<Token>& sentence,
                                 const ChannelConfig& ch) const {
    NBestLattice lat;
    lat.positions.reserve(sentence.size());
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      ChannelConfig sub = ch;
      sub.seed = mix_seed(ch.seed, i);
      lat.positions.push_back(simulate_token(sentence[i], sub));
    }
    return lat;
  }

private:
  const PhoneticDict* dict_ = nullptr;
  std::vector<std::pair<PhoneString, std::vector<Token>>> paths_;
};

inline NBestList simulate_token(const Token& truth, const PhoneticDict& dict,
                                const ChannelConfig& ch) {
  return AcousticSimulator(dict).simulate_token(truth, ch);
}

inline NBestLattice simulate_sentence(const std::vector<Token>& sentence,
                                      const PhoneticDict& dict,
                                      const ChannelConfig& ch) {
  return AcousticSimulator(dict).simulate_sentence(sentence, ch);
}

// --- lattice file format -----------------------------------------------------
//
//   NBEST v1
//   SENT <index> <positions>
//   <pos> <rank> <word> <score>
//   TRUTH <pos> <rank>

inline void save_lattices(const std::vector<NBestLattice>& lats,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "NBEST v1\n";
  for (std::size_t s = 0; s < lats.size(); ++s) {
    out << "SENT " << s << ' ' << lats[s].positions.size() << "\n";
    for (std::size_t i = 0; i < lats[s].positions.size(); ++i) {
      const NBestList& list = lats[s].positions[i];
      for (std::size_t r = 0; r < list.entries.size(); ++r)
        out << i << ' ' << r << ' ' << list.entries[r].word << ' '
            << g17(list.entries[r].score) << "\n";
    }
    for (std::size_t i = 0; i < lats[s].positions.size(); ++i)
      if (lats[s].positions[i].truth_rank)
        out << "TRUTH " << i << ' ' << *lats[s].positions[i].truth_rank << "\n";
  }
}

inline std::vector<NBestLattice> load_lattices(const std::string& path) {
  std::string content = detail::read_file(path);
  std::vector<std::string_view> lines = detail::lines_of(content);
  if (lines.empty() || lines[0] != "NBEST v1")
    throw ParseError(path, 1, "expected NBEST v1 header");
  std::vector<NBestLattice> lats;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::size_t lineno = i + 1;
    std::vector<std::string_view> f = split(lines[i], ' ');
    if (f.size() == 3 && f[0] == "SENT") {
      std::size_t idx = std::stoul(std::string(f[1]));
      if (idx != lats.size())
        throw ParseError(path, lineno, "sentence index out of order");
      lats.emplace_back();
      lats.back().positions.resize(std::stoul(std::string(f[2])));
    } else if (f.size() == 3 && f[0] == "TRUTH") {
      if (lats.empty()) throw ParseError(path, lineno, "TRUTH before SENT");
      std::size_t pos = std::stoul(std::string(f[1]));
      if (pos >= lats.back().positions.size())
        throw ParseError(path, lineno, "TRUTH position out of range");
      lats.back().positions[pos].truth_rank = std::stoul(std::string(f[2]));
    } else if (f.size() == 4) {
      if (lats.empty()) throw ParseError(path, lineno, "record before SENT");
      std::size_t pos = std::stoul(std::string(f[0]));
      std::size_t rank = std::stoul(std::string(f[1]));
      if (pos >= lats.back().positions.size())
        throw ParseError(path, lineno, "position out of range");
      auto& entries = lats.back().positions[pos].entries;
      if (rank != entries.size())
        throw ParseError(path, lineno, "rank out of order");
      entries.push_back({Token(f[2]), std::stod(std::string(f[3]))});
    } else {
      throw ParseError(path, lineno, "unrecognized record");
    }
  }
  return lats;
}

}  // namespace transdict

// Bilingual corpus ingestion: tokenized sentence pairs and the word-class
// lexicon. All objects are immutable after load and safe to share.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "transdict/util.hpp"

namespace transdict {

using Token = std::string;
using ClassId = std::uint32_t;

struct SentencePair {
  std::vector<Token> french;
  std::vector<Token> english;
};

// Word -> admissible class set, plus the ordered class inventory.
// Class sets are stored as bitmasks, which caps the inventory at 64 classes;
// the coarse classification this model relies on never gets near that.
class Lexicon {
public:
  static constexpr std::size_t kMaxClasses = 64;

  Lexicon() = default;

  explicit Lexicon(std::vector<std::string> class_names) {
    if (class_names.size() < 2)
      throw std::invalid_argument("lexicon needs at least 2 classes");
    if (class_names.size() > kMaxClasses)
      throw std::invalid_argument("lexicon supports at most 64 classes");
    class_names_ = std::move(class_names);
    for (std::size_t i = 0; i < class_names_.size(); ++i) {
      if (class_names_[i].empty())
        throw std::invalid_argument("empty class name");
      if (!class_ids_.emplace(class_names_[i], static_cast<ClassId>(i)).second)
        throw std::invalid_argument("duplicate class name: " + class_names_[i]);
    }
  }

  std::size_t class_count() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::optional<ClassId> class_id(std::string_view name) const {
    auto it = class_ids_.find(std::string(name));
    if (it == class_ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& class_name(ClassId c) const { return class_names_.at(c); }

  void add(const Token& word, ClassId c) {
    if (c >= class_count()) throw std::invalid_argument("class id out of range");
    entries_[word] |= std::uint64_t{1} << c;
  }

  bool contains(const Token& word) const { return entries_.count(word) != 0; }

  // Bitmask of admissible classes; 0 when the word is absent.
  std::uint64_t mask(const Token& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? 0 : it->second;
  }

  std::uint64_t full_mask() const {
    std::size_t c = class_count();
    return c >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << c) - 1;
  }

  std::vector<ClassId> classes_of(const Token& word) const {
    std::vector<ClassId> out;
    std::uint64_t m = mask(word);
    for (ClassId c = 0; c < class_count(); ++c)
      if (m & (std::uint64_t{1} << c)) out.push_back(c);
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<Token, std::uint64_t>& entries() const {
    return entries_;
  }

private:
  std::vector<std::string> class_names_;
  std::unordered_map<std::string, ClassId> class_ids_;
  std::unordered_map<Token, std::uint64_t> entries_;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits file content into lines. A trailing newline does not produce a
// final empty line.
inline std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> lines = split(content, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<Token> parse_tokens(std::string_view side,
                                       const std::string& path,
                                       std::size_t lineno,
                                       const char* which) {
  if (side.empty())
    throw ParseError(path, lineno, std::string("empty ") + which + " side");
  std::vector<Token> out;
  for (std::string_view t : split(side, ' ')) {
    if (t.empty())
      throw ParseError(path, lineno,
                       std::string("empty token (double space?) on ") + which +
                           " side");
    for (char c : t)
      if (is_space_byte(c))
        throw ParseError(path, lineno, "token contains whitespace");
    out.emplace_back(t);
  }
  return out;
}

}  // namespace detail

// One pair per line: french-tokens<TAB>english-tokens, tokens single-space
// separated, UTF-8, LF line endings.
inline std::vector<SentencePair> load_bitext(const std::string& path) {
  std::string content = detail::read_file(path);
  std::vector<SentencePair> pairs;
  std::size_t lineno = 0;
  for (std::string_view line : detail::lines_of(content)) {
    ++lineno;
    if (!valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path, lineno, "missing tab separator");
    SentencePair p;
    p.french = detail::parse_tokens(line.substr(0, tab), path, lineno, "french");
    p.english =
        detail::parse_tokens(line.substr(tab + 1), path, lineno, "english");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::string format_bitext(const std::vector<SentencePair>& pairs) {
  std::string out;
  for (const SentencePair& p : pairs) {
    out += join(p.french, ' ');
    out.push_back('\t');
    out += join(p.english, ' ');
    out.push_back('\n');
  }
  return out;
}

inline void save_bitext(const std::vector<SentencePair>& pairs,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << format_bitext(pairs);
}

struct FilterResult {
  std::vector<SentencePair> pairs;
  std::size_t retained = 0;
  std::size_t dropped = 0;
};

// Keeps pairs with at most max_tokens on both sides (inclusive bound).
inline FilterResult filter_pairs(const std::vector<SentencePair>& pairs,
                                 std::size_t max_tokens = 40) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  FilterResult r;
  for (const SentencePair& p : pairs) {
    if (p.french.size() <= max_tokens && p.english.size() <= max_tokens) {
      r.pairs.push_back(p);
      ++r.retained;
    } else {
      ++r.dropped;
    }
  }
  return r;
}

// Lexicon file: first line "#CLASSES<TAB>NAME1,NAME2,...", then
// "word<TAB>CLASS[,CLASS...]" lines. Duplicate word lines merge.
inline Lexicon load_lexicon(const std::string& path) {
  std::string content = detail::read_file(path);
  std::vector<std::string_view> lines = detail::lines_of(content);
  if (lines.empty()) throw ParseError(path, 1, "missing #CLASSES header");
  static constexpr std::string_view kHeader = "#CLASSES\t";
  if (lines[0].substr(0, kHeader.size()) != kHeader)
    throw ParseError(path, 1, "first line must be #CLASSES<TAB>NAME1,NAME2,...");
  std::vector<std::string> names;
  for (std::string_view n : split(lines[0].substr(kHeader.size()), ',')) {
    if (n.empty()) throw ParseError(path, 1, "empty class name in header");
    names.emplace_back(n);
  }
  Lexicon lex;
  try {
    lex = Lexicon(std::move(names));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path, 1, e.what());
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::size_t lineno = i + 1;
    std::string_view line = lines[i];
    if (!valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path, lineno, "missing tab separator");
    std::string_view word = line.substr(0, tab);
    if (word.empty()) throw ParseError(path, lineno, "empty word");
    std::string_view classes = line.substr(tab + 1);
    if (classes.empty()) throw ParseError(path, lineno, "empty class list");
    for (std::string_view cname : split(classes, ',')) {
      if (cname.empty()) throw ParseError(path, lineno, "empty class label");
      auto id = lex.class_id(cname);
      if (!id)
        throw ParseError(path, lineno,
                         "unknown class label: " + std::string(cname));
      lex.add(Token(word), *id);
    }
  }
  return lex;
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "#CLASSES\t" << join(lex.class_names(), ',') << "\n";
  std::vector<const Token*> words;
  words.reserve(lex.size());
  for (const auto& [w, m] : lex.entries()) words.push_back(&w);
  std::sort(words.begin(), words.end(),
            [](const Token* a, const Token* b) { return *a < *b; });
  for (const Token* w : words) {
    std::vector<std::string> cs;
    for (ClassId c : lex.classes_of(*w)) cs.push_back(lex.class_name(c));
    out << *w << '\t' << join(cs, ',') << "\n";
  }
}

}  // namespace transdict

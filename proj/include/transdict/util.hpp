// Small shared helpers: errors, string handling, log-domain arithmetic.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace transdict {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Parse failure in an input file; message carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_ = 0;
};

// log(e^a + e^b) without leaving the log domain.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <class Seq>
std::string join(const Seq& items, char sep) {
  std::string out;
  bool first = true;
  for (const auto& it : items) {
    if (!first) out.push_back(sep);
    out.append(it);
    first = false;
  }
  return out;
}

// Shortest decimal form that round-trips a double exactly.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = s[i];
    std::size_t extra;
    if (b < 0x80) {
      extra = 0;
    } else if ((b & 0xE0) == 0xC0) {
      extra = 1;
      if (b < 0xC2) return false;  // overlong
    } else if ((b & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      extra = 3;
      if (b > 0xF4) return false;
    } else {
      return false;
    }
    if (extra > 0 && i + extra >= s.size()) return false;  // truncated sequence
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

// Runs fn(block_index, begin, end) over [0, n) split into contiguous blocks,
// one per thread. Callers keep per-block accumulators and merge them in block
// order so results are deterministic for a fixed thread count.
template <class Fn>
void parallel_blocks(std::size_t n, int threads, Fn&& fn) {
  std::size_t t = threads < 1 ? 1 : static_cast<std::size_t>(threads);
  t = std::min(t, n == 0 ? std::size_t{1} : n);
  if (t <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::size_t chunk = (n + t - 1) / t;
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < t; ++k) {
    std::size_t b = k * chunk;
    std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, k, b, e] { fn(k, b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace transdict

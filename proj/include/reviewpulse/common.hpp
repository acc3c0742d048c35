#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reviewpulse {

using WordId = std::uint32_t;

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sentiment slots. Lexicon codes -1/0/+1 map onto these in order.
enum class Sentiment : std::size_t { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::size_t kNumSentiments = 3;

inline std::string_view sentiment_name(std::size_t s) {
  switch (s) {
    case 0: return "negative";
    case 1: return "neutral";
    case 2: return "positive";
    default: return "sentiment";
  }
}

// ---------------------------------------------------------------------------
// Warnings go through a replaceable sink so tests can observe them.

using WarningSink = std::function<void(std::string_view)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
  return sink;
}

inline void warn(std::string_view msg) {
  if (warning_sink()) warning_sink()(msg);
}

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

// RAII helper that captures warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() : previous_(warning_sink()) {
    warning_sink() = [this](std::string_view msg) { messages_.emplace_back(msg); };
  }
  ~WarningCapture() { warning_sink() = previous_; }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(std::string_view needle) const {
    return std::any_of(messages_.begin(), messages_.end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
  }

 private:
  WarningSink previous_;
  std::vector<std::string> messages_;
};

// ---------------------------------------------------------------------------
// Random numbers. The engine is fully specified by the standard, and the
// uniform draw below avoids the implementation-defined std distributions so
// that results are reproducible across standard libraries.

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Draws an index with probability proportional to weights[i]. `total` must be
// the sum of the weights.
inline std::size_t sample_discrete(Rng& rng, std::span<const double> weights, double total) {
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // Round-off: fall back to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

// ---------------------------------------------------------------------------
// Dense S x K x V tensor of doubles, row-major over the word axis. A row is
// the V-vector for one (sentiment, topic) pair.

class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t sentiments, std::size_t topics, std::size_t words, double fill = 0.0)
      : s_(sentiments), k_(topics), v_(words), data_(sentiments * topics * words, fill) {}

  std::size_t sentiments() const { return s_; }
  std::size_t topics() const { return k_; }
  std::size_t words() const { return v_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t s, std::size_t z, std::size_t w) { return data_[(s * k_ + z) * v_ + w]; }
  double at(std::size_t s, std::size_t z, std::size_t w) const { return data_[(s * k_ + z) * v_ + w]; }

  std::span<double> row(std::size_t s, std::size_t z) { return {data_.data() + (s * k_ + z) * v_, v_}; }
  std::span<const double> row(std::size_t s, std::size_t z) const {
    return {data_.data() + (s * k_ + z) * v_, v_};
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  // Returns a copy with the word axis grown to `words`, new cells set to `fill`.
  Tensor3 widened(std::size_t words, double fill) const {
    if (words < v_) throw Error("Tensor3::widened: cannot shrink the word axis");
    Tensor3 out(s_, k_, words, fill);
    for (std::size_t s = 0; s < s_; ++s)
      for (std::size_t z = 0; z < k_; ++z) std::copy(row(s, z).begin(), row(s, z).end(), out.row(s, z).begin());
    return out;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t s_ = 0;
  std::size_t k_ = 0;
  std::size_t v_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Version keys are ordered naturally: runs of digits compare numerically, so
// "5.1.10" sorts after "5.1.9" and "v10" after "v2".

inline bool version_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

struct VersionLess {
  bool operator()(std::string_view a, std::string_view b) const { return version_less(a, b); }
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

inline std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace reviewpulse

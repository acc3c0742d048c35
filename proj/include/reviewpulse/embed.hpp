#pragma once

// Word vectors: text-format loading and export, a small skip-gram trainer
// with negative sampling, cosine similarity and mean-of-words text vectors.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "reviewpulse/common.hpp"
#include "reviewpulse/corpus.hpp"

namespace reviewpulse::embed {

using Vector = std::vector<double>;

enum class OovPolicy {
  skip,  // unknown tokens are left out of averages
  zero,  // unknown tokens count as zero vectors
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim, OovPolicy policy = OovPolicy::skip) : dim_(dim), policy_(policy) {
    if (dim_ < 1) throw Error("embedding table: dim must be >= 1");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  OovPolicy oov_policy() const { return policy_; }
  void set_oov_policy(OovPolicy p) { policy_ = p; }

  void set(const std::string& token, Vector v) {
    if (v.size() != dim_) throw Error(concat("embedding for '", token, "' has length ", v.size(), ", expected ", dim_));
    vectors_[token] = std::move(v);
  }

  const Vector* find(std::string_view token) const {
    auto it = vectors_.find(std::string(token));
    return it == vectors_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  const std::unordered_map<std::string, Vector>& vectors() const { return vectors_; }

 private:
  std::size_t dim_ = 1;
  OovPolicy policy_ = OovPolicy::skip;
  std::unordered_map<std::string, Vector> vectors_;
};

// dot(u, v) / (|u| |v|); 0 when either vector is zero.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(concat("cosine: length mismatch (", u.size(), " vs ", v.size(), ")"));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

inline bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// Mean of the tokens' vectors. A phrase token "a_b" without its own vector
// stands for the mean of a and b. All-unknown input gives the zero vector.
inline Vector embed_text(std::span<const std::string> tokens, const EmbeddingTable& table) {
  Vector sum(table.dim(), 0.0);
  std::size_t n = 0;
  auto accumulate = [&](const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
  };
  for (const auto& t : tokens) {
    if (const Vector* v = table.find(t)) {
      accumulate(*v);
      ++n;
      continue;
    }
    if (auto sep = t.find('_'); sep != std::string::npos) {
      const Vector* a = table.find(std::string_view(t).substr(0, sep));
      const Vector* b = table.find(std::string_view(t).substr(sep + 1));
      if (a && b) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += 0.5 * ((*a)[i] + (*b)[i]);
        ++n;
        continue;
      }
      if (a || b) {
        accumulate(a ? *a : *b);
        ++n;
        continue;
      }
    }
    if (table.oov_policy() == OovPolicy::zero) ++n;
  }
  if (n == 0) return sum;
  for (double& x : sum) x /= static_cast<double>(n);
  return sum;
}

inline Vector embed_text(std::initializer_list<std::string> tokens, const EmbeddingTable& table) {
  return embed_text(std::span<const std::string>(tokens.begin(), tokens.size()), table);
}

// ---------------------------------------------------------------------------
// Text format: "token v1 v2 ... vD" per line. A leading "count dim" header
// line, as written by word2vec, is skipped.

inline EmbeddingTable parse_vectors(std::istream& in) {
  EmbeddingTable table;
  bool have_dim = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (!have_dim && line_no == 1 && fields.size() == 2 &&
        std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
        std::all_of(fields[1].begin(), fields[1].end(), ::isdigit))
      continue;
    if (fields.size() < 2) throw Error(concat("vectors line ", line_no, ": expected 'token v1 ... vD'"));
    Vector v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0.0;
      const char* first = fields[i].data();
      const char* last = first + fields[i].size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || ptr != last) throw Error(concat("vectors line ", line_no, ": bad number '", fields[i], "'"));
      v.push_back(x);
    }
    if (!have_dim) {
      table = EmbeddingTable(v.size());
      have_dim = true;
    } else if (v.size() != table.dim()) {
      throw Error(concat("vectors line ", line_no, ": dimension ", v.size(), " does not match ", table.dim()));
    }
    if (table.contains(fields[0])) warn(concat("vectors line ", line_no, ": duplicate token '", fields[0], "', keeping last"));
    table.set(fields[0], std::move(v));
  }
  if (!have_dim) throw Error("vector file is empty");
  return table;
}

inline EmbeddingTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open vectors '", path, "'"));
  return parse_vectors(in);
}

// Writes tokens in lexicographic order with shortest round-trip numbers.
inline void write_vectors(std::ostream& out, const EmbeddingTable& table) {
  std::map<std::string, const Vector*> sorted;
  for (const auto& [token, v] : table.vectors()) sorted.emplace(token, &v);
  char buf[64];
  for (const auto& [token, v] : sorted) {
    out << token;
    for (double x : *v) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

inline void save_vectors(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(concat("cannot write vectors '", path, "'"));
  write_vectors(out, table);
}

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling.

struct TrainParams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::size_t min_count = 2;
  std::uint64_t seed = 1;
};

// Trains on token sentences. Deterministic for a fixed seed.
inline EmbeddingTable train_vectors(const std::vector<std::vector<std::string>>& sentences, const TrainParams& p) {
  if (p.dim < 1 || p.window < 1 || p.epochs < 1) throw Error("train_vectors: dim, window and epochs must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total_tokens = 0;
  for (const auto& s : sentences)
    for (const auto& t : s) {
      ++counts[t];
      ++total_tokens;
    }
  std::vector<std::pair<std::string, std::size_t>> vocab;
  for (const auto& [t, c] : counts)
    if (c >= p.min_count) vocab.emplace_back(t, c);
  if (vocab.empty()) throw Error("train_vectors: no token reaches the minimum count");
  if (total_tokens < 1000) warn(concat("train_vectors: only ", total_tokens, " tokens; vectors will be noisy"));
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::unordered_map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i].first, static_cast<std::uint32_t>(i));

  std::vector<std::vector<std::uint32_t>> data;
  std::size_t train_words = 0;
  for (const auto& s : sentences) {
    std::vector<std::uint32_t> ids;
    for (const auto& t : s)
      if (auto it = index.find(t); it != index.end()) ids.push_back(it->second);
    train_words += ids.size();
    if (ids.size() >= 2) data.push_back(std::move(ids));
  }

  // Noise distribution ~ count^0.75.
  std::vector<double> noise_cdf(vocab.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab[i].second), 0.75);
    noise_cdf[i] = acc;
  }

  const std::size_t V = vocab.size(), D = p.dim;
  Rng rng(p.seed);
  std::vector<float> input(V * D), output(V * D, 0.0f);
  for (float& x : input) x = static_cast<float>((uniform01(rng) - 0.5) / static_cast<double>(D));

  std::vector<float> grad(D);
  const double total_steps = static_cast<double>(p.epochs * train_words) + 1.0;
  std::size_t processed = 0;
  auto update = [&](std::uint32_t center, std::uint32_t target, float label, float lr) {
    float* in = &input[center * D];
    float* out = &output[target * D];
    float dot = 0.0f;
    for (std::size_t d = 0; d < D; ++d) dot += in[d] * out[d];
    dot = std::clamp(dot, -30.0f, 30.0f);
    const float g = (label - 1.0f / (1.0f + std::exp(-dot))) * lr;
    for (std::size_t d = 0; d < D; ++d) {
      grad[d] += g * out[d];
      out[d] += g * in[d];
    }
  };

  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    for (const auto& sent : data) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos, ++processed) {
        const float lr = static_cast<float>(
            p.learning_rate * std::max(1.0 - static_cast<double>(processed) / total_steps, 1e-4));
        const std::size_t reach = 1 + uniform_index(rng, p.window);
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(sent.size() - 1, pos + reach);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          std::fill(grad.begin(), grad.end(), 0.0f);
          update(sent[c], sent[pos], 1.0f, lr);
          for (std::size_t k = 0; k < p.negatives; ++k) {
            const double u = uniform01(rng) * acc;
            auto neg = static_cast<std::uint32_t>(std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u) - noise_cdf.begin());
            if (neg >= V) neg = static_cast<std::uint32_t>(V - 1);
            if (neg == sent[pos]) continue;
            update(sent[c], neg, 0.0f, lr);
          }
          float* in = &input[sent[c] * D];
          for (std::size_t d = 0; d < D; ++d) in[d] += grad[d];
        }
      }
    }
  }

  EmbeddingTable table(D);
  for (std::size_t i = 0; i < V; ++i) table.set(vocab[i].first, Vector(input.begin() + static_cast<std::ptrdiff_t>(i * D), input.begin() + static_cast<std::ptrdiff_t>((i + 1) * D)));
  return table;
}

// Sentences of every review of every version.
inline EmbeddingTable train_vectors(std::span<const corpus::VersionCorpus> corpora, const TrainParams& p) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& vc : corpora)
    for (const auto& r : vc.reviews)
      for (const auto& s : r.sentences) sentences.push_back(s);
  return train_vectors(sentences, p);
}

}  // namespace reviewpulse::embed

#pragma once

// Emerging topic detection: Jensen-Shannon divergence between consecutive
// versions' topic-word distributions and a z-score outlier test on the
// current version pair.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "reviewpulse/bst.hpp"
#include "reviewpulse/common.hpp"

namespace reviewpulse::emerging {

using bst::VersionSnapshot;

// JS(p, q) in bits, so the result lies in [0, 1]. Vectors of different
// length are an error; each must sum to 1 within 1e-6.
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(concat("js_divergence: length mismatch (", p.size(), " vs ", q.size(), ")"));
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw Error("js_divergence: inputs must be probability vectors");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

// omega x K matrix; row i compares version t-i with t-i-1 (row 0 is the
// current pair).
struct DivergenceMatrix {
  std::size_t rows = 0;
  std::size_t topics = 0;
  std::vector<double> values;  // row-major
  std::vector<std::pair<std::string, std::string>> version_pairs;  // (newer, older) per row

  double at(std::size_t i, std::size_t z) const { return values[i * topics + z]; }
  double& at(std::size_t i, std::size_t z) { return values[i * topics + z]; }
};

namespace detail {

inline std::vector<double> padded(std::span<const double> row, std::size_t n) {
  std::vector<double> out(n, 0.0);
  std::copy(row.begin(), row.end(), out.begin());
  return out;
}

}  // namespace detail

// Uses the last min(omega + 1, history.size()) snapshots of `history`
// (ordered oldest -> newest) and the given sentiment slice.
inline DivergenceMatrix divergence_matrix(std::span<const VersionSnapshot> history, std::size_t omega,
                                          std::size_t sentiment = static_cast<std::size_t>(Sentiment::negative)) {
  if (history.size() < 2) throw Error("insufficient history");
  const std::size_t used = std::min(omega + 1, history.size());
  const auto recent = history.subspan(history.size() - used);
  const std::size_t K = recent.back().topics();
  for (const auto& snap : recent) {
    if (snap.topics() != K) throw Error("divergence_matrix: snapshots disagree on K");
    if (sentiment >= snap.sentiments()) throw Error("divergence_matrix: sentiment out of range");
  }
  DivergenceMatrix m;
  m.rows = used - 1;
  m.topics = K;
  m.values.assign(m.rows * K, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto& newer = recent[used - 1 - i];
    const auto& older = recent[used - 2 - i];
    const std::size_t V = std::max(newer.vocab_size(), older.vocab_size());
    for (std::size_t z = 0; z < K; ++z) {
      const auto p = detail::padded(newer.phi.row(sentiment, z), V);
      const auto q = detail::padded(older.phi.row(sentiment, z), V);
      m.at(i, z) = js_divergence(p, q);
    }
    m.version_pairs.emplace_back(newer.version_id, older.version_id);
  }
  return m;
}

enum class StatisticsScope {
  whole_matrix,  // mean and std over every entry
  per_topic,     // mean and std over the topic's own column
};

struct EmergingTopicSet {
  std::string version_id;
  std::vector<std::size_t> topic_ids;  // ascending
  std::vector<double> zscores;         // one per topic
  std::vector<double> divergences;     // current-row divergence per topic

  bool flagged(std::size_t z) const { return std::find(topic_ids.begin(), topic_ids.end(), z) != topic_ids.end(); }
};

namespace detail {

// Population mean and standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace detail

// Flags topic z when (D[0][z] - mean) / std > delta.
inline EmergingTopicSet detect_anomalies(const DivergenceMatrix& matrix, double delta,
                                         StatisticsScope scope = StatisticsScope::whole_matrix) {
  if (matrix.rows == 0 || matrix.topics == 0) throw Error("detect_anomalies: empty divergence matrix");
  EmergingTopicSet out;
  if (!matrix.version_pairs.empty()) out.version_id = matrix.version_pairs.front().first;
  out.zscores.assign(matrix.topics, 0.0);
  out.divergences.assign(matrix.values.begin(), matrix.values.begin() + static_cast<std::ptrdiff_t>(matrix.topics));

  auto [mean, sd] = detail::mean_std(matrix.values);
  bool warned = false;
  for (std::size_t z = 0; z < matrix.topics; ++z) {
    if (scope == StatisticsScope::per_topic) {
      std::vector<double> column(matrix.rows);
      for (std::size_t i = 0; i < matrix.rows; ++i) column[i] = matrix.at(i, z);
      std::tie(mean, sd) = detail::mean_std(column);
    }
    // Rounding leaves a tiny spread on constant data; treat it as none.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      if (!warned) warn("detect_anomalies: zero divergence spread, no topic flagged");
      warned = true;
      continue;
    }
    out.zscores[z] = (matrix.at(0, z) - mean) / sd;
    if (out.zscores[z] > delta) out.topic_ids.push_back(z);
  }
  return out;
}

}  // namespace reviewpulse::emerging

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reviewpulse/emerging.hpp"

using namespace reviewpulse;
using namespace reviewpulse::emerging;

namespace {

using Vec = std::vector<double>;

Vec random_simplex(std::mt19937_64& rng, std::size_t n, double zero_prob = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0, 1);
  Vec v(n);
  double sum = 0;
  for (auto& x : v) sum += (x = u(rng) < zero_prob ? 0.0 : e(rng));
  if (sum == 0) v[0] = sum = 1;
  for (auto& x : v) x /= sum;
  return v;
}

// Written out independently: natural logs converted to bits at the end.
double oracle_js(const Vec& p, const Vec& q) {
  double a = 0, b = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2;
    if (p[i] > 0) a += p[i] * std::log(p[i] / m);
    if (q[i] > 0) b += q[i] * std::log(q[i] / m);
  }
  return (a + b) / 2 / std::log(2.0);
}

DivergenceMatrix matrix_of(std::size_t rows, std::size_t topics, Vec values) {
  DivergenceMatrix m;
  m.rows = rows;
  m.topics = topics;
  m.values = std::move(values);
  return m;
}

bst::VersionSnapshot snap_of(std::string id, const std::vector<Vec>& topic_rows, std::size_t S = 3) {
  bst::VersionSnapshot s;
  s.version_id = std::move(id);
  const std::size_t K = topic_rows.size(), V = topic_rows[0].size();
  s.pi.assign(S, 1.0 / static_cast<double>(S));
  s.theta.assign(S * K, 1.0 / static_cast<double>(K));
  s.phi = Tensor3(S, K, V);
  for (std::size_t sent = 0; sent < S; ++sent)
    for (std::size_t z = 0; z < K; ++z) std::copy(topic_rows[z].begin(), topic_rows[z].end(), s.phi.row(sent, z).begin());
  return s;
}

}  // namespace

TEST(JsDivergence, IdenticalIsZero) { EXPECT_EQ(js_divergence(Vec{0.3, 0.7}, Vec{0.3, 0.7}), 0.0); }

TEST(JsDivergence, DisjointIsOne) { EXPECT_NEAR(js_divergence(Vec{1, 0, 0}, Vec{0, 0.5, 0.5}), 1.0, 1e-15); }

TEST(JsDivergence, PointMassAgainstUniform) {
  EXPECT_NEAR(js_divergence(Vec{1, 0}, Vec{0.5, 0.5}), 0.3113, 1e-4);
  EXPECT_NEAR(js_divergence(Vec{1, 0}, Vec{0.5, 0.5}), oracle_js({1, 0}, {0.5, 0.5}), 1e-14);
}

TEST(JsDivergence, LengthMismatchIsAnError) { EXPECT_THROW(js_divergence(Vec{1}, Vec{0.5, 0.5}), Error); }

TEST(JsDivergence, NonDistributionIsAnError) { EXPECT_THROW(js_divergence(Vec{0.5, 0.6}, Vec{0.5, 0.5}), Error); }

TEST(JsDivergenceProperty, SymmetricBoundedMatchesOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const auto p = random_simplex(rng, n, 0.3), q = random_simplex(rng, n, 0.3);
    const double pq = js_divergence(p, q), qp = js_divergence(q, p);
    EXPECT_NEAR(pq, qp, 1e-12);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0);
    EXPECT_NEAR(pq, oracle_js(p, q), 1e-12);
    EXPECT_LT(js_divergence(p, p), 1e-9);
    const bool equal = std::equal(p.begin(), p.end(), q.begin(), [](double a, double b) { return std::abs(a - b) < 1e-9; });
    if (!equal) {
      EXPECT_GT(pq, 0.0);
    }
  }
}

TEST(DivergenceMatrix, IdenticalSnapshotsGiveZeros) {
  const std::vector<Vec> rows = {{0.5, 0.5}, {0.9, 0.1}};
  std::vector<bst::VersionSnapshot> h = {snap_of("1", rows), snap_of("2", rows), snap_of("3", rows)};
  const auto m = divergence_matrix(h, 3);
  EXPECT_EQ(m.rows, 2u);
  for (double v : m.values) EXPECT_EQ(v, 0.0);
}

TEST(DivergenceMatrix, ShapeOmegaByTopics) {
  std::mt19937_64 rng(2);
  std::vector<bst::VersionSnapshot> h;
  for (int v = 0; v < 6; ++v) {
    std::vector<Vec> rows;
    for (int z = 0; z < 13; ++z) rows.push_back(random_simplex(rng, 12));
    h.push_back(snap_of(std::to_string(v), rows));
  }
  const auto m = divergence_matrix(h, 3);
  EXPECT_EQ(m.rows, 3u);
  EXPECT_EQ(m.topics, 13u);
  EXPECT_EQ(m.values.size(), 39u);
  EXPECT_EQ(m.version_pairs[0], (std::pair<std::string, std::string>{"5", "4"}));
  EXPECT_EQ(m.version_pairs[2], (std::pair<std::string, std::string>{"3", "2"}));
  // Entries match the oracle on the negative slice.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t z = 0; z < 13; ++z) {
      const auto p = h[5 - i].phi.row(0, z), q = h[4 - i].phi.row(0, z);
      EXPECT_NEAR(m.at(i, z), oracle_js(Vec(p.begin(), p.end()), Vec(q.begin(), q.end())), 1e-12);
    }
}

TEST(DivergenceMatrix, DisjointReplacementGivesOne) {
  std::vector<bst::VersionSnapshot> h = {snap_of("1", {{0.5, 0.5, 0, 0}, {0.25, 0.25, 0.25, 0.25}}),
                                         snap_of("2", {{0, 0, 0.5, 0.5}, {0.25, 0.25, 0.25, 0.25}})};
  const auto m = divergence_matrix(h, 3);
  EXPECT_NEAR(m.at(0, 0), 1.0, 1e-15);
  EXPECT_EQ(m.at(0, 1), 0.0);
}

TEST(DivergenceMatrix, ShorterOlderVocabularyZeroPadded) {
  std::vector<bst::VersionSnapshot> h = {snap_of("1", {{0.5, 0.5}}), snap_of("2", {{0.25, 0.25, 0.5}})};
  const auto m = divergence_matrix(h, 1);
  EXPECT_NEAR(m.at(0, 0), oracle_js({0.25, 0.25, 0.5}, {0.5, 0.5, 0}), 1e-14);
}

TEST(DivergenceMatrix, SentimentSliceSelectable) {
  auto a = snap_of("1", {{0.5, 0.5}}), b = snap_of("2", {{0.5, 0.5}});
  b.phi.at(2, 0, 0) = 1.0;
  b.phi.at(2, 0, 1) = 0.0;
  std::vector<bst::VersionSnapshot> h = {a, b};
  EXPECT_EQ(divergence_matrix(h, 3).at(0, 0), 0.0);
  EXPECT_GT(divergence_matrix(h, 3, 2).at(0, 0), 0.3);
  EXPECT_THROW(divergence_matrix(h, 3, 3), Error);
}

TEST(DivergenceMatrix, InsufficientHistory) {
  std::vector<bst::VersionSnapshot> h = {snap_of("1", {{1.0}})};
  try {
    divergence_matrix(h, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "insufficient history");
  }
}

TEST(DetectAnomalies, AllEqualFlagsNothingAndWarns) {
  WarningCapture cap;
  const auto set = detect_anomalies(matrix_of(3, 4, Vec(12, 0.2)), 1.25);
  EXPECT_TRUE(set.topic_ids.empty());
  EXPECT_TRUE(cap.contains("zero divergence spread"));
}

TEST(DetectAnomalies, TwoSigmaEntryFlagged) {
  // Column 0 of the current row sits well above the rest.
  Vec v = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  const auto set = detect_anomalies(matrix_of(2, 4, v), 1.25);
  EXPECT_EQ(set.topic_ids, std::vector<std::size_t>{0});
  // Mean 0.15, std = sqrt((0.35^2 + 7 * 0.05^2) / 8).
  EXPECT_NEAR(set.zscores[0], 0.35 / std::sqrt((0.35 * 0.35 + 7 * 0.0025) / 8), 1e-12);
  EXPECT_GT(set.zscores[0], 2.0);
}

TEST(DetectAnomalies, ThirtyEntryMatrixAgainstBruteForce) {
  Vec v(30, 0.1);
  v[4] = 0.9;  // current row, topic 4
  const auto set = detect_anomalies(matrix_of(3, 10, v), 1.25);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= 30;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / 30);
  EXPECT_NEAR(set.zscores[4], (0.9 - mean) / sd, 1e-12);
  EXPECT_NEAR(set.zscores[0], (0.1 - mean) / sd, 1e-12);
  EXPECT_EQ(set.topic_ids, std::vector<std::size_t>{4});
  EXPECT_TRUE(set.flagged(4));
  EXPECT_FALSE(set.flagged(0));
}

TEST(DetectAnomalies, OnlyCurrentRowCanBeFlagged) {
  Vec v(12, 0.1);
  v[11] = 0.9;  // oldest row
  EXPECT_TRUE(detect_anomalies(matrix_of(3, 4, v), 1.25).topic_ids.empty());
}

TEST(DetectAnomalies, PerTopicScope) {
  // Topic 1 is always noisy; topic 0 jumps only now.
  const Vec v = {0.3, 0.5, 0.1, 0.1, 0.1, 0.9, 0.1, 0.1};
  const auto whole = detect_anomalies(matrix_of(4, 2, v), 1.0);
  const auto col = detect_anomalies(matrix_of(4, 2, v), 1.0, StatisticsScope::per_topic);
  const double m0 = (0.3 + 0.1 * 3) / 4, sd0 = std::sqrt((0.15 * 0.15 + 3 * 0.05 * 0.05) / 4);
  EXPECT_NEAR(col.zscores[0], (0.3 - m0) / sd0, 1e-12);
  EXPECT_TRUE(col.flagged(0));
  EXPECT_FALSE(whole.flagged(0));
}

TEST(DetectAnomalies, EmptyMatrixIsAnError) { EXPECT_THROW(detect_anomalies(DivergenceMatrix{}, 1.25), Error); }

TEST(DetectAnomaliesProperty, RaisingDeltaNeverAddsTopics) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng() % 4, K = 2 + rng() % 12;
    Vec v(rows * K);
    for (auto& x : v) x = u(rng) * u(rng);
    const auto m = matrix_of(rows, K, v);
    const double d1 = u(rng) * 3, d2 = d1 + u(rng) * 2;
    const auto lo = detect_anomalies(m, d1), hi = detect_anomalies(m, d2);
    for (auto z : hi.topic_ids) EXPECT_TRUE(lo.flagged(z));
  }
}

TEST(DetectAnomaliesProperty, InvariantUnderPermutingOlderRows) {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 2 + rng() % 4, K = 2 + rng() % 10;
    Vec v(rows * K);
    for (auto& x : v) x = u(rng);
    std::vector<std::size_t> order(rows - 1);
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);
    Vec w(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(K));
    for (auto r : order) w.insert(w.end(), v.begin() + static_cast<std::ptrdiff_t>(r * K), v.begin() + static_cast<std::ptrdiff_t>((r + 1) * K));
    const auto a = detect_anomalies(matrix_of(rows, K, v), 1.25), b = detect_anomalies(matrix_of(rows, K, w), 1.25);
    EXPECT_EQ(a.topic_ids, b.topic_ids);
    for (std::size_t z = 0; z < K; ++z) EXPECT_NEAR(a.zscores[z], b.zscores[z], 1e-9);
  }
}

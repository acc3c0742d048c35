#pragma once

// Adaptive online chaining across versions. The word prior of version t is a
// softmax-weighted convex combination of the word distributions of the last
// omega versions; the weight of version t-i is its similarity (dot product)
// with the prior that trained version t-1.

#include <cmath>
#include <deque>
#include <utility>
#include <vector>

#include "reviewpulse/bst.hpp"
#include "reviewpulse/common.hpp"

namespace reviewpulse::online {

using bst::Hyperparameters;
using bst::VersionSnapshot;

struct VersionWindow {
  std::size_t omega = 3;
  std::deque<VersionSnapshot> snapshots;  // oldest -> newest, at most omega

  bool empty() const { return snapshots.empty(); }
  // Prior used to train the newest version in the window.
  const Tensor3& beta_prev() const {
    if (snapshots.empty()) throw Error("version window is empty");
    return snapshots.back().beta_used;
  }

  friend bool operator==(const VersionWindow&, const VersionWindow&) = default;
};

namespace detail {

inline double prefix_dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

inline void check_window(const VersionWindow& window) {
  if (window.omega < 1) throw Error("version window: omega must be >= 1");
  if (window.snapshots.empty()) throw Error("version window is empty");
  const auto& last = window.snapshots.back();
  for (const auto& snap : window.snapshots) {
    if (snap.sentiments() != last.sentiments() || snap.topics() != last.topics())
      throw Error("version window: snapshots disagree on S or K");
    if (snap.vocab_size() > last.vocab_size()) throw Error("version window: vocabulary shrank between versions");
  }
}

}  // namespace detail

// eta_i for i = 1..n, where i = 1 is the newest snapshot and n is the number of
// snapshots available (at most omega).
inline std::vector<double> connection_strengths(const VersionWindow& window, std::size_t s, std::size_t z) {
  detail::check_window(window);
  const auto beta = window.beta_prev().row(s, z);
  const std::size_t n = std::min(window.omega, window.snapshots.size());
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& snap = window.snapshots[window.snapshots.size() - 1 - i];
    logits[i] = detail::prefix_dot(snap.phi.row(s, z), beta);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

// Convex combination of the window's word distributions, over the newest
// snapshot's vocabulary (older, shorter rows are zero-padded). No flooring.
inline Tensor3 adaptive_prior(const VersionWindow& window) {
  detail::check_window(window);
  const auto& newest = window.snapshots.back();
  const std::size_t S = newest.sentiments(), K = newest.topics(), V = newest.vocab_size();
  const std::size_t n = std::min(window.omega, window.snapshots.size());
  Tensor3 out(S, K, V, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t z = 0; z < K; ++z) {
      const auto eta = connection_strengths(window, s, z);
      auto row = out.row(s, z);
      for (std::size_t i = 0; i < n; ++i) {
        const auto phi = window.snapshots[window.snapshots.size() - 1 - i].phi.row(s, z);
        for (std::size_t w = 0; w < phi.size(); ++w) row[w] += eta[i] * phi[w];
      }
    }
  return out;
}

struct OnlineOptions {
  double beta_floor = 1e-6;
  bst::TrainOptions train;
};

// Word prior for the next version: the adaptive prior widened to the new
// vocabulary (new words get the scalar beta), then floored. An empty window
// yields the flat prior.
inline Tensor3 next_prior(const VersionWindow& window, std::size_t vocab_size, const Hyperparameters& hyper,
                          double beta_floor) {
  if (window.empty()) return bst::flat_prior(hyper, vocab_size);
  Tensor3 prior = adaptive_prior(window);
  if (prior.sentiments() != hyper.sentiments || prior.topics() != hyper.topics)
    throw Error("advance: window shape does not match the hyperparameters");
  prior = prior.widened(vocab_size, hyper.beta);
  for (double& v : prior.raw()) v = std::max(v, beta_floor);
  return prior;
}

// Trains the next version with the chained prior and slides the window.
inline std::pair<VersionSnapshot, VersionWindow> advance(VersionWindow window, const corpus::VersionCorpus& next,
                                                         const Hyperparameters& hyper,
                                                         const corpus::PolarityLexicon& lexicon, std::uint64_t seed,
                                                         const OnlineOptions& options = {}) {
  if (!window.empty() && next.vocabulary.size() < window.snapshots.back().vocab_size())
    throw Error(concat("advance: version '", next.version_id, "' has a smaller vocabulary than its predecessor"));
  Tensor3 prior = next_prior(window, next.vocabulary.size(), hyper, options.beta_floor);
  auto state = bst::init_model(next, hyper, lexicon, seed, std::move(prior));
  auto snap = bst::train(state, options.train, next.version_id, next.vocabulary.tokens());
  window.snapshots.push_back(snap);
  while (window.snapshots.size() > window.omega) window.snapshots.pop_front();
  return {std::move(snap), std::move(window)};
}

}  // namespace reviewpulse::online

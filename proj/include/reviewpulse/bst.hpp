#pragma once

// Biterm sentiment-topic model for a single version.
//
// Every biterm (unordered pair of distinct words from one review) carries a
// sentiment s and a topic z. With pi ~ Dir(gamma), theta_s ~ Dir(alpha) and
// phi_{s,z} ~ Dir(beta_{s,z}) integrated out, the collapsed conditional for a
// biterm b = (w1, w2) is
//
//   p(s, z | rest) ~ lambda_b[s] * (n_s + gamma)
//                    * (n_sz + alpha) / (n_s + K alpha)
//                    * (n_szw1 + beta_szw1) (n_szw2 + beta_szw2)
//                      / ((n_sz. + B_sz) (n_sz. + 1 + B_sz))
//
// with all counts excluding b and B_sz the row sum of the word prior.
// lambda_b is the product of per-word lexicon weights (lambda_match when the
// word's polarity maps to s, lambda_miss otherwise).

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "reviewpulse/common.hpp"
#include "reviewpulse/corpus.hpp"

namespace reviewpulse::bst {

using corpus::PolarityLexicon;
using corpus::VersionCorpus;
using corpus::Vocabulary;

struct Biterm {
  WordId w1 = 0;  // w1 < w2
  WordId w2 = 0;
  std::uint32_t count = 1;

  friend bool operator==(const Biterm&, const Biterm&) = default;
};

// All unordered pairs of positions holding different words, canonicalized
// and merged. Sorted by (w1, w2).
inline std::vector<Biterm> extract_biterms(std::span<const WordId> document) {
  std::map<std::pair<WordId, WordId>, std::uint32_t> counts;
  for (std::size_t i = 0; i < document.size(); ++i)
    for (std::size_t j = i + 1; j < document.size(); ++j) {
      WordId a = document[i], b = document[j];
      if (a == b) continue;
      if (b < a) std::swap(a, b);
      ++counts[{a, b}];
    }
  std::vector<Biterm> out;
  out.reserve(counts.size());
  for (const auto& [pair, n] : counts) out.push_back({pair.first, pair.second, n});
  return out;
}

inline std::vector<Biterm> extract_biterms(const corpus::TokenizedReview& review, const Vocabulary& vocabulary) {
  std::vector<WordId> ids;
  ids.reserve(review.tokens.size());
  for (const auto& t : review.tokens) ids.push_back(vocabulary.at(t));
  return extract_biterms(ids);
}

struct Hyperparameters {
  std::size_t topics = 13;
  std::size_t sentiments = kNumSentiments;
  double alpha = 0.1;
  double beta = 0.01;
  double gamma = 1.0;
  double lambda_match = 0.9;
  double lambda_miss = 0.05;

  void validate() const {
    if (topics < 1) throw Error("hyperparameters: topics must be >= 1");
    if (sentiments < 1) throw Error("hyperparameters: sentiments must be >= 1");
    if (!(alpha > 0) || !(beta > 0) || !(gamma > 0) || !(lambda_match > 0) || !(lambda_miss > 0))
      throw Error("hyperparameters: alpha, beta, gamma and lambda weights must be positive");
  }
};

// Flat S x K x V word prior filled with the scalar beta.
inline Tensor3 flat_prior(const Hyperparameters& h, std::size_t vocab_size) {
  return Tensor3(h.sentiments, h.topics, vocab_size, h.beta);
}

// ---------------------------------------------------------------------------
// Sentiment prior

inline constexpr std::int8_t kNoPolarity = 127;

// Polarity code of every vocabulary word, kNoPolarity where the lexicon is silent.
inline std::vector<std::int8_t> word_polarities(const Vocabulary& vocabulary, const PolarityLexicon& lexicon) {
  std::vector<std::int8_t> out(vocabulary.size(), kNoPolarity);
  for (std::size_t w = 0; w < vocabulary.size(); ++w)
    if (auto p = lexicon.polarity(vocabulary.token(static_cast<WordId>(w)))) out[w] = static_cast<std::int8_t>(*p);
  return out;
}

// Per-sentiment weights for one biterm given its words' polarity codes.
// Code -1 maps to the negative slot, 0 to neutral, +1 to positive. With
// fewer than three sentiments the lexicon carries no information.
inline std::vector<double> sentiment_prior(std::span<const std::int8_t> codes, const Hyperparameters& h) {
  std::vector<double> weights(h.sentiments, 1.0);
  if (h.sentiments != kNumSentiments) return weights;
  for (std::int8_t code : codes) {
    if (code == kNoPolarity) continue;
    const auto matched = static_cast<std::size_t>(code + 1);
    for (std::size_t s = 0; s < h.sentiments; ++s) weights[s] *= (s == matched) ? h.lambda_match : h.lambda_miss;
  }
  return weights;
}

inline std::vector<double> sentiment_prior(const Biterm& b, const Vocabulary& vocabulary,
                                           const PolarityLexicon& lexicon, const Hyperparameters& h) {
  std::array<std::int8_t, 2> codes{kNoPolarity, kNoPolarity};
  if (auto p = lexicon.polarity(vocabulary.token(b.w1))) codes[0] = static_cast<std::int8_t>(*p);
  if (auto p = lexicon.polarity(vocabulary.token(b.w2))) codes[1] = static_cast<std::int8_t>(*p);
  return sentiment_prior(codes, h);
}

// ---------------------------------------------------------------------------
// Posterior summary of one trained version.

struct VersionSnapshot {
  std::string version_id;
  std::vector<std::string> vocabulary;
  std::vector<double> pi;     // S
  std::vector<double> theta;  // S x K, row-major
  Tensor3 phi;                // S x K x V
  Tensor3 beta_used;          // the word prior this version was trained with
  std::vector<std::int64_t> assignment_counts;  // S x K biterm counts at the end of training

  std::size_t sentiments() const { return phi.sentiments(); }
  std::size_t topics() const { return phi.topics(); }
  std::size_t vocab_size() const { return phi.words(); }
  double theta_at(std::size_t s, std::size_t z) const { return theta[s * topics() + z]; }

  friend bool operator==(const VersionSnapshot&, const VersionSnapshot&) = default;
};

// P(b) = sum over (s, z) of pi_s theta_{s,z} phi_{s,z,w1} phi_{s,z,w2}.
inline double biterm_probability(const VersionSnapshot& snap, WordId w1, WordId w2) {
  if (w1 >= snap.vocab_size() || w2 >= snap.vocab_size())
    throw Error(concat("biterm_probability: word id outside the vocabulary of version '", snap.version_id, "'"));
  double p = 0.0;
  for (std::size_t s = 0; s < snap.sentiments(); ++s)
    for (std::size_t z = 0; z < snap.topics(); ++z)
      p += snap.pi[s] * snap.theta_at(s, z) * snap.phi.at(s, z, w1) * snap.phi.at(s, z, w2);
  return p;
}

inline double biterm_probability(const VersionSnapshot& snap, std::string_view w1, std::string_view w2) {
  auto find = [&](std::string_view t) -> WordId {
    auto it = std::find(snap.vocabulary.begin(), snap.vocabulary.end(), t);
    if (it == snap.vocabulary.end()) throw Error(concat("biterm_probability: unknown word '", t, "'"));
    return static_cast<WordId>(it - snap.vocabulary.begin());
  };
  return biterm_probability(snap, find(w1), find(w2));
}

// ---------------------------------------------------------------------------
// Gibbs chain state.

class BstModelState {
 public:
  // `biterms` are expanded into one sampling unit per occurrence.
  // `polarity` holds one lexicon code per vocabulary word (kNoPolarity where
  // absent); it may be empty. `prior` is the S x K x V word prior; an empty
  // tensor selects the flat prior.
  BstModelState(const std::vector<Biterm>& biterms, std::size_t vocab_size, const Hyperparameters& hyper,
                std::span<const std::int8_t> polarity, std::uint64_t seed, Tensor3 prior = {})
      : hyper_(hyper), vocab_size_(vocab_size), rng_(seed), seed_(seed) {
    hyper_.validate();
    if (prior.empty()) prior = flat_prior(hyper_, vocab_size_);
    if (prior.sentiments() != hyper_.sentiments || prior.topics() != hyper_.topics || prior.words() != vocab_size_)
      throw Error("init_model: word prior shape does not match S x K x V");
    for (double v : prior.raw())
      if (!(v > 0.0)) throw Error("init_model: word prior entries must be positive");
    prior_ = std::move(prior);

    for (const auto& b : biterms) {
      if (b.w1 == b.w2 || b.w1 >= vocab_size_ || b.w2 >= vocab_size_) throw Error("init_model: invalid biterm");
      for (std::uint32_t c = 0; c < b.count; ++c) units_.push_back({b.w1, b.w2});
    }
    if (units_.empty()) throw Error("empty biterm set");

    const std::size_t S = hyper_.sentiments, K = hyper_.topics, SK = S * K;
    prior_wsz_.assign(vocab_size_ * SK, 0.0);
    prior_row_sum_.assign(SK, 0.0);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t z = 0; z < K; ++z) {
        const auto row = prior_.row(s, z);
        double sum = 0.0;
        for (std::size_t w = 0; w < vocab_size_; ++w) {
          prior_wsz_[w * SK + s * K + z] = row[w];
          sum += row[w];
        }
        prior_row_sum_[s * K + z] = sum;
      }

    lambda_.resize(units_.size() * S);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      std::array<std::int8_t, 2> codes{kNoPolarity, kNoPolarity};
      if (!polarity.empty()) codes = {polarity[units_[i].w1], polarity[units_[i].w2]};
      const auto weights = sentiment_prior(codes, hyper_);
      std::copy(weights.begin(), weights.end(), lambda_.begin() + static_cast<std::ptrdiff_t>(i * S));
    }

    n_s_.assign(S, 0);
    n_sz_.assign(SK, 0);
    n_sz_total_.assign(SK, 0);
    n_wsz_.assign(vocab_size_ * SK, 0);
    assignment_.resize(units_.size());

    // Initial draw from the prior predictive: p(s, z) ~ lambda_b[s] times the
    // prior word probabilities of both words. Under a flat prior this is
    // uniform in z with the sentiment biased only by the lexicon.
    std::vector<double> weights(SK);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const auto [w1, w2] = units_[i];
      double total = 0.0;
      for (std::size_t sz = 0; sz < SK; ++sz) {
        const double inv = 1.0 / prior_row_sum_[sz];
        weights[sz] = lambda_[i * S + sz / K] * prior_wsz_[w1 * SK + sz] * inv * prior_wsz_[w2 * SK + sz] * inv;
        total += weights[sz];
      }
      const auto sz = static_cast<std::uint32_t>(sample_discrete(rng_, weights, total));
      assignment_[i] = sz;
      add(i, sz, +1);
    }
  }

  const Hyperparameters& hyper() const { return hyper_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t num_biterms() const { return units_.size(); }
  std::uint64_t seed() const { return seed_; }
  const Tensor3& prior() const { return prior_; }

  WordId word1(std::size_t i) const { return units_[i].w1; }
  WordId word2(std::size_t i) const { return units_[i].w2; }
  std::size_t sentiment_of(std::size_t i) const { return assignment_[i] / hyper_.topics; }
  std::size_t topic_of(std::size_t i) const { return assignment_[i] % hyper_.topics; }

  std::int64_t n_s(std::size_t s) const { return n_s_[s]; }
  std::int64_t n_sz(std::size_t s, std::size_t z) const { return n_sz_[s * hyper_.topics + z]; }
  std::int64_t n_sz_total(std::size_t s, std::size_t z) const { return n_sz_total_[s * hyper_.topics + z]; }
  std::int64_t n_szw(std::size_t s, std::size_t z, WordId w) const {
    return n_wsz_[w * hyper_.sentiments * hyper_.topics + s * hyper_.topics + z];
  }

  // Unnormalized collapsed conditional of biterm i over all S*K slots, with
  // biterm i's own counts excluded. Index = s * K + z.
  std::vector<double> conditional(std::size_t i) {
    const auto sz = assignment_[i];
    add(i, sz, -1);
    std::vector<double> out(hyper_.sentiments * hyper_.topics);
    fill_conditional(i, out);
    add(i, sz, +1);
    return out;
  }

  // One systematic-scan sweep over all biterms.
  void sweep() {
    const std::size_t SK = hyper_.sentiments * hyper_.topics;
    scratch_.resize(SK);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      add(i, assignment_[i], -1);
      const double total = fill_conditional(i, scratch_);
      const auto sz = static_cast<std::uint32_t>(sample_discrete(rng_, scratch_, total));
      assignment_[i] = sz;
      add(i, sz, +1);
    }
  }

  // Checks the three count identities against a recount from assignments.
  bool counts_consistent() const {
    const std::size_t S = hyper_.sentiments, K = hyper_.topics, SK = S * K;
    std::vector<std::int64_t> ns(S, 0), nsz(SK, 0), ntot(SK, 0), nw(vocab_size_ * SK, 0);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const auto sz = assignment_[i];
      ++ns[sz / K];
      ++nsz[sz];
      ntot[sz] += 2;
      ++nw[units_[i].w1 * SK + sz];
      ++nw[units_[i].w2 * SK + sz];
    }
    for (std::size_t s = 0; s < S; ++s) {
      std::int64_t sum = 0;
      for (std::size_t z = 0; z < K; ++z) sum += n_sz_[s * K + z];
      if (sum != n_s_[s]) return false;
    }
    for (std::size_t sz = 0; sz < SK; ++sz) {
      std::int64_t sum = 0;
      for (std::size_t w = 0; w < vocab_size_; ++w) sum += n_wsz_[w * SK + sz];
      if (sum != n_sz_total_[sz]) return false;
    }
    if (ns != n_s_ || nsz != n_sz_ || ntot != n_sz_total_) return false;
    for (std::size_t j = 0; j < nw.size(); ++j)
      if (nw[j] != n_wsz_[j] || nw[j] < 0) return false;
    return true;
  }

  // Posterior means from the current counts.
  VersionSnapshot snapshot(std::string version_id = {}, std::vector<std::string> vocabulary = {}) const {
    const std::size_t S = hyper_.sentiments, K = hyper_.topics, SK = S * K;
    VersionSnapshot snap;
    snap.version_id = std::move(version_id);
    snap.vocabulary = std::move(vocabulary);
    snap.pi.resize(S);
    snap.theta.resize(SK);
    snap.phi = Tensor3(S, K, vocab_size_);
    snap.beta_used = prior_;
    snap.assignment_counts = n_sz_;
    const double nb = static_cast<double>(units_.size());
    for (std::size_t s = 0; s < S; ++s) {
      snap.pi[s] = (static_cast<double>(n_s_[s]) + hyper_.gamma) / (nb + static_cast<double>(S) * hyper_.gamma);
      for (std::size_t z = 0; z < K; ++z) {
        const std::size_t sz = s * K + z;
        snap.theta[sz] = (static_cast<double>(n_sz_[sz]) + hyper_.alpha) /
                         (static_cast<double>(n_s_[s]) + static_cast<double>(K) * hyper_.alpha);
        const double denom = static_cast<double>(n_sz_total_[sz]) + prior_row_sum_[sz];
        auto row = snap.phi.row(s, z);
        for (std::size_t w = 0; w < vocab_size_; ++w)
          row[w] = (static_cast<double>(n_wsz_[w * SK + sz]) + prior_wsz_[w * SK + sz]) / denom;
      }
    }
    return snap;
  }

 private:
  struct Unit {
    WordId w1;
    WordId w2;
  };

  void add(std::size_t i, std::uint32_t sz, int delta) {
    const std::size_t SK = hyper_.sentiments * hyper_.topics;
    n_s_[sz / hyper_.topics] += delta;
    n_sz_[sz] += delta;
    n_sz_total_[sz] += 2 * delta;
    n_wsz_[units_[i].w1 * SK + sz] += delta;
    n_wsz_[units_[i].w2 * SK + sz] += delta;
  }

  double fill_conditional(std::size_t i, std::span<double> out) const {
    const std::size_t S = hyper_.sentiments, K = hyper_.topics, SK = S * K;
    const double alpha = hyper_.alpha, k_alpha = static_cast<double>(K) * alpha;
    const std::int32_t* c1 = n_wsz_.data() + units_[i].w1 * SK;
    const std::int32_t* c2 = n_wsz_.data() + units_[i].w2 * SK;
    const double* b1 = prior_wsz_.data() + units_[i].w1 * SK;
    const double* b2 = prior_wsz_.data() + units_[i].w2 * SK;
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const double ns = static_cast<double>(n_s_[s]);
      const double sentiment_term = lambda_[i * S + s] * (ns + hyper_.gamma) / (ns + k_alpha);
      for (std::size_t z = 0; z < K; ++z) {
        const std::size_t sz = s * K + z;
        const double nt = static_cast<double>(n_sz_total_[sz]) + prior_row_sum_[sz];
        const double p = sentiment_term * (static_cast<double>(n_sz_[sz]) + alpha) * (c1[sz] + b1[sz]) *
                         (c2[sz] + b2[sz]) / (nt * (nt + 1.0));
        out[sz] = p;
        total += p;
      }
    }
    return total;
  }

  Hyperparameters hyper_;
  std::size_t vocab_size_;
  Tensor3 prior_;
  std::vector<double> prior_wsz_;  // word-major copy of the prior: [w][s*K+z]
  std::vector<double> prior_row_sum_;
  std::vector<Unit> units_;
  std::vector<double> lambda_;  // per-unit sentiment weights, [i][s]
  std::vector<std::uint32_t> assignment_;  // s * K + z
  std::vector<std::int64_t> n_s_;
  std::vector<std::int64_t> n_sz_;
  std::vector<std::int64_t> n_sz_total_;
  std::vector<std::int32_t> n_wsz_;  // [w][s*K+z]
  std::vector<double> scratch_;
  Rng rng_;
  std::uint64_t seed_;
};

// All biterms of a version corpus, reviews processed in order.
inline std::vector<Biterm> corpus_biterms(const VersionCorpus& corpus) {
  std::vector<Biterm> out;
  for (const auto& doc : corpus.documents) {
    auto b = extract_biterms(doc);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

inline BstModelState init_model(const VersionCorpus& corpus, const Hyperparameters& hyper,
                                 const PolarityLexicon& lexicon, std::uint64_t seed, Tensor3 prior = {}) {
  const auto polarity = word_polarities(corpus.vocabulary, lexicon);
  return BstModelState(corpus_biterms(corpus), corpus.vocabulary.size(), hyper, polarity, seed, std::move(prior));
}

inline void gibbs_sweep(BstModelState& state) { state.sweep(); }

struct TrainOptions {
  std::size_t iterations = 500;
  // When > 0, the returned estimates average the posterior means of the
  // last `average_last` sweeps instead of using only the final one.
  std::size_t average_last = 0;
};

inline VersionSnapshot train(BstModelState& state, const TrainOptions& options, std::string version_id = {},
                             std::vector<std::string> vocabulary = {}) {
  if (options.iterations < 1) throw Error("train: iterations must be >= 1");
  const std::size_t averaged = std::min(options.average_last, options.iterations);
  for (std::size_t it = 0; it + averaged < options.iterations; ++it) state.sweep();
  if (averaged == 0) return state.snapshot(std::move(version_id), std::move(vocabulary));

  VersionSnapshot acc;
  for (std::size_t it = 0; it < averaged; ++it) {
    state.sweep();
    auto snap = state.snapshot();
    if (it == 0) {
      acc = std::move(snap);
      continue;
    }
    for (std::size_t j = 0; j < acc.pi.size(); ++j) acc.pi[j] += snap.pi[j];
    for (std::size_t j = 0; j < acc.theta.size(); ++j) acc.theta[j] += snap.theta[j];
    for (std::size_t j = 0; j < acc.phi.raw().size(); ++j) acc.phi.raw()[j] += snap.phi.raw()[j];
    acc.assignment_counts = snap.assignment_counts;
  }
  const double n = static_cast<double>(averaged);
  for (double& v : acc.pi) v /= n;
  for (double& v : acc.theta) v /= n;
  for (double& v : acc.phi.raw()) v /= n;
  acc.version_id = std::move(version_id);
  acc.vocabulary = std::move(vocabulary);
  return acc;
}

inline VersionSnapshot train(BstModelState& state, std::size_t iterations) {
  return train(state, TrainOptions{iterations, 0});
}

}  // namespace reviewpulse::bst

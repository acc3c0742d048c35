#pragma once

// Topic interpretation with phrase and sentence candidates.
//
// Each candidate gets two similarity levels per topic: a topic-space level
// (negative KL divergence against the topic-word distribution) and an
// embedding-space level (attention over the topic's top words, weighted by
// their probabilities). Both levels are min-max normalized over the
// candidate pool for every topic, mixed with weight m, and penalized by the
// mean similarity to the other topics scaled by mu.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "reviewpulse/common.hpp"
#include "reviewpulse/corpus.hpp"
#include "reviewpulse/embed.hpp"

namespace reviewpulse::labeling {

using corpus::Vocabulary;
using embed::EmbeddingTable;

enum class CandidateKind { phrase, sentence };

inline std::string_view kind_name(CandidateKind k) { return k == CandidateKind::phrase ? "phrase" : "sentence"; }

struct Candidate {
  CandidateKind kind = CandidateKind::phrase;
  std::vector<std::string> tokens;  // the two words of a phrase, or the sentence tokens
  std::string source_version;
  std::size_t count = 1;

  // Human-readable text; phrase tokens inside sentences are split back apart.
  std::string text() const {
    std::string out = join(tokens, " ");
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
  }
  // Token under which a phrase appears in the topic vocabulary.
  std::string joined() const { return join(tokens, "_"); }

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct LabelingParams {
  double m = 0.5;
  double mu = 1.0;
  std::size_t top_words = 50;
  double epsilon = 1e-12;

  void validate() const {
    if (!(m >= 0.0 && m <= 1.0)) throw Error("labeling: m must lie in [0, 1]");
    if (!(mu >= 0.0)) throw Error("labeling: mu must be >= 0");
    if (top_words < 1) throw Error("labeling: top_words must be >= 1");
    if (!(epsilon > 0.0)) throw Error("labeling: epsilon must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Per-topic precomputation.

class TopicRow {
 public:
  TopicRow(std::span<const double> phi, const Vocabulary& vocabulary, const EmbeddingTable* table,
           std::size_t top_words, double epsilon)
      : phi_(phi.begin(), phi.end()), vocabulary_(&vocabulary), table_(table), epsilon_(epsilon) {
    if (phi.size() > vocabulary.size()) throw Error("labeling: topic row longer than the vocabulary");
    double sum = 0.0;
    for (double p : phi_) sum += std::max(p, epsilon_);
    log_smoothed_.resize(phi_.size());
    for (std::size_t w = 0; w < phi_.size(); ++w) log_smoothed_[w] = std::log(std::max(phi_[w], epsilon_) / sum);

    std::vector<WordId> order(phi_.size());
    for (std::size_t w = 0; w < order.size(); ++w) order[w] = static_cast<WordId>(w);
    const std::size_t n = std::min(top_words, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](WordId a, WordId b) { return phi_[a] != phi_[b] ? phi_[a] > phi_[b] : a < b; });
    order.resize(n);
    top_ = std::move(order);
    if (table_) {
      zero_.assign(table_->dim(), 0.0);
      for (WordId w : top_) {
        const auto* v = table_->find(vocabulary.token(w));
        top_vectors_.push_back(v ? v : &zero_);
      }
    }
  }

  // log of the floored, renormalized probability of `token` (log epsilon when
  // the token is not in the vocabulary).
  double log_prob(std::string_view token) const {
    auto id = vocabulary_->find(token);
    if (!id || *id >= log_smoothed_.size()) return std::log(epsilon_);
    return log_smoothed_[*id];
  }

  // Attention-weighted topic probability of the top words for a query vector.
  double attention_score(std::span<const double> query) const {
    if (!table_) throw Error("labeling: embedding table required");
    std::vector<double> logits(top_.size());
    for (std::size_t i = 0; i < top_.size(); ++i) logits[i] = embed::cosine(query, *top_vectors_[i]);
    const double top = *std::max_element(logits.begin(), logits.end());
    double norm = 0.0;
    for (double& e : logits) {
      e = std::exp(e - top);
      norm += e;
    }
    double score = 0.0;
    for (std::size_t i = 0; i < top_.size(); ++i) score += logits[i] / norm * phi_[top_[i]];
    return score;
  }

  const std::vector<WordId>& top_words() const { return top_; }
  const EmbeddingTable* table() const { return table_; }

 private:
  std::vector<double> phi_;
  std::vector<double> log_smoothed_;
  const Vocabulary* vocabulary_;
  const EmbeddingTable* table_;
  double epsilon_;
  std::vector<WordId> top_;
  std::vector<const embed::Vector*> top_vectors_;
  embed::Vector zero_;
};

// ---------------------------------------------------------------------------
// Similarity levels

inline double sim_topic_phrase(const Candidate& a, const TopicRow& row) {
  if (a.kind != CandidateKind::phrase) throw Error("sim_topic_phrase: candidate is not a phrase");
  const double p = 1.0 / static_cast<double>(a.tokens.size());
  double kl = 0.0;
  for (const auto& w : a.tokens) kl += p * (std::log(p) - row.log_prob(w));
  return -kl;
}

// Returns nullopt when the phrase has no embedding at all.
inline std::optional<double> sim_embed_phrase_checked(const Candidate& a, const TopicRow& row) {
  if (a.kind != CandidateKind::phrase) throw Error("sim_embed_phrase: candidate is not a phrase");
  const std::string joined = a.joined();
  const auto query = embed::embed_text(std::span<const std::string>(&joined, 1), *row.table());
  if (embed::is_zero(query)) return std::nullopt;
  return row.attention_score(query);
}

inline double sim_embed_phrase(const Candidate& a, const TopicRow& row) {
  if (auto s = sim_embed_phrase_checked(a, row)) return *s;
  warn(concat("sim_embed_phrase: no embedding for '", a.text(), "'"));
  return 0.0;
}

// Sentence sums run over the tokens in sorted order so that reorderings of
// the same words score identically, bit for bit.
inline std::vector<std::string> sorted_tokens(const Candidate& s) {
  auto t = s.tokens;
  std::sort(t.begin(), t.end());
  return t;
}

inline double sim_topic_sentence(const Candidate& s, const TopicRow& row) {
  if (s.kind != CandidateKind::sentence) throw Error("sim_topic_sentence: candidate is not a sentence");
  if (s.tokens.empty()) return 0.0;
  const double tf = 1.0 / static_cast<double>(s.tokens.size());
  double sum = 0.0;
  for (const auto& w : sorted_tokens(s)) sum += tf * row.log_prob(w);
  return sum;
}

// Word-level attention score, or nullopt when the word has no vector and the
// table skips unknown tokens.
inline std::optional<double> sim_embed_word(const std::string& word, const TopicRow& row) {
  const auto query = embed::embed_text(std::span<const std::string>(&word, 1), *row.table());
  if (embed::is_zero(query) && row.table()->oov_policy() == embed::OovPolicy::skip) return std::nullopt;
  return row.attention_score(query);
}

// Mean word-level score over the sentence's tokens (length-normalized sum).
// `cache` memoizes word scores for this topic row and may be null.
inline double sim_embed_sentence(const Candidate& s, const TopicRow& row,
                                 std::unordered_map<std::string, std::optional<double>>* cache = nullptr) {
  if (s.kind != CandidateKind::sentence) throw Error("sim_embed_sentence: candidate is not a sentence");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : sorted_tokens(s)) {
    std::optional<double> score;
    if (cache) {
      auto it = cache->find(w);
      if (it == cache->end()) it = cache->emplace(w, sim_embed_word(w, row)).first;
      score = it->second;
    } else {
      score = sim_embed_word(w, row);
    }
    if (!score) continue;
    sum += *score;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Pool scoring

// Maps values into [0, 1]; a pool without spread maps to 0.5.
inline std::vector<double> min_max_normalize(std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.5);
  if (xs.empty()) return out;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (!(*hi > *lo)) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - *lo) / (*hi - *lo);
  return out;
}

// Score = Sim_z - mu / (K - 1) * sum_{j != z} Sim_j; no penalty when K = 1.
inline double penalized_score(std::span<const double> sim_per_topic, std::size_t z, double mu) {
  const std::size_t K = sim_per_topic.size();
  if (z >= K) throw Error("penalized_score: topic out of range");
  if (K < 2 || mu == 0.0) return sim_per_topic[z];
  double others = 0.0;
  for (std::size_t j = 0; j < K; ++j)
    if (j != z) others += sim_per_topic[j];
  return sim_per_topic[z] - mu / static_cast<double>(K - 1) * others;
}

// Similarities of one candidate pool (all of one kind) against all topics.
struct PoolScores {
  std::size_t topics = 0;
  std::size_t candidates = 0;
  std::vector<double> topic_level;  // raw, [z][n]
  std::vector<double> embed_level;  // raw, [z][n]
  std::vector<double> combined;     // normalized mix, [z][n]

  std::span<const double> combined_for(std::size_t z) const {
    return {combined.data() + z * candidates, candidates};
  }
  std::vector<double> per_topic(std::size_t n) const {
    std::vector<double> out(topics);
    for (std::size_t z = 0; z < topics; ++z) out[z] = combined[z * candidates + n];
    return out;
  }
};

inline PoolScores pool_similarities(std::span<const Candidate> pool, std::span<const TopicRow> rows,
                                    const LabelingParams& params) {
  params.validate();
  PoolScores ps;
  ps.topics = rows.size();
  ps.candidates = pool.size();
  ps.topic_level.assign(ps.topics * ps.candidates, 0.0);
  ps.embed_level.assign(ps.topics * ps.candidates, 0.0);
  ps.combined.assign(ps.topics * ps.candidates, 0.0);
  std::size_t missing = 0;
  for (std::size_t z = 0; z < ps.topics; ++z) {
    std::unordered_map<std::string, std::optional<double>> cache;
    for (std::size_t n = 0; n < pool.size(); ++n) {
      const auto& c = pool[n];
      double t = 0.0, e = 0.0;
      if (c.kind == CandidateKind::phrase) {
        t = sim_topic_phrase(c, rows[z]);
        if (auto s = sim_embed_phrase_checked(c, rows[z])) e = *s;
        else if (z == 0) ++missing;
      } else {
        t = sim_topic_sentence(c, rows[z]);
        e = sim_embed_sentence(c, rows[z], &cache);
      }
      ps.topic_level[z * ps.candidates + n] = t;
      ps.embed_level[z * ps.candidates + n] = e;
    }
    const auto nt = min_max_normalize(std::span<const double>(ps.topic_level).subspan(z * ps.candidates, ps.candidates));
    const auto ne = min_max_normalize(std::span<const double>(ps.embed_level).subspan(z * ps.candidates, ps.candidates));
    for (std::size_t n = 0; n < pool.size(); ++n)
      ps.combined[z * ps.candidates + n] = params.m * nt[n] + (1.0 - params.m) * ne[n];
  }
  if (missing) warn(concat("labeling: ", missing, " phrase candidates have no embedding; embedding score set to 0"));
  return ps;
}

inline double score_candidate(const PoolScores& ps, std::size_t candidate, std::size_t z, const LabelingParams& params) {
  return penalized_score(ps.per_topic(candidate), z, params.mu);
}

struct Label {
  Candidate candidate;
  std::size_t topic = 0;
  std::size_t sentiment = 0;
  double score = 0.0;

  friend bool operator==(const Label&, const Label&) = default;
};

struct RankedLabels {
  std::vector<Label> phrases;
  std::vector<Label> sentences;

  friend bool operator==(const RankedLabels&, const RankedLabels&) = default;
};

// Indices of `pool` ordered by descending score, then count, then tokens.
inline std::vector<std::size_t> rank_pool(std::span<const Candidate> pool, std::span<const double> scores) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (pool[a].count != pool[b].count) return pool[a].count > pool[b].count;
    if (pool[a].tokens != pool[b].tokens) return pool[a].tokens < pool[b].tokens;
    return a < b;
  });
  return order;
}

// Ranked labels for every topic from precomputed pool scores.
inline std::vector<Label> top_labels(std::span<const Candidate> pool, const PoolScores& ps, std::size_t z,
                                     std::size_t sentiment, const LabelingParams& params, std::size_t n) {
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = score_candidate(ps, i, z, params);
  const auto order = rank_pool(pool, scores);
  std::vector<Label> out;
  for (std::size_t i = 0; i < std::min(n, order.size()); ++i)
    out.push_back({pool[order[i]], z, sentiment, scores[order[i]]});
  return out;
}

inline std::vector<TopicRow> topic_rows(std::span<const std::span<const double>> all_phi, const Vocabulary& vocabulary,
                                        const EmbeddingTable& table, const LabelingParams& params) {
  std::vector<TopicRow> rows;
  rows.reserve(all_phi.size());
  for (const auto& phi : all_phi) rows.emplace_back(phi, vocabulary, &table, params.top_words, params.epsilon);
  return rows;
}

// Top phrases and sentences for topic z. Phrases and sentences are separate
// pools, each normalized on its own.
inline RankedLabels label_topic(std::size_t z, std::size_t sentiment, std::span<const Candidate> candidates,
                                std::span<const std::span<const double>> all_phi, const Vocabulary& vocabulary,
                                const LabelingParams& params, const EmbeddingTable& table, std::size_t n_phrases,
                                std::size_t n_sentences) {
  if (z >= all_phi.size()) throw Error("label_topic: topic out of range");
  std::vector<Candidate> phrases, sentences;
  for (const auto& c : candidates) (c.kind == CandidateKind::phrase ? phrases : sentences).push_back(c);
  if (phrases.empty() && sentences.empty()) {
    warn("label_topic: empty candidate pool");
    return {};
  }
  const auto rows = topic_rows(all_phi, vocabulary, table, params);
  RankedLabels out;
  if (!phrases.empty()) out.phrases = top_labels(phrases, pool_similarities(phrases, rows, params), z, sentiment, params, n_phrases);
  if (!sentences.empty())
    out.sentences = top_labels(sentences, pool_similarities(sentences, rows, params), z, sentiment, params, n_sentences);
  return out;
}

// ---------------------------------------------------------------------------
// Candidate pools from a version corpus.

struct CandidateOptions {
  std::size_t min_sentence_tokens = 3;
  std::size_t max_sentence_tokens = 30;
  std::size_t max_sentences = 2000;
  std::uint64_t seed = 1;
};

inline std::vector<Candidate> build_candidates(const corpus::VersionCorpus& vc, const CandidateOptions& opts = {}) {
  std::vector<Candidate> out;
  for (const auto& p : vc.phrases)
    out.push_back({CandidateKind::phrase, {p.first, p.second}, vc.version_id, p.count});

  std::map<std::vector<std::string>, std::size_t> sentences;
  for (const auto& r : vc.reviews)
    for (const auto& s : r.sentences)
      if (s.size() >= opts.min_sentence_tokens && s.size() <= opts.max_sentence_tokens) ++sentences[s];

  std::vector<Candidate> pool;
  for (const auto& [tokens, n] : sentences) pool.push_back({CandidateKind::sentence, tokens, vc.version_id, n});
  if (pool.size() > opts.max_sentences) {
    // Weighted sampling without replacement: keep the largest u^(1/count).
    Rng rng(opts.seed);
    std::vector<std::pair<double, std::size_t>> keys(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      keys[i] = {std::log(std::max(uniform01(rng), 1e-300)) / static_cast<double>(pool[i].count), i};
    std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(opts.max_sentences), keys.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    keys.resize(opts.max_sentences);
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    std::vector<Candidate> kept;
    for (const auto& k : keys) kept.push_back(std::move(pool[k.second]));
    pool = std::move(kept);
  }
  out.insert(out.end(), std::make_move_iterator(pool.begin()), std::make_move_iterator(pool.end()));
  return out;
}

}  // namespace reviewpulse::labeling

#pragma once

// End-to-end orchestration: corpora -> chained per-version training ->
// emerging topic detection -> labeling -> issue reports (-> evaluation).

#include <optional>
#include <string>
#include <vector>

#include "reviewpulse/bst.hpp"
#include "reviewpulse/common.hpp"
#include "reviewpulse/corpus.hpp"
#include "reviewpulse/emerging.hpp"
#include "reviewpulse/embed.hpp"
#include "reviewpulse/eval.hpp"
#include "reviewpulse/labeling.hpp"
#include "reviewpulse/online.hpp"
#include "reviewpulse/report.hpp"

namespace reviewpulse::pipeline {

struct PipelineConfig {
  // Inputs
  std::string reviews_path;
  std::string lexicon_path;
  std::string filter_path;
  std::string embeddings_path;  // pretrained vectors; takes precedence when set
  bool train_embeddings = true;
  std::string changelog_path;   // empty: no evaluation

  // Model
  std::size_t omega = 3;
  std::size_t topics = 13;
  std::size_t sentiments = kNumSentiments;
  double alpha = 0.1;
  double beta = 0.01;
  double gamma = 1.0;
  double lambda_match = 0.9;
  double lambda_miss = 0.05;
  double beta_floor = 1e-6;
  std::size_t iterations = 500;
  std::size_t average_last = 0;
  std::uint64_t seed = 1;

  // Corpus
  double pmi_threshold = 5.0;
  std::size_t min_phrase_count = 3;

  // Emerging detection
  double delta = 1.25;
  bool per_topic_stats = false;
  std::size_t detect_sentiment = static_cast<std::size_t>(Sentiment::negative);

  // Labeling
  double mu = 1.0;
  double m = 0.5;
  std::size_t top_words = 50;
  double epsilon = 1e-12;
  std::size_t n_phrases = 3;
  std::size_t n_sentences = 3;
  std::size_t max_sentences = 2000;
  std::size_t min_sentence_tokens = 3;
  std::size_t max_sentence_tokens = 30;

  // Embeddings
  std::size_t embedding_dim = 100;
  std::size_t embedding_window = 5;
  std::size_t embedding_negatives = 5;
  std::size_t embedding_epochs = 5;
  std::size_t embedding_min_count = 2;
  bool oov_zero = false;

  // Evaluation
  double match_threshold = eval::kDefaultMatchThreshold;

  bst::Hyperparameters hyperparameters() const {
    bst::Hyperparameters h;
    h.topics = topics;
    h.sentiments = sentiments;
    h.alpha = alpha;
    h.beta = beta;
    h.gamma = gamma;
    h.lambda_match = lambda_match;
    h.lambda_miss = lambda_miss;
    return h;
  }

  labeling::LabelingParams labeling_params() const { return {m, mu, top_words, epsilon}; }

  embed::TrainParams embedding_params() const {
    return {embedding_dim, embedding_window, embedding_negatives, embedding_epochs, 0.025, embedding_min_count, seed};
  }

  void validate() const {
    hyperparameters().validate();
    labeling_params().validate();
    if (omega < 1) throw Error("config: omega must be >= 1");
    if (iterations < 1) throw Error("config: iterations must be >= 1");
    if (detect_sentiment >= sentiments) throw Error("config: detect_sentiment out of range");
  }
};

// An error raised inside a pipeline stage, tagged with where it happened.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string version, const std::string& what)
      : Error(concat("stage '", stage, "'", version.empty() ? "" : concat(" (version '", version, "')"), ": ", what)),
        stage_(std::move(stage)),
        version_(std::move(version)) {}
  const std::string& stage() const { return stage_; }
  const std::string& version() const { return version_; }

 private:
  std::string stage_;
  std::string version_;
};

template <typename F>
auto run_stage(const std::string& stage, const std::string& version, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, version, e.what());
  }
}

// Seed of the Gibbs chain of the t-th version.
inline std::uint64_t version_seed(std::uint64_t seed, std::size_t t) { return seed + 1000003ULL * (t + 1); }

// ---------------------------------------------------------------------------
// Stages

inline corpus::FilterList load_filter(const PipelineConfig& cfg) {
  if (cfg.filter_path.empty()) return {};
  return run_stage("preprocess", "", [&] { return corpus::load_filter_list(cfg.filter_path); });
}

inline corpus::PolarityLexicon load_lexicon(const PipelineConfig& cfg) {
  if (cfg.lexicon_path.empty()) return {};
  return run_stage("preprocess", "", [&] {
    return corpus::load_polarity_lexicon(cfg.lexicon_path).with_lemmas(corpus::LemmaRules::english());
  });
}

inline std::vector<corpus::VersionCorpus> prepare_corpora(const std::vector<corpus::RawReview>& reviews,
                                                          const PipelineConfig& cfg) {
  return run_stage("preprocess", "", [&] {
    return corpus::build_version_corpora(reviews, load_filter(cfg), corpus::LemmaRules::english(),
                                         {cfg.pmi_threshold, cfg.min_phrase_count});
  });
}

inline std::vector<corpus::VersionCorpus> prepare_corpora(const PipelineConfig& cfg) {
  auto reviews = run_stage("preprocess", "", [&] { return corpus::load_reviews(cfg.reviews_path); });
  return prepare_corpora(reviews, cfg);
}

// Trains the non-empty versions corpora[first..] in order, continuing from
// `window` (empty for a cold start). Chain seeds depend on the corpus index,
// so resuming from a checkpoint reproduces an uninterrupted run.
inline std::vector<bst::VersionSnapshot> train_versions(std::span<const corpus::VersionCorpus> corpora,
                                                        const corpus::PolarityLexicon& lexicon,
                                                        const PipelineConfig& cfg, online::VersionWindow& window,
                                                        std::size_t first = 0) {
  cfg.validate();
  window.omega = cfg.omega;
  while (window.snapshots.size() > window.omega) window.snapshots.pop_front();
  online::OnlineOptions opts;
  opts.beta_floor = cfg.beta_floor;
  opts.train = {cfg.iterations, cfg.average_last};
  std::vector<bst::VersionSnapshot> out;
  for (std::size_t t = first; t < corpora.size(); ++t) {
    const auto& vc = corpora[t];
    if (bst::corpus_biterms(vc).empty()) {
      warn(concat("version '", vc.version_id, "' has no biterms; not modeled"));
      continue;
    }
    auto [snap, next] = run_stage("train", vc.version_id, [&] {
      return online::advance(std::move(window), vc, cfg.hyperparameters(), lexicon, version_seed(cfg.seed, t), opts);
    });
    window = std::move(next);
    out.push_back(std::move(snap));
  }
  return out;
}

inline std::vector<bst::VersionSnapshot> train_versions(std::span<const corpus::VersionCorpus> corpora,
                                                        const corpus::PolarityLexicon& lexicon,
                                                        const PipelineConfig& cfg) {
  online::VersionWindow window;
  return train_versions(corpora, lexicon, cfg, window);
}

// Anomaly set per snapshot; nullopt while fewer than two versions exist.
inline std::vector<std::optional<emerging::EmergingTopicSet>> detect_emerging(
    std::span<const bst::VersionSnapshot> snapshots, const PipelineConfig& cfg) {
  std::vector<std::optional<emerging::EmergingTopicSet>> out;
  for (std::size_t t = 0; t < snapshots.size(); ++t) {
    if (t == 0) {
      out.emplace_back();
      continue;
    }
    out.push_back(run_stage("detect", snapshots[t].version_id, [&] {
      const auto m = emerging::divergence_matrix(snapshots.subspan(0, t + 1), cfg.omega, cfg.detect_sentiment);
      return emerging::detect_anomalies(m, cfg.delta,
                                        cfg.per_topic_stats ? emerging::StatisticsScope::per_topic
                                                            : emerging::StatisticsScope::whole_matrix);
    }));
  }
  return out;
}

inline embed::EmbeddingTable obtain_embeddings(std::span<const corpus::VersionCorpus> corpora,
                                               const PipelineConfig& cfg) {
  auto table = run_stage("embed", "", [&] {
    if (!cfg.embeddings_path.empty()) return embed::load_vectors(cfg.embeddings_path);
    if (!cfg.train_embeddings) throw Error("no embeddings_path given and train_embeddings is off");
    return embed::train_vectors(corpora, cfg.embedding_params());
  });
  table.set_oov_policy(cfg.oov_zero ? embed::OovPolicy::zero : embed::OovPolicy::skip);
  return table;
}

// Labels for every topic of the detection sentiment, one entry per topic.
inline std::vector<labeling::RankedLabels> label_version(const corpus::VersionCorpus& vc,
                                                         const bst::VersionSnapshot& snap,
                                                         const embed::EmbeddingTable& table,
                                                         const PipelineConfig& cfg) {
  return run_stage("label", vc.version_id, [&] {
    const auto params = cfg.labeling_params();
    const auto vocabulary = corpus::Vocabulary::from_tokens(snap.vocabulary);
    labeling::CandidateOptions copts{cfg.min_sentence_tokens, cfg.max_sentence_tokens, cfg.max_sentences, cfg.seed};
    const auto candidates = labeling::build_candidates(vc, copts);
    std::vector<labeling::Candidate> phrases, sentences;
    for (const auto& c : candidates) (c.kind == labeling::CandidateKind::phrase ? phrases : sentences).push_back(c);

    std::vector<std::span<const double>> phi;
    for (std::size_t z = 0; z < snap.topics(); ++z) phi.push_back(snap.phi.row(cfg.detect_sentiment, z));
    const auto rows = labeling::topic_rows(phi, vocabulary, table, params);
    const auto phrase_scores = labeling::pool_similarities(phrases, rows, params);
    const auto sentence_scores = labeling::pool_similarities(sentences, rows, params);
    std::vector<labeling::RankedLabels> out(snap.topics());
    for (std::size_t z = 0; z < snap.topics(); ++z) {
      out[z].phrases = labeling::top_labels(phrases, phrase_scores, z, cfg.detect_sentiment, params, cfg.n_phrases);
      out[z].sentences =
          labeling::top_labels(sentences, sentence_scores, z, cfg.detect_sentiment, params, cfg.n_sentences);
    }
    return out;
  });
}

inline report::IssueReport build_report(const corpus::VersionCorpus& vc, const bst::VersionSnapshot& snap,
                                        const std::optional<emerging::EmergingTopicSet>& anomalies,
                                        const std::vector<labeling::RankedLabels>& labels, const PipelineConfig& cfg) {
  return run_stage("report", vc.version_id, [&] {
    report::IssueReport rep;
    rep.version_id = snap.version_id;
    rep.generated_at = report::iso_timestamp(vc.latest_timestamp.value_or(0));
    const auto vocabulary = corpus::Vocabulary::from_tokens(snap.vocabulary);
    for (std::size_t z = 0; z < snap.topics(); ++z) {
      report::Branch b;
      b.topic = z;
      b.sentiment = std::string(sentiment_name(cfg.detect_sentiment));
      std::vector<labeling::Candidate> phrase_labels;
      for (const auto& l : labels[z].phrases) {
        b.phrases.push_back(report::to_record(l));
        phrase_labels.push_back(l.candidate);
      }
      for (const auto& l : labels[z].sentences) b.sentences.push_back(report::to_record(l));
      b.width = report::branch_width(phrase_labels, snap.phi.row(cfg.detect_sentiment, z), vocabulary);
      if (anomalies) {
        b.emerging = anomalies->flagged(z);
        b.zscore = anomalies->zscores[z];
        b.divergence = anomalies->divergences[z];
      }
      rep.branches.push_back(std::move(b));
    }
    return rep;
  });
}

struct PipelineResult {
  std::vector<corpus::VersionCorpus> corpora;
  std::vector<bst::VersionSnapshot> snapshots;
  online::VersionWindow window;
  std::vector<std::optional<emerging::EmergingTopicSet>> anomalies;
  embed::EmbeddingTable embeddings;
  std::vector<std::vector<labeling::RankedLabels>> labels;
  report::ReportBundle bundle;
  std::optional<eval::ReportEval> phrase_eval;
  std::optional<eval::ReportEval> sentence_eval;
};

// Runs every stage from already-built corpora.
inline PipelineResult run_pipeline(std::vector<corpus::VersionCorpus> corpora, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult r;
  r.corpora = std::move(corpora);
  const auto lexicon = load_lexicon(cfg);
  r.snapshots = train_versions(r.corpora, lexicon, cfg, r.window);
  r.anomalies = detect_emerging(r.snapshots, cfg);
  r.embeddings = obtain_embeddings(r.corpora, cfg);

  std::vector<report::IssueReport> reports;
  for (std::size_t t = 0; t < r.snapshots.size(); ++t) {
    const auto& snap = r.snapshots[t];
    const auto it = std::find_if(r.corpora.begin(), r.corpora.end(),
                                 [&](const corpus::VersionCorpus& c) { return c.version_id == snap.version_id; });
    r.labels.push_back(label_version(*it, snap, r.embeddings, cfg));
    reports.push_back(build_report(*it, snap, r.anomalies[t], r.labels.back(), cfg));
  }
  r.bundle = report::make_bundle(std::move(reports));

  if (!cfg.changelog_path.empty()) {
    run_stage("eval", "", [&] {
      const auto changelogs =
          eval::load_changelog(cfg.changelog_path, load_filter(cfg), corpus::LemmaRules::english());
      r.phrase_eval = eval::evaluate_report(r.bundle, changelogs, r.embeddings, eval::LabelLevel::phrase,
                                            cfg.match_threshold);
      r.sentence_eval = eval::evaluate_report(r.bundle, changelogs, r.embeddings, eval::LabelLevel::sentence,
                                              cfg.match_threshold);
      return 0;
    });
  }
  return r;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  return run_pipeline(prepare_corpora(cfg), cfg);
}

}  // namespace reviewpulse::pipeline

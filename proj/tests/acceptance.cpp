// Acceptance checks, one PASS/FAIL line per criterion. With no arguments all
// criteria run; numeric arguments select a subset (e.g. `acceptance 2 6`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "label_oracle.hpp"
#include "reviewpulse/reviewpulse.hpp"
#include "synthetic.hpp"

using namespace reviewpulse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Published precision/recall pairs reproduce their F values.

Outcome metric_arithmetic() {
  struct Row {
    double p, r, f;
  };
  const Row rows[] = {{.625, .551, .586}, {.667, .468, .550}, {.667, .706, .686}, {.889, .508, .646},
                      {.800, .633, .707}, {.750, .654, .699}, {.667, .760, .710}, {.833, .848, .841},
                      {.833, .809, .821}, {1.000, .749, .857}, {.800, .867, .832}, {.750, .840, .793}};
  double worst = 0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(eval::f_hybrid(r.p, r.r) - r.f));
  return {worst <= 1e-3, "12 pairs, max |dF| = " + fmt("%.5f", worst)};
}

// ---------------------------------------------------------------------------
// 2. Planted themes and polarity are recovered by the sampler.

struct RecoveryWorld {
  corpus::VersionCorpus corpus;
  corpus::PolarityLexicon lexicon;
  std::vector<std::set<std::string>> themes;
};

RecoveryWorld recovery_world(std::uint64_t seed) {
  RecoveryWorld w;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> content, neg, pos;
  for (int t = 0; t < 2; ++t) {
    const std::string p = t ? "b" : "a";
    content.push_back(synth::words(p + "c", 16));
    neg.push_back(synth::words(p + "neg", 2));
    pos.push_back(synth::words(p + "pos", 2));
    std::set<std::string> all(content[t].begin(), content[t].end());
    for (const auto& x : neg[t]) all.insert(x), w.lexicon.set(x, -1);
    for (const auto& x : pos[t]) all.insert(x), w.lexicon.set(x, 1);
    w.themes.push_back(all);
  }
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 2000; ++i) {
    const auto t = rng() % 2;
    auto d = synth::draw_distinct(rng, content[t], 5);
    const auto& polar = rng() % 2 ? neg[t] : pos[t];
    d.push_back(polar[rng() % polar.size()]);
    docs.push_back(d);
  }
  w.corpus = synth::corpus_from_docs("1.0", docs);
  return w;
}

bool recovery_run(std::uint64_t seed, std::string& why) {
  const auto w = recovery_world(seed);
  bst::Hyperparameters h;
  h.topics = 2;
  h.sentiments = 3;
  auto state = bst::init_model(w.corpus, h, w.lexicon, seed * 7 + 1);
  const auto snap = bst::train(state, bst::TrainOptions{500, 0}, "1.0", w.corpus.vocabulary.tokens());

  const double total = static_cast<double>(state.num_biterms());
  std::set<std::size_t> themes_seen;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t z = 0; z < 2; ++z) {
      if (static_cast<double>(snap.assignment_counts[s * 2 + z]) < 0.01 * total) continue;
      const auto row = snap.phi.row(s, z);
      double best = 0;
      std::size_t best_theme = 0;
      for (std::size_t t = 0; t < 2; ++t) {
        double mass = 0;
        for (std::size_t v = 0; v < row.size(); ++v)
          if (w.themes[t].contains(snap.vocabulary[v])) mass += row[v];
        if (mass > best) best = mass, best_theme = t;
      }
      if (best < 0.9) {
        why = "row (" + std::to_string(s) + "," + std::to_string(z) + ") purity " + fmt("%.3f", best);
        return false;
      }
      themes_seen.insert(best_theme);
    }
  if (themes_seen.size() != 2) {
    why = "a planted theme has no row";
    return false;
  }

  const auto polarity = bst::word_polarities(w.corpus.vocabulary, w.lexicon);
  std::size_t polar = 0, matched = 0;
  for (std::size_t i = 0; i < state.num_biterms(); ++i) {
    auto code = polarity[state.word1(i)];
    if (code == bst::kNoPolarity) code = polarity[state.word2(i)];
    if (code == bst::kNoPolarity) continue;
    ++polar;
    if (state.sentiment_of(i) == static_cast<std::size_t>(code + 1)) ++matched;
  }
  const double rate = static_cast<double>(matched) / static_cast<double>(polar);
  if (rate < 0.9) {
    why = "polarity match " + fmt("%.3f", rate);
    return false;
  }
  return true;
}

Outcome sampler_recovery() {
  const auto t0 = Clock::now();
  int passed = 0;
  std::string failures;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::string why;
    if (recovery_run(seed, why)) ++passed;
    else failures += " [seed " + std::to_string(seed) + ": " + why + "]";
  }
  const double secs = seconds_since(t0);
  return {passed >= 18 && secs < 60,
          std::to_string(passed) + "/20 seeds, " + fmt("%.1f s", secs) + failures};
}

// ---------------------------------------------------------------------------
// 3. Empirical Gibbs frequencies against the enumerated collapsed posterior.

Outcome gibbs_vs_enumeration() {
  const auto t0 = Clock::now();
  bst::Hyperparameters h;
  h.topics = 2;
  h.sentiments = 3;
  h.alpha = 0.5;
  h.gamma = 1.0;
  const std::size_t S = 3, K = 2, SK = 6, V = 3;
  // Word 1 is shared so the two assignments interact; words 0 and 2 carry polarity.
  const std::vector<bst::Biterm> biterms = {{0, 1, 1}, {1, 2, 1}};
  const std::vector<std::int8_t> polarity = {-1, bst::kNoPolarity, 1};
  Tensor3 prior(S, K, V);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.6);
  for (auto& x : prior.raw()) x = u(rng);

  // Collapsed joint: lambda terms times Dirichlet-multinomial normalizers.
  auto log_joint = [&](std::size_t a0, std::size_t a1) {
    std::vector<double> ns(S, 0), nsz(SK, 0), ntot(SK, 0), nw(SK * V, 0);
    double lp = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      const std::size_t a = i ? a1 : a0, s = a / K;
      const std::int8_t codes[2] = {polarity[biterms[i].w1], polarity[biterms[i].w2]};
      lp += std::log(bst::sentiment_prior(codes, h)[s]);
      ns[s] += 1;
      nsz[a] += 1;
      ntot[a] += 2;
      nw[a * V + biterms[i].w1] += 1;
      nw[a * V + biterms[i].w2] += 1;
    }
    for (std::size_t s = 0; s < S; ++s) {
      lp += std::lgamma(ns[s] + h.gamma) - std::lgamma(ns[s] + K * h.alpha);
      for (std::size_t z = 0; z < K; ++z) lp += std::lgamma(nsz[s * K + z] + h.alpha);
    }
    for (std::size_t a = 0; a < SK; ++a) {
      double bsum = 0;
      for (std::size_t w = 0; w < V; ++w) {
        const double b = prior.at(a / K, a % K, w);
        bsum += b;
        lp += std::lgamma(nw[a * V + w] + b) - std::lgamma(b);
      }
      lp -= std::lgamma(ntot[a] + bsum) - std::lgamma(bsum);
    }
    return lp;
  };
  std::vector<double> exact(SK * SK);
  double z = 0;
  for (std::size_t a = 0; a < SK; ++a)
    for (std::size_t b = 0; b < SK; ++b) z += exact[a * SK + b] = std::exp(log_joint(a, b));
  for (auto& x : exact) x /= z;

  bst::BstModelState state(biterms, V, h, polarity, 2024, prior);
  for (int i = 0; i < 1000; ++i) state.sweep();
  const int sweeps = 100000;
  std::vector<double> freq(SK * SK, 0);
  for (int i = 0; i < sweeps; ++i) {
    state.sweep();
    const auto a = state.sentiment_of(0) * K + state.topic_of(0), b = state.sentiment_of(1) * K + state.topic_of(1);
    freq[a * SK + b] += 1.0 / sweeps;
  }
  double tv = 0;
  for (std::size_t i = 0; i < freq.size(); ++i) tv += std::abs(freq[i] - exact[i]) / 2;
  const double secs = seconds_since(t0);
  return {tv <= 0.02 && secs < 30, "TV = " + fmt("%.4f", tv) + ", " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------
// 4. Window of one copies phi; connection strengths sum to one.

Outcome online_chaining() {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  std::normal_distribution<double> big(0, 30);
  auto random_tensor = [&](std::size_t S, std::size_t K, std::size_t V, bool simplex) {
    Tensor3 t(S, K, V);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t k = 0; k < K; ++k) {
        auto row = t.row(s, k);
        double sum = 0;
        for (auto& x : row) sum += (x = simplex ? std::pow(e(rng), 4) : std::abs(big(rng)));
        if (simplex)
          for (auto& x : row) x /= sum;
      }
    return t;
  };
  double worst_eta = 0;
  int copy_failures = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t S = 1 + rng() % 3, K = 1 + rng() % 5, omega = 1 + rng() % 5;
    online::VersionWindow w{omega, {}};
    std::size_t V = 2 + rng() % 30;
    for (std::size_t i = 0, n = 1 + rng() % omega; i < n; ++i) {
      V += rng() % 3;
      bst::VersionSnapshot snap;
      snap.phi = random_tensor(S, K, V, true);
      snap.beta_used = random_tensor(S, K, V, false);
      w.snapshots.push_back(snap);
    }
    const std::size_t s = rng() % S, z = rng() % K;
    const auto eta = online::connection_strengths(w, s, z);
    double sum = 0;
    for (double x : eta) sum += x;
    worst_eta = std::max(worst_eta, std::abs(sum - 1.0));

    online::VersionWindow one{1, {w.snapshots.back()}};
    if (!(online::adaptive_prior(one) == w.snapshots.back().phi)) ++copy_failures;
  }

  // Through training: the next version's prior is the previous phi (floored).
  corpus::Vocabulary vocab;
  std::mt19937_64 drng(8);
  const auto pool = synth::words("w", 12);
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 60; ++i) docs.push_back(synth::draw_distinct(drng, pool, 4));
  const auto v1 = synth::corpus_from_docs("1", docs, vocab);
  const auto v2 = synth::corpus_from_docs("2", docs, vocab);
  bst::Hyperparameters h;
  h.topics = 3;
  online::OnlineOptions opts{1e-6, {50, 0}};
  auto [s1, w1] = online::advance({1, {}}, v1, h, {}, 1, opts);
  auto [s2, w2] = online::advance(w1, v2, h, {}, 2, opts);
  Tensor3 expected = s1.phi;
  for (auto& x : expected.raw()) x = std::max(x, 1e-6);
  if (!(s2.beta_used == expected)) ++copy_failures;

  return {worst_eta <= 1e-12 && copy_failures == 0,
          "max |sum eta - 1| = " + fmt("%.2e", worst_eta) + ", omega=1 copy failures " + std::to_string(copy_failures)};
}

// ---------------------------------------------------------------------------
// 5. Jensen-Shannon divergence properties.

Outcome divergence_properties() {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    double sum = 0;
    for (auto& x : v) sum += (x = (rng() % 4 == 0) ? 0.0 : e(rng));
    if (sum == 0) v[0] = sum = 1;
    for (auto& x : v) x /= sum;
    return v;
  };
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng() % 20;
    const auto p = simplex(n), q = simplex(n);
    const double pq = emerging::js_divergence(p, q), qp = emerging::js_divergence(q, p);
    if (std::abs(pq - qp) > 1e-12) ++bad;
    if (pq < 0 || pq > 1) ++bad;
    if (std::abs(emerging::js_divergence(p, p)) > 1e-9) ++bad;
    if (p != q && !(pq > 0)) ++bad;
  }
  const double worked = emerging::js_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5});
  return {bad == 0 && std::abs(worked - 0.3113) <= 1e-4,
          "violations " + std::to_string(bad) + ", JS((1,0),(.5,.5)) = " + fmt("%.5f", worked)};
}

// ---------------------------------------------------------------------------
// 6. An injected negative burst is flagged at its version.

struct BurstOutcome {
  bool detected = false;
  std::size_t false_flags = 0;
};

BurstOutcome burst_run(std::uint64_t seed) {
  constexpr int kThemes = 4, kReviews = 600, kVersions = 5;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> themes;
  for (int t = 0; t < kThemes; ++t) themes.push_back(synth::words("t" + std::to_string(t) + "w", 10));
  const auto neg = synth::words("neg", 6), pos = synth::words("pos", 6), burst = synth::words("burst", 10);
  corpus::PolarityLexicon lexicon;
  for (const auto& x : neg) lexicon.set(x, -1);
  for (const auto& x : pos) lexicon.set(x, 1);

  corpus::Vocabulary vocab;
  std::vector<corpus::VersionCorpus> corpora;
  for (int v = 1; v <= kVersions; ++v) {
    std::vector<std::vector<std::string>> docs;
    int negatives_per_theme = 0;
    for (int i = 0; i < kReviews; ++i) {
      const auto t = rng() % kThemes;
      auto d = synth::draw_distinct(rng, themes[t], 5);
      const bool negative = rng() % 2;
      if (negative && t == 0) ++negatives_per_theme;
      const auto& polar = negative ? neg : pos;
      d.push_back(polar[rng() % polar.size()]);
      docs.push_back(d);
    }
    if (v == kVersions) {
      for (int i = 0; i < 10 * negatives_per_theme; ++i) {
        auto d = synth::draw_distinct(rng, burst, 4);
        for (const auto& x : synth::draw_distinct(rng, neg, 2)) d.push_back(x);
        docs.push_back(d);
      }
    }
    corpora.push_back(synth::corpus_from_docs(std::to_string(v), docs, vocab));
  }

  pipeline::PipelineConfig cfg;
  cfg.topics = kThemes;
  cfg.iterations = 300;
  cfg.seed = seed;
  cfg.omega = 3;
  cfg.delta = 1.25;
  const auto snaps = pipeline::train_versions(corpora, lexicon, cfg);
  const auto anomalies = pipeline::detect_emerging(snaps, cfg);
  const auto& last = snaps.back();
  const auto& flagged = *anomalies.back();

  std::set<std::string> burst_words(burst.begin(), burst.end());
  BurstOutcome out;
  for (std::size_t z = 0; z < last.topics(); ++z) {
    const auto row = last.phi.row(cfg.detect_sentiment, z);
    double mass = 0;
    for (std::size_t w = 0; w < row.size(); ++w)
      if (burst_words.contains(last.vocabulary[w])) mass += row[w];
    const bool injected = mass >= 0.5;
    if (!flagged.flagged(z)) continue;
    if (injected) out.detected = true;
    else ++out.false_flags;
  }
  return out;
}

Outcome burst_injection() {
  const auto t0 = Clock::now();
  int detected = 0;
  std::size_t false_flags = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = burst_run(seed);
    detected += r.detected;
    false_flags += r.false_flags;
  }
  const double secs = seconds_since(t0);
  const double mean_false = static_cast<double>(false_flags) / 20.0;
  return {detected >= 16 && mean_false <= 1.0 && secs < 300,
          std::to_string(detected) + "/20 detected, mean false flags " + fmt("%.2f", mean_false) + ", " +
              fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------
// 7. label_topic against the brute-force reranker.

Outcome labeling_oracle() {
  using labeling::Candidate;
  using labeling::CandidateKind;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  std::exponential_distribution<double> e(1.0);
  int mismatches = 0, trials = 0;
  for (; trials < 200; ++trials) {
    const std::size_t V = 12 + rng() % 60, K = 1 + rng() % 6, N = 1 + rng() % 100;
    corpus::Vocabulary vocab;
    embed::EmbeddingTable table(6);
    for (std::size_t i = 0; i < V; ++i) {
      vocab.add("w" + std::to_string(i));
      embed::Vector v(6);
      for (auto& x : v) x = n(rng);
      table.set("w" + std::to_string(i), v);
    }
    std::vector<std::vector<double>> phis;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> phi(V);
      double sum = 0;
      for (auto& x : phi) sum += (x = rng() % 5 == 0 ? 0.0 : std::pow(e(rng), 3.0));
      for (auto& x : phi) x /= sum;
      phis.push_back(phi);
    }
    const auto kind = trials % 2 ? CandidateKind::phrase : CandidateKind::sentence;
    std::set<std::vector<std::string>> seen;
    std::vector<Candidate> pool;
    const std::size_t target = kind == CandidateKind::phrase ? std::min(N, V * (V - 1) / 2) : N;
    while (pool.size() < target) {
      std::vector<std::string> toks;
      const std::size_t len = kind == CandidateKind::phrase ? 2 : 3 + rng() % 6;
      for (std::size_t i = 0; i < len; ++i) toks.push_back("w" + std::to_string(rng() % V));
      if (kind == CandidateKind::phrase && toks[0] == toks[1]) continue;
      if (!seen.insert(toks).second) continue;
      pool.push_back({kind, toks, "v", 1 + rng() % 3});
    }
    labeling::LabelingParams p;
    p.m = (trials % 3 == 0) ? 1.0 : (trials % 3 == 1 ? 0.5 : 0.2);
    p.mu = (trials % 5 == 0) ? 0.0 : 1.0;
    p.top_words = trials % 4 == 0 ? 5 : 50;
    const std::size_t z = rng() % K;
    const auto want = oracle::rerank(pool, phis, z, vocab, table, p);
    const std::vector<std::span<const double>> rows(phis.begin(), phis.end());
    const auto got = labeling::label_topic(z, 0, pool, rows, vocab, p, table, pool.size(), pool.size());
    const auto& labels = kind == CandidateKind::phrase ? got.phrases : got.sentences;
    bool same = labels.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) same = labels[i].candidate == pool[want[i]];
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(trials) + " pools, " + std::to_string(mismatches) + " ranking mismatches"};
}

// ---------------------------------------------------------------------------
// 8 and 9 run the full pipeline on generated review text.

std::vector<corpus::RawReview> synthetic_reviews(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> issues = {
      {"login", "password", "account", "signin", "locked"},   {"video", "buffering", "stream", "playback", "lag"},
      {"battery", "drain", "power", "charging", "heat"},      {"photo", "upload", "camera", "gallery", "picture"},
      {"notification", "alert", "sound", "badge", "silent"},  {"payment", "checkout", "card", "refund", "order"},
      {"keyboard", "typing", "autocorrect", "swipe", "emoji"}, {"map", "location", "gps", "route", "navigation"}};
  static const std::vector<std::string> opinions = {"terrible", "awful", "broken", "slow", "great", "love",
                                                    "excellent", "useless", "annoying", "fine"};
  static const std::vector<std::string> fillers = {"the", "app", "is", "after", "update", "when", "i", "try", "my", "really"};
  std::mt19937_64 rng(seed);
  std::vector<corpus::RawReview> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& issue = issues[rng() % issues.size()];
    std::string text;
    for (const auto& w : synth::draw_distinct(rng, issue, 3)) text += w + " ";
    text += fillers[rng() % fillers.size()] + " " + opinions[rng() % opinions.size()] + " ";
    text += fillers[rng() % fillers.size()] + " " + issue[rng() % issue.size()] + ".";
    out.push_back({"1.0", text, 1 + static_cast<int>(rng() % 5), 1600000000 + static_cast<std::int64_t>(i)});
  }
  return out;
}

pipeline::PipelineConfig throughput_config() {
  pipeline::PipelineConfig cfg;
  cfg.lexicon_path = RP_DATA_DIR "/polarity_lexicon.tsv";
  cfg.filter_path = RP_DATA_DIR "/filter_words.txt";
  return cfg;
}

Outcome throughput() {
  const auto cfg = throughput_config();
  auto time_run = [&](std::size_t n) {
    const auto reviews = synthetic_reviews(n, n);
    const auto t0 = Clock::now();
    const auto r = pipeline::run_pipeline(pipeline::prepare_corpora(reviews, cfg), cfg);
    (void)r;
    return seconds_since(t0);
  };
  const double t1000 = time_run(1000), t5000 = time_run(5000);
  return {t1000 < 8.0 && t5000 < 180.0, "1000 reviews " + fmt("%.2f s", t1000) + ", 5000 reviews " + fmt("%.2f s", t5000)};
}

std::map<std::string, std::string> emitted_files(const pipeline::PipelineResult& r, const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& p : report::emit_report(r.bundle, dir, report::ReportFormat::structured))
    out[std::filesystem::relative(p, dir).string()] = serialize::read_file(p.string());
  return out;
}

Outcome determinism() {
  auto cfg = throughput_config();
  cfg.topics = 6;
  cfg.iterations = 100;
  const auto base = std::filesystem::temp_directory_path() / ("rp_accept_" + std::to_string(::getpid()));
  std::vector<corpus::RawReview> reviews;
  for (int v = 0; v < 3; ++v)
    for (auto r : synthetic_reviews(400, 100 + v)) {
      r.version_id = "1." + std::to_string(v);
      reviews.push_back(r);
    }
  const auto a = emitted_files(pipeline::run_pipeline(pipeline::prepare_corpora(reviews, cfg), cfg), base / "a");
  const auto b = emitted_files(pipeline::run_pipeline(pipeline::prepare_corpora(reviews, cfg), cfg), base / "b");
  std::filesystem::remove_all(base);
  return {!a.empty() && a == b, std::to_string(a.size()) + " files, " + (a == b ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric arithmetic", metric_arithmetic},   {"sampler recovery", sampler_recovery},
      {"gibbs vs enumeration", gibbs_vs_enumeration}, {"online chaining", online_chaining},
      {"divergence properties", divergence_properties}, {"burst injection", burst_injection},
      {"labeling oracle", labeling_oracle},       {"throughput", throughput},
      {"determinism", determinism}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

// Command-line front end. Each subcommand reads and writes files in the
// workspace directory given by --out, so stages can be run one at a time or
// all at once with `run`.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "reviewpulse/reviewpulse.hpp"

namespace fs = std::filesystem;
namespace rp = reviewpulse;
using rp::pipeline::PipelineConfig;

namespace {

struct Workspace {
  fs::path dir;

  fs::path corpora() const { return dir / "corpora.json"; }
  fs::path snapshots() const { return dir / "snapshots"; }
  fs::path checkpoint() const { return dir / "checkpoint.json"; }
  fs::path anomalies() const { return dir / "anomalies.json"; }
  fs::path labels() const { return dir / "labels.json"; }
  fs::path embeddings() const { return dir / "embeddings.txt"; }
  fs::path report() const { return dir / "report.json"; }
  fs::path eval() const { return dir / "eval.json"; }

  fs::path snapshot(std::size_t t) const {
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << t << ".json";
    return snapshots() / name.str();
  }
};

void require(const fs::path& p, std::string_view produced_by) {
  if (!fs::exists(p)) throw rp::Error(rp::concat("missing '", p.string(), "'; run `", produced_by, "` first"));
}

std::vector<rp::bst::VersionSnapshot> load_snapshots(const Workspace& ws) {
  require(ws.snapshots(), "train");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(ws.snapshots()))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<rp::bst::VersionSnapshot> out;
  for (const auto& f : files) out.push_back(rp::serialize::load_snapshot(f.string()));
  if (out.empty()) throw rp::Error("no snapshots found; run `train` first");
  return out;
}

const rp::corpus::VersionCorpus& corpus_of(const std::vector<rp::corpus::VersionCorpus>& corpora,
                                           const std::string& version) {
  for (const auto& c : corpora)
    if (c.version_id == version) return c;
  throw rp::Error(rp::concat("no corpus for version '", version, "'"));
}

// --- stages -----------------------------------------------------------------

void do_preprocess(const PipelineConfig& cfg, const Workspace& ws) {
  if (cfg.reviews_path.empty()) throw rp::Error("reviews_path is required");
  const auto corpora = rp::pipeline::prepare_corpora(cfg);
  rp::serialize::save_corpora(corpora, ws.corpora().string());
  std::size_t reviews = 0;
  for (const auto& c : corpora) reviews += c.reviews.size();
  std::cout << "preprocessed " << reviews << " reviews in " << corpora.size() << " versions -> "
            << ws.corpora().string() << "\n";
}

void do_train(const PipelineConfig& cfg, const Workspace& ws, bool resume) {
  require(ws.corpora(), "preprocess");
  const auto corpora = rp::serialize::load_corpora(ws.corpora().string());
  const auto lexicon = rp::pipeline::load_lexicon(cfg);
  rp::online::VersionWindow window;
  std::size_t first = 0, existing = 0;
  if (resume && fs::exists(ws.checkpoint())) {
    window = rp::serialize::load_window(ws.checkpoint().string());
    if (!window.empty()) {
      const auto& last = window.snapshots.back().version_id;
      auto it = std::find_if(corpora.begin(), corpora.end(), [&](const auto& c) { return c.version_id == last; });
      if (it == corpora.end()) throw rp::Error(rp::concat("checkpoint version '", last, "' not in the corpora"));
      first = static_cast<std::size_t>(it - corpora.begin()) + 1;
    }
    existing = load_snapshots(ws).size();
  } else {
    std::error_code ec;
    fs::remove_all(ws.snapshots(), ec);
  }
  const auto snaps = rp::pipeline::train_versions(corpora, lexicon, cfg, window, first);
  for (std::size_t i = 0; i < snaps.size(); ++i)
    rp::serialize::save_snapshot(snaps[i], ws.snapshot(existing + i).string());
  rp::serialize::save_window(window, ws.checkpoint().string());
  std::cout << "trained " << snaps.size() << " versions -> " << ws.snapshots().string() << "\n";
}

void do_detect(const PipelineConfig& cfg, const Workspace& ws) {
  const auto snaps = load_snapshots(ws);
  const auto sets = rp::pipeline::detect_emerging(snaps, cfg);
  std::vector<rp::serialize::VersionAnomalies> items;
  for (std::size_t t = 0; t < snaps.size(); ++t) {
    items.push_back({snaps[t].version_id, sets[t]});
    std::cout << snaps[t].version_id << ": ";
    if (!sets[t]) {
      std::cout << "insufficient history\n";
      continue;
    }
    std::cout << sets[t]->topic_ids.size() << " emerging topic(s)";
    for (auto z : sets[t]->topic_ids) std::cout << " " << z;
    std::cout << "\n";
  }
  rp::serialize::write_file(ws.anomalies().string(), rp::serialize::anomalies_to_json(items).dump(2) + "\n");
}

rp::embed::EmbeddingTable embeddings_for(const PipelineConfig& cfg, const Workspace& ws,
                                         const std::vector<rp::corpus::VersionCorpus>* corpora) {
  if (cfg.embeddings_path.empty() && fs::exists(ws.embeddings())) {
    auto table = rp::embed::load_vectors(ws.embeddings().string());
    table.set_oov_policy(cfg.oov_zero ? rp::embed::OovPolicy::zero : rp::embed::OovPolicy::skip);
    return table;
  }
  if (!corpora) throw rp::Error("no embeddings available; set embeddings_path or run `label` first");
  auto table = rp::pipeline::obtain_embeddings(*corpora, cfg);
  if (cfg.embeddings_path.empty()) rp::embed::save_vectors(table, ws.embeddings().string());
  return table;
}

void do_label(const PipelineConfig& cfg, const Workspace& ws) {
  require(ws.corpora(), "preprocess");
  const auto corpora = rp::serialize::load_corpora(ws.corpora().string());
  const auto snaps = load_snapshots(ws);
  std::error_code ec;
  if (cfg.embeddings_path.empty()) fs::remove(ws.embeddings(), ec);  // retrain for the current corpora
  const auto table = embeddings_for(cfg, ws, &corpora);
  std::vector<rp::serialize::VersionLabels> items;
  for (const auto& snap : snaps)
    items.push_back({snap.version_id, rp::pipeline::label_version(corpus_of(corpora, snap.version_id), snap, table, cfg)});
  rp::serialize::write_file(ws.labels().string(), rp::serialize::labels_to_json(items).dump(2) + "\n");
  std::cout << "labeled " << items.size() << " versions -> " << ws.labels().string() << "\n";
}

void write_reports(const rp::report::ReportBundle& bundle, const Workspace& ws, const std::string& format) {
  if (format == "json" || format == "both") rp::report::emit_report(bundle, ws.dir, rp::report::ReportFormat::structured);
  if (format == "html" || format == "both") rp::report::emit_report(bundle, ws.dir, rp::report::ReportFormat::static_page);
}

void do_report(const PipelineConfig& cfg, const Workspace& ws, const std::string& format) {
  require(ws.corpora(), "preprocess");
  require(ws.anomalies(), "detect");
  require(ws.labels(), "label");
  const auto corpora = rp::serialize::load_corpora(ws.corpora().string());
  const auto snaps = load_snapshots(ws);
  const auto anomalies = rp::serialize::anomalies_from_json(
      rp::serialize::parse_json(rp::serialize::read_file(ws.anomalies().string()), "anomalies"));
  const auto labels = rp::serialize::labels_from_json(
      rp::serialize::parse_json(rp::serialize::read_file(ws.labels().string()), "labels"));
  std::vector<rp::report::IssueReport> reports;
  for (const auto& snap : snaps) {
    auto a = std::find_if(anomalies.begin(), anomalies.end(), [&](const auto& x) { return x.version_id == snap.version_id; });
    auto l = std::find_if(labels.begin(), labels.end(), [&](const auto& x) { return x.version_id == snap.version_id; });
    if (a == anomalies.end() || l == labels.end())
      throw rp::Error(rp::concat("version '", snap.version_id, "' lacks anomalies or labels; rerun detect and label"));
    reports.push_back(rp::pipeline::build_report(corpus_of(corpora, snap.version_id), snap, a->set, l->topics, cfg));
  }
  write_reports(rp::report::make_bundle(std::move(reports)), ws, format);
  std::cout << "wrote reports to " << ws.dir.string() << "\n";
}

void print_eval(const rp::eval::ReportEval& e) {
  const auto& o = e.overall;
  std::cout << (e.level == rp::eval::LabelLevel::phrase ? "phrase  " : "sentence") << "  precision_e "
            << std::fixed << std::setprecision(3) << o.precision_e << "  recall_l " << o.recall_l << "  f_hybrid "
            << o.f_hybrid << "\n";
}

void save_eval(const rp::eval::ReportEval& phrase, const rp::eval::ReportEval& sentence, const Workspace& ws) {
  nlohmann::json j{{"phrase", rp::eval::to_json(phrase)}, {"sentence", rp::eval::to_json(sentence)}};
  rp::serialize::write_file(ws.eval().string(), j.dump(2) + "\n");
  print_eval(phrase);
  print_eval(sentence);
}

void do_eval(const PipelineConfig& cfg, const Workspace& ws) {
  if (cfg.changelog_path.empty()) throw rp::Error("changelog_path is required");
  require(ws.report(), "report");
  const auto bundle = rp::report::load_report(ws.report().string());
  const auto table = embeddings_for(cfg, ws, nullptr);
  const auto changelogs = rp::eval::load_changelog(cfg.changelog_path, rp::pipeline::load_filter(cfg),
                                                   rp::corpus::LemmaRules::english());
  save_eval(rp::eval::evaluate_report(bundle, changelogs, table, rp::eval::LabelLevel::phrase, cfg.match_threshold),
            rp::eval::evaluate_report(bundle, changelogs, table, rp::eval::LabelLevel::sentence, cfg.match_threshold),
            ws);
}

void do_run(const PipelineConfig& cfg, const Workspace& ws, const std::string& format) {
  if (cfg.reviews_path.empty()) throw rp::Error("reviews_path is required");
  auto result = rp::pipeline::run_pipeline(cfg);
  rp::serialize::save_corpora(result.corpora, ws.corpora().string());
  std::error_code ec;
  fs::remove_all(ws.snapshots(), ec);
  std::vector<rp::serialize::VersionAnomalies> anomalies;
  std::vector<rp::serialize::VersionLabels> labels;
  for (std::size_t t = 0; t < result.snapshots.size(); ++t) {
    rp::serialize::save_snapshot(result.snapshots[t], ws.snapshot(t).string());
    anomalies.push_back({result.snapshots[t].version_id, result.anomalies[t]});
    labels.push_back({result.snapshots[t].version_id, result.labels[t]});
  }
  rp::serialize::save_window(result.window, ws.checkpoint().string());
  rp::serialize::write_file(ws.anomalies().string(), rp::serialize::anomalies_to_json(anomalies).dump(2) + "\n");
  rp::serialize::write_file(ws.labels().string(), rp::serialize::labels_to_json(labels).dump(2) + "\n");
  if (cfg.embeddings_path.empty()) rp::embed::save_vectors(result.embeddings, ws.embeddings().string());
  write_reports(result.bundle, ws, format);
  for (const auto& rep : result.bundle.reports) {
    std::cout << rep.version_id << ": " << rep.emerging_topics().size() << " emerging topic(s)";
    for (auto z : rep.emerging_topics()) std::cout << " " << z;
    std::cout << "\n";
  }
  if (result.phrase_eval && result.sentence_eval) save_eval(*result.phrase_eval, *result.sentence_eval, ws);
  std::cout << "wrote workspace " << ws.dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Versioned app-review issue mining: sentiment-topic modeling, emerging issue detection and labeling"};
  app.set_config("--config", "", "Key = value config file (TOML/INI)");
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string out = "out";
  app.add_option("--out", out, "Workspace directory")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();

  auto* in = "Inputs";
  app.add_option("--reviews_path", cfg.reviews_path, "Reviews (TSV or JSON lines)")->group(in);
  app.add_option("--lexicon_path", cfg.lexicon_path, "Polarity lexicon (token<TAB>code)")->group(in);
  app.add_option("--filter_path", cfg.filter_path, "Filter word list")->group(in);
  app.add_option("--embeddings_path", cfg.embeddings_path, "Pretrained word vectors")->group(in);
  app.add_option("--train_embeddings", cfg.train_embeddings, "Train vectors when no file is given")
      ->capture_default_str()->group(in);
  app.add_option("--changelog_path", cfg.changelog_path, "Changelog for evaluation")->group(in);

  auto* model = "Model";
  app.add_option("--omega", cfg.omega, "Version window size")->capture_default_str()->group(model);
  app.add_option("--topics", cfg.topics, "Topics per sentiment (K)")->capture_default_str()->group(model);
  app.add_option("--sentiments", cfg.sentiments, "Sentiment count (S)")->capture_default_str()->group(model);
  app.add_option("--alpha", cfg.alpha)->capture_default_str()->group(model);
  app.add_option("--beta", cfg.beta)->capture_default_str()->group(model);
  app.add_option("--gamma", cfg.gamma)->capture_default_str()->group(model);
  app.add_option("--lambda_match", cfg.lambda_match)->capture_default_str()->group(model);
  app.add_option("--lambda_miss", cfg.lambda_miss)->capture_default_str()->group(model);
  app.add_option("--beta_floor", cfg.beta_floor)->capture_default_str()->group(model);
  app.add_option("--iterations", cfg.iterations, "Gibbs sweeps per version")->capture_default_str()->group(model);
  app.add_option("--average_last", cfg.average_last, "Average estimates over the last N sweeps")
      ->capture_default_str()->group(model);
  app.add_option("--pmi_threshold", cfg.pmi_threshold, "Phrase PMI threshold (nats)")->capture_default_str()->group(model);
  app.add_option("--min_phrase_count", cfg.min_phrase_count)->capture_default_str()->group(model);

  auto* detect = "Detection";
  app.add_option("--delta", cfg.delta, "Outlier threshold")->capture_default_str()->group(detect);
  app.add_option("--per_topic_stats", cfg.per_topic_stats, "Per-topic instead of whole-matrix statistics")
      ->capture_default_str()->group(detect);
  app.add_option("--detect_sentiment", cfg.detect_sentiment, "Sentiment slice (0 = negative)")
      ->capture_default_str()->group(detect);

  auto* label = "Labeling";
  app.add_option("--mu", cfg.mu, "Inter-topic penalty")->capture_default_str()->group(label);
  app.add_option("--m", cfg.m, "Topic vs embedding balance")->capture_default_str()->group(label);
  app.add_option("--top_words", cfg.top_words)->capture_default_str()->group(label);
  app.add_option("--epsilon", cfg.epsilon)->capture_default_str()->group(label);
  app.add_option("--n_phrases", cfg.n_phrases)->capture_default_str()->group(label);
  app.add_option("--n_sentences", cfg.n_sentences)->capture_default_str()->group(label);
  app.add_option("--max_sentences", cfg.max_sentences)->capture_default_str()->group(label);
  app.add_option("--min_sentence_tokens", cfg.min_sentence_tokens)->capture_default_str()->group(label);
  app.add_option("--max_sentence_tokens", cfg.max_sentence_tokens)->capture_default_str()->group(label);

  auto* emb = "Embeddings";
  app.add_option("--embedding_dim", cfg.embedding_dim)->capture_default_str()->group(emb);
  app.add_option("--embedding_window", cfg.embedding_window)->capture_default_str()->group(emb);
  app.add_option("--embedding_negatives", cfg.embedding_negatives)->capture_default_str()->group(emb);
  app.add_option("--embedding_epochs", cfg.embedding_epochs)->capture_default_str()->group(emb);
  app.add_option("--embedding_min_count", cfg.embedding_min_count)->capture_default_str()->group(emb);
  app.add_option("--oov_zero", cfg.oov_zero, "Count unknown tokens as zero vectors")->capture_default_str()->group(emb);
  app.add_option("--match_threshold", cfg.match_threshold, "Eval cosine threshold")->capture_default_str()->group(emb);

  std::string format = "both";
  bool resume = false;
  auto* preprocess = app.add_subcommand("preprocess", "Tokenize reviews and mine phrases");
  auto* train = app.add_subcommand("train", "Train the chained per-version models");
  train->add_flag("--resume", resume, "Continue from checkpoint.json");
  auto* detect_cmd = app.add_subcommand("detect", "Flag emerging negative topics");
  auto* label_cmd = app.add_subcommand("label", "Rank phrase and sentence labels");
  auto* report = app.add_subcommand("report", "Write issue reports");
  auto* eval = app.add_subcommand("eval", "Score reports against a changelog");
  auto* run = app.add_subcommand("run", "All stages end to end");
  for (auto* sub : {report, run})
    sub->add_option("--format", format, "json, html or both")
        ->check(CLI::IsMember({"json", "html", "both"}))
        ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const Workspace ws{out};
  try {
    cfg.validate();
    fs::create_directories(ws.dir);
    if (*preprocess) do_preprocess(cfg, ws);
    if (*train) do_train(cfg, ws, resume);
    if (*detect_cmd) do_detect(cfg, ws);
    if (*label_cmd) do_label(cfg, ws);
    if (*report) do_report(cfg, ws, format);
    if (*eval) do_eval(cfg, ws);
    if (*run) do_run(cfg, ws, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

// JSON persistence of corpora, version snapshots and window checkpoints.
// Doubles are written in shortest round-trip form, so a load of a dump is
// bit-identical to what was saved. The layouts are described in
// docs/formats.md.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "reviewpulse/bst.hpp"
#include "reviewpulse/corpus.hpp"
#include "reviewpulse/emerging.hpp"
#include "reviewpulse/labeling.hpp"
#include "reviewpulse/online.hpp"

namespace reviewpulse::serialize {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline void check_header(const json& j, std::string_view format) {
  if (!j.contains("format") || j["format"] != format)
    throw Error(concat("expected a '", format, "' document"));
  if (j.value("format_version", 0) != kFormatVersion)
    throw Error(concat("unsupported ", format, " format_version ", j.value("format_version", 0)));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(concat("cannot open '", path, "'"));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(concat("cannot write '", path, "'"));
  out << content;
  if (!out) throw Error(concat("failed writing '", path, "'"));
}

inline json parse_json(const std::string& text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(concat("malformed ", what, ": ", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Snapshots

inline json snapshot_to_json(const bst::VersionSnapshot& s) {
  return json{{"format", "reviewpulse-snapshot"},
              {"format_version", kFormatVersion},
              {"version_id", s.version_id},
              {"sentiments", s.sentiments()},
              {"topics", s.topics()},
              {"vocabulary", s.vocabulary},
              {"pi", s.pi},
              {"theta", s.theta},
              {"phi", s.phi.raw()},
              {"beta_used", s.beta_used.raw()},
              {"assignment_counts", s.assignment_counts}};
}

inline bst::VersionSnapshot snapshot_from_json(const json& j) {
  check_header(j, "reviewpulse-snapshot");
  try {
    bst::VersionSnapshot s;
    s.version_id = j.at("version_id").get<std::string>();
    const auto S = j.at("sentiments").get<std::size_t>();
    const auto K = j.at("topics").get<std::size_t>();
    s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    const std::size_t V = s.vocabulary.size();
    s.pi = j.at("pi").get<std::vector<double>>();
    s.theta = j.at("theta").get<std::vector<double>>();
    s.phi = Tensor3(S, K, V);
    s.phi.raw() = j.at("phi").get<std::vector<double>>();
    s.beta_used = Tensor3(S, K, V);
    s.beta_used.raw() = j.at("beta_used").get<std::vector<double>>();
    s.assignment_counts = j.at("assignment_counts").get<std::vector<std::int64_t>>();
    if (s.pi.size() != S || s.theta.size() != S * K || s.phi.raw().size() != S * K * V ||
        s.beta_used.raw().size() != S * K * V || s.assignment_counts.size() != S * K)
      throw Error("snapshot arrays do not match the declared S, K and vocabulary size");
    return s;
  } catch (const json::exception& e) {
    throw Error(concat("malformed snapshot: ", e.what()));
  }
}

inline void save_snapshot(const bst::VersionSnapshot& s, const std::string& path) {
  write_file(path, snapshot_to_json(s).dump() + "\n");
}

inline bst::VersionSnapshot load_snapshot(const std::string& path) {
  return snapshot_from_json(parse_json(read_file(path), "snapshot"));
}

// ---------------------------------------------------------------------------
// Window checkpoints

inline json window_to_json(const online::VersionWindow& w) {
  json snaps = json::array();
  for (const auto& s : w.snapshots) snaps.push_back(snapshot_to_json(s));
  return json{{"format", "reviewpulse-window"}, {"format_version", kFormatVersion}, {"omega", w.omega}, {"snapshots", snaps}};
}

inline online::VersionWindow window_from_json(const json& j) {
  check_header(j, "reviewpulse-window");
  online::VersionWindow w;
  w.omega = j.at("omega").get<std::size_t>();
  for (const auto& s : j.at("snapshots")) w.snapshots.push_back(snapshot_from_json(s));
  if (w.snapshots.size() > w.omega) throw Error("window checkpoint holds more than omega snapshots");
  return w;
}

inline void save_window(const online::VersionWindow& w, const std::string& path) {
  write_file(path, window_to_json(w).dump() + "\n");
}

inline online::VersionWindow load_window(const std::string& path) {
  return window_from_json(parse_json(read_file(path), "window checkpoint"));
}

// ---------------------------------------------------------------------------
// Corpora

inline json corpora_to_json(std::span<const corpus::VersionCorpus> corpora) {
  json versions = json::array();
  std::vector<std::string> global;
  for (const auto& vc : corpora) {
    if (vc.vocabulary.size() > global.size()) global = vc.vocabulary.tokens();
    json reviews = json::array();
    for (const auto& r : vc.reviews) reviews.push_back(r.sentences);
    json phrases = json::array();
    for (const auto& p : vc.phrases)
      phrases.push_back({{"first", p.first}, {"second", p.second}, {"pmi", p.pmi}, {"count", p.count}});
    json v{{"version_id", vc.version_id},
           {"vocabulary_size", vc.vocabulary.size()},
           {"reviews", reviews},
           {"phrases", phrases},
           {"latest_timestamp", nullptr}};
    if (vc.latest_timestamp) v["latest_timestamp"] = *vc.latest_timestamp;
    versions.push_back(std::move(v));
  }
  return json{{"format", "reviewpulse-corpora"},
              {"format_version", kFormatVersion},
              {"vocabulary", global},
              {"versions", versions}};
}

inline std::vector<corpus::VersionCorpus> corpora_from_json(const json& j) {
  check_header(j, "reviewpulse-corpora");
  try {
    const auto global = j.at("vocabulary").get<std::vector<std::string>>();
    std::vector<corpus::VersionCorpus> out;
    for (const auto& v : j.at("versions")) {
      corpus::VersionCorpus vc;
      vc.version_id = v.at("version_id").get<std::string>();
      const auto vsize = v.at("vocabulary_size").get<std::size_t>();
      if (vsize > global.size()) throw Error("corpora: vocabulary_size exceeds the stored vocabulary");
      vc.vocabulary = corpus::Vocabulary::from_tokens({global.begin(), global.begin() + static_cast<std::ptrdiff_t>(vsize)});
      if (!v.at("latest_timestamp").is_null()) vc.latest_timestamp = v.at("latest_timestamp").get<std::int64_t>();
      for (const auto& r : v.at("reviews")) {
        corpus::TokenizedReview tr;
        tr.version_id = vc.version_id;
        tr.sentences = r.get<std::vector<std::vector<std::string>>>();
        std::vector<WordId> ids;
        for (const auto& s : tr.sentences)
          for (const auto& t : s) {
            tr.tokens.push_back(t);
            ids.push_back(vc.vocabulary.at(t));
          }
        vc.reviews.push_back(std::move(tr));
        vc.documents.push_back(std::move(ids));
      }
      for (const auto& p : v.at("phrases"))
        vc.phrases.push_back({p.at("first").get<std::string>(), p.at("second").get<std::string>(),
                              p.at("pmi").get<double>(), p.at("count").get<std::size_t>()});
      out.push_back(std::move(vc));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(concat("malformed corpora: ", e.what()));
  }
}

inline void save_corpora(std::span<const corpus::VersionCorpus> corpora, const std::string& path) {
  write_file(path, corpora_to_json(corpora).dump() + "\n");
}

inline std::vector<corpus::VersionCorpus> load_corpora(const std::string& path) {
  return corpora_from_json(parse_json(read_file(path), "corpora"));
}

// ---------------------------------------------------------------------------
// Anomaly sets, one per modeled version (null while history is too short)

struct VersionAnomalies {
  std::string version_id;
  std::optional<emerging::EmergingTopicSet> set;
};

inline json anomalies_to_json(std::span<const VersionAnomalies> items) {
  json versions = json::array();
  for (const auto& v : items) {
    json j{{"version_id", v.version_id}, {"anomalies", nullptr}};
    if (v.set) {
      j["anomalies"] = {{"topic_ids", v.set->topic_ids},
                        {"zscores", v.set->zscores},
                        {"divergences", v.set->divergences}};
    }
    versions.push_back(std::move(j));
  }
  return json{{"format", "reviewpulse-anomalies"}, {"format_version", kFormatVersion}, {"versions", versions}};
}

inline std::vector<VersionAnomalies> anomalies_from_json(const json& j) {
  check_header(j, "reviewpulse-anomalies");
  try {
    std::vector<VersionAnomalies> out;
    for (const auto& v : j.at("versions")) {
      VersionAnomalies a;
      a.version_id = v.at("version_id").get<std::string>();
      const auto& x = v.at("anomalies");
      if (!x.is_null()) {
        emerging::EmergingTopicSet set;
        set.version_id = a.version_id;
        set.topic_ids = x.at("topic_ids").get<std::vector<std::size_t>>();
        set.zscores = x.at("zscores").get<std::vector<double>>();
        set.divergences = x.at("divergences").get<std::vector<double>>();
        a.set = std::move(set);
      }
      out.push_back(std::move(a));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(concat("malformed anomalies: ", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Ranked labels, one list of per-topic labels per version

struct VersionLabels {
  std::string version_id;
  std::vector<labeling::RankedLabels> topics;
};

namespace detail {

inline json label_to_json(const labeling::Label& l) {
  return {{"kind", labeling::kind_name(l.candidate.kind)},
          {"tokens", l.candidate.tokens},
          {"source_version", l.candidate.source_version},
          {"count", l.candidate.count},
          {"topic", l.topic},
          {"sentiment", l.sentiment},
          {"score", l.score}};
}

inline labeling::Label label_from_json(const json& j) {
  labeling::Label l;
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "phrase" && kind != "sentence") throw Error(concat("unknown label kind '", kind, "'"));
  l.candidate.kind = kind == "phrase" ? labeling::CandidateKind::phrase : labeling::CandidateKind::sentence;
  l.candidate.tokens = j.at("tokens").get<std::vector<std::string>>();
  l.candidate.source_version = j.at("source_version").get<std::string>();
  l.candidate.count = j.at("count").get<std::size_t>();
  l.topic = j.at("topic").get<std::size_t>();
  l.sentiment = j.at("sentiment").get<std::size_t>();
  l.score = j.at("score").get<double>();
  return l;
}

}  // namespace detail

inline json labels_to_json(std::span<const VersionLabels> items) {
  json versions = json::array();
  for (const auto& v : items) {
    json topics = json::array();
    for (const auto& r : v.topics) {
      json phrases = json::array(), sentences = json::array();
      for (const auto& l : r.phrases) phrases.push_back(detail::label_to_json(l));
      for (const auto& l : r.sentences) sentences.push_back(detail::label_to_json(l));
      topics.push_back({{"phrases", phrases}, {"sentences", sentences}});
    }
    versions.push_back({{"version_id", v.version_id}, {"topics", topics}});
  }
  return json{{"format", "reviewpulse-labels"}, {"format_version", kFormatVersion}, {"versions", versions}};
}

inline std::vector<VersionLabels> labels_from_json(const json& j) {
  check_header(j, "reviewpulse-labels");
  try {
    std::vector<VersionLabels> out;
    for (const auto& v : j.at("versions")) {
      VersionLabels vl;
      vl.version_id = v.at("version_id").get<std::string>();
      for (const auto& t : v.at("topics")) {
        labeling::RankedLabels r;
        for (const auto& l : t.at("phrases")) r.phrases.push_back(detail::label_from_json(l));
        for (const auto& l : t.at("sentences")) r.sentences.push_back(detail::label_from_json(l));
        vl.topics.push_back(std::move(r));
      }
      out.push_back(std::move(vl));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(concat("malformed labels: ", e.what()));
  }
}

}  // namespace reviewpulse::serialize

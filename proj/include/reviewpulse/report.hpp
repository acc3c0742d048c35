#pragma once

// Issue reports: branch widths of the issue river, per-version report
// records, and their JSON / standalone HTML export.

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reviewpulse/common.hpp"
#include "reviewpulse/corpus.hpp"
#include "reviewpulse/labeling.hpp"

namespace reviewpulse::report {

// Bumped on any change to the structured report fields.
inline constexpr int kReportSchemaVersion = 1;

// Sum over the labels of ln(count) * phi of the phrase token. When the joined
// phrase token is not in the vocabulary, the mean probability of its words is
// used. Labels with count 0 are skipped.
inline double branch_width(std::span<const labeling::Candidate> labels, std::span<const double> phi_row,
                           const corpus::Vocabulary& vocabulary) {
  auto prob = [&](std::string_view token) -> std::optional<double> {
    auto id = vocabulary.find(token);
    if (!id || *id >= phi_row.size()) return std::nullopt;
    return phi_row[*id];
  };
  double width = 0.0;
  for (const auto& a : labels) {
    if (a.count == 0) {
      warn(concat("branch_width: label '", a.text(), "' has count 0, skipped"));
      continue;
    }
    double p = 0.0;
    if (auto direct = prob(a.joined())) {
      p = *direct;
    } else {
      double sum = 0.0;
      for (const auto& w : a.tokens) sum += prob(w).value_or(0.0);
      p = a.tokens.empty() ? 0.0 : sum / static_cast<double>(a.tokens.size());
    }
    width += std::log(static_cast<double>(a.count)) * p;
  }
  return width;
}

struct LabelRecord {
  std::string text;
  std::vector<std::string> tokens;
  std::size_t count = 0;
  double score = 0.0;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct Branch {
  std::size_t topic = 0;
  std::string sentiment;
  double width = 0.0;
  std::vector<LabelRecord> phrases;
  std::vector<LabelRecord> sentences;
  bool emerging = false;
  std::optional<double> zscore;      // absent without enough history
  std::optional<double> divergence;  // JS divergence to the previous version

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct IssueReport {
  std::string version_id;
  std::vector<Branch> branches;
  std::string generated_at;

  std::vector<std::size_t> emerging_topics() const {
    std::vector<std::size_t> out;
    for (const auto& b : branches)
      if (b.emerging) out.push_back(b.topic);
    return out;
  }

  friend bool operator==(const IssueReport&, const IssueReport&) = default;
};

struct RiverSeries {
  std::vector<std::string> versions;
  std::size_t topics = 0;
  std::vector<std::vector<double>> widths;  // [version][topic]

  friend bool operator==(const RiverSeries&, const RiverSeries&) = default;
};

struct ReportBundle {
  int schema_version = kReportSchemaVersion;
  std::vector<IssueReport> reports;
  RiverSeries river;

  friend bool operator==(const ReportBundle&, const ReportBundle&) = default;
};

inline RiverSeries river_series(std::span<const IssueReport> reports) {
  RiverSeries r;
  for (const auto& rep : reports) {
    r.versions.push_back(rep.version_id);
    std::vector<double> row;
    for (const auto& b : rep.branches) row.push_back(b.width);
    r.topics = std::max(r.topics, row.size());
    r.widths.push_back(std::move(row));
  }
  for (auto& row : r.widths) row.resize(r.topics, 0.0);
  return r;
}

inline ReportBundle make_bundle(std::vector<IssueReport> reports) {
  ReportBundle b;
  b.river = river_series(reports);
  b.reports = std::move(reports);
  return b;
}

inline LabelRecord to_record(const labeling::Label& l) {
  return {l.candidate.text(), l.candidate.tokens, l.candidate.count, l.score};
}

// ISO-8601 UTC rendering of epoch seconds.
inline std::string iso_timestamp(std::int64_t epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline void to_json(json& j, const LabelRecord& r) {
  j = json{{"text", r.text}, {"tokens", r.tokens}, {"count", r.count}, {"score", r.score}};
}
inline void from_json(const json& j, LabelRecord& r) {
  j.at("text").get_to(r.text);
  j.at("tokens").get_to(r.tokens);
  j.at("count").get_to(r.count);
  j.at("score").get_to(r.score);
}

inline void to_json(json& j, const Branch& b) {
  j = json{{"topic", b.topic},       {"sentiment", b.sentiment}, {"width", b.width},
           {"phrases", b.phrases},   {"sentences", b.sentences}, {"emerging", b.emerging},
           {"zscore", nullptr},      {"divergence", nullptr}};
  if (b.zscore) j["zscore"] = *b.zscore;
  if (b.divergence) j["divergence"] = *b.divergence;
}
inline void from_json(const json& j, Branch& b) {
  j.at("topic").get_to(b.topic);
  j.at("sentiment").get_to(b.sentiment);
  j.at("width").get_to(b.width);
  j.at("phrases").get_to(b.phrases);
  j.at("sentences").get_to(b.sentences);
  j.at("emerging").get_to(b.emerging);
  b.zscore = j.at("zscore").is_null() ? std::nullopt : std::optional<double>(j.at("zscore").get<double>());
  b.divergence = j.at("divergence").is_null() ? std::nullopt : std::optional<double>(j.at("divergence").get<double>());
}

inline void to_json(json& j, const IssueReport& r) {
  j = json{{"version", r.version_id}, {"generated_at", r.generated_at}, {"branches", r.branches}};
}
inline void from_json(const json& j, IssueReport& r) {
  j.at("version").get_to(r.version_id);
  j.at("generated_at").get_to(r.generated_at);
  j.at("branches").get_to(r.branches);
}

inline void to_json(json& j, const RiverSeries& r) {
  j = json{{"versions", r.versions}, {"topics", r.topics}, {"widths", r.widths}};
}
inline void from_json(const json& j, RiverSeries& r) {
  j.at("versions").get_to(r.versions);
  j.at("topics").get_to(r.topics);
  j.at("widths").get_to(r.widths);
}

inline void to_json(json& j, const ReportBundle& b) {
  j = json{{"schema_version", b.schema_version}, {"reports", b.reports}, {"river", b.river}};
}
inline void from_json(const json& j, ReportBundle& b) {
  j.at("schema_version").get_to(b.schema_version);
  if (b.schema_version != kReportSchemaVersion)
    throw Error(concat("report schema version ", b.schema_version, " is not supported (expected ",
                       kReportSchemaVersion, ")"));
  j.at("reports").get_to(b.reports);
  j.at("river").get_to(b.river);
}

inline std::string to_json_text(const ReportBundle& b) { return json(b).dump(2) + "\n"; }

inline ReportBundle parse_report(std::string_view text) {
  try {
    return json::parse(text).get<ReportBundle>();
  } catch (const json::exception& e) {
    throw Error(concat("malformed report: ", e.what()));
  }
}

inline ReportBundle load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open report '", path, "'"));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

// ---------------------------------------------------------------------------
// Static page

namespace detail {

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double x, int digits = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << x;
  return o.str();
}

// Stacked-area rendering of the river as inline SVG.
inline std::string river_svg(const RiverSeries& r) {
  const double W = 900, H = 320, pad = 30;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  const std::size_t T = r.versions.size();
  if (T == 0 || r.topics == 0) return svg.str() + "</svg>\n";
  std::vector<double> totals(T, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (double w : r.widths[t]) totals[t] += std::max(w, 0.0);
  const double peak = std::max(1e-12, *std::max_element(totals.begin(), totals.end()));
  auto x_at = [&](std::size_t t) { return T == 1 ? W / 2 : pad + (W - 2 * pad) * static_cast<double>(t) / static_cast<double>(T - 1); };
  auto y_at = [&](double v) { return H - pad - (H - 2 * pad) * v / peak; };
  std::vector<double> base(T, 0.0);
  for (std::size_t k = 0; k < r.topics; ++k) {
    std::ostringstream path;
    for (std::size_t t = 0; t < T; ++t) path << (t ? " L" : "M") << fmt(x_at(t), 1) << ',' << fmt(y_at(base[t] + std::max(r.widths[t][k], 0.0)), 1);
    for (std::size_t t = T; t-- > 0;) path << " L" << fmt(x_at(t), 1) << ',' << fmt(y_at(base[t]), 1);
    const int hue = static_cast<int>((k * 360) / r.topics);
    svg << "  <path d=\"" << path.str() << " Z\" fill=\"hsl(" << hue << ",60%,60%)\" stroke=\"#fff\"><title>topic " << k
        << "</title></path>\n";
    for (std::size_t t = 0; t < T; ++t) base[t] += std::max(r.widths[t][k], 0.0);
  }
  for (std::size_t t = 0; t < T; ++t)
    svg << "  <text x=\"" << fmt(x_at(t), 1) << "\" y=\"" << H - 8 << "\" font-size=\"11\" text-anchor=\"middle\">"
        << html_escape(r.versions[t]) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace detail

inline std::string to_html(const ReportBundle& b) {
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Issue report</title>\n"
       "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse;margin-bottom:2em}"
       "td,th{border:1px solid #ccc;padding:4px 8px;vertical-align:top}tr.emerging{background:#fff3b0}</style>\n"
       "</head><body>\n<h1>Issue river</h1>\n"
    << detail::river_svg(b.river);
  for (const auto& rep : b.reports) {
    h << "<h2>Version " << detail::html_escape(rep.version_id) << "</h2>\n<p>generated " << detail::html_escape(rep.generated_at)
      << "</p>\n<table><tr><th>topic</th><th>width</th><th>z-score</th><th>phrases</th><th>sentences</th></tr>\n";
    for (const auto& br : rep.branches) {
      h << "<tr" << (br.emerging ? " class=\"emerging\"" : "") << "><td>" << br.topic << (br.emerging ? " (emerging)" : "")
        << "</td><td>" << detail::fmt(br.width) << "</td><td>" << (br.zscore ? detail::fmt(*br.zscore, 3) : "-") << "</td><td>";
      for (const auto& p : br.phrases) h << detail::html_escape(p.text) << " (" << p.count << ")<br>";
      h << "</td><td>";
      for (const auto& s : br.sentences) h << detail::html_escape(s.text) << "<br>";
      h << "</td></tr>\n";
    }
    h << "</table>\n";
  }
  h << "</body></html>\n";
  return h.str();
}

enum class ReportFormat { structured, static_page };

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(concat("cannot write '", path.string(), "'"));
  out << content;
  if (!out) throw Error(concat("failed writing '", path.string(), "'"));
}

inline std::string safe_name(std::string_view v) {
  std::string out;
  for (char c : v) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace detail

// Structured: report.json (everything), river.json and versions/<id>.json.
// Static page: report.html. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& out_dir,
                                                      ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(concat("cannot create output directory '", out_dir.string(), "': ", ec.message()));
  std::vector<std::filesystem::path> written;
  if (format == ReportFormat::structured) {
    detail::write_file(out_dir / "report.json", to_json_text(bundle));
    written.push_back(out_dir / "report.json");
    detail::write_file(out_dir / "river.json", json(bundle.river).dump(2) + "\n");
    written.push_back(out_dir / "river.json");
    std::filesystem::create_directories(out_dir / "versions", ec);
    if (ec) throw Error(concat("cannot create '", (out_dir / "versions").string(), "'"));
    for (const auto& rep : bundle.reports) {
      auto p = out_dir / "versions" / (detail::safe_name(rep.version_id) + ".json");
      json j = rep;
      j["schema_version"] = bundle.schema_version;
      detail::write_file(p, j.dump(2) + "\n");
      written.push_back(p);
    }
  } else {
    detail::write_file(out_dir / "report.html", to_html(bundle));
    written.push_back(out_dir / "report.html");
  }
  return written;
}

}  // namespace reviewpulse::report

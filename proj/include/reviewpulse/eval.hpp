#pragma once

// Changelog-based evaluation of detected issues.
//
// Precision_E is the share of emerging issues that match at least one
// changelog entry; Recall_L is the share of changelog entries matched by at
// least one issue of the full issue list; F_hybrid is their harmonic mean.

#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "reviewpulse/common.hpp"
#include "reviewpulse/embed.hpp"
#include "reviewpulse/report.hpp"
#include "reviewpulse/text.hpp"

namespace reviewpulse::eval {

using embed::EmbeddingTable;
using TokenList = std::vector<std::string>;

struct Changelog {
  std::string version_id;
  std::vector<TokenList> entries;
  std::vector<std::string> raw_entries;  // parallel to `entries`
};

// Generic release-note words. An entry made only of these says nothing
// about a concrete issue and is dropped.
inline const std::unordered_set<std::string>& boilerplate_words() {
  static const std::unordered_set<std::string> words = {
      "bug",   "fix",    "performance", "improvement", "improve", "stability", "minor",  "general",
      "various", "small", "tweak",      "enhancement", "update",  "change",    "other",  "issue",
      "overall", "speed", "reliability", "optimization", "optimize"};
  return words;
}

inline bool is_boilerplate(const TokenList& entry) {
  const auto& words = boilerplate_words();
  return std::all_of(entry.begin(), entry.end(), [&](const std::string& t) { return words.contains(t); });
}

// "# <version>" header lines start a version; every other non-empty line is
// one free-text entry. Entries are normalized like reviews.
inline std::vector<Changelog> parse_changelog(std::istream& in, const corpus::FilterList& filter,
                                              const corpus::LemmaRules& rules) {
  std::vector<Changelog> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::string v = trim(std::string_view(t).substr(1));
      if (v.empty()) throw Error(concat("changelog line ", line_no, ": empty version header"));
      out.push_back({std::move(v), {}, {}});
      continue;
    }
    if (out.empty()) throw Error(concat("changelog line ", line_no, ": entry before the first '# version' header"));
    std::string text = t;
    if (text.front() == '-' || text.front() == '*') text = trim(std::string_view(text).substr(1));
    auto tok = corpus::preprocess_review({out.back().version_id, text, std::nullopt, std::nullopt}, filter, rules);
    if (tok.tokens.empty() || is_boilerplate(tok.tokens)) continue;
    out.back().entries.push_back(std::move(tok.tokens));
    out.back().raw_entries.push_back(text);
  }
  std::erase_if(out, [](const Changelog& c) {
    if (c.entries.empty()) warn(concat("changelog version '", c.version_id, "' has no usable entries; excluded"));
    return c.entries.empty();
  });
  return out;
}

inline std::vector<Changelog> load_changelog(const std::string& path, const corpus::FilterList& filter,
                                             const corpus::LemmaRules& rules) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open changelog '", path, "'"));
  return parse_changelog(in, filter, rules);
}

inline constexpr double kDefaultMatchThreshold = 0.6;

// cosine(embed(issue), embed(entry)) > threshold; false when either side has
// no embedding.
inline bool match_issue(std::span<const std::string> issue, std::span<const std::string> entry,
                        const EmbeddingTable& table, double threshold = kDefaultMatchThreshold) {
  const auto a = embed::embed_text(issue, table);
  const auto b = embed::embed_text(entry, table);
  if (embed::is_zero(a) || embed::is_zero(b)) return false;
  return embed::cosine(a, b) > threshold;
}

// One detected issue, described by one or more label texts. It matches an
// entry when any of its labels does.
struct Issue {
  std::size_t topic = 0;
  std::vector<TokenList> labels;
};

inline bool issue_matches(const Issue& issue, const TokenList& entry, const EmbeddingTable& table, double threshold) {
  return std::any_of(issue.labels.begin(), issue.labels.end(),
                     [&](const TokenList& l) { return match_issue(l, entry, table, threshold); });
}

inline double f_hybrid(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

struct EvalResult {
  double precision_e = 0.0;
  double recall_l = 0.0;
  double f_hybrid = 0.0;
  std::size_t emerging_matched = 0;
  std::size_t emerging_total = 0;
  std::size_t entries_covered = 0;
  std::size_t entries_total = 0;
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;  // (issue index in L, entry index)
};

inline EvalResult evaluate(std::span<const Issue> emerging, std::span<const Issue> all_issues,
                           std::span<const TokenList> ground_truth, const EmbeddingTable& table,
                           double threshold = kDefaultMatchThreshold) {
  if (ground_truth.empty()) throw Error("no ground truth");
  EvalResult r;
  r.emerging_total = emerging.size();
  r.entries_total = ground_truth.size();
  for (const auto& issue : emerging)
    if (std::any_of(ground_truth.begin(), ground_truth.end(),
                    [&](const TokenList& g) { return issue_matches(issue, g, table, threshold); }))
      ++r.emerging_matched;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    bool covered = false;
    for (std::size_t i = 0; i < all_issues.size(); ++i)
      if (issue_matches(all_issues[i], ground_truth[g], table, threshold)) {
        r.matched_pairs.emplace_back(i, g);
        covered = true;
      }
    if (covered) ++r.entries_covered;
  }
  r.precision_e = r.emerging_total ? static_cast<double>(r.emerging_matched) / static_cast<double>(r.emerging_total) : 0.0;
  r.recall_l = static_cast<double>(r.entries_covered) / static_cast<double>(r.entries_total);
  r.f_hybrid = f_hybrid(r.precision_e, r.recall_l);
  return r;
}

// ---------------------------------------------------------------------------
// Report-level evaluation

enum class LabelLevel { phrase, sentence };

inline std::vector<Issue> issues_from(const report::IssueReport& rep, LabelLevel level, bool emerging_only) {
  std::vector<Issue> out;
  for (const auto& b : rep.branches) {
    if (emerging_only && !b.emerging) continue;
    Issue issue{b.topic, {}};
    for (const auto& l : level == LabelLevel::phrase ? b.phrases : b.sentences) issue.labels.push_back(l.tokens);
    if (!issue.labels.empty()) out.push_back(std::move(issue));
  }
  return out;
}

struct VersionEval {
  std::string version_id;
  std::string changelog_version;
  EvalResult result;
};

struct ReportEval {
  LabelLevel level = LabelLevel::sentence;
  std::vector<VersionEval> versions;
  EvalResult overall;  // counts summed over versions
};

// Issues detected at version t are matched against the changelog of the
// first changelog version that follows t.
inline ReportEval evaluate_report(const report::ReportBundle& bundle, std::span<const Changelog> changelogs,
                                  const EmbeddingTable& table, LabelLevel level,
                                  double threshold = kDefaultMatchThreshold) {
  ReportEval out;
  out.level = level;
  for (const auto& rep : bundle.reports) {
    const Changelog* next = nullptr;
    for (const auto& c : changelogs)
      if (version_less(rep.version_id, c.version_id) && (!next || version_less(c.version_id, next->version_id)))
        next = &c;
    if (!next || next->entries.empty()) continue;
    const auto emerging = issues_from(rep, level, true);
    const auto all = issues_from(rep, level, false);
    out.versions.push_back({rep.version_id, next->version_id, evaluate(emerging, all, next->entries, table, threshold)});
  }
  auto& o = out.overall;
  for (const auto& v : out.versions) {
    o.emerging_matched += v.result.emerging_matched;
    o.emerging_total += v.result.emerging_total;
    o.entries_covered += v.result.entries_covered;
    o.entries_total += v.result.entries_total;
  }
  o.precision_e = o.emerging_total ? static_cast<double>(o.emerging_matched) / static_cast<double>(o.emerging_total) : 0.0;
  o.recall_l = o.entries_total ? static_cast<double>(o.entries_covered) / static_cast<double>(o.entries_total) : 0.0;
  o.f_hybrid = f_hybrid(o.precision_e, o.recall_l);
  return out;
}

inline nlohmann::json to_json(const EvalResult& r) {
  return {{"precision_e", r.precision_e},
          {"recall_l", r.recall_l},
          {"f_hybrid", r.f_hybrid},
          {"emerging_matched", r.emerging_matched},
          {"emerging_total", r.emerging_total},
          {"entries_covered", r.entries_covered},
          {"entries_total", r.entries_total}};
}

inline nlohmann::json to_json(const ReportEval& e) {
  nlohmann::json versions = nlohmann::json::array();
  for (const auto& v : e.versions) {
    auto j = to_json(v.result);
    j["version"] = v.version_id;
    j["changelog_version"] = v.changelog_version;
    versions.push_back(std::move(j));
  }
  return {{"level", e.level == LabelLevel::phrase ? "phrase" : "sentence"},
          {"overall", to_json(e.overall)},
          {"versions", versions}};
}

}  // namespace reviewpulse::eval

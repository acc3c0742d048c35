#pragma once

// Versioned review corpora: loading, grouping by version, PMI phrase mining,
// a global monotone vocabulary and the word polarity lexicon.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "reviewpulse/common.hpp"
#include "reviewpulse/text.hpp"

namespace reviewpulse::corpus {

// Token <-> id map. Ids are dense and, once assigned, never change.
class Vocabulary {
 public:
  std::optional<WordId> find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  WordId add(const std::string& token) {
    auto [it, inserted] = ids_.try_emplace(token, static_cast<WordId>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  WordId at(std::string_view token) const {
    if (auto id = find(token)) return *id;
    throw Error(concat("unknown token '", token, "'"));
  }

  const std::string& token(WordId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    for (const auto& t : tokens) v.add(t);
    if (v.size() != tokens.size()) throw Error("vocabulary contains duplicate tokens");
    return v;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::string> tokens_;
};

struct Phrase {
  std::string first;
  std::string second;
  double pmi = 0.0;
  std::size_t count = 0;  // adjacent occurrences in the mining corpus

  std::string joined() const { return first + "_" + second; }
  friend bool operator==(const Phrase&, const Phrase&) = default;
};

struct VersionCorpus {
  std::string version_id;
  std::vector<TokenizedReview> reviews;
  // Vocabulary as of this version; a prefix-compatible view of the global one.
  Vocabulary vocabulary;
  // Word ids of each review's token stream, parallel to `reviews`.
  std::vector<std::vector<WordId>> documents;
  // Phrases mined from this version, with occurrence counts after merging.
  std::vector<Phrase> phrases;
  std::optional<std::int64_t> latest_timestamp;

  bool empty() const { return reviews.empty(); }
  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& r : reviews) n += r.tokens.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// Polarity lexicon

class PolarityLexicon {
 public:
  void set(std::string token, int code) {
    if (code < -1 || code > 1) throw Error(concat("polarity code out of range: ", code));
    std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
    entries_[std::move(token)] = static_cast<std::int8_t>(code);
  }

  std::optional<int> polarity(std::string_view token) const {
    auto it = entries_.find(std::string(token));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::int8_t>& entries() const { return entries_; }

  // Adds the lemma of every entry that is not already present, so that
  // inflected lexicon forms still hit lemmatized corpus tokens.
  PolarityLexicon with_lemmas(const LemmaRules& rules) const {
    PolarityLexicon out = *this;
    for (const auto& [token, code] : entries_) {
      auto lemma = lemmatize(token, rules);
      if (!out.entries_.contains(lemma)) out.entries_[lemma] = code;
    }
    return out;
  }

 private:
  std::map<std::string, std::int8_t> entries_;
};

inline PolarityLexicon parse_polarity_lexicon(std::istream& in) {
  PolarityLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(concat("lexicon line ", line_no, ": expected 'token<TAB>code'"));
    const std::string token = trim(line.substr(0, tab));
    const std::string code = trim(line.substr(tab + 1));
    if (token.empty()) throw Error(concat("lexicon line ", line_no, ": empty token"));
    int value = 0;
    if (code == "-1") value = -1;
    else if (code == "0") value = 0;
    else if (code == "1" || code == "+1") value = 1;
    else throw Error(concat("lexicon line ", line_no, ": unknown polarity code '", code, "'"));
    if (lex.polarity(token)) warn(concat("lexicon line ", line_no, ": duplicate token '", token, "', keeping last"));
    lex.set(token, value);
  }
  return lex;
}

inline PolarityLexicon load_polarity_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open lexicon '", path, "'"));
  return parse_polarity_lexicon(in);
}

// ---------------------------------------------------------------------------
// Review loading. Two layouts are accepted: tab-separated lines
// "version<TAB>text[<TAB>rating[<TAB>timestamp]]" (an optional header line
// starting with "version" is skipped), or JSON lines with the keys
// version, text, rating, timestamp.

namespace detail {

inline std::optional<RawReview> review_from_json(const nlohmann::json& j, std::size_t line_no) {
  if (!j.is_object() || !j.contains("version") || !j.contains("text"))
    throw Error(concat("reviews line ", line_no, ": record needs 'version' and 'text'"));
  RawReview r;
  r.version_id = j["version"].is_string() ? j["version"].get<std::string>() : j["version"].dump();
  r.text = j["text"].get<std::string>();
  if (j.contains("rating") && !j["rating"].is_null()) r.rating = j["rating"].get<int>();
  if (j.contains("timestamp") && !j["timestamp"].is_null()) r.timestamp = j["timestamp"].get<std::int64_t>();
  return r;
}

}  // namespace detail

inline std::vector<RawReview> parse_reviews(std::istream& in) {
  std::vector<RawReview> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty()) continue;
    RawReview r;
    if (t.front() == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(t);
      } catch (const nlohmann::json::exception& e) {
        throw Error(concat("reviews line ", line_no, ": ", e.what()));
      }
      r = *detail::review_from_json(j, line_no);
    } else {
      std::vector<std::string> fields;
      std::size_t start = 0;
      for (;;) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (fields.size() < 2) throw Error(concat("reviews line ", line_no, ": expected 'version<TAB>text'"));
      if (line_no == 1 && trim(fields[0]) == "version") continue;
      r.version_id = trim(fields[0]);
      r.text = fields[1];
      try {
        if (fields.size() > 2 && !trim(fields[2]).empty()) r.rating = std::stoi(fields[2]);
        if (fields.size() > 3 && !trim(fields[3]).empty()) r.timestamp = std::stoll(fields[3]);
      } catch (const std::exception&) {
        throw Error(concat("reviews line ", line_no, ": bad rating or timestamp"));
      }
    }
    if (r.version_id.empty()) throw Error(concat("reviews line ", line_no, ": empty version id"));
    if (r.rating && (*r.rating < 1 || *r.rating > 5))
      throw Error(concat("reviews line ", line_no, ": rating must be 1-5"));
    if (trim(r.text).empty()) {
      ++skipped;
      continue;
    }
    out.push_back(std::move(r));
  }
  if (skipped) warn(concat("skipped ", skipped, " reviews with empty text"));
  return out;
}

inline std::vector<RawReview> load_reviews(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open reviews '", path, "'"));
  return parse_reviews(in);
}

// ---------------------------------------------------------------------------
// Phrase mining

// Adjacent pairs (within sentences) whose PMI, in nats, exceeds `threshold`.
// Unigram probabilities are relative frequencies over the token stream and
// pair probabilities over the adjacent-pair stream. Pairs seen fewer than
// `min_count` times are ignored. Output is sorted by descending PMI, then by
// the pair's text.
inline std::vector<Phrase> extract_phrases(std::span<const TokenizedReview> reviews, double threshold,
                                           std::size_t min_count = 1) {
  std::unordered_map<std::string, std::size_t> unigram;
  std::map<std::pair<std::string, std::string>, std::size_t> bigram;
  std::size_t n_tokens = 0, n_pairs = 0;
  for (const auto& r : reviews) {
    for (const auto& s : r.sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        ++unigram[s[i]];
        ++n_tokens;
        if (i + 1 < s.size()) {
          ++n_pairs;
          if (s[i] != s[i + 1] && s[i].find('_') == std::string::npos && s[i + 1].find('_') == std::string::npos)
            ++bigram[{s[i], s[i + 1]}];
        }
      }
    }
  }
  if (n_tokens == 0) throw Error("extract_phrases: corpus is empty");
  std::vector<Phrase> out;
  for (const auto& [pair, count] : bigram) {
    if (count < min_count) continue;
    const double p_pair = static_cast<double>(count) / static_cast<double>(n_pairs);
    const double p1 = static_cast<double>(unigram[pair.first]) / static_cast<double>(n_tokens);
    const double p2 = static_cast<double>(unigram[pair.second]) / static_cast<double>(n_tokens);
    const double pmi = std::log(p_pair / (p1 * p2));
    if (pmi > threshold) out.push_back({pair.first, pair.second, pmi, count});
  }
  std::sort(out.begin(), out.end(), [](const Phrase& a, const Phrase& b) {
    if (a.pmi != b.pmi) return a.pmi > b.pmi;
    return std::tie(a.first, a.second) < std::tie(b.first, b.second);
  });
  return out;
}

// Replaces mined pairs by their "_"-joined token, greedily left to right.
inline void merge_phrases(TokenizedReview& review, const std::map<std::pair<std::string, std::string>, std::string>& joined) {
  review.tokens.clear();
  for (auto& sentence : review.sentences) {
    std::vector<std::string> merged;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i + 1 < sentence.size()) {
        if (auto it = joined.find({sentence[i], sentence[i + 1]}); it != joined.end()) {
          merged.push_back(it->second);
          ++i;
          continue;
        }
      }
      merged.push_back(sentence[i]);
    }
    sentence = std::move(merged);
    review.tokens.insert(review.tokens.end(), sentence.begin(), sentence.end());
  }
}

struct CorpusOptions {
  double pmi_threshold = 5.0;
  std::size_t min_phrase_count = 3;
};

// Groups reviews by version (natural version order), normalizes them, mines
// and merges phrases per version and assigns ids from one vocabulary that
// only ever grows.
inline std::vector<VersionCorpus> build_version_corpora(const std::vector<RawReview>& reviews, const FilterList& filter,
                                                        const LemmaRules& rules, const CorpusOptions& options = {}) {
  if (reviews.empty()) throw Error("build_version_corpora: no reviews");
  std::map<std::string, std::vector<const RawReview*>, VersionLess> grouped;
  for (const auto& r : reviews) grouped[r.version_id].push_back(&r);

  Vocabulary global;
  std::vector<VersionCorpus> out;
  for (const auto& [version, raws] : grouped) {
    VersionCorpus vc;
    vc.version_id = version;
    for (const RawReview* r : raws) {
      if (r->timestamp && (!vc.latest_timestamp || *r->timestamp > *vc.latest_timestamp))
        vc.latest_timestamp = r->timestamp;
      auto t = preprocess_review(*r, filter, rules);
      if (!t.empty()) vc.reviews.push_back(std::move(t));
    }
    if (vc.reviews.empty()) {
      warn(concat("version '", version, "' has no reviews after preprocessing"));
      vc.vocabulary = global;
      out.push_back(std::move(vc));
      continue;
    }

    auto mined = extract_phrases(vc.reviews, options.pmi_threshold, options.min_phrase_count);
    std::map<std::pair<std::string, std::string>, std::string> joined;
    for (const auto& p : mined) joined[{p.first, p.second}] = p.joined();
    std::unordered_map<std::string, std::size_t> merged_counts;
    for (auto& r : vc.reviews) {
      merge_phrases(r, joined);
      for (const auto& t : r.tokens)
        if (t.find('_') != std::string::npos) ++merged_counts[t];
    }
    for (auto& p : mined) {
      auto it = merged_counts.find(p.joined());
      p.count = it == merged_counts.end() ? 0 : it->second;
    }
    std::erase_if(mined, [](const Phrase& p) { return p.count == 0; });
    vc.phrases = std::move(mined);

    for (const auto& r : vc.reviews) {
      std::vector<WordId> ids;
      ids.reserve(r.tokens.size());
      for (const auto& t : r.tokens) {
        if (auto sep = t.find('_'); sep != std::string::npos) {
          global.add(t.substr(0, sep));
          global.add(t.substr(sep + 1));
        }
        ids.push_back(global.add(t));
      }
      vc.documents.push_back(std::move(ids));
    }
    vc.vocabulary = global;
    out.push_back(std::move(vc));
  }
  return out;
}

}  // namespace reviewpulse::corpus

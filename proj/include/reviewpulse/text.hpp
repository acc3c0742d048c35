#pragma once

// Review text normalization: tokenization, sentence splitting, elongation and
// repetition collapse, a small suffix-rule lemmatizer and filter-list removal.

#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reviewpulse/common.hpp"

namespace reviewpulse::corpus {

struct RawReview {
  std::string version_id;
  std::string text;
  std::optional<int> rating;
  std::optional<std::int64_t> timestamp;
};

struct TokenizedReview {
  std::string version_id;
  std::vector<std::string> tokens;
  std::vector<std::vector<std::string>> sentences;

  bool empty() const { return tokens.empty(); }
};

using FilterList = std::unordered_set<std::string>;

// ---------------------------------------------------------------------------
// Lemmatizer

// Extra condition a rule's stem has to meet before the rule fires.
enum class StemCondition {
  none,
  sibilant_end,      // stem ends in s, x, z, ch or sh ("crashes" -> "crash")
  not_s_like_end,    // word does not end in ss, us, is or '
  double_consonant,  // stem ends in a doubled b, d, g, m, n, p or t ("bigger", not "buffer")
};

// What to do with the stem after stripping the suffix.
enum class Restore {
  none,
  verb,      // undouble a final consonant pair, or add a final e after at/bl/iz or a short cvc stem
  undouble,  // drop one letter of a final doubled consonant
};

struct SuffixRule {
  std::string suffix;
  std::string replacement;
  std::size_t min_stem = 1;
  bool stem_needs_vowel = false;
  StemCondition condition = StemCondition::none;
  Restore restore = Restore::none;
};

struct LemmaRules {
  // First matching rule wins on each pass; passes repeat until the word is
  // stable, so lemmatize(lemmatize(w)) == lemmatize(w).
  std::vector<SuffixRule> rules;
  // Irregular forms and words the suffix rules would mangle. Values are
  // returned as-is and are never stripped further.
  std::unordered_map<std::string, std::string> exceptions;
  // Words whose suffixes are never stripped (the eed family, etc.).
  std::vector<std::string> protected_suffixes;

  static LemmaRules english();
};

namespace detail {

inline bool is_vowel_at(std::string_view w, std::size_t i) {
  const char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
  return c == 'y' && i > 0 && !is_vowel_at(w, i - 1);
}

inline bool has_vowel(std::string_view w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::isalpha(static_cast<unsigned char>(w[i])) && is_vowel_at(w, i)) return true;
  return false;
}

// Number of vowel-consonant sequences in the stem.
inline std::size_t measure(std::string_view w) {
  std::size_t m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool v = is_vowel_at(w, i);
    if (!v && prev_vowel) ++m;
    prev_vowel = v;
  }
  return m;
}

inline bool ends_cvc(std::string_view w) {
  if (w.size() < 3) return false;
  const std::size_t n = w.size();
  if (is_vowel_at(w, n - 1) || !is_vowel_at(w, n - 2) || is_vowel_at(w, n - 3)) return false;
  const char last = w[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

inline bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && std::isalpha(static_cast<unsigned char>(w[n - 1])) &&
         !is_vowel_at(w, n - 1);
}

inline bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

inline bool condition_holds(StemCondition c, std::string_view word, std::string_view stem) {
  switch (c) {
    case StemCondition::none: return true;
    case StemCondition::sibilant_end:
      return ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") || ends_with(stem, "ch") ||
             ends_with(stem, "sh");
    case StemCondition::not_s_like_end:
      return !(ends_with(word, "ss") || ends_with(word, "us") || ends_with(word, "is") || ends_with(word, "'s"));
    case StemCondition::double_consonant:
      return ends_double_consonant(stem) && std::string_view("bdgmnpt").find(stem.back()) != std::string_view::npos;
  }
  return true;
}

inline std::string restore_stem(std::string stem, Restore r) {
  if (r == Restore::none) return stem;
  if (ends_double_consonant(stem)) {
    const char last = stem.back();
    if (r == Restore::undouble || (last != 'l' && last != 's' && last != 'z')) stem.pop_back();
    return stem;
  }
  if (r == Restore::verb) {
    if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
    if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  }
  return stem;
}

}  // namespace detail

inline LemmaRules LemmaRules::english() {
  LemmaRules r;
  r.rules = {
      {"'s", "", 1, false, StemCondition::none, Restore::none},
      {"sses", "ss", 1, false, StemCondition::none, Restore::none},
      {"ies", "y", 2, false, StemCondition::none, Restore::none},
      {"es", "", 2, false, StemCondition::sibilant_end, Restore::none},
      {"s", "", 3, false, StemCondition::not_s_like_end, Restore::none},
      {"ied", "y", 2, false, StemCondition::none, Restore::none},
      {"ed", "", 2, true, StemCondition::none, Restore::verb},
      {"ing", "", 2, true, StemCondition::none, Restore::verb},
      {"iest", "y", 2, false, StemCondition::none, Restore::none},
      {"ier", "y", 2, false, StemCondition::none, Restore::none},
      {"est", "", 2, true, StemCondition::double_consonant, Restore::undouble},
      {"er", "", 2, true, StemCondition::double_consonant, Restore::undouble},
  };
  r.protected_suffixes = {"eed", "ss", "ous"};
  r.exceptions = {
      {"used", "use"},         {"using", "use"},         {"uses", "use"},          {"does", "do"},
      {"doing", "do"},         {"done", "do"},           {"did", "do"},            {"has", "have"},
      {"had", "have"},         {"having", "have"},       {"was", "be"},            {"were", "be"},
      {"is", "be"},            {"are", "be"},            {"been", "be"},           {"being", "be"},
      {"am", "be"},            {"went", "go"},           {"gone", "go"},           {"goes", "go"},
      {"better", "good"},      {"best", "good"},         {"worse", "bad"},         {"worst", "bad"},
      {"children", "child"},   {"people", "people"},     {"men", "man"},           {"women", "woman"},
      {"news", "news"},        {"always", "always"},     {"status", "status"},     {"series", "series"},
      {"lens", "lens"},        {"ios", "ios"},           {"analysis", "analysis"}, {"during", "during"},
      {"nothing", "nothing"},  {"something", "something"}, {"anything", "anything"}, {"everything", "everything"},
      {"morning", "morning"},  {"evening", "evening"},   {"amazing", "amazing"},   {"exciting", "exciting"},
      {"setting", "setting"},  {"settings", "setting"},  {"string", "string"},     {"thing", "thing"},
      {"things", "thing"},     {"embedded", "embed"},    {"embed", "embed"},       {"deleted", "delete"},
      {"deleting", "delete"},  {"deletes", "delete"},    {"completed", "complete"}, {"completing", "complete"},
      {"became", "become"},    {"came", "come"},         {"coming", "come"},       {"got", "get"},
      {"gotten", "get"},       {"made", "make"},         {"took", "take"},         {"taken", "take"},
      {"saw", "see"},          {"seen", "see"},          {"said", "say"},          {"lost", "lose"},
      {"ran", "run"},          {"bought", "buy"},        {"paid", "pay"},          {"froze", "freeze"},
      {"frozen", "freeze"},    {"freezes", "freeze"},    {"freezing", "freeze"},   {"wrote", "write"},
      {"written", "write"},    {"bed", "bed"},           {"red", "red"},           {"speed", "speed"},
      {"ring", "ring"},        {"king", "king"},         {"sing", "sing"},         {"bring", "bring"},
      {"this", "this"},        {"its", "it"},            {"yes", "yes"},           {"gas", "gas"},
      {"plus", "plus"},        {"bus", "bus"},           {"less", "less"},         {"unless", "unless"},
  };
  return r;
}

// One suffix-rule pass; returns the input unchanged when nothing applies.
inline std::string lemmatize_step(const std::string& word, const LemmaRules& rules) {
  if (auto it = rules.exceptions.find(word); it != rules.exceptions.end()) return it->second;
  for (const auto& p : rules.protected_suffixes)
    if (detail::ends_with(word, p)) return word;
  for (const auto& rule : rules.rules) {
    if (!detail::ends_with(word, rule.suffix)) continue;
    std::string stem = word.substr(0, word.size() - rule.suffix.size());
    if (stem.size() < rule.min_stem) continue;
    if (rule.stem_needs_vowel && !detail::has_vowel(stem)) continue;
    if (!detail::condition_holds(rule.condition, word, stem)) continue;
    stem += rule.replacement;
    return detail::restore_stem(std::move(stem), rule.restore);
  }
  return word;
}

inline std::string lemmatize(const std::string& word, const LemmaRules& rules) {
  if (word.find('_') != std::string::npos) return word;
  std::string current = word;
  for (;;) {
    // Exception values are final.
    if (auto it = rules.exceptions.find(current); it != rules.exceptions.end()) return it->second;
    std::string next = lemmatize_step(current, rules);
    if (next == current || next.empty()) return current;
    current = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Token-level helpers

// Runs of three or more identical characters shrink to two ("soooo" -> "soo").
inline std::string collapse_elongation(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token) {
    const std::size_t n = out.size();
    if (n >= 2 && out[n - 1] == c && out[n - 2] == c) continue;
    out.push_back(c);
  }
  return out;
}

inline bool is_english_token(std::string_view token) {
  bool has_alnum = false;
  for (unsigned char c : token) {
    if (std::isdigit(c) || (c >= 'a' && c <= 'z')) {
      has_alnum = true;
      continue;
    }
    if (c == '\'' || c == '_') continue;
    return false;
  }
  return has_alnum;
}

inline bool is_sentence_delimiter(char c) { return c == '.' || c == '!' || c == '?' || c == ';'; }

// Splits raw text into sentences of lowercase surface tokens. Non-ASCII bytes
// stay inside their token so that the token is later recognized as
// non-English and dropped.
inline std::vector<std::vector<std::string>> split_sentences(std::string_view text) {
  std::vector<std::vector<std::string>> sentences(1);
  std::string token;
  auto flush_token = [&] {
    if (!token.empty()) sentences.back().push_back(std::move(token));
    token.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_sentence_delimiter(ch)) {
      flush_token();
      if (!sentences.back().empty()) sentences.emplace_back();
    } else if (std::isalnum(c) || ch == '\'' || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush_token();
    }
  }
  flush_token();
  if (sentences.back().empty()) sentences.pop_back();
  return sentences;
}

inline FilterList load_filter_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open filter list '", path, "'"));
  FilterList out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    out.insert(std::move(t));
  }
  return out;
}

// Normalizes one review into its token stream and sentence structure.
inline TokenizedReview preprocess_review(const RawReview& raw, const FilterList& filter, const LemmaRules& rules) {
  if (trim(raw.text).empty()) throw Error("preprocess_review: review text is empty");
  TokenizedReview out;
  out.version_id = raw.version_id;
  for (const auto& surface : split_sentences(raw.text)) {
    std::vector<std::string> sentence;
    for (const auto& tok : surface) {
      std::string t = tok;
      while (!t.empty() && t.front() == '\'') t.erase(t.begin());
      while (!t.empty() && t.back() == '\'') t.pop_back();
      if (!is_english_token(t)) continue;
      t = collapse_elongation(t);
      if (filter.contains(t)) continue;
      // Possessives go through the lemmatizer first; any apostrophe left
      // after that is a contraction and is dropped ("don't" -> "dont").
      std::string lemma = lemmatize(t, rules);
      if (lemma.find('\'') != std::string::npos) {
        std::erase(lemma, '\'');
        lemma = lemmatize(lemma, rules);
      }
      if (lemma.empty() || filter.contains(lemma)) continue;
      if (!sentence.empty() && sentence.back() == lemma) continue;
      sentence.push_back(std::move(lemma));
    }
    if (sentence.empty()) continue;
    out.tokens.insert(out.tokens.end(), sentence.begin(), sentence.end());
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

// Renders a tokenized review back to plain text, one sentence per clause.
inline std::string render_text(const TokenizedReview& review) {
  std::string out;
  for (const auto& s : review.sentences) {
    if (!out.empty()) out += ". ";
    out += join(s, " ");
  }
  return out;
}

}  // namespace reviewpulse::corpus

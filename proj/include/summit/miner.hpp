/* Copyright 2026 The Summit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/


#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/ingestion.hpp"
#include "summit/markdown_prep.hpp"

namespace summit::miner {

// ---------------------------------------------------------------------------
// Lexicon

inline const std::vector<std::string>& category_names() {
  static const std::vector<std::string> kNames = {"directly_indicating", "referring_person_or_comment",
                                                  "purpose_related", "attribute_or_quality"};
  return kNames;
}

struct LexiconEntry {
  // A phrase; `a/b` lists alternatives for the words around the slash, so
  // "for future/reference" means "for future" and "for reference".
  std::string phrase;
  // Irregular forms that the inflection rules cannot produce.
  std::vector<std::string> extra_variants;
};

struct KeywordLexicon {
  std::map<std::string, std::vector<LexiconEntry>> categories;

  void validate() const {
    const auto& names = category_names();
    for (const auto& [name, entries] : categories) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        fail(ErrorCode::kSchemaViolation, "unknown lexicon category '" + name + "'");
      }
    }
    for (const auto& name : names) {
      if (!categories.count(name)) fail(ErrorCode::kSchemaViolation, "lexicon lacks category '" + name + "'");
    }
  }

  /// `{category: [phrase | {phrase, variants: [...]}, ...]}`
  static KeywordLexicon from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::kSchemaViolation, "lexicon: expected an object");
    KeywordLexicon lex;
    for (const auto& [name, list] : j.items()) {
      if (!list.is_array()) fail(ErrorCode::kSchemaViolation, "lexicon." + name + ": expected list");
      auto& entries = lex.categories[name];
      for (const auto& e : list) {
        if (e.is_string()) {
          entries.push_back({e.get<std::string>(), {}});
        } else if (e.is_object() && e.contains("phrase")) {
          entries.push_back({e["phrase"].get<std::string>(),
                             e.value("variants", std::vector<std::string>{})});
        } else {
          fail(ErrorCode::kSchemaViolation, "lexicon." + name + ": bad entry " + e.dump());
        }
      }
    }
    lex.validate();
    return lex;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, entries] : categories) {
      auto& list = j[name] = nlohmann::json::array();
      for (const auto& e : entries) {
        if (e.extra_variants.empty()) {
          list.push_back(e.phrase);
        } else {
          list.push_back({{"phrase", e.phrase}, {"variants", e.extra_variants}});
        }
      }
    }
    return j;
  }

  static KeywordLexicon load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot open lexicon " + path.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
    }
  }

  /// The four keyword groups used to spot candidate summaries in issue
  /// threads (mirrors data/lexicon.json).
  static KeywordLexicon defaults() {
    KeywordLexicon lex;
    auto add = [&](const char* cat, std::initializer_list<const char*> phrases) {
      for (const char* p : phrases) lex.categories[cat].push_back({p, {}});
    };
    add("directly_indicating",
        {"summary/summarize", "sum up", "outline", "nutshell", "all this to say", "simply put", "tl;dr"});
    add("referring_person_or_comment",
        {"according to", "other people", "as others", "suggested by", "'s idea", "we have", "have tried",
         "mention", "talk", "point", "discuss", "comments", "this issue", "above", "below", "earlier",
         "as indicated before", "as I said"});
    add("purpose_related",
        {"for future/reference/other", "remember", "recommend", "reference", "recap", "recall", "overview",
         "updated/current list", "list of remaining/done", "conclude/conclusion", "therefore/so", "synthesize",
         "that means"});
    add("attribute_or_quality",
        {"short", "quick", "basically", "high level", "consensus", "thus far", "at this point", "as far as",
         "essence", "exact", "essential", "underlying", "biggest", "important", "relevant", "overall"});
    return lex;
  }
};

// ---------------------------------------------------------------------------
// Variant expansion

/// Splits a slash entry into its keyword alternatives.
inline std::vector<std::string> expand_alternatives(std::string_view phrase) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto slash = phrase.find('/', pos);
    parts.emplace_back(phrase.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos));
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  if (parts.size() == 1) return parts;
  const auto first_space = parts.front().rfind(' ');
  const std::string prefix = first_space == std::string::npos ? "" : parts.front().substr(0, first_space + 1);
  parts.front() = parts.front().substr(prefix.size());
  const auto last_space = parts.back().find(' ');
  const std::string suffix = last_space == std::string::npos ? "" : parts.back().substr(last_space);
  parts.back() = parts.back().substr(0, parts.back().size() - suffix.size());
  std::vector<std::string> out;
  for (const auto& p : parts) out.push_back(prefix + p + suffix);
  return out;
}

namespace detail {

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline bool ends_cvc(std::string_view w) {
  if (w.size() < 3) return false;
  const char c1 = w[w.size() - 3], v = w[w.size() - 2], c2 = w.back();
  return !is_vowel(c1) && is_vowel(v) && !is_vowel(c2) && c2 != 'w' && c2 != 'x' && c2 != 'y';
}

inline bool ends_with(std::string_view w, std::string_view s) {
  return w.size() >= s.size() && w.substr(w.size() - s.size()) == s;
}

/// Words that carry no inflection of their own inside a phrase.
inline bool is_function_word(std::string_view w) {
  static const std::unordered_set<std::string_view> kWords = {
      "the", "this", "that", "all", "for", "to", "as", "by", "of", "at", "we", "have", "has", "so",
      "far", "other", "others", "according", "i", "put", "what", "thus", "said"};
  return kWords.count(w) > 0;
}

}  // namespace detail

/// Rule-based inflections of one lowercase word: the word itself, -s/-es
/// (and the singular of a plain -s plural),
/// -ed and -ing (with e-drop and y->i rules; for consonant-vowel-consonant
/// endings both the doubled and undoubled forms), plus -ize/-ise spelling.
inline std::set<std::string> inflect(const std::string& w) {
  using detail::ends_with;
  using detail::is_vowel;
  std::set<std::string> out = {w};
  if (w.size() < 3 || !std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) {
    return out;
  }
  const bool consonant_y = w.back() == 'y' && !is_vowel(w[w.size() - 2]);
  // A plural entry also matches its singular.
  if (w.size() > 3 && w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    out.insert(w.substr(0, w.size() - 1));
  }
  // plural / third person
  if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") || ends_with(w, "sh")) {
    out.insert(w + "es");
  } else if (consonant_y) {
    out.insert(w.substr(0, w.size() - 1) + "ies");
  } else {
    out.insert(w + "s");
  }
  // past
  if (w.back() == 'e') {
    out.insert(w + "d");
  } else if (consonant_y) {
    out.insert(w.substr(0, w.size() - 1) + "ied");
  } else {
    out.insert(w + "ed");
    if (detail::ends_cvc(w)) out.insert(w + w.back() + "ed");
  }
  // progressive
  if (ends_with(w, "ie")) {
    out.insert(w.substr(0, w.size() - 2) + "ying");
  } else if (w.back() == 'e' && !ends_with(w, "ee")) {
    out.insert(w.substr(0, w.size() - 1) + "ing");
  } else {
    out.insert(w + "ing");
    if (detail::ends_cvc(w)) out.insert(w + w.back() + "ing");
  }
  // spelling
  std::set<std::string> spelled;
  for (const auto& f : out) {
    if (auto p = f.find("iz"); p != std::string::npos) {
      std::string alt = f;
      alt[p + 1] = 's';
      spelled.insert(alt);
    }
  }
  out.insert(spelled.begin(), spelled.end());
  // A past-tense entry ("tried", "suggested") also matches the other forms
  // of its base verb.
  if (w.size() > 4 && ends_with(w, "ed")) {
    std::vector<std::string> bases;
    if (ends_with(w, "ied")) {
      bases.push_back(w.substr(0, w.size() - 3) + "y");
    } else {
      bases.push_back(w.substr(0, w.size() - 2));
      bases.push_back(w.substr(0, w.size() - 1));
      if (w[w.size() - 3] == w[w.size() - 4]) bases.push_back(w.substr(0, w.size() - 3));
    }
    for (const auto& b : bases) {
      if (ends_with(b, "ed")) continue;
      const auto forms = inflect(b);
      out.insert(forms.begin(), forms.end());
    }
  }
  return out;
}

/// Lowercases ASCII, maps the typographic apostrophe to `'`, and folds
/// hyphens and whitespace runs into one space. `origin[i]` is the byte offset
/// in `text` that produced output byte i.
inline std::string normalize(std::string_view text, std::vector<std::size_t>* origin = nullptr) {
  std::string out;
  if (origin) origin->clear();
  auto push = [&](char c, std::size_t from) {
    out.push_back(c);
    if (origin) origin->push_back(from);
  };
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (text.compare(i, 3, "\xE2\x80\x99") == 0) {
      push('\'', i);
      i += 3;
      continue;
    }
    if (c == '-' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (out.empty() || out.back() != ' ') push(' ', i);
      ++i;
      continue;
    }
    push(static_cast<char>(std::tolower(static_cast<unsigned char>(c))), i);
    ++i;
  }
  if (origin) origin->push_back(text.size());
  return out;
}

struct CompiledKeyword {
  std::string keyword;
  std::string category;
  std::vector<std::string> variants;  // normalized
};

/// Case-insensitive, word-boundary-aware matcher over every keyword variant.
class Detector {
 public:
  struct Hit {
    const CompiledKeyword* keyword;
    std::size_t begin, end;  // byte range in the searched text
  };

  explicit Detector(std::vector<CompiledKeyword> keywords) : keywords_(std::move(keywords)) {}

  const std::vector<CompiledKeyword>& keywords() const { return keywords_; }

  /// Every occurrence of every variant, keyword order then position order.
  std::vector<Hit> find_all(std::string_view text) const {
    std::vector<std::size_t> origin;
    const std::string norm = normalize(text, &origin);
    std::vector<Hit> hits;
    for (const auto& kw : keywords_) {
      for (const auto& v : kw.variants) {
        if (v.empty()) continue;
        for (auto pos = norm.find(v); pos != std::string::npos; pos = norm.find(v, pos + 1)) {
          const auto end = pos + v.size();
          const bool left_ok = !summit::detail::is_alnum(v.front()) || pos == 0 || !summit::detail::is_alnum(norm[pos - 1]);
          const bool right_ok = !summit::detail::is_alnum(v.back()) || end == norm.size() || !summit::detail::is_alnum(norm[end]);
          if (left_ok && right_ok) hits.push_back({&kw, origin[pos], origin[end - 1] + 1});
        }
      }
    }
    return hits;
  }

 private:
  std::vector<CompiledKeyword> keywords_;
};

inline Detector expand_variants(const KeywordLexicon& lexicon) {
  lexicon.validate();
  std::vector<CompiledKeyword> compiled;
  for (const auto& category : category_names()) {
    for (const auto& entry : lexicon.categories.at(category)) {
      for (const auto& keyword : expand_alternatives(entry.phrase)) {
        CompiledKeyword kw{keyword, category, {}};
        const std::string base = normalize(keyword);
        std::set<std::string> variants = {base};
        std::vector<std::string> words;
        for (std::size_t p = 0; p <= base.size();) {
          auto sp = base.find(' ', p);
          if (sp == std::string::npos) sp = base.size();
          words.push_back(base.substr(p, sp - p));
          p = sp + 1;
        }
        for (std::size_t i = 0; i < words.size(); ++i) {
          if (detail::is_function_word(words[i])) continue;
          for (const auto& form : inflect(words[i])) {
            auto copy = words;
            copy[i] = form;
            std::string joined;
            for (const auto& w : copy) joined += (joined.empty() ? "" : " ") + w;
            variants.insert(joined);
          }
        }
        for (const auto& extra : entry.extra_variants) variants.insert(normalize(extra));
        kw.variants.assign(variants.begin(), variants.end());
        // Longer variants first so the reported match is the widest one.
        std::stable_sort(kw.variants.begin(), kw.variants.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        compiled.push_back(std::move(kw));
      }
    }
  }
  return Detector(std::move(compiled));
}

// ---------------------------------------------------------------------------
// Detection

struct SentenceRef {
  std::string thread_id;
  std::string comment_id;
  std::size_t sentence_index = 0;

  auto operator<=>(const SentenceRef&) const = default;
  bool operator==(const SentenceRef&) const = default;
};

struct DetectionMatch {
  std::string thread_id;
  std::string comment_id;
  std::size_t sentence_index = 0;
  std::string sentence_text;
  std::string matched_keyword;
  std::string matched_variant;  // as it appears in sentence_text
  std::string category;

  SentenceRef ref() const { return {thread_id, comment_id, sentence_index}; }
};

inline nlohmann::json match_to_json(const DetectionMatch& m) {
  return {{"thread_id", m.thread_id},       {"comment_id", m.comment_id},
          {"sentence_index", m.sentence_index}, {"sentence_text", m.sentence_text},
          {"matched_keyword", m.matched_keyword}, {"matched_variant", m.matched_variant},
          {"category", m.category}};
}

/// Hits in one sentence, reduced to the longest match per category.
inline std::vector<Detector::Hit> best_hits_per_category(const Detector& detector, std::string_view text) {
  std::map<std::string, Detector::Hit> best;
  for (const auto& h : detector.find_all(text)) {
    auto it = best.find(h.keyword->category);
    if (it == best.end()) {
      best.emplace(h.keyword->category, h);
    } else if (h.end - h.begin > it->second.end - it->second.begin) {
      it->second = h;
    }
  }
  std::vector<Detector::Hit> out;
  for (const auto& cat : category_names()) {
    if (auto it = best.find(cat); it != best.end()) out.push_back(it->second);
  }
  return out;
}

/// Sentence-level matching over a thread. Code, links and markup are masked
/// before matching so keywords inside them do not count.
inline std::vector<DetectionMatch> detect_candidates(const IssueThread& thread, const Detector& detector,
                                                     const AbbreviationList& abbreviations = AbbreviationList::defaults()) {
  std::vector<DetectionMatch> out;
  const auto prepared = prepare_thread(thread, abbreviations);
  for (const auto& pc : prepared.comments) {
    for (const auto& s : pc.sentences) {
      const auto hits = best_hits_per_category(detector, s.masked_text);
      if (hits.empty()) continue;
      const std::string sentence_text = restore(s.masked_text, pc.masked.placeholders);
      for (const auto& h : hits) {
        out.push_back({thread.thread_id, s.comment_id, s.index, sentence_text, h.keyword->keyword,
                       s.masked_text.substr(h.begin, h.end - h.begin), h.keyword->category});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct EvalReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision is reported as 0 when nothing was detected.
inline EvalReport eval_report(std::size_t tp, std::size_t fp, std::size_t fn) {
  EvalReport r{tp, fp, fn, 0.0, 0.0};
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return r;
}

inline EvalReport evaluate_detector(const std::set<SentenceRef>& detected, const std::set<SentenceRef>& gold) {
  if (gold.empty()) fail(ErrorCode::kEmptyGold, "recall is undefined without gold sentences");
  std::size_t tp = 0;
  for (const auto& d : detected) tp += gold.count(d);
  return eval_report(tp, detected.size() - tp, gold.size() - tp);
}

struct AgreementReport {
  double p_observed = 0.0;
  double p_expected = 0.0;
  double kappa = 0.0;
  std::size_t n_items = 0;
};

inline AgreementReport cohen_kappa(const std::vector<std::string>& coder_a, const std::vector<std::string>& coder_b) {
  if (coder_a.size() != coder_b.size()) {
    fail(ErrorCode::kLengthMismatch,
         std::to_string(coder_a.size()) + " vs " + std::to_string(coder_b.size()) + " labels");
  }
  if (coder_a.empty()) fail(ErrorCode::kInvalidArgument, "no items to compare");
  const auto n = static_cast<double>(coder_a.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < coder_a.size(); ++i) {
    ++marginals[coder_a[i]].first;
    ++marginals[coder_b[i]].second;
    agree += coder_a[i] == coder_b[i];
  }
  AgreementReport r;
  r.n_items = coder_a.size();
  r.p_observed = static_cast<double>(agree) / n;
  for (const auto& [label, m] : marginals) {
    r.p_expected += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  }
  if (r.p_expected >= 1.0 - 1e-12) {
    fail(ErrorCode::kDegenerateAgreement, "both coders used a single identical category; kappa is undefined");
  }
  r.kappa = (r.p_observed - r.p_expected) / (1.0 - r.p_expected);
  return r;
}

enum class UTestMethod { kExact, kNormalApprox };

inline std::string_view to_string(UTestMethod m) { return m == UTestMethod::kExact ? "exact" : "normal_approx"; }

struct UTestReport {
  double u = 0.0;  // for sample_a
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double p_value = 1.0;  // two-sided
  UTestMethod method = UTestMethod::kExact;
};

inline constexpr std::size_t kExactUTestMaxN = 16;

namespace detail {

/// Midranks (1-based) of `values`.
inline std::vector<double> midranks(const std::vector<double>& values) {
  std::vector<std::size_t> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

}  // namespace detail

/// U counts pairs (x from a, y from b) with x < y, ties counting one half.
/// Two-sided p: exact permutation distribution (ties included) when
/// n1 + n2 <= 16, otherwise the tie-corrected normal approximation with
/// continuity correction.
inline UTestReport mann_whitney_u(const std::vector<double>& sample_a, const std::vector<double>& sample_b) {
  if (sample_a.empty() || sample_b.empty()) fail(ErrorCode::kEmptySample, "both samples must be nonempty");
  UTestReport r;
  r.n1 = sample_a.size();
  r.n2 = sample_b.size();
  const std::size_t n = r.n1 + r.n2;
  std::vector<double> pooled(sample_a);
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const auto ranks = detail::midranks(pooled);
  const double n2d = static_cast<double>(r.n2);
  auto u_for_b_mask = [&](const std::vector<bool>& in_b) {
    double rank_sum_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_b[i]) rank_sum_b += ranks[i];
    }
    return rank_sum_b - n2d * (n2d + 1.0) / 2.0;
  };
  std::vector<bool> observed(n, false);
  for (std::size_t i = r.n1; i < n; ++i) observed[i] = true;
  r.u = u_for_b_mask(observed);

  const double mu = static_cast<double>(r.n1) * n2d / 2.0;
  const double observed_dev = std::abs(r.u - mu);
  if (n <= kExactUTestMaxN) {
    r.method = UTestMethod::kExact;
    std::vector<bool> mask(n, false);
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(r.n1), mask.end(), true);
    std::size_t total = 0, extreme = 0;
    do {
      ++total;
      if (std::abs(u_for_b_mask(mask) - mu) >= observed_dev - 1e-9) ++extreme;
    } while (std::next_permutation(mask.begin(), mask.end()));
    r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  } else {
    r.method = UTestMethod::kNormalApprox;
    std::map<double, std::size_t> ties;
    for (double v : pooled) ++ties[v];
    double tie_term = 0.0;
    for (const auto& [v, t] : ties) {
      const auto td = static_cast<double>(t);
      tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double var = static_cast<double>(r.n1) * n2d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) {
      r.p_value = 1.0;
    } else {
      const double z = std::max(0.0, observed_dev - 0.5) / std::sqrt(var);
      r.p_value = std::erfc(z / std::sqrt(2.0));
    }
  }
  r.p_value = std::clamp(r.p_value, DBL_MIN, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// JSON forms

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"true_positives", r.true_positives}, {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives}, {"precision", r.precision}, {"recall", r.recall}};
}

inline nlohmann::json to_json(const AgreementReport& r) {
  return {{"p_observed", r.p_observed}, {"p_expected", r.p_expected}, {"kappa", r.kappa}, {"n_items", r.n_items}};
}

inline nlohmann::json to_json(const UTestReport& r) {
  return {{"u", r.u}, {"n1", r.n1}, {"n2", r.n2}, {"p_value", r.p_value},
          {"method", std::string(to_string(r.method))}};
}

/// Reads `[{thread_id, comment_id, sentence_index}, ...]`; extra keys (as in
/// detector output) are ignored.
inline std::set<SentenceRef> refs_from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::kSchemaViolation, "expected a JSON list of sentence refs");
  std::set<SentenceRef> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.insert({j[i].at("thread_id").get<std::string>(), j[i].at("comment_id").get<std::string>(),
                  j[i].at("sentence_index").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kSchemaViolation, "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

}  // namespace summit::miner

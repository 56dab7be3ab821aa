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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/markdown_prep.hpp"

namespace summit {

struct InformationType {
  std::string type_key;
  std::string display_name;
  std::vector<std::string> cues;
  bool fallback = false;
};

/// Ordered set of information types. Declaration order is the tie-break
/// order for tabs.
class Taxonomy {
 public:
  Taxonomy() = default;

  explicit Taxonomy(std::vector<InformationType> types) : types_(std::move(types)) {
    if (types_.empty()) fail(ErrorCode::kSchemaViolation, "taxonomy is empty");
    for (std::size_t i = 0; i < types_.size(); ++i) {
      const auto& key = types_[i].type_key;
      const bool snake =
          !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
          });
      if (!snake) {
        fail(ErrorCode::kSchemaViolation,
             "[" + std::to_string(i) + "].type_key: expected lowercase snake_case, got '" + key + "'");
      }
      if (!order_.emplace(key, i).second) {
        fail(ErrorCode::kSchemaViolation, "[" + std::to_string(i) + "].type_key: duplicate '" + key + "'");
      }
    }
    fallback_ = types_.size() - 1;
    for (std::size_t i = 0; i < types_.size(); ++i) {
      if (types_[i].fallback) {
        fallback_ = i;
        break;
      }
    }
  }

  static Taxonomy from_json(const nlohmann::json& j) {
    if (!j.is_array()) fail(ErrorCode::kSchemaViolation, "taxonomy: expected a JSON list");
    std::vector<InformationType> types;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& e = j[i];
      const std::string path = "[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("type_key") || !e["type_key"].is_string()) {
        fail(ErrorCode::kSchemaViolation, path + ".type_key: missing");
      }
      InformationType t;
      t.type_key = e["type_key"].get<std::string>();
      t.display_name = e.value("display_name", t.type_key);
      if (e.contains("cues")) {
        if (!e["cues"].is_array()) fail(ErrorCode::kSchemaViolation, path + ".cues: expected list");
        for (const auto& c : e["cues"]) {
          if (!c.is_string()) fail(ErrorCode::kSchemaViolation, path + ".cues: expected strings");
          t.cues.push_back(c.get<std::string>());
        }
      }
      t.fallback = e.value("fallback", false);
      types.push_back(std::move(t));
    }
    return Taxonomy(std::move(types));
  }

  static Taxonomy load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot open taxonomy " + path.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
    }
  }

  /// The shipped taxonomy (mirrors data/taxonomy.json).
  static Taxonomy defaults();

  bool contains(std::string_view key) const { return order_.count(std::string(key)) > 0; }

  std::size_t order_of(std::string_view key) const {
    auto it = order_.find(std::string(key));
    return it == order_.end() ? types_.size() : it->second;
  }

  const InformationType* find(std::string_view key) const {
    auto it = order_.find(std::string(key));
    return it == order_.end() ? nullptr : &types_[it->second];
  }

  const std::vector<InformationType>& types() const { return types_; }
  const InformationType& fallback() const { return types_.at(fallback_); }

 private:
  std::vector<InformationType> types_;
  std::unordered_map<std::string, std::size_t> order_;
  std::size_t fallback_ = 0;
};

inline constexpr std::string_view kDefaultTaxonomyJson = R"json([
  {"type_key": "expected_behavior", "display_name": "Expected Behavior",
   "cues": ["expected", "expect", "expecting", "should", "supposed to", "ought to", "would expect", "expected behavior", "expected behaviour", "instead of"]},
  {"type_key": "motivation", "display_name": "Motivation",
   "cues": ["because", "use case", "motivation", "the reason", "would be nice", "would be useful", "would be great", "in order to", "need this", "it would help", "so that"]},
  {"type_key": "solution_discussion", "display_name": "Solution Discussion",
   "cues": ["fix", "fixed", "fixes", "solution", "solve", "solved", "patch", "pull request", "pr", "implement", "implementation", "proposal", "propose", "approach", "we could", "root cause", "release"]},
  {"type_key": "workaround", "display_name": "Workaround",
   "cues": ["workaround", "work around", "worked around", "temporary", "temporarily", "in the meantime", "for now", "downgrade", "downgrading", "downgraded", "worked for me", "works for me", "hack", "alternatively", "reinstall", "reinstalling"]},
  {"type_key": "bug_reproduction", "display_name": "Bug Reproduction",
   "cues": ["reproduce", "reproduced", "reproducible", "repro", "steps to", "traceback", "stack trace", "error", "exception", "same issue", "same problem", "same error", "happens when", "fails", "failing", "crash", "crashes", "segfault"]},
  {"type_key": "action_on_issue", "display_name": "Action on Issue",
   "cues": ["closing", "close this", "closed", "reopen", "reopening", "label", "labeled", "assign", "assigned", "milestone", "duplicate of", "triage", "locking", "pinning"]},
  {"type_key": "social_conversation", "display_name": "Social Conversation",
   "cues": ["sorry", "welcome", "cheers", "appreciated", "great work", "good luck", "happy to help", "lol"],
   "fallback": true},
  {"type_key": "other", "display_name": "Other", "cues": []}
])json";

inline Taxonomy Taxonomy::defaults() {
  static const Taxonomy taxonomy = from_json(nlohmann::json::parse(kDefaultTaxonomyJson));
  return taxonomy;
}

// ---------------------------------------------------------------------------
// Labels

enum class LabelSource { kModel, kHuman };

inline std::string_view to_string(LabelSource s) { return s == LabelSource::kHuman ? "human" : "model"; }

struct SentenceLabel {
  std::string sentence_id;
  std::string type_key;
  LabelSource source = LabelSource::kModel;
  double confidence = 0.0;
  std::string labeled_by;  // set when source is human
  bool stale = false;

  bool operator==(const SentenceLabel&) const = default;
};

inline nlohmann::json label_to_json(const SentenceLabel& l) {
  nlohmann::json j = {{"sentence_id", l.sentence_id},
                      {"type_key", l.type_key},
                      {"source", std::string(to_string(l.source))},
                      {"confidence", l.confidence},
                      {"stale", l.stale}};
  if (l.source == LabelSource::kHuman) j["labeled_by"] = l.labeled_by;
  return j;
}

inline SentenceLabel label_from_json(const nlohmann::json& j) {
  SentenceLabel l;
  l.sentence_id = j.at("sentence_id").get<std::string>();
  l.type_key = j.at("type_key").get<std::string>();
  l.source = j.value("source", std::string("model")) == "human" ? LabelSource::kHuman : LabelSource::kModel;
  l.confidence = j.value("confidence", 0.0);
  l.labeled_by = j.value("labeled_by", std::string());
  l.stale = j.value("stale", false);
  return l;
}

// ---------------------------------------------------------------------------
// Classifier plug-in boundary

struct ClassifierInput {
  std::string sentence_id;
  std::string text;
};

struct ClassifierOutput {
  std::string sentence_id;
  std::string type_key;
  double confidence = 0.0;
};

/// Anything that maps sentences to one type each. Implementations must be
/// safe to call concurrently.
class SentenceClassifier {
 public:
  virtual ~SentenceClassifier() = default;
  virtual std::vector<ClassifierOutput> classify(std::span<const ClassifierInput> batch) const = 0;
};

/// Lowercased alphanumeric words of `text`, with placeholder tokens removed.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  while (i < text.size()) {
    if (const std::size_t len = match_token(text, i)) {
      flush();
      i += len;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return out;
}

/// Deterministic baseline: each type scores the number of cue-phrase
/// occurrences weighted by cue length in words; the normalized scores form
/// the distribution. Sentences matching no cue go to the fallback type.
class LexiconClassifier final : public SentenceClassifier {
 public:
  explicit LexiconClassifier(Taxonomy taxonomy) : taxonomy_(std::move(taxonomy)) {
    for (const auto& t : taxonomy_.types()) {
      std::vector<std::vector<std::string>> cues;
      for (const auto& cue : t.cues) {
        auto words = word_tokens(cue);
        if (!words.empty()) cues.push_back(std::move(words));
      }
      cues_.push_back(std::move(cues));
    }
  }

  /// (type_key, probability) for every taxonomy type, in taxonomy order.
  std::vector<std::pair<std::string, double>> distribution(std::string_view text) const {
    const auto words = word_tokens(text);
    std::vector<double> scores(taxonomy_.types().size(), 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < cues_.size(); ++t) {
      for (const auto& cue : cues_[t]) {
        if (cue.size() > words.size()) continue;
        for (std::size_t i = 0; i + cue.size() <= words.size(); ++i) {
          if (std::equal(cue.begin(), cue.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
            scores[t] += static_cast<double>(cue.size());
          }
        }
      }
      total += scores[t];
    }
    std::vector<std::pair<std::string, double>> out;
    const auto& fallback = taxonomy_.fallback().type_key;
    for (std::size_t t = 0; t < scores.size(); ++t) {
      const auto& key = taxonomy_.types()[t].type_key;
      const double p = total > 0 ? scores[t] / total : (key == fallback ? 1.0 : 0.0);
      out.emplace_back(key, p);
    }
    return out;
  }

  std::vector<ClassifierOutput> classify(std::span<const ClassifierInput> batch) const override {
    std::vector<ClassifierOutput> out;
    out.reserve(batch.size());
    for (const auto& item : batch) {
      const auto dist = distribution(item.text);
      // First maximum wins, so ties resolve in taxonomy order.
      auto best = std::max_element(dist.begin(), dist.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      out.push_back({item.sentence_id, best->first, best->second});
    }
    return out;
  }

  const Taxonomy& taxonomy() const { return taxonomy_; }

 private:
  Taxonomy taxonomy_;
  std::vector<std::vector<std::vector<std::string>>> cues_;
};

/// Labels every sentence through `classifier`, validating its output against
/// the taxonomy. Output order follows input order.
inline std::vector<SentenceLabel> classify_sentences(std::span<const SentenceSpan> sentences,
                                                     const SentenceClassifier& classifier,
                                                     const Taxonomy& taxonomy) {
  if (sentences.empty()) return {};
  std::vector<ClassifierInput> batch;
  batch.reserve(sentences.size());
  for (const auto& s : sentences) batch.push_back({s.sentence_id, s.masked_text});
  const auto predictions = classifier.classify(batch);

  std::unordered_map<std::string, const ClassifierOutput*> by_id;
  for (const auto& p : predictions) by_id[p.sentence_id] = &p;
  std::vector<SentenceLabel> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto it = by_id.find(s.sentence_id);
    if (it == by_id.end()) {
      fail(ErrorCode::kMalformedResponse, "classifier returned no label for " + s.sentence_id);
    }
    const auto& p = *it->second;
    if (!taxonomy.contains(p.type_key)) {
      fail(ErrorCode::kUnknownType, "classifier emitted '" + p.type_key + "' for " + s.sentence_id);
    }
    if (!std::isfinite(p.confidence) || p.confidence < 0.0 || p.confidence > 1.0) {
      fail(ErrorCode::kMalformedResponse, "confidence out of [0,1] for " + s.sentence_id);
    }
    out.push_back({s.sentence_id, p.type_key, LabelSource::kModel, p.confidence, {}, false});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label book: current labels plus archived history per sentence

class LabelBook {
 public:
  /// Installs a model label, archiving whatever was current.
  void put(SentenceLabel label) {
    auto it = current_.find(label.sentence_id);
    if (it != current_.end()) {
      history_[label.sentence_id].push_back(it->second);
      it->second = std::move(label);
    } else {
      const auto id = label.sentence_id;
      current_.emplace(id, std::move(label));
    }
  }

  SentenceLabel override_label(std::string_view sentence_id, std::string_view type_key,
                               std::string_view author, const Taxonomy& taxonomy) {
    auto it = current_.find(std::string(sentence_id));
    if (it == current_.end()) fail(ErrorCode::kUnknownSentence, std::string(sentence_id));
    if (!taxonomy.contains(type_key)) fail(ErrorCode::kUnknownType, std::string(type_key));
    if (author.empty()) fail(ErrorCode::kInvalidArgument, "human labels need an author");
    history_[it->first].push_back(it->second);
    it->second = {it->first, std::string(type_key), LabelSource::kHuman, 1.0, std::string(author), false};
    return it->second;
  }

  void mark_stale(const std::string& sentence_id) {
    if (auto it = current_.find(sentence_id); it != current_.end()) it->second.stale = true;
  }

  const SentenceLabel* find(std::string_view sentence_id) const {
    auto it = current_.find(std::string(sentence_id));
    return it == current_.end() ? nullptr : &it->second;
  }

  const std::vector<SentenceLabel>& history(std::string_view sentence_id) const {
    static const std::vector<SentenceLabel> kEmpty;
    auto it = history_.find(std::string(sentence_id));
    return it == history_.end() ? kEmpty : it->second;
  }

  std::vector<SentenceLabel> labels() const {
    std::vector<SentenceLabel> out;
    out.reserve(current_.size());
    for (const auto& [id, l] : current_) out.push_back(l);
    return out;
  }

  std::size_t size() const { return current_.size(); }

  nlohmann::json to_json() const {
    nlohmann::json current = nlohmann::json::array();
    for (const auto& [id, l] : current_) current.push_back(label_to_json(l));
    nlohmann::json history = nlohmann::json::object();
    for (const auto& [id, entries] : history_) {
      auto& arr = history[id] = nlohmann::json::array();
      for (const auto& l : entries) arr.push_back(label_to_json(l));
    }
    return {{"current", std::move(current)}, {"history", std::move(history)}};
  }

  static LabelBook from_json(const nlohmann::json& j) {
    LabelBook book;
    for (const auto& l : j.at("current")) {
      auto label = label_from_json(l);
      const auto id = label.sentence_id;
      book.current_.emplace(id, std::move(label));
    }
    for (const auto& [id, entries] : j.at("history").items()) {
      auto& dst = book.history_[id];
      for (const auto& l : entries) dst.push_back(label_from_json(l));
    }
    return book;
  }

 private:
  std::map<std::string, SentenceLabel> current_;
  std::map<std::string, std::vector<SentenceLabel>> history_;
};

// ---------------------------------------------------------------------------
// Tab order

struct TypeCount {
  std::string type_key;
  std::size_t count = 0;

  bool operator==(const TypeCount&) const = default;
};

/// Non-stale label counts per type, descending, ties in taxonomy order.
/// Types with no sentences are omitted.
inline std::vector<TypeCount> count_by_type(std::span<const SentenceLabel> labels,
                                            const Taxonomy& taxonomy) {
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) {
    if (!l.stale) ++counts[l.type_key];
  }
  std::vector<TypeCount> out;
  for (const auto& [key, n] : counts) out.push_back({key, n});
  std::sort(out.begin(), out.end(), [&](const TypeCount& a, const TypeCount& b) {
    if (a.count != b.count) return a.count > b.count;
    const auto oa = taxonomy.order_of(a.type_key), ob = taxonomy.order_of(b.type_key);
    if (oa != ob) return oa < ob;
    return a.type_key < b.type_key;
  });
  return out;
}

}  // namespace summit

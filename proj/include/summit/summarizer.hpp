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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/infotype.hpp"
#include "summit/ingestion.hpp"
#include "summit/markdown_prep.hpp"

namespace summit {

enum class SummaryKind { kConversation, kInfoType };

inline std::string_view to_string(SummaryKind k) {
  return k == SummaryKind::kConversation ? "conversation" : "infotype";
}

inline SummaryKind summary_kind_from_string(std::string_view s) {
  if (s == "conversation") return SummaryKind::kConversation;
  if (s == "infotype") return SummaryKind::kInfoType;
  fail(ErrorCode::kInvalidArgument, "unknown summary kind '" + std::string(s) + "'");
}

struct RankedSentence {
  std::string sentence_id;
  double score = 0.0;
};

struct SummaryDraft {
  std::string body_markdown;
  std::vector<std::string> source_sentence_ids;  // thread order
  SummaryKind kind = SummaryKind::kConversation;
  std::size_t budget_used = 0;
  // Provenance needed to save the draft: the selected comments for a
  // conversation summary, the type for an information-type summary.
  std::vector<std::string> comment_ids;
  std::string type_key;
};

inline nlohmann::json draft_to_json(const SummaryDraft& d) {
  nlohmann::json j = {{"body_markdown", d.body_markdown},
                      {"source_sentence_ids", d.source_sentence_ids},
                      {"kind", std::string(to_string(d.kind))},
                      {"budget_used", d.budget_used}};
  if (d.kind == SummaryKind::kConversation) {
    j["comment_ids"] = d.comment_ids;
  } else {
    j["type_key"] = d.type_key;
  }
  return j;
}

inline SummaryDraft draft_from_json(const nlohmann::json& j) {
  SummaryDraft d;
  try {
    d.body_markdown = j.at("body_markdown").get<std::string>();
    d.kind = summary_kind_from_string(j.at("kind").get<std::string>());
    d.source_sentence_ids = j.value("source_sentence_ids", std::vector<std::string>{});
    d.budget_used = j.value("budget_used", std::size_t{0});
    d.comment_ids = j.value("comment_ids", std::vector<std::string>{});
    d.type_key = j.value("type_key", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("draft: ") + e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Ranker plug-in boundary

struct RankerInput {
  std::string sentence_id;
  std::string text;
};

/// Scores sentences for extraction. Implementations must be safe to call
/// concurrently and may return scores in any order.
class SentenceRanker {
 public:
  virtual ~SentenceRanker() = default;
  virtual std::vector<RankedSentence> score(std::span<const RankerInput> sentences,
                                            std::size_t budget) const = 0;
};

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "a",    "an",   "the",  "and",  "or",    "but",  "if",   "then", "than", "is",
      "are",  "was",  "were", "be",   "been",  "being", "to",  "of",   "in",   "on",
      "at",   "by",   "for",  "with", "from",  "as",   "it",   "its",  "this", "that",
      "these", "those", "i",  "we",   "you",   "he",   "she",  "they", "me",   "my",
      "our",  "your", "not",  "so",   "do",    "does", "did",  "have", "has",  "can"};
  return kWords;
}

/// Lowercase, split on non-alphanumerics, drop stopwords and placeholders.
inline std::vector<std::string> content_tokens(std::string_view text) {
  auto words = word_tokens(text);
  std::erase_if(words, [](const std::string& w) { return stopwords().count(w) > 0; });
  return words;
}

struct RankerConfig {
  std::size_t min_content_tokens = 4;
};

/// Baseline: cosine similarity of each sentence's term-frequency vector to
/// the centroid of all input sentences, scaled down linearly for sentences
/// with fewer than `min_content_tokens` content tokens.
class CentroidRanker final : public SentenceRanker {
 public:
  explicit CentroidRanker(RankerConfig config = {}) : config_(config) {}

  std::vector<RankedSentence> score(std::span<const RankerInput> sentences,
                                    std::size_t /*budget*/) const override {
    std::vector<std::map<std::string, double>> tf(sentences.size());
    std::vector<std::size_t> lengths(sentences.size());
    std::map<std::string, double> centroid;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const auto tokens = content_tokens(sentences[i].text);
      lengths[i] = tokens.size();
      for (const auto& t : tokens) {
        tf[i][t] += 1.0;
        centroid[t] += 1.0;
      }
    }
    double centroid_norm = 0.0;
    for (const auto& [t, v] : centroid) centroid_norm += v * v;
    centroid_norm = std::sqrt(centroid_norm);

    std::vector<RankedSentence> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      double dot = 0.0, norm = 0.0;
      for (const auto& [t, v] : tf[i]) {
        dot += v * centroid.at(t);
        norm += v * v;
      }
      double s = 0.0;
      if (norm > 0.0 && centroid_norm > 0.0) s = dot / (std::sqrt(norm) * centroid_norm);
      if (lengths[i] < config_.min_content_tokens) {
        s *= static_cast<double>(lengths[i]) / static_cast<double>(config_.min_content_tokens);
      }
      out.push_back({sentences[i].sentence_id, s});
    }
    return out;
  }

 private:
  RankerConfig config_;
};

/// Ranks `sentences` (given in thread order) best first. Ties go to the
/// earlier sentence; sentences the ranker did not score get 0.
inline std::vector<RankedSentence> rank_sentences(std::span<const SentenceSpan> sentences,
                                                  const SentenceRanker& ranker,
                                                  std::size_t budget = 0) {
  if (sentences.empty()) fail(ErrorCode::kEmptyInput, "nothing to rank");
  std::vector<RankerInput> input;
  input.reserve(sentences.size());
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    input.push_back({sentences[i].sentence_id, sentences[i].masked_text});
    position.emplace(sentences[i].sentence_id, i);
  }
  std::vector<double> scores(sentences.size(), 0.0);
  for (const auto& r : ranker.score(input, budget == 0 ? sentences.size() : budget)) {
    auto it = position.find(r.sentence_id);
    if (it == position.end()) {
      fail(ErrorCode::kMalformedResponse, "ranker scored unknown sentence " + r.sentence_id);
    }
    if (!std::isfinite(r.score) || r.score < 0.0) {
      fail(ErrorCode::kMalformedResponse, "ranker score must be finite and >= 0");
    }
    scores[it->second] = r.score;
  }
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RankedSentence> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back({sentences[i].sentence_id, scores[i]});
  return out;
}

// ---------------------------------------------------------------------------
// Drafts

inline constexpr std::size_t kConversationBudget = 3;

inline std::size_t infotype_budget(std::size_t candidates) {
  const auto scaled = static_cast<std::size_t>(std::ceil(0.15 * static_cast<double>(candidates)));
  return std::min<std::size_t>(6, std::max<std::size_t>(2, scaled));
}

/// One markdown bullet per sentence; continuation lines of multi-line
/// sentences are indented by two spaces.
inline std::string format_bullets(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += '\n';
    out += "- ";
    for (char c : s) {
      out += c;
      if (c == '\n') out += "  ";
    }
  }
  return out;
}

/// Inverse of format_bullets.
inline std::vector<std::string> parse_bullets(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    const auto line = body.substr(pos, nl - pos);
    if (line.rfind("- ", 0) == 0) {
      out.emplace_back(line.substr(2));
    } else if (!out.empty()) {
      out.back() += '\n';
      out.back() += line.rfind("  ", 0) == 0 ? line.substr(2) : line;
    }
    pos = nl + 1;
  }
  return out;
}

using PlaceholdersByComment = std::unordered_map<std::string, const PlaceholderMap*>;

/// Picks the top min(budget, n) sentences, restores their markup and lists
/// them in thread order.
inline SummaryDraft extract_summary(std::span<const SentenceSpan> sentences, std::size_t budget,
                                    const PlaceholdersByComment& placeholders,
                                    const SentenceRanker& ranker) {
  if (budget < 1) fail(ErrorCode::kInvalidArgument, "budget must be >= 1");
  if (sentences.empty()) fail(ErrorCode::kEmptyInput, "no sentences to summarize");
  const auto ranked = rank_sentences(sentences, ranker, budget);
  const std::size_t take = std::min(budget, sentences.size());
  std::unordered_set<std::string> chosen;
  for (std::size_t i = 0; i < take; ++i) chosen.insert(ranked[i].sentence_id);

  SummaryDraft draft;
  std::vector<std::string> texts;
  for (const auto& s : sentences) {
    if (!chosen.count(s.sentence_id)) continue;
    auto it = placeholders.find(s.comment_id);
    static const PlaceholderMap kNone;
    texts.push_back(restore(s.masked_text, it == placeholders.end() ? kNone : *it->second));
    draft.source_sentence_ids.push_back(s.sentence_id);
  }
  draft.body_markdown = format_bullets(texts);
  draft.budget_used = draft.source_sentence_ids.size();
  return draft;
}

inline SummaryDraft summarize_conversation(std::span<const std::string> comment_ids,
                                           const PreparedThread& prepared,
                                           const SentenceRanker& ranker,
                                           std::size_t budget = kConversationBudget) {
  if (comment_ids.empty()) fail(ErrorCode::kInvalidArgument, "select at least one comment");
  const std::set<std::string> selected(comment_ids.begin(), comment_ids.end());
  for (const auto& id : selected) {
    if (!prepared.find(id)) fail(ErrorCode::kUnknownComment, id);
  }
  std::vector<SentenceSpan> pool;
  std::vector<std::string> ordered_ids;
  for (const auto& c : prepared.comments) {
    if (!selected.count(c.comment_id)) continue;
    ordered_ids.push_back(c.comment_id);
    pool.insert(pool.end(), c.sentences.begin(), c.sentences.end());
  }
  if (pool.empty()) fail(ErrorCode::kEmptyInput, "selected comments contain no sentences");
  auto draft = extract_summary(pool, budget, prepared.placeholders_by_comment(), ranker);
  draft.kind = SummaryKind::kConversation;
  draft.comment_ids = std::move(ordered_ids);
  return draft;
}

/// Summarizes the non-stale sentences currently labeled `type_key`. Without
/// an explicit budget, infotype_budget(candidates) applies.
inline SummaryDraft summarize_info_type(std::string_view type_key, const PreparedThread& prepared,
                                        std::span<const SentenceLabel> labels,
                                        const SentenceRanker& ranker,
                                        std::optional<std::size_t> budget = std::nullopt) {
  std::unordered_set<std::string> members;
  for (const auto& l : labels) {
    if (!l.stale && l.type_key == type_key) members.insert(l.sentence_id);
  }
  std::vector<SentenceSpan> pool;
  for (const auto& c : prepared.comments) {
    for (const auto& s : c.sentences) {
      if (members.count(s.sentence_id)) pool.push_back(s);
    }
  }
  if (pool.empty()) fail(ErrorCode::kNoSentencesOfType, std::string(type_key));
  auto draft = extract_summary(pool, budget.value_or(infotype_budget(pool.size())),
                               prepared.placeholders_by_comment(), ranker);
  draft.kind = SummaryKind::kInfoType;
  draft.type_key = std::string(type_key);
  return draft;
}

}  // namespace summit

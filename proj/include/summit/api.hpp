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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/infotype.hpp"
#include "summit/ingestion.hpp"
#include "summit/markdown_prep.hpp"
#include "summit/store.hpp"
#include "summit/summarizer.hpp"

namespace summit {

// ---------------------------------------------------------------------------
// Where threads come from

class ThreadSource {
 public:
  virtual ~ThreadSource() = default;
  virtual IssueThread fetch(std::string_view repo, std::int64_t issue_number) const = 0;
};

/// Offline mode: every `*.json` fixture in a directory, matched on
/// (repo, issue_number). The directory is re-read on each fetch so edits to
/// fixtures show up as upstream changes.
class FixtureSource final : public ThreadSource {
 public:
  explicit FixtureSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

  IssueThread fetch(std::string_view repo, std::int64_t issue_number) const override {
    parse_repo(repo);
    if (issue_number < 1) fail(ErrorCode::kInvalidArgument, "issue_number must be >= 1");
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) fail(ErrorCode::kIoError, "cannot list fixture dir " + dir_.string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto t = load_fixture(f);
      if (t.repo == repo && t.issue_number == issue_number) return t;
    }
    fail(ErrorCode::kNotFound, std::string(repo) + "#" + std::to_string(issue_number));
  }

 private:
  std::filesystem::path dir_;
};

class ForgeSource final : public ThreadSource {
 public:
  explicit ForgeSource(const ForgeClient& client, std::optional<std::string> token = std::nullopt)
      : client_(client), token_(std::move(token)) {}

  IssueThread fetch(std::string_view repo, std::int64_t issue_number) const override {
    return client_.fetch_thread(repo, issue_number, token_);
  }

 private:
  const ForgeClient& client_;
  std::optional<std::string> token_;
};

// ---------------------------------------------------------------------------
// Service

struct ServiceConfig {
  Taxonomy taxonomy = Taxonomy::defaults();
  AbbreviationList abbreviations = AbbreviationList::defaults();
  std::size_t conversation_budget = kConversationBudget;
};

struct RegisterResult {
  std::string thread_id;
  bool created = false;
  SyncDelta delta;
  std::size_t classified = 0;  // sentences sent to the classifier by this call
};

struct HighlightSpan {
  std::string comment_id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const HighlightSpan&) const = default;
};

struct HighlightPayload {
  std::string thread_id;
  std::string type_key;    // set for a type selector
  std::string summary_id;  // set for a summary selector
  std::vector<HighlightSpan> spans;
};

inline nlohmann::json highlights_to_json(const HighlightPayload& h) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : h.spans) {
    spans.push_back({{"comment_id", s.comment_id}, {"char_start", s.char_start}, {"char_end", s.char_end}});
  }
  nlohmann::json j = {{"thread_id", h.thread_id}, {"spans", std::move(spans)}};
  if (!h.type_key.empty()) j["type_key"] = h.type_key;
  if (!h.summary_id.empty()) j["summary_id"] = h.summary_id;
  return j;
}

inline nlohmann::json delta_to_json(const SyncDelta& d) {
  return {{"added", d.added}, {"updated", d.updated}, {"removed", d.removed}};
}

/// The backend behind the `/v1` endpoints, independent of HTTP. Handlers
/// hold no state of their own: everything shared lives in the Store.
class Service {
 public:
  Service(Store& store, const ThreadSource& source, const SentenceClassifier& classifier,
          const SentenceRanker& ranker, ServiceConfig config = {})
      : store_(store), source_(source), classifier_(classifier), ranker_(ranker), config_(std::move(config)) {}

  const Taxonomy& taxonomy() const { return config_.taxonomy; }
  Store& store() { return store_; }

  /// First call ingests and classifies everything; later calls apply the
  /// upstream delta and classify only added or edited comments.
  RegisterResult register_or_sync(std::string_view repo, std::int64_t issue_number) {
    auto fresh = source_.fetch(repo, issue_number);
    return ingest(std::move(fresh));
  }

  RegisterResult sync(std::string_view thread_id) {
    const auto stored = store_.get_thread(thread_id);
    if (!stored) fail(ErrorCode::kUnknownThread, std::string(thread_id));
    auto fresh = source_.fetch(stored->repo, stored->issue_number);
    if (fresh.thread_id != stored->thread_id) {
      fail(ErrorCode::kThreadMismatch, "'" + stored->thread_id + "' vs '" + fresh.thread_id + "'");
    }
    return ingest(std::move(fresh));
  }

  RegisterResult ingest(IssueThread fresh) {
    auto lock = lock_thread(fresh.thread_id);
    RegisterResult result;
    result.thread_id = fresh.thread_id;
    const auto stored = store_.get_thread(fresh.thread_id);
    if (!stored) {
      const auto prepared = prepare_thread(fresh, config_.abbreviations);
      const auto sentences = prepared.all_sentences();
      LabelBook book;
      for (auto& l : classify_sentences(sentences, classifier_, config_.taxonomy)) book.put(std::move(l));
      for (const auto* c : fresh.in_thread_order()) result.delta.added.insert(c->comment_id);
      result.created = true;
      result.classified = sentences.size();
      store_.put_thread(fresh, book);
      return result;
    }
    result.delta = sync_thread(*stored, fresh);
    if (result.delta.empty()) return result;

    const auto merged = merge_thread(*stored, fresh);
    const auto old_prepared = prepare_thread(*stored, config_.abbreviations);
    const auto new_prepared = prepare_thread(merged, config_.abbreviations);
    auto book = store_.get_labels(fresh.thread_id);
    for (const auto& group : {result.delta.updated, result.delta.removed}) {
      for (const auto& id : group) {
        if (const auto* c = old_prepared.find(id)) {
          for (const auto& s : c->sentences) book.mark_stale(s.sentence_id);
        }
      }
    }
    std::vector<SentenceSpan> to_classify;
    for (const auto& group : {result.delta.added, result.delta.updated}) {
      for (const auto& id : group) {
        if (const auto* c = new_prepared.find(id)) {
          to_classify.insert(to_classify.end(), c->sentences.begin(), c->sentences.end());
        }
      }
    }
    for (auto& l : classify_sentences(to_classify, classifier_, config_.taxonomy)) book.put(std::move(l));
    result.classified = to_classify.size();
    store_.put_thread(merged, book);
    return result;
  }

  nlohmann::json snapshot(std::string_view thread_id) const {
    const auto thread = require_thread(thread_id);
    const auto prepared = prepare_thread(thread, config_.abbreviations);
    const auto book = store_.get_labels(thread_id);

    nlohmann::json comments = nlohmann::json::array();
    for (const auto& c : thread.comments) comments.push_back(comment_to_json(c));
    nlohmann::json sentences = nlohmann::json::array();
    nlohmann::json labels = nlohmann::json::array();
    std::set<std::string> listed;
    for (const auto& pc : prepared.comments) {
      const auto* comment = thread.find_comment(pc.comment_id);
      for (const auto& s : pc.sentences) {
        sentences.push_back({{"sentence_id", s.sentence_id},
                             {"comment_id", s.comment_id},
                             {"index", s.index},
                             {"char_start", s.char_start},
                             {"char_end", s.char_end},
                             {"masked_text", s.masked_text},
                             {"text", comment->body_markdown.substr(s.char_start, s.char_end - s.char_start)}});
        if (const auto* l = book.find(s.sentence_id)) {
          labels.push_back(label_to_json(*l));
          listed.insert(s.sentence_id);
        }
      }
    }
    for (const auto& l : book.labels()) {
      if (!listed.count(l.sentence_id)) labels.push_back(label_to_json(l));
    }
    const auto all_labels = book.labels();
    nlohmann::json tabs = nlohmann::json::array();
    for (const auto& tc : count_by_type(all_labels, config_.taxonomy)) {
      const auto* type = config_.taxonomy.find(tc.type_key);
      tabs.push_back({{"type_key", tc.type_key},
                      {"display_name", type ? type->display_name : tc.type_key},
                      {"count", tc.count}});
    }
    return {{"thread_id", thread.thread_id},
            {"repo", thread.repo},
            {"issue_number", thread.issue_number},
            {"title", thread.title},
            {"original_post", comment_to_json(thread.original_post)},
            {"comments", std::move(comments)},
            {"sentences", std::move(sentences)},
            {"labels", std::move(labels)},
            {"tab_order", std::move(tabs)},
            {"claimed_comments", store_.claimed_comments(thread_id)}};
  }

  /// One unsaved draft per information type present, in tab order.
  std::vector<SummaryDraft> generate_infotype_summaries(std::string_view thread_id) const {
    const auto thread = require_thread(thread_id);
    const auto prepared = prepare_thread(thread, config_.abbreviations);
    const auto labels = store_.get_labels(thread_id).labels();
    std::vector<SummaryDraft> drafts;
    for (const auto& tab : count_by_type(labels, config_.taxonomy)) {
      drafts.push_back(summarize_info_type(tab.type_key, prepared, labels, ranker_));
    }
    return drafts;
  }

  SummaryDraft generate_conversation_summary(std::string_view thread_id,
                                             const std::vector<std::string>& comment_ids) const {
    const auto thread = require_thread(thread_id);
    if (comment_ids.empty()) fail(ErrorCode::kInvalidArgument, "select at least one comment");
    for (const auto& id : comment_ids) {
      if (!thread.find_comment(id)) fail(ErrorCode::kUnknownComment, id);
    }
    const auto claimed = store_.claimed_comments(thread_id);
    for (const auto& id : comment_ids) {
      if (auto it = claimed.find(id); it != claimed.end()) {
        fail(ErrorCode::kConflictingMembership, "comment " + id + " already summarized by " + it->second);
      }
    }
    const auto prepared = prepare_thread(thread, config_.abbreviations);
    return summarize_conversation(comment_ids, prepared, ranker_, config_.conversation_budget);
  }

  SummaryRecord save_summary(std::string_view thread_id, const SummaryDraft& draft, std::string_view author) {
    return store_.save_summary(draft, thread_id, author);
  }

  SummaryRecord edit_summary(std::string_view summary_id, std::string_view body,
                             std::int64_t expected_version, std::string_view author) {
    return store_.edit_summary(summary_id, body, expected_version, author);
  }

  void delete_summary(std::string_view summary_id) { store_.delete_summary(summary_id); }

  std::vector<SummaryRecord> list_summaries(std::string_view thread_id, std::optional<SummaryKind> kind) const {
    return store_.list_summaries(thread_id, kind, config_.taxonomy);
  }

  SentenceLabel override_label(std::string_view thread_id, std::string_view sentence_id,
                               std::string_view type_key, std::string_view author) {
    return store_.override_label(thread_id, sentence_id, type_key, author, config_.taxonomy);
  }

  /// Spans of every non-stale sentence of a type, or of a summary's
  /// provenance, in thread order.
  HighlightPayload get_highlights(std::string_view thread_id, std::optional<std::string> type_key,
                                  std::optional<std::string> summary_id) const {
    if (type_key.has_value() == summary_id.has_value()) {
      fail(ErrorCode::kUnknownSelector, "give exactly one of type or summary");
    }
    const auto thread = require_thread(thread_id);
    const auto prepared = prepare_thread(thread, config_.abbreviations);
    HighlightPayload out;
    out.thread_id = thread.thread_id;
    if (type_key) {
      if (!config_.taxonomy.contains(*type_key)) fail(ErrorCode::kUnknownSelector, "type " + *type_key);
      out.type_key = *type_key;
      const auto book = store_.get_labels(thread_id);
      for (const auto& pc : prepared.comments) {
        for (const auto& s : pc.sentences) {
          const auto* l = book.find(s.sentence_id);
          if (l && !l->stale && l->type_key == *type_key) {
            out.spans.push_back({s.comment_id, s.char_start, s.char_end});
          }
        }
      }
      return out;
    }
    SummaryRecord record;
    try {
      record = store_.get_summary(*summary_id);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotFound) fail(ErrorCode::kUnknownSelector, "summary " + *summary_id);
      throw;
    }
    if (record.thread_id != thread.thread_id) fail(ErrorCode::kUnknownSelector, "summary " + *summary_id);
    out.summary_id = record.summary_id;
    const std::set<std::string> members(record.provenance.begin(), record.provenance.end());
    for (const auto& pc : prepared.comments) {
      if (record.kind == SummaryKind::kConversation) {
        if (members.count(pc.comment_id)) {
          out.spans.push_back({pc.comment_id, 0, thread.find_comment(pc.comment_id)->body_markdown.size()});
        }
      } else {
        for (const auto& s : pc.sentences) {
          if (members.count(s.sentence_id)) out.spans.push_back({s.comment_id, s.char_start, s.char_end});
        }
      }
    }
    return out;
  }

 private:
  IssueThread require_thread(std::string_view thread_id) const {
    auto t = store_.get_thread(thread_id);
    if (!t) fail(ErrorCode::kUnknownThread, std::string(thread_id));
    return std::move(*t);
  }

  std::unique_lock<std::mutex> lock_thread(const std::string& thread_id) {
    std::mutex* m = nullptr;
    {
      std::lock_guard guard(locks_mutex_);
      auto& slot = thread_locks_[thread_id];
      if (!slot) slot = std::make_unique<std::mutex>();
      m = slot.get();
    }
    return std::unique_lock(*m);
  }

  Store& store_;
  const ThreadSource& source_;
  const SentenceClassifier& classifier_;
  const SentenceRanker& ranker_;
  ServiceConfig config_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> thread_locks_;
};

}  // namespace summit

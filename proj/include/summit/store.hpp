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

#include <sqlite3.h>

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/infotype.hpp"
#include "summit/ingestion.hpp"
#include "summit/summarizer.hpp"
#include "summit/time.hpp"

namespace summit {

struct SummaryRecord {
  std::string summary_id;
  std::string thread_id;
  SummaryKind kind = SummaryKind::kConversation;
  std::string type_key;  // infotype only
  std::string body_markdown;
  // Comment ids for conversation summaries, sentence ids for infotype ones.
  std::vector<std::string> provenance;
  std::vector<std::string> authors;  // requester first, then editors once each
  std::int64_t version = 1;
  Timestamp created_at{};
  Timestamp updated_at{};

  bool operator==(const SummaryRecord&) const = default;
};

struct EditHistoryEntry {
  std::string summary_id;
  std::int64_t version = 0;
  std::string body_markdown;
  std::string author;
  Timestamp timestamp{};
};

inline nlohmann::json record_to_json(const SummaryRecord& r) {
  nlohmann::json j = {{"summary_id", r.summary_id},
                      {"thread_id", r.thread_id},
                      {"kind", std::string(to_string(r.kind))},
                      {"body_markdown", r.body_markdown},
                      {"provenance", r.provenance},
                      {"authors", r.authors},
                      {"version", r.version},
                      {"created_at", format_timestamp(r.created_at)},
                      {"updated_at", format_timestamp(r.updated_at)}};
  if (r.kind == SummaryKind::kInfoType) j["type_key"] = r.type_key;
  return j;
}

namespace detail {

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) != SQLITE_OK) {
      fail(ErrorCode::kStorageError, sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int i, std::string_view v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }

  /// Returns true while rows are available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    last_error_ = sqlite3_extended_errcode(db_);
    fail(ErrorCode::kStorageError, sqlite3_errmsg(db_));
  }

  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
  int last_error_ = 0;
};

inline std::string sqlite_path_from_url(std::string_view url) {
  if (url.empty() || url == ":memory:" || url == "sqlite::memory:" || url == "sqlite://:memory:") {
    return ":memory:";
  }
  if (url.rfind("sqlite://", 0) == 0) return std::string(url.substr(9));
  if (url.rfind("sqlite:", 0) == 0) return std::string(url.substr(7));
  if (url.find("://") != std::string_view::npos) {
    fail(ErrorCode::kStorageError, "unsupported database URL '" + std::string(url) + "' (only sqlite)");
  }
  return std::string(url);
}

}  // namespace detail

/// Persistence for threads, labels and summaries. One SQLite connection,
/// serialized by a mutex: every mutation is a transaction, and readers only
/// ever see committed state.
class Store {
 public:
  using Clock = std::function<Timestamp()>;

  explicit Store(std::string_view db_url = ":memory:", Clock clock = now_utc)
      : clock_(std::move(clock)) {
    const auto path = detail::sqlite_path_from_url(db_url);
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
      const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      fail(ErrorCode::kStorageError, "cannot open " + path + ": " + msg);
    }
    // Other processes may hold the file briefly; wait rather than fail.
    sqlite3_busy_timeout(db_, 5000);
    exec(R"sql(
      PRAGMA foreign_keys = ON;
      CREATE TABLE IF NOT EXISTS threads (
        thread_id TEXT PRIMARY KEY,
        body TEXT NOT NULL);
      CREATE TABLE IF NOT EXISTS labels (
        thread_id TEXT PRIMARY KEY REFERENCES threads(thread_id),
        body TEXT NOT NULL);
      CREATE TABLE IF NOT EXISTS summaries (
        seq INTEGER PRIMARY KEY AUTOINCREMENT,
        summary_id TEXT UNIQUE,
        thread_id TEXT NOT NULL REFERENCES threads(thread_id),
        kind TEXT NOT NULL,
        type_key TEXT,
        body TEXT NOT NULL,
        provenance TEXT NOT NULL,
        authors TEXT NOT NULL,
        version INTEGER NOT NULL,
        created_at TEXT NOT NULL,
        updated_at TEXT NOT NULL);
      CREATE UNIQUE INDEX IF NOT EXISTS one_infotype_summary
        ON summaries(thread_id, type_key) WHERE kind = 'infotype';
      CREATE TABLE IF NOT EXISTS memberships (
        thread_id TEXT NOT NULL,
        comment_id TEXT NOT NULL,
        summary_id TEXT NOT NULL,
        PRIMARY KEY (thread_id, comment_id));
      CREATE TABLE IF NOT EXISTS summary_history (
        summary_id TEXT NOT NULL,
        version INTEGER NOT NULL,
        body TEXT NOT NULL,
        author TEXT NOT NULL,
        ts TEXT NOT NULL,
        PRIMARY KEY (summary_id, version));
    )sql");
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store() { sqlite3_close(db_); }

  // -- threads and labels ----------------------------------------------------

  /// Inserts or replaces a thread together with its label book, atomically.
  void put_thread(const IssueThread& thread, const LabelBook& labels) {
    std::lock_guard lock(mutex_);
    Transaction tx(*this);
    detail::Statement(db_, "INSERT INTO threads(thread_id, body) VALUES(?1, ?2) "
                           "ON CONFLICT(thread_id) DO UPDATE SET body = excluded.body")
        .bind(1, thread.thread_id)
        .bind(2, thread_to_json(thread).dump())
        .run();
    write_labels(thread.thread_id, labels);
    tx.commit();
  }

  bool has_thread(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    return load_thread(thread_id).has_value();
  }

  std::optional<IssueThread> get_thread(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    return load_thread(thread_id);
  }

  LabelBook get_labels(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    require_thread(thread_id);
    return load_labels(thread_id);
  }

  /// Read-modify-write of one sentence label, serialized with every other
  /// mutation.
  SentenceLabel override_label(std::string_view thread_id, std::string_view sentence_id,
                               std::string_view type_key, std::string_view author,
                               const Taxonomy& taxonomy) {
    std::lock_guard lock(mutex_);
    require_thread(thread_id);
    Transaction tx(*this);
    auto book = load_labels(thread_id);
    auto label = book.override_label(sentence_id, type_key, author, taxonomy);
    write_labels(thread_id, book);
    tx.commit();
    return label;
  }

  // -- summaries -------------------------------------------------------------

  SummaryRecord save_summary(const SummaryDraft& draft, std::string_view thread_id,
                             std::string_view author) {
    if (author.empty()) fail(ErrorCode::kInvalidArgument, "author is required");
    std::lock_guard lock(mutex_);
    const auto thread = require_thread(thread_id);

    SummaryRecord r;
    r.thread_id = std::string(thread_id);
    r.kind = draft.kind;
    r.body_markdown = draft.body_markdown;
    r.authors = {std::string(author)};
    r.version = 1;
    r.created_at = r.updated_at = clock_();
    if (draft.kind == SummaryKind::kConversation) {
      std::set<std::string> unique(draft.comment_ids.begin(), draft.comment_ids.end());
      for (const auto* c : thread.in_thread_order()) {
        if (unique.count(c->comment_id)) r.provenance.push_back(c->comment_id);
      }
      if (r.provenance.size() != unique.size()) {
        for (const auto& id : unique) {
          if (!thread.find_comment(id)) fail(ErrorCode::kUnknownComment, id);
        }
      }
    } else {
      if (draft.type_key.empty()) fail(ErrorCode::kInvalidArgument, "infotype summary needs a type_key");
      r.type_key = draft.type_key;
      r.provenance = draft.source_sentence_ids;
    }
    if (r.provenance.empty()) fail(ErrorCode::kInvalidArgument, "summary provenance is empty");

    Transaction tx(*this);
    if (r.kind == SummaryKind::kConversation) {
      for (const auto& id : r.provenance) {
        if (auto owner = claim_owner(thread_id, id)) {
          fail(ErrorCode::kConflictingMembership, "comment " + id + " already summarized by " + *owner);
        }
      }
    } else {
      detail::Statement q(db_, "SELECT summary_id FROM summaries WHERE thread_id = ?1 AND kind = 'infotype' AND type_key = ?2");
      q.bind(1, thread_id).bind(2, r.type_key);
      if (q.step()) {
        fail(ErrorCode::kDuplicateInfoType, r.type_key + " already summarized by " + q.text(0));
      }
    }
    detail::Statement ins(db_,
        "INSERT INTO summaries(thread_id, kind, type_key, body, provenance, authors, version, created_at, updated_at) "
        "VALUES(?1, ?2, ?3, ?4, ?5, ?6, 1, ?7, ?7)");
    ins.bind(1, thread_id)
        .bind(2, to_string(r.kind))
        .bind(3, r.type_key)
        .bind(4, r.body_markdown)
        .bind(5, nlohmann::json(r.provenance).dump())
        .bind(6, nlohmann::json(r.authors).dump())
        .bind(7, format_timestamp(r.created_at))
        .run();
    r.summary_id = "sum-" + std::to_string(sqlite3_last_insert_rowid(db_));
    detail::Statement(db_, "UPDATE summaries SET summary_id = ?1 WHERE seq = ?2")
        .bind(1, r.summary_id)
        .bind(2, static_cast<std::int64_t>(sqlite3_last_insert_rowid(db_)))
        .run();
    if (r.kind == SummaryKind::kConversation) {
      for (const auto& id : r.provenance) {
        detail::Statement(db_, "INSERT INTO memberships(thread_id, comment_id, summary_id) VALUES(?1, ?2, ?3)")
            .bind(1, thread_id).bind(2, id).bind(3, r.summary_id).run();
      }
    }
    append_history(r.summary_id, 1, r.body_markdown, author, r.created_at);
    tx.commit();
    return r;
  }

  /// Optimistic update: succeeds only if `expected_version` is current.
  SummaryRecord edit_summary(std::string_view summary_id, std::string_view new_body,
                             std::int64_t expected_version, std::string_view author) {
    if (author.empty()) fail(ErrorCode::kInvalidArgument, "author is required");
    std::lock_guard lock(mutex_);
    auto r = load_summary(summary_id);
    if (!r) fail(ErrorCode::kNotFound, "summary " + std::string(summary_id));
    if (r->version != expected_version) {
      fail(ErrorCode::kVersionConflict, "summary " + r->summary_id + " is at version " +
                                            std::to_string(r->version) + ", not " +
                                            std::to_string(expected_version));
    }
    Transaction tx(*this);
    r->body_markdown = std::string(new_body);
    r->version += 1;
    r->updated_at = clock_();
    if (std::find(r->authors.begin(), r->authors.end(), author) == r->authors.end()) {
      r->authors.emplace_back(author);
    }
    detail::Statement upd(db_,
        "UPDATE summaries SET body = ?1, version = ?2, authors = ?3, updated_at = ?4 "
        "WHERE summary_id = ?5 AND version = ?6");
    upd.bind(1, r->body_markdown)
        .bind(2, r->version)
        .bind(3, nlohmann::json(r->authors).dump())
        .bind(4, format_timestamp(r->updated_at))
        .bind(5, summary_id)
        .bind(6, expected_version)
        .run();
    if (sqlite3_changes(db_) != 1) {
      fail(ErrorCode::kVersionConflict, "summary " + r->summary_id + " changed concurrently");
    }
    append_history(r->summary_id, r->version, r->body_markdown, author, r->updated_at);
    tx.commit();
    return *r;
  }

  /// Removes the record and its comment claims. History is kept.
  void delete_summary(std::string_view summary_id) {
    std::lock_guard lock(mutex_);
    if (!load_summary(summary_id)) fail(ErrorCode::kNotFound, "summary " + std::string(summary_id));
    Transaction tx(*this);
    detail::Statement(db_, "DELETE FROM memberships WHERE summary_id = ?1").bind(1, summary_id).run();
    detail::Statement(db_, "DELETE FROM summaries WHERE summary_id = ?1").bind(1, summary_id).run();
    tx.commit();
  }

  SummaryRecord get_summary(std::string_view summary_id) const {
    std::lock_guard lock(mutex_);
    auto r = load_summary(summary_id);
    if (!r) fail(ErrorCode::kNotFound, "summary " + std::string(summary_id));
    return *r;
  }

  std::vector<EditHistoryEntry> history(std::string_view summary_id) const {
    std::lock_guard lock(mutex_);
    detail::Statement q(db_, "SELECT version, body, author, ts FROM summary_history WHERE summary_id = ?1 ORDER BY version");
    q.bind(1, summary_id);
    std::vector<EditHistoryEntry> out;
    while (q.step()) {
      out.push_back({std::string(summary_id), q.integer(0), q.text(1), q.text(2), parse_timestamp(q.text(3))});
    }
    return out;
  }

  /// comment_id -> owning conversation summary.
  std::map<std::string, std::string> claimed_comments(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    detail::Statement q(db_, "SELECT comment_id, summary_id FROM memberships WHERE thread_id = ?1");
    q.bind(1, thread_id);
    std::map<std::string, std::string> out;
    while (q.step()) out.emplace(q.text(0), q.text(1));
    return out;
  }

  /// Conversation summaries first, by thread position of their first
  /// comment; then infotype summaries in tab order.
  std::vector<SummaryRecord> list_summaries(std::string_view thread_id,
                                            std::optional<SummaryKind> kind,
                                            const Taxonomy& taxonomy) const {
    std::lock_guard lock(mutex_);
    const auto thread = require_thread(thread_id);
    std::vector<SummaryRecord> all;
    {
      detail::Statement q(db_, "SELECT summary_id FROM summaries WHERE thread_id = ?1 ORDER BY seq");
      q.bind(1, thread_id);
      while (q.step()) all.push_back(*load_summary(q.text(0)));
    }
    std::map<std::string, std::size_t> comment_pos;
    std::size_t pos = 0;
    for (const auto* c : thread.in_thread_order()) comment_pos.emplace(c->comment_id, pos++);
    const auto labels = load_labels(thread_id).labels();
    const auto tabs = count_by_type(labels, taxonomy);
    auto tab_rank = [&](const std::string& key) {
      for (std::size_t i = 0; i < tabs.size(); ++i) {
        if (tabs[i].type_key == key) return i;
      }
      return tabs.size() + taxonomy.order_of(key);
    };
    auto first_pos = [&](const SummaryRecord& r) {
      std::size_t best = comment_pos.size();
      for (const auto& id : r.provenance) {
        if (auto it = comment_pos.find(id); it != comment_pos.end()) best = std::min(best, it->second);
      }
      return best;
    };
    std::vector<SummaryRecord> conv, info;
    for (auto& r : all) {
      if (kind && r.kind != *kind) continue;
      (r.kind == SummaryKind::kConversation ? conv : info).push_back(std::move(r));
    }
    std::stable_sort(conv.begin(), conv.end(),
                     [&](const auto& a, const auto& b) { return first_pos(a) < first_pos(b); });
    std::stable_sort(info.begin(), info.end(),
                     [&](const auto& a, const auto& b) { return tab_rank(a.type_key) < tab_rank(b.type_key); });
    conv.insert(conv.end(), std::make_move_iterator(info.begin()), std::make_move_iterator(info.end()));
    return conv;
  }

  /// Fixture JSON for the thread, extended with a `summaries` array.
  nlohmann::json export_thread(std::string_view thread_id, const Taxonomy& taxonomy) const {
    nlohmann::json out;
    {
      std::lock_guard lock(mutex_);
      out = thread_to_json(require_thread(thread_id));
    }
    auto& arr = out["summaries"] = nlohmann::json::array();
    for (const auto& r : list_summaries(thread_id, std::nullopt, taxonomy)) arr.push_back(record_to_json(r));
    return out;
  }

 private:
  class Transaction {
   public:
    explicit Transaction(Store& s) : s_(s) { s_.exec("BEGIN IMMEDIATE"); }
    void commit() {
      s_.exec("COMMIT");
      done_ = true;
    }
    ~Transaction() {
      if (!done_) sqlite3_exec(s_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }

   private:
    Store& s_;
    bool done_ = false;
  };

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      fail(ErrorCode::kStorageError, msg);
    }
  }

  std::optional<IssueThread> load_thread(std::string_view thread_id) const {
    detail::Statement q(db_, "SELECT body FROM threads WHERE thread_id = ?1");
    q.bind(1, thread_id);
    if (!q.step()) return std::nullopt;
    return thread_from_json(nlohmann::json::parse(q.text(0)));
  }

  IssueThread require_thread(std::string_view thread_id) const {
    auto t = load_thread(thread_id);
    if (!t) fail(ErrorCode::kUnknownThread, std::string(thread_id));
    return std::move(*t);
  }

  LabelBook load_labels(std::string_view thread_id) const {
    detail::Statement q(db_, "SELECT body FROM labels WHERE thread_id = ?1");
    q.bind(1, thread_id);
    if (!q.step()) return {};
    return LabelBook::from_json(nlohmann::json::parse(q.text(0)));
  }

  void write_labels(std::string_view thread_id, const LabelBook& labels) {
    detail::Statement(db_, "INSERT INTO labels(thread_id, body) VALUES(?1, ?2) "
                           "ON CONFLICT(thread_id) DO UPDATE SET body = excluded.body")
        .bind(1, thread_id)
        .bind(2, labels.to_json().dump())
        .run();
  }

  std::optional<SummaryRecord> load_summary(std::string_view summary_id) const {
    detail::Statement q(db_,
        "SELECT summary_id, thread_id, kind, type_key, body, provenance, authors, version, created_at, updated_at "
        "FROM summaries WHERE summary_id = ?1");
    q.bind(1, summary_id);
    if (!q.step()) return std::nullopt;
    SummaryRecord r;
    r.summary_id = q.text(0);
    r.thread_id = q.text(1);
    r.kind = summary_kind_from_string(q.text(2));
    r.type_key = q.text(3);
    r.body_markdown = q.text(4);
    r.provenance = nlohmann::json::parse(q.text(5)).get<std::vector<std::string>>();
    r.authors = nlohmann::json::parse(q.text(6)).get<std::vector<std::string>>();
    r.version = q.integer(7);
    r.created_at = parse_timestamp(q.text(8));
    r.updated_at = parse_timestamp(q.text(9));
    return r;
  }

  std::optional<std::string> claim_owner(std::string_view thread_id, std::string_view comment_id) const {
    detail::Statement q(db_, "SELECT summary_id FROM memberships WHERE thread_id = ?1 AND comment_id = ?2");
    q.bind(1, thread_id).bind(2, comment_id);
    if (!q.step()) return std::nullopt;
    return q.text(0);
  }

  void append_history(std::string_view summary_id, std::int64_t version, std::string_view body,
                      std::string_view author, Timestamp ts) {
    detail::Statement(db_, "INSERT INTO summary_history(summary_id, version, body, author, ts) VALUES(?1, ?2, ?3, ?4, ?5)")
        .bind(1, summary_id)
        .bind(2, version)
        .bind(3, body)
        .bind(4, author)
        .bind(5, format_timestamp(ts))
        .run();
  }

  sqlite3* db_ = nullptr;
  Clock clock_;
  mutable std::mutex mutex_;
};

}  // namespace summit

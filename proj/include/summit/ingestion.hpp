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
#include <cctype>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "summit/error.hpp"
#include "summit/time.hpp"

namespace summit {

struct Comment {
  std::string comment_id;
  std::string author;
  Timestamp created_at{};
  std::string body_markdown;
  std::int64_t reaction_count = 0;
  // Tombstone for comments deleted upstream; kept so summary provenance
  // never points at nothing.
  bool removed = false;

  bool operator==(const Comment&) const = default;
};

struct IssueThread {
  std::string thread_id;
  std::string repo;
  std::int64_t issue_number = 0;
  std::string title;
  Comment original_post;
  std::vector<Comment> comments;

  bool operator==(const IssueThread&) const = default;

  const Comment* find_comment(std::string_view id) const {
    if (original_post.comment_id == id) return &original_post;
    for (const auto& c : comments) {
      if (c.comment_id == id) return &c;
    }
    return nullptr;
  }

  /// The original post followed by the comments, i.e. thread display order.
  std::vector<const Comment*> in_thread_order() const {
    std::vector<const Comment*> out;
    out.reserve(comments.size() + 1);
    out.push_back(&original_post);
    for (const auto& c : comments) out.push_back(&c);
    return out;
  }
};

struct SyncDelta {
  std::set<std::string> added;
  std::set<std::string> updated;
  std::set<std::string> removed;

  bool empty() const { return added.empty() && updated.empty() && removed.empty(); }
  bool operator==(const SyncDelta&) const = default;
};

// ---------------------------------------------------------------------------
// Normalization

inline void sort_comments(std::vector<Comment>& comments) {
  std::stable_sort(comments.begin(), comments.end(),
                   [](const Comment& a, const Comment& b) {
                     if (a.created_at != b.created_at) {
                       return a.created_at < b.created_at;
                     }
                     return a.comment_id < b.comment_id;
                   });
}

inline void validate_thread(const IssueThread& thread) {
  std::unordered_set<std::string> seen{thread.original_post.comment_id};
  for (const auto& c : thread.comments) {
    if (c.comment_id.empty()) {
      fail(ErrorCode::kSchemaViolation, "comment with empty comment_id");
    }
    if (!seen.insert(c.comment_id).second) {
      fail(ErrorCode::kSchemaViolation,
           "duplicate comment_id '" + c.comment_id + "' in thread " +
               thread.thread_id);
    }
  }
}

// ---------------------------------------------------------------------------
// Fixture schema (the canonical interchange format)

inline nlohmann::json comment_to_json(const Comment& c) {
  nlohmann::json j = {{"comment_id", c.comment_id},
                      {"author", c.author},
                      {"created_at", format_timestamp(c.created_at)},
                      {"body_markdown", c.body_markdown},
                      {"reaction_count", c.reaction_count}};
  if (c.removed) j["removed"] = true;
  return j;
}

inline nlohmann::json thread_to_json(const IssueThread& t) {
  nlohmann::json comments = nlohmann::json::array();
  for (const auto& c : t.comments) comments.push_back(comment_to_json(c));
  return {{"thread_id", t.thread_id},
          {"repo", t.repo},
          {"issue_number", t.issue_number},
          {"title", t.title},
          {"original_post", comment_to_json(t.original_post)},
          {"comments", std::move(comments)}};
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj,
                                     const char* key,
                                     const std::string& path) {
  if (!obj.is_object()) fail(ErrorCode::kSchemaViolation, path + ": expected object");
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    fail(ErrorCode::kSchemaViolation, path + "." + key + ": missing");
  }
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) {
    fail(ErrorCode::kSchemaViolation, path + "." + key + ": expected string");
  }
  return v.get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& obj, const char* key,
                                const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer()) {
    fail(ErrorCode::kSchemaViolation, path + "." + key + ": expected integer");
  }
  return v.get<std::int64_t>();
}

inline Comment comment_from_json(const nlohmann::json& j, std::string path) {
  if (!j.is_object()) fail(ErrorCode::kSchemaViolation, path + ": expected object");
  Comment c;
  c.comment_id = require_string(j, "comment_id", path);
  path += "[comment_id=" + c.comment_id + "]";
  c.author = require_string(j, "author", path);
  const auto created = require_string(j, "created_at", path);
  if (!try_parse_timestamp(created, c.created_at)) {
    fail(ErrorCode::kSchemaViolation,
         path + ".created_at: not an ISO-8601 UTC timestamp");
  }
  c.body_markdown = require_string(j, "body_markdown", path);
  if (auto it = j.find("reaction_count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      fail(ErrorCode::kSchemaViolation,
           path + ".reaction_count: expected non-negative integer");
    }
    c.reaction_count = it->get<std::int64_t>();
  }
  if (auto it = j.find("removed"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) {
      fail(ErrorCode::kSchemaViolation, path + ".removed: expected boolean");
    }
    c.removed = it->get<bool>();
  }
  return c;
}

}  // namespace detail

/// Converts fixture JSON into a normalized thread. Comments are re-sorted
/// chronologically; schema errors name the offending field path.
inline IssueThread thread_from_json(const nlohmann::json& j) {
  const std::string root = "$";
  IssueThread t;
  t.thread_id = detail::require_string(j, "thread_id", root);
  t.repo = detail::require_string(j, "repo", root);
  t.issue_number = detail::require_int(j, "issue_number", root);
  if (t.issue_number < 1) {
    fail(ErrorCode::kSchemaViolation, "$.issue_number: must be >= 1");
  }
  t.title = detail::require_string(j, "title", root);
  t.original_post =
      detail::comment_from_json(detail::require(j, "original_post", root),
                                "$.original_post");
  const auto& comments = detail::require(j, "comments", root);
  if (!comments.is_array()) {
    fail(ErrorCode::kSchemaViolation, "$.comments: expected array");
  }
  for (std::size_t i = 0; i < comments.size(); ++i) {
    t.comments.push_back(detail::comment_from_json(
        comments[i], "$.comments[" + std::to_string(i) + "]"));
  }
  sort_comments(t.comments);
  validate_thread(t);
  return t;
}

inline IssueThread load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open fixture " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kSchemaViolation,
         path.string() + ": invalid JSON: " + e.what());
  }
  return thread_from_json(j);
}

// ---------------------------------------------------------------------------
// Re-sync

/// Edits are detected by body inequality; tombstoned comments in `stored`
/// count as absent.
inline SyncDelta sync_thread(const IssueThread& stored, const IssueThread& fresh) {
  if (stored.thread_id != fresh.thread_id) {
    fail(ErrorCode::kThreadMismatch,
         "'" + stored.thread_id + "' vs '" + fresh.thread_id + "'");
  }
  std::map<std::string, const Comment*> old_by_id, new_by_id;
  for (const auto* c : stored.in_thread_order()) {
    if (!c->removed) old_by_id.emplace(c->comment_id, c);
  }
  for (const auto* c : fresh.in_thread_order()) {
    if (!c->removed) new_by_id.emplace(c->comment_id, c);
  }
  SyncDelta delta;
  for (const auto& [id, c] : new_by_id) {
    auto it = old_by_id.find(id);
    if (it == old_by_id.end()) {
      delta.added.insert(id);
    } else if (it->second->body_markdown != c->body_markdown) {
      delta.updated.insert(id);
    }
  }
  for (const auto& [id, c] : old_by_id) {
    if (!new_by_id.count(id)) delta.removed.insert(id);
  }
  return delta;
}

/// Produces the locally stored form after a sync: fresh content wins, and
/// comments missing upstream are kept as tombstones.
inline IssueThread merge_thread(const IssueThread& stored, const IssueThread& fresh) {
  const SyncDelta delta = sync_thread(stored, fresh);
  IssueThread merged = fresh;
  for (const auto& c : stored.comments) {
    if (c.removed || delta.removed.count(c.comment_id)) {
      if (!merged.find_comment(c.comment_id)) {
        Comment tomb = c;
        tomb.removed = true;
        merged.comments.push_back(std::move(tomb));
      }
    }
  }
  sort_comments(merged.comments);
  return merged;
}

// ---------------------------------------------------------------------------
// Forge client

struct RepoName {
  std::string owner;
  std::string name;
};

inline RepoName parse_repo(std::string_view repo) {
  const auto slash = repo.find('/');
  auto valid_part = [](std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ||
             ch == '_' || ch == '.';
    });
  };
  if (slash == std::string_view::npos ||
      !valid_part(repo.substr(0, slash)) ||
      !valid_part(repo.substr(slash + 1))) {
    fail(ErrorCode::kInvalidArgument,
         "repo must look like owner/name, got '" + std::string(repo) + "'");
  }
  return {std::string(repo.substr(0, slash)), std::string(repo.substr(slash + 1))};
}

inline std::string make_thread_id(std::string_view repo, std::int64_t issue_number) {
  const auto r = parse_repo(repo);
  return r.owner + "__" + r.name + "__" + std::to_string(issue_number);
}

/// Minimal HTTP response as seen by the forge client.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::multimap<std::string, std::string> headers;  // lowercase names

  std::optional<std::string> header(const std::string& name) const {
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }
};

/// Transport: GET `path_and_query` with the given headers. Returns nullopt on
/// connection failure.
using HttpGet = std::function<std::optional<HttpResponse>(
    const std::string& path_and_query,
    const std::vector<std::pair<std::string, std::string>>& headers)>;

struct ForgeClientOptions {
  std::string base_url = "https://api.github.com";
  int per_page = 100;
  int max_retries = 3;
  std::chrono::seconds max_backoff{60};
  // Replaced in tests so retries do not actually wait.
  std::function<void(std::chrono::milliseconds)> sleep =
      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

namespace detail {

inline Comment comment_from_forge(const nlohmann::json& j, const std::string& id_prefix) {
  Comment c;
  try {
    c.comment_id = id_prefix + std::to_string(j.at("id").get<std::int64_t>());
    const auto& user = j.at("user");
    c.author = user.is_object() ? user.value("login", std::string("ghost"))
                                : std::string("ghost");
    c.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    const auto& body = j.at("body");
    c.body_markdown = body.is_null() ? std::string() : body.get<std::string>();
    if (auto it = j.find("reactions"); it != j.end() && it->is_object()) {
      c.reaction_count = it->value("total_count", std::int64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedResponse, std::string("forge comment: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedResponse, e.detail());
  }
  return c;
}

inline bool has_next_link(const std::string& link) {
  return link.find("rel=\"next\"") != std::string::npos;
}

}  // namespace detail

/// Converts the forge's issue and comment payloads into the fixture schema.
inline nlohmann::json forge_to_fixture(std::string_view repo, std::int64_t issue_number,
                                       const nlohmann::json& issue,
                                       const std::vector<nlohmann::json>& comments) {
  IssueThread t;
  t.thread_id = make_thread_id(repo, issue_number);
  t.repo = std::string(repo);
  t.issue_number = issue_number;
  if (!issue.is_object()) fail(ErrorCode::kMalformedResponse, "issue payload is not an object");
  const auto title = issue.find("title");
  if (title == issue.end() || !title->is_string()) {
    fail(ErrorCode::kMalformedResponse, "issue payload lacks a title");
  }
  t.title = title->get<std::string>();
  t.original_post = detail::comment_from_forge(issue, "issue-");
  for (const auto& c : comments) t.comments.push_back(detail::comment_from_forge(c, ""));
  return thread_to_json(t);
}

/// REST client for a GitHub-compatible forge. Safe to share across threads;
/// the only mutable state is rate-limit bookkeeping behind a mutex.
class ForgeClient {
 public:
  ForgeClient(ForgeClientOptions options, HttpGet transport)
      : options_(std::move(options)), transport_(std::move(transport)) {}

  IssueThread fetch_thread(std::string_view repo, std::int64_t issue_number,
                           std::optional<std::string> token = std::nullopt) const {
    const auto r = parse_repo(repo);
    if (issue_number < 1) {
      fail(ErrorCode::kInvalidArgument, "issue_number must be >= 1");
    }
    if (!token) {
      if (const char* env = std::getenv("SUMMIT_FORGE_TOKEN"); env && *env) token = env;
    }
    const std::string base = "/repos/" + r.owner + "/" + r.name + "/issues/" +
                             std::to_string(issue_number);
    const auto issue = get_json(base, token);

    std::vector<nlohmann::json> comments;
    for (int page = 1;; ++page) {
      HttpResponse resp;
      const auto arr = get_json(base + "/comments?per_page=" +
                                    std::to_string(options_.per_page) +
                                    "&page=" + std::to_string(page),
                                token, &resp);
      if (!arr.is_array()) fail(ErrorCode::kMalformedResponse, "comments page is not an array");
      for (const auto& c : arr) comments.push_back(c);
      if (arr.empty()) break;
      if (auto link = resp.header("link")) {
        if (!detail::has_next_link(*link)) break;
      } else if (static_cast<int>(arr.size()) < options_.per_page) {
        break;
      }
    }
    return thread_from_json(forge_to_fixture(repo, issue_number, issue, comments));
  }

 private:
  nlohmann::json get_json(const std::string& path, const std::optional<std::string>& token,
                          HttpResponse* out = nullptr) const {
    std::vector<std::pair<std::string, std::string>> headers = {
        {"Accept", "application/vnd.github+json"}};
    if (token) headers.emplace_back("Authorization", "Bearer " + *token);

    for (int attempt = 0;; ++attempt) {
      wait_for_quota();
      auto resp = transport_(path, headers);
      if (!resp) fail(ErrorCode::kIoError, "forge unreachable: " + options_.base_url);
      record_quota(*resp);
      if (resp->status == 200) {
        try {
          auto j = nlohmann::json::parse(resp->body);
          if (out) *out = std::move(*resp);
          return j;
        } catch (const nlohmann::json::parse_error& e) {
          fail(ErrorCode::kMalformedResponse, path + ": " + e.what());
        }
      }
      if (resp->status == 404 || resp->status == 410) {
        fail(ErrorCode::kNotFound, path);
      }
      if (auto wait = rate_limit_wait(*resp)) {
        if (attempt >= options_.max_retries) {
          fail(ErrorCode::kRateLimited,
               path + ": retries exhausted after " + std::to_string(attempt + 1) +
                   " attempts");
        }
        options_.sleep(*wait);
        continue;
      }
      if (resp->status == 401 || resp->status == 403) {
        fail(ErrorCode::kAuthRequired, path);
      }
      fail(ErrorCode::kMalformedResponse,
           path + ": unexpected HTTP status " + std::to_string(resp->status));
    }
  }

  std::optional<std::chrono::milliseconds> rate_limit_wait(const HttpResponse& resp) const {
    if (resp.status != 403 && resp.status != 429) return std::nullopt;
    std::chrono::seconds wait{1};
    if (auto retry_after = resp.header("retry-after")) {
      wait = std::chrono::seconds(std::atoll(retry_after->c_str()));
    } else if (resp.header("x-ratelimit-remaining") == std::optional<std::string>("0")) {
      if (auto reset = resp.header("x-ratelimit-reset")) {
        const auto now = std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch());
        wait = std::chrono::seconds(std::atoll(reset->c_str())) - now;
      }
    } else if (resp.status == 403) {
      return std::nullopt;  // plain permission failure
    }
    wait = std::clamp(wait, std::chrono::seconds{1}, options_.max_backoff);
    return std::chrono::duration_cast<std::chrono::milliseconds>(wait);
  }

  void record_quota(const HttpResponse& resp) const {
    auto remaining = resp.header("x-ratelimit-remaining");
    auto reset = resp.header("x-ratelimit-reset");
    if (!remaining || !reset) return;
    std::lock_guard lock(quota_mutex_);
    quota_remaining_ = std::atoll(remaining->c_str());
    quota_reset_ = std::chrono::seconds(std::atoll(reset->c_str()));
  }

  void wait_for_quota() const {
    std::chrono::seconds wait{0};
    {
      std::lock_guard lock(quota_mutex_);
      if (quota_remaining_ && *quota_remaining_ <= 0) {
        const auto now = std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch());
        wait = std::min(quota_reset_ - now, options_.max_backoff);
        quota_remaining_.reset();
      }
    }
    if (wait.count() > 0) options_.sleep(wait);
  }

  ForgeClientOptions options_;
  HttpGet transport_;
  mutable std::mutex quota_mutex_;
  mutable std::optional<std::int64_t> quota_remaining_;
  mutable std::chrono::seconds quota_reset_{0};
};

}  // namespace summit

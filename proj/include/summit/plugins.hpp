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

// HTTP-backed implementations of the plug-in boundaries: the forge
// transport, an out-of-process classifier and an out-of-process ranker.

#include <chrono>
#include <string>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "summit/error.hpp"
#include "summit/infotype.hpp"
#include "summit/ingestion.hpp"
#include "summit/summarizer.hpp"

namespace summit {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

inline SplitUrl split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) fail(ErrorCode::kInvalidArgument, "not a URL: " + std::string(url));
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

namespace detail {

inline httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout) {
  httplib::Client cli(origin);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  return cli;
}

/// POSTs JSON and parses a JSON reply. Transport failures that used the whole
/// time budget are reported with `timeout_code`.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                std::chrono::milliseconds timeout, ErrorCode timeout_code,
                                const char* what) {
  const auto target = split_url(url);
  auto cli = make_client(target.origin, timeout);
  const auto started = std::chrono::steady_clock::now();
  auto res = cli.Post(target.path, body.dump(), "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (elapsed >= timeout - std::chrono::milliseconds(50) || res.error() == httplib::Error::ConnectionTimeout) {
      fail(timeout_code, std::string(what) + " did not answer within " +
                             std::to_string(timeout.count()) + " ms");
    }
    fail(ErrorCode::kIoError, std::string(what) + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    fail(ErrorCode::kMalformedResponse, std::string(what) + " answered HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedResponse, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

/// Transport for ForgeClient backed by cpp-httplib.
inline HttpGet make_http_get(const std::string& base_url,
                             std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
  return [base_url, timeout](const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>& headers)
             -> std::optional<HttpResponse> {
    auto cli = detail::make_client(base_url, timeout);
    cli.set_follow_location(true);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Get(path, h);
    if (!res) return std::nullopt;
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) {
      std::string key = k;
      for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.headers.emplace(std::move(key), v);
    }
    return out;
  };
}

/// Classifier hosted out of process.
/// Request `{sentences: [{sentence_id, text}]}`, response
/// `{labels: [{sentence_id, type_key, confidence}]}`.
class HttpClassifier final : public SentenceClassifier {
 public:
  explicit HttpClassifier(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : url_(std::move(url)), timeout_(timeout) {}

  std::vector<ClassifierOutput> classify(std::span<const ClassifierInput> batch) const override {
    nlohmann::json req = {{"sentences", nlohmann::json::array()}};
    for (const auto& s : batch) req["sentences"].push_back({{"sentence_id", s.sentence_id}, {"text", s.text}});
    const auto res = detail::post_json(url_, req, timeout_, ErrorCode::kIoError, "classifier");
    std::vector<ClassifierOutput> out;
    try {
      for (const auto& l : res.at("labels")) {
        out.push_back({l.at("sentence_id").get<std::string>(), l.at("type_key").get<std::string>(),
                       l.at("confidence").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformedResponse, std::string("classifier: ") + e.what());
    }
    return out;
  }

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

/// Ranker hosted out of process.
/// Request `{sentences: [{sentence_id, text}], budget}`, response
/// `{ranked: [{sentence_id, score}]}`. Exceeding the time cap raises
/// RankerTimeout.
class HttpRanker final : public SentenceRanker {
 public:
  explicit HttpRanker(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : url_(std::move(url)), timeout_(timeout) {}

  std::vector<RankedSentence> score(std::span<const RankerInput> sentences,
                                    std::size_t budget) const override {
    nlohmann::json req = {{"sentences", nlohmann::json::array()}, {"budget", budget}};
    for (const auto& s : sentences) req["sentences"].push_back({{"sentence_id", s.sentence_id}, {"text", s.text}});
    const auto res = detail::post_json(url_, req, timeout_, ErrorCode::kRankerTimeout, "ranker");
    std::vector<RankedSentence> out;
    try {
      for (const auto& r : res.at("ranked")) {
        out.push_back({r.at("sentence_id").get<std::string>(), r.at("score").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformedResponse, std::string("ranker: ") + e.what());
    }
    return out;
  }

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace summit

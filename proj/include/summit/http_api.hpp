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

#include <functional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "summit/api.hpp"
#include "summit/error.hpp"

namespace summit {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownThread:
    case ErrorCode::kUnknownSelector:
    case ErrorCode::kUnknownComment:
    case ErrorCode::kUnknownSentence:
      return 404;
    case ErrorCode::kConflictingMembership:
    case ErrorCode::kDuplicateInfoType:
    case ErrorCode::kVersionConflict:
    case ErrorCode::kThreadMismatch:
      return 409;
    case ErrorCode::kEmptyInput:
    case ErrorCode::kNoSentencesOfType:
      return 422;
    case ErrorCode::kAuthRequired:
      return 401;
    case ErrorCode::kRateLimited:
      return 429;
    case ErrorCode::kRankerTimeout:
      return 504;
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kIoError:
      return 502;
    case ErrorCode::kStorageError:
      return 500;
    default:
      return 400;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code),
            {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}});
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("request body: ") + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) fail(ErrorCode::kInvalidArgument, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

/// Wraps a handler so every failure becomes `{error: {code, message}}`.
inline httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kStorageError, e.what());
    }
  };
}

}  // namespace detail

/// Registers the `/v1` JSON endpoints on `server`.
inline void mount_routes(httplib::Server& server, Service& service) {
  using detail::field;
  using detail::guarded;
  using detail::parse_body;
  using detail::send_json;
  using Req = httplib::Request;
  using Res = httplib::Response;

  server.Get("/v1/health", [](const Req&, Res& res) { send_json(res, 200, {{"status", "ok"}}); });

  server.Post("/v1/threads", guarded([&service](const Req& req, Res& res) {
    const auto body = parse_body(req);
    const auto r = service.register_or_sync(field<std::string>(body, "repo"),
                                            field<std::int64_t>(body, "issue_number"));
    send_json(res, r.created ? 201 : 200,
              {{"thread_id", r.thread_id}, {"created", r.created},
               {"delta", delta_to_json(r.delta)}, {"classified", r.classified}});
  }));

  server.Get(R"(/v1/threads/([^/]+))", guarded([&service](const Req& req, Res& res) {
    send_json(res, 200, service.snapshot(req.matches[1].str()));
  }));

  server.Post(R"(/v1/threads/([^/]+)/sync)", guarded([&service](const Req& req, Res& res) {
    const auto r = service.sync(req.matches[1].str());
    auto j = delta_to_json(r.delta);
    j["classified"] = r.classified;
    send_json(res, 200, j);
  }));

  server.Post(R"(/v1/threads/([^/]+)/summaries/infotype/generate)", guarded([&service](const Req& req, Res& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& d : service.generate_infotype_summaries(req.matches[1].str())) out.push_back(draft_to_json(d));
    send_json(res, 200, out);
  }));

  server.Post(R"(/v1/threads/([^/]+)/summaries/conversation/generate)", guarded([&service](const Req& req, Res& res) {
    const auto body = parse_body(req);
    const auto ids = field<std::vector<std::string>>(body, "comment_ids");
    send_json(res, 200, draft_to_json(service.generate_conversation_summary(req.matches[1].str(), ids)));
  }));

  server.Post(R"(/v1/threads/([^/]+)/summaries)", guarded([&service](const Req& req, Res& res) {
    const auto body = parse_body(req);
    const auto draft = draft_from_json(field<nlohmann::json>(body, "draft"));
    const auto record = service.save_summary(req.matches[1].str(), draft, field<std::string>(body, "author"));
    send_json(res, 201, record_to_json(record));
  }));

  server.Get(R"(/v1/threads/([^/]+)/summaries)", guarded([&service](const Req& req, Res& res) {
    std::optional<SummaryKind> kind;
    if (req.has_param("kind") && !req.get_param_value("kind").empty()) {
      kind = summary_kind_from_string(req.get_param_value("kind"));
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : service.list_summaries(req.matches[1].str(), kind)) out.push_back(record_to_json(r));
    send_json(res, 200, out);
  }));

  server.Put(R"(/v1/summaries/([^/]+))", guarded([&service](const Req& req, Res& res) {
    const auto body = parse_body(req);
    const auto record = service.edit_summary(req.matches[1].str(), field<std::string>(body, "body_markdown"),
                                             field<std::int64_t>(body, "expected_version"),
                                             field<std::string>(body, "author"));
    send_json(res, 200, record_to_json(record));
  }));

  server.Delete(R"(/v1/summaries/([^/]+))", guarded([&service](const Req& req, Res& res) {
    service.delete_summary(req.matches[1].str());
    res.status = 204;
  }));

  server.Put(R"(/v1/threads/([^/]+)/sentences/([^/]+)/label)", guarded([&service](const Req& req, Res& res) {
    const auto body = parse_body(req);
    const auto label = service.override_label(req.matches[1].str(), req.matches[2].str(),
                                              field<std::string>(body, "type_key"),
                                              field<std::string>(body, "author"));
    send_json(res, 200, label_to_json(label));
  }));

  server.Get(R"(/v1/threads/([^/]+)/highlights)", guarded([&service](const Req& req, Res& res) {
    std::optional<std::string> type, summary;
    if (req.has_param("type")) type = req.get_param_value("type");
    if (req.has_param("summary")) summary = req.get_param_value("summary");
    send_json(res, 200, highlights_to_json(service.get_highlights(req.matches[1].str(), type, summary)));
  }));
}

}  // namespace summit

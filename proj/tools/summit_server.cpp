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


// HTTP backend for the summary panels. Configuration comes from flags and the
// SUMMIT_* environment variables; `--export-thread` dumps one stored thread
// with its summaries and exits.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "summit/api.hpp"
#include "summit/http_api.hpp"
#include "summit/plugins.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Issue-thread summarization backend"};
  app.name("summit-server");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string db_url = env("SUMMIT_DB_URL").value_or("sqlite://summit.db");
  std::string taxonomy_path, abbreviations_path, export_id;
  std::string forge_url = "https://api.github.com";
  int timeout_s = 30;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--db", db_url, "Database URL (overrides SUMMIT_DB_URL)");
  app.add_option("--taxonomy", taxonomy_path, "Information-type taxonomy JSON");
  app.add_option("--abbreviations", abbreviations_path, "Sentence abbreviation list");
  app.add_option("--forge-url", forge_url, "Forge REST API base URL");
  app.add_option("--plugin-timeout", timeout_s, "Seconds allowed for ranker/classifier plug-ins");
  app.add_option("--export-thread", export_id, "Print a stored thread with its summaries as JSON and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    summit::ServiceConfig config;
    if (!taxonomy_path.empty()) config.taxonomy = summit::Taxonomy::load(taxonomy_path);
    if (!abbreviations_path.empty()) config.abbreviations = summit::AbbreviationList::load(abbreviations_path);
    summit::Store store(db_url);

    if (!export_id.empty()) {
      std::cout << store.export_thread(export_id, config.taxonomy).dump(2) << '\n';
      return 0;
    }

    const auto timeout = std::chrono::seconds(timeout_s);
    summit::ForgeClient forge({.base_url = forge_url}, summit::make_http_get(forge_url));
    std::unique_ptr<summit::ThreadSource> source;
    if (auto dir = env("SUMMIT_FIXTURE_DIR")) {
      source = std::make_unique<summit::FixtureSource>(*dir);
    } else {
      source = std::make_unique<summit::ForgeSource>(forge);
    }
    std::unique_ptr<summit::SentenceClassifier> classifier;
    if (auto url = env("SUMMIT_CLASSIFIER_URL")) {
      classifier = std::make_unique<summit::HttpClassifier>(*url, timeout);
    } else {
      classifier = std::make_unique<summit::LexiconClassifier>(config.taxonomy);
    }
    std::unique_ptr<summit::SentenceRanker> ranker;
    if (auto url = env("SUMMIT_RANKER_URL")) {
      ranker = std::make_unique<summit::HttpRanker>(*url, timeout);
    } else {
      ranker = std::make_unique<summit::CentroidRanker>();
    }

    summit::Service service(store, *source, *classifier, *ranker, config);
    httplib::Server server;
    summit::mount_routes(server, service);
    std::cerr << "summit-server listening on " << host << ":" << port << '\n';
    if (!server.listen(host, port)) {
      std::cerr << "summit-server: cannot bind " << host << ":" << port << '\n';
      return 1;
    }
  } catch (const summit::Error& e) {
    std::cerr << "summit-server: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

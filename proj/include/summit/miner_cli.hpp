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
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "summit/error.hpp"
#include "summit/miner.hpp"

namespace summit::miner {

namespace cli_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
}

/// Values separated by commas and/or newlines; `#` lines are comments.
inline std::vector<std::string> read_csv_values(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream lines(read_file(path));
  std::string line;
  while (std::getline(lines, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = cell.find_last_not_of(" \t\r");
      out.push_back(cell.substr(b, e - b + 1));
    }
  }
  return out;
}

inline std::vector<double> read_csv_numbers(const std::string& path) {
  std::vector<double> out;
  for (const auto& v : read_csv_values(path)) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) fail(ErrorCode::kSchemaViolation, path + ": not a number: '" + v + "'");
    out.push_back(x);
  }
  return out;
}

inline void print_table(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace cli_detail

/// Entry point of `summit-miner`. Returns the process exit code.
inline int run_miner(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Find candidate summaries in issue threads and compute agreement statistics."};
  app.name("summit-miner");
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "table";
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"table", "json"}));

  auto* detect = app.add_subcommand("detect", "Match the keyword lexicon against fixture threads");
  std::string fixtures, lexicon_path, abbreviations_path, out_path;
  detect->add_option("--fixtures", fixtures, "Directory of fixture JSON threads")->required();
  detect->add_option("--lexicon", lexicon_path, "Lexicon JSON (default: built-in)");
  detect->add_option("--abbreviations", abbreviations_path, "Abbreviation list (default: built-in)");
  detect->add_option("--out", out_path, "Where to write the matches JSON")->required();

  auto* eval = app.add_subcommand("eval", "Precision and recall of detected sentences against a gold list");
  std::string detected_path, gold_path;
  eval->add_option("--detected", detected_path)->required();
  eval->add_option("--gold", gold_path)->required();

  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two coders");
  std::string a_path, b_path;
  kappa->add_option("--a", a_path, "Labels of coder A (CSV)")->required();
  kappa->add_option("--b", b_path, "Labels of coder B (CSV)")->required();

  auto* utest = app.add_subcommand("utest", "Two-sided Mann-Whitney U test");
  utest->add_option("--a", a_path, "Sample A (CSV)")->required();
  utest->add_option("--b", b_path, "Sample B (CSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const bool json = format == "json";
  try {
    if (detect->parsed()) {
      const auto lexicon = lexicon_path.empty() ? KeywordLexicon::defaults() : KeywordLexicon::load(lexicon_path);
      const auto abbreviations =
          abbreviations_path.empty() ? AbbreviationList::defaults() : AbbreviationList::load(abbreviations_path);
      const auto detector = expand_variants(lexicon);
      std::vector<std::filesystem::path> files;
      std::error_code ec;
      for (const auto& entry : std::filesystem::directory_iterator(fixtures, ec)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      }
      if (ec) fail(ErrorCode::kIoError, "cannot list " + fixtures);
      std::sort(files.begin(), files.end());
      nlohmann::json matches = nlohmann::json::array();
      std::map<std::string, std::size_t> by_category;
      std::set<SentenceRef> sentences;
      for (const auto& f : files) {
        for (const auto& m : detect_candidates(load_fixture(f), detector, abbreviations)) {
          matches.push_back(match_to_json(m));
          ++by_category[m.category];
          sentences.insert(m.ref());
        }
      }
      std::ofstream o(out_path, std::ios::binary);
      if (!o) fail(ErrorCode::kIoError, "cannot write " + out_path);
      o << matches.dump(2) << '\n';
      if (json) {
        out << nlohmann::json{{"threads", files.size()}, {"matches", matches.size()},
                              {"sentences", sentences.size()}, {"by_category", by_category}}
                   .dump(2)
            << '\n';
      } else {
        std::vector<std::pair<std::string, std::string>> rows = {
            {"threads", std::to_string(files.size())},
            {"matches", std::to_string(matches.size())},
            {"sentences", std::to_string(sentences.size())}};
        for (const auto& cat : category_names()) {
          rows.emplace_back("  " + cat, std::to_string(by_category[cat]));
        }
        print_table(out, rows);
      }
    } else if (eval->parsed()) {
      const auto report = evaluate_detector(refs_from_json(read_json(detected_path)), refs_from_json(read_json(gold_path)));
      if (json) {
        out << to_json(report).dump(2) << '\n';
      } else {
        print_table(out, {{"true_positives", std::to_string(report.true_positives)},
                          {"false_positives", std::to_string(report.false_positives)},
                          {"false_negatives", std::to_string(report.false_negatives)},
                          {"precision", fixed(report.precision * 100.0, 2) + "%"},
                          {"recall", fixed(report.recall * 100.0, 2) + "%"}});
      }
    } else if (kappa->parsed()) {
      const auto report = cohen_kappa(read_csv_values(a_path), read_csv_values(b_path));
      if (json) {
        out << to_json(report).dump(2) << '\n';
      } else {
        print_table(out, {{"n_items", std::to_string(report.n_items)},
                          {"p_observed", fixed(report.p_observed)},
                          {"p_expected", fixed(report.p_expected)},
                          {"kappa", fixed(report.kappa)}});
      }
    } else if (utest->parsed()) {
      const auto report = mann_whitney_u(read_csv_numbers(a_path), read_csv_numbers(b_path));
      if (json) {
        out << to_json(report).dump(2) << '\n';
      } else {
        std::ostringstream p;
        p << std::setprecision(6) << report.p_value;
        print_table(out, {{"U", fixed(report.u, 1)},
                          {"n1", std::to_string(report.n1)},
                          {"n2", std::to_string(report.n2)},
                          {"p_value", p.str()},
                          {"method", std::string(to_string(report.method))}});
      }
    }
  } catch (const Error& e) {
    err << "summit-miner: " << to_string(e.code()) << ": " << e.detail() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace summit::miner

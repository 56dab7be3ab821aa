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


#include <gtest/gtest.h>

#include <cmath>
#include <regex>

#include "summit/infotype.hpp"
#include "summit/summarizer.hpp"
#include "test_support.hpp"

namespace summit {
namespace {

using testing::MarkdownGen;
using testing::make_comment;
using testing::make_thread;

SentenceSpan span(std::string id, std::string text, std::string comment = "c") {
  SentenceSpan s;
  s.sentence_id = std::move(id);
  s.comment_id = std::move(comment);
  s.masked_text = std::move(text);
  s.char_end = s.masked_text.size();
  return s;
}

std::map<std::string, double> score_map(const std::vector<RankedSentence>& r) {
  std::map<std::string, double> out;
  for (const auto& x : r) out[x.sentence_id] = x.score;
  return out;
}

// Brute-force oracle: regex tokenization, dense vectors over the joint
// vocabulary, textbook cosine, then the short-sentence penalty.
std::map<std::string, double> oracle_scores(const std::vector<SentenceSpan>& spans) {
  const std::regex token_re("⟦[CLM][0-9]+⟧|[A-Za-z0-9]+");
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> vocab;
  for (const auto& s : spans) {
    std::vector<std::string> words;
    for (auto it = std::sregex_iterator(s.masked_text.begin(), s.masked_text.end(), token_re);
         it != std::sregex_iterator(); ++it) {
      std::string w = it->str();
      if (w.rfind("⟦", 0) == 0) continue;
      for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (stopwords().count(w)) continue;
      words.push_back(w);
      if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) vocab.push_back(w);
    }
    docs.push_back(words);
  }
  std::vector<std::vector<double>> vecs;
  std::vector<double> centroid(vocab.size(), 0.0);
  for (const auto& d : docs) {
    std::vector<double> v(vocab.size(), 0.0);
    for (const auto& w : d) v[std::find(vocab.begin(), vocab.end(), w) - vocab.begin()] += 1;
    for (std::size_t k = 0; k < v.size(); ++k) centroid[k] += v[k];
    vecs.push_back(v);
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    double dot = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      dot += vecs[i][k] * centroid[k];
      a += vecs[i][k] * vecs[i][k];
      b += centroid[k] * centroid[k];
    }
    double s = (a > 0 && b > 0) ? dot / std::sqrt(a * b) : 0.0;
    if (docs[i].size() < 4) s *= static_cast<double>(docs[i].size()) / 4.0;
    out[spans[i].sentence_id] = s;
  }
  return out;
}

TEST(Rank, SingleSentence) {
  const auto r = rank_sentences(std::vector{span("s1", "The installer fails on Windows builds.")}, CentroidRanker());
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].sentence_id, "s1");
  EXPECT_NEAR(r[0].score, 1.0, 1e-12);
}

TEST(Rank, NearDuplicatesOutrankUnrelated) {
  const std::vector<SentenceSpan> spans = {
      span("dup1", "The wheel install fails on windows python."),
      span("odd", "Lunch menus include soup bread cheese."),
      span("dup2", "The wheel install fails on windows python again."),
  };
  const auto r = rank_sentences(spans, CentroidRanker());
  const auto oracle = oracle_scores(spans);
  EXPECT_GT(oracle.at("dup1"), oracle.at("odd"));
  EXPECT_GT(oracle.at("dup2"), oracle.at("odd"));
  EXPECT_EQ(r.back().sentence_id, "odd");
  for (const auto& x : r) EXPECT_NEAR(x.score, oracle.at(x.sentence_id), 1e-12);
}

TEST(Rank, MatchesOracleOnRandomInput) {
  MarkdownGen gen(17);
  for (int round = 0; round < 200; ++round) {
    std::vector<SentenceSpan> spans;
    for (int i = 0, n = gen.range(1, 15); i < n; ++i) {
      std::string text;
      for (int k = 0, m = gen.range(0, 9); k < m; ++k) {
        text += gen.pick({"the ", "a ", "⟦C0⟧ ", "is "}) + gen.plain_word() + " ";
      }
      spans.push_back(span("s" + std::to_string(i), text));
    }
    const auto oracle = oracle_scores(spans);
    const auto r = rank_sentences(spans, CentroidRanker());
    ASSERT_EQ(r.size(), spans.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_NEAR(r[i].score, oracle.at(r[i].sentence_id), 1e-12);
      if (i) {
        EXPECT_GE(r[i - 1].score, r[i].score);
      }
    }
  }
}

TEST(Rank, PermutationInvariant) {
  MarkdownGen gen(4);
  std::vector<SentenceSpan> spans;
  for (int i = 0; i < 20; ++i) spans.push_back(span("s" + std::to_string(i), gen.prose(1)));
  const auto base = score_map(rank_sentences(spans, CentroidRanker()));
  for (int round = 0; round < 20; ++round) {
    std::shuffle(spans.begin(), spans.end(), gen.rng());
    const auto again = score_map(rank_sentences(spans, CentroidRanker()));
    for (const auto& [id, s] : base) EXPECT_NEAR(again.at(id), s, 1e-12);
  }
}

TEST(Rank, TiesKeepThreadOrder) {
  const std::vector<SentenceSpan> spans = {span("a", "same words here again"), span("b", "same words here again"),
                                           span("c", "same words here again")};
  const auto r = rank_sentences(spans, CentroidRanker());
  EXPECT_EQ(r[0].sentence_id, "a");
  EXPECT_EQ(r[1].sentence_id, "b");
  EXPECT_EQ(r[2].sentence_id, "c");
}

TEST(Rank, ShortSentencePenalty) {
  // Both sentences point the same way; the two-token one is halved.
  const std::vector<SentenceSpan> spans = {span("long", "crash crash crash crash"), span("short", "crash crash")};
  const auto s = score_map(rank_sentences(spans, CentroidRanker()));
  EXPECT_NEAR(s.at("long"), 1.0, 1e-12);
  EXPECT_NEAR(s.at("short"), 0.5, 1e-12);
}

TEST(Rank, EmptyInput) {
  try {
    rank_sentences(std::vector<SentenceSpan>{}, CentroidRanker());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

class ScriptedRanker : public SentenceRanker {
 public:
  explicit ScriptedRanker(std::vector<RankedSentence> out) : out_(std::move(out)) {}
  std::vector<RankedSentence> score(std::span<const RankerInput>, std::size_t) const override { return out_; }

 private:
  std::vector<RankedSentence> out_;
};

TEST(Rank, RejectsBadPluginScores) {
  const std::vector<SentenceSpan> spans = {span("a", "x"), span("b", "y")};
  auto code = [&](std::vector<RankedSentence> out) {
    try {
      rank_sentences(spans, ScriptedRanker(std::move(out)));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kStorageError;
  };
  EXPECT_EQ(code({{"zzz", 1.0}}), ErrorCode::kMalformedResponse);
  EXPECT_EQ(code({{"a", -1.0}}), ErrorCode::kMalformedResponse);
  EXPECT_EQ(code({{"a", std::nan("")}}), ErrorCode::kMalformedResponse);
  const auto r = rank_sentences(spans, ScriptedRanker({{"b", 0.9}}));
  EXPECT_EQ(r[0].sentence_id, "b");
  EXPECT_EQ(r[1].score, 0.0);
}

// --- extract_summary --------------------------------------------------------------

TEST(Extract, BudgetExceedsInput) {
  const std::vector<SentenceSpan> spans = {span("c:0", "Second place text here."), span("c:1", "Install fails on windows.")};
  const auto d = extract_summary(spans, 5, {}, CentroidRanker());
  EXPECT_EQ(d.source_sentence_ids, (std::vector<std::string>{"c:0", "c:1"}));
  EXPECT_EQ(d.body_markdown, "- Second place text here.\n- Install fails on windows.");
  EXPECT_EQ(d.budget_used, 2u);
}

TEST(Extract, BudgetThreeOfTen) {
  MarkdownGen gen(10);
  std::vector<SentenceSpan> spans;
  for (int i = 0; i < 10; ++i) spans.push_back(span("c:" + std::to_string(i), gen.prose(1)));
  const auto d = extract_summary(spans, 3, {}, CentroidRanker());
  ASSERT_EQ(d.source_sentence_ids.size(), 3u);
  const auto bullets = parse_bullets(d.body_markdown);
  ASSERT_EQ(bullets.size(), 3u);
  std::size_t last = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    auto it = std::find_if(spans.begin(), spans.end(),
                           [&](const SentenceSpan& s) { return s.sentence_id == d.source_sentence_ids[i]; });
    ASSERT_NE(it, spans.end());
    EXPECT_EQ(bullets[i], it->masked_text);
    const auto pos = static_cast<std::size_t>(it - spans.begin());
    if (i) {
      EXPECT_GT(pos, last);
    }
    last = pos;
  }
}

TEST(Extract, RestoresCode) {
  const std::string body = "Pin it with `pip install x==1.0` today.";
  const auto masked = mask_markup(body, "c1");
  const auto spans = sentencize(masked);
  ASSERT_EQ(spans[0].masked_text, "Pin it with ⟦C0⟧ today.");
  const auto d = extract_summary(spans, 1, {{"c1", &masked.placeholders}}, CentroidRanker());
  EXPECT_EQ(d.body_markdown, "- Pin it with `pip install x==1.0` today.");
}

TEST(Extract, Preconditions) {
  const std::vector<SentenceSpan> spans = {span("c:0", "x")};
  EXPECT_THROW(extract_summary(spans, 0, {}, CentroidRanker()), Error);
  try {
    extract_summary(std::vector<SentenceSpan>{}, 3, {}, CentroidRanker());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(Budgets, InfoTypeFormula) {
  EXPECT_EQ(kConversationBudget, 3u);
  const std::vector<std::pair<std::size_t, std::size_t>> table = {
      {1, 2}, {2, 2}, {13, 2}, {14, 3}, {20, 3}, {21, 4}, {27, 5}, {33, 5}, {34, 6}, {40, 6}, {500, 6}};
  for (const auto& [n, b] : table) EXPECT_EQ(infotype_budget(n), b) << n;
}

TEST(Bullets, RoundTrip) {
  MarkdownGen gen(12);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> items;
    for (int k = 0, n = gen.range(1, 5); k < n; ++k) {
      auto s = gen.paragraph();
      if (gen.range(0, 3) == 0) s += "\n- looks like a bullet\n  indented";
      items.push_back(s);
    }
    EXPECT_EQ(parse_bullets(format_bullets(items)), items);
  }
}

TEST(Drafts, JsonRoundTrip) {
  SummaryDraft d{"- a\n- b", {"c1:0", "c2:1"}, SummaryKind::kInfoType, 2, {}, "workaround"};
  const auto back = draft_from_json(draft_to_json(d));
  EXPECT_EQ(back.body_markdown, d.body_markdown);
  EXPECT_EQ(back.source_sentence_ids, d.source_sentence_ids);
  EXPECT_EQ(back.kind, d.kind);
  EXPECT_EQ(back.type_key, "workaround");
  EXPECT_THROW(draft_from_json({{"kind", "essay"}, {"body_markdown", ""}}), Error);
}

// --- conversation / info-type -------------------------------------------------------

IssueThread six_comment_thread() {
  return make_thread({make_comment("c1", 10, "The build fails on windows. It fails with a linker error."),
                      make_comment("c2", 20, "I see the same linker error on windows. Reinstalling did not help."),
                      make_comment("c3", 30, "Downgrading the compiler worked for me."),
                      make_comment("c4", 40, "> quoted only"),
                      make_comment("c5", 50, "The root cause is the new linker flag. A fix is in the pull request."),
                      make_comment("c6", 60, "Thanks!")});
}

TEST(Conversation, SingleSentenceComment) {
  const auto p = prepare_thread(six_comment_thread());
  const std::vector<std::string> ids = {"c3"};
  const auto d = summarize_conversation(ids, p, CentroidRanker());
  EXPECT_EQ(d.body_markdown, "- Downgrading the compiler worked for me.");
  EXPECT_EQ(d.kind, SummaryKind::kConversation);
  EXPECT_EQ(d.comment_ids, ids);
}

TEST(Conversation, ProvenanceSubset) {
  const auto p = prepare_thread(six_comment_thread());
  const std::vector<std::string> ids = {"c5", "c2"};
  const auto d = summarize_conversation(ids, p, CentroidRanker());
  EXPECT_EQ(d.source_sentence_ids.size(), 3u);
  for (const auto& sid : d.source_sentence_ids) {
    EXPECT_TRUE(sid.rfind("c2:", 0) == 0 || sid.rfind("c5:", 0) == 0) << sid;
  }
  EXPECT_EQ(d.comment_ids, (std::vector<std::string>{"c2", "c5"}));
}

TEST(Conversation, Errors) {
  const auto p = prepare_thread(six_comment_thread());
  auto code = [&](std::vector<std::string> ids) {
    try {
      summarize_conversation(ids, p, CentroidRanker());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kStorageError;
  };
  EXPECT_EQ(code({}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code({"c1", "c99"}), ErrorCode::kUnknownComment);
  EXPECT_EQ(code({"c4"}), ErrorCode::kEmptyInput);
}

std::vector<SentenceLabel> label_all(const PreparedThread& p, const std::map<std::string, std::string>& by_comment,
                                     const std::string& fallback = "other") {
  std::vector<SentenceLabel> out;
  for (const auto& s : p.all_sentences()) {
    auto it = by_comment.find(s.comment_id);
    out.push_back({s.sentence_id, it == by_comment.end() ? fallback : it->second, LabelSource::kModel, 1.0, {}, false});
  }
  return out;
}

TEST(InfoType, SingleSentence) {
  const auto p = prepare_thread(six_comment_thread());
  const auto labels = label_all(p, {{"c3", "workaround"}});
  const auto d = summarize_info_type("workaround", p, labels, CentroidRanker());
  EXPECT_EQ(d.body_markdown, "- Downgrading the compiler worked for me.");
  EXPECT_EQ(d.kind, SummaryKind::kInfoType);
  EXPECT_EQ(d.type_key, "workaround");
}

TEST(InfoType, TwelveSentencesBudgetThree) {
  MarkdownGen gen(21);
  std::vector<Comment> comments;
  for (int i = 0; i < 6; ++i) comments.push_back(make_comment("w" + std::to_string(i), 10 + i, gen.prose(2)));
  for (int i = 0; i < 4; ++i) comments.push_back(make_comment("o" + std::to_string(i), 100 + i, gen.prose(2)));
  const auto p = prepare_thread(make_thread(std::move(comments), gen.prose(1)));
  std::map<std::string, std::string> types;
  for (int i = 0; i < 6; ++i) types["w" + std::to_string(i)] = "workaround";
  const auto labels = label_all(p, types);
  std::set<std::string> workaround_ids;
  for (const auto& l : labels) {
    if (l.type_key == "workaround") workaround_ids.insert(l.sentence_id);
  }
  ASSERT_EQ(workaround_ids.size(), 12u);
  const auto d = summarize_info_type("workaround", p, labels, CentroidRanker(), 3);
  ASSERT_EQ(d.source_sentence_ids.size(), 3u);
  for (const auto& sid : d.source_sentence_ids) EXPECT_TRUE(workaround_ids.count(sid)) << sid;
  // Default budget for 12 candidates is 2.
  EXPECT_EQ(summarize_info_type("workaround", p, labels, CentroidRanker()).source_sentence_ids.size(), 2u);
}

TEST(InfoType, AbsentOrStale) {
  const auto p = prepare_thread(six_comment_thread());
  auto labels = label_all(p, {{"c3", "workaround"}});
  try {
    summarize_info_type("motivation", p, labels, CentroidRanker());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSentencesOfType);
  }
  for (auto& l : labels) l.stale = l.type_key == "workaround";
  EXPECT_THROW(summarize_info_type("workaround", p, labels, CentroidRanker()), Error);
}

TEST(InfoType, RegenerationDrawsFromEnlargedPool) {
  auto t = six_comment_thread();
  const auto p1 = prepare_thread(t);
  const auto d1 = summarize_info_type("workaround", p1, label_all(p1, {{"c3", "workaround"}}), CentroidRanker(), 6);
  t.comments.push_back(make_comment("c7", 70, "As a workaround, pin the old linker in the meantime."));
  const auto p2 = prepare_thread(t);
  const auto d2 = summarize_info_type("workaround", p2, label_all(p2, {{"c3", "workaround"}, {"c7", "workaround"}}),
                                      CentroidRanker(), 6);
  EXPECT_EQ(d1.source_sentence_ids, (std::vector<std::string>{"c3:0"}));
  EXPECT_EQ(d2.source_sentence_ids, (std::vector<std::string>{"c3:0", "c7:0"}));
}

// --- properties ---------------------------------------------------------------------

TEST(SummaryProperties, ExtractiveDeterministicBudgeted) {
  MarkdownGen gen(77);
  for (int round = 0; round < 150; ++round) {
    const bool prose = round % 2 == 0;
    const auto t = testing::random_thread(gen, gen.range(1, 10), prose);
    const auto p = prepare_thread(t);
    const auto all = p.all_sentences();
    if (all.empty()) continue;
    const auto budget = static_cast<std::size_t>(gen.range(1, 8));
    const auto maps = p.placeholders_by_comment();
    const auto d = extract_summary(all, budget, maps, CentroidRanker());
    const auto again = extract_summary(all, budget, maps, CentroidRanker());
    EXPECT_EQ(d.body_markdown, again.body_markdown);
    EXPECT_EQ(d.source_sentence_ids, again.source_sentence_ids);
    ASSERT_EQ(d.source_sentence_ids.size(), std::min(budget, all.size()));
    const auto bullets = parse_bullets(d.body_markdown);
    ASSERT_EQ(bullets.size(), d.source_sentence_ids.size());
    std::map<std::string, const SentenceSpan*> by_id;
    for (const auto& s : all) by_id[s.sentence_id] = &s;
    for (std::size_t i = 0; i < bullets.size(); ++i) {
      const auto* src = by_id.at(d.source_sentence_ids[i]);
      const auto* map = maps.at(src->comment_id);
      EXPECT_EQ(bullets[i], restore(src->masked_text, *map));
      if (prose) {
        EXPECT_EQ(mask_markup(bullets[i]).masked_body, src->masked_text);
      }
    }
  }
}

}  // namespace
}  // namespace summit

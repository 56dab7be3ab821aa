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

#include <atomic>
#include <fstream>
#include <thread>

#include "summit/api.hpp"
#include "test_support.hpp"

namespace summit {
namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;  // sentinel: nothing thrown
}

/// Labels every sentence by its comment id; anything unlisted gets `rest`.
class ByCommentClassifier : public SentenceClassifier {
 public:
  ByCommentClassifier(std::map<std::string, std::string> types, std::string rest)
      : types_(std::move(types)), rest_(std::move(rest)) {}

  std::vector<ClassifierOutput> classify(std::span<const ClassifierInput> batch) const override {
    calls_ += batch.size();
    std::vector<ClassifierOutput> out;
    for (const auto& s : batch) {
      const auto comment = s.sentence_id.substr(0, s.sentence_id.rfind(':'));
      auto it = types_.find(comment);
      out.push_back({s.sentence_id, it == types_.end() ? rest_ : it->second, 0.9});
    }
    return out;
  }

  mutable std::atomic<std::size_t> calls_{0};

 private:
  std::map<std::string, std::string> types_;
  std::string rest_;
};

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest()
      : dir_(std::filesystem::temp_directory_path() /
             ("summit-api-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++))),
        classifier_({{"c2", "workaround"}, {"c3", "workaround"}, {"c5", "workaround"}}, "bug_reproduction"),
        source_(dir_),
        service_(store_, source_, classifier_, ranker_) {
    std::filesystem::create_directories(dir_);
    std::filesystem::copy_file(testing::fixture("api/widget_7.json"), dir_ / "widget_7.json");
  }
  ~ServiceTest() override { std::filesystem::remove_all(dir_); }

  nlohmann::json fixture_json() {
    std::ifstream in(dir_ / "widget_7.json");
    return nlohmann::json::parse(in);
  }
  void write_fixture(const nlohmann::json& j) { std::ofstream(dir_ / "widget_7.json") << j.dump(2); }

  static inline int counter_ = 0;
  const std::string tid_ = "acme__widget__7";
  std::filesystem::path dir_;
  Store store_;
  ByCommentClassifier classifier_;
  CentroidRanker ranker_;
  FixtureSource source_;
  Service service_;
};

TEST_F(ServiceTest, FirstRegistrationLabelsEverySentence) {
  const auto r = service_.register_or_sync("acme/widget", 7);
  EXPECT_TRUE(r.created);
  EXPECT_EQ(r.thread_id, tid_);
  EXPECT_EQ(r.delta.added.size(), 7u);
  const auto snap = service_.snapshot(tid_);
  EXPECT_EQ(snap["sentences"].size(), 10u);
  EXPECT_EQ(snap["labels"].size(), snap["sentences"].size());
  EXPECT_EQ(r.classified, 10u);
  for (std::size_t i = 0; i < snap["sentences"].size(); ++i) {
    EXPECT_EQ(snap["labels"][i]["sentence_id"], snap["sentences"][i]["sentence_id"]);
  }
  EXPECT_EQ(snap["sentences"][0]["text"], "Saving a file larger than 2 GB crashes the editor.");
  EXPECT_EQ(snap["tab_order"][0]["type_key"], "bug_reproduction");
  EXPECT_EQ(snap["tab_order"][0]["count"], 6);
  EXPECT_EQ(snap["tab_order"][1]["type_key"], "workaround");
}

TEST_F(ServiceTest, SecondCallIsIdempotent) {
  service_.register_or_sync("acme/widget", 7);
  const auto before = service_.snapshot(tid_);
  const auto calls = classifier_.calls_.load();
  const auto r = service_.register_or_sync("acme/widget", 7);
  EXPECT_FALSE(r.created);
  EXPECT_TRUE(r.delta.empty());
  EXPECT_EQ(r.classified, 0u);
  EXPECT_EQ(classifier_.calls_.load(), calls);
  EXPECT_EQ(service_.snapshot(tid_), before);
}

TEST_F(ServiceTest, NewUpstreamCommentIsClassified) {
  service_.register_or_sync("acme/widget", 7);
  auto j = fixture_json();
  j["comments"].push_back({{"comment_id", "c7"}, {"author", "hal"}, {"created_at", "2024-02-01T15:00:00Z"},
                           {"body_markdown", "Still broken on 1.6. Any update?"}});
  write_fixture(j);
  const auto r = service_.sync(tid_);
  EXPECT_EQ(r.delta.added, (std::set<std::string>{"c7"}));
  EXPECT_EQ(r.classified, 2u);
  const auto snap = service_.snapshot(tid_);
  std::set<std::string> labeled;
  for (const auto& l : snap["labels"]) labeled.insert(l["sentence_id"]);
  EXPECT_TRUE(labeled.count("c7:0") && labeled.count("c7:1"));
}

TEST_F(ServiceTest, EditedAndRemovedComments) {
  service_.register_or_sync("acme/widget", 7);
  auto j = fixture_json();
  j["comments"][2]["body_markdown"] = "Downgrading to 1.4 worked. Pin it in requirements.";  // c3
  j["comments"].erase(j["comments"].begin() + 4);                                              // c5
  write_fixture(j);
  const auto r = service_.register_or_sync("acme/widget", 7);
  EXPECT_EQ(r.delta.updated, (std::set<std::string>{"c3"}));
  EXPECT_EQ(r.delta.removed, (std::set<std::string>{"c5"}));
  EXPECT_EQ(r.classified, 2u);
  const auto book = store_.get_labels(tid_);
  EXPECT_FALSE(book.find("c3:1")->stale);
  EXPECT_TRUE(book.find("c5:0")->stale);
  // The tombstone keeps its text but no longer counts or highlights.
  const auto stored = store_.get_thread(tid_);
  ASSERT_TRUE(stored->find_comment("c5"));
  EXPECT_TRUE(stored->find_comment("c5")->removed);
  const auto h = service_.get_highlights(tid_, "workaround", std::nullopt);
  for (const auto& s : h.spans) EXPECT_NE(s.comment_id, "c5");
  EXPECT_EQ(h.spans.size(), 4u);  // c2 x2, c3 x2
  EXPECT_TRUE(service_.register_or_sync("acme/widget", 7).delta.empty());
}

TEST_F(ServiceTest, InfoTypeDraftsInTabOrder) {
  service_.register_or_sync("acme/widget", 7);
  const auto drafts = service_.generate_infotype_summaries(tid_);
  ASSERT_EQ(drafts.size(), 2u);
  EXPECT_EQ(drafts[0].type_key, "bug_reproduction");
  EXPECT_EQ(drafts[1].type_key, "workaround");
  EXPECT_EQ(drafts[1].source_sentence_ids.size(), 2u);  // max(2, ceil(0.15 * 4))
  for (const auto& sid : drafts[1].source_sentence_ids) {
    const auto c = sid.substr(0, sid.find(':'));
    EXPECT_TRUE(c == "c2" || c == "c3" || c == "c5") << sid;
  }
  // Drafts are not persisted.
  EXPECT_TRUE(service_.list_summaries(tid_, std::nullopt).empty());
}

TEST_F(ServiceTest, EmptyThreadHasNoDrafts) {
  IssueThread t = testing::make_thread({}, "");
  service_.ingest(t);
  EXPECT_TRUE(service_.generate_infotype_summaries(t.thread_id).empty());
  EXPECT_EQ(code_of([&] { service_.generate_infotype_summaries("nope__nope__1"); }), ErrorCode::kUnknownThread);
}

TEST_F(ServiceTest, OverrideChangesRegeneratedDrafts) {
  service_.register_or_sync("acme/widget", 7);
  const auto label = service_.override_label(tid_, "c6:0", "action_on_issue", "alice");
  EXPECT_EQ(label.labeled_by, "alice");
  const auto drafts = service_.generate_infotype_summaries(tid_);
  ASSERT_EQ(drafts.size(), 3u);
  EXPECT_EQ(drafts[2].type_key, "action_on_issue");
  EXPECT_EQ(drafts[2].source_sentence_ids, (std::vector<std::string>{"c6:0"}));
  EXPECT_EQ(drafts[0].type_key, "bug_reproduction");
  for (const auto& sid : drafts[0].source_sentence_ids) EXPECT_NE(sid, "c6:0");
  EXPECT_EQ(code_of([&] { service_.override_label(tid_, "c6:0", "bogus", "alice"); }), ErrorCode::kUnknownType);
  EXPECT_EQ(code_of([&] { service_.override_label(tid_, "c6:9", "other", "alice"); }), ErrorCode::kUnknownSentence);
}

TEST_F(ServiceTest, ConversationDrafts) {
  service_.register_or_sync("acme/widget", 7);
  const auto d = service_.generate_conversation_summary(tid_, {"c4", "c2"});
  EXPECT_EQ(d.kind, SummaryKind::kConversation);
  EXPECT_EQ(d.source_sentence_ids.size(), 3u);
  const auto saved = service_.save_summary(tid_, service_.generate_conversation_summary(tid_, {"c3"}), "bob");
  EXPECT_EQ(saved.body_markdown, "- Downgrading to 1.4 worked for me.");
  EXPECT_EQ(code_of([&] { service_.generate_conversation_summary(tid_, {"c2", "c3"}); }),
            ErrorCode::kConflictingMembership);
  EXPECT_EQ(code_of([&] { service_.generate_conversation_summary(tid_, {"c42"}); }), ErrorCode::kUnknownComment);
  EXPECT_EQ(code_of([&] { service_.generate_conversation_summary(tid_, {}); }), ErrorCode::kInvalidArgument);
  const auto snap = service_.snapshot(tid_);
  EXPECT_EQ(snap["claimed_comments"]["c3"], saved.summary_id);
}

TEST_F(ServiceTest, Highlights) {
  service_.register_or_sync("acme/widget", 7);
  const auto thread = *store_.get_thread(tid_);
  const auto h = service_.get_highlights(tid_, "workaround", std::nullopt);
  ASSERT_EQ(h.spans.size(), 4u);
  const std::vector<std::string> order = {"c2", "c2", "c3", "c5"};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(h.spans[i].comment_id, order[i]);
  EXPECT_LT(h.spans[0].char_end, h.spans[1].char_start + 1);
  const auto& c2 = thread.find_comment("c2")->body_markdown;
  EXPECT_EQ(c2.substr(h.spans[1].char_start, h.spans[1].char_end - h.spans[1].char_start),
            "Reinstalling the plugin did not help.");

  const auto saved = service_.save_summary(tid_, service_.generate_conversation_summary(tid_, {"c3"}), "bob");
  const auto hc = service_.get_highlights(tid_, std::nullopt, saved.summary_id);
  ASSERT_EQ(hc.spans.size(), 1u);
  EXPECT_EQ(hc.spans[0], (HighlightSpan{"c3", 0, thread.find_comment("c3")->body_markdown.size()}));

  const auto info = service_.save_summary(tid_, service_.generate_infotype_summaries(tid_)[1], "bob");
  const auto hi = service_.get_highlights(tid_, std::nullopt, info.summary_id);
  EXPECT_EQ(hi.spans.size(), info.provenance.size());

  EXPECT_EQ(code_of([&] { service_.get_highlights(tid_, "nonsense", std::nullopt); }), ErrorCode::kUnknownSelector);
  EXPECT_EQ(code_of([&] { service_.get_highlights(tid_, std::nullopt, "sum-999"); }), ErrorCode::kUnknownSelector);
  EXPECT_EQ(code_of([&] { service_.get_highlights(tid_, std::nullopt, std::nullopt); }), ErrorCode::kUnknownSelector);
  EXPECT_EQ(code_of([&] { service_.get_highlights(tid_, "workaround", "sum-1"); }), ErrorCode::kUnknownSelector);
}

TEST_F(ServiceTest, SourceErrorsPropagate) {
  EXPECT_EQ(code_of([&] { service_.register_or_sync("acme/widget", 8); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { service_.register_or_sync("acme/widget", 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { service_.sync("acme__widget__8"); }), ErrorCode::kUnknownThread);
}

TEST_F(ServiceTest, ConcurrentRegistrationCreatesOnce) {
  std::atomic<int> created{0};
  std::vector<std::thread> pool;
  for (int i = 0; i < 6; ++i) {
    pool.emplace_back([&] { created += service_.register_or_sync("acme/widget", 7).created; });
  }
  for (auto& t : pool) t.join();
  EXPECT_EQ(created.load(), 1);
  EXPECT_EQ(classifier_.calls_.load(), 10u);
}

TEST(ServiceEndToEnd, PackagedFixtureWithBaselines) {
  Store store;
  FixtureSource source(testing::data_file("fixtures"));
  const auto& tax = Taxonomy::defaults();
  LexiconClassifier classifier(tax);
  CentroidRanker ranker;
  Service service(store, source, classifier, ranker);
  const auto r = service.register_or_sync("summit-org/summitpkg", 412);
  EXPECT_TRUE(r.created);
  const auto snap = service.snapshot(r.thread_id);
  EXPECT_GT(snap["sentences"].size(), 60u);
  EXPECT_EQ(snap["labels"].size(), snap["sentences"].size());
  const auto drafts = service.generate_infotype_summaries(r.thread_id);
  EXPECT_GE(drafts.size(), 2u);
  // Every draft body is a bullet list of restored source sentences.
  const auto prepared = prepare_thread(*store.get_thread(r.thread_id));
  const auto maps = prepared.placeholders_by_comment();
  std::map<std::string, SentenceSpan> by_id;
  for (const auto& s : prepared.all_sentences()) by_id[s.sentence_id] = s;
  for (const auto& d : drafts) {
    const auto bullets = parse_bullets(d.body_markdown);
    ASSERT_EQ(bullets.size(), d.source_sentence_ids.size());
    for (std::size_t i = 0; i < bullets.size(); ++i) {
      const auto& s = by_id.at(d.source_sentence_ids[i]);
      EXPECT_EQ(bullets[i], restore(s.masked_text, *maps.at(s.comment_id)));
    }
  }
}

}  // namespace
}  // namespace summit

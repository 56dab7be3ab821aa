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
#include <thread>

#include "summit/store.hpp"
#include "test_support.hpp"

namespace summit {
namespace {

using testing::make_comment;
using testing::make_thread;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;  // sentinel: nothing thrown
}

IssueThread thread6() {
  std::vector<Comment> cs;
  for (int i = 1; i <= 6; ++i) cs.push_back(make_comment("c" + std::to_string(i), i * 10, "Comment number " + std::to_string(i) + "."));
  return make_thread(std::move(cs));
}

SummaryDraft conversation(std::vector<std::string> ids, std::string body = "- summary") {
  SummaryDraft d;
  d.kind = SummaryKind::kConversation;
  d.body_markdown = std::move(body);
  d.comment_ids = std::move(ids);
  for (const auto& id : d.comment_ids) d.source_sentence_ids.push_back(id + ":0");
  return d;
}

SummaryDraft infotype(std::string type, std::vector<std::string> sids = {"c1:0"}) {
  SummaryDraft d;
  d.kind = SummaryKind::kInfoType;
  d.body_markdown = "- about " + type;
  d.type_key = std::move(type);
  d.source_sentence_ids = std::move(sids);
  return d;
}

class StoreTest : public ::testing::Test {
 protected:
  StoreTest() : store_(":memory:", [this] { return testing::at(tick_++); }) {
    store_.put_thread(thread6(), LabelBook{});
  }
  const std::string tid_ = "acme__widget__1";
  int tick_ = 0;
  Store store_;
};

TEST_F(StoreTest, SaveThenGet) {
  const auto saved = store_.save_summary(conversation({"c2", "c1"}, "- body with `code`\n- line"), tid_, "alice");
  EXPECT_EQ(saved.version, 1);
  EXPECT_EQ(saved.authors, (std::vector<std::string>{"alice"}));
  EXPECT_EQ(saved.provenance, (std::vector<std::string>{"c1", "c2"}));
  const auto got = store_.get_summary(saved.summary_id);
  EXPECT_EQ(got, saved);
  EXPECT_EQ(got.body_markdown, "- body with `code`\n- line");
  EXPECT_EQ(got.created_at, testing::at(0));
  ASSERT_EQ(store_.history(saved.summary_id).size(), 1u);
}

TEST_F(StoreTest, OverlappingConversationConflicts) {
  store_.save_summary(conversation({"c1", "c2"}), tid_, "alice");
  EXPECT_EQ(code_of([&] { store_.save_summary(conversation({"c2", "c3"}), tid_, "bob"); }),
            ErrorCode::kConflictingMembership);
  // The failed save left nothing behind: c3 is still free.
  EXPECT_NO_THROW(store_.save_summary(conversation({"c3"}), tid_, "bob"));
  EXPECT_EQ(store_.claimed_comments(tid_).size(), 3u);
}

TEST_F(StoreTest, DuplicateInfoType) {
  store_.save_summary(infotype("workaround"), tid_, "alice");
  EXPECT_EQ(code_of([&] { store_.save_summary(infotype("workaround"), tid_, "bob"); }),
            ErrorCode::kDuplicateInfoType);
  EXPECT_NO_THROW(store_.save_summary(infotype("motivation"), tid_, "bob"));
}

TEST_F(StoreTest, SaveValidation) {
  EXPECT_EQ(code_of([&] { store_.save_summary(conversation({"c1"}), "nope__x__1", "a"); }), ErrorCode::kUnknownThread);
  EXPECT_EQ(code_of([&] { store_.save_summary(conversation({"c99"}), tid_, "a"); }), ErrorCode::kUnknownComment);
  EXPECT_EQ(code_of([&] { store_.save_summary(conversation({}), tid_, "a"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { store_.save_summary(conversation({"c1"}), tid_, ""); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { store_.save_summary(infotype("x", {}), tid_, "a"); }), ErrorCode::kInvalidArgument);
}

TEST_F(StoreTest, EditBumpsVersionAndHistory) {
  const auto s = store_.save_summary(conversation({"c1"}), tid_, "alice");
  const auto e = store_.edit_summary(s.summary_id, "- edited", 1, "alice");
  EXPECT_EQ(e.version, 2);
  EXPECT_EQ(e.authors, (std::vector<std::string>{"alice"}));
  const auto h = store_.history(s.summary_id);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].version, 1);
  EXPECT_EQ(h[1].version, 2);
  EXPECT_EQ(h[1].body_markdown, "- edited");
  EXPECT_GT(e.updated_at, e.created_at);
}

TEST_F(StoreTest, SecondAuthorAddedOnce) {
  const auto s = store_.save_summary(conversation({"c1"}), tid_, "alice");
  store_.edit_summary(s.summary_id, "- v2", 1, "bob");
  store_.edit_summary(s.summary_id, "- v3", 2, "alice");
  const auto r = store_.edit_summary(s.summary_id, "- v4", 3, "bob");
  EXPECT_EQ(r.authors, (std::vector<std::string>{"alice", "bob"}));
  EXPECT_EQ(r.version, 4);
}

TEST_F(StoreTest, StaleVersionRejected) {
  const auto s = store_.save_summary(conversation({"c1"}), tid_, "alice");
  store_.edit_summary(s.summary_id, "- v2", 1, "alice");
  EXPECT_EQ(code_of([&] { store_.edit_summary(s.summary_id, "- lost", 1, "bob"); }), ErrorCode::kVersionConflict);
  EXPECT_EQ(store_.get_summary(s.summary_id).body_markdown, "- v2");
  EXPECT_EQ(code_of([&] { store_.edit_summary("sum-999", "x", 1, "bob"); }), ErrorCode::kNotFound);
}

TEST_F(StoreTest, ConcurrentEditsOneWins) {
  for (int round = 0; round < 50; ++round) {
    const auto s = store_.save_summary(infotype("t" + std::to_string(round)), tid_, "alice");
    std::atomic<int> ok{0}, conflict{0};
    auto writer = [&](const char* who) {
      try {
        store_.edit_summary(s.summary_id, std::string("- by ") + who, 1, who);
        ++ok;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kVersionConflict) ++conflict;
      }
    };
    std::thread a(writer, "bob"), b(writer, "carol");
    a.join();
    b.join();
    EXPECT_EQ(ok.load(), 1);
    EXPECT_EQ(conflict.load(), 1);
    EXPECT_EQ(store_.history(s.summary_id).size(), 2u);
  }
}

TEST_F(StoreTest, DeleteReleasesMembership) {
  const auto s = store_.save_summary(conversation({"c1"}), tid_, "alice");
  store_.edit_summary(s.summary_id, "- v2", 1, "alice");
  store_.delete_summary(s.summary_id);
  EXPECT_EQ(code_of([&] { store_.get_summary(s.summary_id); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { store_.delete_summary(s.summary_id); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { store_.delete_summary("sum-424242"); }), ErrorCode::kNotFound);
  EXPECT_EQ(store_.history(s.summary_id).size(), 2u);  // kept for audit
  const auto again = store_.save_summary(conversation({"c1"}), tid_, "bob");
  EXPECT_NE(again.summary_id, s.summary_id);
}

TEST_F(StoreTest, ListOrdering) {
  EXPECT_TRUE(store_.list_summaries(tid_, std::nullopt, Taxonomy::defaults()).empty());
  const auto late = store_.save_summary(conversation({"c5"}), tid_, "a");
  const auto early = store_.save_summary(conversation({"c4", "c2"}), tid_, "a");
  const auto info = store_.save_summary(infotype("workaround"), tid_, "a");
  const auto all = store_.list_summaries(tid_, std::nullopt, Taxonomy::defaults());
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].summary_id, early.summary_id);
  EXPECT_EQ(all[1].summary_id, late.summary_id);
  EXPECT_EQ(all[2].summary_id, info.summary_id);
  const auto only = store_.list_summaries(tid_, SummaryKind::kInfoType, Taxonomy::defaults());
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].kind, SummaryKind::kInfoType);
  EXPECT_EQ(code_of([&] { store_.list_summaries("missing__x__1", std::nullopt, Taxonomy::defaults()); }),
            ErrorCode::kUnknownThread);
}

TEST_F(StoreTest, InfoTypeListFollowsTabOrder) {
  LabelBook book;
  auto put = [&](const std::string& sid, const std::string& type) {
    book.put({sid, type, LabelSource::kModel, 1.0, {}, false});
  };
  put("c1:0", "motivation");
  put("c2:0", "workaround");
  put("c3:0", "workaround");
  put("c4:0", "motivation");
  put("c5:0", "workaround");
  store_.put_thread(thread6(), book);
  store_.save_summary(infotype("motivation"), tid_, "a");
  store_.save_summary(infotype("workaround"), tid_, "a");
  auto keys = [&] {
    std::vector<std::string> out;
    for (const auto& r : store_.list_summaries(tid_, SummaryKind::kInfoType, Taxonomy::defaults())) {
      out.push_back(r.type_key);
    }
    return out;
  };
  EXPECT_EQ(keys(), (std::vector<std::string>{"workaround", "motivation"}));
  store_.override_label(tid_, "c2:0", "motivation", "alice", Taxonomy::defaults());
  EXPECT_EQ(keys(), (std::vector<std::string>{"motivation", "workaround"}));
}

TEST_F(StoreTest, LabelsPersistAndOverride) {
  LabelBook book;
  book.put({"c1:0", "other", LabelSource::kModel, 0.4, {}, false});
  store_.put_thread(thread6(), book);
  const auto l = store_.override_label(tid_, "c1:0", "workaround", "alice", Taxonomy::defaults());
  EXPECT_EQ(l.source, LabelSource::kHuman);
  const auto back = store_.get_labels(tid_);
  EXPECT_EQ(back.find("c1:0")->type_key, "workaround");
  EXPECT_EQ(back.history("c1:0").size(), 1u);
  EXPECT_EQ(code_of([&] { store_.override_label(tid_, "c9:0", "workaround", "a", Taxonomy::defaults()); }),
            ErrorCode::kUnknownSentence);
  EXPECT_EQ(code_of([&] { store_.override_label("zz__zz__1", "c1:0", "workaround", "a", Taxonomy::defaults()); }),
            ErrorCode::kUnknownThread);
}

TEST_F(StoreTest, ExportMatchesFixtureSchema) {
  store_.save_summary(conversation({"c1"}), tid_, "alice");
  const auto j = store_.export_thread(tid_, Taxonomy::defaults());
  ASSERT_EQ(j["summaries"].size(), 1u);
  EXPECT_EQ(j["summaries"][0]["authors"][0], "alice");
  EXPECT_EQ(thread_from_json(j), thread6());
}

TEST(StoreFile, SurvivesReopenAndRejectsOtherBackends) {
  const auto dir = std::filesystem::temp_directory_path() / ("summit-store-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto url = "sqlite://" + (dir / "db.sqlite").string();
  std::string id;
  {
    Store s(url);
    s.put_thread(thread6(), LabelBook{});
    id = s.save_summary(conversation({"c3"}), "acme__widget__1", "alice").summary_id;
  }
  {
    Store s(url);
    EXPECT_EQ(s.get_summary(id).provenance, (std::vector<std::string>{"c3"}));
    EXPECT_EQ(code_of([&] { s.save_summary(conversation({"c3"}), "acme__widget__1", "bob"); }),
              ErrorCode::kConflictingMembership);
    // Ids keep increasing across reopen, even after deletes.
    s.delete_summary(id);
    EXPECT_NE(s.save_summary(conversation({"c3"}), "acme__widget__1", "bob").summary_id, id);
  }
  std::filesystem::remove_all(dir);
  EXPECT_EQ(code_of([] { Store("postgres://db/summit"); }), ErrorCode::kStorageError);
  EXPECT_EQ(detail::sqlite_path_from_url("sqlite:relative.db"), "relative.db");
  EXPECT_EQ(detail::sqlite_path_from_url("plain.db"), "plain.db");
}

// Randomized save/delete/edit sequences against a set-based oracle.
TEST_F(StoreTest, RandomOperationsMatchOracle) {
  testing::MarkdownGen gen(55);
  std::map<std::string, std::set<std::string>> live;  // summary id -> comments
  std::map<std::string, std::int64_t> versions;
  for (int op = 0; op < 500; ++op) {
    const int kind = gen.range(0, 2);
    if (kind == 0 || live.empty()) {
      std::set<std::string> want;
      for (int k = 0, n = gen.range(1, 3); k < n; ++k) want.insert("c" + std::to_string(gen.range(1, 6)));
      bool clash = false;
      for (const auto& [id, cs] : live) {
        for (const auto& c : want) clash |= cs.count(c) > 0;
      }
      try {
        const auto r = store_.save_summary(conversation({want.begin(), want.end()}), tid_, "u");
        ASSERT_FALSE(clash);
        live[r.summary_id] = want;
        versions[r.summary_id] = 1;
      } catch (const Error& e) {
        ASSERT_TRUE(clash);
        ASSERT_EQ(e.code(), ErrorCode::kConflictingMembership);
      }
    } else if (kind == 1) {
      auto it = std::next(live.begin(), gen.range(0, static_cast<int>(live.size()) - 1));
      store_.delete_summary(it->first);
      versions.erase(it->first);
      live.erase(it);
    } else {
      auto it = std::next(versions.begin(), gen.range(0, static_cast<int>(versions.size()) - 1));
      const bool stale = gen.range(0, 3) == 0;
      try {
        const auto r = store_.edit_summary(it->first, "- edit", stale ? it->second - 1 : it->second, "u");
        ASSERT_FALSE(stale);
        ASSERT_EQ(r.version, it->second + 1);
        it->second = r.version;
      } catch (const Error& e) {
        ASSERT_TRUE(stale);
        ASSERT_EQ(e.code(), ErrorCode::kVersionConflict);
      }
    }
    std::map<std::string, std::string> expected;
    for (const auto& [id, cs] : live) {
      for (const auto& c : cs) expected[c] = id;
    }
    ASSERT_EQ(store_.claimed_comments(tid_), expected);
  }
  for (const auto& [id, v] : versions) {
    const auto h = store_.history(id);
    ASSERT_EQ(h.size(), static_cast<std::size_t>(v));
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h[i].version, static_cast<std::int64_t>(i + 1));
  }
}

}  // namespace
}  // namespace summit

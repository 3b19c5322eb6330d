#include <fstream>
#include <set>
#include <random>

#include "ats/aggregator.hpp"
#include "ats/error.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "support.hpp"

using namespace ats;

namespace {

oracle::Counts to_oracle(const StateCounts& c) {
  return {c[ClipState::NoFace],  c[ClipState::MultipleFaces], c[ClipState::Unfocused],  c[ClipState::Engaged],
          c[ClipState::Tired],   c[ClipState::Confused],      c[ClipState::Disengaged], c[ClipState::Neutral]};
}

StateCounts random_counts(std::mt19937_64& rng) {
  StateCounts c;
  for (ClipState s : kClipStates) c[s] = static_cast<int>(rng() % 7);
  return c;
}

}  // namespace

TEST_CASE("worked aggregation examples") {
  const ThresholdConfig cfg;
  CHECK(aggregate({{ClipState::NoFace, 5}}, cfg) == LessonState::NumerousNoFaces);
  CHECK(aggregate({{ClipState::NoFace, 3}}, cfg) == LessonState::NoFace);
  CHECK(aggregate({{ClipState::Engaged, 2}}, cfg) == LessonState::Engaged);
  CHECK(aggregate({{ClipState::Engaged, 1}}, cfg) == LessonState::Neutral);
  CHECK(aggregate({{ClipState::Disengaged, 1}}, cfg) == LessonState::Disengaged);
  CHECK(aggregate({{ClipState::Tired, 3}, {ClipState::Unfocused, 3}, {ClipState::Confused, 3}}, cfg) ==
        LessonState::TiredUnfocused);
  CHECK(aggregate({{ClipState::Tired, 3}, {ClipState::Confused, 3}}, cfg) == LessonState::TiredConfused);
  CHECK(aggregate({{ClipState::NoFace, 3}, {ClipState::MultipleFaces, 3}}, cfg) ==
        LessonState::NoFacePlusMultipleFaces);
  CHECK(aggregate({{ClipState::Confused, 3}}, cfg) == LessonState::Confused);
  CHECK(aggregate({{ClipState::Neutral, 6}}, cfg) == LessonState::Neutral);
  CHECK(aggregate({}, cfg) == LessonState::Neutral);
}

TEST_CASE("every lesson state is reachable") {
  const ThresholdConfig cfg;
  std::set<LessonState> seen;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20000; ++i) seen.insert(aggregate(random_counts(rng), cfg));
  seen.insert(aggregate({}, cfg));
  CHECK(seen.size() == kLessonStateCount);
}

TEST_CASE("aggregator matches the brute-force oracle on 10000 random count vectors") {
  const ThresholdConfig cfg;
  std::mt19937_64 rng(20240304);
  for (int i = 0; i < 10000; ++i) {
    const StateCounts c = random_counts(rng);
    REQUIRE(to_string(aggregate(c, cfg)) == oracle::brute_force_lesson_state(to_oracle(c), cfg.aggregator));
  }
}

TEST_CASE("aggregator matches the oracle under non-default thresholds") {
  ThresholdConfig cfg;
  cfg.aggregator = {1, 0, 3, 1, 0, 1, 3, 0};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5000; ++i) {
    const StateCounts c = random_counts(rng);
    REQUIRE(to_string(aggregate(c, cfg)) == oracle::brute_force_lesson_state(to_oracle(c), cfg.aggregator));
  }
}

TEST_CASE("priority is monotone in the counts") {
  const ThresholdConfig cfg;
  std::mt19937_64 rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const StateCounts lo = random_counts(rng);
    StateCounts hi = lo;
    for (ClipState s : kClipStates) hi[s] += static_cast<int>(rng() % 4);
    REQUIRE(priority_index(aggregate(hi, cfg)) <= priority_index(aggregate(lo, cfg)));
  }
}

TEST_CASE("lesson state names and priority order") {
  for (std::size_t i = 0; i < kLessonStateCount; ++i) {
    CHECK(priority_index(kLessonStatePriority[i]) == i);
    CHECK(parse_lesson_state(to_string(kLessonStatePriority[i])) == kLessonStatePriority[i]);
  }
  CHECK(kLessonStatePriority.front() == LessonState::NoFacePlusMultipleFaces);
  CHECK(kLessonStatePriority.back() == LessonState::Neutral);
}

TEST_CASE("state counts tally") {
  const std::vector<ClipState> states = {ClipState::Engaged, ClipState::Engaged, ClipState::NoFace};
  const StateCounts c = StateCounts::tally(states);
  CHECK(c[ClipState::Engaged] == 2);
  CHECK(c[ClipState::NoFace] == 1);
  CHECK(c.total() == 3);
}

TEST_CASE("built-in catalog covers 21 plain and 4 supplementary messages") {
  const FeedbackCatalog& cat = FeedbackCatalog::defaults();
  CHECK(cat.size() == 25);
  CHECK(cat.message(LessonState::Engaged, FeedbackVariant::Plain) == "Excellent! Keep it up.");
  CHECK(cat.message(LessonState::Confused, FeedbackVariant::Plain) ==
        "It appears that you find some of the content confusing. Please rewatch the video more carefully to "
        "fully understand the contents.");
  CHECK(cat.message(LessonState::Confused, FeedbackVariant::WithSupplementary) ==
        "It appears that you find some of the content confusing. Please check the additional explanations and "
        "examples provided in the following supplementary videos.");
  CHECK_THROWS_AS(cat.message(LessonState::Engaged, FeedbackVariant::WithSupplementary), Error);

  const FeedbackCatalog file = FeedbackCatalog::load(testing::source_path("data/feedback_catalog.json"));
  for (LessonState s : kLessonStatePriority) {
    CHECK(file.message(s, FeedbackVariant::Plain) == cat.message(s, FeedbackVariant::Plain));
  }
}

TEST_CASE("feedback selection, exhaustive over states and availability") {
  const FeedbackCatalog& cat = FeedbackCatalog::defaults();
  const std::set<LessonState> confusion = {LessonState::UnfocusedConfused, LessonState::EngagedConfused,
                                           LessonState::DisengagedConfused, LessonState::Confused};
  for (LessonState s : kLessonStatePriority) {
    for (bool available : {false, true}) {
      const Feedback f = select_feedback(s, available, cat);
      const bool expect = available && confusion.contains(s);
      CHECK(f.recommend_supplementary == expect);
      CHECK(f.message == cat.message(s, expect ? FeedbackVariant::WithSupplementary : FeedbackVariant::Plain));
    }
  }
}

TEST_CASE("catalog validation") {
  const nlohmann::json good = FeedbackCatalog::defaults().to_json();
  CHECK(FeedbackCatalog::from_json(good).size() == 25);

  auto kind_of = [](const nlohmann::json& doc) {
    try {
      FeedbackCatalog::from_json(doc);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Internal;
  };
  nlohmann::json missing = good;
  missing.erase(missing.begin());
  CHECK(kind_of(missing) == ErrorKind::Config);

  nlohmann::json dup = good;
  dup.push_back(good[0]);
  CHECK(kind_of(dup) == ErrorKind::Config);

  nlohmann::json wrong_variant = good;
  wrong_variant.push_back({{"state", "Engaged"}, {"variant", "with_supplementary"}, {"message", "x"}});
  CHECK(kind_of(wrong_variant) == ErrorKind::Config);

  nlohmann::json unknown = good;
  unknown.push_back({{"state", "Sleepy"}, {"variant", "plain"}, {"message", "x"}});
  CHECK(kind_of(unknown) == ErrorKind::Config);
}

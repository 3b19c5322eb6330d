#include <fstream>

#include "ats/course.hpp"
#include "ats/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ats;
using nlohmann::json;

namespace {

json fixture_json() {
  std::ifstream in(testing::source_path("data/courses/ai_for_everyone.json"));
  return json::parse(in);
}

ErrorKind kind_of(const json& doc) {
  try {
    CourseModel::from_json(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("course fixture loads with three groups per session") {
  const CourseModel c = testing::fixture();
  CHECK(c.id == "ai-for-everyone");
  REQUIRE(c.sessions.size() == 2);
  for (const auto& s : c.sessions) {
    for (CognitiveStyle style : kCognitiveStyles) {
      CHECK_FALSE(s.track(style).lessons.empty());
      for (const auto& q : s.track(style).test.questions) CHECK(q.options.size() == 4);
    }
  }
  CHECK(c.sessions[0].track(CognitiveStyle::Wholistic).test.questions.size() == 6);
  CHECK(c.sessions[1].track(CognitiveStyle::Middle).test.questions.size() == 4);
  CHECK(c.sessions[0].track(CognitiveStyle::Analytical).test.passing_score == 80);
  CHECK(c.sessions[0].track(CognitiveStyle::Wholistic).test.questions[0].text ==
        "What kind of artificial intelligence is designed to do specific tasks like spam email detection, speech "
        "recognition, etc.?");
}

TEST_CASE("lesson lookup") {
  const CourseModel c = testing::fixture();
  const auto loc = c.find_lesson("s1-a4");
  REQUIRE(loc.has_value());
  CHECK(loc->session_index == 0);
  CHECK(loc->style == CognitiveStyle::Analytical);
  CHECK(loc->lesson_index == 3);
  CHECK(c.lesson_at(*loc).supplementary.empty());
  CHECK_FALSE(c.find_lesson("s9-x1").has_value());
  CHECK(c.find_session("s2") == 1u);
}

TEST_CASE("course json round-trips") {
  const CourseModel c = testing::fixture();
  CHECK(CourseModel::from_json(c.to_json()) == c);
}

TEST_CASE("fixture invariants are enforced") {
  json missing_group = fixture_json();
  missing_group["sessions"][0]["groups"].erase("middle");
  CHECK(kind_of(missing_group) == ErrorKind::Invalid);

  json three_options = fixture_json();
  three_options["sessions"][0]["test"]["questions"][1]["options"].erase(0);
  CHECK(kind_of(three_options) == ErrorKind::Invalid);

  json bad_key = fixture_json();
  bad_key["sessions"][0]["test"]["questions"][0]["correct"] = 4;
  CHECK(kind_of(bad_key) == ErrorKind::Invalid);

  json dup_lesson = fixture_json();
  dup_lesson["sessions"][1]["groups"]["wholistic"]["lessons"][0]["id"] = "s1-w1";
  CHECK(kind_of(dup_lesson) == ErrorKind::Invalid);

  json no_sessions = fixture_json();
  no_sessions["sessions"] = json::array();
  CHECK(kind_of(no_sessions) == ErrorKind::Invalid);

  json wrong_type = fixture_json();
  wrong_type["sessions"][0]["groups"]["middle"]["lessons"] = "none";
  CHECK(kind_of(wrong_type) == ErrorKind::Malformed);
}

TEST_CASE("public test view omits the answer key") {
  const CourseModel c = testing::fixture();
  const json pub = to_public_json(c.sessions[0].track(CognitiveStyle::Middle).test);
  CHECK(pub.dump().find("correct") == std::string::npos);
  REQUIRE(pub.at("questions").size() == 6);
  CHECK(pub.at("questions")[0].at("options").size() == 4);
}

TEST_CASE("cognitive style names") {
  for (CognitiveStyle s : kCognitiveStyles) CHECK(parse_cognitive_style(to_string(s)) == s);
  CHECK(to_string(CognitiveStyle::Middle) == "middle");
  CHECK_FALSE(parse_cognitive_style("Holistic").has_value());
}

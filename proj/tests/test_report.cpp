#include "ats/report.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ats;
using namespace ats::testing;

TEST_CASE("learner report from stored records") {
  const CourseModel course = fixture();
  TutorEngine engine(std::make_shared<MemoryStorage>(), {},
                     std::make_shared<const FeedbackCatalog>(FeedbackCatalog::defaults()));
  engine.define_course(course);
  engine.enroll("ann", CognitiveStyle::Wholistic, course.id);
  for (int i = 0; i < 3; ++i) engine.ingest_clip(steady_clip("e" + std::to_string(i), "ann", "s1-w1", 5, 5));
  engine.complete_lesson("ann", "s1-w1");
  engine.ingest_clip(steady_clip("x", "ann", "s1-w2", 0, -7));
  engine.submit_test_attempt("ann", "s1", std::vector<int>(6, 0));

  const LearnerReport r = build_learner_report(course, engine.record("ann"));
  REQUIRE(r.lessons.size() == 5);  // 3 + 2 wholistic lessons
  CHECK(r.lessons[0].lesson_id == "s1-w1");
  CHECK(r.lessons[0].histogram[ClipState::Engaged] == 3);
  CHECK(r.lessons[0].histogram.total() == 3);
  CHECK(r.lessons[0].state == LessonState::Engaged);
  CHECK(r.lessons[0].history.size() == 1);
  CHECK(r.lessons[1].histogram[ClipState::Tired] == 1);
  CHECK_FALSE(r.lessons[1].state.has_value());
  REQUIRE(r.tests.size() == 2);
  CHECK(r.tests[0].scores.size() == 1);
  CHECK_FALSE(r.tests[0].passed);

  const auto doc = to_json(r);
  CHECK(doc.at("lessons")[0].at("histogram") == nlohmann::json{{"Engaged", 3}});
  CHECK(doc.at("lessons")[0].at("state") == "Engaged");

  const std::string text = render_text(r);
  CHECK(text.find("Engaged       ### 3") != std::string::npos);
  const std::string csv = render_csv(r);
  CHECK(csv.find("ann,s1,s1-w1,Engaged,3,Engaged\n") != std::string::npos);
  CHECK(csv.find("ann,s1,s1-w2,Tired,1,\n") != std::string::npos);
}

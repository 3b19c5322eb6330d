#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ats/aggregator.hpp"
#include "ats/course.hpp"
#include "ats/tutor.hpp"
#include "json.hpp"

namespace ats {

struct LessonReport {
  std::string session_id;
  std::string lesson_id;
  std::string title;
  StateCounts histogram;                // clip states over all stored clips
  std::optional<LessonState> state;     // latest outcome
  std::vector<LessonOutcome> history;   // every completion, oldest first
};

struct SessionTestReport {
  std::string session_id;
  std::vector<int> scores;
  bool passed = false;
};

// Analyzer results for one learner, derived only from the stored record.
struct LearnerReport {
  std::string learner_id;
  CognitiveStyle style = CognitiveStyle::Wholistic;
  std::string course_id;
  std::vector<LessonReport> lessons;  // course order, learner's style group only
  std::vector<SessionTestReport> tests;
};

LearnerReport build_learner_report(const CourseModel& course, const LearnerRecord& record);

nlohmann::json to_json(const LearnerReport& report);
// Character-cell histogram per lesson.
std::string render_text(const LearnerReport& report);
// One row per (lesson, clip state) with a nonzero count, plus the lesson state.
std::string render_csv(const LearnerReport& report);

}  // namespace ats

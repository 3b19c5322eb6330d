#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ats/course.hpp"
#include "ats/tutor.hpp"
#include "json.hpp"

namespace ats {

// Group name -> learner ids. Every learner belongs to exactly one group.
using Grouping = std::map<std::string, std::vector<std::string>>;

Grouping group_by_style(std::span<const LearnerRecord> records);

// One row of the academic-success table: a group's means for one session.
// A mean is empty when no learner in the group contributes to it.
struct SessionGroupMetrics {
  std::string session_id;
  std::string group;
  std::size_t learners = 0;
  std::optional<double> mean_watch_minutes;         // over learners with clips in the session
  std::optional<double> mean_attempts_to_pass;      // over learners who passed
  std::optional<double> mean_passing_score;         // first passing score
  std::optional<double> mean_first_attempt_score;   // over learners with >= 1 attempt
  std::optional<double> mean_second_attempt_score;  // over learners with >= 2 attempts

  bool operator==(const SessionGroupMetrics&) const = default;
};

struct CourseMetrics {
  std::vector<SessionGroupMetrics> rows;  // session order, then group name
  std::vector<std::string> warnings;
};

// Empty groups are omitted with a warning. Throws Error(Invalid) when a
// learner is in several groups, in none, or has no record.
CourseMetrics compute_course_metrics(const CourseModel& course, std::span<const LearnerRecord> records,
                                     const Grouping& grouping);

// Shortest decimal with at most two fractional digits ("2", "2.5", "83.33").
std::string format_metric(double value);

// One table per session with the five academic-success columns.
std::string render_metrics_text(const CourseMetrics& metrics);
std::string render_metrics_csv(const CourseMetrics& metrics);
nlohmann::json to_json(const CourseMetrics& metrics);
CourseMetrics course_metrics_from_json(const nlohmann::json& doc);

}  // namespace ats

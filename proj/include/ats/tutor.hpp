#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ats/aggregator.hpp"
#include "ats/clip.hpp"
#include "ats/course.hpp"
#include "ats/storage.hpp"
#include "ats/timestamp.hpp"
#include "json.hpp"

namespace ats {

struct StoredClip {
  std::string lesson_id;
  Timestamp recorded_at{};
  double duration_seconds = 0.0;
  ClipResult result;

  bool operator==(const StoredClip&) const = default;
};

struct LessonOutcome {
  LessonState state = LessonState::Neutral;
  std::string message;
  std::vector<std::string> recommended_supplementary;
  double watch_seconds = 0.0;
  int clip_count = 0;

  bool operator==(const LessonOutcome&) const = default;
};

struct TestAttempt {
  Timestamp submitted_at{};
  std::vector<int> answers;
  int score = 0;
  bool passed = false;

  bool operator==(const TestAttempt&) const = default;
};

struct LessonRecord {
  std::vector<StoredClip> clips;
  std::vector<LessonOutcome> outcomes;

  bool operator==(const LessonRecord&) const = default;
};

// Everything the knowledge base knows about one learner. Rebuilt by
// replaying the learner's event stream.
struct LearnerRecord {
  std::string learner_id;
  CognitiveStyle style = CognitiveStyle::Wholistic;
  std::string course_id;
  std::map<std::string, LessonRecord> lessons;             // by lesson id
  std::map<std::string, std::vector<TestAttempt>> tests;   // by session id, in submission order
  std::set<std::string> revealed_lessons;                  // lessons whose supplementaries are visible

  bool passed(std::string_view session_id) const;
  bool operator==(const LearnerRecord&) const = default;
};

nlohmann::json to_json(const LearnerRecord& record);
LearnerRecord learner_record_from_json(const nlohmann::json& doc);

struct GradeResult {
  int score = 0;  // percent, rounded half-up
  bool passed = false;

  bool operator==(const GradeResult&) const = default;
};

// Throws Error(Malformed) when the answer count differs from the question
// count or an index is outside [0, 3].
GradeResult grade_test(std::span<const int> answers, const Test& test);

struct RecordAck {
  bool duplicate = false;
  std::size_t log_length = 0;  // clips stored for the lesson
};

struct IngestResult {
  ClipResult result;
  bool duplicate = false;
};

struct AttemptResult {
  int score = 0;
  bool passed = false;
  bool next_session_unlocked = false;
  std::vector<std::string> revealed_supplementary;
};

using Clock = std::function<Timestamp()>;

Clock system_clock();

// The tutoring unit plus knowledge base. Per-learner mutations are
// serialized; different learners proceed in parallel.
class TutorEngine {
 public:
  TutorEngine(std::shared_ptr<Storage> storage, ThresholdConfig thresholds,
              std::shared_ptr<const FeedbackCatalog> catalog, Clock clock = system_clock());

  const ThresholdConfig& thresholds() const noexcept { return thresholds_; }
  const FeedbackCatalog& catalog() const noexcept { return *catalog_; }

  // Validates and persists (or replaces) a course definition.
  void define_course(const CourseModel& course);
  std::shared_ptr<const CourseModel> course(std::string_view course_id) const;
  std::vector<std::string> course_ids() const;

  // Idempotent for identical arguments; Error(Invalid) when the learner
  // already exists with a different style or course.
  void enroll(const std::string& learner_id, CognitiveStyle style, const std::string& course_id);
  bool is_enrolled(std::string_view learner_id) const;
  std::vector<std::string> learner_ids() const;

  // Lessons of the learner's style group. Each returned lesson lists only the
  // supplementary refs currently visible to this learner.
  std::vector<Lesson> lessons_for(std::string_view learner_id, std::string_view session_id) const;

  // Test of the learner's style group for an unlocked session.
  Test test_for(std::string_view learner_id, std::string_view session_id) const;

  RecordAck record_clip_result(std::string_view learner_id, std::string_view lesson_id, const StoredClip& clip);

  // Access check, analysis and persistence of one clip.
  IngestResult ingest_clip(const ClipObservation& clip, const AnalyzerOptions& options = {});

  LessonOutcome complete_lesson(std::string_view learner_id, std::string_view lesson_id);

  AttemptResult submit_test_attempt(std::string_view learner_id, std::string_view session_id,
                                    std::span<const int> answers);

  std::vector<std::string> accessible_sessions(std::string_view learner_id) const;

  LearnerRecord record(std::string_view learner_id) const;
  std::vector<LearnerRecord> records() const;

 private:
  struct Slot {
    mutable std::mutex mutex;
    LearnerRecord record;
  };

  Slot& slot(std::string_view learner_id) const;
  std::shared_ptr<const CourseModel> course_for(const LearnerRecord& record) const;
  void append_event(const LearnerRecord& record, const nlohmann::json& event);
  // Applies one event to an in-memory record; shared by live writes and replay.
  void apply(LearnerRecord& record, const nlohmann::json& event) const;
  void load();

  std::shared_ptr<Storage> storage_;
  ThresholdConfig thresholds_;
  std::shared_ptr<const FeedbackCatalog> catalog_;
  Clock clock_;

  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<const CourseModel>, std::less<>> courses_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> learners_;
};

// Lesson watch time from clip timestamps: first clip start to last clip end.
double watch_seconds(std::span<const StoredClip> clips);

// Accessible prefix of the course's session list for a record.
std::vector<std::string> accessible_sessions(const CourseModel& course, const LearnerRecord& record);

}  // namespace ats

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ats/aggregator.hpp"
#include "ats/clip.hpp"
#include "ats/course.hpp"
#include "ats/metrics.hpp"
#include "ats/timestamp.hpp"
#include "ats/tutor.hpp"
#include "json.hpp"

namespace ats {

// Keyframe of an affect trajectory; t runs from 0 (lesson start) to 1 (end).
struct AffectKeyframe {
  double t = 0.0;
  AffectPoint point;

  bool operator==(const AffectKeyframe&) const = default;
};

// Scripted behaviour of one synthetic learner. Per-clip lists are indexed by
// the clip's position within its lesson; the last entry repeats.
struct LearnerProfile {
  std::string learner_id;
  CognitiveStyle style = CognitiveStyle::Wholistic;
  std::string group;  // metrics group; empty means the style name
  std::uint64_t seed = 1;
  Timestamp start{};  // recording time of the first clip
  int clips_per_lesson = 3;
  double face_confidence = 0.95;

  // Fractions of the clip's frames with no qualifying face / several faces.
  std::vector<double> no_face{0.0};
  std::vector<double> multi_face{0.0};

  // Head pose of attentive frames, plus the fraction of single-face frames
  // that look away at +-away_yaw degrees.
  double yaw_mean = 0.0;
  double pitch_mean = 0.0;
  double pose_jitter = 5.0;
  std::vector<double> away_fraction{0.0};
  double away_yaw = 40.0;

  std::vector<AffectKeyframe> affect{{0.0, {0.0, 0.0}}, {1.0, {0.0, 0.0}}};
  double affect_jitter = 0.5;

  // Numbers of correct answers for successive attempts, by session id.
  std::map<std::string, std::vector<int>> test_attempts;

  std::string group_name() const;
  // Throws Error(Invalid).
  void validate() const;
  static LearnerProfile from_json(const nlohmann::json& doc);
  static LearnerProfile load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  bool operator==(const LearnerProfile&) const = default;
};

// Affect on the piecewise-linear path at lesson time t in [0, 1].
AffectPoint trajectory_at(const std::vector<AffectKeyframe>& path, double t);

// Clips for every lesson of the learner's style group, in course order, on
// the 10 s record / 10 s pause cadence at 15 fps. Deterministic per seed.
std::vector<ClipObservation> generate_synthetic(const LearnerProfile& profile, const CourseModel& course);

// Writes <out>/<learner>/profile.json and <out>/<learner>/clips/NNNN.jsonl.
void write_stream(const std::filesystem::path& out, const LearnerProfile& profile,
                  const std::vector<ClipObservation>& clips);

// Where a replay sends its requests.
class ReplayTarget {
 public:
  struct Completion {
    std::string lesson_state;
    std::string message;
    std::vector<std::string> supplementary;
  };

  virtual ~ReplayTarget() = default;
  virtual void define_course(const CourseModel& course) = 0;
  virtual void enroll(const std::string& learner_id, CognitiveStyle style, const std::string& course_id) = 0;
  virtual std::string ingest(const ClipObservation& clip) = 0;  // clip state name
  virtual Completion complete(const std::string& learner_id, const std::string& lesson_id) = 0;
  virtual std::vector<std::string> accessible_sessions(const std::string& learner_id) = 0;
  virtual AttemptResult submit(const std::string& learner_id, const std::string& session_id,
                               const std::vector<int>& answers) = 0;
  virtual CourseMetrics metrics(const std::string& course_id, const Grouping& grouping) = 0;
};

// In-process engine over memory storage with a simulated clock.
std::unique_ptr<ReplayTarget> make_engine_target(const ThresholdConfig& thresholds,
                                                 std::shared_ptr<const FeedbackCatalog> catalog);
// Running service reached over HTTP.
std::unique_ptr<ReplayTarget> make_http_target(const std::string& host, int port, const std::string& admin_token);

struct LessonRow {
  std::string learner_id;
  std::string session_id;
  std::string lesson_id;
  std::vector<std::string> clip_states;
  std::string lesson_state;
  std::string message;
  std::vector<std::string> supplementary;
};

struct TestRow {
  std::string learner_id;
  std::string session_id;
  int attempt = 0;
  int score = 0;
  bool passed = false;
  bool next_session_unlocked = false;
  std::vector<std::string> revealed;
};

struct ReplayReport {
  std::string course_id;
  std::vector<LessonRow> lessons;
  std::vector<TestRow> tests;
  CourseMetrics metrics;
  std::vector<std::string> notes;

  std::string render_text() const;
  std::string lessons_csv() const;
  std::string tests_csv() const;
  // report.txt, lessons.csv, tests.csv, metrics.csv
  void write(const std::filesystem::path& dir) const;
};

// Drives ingest -> complete -> test for every learner directory under
// stream_dir. Throws Error(Invalid) listing clip lesson ids that the course
// does not define.
ReplayReport run_replay(const std::filesystem::path& stream_dir, const CourseModel& course, ReplayTarget& target);

struct VerifySummary {
  std::size_t aggregator_trials = 0;
  std::size_t aggregator_mismatches = 0;
  std::size_t grid_points = 0;
  std::size_t grid_partition_failures = 0;
  std::size_t grid_mismatches = 0;
  std::size_t clip_trials = 0;
  std::size_t clip_mismatches = 0;
  std::size_t kernel_mismatches = 0;
  std::size_t probe_failures = 0;
  std::vector<std::string> counterexamples;  // first few of each kind

  bool passed() const noexcept;
  std::string render() const;
};

// Compares the library against the independent oracles: random aggregator
// counts, the 201x201 affect grid, random clips and explicit probes.
VerifySummary verify_against_oracle(std::size_t trials, std::uint64_t seed, const ThresholdConfig& cfg = {});

}  // namespace ats

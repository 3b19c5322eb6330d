#include "ats/tutor.hpp"

#include <algorithm>
#include <chrono>

#include "ats/error.hpp"
#include "json_util.hpp"

namespace ats {
namespace {

using nlohmann::json;
namespace ju = json_util;

constexpr std::string_view kCoursePrefix = "course/";
constexpr std::string_view kLearnerPrefix = "learner/";
constexpr std::string_view kEventPrefix = "events/";

std::string key(std::string_view prefix, std::string_view id) { return std::string(prefix) + std::string(id); }

json outcome_to_json(const LessonOutcome& o) {
  return {{"state", to_string(o.state)},
          {"message", o.message},
          {"recommended_supplementary", o.recommended_supplementary},
          {"watch_seconds", o.watch_seconds},
          {"clip_count", o.clip_count}};
}

LessonOutcome outcome_from_json(const json& doc) {
  LessonOutcome o;
  const auto state = parse_lesson_state(ju::require_string(doc, "state", "outcome"));
  if (!state) fail(ErrorKind::Malformed, "outcome.state is not a lesson state");
  o.state = *state;
  o.message = ju::require_string(doc, "message", "outcome");
  o.recommended_supplementary = ju::require_array(doc, "recommended_supplementary", "outcome").get<std::vector<std::string>>();
  o.watch_seconds = ju::require_number(doc, "watch_seconds", "outcome");
  o.clip_count = static_cast<int>(ju::require_integer(doc, "clip_count", "outcome"));
  return o;
}

json clip_to_json(const StoredClip& c) {
  return {{"lesson_id", c.lesson_id},
          {"recorded_at", format_timestamp(c.recorded_at)},
          {"duration_seconds", c.duration_seconds},
          {"result", to_json(c.result)}};
}

StoredClip stored_clip_from_json(const json& doc) {
  return {ju::require_string(doc, "lesson_id", "clip"), parse_timestamp(ju::require_string(doc, "recorded_at", "clip")),
          ju::require_number(doc, "duration_seconds", "clip"),
          clip_result_from_json(ju::require_object(doc, "result", "clip"))};
}

json attempt_to_json(const TestAttempt& a) {
  return {{"submitted_at", format_timestamp(a.submitted_at)}, {"answers", a.answers}, {"score", a.score}, {"passed", a.passed}};
}

TestAttempt attempt_from_json(const json& doc) {
  return {parse_timestamp(ju::require_string(doc, "submitted_at", "attempt")),
          ju::require_array(doc, "answers", "attempt").get<std::vector<int>>(),
          static_cast<int>(ju::require_integer(doc, "score", "attempt")),
          ju::require(doc, "passed", "attempt").get<bool>()};
}

const Session& session_of(const CourseModel& course, std::string_view session_id) {
  const auto idx = course.find_session(session_id);
  if (!idx) fail(ErrorKind::NotFound, "unknown session " + std::string(session_id));
  return course.sessions[*idx];
}

void require_accessible(const CourseModel& course, const LearnerRecord& record, std::string_view session_id) {
  const auto open = accessible_sessions(course, record);
  if (std::find(open.begin(), open.end(), session_id) == open.end()) {
    fail(ErrorKind::Forbidden, "session " + std::string(session_id) + " is locked for learner " + record.learner_id);
  }
}

// Lesson of the learner's own style group in an unlocked session.
const Lesson& accessible_lesson(const CourseModel& course, const LearnerRecord& record, std::string_view lesson_id) {
  const auto loc = course.find_lesson(lesson_id);
  if (!loc) fail(ErrorKind::NotFound, "unknown lesson " + std::string(lesson_id));
  if (loc->style != record.style) {
    fail(ErrorKind::Forbidden, "lesson " + std::string(lesson_id) + " belongs to another cognitive style group");
  }
  require_accessible(course, record, course.sessions[loc->session_index].id);
  return course.lesson_at(*loc);
}

const StoredClip* find_clip(const LearnerRecord& record, std::string_view clip_id) {
  for (const auto& [lesson_id, lesson] : record.lessons) {
    for (const auto& clip : lesson.clips) {
      if (clip.result.clip_id == clip_id) return &clip;
    }
  }
  return nullptr;
}

}  // namespace

bool LearnerRecord::passed(std::string_view session_id) const {
  const auto it = tests.find(std::string(session_id));
  if (it == tests.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [](const TestAttempt& a) { return a.passed; });
}

json to_json(const LearnerRecord& record) {
  json lessons = json::object();
  for (const auto& [id, lesson] : record.lessons) {
    json clips = json::array();
    for (const auto& c : lesson.clips) clips.push_back(clip_to_json(c));
    json outcomes = json::array();
    for (const auto& o : lesson.outcomes) outcomes.push_back(outcome_to_json(o));
    lessons[id] = {{"clips", std::move(clips)}, {"outcomes", std::move(outcomes)}};
  }
  json tests = json::object();
  for (const auto& [id, attempts] : record.tests) {
    json list = json::array();
    for (const auto& a : attempts) list.push_back(attempt_to_json(a));
    tests[id] = std::move(list);
  }
  return {{"learner_id", record.learner_id},
          {"style", to_string(record.style)},
          {"course_id", record.course_id},
          {"lessons", std::move(lessons)},
          {"tests", std::move(tests)},
          {"revealed_lessons", record.revealed_lessons}};
}

LearnerRecord learner_record_from_json(const json& doc) {
  LearnerRecord record;
  record.learner_id = ju::require_string(doc, "learner_id", "record");
  const auto style = parse_cognitive_style(ju::require_string(doc, "style", "record"));
  if (!style) fail(ErrorKind::Malformed, "record.style is not a cognitive style");
  record.style = *style;
  record.course_id = ju::require_string(doc, "course_id", "record");
  for (const auto& item : ju::require_object(doc, "lessons", "record").items()) {
    LessonRecord lesson;
    for (const auto& c : ju::require_array(item.value(), "clips", "lesson")) lesson.clips.push_back(stored_clip_from_json(c));
    for (const auto& o : ju::require_array(item.value(), "outcomes", "lesson")) {
      lesson.outcomes.push_back(outcome_from_json(o));
    }
    record.lessons.emplace(item.key(), std::move(lesson));
  }
  for (const auto& item : ju::require_object(doc, "tests", "record").items()) {
    auto& attempts = record.tests[item.key()];
    for (const auto& a : item.value()) attempts.push_back(attempt_from_json(a));
  }
  record.revealed_lessons = ju::require_array(doc, "revealed_lessons", "record").get<std::set<std::string>>();
  return record;
}

GradeResult grade_test(std::span<const int> answers, const Test& test) {
  const std::size_t total = test.questions.size();
  if (total == 0) fail(ErrorKind::Invalid, "test has no questions");
  if (answers.size() != total) {
    fail(ErrorKind::Malformed,
         "expected " + std::to_string(total) + " answers, got " + std::to_string(answers.size()));
  }
  long long correct = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (answers[i] < 0 || answers[i] > 3) {
      fail(ErrorKind::Malformed, "answer " + std::to_string(i + 1) + " must be an option index in [0, 3]");
    }
    correct += answers[i] == test.questions[i].correct ? 1 : 0;
  }
  // round(100 * correct / total), halves rounded up, in integer arithmetic
  const long long n = static_cast<long long>(total);
  const int score = static_cast<int>((200 * correct + n) / (2 * n));
  return {score, score >= test.passing_score};
}

Clock system_clock() {
  return [] { return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()); };
}

double watch_seconds(std::span<const StoredClip> clips) {
  if (clips.empty()) return 0.0;
  Timestamp first = clips.front().recorded_at;
  double last_end = 0.0;  // seconds after `first`
  for (const auto& c : clips) first = std::min(first, c.recorded_at);
  for (const auto& c : clips) {
    const double start = std::chrono::duration<double>(c.recorded_at - first).count();
    last_end = std::max(last_end, start + c.duration_seconds);
  }
  return last_end;
}

std::vector<std::string> accessible_sessions(const CourseModel& course, const LearnerRecord& record) {
  std::vector<std::string> open;
  for (const auto& session : course.sessions) {
    open.push_back(session.id);
    if (!record.passed(session.id)) break;
  }
  return open;
}

// ---------------------------------------------------------------------------

TutorEngine::TutorEngine(std::shared_ptr<Storage> storage, ThresholdConfig thresholds,
                         std::shared_ptr<const FeedbackCatalog> catalog, Clock clock)
    : storage_(std::move(storage)), thresholds_(thresholds), catalog_(std::move(catalog)), clock_(std::move(clock)) {
  thresholds_.validate();
  if (!storage_) fail(ErrorKind::Config, "tutor engine needs a storage backend");
  if (!catalog_) fail(ErrorKind::Config, "tutor engine needs a feedback catalog");
  load();
}

void TutorEngine::load() {
  for (const auto& k : storage_->keys(kCoursePrefix)) {
    auto course = std::make_shared<const CourseModel>(CourseModel::from_json(json::parse(*storage_->get(k))));
    courses_.emplace(course->id, std::move(course));
  }
  for (const auto& k : storage_->keys(kLearnerPrefix)) {
    const json profile = json::parse(*storage_->get(k));
    auto s = std::make_unique<Slot>();
    s->record.learner_id = profile.at("learner_id").get<std::string>();
    s->record.style = parse_cognitive_style(profile.at("style").get<std::string>()).value();
    s->record.course_id = profile.at("course_id").get<std::string>();
    for (const auto& line : storage_->read_stream(key(kEventPrefix, s->record.learner_id))) {
      apply(s->record, json::parse(line));
    }
    learners_.emplace(s->record.learner_id, std::move(s));
  }
}

void TutorEngine::define_course(const CourseModel& course) {
  course.validate();
  std::unique_lock lock(registry_mutex_);
  const auto existing = courses_.find(course.id);
  if (existing != courses_.end()) {
    if (*existing->second == course) return;
    const bool has_learners = std::any_of(learners_.begin(), learners_.end(),
                                          [&](const auto& kv) { return kv.second->record.course_id == course.id; });
    if (has_learners) fail(ErrorKind::Invalid, "course " + course.id + " already has enrolled learners");
  }
  storage_->put(key(kCoursePrefix, course.id), course.to_json().dump());
  courses_.insert_or_assign(course.id, std::make_shared<const CourseModel>(course));
}

std::shared_ptr<const CourseModel> TutorEngine::course(std::string_view course_id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = courses_.find(course_id);
  if (it == courses_.end()) fail(ErrorKind::NotFound, "unknown course " + std::string(course_id));
  return it->second;
}

std::vector<std::string> TutorEngine::course_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, c] : courses_) ids.push_back(id);
  return ids;
}

void TutorEngine::enroll(const std::string& learner_id, CognitiveStyle style, const std::string& course_id) {
  if (learner_id.empty()) fail(ErrorKind::Malformed, "learner id must be non-empty");
  std::unique_lock lock(registry_mutex_);
  if (!courses_.contains(course_id)) fail(ErrorKind::NotFound, "unknown course " + course_id);
  const auto it = learners_.find(learner_id);
  if (it != learners_.end()) {
    const auto& r = it->second->record;
    if (r.style == style && r.course_id == course_id) return;
    fail(ErrorKind::Invalid, "learner " + learner_id + " is already enrolled with a different style or course");
  }
  const json profile = {{"learner_id", learner_id}, {"style", to_string(style)}, {"course_id", course_id}};
  storage_->put(key(kLearnerPrefix, learner_id), profile.dump());
  auto s = std::make_unique<Slot>();
  s->record.learner_id = learner_id;
  s->record.style = style;
  s->record.course_id = course_id;
  learners_.emplace(learner_id, std::move(s));
}

bool TutorEngine::is_enrolled(std::string_view learner_id) const {
  std::shared_lock lock(registry_mutex_);
  return learners_.find(learner_id) != learners_.end();
}

std::vector<std::string> TutorEngine::learner_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : learners_) ids.push_back(id);
  return ids;
}

TutorEngine::Slot& TutorEngine::slot(std::string_view learner_id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = learners_.find(learner_id);
  if (it == learners_.end()) fail(ErrorKind::NotFound, "unknown learner " + std::string(learner_id));
  return *it->second;
}

std::shared_ptr<const CourseModel> TutorEngine::course_for(const LearnerRecord& record) const {
  return course(record.course_id);
}

void TutorEngine::append_event(const LearnerRecord& record, const json& event) {
  storage_->append(key(kEventPrefix, record.learner_id), event.dump());
}

void TutorEngine::apply(LearnerRecord& record, const json& event) const {
  const std::string type = event.at("type").get<std::string>();
  if (type == "clip") {
    StoredClip clip = stored_clip_from_json(event.at("clip"));
    record.lessons[clip.lesson_id].clips.push_back(std::move(clip));
  } else if (type == "outcome") {
    const std::string lesson_id = event.at("lesson_id").get<std::string>();
    LessonOutcome outcome = outcome_from_json(event.at("outcome"));
    if (!outcome.recommended_supplementary.empty()) record.revealed_lessons.insert(lesson_id);
    record.lessons[lesson_id].outcomes.push_back(std::move(outcome));
  } else if (type == "attempt") {
    record.tests[event.at("session_id").get<std::string>()].push_back(attempt_from_json(event.at("attempt")));
    for (const auto& id : event.at("reveal")) record.revealed_lessons.insert(id.get<std::string>());
  } else {
    fail(ErrorKind::Internal, "unknown event type " + type);
  }
}

std::vector<Lesson> TutorEngine::lessons_for(std::string_view learner_id, std::string_view session_id) const {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  const Session& session = session_of(*course, session_id);
  require_accessible(*course, s.record, session_id);
  std::vector<Lesson> lessons = session.track(s.record.style).lessons;
  for (auto& lesson : lessons) {
    if (!s.record.revealed_lessons.contains(lesson.id)) lesson.supplementary.clear();
  }
  return lessons;
}

Test TutorEngine::test_for(std::string_view learner_id, std::string_view session_id) const {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  const Session& session = session_of(*course, session_id);
  require_accessible(*course, s.record, session_id);
  return session.track(s.record.style).test;
}

RecordAck TutorEngine::record_clip_result(std::string_view learner_id, std::string_view lesson_id,
                                          const StoredClip& clip) {
  if (clip.lesson_id != lesson_id) fail(ErrorKind::Malformed, "clip lesson does not match the target lesson");
  if (clip.result.clip_id.empty()) fail(ErrorKind::Malformed, "clip id must be non-empty");
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  accessible_lesson(*course, s.record, lesson_id);

  if (const StoredClip* existing = find_clip(s.record, clip.result.clip_id)) {
    if (existing->lesson_id != lesson_id) {
      fail(ErrorKind::Invalid, "clip id " + clip.result.clip_id + " was already used for lesson " + existing->lesson_id);
    }
    return {true, s.record.lessons[std::string(lesson_id)].clips.size()};
  }
  const json event = {{"type", "clip"}, {"clip", clip_to_json(clip)}};
  append_event(s.record, event);
  apply(s.record, event);
  return {false, s.record.lessons[std::string(lesson_id)].clips.size()};
}

IngestResult TutorEngine::ingest_clip(const ClipObservation& clip, const AnalyzerOptions& options) {
  Slot& s = slot(clip.learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  accessible_lesson(*course, s.record, clip.lesson_id);

  if (const StoredClip* existing = find_clip(s.record, clip.clip_id)) {
    if (existing->lesson_id != clip.lesson_id) {
      fail(ErrorKind::Invalid, "clip id " + clip.clip_id + " was already used for lesson " + existing->lesson_id);
    }
    return {existing->result, true};
  }

  StoredClip stored{clip.lesson_id, clip.recorded_at, clip.duration_seconds(), analyze_clip(clip, thresholds_, options)};
  const json event = {{"type", "clip"}, {"clip", clip_to_json(stored)}};
  append_event(s.record, event);
  apply(s.record, event);
  return {std::move(stored.result), false};
}

LessonOutcome TutorEngine::complete_lesson(std::string_view learner_id, std::string_view lesson_id) {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  const Lesson& lesson = accessible_lesson(*course, s.record, lesson_id);

  const auto it = s.record.lessons.find(std::string(lesson_id));
  if (it == s.record.lessons.end() || it->second.clips.empty()) {
    fail(ErrorKind::NoData, "no clips recorded for lesson " + std::string(lesson_id));
  }
  const auto& clips = it->second.clips;

  StateCounts counts;
  for (const auto& c : clips) ++counts[c.result.state];
  const LessonState state = aggregate(counts, thresholds_);
  const Feedback feedback = select_feedback(state, !lesson.supplementary.empty(), *catalog_);

  LessonOutcome outcome;
  outcome.state = state;
  outcome.message = feedback.message;
  if (feedback.recommend_supplementary) outcome.recommended_supplementary = lesson.supplementary;
  outcome.watch_seconds = watch_seconds(clips);
  outcome.clip_count = static_cast<int>(clips.size());

  const json event = {{"type", "outcome"}, {"lesson_id", lesson_id}, {"outcome", outcome_to_json(outcome)}};
  append_event(s.record, event);
  apply(s.record, event);
  return outcome;
}

AttemptResult TutorEngine::submit_test_attempt(std::string_view learner_id, std::string_view session_id,
                                               std::span<const int> answers) {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  const auto course = course_for(s.record);
  const Session& session = session_of(*course, session_id);
  require_accessible(*course, s.record, session_id);
  const StyleTrack& track = session.track(s.record.style);

  const GradeResult grade = grade_test(answers, track.test);
  TestAttempt attempt{clock_(), std::vector<int>(answers.begin(), answers.end()), grade.score, grade.passed};

  AttemptResult result;
  result.score = grade.score;
  result.passed = grade.passed;
  json reveal = json::array();
  if (!grade.passed) {
    for (const auto& lesson : track.lessons) {
      if (lesson.supplementary.empty()) continue;
      reveal.push_back(lesson.id);
      result.revealed_supplementary.insert(result.revealed_supplementary.end(), lesson.supplementary.begin(),
                                           lesson.supplementary.end());
    }
  }
  const json event = {{"type", "attempt"}, {"session_id", session_id}, {"attempt", attempt_to_json(attempt)},
                      {"reveal", std::move(reveal)}};
  append_event(s.record, event);
  apply(s.record, event);

  const auto idx = course->find_session(session_id);
  result.next_session_unlocked = grade.passed && *idx + 1 < course->sessions.size();
  return result;
}

std::vector<std::string> TutorEngine::accessible_sessions(std::string_view learner_id) const {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  return ats::accessible_sessions(*course_for(s.record), s.record);
}

LearnerRecord TutorEngine::record(std::string_view learner_id) const {
  Slot& s = slot(learner_id);
  std::lock_guard lock(s.mutex);
  return s.record;
}

std::vector<LearnerRecord> TutorEngine::records() const {
  std::vector<LearnerRecord> out;
  for (const auto& id : learner_ids()) out.push_back(record(id));
  return out;
}

}  // namespace ats

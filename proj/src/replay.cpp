#include "ats/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ats/error.hpp"
#include "httplib.h"
#include "json_util.hpp"
#include "oracle.hpp"

namespace ats {
namespace {

using nlohmann::json;
namespace ju = json_util;

constexpr double kFps = 15.0;
constexpr int kFramesPerClip = 150;
constexpr std::chrono::seconds kClipCadence{20};  // 10 s recording, 10 s pause

// Bit-level mapping from the 64-bit engine so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double per_clip(const std::vector<double>& values, int clip_index) {
  return values[std::min<std::size_t>(static_cast<std::size_t>(clip_index), values.size() - 1)];
}

std::vector<double> fraction_list(const json& doc, const char* key, const std::vector<double>& fallback) {
  if (!ju::has(doc, key)) return fallback;
  const json& v = doc.at(key);
  if (v.is_number()) return {v.get<double>()};
  std::vector<double> out;
  for (const auto& x : ju::require_array(doc, key, "profile")) {
    if (!x.is_number()) fail(ErrorKind::Malformed, std::string("profile.") + key + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

double number_or(const json& doc, const char* key, double fallback) {
  return ju::has(doc, key) ? ju::require_number(doc, key, "profile") : fallback;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
  out << text;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

ErrorKind kind_from_code(const std::string& code) {
  for (ErrorKind k : {ErrorKind::Malformed, ErrorKind::Invalid, ErrorKind::NotFound, ErrorKind::Forbidden,
                      ErrorKind::Unauthorized, ErrorKind::NoData, ErrorKind::Config}) {
    if (to_string(k) == code) return k;
  }
  return ErrorKind::Internal;
}

// ---------------------------------------------------------------------------

class EngineTarget final : public ReplayTarget {
 public:
  EngineTarget(const ThresholdConfig& thresholds, std::shared_ptr<const FeedbackCatalog> catalog)
      : now_(std::make_shared<Timestamp>()),
        engine_(std::make_shared<MemoryStorage>(), thresholds, std::move(catalog), [now = now_] { return *now; }) {}

  void define_course(const CourseModel& course) override { engine_.define_course(course); }
  void enroll(const std::string& learner_id, CognitiveStyle style, const std::string& course_id) override {
    engine_.enroll(learner_id, style, course_id);
  }
  std::string ingest(const ClipObservation& clip) override {
    *now_ = clip.recorded_at + std::chrono::milliseconds(static_cast<long long>(clip.duration_seconds() * 1000));
    return std::string(to_string(engine_.ingest_clip(clip).result.state));
  }
  Completion complete(const std::string& learner_id, const std::string& lesson_id) override {
    const LessonOutcome o = engine_.complete_lesson(learner_id, lesson_id);
    return {std::string(to_string(o.state)), o.message, o.recommended_supplementary};
  }
  std::vector<std::string> accessible_sessions(const std::string& learner_id) override {
    return engine_.accessible_sessions(learner_id);
  }
  AttemptResult submit(const std::string& learner_id, const std::string& session_id,
                       const std::vector<int>& answers) override {
    return engine_.submit_test_attempt(learner_id, session_id, answers);
  }
  CourseMetrics metrics(const std::string& course_id, const Grouping& grouping) override {
    std::vector<LearnerRecord> records;
    for (auto& r : engine_.records()) {
      if (r.course_id == course_id) records.push_back(std::move(r));
    }
    return compute_course_metrics(*engine_.course(course_id), records, grouping);
  }

 private:
  std::shared_ptr<Timestamp> now_;
  TutorEngine engine_;
};

class HttpTarget final : public ReplayTarget {
 public:
  HttpTarget(const std::string& host, int port, std::string admin_token)
      : client_(host, port), admin_token_(std::move(admin_token)) {
    client_.set_keep_alive(true);
    client_.set_read_timeout(30, 0);
  }

  void define_course(const CourseModel& course) override {
    call("POST", "/api/admin/courses", admin_token_, course.to_json().dump());
  }
  void enroll(const std::string& learner_id, CognitiveStyle style, const std::string& course_id) override {
    const json body = {{"learner_id", learner_id}, {"style", to_string(style)}, {"course_id", course_id}};
    tokens_[learner_id] = call("POST", "/api/admin/learners", admin_token_, body.dump()).at("token");
  }
  std::string ingest(const ClipObservation& clip) override {
    return call("POST", "/api/clips", token(clip.learner_id), to_json(clip).dump()).at("clip_state");
  }
  Completion complete(const std::string& learner_id, const std::string& lesson_id) override {
    const json r = call("POST", "/api/lessons/" + lesson_id + "/complete", token(learner_id), "{}");
    return {r.at("lesson_state"), r.at("message"), r.at("supplementary").get<std::vector<std::string>>()};
  }
  std::vector<std::string> accessible_sessions(const std::string& learner_id) override {
    return call("GET", "/api/sessions", token(learner_id), "").at("sessions").get<std::vector<std::string>>();
  }
  AttemptResult submit(const std::string& learner_id, const std::string& session_id,
                       const std::vector<int>& answers) override {
    const json r =
        call("POST", "/api/sessions/" + session_id + "/test", token(learner_id), json{{"answers", answers}}.dump());
    AttemptResult out;
    out.score = r.at("score");
    out.passed = r.at("passed");
    out.next_session_unlocked = r.at("next_session_unlocked");
    out.revealed_supplementary = r.at("revealed_supplementary").get<std::vector<std::string>>();
    return out;
  }
  CourseMetrics metrics(const std::string& course_id, const Grouping& grouping) override {
    const json body = {{"course_id", course_id}, {"grouping", grouping}};
    return course_metrics_from_json(call("POST", "/api/admin/metrics", admin_token_, body.dump()).at("metrics"));
  }

 private:
  const std::string& token(const std::string& learner_id) const {
    const auto it = tokens_.find(learner_id);
    if (it == tokens_.end()) fail(ErrorKind::Internal, "learner " + learner_id + " was not enrolled by this replay");
    return it->second;
  }

  json call(const std::string& method, const std::string& path, const std::string& bearer, const std::string& body) {
    const httplib::Headers headers = {{"Authorization", "Bearer " + bearer}};
    const auto res = method == "GET" ? client_.Get(path, headers) : client_.Post(path, headers, body, "application/json");
    if (!res) fail(ErrorKind::Internal, method + " " + path + ": " + httplib::to_string(res.error()));
    const json doc = ju::parse(res->body, "response", ErrorKind::Internal);
    if (!doc.value("ok", false)) {
      const json& err = doc.at("error");
      fail(kind_from_code(err.value("code", "internal")), err.value("message", "request failed"));
    }
    return doc;
  }

  httplib::Client client_;
  std::string admin_token_;
  std::map<std::string, std::string> tokens_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string LearnerProfile::group_name() const { return group.empty() ? std::string(to_string(style)) : group; }

void LearnerProfile::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Invalid, "profile: " + what);
  };
  check(!learner_id.empty(), "learner_id must be nonempty");
  check(clips_per_lesson >= 1, "clips_per_lesson must be at least 1");
  check(face_confidence >= 0.0 && face_confidence <= 1.0, "face_confidence must lie in [0, 1]");
  for (const auto* list : {&no_face, &multi_face, &away_fraction}) {
    check(!list->empty(), "per-clip fraction lists must be nonempty");
    for (double p : *list) check(std::isfinite(p) && p >= 0.0 && p <= 1.0, "fractions must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < std::max(no_face.size(), multi_face.size()); ++i) {
    check(per_clip(no_face, static_cast<int>(i)) + per_clip(multi_face, static_cast<int>(i)) <= 1.0,
          "no_face + multi_face must not exceed 1");
  }
  check(std::isfinite(yaw_mean) && std::isfinite(pitch_mean) && std::isfinite(away_yaw), "pose values must be finite");
  check(std::isfinite(pose_jitter) && pose_jitter >= 0.0, "pose_jitter must be non-negative");
  check(std::isfinite(affect_jitter) && affect_jitter >= 0.0, "affect_jitter must be non-negative");
  check(!affect.empty(), "affect trajectory must have a keyframe");
  double last_t = -1.0;
  for (const auto& k : affect) {
    check(k.t >= 0.0 && k.t <= 1.0 && k.t > last_t, "trajectory times must increase within [0, 1]");
    check(std::abs(k.point.valence) <= 10.0 && std::abs(k.point.arousal) <= 10.0,
          "trajectory must stay within [-10, 10]^2");
    last_t = k.t;
  }
  for (const auto& [session, attempts] : test_attempts) {
    for (int n : attempts) check(n >= 0, "test attempt scores must be non-negative");
  }
}

LearnerProfile LearnerProfile::from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::Malformed, "profile must be an object");
  LearnerProfile p;
  p.learner_id = ju::require_string(doc, "learner_id", "profile");
  const std::string style = ju::require_string(doc, "style", "profile");
  const auto parsed = parse_cognitive_style(style);
  if (!parsed) fail(ErrorKind::Malformed, "profile.style: unknown cognitive style '" + style + "'");
  p.style = *parsed;
  if (ju::has(doc, "group")) p.group = ju::require_string(doc, "group", "profile");
  if (ju::has(doc, "seed")) {
    if (!doc.at("seed").is_number_unsigned()) fail(ErrorKind::Malformed, "profile.seed must be a non-negative integer");
    p.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (ju::has(doc, "start")) p.start = parse_timestamp(ju::require_string(doc, "start", "profile"));
  if (ju::has(doc, "clips_per_lesson")) {
    p.clips_per_lesson = static_cast<int>(ju::require_integer(doc, "clips_per_lesson", "profile"));
  }
  p.face_confidence = number_or(doc, "face_confidence", p.face_confidence);
  if (ju::has(doc, "presence")) {
    const json& pr = doc.at("presence");
    p.no_face = fraction_list(pr, "no_face", p.no_face);
    p.multi_face = fraction_list(pr, "multi_face", p.multi_face);
  }
  if (ju::has(doc, "focus")) {
    const json& f = doc.at("focus");
    p.yaw_mean = number_or(f, "yaw_mean", p.yaw_mean);
    p.pitch_mean = number_or(f, "pitch_mean", p.pitch_mean);
    p.pose_jitter = number_or(f, "jitter", p.pose_jitter);
    p.away_fraction = fraction_list(f, "away_fraction", p.away_fraction);
    p.away_yaw = number_or(f, "away_yaw", p.away_yaw);
  }
  if (ju::has(doc, "affect")) {
    const json& a = doc.at("affect");
    p.affect.clear();
    for (const auto& k : ju::require_array(a, "path", "profile.affect")) {
      if (!k.is_array() || k.size() != 3 || !k[0].is_number() || !k[1].is_number() || !k[2].is_number()) {
        fail(ErrorKind::Malformed, "profile.affect.path entries must be [t, valence, arousal]");
      }
      p.affect.push_back({k[0].get<double>(), {k[1].get<double>(), k[2].get<double>()}});
    }
    p.affect_jitter = number_or(a, "jitter", p.affect_jitter);
  }
  if (ju::has(doc, "tests")) {
    for (const auto& item : ju::require_object(doc, "tests", "profile").items()) {
      if (!item.value().is_array()) fail(ErrorKind::Malformed, "profile.tests values must be arrays");
      for (const auto& n : item.value()) {
        if (!n.is_number_integer()) fail(ErrorKind::Malformed, "profile.tests entries must be integers");
        p.test_attempts[item.key()].push_back(n.get<int>());
      }
    }
  }
  p.validate();
  return p;
}

LearnerProfile LearnerProfile::load(const std::filesystem::path& path) {
  return from_json(ju::parse(read_file(path), path.string()));
}

json LearnerProfile::to_json() const {
  json path = json::array();
  for (const auto& k : affect) path.push_back({k.t, k.point.valence, k.point.arousal});
  json doc = {{"learner_id", learner_id},
              {"style", to_string(style)},
              {"seed", seed},
              {"start", format_timestamp(start)},
              {"clips_per_lesson", clips_per_lesson},
              {"face_confidence", face_confidence},
              {"presence", {{"no_face", no_face}, {"multi_face", multi_face}}},
              {"focus",
               {{"yaw_mean", yaw_mean},
                {"pitch_mean", pitch_mean},
                {"jitter", pose_jitter},
                {"away_fraction", away_fraction},
                {"away_yaw", away_yaw}}},
              {"affect", {{"path", path}, {"jitter", affect_jitter}}},
              {"tests", test_attempts}};
  if (!group.empty()) doc["group"] = group;
  return doc;
}

AffectPoint trajectory_at(const std::vector<AffectKeyframe>& path, double t) {
  if (path.empty()) fail(ErrorKind::Invalid, "empty affect trajectory");
  if (t <= path.front().t) return path.front().point;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (t <= path[i].t) {
      const auto& a = path[i - 1];
      const auto& b = path[i];
      const double u = (t - a.t) / (b.t - a.t);
      return {a.point.valence + u * (b.point.valence - a.point.valence),
              a.point.arousal + u * (b.point.arousal - a.point.arousal)};
    }
  }
  return path.back().point;
}

std::vector<ClipObservation> generate_synthetic(const LearnerProfile& profile, const CourseModel& course) {
  profile.validate();
  std::vector<ClipObservation> clips;
  std::size_t global = 0;
  for (const auto& session : course.sessions) {
    for (const auto& lesson : session.track(profile.style).lessons) {
      for (int k = 0; k < profile.clips_per_lesson; ++k, ++global) {
        Rng rng(mix(profile.seed ^ mix(global)));
        ClipObservation clip;
        clip.clip_id = profile.learner_id + "-" + lesson.id + "-c" + std::to_string(k + 1);
        clip.learner_id = profile.learner_id;
        clip.lesson_id = lesson.id;
        clip.recorded_at = profile.start + kClipCadence * static_cast<long long>(global);
        clip.fps = kFps;

        // Exact per-clip counts of each frame role, placed by a seeded shuffle.
        const int no_face = static_cast<int>(std::lround(per_clip(profile.no_face, k) * kFramesPerClip));
        const int multi = std::min(kFramesPerClip - no_face,
                                   static_cast<int>(std::lround(per_clip(profile.multi_face, k) * kFramesPerClip)));
        const int single = kFramesPerClip - no_face - multi;
        const int away = static_cast<int>(std::lround(per_clip(profile.away_fraction, k) * single));
        enum Role { kNoFace, kMulti, kAway, kFocused };
        std::vector<Role> roles;
        roles.insert(roles.end(), no_face, kNoFace);
        roles.insert(roles.end(), multi, kMulti);
        roles.insert(roles.end(), away, kAway);
        roles.insert(roles.end(), single - away, kFocused);
        for (std::size_t i = roles.size(); i > 1; --i) std::swap(roles[i - 1], roles[rng.below(i)]);

        const auto face = [&](double conf) {
          const double x = rng.uniform(0.3, 0.4), y = rng.uniform(0.2, 0.3);
          return FaceDetection{{x, y, 0.25, 0.35}, conf};
        };
        for (int f = 0; f < kFramesPerClip; ++f) {
          FramePrediction frame;
          frame.frame_index = f;
          switch (roles[static_cast<std::size_t>(f)]) {
            case kNoFace:
              // Either nothing detected or only a weak detection.
              if (rng.uniform() < 0.5) frame.faces.push_back(face(rng.uniform(0.2, 0.6)));
              break;
            case kMulti:
              frame.faces.push_back(face(profile.face_confidence));
              frame.faces.push_back(face(rng.uniform(0.75, 0.99)));
              break;
            case kAway:
            case kFocused: {
              frame.faces.push_back(face(profile.face_confidence));
              const double t = (k + static_cast<double>(f) / kFramesPerClip) / profile.clips_per_lesson;
              const AffectPoint base = trajectory_at(profile.affect, t);
              const double j = profile.affect_jitter;
              frame.affect = AffectPoint{std::clamp(base.valence + rng.uniform(-j, j), -10.0, 10.0),
                                         std::clamp(base.arousal + rng.uniform(-j, j), -10.0, 10.0)};
              const double pj = profile.pose_jitter;
              double yaw = profile.yaw_mean + rng.uniform(-pj, pj);
              if (roles[static_cast<std::size_t>(f)] == kAway) yaw = rng.uniform() < 0.5 ? profile.away_yaw : -profile.away_yaw;
              frame.pose = HeadPose{std::clamp(yaw, -180.0, 180.0),
                                    std::clamp(profile.pitch_mean + rng.uniform(-pj, pj), -180.0, 180.0),
                                    rng.uniform(-3.0, 3.0)};
              break;
            }
          }
          clip.frames.push_back(std::move(frame));
        }
        clips.push_back(std::move(clip));
      }
    }
  }
  return clips;
}

void write_stream(const std::filesystem::path& out, const LearnerProfile& profile,
                  const std::vector<ClipObservation>& clips) {
  const auto dir = out / profile.learner_id;
  std::filesystem::create_directories(dir / "clips");
  write_file(dir / "profile.json", profile.to_json().dump(2) + "\n");
  for (std::size_t i = 0; i < clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.jsonl", i + 1);
    write_file(dir / "clips" / name, to_jsonl(clips[i]));
  }
}

std::unique_ptr<ReplayTarget> make_engine_target(const ThresholdConfig& thresholds,
                                                 std::shared_ptr<const FeedbackCatalog> catalog) {
  return std::make_unique<EngineTarget>(thresholds, std::move(catalog));
}

std::unique_ptr<ReplayTarget> make_http_target(const std::string& host, int port, const std::string& admin_token) {
  return std::make_unique<HttpTarget>(host, port, admin_token);
}

// ---------------------------------------------------------------------------

ReplayReport run_replay(const std::filesystem::path& stream_dir, const CourseModel& course, ReplayTarget& target) {
  course.validate();
  struct Learner {
    LearnerProfile profile;
    std::vector<ClipObservation> clips;
  };
  std::vector<Learner> learners;
  if (std::filesystem::exists(stream_dir)) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(stream_dir)) {
      if (e.is_directory() && std::filesystem::exists(e.path() / "profile.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      Learner l{LearnerProfile::load(d / "profile.json"), {}};
      std::vector<std::filesystem::path> files;
      if (std::filesystem::exists(d / "clips")) {
        for (const auto& e : std::filesystem::directory_iterator(d / "clips")) {
          const auto ext = e.path().extension();
          if (ext == ".jsonl" || ext == ".json") files.push_back(e.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) l.clips.push_back(load_clip(f));
      learners.push_back(std::move(l));
    }
  }

  std::set<std::string> unresolved;
  for (const auto& l : learners) {
    for (const auto& c : l.clips) {
      if (!course.find_lesson(c.lesson_id)) unresolved.insert(c.lesson_id);
    }
  }
  if (!unresolved.empty()) {
    fail(ErrorKind::Invalid, "streams reference lessons missing from course " + course.id + ": " +
                                 join({unresolved.begin(), unresolved.end()}, ", "));
  }

  ReplayReport report;
  report.course_id = course.id;
  target.define_course(course);

  Grouping grouping;
  for (const auto& l : learners) {
    const auto& p = l.profile;
    target.enroll(p.learner_id, p.style, course.id);
    grouping[p.group_name()].push_back(p.learner_id);

    std::map<std::string, std::vector<const ClipObservation*>> by_lesson;
    for (const auto& c : l.clips) by_lesson[c.lesson_id].push_back(&c);
    for (auto& [id, list] : by_lesson) {
      std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
        return std::tie(a->recorded_at, a->clip_id) < std::tie(b->recorded_at, b->clip_id);
      });
    }

    for (const auto& session : course.sessions) {
      const auto open = target.accessible_sessions(p.learner_id);
      if (std::find(open.begin(), open.end(), session.id) == open.end()) {
        report.notes.push_back(p.learner_id + ": session " + session.id + " is locked; replay stopped");
        break;
      }
      const StyleTrack& track = session.track(p.style);
      for (const auto& lesson : track.lessons) {
        const auto it = by_lesson.find(lesson.id);
        if (it == by_lesson.end()) continue;
        LessonRow row{p.learner_id, session.id, lesson.id, {}, {}, {}, {}};
        for (const auto* clip : it->second) row.clip_states.push_back(target.ingest(*clip));
        auto done = target.complete(p.learner_id, lesson.id);
        row.lesson_state = std::move(done.lesson_state);
        row.message = std::move(done.message);
        row.supplementary = std::move(done.supplementary);
        report.lessons.push_back(std::move(row));
      }
      const auto attempts = p.test_attempts.find(session.id);
      if (attempts == p.test_attempts.end()) continue;
      int n = 0;
      for (int correct : attempts->second) {
        std::vector<int> answers;
        for (std::size_t q = 0; q < track.test.questions.size(); ++q) {
          const int key = track.test.questions[q].correct;
          answers.push_back(static_cast<int>(q) < correct ? key : (key + 1) % 4);
        }
        const AttemptResult r = target.submit(p.learner_id, session.id, answers);
        report.tests.push_back(
            {p.learner_id, session.id, ++n, r.score, r.passed, r.next_session_unlocked, r.revealed_supplementary});
        if (r.passed) break;
      }
    }
  }
  if (!learners.empty()) report.metrics = target.metrics(course.id, grouping);
  return report;
}

std::string ReplayReport::render_text() const {
  // Lessons then tests for each (learner, session), in first-seen order.
  std::vector<std::string> learners;
  std::map<std::string, std::vector<std::string>> sessions;
  auto see = [&](const std::string& l, const std::string& s) {
    if (std::find(learners.begin(), learners.end(), l) == learners.end()) learners.push_back(l);
    auto& list = sessions[l];
    if (std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
  };
  for (const auto& r : lessons) see(r.learner_id, r.session_id);
  for (const auto& t : tests) see(t.learner_id, t.session_id);
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& l : learners) {
    for (const auto& s : sessions[l]) keys.emplace_back(l, s);
  }

  std::ostringstream out;
  out << "Replay report for course " << course_id << '\n';
  std::string learner;
  for (const auto& [l, s] : keys) {
    if (l != learner) {
      out << "\nLearner " << l << '\n';
      learner = l;
    }
    out << "  Session " << s << '\n';
    for (const auto& r : lessons) {
      if (r.learner_id != l || r.session_id != s) continue;
      out << "    " << r.lesson_id << ": " << join(r.clip_states, " ") << " -> " << r.lesson_state << '\n';
      out << "      feedback: " << r.message << '\n';
      if (!r.supplementary.empty()) out << "      supplementary: " << join(r.supplementary, ", ") << '\n';
    }
    for (const auto& t : tests) {
      if (t.learner_id != l || t.session_id != s) continue;
      out << "    test attempt " << t.attempt << ": " << t.score << "% " << (t.passed ? "passed" : "failed");
      if (t.next_session_unlocked) out << ", next session unlocked";
      out << '\n';
      if (!t.revealed.empty()) out << "      revealed: " << join(t.revealed, ", ") << '\n';
    }
  }
  if (!notes.empty()) {
    out << "\nNotes\n";
    for (const auto& n : notes) out << "  " << n << '\n';
  }
  out << "\nMetrics\n" << render_metrics_text(metrics);
  return out.str();
}

std::string ReplayReport::lessons_csv() const {
  std::ostringstream out;
  out << "learner,session,lesson,clip_states,lesson_state,message,supplementary\n";
  for (const auto& r : lessons) {
    out << csv_field(r.learner_id) << ',' << csv_field(r.session_id) << ',' << csv_field(r.lesson_id) << ','
        << csv_field(join(r.clip_states, " ")) << ',' << r.lesson_state << ',' << csv_field(r.message) << ','
        << csv_field(join(r.supplementary, " ")) << '\n';
  }
  return out.str();
}

std::string ReplayReport::tests_csv() const {
  std::ostringstream out;
  out << "learner,session,attempt,score,passed,next_session_unlocked,revealed\n";
  for (const auto& t : tests) {
    out << csv_field(t.learner_id) << ',' << csv_field(t.session_id) << ',' << t.attempt << ',' << t.score << ','
        << (t.passed ? "true" : "false") << ',' << (t.next_session_unlocked ? "true" : "false") << ','
        << csv_field(join(t.revealed, " ")) << '\n';
  }
  return out.str();
}

void ReplayReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.txt", render_text());
  write_file(dir / "lessons.csv", lessons_csv());
  write_file(dir / "tests.csv", tests_csv());
  write_file(dir / "metrics.csv", render_metrics_csv(metrics));
}

// ---------------------------------------------------------------------------

bool VerifySummary::passed() const noexcept {
  return aggregator_mismatches == 0 && grid_partition_failures == 0 && grid_mismatches == 0 && clip_mismatches == 0 &&
         kernel_mismatches == 0 && probe_failures == 0;
}

std::string VerifySummary::render() const {
  std::ostringstream out;
  out << "aggregator: " << aggregator_trials << " trials, " << aggregator_mismatches << " mismatches\n"
      << "affect grid: " << grid_points << " points, " << grid_partition_failures << " partition failures, "
      << grid_mismatches << " mismatches\n"
      << "clip analysis: " << clip_trials << " clips, " << clip_mismatches << " mismatches\n"
      << "kernels: " << kernel_mismatches << " scalar/SIMD mismatches\n"
      << "probes: " << probe_failures << " failures\n";
  for (const auto& c : counterexamples) out << "counterexample: " << c << '\n';
  out << (passed() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

VerifySummary verify_against_oracle(std::size_t trials, std::uint64_t seed, const ThresholdConfig& cfg) {
  if (trials < 1) fail(ErrorKind::Invalid, "trials must be at least 1");
  VerifySummary s;
  Rng rng(seed);
  auto note = [&](const std::string& what) {
    if (s.counterexamples.size() < 8) s.counterexamples.push_back(what);
  };

  const auto to_oracle = [](const StateCounts& c) {
    return oracle::Counts{c[ClipState::NoFace],  c[ClipState::MultipleFaces], c[ClipState::Unfocused],
                          c[ClipState::Engaged], c[ClipState::Tired],         c[ClipState::Confused],
                          c[ClipState::Disengaged], c[ClipState::Neutral]};
  };
  const auto describe = [](const StateCounts& c) {
    std::string out = "{";
    for (ClipState st : kClipStates) {
      if (c[st] == 0) continue;
      if (out.size() > 1) out += ", ";
      out += std::string(to_string(st)) + ": " + std::to_string(c[st]);
    }
    return out + "}";
  };

  for (std::size_t i = 0; i < trials; ++i) {
    StateCounts c;
    for (ClipState st : kClipStates) c[st] = static_cast<int>(rng.below(7));
    ++s.aggregator_trials;
    const std::string lib(to_string(aggregate(c, cfg)));
    const std::string ref = oracle::brute_force_lesson_state(to_oracle(c), cfg.aggregator);
    if (lib != ref) {
      ++s.aggregator_mismatches;
      note("aggregate" + describe(c) + " = " + lib + ", oracle " + ref);
    }
  }

  std::vector<double> vs, as;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) {
      const double v = (i - 100) / 10.0, a = (j - 100) / 10.0;
      vs.push_back(v);
      as.push_back(a);
      ++s.grid_points;
      const std::string ref = oracle::region_name(v, a, cfg);
      if (ref.empty()) {
        ++s.grid_partition_failures;
        note("grid point (" + std::to_string(v) + ", " + std::to_string(a) + ") is not in exactly one region");
        continue;
      }
      const std::string lib(to_string(classify_emotion({v, a}, cfg)));
      if (lib != ref) {
        ++s.grid_mismatches;
        note("classify(" + std::to_string(v) + ", " + std::to_string(a) + ") = " + lib + ", oracle " + ref);
      }
    }
  }

  // Scalar and SIMD kernels must agree wherever SIMD is available.
  if (kernels::available(kernels::Backend::Avx2)) {
    std::vector<EmotionalState> a(vs.size()), b(vs.size());
    kernels::classify_batch(vs, as, cfg, a, kernels::Backend::Scalar);
    kernels::classify_batch(vs, as, cfg, b, kernels::Backend::Avx2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) ++s.kernel_mismatches;
    }
  }

  const std::size_t clip_trials = std::max<std::size_t>(1, trials / 20);
  for (std::size_t i = 0; i < clip_trials; ++i) {
    ClipObservation clip;
    clip.clip_id = "verify-" + std::to_string(i);
    clip.learner_id = "verify";
    clip.lesson_id = "verify";
    const int n = 1 + static_cast<int>(rng.below(150));
    const double p_none = rng.uniform(0.0, 0.4), p_multi = rng.uniform(0.0, 0.4), p_away = rng.uniform(0.0, 0.6);
    const double cv = rng.uniform(-8, 8), ca = rng.uniform(-8, 8);
    for (int f = 0; f < n; ++f) {
      FramePrediction frame;
      frame.frame_index = f;
      const double u = rng.uniform();
      if (u < p_none) {
        if (rng.uniform() < 0.5) frame.faces.push_back({{0.3, 0.3, 0.2, 0.2}, rng.uniform(0.0, 0.69)});
      } else if (u < p_none + p_multi) {
        frame.faces.push_back({{0.1, 0.3, 0.2, 0.2}, rng.uniform(0.7, 1.0)});
        frame.faces.push_back({{0.6, 0.3, 0.2, 0.2}, rng.uniform(0.7, 1.0)});
      } else {
        frame.faces.push_back({{0.3, 0.3, 0.2, 0.2}, rng.uniform(0.7, 1.0)});
        const double yaw = rng.uniform() < p_away ? rng.uniform(30, 90) : rng.uniform(-29, 29);
        frame.pose = HeadPose{yaw, rng.uniform(-30, 10), 0.0};
        frame.affect = AffectPoint{std::clamp(cv + rng.uniform(-2, 2), -10.0, 10.0),
                                   std::clamp(ca + rng.uniform(-2, 2), -10.0, 10.0)};
      }
      clip.frames.push_back(std::move(frame));
    }
    ++s.clip_trials;
    const std::string lib(to_string(analyze_clip(clip, cfg).state));
    const std::string ref = oracle::reference_analyze(clip, cfg).state;
    if (lib != ref) {
      ++s.clip_mismatches;
      note("clip " + clip.clip_id + " = " + lib + ", oracle " + ref);
    }
  }

  const std::pair<StateCounts, LessonState> probes[] = {
      {{{ClipState::Disengaged, 1}}, LessonState::Disengaged},
      {{{ClipState::Tired, 3}, {ClipState::Confused, 3}}, LessonState::TiredConfused},
      {{{ClipState::NoFace, 5}}, LessonState::NumerousNoFaces},
  };
  if (cfg.aggregator == AggregatorThresholds{}) {
    for (const auto& [counts, expected] : probes) {
      const std::string lib(to_string(aggregate(counts, cfg)));
      const std::string ref = oracle::brute_force_lesson_state(to_oracle(counts), cfg.aggregator);
      if (lib != to_string(expected) || ref != to_string(expected)) {
        ++s.probe_failures;
        note("probe " + describe(counts) + ": library " + lib + ", oracle " + ref + ", expected " +
             std::string(to_string(expected)));
      }
    }
  }
  return s;
}

}  // namespace ats

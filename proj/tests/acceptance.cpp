// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "ats/aggregator.hpp"
#include "ats/clip.hpp"
#include "ats/replay.hpp"
#include "ats/service.hpp"
#include "httplib.h"
#include "oracle.hpp"
#include "support.hpp"

using namespace ats;
using namespace ats::testing;
using nlohmann::json;
namespace fs = std::filesystem;
using SteadyClock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void info(const std::string& what) { notes.push_back(what); }
};

double seconds_since(SteadyClock::time_point t0) { return std::chrono::duration<double>(SteadyClock::now() - t0).count(); }

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ClipObservation mixed_clip(int no_face, int multi, int unfocused, int focused, double v = 5, double a = 5) {
  std::vector<FramePrediction> frames;
  long long i = 0;
  for (int k = 0; k < no_face; ++k) frames.push_back(no_face_frame(i++));
  for (int k = 0; k < multi; ++k) frames.push_back(multi_face_frame(i++));
  for (int k = 0; k < unfocused; ++k) frames.push_back(unfocused_frame(i++));
  for (int k = 0; k < focused; ++k) frames.push_back(focused_frame(i++, v, a));
  return make_clip("c", "l", "x", std::move(frames));
}

oracle::Counts to_oracle(const StateCounts& c) {
  return {c[ClipState::NoFace],  c[ClipState::MultipleFaces], c[ClipState::Unfocused],  c[ClipState::Engaged],
          c[ClipState::Tired],   c[ClipState::Confused],      c[ClipState::Disengaged], c[ClipState::Neutral]};
}

// 1. Circumplex partition over the 201 x 201 grid, plus fixed probes.
Outcome circumplex_partition() {
  Outcome o;
  const ThresholdConfig cfg;
  const auto t0 = SteadyClock::now();
  std::size_t points = 0, bad = 0;
  std::set<EmotionalState> seen;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) {
      const double v = (i - 100) / 10.0, a = (j - 100) / 10.0;
      const EmotionalState s = classify_emotion({v, a}, cfg);
      const std::string region = oracle::region_name(v, a, cfg);
      if (region.empty() || region != to_string(s)) ++bad;
      seen.insert(s);
      ++points;
    }
  }
  const double elapsed = seconds_since(t0);
  o.expect(points == 201 * 201, "grid size");
  o.expect(bad == 0, std::to_string(bad) + " grid points outside exactly one region");
  o.expect(seen.size() == 5, "all five states present on the grid");
  o.expect(classify_emotion({0, 0}, cfg) == EmotionalState::Neutral, "(0,0) -> Neutral");
  o.expect(classify_emotion({5, 5}, cfg) == EmotionalState::Engaged, "(5,5) -> Engaged");
  o.expect(classify_emotion({-3, 2}, cfg) == EmotionalState::Confused, "(-3,2) -> Confused");
  o.expect(classify_emotion({0, -6}, cfg) == EmotionalState::Tired, "(0,-6) -> Tired");
  o.expect(classify_emotion({-3, -1.5}, cfg) == EmotionalState::Disengaged, "(-3,-1.5) -> Disengaged");
  o.expect(elapsed < 1.0, "runtime " + fmt(elapsed) + " s >= 1 s");
  o.info(std::to_string(points) + " points, " + fmt(elapsed) + " s");
  return o;
}

// 2. Default thresholds and the boundary cases, compared exactly.
Outcome table_fidelity() {
  Outcome o;
  const ThresholdConfig cfg;
  const ThresholdConfig expected = [] {
    ThresholdConfig t;
    t.face_confidence_min = 0.7;
    t.no_face_ratio_max = 0.25;
    t.multi_face_ratio_max = 0.25;
    t.unfocused_ratio_max = 0.35;
    t.yaw_focus = {-29, 29};
    t.pitch_focus = {-37, 16};
    t.disengaged_arousal_max = -1.5;
    t.engaged_valence_min = 1;
    t.activated_arousal_min = 1;
    t.negative_valence_max = -2;
    t.high_arousal_min = 6;
    t.tired_arousal_max = -5;
    t.emotion_multiplier = 1.0;
    t.aggregator = {0, 1, 2, 2, 2, 2, 4, 2};
    return t;
  }();
  o.expect(cfg == expected, "built-in defaults equal the published table");
  o.expect(ThresholdConfig::load(source_path("data/thresholds.json")) == expected, "data/thresholds.json equals the table");

  o.expect(analyze_clip(mixed_clip(38, 0, 0, 112), cfg).state == ClipState::NoFace, "38/150 no-face -> NoFace");
  o.expect(analyze_clip(mixed_clip(37, 0, 0, 113), cfg).state != ClipState::NoFace, "37/150 no-face -> not NoFace");
  o.expect(analyze_clip(mixed_clip(0, 0, 4, 6, 0, 0), cfg).state == ClipState::Unfocused, "4/10 unfocused -> Unfocused");
  o.expect(analyze_clip(mixed_clip(0, 0, 3, 7, 0, 0), cfg).state != ClipState::Unfocused, "3/10 unfocused -> not Unfocused");
  o.expect(label_frame(face_frame(0, 29, 0, 0, 0), cfg).kind == FrameKind::Focused, "yaw 29 focused");
  o.expect(label_frame(face_frame(0, 30, 0, 0, 0), cfg).kind == FrameKind::Unfocused, "yaw 30 unfocused");
  o.expect(label_frame(face_frame(0, 0, 0, 0, 0, 0.7), cfg).kind != FrameKind::NoFace, "confidence 0.7 accepted");
  o.expect(label_frame(face_frame(0, 0, 0, 0, 0, 0.69), cfg).kind == FrameKind::NoFace, "confidence 0.69 rejected");
  return o;
}

// 3. Aggregator against the brute-force oracle, worked case, monotonicity.
Outcome aggregator_equivalence() {
  Outcome o;
  const ThresholdConfig cfg;
  const auto t0 = SteadyClock::now();
  std::mt19937_64 rng(20240304);
  auto random_counts = [&] {
    StateCounts c;
    for (ClipState s : kClipStates) c[s] = static_cast<int>(rng() % 7);
    return c;
  };
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const StateCounts c = random_counts();
    if (to_string(aggregate(c, cfg)) != oracle::brute_force_lesson_state(to_oracle(c), cfg.aggregator)) ++mismatches;
  }
  o.expect(mismatches == 0, std::to_string(mismatches) + " of 10000 oracle mismatches");
  o.expect(aggregate({{ClipState::Tired, 3}, {ClipState::Confused, 3}}, cfg) == LessonState::TiredConfused,
           "{Tired:3, Confused:3} -> TiredConfused");
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const StateCounts lo = random_counts();
    StateCounts hi = lo;
    for (ClipState s : kClipStates) hi[s] += static_cast<int>(rng() % 4);
    if (priority_index(aggregate(hi, cfg)) > priority_index(aggregate(lo, cfg))) ++violations;
  }
  o.expect(violations == 0, std::to_string(violations) + " of 1000 monotonicity violations");
  const double elapsed = seconds_since(t0);
  o.expect(elapsed < 5.0, "runtime " + fmt(elapsed) + " s >= 5 s");
  o.info("10000 oracle trials, 1000 monotone pairs, " + fmt(elapsed) + " s");
  return o;
}

// 4. Catalog completeness and the supplementary recommendation rule.
Outcome feedback_catalog() {
  Outcome o;
  const FeedbackCatalog cat = FeedbackCatalog::load(source_path("data/feedback_catalog.json"));
  o.expect(cat.size() == 25, "catalog holds 25 messages");
  const std::set<LessonState> confusion = {LessonState::UnfocusedConfused, LessonState::EngagedConfused,
                                           LessonState::DisengagedConfused, LessonState::Confused};
  std::size_t plain = 0, supp = 0, cases = 0;
  for (LessonState s : kLessonStatePriority) {
    if (!cat.message(s, FeedbackVariant::Plain).empty()) ++plain;
    if (confusion.contains(s) && !cat.message(s, FeedbackVariant::WithSupplementary).empty()) ++supp;
    for (bool available : {false, true}) {
      ++cases;
      const Feedback f = select_feedback(s, available, cat);
      const bool expect = available && confusion.contains(s);
      o.expect(f.recommend_supplementary == expect,
               std::string(to_string(s)) + (available ? " with" : " without") + " content: recommendation flag");
      o.expect(f.message == cat.message(s, expect ? FeedbackVariant::WithSupplementary : FeedbackVariant::Plain),
               std::string(to_string(s)) + ": message variant");
    }
  }
  o.expect(plain == 21, "21 plain messages");
  o.expect(supp == 4, "4 supplementary messages");
  o.expect(cat.message(LessonState::Engaged, FeedbackVariant::Plain) == "Excellent! Keep it up.", "Engaged message text");
  o.info(std::to_string(plain) + " plain + " + std::to_string(supp) + " supplementary, " + std::to_string(cases) +
         " selection cases");
  return o;
}

// 5. End-to-end replay of the scripted learner, twice, byte-compared.
Outcome end_to_end_replay() {
  Outcome o;
  const CourseModel course = fixture();
  const LearnerProfile p = LearnerProfile::load(source_path("data/profiles/confused.json"));
  const auto base = fs::temp_directory_path() / "ats_acceptance_e2e";
  fs::remove_all(base);
  write_stream(base / "streams", p, generate_synthetic(p, course));

  const auto run = [&](const fs::path& out) {
    auto target = make_engine_target({}, std::make_shared<const FeedbackCatalog>(FeedbackCatalog::defaults()));
    ReplayReport r = run_replay(base / "streams", course, *target);
    r.write(out);
    return r;
  };
  const ReplayReport r = run(base / "run1");
  run(base / "run2");

  const std::string confused_supp =
      FeedbackCatalog::defaults().message(LessonState::Confused, FeedbackVariant::WithSupplementary);
  const auto first = std::find_if(r.lessons.begin(), r.lessons.end(), [](const LessonRow& row) {
    return row.lesson_id == "s1-w1";
  });
  o.expect(first != r.lessons.end(), "lesson s1-w1 replayed");
  if (first != r.lessons.end()) {
    o.expect(first->lesson_state == "Confused", "s1-w1 lesson state Confused");
    o.expect(first->message == confused_supp, "s1-w1 receives the supplementary variant of the Confused message");
    o.expect(first->supplementary == course.lesson_at(*course.find_lesson("s1-w1")).supplementary,
             "s1-w1 supplementary refs revealed");
  }

  std::vector<TestRow> s1;
  for (const auto& t : r.tests) {
    if (t.session_id == "s1") s1.push_back(t);
  }
  o.expect(s1.size() == 2, "two attempts at session s1");
  if (s1.size() == 2) {
    std::size_t expected_refs = 0;
    for (const auto& l : course.sessions[0].track(p.style).lessons) expected_refs += l.supplementary.size();
    o.expect(s1[0].score == 67 && !s1[0].passed, "4/6 scores 67 and fails");
    o.expect(s1[0].revealed.size() == expected_refs && expected_refs > 0, "failure reveals session supplementaries");
    o.expect(s1[1].score == 100 && s1[1].passed && s1[1].next_session_unlocked, "6/6 passes and unlocks s2");
  }
  o.expect(std::any_of(r.lessons.begin(), r.lessons.end(), [](const LessonRow& row) { return row.session_id == "s2"; }),
           "session s2 lessons replayed after unlocking");

  const auto row = std::find_if(r.metrics.rows.begin(), r.metrics.rows.end(), [&](const SessionGroupMetrics& m) {
    return m.session_id == "s1" && m.group == p.group_name();
  });
  o.expect(row != r.metrics.rows.end(), "metrics row for s1");
  if (row != r.metrics.rows.end()) {
    o.expect(row->mean_attempts_to_pass == 2.0, "attempts to pass = 2");
    o.expect(row->mean_first_attempt_score == 67.0, "first-attempt score = 67");
    o.expect(row->mean_passing_score == 100.0, "passing score = 100");
  }
  const std::string metrics_text = slurp(base / "run1" / "report.txt");
  for (const char* header :
       {"Mean time spent watching the contents (minutes)", "Mean number of attempts to earn a passing score",
        "Mean passing score (%)", "Mean score in the first attempt (%)", "Mean score in the second attempt (%)"}) {
    o.expect(metrics_text.find(header) != std::string::npos, std::string("metrics column '") + header + "'");
  }
  o.expect(metrics_text.find("scripted | 2.5 | 2 | 100 | 67 | 100") != std::string::npos, "s1 metrics row text");

  bool identical = true;
  for (const char* f : {"report.txt", "lessons.csv", "tests.csv", "metrics.csv"}) {
    identical = identical && slurp(base / "run1" / f) == slurp(base / "run2" / f) && !slurp(base / "run1" / f).empty();
  }
  o.expect(identical, "two runs produce byte-identical reports");
  return o;
}

// 6. Four learners over local HTTP, plus single-threaded pipeline throughput.
Outcome concurrency_budget() {
  Outcome o;
  const CourseModel course = fixture();
  ServiceConfig cfg;
  cfg.admin_token = "acceptance-admin";
  auto service = make_service(cfg);
  HttpServer server(service, cfg.worker_threads);
  const int port = server.start("127.0.0.1", 0);

  httplib::Client admin("127.0.0.1", port);
  const httplib::Headers admin_auth = {{"Authorization", "Bearer acceptance-admin"}};
  admin.Post("/api/admin/courses", admin_auth, course.to_json().dump(), "application/json");

  constexpr int kLearners = 4;
  constexpr int kClipsPerLearner = 12;
  const std::array<const char*, 3> styles = {"wholistic", "analytical", "middle"};
  std::vector<std::string> tokens;
  std::vector<std::string> lessons;
  for (int i = 0; i < kLearners; ++i) {
    const std::string style = styles[static_cast<std::size_t>(i) % 3];
    const auto res = admin.Post("/api/admin/learners", admin_auth,
                                json{{"learner_id", "rt" + std::to_string(i)}, {"style", style}, {"course_id", course.id}}.dump(),
                                "application/json");
    tokens.push_back(res ? json::parse(res->body).value("token", "") : "");
    lessons.push_back(course.sessions[0].track(*parse_cognitive_style(style)).lessons[0].id);
  }

  // Clips carry timestamps on the 20 s cadence but are posted back to back,
  // which loads the server harder than real time would.
  std::vector<std::vector<double>> latencies(kLearners);
  std::vector<int> failures(kLearners, 0);
  std::vector<std::thread> threads;
  for (int i = 0; i < kLearners; ++i) {
    threads.emplace_back([&, i] {
      httplib::Client client("127.0.0.1", port);
      client.set_keep_alive(true);
      const httplib::Headers auth = {{"Authorization", "Bearer " + tokens[static_cast<std::size_t>(i)]}};
      const std::string learner = "rt" + std::to_string(i);
      std::mt19937_64 rng(static_cast<std::uint64_t>(i) + 1);
      std::uniform_real_distribution<double> jitter(-0.5, 0.5);
      for (int k = 0; k < kClipsPerLearner; ++k) {
        std::vector<FramePrediction> frames;
        for (int f = 0; f < 150; ++f) frames.push_back(focused_frame(f, 5 + jitter(rng), 5 + jitter(rng)));
        const ClipObservation clip = make_clip(learner + "-" + std::to_string(k), learner, lessons[static_cast<std::size_t>(i)],
                                               std::move(frames),
                                               parse_timestamp("2024-03-04T09:00:00Z") + std::chrono::seconds(20 * k));
        const std::string body = to_json(clip).dump();
        const auto t0 = SteadyClock::now();
        const auto res = client.Post("/api/clips", auth, body, "application/json");
        latencies[static_cast<std::size_t>(i)].push_back(seconds_since(t0));
        if (!res || res->status != 200 || json::parse(res->body).value("clip_state", "") != "Engaged") {
          ++failures[static_cast<std::size_t>(i)];
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  server.stop();

  double worst = 0.0;
  int failed = 0;
  std::size_t posted = 0;
  for (int i = 0; i < kLearners; ++i) {
    for (double l : latencies[static_cast<std::size_t>(i)]) worst = std::max(worst, l);
    failed += failures[static_cast<std::size_t>(i)];
    posted += latencies[static_cast<std::size_t>(i)].size();
  }
  o.expect(failed == 0, std::to_string(failed) + " clip posts failed");
  o.expect(worst < 1.0, "worst per-clip latency " + fmt(worst) + " s >= 1 s");

  // Decision pipeline only: clip analysis plus lesson aggregation.
  std::vector<ClipObservation> clips;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 64; ++k) {
    std::vector<FramePrediction> frames;
    for (int f = 0; f < 150; ++f) {
      if (f % 13 == 0) frames.push_back(no_face_frame(f));
      else if (f % 9 == 0) frames.push_back(unfocused_frame(f));
      else frames.push_back(focused_frame(f, u(rng), u(rng)));
    }
    clips.push_back(make_clip("p" + std::to_string(k), "l", "x", std::move(frames)));
  }
  const ThresholdConfig thresholds;
  constexpr int kPipelineClips = 5000;
  StateCounts counts;
  const auto t0 = SteadyClock::now();
  for (int k = 0; k < kPipelineClips; ++k) {
    ++counts[analyze_clip(clips[static_cast<std::size_t>(k) % clips.size()], thresholds).state];
    if (k % 3 == 2) {
      (void)aggregate(counts, thresholds);
      counts = {};
    }
  }
  const double rate = kPipelineClips / seconds_since(t0);
  o.expect(rate >= 1000.0, "pipeline " + fmt(rate, 0) + " clips/s < 1000");
  o.info(std::to_string(posted) + " clips from " + std::to_string(kLearners) + " learners, worst latency " +
         fmt(worst * 1000, 1) + " ms; pipeline " + fmt(rate, 0) + " clips/s single-threaded, kernels " +
         std::string(kernels::to_string(kernels::preferred())));
  return o;
}

// 7. Answer keys never reach learners; duplicate clip ids are no-ops.
Outcome safety_scans() {
  Outcome o;
  const CourseModel course = fixture();
  auto storage = std::make_shared<MemoryStorage>();
  auto engine = std::make_shared<TutorEngine>(storage, ThresholdConfig{},
                                              std::make_shared<const FeedbackCatalog>(FeedbackCatalog::defaults()));
  ApiService api(engine, storage, "scan-admin");
  auto call = [&](const std::string& method, const std::string& path, const std::string& token,
                  const std::string& body = "") { return api.handle({method, path, {}, token, body}); };
  call("POST", "/api/admin/courses", "scan-admin", course.to_json().dump());

  const std::regex key_field(R"("correct"\s*:)");
  std::size_t scanned = 0, leaks = 0;
  auto scan = [&](const ApiResponse& r) {
    ++scanned;
    if (std::regex_search(r.body.dump(), key_field)) ++leaks;
  };

  for (CognitiveStyle style : kCognitiveStyles) {
    const std::string id = "scan-" + std::string(to_string(style));
    const auto enrolled = call("POST", "/api/admin/learners", "scan-admin",
                               json{{"learner_id", id}, {"style", to_string(style)}, {"course_id", course.id}}.dump());
    const std::string token = enrolled.body.value("token", "");
    scan(call("GET", "/api/sessions", token));
    for (const auto& session : course.sessions) {
      const StyleTrack& track = session.track(style);
      scan(call("GET", "/api/sessions/" + session.id + "/lessons", token));
      scan(call("GET", "/api/sessions/" + session.id + "/test", token));
      for (const auto& lesson : track.lessons) {
        for (int k = 0; k < 3; ++k) {
          scan(call("POST", "/api/clips", token,
                    to_json(steady_clip(id + lesson.id + std::to_string(k), id, lesson.id, -3, 2)).dump()));
        }
        scan(call("POST", "/api/lessons/" + lesson.id + "/complete", token));
      }
      std::vector<int> wrong, right;
      for (const auto& q : track.test.questions) {
        wrong.push_back((q.correct + 1) % 4);
        right.push_back(q.correct);
      }
      scan(call("POST", "/api/sessions/" + session.id + "/test", token, json{{"answers", wrong}}.dump()));
      scan(call("GET", "/api/sessions/" + session.id + "/lessons", token));
      scan(call("POST", "/api/sessions/" + session.id + "/test", token, json{{"answers", right}}.dump()));
      scan(call("GET", "/api/sessions/" + session.id + "/test", token));
    }
    scan(call("POST", "/api/sessions/s1/test", token, R"({"answers": [0]})"));
    scan(call("GET", "/api/sessions", token));
  }
  o.expect(leaks == 0, std::to_string(leaks) + " learner-facing responses carried an answer key");

  // Idempotency: 20 distinct clips, then 100 random duplicates.
  const auto enrolled = call("POST", "/api/admin/learners", "scan-admin",
                             json{{"learner_id", "dup"}, {"style", "analytical"}, {"course_id", course.id}}.dump());
  const std::string token = enrolled.body.value("token", "");
  std::vector<std::string> bodies, states;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-8, 8);
  for (int k = 0; k < 20; ++k) {
    bodies.push_back(to_json(steady_clip("dup-" + std::to_string(k), "dup", "s1-a1", u(rng), u(rng))).dump());
    const auto r = call("POST", "/api/clips", token, bodies.back());
    states.push_back(r.body.value("clip_state", ""));
  }
  const std::size_t log_before = storage->read_stream("events/dup").size();
  std::size_t wrong = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t pick = rng() % bodies.size();
    const auto r = call("POST", "/api/clips", token, bodies[pick]);
    if (r.status != 200 || !r.body.value("duplicate", false) || r.body.value("clip_state", "") != states[pick]) ++wrong;
  }
  const std::size_t stored = engine->record("dup").lessons.at("s1-a1").clips.size();
  o.expect(wrong == 0, std::to_string(wrong) + " duplicate posts were not acknowledged as duplicates");
  o.expect(stored == 20, "stored clips " + std::to_string(stored) + " != 20");
  o.expect(storage->read_stream("events/dup").size() == log_before, "event log grew under duplicates");
  o.info(std::to_string(scanned) + " learner responses scanned; 100 duplicates over 20 clips");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 circumplex partition", circumplex_partition},
      {"2 threshold table fidelity", table_fidelity},
      {"3 aggregator oracle equivalence", aggregator_equivalence},
      {"4 feedback catalog", feedback_catalog},
      {"5 end-to-end replay", end_to_end_replay},
      {"6 concurrency budget", concurrency_budget},
      {"7 safety scans", safety_scans},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s criterion %s%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : " - ",
                detail.c_str());
    if (!o.pass) ++failed;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}

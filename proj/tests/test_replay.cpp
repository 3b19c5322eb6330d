#include <filesystem>
#include <fstream>
#include <sstream>

#include "ats/error.hpp"
#include "ats/replay.hpp"
#include "ats/service.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ats;
using namespace ats::testing;
namespace fs = std::filesystem;

namespace {

LearnerProfile profile(const std::string& name) { return LearnerProfile::load(source_path("data/profiles/" + name)); }

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::unique_ptr<ReplayTarget> engine_target() {
  return make_engine_target({}, std::make_shared<const FeedbackCatalog>(FeedbackCatalog::defaults()));
}

}  // namespace

TEST_CASE("profile json round-trips and validates") {
  const LearnerProfile p = profile("confused.json");
  CHECK(p.style == CognitiveStyle::Wholistic);
  CHECK(p.group_name() == "scripted");
  CHECK(LearnerProfile::from_json(p.to_json()) == p);

  auto bad = p.to_json();
  bad["presence"]["no_face"] = {1.5};
  CHECK_THROWS_AS(LearnerProfile::from_json(bad), Error);
  bad = p.to_json();
  bad["affect"]["path"] = {{0, 11, 0}};
  CHECK_THROWS_AS(LearnerProfile::from_json(bad), Error);
  bad = p.to_json();
  bad["presence"]["no_face"] = {0.6};
  bad["presence"]["multi_face"] = {0.6};
  CHECK_THROWS_AS(LearnerProfile::from_json(bad), Error);
}

TEST_CASE("trajectory interpolation") {
  const std::vector<AffectKeyframe> path = {{0, {0, 0}}, {0.5, {4, -2}}, {1, {4, 2}}};
  CHECK(trajectory_at(path, 0.25) == AffectPoint{2, -1});
  CHECK(trajectory_at(path, 0.75) == AffectPoint{4, 0});
  CHECK(trajectory_at(path, -1) == AffectPoint{0, 0});
  CHECK(trajectory_at(path, 2) == AffectPoint{4, 2});
}

TEST_CASE("synthetic streams follow the cadence and are deterministic") {
  const CourseModel course = fixture();
  const LearnerProfile p = profile("engaged.json");
  const auto a = generate_synthetic(p, course);
  const auto b = generate_synthetic(p, course);
  CHECK(a == b);
  REQUIRE(a.size() == 15);  // 5 wholistic lessons x 3 clips
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].frames.size() == 150);
    CHECK(a[i].fps == 15.0);
    CHECK(a[i].duration_seconds() == 10.0);
    CHECK(a[i].recorded_at == p.start + std::chrono::seconds(20 * static_cast<long long>(i)));
  }

  LearnerProfile other = p;
  other.seed = p.seed + 1;
  CHECK(generate_synthetic(other, course) != a);

  const auto d1 = fresh_dir("ats_stream_a"), d2 = fresh_dir("ats_stream_b");
  write_stream(d1, p, a);
  write_stream(d2, p, b);
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) continue;
    CHECK(slurp(e.path()) == slurp(d2 / fs::relative(e.path(), d1)));
  }
  CHECK(load_clip(d1 / p.learner_id / "clips" / "0001.jsonl") == a[0]);
}

TEST_CASE("profiles produce the intended clip states") {
  const CourseModel course = fixture();
  for (const auto& clip : generate_synthetic(profile("engaged.json"), course)) {
    CHECK(analyze_clip(clip, {}).state == ClipState::Engaged);
  }
  for (const auto& clip : generate_synthetic(profile("distracted.json"), course)) {
    CHECK(analyze_clip(clip, {}).state == ClipState::Unfocused);
  }
  for (const auto& clip : generate_synthetic(profile("confused.json"), course)) {
    CHECK(analyze_clip(clip, {}).state == ClipState::Confused);
  }
}

TEST_CASE("presence fractions are realized exactly") {
  LearnerProfile p = profile("engaged.json");
  p.no_face = {0.3};
  p.multi_face = {0.1};
  p.away_fraction = {0.0};
  const auto clips = generate_synthetic(p, fixture());
  const ClipResult r = analyze_clip(clips.front(), {});
  CHECK(r.frame_counts.no_face == 45);
  CHECK(r.frame_counts.multiple_faces == 15);
  CHECK(r.state == ClipState::NoFace);
}

TEST_CASE("replay of the scripted confused learner") {
  const CourseModel course = fixture();
  const auto dir = fresh_dir("ats_replay_confused");
  const LearnerProfile p = profile("confused.json");
  write_stream(dir, p, generate_synthetic(p, course));
  auto target = engine_target();
  const ReplayReport r = run_replay(dir, course, *target);
  REQUIRE_FALSE(r.lessons.empty());
  CHECK(r.lessons[0].lesson_state == "Confused");
  CHECK(r.lessons[0].message ==
        FeedbackCatalog::defaults().message(LessonState::Confused, FeedbackVariant::WithSupplementary));
  CHECK_FALSE(r.lessons[0].supplementary.empty());
  REQUIRE(r.tests.size() >= 2);
  CHECK(r.tests[0].score == 67);
  CHECK_FALSE(r.tests[0].passed);
  CHECK(r.tests[1].score == 100);
  CHECK(r.tests[1].next_session_unlocked);
  const auto& row = r.metrics.rows.at(0);
  CHECK(row.session_id == "s1");
  CHECK(*row.mean_attempts_to_pass == 2);
  CHECK(*row.mean_first_attempt_score == 67);
  CHECK(*row.mean_passing_score == 100);
}

TEST_CASE("replay is deterministic and identical over the wire") {
  const CourseModel course = fixture();
  const auto dir = fresh_dir("ats_replay_all");
  for (const char* name : {"engaged.json", "distracted.json", "confused.json", "tired.json"}) {
    const LearnerProfile p = profile(name);
    write_stream(dir, p, generate_synthetic(p, course));
  }
  auto t1 = engine_target();
  auto t2 = engine_target();
  const ReplayReport a = run_replay(dir, course, *t1);
  const ReplayReport b = run_replay(dir, course, *t2);
  CHECK(a.render_text() == b.render_text());
  CHECK(a.lessons_csv() == b.lessons_csv());

  ServiceConfig cfg;
  cfg.admin_token = "replay-admin";
  auto service = make_service(cfg);
  HttpServer server(service, 4);
  const int port = server.start("127.0.0.1", 0);
  auto remote = make_http_target("127.0.0.1", port, "replay-admin");
  const ReplayReport c = run_replay(dir, course, *remote);
  server.stop();
  CHECK(c.render_text() == a.render_text());
  CHECK(c.lessons_csv() == a.lessons_csv());
  CHECK(c.tests_csv() == a.tests_csv());
  CHECK(render_metrics_csv(c.metrics) == render_metrics_csv(a.metrics));

  const auto out = fresh_dir("ats_replay_out");
  a.write(out);
  for (const char* f : {"report.txt", "lessons.csv", "tests.csv", "metrics.csv"}) CHECK(fs::exists(out / f));
}

TEST_CASE("empty stream directory gives an empty report") {
  const auto dir = fresh_dir("ats_replay_empty");
  fs::create_directories(dir);
  auto target = engine_target();
  const ReplayReport r = run_replay(dir, fixture(), *target);
  CHECK(r.lessons.empty());
  CHECK(r.tests.empty());
  CHECK(r.metrics.rows.empty());
}

TEST_CASE("unresolved lesson references are listed") {
  const auto dir = fresh_dir("ats_replay_unresolved");
  const LearnerProfile p = profile("engaged.json");
  auto clips = generate_synthetic(p, fixture());
  clips[0].lesson_id = "s7-w9";
  clips[1].lesson_id = "s8-w1";
  write_stream(dir, p, clips);
  auto target = engine_target();
  try {
    run_replay(dir, fixture(), *target);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Invalid);
    CHECK(std::string(e.what()).find("s7-w9") != std::string::npos);
    CHECK(std::string(e.what()).find("s8-w1") != std::string::npos);
  }
}

TEST_CASE("oracle verification passes") {
  const VerifySummary s = verify_against_oracle(10000, 42);
  CHECK(s.passed());
  CHECK(s.aggregator_trials == 10000);
  CHECK(s.grid_points == 201 * 201);
  CHECK(s.counterexamples.empty());
  CHECK_THROWS_AS(verify_against_oracle(0, 1), Error);
}

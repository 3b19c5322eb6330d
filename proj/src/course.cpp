#include "ats/course.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ats/error.hpp"
#include "json_util.hpp"

namespace ats {
namespace {

using nlohmann::json;
namespace ju = json_util;

std::size_t style_index(CognitiveStyle style) { return static_cast<std::size_t>(style); }

Test test_from_json(const json& doc, const std::string& ctx) {
  Test test;
  if (ju::has(doc, "passing_score")) {
    test.passing_score = static_cast<int>(ju::require_integer(doc, "passing_score", ctx));
  }
  const auto& questions = ju::require_array(doc, "questions", ctx);
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const std::string qctx = ctx + ".questions[" + std::to_string(i) + "]";
    const auto& q = questions[i];
    Question question;
    question.text = ju::require_string(q, "text", qctx);
    const auto& options = ju::require_array(q, "options", qctx);
    if (options.size() != 4) {
      fail(ErrorKind::Invalid, qctx + ": a question needs exactly four options, got " + std::to_string(options.size()));
    }
    for (std::size_t k = 0; k < 4; ++k) {
      if (!options[k].is_string()) fail(ErrorKind::Malformed, qctx + ".options must be strings");
      question.options[k] = options[k].get<std::string>();
    }
    question.correct = static_cast<int>(ju::require_integer(q, "correct", qctx));
    test.questions.push_back(std::move(question));
  }
  return test;
}

json test_to_json(const Test& test, bool with_keys) {
  json questions = json::array();
  for (const auto& q : test.questions) {
    json item = {{"text", q.text}, {"options", q.options}};
    if (with_keys) item["correct"] = q.correct;
    questions.push_back(std::move(item));
  }
  return {{"passing_score", test.passing_score}, {"questions", std::move(questions)}};
}

Lesson lesson_from_json(const json& doc, const std::string& ctx) {
  Lesson lesson;
  lesson.id = ju::require_string(doc, "id", ctx);
  lesson.title = ju::has(doc, "title") ? ju::require_string(doc, "title", ctx) : lesson.id;
  lesson.content = ju::has(doc, "content") ? ju::require_string(doc, "content", ctx) : "";
  if (ju::has(doc, "supplementary")) {
    for (const auto& ref : ju::require_array(doc, "supplementary", ctx)) {
      if (!ref.is_string()) fail(ErrorKind::Malformed, ctx + ".supplementary must hold strings");
      lesson.supplementary.push_back(ref.get<std::string>());
    }
  }
  return lesson;
}

}  // namespace

std::string_view to_string(CognitiveStyle style) noexcept {
  switch (style) {
    case CognitiveStyle::Wholistic: return "wholistic";
    case CognitiveStyle::Analytical: return "analytical";
    case CognitiveStyle::Middle: return "middle";
  }
  return "middle";
}

std::optional<CognitiveStyle> parse_cognitive_style(std::string_view name) noexcept {
  for (CognitiveStyle s : kCognitiveStyles) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

const StyleTrack& Session::track(CognitiveStyle style) const {
  const auto& t = tracks[style_index(style)];
  if (!t) fail(ErrorKind::Invalid, "session " + id + " has no " + std::string(to_string(style)) + " group");
  return *t;
}

void CourseModel::validate() const {
  if (id.empty()) fail(ErrorKind::Invalid, "course id must be non-empty");
  if (sessions.empty()) fail(ErrorKind::Invalid, "a course needs at least one session");

  std::set<std::string> session_ids;
  std::set<std::string> lesson_ids;
  for (const auto& session : sessions) {
    if (session.id.empty()) fail(ErrorKind::Invalid, "session id must be non-empty");
    if (!session_ids.insert(session.id).second) fail(ErrorKind::Invalid, "duplicate session id " + session.id);
    for (CognitiveStyle style : kCognitiveStyles) {
      const StyleTrack& track = session.track(style);
      const std::string where = "session " + session.id + " (" + std::string(to_string(style)) + ")";
      if (track.lessons.empty()) fail(ErrorKind::Invalid, where + " has no lessons");
      for (const auto& lesson : track.lessons) {
        if (lesson.id.empty()) fail(ErrorKind::Invalid, where + ": lesson id must be non-empty");
        if (!lesson_ids.insert(lesson.id).second) fail(ErrorKind::Invalid, "duplicate lesson id " + lesson.id);
      }
      if (track.test.questions.empty()) fail(ErrorKind::Invalid, where + ": test has no questions");
      if (track.test.passing_score < 0 || track.test.passing_score > 100) {
        fail(ErrorKind::Invalid, where + ": passing score must lie in [0, 100]");
      }
      for (const auto& q : track.test.questions) {
        if (q.correct < 0 || q.correct > 3) fail(ErrorKind::Invalid, where + ": answer key must be in [0, 3]");
      }
    }
  }
}

std::optional<std::size_t> CourseModel::find_session(std::string_view session_id) const {
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (sessions[i].id == session_id) return i;
  }
  return std::nullopt;
}

std::optional<LessonLocation> CourseModel::find_lesson(std::string_view lesson_id) const {
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (CognitiveStyle style : kCognitiveStyles) {
      const auto& track = sessions[s].tracks[style_index(style)];
      if (!track) continue;
      for (std::size_t l = 0; l < track->lessons.size(); ++l) {
        if (track->lessons[l].id == lesson_id) return LessonLocation{s, style, l};
      }
    }
  }
  return std::nullopt;
}

const Lesson& CourseModel::lesson_at(const LessonLocation& loc) const {
  return sessions.at(loc.session_index).track(loc.style).lessons.at(loc.lesson_index);
}

CourseModel CourseModel::from_json(const json& doc) {
  CourseModel course;
  course.id = ju::require_string(doc, "course_id", "course");
  course.title = ju::has(doc, "title") ? ju::require_string(doc, "title", "course") : course.id;
  const auto& sessions = ju::require_array(doc, "sessions", "course");
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const std::string ctx = "sessions[" + std::to_string(i) + "]";
    const auto& s = sessions[i];
    Session session;
    session.id = ju::require_string(s, "id", ctx);
    session.title = ju::has(s, "title") ? ju::require_string(s, "title", ctx) : session.id;
    std::optional<Test> shared_test;
    if (ju::has(s, "test")) shared_test = test_from_json(ju::require_object(s, "test", ctx), ctx + ".test");

    const auto& groups = ju::require_object(s, "groups", ctx);
    for (const auto& item : groups.items()) {
      const auto style = parse_cognitive_style(item.key());
      if (!style) fail(ErrorKind::Invalid, ctx + ": unknown cognitive style group '" + item.key() + "'");
      const std::string gctx = ctx + ".groups." + item.key();
      StyleTrack track;
      for (const auto& l : ju::require_array(item.value(), "lessons", gctx)) {
        track.lessons.push_back(lesson_from_json(l, gctx + ".lessons"));
      }
      if (ju::has(item.value(), "test")) {
        track.test = test_from_json(ju::require_object(item.value(), "test", gctx), gctx + ".test");
      } else if (shared_test) {
        track.test = *shared_test;
      } else {
        fail(ErrorKind::Invalid, gctx + ": no test defined for this group or session");
      }
      session.tracks[style_index(*style)] = std::move(track);
    }
    course.sessions.push_back(std::move(session));
  }
  course.validate();
  return course;
}

CourseModel CourseModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open course fixture " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(ju::parse(buf.str(), path.string()));
}

json CourseModel::to_json() const {
  json out_sessions = json::array();
  for (const auto& session : sessions) {
    json groups = json::object();
    for (CognitiveStyle style : kCognitiveStyles) {
      const auto& track = session.tracks[style_index(style)];
      if (!track) continue;
      json lessons = json::array();
      for (const auto& l : track->lessons) {
        lessons.push_back({{"id", l.id}, {"title", l.title}, {"content", l.content}, {"supplementary", l.supplementary}});
      }
      groups[std::string(to_string(style))] = {{"lessons", std::move(lessons)}, {"test", test_to_json(track->test, true)}};
    }
    out_sessions.push_back({{"id", session.id}, {"title", session.title}, {"groups", std::move(groups)}});
  }
  return {{"course_id", id}, {"title", title}, {"sessions", std::move(out_sessions)}};
}

json to_public_json(const Test& test) { return test_to_json(test, false); }

}  // namespace ats

#include "ats/report.hpp"

#include <sstream>

namespace ats {

using nlohmann::json;

LearnerReport build_learner_report(const CourseModel& course, const LearnerRecord& record) {
  LearnerReport report;
  report.learner_id = record.learner_id;
  report.style = record.style;
  report.course_id = record.course_id;
  for (const auto& session : course.sessions) {
    const auto& track = session.tracks[static_cast<std::size_t>(record.style)];
    if (!track) continue;
    for (const auto& lesson : track->lessons) {
      LessonReport lr{session.id, lesson.id, lesson.title, {}, std::nullopt, {}};
      if (const auto it = record.lessons.find(lesson.id); it != record.lessons.end()) {
        for (const auto& clip : it->second.clips) ++lr.histogram[clip.result.state];
        lr.history = it->second.outcomes;
        if (!lr.history.empty()) lr.state = lr.history.back().state;
      }
      report.lessons.push_back(std::move(lr));
    }
    SessionTestReport tr{session.id, {}, false};
    if (const auto it = record.tests.find(session.id); it != record.tests.end()) {
      for (const auto& a : it->second) {
        tr.scores.push_back(a.score);
        tr.passed = tr.passed || a.passed;
      }
    }
    report.tests.push_back(std::move(tr));
  }
  return report;
}

json to_json(const LearnerReport& report) {
  json lessons = json::array();
  for (const auto& l : report.lessons) {
    json histogram = json::object();
    for (ClipState s : kClipStates) {
      if (l.histogram[s] > 0) histogram[std::string(to_string(s))] = l.histogram[s];
    }
    json history = json::array();
    for (const auto& o : l.history) {
      history.push_back({{"state", to_string(o.state)},
                         {"message", o.message},
                         {"recommended_supplementary", o.recommended_supplementary},
                         {"clip_count", o.clip_count}});
    }
    lessons.push_back({{"session_id", l.session_id},
                       {"lesson_id", l.lesson_id},
                       {"title", l.title},
                       {"histogram", std::move(histogram)},
                       {"state", l.state ? json(to_string(*l.state)) : json(nullptr)},
                       {"history", std::move(history)}});
  }
  json tests = json::array();
  for (const auto& t : report.tests) {
    tests.push_back({{"session_id", t.session_id}, {"scores", t.scores}, {"passed", t.passed}});
  }
  return {{"learner_id", report.learner_id},
          {"style", to_string(report.style)},
          {"course_id", report.course_id},
          {"lessons", std::move(lessons)},
          {"tests", std::move(tests)}};
}

std::string render_text(const LearnerReport& report) {
  std::ostringstream out;
  out << "Learner " << report.learner_id << " (" << to_string(report.style) << ") - course " << report.course_id
      << '\n';
  for (const auto& l : report.lessons) {
    out << '\n' << l.session_id << " / " << l.lesson_id << "  " << l.title << '\n';
    out << "  lesson state: " << (l.state ? std::string(to_string(*l.state)) : std::string("(not completed)"));
    if (l.history.size() > 1) out << "  [" << l.history.size() << " completions]";
    out << '\n';
    if (l.histogram.total() == 0) {
      out << "  no clips\n";
      continue;
    }
    for (ClipState s : kClipStates) {
      const int n = l.histogram[s];
      if (n == 0) continue;
      std::string label(to_string(s));
      label.resize(14, ' ');
      out << "  " << label << std::string(static_cast<std::size_t>(n), '#') << ' ' << n << '\n';
    }
  }
  out << '\n';
  for (const auto& t : report.tests) {
    out << "test " << t.session_id << ":";
    if (t.scores.empty()) out << " no attempts";
    for (int s : t.scores) out << ' ' << s;
    out << (t.passed ? "  (passed)" : "") << '\n';
  }
  return out.str();
}

std::string render_csv(const LearnerReport& report) {
  std::ostringstream out;
  out << "learner,session,lesson,clip_state,count,lesson_state\n";
  for (const auto& l : report.lessons) {
    const std::string state = l.state ? std::string(to_string(*l.state)) : std::string();
    for (ClipState s : kClipStates) {
      if (l.histogram[s] == 0) continue;
      out << report.learner_id << ',' << l.session_id << ',' << l.lesson_id << ',' << to_string(s) << ','
          << l.histogram[s] << ',' << state << '\n';
    }
  }
  return out.str();
}

}  // namespace ats

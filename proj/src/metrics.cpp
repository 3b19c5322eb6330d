#include "ats/metrics.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "ats/error.hpp"
#include "json_util.hpp"

namespace ats {
namespace {

using nlohmann::json;

constexpr std::array<const char*, 5> kColumns = {
    "Mean time spent watching the contents (minutes)", "Mean number of attempts to earn a passing score",
    "Mean passing score (%)", "Mean score in the first attempt (%)", "Mean score in the second attempt (%)"};

class Mean {
 public:
  void add(double x) {
    sum_ += x;
    ++n_;
  }
  std::optional<double> value() const {
    if (n_ == 0) return std::nullopt;
    return sum_ / static_cast<double>(n_);
  }

 private:
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

std::string cell(const std::optional<double>& v) { return v ? format_metric(*v) : "-"; }

std::array<std::optional<double>, 5> columns(const SessionGroupMetrics& row) {
  return {row.mean_watch_minutes, row.mean_attempts_to_pass, row.mean_passing_score, row.mean_first_attempt_score,
          row.mean_second_attempt_score};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

Grouping group_by_style(std::span<const LearnerRecord> records) {
  Grouping grouping;
  for (const auto& r : records) grouping[std::string(to_string(r.style))].push_back(r.learner_id);
  return grouping;
}

CourseMetrics compute_course_metrics(const CourseModel& course, std::span<const LearnerRecord> records,
                                     const Grouping& grouping) {
  std::map<std::string, const LearnerRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.learner_id, &r);

  std::set<std::string> assigned;
  for (const auto& [group, members] : grouping) {
    for (const auto& id : members) {
      if (!by_id.contains(id)) fail(ErrorKind::Invalid, "group " + group + " names unknown learner " + id);
      if (!assigned.insert(id).second) fail(ErrorKind::Invalid, "learner " + id + " is in more than one group");
    }
  }
  for (const auto& [id, r] : by_id) {
    if (!assigned.contains(id)) fail(ErrorKind::Invalid, "learner " + id + " is not in any group");
  }

  CourseMetrics metrics;
  for (const auto& [group, members] : grouping) {
    if (members.empty()) metrics.warnings.push_back("group " + group + " is empty and was omitted");
  }

  for (const auto& session : course.sessions) {
    for (const auto& [group, members] : grouping) {
      if (members.empty()) continue;
      SessionGroupMetrics row;
      row.session_id = session.id;
      row.group = group;
      row.learners = members.size();
      Mean watch, attempts, passing, first, second;
      for (const auto& id : members) {
        const LearnerRecord& r = *by_id.at(id);

        double seconds = 0.0;
        bool watched = false;
        if (const auto& track = session.tracks[static_cast<std::size_t>(r.style)]) {
          for (const auto& lesson : track->lessons) {
            const auto it = r.lessons.find(lesson.id);
            if (it == r.lessons.end() || it->second.clips.empty()) continue;
            watched = true;
            seconds += watch_seconds(it->second.clips);
          }
        }
        if (watched) watch.add(seconds / 60.0);

        const auto t = r.tests.find(session.id);
        if (t == r.tests.end() || t->second.empty()) continue;
        const auto& list = t->second;
        first.add(list[0].score);
        if (list.size() >= 2) second.add(list[1].score);
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (list[i].passed) {
            attempts.add(static_cast<double>(i + 1));
            passing.add(list[i].score);
            break;
          }
        }
      }
      row.mean_watch_minutes = watch.value();
      row.mean_attempts_to_pass = attempts.value();
      row.mean_passing_score = passing.value();
      row.mean_first_attempt_score = first.value();
      row.mean_second_attempt_score = second.value();
      metrics.rows.push_back(std::move(row));
    }
  }
  return metrics;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string render_metrics_text(const CourseMetrics& metrics) {
  std::ostringstream out;
  std::string current;
  for (const auto& row : metrics.rows) {
    if (row.session_id != current) {
      if (!current.empty()) out << '\n';
      current = row.session_id;
      out << "Session " << row.session_id << '\n';
      out << "  group";
      for (std::size_t i = 0; i < kColumns.size(); ++i) out << " | " << kColumns[i];
      out << '\n';
    }
    out << "  " << row.group;
    const auto cols = columns(row);
    for (std::size_t i = 0; i < cols.size(); ++i) out << " | " << cell(cols[i]);
    out << '\n';
  }
  for (const auto& w : metrics.warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string render_metrics_csv(const CourseMetrics& metrics) {
  std::ostringstream out;
  out << "session,group,learners";
  for (const char* c : kColumns) out << ",\"" << c << '"';
  out << '\n';
  for (const auto& row : metrics.rows) {
    out << row.session_id << ',' << row.group << ',' << row.learners;
    for (const auto& v : columns(row)) out << ',' << (v ? format_metric(*v) : "");
    out << '\n';
  }
  return out.str();
}

json to_json(const CourseMetrics& metrics) {
  json rows = json::array();
  for (const auto& row : metrics.rows) {
    rows.push_back({{"session_id", row.session_id},
                    {"group", row.group},
                    {"learners", row.learners},
                    {"mean_watch_minutes", optional_number(row.mean_watch_minutes)},
                    {"mean_attempts_to_pass", optional_number(row.mean_attempts_to_pass)},
                    {"mean_passing_score", optional_number(row.mean_passing_score)},
                    {"mean_first_attempt_score", optional_number(row.mean_first_attempt_score)},
                    {"mean_second_attempt_score", optional_number(row.mean_second_attempt_score)}});
  }
  return {{"rows", std::move(rows)}, {"warnings", metrics.warnings}};
}

CourseMetrics course_metrics_from_json(const json& doc) {
  CourseMetrics metrics;
  for (const auto& r : doc.at("rows")) {
    SessionGroupMetrics row;
    row.session_id = r.at("session_id").get<std::string>();
    row.group = r.at("group").get<std::string>();
    row.learners = r.at("learners").get<std::size_t>();
    row.mean_watch_minutes = number_or_null(r, "mean_watch_minutes");
    row.mean_attempts_to_pass = number_or_null(r, "mean_attempts_to_pass");
    row.mean_passing_score = number_or_null(r, "mean_passing_score");
    row.mean_first_attempt_score = number_or_null(r, "mean_first_attempt_score");
    row.mean_second_attempt_score = number_or_null(r, "mean_second_attempt_score");
    metrics.rows.push_back(std::move(row));
  }
  metrics.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return metrics;
}

}  // namespace ats

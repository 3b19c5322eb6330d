#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ats {

enum class CognitiveStyle { Wholistic, Analytical, Middle };

inline constexpr std::array<CognitiveStyle, 3> kCognitiveStyles = {
    CognitiveStyle::Wholistic, CognitiveStyle::Analytical, CognitiveStyle::Middle};

// Lower-case wire names: "wholistic", "analytical", "middle".
std::string_view to_string(CognitiveStyle style) noexcept;
std::optional<CognitiveStyle> parse_cognitive_style(std::string_view name) noexcept;

struct Lesson {
  std::string id;
  std::string title;
  std::string content;                     // media reference
  std::vector<std::string> supplementary;  // hidden until revealed

  bool operator==(const Lesson&) const = default;
};

struct Question {
  std::string text;
  std::array<std::string, 4> options;
  int correct = 0;

  bool operator==(const Question&) const = default;
};

struct Test {
  std::vector<Question> questions;
  int passing_score = 80;  // percent

  bool operator==(const Test&) const = default;
};

// Lessons and final test of one session for one cognitive-style group.
struct StyleTrack {
  std::vector<Lesson> lessons;
  Test test;

  bool operator==(const StyleTrack&) const = default;
};

struct Session {
  std::string id;
  std::string title;
  std::array<std::optional<StyleTrack>, 3> tracks;  // indexed by CognitiveStyle

  // Throws Error(Invalid) when the group is missing.
  const StyleTrack& track(CognitiveStyle style) const;
  bool operator==(const Session&) const = default;
};

struct LessonLocation {
  std::size_t session_index = 0;
  CognitiveStyle style = CognitiveStyle::Wholistic;
  std::size_t lesson_index = 0;
};

struct CourseModel {
  std::string id;
  std::string title;
  std::vector<Session> sessions;

  // Throws Error(Invalid): at least one session, all three style groups per
  // session, at least one lesson per group, unique session and lesson ids,
  // four options per question and a valid answer key.
  void validate() const;

  std::optional<std::size_t> find_session(std::string_view session_id) const;
  std::optional<LessonLocation> find_lesson(std::string_view lesson_id) const;
  const Lesson& lesson_at(const LessonLocation& loc) const;

  // Parsing throws Error(Malformed) on type errors and validates afterwards.
  static CourseModel from_json(const nlohmann::json& doc);
  static CourseModel load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  bool operator==(const CourseModel&) const = default;
};

// Test body without answer keys.
nlohmann::json to_public_json(const Test& test);

}  // namespace ats

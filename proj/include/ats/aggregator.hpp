#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "ats/affect.hpp"
#include "ats/clip.hpp"
#include "json.hpp"

namespace ats {

// Lesson-level states, declared in the order the aggregator tests them.
enum class LessonState {
  NoFacePlusMultipleFaces,
  MultipleFaces,
  NumerousNoFaces,
  TiredUnfocused,
  TiredConfused,
  UnfocusedConfused,
  EngagedTired,
  EngagedConfused,
  DisengagedConfused,
  TiredNoFace,
  TiredDisengaged,
  EngagedNoFace,
  DisengagedNoFace,
  EngagedUnfocused,
  NoFace,
  Unfocused,
  Tired,
  Engaged,
  Confused,
  Disengaged,
  Neutral,
};

inline constexpr std::size_t kLessonStateCount = 21;

inline constexpr std::array<LessonState, kLessonStateCount> kLessonStatePriority = {
    LessonState::NoFacePlusMultipleFaces, LessonState::MultipleFaces,      LessonState::NumerousNoFaces,
    LessonState::TiredUnfocused,          LessonState::TiredConfused,      LessonState::UnfocusedConfused,
    LessonState::EngagedTired,            LessonState::EngagedConfused,    LessonState::DisengagedConfused,
    LessonState::TiredNoFace,             LessonState::TiredDisengaged,    LessonState::EngagedNoFace,
    LessonState::DisengagedNoFace,        LessonState::EngagedUnfocused,   LessonState::NoFace,
    LessonState::Unfocused,               LessonState::Tired,              LessonState::Engaged,
    LessonState::Confused,                LessonState::Disengaged,         LessonState::Neutral};

std::string_view to_string(LessonState state) noexcept;
std::optional<LessonState> parse_lesson_state(std::string_view name) noexcept;

// Position in the priority list; 0 is checked first.
constexpr std::size_t priority_index(LessonState state) noexcept { return static_cast<std::size_t>(state); }

// Number of 10-second clips per clip state for one lesson.
class StateCounts {
 public:
  StateCounts() = default;
  StateCounts(std::initializer_list<std::pair<ClipState, int>> init);

  static StateCounts tally(std::span<const ClipState> states);

  int operator[](ClipState s) const noexcept { return counts_[static_cast<std::size_t>(s)]; }
  int& operator[](ClipState s) noexcept { return counts_[static_cast<std::size_t>(s)]; }

  int total() const noexcept;
  bool operator==(const StateCounts&) const = default;

 private:
  std::array<int, kClipStateCount> counts_{};
};

// First entry of the priority list whose constituent clip states all have
// counts strictly above their thresholds. Neutral always matches.
LessonState aggregate(const StateCounts& counts, const ThresholdConfig& cfg);

enum class FeedbackVariant { Plain, WithSupplementary };

std::string_view to_string(FeedbackVariant variant) noexcept;

// The four confusion states that may recommend supplementary content.
bool recommends_supplementary(LessonState state) noexcept;

// Message templates keyed by (state, variant). A loaded catalog always holds
// a plain message for all 21 states and a supplementary variant for exactly
// the four confusion states.
class FeedbackCatalog {
 public:
  // Records of {"state", "variant", "message"}. Throws Error(Config).
  static FeedbackCatalog from_json(const nlohmann::json& doc);
  static FeedbackCatalog load(const std::filesystem::path& path);
  // Built-in English catalog.
  static const FeedbackCatalog& defaults();

  const std::string& message(LessonState state, FeedbackVariant variant) const;
  std::size_t size() const noexcept { return messages_.size(); }
  nlohmann::json to_json() const;

 private:
  FeedbackCatalog() = default;
  std::map<std::pair<LessonState, FeedbackVariant>, std::string> messages_;
};

struct Feedback {
  std::string message;
  bool recommend_supplementary = false;

  bool operator==(const Feedback&) const = default;
};

Feedback select_feedback(LessonState state, bool lesson_has_supplementary, const FeedbackCatalog& catalog);

}  // namespace ats

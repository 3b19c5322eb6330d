#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include "json.hpp"

namespace ats {

// Point on the valence/arousal plane. Both axes use the [-10, 10] scale of
// the affect network.
struct AffectPoint {
  double valence = 0.0;
  double arousal = 0.0;

  bool operator==(const AffectPoint&) const = default;
};

// Euler angles in degrees relative to the webcam lens.
struct HeadPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool operator==(const HeadPose&) const = default;
};

enum class EmotionalState { Engaged, Tired, Confused, Disengaged, Neutral };

inline constexpr std::array<EmotionalState, 5> kEmotionalStates = {
    EmotionalState::Engaged, EmotionalState::Tired, EmotionalState::Confused, EmotionalState::Disengaged,
    EmotionalState::Neutral};

std::string_view to_string(EmotionalState state) noexcept;

struct DegreeRange {
  double low = 0.0;
  double high = 0.0;

  constexpr bool contains(double x) const noexcept { return x >= low && x <= high; }
  bool operator==(const DegreeRange&) const = default;
};

// Per-state clip-count thresholds used by the lesson aggregator. A state
// takes part in a combination only when its clip count is strictly greater.
struct AggregatorThresholds {
  int disengaged = 0;
  int engaged = 1;
  int tired = 2;
  int confused = 2;
  int multiple_faces = 2;
  int no_face = 2;
  int numerous_no_faces = 4;
  int unfocused = 2;

  bool operator==(const AggregatorThresholds&) const = default;
};

// Every analyzer and aggregator constant. Defaults are the published values.
struct ThresholdConfig {
  double face_confidence_min = 0.7;
  double no_face_ratio_max = 0.25;
  double multi_face_ratio_max = 0.25;
  double unfocused_ratio_max = 0.35;
  DegreeRange yaw_focus{-29.0, 29.0};
  DegreeRange pitch_focus{-37.0, 16.0};

  // Circumplex boundaries. The config file names them alpha_1 .. alpha_6.
  double disengaged_arousal_max = -1.5;  // alpha_1
  double engaged_valence_min = 1.0;      // alpha_2
  double activated_arousal_min = 1.0;    // alpha_3
  double negative_valence_max = -2.0;    // alpha_4
  double high_arousal_min = 6.0;         // alpha_5
  double tired_arousal_max = -5.0;       // alpha_6

  double emotion_multiplier = 1.0;
  AggregatorThresholds aggregator{};

  bool operator==(const ThresholdConfig&) const = default;

  // Throws Error(Config) when an invariant does not hold.
  void validate() const;

  // Keys mirror the published table row names ("Face Detection confidence",
  // "Focus Yaw Range", "alpha_1", "Tired# - Aggregator", ...). Missing keys
  // keep their defaults; unknown keys are rejected.
  static ThresholdConfig from_json(const nlohmann::json& doc);
  static ThresholdConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Throws Error(Malformed) on non-finite components.
void validate(const AffectPoint& p);
// Throws Error(Malformed) on non-finite angles or angles outside [-180, 180].
void validate(const HeadPose& pose);

// Applies the emotion multiplier to both axes and clamps to [-10, 10].
AffectPoint scale_and_clamp(const AffectPoint& p, const ThresholdConfig& cfg) noexcept;

// Ordered circumplex rules over the scaled point (v, a):
//   a <= alpha_6                 -> Tired
//   v >= alpha_2 and a >= alpha_3 -> Engaged
//   a >= alpha_5 and v >  alpha_4 -> Engaged
//   v <= alpha_4 and a >= alpha_3 -> Confused
//   v <= alpha_4 and a <= alpha_1 -> Disengaged
//   otherwise                    -> Neutral
EmotionalState classify_emotion(const AffectPoint& p, const ThresholdConfig& cfg);

// Yaw and pitch inside their inclusive focus ranges. Roll is not used.
bool is_focused(const HeadPose& pose, const ThresholdConfig& cfg);

// Componentwise mean. Throws Error(Malformed) on an empty input.
AffectPoint mean_affect(std::span<const AffectPoint> points);

}  // namespace ats

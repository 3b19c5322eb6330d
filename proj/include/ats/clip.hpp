#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ats/affect.hpp"
#include "ats/kernels.hpp"
#include "ats/timestamp.hpp"
#include "json.hpp"

namespace ats {

// Normalized face rectangle; all values are fractions of the frame size.
struct NormalizedBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const NormalizedBox&) const = default;
};

struct FaceDetection {
  NormalizedBox box;
  double confidence = 0.0;

  bool operator==(const FaceDetection&) const = default;
};

// Outputs of the face, head-pose and affect networks for one frame.
struct FramePrediction {
  long long frame_index = 0;
  std::vector<FaceDetection> faces;
  std::optional<HeadPose> pose;
  std::optional<AffectPoint> affect;

  bool operator==(const FramePrediction&) const = default;
};

struct ClipObservation {
  std::string clip_id;
  std::string learner_id;
  std::string lesson_id;
  Timestamp recorded_at{};
  double fps = 15.0;
  std::vector<FramePrediction> frames;

  double duration_seconds() const { return static_cast<double>(frames.size()) / fps; }
  bool operator==(const ClipObservation&) const = default;
};

enum class ClipState { NoFace, MultipleFaces, Unfocused, Engaged, Tired, Confused, Disengaged, Neutral };

inline constexpr std::size_t kClipStateCount = 8;
inline constexpr std::array<ClipState, kClipStateCount> kClipStates = {
    ClipState::NoFace, ClipState::MultipleFaces, ClipState::Unfocused, ClipState::Engaged,
    ClipState::Tired,  ClipState::Confused,      ClipState::Disengaged, ClipState::Neutral};

std::string_view to_string(ClipState state) noexcept;
std::optional<ClipState> parse_clip_state(std::string_view name) noexcept;
ClipState to_clip_state(EmotionalState state) noexcept;

struct FrameCounts {
  std::size_t no_face = 0;
  std::size_t multiple_faces = 0;
  std::size_t single_face = 0;
  std::size_t unfocused = 0;
  std::size_t focused = 0;

  std::size_t total() const noexcept { return no_face + multiple_faces + single_face; }
  bool operator==(const FrameCounts&) const = default;
};

struct ClipResult {
  std::string clip_id;
  ClipState state = ClipState::Neutral;
  FrameCounts frame_counts;
  std::optional<AffectPoint> mean_affect;  // set iff an emotional state was computed
  std::size_t dropped_frames = 0;          // lenient mode only
  std::vector<std::string> warnings;

  bool operator==(const ClipResult&) const = default;
};

enum class FrameKind { NoFace, MultipleFaces, Unfocused, Focused };

struct FrameLabel {
  FrameKind kind = FrameKind::NoFace;
  AffectPoint affect{};  // meaningful for Focused only

  bool operator==(const FrameLabel&) const = default;
};

enum class FrameMode {
  Strict,   // single-face frames without pose or affect are rejected
  Lenient,  // such frames are dropped from every count
};

struct AnalyzerOptions {
  FrameMode mode = FrameMode::Strict;
  kernels::Backend backend = kernels::preferred();
};

// Faces at or above the confidence floor.
std::size_t qualifying_faces(const FramePrediction& frame, const ThresholdConfig& cfg) noexcept;

// Throws FrameError when one face qualifies but pose or affect is missing.
FrameLabel label_frame(const FramePrediction& frame, const ThresholdConfig& cfg);

// Structural checks on a clip (ids, fps, unique frame indices, box and
// confidence ranges, finite pose/affect). Throws Error(Malformed).
void validate(const ClipObservation& clip);

// No-face gate, then multiple-faces gate, then the unfocused gate over
// single-face frames, then circumplex classification of the mean affect of
// focused frames. Ratio gates use a strict '>' comparison.
ClipResult analyze_clip(const ClipObservation& clip, const ThresholdConfig& cfg, const AnalyzerOptions& options = {});

// Wire/file formats. Parsing throws Error(Malformed) with a field path.
FramePrediction frame_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FramePrediction& frame);
ClipObservation clip_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ClipObservation& clip);

// Line-delimited form: first line is the manifest without "frames", then one
// frame record per line.
ClipObservation clip_from_jsonl(std::string_view text);
std::string to_jsonl(const ClipObservation& clip);

// Reads a .json manifest or a .jsonl stream, chosen by extension.
ClipObservation load_clip(const std::filesystem::path& path);

nlohmann::json to_json(const ClipResult& result);
ClipResult clip_result_from_json(const nlohmann::json& doc);

}  // namespace ats

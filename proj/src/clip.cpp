#include "ats/clip.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ats/error.hpp"
#include "json_util.hpp"

namespace ats {
namespace {

using nlohmann::json;
namespace ju = json_util;

constexpr double kNominalClipSeconds = 10.0;

std::string frame_ctx(std::size_t position) { return "frames[" + std::to_string(position) + "]"; }

bool within_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void validate_face(const FaceDetection& face, long long frame_index) {
  const auto& b = face.box;
  const bool ok = within_unit(b.x) && within_unit(b.y) && within_unit(b.w) && within_unit(b.h) &&
                  b.x + b.w <= 1.0 && b.y + b.h <= 1.0 && within_unit(face.confidence);
  if (!ok) {
    fail(ErrorKind::Malformed,
         "frame " + std::to_string(frame_index) + ": face box must lie in the unit square and confidence in [0, 1]");
  }
}

}  // namespace

std::string_view to_string(ClipState state) noexcept {
  switch (state) {
    case ClipState::NoFace: return "NoFace";
    case ClipState::MultipleFaces: return "MultipleFaces";
    case ClipState::Unfocused: return "Unfocused";
    case ClipState::Engaged: return "Engaged";
    case ClipState::Tired: return "Tired";
    case ClipState::Confused: return "Confused";
    case ClipState::Disengaged: return "Disengaged";
    case ClipState::Neutral: return "Neutral";
  }
  return "Neutral";
}

std::optional<ClipState> parse_clip_state(std::string_view name) noexcept {
  for (ClipState s : kClipStates) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

ClipState to_clip_state(EmotionalState state) noexcept {
  switch (state) {
    case EmotionalState::Engaged: return ClipState::Engaged;
    case EmotionalState::Tired: return ClipState::Tired;
    case EmotionalState::Confused: return ClipState::Confused;
    case EmotionalState::Disengaged: return ClipState::Disengaged;
    case EmotionalState::Neutral: return ClipState::Neutral;
  }
  return ClipState::Neutral;
}

std::size_t qualifying_faces(const FramePrediction& frame, const ThresholdConfig& cfg) noexcept {
  return static_cast<std::size_t>(std::count_if(frame.faces.begin(), frame.faces.end(), [&](const FaceDetection& f) {
    return f.confidence >= cfg.face_confidence_min;
  }));
}

FrameLabel label_frame(const FramePrediction& frame, const ThresholdConfig& cfg) {
  const std::size_t faces = qualifying_faces(frame, cfg);
  if (faces == 0) return {FrameKind::NoFace, {}};
  if (faces >= 2) return {FrameKind::MultipleFaces, {}};
  if (!frame.pose || !frame.affect) {
    throw FrameError(frame.frame_index, "frame " + std::to_string(frame.frame_index) +
                                            ": single face without " + (frame.pose ? "affect" : "pose"));
  }
  if (!is_focused(*frame.pose, cfg)) return {FrameKind::Unfocused, {}};
  validate(*frame.affect);
  return {FrameKind::Focused, *frame.affect};
}

void validate(const ClipObservation& clip) {
  if (clip.clip_id.empty()) fail(ErrorKind::Malformed, "clip_id must be non-empty");
  if (clip.learner_id.empty()) fail(ErrorKind::Malformed, "learner_id must be non-empty");
  if (clip.lesson_id.empty()) fail(ErrorKind::Malformed, "lesson_id must be non-empty");
  if (!std::isfinite(clip.fps) || clip.fps <= 0.0) fail(ErrorKind::Malformed, "fps must be > 0");
  if (clip.frames.empty()) fail(ErrorKind::Malformed, "clip " + clip.clip_id + " has no frames");

  std::unordered_set<long long> seen;
  seen.reserve(clip.frames.size());
  for (const auto& frame : clip.frames) {
    if (frame.frame_index < 0) fail(ErrorKind::Malformed, "frame indices must be >= 0");
    if (!seen.insert(frame.frame_index).second) {
      fail(ErrorKind::Malformed, "duplicate frame index " + std::to_string(frame.frame_index));
    }
    for (const auto& face : frame.faces) validate_face(face, frame.frame_index);
    if (frame.pose) validate(*frame.pose);
    if (frame.affect) validate(*frame.affect);
  }
}

ClipResult analyze_clip(const ClipObservation& clip, const ThresholdConfig& cfg, const AnalyzerOptions& options) {
  validate(clip);

  // Canonical frame order makes the floating-point reduction independent of
  // the order frames arrive in.
  std::vector<std::size_t> order(clip.frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return clip.frames[a].frame_index < clip.frames[b].frame_index;
  });

  ClipResult result;
  result.clip_id = clip.clip_id;
  FrameCounts& counts = result.frame_counts;

  std::vector<double> yaw, pitch, valence, arousal;
  yaw.reserve(order.size());
  pitch.reserve(order.size());
  valence.reserve(order.size());
  arousal.reserve(order.size());

  for (std::size_t idx : order) {
    const FramePrediction& frame = clip.frames[idx];
    const std::size_t faces = qualifying_faces(frame, cfg);
    if (faces == 0) {
      ++counts.no_face;
    } else if (faces >= 2) {
      ++counts.multiple_faces;
    } else if (!frame.pose || !frame.affect) {
      if (options.mode == FrameMode::Strict) {
        throw FrameError(frame.frame_index, "frame " + std::to_string(frame.frame_index) +
                                                ": single face without " + (frame.pose ? "affect" : "pose"));
      }
      ++result.dropped_frames;
    } else {
      ++counts.single_face;
      yaw.push_back(frame.pose->yaw);
      pitch.push_back(frame.pose->pitch);
      valence.push_back(frame.affect->valence);
      arousal.push_back(frame.affect->arousal);
    }
  }

  if (result.dropped_frames > 0) {
    result.warnings.push_back(std::to_string(result.dropped_frames) +
                              " single-face frame(s) without pose or affect were dropped");
  }
  if (clip.duration_seconds() > kNominalClipSeconds + 1e-9) {
    result.warnings.push_back("clip is longer than the nominal 10 s sample");
  }

  const std::size_t total = counts.total();
  if (total == 0) fail(ErrorKind::Invalid, "clip " + clip.clip_id + " has no usable frames");
  const double n = static_cast<double>(total);

  if (static_cast<double>(counts.no_face) / n > cfg.no_face_ratio_max) {
    result.state = ClipState::NoFace;
    return result;
  }
  if (static_cast<double>(counts.multiple_faces) / n > cfg.multi_face_ratio_max) {
    result.state = ClipState::MultipleFaces;
    return result;
  }
  // Both gates above passing implies single-face frames exist for any valid
  // config with ratios below 0.5.
  if (counts.single_face == 0) {
    fail(ErrorKind::Internal, "clip " + clip.clip_id + " has no single-face frames after the presence gates");
  }

  const kernels::FocusStats stats =
      kernels::focus_reduce({yaw, pitch, valence, arousal}, cfg.yaw_focus, cfg.pitch_focus, options.backend);
  counts.focused = stats.focused;
  counts.unfocused = counts.single_face - stats.focused;

  if (static_cast<double>(counts.unfocused) / static_cast<double>(counts.single_face) > cfg.unfocused_ratio_max ||
      stats.focused == 0) {
    result.state = ClipState::Unfocused;
    return result;
  }

  const double focused = static_cast<double>(stats.focused);
  const AffectPoint mean{stats.valence_sum / focused, stats.arousal_sum / focused};
  result.mean_affect = mean;
  result.state = to_clip_state(classify_emotion(mean, cfg));
  return result;
}

// ---------------------------------------------------------------------------
// JSON

FramePrediction frame_from_json(const json& doc) {
  FramePrediction frame;
  frame.frame_index = ju::require_integer(doc, "frame", "frame");
  const std::string ctx = "frame " + std::to_string(frame.frame_index);
  if (ju::has(doc, "faces")) {
    for (const auto& face : ju::require_array(doc, "faces", ctx)) {
      const auto& box = ju::require_array(face, "box", ctx + ".faces");
      if (box.size() != 4 || !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
        fail(ErrorKind::Malformed, ctx + ": box must be [x, y, w, h]");
      }
      frame.faces.push_back({{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()},
                             ju::require_number(face, "conf", ctx + ".faces")});
    }
  }
  if (ju::has(doc, "pose")) {
    const auto& pose = ju::require_object(doc, "pose", ctx);
    frame.pose = HeadPose{ju::require_number(pose, "yaw", ctx + ".pose"), ju::require_number(pose, "pitch", ctx + ".pose"),
                          ju::has(pose, "roll") ? ju::require_number(pose, "roll", ctx + ".pose") : 0.0};
  }
  if (ju::has(doc, "affect")) {
    const auto& affect = ju::require_object(doc, "affect", ctx);
    frame.affect = AffectPoint{ju::require_number(affect, "valence", ctx + ".affect"),
                               ju::require_number(affect, "arousal", ctx + ".affect")};
  }
  return frame;
}

json to_json(const FramePrediction& frame) {
  json doc;
  doc["frame"] = frame.frame_index;
  json faces = json::array();
  for (const auto& f : frame.faces) {
    faces.push_back({{"box", {f.box.x, f.box.y, f.box.w, f.box.h}}, {"conf", f.confidence}});
  }
  doc["faces"] = std::move(faces);
  if (frame.pose) doc["pose"] = {{"yaw", frame.pose->yaw}, {"pitch", frame.pose->pitch}, {"roll", frame.pose->roll}};
  if (frame.affect) doc["affect"] = {{"valence", frame.affect->valence}, {"arousal", frame.affect->arousal}};
  return doc;
}

namespace {

ClipObservation header_from_json(const json& doc) {
  ClipObservation clip;
  clip.clip_id = ju::require_string(doc, "clip_id", "clip");
  clip.learner_id = ju::require_string(doc, "learner_id", "clip");
  clip.lesson_id = ju::require_string(doc, "lesson_id", "clip");
  clip.recorded_at = parse_timestamp(ju::require_string(doc, "recorded_at", "clip"));
  clip.fps = ju::has(doc, "fps") ? ju::require_number(doc, "fps", "clip") : 15.0;
  return clip;
}

json header_to_json(const ClipObservation& clip) {
  return {{"clip_id", clip.clip_id},
          {"learner_id", clip.learner_id},
          {"lesson_id", clip.lesson_id},
          {"recorded_at", format_timestamp(clip.recorded_at)},
          {"fps", clip.fps}};
}

}  // namespace

ClipObservation clip_from_json(const json& doc) {
  ClipObservation clip = header_from_json(doc);
  const auto& frames = ju::require_array(doc, "frames", "clip");
  clip.frames.reserve(frames.size());
  for (const auto& f : frames) clip.frames.push_back(frame_from_json(f));
  return clip;
}

json to_json(const ClipObservation& clip) {
  json doc = header_to_json(clip);
  json frames = json::array();
  for (const auto& f : clip.frames) frames.push_back(to_json(f));
  doc["frames"] = std::move(frames);
  return doc;
}

ClipObservation clip_from_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<ClipObservation> clip;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json doc = ju::parse(line, "line " + std::to_string(line_no));
    if (!clip) {
      clip = header_from_json(doc);
    } else {
      clip->frames.push_back(frame_from_json(doc));
    }
  }
  if (!clip) fail(ErrorKind::Malformed, "empty clip stream");
  return std::move(*clip);
}

std::string to_jsonl(const ClipObservation& clip) {
  std::string out = header_to_json(clip).dump();
  out += '\n';
  for (const auto& f : clip.frames) {
    out += to_json(f).dump();
    out += '\n';
  }
  return out;
}

ClipObservation load_clip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open clip file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".jsonl") return clip_from_jsonl(buf.str());
  return clip_from_json(ju::parse(buf.str(), path.string()));
}

json to_json(const ClipResult& result) {
  const auto& c = result.frame_counts;
  json doc = {{"clip_id", result.clip_id},
              {"state", to_string(result.state)},
              {"frame_counts",
               {{"no_face", c.no_face},
                {"multiple_faces", c.multiple_faces},
                {"single_face", c.single_face},
                {"unfocused", c.unfocused},
                {"focused", c.focused}}},
              {"dropped_frames", result.dropped_frames},
              {"warnings", result.warnings}};
  if (result.mean_affect) {
    doc["mean_affect"] = {{"valence", result.mean_affect->valence}, {"arousal", result.mean_affect->arousal}};
  }
  return doc;
}

ClipResult clip_result_from_json(const json& doc) {
  ClipResult result;
  result.clip_id = ju::require_string(doc, "clip_id", "clip_result");
  const auto state = parse_clip_state(ju::require_string(doc, "state", "clip_result"));
  if (!state) fail(ErrorKind::Malformed, "clip_result.state is not a clip state");
  result.state = *state;
  const auto& c = ju::require_object(doc, "frame_counts", "clip_result");
  auto count = [&](const char* key) {
    return static_cast<std::size_t>(ju::require_integer(c, key, "clip_result.frame_counts"));
  };
  result.frame_counts = {count("no_face"), count("multiple_faces"), count("single_face"), count("unfocused"),
                         count("focused")};
  if (ju::has(doc, "mean_affect")) {
    const auto& m = ju::require_object(doc, "mean_affect", "clip_result");
    result.mean_affect = AffectPoint{ju::require_number(m, "valence", "mean_affect"),
                                     ju::require_number(m, "arousal", "mean_affect")};
  }
  if (ju::has(doc, "dropped_frames")) {
    result.dropped_frames = static_cast<std::size_t>(ju::require_integer(doc, "dropped_frames", "clip_result"));
  }
  if (ju::has(doc, "warnings")) result.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return result;
}

}  // namespace ats

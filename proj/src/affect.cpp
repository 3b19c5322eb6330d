#include "ats/affect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats {
namespace {

constexpr double kAffectLimit = 10.0;

// Config file keys, in table order.
constexpr const char* kFaceConfidence = "Face Detection confidence";
constexpr const char* kNoFaceRatio = "No-Face / Total";
constexpr const char* kMultiFaceRatio = "Multiple-Faces / Total";
constexpr const char* kUnfocusedRatio = "Unfocused / Total";
constexpr const char* kYawRange = "Focus Yaw Range";
constexpr const char* kPitchRange = "Focus Pitch Range";
constexpr const char* kAlpha[6] = {"alpha_1", "alpha_2", "alpha_3", "alpha_4", "alpha_5", "alpha_6"};
constexpr const char* kMultiplier = "Emotion Multiplier";
constexpr const char* kAggDisengaged = "Disengaged# - Aggregator";
constexpr const char* kAggEngaged = "Engaged# - Aggregator";
constexpr const char* kAggTired = "Tired# - Aggregator";
constexpr const char* kAggConfused = "Confused# - Aggregator";
constexpr const char* kAggMultipleFaces = "Multiple-Faces# - Aggregator";
constexpr const char* kAggNoFace = "No-Face# - Aggregator";
constexpr const char* kAggNumerousNoFaces = "Numerous No-Faces# - Aggregator";
constexpr const char* kAggUnfocused = "Unfocused# - Aggregator";

double* alpha_slot(ThresholdConfig& cfg, int index) {
  switch (index) {
    case 0: return &cfg.disengaged_arousal_max;
    case 1: return &cfg.engaged_valence_min;
    case 2: return &cfg.activated_arousal_min;
    case 3: return &cfg.negative_valence_max;
    case 4: return &cfg.high_arousal_min;
    default: return &cfg.tired_arousal_max;
  }
}

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Config, "threshold config: " + what);
}

double read_number(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) fail(ErrorKind::Config, std::string("threshold config: '") + key + "' must be a number");
  return v.get<double>();
}

int read_count(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer()) {
    fail(ErrorKind::Config, std::string("threshold config: '") + key + "' must be an integer");
  }
  return v.get<int>();
}

DegreeRange read_range(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(ErrorKind::Config, std::string("threshold config: '") + key + "' must be [low, high]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

std::string_view to_string(EmotionalState state) noexcept {
  switch (state) {
    case EmotionalState::Engaged: return "Engaged";
    case EmotionalState::Tired: return "Tired";
    case EmotionalState::Confused: return "Confused";
    case EmotionalState::Disengaged: return "Disengaged";
    case EmotionalState::Neutral: return "Neutral";
  }
  return "Neutral";
}

void ThresholdConfig::validate() const {
  auto is_ratio = [](double r) { return std::isfinite(r) && r >= 0.0 && r <= 1.0; };
  check(is_ratio(face_confidence_min), "face confidence must lie in [0, 1]");
  check(is_ratio(no_face_ratio_max), "no-face ratio must lie in [0, 1]");
  check(is_ratio(multi_face_ratio_max), "multiple-faces ratio must lie in [0, 1]");
  check(is_ratio(unfocused_ratio_max), "unfocused ratio must lie in [0, 1]");
  check(std::isfinite(yaw_focus.low) && std::isfinite(yaw_focus.high) && yaw_focus.low <= yaw_focus.high,
        "yaw focus range must be finite with low <= high");
  check(std::isfinite(pitch_focus.low) && std::isfinite(pitch_focus.high) && pitch_focus.low <= pitch_focus.high,
        "pitch focus range must be finite with low <= high");
  for (double a : {disengaged_arousal_max, engaged_valence_min, activated_arousal_min, negative_valence_max,
                   high_arousal_min, tired_arousal_max}) {
    check(std::isfinite(a), "alpha values must be finite");
  }
  check(tired_arousal_max < disengaged_arousal_max && disengaged_arousal_max < activated_arousal_min &&
            activated_arousal_min <= high_arousal_min,
        "alpha ordering requires alpha_6 < alpha_1 < alpha_3 <= alpha_5");
  check(negative_valence_max < engaged_valence_min, "alpha ordering requires alpha_4 < alpha_2");
  check(std::isfinite(emotion_multiplier) && emotion_multiplier > 0.0, "emotion multiplier must be > 0");
  const auto& g = aggregator;
  for (int n : {g.disengaged, g.engaged, g.tired, g.confused, g.multiple_faces, g.no_face, g.numerous_no_faces,
                g.unfocused}) {
    check(n >= 0, "aggregator counts must be non-negative");
  }
}

ThresholdConfig ThresholdConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorKind::Config, "threshold config must be a JSON object");

  static const std::set<std::string> known = {
      kFaceConfidence, kNoFaceRatio, kMultiFaceRatio, kUnfocusedRatio, kYawRange, kPitchRange,
      kAlpha[0], kAlpha[1], kAlpha[2], kAlpha[3], kAlpha[4], kAlpha[5], kMultiplier,
      kAggDisengaged, kAggEngaged, kAggTired, kAggConfused, kAggMultipleFaces, kAggNoFace,
      kAggNumerousNoFaces, kAggUnfocused};
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) fail(ErrorKind::Config, "threshold config: unknown key '" + item.key() + "'");
  }

  ThresholdConfig cfg;
  if (doc.contains(kFaceConfidence)) cfg.face_confidence_min = read_number(doc, kFaceConfidence);
  if (doc.contains(kNoFaceRatio)) cfg.no_face_ratio_max = read_number(doc, kNoFaceRatio);
  if (doc.contains(kMultiFaceRatio)) cfg.multi_face_ratio_max = read_number(doc, kMultiFaceRatio);
  if (doc.contains(kUnfocusedRatio)) cfg.unfocused_ratio_max = read_number(doc, kUnfocusedRatio);
  if (doc.contains(kYawRange)) cfg.yaw_focus = read_range(doc, kYawRange);
  if (doc.contains(kPitchRange)) cfg.pitch_focus = read_range(doc, kPitchRange);
  for (int i = 0; i < 6; ++i) {
    if (doc.contains(kAlpha[i])) *alpha_slot(cfg, i) = read_number(doc, kAlpha[i]);
  }
  if (doc.contains(kMultiplier)) cfg.emotion_multiplier = read_number(doc, kMultiplier);

  auto& g = cfg.aggregator;
  if (doc.contains(kAggDisengaged)) g.disengaged = read_count(doc, kAggDisengaged);
  if (doc.contains(kAggEngaged)) g.engaged = read_count(doc, kAggEngaged);
  if (doc.contains(kAggTired)) g.tired = read_count(doc, kAggTired);
  if (doc.contains(kAggConfused)) g.confused = read_count(doc, kAggConfused);
  if (doc.contains(kAggMultipleFaces)) g.multiple_faces = read_count(doc, kAggMultipleFaces);
  if (doc.contains(kAggNoFace)) g.no_face = read_count(doc, kAggNoFace);
  if (doc.contains(kAggNumerousNoFaces)) g.numerous_no_faces = read_count(doc, kAggNumerousNoFaces);
  if (doc.contains(kAggUnfocused)) g.unfocused = read_count(doc, kAggUnfocused);

  cfg.validate();
  return cfg;
}

ThresholdConfig ThresholdConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open threshold config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "threshold config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json ThresholdConfig::to_json() const {
  ThresholdConfig copy = *this;
  nlohmann::json doc = nlohmann::json::object();
  doc[kFaceConfidence] = face_confidence_min;
  doc[kNoFaceRatio] = no_face_ratio_max;
  doc[kMultiFaceRatio] = multi_face_ratio_max;
  doc[kUnfocusedRatio] = unfocused_ratio_max;
  doc[kYawRange] = {yaw_focus.low, yaw_focus.high};
  doc[kPitchRange] = {pitch_focus.low, pitch_focus.high};
  for (int i = 0; i < 6; ++i) doc[kAlpha[i]] = *alpha_slot(copy, i);
  doc[kMultiplier] = emotion_multiplier;
  doc[kAggDisengaged] = aggregator.disengaged;
  doc[kAggEngaged] = aggregator.engaged;
  doc[kAggTired] = aggregator.tired;
  doc[kAggConfused] = aggregator.confused;
  doc[kAggMultipleFaces] = aggregator.multiple_faces;
  doc[kAggNoFace] = aggregator.no_face;
  doc[kAggNumerousNoFaces] = aggregator.numerous_no_faces;
  doc[kAggUnfocused] = aggregator.unfocused;
  return doc;
}

void validate(const AffectPoint& p) {
  if (!std::isfinite(p.valence) || !std::isfinite(p.arousal)) {
    fail(ErrorKind::Malformed, "affect point must be finite");
  }
}

void validate(const HeadPose& pose) {
  for (double angle : {pose.yaw, pose.pitch, pose.roll}) {
    if (!std::isfinite(angle) || angle < -180.0 || angle > 180.0) {
      fail(ErrorKind::Malformed, "head pose angles must be finite and within [-180, 180]");
    }
  }
}

AffectPoint scale_and_clamp(const AffectPoint& p, const ThresholdConfig& cfg) noexcept {
  return {std::clamp(p.valence * cfg.emotion_multiplier, -kAffectLimit, kAffectLimit),
          std::clamp(p.arousal * cfg.emotion_multiplier, -kAffectLimit, kAffectLimit)};
}

EmotionalState classify_emotion(const AffectPoint& p, const ThresholdConfig& cfg) {
  validate(p);
  const auto [v, a] = scale_and_clamp(p, cfg);
  if (a <= cfg.tired_arousal_max) return EmotionalState::Tired;
  if (v >= cfg.engaged_valence_min && a >= cfg.activated_arousal_min) return EmotionalState::Engaged;
  if (a >= cfg.high_arousal_min && v > cfg.negative_valence_max) return EmotionalState::Engaged;
  if (v <= cfg.negative_valence_max && a >= cfg.activated_arousal_min) return EmotionalState::Confused;
  if (v <= cfg.negative_valence_max && a <= cfg.disengaged_arousal_max) return EmotionalState::Disengaged;
  return EmotionalState::Neutral;
}

bool is_focused(const HeadPose& pose, const ThresholdConfig& cfg) {
  validate(pose);
  return cfg.yaw_focus.contains(pose.yaw) && cfg.pitch_focus.contains(pose.pitch);
}

AffectPoint mean_affect(std::span<const AffectPoint> points) {
  if (points.empty()) fail(ErrorKind::Malformed, "mean_affect needs at least one point");
  std::vector<double> valence(points.size());
  std::vector<double> arousal(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    validate(points[i]);
    valence[i] = points[i].valence;
    arousal[i] = points[i].arousal;
  }
  const AffectPoint sum = kernels::affect_sum(valence, arousal);
  const double n = static_cast<double>(points.size());
  return {sum.valence / n, sum.arousal / n};
}

}  // namespace ats

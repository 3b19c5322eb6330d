#include "oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace ats::oracle {

std::array<bool, 21> lesson_predicates(const Counts& c, const AggregatorThresholds& t) {
  const bool nf = c.no_face > t.no_face;
  const bool mf = c.multiple_faces > t.multiple_faces;
  const bool many_nf = c.no_face > t.numerous_no_faces;
  const bool unf = c.unfocused > t.unfocused;
  const bool eng = c.engaged > t.engaged;
  const bool tir = c.tired > t.tired;
  const bool con = c.confused > t.confused;
  const bool dis = c.disengaged > t.disengaged;
  return {
      nf && mf,    // No-Face + Multiple-Faces
      mf,          // Multiple-Faces
      many_nf,     // Numerous No-Faces
      tir && unf,  // Tired + Unfocused
      tir && con,  // Tired + Confused
      unf && con,  // Unfocused + Confused
      eng && tir,  // Engaged + Tired
      eng && con,  // Engaged + Confused
      dis && con,  // Disengaged + Confused
      tir && nf,   // Tired + No-Face
      tir && dis,  // Tired + Disengaged
      eng && nf,   // Engaged + No-Face
      dis && nf,   // Disengaged + No-Face
      eng && unf,  // Engaged + Unfocused
      nf,          // No-Face
      unf,         // Unfocused
      tir,         // Tired
      eng,         // Engaged
      con,         // Confused
      dis,         // Disengaged
      true,        // Neutral
  };
}

std::string brute_force_lesson_state(const Counts& c, const AggregatorThresholds& t) {
  static const std::array<const char*, 21> names = {
      "NoFacePlusMultipleFaces", "MultipleFaces",   "NumerousNoFaces", "TiredUnfocused",   "TiredConfused",
      "UnfocusedConfused",       "EngagedTired",    "EngagedConfused", "DisengagedConfused", "TiredNoFace",
      "TiredDisengaged",         "EngagedNoFace",   "DisengagedNoFace", "EngagedUnfocused", "NoFace",
      "Unfocused",               "Tired",           "Engaged",         "Confused",         "Disengaged",
      "Neutral"};
  const auto p = lesson_predicates(c, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) return names[i];
  }
  return "";
}

std::array<bool, 5> region_membership(double valence, double arousal, const ThresholdConfig& cfg) {
  const double v = std::clamp(valence * cfg.emotion_multiplier, -10.0, 10.0);
  const double a = std::clamp(arousal * cfg.emotion_multiplier, -10.0, 10.0);
  const double a1 = cfg.disengaged_arousal_max, a2 = cfg.engaged_valence_min, a3 = cfg.activated_arousal_min;
  const double a4 = cfg.negative_valence_max, a5 = cfg.high_arousal_min, a6 = cfg.tired_arousal_max;

  // The bottom band belongs to Tired whatever the valence.
  const bool tired = a <= a6;
  const bool above_tired = !tired;
  // Upper right quadrant, plus the high-arousal strip that reaches left
  // down to (but excluding) the negative-valence boundary.
  const bool engaged = above_tired && ((v >= a2 && a >= a3) || (a >= a5 && v > a4));
  // Upper left: negative valence, activated, and not already claimed.
  const bool confused = above_tired && !engaged && v <= a4 && a >= a3;
  // Lower left above the tired band.
  const bool disengaged = above_tired && !engaged && !confused && v <= a4 && a <= a1;
  const bool neutral = !tired && !engaged && !confused && !disengaged;
  return {engaged, tired, confused, disengaged, neutral};
}

std::string region_name(double valence, double arousal, const ThresholdConfig& cfg) {
  static const std::array<const char*, 5> names = {"Engaged", "Tired", "Confused", "Disengaged", "Neutral"};
  const auto m = region_membership(valence, arousal, cfg);
  std::string found;
  int hits = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) {
      ++hits;
      found = names[i];
    }
  }
  return hits == 1 ? found : "";
}

ReferenceClip reference_analyze(const ClipObservation& clip, const ThresholdConfig& cfg) {
  ReferenceClip out;
  double sv = 0.0, sa = 0.0;
  for (const auto& frame : clip.frames) {
    int qualifying = 0;
    for (const auto& face : frame.faces) {
      if (face.confidence >= cfg.face_confidence_min) ++qualifying;
    }
    if (qualifying == 0) {
      ++out.no_face;
    } else if (qualifying > 1) {
      ++out.multiple_faces;
    } else {
      ++out.single_face;
      if (!frame.pose || !frame.affect) throw std::invalid_argument("single-face frame without pose or affect");
      const bool yaw_ok = frame.pose->yaw >= cfg.yaw_focus.low && frame.pose->yaw <= cfg.yaw_focus.high;
      const bool pitch_ok = frame.pose->pitch >= cfg.pitch_focus.low && frame.pose->pitch <= cfg.pitch_focus.high;
      if (yaw_ok && pitch_ok) {
        ++out.focused;
        sv += frame.affect->valence;
        sa += frame.affect->arousal;
      } else {
        ++out.unfocused;
      }
    }
  }
  const double n = static_cast<double>(clip.frames.size());
  if (n == 0) throw std::invalid_argument("empty clip");
  if (static_cast<double>(out.no_face) / n > cfg.no_face_ratio_max) {
    out.state = "NoFace";
  } else if (static_cast<double>(out.multiple_faces) / n > cfg.multi_face_ratio_max) {
    out.state = "MultipleFaces";
  } else if (static_cast<double>(out.unfocused) / static_cast<double>(out.single_face) > cfg.unfocused_ratio_max ||
             out.focused == 0) {
    out.state = "Unfocused";
  } else {
    out.mean_valence = sv / static_cast<double>(out.focused);
    out.mean_arousal = sa / static_cast<double>(out.focused);
    out.state = region_name(out.mean_valence, out.mean_arousal, cfg);
  }
  return out;
}

}  // namespace ats::oracle

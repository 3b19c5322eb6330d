#pragma once

// Reference implementations kept deliberately separate from the library
// code paths. They share only the plain data types, never the decision
// logic, so that a disagreement points at a real bug in one of the two.

#include <array>
#include <string>

#include "ats/affect.hpp"
#include "ats/clip.hpp"

namespace ats::oracle {

// Clip counts in a fixed positional order, independent of any library enum.
struct Counts {
  int no_face = 0;
  int multiple_faces = 0;
  int unfocused = 0;
  int engaged = 0;
  int tired = 0;
  int confused = 0;
  int disengaged = 0;
  int neutral = 0;
};

// Evaluates every lesson-state predicate on its own, then returns the name
// of the first true one in priority order.
std::string brute_force_lesson_state(const Counts& c, const AggregatorThresholds& t);

// All 21 predicate values, in priority order.
std::array<bool, 21> lesson_predicates(const Counts& c, const AggregatorThresholds& t);

// Membership of (v, a) in each of the five circumplex regions, written as
// disjoint geometric sets. Index order: Engaged, Tired, Confused, Disengaged,
// Neutral. Exactly one entry is true for every point if the regions
// partition the plane.
std::array<bool, 5> region_membership(double valence, double arousal, const ThresholdConfig& cfg);

// Name of the single region containing the point, or "" when the point is in
// zero or several regions.
std::string region_name(double valence, double arousal, const ThresholdConfig& cfg);

struct ReferenceClip {
  std::string state;
  long long no_face = 0;
  long long multiple_faces = 0;
  long long single_face = 0;
  long long unfocused = 0;
  long long focused = 0;
  double mean_valence = 0.0;
  double mean_arousal = 0.0;
};

// Straight-line reimplementation of clip analysis (strict mode). Throws
// std::invalid_argument on a single-face frame lacking pose or affect.
ReferenceClip reference_analyze(const ClipObservation& clip, const ThresholdConfig& cfg);

}  // namespace ats::oracle

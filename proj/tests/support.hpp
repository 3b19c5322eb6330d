#pragma once

#include <string>
#include <vector>

#include "ats/clip.hpp"
#include "ats/course.hpp"
#include "ats/timestamp.hpp"

namespace ats::testing {

inline std::string source_path(const std::string& rel) { return std::string(ATS_SOURCE_DIR) + "/" + rel; }

inline CourseModel fixture() { return CourseModel::load(source_path("data/courses/ai_for_everyone.json")); }

inline FramePrediction no_face_frame(long long index) {
  FramePrediction f;
  f.frame_index = index;
  return f;
}

inline FramePrediction multi_face_frame(long long index) {
  FramePrediction f;
  f.frame_index = index;
  f.faces = {{{0.1, 0.2, 0.2, 0.3}, 0.9}, {{0.6, 0.2, 0.2, 0.3}, 0.85}};
  return f;
}

inline FramePrediction face_frame(long long index, double yaw, double pitch, double valence, double arousal,
                                  double confidence = 0.9) {
  FramePrediction f;
  f.frame_index = index;
  f.faces = {{{0.3, 0.2, 0.25, 0.35}, confidence}};
  f.pose = HeadPose{yaw, pitch, 0.0};
  f.affect = AffectPoint{valence, arousal};
  return f;
}

inline FramePrediction focused_frame(long long index, double valence, double arousal) {
  return face_frame(index, 0.0, 0.0, valence, arousal);
}

inline FramePrediction unfocused_frame(long long index) { return face_frame(index, 45.0, 0.0, 0.0, 0.0); }

inline ClipObservation make_clip(std::string id, std::string learner, std::string lesson,
                                 std::vector<FramePrediction> frames,
                                 Timestamp at = parse_timestamp("2024-03-04T09:00:00Z")) {
  ClipObservation c;
  c.clip_id = std::move(id);
  c.learner_id = std::move(learner);
  c.lesson_id = std::move(lesson);
  c.recorded_at = at;
  c.frames = std::move(frames);
  return c;
}

// 150 focused frames at a fixed affect point.
inline ClipObservation steady_clip(std::string id, std::string learner, std::string lesson, double valence,
                                   double arousal, Timestamp at = parse_timestamp("2024-03-04T09:00:00Z")) {
  std::vector<FramePrediction> frames;
  for (int i = 0; i < 150; ++i) frames.push_back(focused_frame(i, valence, arousal));
  return make_clip(std::move(id), std::move(learner), std::move(lesson), std::move(frames), at);
}

}  // namespace ats::testing

#include <cstddef>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorKind::Internal, "kernel columns differ in length");
}

}  // namespace

FocusStats focus_reduce_scalar(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch) {
  const std::size_t n = cols.yaw.size();
  check_lengths(n, cols.pitch.size());
  check_lengths(n, cols.valence.size());
  check_lengths(n, cols.arousal.size());

  double vsum[kLanes] = {0.0, 0.0, 0.0, 0.0};
  double asum[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t focused = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool in = yaw.contains(cols.yaw[i]) && pitch.contains(cols.pitch[i]);
    focused += in ? 1 : 0;
    vsum[i % kLanes] += in ? cols.valence[i] : 0.0;
    asum[i % kLanes] += in ? cols.arousal[i] : 0.0;
  }
  return {focused, (vsum[0] + vsum[1]) + (vsum[2] + vsum[3]), (asum[0] + asum[1]) + (asum[2] + asum[3])};
}

AffectPoint affect_sum_scalar(std::span<const double> valence, std::span<const double> arousal) {
  check_lengths(valence.size(), arousal.size());
  double vsum[kLanes] = {0.0, 0.0, 0.0, 0.0};
  double asum[kLanes] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < valence.size(); ++i) {
    vsum[i % kLanes] += valence[i];
    asum[i % kLanes] += arousal[i];
  }
  return {(vsum[0] + vsum[1]) + (vsum[2] + vsum[3]), (asum[0] + asum[1]) + (asum[2] + asum[3])};
}

void classify_batch_scalar(std::span<const double> valence, std::span<const double> arousal,
                           const ThresholdConfig& cfg, std::span<EmotionalState> out) {
  check_lengths(valence.size(), arousal.size());
  check_lengths(valence.size(), out.size());
  for (std::size_t i = 0; i < valence.size(); ++i) {
    out[i] = classify_emotion({valence[i], arousal[i]}, cfg);
  }
}

}  // namespace ats::kernels::detail

#pragma once

// Data-parallel inner loops of the analyzer. Each kernel has a scalar
// reference and an AVX2 variant; both use the same 4-lane blocked summation
// order, so their results are bit-identical and the variants can be swapped
// at runtime without changing any analyzer output.

#include <cstddef>
#include <span>
#include <string_view>

#include "ats/affect.hpp"

namespace ats::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend) noexcept;

// True when the variant was compiled in and the running CPU supports it.
bool available(Backend backend) noexcept;

// Best available backend. ATS_KERNELS=scalar in the environment forces the
// scalar reference.
Backend preferred() noexcept;

// Single-face frames in structure-of-arrays form. All spans have equal length.
struct PoseAffectColumns {
  std::span<const double> yaw;
  std::span<const double> pitch;
  std::span<const double> valence;
  std::span<const double> arousal;
};

struct FocusStats {
  std::size_t focused = 0;
  double valence_sum = 0.0;
  double arousal_sum = 0.0;

  bool operator==(const FocusStats&) const = default;
};

// Counts frames whose yaw and pitch fall inside the inclusive ranges and sums
// their affect components.
FocusStats focus_reduce(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch, Backend backend);

// Blocked sum of both affect components.
AffectPoint affect_sum(std::span<const double> valence, std::span<const double> arousal, Backend backend);

// classify_emotion over paired columns. Throws Error(Malformed) on any
// non-finite input.
void classify_batch(std::span<const double> valence, std::span<const double> arousal, const ThresholdConfig& cfg,
                    std::span<EmotionalState> out, Backend backend);

inline FocusStats focus_reduce(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch) {
  return focus_reduce(cols, yaw, pitch, preferred());
}
inline AffectPoint affect_sum(std::span<const double> valence, std::span<const double> arousal) {
  return affect_sum(valence, arousal, preferred());
}
inline void classify_batch(std::span<const double> valence, std::span<const double> arousal,
                           const ThresholdConfig& cfg, std::span<EmotionalState> out) {
  classify_batch(valence, arousal, cfg, out, preferred());
}

namespace detail {

FocusStats focus_reduce_scalar(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch);
AffectPoint affect_sum_scalar(std::span<const double> valence, std::span<const double> arousal);
void classify_batch_scalar(std::span<const double> valence, std::span<const double> arousal,
                           const ThresholdConfig& cfg, std::span<EmotionalState> out);

#if defined(ATS_HAVE_AVX2)
FocusStats focus_reduce_avx2(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch);
AffectPoint affect_sum_avx2(std::span<const double> valence, std::span<const double> arousal);
void classify_batch_avx2(std::span<const double> valence, std::span<const double> arousal,
                         const ThresholdConfig& cfg, std::span<EmotionalState> out);
#endif

}  // namespace detail
}  // namespace ats::kernels

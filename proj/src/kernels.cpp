#include "ats/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace ats::kernels {

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool available(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(ATS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Backend preferred() noexcept {
  static const Backend choice = [] {
    const char* forced = std::getenv("ATS_KERNELS");
    if (forced != nullptr && std::string_view(forced) == "scalar") return Backend::Scalar;
    return available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
  }();
  return choice;
}

FocusStats focus_reduce(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch, Backend backend) {
#if defined(ATS_HAVE_AVX2)
  if (backend == Backend::Avx2 && available(Backend::Avx2)) return detail::focus_reduce_avx2(cols, yaw, pitch);
#endif
  (void)backend;
  return detail::focus_reduce_scalar(cols, yaw, pitch);
}

AffectPoint affect_sum(std::span<const double> valence, std::span<const double> arousal, Backend backend) {
#if defined(ATS_HAVE_AVX2)
  if (backend == Backend::Avx2 && available(Backend::Avx2)) return detail::affect_sum_avx2(valence, arousal);
#endif
  (void)backend;
  return detail::affect_sum_scalar(valence, arousal);
}

void classify_batch(std::span<const double> valence, std::span<const double> arousal, const ThresholdConfig& cfg,
                    std::span<EmotionalState> out, Backend backend) {
#if defined(ATS_HAVE_AVX2)
  if (backend == Backend::Avx2 && available(Backend::Avx2)) {
    detail::classify_batch_avx2(valence, arousal, cfg, out);
    return;
  }
#endif
  (void)backend;
  detail::classify_batch_scalar(valence, arousal, cfg, out);
}

}  // namespace ats::kernels

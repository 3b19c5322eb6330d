// Compiled with -mavx2. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cstddef>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorKind::Internal, "kernel columns differ in length");
}

inline __m256d in_range(__m256d x, DegreeRange r) {
  const __m256d lo = _mm256_cmp_pd(x, _mm256_set1_pd(r.low), _CMP_GE_OQ);
  const __m256d hi = _mm256_cmp_pd(x, _mm256_set1_pd(r.high), _CMP_LE_OQ);
  return _mm256_and_pd(lo, hi);
}

inline double combine(const double lanes[kLanes]) { return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]); }

}  // namespace

FocusStats focus_reduce_avx2(const PoseAffectColumns& cols, DegreeRange yaw, DegreeRange pitch) {
  const std::size_t n = cols.yaw.size();
  check_lengths(n, cols.pitch.size());
  check_lengths(n, cols.valence.size());
  check_lengths(n, cols.arousal.size());

  __m256d vacc = _mm256_setzero_pd();
  __m256d aacc = _mm256_setzero_pd();
  std::size_t focused = 0;
  const std::size_t blocked = n - n % kLanes;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d mask = _mm256_and_pd(in_range(_mm256_loadu_pd(&cols.yaw[i]), yaw),
                                       in_range(_mm256_loadu_pd(&cols.pitch[i]), pitch));
    focused += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
    vacc = _mm256_add_pd(vacc, _mm256_and_pd(mask, _mm256_loadu_pd(&cols.valence[i])));
    aacc = _mm256_add_pd(aacc, _mm256_and_pd(mask, _mm256_loadu_pd(&cols.arousal[i])));
  }

  alignas(32) double vsum[kLanes];
  alignas(32) double asum[kLanes];
  _mm256_store_pd(vsum, vacc);
  _mm256_store_pd(asum, aacc);
  for (std::size_t i = blocked; i < n; ++i) {
    const bool in = yaw.contains(cols.yaw[i]) && pitch.contains(cols.pitch[i]);
    focused += in ? 1 : 0;
    vsum[i % kLanes] += in ? cols.valence[i] : 0.0;
    asum[i % kLanes] += in ? cols.arousal[i] : 0.0;
  }
  return {focused, combine(vsum), combine(asum)};
}

AffectPoint affect_sum_avx2(std::span<const double> valence, std::span<const double> arousal) {
  check_lengths(valence.size(), arousal.size());
  const std::size_t n = valence.size();
  __m256d vacc = _mm256_setzero_pd();
  __m256d aacc = _mm256_setzero_pd();
  const std::size_t blocked = n - n % kLanes;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(&valence[i]));
    aacc = _mm256_add_pd(aacc, _mm256_loadu_pd(&arousal[i]));
  }
  alignas(32) double vsum[kLanes];
  alignas(32) double asum[kLanes];
  _mm256_store_pd(vsum, vacc);
  _mm256_store_pd(asum, aacc);
  for (std::size_t i = blocked; i < n; ++i) {
    vsum[i % kLanes] += valence[i];
    asum[i % kLanes] += arousal[i];
  }
  return {combine(vsum), combine(asum)};
}

void classify_batch_avx2(std::span<const double> valence, std::span<const double> arousal,
                         const ThresholdConfig& cfg, std::span<EmotionalState> out) {
  check_lengths(valence.size(), arousal.size());
  check_lengths(valence.size(), out.size());
  const std::size_t n = valence.size();
  const std::size_t blocked = n - n % kLanes;

  const __m256d mult = _mm256_set1_pd(cfg.emotion_multiplier);
  const __m256d lo = _mm256_set1_pd(-10.0);
  const __m256d hi = _mm256_set1_pd(10.0);
  const __m256d tired_max = _mm256_set1_pd(cfg.tired_arousal_max);
  const __m256d engaged_v = _mm256_set1_pd(cfg.engaged_valence_min);
  const __m256d active_a = _mm256_set1_pd(cfg.activated_arousal_min);
  const __m256d high_a = _mm256_set1_pd(cfg.high_arousal_min);
  const __m256d neg_v = _mm256_set1_pd(cfg.negative_valence_max);
  const __m256d diseng_a = _mm256_set1_pd(cfg.disengaged_arousal_max);
  const __m256d inf = _mm256_set1_pd(__builtin_inf());

  auto code = [](EmotionalState s) { return _mm256_set1_pd(static_cast<double>(static_cast<int>(s))); };
  const __m256d c_tired = code(EmotionalState::Tired);
  const __m256d c_engaged = code(EmotionalState::Engaged);
  const __m256d c_confused = code(EmotionalState::Confused);
  const __m256d c_disengaged = code(EmotionalState::Disengaged);
  const __m256d c_neutral = code(EmotionalState::Neutral);

  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d raw_v = _mm256_loadu_pd(&valence[i]);
    const __m256d raw_a = _mm256_loadu_pd(&arousal[i]);
    // |x| < inf is false for NaN and infinities.
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d finite = _mm256_and_pd(_mm256_cmp_pd(_mm256_and_pd(raw_v, abs_mask), inf, _CMP_LT_OQ),
                                         _mm256_cmp_pd(_mm256_and_pd(raw_a, abs_mask), inf, _CMP_LT_OQ));
    if (_mm256_movemask_pd(finite) != 0xF) fail(ErrorKind::Malformed, "affect point must be finite");

    const __m256d v = _mm256_min_pd(_mm256_max_pd(_mm256_mul_pd(raw_v, mult), lo), hi);
    const __m256d a = _mm256_min_pd(_mm256_max_pd(_mm256_mul_pd(raw_a, mult), lo), hi);

    const __m256d r1 = _mm256_cmp_pd(a, tired_max, _CMP_LE_OQ);
    const __m256d r2 = _mm256_and_pd(_mm256_cmp_pd(v, engaged_v, _CMP_GE_OQ), _mm256_cmp_pd(a, active_a, _CMP_GE_OQ));
    const __m256d r3 = _mm256_and_pd(_mm256_cmp_pd(a, high_a, _CMP_GE_OQ), _mm256_cmp_pd(v, neg_v, _CMP_GT_OQ));
    const __m256d negative = _mm256_cmp_pd(v, neg_v, _CMP_LE_OQ);
    const __m256d r4 = _mm256_and_pd(negative, _mm256_cmp_pd(a, active_a, _CMP_GE_OQ));
    const __m256d r5 = _mm256_and_pd(negative, _mm256_cmp_pd(a, diseng_a, _CMP_LE_OQ));

    // Later rules first so that the earliest matching rule wins.
    __m256d result = c_neutral;
    result = _mm256_blendv_pd(result, c_disengaged, r5);
    result = _mm256_blendv_pd(result, c_confused, r4);
    result = _mm256_blendv_pd(result, c_engaged, r3);
    result = _mm256_blendv_pd(result, c_engaged, r2);
    result = _mm256_blendv_pd(result, c_tired, r1);

    alignas(16) int codes[kLanes];
    _mm_store_si128(reinterpret_cast<__m128i*>(codes), _mm256_cvtpd_epi32(result));
    for (std::size_t lane = 0; lane < kLanes; ++lane) out[i + lane] = static_cast<EmotionalState>(codes[lane]);
  }
  for (std::size_t i = blocked; i < n; ++i) out[i] = classify_emotion({valence[i], arousal[i]}, cfg);
}

}  // namespace ats::kernels::detail

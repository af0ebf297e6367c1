#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mccm/composer.hpp"

namespace mccm {

// Shares of one segment in the whole run. idle_fraction is the segment's own
// memory-bound idle share; the *_share fields are normalized to full latency.
struct SegmentTimeShare {
  int segment = 0;
  Rational compute_seconds;
  Rational memory_seconds;
  Rational effective_seconds;
  Rational idle_fraction;
  Rational compute_share;
  Rational idle_share;
  bool memory_bound = false;
};

struct TimeBreakdown {
  Rational latency_seconds;
  Rational comm_share;            // inter-segment transfers as a share of latency
  Rational global_idle_fraction;  // sum(effective - compute) / sum(effective)
  std::vector<SegmentTimeShare> segments;
};

TimeBreakdown time_breakdown(const EvalReport& report);

// Off-chip traffic by data class. Inter-segment transfers count as FM traffic;
// weights_bytes + fms_bytes == total_bytes.
struct AccessBreakdown {
  std::int64_t weights_bytes = 0;
  std::int64_t fms_bytes = 0;
  std::int64_t inter_segment_bytes = 0;  // informational subset of fms_bytes
  std::int64_t total_bytes = 0;
  double weights_fraction = 0;
  double fms_fraction = 0;
};

AccessBreakdown access_breakdown(const EvalReport& report);

// Per-segment PE underutilization, raw and scaled so the smallest nonzero
// entry reads 1.0.
struct UnderutilizationProfile {
  std::vector<Rational> raw;
  std::vector<double> normalized;
};

UnderutilizationProfile underutilization_profile(const EvalReport& report);

// On-chip footprint split across segments and boundaries; fractions of the
// composed total, summing to 1.
struct BufferShare {
  std::string label;
  std::int64_t bytes = 0;
  double fraction = 0;
};

std::vector<BufferShare> buffer_profile(const EvalReport& report);

// 100 * (1 - |synthesized - estimated| / synthesized). Throws
// std::domain_error when synthesized <= 0.
double accuracy_percent(double synthesized, double estimated);

// One row per segment: segment,compute_s,memory_s,idle_frac,buffer_bytes,underutil
std::string segments_csv(const EvalReport& report);

// Fixed 4-significant-digit rendering used by every CSV/JSON emitter.
std::string format_sig4(double v);

}  // namespace mccm

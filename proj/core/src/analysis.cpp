#include "mccm/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mccm {

TimeBreakdown time_breakdown(const EvalReport& report) {
  TimeBreakdown tb;
  tb.latency_seconds = report.latency_seconds;

  Rational comm;
  for (const BoundaryReport& b : report.boundaries) comm += b.comm_seconds;

  Rational effective_sum;
  Rational idle_sum;
  const bool have_latency = !tb.latency_seconds.is_zero();
  for (const SegmentReport& sr : report.segments) {
    SegmentTimeShare share;
    share.segment = sr.index;
    share.compute_seconds = sr.compute_seconds;
    share.memory_seconds = sr.memory_seconds;
    share.effective_seconds = sr.effective_seconds;
    share.idle_fraction = sr.idle_fraction;
    share.memory_bound = sr.memory_bound;
    const Rational idle = sr.effective_seconds - sr.compute_seconds;
    if (have_latency) {
      share.compute_share = sr.compute_seconds / tb.latency_seconds;
      share.idle_share = idle / tb.latency_seconds;
    }
    effective_sum += sr.effective_seconds;
    idle_sum += idle;
    tb.segments.push_back(share);
  }
  if (have_latency) tb.comm_share = comm / tb.latency_seconds;
  if (!effective_sum.is_zero()) tb.global_idle_fraction = idle_sum / effective_sum;
  return tb;
}

AccessBreakdown access_breakdown(const EvalReport& report) {
  AccessBreakdown ab;
  ab.weights_bytes = report.access_totals.weights_bytes;
  for (const BoundaryReport& b : report.boundaries) ab.inter_segment_bytes += b.access_bytes;
  ab.fms_bytes = report.access_totals.fms_bytes + ab.inter_segment_bytes;
  ab.total_bytes = report.total_access_bytes;
  if (ab.total_bytes > 0) {
    ab.weights_fraction = static_cast<double>(ab.weights_bytes) / static_cast<double>(ab.total_bytes);
    ab.fms_fraction = static_cast<double>(ab.fms_bytes) / static_cast<double>(ab.total_bytes);
  }
  return ab;
}

UnderutilizationProfile underutilization_profile(const EvalReport& report) {
  UnderutilizationProfile up;
  Rational floor;
  for (const SegmentReport& sr : report.segments) {
    up.raw.push_back(sr.underutilization);
    if (!sr.underutilization.is_zero() &&
        (floor.is_zero() || sr.underutilization < floor))
      floor = sr.underutilization;
  }
  for (const Rational& r : up.raw)
    up.normalized.push_back(floor.is_zero() ? 0.0 : (r / floor).to_double());
  return up;
}

std::vector<BufferShare> buffer_profile(const EvalReport& report) {
  std::vector<BufferShare> shares;
  const double total = static_cast<double>(report.total_buffer_bytes);
  auto push = [&](std::string label, std::int64_t bytes) {
    if (bytes == 0) return;
    BufferShare s;
    s.label = std::move(label);
    s.bytes = bytes;
    if (total > 0) s.fraction = static_cast<double>(bytes) / total;
    shares.push_back(std::move(s));
  };
  for (const SegmentReport& sr : report.segments)
    push("segment " + std::to_string(sr.index), sr.buffer_charge_bytes);
  for (const BoundaryReport& b : report.boundaries)
    push("boundary " + std::to_string(b.after_segment), b.buffer_charge_bytes);
  return shares;
}

double accuracy_percent(double synthesized, double estimated) {
  if (!(synthesized > 0))
    throw std::domain_error("accuracy baseline must be positive");
  return 100.0 * (1.0 - std::abs(synthesized - estimated) / synthesized);
}

std::string segments_csv(const EvalReport& report) {
  std::string out = "segment,compute_s,memory_s,idle_frac,buffer_bytes,underutil\n";
  for (const SegmentReport& sr : report.segments) {
    out += std::to_string(sr.index);
    out += ',';
    out += format_sig4(sr.compute_seconds.to_double());
    out += ',';
    out += format_sig4(sr.memory_seconds.to_double());
    out += ',';
    out += format_sig4(sr.idle_fraction.to_double());
    out += ',';
    out += std::to_string(sr.buffer_bytes);
    out += ',';
    out += format_sig4(sr.underutilization.to_double());
    out += '\n';
  }
  return out;
}

std::string format_sig4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace mccm

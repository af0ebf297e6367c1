#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mccm/builder.hpp"
#include "mccm/rational.hpp"

namespace mccm {

// One schedulable unit: a single-CE block's whole range, or one pass of a
// pipelined block (which processes ce_count layers at a time).
struct Segment {
  int index = 0;  // 0-based position in execution order
  int block_index = 0;
  int pass_index = 0;
  int layer_lo = 0;
  int layer_hi = 0;
  bool pipelined = false;

  int layer_count() const { return layer_hi - layer_lo + 1; }
};

std::vector<Segment> plan_segments(const AcceleratorSketch& sketch, const CnnModel& cnn);

struct EffectiveTime {
  Rational seconds;
  Rational idle_fraction;  // (effective - compute) / effective when memory bound
  bool memory_bound = false;
};

EffectiveTime effective_time(std::int64_t compute_cycles, std::int64_t clock_hz,
                             std::int64_t access_bytes, std::int64_t bandwidth_bytes_per_s);

// Roll-up over one block: compute cycles and traffic summed across the
// block's segments; buffer is its worst-case segment requirement.
struct BlockMetrics {
  std::int64_t latency_cycles = 0;
  std::int64_t buffer_bytes = 0;
  AccessTotals accesses;
};

BlockMetrics multi_segment_block_metrics(const Accelerator& acc, int block_index);

struct SegmentReport {
  int index = 0;
  int block_index = 0;
  int pass_index = 0;
  int layer_lo = 0;
  int layer_hi = 0;
  bool pipelined = false;
  std::int64_t pe_count = 0;
  std::int64_t macs = 0;
  std::int64_t compute_cycles = 0;
  AccessTotals accesses;  // intra-segment traffic incl. mandatory edge FM loads/stores
  Rational compute_seconds;
  Rational memory_seconds;
  Rational effective_seconds;
  Rational idle_fraction;
  bool memory_bound = false;
  Rational underutilization;         // 1 - ideal/actual cycles
  std::int64_t buffer_bytes = 0;        // this segment's own requirement
  std::int64_t buffer_charge_bytes = 0; // block buffers charged once; sums to the total
};

struct BoundaryReport {
  int after_segment = 0;
  std::int64_t bytes = 0;
  bool off_chip = false;
  std::int64_t access_bytes = 0;        // 2 x bytes when off chip
  std::int64_t buffer_charge_bytes = 0; // on-chip footprint charged to this boundary
  Rational comm_seconds;
};

struct EvalReport {
  std::string cnn_name;
  std::string platform_name;
  std::string sketch_text;
  bool inter_segment_pipelining = false;
  bool full_fit = false;
  std::int64_t clock_hz = 0;
  std::int64_t word_bytes = 0;

  Rational latency_seconds;
  Rational throughput_per_second;
  std::int64_t total_compute_cycles = 0;
  AccessTotals access_totals;
  std::int64_t total_access_bytes = 0;
  std::int64_t total_buffer_bytes = 0;

  std::vector<SegmentReport> segments;
  std::vector<BoundaryReport> boundaries;
  std::vector<std::string> notes;
};

EvalReport compose(const Accelerator& acc);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace mccm

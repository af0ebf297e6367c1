#pragma once

#include <cstdint>
#include <vector>

#include "mccm/descriptors.hpp"

namespace mccm {

inline std::int64_t ceil_div_i64(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Spatial unrolling factors of one CE over the output-stationary loop nest.
// Only the filter and output spatial dims carry factors; the reduction dims
// stay sequential.
struct Parallelism {
  std::int64_t filters = 1;
  std::int64_t out_h = 1;
  std::int64_t out_w = 1;

  std::int64_t product() const { return filters * out_h * out_w; }
  friend bool operator==(const Parallelism&, const Parallelism&) = default;
};

// Cycles one CE spends on a full layer: product over the six loop dims of
// ceil(extent / factor), unit factors on the reduction dims.
std::int64_t layer_latency_cycles(const ConvLayer& layer, const Parallelism& par);

// Same, restricted to a horizontal output tile of `rows` OFM rows.
std::int64_t tile_latency_cycles(const ConvLayer& layer, const Parallelism& par,
                                 std::int64_t rows);

// Weight slice held while one filter batch is in flight.
std::int64_t weights_tile_bytes(const ConvLayer& layer, const Parallelism& par);

// --- pipelined-CEs schedule -------------------------------------------------
//
// Skewed tile pipeline: the CE at pipeline position p (1-based) is active at
// stage s iff 1 <= s - (p - 1) <= T_p, working on tile s - p + 1. Output tiles
// are row-aligned; tile t of a consumer depends only on tile t of its producer.

struct ScheduleCe {
  int first_stage = 1;                      // == pipeline position (1-based)
  std::vector<std::int64_t> tile_rows;      // rows per tile, last tile may be short
  std::vector<std::int64_t> tile_latency;   // cycles per tile

  int tile_count() const { return static_cast<int>(tile_latency.size()); }
  int last_stage() const { return first_stage + tile_count() - 1; }
  std::int64_t busy_cycles() const;         // sum of tile latencies
};

struct Schedule {
  int num_stages = 0;
  std::vector<ScheduleCe> ces;

  bool active(int ce_pos, int stage) const {  // ce_pos 0-based, stage 1-based
    const ScheduleCe& ce = ces[ce_pos];
    return stage >= ce.first_stage && stage <= ce.last_stage();
  }
  // 0-based tile index the CE works on at `stage`, or -1 when idle.
  int tile_at(int ce_pos, int stage) const {
    return active(ce_pos, stage) ? stage - ces[ce_pos].first_stage : -1;
  }
};

// Builds the schedule of one pipelined pass: layers[i] runs on the CE at
// pipeline position i+1 with output tiles of tile_rows[i] rows.
Schedule pipeline_schedule(const std::vector<const ConvLayer*>& layers,
                           const std::vector<Parallelism>& pars,
                           const std::vector<std::int64_t>& tile_rows);

// Pass latency: sum over stages of the slowest active CE's tile cycles.
std::int64_t pipelined_latency_cycles(const Schedule& schedule);

// Steady-state initiation interval: the busiest CE's total cycles. Pipeline
// throughput is clock / this.
std::int64_t pipelined_slowest_ce_cycles(const Schedule& schedule);

// --- buffers ------------------------------------------------------------------

// Single-CE working set: worst FM footprint plus worst weight tile across the
// layers (fms_bytes entries already include live residual copies).
std::int64_t single_ce_buffer_bytes(const std::vector<std::int64_t>& fms_bytes,
                                    const std::vector<std::int64_t>& weights_tile_bytes);

// Pipelined pass working set: all pass weights resident plus double FM tile
// buffers per layer.
std::int64_t pipelined_buffer_bytes(const std::vector<std::int64_t>& weights_bytes,
                                    const std::vector<std::int64_t>& fm_tile_buffer_bytes);

// --- off-chip accesses --------------------------------------------------------

enum class StreamChoice { none, input_stationary, weight_stationary };

// Residency decisions for one layer, produced by the buffer allocator.
struct LayerResidency {
  bool ifms_off_chip = false;
  bool ofms_off_chip = false;
  bool weights_resident = true;              // pipelined blocks only
  StreamChoice stream = StreamChoice::none;  // set iff ifms_off_chip
};

// Streaming buffer split of one CE, used when some of its layers spill FMs.
struct StreamBuffers {
  std::int64_t weights_buffer_bytes = 0;
  std::int64_t ifm_buffer_bytes = 0;
};

struct AccessTotals {
  std::int64_t weights_bytes = 0;
  std::int64_t fms_bytes = 0;

  std::int64_t total() const { return weights_bytes + fms_bytes; }
  AccessTotals& operator+=(const AccessTotals& o) {
    weights_bytes += o.weights_bytes;
    fms_bytes += o.fms_bytes;
    return *this;
  }
};

// Output-stationary single-CE accesses for one layer. With IFMs resident the
// weights stream exactly once. With IFMs off chip the cheaper of re-reading
// weights per IFM chunk (input-stationary) or re-reading IFMs per weight chunk
// (weight-stationary) is charged; OFMs add one store when off chip.
AccessTotals single_ce_layer_accesses(const ConvLayer& layer, const LayerResidency& residency,
                                      const StreamBuffers& buffers);

// Weight traffic of one layer inside a pipelined pass: the first active stage
// always loads the weights; non-resident weights reload on every later stage.
AccessTotals pipelined_layer_accesses(const ConvLayer& layer, const LayerResidency& residency,
                                      int tile_count);

}  // namespace mccm

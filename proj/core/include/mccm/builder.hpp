#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mccm/block_models.hpp"
#include "mccm/descriptors.hpp"
#include "mccm/notation.hpp"

namespace mccm {

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ComputeEngine {
  int id = 0;           // CE id from the sketch
  int block_index = 0;  // owning block within the sketch
  int pipeline_pos = 0; // 0-based position inside a pipelined block
  std::int64_t pe_count = 0;
  Parallelism par;
  std::vector<int> layer_indices;  // 1-based CNN layers, ascending
};

// Buffer state of one inter-segment boundary (after segment `after_segment`).
// On chip it holds the full boundary tensor (doubled under coarse pipelining);
// off chip only a single row-tile of staging remains and the traffic moves to
// the access totals.
struct BoundaryState {
  int after_segment = 0;
  std::int64_t bytes = 0;          // boundary tensor size
  std::int64_t staging_bytes = 0;  // on-chip footprint in the chosen state
  bool off_chip = false;
};

struct BufferAllocation {
  std::vector<LayerResidency> residency;      // [layer-1]
  std::vector<std::int64_t> fm_tile_rows;     // [layer-1], 0 for non-pipelined layers
  std::vector<StreamBuffers> block_streams;   // [block]
  std::vector<std::int64_t> block_buffer_bytes;  // [block] worst case across its segments
  std::vector<BoundaryState> boundaries;      // one per internal segment boundary
  std::int64_t boundary_buffer_bytes = 0;
  std::int64_t total_buffer_bytes = 0;
  bool full_fit = false;  // nothing spilled, minimum-access configuration
};

struct Accelerator {
  AcceleratorSketch sketch;
  const CnnModel* cnn = nullptr;
  const FpgaPlatform* platform = nullptr;
  std::vector<ComputeEngine> ces;  // block order, pipeline position order
  BufferAllocation alloc;

  const ComputeEngine& ce_for_layer(int layer_index) const;
};

// PE shares proportional to per-CE MAC workloads, largest-remainder rounding,
// clamped to at least one PE each (trimmed from the largest shares when the
// clamp overshoots). Order matches ces.
std::vector<std::int64_t> distribute_pes(const std::vector<std::vector<int>>& ce_layers,
                                         const CnnModel& cnn, std::int64_t pe_count);

// Minimum summed layer latency over candidate factor triples with product
// <= pe_count; ties prefer larger product, then larger filters factor, then
// larger out_h factor. Row-streaming engines (stages of a pipelined block)
// emit output row by row, so their out_h factor is pinned to 1 and the PEs
// go to filters and width instead.
Parallelism select_parallelism(std::int64_t pe_count,
                               const std::vector<const ConvLayer*>& layers,
                               bool row_streaming = false);

BufferAllocation allocate_buffers(const AcceleratorSketch& sketch, const CnnModel& cnn,
                                  const FpgaPlatform& platform,
                                  const std::vector<ComputeEngine>& ces);

Accelerator build_accelerator(const AcceleratorSketch& sketch, const CnnModel& cnn,
                              const FpgaPlatform& platform);

}  // namespace mccm

#include "mccm/block_models.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace mccm {

std::int64_t layer_latency_cycles(const ConvLayer& layer, const Parallelism& par) {
  return tile_latency_cycles(layer, par, layer.ofm_h);
}

std::int64_t tile_latency_cycles(const ConvLayer& layer, const Parallelism& par,
                                 std::int64_t rows) {
  assert(par.filters >= 1 && par.out_h >= 1 && par.out_w >= 1);
  rows = std::clamp<std::int64_t>(rows, 1, layer.ofm_h);
  return ceil_div_i64(layer.filters_extent(), par.filters) * ceil_div_i64(rows, par.out_h) *
         ceil_div_i64(layer.ofm_w, par.out_w) * layer.reduction_depth() * layer.kernel_h *
         layer.kernel_w;
}

std::int64_t weights_tile_bytes(const ConvLayer& layer, const Parallelism& par) {
  const std::int64_t batch = std::min(par.filters, layer.filters_extent());
  return batch * layer.kernel_h * layer.kernel_w * layer.reduction_depth() * layer.word_bytes;
}

std::int64_t ScheduleCe::busy_cycles() const {
  std::int64_t total = 0;
  for (std::int64_t lat : tile_latency) total += lat;
  return total;
}

Schedule pipeline_schedule(const std::vector<const ConvLayer*>& layers,
                           const std::vector<Parallelism>& pars,
                           const std::vector<std::int64_t>& tile_rows) {
  if (layers.empty() || layers.size() != pars.size() || layers.size() != tile_rows.size())
    throw std::invalid_argument("pipeline_schedule: mismatched inputs");
  Schedule sched;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ConvLayer& layer = *layers[i];
    const std::int64_t rows = std::min<std::int64_t>(std::max<std::int64_t>(tile_rows[i], 1),
                                                     layer.ofm_h);
    ScheduleCe ce;
    ce.first_stage = static_cast<int>(i) + 1;
    for (std::int64_t done = 0; done < layer.ofm_h; done += rows) {
      const std::int64_t r = std::min(rows, layer.ofm_h - done);
      ce.tile_rows.push_back(r);
      ce.tile_latency.push_back(tile_latency_cycles(layer, pars[i], r));
    }
    sched.num_stages = std::max(sched.num_stages, ce.last_stage());
    sched.ces.push_back(std::move(ce));
  }
  return sched;
}

std::int64_t pipelined_latency_cycles(const Schedule& schedule) {
  std::int64_t total = 0;
  for (int stage = 1; stage <= schedule.num_stages; ++stage) {
    std::int64_t slowest = 0;
    for (std::size_t p = 0; p < schedule.ces.size(); ++p) {
      const int t = schedule.tile_at(static_cast<int>(p), stage);
      if (t >= 0) slowest = std::max(slowest, schedule.ces[p].tile_latency[t]);
    }
    total += slowest;
  }
  return total;
}

std::int64_t pipelined_slowest_ce_cycles(const Schedule& schedule) {
  std::int64_t worst = 0;
  for (const ScheduleCe& ce : schedule.ces) worst = std::max(worst, ce.busy_cycles());
  return worst;
}

std::int64_t single_ce_buffer_bytes(const std::vector<std::int64_t>& fms_bytes,
                                    const std::vector<std::int64_t>& weights_tile_bytes) {
  std::int64_t worst_fms = 0, worst_tile = 0;
  for (std::int64_t b : fms_bytes) worst_fms = std::max(worst_fms, b);
  for (std::int64_t b : weights_tile_bytes) worst_tile = std::max(worst_tile, b);
  return worst_fms + worst_tile;
}

std::int64_t pipelined_buffer_bytes(const std::vector<std::int64_t>& weights_bytes,
                                    const std::vector<std::int64_t>& fm_tile_buffer_bytes) {
  std::int64_t total = 0;
  for (std::int64_t b : weights_bytes) total += b;
  for (std::int64_t b : fm_tile_buffer_bytes) total += 2 * b;
  return total;
}

AccessTotals single_ce_layer_accesses(const ConvLayer& layer, const LayerResidency& residency,
                                      const StreamBuffers& buffers) {
  AccessTotals acc;
  const std::int64_t weights = layer.weight_bytes();
  const std::int64_t ifms = layer.ifm_bytes();
  if (!residency.ifms_off_chip) {
    acc.weights_bytes += weights;
    assert(residency.stream == StreamChoice::none);
  } else {
    if (buffers.ifm_buffer_bytes <= 0 || buffers.weights_buffer_bytes <= 0)
      throw std::invalid_argument("single_ce_layer_accesses: off-chip IFMs need stream buffers");
    const std::int64_t opt_is = weights * ceil_div_i64(ifms, buffers.ifm_buffer_bytes) + ifms;
    const std::int64_t opt_ws = ifms * ceil_div_i64(weights, buffers.weights_buffer_bytes) + weights;
    if (opt_is <= opt_ws) {
      assert(residency.stream == StreamChoice::input_stationary);
      acc.weights_bytes += weights * ceil_div_i64(ifms, buffers.ifm_buffer_bytes);
      acc.fms_bytes += ifms;
    } else {
      assert(residency.stream == StreamChoice::weight_stationary);
      acc.weights_bytes += weights;
      acc.fms_bytes += ifms * ceil_div_i64(weights, buffers.weights_buffer_bytes);
    }
  }
  if (residency.ofms_off_chip) acc.fms_bytes += layer.ofm_bytes();
  return acc;
}

AccessTotals pipelined_layer_accesses(const ConvLayer& layer, const LayerResidency& residency,
                                      int tile_count) {
  AccessTotals acc;
  const std::int64_t loads = residency.weights_resident ? 1 : std::max(tile_count, 1);
  acc.weights_bytes = layer.weight_bytes() * loads;
  return acc;
}

}  // namespace mccm

#include "mccm/builder.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <set>
#include <sstream>

#include "mccm/composer.hpp"

namespace mccm {

namespace {

std::int64_t ofm_row_bytes(const ConvLayer& l) {
  return l.ofm_w * l.out_channels() * l.word_bytes;
}

std::int64_t fm_tile_buffer_bytes(const ConvLayer& l, std::int64_t rows) {
  return rows * ofm_row_bytes(l);
}

// Allocator working state. Requirements are memoized per block so the greedy
// deficit loop stays O(layers^2) overall.
class Allocator {
 public:
  Allocator(const AcceleratorSketch& sketch, const CnnModel& cnn, const FpgaPlatform& platform,
            const std::vector<ComputeEngine>& ces)
      : sketch_(sketch), cnn_(cnn), platform_(platform), ces_(ces),
        segments_(plan_segments(sketch, cnn)) {
    const int n = cnn_.depth();
    alloc_.residency.assign(n, {});
    alloc_.fm_tile_rows.assign(n, 0);
    alloc_.block_streams.assign(sketch_.blocks.size(), {});
    layer_ce_.assign(n, nullptr);
    for (const ComputeEngine& ce : ces_)
      for (int li : ce.layer_indices) layer_ce_[li - 1] = &ce;
    for (std::size_t b = 0; b < sketch_.blocks.size(); ++b) {
      const BlockSketch& blk = sketch_.blocks[b];
      if (blk.pipelined())
        for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) alloc_.fm_tile_rows[li - 1] = 1;
    }
    for (std::size_t s = 0; s + 1 < segments_.size(); ++s) {
      BoundaryState bd;
      bd.after_segment = static_cast<int>(s);
      bd.bytes = cnn_.layer(segments_[s].layer_hi).ofm_bytes();
      bd.staging_bytes = 0;  // filled when spilled
      boundaries_.push_back(bd);
    }
    first_of_segment_.assign(n, false);
    last_of_segment_.assign(n, false);
    boundary_before_.assign(n, -1);
    boundary_after_.assign(n, -1);
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      first_of_segment_[segments_[s].layer_lo - 1] = true;
      last_of_segment_[segments_[s].layer_hi - 1] = true;
      if (s > 0) boundary_before_[segments_[s].layer_lo - 1] = static_cast<int>(s) - 1;
      if (s + 1 < segments_.size()) boundary_after_[segments_[s].layer_hi - 1] = static_cast<int>(s);
    }
    block_req_.assign(sketch_.blocks.size(), 0);
    for (std::size_t b = 0; b < sketch_.blocks.size(); ++b) recompute_block(static_cast<int>(b));
    recompute_boundaries();
  }

  BufferAllocation run() {
    check_hard_floor();
    deficit_weights_residency();
    deficit_boundaries();
    deficit_fm_spill();
    allocate_stream_buffers();
    if (total_requirement() > platform_.on_chip_bytes) {
      std::ostringstream os;
      os << "cannot allocate minimum working set on " << platform_.name << ": need "
         << total_requirement() << " bytes, have " << platform_.on_chip_bytes;
      throw BuildError(os.str());
    }
    grow_fm_tiles();
    finalize();
    return alloc_;
  }

 private:
  const ConvLayer& layer(int li) const { return cnn_.layer(li); }
  LayerResidency& res(int li) { return alloc_.residency[li - 1]; }
  const LayerResidency& res(int li) const { return alloc_.residency[li - 1]; }
  bool block_pipelined(int b) const { return sketch_.blocks[b].pipelined(); }

  std::int64_t weights_tile(int li) const {
    return weights_tile_bytes(layer(li), layer_ce_[li - 1]->par);
  }

  std::int64_t live_onchip_copies(int li) const {
    // Copies of residual sources held while layer li runs; a spilled source
    // tensor is re-read from off chip instead of occupying the buffer.
    std::int64_t total = 0;
    for (const ConvLayer& consumer : cnn_.layers) {
      for (int src : consumer.residual_sources) {
        if (src < li && li <= consumer.index && !res(src).ofms_off_chip)
          total += layer(src).ofm_bytes();
      }
    }
    return total;
  }

  std::int64_t fm_working(int li) const {
    const ConvLayer& l = layer(li);
    std::int64_t total = live_onchip_copies(li);
    if (!res(li).ifms_off_chip) total += l.ifm_bytes();
    if (!res(li).ofms_off_chip) total += l.ofm_bytes();
    return total;
  }

  std::int64_t single_ce_block_requirement(int b) const {
    const BlockSketch& blk = sketch_.blocks[b];
    std::int64_t max_fm = 0, max_wt = 0;
    bool streaming = false;
    for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) {
      max_fm = std::max(max_fm, fm_working(li));
      if (!res(li).ifms_off_chip)
        max_wt = std::max(max_wt, weights_tile(li));
      else
        streaming = true;
    }
    std::int64_t total = max_fm + max_wt;
    if (streaming)
      total += alloc_.block_streams[b].weights_buffer_bytes +
               alloc_.block_streams[b].ifm_buffer_bytes;
    return total;
  }

  std::int64_t pipelined_block_requirement(int b) const {
    const BlockSketch& blk = sketch_.blocks[b];
    const int k = blk.ce_count();
    std::int64_t worst = 0;
    for (int lo = blk.layer_lo; lo <= blk.layer_hi; lo += k) {
      const int hi = std::min(lo + k - 1, blk.layer_hi);
      std::int64_t pass = 0;
      for (int li = lo; li <= hi; ++li) {
        const ConvLayer& l = layer(li);
        pass += res(li).weights_resident ? l.weight_bytes() : weights_tile(li);
        pass += 2 * fm_tile_buffer_bytes(l, alloc_.fm_tile_rows[li - 1]);
      }
      worst = std::max(worst, pass);
    }
    return worst;
  }

  void recompute_block(int b) {
    block_req_[b] =
        block_pipelined(b) ? pipelined_block_requirement(b) : single_ce_block_requirement(b);
  }

  void recompute_boundaries() {
    std::int64_t total = 0;
    if (sketch_.inter_segment_pipelining) {
      for (const BoundaryState& bd : boundaries_)
        total += bd.off_chip ? bd.staging_bytes : 2 * bd.bytes;
    } else {
      // One buffer reused across segments, sized for the largest resident
      // boundary tensor; spilled boundaries keep their staging tiles.
      std::int64_t reused = 0;
      for (const BoundaryState& bd : boundaries_) {
        if (bd.off_chip)
          total += bd.staging_bytes;
        else
          reused = std::max(reused, bd.bytes);
      }
      total += reused;
    }
    boundary_req_ = total;
  }

  std::int64_t total_requirement() const {
    std::int64_t total = boundary_req_;
    for (std::int64_t r : block_req_) total += r;
    return total;
  }

  bool fits() const { return total_requirement() <= platform_.on_chip_bytes; }

  void check_hard_floor() {
    std::int64_t need = 0;
    int worst_layer = 0;
    for (const ConvLayer& l : cnn_.layers) {
      const std::int64_t n = weights_tile(l.index) + ofm_row_bytes(l);
      if (n > need) {
        need = n;
        worst_layer = l.index;
      }
    }
    if (platform_.on_chip_bytes < need) {
      std::ostringstream os;
      os << "cannot operate: on-chip budget " << platform_.on_chip_bytes
         << " bytes is below the largest weights tile plus one FM tile (" << need
         << " bytes at layer " << worst_layer << ")";
      throw BuildError(os.str());
    }
  }

  // Deficit step 1: drop weight residency of the heaviest pipelined layers.
  void deficit_weights_residency() {
    while (!fits()) {
      int pick = -1;
      std::int64_t pick_w = -1;
      for (std::size_t b = 0; b < sketch_.blocks.size(); ++b) {
        if (!block_pipelined(static_cast<int>(b))) continue;
        const BlockSketch& blk = sketch_.blocks[b];
        for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) {
          if (!res(li).weights_resident) continue;
          const std::int64_t w = layer(li).weight_bytes();
          if (w > pick_w) {
            pick_w = w;
            pick = li;
          }
        }
      }
      if (pick < 0) return;
      res(pick).weights_resident = false;
      recompute_block(layer_ce_[pick - 1]->block_index);
    }
  }

  // Deficit step 2: spill inter-segment buffers, largest first. A spilled
  // boundary keeps one row-tile of staging on chip.
  void deficit_boundaries() {
    while (!fits()) {
      int pick = -1;
      std::int64_t pick_b = -1;
      for (std::size_t i = 0; i < boundaries_.size(); ++i) {
        if (boundaries_[i].off_chip) continue;
        if (boundaries_[i].bytes > pick_b) {
          pick_b = boundaries_[i].bytes;
          pick = static_cast<int>(i);
        }
      }
      if (pick < 0) return;
      BoundaryState& bd = boundaries_[pick];
      bd.off_chip = true;
      bd.staging_bytes = ofm_row_bytes(layer(segments_[bd.after_segment].layer_hi));
      recompute_boundaries();
    }
  }

  // A tensor side is markable if it is interior to a segment, faces DRAM at
  // the network edge, or faces a boundary that has already been spilled.
  bool can_mark_input_side(int li) const {
    if (res(li).ifms_off_chip) return false;
    if (!first_of_segment_[li - 1]) return true;
    if (li == 1) return true;
    const int bd = boundary_before_[li - 1];
    return bd >= 0 && boundaries_[bd].off_chip;
  }
  bool can_mark_output_side(int li) const {
    if (res(li).ofms_off_chip) return false;
    if (!last_of_segment_[li - 1]) return true;
    if (li == cnn_.depth()) return true;
    const int bd = boundary_after_[li - 1];
    return bd >= 0 && boundaries_[bd].off_chip;
  }

  void mark_input_side(int li) {
    res(li).ifms_off_chip = true;
    if (!first_of_segment_[li - 1]) res(li - 1).ofms_off_chip = true;
  }
  void mark_output_side(int li) {
    res(li).ofms_off_chip = true;
    if (!last_of_segment_[li - 1]) res(li + 1).ifms_off_chip = true;
  }

  // Deficit step 3: push whole FM tensors of the fattest single-CE layers off
  // chip; the owning blocks then stream through a shared split buffer.
  void deficit_fm_spill() {
    while (!fits()) {
      int pick = -1;
      std::int64_t pick_sz = -1;
      for (const Segment& seg : segments_) {
        if (seg.pipelined) continue;
        for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
          if (!can_mark_input_side(li) && !can_mark_output_side(li)) continue;
          const std::int64_t sz = cnn_.fms_bytes(li);
          if (sz > pick_sz) {
            pick_sz = sz;
            pick = li;
          }
        }
      }
      if (pick < 0) return;
      if (can_mark_input_side(pick)) mark_input_side(pick);
      if (can_mark_output_side(pick)) mark_output_side(pick);
      // Flags ripple to the neighbours; their blocks share the segment.
      recompute_block(layer_ce_[pick - 1]->block_index);
    }
  }

  // Split the remaining budget into per-block weight/IFM streaming buffers on
  // a coarse ratio grid, keeping the cheaper option per ratio.
  void allocate_stream_buffers() {
    std::vector<int> needy;
    std::vector<std::int64_t> cap;
    for (std::size_t b = 0; b < sketch_.blocks.size(); ++b) {
      if (block_pipelined(static_cast<int>(b))) continue;
      const BlockSketch& blk = sketch_.blocks[b];
      std::int64_t max_ifm = 0, max_w = 0;
      for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) {
        if (!res(li).ifms_off_chip) continue;
        max_ifm = std::max(max_ifm, layer(li).ifm_bytes());
        max_w = std::max(max_w, layer(li).weight_bytes());
      }
      if (max_ifm > 0 || max_w > 0) {
        needy.push_back(static_cast<int>(b));
        cap.push_back(max_ifm + max_w);
      }
    }
    if (needy.empty()) return;
    const std::int64_t leftover = platform_.on_chip_bytes - total_requirement();
    const std::int64_t cap_sum = std::accumulate(cap.begin(), cap.end(), std::int64_t{0});
    if (leftover < 2 * static_cast<std::int64_t>(needy.size())) {
      std::ostringstream os;
      os << "cannot allocate minimum working set on " << platform_.name
         << ": no room for streaming buffers (" << leftover << " bytes left for "
         << needy.size() << " blocks)";
      throw BuildError(os.str());
    }
    for (std::size_t i = 0; i < needy.size(); ++i) {
      const int b = needy[i];
      std::int64_t slice = leftover * cap[i] / cap_sum;
      slice = std::min(slice, cap[i]);
      slice = std::max<std::int64_t>(slice, 2);
      const BlockSketch& blk = sketch_.blocks[b];
      std::int64_t best_cost = -1;
      StreamBuffers best{};
      for (int k = 1; k <= 8; ++k) {
        StreamBuffers sb;
        sb.weights_buffer_bytes = std::max<std::int64_t>(slice * k / 9, 1);
        sb.ifm_buffer_bytes = slice - sb.weights_buffer_bytes;
        if (sb.ifm_buffer_bytes < 1) continue;
        std::int64_t cost = 0;
        for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) {
          if (!res(li).ifms_off_chip) continue;
          const ConvLayer& l = layer(li);
          const std::int64_t opt_is =
              l.weight_bytes() * ceil_div_i64(l.ifm_bytes(), sb.ifm_buffer_bytes) + l.ifm_bytes();
          const std::int64_t opt_ws =
              l.ifm_bytes() * ceil_div_i64(l.weight_bytes(), sb.weights_buffer_bytes) +
              l.weight_bytes();
          cost += std::min(opt_is, opt_ws);
        }
        if (best_cost < 0 || cost < best_cost) {
          best_cost = cost;
          best = sb;
        }
      }
      alloc_.block_streams[b] = best;
      for (int li = blk.layer_lo; li <= blk.layer_hi; ++li) {
        if (!res(li).ifms_off_chip) continue;
        const ConvLayer& l = layer(li);
        const std::int64_t opt_is =
            l.weight_bytes() * ceil_div_i64(l.ifm_bytes(), best.ifm_buffer_bytes) + l.ifm_bytes();
        const std::int64_t opt_ws =
            l.ifm_bytes() * ceil_div_i64(l.weight_bytes(), best.weights_buffer_bytes) +
            l.weight_bytes();
        res(li).stream =
            opt_is <= opt_ws ? StreamChoice::input_stationary : StreamChoice::weight_stationary;
      }
      recompute_block(b);
    }
  }

  std::int64_t ce_busy_cycles(const ComputeEngine& ce) const {
    std::int64_t busy = 0;
    for (int li : ce.layer_indices) {
      const ConvLayer& l = layer(li);
      const std::int64_t rows = alloc_.fm_tile_rows[li - 1];
      if (rows <= 0) {
        busy += layer_latency_cycles(l, ce.par);
        continue;
      }
      for (std::int64_t done = 0; done < l.ofm_h; done += rows)
        busy += tile_latency_cycles(l, ce.par, std::min(rows, l.ofm_h - done));
    }
    return busy;
  }

  // Spend leftover budget on taller pipelined FM tiles, slowest CE first:
  // fewer, taller tiles trim ceiling waste and pipeline fill overhead. Only
  // weight-resident layers grow; a weight-streaming stage stays row-granular
  // so its in-flight weight slice footprint stays bounded by one tile's
  // worth, matching line-buffer pipelines that interleave weight fetch with
  // row production.
  void grow_fm_tiles() {
    bool any_pipelined = false;
    for (std::size_t b = 0; b < sketch_.blocks.size(); ++b)
      any_pipelined |= block_pipelined(static_cast<int>(b));
    if (!any_pipelined) return;
    while (true) {
      std::vector<const ComputeEngine*> order;
      for (const ComputeEngine& ce : ces_)
        if (block_pipelined(ce.block_index)) order.push_back(&ce);
      std::stable_sort(order.begin(), order.end(),
                       [&](const ComputeEngine* a, const ComputeEngine* b) {
                         return ce_busy_cycles(*a) > ce_busy_cycles(*b);
                       });
      bool committed = false;
      for (const ComputeEngine* ce : order) {
        std::vector<int> lis = ce->layer_indices;
        std::stable_sort(lis.begin(), lis.end(), [&](int a, int b) {
          return alloc_.fm_tile_rows[a - 1] < alloc_.fm_tile_rows[b - 1];
        });
        for (int li : lis) {
          if (!res(li).weights_resident) continue;
          const ConvLayer& l = layer(li);
          const std::int64_t rows = alloc_.fm_tile_rows[li - 1];
          if (rows >= l.ofm_h) continue;
          const std::int64_t grown = std::min(rows * 2, l.ofm_h);
          alloc_.fm_tile_rows[li - 1] = grown;
          recompute_block(ce->block_index);
          if (fits()) {
            committed = true;
            break;
          }
          alloc_.fm_tile_rows[li - 1] = rows;
          recompute_block(ce->block_index);
        }
        if (committed) break;
      }
      if (!committed) return;
    }
  }

  void finalize() {
    alloc_.block_buffer_bytes = block_req_;
    alloc_.boundary_buffer_bytes = boundary_req_;
    alloc_.boundaries = boundaries_;
    alloc_.total_buffer_bytes = total_requirement();
    bool full = true;
    for (const LayerResidency& r : alloc_.residency)
      full &= !r.ifms_off_chip && !r.ofms_off_chip && r.weights_resident;
    for (const BoundaryState& bd : boundaries_) full &= !bd.off_chip;
    alloc_.full_fit = full;
    // The streaming split never exceeds the block's own budget share.
    for (std::size_t b = 0; b < sketch_.blocks.size(); ++b) {
      if (block_pipelined(static_cast<int>(b))) continue;
      const StreamBuffers& sb = alloc_.block_streams[b];
      std::int64_t max_onchip_ofm = 0;
      const BlockSketch& blk = sketch_.blocks[b];
      for (int li = blk.layer_lo; li <= blk.layer_hi; ++li)
        if (!res(li).ofms_off_chip) max_onchip_ofm = std::max(max_onchip_ofm, layer(li).ofm_bytes());
      assert(sb.weights_buffer_bytes + sb.ifm_buffer_bytes + max_onchip_ofm <= block_req_[b]);
      (void)max_onchip_ofm;
    }
  }

  const AcceleratorSketch& sketch_;
  const CnnModel& cnn_;
  const FpgaPlatform& platform_;
  const std::vector<ComputeEngine>& ces_;
  std::vector<Segment> segments_;
  BufferAllocation alloc_;
  std::vector<const ComputeEngine*> layer_ce_;
  std::vector<BoundaryState> boundaries_;
  std::vector<bool> first_of_segment_, last_of_segment_;
  std::vector<int> boundary_before_, boundary_after_;
  std::vector<std::int64_t> block_req_;
  std::int64_t boundary_req_ = 0;
};

}  // namespace

const ComputeEngine& Accelerator::ce_for_layer(int layer_index) const {
  for (const ComputeEngine& ce : ces)
    for (int li : ce.layer_indices)
      if (li == layer_index) return ce;
  throw BuildError("layer " + std::to_string(layer_index) + " is not mapped to any CE");
}

std::vector<std::int64_t> distribute_pes(const std::vector<std::vector<int>>& ce_layers,
                                         const CnnModel& cnn, std::int64_t pe_count) {
  const int n = static_cast<int>(ce_layers.size());
  if (n == 0) throw BuildError("no CEs to distribute PEs over");
  if (pe_count < n) {
    std::ostringstream os;
    os << "insufficient PEs: " << pe_count << " for " << n << " CEs";
    throw BuildError(os.str());
  }
  std::vector<std::int64_t> work(n, 0);
  std::int64_t total_work = 0;
  for (int i = 0; i < n; ++i) {
    for (int li : ce_layers[i]) work[i] += cnn.layer(li).macs();
    total_work += work[i];
  }
  std::vector<std::int64_t> share(n, 0);
  if (total_work == 0) {
    for (int i = 0; i < n; ++i) share[i] = pe_count / n;
  } else {
    // Largest-remainder apportionment: exact floor quotas, leftovers to the
    // largest fractional parts.
    std::int64_t assigned = 0;
    std::vector<std::pair<std::int64_t, int>> rem;
    for (int i = 0; i < n; ++i) {
      const __int128 num = static_cast<__int128>(pe_count) * work[i];
      share[i] = static_cast<std::int64_t>(num / total_work);
      assigned += share[i];
      rem.push_back({static_cast<std::int64_t>(num % total_work), i});
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    for (std::int64_t left = pe_count - assigned; left > 0; --left)
      share[rem[pe_count - assigned - left].second] += 1;
  }
  // Clamp to one PE per CE, trimming the largest shares.
  std::int64_t debt = 0;
  for (int i = 0; i < n; ++i)
    if (share[i] == 0) {
      share[i] = 1;
      ++debt;
    }
  while (debt > 0) {
    int argmax = 0;
    for (int i = 1; i < n; ++i)
      if (share[i] > share[argmax]) argmax = i;
    if (share[argmax] <= 1) throw BuildError("insufficient PEs after clamping");
    share[argmax] -= 1;
    --debt;
  }
  return share;
}

Parallelism select_parallelism(std::int64_t pe_count,
                               const std::vector<const ConvLayer*>& layers,
                               bool row_streaming) {
  if (pe_count <= 0) throw BuildError("select_parallelism: non-positive PE count");
  if (layers.empty()) return {};
  std::int64_t max_f = 1, max_h = 1, max_w = 1;
  for (const ConvLayer* l : layers) {
    max_f = std::max(max_f, l->filters_extent());
    max_h = std::max(max_h, l->ofm_h);
    max_w = std::max(max_w, l->ofm_w);
  }
  auto candidates = [&](std::int64_t extent) {
    std::set<std::int64_t> s{1};
    for (std::int64_t d = 1; d * d <= extent; ++d)
      if (extent % d == 0) {
        s.insert(d);
        s.insert(extent / d);
      }
    for (std::int64_t p = 1; p <= pe_count && p > 0; p *= 2) s.insert(p);
    if (pe_count <= 64)
      for (std::int64_t v = 1; v <= pe_count; ++v) s.insert(v);
    std::vector<std::int64_t> out;
    for (std::int64_t v : s)
      if (v <= pe_count) out.push_back(v);
    return out;  // ascending
  };
  const std::vector<std::int64_t> cf = candidates(max_f);
  // A row-streaming stage produces one output row at a time, so spreading PEs
  // across output rows leaves them idle within every row; keep out_h serial.
  const std::vector<std::int64_t> ch =
      row_streaming ? std::vector<std::int64_t>{1} : candidates(max_h);
  const std::vector<std::int64_t> cw = candidates(max_w);
  const std::size_t L = layers.size();
  std::vector<std::int64_t> base(L);
  for (std::size_t i = 0; i < L; ++i)
    base[i] = layers[i]->reduction_depth() * layers[i]->kernel_h * layers[i]->kernel_w;
  auto ceil_table = [&](const std::vector<std::int64_t>& cands, auto extent_of) {
    std::vector<std::vector<std::int64_t>> tab(cands.size(), std::vector<std::int64_t>(L));
    for (std::size_t c = 0; c < cands.size(); ++c)
      for (std::size_t i = 0; i < L; ++i) tab[c][i] = ceil_div_i64(extent_of(*layers[i]), cands[c]);
    return tab;
  };
  const auto tf = ceil_table(cf, [](const ConvLayer& l) { return l.filters_extent(); });
  const auto th = ceil_table(ch, [](const ConvLayer& l) { return l.ofm_h; });
  const auto tw = ceil_table(cw, [](const ConvLayer& l) { return l.ofm_w; });

  std::int64_t best_lat = -1;
  Parallelism best;
  std::vector<std::int64_t> partial(L);
  for (std::size_t fi = 0; fi < cf.size() && cf[fi] <= pe_count; ++fi) {
    for (std::size_t hi = 0; hi < ch.size() && cf[fi] * ch[hi] <= pe_count; ++hi) {
      for (std::size_t i = 0; i < L; ++i) partial[i] = tf[fi][i] * th[hi][i] * base[i];
      for (std::size_t wi = 0; wi < cw.size() && cf[fi] * ch[hi] * cw[wi] <= pe_count; ++wi) {
        std::int64_t lat = 0;
        for (std::size_t i = 0; i < L; ++i) lat += partial[i] * tw[wi][i];
        const Parallelism cand{cf[fi], ch[hi], cw[wi]};
        bool better = false;
        if (best_lat < 0 || lat < best_lat) {
          better = true;
        } else if (lat == best_lat) {
          if (cand.product() != best.product())
            better = cand.product() > best.product();
          else if (cand.filters != best.filters)
            better = cand.filters > best.filters;
          else
            better = cand.out_h > best.out_h;
        }
        if (better) {
          best_lat = lat;
          best = cand;
        }
      }
    }
  }
  return best;
}

BufferAllocation allocate_buffers(const AcceleratorSketch& sketch, const CnnModel& cnn,
                                  const FpgaPlatform& platform,
                                  const std::vector<ComputeEngine>& ces) {
  return Allocator(sketch, cnn, platform, ces).run();
}

Accelerator build_accelerator(const AcceleratorSketch& sketch, const CnnModel& cnn,
                              const FpgaPlatform& platform) {
  if (sketch.blocks.empty()) throw BuildError("empty sketch");
  int expected = 1;
  for (const BlockSketch& b : sketch.blocks) {
    if (b.layer_lo != expected || b.layer_hi < b.layer_lo)
      throw BuildError("sketch blocks must cover layers 1.." + std::to_string(cnn.depth()) +
                       " contiguously");
    if (b.ce_count() > b.layer_count())
      throw BuildError("block L" + std::to_string(b.layer_lo) + "-L" +
                       std::to_string(b.layer_hi) + " maps " + std::to_string(b.ce_count()) +
                       " CEs onto " + std::to_string(b.layer_count()) + " layers");
    expected = b.layer_hi + 1;
  }
  if (expected != cnn.depth() + 1)
    throw BuildError("sketch covers " + std::to_string(expected - 1) + " layers but the CNN has " +
                     std::to_string(cnn.depth()));

  Accelerator acc;
  acc.sketch = sketch;
  acc.cnn = &cnn;
  acc.platform = &platform;
  for (std::size_t b = 0; b < sketch.blocks.size(); ++b) {
    const BlockSketch& blk = sketch.blocks[b];
    const int k = blk.ce_count();
    for (int pos = 0; pos < k; ++pos) {
      ComputeEngine ce;
      ce.id = blk.ce_lo + pos;
      ce.block_index = static_cast<int>(b);
      ce.pipeline_pos = pos;
      for (int m = pos; m < blk.layer_count(); m += k)
        ce.layer_indices.push_back(blk.layer_lo + m);
      acc.ces.push_back(std::move(ce));
    }
  }
  std::vector<std::vector<int>> lists;
  for (const ComputeEngine& ce : acc.ces) lists.push_back(ce.layer_indices);
  const std::vector<std::int64_t> shares = distribute_pes(lists, cnn, platform.pe_count);
  for (std::size_t i = 0; i < acc.ces.size(); ++i) {
    acc.ces[i].pe_count = shares[i];
    std::vector<const ConvLayer*> ls;
    for (int li : acc.ces[i].layer_indices) ls.push_back(&cnn.layer(li));
    const bool streaming = sketch.blocks[acc.ces[i].block_index].pipelined();
    acc.ces[i].par = select_parallelism(shares[i], ls, streaming);
  }
  acc.alloc = allocate_buffers(sketch, cnn, platform, acc.ces);
  return acc;
}

}  // namespace mccm

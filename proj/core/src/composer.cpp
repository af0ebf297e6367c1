#include "mccm/composer.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mccm {

std::vector<Segment> plan_segments(const AcceleratorSketch& sketch, const CnnModel& cnn) {
  (void)cnn;
  std::vector<Segment> out;
  for (std::size_t b = 0; b < sketch.blocks.size(); ++b) {
    const BlockSketch& blk = sketch.blocks[b];
    // A single-CE block runs its whole range back to back as one segment;
    // a pipelined block round-robins passes of ce_count layers.
    const int k = blk.pipelined() ? blk.ce_count() : blk.layer_count();
    int pass = 0;
    for (int lo = blk.layer_lo; lo <= blk.layer_hi; lo += k, ++pass) {
      Segment seg;
      seg.index = static_cast<int>(out.size());
      seg.block_index = static_cast<int>(b);
      seg.pass_index = pass;
      seg.layer_lo = lo;
      seg.layer_hi = std::min(lo + k - 1, blk.layer_hi);
      seg.pipelined = blk.pipelined();
      out.push_back(seg);
    }
  }
  return out;
}

EffectiveTime effective_time(std::int64_t compute_cycles, std::int64_t clock_hz,
                             std::int64_t access_bytes, std::int64_t bandwidth_bytes_per_s) {
  const Rational compute = Rational::ratio(compute_cycles, clock_hz);
  const Rational memory = Rational::ratio(access_bytes, bandwidth_bytes_per_s);
  EffectiveTime et;
  et.memory_bound = compute < memory;
  et.seconds = Rational::max(compute, memory);
  if (et.memory_bound && !(et.seconds == Rational(0)))
    et.idle_fraction = (et.seconds - compute) / et.seconds;
  return et;
}

namespace {

// Buffer footprint of one pipelined pass: resident weights (or tiles) plus
// double-buffered FM tiles.
std::int64_t pass_buffer_bytes(const Accelerator& acc, const Segment& seg) {
  std::int64_t total = 0;
  for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
    const ConvLayer& l = acc.cnn->layer(li);
    const LayerResidency& res = acc.alloc.residency[li - 1];
    const ComputeEngine& ce = acc.ce_for_layer(li);
    total += res.weights_resident ? l.weight_bytes() : weights_tile_bytes(l, ce.par);
    total += 2 * acc.alloc.fm_tile_rows[li - 1] * l.ofm_w * l.out_channels() * l.word_bytes;
  }
  return total;
}

struct SegmentCore {
  std::int64_t pe_count = 0;
  std::int64_t macs = 0;
  std::int64_t compute_cycles = 0;
  std::int64_t slowest_ce_cycles = 0;
  AccessTotals accesses;
  std::int64_t buffer_bytes = 0;
};

// Cycles, traffic and footprint of one segment, shared by compose and the
// per-block roll-up. Traffic includes the mandatory network-edge FM moves and
// re-reads of spilled residual sources.
SegmentCore segment_core(const Accelerator& acc, const Segment& seg) {
  const CnnModel& cnn = *acc.cnn;
  const BufferAllocation& alloc = acc.alloc;
  SegmentCore core;
  if (!seg.pipelined) {
    const ComputeEngine& ce = acc.ce_for_layer(seg.layer_lo);
    core.pe_count = ce.pe_count;
    for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
      const ConvLayer& l = cnn.layer(li);
      core.macs += l.macs();
      core.compute_cycles += layer_latency_cycles(l, ce.par);
      core.accesses += single_ce_layer_accesses(l, alloc.residency[li - 1],
                                                alloc.block_streams[seg.block_index]);
    }
    core.buffer_bytes = alloc.block_buffer_bytes[seg.block_index];
  } else {
    std::vector<const ConvLayer*> layers;
    std::vector<Parallelism> pars;
    std::vector<std::int64_t> rows;
    for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
      const ComputeEngine& ce = acc.ce_for_layer(li);
      layers.push_back(&cnn.layer(li));
      pars.push_back(ce.par);
      rows.push_back(alloc.fm_tile_rows[li - 1]);
      core.pe_count += ce.pe_count;
      core.macs += cnn.layer(li).macs();
    }
    const Schedule sched = pipeline_schedule(layers, pars, rows);
    core.compute_cycles = pipelined_latency_cycles(sched);
    core.slowest_ce_cycles = pipelined_slowest_ce_cycles(sched);
    for (int pos = 0; pos < static_cast<int>(layers.size()); ++pos)
      core.accesses += pipelined_layer_accesses(*layers[pos],
                                                alloc.residency[seg.layer_lo + pos - 1],
                                                sched.ces[pos].tile_count());
    core.buffer_bytes = pass_buffer_bytes(acc, seg);
  }
  for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
    const ConvLayer& l = cnn.layer(li);
    const LayerResidency& res = alloc.residency[li - 1];
    if (li == 1 && !res.ifms_off_chip) core.accesses.fms_bytes += l.ifm_bytes();
    if (li == cnn.depth() && !res.ofms_off_chip) core.accesses.fms_bytes += l.ofm_bytes();
    for (int src : l.residual_sources)
      if (alloc.residency[src - 1].ofms_off_chip)
        core.accesses.fms_bytes += cnn.layer(src).ofm_bytes();
  }
  return core;
}

}  // namespace

BlockMetrics multi_segment_block_metrics(const Accelerator& acc, int block_index) {
  BlockMetrics bm;
  bm.buffer_bytes = acc.alloc.block_buffer_bytes.at(block_index);
  for (const Segment& seg : plan_segments(acc.sketch, *acc.cnn)) {
    if (seg.block_index != block_index) continue;
    const SegmentCore core = segment_core(acc, seg);
    bm.latency_cycles += core.compute_cycles;
    bm.accesses += core.accesses;
  }
  return bm;
}

EvalReport compose(const Accelerator& acc) {
  const CnnModel& cnn = *acc.cnn;
  const FpgaPlatform& pf = *acc.platform;
  const BufferAllocation& alloc = acc.alloc;
  const std::vector<Segment> segments = plan_segments(acc.sketch, cnn);

  EvalReport rep;
  rep.cnn_name = cnn.name;
  rep.platform_name = pf.name;
  rep.sketch_text = format_accelerator(acc.sketch);
  rep.inter_segment_pipelining = acc.sketch.inter_segment_pipelining;
  rep.full_fit = alloc.full_fit;
  rep.clock_hz = pf.clock_hz;
  rep.word_bytes = cnn.word_bytes;
  rep.total_buffer_bytes = alloc.total_buffer_bytes;

  std::vector<int> block_first_seg(acc.sketch.blocks.size(), -1);
  std::vector<std::int64_t> seg_slowest;

  for (const Segment& seg : segments) {
    SegmentReport sr;
    sr.index = seg.index;
    sr.block_index = seg.block_index;
    sr.pass_index = seg.pass_index;
    sr.layer_lo = seg.layer_lo;
    sr.layer_hi = seg.layer_hi;
    sr.pipelined = seg.pipelined;

    const SegmentCore core = segment_core(acc, seg);
    sr.pe_count = core.pe_count;
    sr.macs = core.macs;
    sr.compute_cycles = core.compute_cycles;
    sr.accesses = core.accesses;
    sr.buffer_bytes = core.buffer_bytes;
    seg_slowest.push_back(core.slowest_ce_cycles);

    const EffectiveTime et = effective_time(sr.compute_cycles, pf.clock_hz,
                                            sr.accesses.total(), pf.bandwidth_bytes_per_s);
    sr.compute_seconds = Rational::ratio(sr.compute_cycles, pf.clock_hz);
    sr.memory_seconds = Rational::ratio(sr.accesses.total(), pf.bandwidth_bytes_per_s);
    sr.effective_seconds = et.seconds;
    sr.idle_fraction = et.idle_fraction;
    sr.memory_bound = et.memory_bound;
    if (sr.compute_cycles > 0 && sr.pe_count > 0)
      sr.underutilization = Rational(1) - Rational::ratio(sr.macs, sr.pe_count * sr.compute_cycles);
    if (block_first_seg[seg.block_index] < 0) {
      block_first_seg[seg.block_index] = seg.index;
      sr.buffer_charge_bytes = alloc.block_buffer_bytes[seg.block_index];
    }

    rep.total_compute_cycles += sr.compute_cycles;
    rep.access_totals += sr.accesses;
    rep.latency_seconds += sr.effective_seconds;
    rep.segments.push_back(std::move(sr));
  }

  // Boundaries: traffic for the sides not already streamed by the adjacent
  // layers, a single serialized transfer of latency, and the on-chip charge.
  int reused_argmax = -1;
  if (!acc.sketch.inter_segment_pipelining) {
    std::int64_t best = -1;
    for (std::size_t i = 0; i < alloc.boundaries.size(); ++i)
      if (!alloc.boundaries[i].off_chip && alloc.boundaries[i].bytes > best) {
        best = alloc.boundaries[i].bytes;
        reused_argmax = static_cast<int>(i);
      }
  }
  std::int64_t boundary_access_bytes = 0;
  for (std::size_t i = 0; i < alloc.boundaries.size(); ++i) {
    const BoundaryState& bd = alloc.boundaries[i];
    BoundaryReport br;
    br.after_segment = bd.after_segment;
    br.bytes = bd.bytes;
    br.off_chip = bd.off_chip;
    if (bd.off_chip) {
      const int producer = segments[bd.after_segment].layer_hi;
      const int consumer = producer + 1;
      const int stores = alloc.residency[producer - 1].ofms_off_chip ? 0 : 1;
      const int loads = alloc.residency[consumer - 1].ifms_off_chip ? 0 : 1;
      br.access_bytes = bd.bytes * (stores + loads);
      if (stores + loads > 0)
        br.comm_seconds = Rational::ratio(bd.bytes, pf.bandwidth_bytes_per_s);
      br.buffer_charge_bytes = bd.staging_bytes;
    } else {
      br.buffer_charge_bytes = acc.sketch.inter_segment_pipelining
                                   ? 2 * bd.bytes
                                   : (static_cast<int>(i) == reused_argmax ? bd.bytes : 0);
    }
    boundary_access_bytes += br.access_bytes;
    rep.latency_seconds += br.comm_seconds;
    rep.boundaries.push_back(std::move(br));
  }
  rep.total_access_bytes = rep.access_totals.total() + boundary_access_bytes;

#ifndef NDEBUG
  std::int64_t charged = 0;
  for (const SegmentReport& sr : rep.segments) charged += sr.buffer_charge_bytes;
  for (const BoundaryReport& br : rep.boundaries) charged += br.buffer_charge_bytes;
  assert(charged == alloc.total_buffer_bytes);
#endif

  // Steady-state throughput. Each block occupies its CEs for a per-input
  // pace: a single-pass pipelined block streams back-to-back inputs at the
  // busiest CE's rate (memory permitting), so its pace drops below its
  // latency; any other block holds its CEs for its full effective time.
  // Under coarse pipelining the blocks process distinct inputs concurrently
  // and the slowest pace rules the line; without it execution is strictly
  // sequential and only a lone single-pass pipelined block can beat the
  // inverse latency.
  std::vector<Rational> block_pace(acc.sketch.blocks.size());
  std::vector<int> block_segment_count(acc.sketch.blocks.size(), 0);
  for (const SegmentReport& sr : rep.segments) ++block_segment_count[sr.block_index];
  for (std::size_t i = 0; i < rep.segments.size(); ++i) {
    const SegmentReport& sr = rep.segments[i];
    Rational pace = sr.effective_seconds;
    if (sr.pipelined && block_segment_count[sr.block_index] == 1)
      pace = Rational::max(Rational::ratio(seg_slowest[i], pf.clock_hz), sr.memory_seconds);
    block_pace[sr.block_index] += pace;
  }
  if (acc.sketch.inter_segment_pipelining) {
    Rational worst;
    for (const Rational& pace : block_pace) worst = Rational::max(worst, pace);
    rep.throughput_per_second = worst.inverse();
  } else if (block_pace.size() == 1 && rep.segments.size() == 1 && rep.segments[0].pipelined) {
    rep.throughput_per_second = block_pace[0].inverse();
  } else {
    rep.throughput_per_second = rep.latency_seconds.inverse();
  }

  // Allocation outcomes worth surfacing.
  {
    int nonresident = 0, spilled_fm = 0, spilled_bd = 0;
    for (const LayerResidency& r : alloc.residency) {
      nonresident += r.weights_resident ? 0 : 1;
      spilled_fm += (r.ifms_off_chip || r.ofms_off_chip) ? 1 : 0;
    }
    for (const BoundaryState& bd : alloc.boundaries) spilled_bd += bd.off_chip ? 1 : 0;
    std::ostringstream os;
    if (nonresident > 0) {
      os.str("");
      os << "weights re-streamed per tile on " << nonresident << " pipelined layers";
      rep.notes.push_back(os.str());
    }
    if (spilled_bd > 0) {
      os.str("");
      os << spilled_bd << " of " << alloc.boundaries.size() << " inter-segment buffers off chip";
      rep.notes.push_back(os.str());
    }
    if (spilled_fm > 0) {
      os.str("");
      os << "FM tensors spilled off chip around " << spilled_fm << " layers";
      rep.notes.push_back(os.str());
    }
  }
  return rep;
}

nlohmann::json report_to_json(const EvalReport& rep) {
  nlohmann::json j;
  j["cnn"] = rep.cnn_name;
  j["platform"] = rep.platform_name;
  j["sketch"] = rep.sketch_text;
  j["inter_segment_pipelining"] = rep.inter_segment_pipelining;
  j["full_fit"] = rep.full_fit;
  j["clock_hz"] = rep.clock_hz;
  j["word_bytes"] = rep.word_bytes;
  j["latency_s"] = rep.latency_seconds.to_double();
  j["throughput_per_s"] = rep.throughput_per_second.to_double();
  j["total_compute_cycles"] = rep.total_compute_cycles;
  j["access_bytes"] = {{"weights", rep.access_totals.weights_bytes},
                       {"fms", rep.access_totals.fms_bytes},
                       {"total", rep.total_access_bytes}};
  j["buffer_bytes"] = rep.total_buffer_bytes;
  j["segments"] = nlohmann::json::array();
  for (const SegmentReport& sr : rep.segments) {
    nlohmann::json s;
    s["index"] = sr.index;
    s["block"] = sr.block_index;
    s["pass"] = sr.pass_index;
    s["layers"] = {sr.layer_lo, sr.layer_hi};
    s["pipelined"] = sr.pipelined;
    s["pe_count"] = sr.pe_count;
    s["macs"] = sr.macs;
    s["compute_cycles"] = sr.compute_cycles;
    s["weights_access_bytes"] = sr.accesses.weights_bytes;
    s["fms_access_bytes"] = sr.accesses.fms_bytes;
    s["compute_s"] = sr.compute_seconds.to_double();
    s["memory_s"] = sr.memory_seconds.to_double();
    s["effective_s"] = sr.effective_seconds.to_double();
    s["idle_fraction"] = sr.idle_fraction.to_double();
    s["memory_bound"] = sr.memory_bound;
    s["underutilization"] = sr.underutilization.to_double();
    s["buffer_bytes"] = sr.buffer_bytes;
    s["buffer_charge_bytes"] = sr.buffer_charge_bytes;
    j["segments"].push_back(std::move(s));
  }
  j["boundaries"] = nlohmann::json::array();
  for (const BoundaryReport& br : rep.boundaries) {
    nlohmann::json b;
    b["after_segment"] = br.after_segment;
    b["bytes"] = br.bytes;
    b["off_chip"] = br.off_chip;
    b["access_bytes"] = br.access_bytes;
    b["buffer_charge_bytes"] = br.buffer_charge_bytes;
    b["comm_s"] = br.comm_seconds.to_double();
    j["boundaries"].push_back(std::move(b));
  }
  j["notes"] = rep.notes;
  return j;
}

}  // namespace mccm

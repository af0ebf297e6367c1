#include "mccm/oracle_sim.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mccm {

namespace {

// One engine walking its loop nest step by step; a step is one iteration of
// the innermost unrolled nest and costs one cycle.
std::int64_t walk_steps(const ConvLayer& l, std::int64_t f_steps, std::int64_t oh_steps,
                        std::int64_t ow_steps) {
  std::int64_t c = 0;
  for (std::int64_t f = 0; f < f_steps; ++f)
    for (std::int64_t oh = 0; oh < oh_steps; ++oh)
      for (std::int64_t ow = 0; ow < ow_steps; ++ow)
        for (std::int64_t r = 0; r < l.reduction_depth(); ++r)
          for (std::int64_t kh = 0; kh < l.kernel_h; ++kh)
            for (std::int64_t kw = 0; kw < l.kernel_w; ++kw) ++c;
  return c;
}

struct Sim {
  const Accelerator& acc;
  const CnnModel& cnn;
  const FpgaPlatform& pf;
  const BufferAllocation& alloc;
  const SimOptions& opt;
  SimReport rep;

  // global clocks
  Rational now;      // wall time at the last barrier
  Rational ch_free;  // single DMA channel, FIFO
  std::int64_t cycle = 0;

  // per-segment slack bookkeeping
  Rational seg_max_chunk;
  Rational seg_max_unit;
  Rational seg_fill;
  bool seg_first_unit = true;
  Rational compute_t;

  Sim(const Accelerator& a, const SimOptions& o)
      : acc(a), cnn(*a.cnn), pf(*a.platform), alloc(a.alloc), opt(o) {}

  void emit(const char* kind, int ce, std::int64_t bytes) {
    if (!opt.trace) return;
    SimEvent e;
    e.event = static_cast<std::int64_t>(rep.trace.size());
    e.cycle = cycle;
    e.ce = ce;
    e.kind = kind;
    e.bytes = bytes;
    rep.trace.push_back(std::move(e));
  }

  // Enqueue one transfer on the channel; returns its completion time.
  Rational push(const char* kind, int ce, const Rational& issue, std::int64_t bytes) {
    const Rational window = Rational::ratio(bytes, pf.bandwidth_bytes_per_s);
    ch_free = Rational::max(ch_free, issue) + window;
    seg_max_chunk = Rational::max(seg_max_chunk, window);
    if (std::string_view(kind) == "weights")
      rep.weights_access_bytes += bytes;
    else
      rep.fms_access_bytes += bytes;
    emit(kind, ce, bytes);
    return ch_free;
  }

  // Advance the engine by one unit of `steps` cycles that may start only
  // after `gate`.
  void run_unit(std::int64_t steps, const Rational& gate) {
    if (seg_first_unit) {
      seg_first_unit = false;
      if (now < gate) seg_fill = gate - now;
    }
    const Rational window = Rational::ratio(steps, pf.clock_hz);
    seg_max_unit = Rational::max(seg_max_unit, window);
    compute_t = Rational::max(compute_t, gate) + window;
    cycle += steps;
  }

  static std::int64_t batch_filters(const ConvLayer& l, const Parallelism& par, std::int64_t j) {
    return std::min(par.filters, l.filters_extent() - j * par.filters);
  }
  static std::int64_t batch_bytes(const ConvLayer& l, const Parallelism& par, std::int64_t j) {
    return batch_filters(l, par, j) * l.kernel_h * l.kernel_w * l.reduction_depth() *
           l.word_bytes;
  }

  void single_ce_layer(int li, const ComputeEngine& ce) {
    const ConvLayer& l = cnn.layer(li);
    const LayerResidency& res = alloc.residency[li - 1];
    const StreamBuffers& streams = alloc.block_streams[ce.block_index];
    const Parallelism& par = ce.par;
    const std::int64_t n_f = ceil_div_i64(l.filters_extent(), par.filters);
    const std::int64_t n_h = ceil_div_i64(l.ofm_h, par.out_h);
    const std::int64_t n_w = ceil_div_i64(l.ofm_w, par.out_w);
    const std::int64_t row_bytes = l.ofm_w * l.out_channels() * l.word_bytes;
    const Rational t0 = now;

    Rational pre_gate;  // spilled residual sources re-read before the layer runs
    for (int src : l.residual_sources)
      if (alloc.residency[src - 1].ofms_off_chip)
        pre_gate = Rational::max(pre_gate, push("ofm", ce.id, t0, cnn.layer(src).ofm_bytes()));

    const bool store_ofm = res.ofms_off_chip || li == cnn.depth();

    if (!res.ifms_off_chip) {
      if (li == 1) pre_gate = Rational::max(pre_gate, push("ifm", ce.id, t0, l.ifm_bytes()));
      std::vector<Rational> w_done(static_cast<std::size_t>(n_f));
      for (std::int64_t j = 0; j < n_f; ++j)
        w_done[static_cast<std::size_t>(j)] = push("weights", ce.id, t0, batch_bytes(l, par, j));
      for (std::int64_t j = 0; j < n_f; ++j) {
        Rational gate = w_done[static_cast<std::size_t>(j)];
        if (j == 0) gate = Rational::max(gate, pre_gate);
        run_unit(walk_steps(l, 1, n_h, n_w), gate);
      }
      if (store_ofm)
        for (std::int64_t t = 0; t < n_h; ++t) {
          const std::int64_t rows = std::min(par.out_h, l.ofm_h - t * par.out_h);
          push("ofm", ce.id, compute_t, rows * row_bytes);
        }
    } else if (res.stream == StreamChoice::input_stationary) {
      const std::int64_t ib = streams.ifm_buffer_bytes;
      const std::int64_t n_r = ceil_div_i64(l.ifm_bytes(), ib);
      for (std::int64_t r = 0; r < n_r; ++r) {
        const std::int64_t chunk = std::min(ib, l.ifm_bytes() - r * ib);
        const Rational ifm_done = push("ifm", ce.id, t0, chunk);
        // this round owns a contiguous slice of the oh steps
        const std::int64_t oh_lo = r * n_h / n_r;
        const std::int64_t oh_hi = (r + 1) * n_h / n_r;
        for (std::int64_t j = 0; j < n_f; ++j) {
          Rational gate = Rational::max(push("weights", ce.id, t0, batch_bytes(l, par, j)),
                                        ifm_done);
          if (r == 0 && j == 0) gate = Rational::max(gate, pre_gate);
          if (oh_hi > oh_lo) run_unit(walk_steps(l, 1, oh_hi - oh_lo, n_w), gate);
        }
        if (store_ofm) {
          std::int64_t rows = 0;
          for (std::int64_t t = oh_lo; t < oh_hi; ++t)
            rows += std::min(par.out_h, l.ofm_h - t * par.out_h);
          if (rows > 0) push("ofm", ce.id, compute_t, rows * row_bytes);
        }
      }
    } else {
      const std::int64_t ib = streams.ifm_buffer_bytes;
      const std::int64_t wb = streams.weights_buffer_bytes;
      const std::int64_t weights = l.weight_bytes();
      const std::int64_t n_g = ceil_div_i64(weights, wb);
      const std::int64_t n_c = ceil_div_i64(l.ifm_bytes(), ib);
      // each filter batch runs in the weight round its bytes end in
      std::int64_t j = 0;
      std::int64_t cum = 0;
      for (std::int64_t g = 0; g < n_g; ++g) {
        const Rational w_done =
            push("weights", ce.id, t0, std::min(wb, weights - g * wb));
        Rational ifm_done;
        for (std::int64_t c = 0; c < n_c; ++c)
          ifm_done = push("ifm", ce.id, t0, std::min(ib, l.ifm_bytes() - c * ib));
        while (j < n_f) {
          cum += batch_bytes(l, par, j);
          if ((cum - 1) / wb != g) {
            cum -= batch_bytes(l, par, j);
            break;
          }
          Rational gate = Rational::max(w_done, ifm_done);
          if (j == 0) gate = Rational::max(gate, pre_gate);
          run_unit(walk_steps(l, 1, n_h, n_w), gate);
          ++j;
        }
      }
      if (store_ofm)
        for (std::int64_t t = 0; t < n_h; ++t) {
          const std::int64_t rows = std::min(par.out_h, l.ofm_h - t * par.out_h);
          push("ofm", ce.id, compute_t, rows * row_bytes);
        }
    }
  }

  void pipelined_pass(const Segment& seg) {
    const int k = seg.layer_count();
    std::vector<const ConvLayer*> layers;
    std::vector<const ComputeEngine*> ces;
    std::vector<Parallelism> pars;
    std::vector<std::int64_t> rows;
    for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) {
      layers.push_back(&cnn.layer(li));
      ces.push_back(&acc.ce_for_layer(li));
      pars.push_back(ces.back()->par);
      rows.push_back(alloc.fm_tile_rows[li - 1]);
    }
    const Schedule sched = pipeline_schedule(layers, pars, rows);
    const Rational t0 = now;

    // tile-0 weights (and the only load when resident), prefetched up front
    std::vector<Rational> w0_done(static_cast<std::size_t>(k));
    std::vector<Rational> pre_gate(static_cast<std::size_t>(k));
    std::vector<std::int64_t> n_f(static_cast<std::size_t>(k));
    for (int p = 0; p < k; ++p) {
      const ConvLayer& l = *layers[static_cast<std::size_t>(p)];
      const Parallelism& par = pars[static_cast<std::size_t>(p)];
      n_f[static_cast<std::size_t>(p)] = ceil_div_i64(l.filters_extent(), par.filters);
      for (std::int64_t j = 0; j < n_f[static_cast<std::size_t>(p)]; ++j)
        w0_done[static_cast<std::size_t>(p)] =
            push("weights", ces[static_cast<std::size_t>(p)]->id, t0, batch_bytes(l, par, j));
      for (int src : l.residual_sources)
        if (alloc.residency[src - 1].ofms_off_chip)
          pre_gate[static_cast<std::size_t>(p)] =
              Rational::max(pre_gate[static_cast<std::size_t>(p)],
                            push("ofm", ces[static_cast<std::size_t>(p)]->id, t0,
                                 cnn.layer(src).ofm_bytes()));
    }

    // the network input arrives tile by tile for the first layer
    const bool feeds_input = seg.layer_lo == 1;
    std::vector<Rational> ifm_done;
    if (feeds_input) {
      const ConvLayer& l0 = *layers[0];
      const ScheduleCe& s0 = sched.ces[0];
      ifm_done.resize(s0.tile_rows.size());
      std::int64_t cum_rows = 0;
      std::int64_t cum_bytes = 0;
      Rational last;
      for (std::size_t t = 0; t < s0.tile_rows.size(); ++t) {
        cum_rows += s0.tile_rows[t];
        const std::int64_t upto = cum_rows * l0.ifm_bytes() / l0.ofm_h;
        if (upto > cum_bytes) last = push("ifm", ces[0]->id, t0, upto - cum_bytes);
        cum_bytes = upto;
        ifm_done[t] = last;
      }
    }

    const bool drains_output = seg.layer_hi == cnn.depth();
    std::vector<std::vector<Rational>> reload_done(static_cast<std::size_t>(k));
    for (int p = 0; p < k; ++p)
      reload_done[static_cast<std::size_t>(p)].resize(sched.ces[static_cast<std::size_t>(p)].tile_rows.size());

    for (int stage = 1; stage <= sched.num_stages; ++stage) {
      Rational gate;
      std::int64_t window = 0;
      for (int p = 0; p < k; ++p) {
        const int t = sched.tile_at(p, stage);
        if (t < 0) continue;
        const ConvLayer& l = *layers[static_cast<std::size_t>(p)];
        const LayerResidency& res = alloc.residency[seg.layer_lo + p - 1];
        if (t == 0) {
          gate = Rational::max(gate, w0_done[static_cast<std::size_t>(p)]);
          gate = Rational::max(gate, pre_gate[static_cast<std::size_t>(p)]);
        } else if (!res.weights_resident) {
          gate = Rational::max(gate, reload_done[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)]);
        }
        if (p == 0 && feeds_input)
          gate = Rational::max(gate, ifm_done[static_cast<std::size_t>(t)]);
        const std::int64_t tile_rows = sched.ces[static_cast<std::size_t>(p)].tile_rows[static_cast<std::size_t>(t)];
        const std::int64_t steps =
            walk_steps(l, n_f[static_cast<std::size_t>(p)],
                       ceil_div_i64(tile_rows, pars[static_cast<std::size_t>(p)].out_h),
                       ceil_div_i64(l.ofm_w, pars[static_cast<std::size_t>(p)].out_w));
        window = std::max(window, steps);
        emit("tile", ces[static_cast<std::size_t>(p)]->id, 0);
      }
      run_unit(window, gate);

      // end of stage: stores for the network tail, just-in-time reloads
      for (int p = 0; p < k; ++p) {
        const int t = sched.tile_at(p, stage);
        if (t < 0) continue;
        const ConvLayer& l = *layers[static_cast<std::size_t>(p)];
        const LayerResidency& res = alloc.residency[seg.layer_lo + p - 1];
        const ScheduleCe& sce = sched.ces[static_cast<std::size_t>(p)];
        if (p == k - 1 && drains_output)
          push("ofm", ces[static_cast<std::size_t>(p)]->id, compute_t,
               sce.tile_rows[static_cast<std::size_t>(t)] * l.ofm_w * l.out_channels() * l.word_bytes);
        if (!res.weights_resident && t + 1 < sce.tile_count()) {
          const Parallelism& par = pars[static_cast<std::size_t>(p)];
          for (std::int64_t j = 0; j < n_f[static_cast<std::size_t>(p)]; ++j)
            reload_done[static_cast<std::size_t>(p)][static_cast<std::size_t>(t) + 1] =
                push("weights", ces[static_cast<std::size_t>(p)]->id, compute_t,
                     batch_bytes(l, par, j));
        }
      }
    }
  }

  SimReport run() {
    const std::vector<Segment> segments = plan_segments(acc.sketch, cnn);
    std::vector<const BoundaryState*> boundary_after(segments.size(), nullptr);
    for (const BoundaryState& bd : alloc.boundaries)
      boundary_after[static_cast<std::size_t>(bd.after_segment)] = &bd;

    for (const Segment& seg : segments) {
      ch_free = now;
      compute_t = now;
      seg_max_chunk = Rational();
      seg_max_unit = Rational();
      seg_fill = Rational();
      seg_first_unit = true;

      if (seg.pipelined) {
        pipelined_pass(seg);
      } else {
        const ComputeEngine& ce = acc.ce_for_layer(seg.layer_lo);
        for (int li = seg.layer_lo; li <= seg.layer_hi; ++li) single_ce_layer(li, ce);
      }

      Rational drain;
      if (compute_t < ch_free) drain = ch_free - compute_t;
      now = Rational::max(compute_t, ch_free);
      rep.stage_slack_seconds += seg_fill + drain + seg_max_unit + seg_max_chunk;

      if (const BoundaryState* bd = boundary_after[static_cast<std::size_t>(seg.index)];
          bd && bd->off_chip) {
        const int producer = seg.layer_hi;
        const int consumer = producer + 1;
        int sides = 0;
        if (!alloc.residency[producer - 1].ofms_off_chip) ++sides;
        if (!alloc.residency[consumer - 1].ifms_off_chip) ++sides;
        for (int s = 0; s < sides; ++s) {
          rep.fms_access_bytes += bd->bytes;
          emit("boundary", 0, bd->bytes);
        }
        if (sides > 0) {
          now += Rational::ratio(bd->bytes, pf.bandwidth_bytes_per_s);
          ch_free = now;
        }
      }
    }

    rep.cycles = cycle;
    rep.access_bytes = rep.weights_access_bytes + rep.fms_access_bytes;
    rep.seconds = now;
    return std::move(rep);
  }
};

}  // namespace

SimReport simulate(const Accelerator& acc, const SimOptions& options) {
  if (!acc.cnn || !acc.platform || acc.ces.empty())
    throw std::invalid_argument("simulate: accelerator is not built");
  const std::int64_t total_macs = acc.cnn->total_macs();
  if (total_macs > options.mac_cap)
    throw CapExceeded("network needs " + std::to_string(total_macs) +
                      " simulated steps, cap is " + std::to_string(options.mac_cap));
  return Sim(acc, options).run();
}

std::string trace_csv(const SimReport& report) {
  std::string out = "event,cycle,ce,kind,bytes\n";
  for (const SimEvent& e : report.trace) {
    out += std::to_string(e.event);
    out += ',';
    out += std::to_string(e.cycle);
    out += ',';
    out += std::to_string(e.ce);
    out += ',';
    out += e.kind;
    out += ',';
    out += std::to_string(e.bytes);
    out += '\n';
  }
  return out;
}

}  // namespace mccm

#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "mccm/descriptors.hpp"
#include "mccm/dse.hpp"
#include "mccm/notation.hpp"

#include "fixtures.hpp"

namespace mccm::test {

// Random conv chains small enough to walk exhaustively in the event
// simulator: depth 1..6, spatial dims and channel counts within 64.
inline CnnModel random_cnn(std::mt19937_64& rng, int instance) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int depth = pick(1, 6);
  int h = pick(2, 12);
  int w = pick(1, 12);
  int ch = pick(1, 8);
  std::vector<LayerSpec> specs;
  for (int li = 1; li <= depth; ++li) {
    LayerSpec s;
    s.in_channels = ch;
    s.filters = pick(1, 8);
    s.kernel = pick(0, 3) == 0 ? 3 : 1;
    s.stride = (h > 1 && pick(0, 4) == 0) ? 2 : 1;
    s.ifm_h = h;
    s.ifm_w = w;
    if (li >= 3 && pick(0, 5) == 0) s.residual_sources.push_back(pick(1, li - 2));
    if (ch > 1 && pick(0, 9) == 0) {
      s.kind = LayerKind::depthwise;
      s.filters = ch;
    }
    specs.push_back(s);
    ch = s.kind == LayerKind::depthwise ? ch : static_cast<int>(s.filters);
    h = static_cast<int>((h + s.stride - 1) / s.stride);
    w = static_cast<int>((w + s.stride - 1) / s.stride);
  }
  return make_cnn("rand" + std::to_string(instance), specs);
}

// Draw a sketch that exercises the full mix of block shapes: lone engines,
// multi-layer single-CE blocks, pipelined ranges, and mixed custom layouts.
inline AcceleratorSketch random_sketch(std::mt19937_64& rng, const CnnModel& cnn) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int depth = cnn.depth();
  const int roll = depth < 2 ? 0 : pick(0, 4);
  if (roll == 0) return parse_accelerator("{L1-Last: CE1}", cnn);
  const int ce = pick(2, std::min(depth, 6));
  switch (roll) {
    case 1:
      return enumerate_family(Family::segmented, ce, cnn);
    case 2:
      return enumerate_family(Family::segmented_rr, ce, cnn);
    case 3:
      return enumerate_family(Family::hybrid, ce, cnn);
    default: {
      DesignSpaceConfig cfg;
      cfg.ce_lo = 2;
      cfg.ce_hi = std::min(depth, 6);
      return sample_custom_sketch(rng(), 0, cfg, cnn);
    }
  }
}

}  // namespace mccm::test

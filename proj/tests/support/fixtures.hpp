#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mccm/descriptors.hpp"

namespace mccm::test {

#ifndef MCCM_TEST_DATA_DIR
#error "MCCM_TEST_DATA_DIR must point at the bundled descriptor directory"
#endif

inline std::filesystem::path data_dir() { return MCCM_TEST_DATA_DIR; }

struct LayerSpec {
  std::int64_t filters = 1;
  std::int64_t kernel = 1;
  std::int64_t in_channels = 1;
  std::int64_t ifm_h = 1;
  std::int64_t ifm_w = 1;
  std::int64_t stride = 1;
  std::int64_t ofm_h = 0;  // 0 = same padding
  std::int64_t ofm_w = 0;
  LayerKind kind = LayerKind::standard;
  std::vector<int> residual_sources;
};

inline CnnModel make_cnn(const std::string& name, const std::vector<LayerSpec>& specs,
                         std::int64_t word_bytes = 1) {
  CnnModel cnn;
  cnn.name = name;
  cnn.word_bytes = word_bytes;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    ConvLayer l;
    l.index = static_cast<int>(i) + 1;
    l.kind = s.kind;
    l.num_filters = s.filters;
    l.kernel_h = s.kernel;
    l.kernel_w = s.kernel;
    l.in_channels = s.in_channels;
    l.ifm_h = s.ifm_h;
    l.ifm_w = s.ifm_w;
    l.stride = s.stride;
    l.ofm_h = s.ofm_h;
    l.ofm_w = s.ofm_w;
    l.residual_sources = s.residual_sources;
    cnn.layers.push_back(std::move(l));
  }
  cnn.validate();
  return cnn;
}

inline FpgaPlatform make_platform(const std::string& name, std::int64_t pe_count,
                                  std::int64_t on_chip_bytes,
                                  std::int64_t bandwidth_bytes_per_s = 1000000000,
                                  std::int64_t clock_hz = 1000000000) {
  FpgaPlatform p;
  p.name = name;
  p.pe_count = pe_count;
  p.on_chip_bytes = on_chip_bytes;
  p.bandwidth_bytes_per_s = bandwidth_bytes_per_s;
  p.clock_hz = clock_hz;
  p.validate();
  return p;
}

// The four-layer network used across builder/composer tests. All 1x1 kernels
// on 10x10 maps, word size 1, so every byte quantity is easy to hand-check:
//   L1: in 2 -> 3 filters   ifm 200  ofm 300  weights 6   macs 600
//   L2: in 3 -> 1 filter    ifm 300  ofm 100  weights 3   macs 300
//   L3: in 1 -> 2 filters   ifm 100  ofm 200  weights 2   macs 200
//   L4: in 2 -> 1 filter    ifm 200  ofm 100  weights 2   macs 200
inline CnnModel quad_cnn() {
  return make_cnn("quad", {{3, 1, 2, 10, 10},
                           {1, 1, 3, 10, 10},
                           {2, 1, 1, 10, 10},
                           {1, 1, 2, 10, 10}});
}

}  // namespace mccm::test

#include "doctest.h"

#include "mccm/builder.hpp"
#include "mccm/notation.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"

using namespace mccm;
using mccm::test::make_cnn;
using mccm::test::make_platform;
using mccm::test::quad_cnn;

TEST_CASE("pe distribution follows workload shares exactly") {
  CnnModel cnn = make_cnn("w13", {{1, 1, 1, 4, 1}, {3, 1, 1, 4, 1}});
  // macs 4 and 12: a 1:3 split of 768 PEs
  CHECK(distribute_pes({{1}, {2}}, cnn, 768) == std::vector<std::int64_t>{192, 576});

  CnnModel eq = make_cnn("eq", {{1, 1, 1, 4, 1}, {1, 1, 1, 4, 1}, {1, 1, 1, 4, 1}});
  CHECK(distribute_pes({{1}, {2}, {3}}, eq, 900) == std::vector<std::int64_t>{300, 300, 300});
}

TEST_CASE("pe distribution clamps every ce to at least one pe") {
  CnnModel cnn = make_cnn("skew", {{1, 1, 1, 1000, 1}, {1, 1, 1, 1, 1}});
  CHECK(distribute_pes({{1}, {2}}, cnn, 4) == std::vector<std::int64_t>{3, 1});
  // zero-work lists fall back to an even split
  CHECK(distribute_pes({{}, {}}, cnn, 4) == std::vector<std::int64_t>{2, 2});
}

TEST_CASE("pe distribution rejects fewer pes than ces") {
  CnnModel cnn = make_cnn("tiny", {{1, 1, 1, 2, 1}});
  std::vector<std::vector<int>> eight(8, std::vector<int>{1});
  CHECK_THROWS_WITH_AS(distribute_pes(eight, cnn, 4),
                       doctest::Contains("insufficient PEs: 4 for 8 CEs"), BuildError);
}

TEST_CASE("pe distribution conserves the pool") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    int n_layers = 1 + static_cast<int>(rng() % 6);
    std::vector<mccm::test::LayerSpec> specs;
    for (int i = 0; i < n_layers; ++i)
      specs.push_back({1 + static_cast<std::int64_t>(rng() % 8), 1,
                       1 + static_cast<std::int64_t>(rng() % 4),
                       1 + static_cast<std::int64_t>(rng() % 12), 1});
    CnnModel cnn = make_cnn("conserve", specs);
    int n_ces = 1 + static_cast<int>(rng() % n_layers);
    std::vector<std::vector<int>> lists(n_ces);
    for (int li = 1; li <= n_layers; ++li) lists[(li - 1) % n_ces].push_back(li);
    std::int64_t pe = n_ces + static_cast<std::int64_t>(rng() % 64);
    std::vector<std::int64_t> shares = distribute_pes(lists, cnn, pe);
    std::int64_t sum = 0;
    for (std::int64_t s : shares) {
      CHECK(s >= 1);
      sum += s;
    }
    CHECK(sum == pe);
  }
}

TEST_CASE("parallelism picks the latency-minimal factor triple") {
  CnnModel cnn = make_cnn("par", {{4, 3, 3, 6, 6, 1, 6, 6}});
  std::vector<const ConvLayer*> ls = {&cnn.layer(1)};
  Parallelism p = select_parallelism(16, ls);
  CHECK(p == Parallelism{4, 2, 2});
  CHECK(layer_latency_cycles(cnn.layer(1), p) == 243);
  // the chosen point fully utilizes the 16 PEs: 3888 macs = 16 * 243
  CHECK(cnn.layer(1).macs() == 16 * 243);

  CHECK(select_parallelism(1, ls) == Parallelism{1, 1, 1});
  CHECK_THROWS_AS(select_parallelism(0, ls), BuildError);
}

TEST_CASE("parallelism matches exhaustive search with pinned tie-breaks") {
  std::mt19937_64 rng(23);
  auto draw = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  for (int trial = 0; trial < 30; ++trial) {
    int n_layers = 1 + static_cast<int>(rng() % 3);
    std::vector<mccm::test::LayerSpec> specs;
    for (int i = 0; i < n_layers; ++i)
      specs.push_back({draw(1, 16), draw(1, 3), draw(1, 4), draw(1, 16), draw(1, 16)});
    CnnModel cnn = make_cnn("exh", specs);
    std::vector<const ConvLayer*> ls;
    for (int i = 1; i <= n_layers; ++i) ls.push_back(&cnn.layer(i));
    std::int64_t pe = draw(1, 32);

    Parallelism best{1, 1, 1};
    std::int64_t best_lat = -1;
    for (std::int64_t f = 1; f <= pe; ++f)
      for (std::int64_t h = 1; h <= pe && f * h <= pe; ++h)
        for (std::int64_t w = 1; w <= pe && f * h * w <= pe; ++w) {
          std::int64_t lat = 0;
          for (const ConvLayer* l : ls) lat += layer_latency_cycles(*l, {f, h, w});
          Parallelism cand{f, h, w};
          bool better = best_lat < 0 || lat < best_lat;
          if (!better && lat == best_lat) {
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
    CAPTURE(trial);
    CHECK(select_parallelism(pe, ls) == best);
  }
}

TEST_CASE("build assigns ces round robin inside a pipelined block") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-Last: CE1-CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  REQUIRE(acc.ces.size() == 2);
  CHECK(acc.ces[0].layer_indices == std::vector<int>{1, 3});
  CHECK(acc.ces[1].layer_indices == std::vector<int>{2, 4});
  CHECK(acc.ces[0].pe_count + acc.ces[1].pe_count == 2);
  CHECK(acc.ce_for_layer(3).id == 1);
  CHECK_THROWS_AS(acc.ce_for_layer(9), BuildError);
}

TEST_CASE("build rejects a sketch that does not match the cnn") {
  CnnModel cnn = quad_cnn();
  FpgaPlatform plat = make_platform("p", 2, 2000);
  AcceleratorSketch sketch;
  sketch.blocks.push_back({1, 2, 1, 1});
  CHECK_THROWS_WITH_AS(build_accelerator(sketch, cnn, plat),
                       doctest::Contains("covers 2 layers"), BuildError);
  sketch.blocks.push_back({4, 4, 2, 2});
  CHECK_THROWS_WITH_AS(build_accelerator(sketch, cnn, plat),
                       doctest::Contains("contiguously"), BuildError);
}

TEST_CASE("full fit keeps everything resident and doubles the live boundary") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  const BufferAllocation& a = acc.alloc;
  CHECK(a.full_fit);
  CHECK(a.block_buffer_bytes == std::vector<std::int64_t>{503, 302});
  REQUIRE(a.boundaries.size() == 1);
  CHECK(a.boundaries[0].bytes == 100);
  CHECK_FALSE(a.boundaries[0].off_chip);
  CHECK(a.boundary_buffer_bytes == 200);  // double buffered under coarse pipelining
  CHECK(a.total_buffer_bytes == 1005);
  for (const LayerResidency& r : a.residency) {
    CHECK_FALSE(r.ifms_off_chip);
    CHECK_FALSE(r.ofms_off_chip);
    CHECK(r.stream == StreamChoice::none);
  }
}

TEST_CASE("disabling coarse pipelining reuses one boundary buffer") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  sketch.inter_segment_pipelining = false;
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  CHECK(acc.alloc.boundary_buffer_bytes == 100);
  CHECK(acc.alloc.total_buffer_bytes == 905);
  CHECK(acc.alloc.full_fit);
}

TEST_CASE("pipelined block grows fm tiles to full maps under a loose budget") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-Last: CE1-CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  const BufferAllocation& a = acc.alloc;
  CHECK(a.full_fit);
  CHECK(a.fm_tile_rows == std::vector<std::int64_t>{10, 10, 10, 10});
  CHECK(a.block_buffer_bytes == std::vector<std::int64_t>{809});
  CHECK(a.boundary_buffer_bytes == 100);  // single block, buffer reused across passes
  CHECK(a.total_buffer_bytes == 909);
}

TEST_CASE("tight pipelined budget sheds weights then the boundary then stays put") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-Last: CE1-CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 95, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  const BufferAllocation& a = acc.alloc;
  CHECK_FALSE(a.full_fit);
  for (const LayerResidency& r : a.residency) CHECK_FALSE(r.weights_resident);
  REQUIRE(a.boundaries.size() == 1);
  CHECK(a.boundaries[0].off_chip);
  CHECK(a.boundaries[0].staging_bytes == 10);
  // Streaming layers never grow their tiles, so the leftover stays unspent.
  CHECK(a.fm_tile_rows == std::vector<std::int64_t>{1, 1, 1, 1});
  CHECK(a.total_buffer_bytes == 95);
}

TEST_CASE("single ce deficit spills the fattest fm tensors and splits stream buffers") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 600, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  const BufferAllocation& a = acc.alloc;
  CHECK_FALSE(a.full_fit);
  // L1 spills on both sides, rippling its output spill into L2's input
  CHECK(a.residency[0].ifms_off_chip);
  CHECK(a.residency[0].ofms_off_chip);
  CHECK(a.residency[1].ifms_off_chip);
  CHECK_FALSE(a.residency[1].ofms_off_chip);
  CHECK_FALSE(a.residency[2].ifms_off_chip);
  CHECK(a.residency[0].stream == StreamChoice::weight_stationary);
  CHECK(a.residency[1].stream == StreamChoice::weight_stationary);
  CHECK(a.block_streams[0].weights_buffer_bytes == 20);
  CHECK(a.block_streams[0].ifm_buffer_bytes == 168);
  CHECK(a.boundaries[0].off_chip);
  CHECK(a.boundaries[0].staging_bytes == 10);
  CHECK(a.total_buffer_bytes == 600);
}

TEST_CASE("budgets below one weights tile plus one fm row cannot operate") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 31, 1000000, 1000);
  CHECK_THROWS_WITH_AS(build_accelerator(sketch, cnn, plat),
                       doctest::Contains("cannot operate"), BuildError);
}

TEST_CASE("builder is deterministic") {
  CnnModel cnn = mccm::test::make_cnn("det", {{8, 3, 3, 12, 12},
                                              {16, 3, 8, 12, 12},
                                              {16, 1, 16, 12, 12},
                                              {4, 3, 16, 6, 6}});
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1-CE2, L3-L4: CE3}", cnn);
  FpgaPlatform plat = make_platform("p", 64, 4000);
  Accelerator a = build_accelerator(sketch, cnn, plat);
  Accelerator b = build_accelerator(sketch, cnn, plat);
  REQUIRE(a.ces.size() == b.ces.size());
  for (std::size_t i = 0; i < a.ces.size(); ++i) {
    CHECK(a.ces[i].pe_count == b.ces[i].pe_count);
    CHECK(a.ces[i].par == b.ces[i].par);
  }
  CHECK(a.alloc.total_buffer_bytes == b.alloc.total_buffer_bytes);
  CHECK(a.alloc.fm_tile_rows == b.alloc.fm_tile_rows);
}

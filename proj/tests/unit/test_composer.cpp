#include "doctest.h"

#include "mccm/composer.hpp"
#include "mccm/notation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "fixtures.hpp"

using namespace mccm;
using mccm::test::data_dir;
using mccm::test::make_platform;
using mccm::test::quad_cnn;

namespace {

std::int64_t charge_sum(const EvalReport& r) {
  std::int64_t total = 0;
  for (const SegmentReport& s : r.segments) total += s.buffer_charge_bytes;
  for (const BoundaryReport& b : r.boundaries) total += b.buffer_charge_bytes;
  return total;
}

bool notes_contain(const EvalReport& r, const std::string& needle) {
  for (const std::string& n : r.notes)
    if (n.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("segments enumerate passes of pipelined blocks") {
  CnnModel cnn = mccm::test::make_cnn(
      "c12", std::vector<mccm::test::LayerSpec>(12, {1, 1, 1, 4, 4}));
  AcceleratorSketch rr = parse_accelerator("{L1-Last: CE1-CE4}", cnn);
  std::vector<Segment> segs = plan_segments(rr, cnn);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].layer_lo == 1);
  CHECK(segs[0].layer_hi == 4);
  CHECK(segs[2].layer_lo == 9);
  CHECK(segs[2].layer_hi == 12);
  CHECK(segs[2].pass_index == 2);
  CHECK(segs[1].pipelined);
  CHECK(segs[1].block_index == 0);

  CnnModel resnet = load_cnn(data_dir() / "resnet50.json");
  AcceleratorSketch rr4 = parse_accelerator("{L1-Last: CE1-CE4}", resnet);
  std::vector<Segment> rsegs = plan_segments(rr4, resnet);
  CHECK(rsegs.size() == 14);  // ceil(53 / 4)
  CHECK(rsegs.back().layer_lo == 53);
  CHECK(rsegs.back().layer_hi == 53);

  AcceleratorSketch seg2 = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", quad_cnn());
  CHECK(plan_segments(seg2, quad_cnn()).size() == 2);
}

TEST_CASE("effective time is the max of compute and memory phases") {
  EffectiveTime et = effective_time(600, 1000000000, 800, 1000000000);
  CHECK(et.seconds == Rational::ratio(800, 1000000000));
  CHECK(et.memory_bound);
  CHECK(et.idle_fraction == Rational(1, 4));

  et = effective_time(600, 1000000000, 100, 1000000000);
  CHECK(et.seconds == Rational::ratio(600, 1000000000));
  CHECK_FALSE(et.memory_bound);
  CHECK(et.idle_fraction == Rational(0));

  // a tie is compute bound: nothing stalls
  et = effective_time(600, 1000000000, 600, 1000000000);
  CHECK_FALSE(et.memory_bound);
  CHECK(et.idle_fraction == Rational(0));

  et = effective_time(0, 1000000000, 0, 1000000000);
  CHECK(et.seconds == Rational(0));
  CHECK(et.idle_fraction == Rational(0));
}

TEST_CASE("segmented quad report carries exact frozen numbers") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));

  CHECK(r.full_fit);
  CHECK(r.inter_segment_pipelining);
  REQUIRE(r.segments.size() == 2);
  const SegmentReport& s0 = r.segments[0];
  const SegmentReport& s1 = r.segments[1];
  CHECK(s0.macs == 900);
  CHECK(s0.compute_cycles == 900);
  CHECK(s0.pe_count == 1);
  CHECK(s0.accesses.weights_bytes == 9);
  CHECK(s0.accesses.fms_bytes == 200);  // network input load
  CHECK(s1.compute_cycles == 400);
  CHECK(s1.accesses.weights_bytes == 4);
  CHECK(s1.accesses.fms_bytes == 100);  // network output store
  CHECK(s0.compute_seconds == Rational(9, 10));
  CHECK_FALSE(s0.memory_bound);
  CHECK(s0.underutilization == Rational(0));

  CHECK(r.total_compute_cycles == 1300);
  CHECK(r.access_totals.weights_bytes == 13);
  CHECK(r.access_totals.fms_bytes == 300);
  CHECK(r.total_access_bytes == 313);
  REQUIRE(r.boundaries.size() == 1);
  CHECK(r.boundaries[0].bytes == 100);
  CHECK_FALSE(r.boundaries[0].off_chip);
  CHECK(r.boundaries[0].access_bytes == 0);
  CHECK(r.boundaries[0].comm_seconds == Rational(0));
  CHECK(r.boundaries[0].buffer_charge_bytes == 200);

  CHECK(r.latency_seconds == Rational(13, 10));
  CHECK(r.throughput_per_second == Rational(10, 9));  // slowest segment at 0.9 s
  CHECK(r.throughput_per_second * r.latency_seconds == Rational(13, 9));

  CHECK(r.total_buffer_bytes == 1005);
  CHECK(r.segments[0].buffer_charge_bytes == 503);
  CHECK(r.segments[1].buffer_charge_bytes == 302);
  CHECK(charge_sum(r) == r.total_buffer_bytes);
}

TEST_CASE("without coarse pipelining throughput is exactly the inverse latency") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  sketch.inter_segment_pipelining = false;
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));
  CHECK(r.latency_seconds == Rational(13, 10));
  CHECK(r.throughput_per_second == Rational(10, 13));
  CHECK(r.throughput_per_second * r.latency_seconds == Rational(1));
  CHECK(r.total_buffer_bytes == 905);
  CHECK(r.boundaries[0].buffer_charge_bytes == 100);
}

TEST_CASE("a lone pipelined pass streams inputs at the busiest engine's rate") {
  CnnModel cnn = mccm::test::make_cnn(
      "tri", {{2, 1, 15, 4, 1}, {10, 1, 2, 4, 1}, {1, 1, 10, 4, 1}});
  FpgaPlatform plat = make_platform("p3", 3, 86, 1000000, 1000);
  AcceleratorSketch sketch = parse_accelerator("{L1-Last: CE1-CE3}", cnn);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));

  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0].pipelined);
  CHECK(r.full_fit);
  CHECK(r.total_compute_cycles == 150);  // per-tile 30/20/10, four tiles per engine
  CHECK(r.latency_seconds == Rational(3, 20));
  CHECK(r.throughput_per_second == Rational(25, 3));  // busiest engine at 120 cycles
  CHECK(r.throughput_per_second * r.latency_seconds == Rational(5, 4));
}

TEST_CASE("round robin quad degenerates to sequential passes under full tiles") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-Last: CE1-CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  Accelerator acc = build_accelerator(sketch, cnn, plat);
  EvalReport r = compose(acc);

  REQUIRE(r.segments.size() == 2);
  CHECK(r.segments[0].pipelined);
  CHECK(r.segments[0].compute_cycles == 900);  // one full-height tile per layer
  CHECK(r.segments[1].compute_cycles == 400);
  CHECK(r.segments[0].accesses.weights_bytes == 9);
  CHECK(r.segments[0].accesses.fms_bytes == 200);
  CHECK(r.segments[1].accesses.fms_bytes == 100);
  CHECK(r.total_access_bytes == 313);
  CHECK_FALSE(r.inter_segment_pipelining);
  CHECK(r.throughput_per_second * r.latency_seconds == Rational(1));

  CHECK(r.segments[0].buffer_charge_bytes == 809);  // block buffer lands on its first pass
  CHECK(r.segments[1].buffer_charge_bytes == 0);
  CHECK(r.boundaries[0].buffer_charge_bytes == 100);
  CHECK(charge_sum(r) == r.total_buffer_bytes);

  BlockMetrics bm = multi_segment_block_metrics(acc, 0);
  CHECK(bm.latency_cycles == 1300);
  CHECK(bm.accesses.weights_bytes == 13);
  CHECK(bm.accesses.fms_bytes == 300);
  CHECK(bm.buffer_bytes == 809);
}

TEST_CASE("spilled boundaries move bytes into the access totals and comm time") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 600, 1000000, 1000);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));

  CHECK_FALSE(r.full_fit);
  CHECK(r.access_totals.weights_bytes == 13);
  CHECK(r.access_totals.fms_bytes == 900);
  REQUIRE(r.boundaries.size() == 1);
  CHECK(r.boundaries[0].off_chip);
  CHECK(r.boundaries[0].access_bytes == 200);  // store + load of 100 bytes
  CHECK(r.total_access_bytes == 1113);
  CHECK(r.boundaries[0].comm_seconds == Rational(1, 10000));
  CHECK(r.latency_seconds == Rational(13001, 10000));
  CHECK(r.throughput_per_second == Rational(10, 9));
  CHECK(r.total_buffer_bytes == 600);
  CHECK(charge_sum(r) == 600);
  CHECK(notes_contain(r, "1 of 1 inter-segment buffers off chip"));
  CHECK(notes_contain(r, "FM tensors spilled off chip around 2 layers"));
}

TEST_CASE("hybrid quad pipelines four single-layer segments") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch =
      parse_accelerator("{L1: CE1, L2: CE2, L3: CE3, L4-Last: CE4}", cnn);
  FpgaPlatform plat = make_platform("p", 4, 3000, 1000000, 1000);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));

  REQUIRE(r.segments.size() == 4);
  CHECK(r.full_fit);
  std::vector<std::int64_t> cycles;
  for (const SegmentReport& s : r.segments) cycles.push_back(s.compute_cycles);
  CHECK(cycles == std::vector<std::int64_t>{600, 300, 200, 200});
  CHECK(r.latency_seconds == Rational(13, 10));
  CHECK(r.throughput_per_second == Rational(5, 3));  // slowest stage at 0.6 s
  CHECK(r.throughput_per_second * r.latency_seconds >= Rational(1));
  CHECK(r.total_access_bytes == 313);
  REQUIRE(r.boundaries.size() == 3);
  CHECK(r.boundaries[0].buffer_charge_bytes == 600);
  CHECK(r.boundaries[1].buffer_charge_bytes == 200);
  CHECK(r.boundaries[2].buffer_charge_bytes == 400);
  CHECK(charge_sum(r) == r.total_buffer_bytes);
}

TEST_CASE("report json carries the headline metrics") {
  CnnModel cnn = quad_cnn();
  AcceleratorSketch sketch = parse_accelerator("{L1-L2: CE1, L3-L4: CE2}", cnn);
  FpgaPlatform plat = make_platform("p", 2, 2000, 1000000, 1000);
  EvalReport r = compose(build_accelerator(sketch, cnn, plat));
  nlohmann::json j = report_to_json(r);
  CHECK(j["cnn"] == "quad");
  CHECK(j["platform"] == "p");
  CHECK(j["sketch"] == "{L1-L2: CE1, L3-L4: CE2}");
  CHECK(j["latency_s"].get<double>() == doctest::Approx(1.3));
  CHECK(j["throughput_per_s"].get<double>() == doctest::Approx(10.0 / 9.0));
  CHECK(j["access_bytes"]["total"] == 313);
  CHECK(j["buffer_bytes"] == 1005);
  CHECK(j["segments"].size() == 2);
  CHECK(j["segments"][0]["compute_cycles"] == 900);
  CHECK(j["boundaries"].size() == 1);
  CHECK(j["full_fit"] == true);
}

#include "doctest.h"

#include "mccm/analysis.hpp"

#include <stdexcept>
#include <string>

using namespace mccm;

namespace {

Rational ns(std::int64_t v) { return Rational::ratio(v, 1000000000); }

// Two-segment report with hand-set times: segment 0 is memory bound
// (800 ns effective over 600 ns of compute), segment 1 is compute bound.
EvalReport two_segment_report(bool with_comm) {
  EvalReport r;
  r.cnn_name = "synthetic";
  r.platform_name = "p";
  r.inter_segment_pipelining = true;

  SegmentReport s0;
  s0.index = 0;
  s0.compute_seconds = ns(600);
  s0.memory_seconds = ns(800);
  s0.effective_seconds = ns(800);
  s0.idle_fraction = Rational(1, 4);
  s0.memory_bound = true;
  s0.underutilization = Rational(0);
  s0.buffer_bytes = 364000;
  s0.buffer_charge_bytes = 364000;

  SegmentReport s1;
  s1.index = 1;
  s1.compute_seconds = ns(200);
  s1.memory_seconds = ns(50);
  s1.effective_seconds = ns(200);
  s1.idle_fraction = Rational(0);
  s1.memory_bound = false;
  s1.underutilization = Rational(1, 8);
  s1.buffer_bytes = 282000;
  s1.buffer_charge_bytes = 282000;

  r.segments = {s0, s1};
  r.latency_seconds = ns(1000);
  if (with_comm) {
    BoundaryReport b;
    b.after_segment = 0;
    b.bytes = 80000;
    b.off_chip = true;
    b.access_bytes = 160000;
    b.buffer_charge_bytes = 80;
    b.comm_seconds = ns(100);
    r.boundaries = {b};
    r.latency_seconds = ns(1100);
  }
  r.total_buffer_bytes = 646000 + (with_comm ? 80 : 0);
  r.access_totals = {100, 50};
  r.total_access_bytes = 150 + (with_comm ? 160000 : 0);
  return r;
}

}  // namespace

TEST_CASE("time breakdown shares sum to one without comm") {
  TimeBreakdown tb = time_breakdown(two_segment_report(false));
  CHECK(tb.latency_seconds == ns(1000));
  CHECK(tb.comm_share == Rational(0));
  CHECK(tb.global_idle_fraction == Rational(1, 5));
  REQUIRE(tb.segments.size() == 2);
  CHECK(tb.segments[0].compute_share == Rational(3, 5));
  CHECK(tb.segments[0].idle_share == Rational(1, 5));
  CHECK(tb.segments[0].idle_fraction == Rational(1, 4));
  CHECK(tb.segments[0].memory_bound);
  CHECK(tb.segments[1].compute_share == Rational(1, 5));
  CHECK(tb.segments[1].idle_share == Rational(0));

  Rational sum = tb.comm_share;
  for (const SegmentTimeShare& s : tb.segments) sum += s.compute_share + s.idle_share;
  CHECK(sum == Rational(1));
}

TEST_CASE("time breakdown charges comm as its own share") {
  TimeBreakdown tb = time_breakdown(two_segment_report(true));
  CHECK(tb.latency_seconds == ns(1100));
  CHECK(tb.comm_share == Rational(1, 11));
  CHECK(tb.segments[0].compute_share == Rational(6, 11));
  CHECK(tb.segments[0].idle_share == Rational(2, 11));
  CHECK(tb.segments[1].compute_share == Rational(2, 11));
  CHECK(tb.global_idle_fraction == Rational(1, 5));  // comm not counted as idle

  Rational sum = tb.comm_share;
  for (const SegmentTimeShare& s : tb.segments) sum += s.compute_share + s.idle_share;
  CHECK(sum == Rational(1));
}

TEST_CASE("access breakdown folds boundary traffic into the fm class") {
  AccessBreakdown ab = access_breakdown(two_segment_report(true));
  CHECK(ab.weights_bytes == 100);
  CHECK(ab.inter_segment_bytes == 160000);
  CHECK(ab.fms_bytes == 160050);
  CHECK(ab.total_bytes == 160150);
  CHECK(ab.weights_fraction == doctest::Approx(100.0 / 160150.0));
  CHECK(ab.fms_fraction == doctest::Approx(160050.0 / 160150.0));
  CHECK(ab.weights_fraction + ab.fms_fraction == doctest::Approx(1.0));

  AccessBreakdown dry = access_breakdown(two_segment_report(false));
  CHECK(dry.inter_segment_bytes == 0);
  CHECK(dry.fms_bytes == 50);
  CHECK(dry.total_bytes == 150);
}

TEST_CASE("underutilization profile normalizes to the smallest nonzero entry") {
  EvalReport r = two_segment_report(false);
  r.segments[0].underutilization = Rational(1, 4);
  r.segments[1].underutilization = Rational(1, 8);
  SegmentReport s2;
  s2.index = 2;
  s2.underutilization = Rational(0);
  r.segments.push_back(s2);

  UnderutilizationProfile up = underutilization_profile(r);
  REQUIRE(up.raw.size() == 3);
  CHECK(up.raw[0] == Rational(1, 4));
  CHECK(up.normalized[0] == doctest::Approx(2.0));
  CHECK(up.normalized[1] == doctest::Approx(1.0));
  CHECK(up.normalized[2] == doctest::Approx(0.0));
}

TEST_CASE("buffer profile lists nonzero charges with fractions of the total") {
  EvalReport r = two_segment_report(true);
  std::vector<BufferShare> shares = buffer_profile(r);
  REQUIRE(shares.size() == 3);
  CHECK(shares[0].label == "segment 0");
  CHECK(shares[0].bytes == 364000);
  CHECK(shares[1].label == "segment 1");
  CHECK(shares[2].label == "boundary 0");
  CHECK(shares[2].bytes == 80);
  double sum = 0;
  for (const BufferShare& s : shares) sum += s.fraction;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(shares[0].fraction == doctest::Approx(364000.0 / 646080.0));

  // segments with no charge (later passes of a block) are omitted
  r.segments[1].buffer_charge_bytes = 0;
  r.total_buffer_bytes -= 282000;
  shares = buffer_profile(r);
  REQUIRE(shares.size() == 2);
  CHECK(shares[1].label == "boundary 0");
}

TEST_CASE("accuracy percent mirrors the synthesized baseline rule") {
  CHECK(accuracy_percent(100.0, 90.0) == doctest::Approx(90.0));
  CHECK(accuracy_percent(100.0, 100.0) == doctest::Approx(100.0));
  CHECK(accuracy_percent(50.0, 75.0) == doctest::Approx(50.0));
  CHECK(accuracy_percent(100.0, 250.0) == doctest::Approx(-50.0));
  CHECK_THROWS_AS(accuracy_percent(0.0, 5.0), std::domain_error);
  CHECK_THROWS_AS(accuracy_percent(-3.0, 1.0), std::domain_error);
}

TEST_CASE("segments csv renders four significant digits") {
  std::string csv = segments_csv(two_segment_report(false));
  CHECK(csv ==
        "segment,compute_s,memory_s,idle_frac,buffer_bytes,underutil\n"
        "0,6e-07,8e-07,0.25,364000,0\n"
        "1,2e-07,5e-08,0,282000,0.125\n");
}

TEST_CASE("sig4 formatting") {
  CHECK(format_sig4(0.25) == "0.25");
  CHECK(format_sig4(0.0) == "0");
  CHECK(format_sig4(6e-07) == "6e-07");
  CHECK(format_sig4(12340.0) == "1.234e+04");
  CHECK(format_sig4(1.0 / 3.0) == "0.3333");
  CHECK(format_sig4(123.456) == "123.5");
}

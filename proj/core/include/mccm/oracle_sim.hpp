#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mccm/composer.hpp"

namespace mccm {

// Raised before simulation when the iteration space exceeds the cap.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  std::int64_t mac_cap = 100000000;
  bool trace = false;
};

struct SimEvent {
  std::int64_t event = 0;  // ordinal
  std::int64_t cycle = 0;  // compute-cycle stamp at issue
  int ce = 0;              // 0 for boundary transfers
  std::string kind;        // tile, weights, ifm, ofm, boundary
  std::int64_t bytes = 0;
};

struct SimReport {
  std::int64_t cycles = 0;
  std::int64_t weights_access_bytes = 0;
  std::int64_t fms_access_bytes = 0;
  std::int64_t access_bytes = 0;
  Rational seconds;
  // Largest single stage window seen per pipelined pass, summed: the slack
  // budget a stage-level comparison is allowed to differ by.
  Rational stage_slack_seconds;
  std::vector<SimEvent> trace;
};

// Walks the tiled loop nest and the transfer schedule event by event,
// counting cycles by enumeration and bytes by chunk, sharing only the build
// decisions (parallelism, residency, tiling) with the analytical model.
SimReport simulate(const Accelerator& acc, const SimOptions& options = {});

// event,cycle,ce,kind,bytes
std::string trace_csv(const SimReport& report);

}  // namespace mccm

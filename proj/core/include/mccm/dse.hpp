#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mccm/composer.hpp"

namespace mccm {

enum class Family { segmented, segmented_rr, hybrid, custom };

const char* to_string(Family family);
Family family_from_string(const std::string& text);

enum class Metric { latency, throughput, buffer, accesses };

struct Objective {
  Metric metric = Metric::throughput;
  bool maximize = true;
};

struct DesignSpaceConfig {
  int ce_lo = 2;
  int ce_hi = 11;
  std::vector<Family> families{Family::segmented, Family::segmented_rr,
                               Family::hybrid};
  int sample_size = 0;  // custom-family sample count, 0 disables sampling
  std::uint64_t rng_seed = 1;
  Objective objective_a{Metric::throughput, true};
  Objective objective_b{Metric::buffer, false};
  int jobs = 1;
};

struct DesignPoint {
  std::string sketch;
  Family family = Family::custom;
  bool feasible = false;
  std::string error;  // populated when infeasible
  double latency_s = 0;
  double throughput_per_s = 0;
  std::int64_t buffer_bytes = 0;
  std::int64_t access_bytes = 0;
};

double metric_value(const DesignPoint& point, Metric metric);

// Canonical family member for a CE count: Segmented balances MACs across
// contiguous blocks, SegmentedRR maps the whole depth to one CE range, Hybrid
// gives the first ce_count-1 layers private CEs and the rest to the last one.
AcceleratorSketch enumerate_family(Family family, int ce_count,
                                   const CnnModel& cnn);

// Deterministic per-index draw from the mixed space: an optional multi-CE
// prefix block followed by single-CE blocks. Prefix length 0 degenerates to
// the Segmented shape.
AcceleratorSketch sample_custom_sketch(std::uint64_t seed, std::uint64_t index,
                                       const DesignSpaceConfig& config,
                                       const CnnModel& cnn);

// Number of distinct custom-space sketches for the configured CE range,
// as a double since it overflows 64 bits for deep networks.
double custom_space_cardinality(const DesignSpaceConfig& config,
                                const CnnModel& cnn);

DesignPoint evaluate_sketch(const AcceleratorSketch& sketch, Family family,
                            const CnnModel& cnn, const FpgaPlatform& platform);

// Indices of non-dominated feasible points. Exact metric ties keep the first
// point and count the rest in duplicate_ties.
std::vector<std::size_t> pareto_front(const std::vector<DesignPoint>& points,
                                      const Objective& a, const Objective& b,
                                      int* duplicate_ties = nullptr);

struct ExploreResult {
  std::vector<DesignPoint> points;  // baselines first, then samples by index
  std::vector<std::size_t> pareto;  // indices into points
  int duplicate_ties = 0;
  double space_cardinality = 0;
  double mean_ms_per_design = 0;
};

// Result order and content are independent of config.jobs.
ExploreResult explore(const DesignSpaceConfig& config, const CnnModel& cnn,
                      const FpgaPlatform& platform);

}  // namespace mccm

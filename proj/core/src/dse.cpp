#include "mccm/dse.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "mccm/builder.hpp"
#include "mccm/notation.hpp"

namespace mccm {

namespace {

std::int64_t prefix_macs(const CnnModel& cnn, std::vector<std::int64_t>& out) {
  out.assign(cnn.depth() + 1, 0);
  for (int i = 1; i <= cnn.depth(); ++i) out[i] = out[i - 1] + cnn.layer(i).macs();
  return out[cnn.depth()];
}

BlockSketch block(int lo, int hi, int ce_lo, int ce_hi, bool last = false) {
  BlockSketch b;
  b.layer_lo = lo;
  b.layer_hi = hi;
  b.ce_lo = ce_lo;
  b.ce_hi = ce_hi;
  b.hi_is_last = last;
  return b;
}

// splitmix64 finalizer over a seed/index pair; every draw stream is
// independent of all others.
std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

double binomial(std::int64_t a, std::int64_t b) {
  if (b < 0 || b > a) return 0.0;
  return std::exp(std::lgamma(static_cast<double>(a) + 1) -
                  std::lgamma(static_cast<double>(b) + 1) -
                  std::lgamma(static_cast<double>(a - b) + 1));
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::segmented: return "segmented";
    case Family::segmented_rr: return "segmented_rr";
    case Family::hybrid: return "hybrid";
    case Family::custom: return "custom";
  }
  return "custom";
}

Family family_from_string(const std::string& text) {
  if (text == "segmented") return Family::segmented;
  if (text == "segmented_rr") return Family::segmented_rr;
  if (text == "hybrid") return Family::hybrid;
  if (text == "custom") return Family::custom;
  throw BuildError("unknown family '" + text + "'");
}

double metric_value(const DesignPoint& point, Metric metric) {
  switch (metric) {
    case Metric::latency: return point.latency_s;
    case Metric::throughput: return point.throughput_per_s;
    case Metric::buffer: return static_cast<double>(point.buffer_bytes);
    case Metric::accesses: return static_cast<double>(point.access_bytes);
  }
  return 0.0;
}

AcceleratorSketch enumerate_family(Family family, int ce_count, const CnnModel& cnn) {
  const int d = cnn.depth();
  if (ce_count < 1) throw BuildError("ce_count must be positive");
  AcceleratorSketch s;

  switch (family) {
    case Family::segmented: {
      if (ce_count > d)
        throw BuildError("segmented needs at least one layer per CE (" +
                         std::to_string(ce_count) + " CEs, " + std::to_string(d) + " layers)");
      std::vector<std::int64_t> prefix;
      const std::int64_t total = prefix_macs(cnn, prefix);
      const int k = ce_count;
      std::vector<int> cuts;
      int prev = 0;
      for (int i = 1; i < k; ++i) {
        // i-th cut targets i/k of the MAC total; compare in integers
        const std::int64_t target_num = static_cast<std::int64_t>(i) * total;
        const int lo = prev + 1;
        const int hi = d - (k - i);
        int j = hi;
        for (int x = lo; x <= hi; ++x)
          if (prefix[x] * k >= target_num) {
            j = x;
            break;
          }
        if (j > lo) {
          const std::int64_t d_here = std::llabs(prefix[j] * k - target_num);
          const std::int64_t d_prev = std::llabs(prefix[j - 1] * k - target_num);
          if (d_prev < d_here) --j;
        }
        cuts.push_back(j);
        prev = j;
      }
      int lo = 1;
      int id = 1;
      for (int c : cuts) {
        s.blocks.push_back(block(lo, c, id, id));
        lo = c + 1;
        ++id;
      }
      s.blocks.push_back(block(lo, d, id, id));
      break;
    }
    case Family::segmented_rr: {
      if (ce_count < 2) throw BuildError("segmented_rr needs at least 2 CEs");
      if (ce_count > d)
        throw BuildError("segmented_rr ce_count exceeds the network depth");
      s.blocks.push_back(block(1, d, 1, ce_count, true));
      break;
    }
    case Family::hybrid: {
      if (ce_count < 2) throw BuildError("hybrid needs at least 2 CEs");
      if (ce_count > d)
        throw BuildError("hybrid needs at least one layer per CE (" +
                         std::to_string(ce_count) + " CEs, " + std::to_string(d) + " layers)");
      for (int i = 1; i < ce_count; ++i) s.blocks.push_back(block(i, i, i, i));
      s.blocks.push_back(block(ce_count, d, ce_count, ce_count, true));
      break;
    }
    case Family::custom:
      throw BuildError("the custom family has no canonical member; sample it instead");
  }
  s.inter_segment_pipelining = s.blocks.size() > 1;
  return s;
}

AcceleratorSketch sample_custom_sketch(std::uint64_t seed, std::uint64_t index,
                                       const DesignSpaceConfig& config,
                                       const CnnModel& cnn) {
  const int d = cnn.depth();
  if (config.ce_lo < 2 || config.ce_hi < config.ce_lo)
    throw BuildError("invalid CE range");
  // n single blocks need depth >= n; a prefix block plus m singles needs
  // depth >= 1 + m, which any n >= 3 satisfies on a 2-layer network.
  bool any = false;
  for (int n = config.ce_lo; n <= config.ce_hi && !any; ++n)
    any = n <= d || (n >= 3 && d >= 2);
  if (!any) throw BuildError("no feasible designs for this CE range");

  std::mt19937_64 rng(mix(seed, index));
  auto draw = [&](std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  int n = 0;
  std::vector<int> c_choices;
  for (int guard = 0; guard < 100000; ++guard) {
    n = static_cast<int>(draw(config.ce_lo, config.ce_hi));
    c_choices.clear();
    if (d >= n) c_choices.push_back(0);
    for (int c = 2; c <= n - 1; ++c)
      if (d >= 1 + (n - c)) c_choices.push_back(c);
    if (!c_choices.empty()) break;
  }
  if (c_choices.empty()) throw BuildError("no feasible designs for this CE range");
  const int c = c_choices[static_cast<std::size_t>(draw(0, static_cast<std::int64_t>(c_choices.size()) - 1))];

  AcceleratorSketch s;
  int next_layer = 1;
  int next_ce = 1;
  int singles = n;
  if (c >= 2) {
    const int p = static_cast<int>(draw(1, d - (n - c)));
    s.blocks.push_back(block(1, p, 1, c));
    next_layer = p + 1;
    next_ce = c + 1;
    singles = n - c;
  }
  // spread the remaining layers over `singles` blocks: a uniform choice of
  // cut points via a partial shuffle of the gap indices
  const int rem = d - next_layer + 1;
  std::vector<int> gaps(static_cast<std::size_t>(rem > 0 ? rem - 1 : 0));
  for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = static_cast<int>(i) + 1;
  for (int i = 0; i < singles - 1; ++i) {
    const std::int64_t j = draw(i, static_cast<std::int64_t>(gaps.size()) - 1);
    std::swap(gaps[static_cast<std::size_t>(i)], gaps[static_cast<std::size_t>(j)]);
  }
  std::vector<int> cuts(gaps.begin(), gaps.begin() + (singles - 1));
  std::sort(cuts.begin(), cuts.end());
  int lo = next_layer;
  for (int cut : cuts) {
    s.blocks.push_back(block(lo, next_layer - 1 + cut, next_ce, next_ce));
    lo = next_layer + cut;
    ++next_ce;
  }
  s.blocks.push_back(block(lo, d, next_ce, next_ce));
  s.inter_segment_pipelining = s.blocks.size() > 1;
  return s;
}

double custom_space_cardinality(const DesignSpaceConfig& config, const CnnModel& cnn) {
  const std::int64_t d = cnn.depth();
  double total = 0;
  for (int n = config.ce_lo; n <= config.ce_hi; ++n) {
    total += binomial(d - 1, n - 1);  // all-single split
    for (int c = 2; c <= n - 1; ++c)
      total += binomial(d - 1, n - c);  // prefix block of c CEs, then singles
  }
  return total;
}

DesignPoint evaluate_sketch(const AcceleratorSketch& sketch, Family family,
                            const CnnModel& cnn, const FpgaPlatform& platform) {
  DesignPoint p;
  p.sketch = format_accelerator(sketch);
  p.family = family;
  try {
    Accelerator acc = build_accelerator(sketch, cnn, platform);
    EvalReport report = compose(acc);
    p.feasible = true;
    p.latency_s = report.latency_seconds.to_double();
    p.throughput_per_s = report.throughput_per_second.to_double();
    p.buffer_bytes = report.total_buffer_bytes;
    p.access_bytes = report.total_access_bytes;
  } catch (const BuildError& e) {
    p.feasible = false;
    p.error = e.what();
  }
  return p;
}

std::vector<std::size_t> pareto_front(const std::vector<DesignPoint>& points,
                                      const Objective& a, const Objective& b,
                                      int* duplicate_ties) {
  struct Entry {
    double va;
    double vb;
    std::size_t idx;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].feasible) continue;
    const double va = metric_value(points[i], a.metric) * (a.maximize ? 1.0 : -1.0);
    const double vb = metric_value(points[i], b.metric) * (b.maximize ? 1.0 : -1.0);
    entries.push_back({va, vb, i});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.va != y.va) return x.va > y.va;
    if (x.vb != y.vb) return x.vb > y.vb;
    return x.idx < y.idx;
  });

  int ties = 0;
  std::vector<std::size_t> kept;
  double best_vb = -std::numeric_limits<double>::infinity();
  double last_va = 0, last_vb = 0;
  for (const Entry& e : entries) {
    if (!kept.empty() && e.va == last_va && e.vb == last_vb) {
      ++ties;  // exact duplicate of a front member
      continue;
    }
    if (e.vb > best_vb) {
      kept.push_back(e.idx);
      best_vb = e.vb;
      last_va = e.va;
      last_vb = e.vb;
    }
  }
  std::sort(kept.begin(), kept.end());
  if (duplicate_ties) *duplicate_ties = ties;
  return kept;
}

ExploreResult explore(const DesignSpaceConfig& config, const CnnModel& cnn,
                      const FpgaPlatform& platform) {
  if (config.ce_lo < 2) throw BuildError("ce_lo must be at least 2");
  if (config.ce_hi < config.ce_lo) throw BuildError("ce_hi must be >= ce_lo");
  if (config.jobs < 1) throw BuildError("jobs must be positive");
  if (config.sample_size < 0) throw BuildError("sample_size must be non-negative");

  struct Task {
    Family family;
    int ce = 0;             // baseline tasks
    std::uint64_t index = 0;  // sample tasks
    bool sampled = false;
  };
  std::vector<Task> tasks;
  bool wants_custom = false;
  for (Family f : config.families) {
    if (f == Family::custom) {
      wants_custom = true;
      continue;
    }
    for (int ce = config.ce_lo; ce <= config.ce_hi; ++ce)
      tasks.push_back({f, ce, 0, false});
  }
  if (wants_custom)
    for (int i = 0; i < config.sample_size; ++i)
      tasks.push_back({Family::custom, 0, static_cast<std::uint64_t>(i), true});

  ExploreResult result;
  result.points.resize(tasks.size());
  if (wants_custom) result.space_cardinality = custom_space_cardinality(config, cnn);

  std::vector<double> task_ms(tasks.size(), 0.0);
  auto run_task = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Task& t = tasks[i];
    DesignPoint p;
    try {
      AcceleratorSketch sketch =
          t.sampled ? sample_custom_sketch(config.rng_seed, t.index, config, cnn)
                    : enumerate_family(t.family, t.ce, cnn);
      p = evaluate_sketch(sketch, t.family, cnn, platform);
    } catch (const BuildError& e) {
      p.family = t.family;
      p.feasible = false;
      p.error = e.what();
    }
    result.points[i] = std::move(p);
    task_ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count();
  };

  if (config.jobs == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
        run_task(i);
    };
    const int n_threads = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  double total_ms = 0;
  for (double v : task_ms) total_ms += v;
  if (!tasks.empty()) result.mean_ms_per_design = total_ms / static_cast<double>(tasks.size());
  result.pareto = pareto_front(result.points, config.objective_a, config.objective_b,
                               &result.duplicate_ties);
  return result;
}

}  // namespace mccm

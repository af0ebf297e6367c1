// mccm: evaluate, explore, validate, and format multiple-CE accelerator designs.

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "mccm/analysis.hpp"
#include "mccm/builder.hpp"
#include "mccm/composer.hpp"
#include "mccm/descriptors.hpp"
#include "mccm/dse.hpp"
#include "mccm/notation.hpp"
#include "mccm/oracle_sim.hpp"

#ifndef MCCM_VERSION
#define MCCM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mccm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Collects every raw input byte so reports can carry one provenance digest.
struct Digest {
  std::uint64_t h = 14695981039346656037ULL;
  void add(std::string_view bytes) { h = fnv1a(h, bytes); }
  std::string hex() const { return hex64(h); }
};

// Input arguments resolve in order: literal path, $MCCM_DATA_DIR/<arg>, then
// both again with a .json suffix.
fs::path resolve_input(const std::string& arg) {
  std::vector<fs::path> tries;
  tries.emplace_back(arg);
  if (const char* dd = std::getenv("MCCM_DATA_DIR")) tries.emplace_back(fs::path(dd) / arg);
  const std::size_t plain = tries.size();
  for (std::size_t i = 0; i < plain; ++i) tries.push_back(fs::path(tries[i]) += ".json");
  for (const fs::path& p : tries)
    if (fs::exists(p) && fs::is_regular_file(p)) return p;
  throw std::runtime_error("input not found: " + arg);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

CnnModel load_cnn_arg(const std::string& arg, Digest& digest) {
  const fs::path p = resolve_input(arg);
  const std::string text = slurp(p);
  digest.add(text);
  return cnn_from_json(json::parse(text), p.string());
}

FpgaPlatform load_platform_arg(const std::string& arg, Digest& digest) {
  const fs::path p = resolve_input(arg);
  const std::string text = slurp(p);
  digest.add(text);
  return platform_from_json(json::parse(text), p.string());
}

// A sketch argument is inline text when it carries a brace, else a file.
std::string load_sketch_arg(const std::string& arg, Digest& digest) {
  std::string text = arg;
  if (arg.find('{') == std::string::npos) text = slurp(resolve_input(arg));
  digest.add(text);
  return text;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << content;
}

void stamp(json& j, const Digest& digest, bool timestamp) {
  j["version"] = MCCM_VERSION;
  j["input_digest"] = digest.hex();
  if (timestamp) j["generated_at"] = static_cast<std::int64_t>(std::time(nullptr));
}

json accelerator_to_json(const Accelerator& acc) {
  json j;
  j["sketch"] = format_accelerator(acc.sketch);
  j["inter_segment_pipelining"] = acc.sketch.inter_segment_pipelining;
  j["full_fit"] = acc.alloc.full_fit;
  j["total_buffer_bytes"] = acc.alloc.total_buffer_bytes;
  json ces = json::array();
  for (const ComputeEngine& ce : acc.ces) {
    json c;
    c["id"] = ce.id;
    c["block"] = ce.block_index;
    c["pipeline_pos"] = ce.pipeline_pos;
    c["pe_count"] = ce.pe_count;
    c["parallelism"] = {ce.par.filters, ce.par.out_h, ce.par.out_w};
    c["layers"] = ce.layer_indices;
    ces.push_back(std::move(c));
  }
  j["ces"] = std::move(ces);
  json layers = json::array();
  for (std::size_t i = 0; i < acc.alloc.residency.size(); ++i) {
    const LayerResidency& r = acc.alloc.residency[i];
    json l;
    l["layer"] = static_cast<int>(i) + 1;
    l["ifms_off_chip"] = r.ifms_off_chip;
    l["ofms_off_chip"] = r.ofms_off_chip;
    l["weights_resident"] = r.weights_resident;
    l["stream"] = r.stream == StreamChoice::none
                      ? "none"
                      : (r.stream == StreamChoice::input_stationary ? "input_stationary"
                                                                    : "weight_stationary");
    l["fm_tile_rows"] = acc.alloc.fm_tile_rows[i];
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  json bds = json::array();
  for (const BoundaryState& bd : acc.alloc.boundaries) {
    json b;
    b["after_segment"] = bd.after_segment;
    b["bytes"] = bd.bytes;
    b["staging_bytes"] = bd.staging_bytes;
    b["off_chip"] = bd.off_chip;
    bds.push_back(std::move(b));
  }
  j["boundaries"] = std::move(bds);
  return j;
}

json breakdown_to_json(const EvalReport& report) {
  json j;
  const TimeBreakdown tb = time_breakdown(report);
  json time;
  time["latency_s"] = tb.latency_seconds.to_double();
  time["comm_share"] = tb.comm_share.to_double();
  time["global_idle_fraction"] = tb.global_idle_fraction.to_double();
  json tsegs = json::array();
  for (const SegmentTimeShare& s : tb.segments) {
    json t;
    t["segment"] = s.segment;
    t["compute_s"] = s.compute_seconds.to_double();
    t["memory_s"] = s.memory_seconds.to_double();
    t["effective_s"] = s.effective_seconds.to_double();
    t["idle_fraction"] = s.idle_fraction.to_double();
    t["compute_share"] = s.compute_share.to_double();
    t["idle_share"] = s.idle_share.to_double();
    t["memory_bound"] = s.memory_bound;
    tsegs.push_back(std::move(t));
  }
  time["segments"] = std::move(tsegs);
  j["time"] = std::move(time);

  const AccessBreakdown ab = access_breakdown(report);
  j["access"] = {{"weights_bytes", ab.weights_bytes},
                 {"fms_bytes", ab.fms_bytes},
                 {"inter_segment_bytes", ab.inter_segment_bytes},
                 {"total_bytes", ab.total_bytes},
                 {"weights_fraction", ab.weights_fraction},
                 {"fms_fraction", ab.fms_fraction}};

  const UnderutilizationProfile up = underutilization_profile(report);
  json uraw = json::array();
  for (const Rational& r : up.raw) uraw.push_back(r.to_double());
  j["underutilization"] = {{"raw", std::move(uraw)}, {"normalized", up.normalized}};

  json buffers = json::array();
  for (const BufferShare& b : buffer_profile(report))
    buffers.push_back({{"label", b.label}, {"bytes", b.bytes}, {"fraction", b.fraction}});
  j["buffers"] = std::move(buffers);
  j["segments_csv"] = segments_csv(report);
  return j;
}

struct EvalArgs {
  std::string cnn, platform, sketch, out, emit_accelerator;
  std::int64_t clock_hz = 0;
  bool breakdown = false;
  bool no_isp = false;
  bool timestamp = false;
};

int cmd_eval(const EvalArgs& a) {
  Digest digest;
  CnnModel cnn = load_cnn_arg(a.cnn, digest);
  FpgaPlatform plat = load_platform_arg(a.platform, digest);
  if (a.clock_hz > 0) plat.clock_hz = a.clock_hz;
  const std::string sketch_text = load_sketch_arg(a.sketch, digest);
  AcceleratorSketch sketch = parse_accelerator(sketch_text, cnn);
  if (a.no_isp) sketch.inter_segment_pipelining = false;

  const Accelerator acc = build_accelerator(sketch, cnn, plat);
  const EvalReport report = compose(acc);
  json j = report_to_json(report);
  stamp(j, digest, a.timestamp);
  if (a.breakdown) j["breakdown"] = breakdown_to_json(report);
  write_output(a.out, j.dump(2) + "\n");
  if (!a.emit_accelerator.empty())
    write_output(a.emit_accelerator, accelerator_to_json(acc).dump(2) + "\n");
  return kExitOk;
}

Metric metric_from_string(const std::string& s) {
  if (s == "latency") return Metric::latency;
  if (s == "throughput") return Metric::throughput;
  if (s == "buffer") return Metric::buffer;
  if (s == "accesses") return Metric::accesses;
  throw std::runtime_error("unknown metric: " + s);
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::latency: return "latency";
    case Metric::throughput: return "throughput";
    case Metric::buffer: return "buffer";
    case Metric::accesses: return "accesses";
  }
  return "?";
}

// "throughput:max" / "buffer:min"; the default direction maximizes only
// throughput.
Objective objective_from_string(const std::string& s) {
  Objective o;
  const std::size_t colon = s.find(':');
  const std::string name = s.substr(0, colon);
  o.metric = metric_from_string(name);
  if (colon == std::string::npos) {
    o.maximize = o.metric == Metric::throughput;
  } else {
    const std::string dir = s.substr(colon + 1);
    if (dir == "max")
      o.maximize = true;
    else if (dir == "min")
      o.maximize = false;
    else
      throw std::runtime_error("objective direction must be max or min: " + s);
  }
  return o;
}

void config_from_json(const json& j, DesignSpaceConfig& cfg) {
  if (j.contains("ce_lo")) cfg.ce_lo = j.at("ce_lo").get<int>();
  if (j.contains("ce_hi")) cfg.ce_hi = j.at("ce_hi").get<int>();
  if (j.contains("families")) {
    cfg.families.clear();
    for (const auto& f : j.at("families")) cfg.families.push_back(family_from_string(f.get<std::string>()));
  }
  if (j.contains("sample_size")) cfg.sample_size = j.at("sample_size").get<int>();
  if (j.contains("rng_seed")) cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  if (j.contains("objective_a")) cfg.objective_a = objective_from_string(j.at("objective_a").get<std::string>());
  if (j.contains("objective_b")) cfg.objective_b = objective_from_string(j.at("objective_b").get<std::string>());
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
}

std::string points_csv(const ExploreResult& result) {
  std::string out = "sketch,family,latency_s,throughput_per_s,buffer_bytes,access_bytes\n";
  for (const DesignPoint& p : result.points) {
    if (!p.feasible) continue;
    out += '"' + p.sketch + "\"," + to_string(p.family) + ',' + format_sig4(p.latency_s) +
           ',' + format_sig4(p.throughput_per_s) + ',' + std::to_string(p.buffer_bytes) + ',' +
           std::to_string(p.access_bytes) + '\n';
  }
  return out;
}

json point_to_json(const DesignPoint& p) {
  json j;
  j["sketch"] = p.sketch;
  j["family"] = to_string(p.family);
  j["feasible"] = p.feasible;
  if (!p.feasible) {
    j["error"] = p.error;
    return j;
  }
  j["latency_s"] = p.latency_s;
  j["throughput_per_s"] = p.throughput_per_s;
  j["buffer_bytes"] = p.buffer_bytes;
  j["access_bytes"] = p.access_bytes;
  return j;
}

json pareto_to_json(const ExploreResult& result, const DesignSpaceConfig& cfg) {
  json j;
  j["objective_a"] = std::string(metric_name(cfg.objective_a.metric)) + ':' +
                     (cfg.objective_a.maximize ? "max" : "min");
  j["objective_b"] = std::string(metric_name(cfg.objective_b.metric)) + ':' +
                     (cfg.objective_b.maximize ? "max" : "min");
  j["duplicate_ties"] = result.duplicate_ties;
  json front = json::array();
  for (std::size_t idx : result.pareto) {
    json p = point_to_json(result.points[idx]);
    p["index"] = idx;
    front.push_back(std::move(p));
  }
  j["front"] = std::move(front);
  return j;
}

struct ExploreArgs {
  std::string cnn, platform, config, out;
  std::optional<int> ce_lo, ce_hi, sample_size, jobs;
  std::optional<std::uint64_t> seed;
  std::string families, objectives;
  std::int64_t clock_hz = 0;
  bool csv = false;
  bool timestamp = false;
};

int cmd_explore(const ExploreArgs& a) {
  Digest digest;
  CnnModel cnn = load_cnn_arg(a.cnn, digest);
  FpgaPlatform plat = load_platform_arg(a.platform, digest);
  if (a.clock_hz > 0) plat.clock_hz = a.clock_hz;

  DesignSpaceConfig cfg;
  if (!a.config.empty()) {
    const std::string text = slurp(resolve_input(a.config));
    digest.add(text);
    config_from_json(json::parse(text), cfg);
  }
  if (a.ce_lo) cfg.ce_lo = *a.ce_lo;
  if (a.ce_hi) cfg.ce_hi = *a.ce_hi;
  if (a.sample_size) cfg.sample_size = *a.sample_size;
  if (a.seed) cfg.rng_seed = *a.seed;
  if (a.jobs) cfg.jobs = *a.jobs;
  if (!a.families.empty()) {
    cfg.families.clear();
    std::stringstream ss(a.families);
    for (std::string tok; std::getline(ss, tok, ',');) cfg.families.push_back(family_from_string(tok));
  }
  if (!a.objectives.empty()) {
    std::stringstream ss(a.objectives);
    std::string one, two;
    std::getline(ss, one, ',');
    std::getline(ss, two, ',');
    if (one.empty() || two.empty())
      throw std::runtime_error("--objectives takes two comma-separated metrics");
    cfg.objective_a = objective_from_string(one);
    cfg.objective_b = objective_from_string(two);
  }

  const ExploreResult result = explore(cfg, cnn, plat);

  if (a.csv) {
    write_output(a.out, points_csv(result));
    std::cerr << pareto_to_json(result, cfg).dump(2) << "\n";
  } else {
    json j;
    stamp(j, digest, a.timestamp);
    j["cnn"] = cnn.name;
    j["platform"] = plat.name;
    json pts = json::array();
    for (const DesignPoint& p : result.points) pts.push_back(point_to_json(p));
    j["points"] = std::move(pts);
    j["pareto"] = pareto_to_json(result, cfg);
    if (result.space_cardinality > 0) j["space_cardinality"] = result.space_cardinality;
    j["mean_ms_per_design"] = result.mean_ms_per_design;
    write_output(a.out, j.dump(2) + "\n");
  }
  std::cerr << "mean ms/design: " << format_sig4(result.mean_ms_per_design) << "\n";
  return kExitOk;
}

struct ValidateArgs {
  std::string cnn, platform, sketch, out;
  std::int64_t cap = SimOptions{}.mac_cap;
  std::int64_t clock_hz = 0;
  bool no_isp = false;
  bool timestamp = false;
};

int cmd_validate(const ValidateArgs& a) {
  Digest digest;
  CnnModel cnn = load_cnn_arg(a.cnn, digest);
  FpgaPlatform plat = load_platform_arg(a.platform, digest);
  if (a.clock_hz > 0) plat.clock_hz = a.clock_hz;
  AcceleratorSketch sketch = parse_accelerator(load_sketch_arg(a.sketch, digest), cnn);
  if (a.no_isp) sketch.inter_segment_pipelining = false;

  const Accelerator acc = build_accelerator(sketch, cnn, plat);
  const EvalReport report = compose(acc);
  SimOptions opt;
  opt.mac_cap = a.cap;
  const SimReport sim = simulate(acc, opt);

  std::int64_t boundary_bytes = 0;
  for (const BoundaryReport& bd : report.boundaries) boundary_bytes += bd.access_bytes;
  const std::int64_t analytic_fms = report.access_totals.fms_bytes + boundary_bytes;

  // Cycle and byte counts must agree exactly; wall time is allowed one
  // pipeline stage of skew.
  const bool exact = report.total_compute_cycles == sim.cycles &&
                     report.access_totals.weights_bytes == sim.weights_access_bytes &&
                     analytic_fms == sim.fms_access_bytes &&
                     report.total_access_bytes == sim.access_bytes;
  const Rational diff = report.latency_seconds < sim.seconds
                            ? sim.seconds - report.latency_seconds
                            : report.latency_seconds - sim.seconds;
  const bool time_ok = !(sim.stage_slack_seconds < diff);

  json j;
  stamp(j, digest, a.timestamp);
  j["sketch"] = format_accelerator(sketch);
  j["analytical"] = {{"latency_s", report.latency_seconds.to_double()},
                     {"compute_cycles", report.total_compute_cycles},
                     {"weights_bytes", report.access_totals.weights_bytes},
                     {"fms_bytes", analytic_fms},
                     {"access_bytes", report.total_access_bytes}};
  j["simulated"] = {{"seconds", sim.seconds.to_double()},
                    {"cycles", sim.cycles},
                    {"weights_bytes", sim.weights_access_bytes},
                    {"fms_bytes", sim.fms_access_bytes},
                    {"access_bytes", sim.access_bytes}};
  j["accuracy_percent"] = {
      {"latency", accuracy_percent(sim.seconds.to_double(), report.latency_seconds.to_double())},
      {"cycles", accuracy_percent(static_cast<double>(sim.cycles),
                                  static_cast<double>(report.total_compute_cycles))},
      {"access_bytes", accuracy_percent(static_cast<double>(sim.access_bytes),
                                        static_cast<double>(report.total_access_bytes))}};
  j["time_tolerance_s"] = sim.stage_slack_seconds.to_double();
  j["counts_exact"] = exact;
  j["time_within_tolerance"] = time_ok;
  bool memory_bound = false;
  for (const SegmentReport& s : report.segments) memory_bound |= s.memory_bound;
  j["memory_bound"] = memory_bound;
  write_output(a.out, j.dump(2) + "\n");
  return exact && time_ok ? kExitOk : kExitMismatch;
}

struct FmtArgs {
  std::string cnn, sketch, out;
};

int cmd_fmt(const FmtArgs& a) {
  Digest digest;
  CnnModel cnn = load_cnn_arg(a.cnn, digest);
  const AcceleratorSketch sketch = parse_accelerator(load_sketch_arg(a.sketch, digest), cnn);
  write_output(a.out, format_accelerator(sketch) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytical cost models for multiple-CE CNN accelerators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MCCM_VERSION);

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Build a design and report its metrics");
  eval->add_option("cnn", ea.cnn, "CNN descriptor")->required();
  eval->add_option("platform", ea.platform, "Platform descriptor")->required();
  eval->add_option("sketch", ea.sketch, "Accelerator sketch text or file")->required();
  eval->add_option("-o,--output", ea.out, "Write the report here instead of stdout");
  eval->add_option("--emit-accelerator", ea.emit_accelerator, "Also dump the built accelerator");
  eval->add_option("--clock-hz", ea.clock_hz, "Override the platform clock");
  eval->add_flag("--breakdown", ea.breakdown, "Attach time/access/buffer breakdowns");
  eval->add_flag("--no-inter-segment-pipelining", ea.no_isp, "Disable coarse pipelining");
  eval->add_flag("--timestamp", ea.timestamp, "Stamp the report with wall-clock time");

  ExploreArgs xa;
  CLI::App* explore = app.add_subcommand("explore", "Sweep a design space");
  explore->add_option("cnn", xa.cnn, "CNN descriptor")->required();
  explore->add_option("platform", xa.platform, "Platform descriptor")->required();
  explore->add_option("config", xa.config, "Design space config (JSON)");
  explore->add_option("-o,--output", xa.out, "Write points here instead of stdout");
  explore->add_option("--ce-lo", xa.ce_lo, "Smallest CE count");
  explore->add_option("--ce-hi", xa.ce_hi, "Largest CE count");
  explore->add_option("--families", xa.families, "Comma list: segmented,segmented_rr,hybrid,custom");
  explore->add_option("--sample-size", xa.sample_size, "Custom-family sample count");
  explore->add_option("--seed", xa.seed, "Sampling seed");
  explore->add_option("--jobs", xa.jobs, "Worker threads");
  explore->add_option("--objectives", xa.objectives,
                      "Two metrics, e.g. throughput:max,buffer:min");
  explore->add_option("--clock-hz", xa.clock_hz, "Override the platform clock");
  explore->add_flag("--csv", xa.csv, "Emit points as CSV (Pareto JSON moves to stderr)");
  explore->add_flag("--timestamp", xa.timestamp, "Stamp the report with wall-clock time");

  ValidateArgs va;
  CLI::App* validate = app.add_subcommand("validate", "Cross-check the model against simulation");
  validate->add_option("cnn", va.cnn, "CNN descriptor")->required();
  validate->add_option("platform", va.platform, "Platform descriptor")->required();
  validate->add_option("sketch", va.sketch, "Accelerator sketch text or file")->required();
  validate->add_option("-o,--output", va.out, "Write the comparison here instead of stdout");
  validate->add_option("--cap", va.cap, "Simulated step budget");
  validate->add_option("--clock-hz", va.clock_hz, "Override the platform clock");
  validate->add_flag("--no-inter-segment-pipelining", va.no_isp, "Disable coarse pipelining");
  validate->add_flag("--timestamp", va.timestamp, "Stamp the report with wall-clock time");

  FmtArgs fa;
  CLI::App* fmt = app.add_subcommand("fmt", "Canonicalize a sketch");
  fmt->add_option("cnn", fa.cnn, "CNN descriptor")->required();
  fmt->add_option("sketch", fa.sketch, "Accelerator sketch text or file")->required();
  fmt->add_option("-o,--output", fa.out, "Write the canonical text here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) return cmd_eval(ea);
    if (explore->parsed()) return cmd_explore(xa);
    if (validate->parsed()) return cmd_validate(va);
    if (fmt->parsed()) return cmd_fmt(fa);
  } catch (const NotationError& e) {
    std::cerr << "sketch error";
    if (e.column() > 0) std::cerr << " at column " << e.column();
    std::cerr << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const BuildError& e) {
    std::cerr << "infeasible design: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const CapExceeded& e) {
    std::cerr << "simulation cap: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "malformed JSON: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

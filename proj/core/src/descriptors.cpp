#include "mccm/descriptors.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mccm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& what) {
  throw DescriptorError(source + ": " + what);
}

[[noreturn]] void fail_layer(const std::string& source, int index, const std::string& what) {
  std::ostringstream os;
  os << source << ": layer " << index << ": " << what;
  throw DescriptorError(os.str());
}

std::int64_t require_int(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) fail(source, std::string("missing field '") + key + "'");
  if (!j[key].is_number_integer()) fail(source, std::string("field '") + key + "' must be an integer");
  return j[key].get<std::int64_t>();
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::standard: return "standard";
    case LayerKind::depthwise: return "depthwise";
    case LayerKind::pointwise: return "pointwise";
  }
  return "standard";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "standard") return LayerKind::standard;
  if (s == "depthwise") return LayerKind::depthwise;
  if (s == "pointwise") return LayerKind::pointwise;
  throw DescriptorError("unknown layer kind '" + s + "'");
}

std::int64_t CnnModel::total_weight_count() const {
  std::int64_t total = 0;
  for (const ConvLayer& l : layers) total += l.weight_count();
  return total;
}

std::int64_t CnnModel::total_weight_bytes() const {
  std::int64_t total = 0;
  for (const ConvLayer& l : layers) total += l.weight_bytes();
  return total;
}

std::int64_t CnnModel::total_macs() const {
  std::int64_t total = 0;
  for (const ConvLayer& l : layers) total += l.macs();
  return total;
}

void CnnModel::validate() {
  const std::string src = name.empty() ? std::string("cnn") : name;
  if (word_bytes <= 0) fail(src, "word_bytes must be positive");
  if (layers.empty()) fail(src, "no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ConvLayer& l = layers[i];
    if (l.index != static_cast<int>(i) + 1)
      fail_layer(src, l.index, "indices must be contiguous from 1");
    if (l.num_filters <= 0 || l.in_channels <= 0)
      fail_layer(src, l.index, "filters and in_channels must be positive");
    if (l.kernel_h <= 0 || l.kernel_w <= 0)
      fail_layer(src, l.index, "kernel dims must be positive");
    if (l.ifm_h <= 0 || l.ifm_w <= 0)
      fail_layer(src, l.index, "ifm dims must be positive");
    if (l.stride <= 0) fail_layer(src, l.index, "stride must be positive");
    if (l.kind == LayerKind::pointwise && (l.kernel_h != 1 || l.kernel_w != 1))
      fail_layer(src, l.index, "pointwise layer requires a 1x1 kernel");
    if (l.kind == LayerKind::depthwise && l.num_filters != l.in_channels)
      fail_layer(src, l.index, "depthwise layer requires num_filters == in_channels");
    l.word_bytes = word_bytes;
    const std::int64_t same_h = ceil_div(l.ifm_h, l.stride);
    const std::int64_t same_w = ceil_div(l.ifm_w, l.stride);
    if (l.ofm_h <= 0 || l.ofm_w <= 0) {
      l.ofm_h = same_h;
      l.ofm_w = same_w;
      l.explicit_ofm = false;
    } else {
      l.explicit_ofm = (l.ofm_h != same_h || l.ofm_w != same_w);
    }
    for (int ref : l.residual_sources) {
      if (ref < 1 || ref >= l.index)
        fail_layer(src, l.index, "residual source " + std::to_string(ref) +
                                     " must name an earlier layer");
    }
  }
  // Liveness scan: a source j consumed at layer k is held by every layer in (j, k].
  live_copy_bytes.assign(layers.size(), 0);
  for (const ConvLayer& l : layers) {
    for (int ref : l.residual_sources) {
      const std::int64_t copy = layers[ref - 1].ofm_bytes();
      for (int x = ref + 1; x <= l.index; ++x) live_copy_bytes[x - 1] += copy;
    }
  }
}

void FpgaPlatform::validate() const {
  const std::string src = name.empty() ? std::string("platform") : name;
  if (pe_count <= 0) fail(src, "non-positive pe_count");
  if (on_chip_bytes < 0) fail(src, "negative on_chip_bytes");
  if (bandwidth_bytes_per_s <= 0) fail(src, "non-positive bandwidth");
  if (clock_hz <= 0) fail(src, "non-positive clock");
}

CnnModel cnn_from_json(const json& j, const std::string& source) {
  CnnModel model;
  if (!j.is_object()) fail(source, "descriptor must be a JSON object");
  if (!j.contains("name") || !j["name"].is_string()) fail(source, "missing string field 'name'");
  model.name = j["name"].get<std::string>();
  model.word_bytes = j.contains("word_bytes") ? require_int(j, "word_bytes", source) : 1;
  if (!j.contains("layers") || !j["layers"].is_array()) fail(source, "missing array field 'layers'");
  for (const json& lj : j["layers"]) {
    ConvLayer l;
    l.index = static_cast<int>(require_int(lj, "index", source));
    const std::string lsrc = source + " layer " + std::to_string(l.index);
    if (!lj.contains("kind") || !lj["kind"].is_string()) fail(lsrc, "missing string field 'kind'");
    try {
      l.kind = layer_kind_from_string(lj["kind"].get<std::string>());
    } catch (const DescriptorError& e) {
      fail(lsrc, e.what());
    }
    l.num_filters = require_int(lj, "filters", lsrc);
    if (!lj.contains("kernel") || !lj["kernel"].is_array() || lj["kernel"].size() != 2)
      fail(lsrc, "field 'kernel' must be [h, w]");
    l.kernel_h = lj["kernel"][0].get<std::int64_t>();
    l.kernel_w = lj["kernel"][1].get<std::int64_t>();
    l.in_channels = require_int(lj, "in_channels", lsrc);
    if (!lj.contains("ifm") || !lj["ifm"].is_array() || lj["ifm"].size() != 2)
      fail(lsrc, "field 'ifm' must be [h, w]");
    l.ifm_h = lj["ifm"][0].get<std::int64_t>();
    l.ifm_w = lj["ifm"][1].get<std::int64_t>();
    l.stride = lj.contains("stride") ? require_int(lj, "stride", lsrc) : 1;
    if (lj.contains("ofm")) {
      if (!lj["ofm"].is_array() || lj["ofm"].size() != 2) fail(lsrc, "field 'ofm' must be [h, w]");
      l.ofm_h = lj["ofm"][0].get<std::int64_t>();
      l.ofm_w = lj["ofm"][1].get<std::int64_t>();
    }
    if (lj.contains("residual_sources")) {
      if (!lj["residual_sources"].is_array()) fail(lsrc, "field 'residual_sources' must be an array");
      for (const json& r : lj["residual_sources"]) l.residual_sources.push_back(r.get<int>());
    }
    model.layers.push_back(std::move(l));
  }
  model.validate();
  return model;
}

json cnn_to_json(const CnnModel& model) {
  json j;
  j["name"] = model.name;
  j["word_bytes"] = model.word_bytes;
  j["layers"] = json::array();
  for (const ConvLayer& l : model.layers) {
    json lj;
    lj["index"] = l.index;
    lj["kind"] = to_string(l.kind);
    lj["filters"] = l.num_filters;
    lj["kernel"] = {l.kernel_h, l.kernel_w};
    lj["in_channels"] = l.in_channels;
    lj["ifm"] = {l.ifm_h, l.ifm_w};
    lj["stride"] = l.stride;
    if (l.explicit_ofm) lj["ofm"] = {l.ofm_h, l.ofm_w};
    if (!l.residual_sources.empty()) lj["residual_sources"] = l.residual_sources;
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

CnnModel load_cnn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DescriptorError("cannot open CNN descriptor: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return cnn_from_json(j, path.filename().string());
}

void save_cnn(const CnnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DescriptorError("cannot write CNN descriptor: " + path.string());
  out << cnn_to_json(model).dump(2) << "\n";
}

FpgaPlatform platform_from_json(const json& j, const std::string& source) {
  FpgaPlatform p;
  if (!j.is_object()) fail(source, "descriptor must be a JSON object");
  if (!j.contains("name") || !j["name"].is_string()) fail(source, "missing string field 'name'");
  p.name = j["name"].get<std::string>();
  p.pe_count = require_int(j, "pe_count", source);
  p.on_chip_bytes = require_int(j, "on_chip_bytes", source);
  p.bandwidth_bytes_per_s = require_int(j, "bandwidth_bytes_per_s", source);
  p.clock_hz = require_int(j, "clock_hz", source);
  p.validate();
  return p;
}

json platform_to_json(const FpgaPlatform& p) {
  json j;
  j["name"] = p.name;
  j["pe_count"] = p.pe_count;
  j["on_chip_bytes"] = p.on_chip_bytes;
  j["bandwidth_bytes_per_s"] = p.bandwidth_bytes_per_s;
  j["clock_hz"] = p.clock_hz;
  return j;
}

FpgaPlatform load_platform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DescriptorError("cannot open platform descriptor: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return platform_from_json(j, path.filename().string());
}

}  // namespace mccm

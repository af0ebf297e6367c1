#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mccm {

class DescriptorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayerKind { standard, depthwise, pointwise };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

// One convolution layer. Non-convolution layers (pooling, activation, FC)
// are not represented; their geometric effect shows up in the next layer's
// declared ifm dims. OFM dims derive from same-padding unless the descriptor
// overrides them explicitly.
struct ConvLayer {
  int index = 0;  // 1-based position in the network
  LayerKind kind = LayerKind::standard;
  std::int64_t num_filters = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t in_channels = 0;
  std::int64_t ifm_h = 0;
  std::int64_t ifm_w = 0;
  std::int64_t ofm_h = 0;
  std::int64_t ofm_w = 0;
  std::int64_t stride = 1;
  std::vector<int> residual_sources;  // earlier layer indices whose OFMs stay live until here
  std::int64_t word_bytes = 1;
  bool explicit_ofm = false;

  // Reduction depth per output element: in_channels except for depthwise.
  std::int64_t reduction_depth() const {
    return kind == LayerKind::depthwise ? 1 : in_channels;
  }
  // Extent of the output-channel dimension.
  std::int64_t filters_extent() const {
    return kind == LayerKind::depthwise ? in_channels : num_filters;
  }
  std::int64_t out_channels() const { return filters_extent(); }

  std::int64_t weight_count() const {
    return filters_extent() * kernel_h * kernel_w * reduction_depth();
  }
  std::int64_t weight_bytes() const { return weight_count() * word_bytes; }
  std::int64_t ifm_bytes() const { return ifm_h * ifm_w * in_channels * word_bytes; }
  std::int64_t ofm_bytes() const { return ofm_h * ofm_w * out_channels() * word_bytes; }
  std::int64_t macs() const {
    return filters_extent() * ofm_h * ofm_w * kernel_h * kernel_w * reduction_depth();
  }
};

struct CnnModel {
  std::string name;
  std::int64_t word_bytes = 1;
  std::vector<ConvLayer> layers;
  // live_copy_bytes[i] = extra on-chip bytes layer i+1 must hold for residual
  // tensors produced earlier and not yet consumed. Filled by validate().
  std::vector<std::int64_t> live_copy_bytes;

  int depth() const { return static_cast<int>(layers.size()); }
  const ConvLayer& layer(int index) const { return layers.at(index - 1); }

  std::int64_t total_weight_count() const;
  std::int64_t total_weight_bytes() const;
  std::int64_t total_macs() const;

  // FMsSz of a layer: IFM + OFM + live residual copies.
  std::int64_t fms_bytes(int index) const {
    const ConvLayer& l = layer(index);
    return l.ifm_bytes() + l.ofm_bytes() + live_copy_bytes.at(index - 1);
  }

  void validate();  // throws DescriptorError; recomputes live_copy_bytes
};

struct FpgaPlatform {
  std::string name;
  std::int64_t pe_count = 0;
  std::int64_t on_chip_bytes = 0;
  std::int64_t bandwidth_bytes_per_s = 0;
  std::int64_t clock_hz = 0;

  void validate() const;  // throws DescriptorError
};

CnnModel cnn_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json cnn_to_json(const CnnModel& model);
CnnModel load_cnn(const std::filesystem::path& path);
void save_cnn(const CnnModel& model, const std::filesystem::path& path);

FpgaPlatform platform_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json platform_to_json(const FpgaPlatform& platform);
FpgaPlatform load_platform(const std::filesystem::path& path);

}  // namespace mccm

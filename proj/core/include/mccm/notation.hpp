#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mccm/descriptors.hpp"

namespace mccm {

class NotationError : public std::runtime_error {
 public:
  NotationError(const std::string& what, int column)
      : std::runtime_error(what), column_(column) {}
  // 1-based column of the offending token; 0 when the error is not positional.
  int column() const { return column_; }

 private:
  int column_;
};

// One mapping "{L_x-L_y: CE_z}" or "{L_x-L_y: CE_z-CE_w}". A block with
// ce_lo == ce_hi runs its layer range sequentially on one CE; a block with a
// CE range pipelines its layers across those CEs at tile granularity,
// (ce count) layers at a time.
struct BlockSketch {
  int layer_lo = 0;
  int layer_hi = 0;
  int ce_lo = 0;
  int ce_hi = 0;
  bool hi_is_last = false;  // range was written "-Last" in the source text

  bool pipelined() const { return ce_hi > ce_lo; }
  int ce_count() const { return ce_hi - ce_lo + 1; }
  int layer_count() const { return layer_hi - layer_lo + 1; }

  friend bool operator==(const BlockSketch&, const BlockSketch&) = default;
};

struct AcceleratorSketch {
  std::vector<BlockSketch> blocks;
  // Coarse-grained pipelining between blocks; defaults to true for sketches
  // with more than one block.
  bool inter_segment_pipelining = false;

  int ce_count() const;

  friend bool operator==(const AcceleratorSketch&, const AcceleratorSketch&) = default;
};

// Parses sketch text against a CNN: resolves "Last", checks that ranges cover
// layers 1..depth contiguously without overlap and that CE ids are distinct.
AcceleratorSketch parse_accelerator(std::string_view text, const CnnModel& cnn);

// Canonical text form: no spaces inside tokens, one space after ':' and ','.
std::string format_accelerator(const AcceleratorSketch& sketch);

}  // namespace mccm

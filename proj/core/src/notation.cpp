#include "mccm/notation.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mccm {

namespace {

// Cursor-based scanner; columns are 1-based for error messages.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  int column() const { return static_cast<int>(pos_) + 1; }

  bool try_consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!try_consume(c)) {
      std::ostringstream os;
      os << "expected '" << c << "' (" << what << ")";
      throw NotationError(os.str(), column());
    }
  }
  bool try_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) == kw) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }
  // Case-insensitive variant, used for the Last token only.
  bool try_keyword_ci(std::string_view kw) {
    skip_ws();
    if (pos_ + kw.size() > text_.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(text_[pos_ + i])) !=
          std::tolower(static_cast<unsigned char>(kw[i])))
        return false;
    pos_ += kw.size();
    return true;
  }
  int expect_int(const char* what) {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) {
      std::ostringstream os;
      os << "expected " << what;
      throw NotationError(os.str(), static_cast<int>(start) + 1);
    }
    long v = 0;
    for (std::size_t i = start; i < pos_; ++i) {
      v = v * 10 + (text_[i] - '0');
      if (v > 1000000) throw NotationError("index out of range", static_cast<int>(start) + 1);
    }
    return static_cast<int>(v);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

int AcceleratorSketch::ce_count() const {
  int n = 0;
  for (const BlockSketch& b : blocks) n += b.ce_count();
  return n;
}

AcceleratorSketch parse_accelerator(std::string_view text, const CnnModel& cnn) {
  Scanner s(text);
  AcceleratorSketch sketch;
  s.expect('{', "sketch must start with '{'");
  while (true) {
    BlockSketch b;
    int col = s.column();
    if (!s.try_keyword("L")) throw NotationError("expected layer range starting with 'L'", col);
    b.layer_lo = s.expect_int("layer index");
    if (s.try_consume('-')) {
      col = s.column();
      if (s.try_keyword_ci("Last")) {
        b.layer_hi = cnn.depth();
        b.hi_is_last = true;
      } else if (s.try_keyword("L")) {
        b.layer_hi = s.expect_int("layer index");
      } else {
        throw NotationError("expected 'L<index>' or 'Last' after '-'", col);
      }
    } else {
      b.layer_hi = b.layer_lo;
    }
    s.expect(':', "mapping requires ':' between range and CEs");
    col = s.column();
    if (!s.try_keyword("CE")) throw NotationError("expected 'CE<id>'", col);
    b.ce_lo = s.expect_int("CE id");
    if (b.ce_lo < 1) throw NotationError("CE ids are 1-based", col);
    if (s.try_consume('-')) {
      col = s.column();
      if (!s.try_keyword("CE")) throw NotationError("expected 'CE<id>' after '-'", col);
      b.ce_hi = s.expect_int("CE id");
      if (b.ce_hi <= b.ce_lo)
        throw NotationError("invalid CE range: CE" + std::to_string(b.ce_lo) + "-CE" +
                                std::to_string(b.ce_hi),
                            col);
    } else {
      b.ce_hi = b.ce_lo;
    }
    if (b.layer_lo < 1 || b.layer_lo > cnn.depth() || b.layer_hi > cnn.depth())
      throw NotationError("layer index beyond CNN depth (" + std::to_string(cnn.depth()) + ")",
                          col);
    if (b.layer_hi < b.layer_lo)
      throw NotationError("invalid layer range L" + std::to_string(b.layer_lo) + "-L" +
                              std::to_string(b.layer_hi),
                          col);
    sketch.blocks.push_back(b);
    if (s.try_consume(',')) continue;
    s.expect('}', "sketch must end with '}'");
    break;
  }
  if (!s.at_end()) throw NotationError("trailing characters after '}'", s.column());

  std::sort(sketch.blocks.begin(), sketch.blocks.end(),
            [](const BlockSketch& a, const BlockSketch& b) { return a.layer_lo < b.layer_lo; });
  int expected = 1;
  for (const BlockSketch& b : sketch.blocks) {
    if (b.layer_lo > expected)
      throw NotationError("gap before L" + std::to_string(b.layer_lo), 0);
    if (b.layer_lo < expected) {
      int hi = std::min(b.layer_hi, expected - 1);
      throw NotationError(
          "overlapping ranges L" + std::to_string(b.layer_lo) + "-L" + std::to_string(hi), 0);
    }
    expected = b.layer_hi + 1;
  }
  if (expected != cnn.depth() + 1)
    throw NotationError("sketch ends at L" + std::to_string(expected - 1) + " but the CNN has " +
                            std::to_string(cnn.depth()) + " layers",
                        0);
  std::vector<int> ce_ids;
  for (const BlockSketch& b : sketch.blocks)
    for (int id = b.ce_lo; id <= b.ce_hi; ++id) ce_ids.push_back(id);
  std::sort(ce_ids.begin(), ce_ids.end());
  for (std::size_t i = 1; i < ce_ids.size(); ++i)
    if (ce_ids[i] == ce_ids[i - 1])
      throw NotationError("duplicate CE id CE" + std::to_string(ce_ids[i]), 0);

  sketch.inter_segment_pipelining = sketch.blocks.size() > 1;
  return sketch;
}

std::string format_accelerator(const AcceleratorSketch& sketch) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < sketch.blocks.size(); ++i) {
    const BlockSketch& b = sketch.blocks[i];
    if (i) os << ", ";
    os << 'L' << b.layer_lo;
    if (b.hi_is_last)
      os << "-Last";
    else if (b.layer_hi != b.layer_lo)
      os << "-L" << b.layer_hi;
    os << ": CE" << b.ce_lo;
    if (b.ce_hi != b.ce_lo) os << "-CE" << b.ce_hi;
  }
  os << '}';
  return os.str();
}

}  // namespace mccm

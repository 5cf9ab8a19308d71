#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evislam/common.hpp"

namespace evislam {

// Named contiguous slice of a flat parameter vector.
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ParamLayout {
 public:
  std::size_t add(const std::string& name, std::size_t size) {
    std::size_t idx = segments_.size();
    segments_.push_back({name, total_, size});
    total_ += size;
    return idx;
  }

  const std::vector<ParamSegment>& segments() const { return segments_; }
  std::size_t total_size() const { return total_; }

  const ParamSegment& segment(const std::string& name) const {
    for (const auto& s : segments_)
      if (s.name == name) return s;
    throw ConfigError("unknown parameter segment: " + name);
  }
  bool has(const std::string& name) const {
    for (const auto& s : segments_)
      if (s.name == name) return true;
    return false;
  }

  // Segment containing a flat index, for diagnostics.
  const ParamSegment& segment_of(std::size_t flat_index) const {
    for (const auto& s : segments_)
      if (flat_index >= s.offset && flat_index < s.offset + s.size) return s;
    throw ConfigError("flat index outside layout");
  }

 private:
  std::vector<ParamSegment> segments_;
  std::size_t total_ = 0;
};

class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(const ParamLayout& layout)
      : layout_(layout), has_layout_(true),
        values_(layout.total_size(), 0.0) {}

  const ParamLayout& layout() const {
    if (!has_layout_) throw ConfigError("parameter vector has no layout");
    return layout_;
  }

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<double> segment(const std::string& name) {
    const auto& s = layout().segment(name);
    return {values_.data() + s.offset, s.size};
  }
  std::span<const double> segment(const std::string& name) const {
    const auto& s = layout().segment(name);
    return {values_.data() + s.offset, s.size};
  }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  ParamLayout layout_;  // owned copy: safe past the source model's lifetime
  bool has_layout_ = false;
  std::vector<double> values_;
};

}  // namespace evislam

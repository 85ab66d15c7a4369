#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tilesim/config.hpp"

namespace tilesim {

// Contiguous ranges of a global index space, one per tile in grid order.
class Partition {
 public:
  Partition() = default;
  // Equal split; the first n % tiles tiles take one extra element.
  static Partition block(std::uint64_t n, std::uint32_t tiles);
  // bounds has tiles+1 monotone entries starting at 0.
  static Partition from_bounds(std::vector<std::uint64_t> bounds);

  std::uint32_t tiles() const { return static_cast<std::uint32_t>(bounds_.size() - 1); }
  std::uint64_t size() const { return bounds_.back(); }
  std::uint64_t begin(std::uint32_t t) const { return bounds_[t]; }
  std::uint64_t end(std::uint32_t t) const { return bounds_[t + 1]; }
  std::uint64_t count(std::uint32_t t) const { return bounds_[t + 1] - bounds_[t]; }
  std::uint64_t max_count() const;
  std::uint32_t owner(std::uint64_t index) const;

 private:
  std::vector<std::uint64_t> bounds_{0};
  std::uint64_t q_ = 0, r_ = 0;  // block parameters, used when block_
  bool block_ = false;
};

// Places partitioned arrays into the tiles' address slices. Each array gets
// the same offset in every slice, sized for the largest tile share.
class DataLayout {
 public:
  DataLayout() = default;
  DataLayout(const MachineConfig& m, std::uint64_t queue_reserve_bytes);

  std::uint32_t add(std::string name, Partition part, std::uint32_t elem_bytes);
  std::uint64_t address(std::uint32_t array, std::uint64_t index) const {
    const auto& a = arrays_[array];
    const std::uint32_t t = a.part.owner(index);
    return std::uint64_t{t} * slice_bytes_ + a.offset + (index - a.part.begin(t)) * a.elem_bytes;
  }
  const Partition& partition(std::uint32_t array) const { return arrays_[array].part; }
  std::uint32_t owner(std::uint32_t array, std::uint64_t index) const { return arrays_[array].part.owner(index); }

  // Bytes of one slice used by the arrays.
  std::uint64_t footprint() const { return next_offset_; }
  std::uint64_t capacity() const { return capacity_; }
  // Throws CapacityError naming the smallest tile count that could fit.
  void check_capacity() const;

 private:
  struct Array {
    std::string name;
    Partition part;
    std::uint32_t elem_bytes = 0;
    std::uint64_t offset = 0;
  };
  std::vector<Array> arrays_;
  std::uint64_t slice_bytes_ = 0;
  std::uint64_t capacity_ = 0;
  std::uint64_t next_offset_ = 0;
  std::uint64_t total_bytes_ = 0;
  std::uint32_t align_ = 64;
  std::uint32_t tiles_ = 1;
  bool scratchpad_ = true;
};

}  // namespace tilesim

#include "tilesim/layout.hpp"

#include <algorithm>

#include "tilesim/error.hpp"
#include "tilesim/geometry.hpp"

namespace tilesim {

Partition Partition::block(std::uint64_t n, std::uint32_t tiles) {
  if (tiles == 0) throw Error("partition over zero tiles");
  Partition p;
  p.block_ = true;
  p.q_ = n / tiles;
  p.r_ = n % tiles;
  p.bounds_.resize(std::size_t{tiles} + 1);
  for (std::uint32_t t = 0; t <= tiles; ++t) p.bounds_[t] = t * p.q_ + std::min<std::uint64_t>(t, p.r_);
  return p;
}

Partition Partition::from_bounds(std::vector<std::uint64_t> bounds) {
  if (bounds.size() < 2 || bounds.front() != 0 || !std::is_sorted(bounds.begin(), bounds.end()))
    throw Error("partition bounds must start at 0 and be non-decreasing");
  Partition p;
  p.bounds_ = std::move(bounds);
  return p;
}

std::uint64_t Partition::max_count() const {
  std::uint64_t m = 0;
  for (std::size_t t = 0; t + 1 < bounds_.size(); ++t) m = std::max(m, bounds_[t + 1] - bounds_[t]);
  return m;
}

std::uint32_t Partition::owner(std::uint64_t i) const {
  if (block_) {
    const std::uint64_t big = r_ * (q_ + 1);
    if (i < big) return static_cast<std::uint32_t>(i / (q_ + 1));
    return static_cast<std::uint32_t>(r_ + (i - big) / q_);
  }
  auto it = std::upper_bound(bounds_.begin(), bounds_.end(), i);
  return static_cast<std::uint32_t>(it - bounds_.begin() - 1);
}

DataLayout::DataLayout(const MachineConfig& m, std::uint64_t queue_reserve_bytes)
    : slice_bytes_(address_slice_bytes(m)),
      align_(m.cacheline_bits / 8),
      tiles_(static_cast<std::uint32_t>(global_grid(m).tiles())),
      scratchpad_(!m.cache_mode()) {
  if (scratchpad_) {
    // Queues live in the SPM next to the data.
    capacity_ = slice_bytes_ > queue_reserve_bytes ? slice_bytes_ - queue_reserve_bytes : 0;
  } else {
    capacity_ = slice_bytes_;
  }
}

std::uint32_t DataLayout::add(std::string name, Partition part, std::uint32_t elem_bytes) {
  if (part.tiles() != tiles_) throw Error("array '" + name + "' is partitioned over the wrong number of tiles");
  Array a;
  a.name = std::move(name);
  a.elem_bytes = elem_bytes;
  a.offset = next_offset_;
  const std::uint64_t bytes = part.max_count() * elem_bytes;
  next_offset_ += (bytes + align_ - 1) / align_ * align_;
  total_bytes_ += part.size() * elem_bytes;
  a.part = std::move(part);
  arrays_.push_back(std::move(a));
  return static_cast<std::uint32_t>(arrays_.size() - 1);
}

void DataLayout::check_capacity() const {
  if (next_offset_ <= capacity_) return;
  const std::uint64_t per_tile = capacity_ == 0 ? 1 : capacity_;
  const std::uint64_t min_tiles = (total_bytes_ + per_tile - 1) / per_tile;
  throw CapacityError(std::string("dataset needs ") + std::to_string(next_offset_) + " bytes per tile but only " +
                      std::to_string(capacity_) + " are available" +
                      (scratchpad_ ? " in the SPM" : " in the DRAM slice") + "; at least " +
                      std::to_string(std::max<std::uint64_t>(min_tiles, tiles_ + 1)) +
                      " tiles (or a larger memory) are required");
}

}  // namespace tilesim

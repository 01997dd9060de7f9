/*
 *   Copyright 2026 The fcm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * Maps: how a global array of up to four dimensions is split over ranks.
 *
 * A map holds a processor grid (g_1..g_d), one distribution per dimension, a
 * processor list with one rank per grid cell, and the order in which the
 * list fills the grid. Along a dimension of length n split over g grid
 * coordinates, index i belongs to coordinate
 *
 *   block            j with floor(j*n/g) <= i < floor((j+1)*n/g)
 *   cyclic           i mod g
 *   block-cyclic(b)  floor(i/b) mod g
 *
 * and the owning rank is the list entry at the combined grid coordinate.
 */

#pragma once

#include <fcm/block_partition.hpp>
#include <fcm/error.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fcm::pgas {

enum class DistKind { block, cyclic, block_cyclic };
enum class GridOrder { row_major, column_major };

struct DimDist {
  DistKind kind = DistKind::block;
  std::size_t block_size = 1;  // block-cyclic only
  std::size_t overlap = 0;     // block only

  static DimDist block(std::size_t overlap = 0) { return {DistKind::block, 1, overlap}; }
  static DimDist cyclic() { return {DistKind::cyclic, 1, 0}; }
  static DimDist block_cyclic(std::size_t b) { return {DistKind::block_cyclic, b, 0}; }

  friend bool operator==(const DimDist&, const DimDist&) = default;
};

/// Half-open global index range.
struct Range {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const noexcept { return hi - lo; }
  bool empty() const noexcept { return hi <= lo; }
  bool contains(std::size_t i) const noexcept { return lo <= i && i < hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Sorted, disjoint, non-adjacent ranges along one dimension.
using RangeList = std::vector<Range>;
/// One RangeList per dimension; the described set is their Cartesian product.
using Extent = std::vector<RangeList>;

inline std::size_t count(const RangeList& ranges) noexcept {
  std::size_t n = 0;
  for (const auto& r : ranges) n += r.size();
  return n;
}

inline std::size_t count(const Extent& extent) noexcept {
  if (extent.empty()) return 0;
  std::size_t n = 1;
  for (const auto& d : extent) n *= count(d);
  return n;
}

inline RangeList intersect(const RangeList& a, const RangeList& b) {
  RangeList out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Range r{std::max(a[i].lo, b[j].lo), std::min(a[i].hi, b[j].hi)};
    if (!r.empty()) out.push_back(r);
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

/// Empty optional when the intersection is empty in any dimension.
inline std::optional<Extent> intersect(const Extent& a, const Extent& b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "extents of different rank");
  Extent out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = intersect(a[k], b[k]);
    if (out[k].empty()) return std::nullopt;
  }
  return out;
}

struct DistMap {
  std::vector<std::size_t> grid;
  std::vector<DimDist> dists;
  std::vector<int> plist;
  GridOrder order = GridOrder::row_major;

  std::size_t ndim() const noexcept { return grid.size(); }

  std::optional<std::size_t> position_of(int rank) const {
    const auto it = std::find(plist.begin(), plist.end(), rank);
    if (it == plist.end()) return std::nullopt;
    return static_cast<std::size_t>(it - plist.begin());
  }

  bool contains(int rank) const { return position_of(rank).has_value(); }

  /// Ascending copy of the processor list.
  std::vector<int> ranks() const {
    auto out = plist;
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Aggregation target: the smallest rank in the list.
  int leader() const { return *std::min_element(plist.begin(), plist.end()); }

  bool has_overlap() const {
    return std::any_of(dists.begin(), dists.end(), [](const DimDist& d) { return d.overlap > 0; });
  }

  friend bool operator==(const DistMap&, const DistMap&) = default;
};

/// Validates and normalizes a map. Empty `dists` means block everywhere.
inline DistMap make_map(std::vector<std::size_t> grid, std::vector<DimDist> dists, std::vector<int> plist,
                        GridOrder order = GridOrder::row_major) {
  if (grid.empty()) throw Error(Errc::dimension_mismatch, "map needs at least one dimension");
  if (grid.size() > 4) throw Error(Errc::too_many_dims, "maps support at most 4 dimensions");
  if (dists.empty()) dists.assign(grid.size(), DimDist::block());
  if (dists.size() != grid.size()) {
    throw Error(Errc::dimension_mismatch, "grid has " + std::to_string(grid.size()) + " dimensions but " +
                                              std::to_string(dists.size()) + " distributions were given");
  }
  std::size_t cells = 1;
  for (auto g : grid) {
    if (g == 0) throw Error(Errc::invalid_argument, "grid extents must be positive");
    cells *= g;
  }
  if (plist.size() != cells) {
    throw Error(Errc::size_mismatch, "grid has " + std::to_string(cells) + " cells but the processor list has " +
                                         std::to_string(plist.size()) + " entries");
  }
  auto sorted = plist;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::duplicate_rank, "processor list repeats a rank");
  }
  if (sorted.front() < 0) throw Error(Errc::invalid_argument, "negative rank in processor list");
  for (const auto& d : dists) {
    if (d.kind != DistKind::block && d.overlap != 0) {
      throw Error(Errc::invalid_argument, "overlap is only defined for block dimensions");
    }
    if (d.kind == DistKind::block_cyclic && d.block_size == 0) {
      throw Error(Errc::invalid_argument, "block-cyclic block size must be positive");
    }
  }
  return DistMap{std::move(grid), std::move(dists), std::move(plist), order};
}

/// Grid coordinates of processor-list entry `position`. Row-major lets the
/// last dimension vary fastest; column-major the first.
inline std::vector<std::size_t> grid_coord(const DistMap& map, std::size_t position) {
  if (position >= map.plist.size()) {
    throw Error(Errc::out_of_range, "position " + std::to_string(position) + " beyond processor list");
  }
  const std::size_t d = map.ndim();
  std::vector<std::size_t> coord(d);
  for (std::size_t step = 0; step < d; ++step) {
    const std::size_t k = map.order == GridOrder::row_major ? d - 1 - step : step;
    coord[k] = position % map.grid[k];
    position /= map.grid[k];
  }
  return coord;
}

inline std::size_t grid_position(const DistMap& map, std::span<const std::size_t> coord) {
  const std::size_t d = map.ndim();
  std::size_t position = 0;
  for (std::size_t step = 0; step < d; ++step) {
    const std::size_t k = map.order == GridOrder::row_major ? step : d - 1 - step;
    position = position * map.grid[k] + coord[k];
  }
  return position;
}

/// Grid coordinate owning index `i` of a dimension of length `n` over `g`.
inline std::size_t coordinate_of(const DimDist& dist, std::size_t n, std::size_t g, std::size_t i) {
  switch (dist.kind) {
    case DistKind::block: return block_part_of(i, n, g);
    case DistKind::cyclic: return i % g;
    case DistKind::block_cyclic: return (i / dist.block_size) % g;
  }
  return 0;
}

/// Maximal ranges owned by grid coordinate `c` along one dimension.
inline RangeList owned_ranges(const DimDist& dist, std::size_t n, std::size_t g, std::size_t c) {
  RangeList out;
  auto append = [&out](Range r) {
    if (r.empty()) return;
    if (!out.empty() && out.back().hi == r.lo) {
      out.back().hi = r.hi;
    } else {
      out.push_back(r);
    }
  };
  if (dist.kind == DistKind::block) {
    append({block_cut(c, n, g), block_cut(c + 1, n, g)});
    return out;
  }
  const std::size_t b = dist.kind == DistKind::cyclic ? 1 : dist.block_size;
  for (std::size_t start = c * b; start < n; start += g * b) append({start, std::min(start + b, n)});
  return out;
}

namespace detail {

inline void check_dims(const DistMap& map, std::span<const std::size_t> dims) {
  if (dims.size() != map.ndim()) {
    throw Error(Errc::dimension_mismatch, "array has " + std::to_string(dims.size()) + " dimensions, map has " +
                                              std::to_string(map.ndim()));
  }
}

}  // namespace detail

inline int owner_of(const DistMap& map, std::span<const std::size_t> dims, std::span<const std::size_t> index) {
  detail::check_dims(map, dims);
  if (index.size() != dims.size()) throw Error(Errc::dimension_mismatch, "index rank differs from array rank");
  std::vector<std::size_t> coord(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (index[k] >= dims[k]) {
      throw Error(Errc::out_of_range, "index " + std::to_string(index[k]) + " outside dimension of length " +
                                          std::to_string(dims[k]));
    }
    coord[k] = coordinate_of(map.dists[k], dims[k], map.grid[k], index[k]);
  }
  return map.plist[grid_position(map, coord)];
}

inline Extent owned_extent(const DistMap& map, std::span<const std::size_t> dims, int rank) {
  detail::check_dims(map, dims);
  const auto pos = map.position_of(rank);
  if (!pos) throw Error(Errc::rank_not_in_map, "rank " + std::to_string(rank) + " is not in the processor list");
  const auto coord = grid_coord(map, *pos);
  Extent out(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) out[k] = owned_ranges(map.dists[k], dims[k], map.grid[k], coord[k]);
  return out;
}

/// `[0,2) x [0,3),[6,9)`: dimensions joined by " x ", ranges by ",".
/// An empty dimension prints as `{}`.
inline std::string format_extent(const Extent& extent) {
  std::string out;
  for (std::size_t k = 0; k < extent.size(); ++k) {
    if (k) out += " x ";
    if (extent[k].empty()) out += "{}";
    for (std::size_t r = 0; r < extent[k].size(); ++r) {
      if (r) out += ",";
      out += "[" + std::to_string(extent[k][r].lo) + "," + std::to_string(extent[k][r].hi) + ")";
    }
  }
  return out;
}

/// One line per processor-list entry: `rank 3: [2,5) x [0,10)`.
inline std::string dump_extents(const DistMap& map, std::span<const std::size_t> dims) {
  std::string out;
  for (int r : map.plist) out += "rank " + std::to_string(r) + ": " + format_extent(owned_extent(map, dims, r)) + "\n";
  return out;
}

}  // namespace fcm::pgas

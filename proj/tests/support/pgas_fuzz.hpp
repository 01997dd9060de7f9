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

// Random maps and brute-force oracles for the distributed-array tests.
// The oracles only use owner_of and the seeded generator, never the
// extent/intersection code they check.

#pragma once

#include <fcm/pgas/dist_array.hpp>
#include <fcm/pgas/dist_map.hpp>
#include <fcm/pgas/ops.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fcm::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct MapOptions {
  std::size_t max_grid = 4;      // per dimension
  std::size_t max_ranks = 8;     // product of the grid
  int world = 8;                 // plist is drawn from [0, world)
  std::size_t max_overlap = 2;
  std::size_t max_block = 3;     // block-cyclic block size
};

inline pgas::DimDist random_dist(Rng& rng, const MapOptions& opt) {
  switch (pick(rng, 0, 2)) {
    case 0: return pgas::DimDist::block(pick(rng, 0, opt.max_overlap));
    case 1: return pgas::DimDist::cyclic();
    default: return pgas::DimDist::block_cyclic(pick(rng, 1, opt.max_block));
  }
}

inline pgas::DistMap random_map(Rng& rng, std::size_t ndim, const MapOptions& opt = {}) {
  std::vector<std::size_t> grid(ndim, 1);
  const auto steps = pick(rng, 0, 3 * ndim);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto k = pick(rng, 0, ndim - 1);
    const auto cells = std::accumulate(grid.begin(), grid.end(), std::size_t{1}, std::multiplies<>());
    if (grid[k] < opt.max_grid && cells / grid[k] * (grid[k] + 1) <= opt.max_ranks) ++grid[k];
  }
  std::vector<pgas::DimDist> dists;
  for (std::size_t k = 0; k < ndim; ++k) dists.push_back(random_dist(rng, opt));
  std::vector<int> ranks(static_cast<std::size_t>(opt.world));
  std::iota(ranks.begin(), ranks.end(), 0);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  const auto cells = std::accumulate(grid.begin(), grid.end(), std::size_t{1}, std::multiplies<>());
  ranks.resize(cells);
  const auto order = pick(rng, 0, 1) ? pgas::GridOrder::column_major : pgas::GridOrder::row_major;
  return pgas::make_map(std::move(grid), std::move(dists), std::move(ranks), order);
}

inline std::vector<std::size_t> random_dims(Rng& rng, std::size_t ndim, std::size_t max_extent) {
  std::vector<std::size_t> dims(ndim);
  for (auto& d : dims) d = pick(rng, 1, max_extent);
  return dims;
}

inline std::string describe(const pgas::DistMap& map, const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << "dims [";
  for (std::size_t k = 0; k < dims.size(); ++k) os << (k ? "," : "") << dims[k];
  os << "] grid [";
  for (std::size_t k = 0; k < map.grid.size(); ++k) os << (k ? "," : "") << map.grid[k];
  os << "] dists [";
  for (std::size_t k = 0; k < map.dists.size(); ++k) {
    const auto& d = map.dists[k];
    os << (k ? "," : "");
    if (d.kind == pgas::DistKind::block) os << "block/ov" << d.overlap;
    if (d.kind == pgas::DistKind::cyclic) os << "cyclic";
    if (d.kind == pgas::DistKind::block_cyclic) os << "bc" << d.block_size;
  }
  os << "] plist [";
  for (std::size_t i = 0; i < map.plist.size(); ++i) os << (i ? "," : "") << map.plist[i];
  os << "] " << (map.order == pgas::GridOrder::row_major ? "row" : "col");
  return os.str();
}

/// Every global index of `dims`, row-major.
template <class F>
void for_each_global(const std::vector<std::size_t>& dims, F&& f) {
  const auto total = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rest = lin;
    for (std::size_t k = dims.size(); k-- > 0;) {
      idx[k] = rest % dims[k];
      rest /= dims[k];
    }
    f(std::span<const std::size_t>(idx), lin);
  }
}

inline bool in_extent(const pgas::Extent& e, std::span<const std::size_t> idx) {
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (std::none_of(e[k].begin(), e[k].end(), [&](const pgas::Range& r) { return r.contains(idx[k]); })) return false;
  }
  return true;
}

/// Empty when the owned extents partition the index set and agree with
/// owner_of; otherwise a description of the first violation.
inline std::string check_partition(const pgas::DistMap& map, const std::vector<std::size_t>& dims) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::size_t covered = 0;
  std::vector<pgas::Extent> extents;
  for (int r : map.plist) {
    auto e = pgas::owned_extent(map, dims, r);
    for (std::size_t k = 0; k < e.size(); ++k) {
      for (std::size_t i = 0; i < e[k].size(); ++i) {
        const auto& rg = e[k][i];
        if (rg.empty() || rg.hi > dims[k]) return "bad range in rank " + std::to_string(r);
        if (i > 0 && e[k][i - 1].hi >= rg.lo) return "ranges not maximal/sorted in rank " + std::to_string(r);
      }
    }
    covered += pgas::count(e);
    extents.push_back(std::move(e));
  }
  if (covered != total) return "extent sizes sum to " + std::to_string(covered) + ", expected " + std::to_string(total);
  std::string err;
  for_each_global(dims, [&](std::span<const std::size_t> idx, std::size_t lin) {
    if (!err.empty()) return;
    const int owner = pgas::owner_of(map, dims, idx);
    const auto pos = map.position_of(owner);
    if (!pos || !in_extent(extents[*pos], idx)) err = "index " + std::to_string(lin) + " not in its owner's extent";
  });
  // Sizes sum to the total and every index lies in its owner's extent, so the
  // extents are disjoint and owner_of(i) = r exactly when i is in extent(r).
  return err;
}

/// Serial reference for a seeded array.
template <Element T>
pgas::DenseArray<T> reference(const std::vector<std::size_t>& dims, const pgas::Fill& fill) {
  pgas::DenseArray<T> out(dims);
  for_each_global(dims, [&](std::span<const std::size_t>, std::size_t lin) { out.data[lin] = pgas::fill_value<T>(fill, lin); });
  return out;
}

/// Scatter-by-owner check: every owned cell is owned per owner_of, every
/// stored cell (halo included) holds the reference value, and the owned
/// count matches owner_of's count for this rank.
template <Element T>
std::string check_local(const pgas::DistArray<T>& a, const pgas::DenseArray<T>& ref) {
  if (!a.participates()) return a.local().empty() ? "" : "non-participant holds data";
  std::size_t expect_owned = 0;
  std::string err;
  for_each_global(a.dims(), [&](std::span<const std::size_t> idx, std::size_t lin) {
    if (!err.empty()) return;
    const bool mine = pgas::owner_of(a.map(), a.dims(), idx) == a.rank();
    if (mine) ++expect_owned;
    if (mine != a.owns(idx)) err = "ownership disagrees at " + std::to_string(lin);
    if (!err.empty() || !a.stores(idx)) return;
    if (!(a.at(idx) == ref.data[lin])) err = "wrong value at " + std::to_string(lin);
  });
  if (err.empty() && expect_owned != pgas::count(a.owned_extent())) err = "owned count mismatch";
  return err;
}

}  // namespace fcm::testing

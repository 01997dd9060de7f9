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

#pragma once

#include <fcm/error.hpp>
#include <fcm/payload.hpp>
#include <fcm/pgas/dist_map.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <type_traits>
#include <vector>

namespace fcm::pgas {

/// Ordinary row-major array, what constructors return without a map.
template <Element T>
struct DenseArray {
  std::vector<std::size_t> dims;
  std::vector<T> data;

  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape, T fill = T{}) : dims(std::move(shape)) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    data.assign(n, fill);
  }

  std::size_t linear(std::span<const std::size_t> index) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) off = off * dims[k] + index[k];
    return off;
  }

  T& at(std::span<const std::size_t> index) { return data[linear(index)]; }
  const T& at(std::span<const std::size_t> index) const { return data[linear(index)]; }

  friend bool operator==(const DenseArray&, const DenseArray&) = default;
};

/// Per-dimension storage of one rank: the owned indices plus, on block
/// dimensions with overlap, halo cells on either side clamped to the array.
/// Storage positions are the stored global indices packed in order.
struct DimLayout {
  RangeList owned;
  RangeList storage;
  std::vector<std::size_t> prefix;  // storage position of each storage range's lo

  std::size_t size() const noexcept { return count(storage); }

  /// Storage position of a stored global index.
  std::size_t position(std::size_t global) const {
    auto it = std::upper_bound(storage.begin(), storage.end(), global,
                               [](std::size_t g, const Range& r) { return g < r.lo; });
    if (it == storage.begin() || !std::prev(it)->contains(global)) {
      throw Error(Errc::out_of_range, "global index " + std::to_string(global) + " is not stored locally");
    }
    --it;
    return prefix[static_cast<std::size_t>(it - storage.begin())] + (global - it->lo);
  }

  bool stores(std::size_t global) const {
    return std::any_of(storage.begin(), storage.end(), [global](const Range& r) { return r.contains(global); });
  }
};

struct LocalLayout {
  std::vector<DimLayout> dims;
  std::vector<std::size_t> shape;
  std::vector<std::size_t> strides;

  std::size_t element_count() const noexcept {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }

  Extent owned() const {
    Extent out;
    for (const auto& d : dims) out.push_back(d.owned);
    return out;
  }

  Extent storage() const {
    Extent out;
    for (const auto& d : dims) out.push_back(d.storage);
    return out;
  }

  std::size_t offset(std::span<const std::size_t> global) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) off += dims[k].position(global[k]) * strides[k];
    return off;
  }
};

namespace detail {

inline void finish_layout(LocalLayout& layout) {
  const std::size_t d = layout.dims.size();
  layout.shape.assign(d, 0);
  layout.strides.assign(d, 1);
  for (std::size_t k = 0; k < d; ++k) {
    auto& dim = layout.dims[k];
    dim.prefix.clear();
    std::size_t pos = 0;
    for (const auto& r : dim.storage) {
      dim.prefix.push_back(pos);
      pos += r.size();
    }
    layout.shape[k] = pos;
  }
  for (std::size_t k = d; k-- > 1;) layout.strides[k - 1] = layout.strides[k] * layout.shape[k];
}

}  // namespace detail

/// Storage layout for `rank`; empty in every dimension if the rank is not in
/// the map.
inline LocalLayout make_layout(const DistMap& map, std::span<const std::size_t> dims, int rank) {
  detail::check_dims(map, dims);
  LocalLayout layout;
  layout.dims.resize(dims.size());
  if (map.contains(rank)) {
    const auto owned = owned_extent(map, dims, rank);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      auto& dim = layout.dims[k];
      dim.owned = owned[k];
      dim.storage = owned[k];
      const auto ov = map.dists[k].overlap;
      if (map.dists[k].kind == DistKind::block && ov > 0 && !dim.owned.empty()) {
        const Range r = dim.owned.front();
        dim.storage = {Range{r.lo >= ov ? r.lo - ov : 0, std::min(r.hi + ov, dims[k])}};
      }
    }
  }
  detail::finish_layout(layout);
  return layout;
}

/// Offsets of every element of `region` in row-major order of global index,
/// given a per-dimension position function and strides.
template <class Position>
std::vector<std::size_t> region_offsets(const Extent& region, std::span<const std::size_t> strides,
                                        Position&& position) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t k = 0; k < region.size(); ++k) {
    std::vector<std::size_t> along;
    for (const auto& r : region[k]) {
      for (auto g = r.lo; g < r.hi; ++g) along.push_back(position(k, g) * strides[k]);
    }
    std::vector<std::size_t> next;
    next.reserve(offsets.size() * along.size());
    for (auto base : offsets) {
      for (auto a : along) next.push_back(base + a);
    }
    offsets = std::move(next);
  }
  if (region.empty()) offsets.clear();
  return offsets;
}

/// Visits every global index of `region` in row-major order.
template <class F>
void for_each_index(const Extent& region, F&& f) {
  const std::size_t d = region.size();
  if (d == 0 || count(region) == 0) return;
  std::vector<std::size_t> range_at(d, 0);
  std::vector<std::size_t> index(d);
  for (std::size_t k = 0; k < d; ++k) index[k] = region[k].front().lo;
  while (true) {
    f(std::span<const std::size_t>(index));
    std::size_t k = d;
    while (k-- > 0) {
      if (++index[k] < region[k][range_at[k]].hi) break;
      if (++range_at[k] < region[k].size()) {
        index[k] = region[k][range_at[k]].lo;
        break;
      }
      range_at[k] = 0;
      index[k] = region[k].front().lo;
      if (k == 0) return;
    }
  }
}

/// Row-major linear index of a global index; keys the seeded generator.
inline std::uint64_t global_linear(std::span<const std::size_t> dims, std::span<const std::size_t> index) {
  std::uint64_t off = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) off = off * dims[k] + index[k];
  return off;
}

/// This rank's piece of a global array under a map. Ranks outside the map's
/// processor list hold an empty, non-participating instance.
template <Element T>
class DistArray {
 public:
  using value_type = T;

  DistArray(std::vector<std::size_t> dims, DistMap map, int rank)
      : dims_(std::move(dims)), map_(std::move(map)), rank_(rank), layout_(make_layout(map_, dims_, rank_)) {
    if (participates()) local_.assign(layout_.element_count(), T{});
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const DistMap& map() const noexcept { return map_; }
  int rank() const noexcept { return rank_; }
  bool participates() const { return map_.contains(rank_); }
  const LocalLayout& layout() const noexcept { return layout_; }

  /// Storage shape including halo cells.
  const std::vector<std::size_t>& local_shape() const noexcept { return layout_.shape; }
  std::span<T> local() noexcept { return local_; }
  std::span<const T> local() const noexcept { return local_; }

  Extent owned_extent() const { return layout_.owned(); }
  Extent storage_extent() const { return layout_.storage(); }

  bool stores(std::span<const std::size_t> global) const {
    if (!participates()) return false;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (!layout_.dims[k].stores(global[k])) return false;
    }
    return true;
  }

  bool owns(std::span<const std::size_t> global) const {
    if (!participates()) return false;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const auto& o = layout_.dims[k].owned;
      if (std::none_of(o.begin(), o.end(), [&](const Range& r) { return r.contains(global[k]); })) return false;
    }
    return true;
  }

  T& at(std::span<const std::size_t> global) { return local_[layout_.offset(global)]; }
  const T& at(std::span<const std::size_t> global) const { return local_[layout_.offset(global)]; }
  T& at(std::initializer_list<std::size_t> global) { return at(std::span<const std::size_t>(global.begin(), global.size())); }
  const T& at(std::initializer_list<std::size_t> global) const {
    return at(std::span<const std::size_t>(global.begin(), global.size()));
  }

  std::vector<std::size_t> offsets(const Extent& region) const {
    return region_offsets(region, layout_.strides,
                          [this](std::size_t k, std::size_t g) { return layout_.dims[k].position(g); });
  }

  /// Stored values of `region` (must lie in storage), row-major by global index.
  std::vector<T> pack(const Extent& region) const {
    const auto offs = offsets(region);
    std::vector<T> out(offs.size());
    for (std::size_t i = 0; i < offs.size(); ++i) out[i] = local_[offs[i]];
    return out;
  }

  void unpack(const Extent& region, std::span<const T> values) {
    const auto offs = offsets(region);
    if (offs.size() != values.size()) {
      throw Error(Errc::corrupt_payload, "expected " + std::to_string(offs.size()) + " values, got " +
                                             std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < offs.size(); ++i) local_[offs[i]] = values[i];
  }

 private:
  std::vector<std::size_t> dims_;
  DistMap map_;
  int rank_;
  LocalLayout layout_;
  std::vector<T> local_;
};

enum class FillKind { zero, one, seeded_random };

struct Fill {
  FillKind kind = FillKind::zero;
  std::uint64_t seed = 0;

  static Fill zero() { return {FillKind::zero, 0}; }
  static Fill one() { return {FillKind::one, 0}; }
  static Fill random(std::uint64_t seed) { return {FillKind::seeded_random, seed}; }
};

/// Value of the seeded generator at a global linear index: a splitmix64
/// finalizer over (seed, index), so any partition of the array reproduces it.
template <Element T>
T seeded_value(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ull + index + 0x632be59bd9b4e019ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  if constexpr (std::is_same_v<T, double>) {
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    return static_cast<std::int64_t>(z >> 1);
  } else {
    return static_cast<std::uint8_t>(z >> 56);
  }
}

template <Element T>
T fill_value(const Fill& fill, std::uint64_t index) {
  switch (fill.kind) {
    case FillKind::zero: return T{0};
    case FillKind::one: return T{1};
    case FillKind::seeded_random: return seeded_value<T>(fill.seed, index);
  }
  return T{0};
}

/// Without a map: an ordinary dense array.
template <Element T>
DenseArray<T> dist_constant(std::vector<std::size_t> dims, const Fill& fill) {
  if (dims.size() > 4) throw Error(Errc::too_many_dims, "arrays support at most 4 dimensions");
  DenseArray<T> out(std::move(dims));
  if (fill.kind == FillKind::seeded_random) {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fill_value<T>(fill, i);
  } else {
    std::fill(out.data.begin(), out.data.end(), fill_value<T>(fill, 0));
  }
  return out;
}

/// With a map: this rank's block, halo cells included, filled from the same
/// global-index-keyed values the dense constructor uses.
template <Element T>
DistArray<T> dist_constant(std::vector<std::size_t> dims, const Fill& fill, const DistMap& map, int rank) {
  DistArray<T> out(std::move(dims), map, rank);
  if (!out.participates()) return out;
  const auto offs = out.offsets(out.storage_extent());
  auto local = out.local();
  std::size_t i = 0;
  for_each_index(out.storage_extent(), [&](std::span<const std::size_t> g) {
    local[offs[i++]] = fill_value<T>(fill, global_linear(out.dims(), g));
  });
  return out;
}

template <Element T>
DenseArray<T> zeros(std::vector<std::size_t> dims) { return dist_constant<T>(std::move(dims), Fill::zero()); }
template <Element T>
DistArray<T> zeros(std::vector<std::size_t> dims, const DistMap& map, int rank) {
  return dist_constant<T>(std::move(dims), Fill::zero(), map, rank);
}
template <Element T>
DenseArray<T> ones(std::vector<std::size_t> dims) { return dist_constant<T>(std::move(dims), Fill::one()); }
template <Element T>
DistArray<T> ones(std::vector<std::size_t> dims, const DistMap& map, int rank) {
  return dist_constant<T>(std::move(dims), Fill::one(), map, rank);
}
template <Element T>
DenseArray<T> rand(std::vector<std::size_t> dims, std::uint64_t seed) {
  return dist_constant<T>(std::move(dims), Fill::random(seed));
}
template <Element T>
DistArray<T> rand(std::vector<std::size_t> dims, const DistMap& map, int rank, std::uint64_t seed) {
  return dist_constant<T>(std::move(dims), Fill::random(seed), map, rank);
}

template <Element T>
struct LocalPart {
  std::vector<std::size_t> shape;
  std::vector<T> data;  // owned values only, row-major
  Extent extent;
};

/// Copy of the owned values (halo excluded) with their global extent.
template <Element T>
LocalPart<T> local_part(const DistArray<T>& a) {
  LocalPart<T> part;
  part.extent = a.owned_extent();
  for (const auto& d : part.extent) part.shape.push_back(count(d));
  if (a.participates()) part.data = a.pack(part.extent);
  return part;
}

}  // namespace fcm::pgas

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
 * Collective operations on distributed arrays.
 *
 * Data movement is planned from ownership alone: every participant computes
 * the same (sender, receiver, region) list, where a region is the Cartesian
 * product of per-dimension range intersections. A sender packs its region in
 * row-major global order and the receiver unpacks it in the same order, so
 * messages carry only values. A (sender, receiver) pair exchanges at most one
 * message per operation. Ranks outside the group skip the call.
 */

#pragma once

#include <fcm/collectives.hpp>
#include <fcm/comm.hpp>
#include <fcm/error.hpp>
#include <fcm/payload.hpp>
#include <fcm/pgas/dist_array.hpp>
#include <fcm/pgas/dist_map.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace fcm::pgas {

namespace detail {

inline std::vector<int> union_ranks(const DistMap& a, const DistMap& b) {
  std::vector<int> out = a.ranks();
  const auto more = b.ranks();
  out.insert(out.end(), more.begin(), more.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <Element T>
void send_values(Comm& comm, int dest, const std::vector<T>& values) {
  comm.send_reserved(dest, encode_payload(Payload::array<T>(values)));
}

template <Element T>
std::vector<T> recv_values(Comm& comm, int source, std::size_t expected) {
  auto values = decode_payload(comm.recv_reserved(source)).template as_vector<T>();
  if (values.size() != expected) {
    throw Error(Errc::corrupt_payload, "expected " + std::to_string(expected) + " values from rank " +
                                           std::to_string(source) + ", got " + std::to_string(values.size()));
  }
  return values;
}

}  // namespace detail

/// Refreshes every halo cell from the rank that owns it. No-op without
/// overlap.
template <Element T>
void halo_sync(Comm& comm, DistArray<T>& a) {
  const auto& map = a.map();
  if (!a.participates() || !map.has_overlap()) return;
  const auto group = map.ranks();
  const int me = comm.rank();

  std::vector<std::pair<int, Extent>> incoming;
  for (int peer : group) {
    if (peer == me) continue;
    // What I own inside the peer's halo.
    const auto peer_storage = make_layout(map, a.dims(), peer).storage();
    if (auto region = intersect(a.owned_extent(), peer_storage)) {
      detail::send_values(comm, peer, a.pack(*region));
    }
    // What the peer owns inside my halo.
    if (auto region = intersect(owned_extent(map, a.dims(), peer), a.storage_extent())) {
      incoming.emplace_back(peer, std::move(*region));
    }
  }
  for (const auto& [peer, region] : incoming) {
    a.unpack(region, detail::recv_values<T>(comm, peer, count(region)));
  }
}

/// Moves the array onto `target`. Collective over the union of both maps'
/// processor lists; owned data is exchanged first, then halos are refreshed.
template <Element T>
DistArray<T> redistribute(Comm& comm, const DistArray<T>& a, const DistMap& target) {
  detail::check_dims(target, a.dims());
  const int me = comm.rank();
  if (target == a.map()) return a;

  DistArray<T> out(a.dims(), target, me);
  const auto group = detail::union_ranks(a.map(), target);
  if (!std::binary_search(group.begin(), group.end(), me)) return out;

  if (a.participates()) {
    const auto mine = a.owned_extent();
    for (int r : target.ranks()) {
      auto region = intersect(mine, owned_extent(target, a.dims(), r));
      if (!region) continue;
      if (r == me) {
        out.unpack(*region, a.pack(*region));
      } else {
        detail::send_values(comm, r, a.pack(*region));
      }
    }
  }
  if (out.participates()) {
    const auto wanted = out.owned_extent();
    for (int s : a.map().ranks()) {
      if (s == me) continue;
      if (auto region = intersect(owned_extent(a.map(), a.dims(), s), wanted)) {
        out.unpack(*region, detail::recv_values<T>(comm, s, count(*region)));
      }
    }
  }
  halo_sync(comm, out);
  return out;
}

/// Assembles the whole array on the map's leader (smallest listed rank).
/// Every other rank gets nothing back; ranks outside the map skip the call.
template <Element T>
std::optional<DenseArray<T>> agg(Comm& comm, const DistArray<T>& a) {
  if (!a.participates()) return std::nullopt;
  const auto& map = a.map();
  const auto group = map.ranks();
  const auto part = local_part(a);
  auto gathered = gather_tree(comm, group, Payload::array<T>(part.data));
  if (!gathered) return std::nullopt;

  DenseArray<T> out(a.dims());
  std::vector<std::size_t> strides(a.dims().size(), 1);
  for (std::size_t k = strides.size(); k-- > 1;) strides[k - 1] = strides[k] * a.dims()[k];
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto extent = owned_extent(map, a.dims(), group[i]);
    const auto values = (*gathered)[i].template as_vector<T>();
    const auto offs = region_offsets(extent, strides, [](std::size_t, std::size_t g) { return g; });
    if (offs.size() != values.size()) {
      throw Error(Errc::corrupt_payload, "rank " + std::to_string(group[i]) + " contributed " +
                                             std::to_string(values.size()) + " values, expected " +
                                             std::to_string(offs.size()));
    }
    for (std::size_t j = 0; j < offs.size(); ++j) out.data[offs[j]] = values[j];
  }
  return out;
}

}  // namespace fcm::pgas

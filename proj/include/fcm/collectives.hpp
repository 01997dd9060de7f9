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
 * Broadcast, gather and barrier.
 *
 * Three broadcast variants are kept side by side so they can be benchmarked
 * against each other:
 *
 *   serial       root sends to every other rank, in rank order
 *   node-serial  root's node leader sends to each other node leader in turn,
 *                then every leader sends to its node members in turn
 *   tree         same two levels, each run as a binomial tree
 *
 * When the root is not its node's leader it first hands the value to that
 * leader. Gather is the two-level binomial tree run in reverse, merging
 * rank-tagged contributions at every hop.
 *
 * All calls are collective: every participant must make the same calls in
 * the same order. A directed pair of ranks exchanges at most one message per
 * call, so reserved per-pair sequence numbers keep calls apart.
 */

#pragma once

#include <fcm/comm.hpp>
#include <fcm/error.hpp>
#include <fcm/payload.hpp>
#include <fcm/topology.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace fcm {

struct TreeSchedule {
  // Position in this list is the tree index; index 0 is the root.
  std::vector<int> participants;
  // rounds[t] holds (sender index, receiver index) pairs.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
};

/// Binomial broadcast schedule: in round t, index i < 2^t sends to i + 2^t.
inline TreeSchedule binomial_schedule(std::vector<int> participants) {
  if (participants.empty()) throw Error(Errc::empty_group, "schedule needs at least one participant");
  TreeSchedule s;
  const std::size_t n = participants.size();
  s.participants = std::move(participants);
  for (std::size_t span = 1; span < n; span *= 2) {
    auto& round = s.rounds.emplace_back();
    for (std::size_t i = 0; i < span && i + span < n; ++i) round.emplace_back(i, i + span);
  }
  return s;
}

inline TreeSchedule binomial_schedule(std::size_t count) {
  std::vector<int> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = static_cast<int>(i);
  return binomial_schedule(std::move(ids));
}

enum class BcastVariant { serial, node_serial, tree };

inline std::string_view to_string(BcastVariant v) noexcept {
  switch (v) {
    case BcastVariant::serial: return "serial";
    case BcastVariant::node_serial: return "node-serial";
    case BcastVariant::tree: return "tree";
  }
  return "tree";
}

inline BcastVariant parse_bcast_variant(std::string_view text) {
  if (text == "serial") return BcastVariant::serial;
  if (text == "node-serial") return BcastVariant::node_serial;
  if (text == "tree") return BcastVariant::tree;
  throw Error(Errc::invalid_argument, "unknown broadcast variant '" + std::string(text) + "'");
}

namespace detail {

inline std::optional<std::size_t> index_in(std::span<const int> list, int rank) {
  const auto it = std::find(list.begin(), list.end(), rank);
  if (it == list.end()) return std::nullopt;
  return static_cast<std::size_t>(it - list.begin());
}

// participants[0] holds `frame`; afterwards every participant does.
inline void tree_fanout(Comm& comm, std::span<const int> participants, Bytes& frame) {
  const auto me = index_in(participants, comm.rank());
  if (!me || participants.size() < 2) return;
  const auto schedule = binomial_schedule(std::vector<int>(participants.begin(), participants.end()));
  for (const auto& round : schedule.rounds) {
    for (const auto& [from, to] : round) {
      if (from == *me) comm.send_reserved(participants[to], frame);
      if (to == *me) frame = comm.recv_reserved(participants[from]);
    }
  }
}

inline void serial_fanout(Comm& comm, std::span<const int> participants, Bytes& frame) {
  const auto me = index_in(participants, comm.rank());
  if (!me || participants.size() < 2) return;
  if (*me == 0) {
    for (std::size_t i = 1; i < participants.size(); ++i) comm.send_reserved(participants[i], frame);
  } else {
    frame = comm.recv_reserved(participants[0]);
  }
}

// Leader of root's node goes first; the rest keep ascending order.
inline std::vector<int> rooted(std::vector<int> list, int root) {
  const auto it = std::find(list.begin(), list.end(), root);
  if (it != list.end()) std::rotate(list.begin(), it, it + 1);
  return list;
}

inline Bytes two_level_bcast(Comm& comm, std::span<const int> group, int root, Bytes frame, bool tree) {
  const auto nodes = group_nodes(comm.topology(), group);
  const int me = comm.rank();

  std::size_t root_node = 0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (std::find(nodes[n].begin(), nodes[n].end(), root) != nodes[n].end()) root_node = n;
  }
  const int root_leader = nodes[root_node].front();
  if (root != root_leader) {
    if (me == root) comm.send_reserved(root_leader, frame);
    if (me == root_leader) frame = comm.recv_reserved(root);
  }

  std::vector<int> leaders;
  for (const auto& n : nodes) leaders.push_back(n.front());
  leaders = rooted(std::move(leaders), root_leader);
  if (tree) {
    tree_fanout(comm, leaders, frame);
  } else {
    serial_fanout(comm, leaders, frame);
  }

  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (std::find(nodes[n].begin(), nodes[n].end(), me) == nodes[n].end()) continue;
    std::vector<int> members = nodes[n];
    if (n == root_node && root != root_leader) std::erase(members, root);
    if (tree) {
      tree_fanout(comm, members, frame);
    } else {
      serial_fanout(comm, members, frame);
    }
  }
  return frame;
}

inline void check_root(const Comm& comm, int root) {
  if (root < 0 || root >= comm.size()) throw Error(Errc::invalid_argument, "broadcast root out of range");
}

// Gather bundle: u32 count, then per contributor u32 rank, u64 length, frame.
struct BundleEntry {
  int rank;
  Bytes frame;
};

inline Bytes pack_bundle(const std::vector<BundleEntry>& entries) {
  Bytes out;
  put_le(out, entries.size(), 4);
  for (const auto& e : entries) {
    put_le(out, static_cast<std::uint64_t>(e.rank), 4);
    put_le(out, e.frame.size(), 8);
    out.insert(out.end(), e.frame.begin(), e.frame.end());
  }
  return out;
}

inline void unpack_bundle(std::span<const std::byte> in, std::vector<BundleEntry>& into) {
  if (in.size() < 4) throw Error(Errc::truncated_frame, "gather bundle too short");
  const auto count = get_le(in, 0, 4);
  std::size_t off = 4;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (in.size() < off + 12) throw Error(Errc::truncated_frame, "gather bundle entry header cut off");
    const auto rank = static_cast<int>(get_le(in, off, 4));
    const auto len = get_le(in, off + 4, 8);
    off += 12;
    if (in.size() - off < len) throw Error(Errc::truncated_frame, "gather bundle entry body cut off");
    into.push_back({rank, Bytes(in.begin() + static_cast<std::ptrdiff_t>(off),
                                in.begin() + static_cast<std::ptrdiff_t>(off + len))});
    off += len;
  }
}

// Reverse binomial: children hand their accumulated entries to the parent.
inline void tree_fanin(Comm& comm, std::span<const int> participants, std::vector<BundleEntry>& entries) {
  const auto me = index_in(participants, comm.rank());
  if (!me || participants.size() < 2) return;
  const auto schedule = binomial_schedule(std::vector<int>(participants.begin(), participants.end()));
  for (auto round = schedule.rounds.rbegin(); round != schedule.rounds.rend(); ++round) {
    for (const auto& [parent, child] : *round) {
      if (child == *me) {
        comm.send_reserved(participants[parent], encode_payload(Payload::raw(pack_bundle(entries))));
        entries.clear();
      }
      if (parent == *me) {
        const auto bundle = decode_payload(comm.recv_reserved(participants[child]));
        unpack_bundle(bundle.body, entries);
      }
    }
  }
}

}  // namespace detail

/// Root sends to every other rank in rank order.
inline Payload bcast_serial(Comm& comm, int root, const Payload& value) {
  detail::check_root(comm, root);
  const auto group = comm.world();
  Bytes frame = comm.rank() == root ? encode_payload(value) : Bytes{};
  detail::serial_fanout(comm, detail::rooted(group, root), frame);
  return comm.rank() == root ? value : decode_payload(frame);
}

/// Node-aware, serial at each level.
inline Payload bcast_node_aware_serial(Comm& comm, int root, const Payload& value) {
  detail::check_root(comm, root);
  Bytes frame = comm.rank() == root ? encode_payload(value) : Bytes{};
  frame = detail::two_level_bcast(comm, comm.world(), root, std::move(frame), false);
  return comm.rank() == root ? value : decode_payload(frame);
}

/// Node-aware, binomial tree at each level.
inline Payload bcast_tree(Comm& comm, int root, const Payload& value) {
  detail::check_root(comm, root);
  Bytes frame = comm.rank() == root ? encode_payload(value) : Bytes{};
  frame = detail::two_level_bcast(comm, comm.world(), root, std::move(frame), true);
  return comm.rank() == root ? value : decode_payload(frame);
}

/// `value` is only read on the root.
inline Payload bcast(Comm& comm, int root, const Payload& value, BcastVariant variant = BcastVariant::tree) {
  switch (variant) {
    case BcastVariant::serial: return bcast_serial(comm, root, value);
    case BcastVariant::node_serial: return bcast_node_aware_serial(comm, root, value);
    case BcastVariant::tree: break;
  }
  return bcast_tree(comm, root, value);
}

/// Gathers one payload per member of `group` (ascending world ranks) onto the
/// smallest member, ordered by rank. Other members get nothing back.
inline std::optional<std::vector<Payload>> gather_tree(Comm& comm, std::span<const int> group, const Payload& value) {
  if (group.empty()) throw Error(Errc::empty_group, "gather over an empty group");
  if (!std::is_sorted(group.begin(), group.end())) throw Error(Errc::invalid_argument, "group must be ascending");
  const int me = comm.rank();
  if (!detail::index_in(group, me)) throw Error(Errc::invalid_argument, "rank is not a member of the group");

  const auto nodes = group_nodes(comm.topology(), group);
  std::vector<detail::BundleEntry> entries{{me, encode_payload(value)}};

  for (const auto& node : nodes) {
    if (std::find(node.begin(), node.end(), me) != node.end()) detail::tree_fanin(comm, node, entries);
  }
  std::vector<int> leaders;
  for (const auto& n : nodes) leaders.push_back(n.front());
  leaders = detail::rooted(std::move(leaders), group.front());
  detail::tree_fanin(comm, leaders, entries);

  if (me != group.front()) return std::nullopt;
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  if (entries.size() != group.size()) throw Error(Errc::corrupt_payload, "gather lost contributions");
  std::vector<Payload> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(decode_payload(e.frame));
  return out;
}

/// World gather onto rank 0.
inline std::optional<std::vector<Payload>> gather_tree(Comm& comm, const Payload& value) {
  const auto group = comm.world();
  return gather_tree(comm, group, value);
}

/// No rank leaves before every rank has entered.
inline void barrier(Comm& comm) {
  if (comm.size() == 1) return;
  gather_tree(comm, Payload{});
  bcast_tree(comm, 0, Payload{});
}

}  // namespace fcm

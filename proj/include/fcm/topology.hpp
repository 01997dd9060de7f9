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

#include <fcm/block_partition.hpp>
#include <fcm/error.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fcm {

/// nodes x processes-per-node (x threads, recorded only).
struct Triples {
  int nodes = 1;
  int ppn = 1;
  int threads = 1;

  int size() const noexcept { return nodes * ppn; }
};

struct Hostfile {
  std::filesystem::path path;
  std::vector<std::string> hosts;
};

using NodeMap = std::variant<Triples, Hostfile>;

/// Which rank lives on which node. Nodes are numbered in map order and hold
/// contiguous, ascending rank ranges.
struct NodeTopology {
  std::vector<int> node_of;
  std::vector<std::vector<int>> nodes;
  std::vector<std::string> hosts;

  int size() const noexcept { return static_cast<int>(node_of.size()); }
  int node_count() const noexcept { return static_cast<int>(nodes.size()); }
  int leader_of_node(int node) const { return nodes.at(static_cast<std::size_t>(node)).front(); }
  int global_leader() const noexcept { return 0; }
  const std::string& host_of(int rank) const { return hosts.at(static_cast<std::size_t>(node_of.at(rank))); }

  std::vector<int> leaders() const {
    std::vector<int> out;
    for (const auto& n : nodes) out.push_back(n.front());
    return out;
  }

  int max_node_size() const noexcept {
    std::size_t m = 0;
    for (const auto& n : nodes) m = std::max(m, n.size());
    return static_cast<int>(m);
  }
};

namespace detail {

inline int parse_positive(std::string_view text, std::string_view what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value <= 0) {
    throw Error(Errc::invalid_argument, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Parses `NxP` or `NxPxT`.
inline Triples parse_triples(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto x = text.find('x', start);
    parts.push_back(text.substr(start, x == std::string_view::npos ? std::string_view::npos : x - start));
    if (x == std::string_view::npos) break;
    start = x + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw Error(Errc::invalid_argument, "triples must look like NxP or NxPxT, got '" + std::string(text) + "'");
  }
  Triples t;
  t.nodes = detail::parse_positive(parts[0], "node count");
  t.ppn = detail::parse_positive(parts[1], "processes per node");
  if (parts.size() == 3) t.threads = detail::parse_positive(parts[2], "thread count");
  return t;
}

/// One hostname per line; blank lines and `#` comments ignored.
inline Hostfile read_hostfile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot read hostfile " + path.string());
  Hostfile hf{path, {}};
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    hf.hosts.push_back(line.substr(b, e - b + 1));
  }
  if (hf.hosts.empty()) throw Error(Errc::inconsistent_node_map, "hostfile " + path.string() + " lists no hosts");
  return hf;
}

/// `triples:<nodes>x<ppn>[x<threads>]` or `hostfile:<path>`.
inline NodeMap parse_node_map(std::string_view text) {
  if (text.starts_with("triples:")) return parse_triples(text.substr(8));
  if (text.starts_with("hostfile:")) return read_hostfile(std::filesystem::path(text.substr(9)));
  throw Error(Errc::invalid_argument, "node map must start with 'triples:' or 'hostfile:'");
}

inline std::string format_node_map(const NodeMap& map) {
  if (const auto* t = std::get_if<Triples>(&map)) {
    return "triples:" + std::to_string(t->nodes) + "x" + std::to_string(t->ppn) + "x" + std::to_string(t->threads);
  }
  return "hostfile:" + std::filesystem::absolute(std::get<Hostfile>(map).path).string();
}

/// Rank count implied by a triples map, if it fixes one.
inline std::optional<int> implied_size(const NodeMap& map) {
  if (const auto* t = std::get_if<Triples>(&map)) return t->size();
  return std::nullopt;
}

inline NodeTopology build_topology(const NodeMap& map, int size) {
  if (size <= 0) throw Error(Errc::inconsistent_node_map, "size must be positive");
  NodeTopology topo;
  topo.node_of.resize(static_cast<std::size_t>(size));
  if (const auto* t = std::get_if<Triples>(&map)) {
    if (t->size() != size) {
      throw Error(Errc::inconsistent_node_map, "triples " + std::to_string(t->nodes) + "x" + std::to_string(t->ppn) +
                                                   " describe " + std::to_string(t->size()) + " ranks, not " +
                                                   std::to_string(size));
    }
    for (int n = 0; n < t->nodes; ++n) {
      topo.hosts.push_back("node" + std::to_string(n));
      auto& list = topo.nodes.emplace_back();
      for (int p = 0; p < t->ppn; ++p) {
        const int r = n * t->ppn + p;
        list.push_back(r);
        topo.node_of[static_cast<std::size_t>(r)] = n;
      }
    }
    return topo;
  }

  const auto& hf = std::get<Hostfile>(map);
  const auto nhosts = hf.hosts.size();
  for (std::size_t h = 0; h < nhosts; ++h) {
    const auto lo = block_cut(h, static_cast<std::size_t>(size), nhosts);
    const auto hi = block_cut(h + 1, static_cast<std::size_t>(size), nhosts);
    if (lo == hi) continue;  // more hosts than ranks: host stays idle
    topo.hosts.push_back(hf.hosts[h]);
    auto& list = topo.nodes.emplace_back();
    for (auto r = lo; r < hi; ++r) {
      list.push_back(static_cast<int>(r));
      topo.node_of[r] = static_cast<int>(topo.nodes.size() - 1);
    }
  }
  return topo;
}

/// Node lists restricted to `group` (ascending world ranks); empty nodes are
/// dropped, so element 0 of each list is that node's leader within the group.
inline std::vector<std::vector<int>> group_nodes(const NodeTopology& topo, std::span<const int> group) {
  std::vector<std::vector<int>> per_node(topo.nodes.size());
  for (int r : group) per_node.at(static_cast<std::size_t>(topo.node_of.at(static_cast<std::size_t>(r)))).push_back(r);
  std::vector<std::vector<int>> out;
  for (auto& n : per_node) {
    if (n.empty()) continue;
    std::sort(n.begin(), n.end());
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace fcm

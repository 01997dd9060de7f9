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
#include <fcm/topology.hpp>
#include <fcm/transport.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fcm {

/// Snapshot of the FCM_* variables a rank is started with.
using Environment = std::map<std::string, std::string>;

inline constexpr const char* kEnvRank = "FCM_RANK";
inline constexpr const char* kEnvSize = "FCM_SIZE";
inline constexpr const char* kEnvRoot = "FCM_ROOT";
inline constexpr const char* kEnvMode = "FCM_MODE";
inline constexpr const char* kEnvNodeMap = "FCM_NODEMAP";
inline constexpr const char* kEnvRemoteCopy = "FCM_REMOTE_COPY";
inline constexpr const char* kEnvRecvTimeoutMs = "FCM_RECV_TIMEOUT_MS";
inline constexpr const char* kEnvPollInitialUs = "FCM_POLL_INITIAL_US";
inline constexpr const char* kEnvPollMaxUs = "FCM_POLL_MAX_US";

inline Environment process_environment() {
  Environment env;
  for (const char* key : {kEnvRank, kEnvSize, kEnvRoot, kEnvMode, kEnvNodeMap, kEnvRemoteCopy, kEnvRecvTimeoutMs,
                          kEnvPollInitialUs, kEnvPollMaxUs}) {
    if (const char* v = std::getenv(key)) env[key] = v;
  }
  return env;
}

struct CommStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
};

/// A rank's view of the SPMD world. User tags live in [0, 2^30); the library
/// draws its own tags from [2^30, 2^31) so the two never collide.
class Comm {
 public:
  static constexpr std::uint32_t kUserTagLimit = 1u << 30;

  Comm(int rank, NodeTopology topology, TransportConfig transport)
      : rank_(rank), topology_(std::move(topology)), transport_(std::move(transport)) {
    if (rank_ < 0 || rank_ >= size()) {
      throw Error(Errc::invalid_argument, "rank " + std::to_string(rank_) + " outside [0, " +
                                              std::to_string(size()) + ")");
    }
    detail::ensure_dir(mailbox_dir(transport_, rank_));
    transport_.validate();
  }

  static Comm init(const Environment& env) {
    auto need = [&](const char* key) -> const std::string& {
      const auto it = env.find(key);
      if (it == env.end() || it->second.empty()) {
        throw Error(Errc::missing_environment, std::string(key) + " is not set");
      }
      return it->second;
    };
    auto number = [](const std::string& text, const char* key) {
      long long v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0) {
        throw Error(Errc::invalid_argument, std::string(key) + " must be a non-negative integer, got '" + text + "'");
      }
      return v;
    };

    const int rank = static_cast<int>(number(need(kEnvRank), kEnvRank));
    const int size = static_cast<int>(number(need(kEnvSize), kEnvSize));
    TransportConfig cfg;
    cfg.mailbox_root = need(kEnvRoot);
    cfg.mode = parse_transport_mode(need(kEnvMode));
    auto topo = build_topology(parse_node_map(need(kEnvNodeMap)), size);

    if (auto it = env.find(kEnvRemoteCopy); it != env.end() && !it->second.empty()) cfg.remote_copy = it->second;
    if (auto it = env.find(kEnvRecvTimeoutMs); it != env.end() && !it->second.empty()) {
      cfg.recv_timeout = std::chrono::milliseconds(number(it->second, kEnvRecvTimeoutMs));
    }
    if (auto it = env.find(kEnvPollInitialUs); it != env.end() && !it->second.empty()) {
      cfg.poll_initial = std::chrono::microseconds(number(it->second, kEnvPollInitialUs));
    }
    if (auto it = env.find(kEnvPollMaxUs); it != env.end() && !it->second.empty()) {
      cfg.poll_max = std::chrono::microseconds(number(it->second, kEnvPollMaxUs));
    }
    return Comm(rank, std::move(topo), std::move(cfg));
  }

  static Comm init() { return init(process_environment()); }

  int rank() const noexcept { return rank_; }
  int size() const noexcept { return topology_.size(); }
  const NodeTopology& topology() const noexcept { return topology_; }
  const TransportConfig& transport() const noexcept { return transport_; }
  TransportConfig& transport() noexcept { return transport_; }
  const CommStats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = {}; }

  void send(int dest, std::uint32_t tag, const Payload& value) {
    check_user_tag(tag);
    send_frame(dest, tag, encode_payload(value));
  }

  template <Element T>
  void send(int dest, std::uint32_t tag, std::span<const T> values) {
    send(dest, tag, Payload::array(values));
  }

  Payload recv(int source, std::uint32_t tag) { return recv(source, tag, transport_.recv_timeout); }

  Payload recv(int source, std::uint32_t tag, std::optional<std::chrono::milliseconds> timeout) {
    check_user_tag(tag);
    return decode_payload(recv_frame(source, tag, timeout));
  }

  template <Element T>
  std::vector<T> recv_vector(int source, std::uint32_t tag) {
    return recv(source, tag).as_vector<T>();
  }

  // Library plumbing below: no user-range check on tags.

  void send_frame(int dest, std::uint32_t tag, std::span<const std::byte> frame) {
    check_peer(dest);
    deposit(transport_, Envelope{rank_, dest, tag}, frame, DestLocator{topology_.host_of(dest)});
    ++stats_.messages_sent;
    stats_.bytes_sent += frame.size();
  }

  Bytes recv_frame(int source, std::uint32_t tag) { return recv_frame(source, tag, transport_.recv_timeout); }

  Bytes recv_frame(int source, std::uint32_t tag, std::optional<std::chrono::milliseconds> timeout) {
    check_peer(source);
    Bytes frame = consume(transport_, Envelope{source, rank_, tag}, timeout);
    ++stats_.messages_received;
    stats_.bytes_received += frame.size();
    return frame;
  }

  /// Collective traffic. The k-th reserved message from a rank to a peer
  /// carries tag kUserTagLimit + k, and the peer expects the same k, so two
  /// ranks agree on tags as long as they make their shared collective calls in
  /// the same order. Calls that only one of them joins do not move the
  /// pair's sequence.
  void send_reserved(int dest, std::span<const std::byte> frame) {
    check_peer(dest);
    send_frame(dest, reserved_tag(sent_seq_, dest), frame);
  }

  Bytes recv_reserved(int source) {
    check_peer(source);
    return recv_frame(source, reserved_tag(recv_seq_, source));
  }

  std::vector<int> world() const {
    std::vector<int> all(static_cast<std::size_t>(size()));
    for (int r = 0; r < size(); ++r) all[static_cast<std::size_t>(r)] = r;
    return all;
  }

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= size()) {
      throw Error(Errc::invalid_dest, "rank " + std::to_string(peer) + " outside [0, " + std::to_string(size()) + ")");
    }
  }

  static std::uint32_t reserved_tag(std::map<int, std::uint32_t>& seq, int peer) {
    return kUserTagLimit | (seq[peer]++ & (kUserTagLimit - 1));
  }

  static void check_user_tag(std::uint32_t tag) {
    if (tag >= kUserTagLimit) throw Error(Errc::reserved_tag, "tag " + std::to_string(tag) + " is reserved");
  }

  int rank_;
  NodeTopology topology_;
  TransportConfig transport_;
  CommStats stats_;
  std::map<int, std::uint32_t> sent_seq_;
  std::map<int, std::uint32_t> recv_seq_;
};

}  // namespace fcm

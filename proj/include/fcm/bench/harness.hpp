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
 * Timed sweeps, run SPMD inside every rank. Records come back on rank 0.
 *
 * p2p    rank 0 sends msg_bytes to rank 1, which answers with an 8-byte ack
 *        as soon as the message is in; elapsed is the whole round trip, ack
 *        included.
 * bcast  root 0; elapsed runs from the root's entry to the latest
 *        completion on any rank. Completion stamps are gathered afterwards
 *        and compared on one steady clock, so ranks must share a machine.
 * agg    1-D block array of msg_bytes per rank; elapsed is measured on the
 *        leader.
 *
 * Every repetition checks the delivered data outside the timed region. A
 * mismatch on any rank fails the sweep on all ranks; no record is produced
 * for it.
 */

#pragma once

#include <fcm/bench/records.hpp>
#include <fcm/collectives.hpp>
#include <fcm/comm.hpp>
#include <fcm/pgas/dist_array.hpp>
#include <fcm/pgas/ops.hpp>

#include <chrono>
#include <cstring>
#include <functional>
#include <span>
#include <vector>

namespace fcm::bench {

struct SweepSpec {
  std::vector<std::uint64_t> sizes;
  int reps = 5;
  int warmups = 1;
  /// Test hook: called on delivered bytes before the check, timed reps only.
  std::function<void(std::span<std::byte>, int rep)> tamper;
};

inline void validate(const SweepSpec& spec) {
  if (spec.sizes.empty()) throw Error(Errc::invalid_argument, "sweep needs at least one message size");
  for (auto s : spec.sizes) {
    if (s == 0) throw Error(Errc::invalid_argument, "message sizes must be at least 1 byte");
  }
  if (spec.reps < 1) throw Error(Errc::invalid_argument, "reps must be at least 1");
  if (spec.warmups < 0) throw Error(Errc::invalid_argument, "warmups must be non-negative");
}

inline BenchOp bcast_op(BcastVariant v) {
  switch (v) {
    case BcastVariant::serial: return BenchOp::bcast_serial;
    case BcastVariant::node_serial: return BenchOp::bcast_node_serial;
    case BcastVariant::tree: break;
  }
  return BenchOp::bcast_tree;
}

namespace detail {

inline std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline Payload pattern(std::uint64_t n, int salt) {
  Bytes body(n);
  std::uint64_t x = 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(salt + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    x ^= x << 13, x ^= x >> 7, x ^= x << 17;
    body[i] = static_cast<std::byte>(x);
  }
  return Payload{PayloadKind::numeric_array, ElementType::uint8, {n}, std::move(body)};
}

inline void maybe_tamper(const SweepSpec& spec, std::span<std::byte> data, bool timed, int rep) {
  if (timed && spec.tamper) spec.tamper(data, rep);
}

/// Root learns whether every rank's check passed and tells everyone.
inline bool all_agree(Comm& comm, bool ok) {
  const std::vector<std::uint8_t> mine{static_cast<std::uint8_t>(ok ? 1 : 0)};
  const auto got = gather_tree(comm, Payload::array<std::uint8_t>(mine));
  std::vector<std::uint8_t> verdict{1};
  if (got) {
    for (const auto& p : *got) verdict[0] &= p.as_vector<std::uint8_t>().at(0);
  }
  return bcast_tree(comm, 0, Payload::array<std::uint8_t>(verdict)).as_vector<std::uint8_t>().at(0) == 1;
}

[[noreturn]] inline void fail_check(BenchOp op, std::uint64_t size, int rep) {
  throw Error(Errc::corrupt_payload, std::string(to_string(op)) + " delivered wrong data at " + std::to_string(size) +
                                         " bytes, rep " + std::to_string(rep));
}

inline BenchRecord record(const Comm& comm, BenchOp op, std::uint64_t size, int rep, double elapsed) {
  return make_record(op, size, comm.size(), comm.topology().node_count(), comm.topology().max_node_size(), rep,
                     elapsed);
}

inline constexpr std::uint32_t kTagData = 1;
inline constexpr std::uint32_t kTagAck = 2;
inline constexpr std::uint32_t kTagVerdict = 3;

}  // namespace detail

inline std::vector<BenchRecord> bench_p2p(Comm& comm, const SweepSpec& spec) {
  validate(spec);
  if (comm.size() != 2) throw Error(Errc::invalid_argument, "p2p benchmark needs exactly 2 ranks");
  std::vector<BenchRecord> out;
  const std::vector<std::uint8_t> ack(8, 0);
  for (auto size : spec.sizes) {
    for (int i = 0; i < spec.warmups + spec.reps; ++i) {
      const bool timed = i >= spec.warmups;
      const int rep = i - spec.warmups;
      const auto expected = detail::pattern(size, i);
      barrier(comm);
      if (comm.rank() == 0) {
        const auto t0 = detail::now_ns();
        comm.send(1, detail::kTagData, expected);
        comm.recv(1, detail::kTagAck);
        const auto t1 = detail::now_ns();
        const bool ok = comm.recv_vector<std::uint8_t>(1, detail::kTagVerdict).at(0) == 1;
        if (!ok) detail::fail_check(BenchOp::p2p, size, rep);
        if (timed) out.push_back(detail::record(comm, BenchOp::p2p, size, rep, static_cast<double>(t1 - t0) * 1e-9));
      } else {
        auto got = comm.recv(0, detail::kTagData);
        comm.send<std::uint8_t>(0, detail::kTagAck, ack);
        detail::maybe_tamper(spec, got.body, timed, rep);
        const bool ok = got == expected;
        comm.send<std::uint8_t>(0, detail::kTagVerdict, std::vector<std::uint8_t>{static_cast<std::uint8_t>(ok)});
        if (!ok) detail::fail_check(BenchOp::p2p, size, rep);
      }
    }
  }
  return out;
}

inline std::vector<BenchRecord> bench_bcast(Comm& comm, const SweepSpec& spec, BcastVariant variant) {
  validate(spec);
  if (comm.size() < 2) throw Error(Errc::invalid_argument, "bcast benchmark needs at least 2 ranks");
  const auto op = bcast_op(variant);
  constexpr int root = 0;
  std::vector<BenchRecord> out;
  for (auto size : spec.sizes) {
    for (int i = 0; i < spec.warmups + spec.reps; ++i) {
      const bool timed = i >= spec.warmups;
      const int rep = i - spec.warmups;
      const auto expected = detail::pattern(size, i);
      const Payload input = comm.rank() == root ? expected : Payload{};
      barrier(comm);
      const auto t_start = detail::now_ns();
      auto got = bcast(comm, root, input, variant);
      const auto t_done = detail::now_ns();
      if (comm.rank() != root) detail::maybe_tamper(spec, got.body, timed, rep);
      const bool ok = got == expected;

      const std::vector<std::int64_t> stamp{t_done};
      const auto stamps = gather_tree(comm, Payload::array<std::int64_t>(stamp));
      if (!detail::all_agree(comm, ok)) detail::fail_check(op, size, rep);
      if (stamps && timed) {
        std::int64_t latest = t_start;
        for (const auto& s : *stamps) latest = std::max(latest, s.as_vector<std::int64_t>().at(0));
        out.push_back(detail::record(comm, op, size, rep, static_cast<double>(latest - t_start) * 1e-9));
      }
    }
  }
  return out;
}

inline std::vector<BenchRecord> bench_agg(Comm& comm, const SweepSpec& spec) {
  validate(spec);
  if (comm.size() < 2) throw Error(Errc::invalid_argument, "agg benchmark needs at least 2 ranks");
  std::vector<int> plist(static_cast<std::size_t>(comm.size()));
  for (int r = 0; r < comm.size(); ++r) plist[static_cast<std::size_t>(r)] = r;
  const auto map = pgas::make_map({plist.size()}, {}, plist);
  std::vector<BenchRecord> out;
  for (auto size : spec.sizes) {
    const std::vector<std::size_t> dims{static_cast<std::size_t>(size) * plist.size()};
    for (int i = 0; i < spec.warmups + spec.reps; ++i) {
      const bool timed = i >= spec.warmups;
      const int rep = i - spec.warmups;
      const auto seed = static_cast<std::uint64_t>(i) + 1;
      const auto a = pgas::rand<std::uint8_t>(dims, map, comm.rank(), seed);
      barrier(comm);
      const auto t0 = detail::now_ns();
      auto whole = pgas::agg(comm, a);
      const auto t1 = detail::now_ns();
      bool ok = true;
      if (whole) {
        detail::maybe_tamper(spec, std::as_writable_bytes(std::span(whole->data)), timed, rep);
        ok = *whole == pgas::rand<std::uint8_t>(dims, seed);
      }
      if (!detail::all_agree(comm, ok)) detail::fail_check(BenchOp::agg, size, rep);
      if (whole && timed) {
        out.push_back(detail::record(comm, BenchOp::agg, size, rep, static_cast<double>(t1 - t0) * 1e-9));
      }
    }
  }
  return out;
}

}  // namespace fcm::bench

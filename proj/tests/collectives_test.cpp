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

#include <fcm/collectives.hpp>

#include "support/spmd.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

using namespace fcm;
using fcm::testing::Spmd;
using fcm::testing::all_zero;
using fcm::testing::describe;
using fcm::testing::triples;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Payload value_for(int root, std::size_t n) {
  Bytes b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::byte>((i * 31 + static_cast<std::size_t>(root)) & 0xFF);
  return Payload::raw(std::move(b));
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < n) ++r;
  return r;
}

}  // namespace

TEST(BinomialSchedule, SingleParticipant) {
  EXPECT_TRUE(binomial_schedule(1).rounds.empty());
}

TEST(BinomialSchedule, FourParticipants) {
  const auto s = binomial_schedule(4);
  ASSERT_EQ(s.rounds.size(), 2u);
  EXPECT_EQ(s.rounds[0], (Pairs{{0, 1}}));
  EXPECT_EQ(s.rounds[1], (Pairs{{0, 2}, {1, 3}}));
}

TEST(BinomialSchedule, FiveParticipants) {
  const auto s = binomial_schedule(5);
  ASSERT_EQ(s.rounds.size(), 3u);
  EXPECT_EQ(s.rounds[0], (Pairs{{0, 1}}));
  EXPECT_EQ(s.rounds[1], (Pairs{{0, 2}, {1, 3}}));
  EXPECT_EQ(s.rounds[2], (Pairs{{0, 4}}));
}

TEST(BinomialSchedule, CompletenessAndSenderHasValue) {
  for (std::size_t n = 1; n <= 64; ++n) {
    const auto s = binomial_schedule(n);
    EXPECT_EQ(s.rounds.size(), ceil_log2(n)) << n;
    std::set<std::size_t> have{0};
    std::multiset<std::size_t> received;
    for (const auto& round : s.rounds) {
      std::set<std::size_t> got;
      for (auto [from, to] : round) {
        EXPECT_TRUE(have.count(from)) << "sender " << from << " has no value yet (n=" << n << ")";
        received.insert(to);
        got.insert(to);
      }
      have.insert(got.begin(), got.end());
    }
    EXPECT_EQ(received.size(), n - 1);
    for (std::size_t i = 1; i < n; ++i) EXPECT_EQ(received.count(i), 1u) << "n=" << n << " i=" << i;
  }
}

TEST(BinomialSchedule, RejectsEmpty) { EXPECT_THROW(binomial_schedule(0), Error); }

TEST(Bcast, VariantsParse) {
  EXPECT_EQ(parse_bcast_variant("node-serial"), BcastVariant::node_serial);
  EXPECT_EQ(to_string(BcastVariant::tree), "tree");
  EXPECT_THROW(parse_bcast_variant("fast"), Error);
}

TEST(Bcast, SingleRankIdentity) {
  Spmd spmd(1, "triples:1x1");
  const auto st = spmd.run([](Comm& comm) {
    const auto v = value_for(0, 8);
    for (auto variant : {BcastVariant::serial, BcastVariant::node_serial, BcastVariant::tree}) {
      if (bcast(comm, 0, v, variant) != v) return 1;
    }
    return comm.stats().messages_sent == 0 ? 0 : 2;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

struct BcastCase {
  int nodes;
  int ppn;
  int root;
  BcastVariant variant;
};

class BcastDelivers : public ::testing::TestWithParam<BcastCase> {};

TEST_P(BcastDelivers, AllRanksHoldRootValue) {
  const auto c = GetParam();
  Spmd spmd(c.nodes * c.ppn, triples(c.nodes, c.ppn));
  const auto st = spmd.run([&](Comm& comm) {
    const auto expected = value_for(c.root, 8);
    const Payload input = comm.rank() == c.root ? expected : Payload{};
    return bcast(comm, c.root, input, c.variant) == expected ? 0 : 1;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

INSTANTIATE_TEST_SUITE_P(
    Collectives, BcastDelivers,
    ::testing::Values(BcastCase{1, 4, 0, BcastVariant::serial}, BcastCase{1, 4, 2, BcastVariant::serial},
                      BcastCase{2, 2, 0, BcastVariant::node_serial}, BcastCase{2, 2, 3, BcastVariant::node_serial},
                      BcastCase{2, 2, 2, BcastVariant::tree}, BcastCase{2, 2, 3, BcastVariant::tree},
                      BcastCase{3, 2, 5, BcastVariant::tree}, BcastCase{4, 1, 0, BcastVariant::tree},
                      BcastCase{2, 4, 0, BcastVariant::tree}, BcastCase{2, 4, 6, BcastVariant::node_serial}));

// Trace for triples(2,2), root 0: off-node 0->2, in-node 0->1 and 2->3.
TEST(Bcast, NodeSerialTrace) {
  Spmd spmd(4, "triples:2x2");
  const auto st = spmd.run([](Comm& comm) {
    bcast_node_aware_serial(comm, 0, value_for(0, 8));
    const auto& s = comm.stats();
    const std::uint64_t sent[] = {2, 0, 1, 0};
    const std::uint64_t recv[] = {0, 1, 1, 1};
    const auto r = static_cast<std::size_t>(comm.rank());
    return s.messages_sent == sent[r] && s.messages_received == recv[r] ? 0 : 1;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

// Root 3 is not a leader: 3->2 first, then 2->0, then 0->1; rank 3 gets nothing back.
TEST(Bcast, NodeSerialNonLeaderRootHandOff) {
  Spmd spmd(4, "triples:2x2");
  const auto st = spmd.run([](Comm& comm) {
    const auto expected = value_for(3, 8);
    const auto got = bcast_node_aware_serial(comm, 3, comm.rank() == 3 ? expected : Payload{});
    const auto& s = comm.stats();
    const std::uint64_t sent[] = {1, 0, 1, 1};
    const std::uint64_t recv[] = {1, 1, 1, 0};
    const auto r = static_cast<std::size_t>(comm.rank());
    if (got != expected) return 1;
    return s.messages_sent == sent[r] && s.messages_received == recv[r] ? 0 : 2;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

// triples(2,4), root 0: one leader round (0->4), two in-node rounds.
TEST(Bcast, TreeRoundCounts) {
  Spmd spmd(8, "triples:2x4");
  const auto st = spmd.run([](Comm& comm) {
    const auto expected = value_for(0, 16);
    if (bcast_tree(comm, 0, comm.rank() == 0 ? expected : Payload{}) != expected) return 1;
    const auto& s = comm.stats();
    if (comm.rank() == 0) return s.messages_sent == 3 ? 0 : 2;
    if (comm.rank() == 4) return s.messages_sent == 2 && s.messages_received == 1 ? 0 : 3;
    return s.messages_received == 1 ? 0 : 4;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

TEST(Bcast, PureLeaderTree) {
  Spmd spmd(4, "triples:4x1");
  const auto st = spmd.run([](Comm& comm) {
    const auto expected = value_for(0, 8);
    if (bcast_tree(comm, 0, comm.rank() == 0 ? expected : Payload{}) != expected) return 1;
    return comm.rank() != 0 || comm.stats().messages_sent == 2 ? 0 : 2;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

TEST(Bcast, EmptyPayload) {
  Spmd spmd(5, "triples:5x1");
  const auto st = spmd.run([](Comm& comm) {
    for (auto variant : {BcastVariant::serial, BcastVariant::node_serial, BcastVariant::tree}) {
      if (bcast(comm, 0, Payload{}, variant) != Payload{}) return 1;
    }
    return 0;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

// Messages touching any rank stay within the two tree depths plus a hand-off.
TEST(Bcast, TreeMessageBound) {
  for (auto [nodes, ppn] : {std::pair{2, 3}, std::pair{3, 3}, std::pair{4, 2}}) {
    const int size = nodes * ppn;
    for (int root : {0, size - 1}) {
      Spmd spmd(size, triples(nodes, ppn));
      const auto bound = ceil_log2(static_cast<std::size_t>(nodes)) + ceil_log2(static_cast<std::size_t>(ppn)) + 1;
      const auto st = spmd.run([&](Comm& comm) {
        bcast_tree(comm, root, value_for(root, 4));
        const auto touched = comm.stats().messages_sent + comm.stats().messages_received;
        return touched <= bound ? 0 : 1;
      });
      EXPECT_TRUE(all_zero(st)) << nodes << "x" << ppn << " root " << root << " " << describe(st);
    }
  }
}

TEST(Gather, SingleRank) {
  Spmd spmd(1, "triples:1x1");
  const auto st = spmd.run([](Comm& comm) {
    const auto got = gather_tree(comm, value_for(7, 3));
    return got && got->size() == 1 && (*got)[0] == value_for(7, 3) ? 0 : 1;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

TEST(Gather, RankOrder) {
  Spmd spmd(4, "triples:2x2");
  const auto st = spmd.run([](Comm& comm) {
    const std::vector<std::uint8_t> mine{static_cast<std::uint8_t>(comm.rank())};
    const auto got = gather_tree(comm, Payload::array<std::uint8_t>(mine));
    if (comm.rank() != 0) return got ? 1 : 0;
    if (!got || got->size() != 4) return 2;
    for (int r = 0; r < 4; ++r) {
      if ((*got)[static_cast<std::size_t>(r)].as_vector<std::uint8_t>() != std::vector<std::uint8_t>{static_cast<std::uint8_t>(r)})
        return 3;
    }
    return 0;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

TEST(Gather, UnequalPayloads) {
  Spmd spmd(4, "triples:2x2");
  const auto st = spmd.run([](Comm& comm) {
    auto size_of = [](int r) { return r % 2 == 0 ? std::size_t{8} : std::size_t{8192}; };
    const auto got = gather_tree(comm, value_for(comm.rank(), size_of(comm.rank())));
    if (comm.rank() != 0) return 0;
    for (int r = 0; r < 4; ++r) {
      if ((*got)[static_cast<std::size_t>(r)] != value_for(r, size_of(r))) return 1;
    }
    return 0;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

TEST(Gather, SubsetGroupCollectsOnSmallestMember) {
  Spmd spmd(6, "triples:3x2");
  const auto st = spmd.run([](Comm& comm) {
    const std::vector<int> group{1, 2, 5};
    if (!std::binary_search(group.begin(), group.end(), comm.rank())) return 0;
    const auto got = gather_tree(comm, group, value_for(comm.rank(), 5));
    if (comm.rank() != 1) return got ? 1 : 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if ((*got)[i] != value_for(group[i], 5)) return 2;
    }
    return 0;
  });
  EXPECT_TRUE(all_zero(st)) << describe(st);
}

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

#include <fcm/transport.hpp>

#include "support/spmd.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>

#include <sys/statvfs.h>

using namespace fcm;
using fcm::testing::TempDir;
using namespace std::chrono_literals;

namespace {

TransportConfig config_for(const TempDir& dir) {
  TransportConfig cfg;
  cfg.mailbox_root = dir.path();
  return cfg;
}

Bytes pattern(std::size_t n, unsigned seed) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::byte>((i * 131 + seed * 17) & 0xFF);
  return out;
}

std::set<std::string> files_in(const std::filesystem::path& dir) {
  std::set<std::string> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) out.insert(e.path().filename().string());
  return out;
}

template <class F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an fcm::Error";
  return Errc::usage;
}

}  // namespace

TEST(Transport, DepositCreatesBufferThenLock) {
  TempDir dir;
  const auto cfg = config_for(dir);
  deposit(cfg, {0, 3, 7}, pattern(16, 1));
  EXPECT_EQ(files_in(mailbox_dir(cfg, 3)), (std::set<std::string>{"t7_s0_d3.buf", "t7_s0_d3.lock"}));
  EXPECT_EQ(std::filesystem::file_size(mailbox_dir(cfg, 3) / "t7_s0_d3.lock"), 0u);
}

TEST(Transport, DuplicateDepositRejected) {
  TempDir dir;
  const auto cfg = config_for(dir);
  deposit(cfg, {0, 3, 7}, pattern(16, 1));
  EXPECT_EQ(error_code_of([&] { deposit(cfg, {0, 3, 7}, pattern(16, 2)); }), Errc::duplicate_message);
  // The in-flight message is untouched.
  EXPECT_EQ(consume(cfg, {0, 3, 7}, 1s), pattern(16, 1));
}

TEST(Transport, SelfSendRoundTrip) {
  TempDir dir;
  const auto cfg = config_for(dir);
  deposit(cfg, {2, 2, 0}, pattern(100, 3));
  EXPECT_EQ(consume(cfg, {2, 2, 0}, 1s), pattern(100, 3));
}

TEST(Transport, ConsumeRemovesBothFiles) {
  TempDir dir;
  const auto cfg = config_for(dir);
  deposit(cfg, {0, 1, 0}, pattern(16, 4));
  EXPECT_EQ(consume(cfg, {0, 1, 0}, 1s), pattern(16, 4));
  EXPECT_TRUE(files_in(mailbox_dir(cfg, 1)).empty());
}

TEST(Transport, ConsumeTimesOut) {
  TempDir dir;
  const auto cfg = config_for(dir);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(error_code_of([&] { consume(cfg, {0, 1, 5}, 50ms); }), Errc::timeout_expired);
  const auto waited = std::chrono::steady_clock::now() - start;
  EXPECT_GE(waited, 50ms);
  EXPECT_LT(waited, 1s);
}

TEST(Transport, ProbeLifecycle) {
  TempDir dir;
  const auto cfg = config_for(dir);
  EXPECT_FALSE(probe(cfg, 1, 0, 9));
  deposit(cfg, {0, 1, 9}, pattern(8, 0));
  EXPECT_TRUE(probe(cfg, 1, 0, 9));
  EXPECT_TRUE(probe(cfg, 1, 0, 9));  // probing consumes nothing
  consume(cfg, {0, 1, 9}, 1s);
  EXPECT_FALSE(probe(cfg, 1, 0, 9));
}

TEST(Transport, PurgeCountsAndIsIdempotent) {
  TempDir dir;
  const auto cfg = config_for(dir);
  EXPECT_EQ(purge_mailbox(cfg, 1), 0u);
  deposit(cfg, {0, 1, 0}, pattern(8, 0));
  EXPECT_EQ(purge_mailbox(cfg, 1), 2u);
  EXPECT_EQ(purge_mailbox(cfg, 1), 0u);
  EXPECT_FALSE(probe(cfg, 1, 0, 0));
}

TEST(Transport, OneSidedWithoutReceiver) {
  TempDir dir;
  const auto cfg = config_for(dir);
  // Rank 5's mailbox does not exist yet and no process owns it.
  deposit(cfg, {0, 5, 1}, pattern(64, 5));
  EXPECT_TRUE(probe(cfg, 5, 0, 1));
}

TEST(Transport, DistinctTagsDoNotInterfere) {
  TempDir dir;
  const auto cfg = config_for(dir);
  std::mt19937 rng(7);
  std::vector<std::uint32_t> tags(50);
  for (std::uint32_t i = 0; i < tags.size(); ++i) tags[i] = i * 3 + 1;
  std::shuffle(tags.begin(), tags.end(), rng);
  for (auto t : tags) deposit(cfg, {0, 1, t}, pattern(t + 1, t));
  std::shuffle(tags.begin(), tags.end(), rng);
  for (auto t : tags) EXPECT_EQ(consume(cfg, {0, 1, t}, 1s), pattern(t + 1, t)) << "tag " << t;
  EXPECT_TRUE(files_in(mailbox_dir(cfg, 1)).empty());
}

TEST(Transport, LocalDirModeUsesRemoteCopy) {
  TempDir dir;
  auto cfg = config_for(dir);
  cfg.mode = TransportMode::local_dir;
  deposit(cfg, {0, 1, 3}, pattern(4096, 9), DestLocator{"node1"});
  EXPECT_TRUE(probe(cfg, 1, 0, 3));
  EXPECT_TRUE(files_in(staging_dir(cfg, 0)).empty());
  EXPECT_EQ(consume(cfg, {0, 1, 3}, 1s), pattern(4096, 9));
}

TEST(Transport, LocalDirRemoteCopyTemplateSeesHost) {
  TempDir dir;
  auto cfg = config_for(dir);
  cfg.mode = TransportMode::local_dir;
  const auto log = dir.path() / "hosts.log";
  cfg.remote_copy = "echo {host} >> " + detail::shell_quote(log.string()) + " && mkdir -p {dir} && cp {file} {dir}/";
  deposit(cfg, {0, 1, 0}, pattern(10, 0), DestLocator{"nodeB"});
  std::ifstream in(log);
  std::string a, b;
  in >> a >> b;
  EXPECT_EQ(a, "nodeB");
  EXPECT_EQ(b, "nodeB");
}

TEST(Transport, RemoteCopyFailureSurfaces) {
  TempDir dir;
  auto cfg = config_for(dir);
  cfg.mode = TransportMode::local_dir;
  cfg.remote_copy = "exit 4";
  EXPECT_EQ(error_code_of([&] { deposit(cfg, {0, 1, 0}, pattern(10, 0)); }), Errc::remote_copy_failure);
  EXPECT_FALSE(probe(cfg, 1, 0, 0));
  EXPECT_TRUE(files_in(staging_dir(cfg, 0)).empty());
}

TEST(Transport, ConfigValidation) {
  TempDir dir;
  auto cfg = config_for(dir);
  EXPECT_NO_THROW(cfg.validate());
  cfg.poll_initial = 100ms;
  cfg.poll_max = 1ms;
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), Errc::invalid_argument);
  cfg = config_for(dir);
  cfg.mailbox_root = dir.path() / "missing";
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), Errc::io_failure);
}

// A watcher polling with no backoff must never see a lock next to a short
// buffer while a writer process deposits concurrently.
TEST(Transport, LockNeverPrecedesCompleteBuffer) {
  TempDir dir;
  const auto cfg = config_for(dir);
  constexpr int kMessages = 200;
  constexpr std::size_t kSize = 256 * 1024;
  const auto expected_frame = kSize;

  std::fflush(nullptr);
  const pid_t writer = ::fork();
  ASSERT_GE(writer, 0);
  if (writer == 0) {
    try {
      for (int i = 0; i < kMessages; ++i) deposit(cfg, {0, 1, static_cast<std::uint32_t>(i)}, pattern(kSize, i));
    } catch (...) {
      ::_exit(1);
    }
    ::_exit(0);
  }
  auto zero = cfg;
  zero.poll_initial = 0us;
  zero.poll_max = 0us;
  int bad = 0;
  for (int i = 0; i < kMessages; ++i) {
    const auto tag = static_cast<std::uint32_t>(i);
    const auto dirp = mailbox_dir(cfg, 1);
    while (!probe(cfg, 1, 0, tag)) {
    }
    if (std::filesystem::file_size(dirp / message_stem({0, 1, tag}).append(".buf")) != expected_frame) ++bad;
    if (consume(zero, {0, 1, tag}, 5s) != pattern(kSize, i)) ++bad;
  }
  int status = 0;
  ::waitpid(writer, &status, 0);
  EXPECT_EQ(detail::decode_wait_status(status), 0);
  EXPECT_EQ(bad, 0);
}

// Large messages pass through unchanged; skipped when the disk cannot hold one.
TEST(Transport, OneGigabyteMessage) {
  TempDir dir;
  const auto cfg = config_for(dir);
  constexpr std::size_t kBody = std::size_t{1} << 30;
  struct statvfs fs {};
  ASSERT_EQ(::statvfs(dir.path().c_str(), &fs), 0);
  if (static_cast<std::size_t>(fs.f_bavail) * fs.f_frsize < kBody + (kBody / 4)) {
    GTEST_SKIP() << "not enough free space for a 1 GiB message";
  }
  Bytes frame = encode_payload(Payload::raw(Bytes{}));
  const std::size_t header = frame.size();
  frame.resize(header + kBody);
  for (std::size_t i = header; i < frame.size(); i += 4096) frame[i] = static_cast<std::byte>(i >> 12);
  deposit(cfg, {0, 1, 0}, frame);
  const Bytes got = consume(cfg, {0, 1, 0}, 60s);
  EXPECT_EQ(got.size(), frame.size());
  EXPECT_TRUE(got == frame);
  EXPECT_TRUE(files_in(mailbox_dir(cfg, 1)).empty());
}

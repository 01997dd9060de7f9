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
 * File-based message kernel.
 *
 * A message (source, dest, tag) travels as two files in the receiver's
 * mailbox `<root>/rank<dest>/`:
 *
 *   t<tag>_s<source>_d<dest>.buf    the encoded frame
 *   t<tag>_s<source>_d<dest>.lock   zero-length readiness marker
 *
 * The buffer is written under a hidden temporary name, closed, and renamed
 * into place before the lock is created, so a visible lock always implies a
 * complete buffer. The receiver polls for the lock, reads the buffer, and
 * removes buffer then lock. The sender never waits on the receiver.
 *
 * In local-dir mode the two files are staged under `<root>/staging/rank<src>/`
 * and pushed with the remote-copy command template (buffer first, then lock).
 */

#pragma once

#include <fcm/detail/posix.hpp>
#include <fcm/error.hpp>
#include <fcm/payload.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>

namespace fcm {

enum class TransportMode { shared_dir, local_dir };

inline std::string_view to_string(TransportMode mode) noexcept {
  return mode == TransportMode::shared_dir ? "shared-dir" : "local-dir";
}

inline TransportMode parse_transport_mode(std::string_view text) {
  if (text == "shared-dir") return TransportMode::shared_dir;
  if (text == "local-dir") return TransportMode::local_dir;
  throw Error(Errc::invalid_argument, "unknown transport mode '" + std::string(text) + "'");
}

inline constexpr std::string_view kDefaultRemoteCopy = "mkdir -p {dir} && cp {file} {dir}/";

struct TransportConfig {
  TransportMode mode = TransportMode::shared_dir;
  std::filesystem::path mailbox_root;
  // Placeholders {file}, {host}, {dir}; substituted values are shell-quoted.
  std::string remote_copy{kDefaultRemoteCopy};
  std::chrono::microseconds poll_initial{1000};
  std::chrono::microseconds poll_max{50000};
  // Empty means block forever.
  std::optional<std::chrono::milliseconds> recv_timeout;
  bool sync_on_deposit = false;

  void validate() const {
    if (mailbox_root.empty()) throw Error(Errc::invalid_argument, "mailbox root not set");
    std::error_code ec;
    if (!std::filesystem::is_directory(mailbox_root, ec)) {
      throw Error(Errc::io_failure, "mailbox root " + mailbox_root.string() + " is not a directory");
    }
    if (::access(mailbox_root.c_str(), W_OK) != 0) {
      throw Error(Errc::io_failure, "mailbox root " + mailbox_root.string() + " is not writable");
    }
    if (poll_initial > poll_max) throw Error(Errc::invalid_argument, "poll-initial exceeds poll-max");
  }
};

struct Envelope {
  int source = 0;
  int dest = 0;
  std::uint32_t tag = 0;
};

inline constexpr std::uint32_t kMaxTag = 1u << 31;

// Where the destination mailbox lives, for local-dir transfers.
struct DestLocator {
  std::string host = "localhost";
};

inline std::string message_stem(const Envelope& env) {
  return "t" + std::to_string(env.tag) + "_s" + std::to_string(env.source) + "_d" + std::to_string(env.dest);
}

inline std::filesystem::path mailbox_dir(const TransportConfig& cfg, int rank) {
  return cfg.mailbox_root / ("rank" + std::to_string(rank));
}

inline std::filesystem::path staging_dir(const TransportConfig& cfg, int rank) {
  return cfg.mailbox_root / "staging" / ("rank" + std::to_string(rank));
}

namespace detail {

inline void check_envelope(const Envelope& env) {
  if (env.source < 0 || env.dest < 0) throw Error(Errc::invalid_argument, "negative rank in envelope");
  if (env.tag >= kMaxTag) throw Error(Errc::invalid_argument, "tag must be below 2^31");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_failure, "create " + dir.string() + ": " + ec.message());
}

// Buffer under a hidden temp name, then rename, then lock.
inline void publish(const std::filesystem::path& dir, const std::string& stem, std::span<const std::byte> frame,
                    bool sync) {
  const auto buf = dir / (stem + ".buf");
  const auto lock = dir / (stem + ".lock");
  if (path_exists(buf)) throw Error(Errc::duplicate_message, buf.string() + " already exists");
  const auto tmp = dir / ("." + stem + ".tmp");
  write_file(tmp, frame, sync);
  if (::rename(tmp.c_str(), buf.c_str()) != 0) throw io_error("rename", tmp);
  if (!create_exclusive(lock)) throw Error(Errc::duplicate_message, lock.string() + " already exists");
}

inline void remote_copy(const TransportConfig& cfg, const std::filesystem::path& file, const DestLocator& to,
                        const std::filesystem::path& dir) {
  const std::string cmd = substitute(cfg.remote_copy, {{"file", shell_quote(file.string())},
                                                       {"host", shell_quote(to.host)},
                                                       {"dir", shell_quote(dir.string())}});
  const int status = run_shell(cmd);
  if (status != 0) {
    throw Error(Errc::remote_copy_failure, "'" + cmd + "' exited with status " + std::to_string(status));
  }
}

}  // namespace detail

/// One-sided send: returns once the message files are in the destination
/// mailbox. Fails with duplicate-message if the triple is still in flight.
inline void deposit(const TransportConfig& cfg, const Envelope& env, std::span<const std::byte> frame,
                    const DestLocator& to = {}) {
  detail::check_envelope(env);
  const auto stem = message_stem(env);
  const auto dest_dir = mailbox_dir(cfg, env.dest);

  if (cfg.mode == TransportMode::shared_dir) {
    detail::ensure_dir(dest_dir);
    detail::publish(dest_dir, stem, frame, cfg.sync_on_deposit);
    return;
  }

  // Only detectable when the destination path is reachable from here.
  if (detail::path_exists(dest_dir / (stem + ".buf"))) {
    throw Error(Errc::duplicate_message, (dest_dir / (stem + ".buf")).string() + " already exists");
  }
  const auto stage = staging_dir(cfg, env.source);
  detail::ensure_dir(stage);
  const auto buf = stage / (stem + ".buf");
  const auto lock = stage / (stem + ".lock");
  std::filesystem::remove(buf);
  std::filesystem::remove(lock);
  detail::publish(stage, stem, frame, cfg.sync_on_deposit);
  try {
    detail::remote_copy(cfg, buf, to, dest_dir);
    detail::remote_copy(cfg, lock, to, dest_dir);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(buf, ec);
    std::filesystem::remove(lock, ec);
    throw;
  }
  std::filesystem::remove(buf);
  std::filesystem::remove(lock);
}

/// Blocking receive of the message addressed by `env` (caller is env.dest).
/// Polls for the lock with exponential backoff from poll_initial to poll_max.
inline Bytes consume(const TransportConfig& cfg, const Envelope& env,
                     std::optional<std::chrono::milliseconds> timeout) {
  detail::check_envelope(env);
  const auto dir = mailbox_dir(cfg, env.dest);
  const auto stem = message_stem(env);
  const auto buf = dir / (stem + ".buf");
  const auto lock = dir / (stem + ".lock");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto backoff = cfg.poll_initial;
  while (!detail::path_exists(lock)) {
    if (timeout && clock::now() - start >= *timeout) {
      throw Error(Errc::timeout_expired, "no message " + stem + " after " + std::to_string(timeout->count()) + " ms");
    }
    auto nap = backoff;
    if (timeout) {
      const auto left = std::chrono::duration_cast<std::chrono::microseconds>(*timeout - (clock::now() - start));
      nap = std::clamp(nap, std::chrono::microseconds{0}, std::max(left, std::chrono::microseconds{0}));
    }
    if (nap.count() > 0) {
      std::this_thread::sleep_for(nap);
    } else {
      std::this_thread::yield();
    }
    backoff = std::min(backoff * 2, cfg.poll_max);
  }
  Bytes frame = detail::read_file(buf);
  if (::unlink(buf.c_str()) != 0) throw detail::io_error("unlink", buf);
  if (::unlink(lock.c_str()) != 0) throw detail::io_error("unlink", lock);
  return frame;
}

inline Bytes consume(const TransportConfig& cfg, const Envelope& env) { return consume(cfg, env, cfg.recv_timeout); }

/// True iff the lock for (source -> self, tag) is present. Touches nothing.
inline bool probe(const TransportConfig& cfg, int self, int source, std::uint32_t tag) {
  const Envelope env{source, self, tag};
  detail::check_envelope(env);
  return detail::path_exists(mailbox_dir(cfg, self) / (message_stem(env) + ".lock"));
}

/// Removes every message file (buffers, locks, stale temporaries) from a
/// rank's mailbox and staging area. Returns how many files were removed.
inline std::size_t purge_mailbox(const TransportConfig& cfg, int rank) {
  std::size_t removed = 0;
  for (const auto& dir : {mailbox_dir(cfg, rank), staging_dir(cfg, rank)}) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) continue;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (ext == ".buf" || ext == ".lock" || ext == ".tmp") {
        if (std::filesystem::remove(entry.path(), ec)) ++removed;
        if (ec) throw Error(Errc::io_failure, "remove " + entry.path().string() + ": " + ec.message());
      }
    }
  }
  return removed;
}

}  // namespace fcm

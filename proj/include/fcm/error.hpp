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

#include <stdexcept>
#include <string>
#include <string_view>

namespace fcm {

enum class Errc {
  dimension_mismatch,
  bad_magic,
  truncated_frame,
  unsupported_version,
  corrupt_frame,
  duplicate_message,
  io_failure,
  remote_copy_failure,
  timeout_expired,
  missing_environment,
  inconsistent_node_map,
  invalid_dest,
  reserved_tag,
  invalid_argument,
  size_mismatch,
  duplicate_rank,
  too_many_dims,
  out_of_range,
  rank_not_in_map,
  usage,
  spawn_failure,
  empty_group,
  corrupt_payload,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::bad_magic: return "bad-magic";
    case Errc::truncated_frame: return "truncated-frame";
    case Errc::unsupported_version: return "unsupported-version";
    case Errc::corrupt_frame: return "corrupt-frame";
    case Errc::duplicate_message: return "duplicate-message";
    case Errc::io_failure: return "io-failure";
    case Errc::remote_copy_failure: return "remote-copy-failure";
    case Errc::timeout_expired: return "timeout-expired";
    case Errc::missing_environment: return "missing-environment";
    case Errc::inconsistent_node_map: return "inconsistent-node-map";
    case Errc::invalid_dest: return "invalid-dest";
    case Errc::reserved_tag: return "reserved-tag";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::size_mismatch: return "size-mismatch";
    case Errc::duplicate_rank: return "duplicate-rank";
    case Errc::too_many_dims: return "too-many-dims";
    case Errc::out_of_range: return "out-of-range";
    case Errc::rank_not_in_map: return "rank-not-in-map";
    case Errc::usage: return "usage";
    case Errc::spawn_failure: return "spawn-failure";
    case Errc::empty_group: return "empty-group";
    case Errc::corrupt_payload: return "corrupt-payload";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fcm

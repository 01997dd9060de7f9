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

#include <cstddef>

namespace fcm {

// Splitting n items into g contiguous parts: part j is [c_j, c_{j+1}) with
// c_j = floor(j*n/g). Used for block distributions and hostfile fill alike.

constexpr std::size_t block_cut(std::size_t part, std::size_t n, std::size_t parts) noexcept {
  return part * n / parts;
}

// Inverse of block_cut: the part j with c_j <= i < c_{j+1}. Requires i < n.
constexpr std::size_t block_part_of(std::size_t i, std::size_t n, std::size_t parts) noexcept {
  return ((i + 1) * parts - 1) / n;
}

}  // namespace fcm

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
 * On-disk message frame.
 *
 *   offset  size      field
 *   0       4         magic "FCMP"
 *   4       2         version (u16 LE, currently 1)
 *   6       1         kind (0 = raw bytes, 1 = numeric array)
 *   7       1         element type (0 = float64, 1 = int64, 2 = uint8)
 *   8       1         ndim (0..4)
 *   9       8*ndim    dims (u64 LE each)
 *   ...               body
 *
 * A numeric array body is element-size * prod(dims) bytes of little-endian
 * elements in row-major order (ndim = 0 is a scalar). A raw body runs to the
 * end of the frame and must have ndim = 0.
 */

#pragma once

#include <fcm/error.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace fcm {

static_assert(std::endian::native == std::endian::little,
              "frame bodies are copied verbatim and assume a little-endian host");

using Bytes = std::vector<std::byte>;

enum class PayloadKind : std::uint8_t { raw_bytes = 0, numeric_array = 1 };
enum class ElementType : std::uint8_t { float64 = 0, int64 = 1, uint8 = 2 };

inline constexpr std::array<std::byte, 4> kFrameMagic{std::byte{'F'}, std::byte{'C'}, std::byte{'M'},
                                                      std::byte{'P'}};
inline constexpr std::uint16_t kFrameVersion = 1;
inline constexpr std::size_t kFrameFixedHeader = 9;
inline constexpr std::size_t kMaxDims = 4;

constexpr std::size_t element_size(ElementType type) noexcept {
  switch (type) {
    case ElementType::float64: return 8;
    case ElementType::int64: return 8;
    case ElementType::uint8: return 1;
  }
  return 0;
}

template <class T>
struct element_type_of;
template <>
struct element_type_of<double> : std::integral_constant<ElementType, ElementType::float64> {};
template <>
struct element_type_of<std::int64_t> : std::integral_constant<ElementType, ElementType::int64> {};
template <>
struct element_type_of<std::uint8_t> : std::integral_constant<ElementType, ElementType::uint8> {};

template <class T>
concept Element = requires { element_type_of<T>::value; };

template <Element T>
inline constexpr ElementType element_type_v = element_type_of<T>::value;

/// Decoded form of a frame.
struct Payload {
  PayloadKind kind = PayloadKind::raw_bytes;
  ElementType type = ElementType::uint8;
  std::vector<std::uint64_t> dims;
  Bytes body;

  static Payload raw(Bytes bytes) { return {PayloadKind::raw_bytes, ElementType::uint8, {}, std::move(bytes)}; }

  static Payload raw(std::string_view text) {
    Bytes bytes(text.size());
    std::memcpy(bytes.data(), text.data(), text.size());
    return raw(std::move(bytes));
  }

  template <Element T>
  static Payload array(std::span<const T> values, std::vector<std::uint64_t> shape) {
    Payload p{PayloadKind::numeric_array, element_type_v<T>, std::move(shape), Bytes(values.size_bytes())};
    if (!values.empty()) std::memcpy(p.body.data(), values.data(), values.size_bytes());
    return p;
  }

  template <Element T>
  static Payload array(std::span<const T> values) {
    return array(values, {static_cast<std::uint64_t>(values.size())});
  }

  template <Element T>
  std::vector<T> as_vector() const {
    if (kind != PayloadKind::numeric_array || type != element_type_v<T>) {
      throw Error(Errc::invalid_argument, "payload does not hold the requested element type");
    }
    std::vector<T> out(body.size() / sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), body.data(), out.size() * sizeof(T));
    return out;
  }

  friend bool operator==(const Payload&, const Payload&) = default;
};

namespace detail {

inline void put_le(Bytes& out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
}

inline void store_le(std::span<std::byte> out, std::size_t offset, std::uint64_t value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) out[offset + i] = static_cast<std::byte>((value >> (8 * i)) & 0xFF);
}

inline std::uint64_t get_le(std::span<const std::byte> in, std::size_t offset, std::size_t width) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    value |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(in[offset + i])) << (8 * i);
  }
  return value;
}

// Element count of a shape, or nothing on overflow.
inline bool checked_extent(std::span<const std::uint64_t> dims, std::uint64_t& count) {
  count = 1;
  for (auto d : dims) {
    if (d != 0 && count > UINT64_MAX / d) return false;
    count *= d;
  }
  return true;
}

}  // namespace detail

inline Bytes encode_payload(PayloadKind kind, ElementType type, std::span<const std::uint64_t> dims,
                            std::span<const std::byte> body) {
  if (dims.size() > kMaxDims) {
    throw Error(Errc::too_many_dims, "frame supports at most 4 dimensions, got " + std::to_string(dims.size()));
  }
  if (kind == PayloadKind::raw_bytes && !dims.empty()) {
    throw Error(Errc::dimension_mismatch, "raw payloads carry no dimensions");
  }
  if (kind == PayloadKind::numeric_array) {
    std::uint64_t count = 0;
    if (!detail::checked_extent(dims, count) || count > UINT64_MAX / element_size(type) ||
        count * element_size(type) != body.size()) {
      throw Error(Errc::dimension_mismatch,
                  "body of " + std::to_string(body.size()) + " bytes does not match the declared shape");
    }
  }
  const std::size_t header = kFrameFixedHeader + 8 * dims.size();
  Bytes out(header + body.size());
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  detail::store_le(out, 4, kFrameVersion, 2);
  out[6] = static_cast<std::byte>(kind);
  out[7] = static_cast<std::byte>(type);
  out[8] = static_cast<std::byte>(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) detail::store_le(out, kFrameFixedHeader + 8 * k, dims[k], 8);
  if (!body.empty()) std::memcpy(out.data() + header, body.data(), body.size());
  return out;
}

inline Bytes encode_payload(const Payload& p) { return encode_payload(p.kind, p.type, p.dims, p.body); }

inline Payload decode_payload(std::span<const std::byte> frame) {
  const std::size_t magic_bytes = std::min(frame.size(), kFrameMagic.size());
  if (!std::equal(frame.begin(), frame.begin() + magic_bytes, kFrameMagic.begin())) {
    throw Error(Errc::bad_magic, "frame does not start with the FCMP magic");
  }
  if (frame.size() < kFrameFixedHeader) {
    throw Error(Errc::truncated_frame, "frame shorter than its fixed header");
  }
  const auto version = detail::get_le(frame, 4, 2);
  if (version != kFrameVersion) {
    throw Error(Errc::unsupported_version, "frame version " + std::to_string(version));
  }
  const auto kind = std::to_integer<std::uint8_t>(frame[6]);
  const auto type = std::to_integer<std::uint8_t>(frame[7]);
  const auto ndim = std::to_integer<std::uint8_t>(frame[8]);
  if (kind > 1 || type > 2 || ndim > kMaxDims) {
    throw Error(Errc::corrupt_frame, "invalid kind/type/ndim field");
  }
  Payload p;
  p.kind = static_cast<PayloadKind>(kind);
  p.type = static_cast<ElementType>(type);
  if (p.kind == PayloadKind::raw_bytes && ndim != 0) {
    throw Error(Errc::corrupt_frame, "raw payload with dimensions");
  }
  const std::size_t header = kFrameFixedHeader + 8 * std::size_t{ndim};
  if (frame.size() < header) throw Error(Errc::truncated_frame, "frame ends inside its dims");
  p.dims.resize(ndim);
  for (std::size_t k = 0; k < ndim; ++k) p.dims[k] = detail::get_le(frame, kFrameFixedHeader + 8 * k, 8);

  const std::size_t available = frame.size() - header;
  if (p.kind == PayloadKind::numeric_array) {
    std::uint64_t count = 0;
    if (!detail::checked_extent(p.dims, count) || count > UINT64_MAX / element_size(p.type)) {
      throw Error(Errc::corrupt_frame, "declared shape overflows");
    }
    const std::uint64_t expected = count * element_size(p.type);
    if (available < expected) throw Error(Errc::truncated_frame, "body shorter than the declared shape");
    if (available > expected) throw Error(Errc::corrupt_frame, "trailing bytes after body");
  }
  p.body.assign(frame.begin() + static_cast<std::ptrdiff_t>(header), frame.end());
  return p;
}

}  // namespace fcm

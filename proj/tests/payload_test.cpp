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

#include <fcm/payload.hpp>

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace fcm;

namespace {

Bytes bytes_of(std::initializer_list<int> values) {
  Bytes out;
  for (int v : values) out.push_back(static_cast<std::byte>(v));
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

TEST(Payload, RawFrameLayout) {
  const auto body = bytes_of({'a', 'b', 'c'});
  const auto frame = encode_payload(PayloadKind::raw_bytes, ElementType::uint8, {}, body);
  const auto expected = bytes_of({'F', 'C', 'M', 'P', 1, 0, 0, 2, 0, 'a', 'b', 'c'});
  EXPECT_EQ(frame, expected);
}

TEST(Payload, ArrayFrameLayout) {
  const std::vector<double> values{1.0, 2.0, 3.0, 4.0};
  const std::vector<std::uint64_t> dims{2, 2};
  const auto body = Payload::array<double>(values, dims).body;
  ASSERT_EQ(body.size(), 32u);
  const auto frame = encode_payload(PayloadKind::numeric_array, ElementType::float64, dims, body);
  ASSERT_EQ(frame.size(), 9u + 16u + 32u);
  EXPECT_EQ(frame[6], std::byte{1});
  EXPECT_EQ(frame[7], std::byte{0});
  EXPECT_EQ(frame[8], std::byte{2});
  // dims little-endian
  EXPECT_EQ(frame[9], std::byte{2});
  for (int i = 10; i < 17; ++i) EXPECT_EQ(frame[i], std::byte{0});
  EXPECT_EQ(frame[17], std::byte{2});
  EXPECT_TRUE(std::equal(body.begin(), body.end(), frame.begin() + 25));
}

TEST(Payload, DimensionMismatch) {
  const Bytes body(24);
  const std::vector<std::uint64_t> dims{2, 2};
  EXPECT_EQ(error_code_of([&] { encode_payload(PayloadKind::numeric_array, ElementType::float64, dims, body); }),
            Errc::dimension_mismatch);
}

TEST(Payload, TooManyDims) {
  const std::vector<std::uint64_t> dims{1, 1, 1, 1, 1};
  EXPECT_EQ(error_code_of([&] { encode_payload(PayloadKind::numeric_array, ElementType::uint8, dims, Bytes(1)); }),
            Errc::too_many_dims);
}

TEST(Payload, EmptyRawRoundTrip) {
  const Payload empty = Payload::raw(Bytes{});
  EXPECT_EQ(decode_payload(encode_payload(empty)), empty);
}

TEST(Payload, ScalarIsOneElement) {
  const double x = 2.5;
  const auto p = Payload::array<double>(std::span<const double>(&x, 1), {});
  const auto frame = encode_payload(p);
  EXPECT_EQ(frame.size(), 9u + 8u);
  EXPECT_EQ(decode_payload(frame), p);
}

TEST(Payload, BadMagic) {
  auto frame = encode_payload(Payload::raw("hello"));
  frame[0] = std::byte{'X'};
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::bad_magic);
}

TEST(Payload, Truncated) {
  const std::vector<std::int64_t> v{1, 2, 3};
  auto frame = encode_payload(Payload::array<std::int64_t>(v));
  frame.pop_back();
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::truncated_frame);
  frame.resize(12);  // cut inside dims
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::truncated_frame);
  frame.resize(3);
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::truncated_frame);
}

TEST(Payload, UnsupportedVersion) {
  auto frame = encode_payload(Payload::raw("x"));
  frame[4] = std::byte{2};
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::unsupported_version);
}

TEST(Payload, TrailingBytesRejected) {
  const std::vector<std::uint8_t> v{1, 2};
  auto frame = encode_payload(Payload::array<std::uint8_t>(v));
  frame.push_back(std::byte{0});
  EXPECT_EQ(error_code_of([&] { decode_payload(frame); }), Errc::corrupt_frame);
}

// Property: decode(encode(x)) == x over random shapes and element types.
template <class T>
void fuzz_round_trip(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ndim_dist(0, 4);
  std::uniform_int_distribution<std::uint64_t> extent(0, 6);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> dims(static_cast<std::size_t>(ndim_dist(rng)));
    std::uint64_t n = 1;
    for (auto& d : dims) {
      d = extent(rng);
      n *= d;
    }
    Payload p{PayloadKind::numeric_array, element_type_v<T>, dims, Bytes(n * sizeof(T))};
    for (auto& b : p.body) b = static_cast<std::byte>(byte(rng));
    const auto frame = encode_payload(p);
    ASSERT_EQ(decode_payload(frame), p) << "trial " << trial;
  }
}

TEST(Payload, FuzzRoundTripAllTypes) {
  std::mt19937_64 rng(20240601);
  fuzz_round_trip<double>(rng);
  fuzz_round_trip<std::int64_t>(rng);
  fuzz_round_trip<std::uint8_t>(rng);
}

TEST(Payload, TypedAccess) {
  const std::vector<std::int64_t> v{-1, 0, 7};
  const auto p = decode_payload(encode_payload(Payload::array<std::int64_t>(v)));
  EXPECT_EQ(p.as_vector<std::int64_t>(), v);
  EXPECT_THROW(p.as_vector<double>(), Error);
}

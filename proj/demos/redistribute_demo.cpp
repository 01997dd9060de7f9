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

// Moves a seeded 2-D array from row blocks with a one-cell halo to a
// column-cyclic layout and back, then checks the result on the leader.
//
//   fcm-run --triples 2x2 --root /tmp/fcm-demo -- redistribute_demo 12 8

#include <fcm/fcm.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  const std::size_t rows = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 12;
  const std::size_t cols = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;
  try {
    auto comm = fcm::Comm::init();
    const auto p = static_cast<std::size_t>(comm.size());
    std::vector<int> everyone(p);
    for (std::size_t r = 0; r < p; ++r) everyone[r] = static_cast<int>(r);

    using fcm::pgas::DimDist;
    const auto rows_map = fcm::pgas::make_map({p, 1}, {DimDist::block(1), DimDist::block()}, everyone);
    const auto cols_map = fcm::pgas::make_map({1, p}, {DimDist::block(), DimDist::cyclic()}, everyone);
    const std::vector<std::size_t> dims{rows, cols};

    auto a = fcm::pgas::rand<double>(dims, rows_map, comm.rank(), 7);
    fcm::pgas::halo_sync(comm, a);
    const auto b = fcm::pgas::redistribute(comm, a, cols_map);
    const auto c = fcm::pgas::redistribute(comm, b, rows_map);
    const auto whole = fcm::pgas::agg(comm, c);

    std::cout << "rank " << comm.rank() << " rows " << fcm::pgas::format_extent(a.owned_extent()) << " cols "
              << fcm::pgas::format_extent(b.owned_extent()) << "\n";
    fcm::barrier(comm);
    if (whole) {
      const bool same = *whole == fcm::pgas::rand<double>(dims, 7);
      std::cout << "round trip over " << p << " ranks: " << (same ? "identical" : "MISMATCH") << "\n";
      return same ? 0 : 1;
    }
    return 0;
  } catch (const fcm::Error& e) {
    std::cerr << "redistribute_demo: " << e.what() << "\n";
    return 1;
  }
}

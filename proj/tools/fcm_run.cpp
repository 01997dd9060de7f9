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

// fcm-run: start an SPMD program. Exit status is the largest rank status.

#include <fcm/launcher.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"fcm-run: launch one process per rank with FCM_* set"};
  fcm::LaunchOptions options;
  fcm::add_launch_options(app, options);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto plan = fcm::resolve_plan(options);
    if (plan.dry_run) {
      std::cout << fcm::describe_plan(plan);
      return 0;
    }
    if (!plan.emit_batch.empty()) {
      std::ofstream out(plan.emit_batch);
      out << fcm::batch_script(plan, argv[0]);
      if (!out) {
        std::cerr << "fcm-run: cannot write " << plan.emit_batch << "\n";
        return 1;
      }
      return 0;
    }
    const auto statuses = fcm::launch(plan);
    int worst = 0;
    for (std::size_t r = 0; r < statuses.size(); ++r) {
      if (statuses[r] != 0) std::cerr << "fcm-run: rank " << r << " exited with status " << statuses[r] << "\n";
      worst = std::max(worst, statuses[r]);
    }
    return worst;
  } catch (const fcm::Error& e) {
    std::cerr << "fcm-run: " << e.what() << "\n";
    return e.code() == fcm::Errc::usage ? 2 : 1;
  }
}

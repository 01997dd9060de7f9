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

// The launcher (fcm/launcher.hpp) is left out: it pulls in the CLI parser.

#include <fcm/bench/harness.hpp>
#include <fcm/bench/records.hpp>
#include <fcm/collectives.hpp>
#include <fcm/comm.hpp>
#include <fcm/error.hpp>
#include <fcm/payload.hpp>
#include <fcm/pgas/dist_array.hpp>
#include <fcm/pgas/dist_map.hpp>
#include <fcm/pgas/ops.hpp>
#include <fcm/topology.hpp>
#include <fcm/transport.hpp>

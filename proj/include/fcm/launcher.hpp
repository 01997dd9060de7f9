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
 * SPMD launcher: starts one process per rank with the FCM_* variables set.
 *
 * Ranks on node 0 are started locally. Ranks on other nodes go through a
 * spawn-command template when one is given, e.g.
 *
 *   ssh {host} env {env} {cmd}
 *
 * where {env} expands to the rank's quoted NAME=value pairs, {cmd} to the
 * quoted program line, {host} to the node's host name and {rank} to the
 * rank. Without a template every rank is local, which emulates a
 * multi-node run on one machine.
 */

#pragma once

#include <fcm/comm.hpp>
#include <fcm/detail/posix.hpp>
#include <fcm/error.hpp>
#include <fcm/topology.hpp>
#include <fcm/transport.hpp>

#include <CLI11.hpp>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <sched.h>
#include <sys/wait.h>
#include <unistd.h>

namespace fcm {

enum class PinPolicy { none, alternate_sockets };

inline std::string_view to_string(PinPolicy p) noexcept {
  return p == PinPolicy::none ? "none" : "alternate-sockets";
}

inline PinPolicy parse_pin_policy(std::string_view text) {
  if (text == "none") return PinPolicy::none;
  if (text == "alternate-sockets") return PinPolicy::alternate_sockets;
  throw Error(Errc::usage, "unknown pin policy '" + std::string(text) + "'");
}

inline constexpr const char* kEnvPinSocket = "FCM_PIN_SOCKET";

struct PinHint {
  int socket = 0;
  friend bool operator==(const PinHint&, const PinHint&) = default;
};

/// Advisory placement: with alternate-sockets, even node-local ranks go to
/// socket 0 and odd ones to socket 1.
inline std::optional<PinHint> pin_hint(int rank, int ppn, PinPolicy policy) {
  if (policy == PinPolicy::none || ppn <= 0) return std::nullopt;
  return PinHint{(rank % ppn) % 2};
}

/// CPUs reporting `socket` as their physical package; empty when the
/// platform does not expose topology.
inline std::vector<int> socket_cpus(int socket) {
  std::vector<int> out;
  for (int cpu = 0;; ++cpu) {
    const auto dir = std::filesystem::path("/sys/devices/system/cpu") / ("cpu" + std::to_string(cpu));
    if (!std::filesystem::exists(dir)) break;
    std::ifstream in(dir / "topology" / "physical_package_id");
    int package = -1;
    if (in >> package && package == socket) out.push_back(cpu);
  }
  return out;
}

/// Best effort; silently does nothing if the socket has no CPUs here.
inline void apply_pin(const PinHint& hint) {
  const auto cpus = socket_cpus(hint.socket);
  if (cpus.empty()) return;
  cpu_set_t set;
  CPU_ZERO(&set);
  for (int c : cpus) CPU_SET(c, &set);
  ::sched_setaffinity(0, sizeof(set), &set);
}

/// Raw command-line values, before validation.
struct LaunchOptions {
  std::string triples;
  std::string hostfile;
  int size = 0;
  std::string root;
  std::string mode = "shared-dir";
  std::string pin = "none";
  std::string spawn_cmd;
  bool dry_run = false;
  std::string emit_batch;
  std::vector<std::string> program;
};

struct LaunchPlan {
  std::vector<std::string> program;
  NodeMap node_map;
  int size = 0;
  int threads = 1;  // recorded only
  NodeTopology topology;
  std::filesystem::path root;
  TransportMode mode = TransportMode::shared_dir;
  PinPolicy pin = PinPolicy::none;
  std::string spawn_cmd;  // empty: every rank local
  bool dry_run = false;
  std::filesystem::path emit_batch;
};

inline void add_launch_options(CLI::App& app, LaunchOptions& o) {
  auto* triples = app.add_option("--triples", o.triples, "nodes x processes-per-node [x threads], e.g. 2x4");
  auto* hostfile = app.add_option("--hostfile", o.hostfile, "one host per line; ranks are block-filled");
  triples->excludes(hostfile);
  app.add_option("--size", o.size, "rank count (default: implied by --triples, or one per host)");
  app.add_option("--root", o.root, "mailbox root directory")->required();
  app.add_option("--mode", o.mode, "shared-dir or local-dir")->capture_default_str();
  app.add_option("--pin", o.pin, "none or alternate-sockets")->capture_default_str();
  app.add_option("--spawn-cmd", o.spawn_cmd, "template for ranks off node 0: {host} {env} {cmd} {rank}");
  app.add_flag("--dry-run", o.dry_run, "print the plan and exit");
  app.add_option("--emit-batch", o.emit_batch, "write a batch script to FILE and exit");
  app.add_option("program", o.program, "program and arguments, after --")->required();
}

inline LaunchPlan resolve_plan(const LaunchOptions& o) {
  if (o.triples.empty() == o.hostfile.empty()) throw Error(Errc::usage, "give exactly one of --triples or --hostfile");
  if (o.program.empty()) throw Error(Errc::usage, "no program given");
  if (o.root.empty()) throw Error(Errc::usage, "--root is required");
  LaunchPlan plan;
  plan.program = o.program;
  try {
    if (!o.triples.empty()) {
      const auto t = parse_triples(o.triples);
      plan.node_map = t;
      plan.threads = t.threads;
      if (o.size != 0 && o.size != t.size()) {
        throw Error(Errc::usage, "--size " + std::to_string(o.size) + " conflicts with --triples " + o.triples +
                                     " (" + std::to_string(t.size()) + " ranks)");
      }
      plan.size = t.size();
    } else {
      const auto hf = read_hostfile(o.hostfile);
      plan.node_map = hf;
      plan.size = o.size != 0 ? o.size : static_cast<int>(hf.hosts.size());
    }
    if (plan.size <= 0) throw Error(Errc::usage, "--size must be positive");
    plan.topology = build_topology(plan.node_map, plan.size);
    plan.mode = parse_transport_mode(o.mode);
    plan.pin = parse_pin_policy(o.pin);
  } catch (const Error& e) {
    if (e.code() == Errc::usage) throw;
    throw Error(Errc::usage, e.what());
  }
  std::error_code ec;
  std::filesystem::create_directories(o.root, ec);
  if (ec || !std::filesystem::is_directory(o.root)) {
    throw Error(Errc::usage, "cannot create mailbox root " + o.root + ": " + ec.message());
  }
  plan.root = std::filesystem::absolute(o.root);
  plan.spawn_cmd = o.spawn_cmd;
  plan.dry_run = o.dry_run;
  plan.emit_batch = o.emit_batch;
  return plan;
}

/// Parses a launcher command line (without the program name). Every parse
/// problem surfaces as a usage error.
inline LaunchPlan plan_launch(const std::vector<std::string>& args) {
  CLI::App app{"fcm-run"};
  LaunchOptions o;
  add_launch_options(app, o);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::usage, e.what());
  }
  return resolve_plan(o);
}

inline int local_rank(const NodeTopology& topo, int rank) {
  const auto& node = topo.nodes[static_cast<std::size_t>(topo.node_of[static_cast<std::size_t>(rank)])];
  return rank - node.front();
}

inline int node_size(const NodeTopology& topo, int rank) {
  return static_cast<int>(topo.nodes[static_cast<std::size_t>(topo.node_of[static_cast<std::size_t>(rank)])].size());
}

inline Environment rank_environment(const LaunchPlan& plan, int rank) {
  Environment env{{kEnvRank, std::to_string(rank)},
                  {kEnvSize, std::to_string(plan.size)},
                  {kEnvRoot, plan.root.string()},
                  {kEnvMode, std::string(to_string(plan.mode))},
                  {kEnvNodeMap, format_node_map(plan.node_map)}};
  if (auto hint = pin_hint(local_rank(plan.topology, rank), node_size(plan.topology, rank), plan.pin)) {
    env[kEnvPinSocket] = std::to_string(hint->socket);
  }
  return env;
}

inline bool spawns_remotely(const LaunchPlan& plan, int rank) {
  return !plan.spawn_cmd.empty() && plan.topology.node_of[static_cast<std::size_t>(rank)] != 0;
}

inline std::string quoted_command(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) out += (out.empty() ? "" : " ") + detail::shell_quote(a);
  return out;
}

/// The shell line a remote rank is started with.
inline std::string remote_command(const LaunchPlan& plan, int rank) {
  std::string env;
  for (const auto& [k, v] : rank_environment(plan, rank)) env += (env.empty() ? "" : " ") + detail::shell_quote(k + "=" + v);
  return detail::substitute(plan.spawn_cmd, {{"host", detail::shell_quote(plan.topology.host_of(rank))},
                                             {"env", env},
                                             {"cmd", quoted_command(plan.program)},
                                             {"rank", std::to_string(rank)}});
}

inline std::string describe_plan(const LaunchPlan& plan) {
  std::ostringstream os;
  os << "size " << plan.size << "\n";
  os << "nodes " << plan.topology.node_count() << "\n";
  os << "node-of";
  for (int n : plan.topology.node_of) os << " " << n;
  os << "\nhosts";
  for (const auto& h : plan.topology.hosts) os << " " << h;
  os << "\nthreads " << plan.threads << "\n";
  os << "root " << plan.root.string() << "\n";
  os << "mode " << to_string(plan.mode) << "\n";
  os << "pin " << to_string(plan.pin) << "\n";
  os << "program " << quoted_command(plan.program) << "\n";
  for (int r = 0; r < plan.size; ++r) {
    os << "rank " << r << " host " << plan.topology.host_of(r);
    if (spawns_remotely(plan, r)) {
      os << " remote " << remote_command(plan, r);
    } else {
      for (const auto& [k, v] : rank_environment(plan, r)) os << " " << k << "=" << v;
    }
    os << "\n";
  }
  return os.str();
}

/// Slurm-style script that would rerun this launch inside an allocation.
inline std::string batch_script(const LaunchPlan& plan, const std::string& launcher = "fcm-run") {
  std::ostringstream os;
  os << "#!/bin/sh\n";
  os << "#SBATCH --nodes=" << plan.topology.node_count() << "\n";
  os << "#SBATCH --ntasks=" << plan.size << "\n";
  os << "#SBATCH --ntasks-per-node=" << plan.topology.max_node_size() << "\n";
  if (plan.threads > 1) os << "#SBATCH --cpus-per-task=" << plan.threads << "\n";
  os << "set -e\n";
  std::vector<std::string> cmd{launcher};
  if (const auto* t = std::get_if<Triples>(&plan.node_map)) {
    cmd.insert(cmd.end(), {"--triples", std::to_string(t->nodes) + "x" + std::to_string(t->ppn) + "x" +
                                            std::to_string(t->threads)});
  } else {
    cmd.insert(cmd.end(), {"--hostfile", std::filesystem::absolute(std::get<Hostfile>(plan.node_map).path).string(),
                           "--size", std::to_string(plan.size)});
  }
  cmd.insert(cmd.end(), {"--root", plan.root.string(), "--mode", std::string(to_string(plan.mode)), "--pin",
                         std::string(to_string(plan.pin))});
  if (!plan.spawn_cmd.empty()) cmd.insert(cmd.end(), {"--spawn-cmd", plan.spawn_cmd});
  cmd.push_back("--");
  cmd.insert(cmd.end(), plan.program.begin(), plan.program.end());
  os << quoted_command(cmd) << "\n";
  return os.str();
}

namespace detail {

/// Absolute path of an executable, searching PATH for bare names.
inline std::optional<std::string> find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::istringstream dirs(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    const auto candidate = (std::filesystem::path(dir.empty() ? "." : dir) / name).string();
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return std::nullopt;
}

inline std::vector<std::string> merged_environment(const Environment& extra) {
  Environment all;
  for (char** e = environ; *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos) all[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  for (const auto& [k, v] : extra) all[k] = v;
  std::vector<std::string> out;
  for (const auto& [k, v] : all) out.push_back(k + "=" + v);
  return out;
}

inline std::vector<char*> c_strings(std::vector<std::string>& v) {
  std::vector<char*> out;
  for (auto& s : v) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

}  // namespace detail

/// Starts every rank, waits for all, and returns exit statuses in rank order
/// (128 + signal for signalled ranks). Mailboxes are purged first.
inline std::vector<int> launch(const LaunchPlan& plan) {
  TransportConfig cfg;
  cfg.mailbox_root = plan.root;
  cfg.mode = plan.mode;
  for (int r = 0; r < plan.size; ++r) purge_mailbox(cfg, r);

  bool any_local = false;
  for (int r = 0; r < plan.size; ++r) any_local = any_local || !spawns_remotely(plan, r);
  std::string exe;
  if (any_local) {
    const auto found = detail::find_executable(plan.program.front());
    if (!found) throw Error(Errc::spawn_failure, "cannot find executable '" + plan.program.front() + "'");
    exe = *found;
  }

  std::fflush(nullptr);
  std::vector<pid_t> pids;
  for (int r = 0; r < plan.size; ++r) {
    const bool remote = spawns_remotely(plan, r);
    std::vector<std::string> argv = remote ? std::vector<std::string>{"/bin/sh", "-c", remote_command(plan, r)}
                                           : plan.program;
    std::vector<std::string> envp = detail::merged_environment(remote ? Environment{} : rank_environment(plan, r));
    const auto hint = pin_hint(local_rank(plan.topology, r), node_size(plan.topology, r), plan.pin);
    auto cargv = detail::c_strings(argv);
    auto cenvp = detail::c_strings(envp);
    const pid_t pid = ::fork();
    if (pid < 0) {
      const int err = errno;
      for (pid_t p : pids) ::waitpid(p, nullptr, 0);
      throw Error(Errc::spawn_failure, std::string("fork: ") + std::strerror(err));
    }
    if (pid == 0) {
      if (hint && !remote) apply_pin(*hint);
      ::execve(remote ? "/bin/sh" : exe.c_str(), cargv.data(), cenvp.data());
      ::_exit(127);
    }
    pids.push_back(pid);
  }

  std::vector<int> statuses;
  for (pid_t p : pids) {
    int st = 0;
    while (::waitpid(p, &st, 0) < 0) {
      if (errno != EINTR) {
        st = 255 << 8;
        break;
      }
    }
    statuses.push_back(detail::decode_wait_status(st));
  }
  return statuses;
}

}  // namespace fcm

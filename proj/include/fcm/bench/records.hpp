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
 * Benchmark bookkeeping: records, geometric-mean summaries, CSV and SVG.
 *
 * Doubles are written in shortest round-trip form, so a raw CSV read back
 * and summarized again yields a byte-identical summary file.
 *
 * Bytes moved per row: p2p and bcast count the payload once; agg counts
 * ranks x msg_bytes (global bandwidth).
 */

#pragma once

#include <fcm/error.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace fcm::bench {

enum class BenchOp { p2p, bcast_serial, bcast_node_serial, bcast_tree, agg };

inline std::string_view to_string(BenchOp op) noexcept {
  switch (op) {
    case BenchOp::p2p: return "p2p";
    case BenchOp::bcast_serial: return "bcast-serial";
    case BenchOp::bcast_node_serial: return "bcast-node-serial";
    case BenchOp::bcast_tree: return "bcast-tree";
    case BenchOp::agg: return "agg";
  }
  return "?";
}

inline BenchOp parse_bench_op(std::string_view text) {
  for (auto op : {BenchOp::p2p, BenchOp::bcast_serial, BenchOp::bcast_node_serial, BenchOp::bcast_tree, BenchOp::agg}) {
    if (to_string(op) == text) return op;
  }
  throw Error(Errc::invalid_argument, "unknown benchmark op '" + std::string(text) + "'");
}

inline std::uint64_t bytes_moved(BenchOp op, std::uint64_t msg_bytes, int ranks) {
  return op == BenchOp::agg ? msg_bytes * static_cast<std::uint64_t>(ranks) : msg_bytes;
}

/// `16`, `8K`, `64k`, `1M`, `1G` (binary multiples).
inline std::uint64_t parse_byte_size(std::string_view text) {
  std::uint64_t mult = 1;
  if (!text.empty()) {
    switch (text.back()) {
      case 'k': case 'K': mult = 1ull << 10; break;
      case 'm': case 'M': mult = 1ull << 20; break;
      case 'g': case 'G': mult = 1ull << 30; break;
      default: break;
    }
    if (mult != 1) text.remove_suffix(1);
  }
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::invalid_argument, "bad byte size '" + std::string(text) + "'");
  }
  return value * mult;
}

inline std::vector<std::uint64_t> parse_size_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) out.push_back(parse_byte_size(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Powers of 4 from 16 bytes up to `max_bytes`.
inline std::vector<std::uint64_t> default_p2p_sizes(std::uint64_t max_bytes = 16ull << 20) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 16; s <= max_bytes; s *= 4) out.push_back(s);
  return out;
}

/// The three per-process sizes of the collective experiments: 8 B, 8 KB, 8 MB.
inline std::vector<std::uint64_t> default_collective_sizes() { return {8, 8ull << 10, 8ull << 20}; }

struct BenchRecord {
  BenchOp op = BenchOp::p2p;
  std::uint64_t msg_bytes = 0;
  int ranks = 0;
  int nodes = 0;
  int ppn = 0;
  int rep = 0;
  double elapsed_s = 0;
  double bandwidth_Bps = 0;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

/// Smallest elapsed time recorded; steady_clock ticks are nanoseconds.
inline constexpr double kMinElapsed = 1e-9;

inline BenchRecord make_record(BenchOp op, std::uint64_t msg_bytes, int ranks, int nodes, int ppn, int rep,
                               double elapsed_s) {
  elapsed_s = std::max(elapsed_s, kMinElapsed);
  return {op, msg_bytes, ranks, nodes, ppn, rep, elapsed_s,
          static_cast<double>(bytes_moved(op, msg_bytes, ranks)) / elapsed_s};
}

struct Summary {
  BenchOp op = BenchOp::p2p;
  std::uint64_t msg_bytes = 0;
  int ranks = 0;
  int nodes = 0;
  int ppn = 0;
  int reps = 0;
  double geomean_elapsed_s = 0;
  double bandwidth_Bps = 0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

/// exp(mean(ln x)).
inline double geometric_mean(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::empty_group, "geometric mean of no values");
  double logs = 0;
  for (double v : values) {
    if (!(v > 0)) throw Error(Errc::invalid_argument, "geometric mean needs positive values");
    logs += std::log(v);
  }
  return std::exp(logs / static_cast<double>(values.size()));
}

/// One summary per (op, msg_bytes, ranks), in order of first appearance.
inline std::vector<Summary> summarize(std::span<const BenchRecord> records) {
  std::vector<Summary> out;
  std::vector<std::vector<double>> elapsed;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Summary& s) {
      return s.op == r.op && s.msg_bytes == r.msg_bytes && s.ranks == r.ranks;
    });
    if (it == out.end()) {
      out.push_back({r.op, r.msg_bytes, r.ranks, r.nodes, r.ppn, 0, 0, 0});
      elapsed.emplace_back();
      it = std::prev(out.end());
    }
    ++it->reps;
    elapsed[static_cast<std::size_t>(it - out.begin())].push_back(r.elapsed_s);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].geomean_elapsed_s = geometric_mean(elapsed[i]);
    out[i].bandwidth_Bps =
        static_cast<double>(bytes_moved(out[i].op, out[i].msg_bytes, out[i].ranks)) / out[i].geomean_elapsed_s;
  }
  return out;
}

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return ec == std::errc{} ? std::string(buf.data(), end) : std::string("nan");
}

inline constexpr std::string_view kRecordHeader = "op,msg_bytes,ranks,nodes,ppn,rep,elapsed_s,bandwidth_Bps";
inline constexpr std::string_view kSummaryHeader = "op,msg_bytes,ranks,nodes,ppn,reps,geomean_elapsed_s,bandwidth_Bps";

inline std::string records_csv(std::span<const BenchRecord> records) {
  std::string out(kRecordHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::string(to_string(r.op)) + ',' + std::to_string(r.msg_bytes) + ',' + std::to_string(r.ranks) + ',' +
           std::to_string(r.nodes) + ',' + std::to_string(r.ppn) + ',' + std::to_string(r.rep) + ',' +
           format_double(r.elapsed_s) + ',' + format_double(r.bandwidth_Bps) + '\n';
  }
  return out;
}

inline std::string summary_csv(std::span<const Summary> summaries) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& s : summaries) {
    out += std::string(to_string(s.op)) + ',' + std::to_string(s.msg_bytes) + ',' + std::to_string(s.ranks) + ',' +
           std::to_string(s.nodes) + ',' + std::to_string(s.ppn) + ',' + std::to_string(s.reps) + ',' +
           format_double(s.geomean_elapsed_s) + ',' + format_double(s.bandwidth_Bps) + '\n';
  }
  return out;
}

namespace detail {

template <class T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::invalid_argument, "line " + std::to_string(line) + ": bad field '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

}  // namespace detail

inline std::vector<BenchRecord> parse_records_csv(std::string_view text) {
  std::vector<BenchRecord> out;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kRecordHeader) throw Error(Errc::invalid_argument, "not a raw benchmark CSV (header mismatch)");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != 8) throw Error(Errc::invalid_argument, "line " + std::to_string(line_no) + ": expected 8 fields");
    out.push_back({parse_bench_op(f[0]), detail::parse_field<std::uint64_t>(f[1], line_no),
                   detail::parse_field<int>(f[2], line_no), detail::parse_field<int>(f[3], line_no),
                   detail::parse_field<int>(f[4], line_no), detail::parse_field<int>(f[5], line_no),
                   detail::parse_field<double>(f[6], line_no), detail::parse_field<double>(f[7], line_no)});
  }
  if (header) throw Error(Errc::invalid_argument, "empty CSV");
  return out;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
}

/// Log-log plot of bandwidth against message size, one line per op and
/// rank count. Empty string when there is nothing to plot.
inline std::string render_svg(std::span<const Summary> summaries) {
  if (summaries.empty()) return {};
  constexpr double W = 720, H = 460, L = 80, R = 200, T = 30, B = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : summaries) {
    const double x = std::log10(static_cast<double>(std::max<std::uint64_t>(s.msg_bytes, 1)));
    const double y = std::log10(std::max(s.bandwidth_Bps, 1e-300));
    xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  xmin = std::floor(xmin), xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin), ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  auto num = [](double v) { return format_double(std::round(v * 10) / 10); };

  std::map<std::pair<std::string, int>, std::vector<const Summary*>> series;
  for (const auto& s : summaries) series[{std::string(to_string(s.op)), s.ranks}].push_back(&s);

  static constexpr std::array<const char*, 8> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                     "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double x = xmin; x <= xmax; x += 1) {
    os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << H - B << "\" x2=\"" << num(px(x)) << "\" y2=\"" << T
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << x << "</text>\n";
  }
  for (double y = ymin; y <= ymax; y += 1) {
    os << "<line x1=\"" << L << "\" y1=\"" << num(py(y)) << "\" x2=\"" << W - R << "\" y2=\"" << num(py(y))
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">1e" << y << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">message size (bytes)</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">bandwidth (B/s)</text>\n";
  std::size_t k = 0;
  for (auto& [key, points] : series) {
    std::sort(points.begin(), points.end(), [](const Summary* a, const Summary* b) { return a->msg_bytes < b->msg_bytes; });
    const char* color = colors[k % colors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* s : points) {
      os << num(px(std::log10(static_cast<double>(std::max<std::uint64_t>(s->msg_bytes, 1))))) << ","
         << num(py(std::log10(std::max(s->bandwidth_Bps, 1e-300)))) << " ";
    }
    os << "\"/>\n";
    for (const auto* s : points) {
      os << "<circle cx=\"" << num(px(std::log10(static_cast<double>(std::max<std::uint64_t>(s->msg_bytes, 1)))))
         << "\" cy=\"" << num(py(std::log10(std::max(s->bandwidth_Bps, 1e-300)))) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    const double ly = T + 10 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 35 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">" << key.first << " p=" << key.second << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

struct EmitPaths {
  std::filesystem::path raw;
  std::filesystem::path summary;
  std::filesystem::path svg;  // empty when not written
};

/// Writes `<dir>/<stem>.csv`, `<dir>/<stem>_summary.csv` and, when asked and
/// there is data, `<dir>/<stem>.svg`.
inline EmitPaths emit(std::span<const BenchRecord> records, const std::filesystem::path& dir, const std::string& stem,
                      bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
  EmitPaths paths{dir / (stem + ".csv"), dir / (stem + "_summary.csv"), {}};
  const auto summaries = summarize(records);
  write_text(paths.raw, records_csv(records));
  write_text(paths.summary, summary_csv(summaries));
  if (svg && !records.empty()) {
    paths.svg = dir / (stem + ".svg");
    write_text(paths.svg, render_svg(summaries));
  }
  return paths;
}

}  // namespace fcm::bench

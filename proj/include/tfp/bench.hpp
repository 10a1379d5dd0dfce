#pragma once

#include "tfp/network.hpp"
#include "tfp/preset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tfp {

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

/// Nearest-rank percentiles over the raw samples.
LatencyStats summarize(std::vector<double> samples_ms);

struct BenchOptions {
  Eigen::Index height = 512;
  Eigen::Index width = 512;
  int reps = 20;
  int warmup = 5;
  FusionConfig fusion;
  std::uint64_t content_seed = 0x7f4a7c15ULL;
};

struct BenchReport {
  std::string variant;
  Eigen::Index params = 0;
  std::size_t storage_bytes = 0;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int reps = 0;
  int warmup = 0;
  int threads = 1;
  std::int64_t flops_full = 0;
  std::int64_t flops_preset = 0;
  LatencyStats full;
  LatencyStats preset;
  /// full.mean_ms / preset.mean_ms
  double speedup = 0.0;
};

inline constexpr int kMinBenchReps = 20;

/// Times the full pipeline (deep encoding of the preset's noise seed) against
/// the preset path on identical inputs. Warmup runs are excluded, the two
/// paths alternate within each repetition, and image I/O is not involved.
BenchReport run_bench(const Network& net, const Preset& preset, const BenchOptions& opts);

/// Flat `key=value` lines, one per field, in a fixed order.
std::string format_report_kv(const BenchReport& r);

/// Human-readable table.
std::string format_report_table(const BenchReport& r);

}  // namespace tfp

#include "tfp/bench.hpp"

#include "tfp/io.hpp"
#include "tfp/parallel.hpp"
#include "tfp/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace tfp {

namespace {

double nearest_rank(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

Tensorf synthetic_content(std::uint64_t seed, Eigen::Index h, Eigen::Index w) {
  Xoshiro256 rng(seed);
  Tensorf t(1, 3, h, w);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform());
  return t;
}

}  // namespace

LatencyStats summarize(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) /
              static_cast<double>(samples_ms.size());
  s.p50_ms = nearest_rank(samples_ms, 0.50);
  s.p95_ms = nearest_rank(samples_ms, 0.95);
  return s;
}

BenchReport run_bench(const Network& net, const Preset& preset, const BenchOptions& opts) {
  check_preset(net, preset);
  if (opts.reps < kMinBenchReps) {
    throw std::invalid_argument("bench needs at least " + std::to_string(kMinBenchReps) +
                                " repetitions, got " + std::to_string(opts.reps));
  }
  if (opts.warmup < 0) throw std::invalid_argument("bench warmup must be non-negative");
  opts.fusion.validate();

  const Tensorf content = synthetic_content(opts.content_seed, opts.height, opts.width);
  const Tensorf noise = sample_noise(preset.seed, opts.height, opts.width);

  auto full_path = [&] {
    const Tensorf shallow = enc_shallow(net, content);
    return dec_fusion(net, shallow, enc_deep(net, noise), opts.fusion);
  };
  auto preset_path = [&] { return stylize_with_preset(net, preset, content, opts.fusion); };

  for (int i = 0; i < opts.warmup; ++i) {
    full_path();
    preset_path();
  }
  std::vector<double> full_ms;
  std::vector<double> preset_ms;
  for (int i = 0; i < opts.reps; ++i) {
    full_ms.push_back(time_ms(full_path));
    preset_ms.push_back(time_ms(preset_path));
  }

  BenchReport r;
  r.variant = std::string(variant_name(net.spec().variant));
  r.params = count_params(net);
  r.storage_bytes = encode_weights(net).size();
  r.height = opts.height;
  r.width = opts.width;
  r.reps = opts.reps;
  r.warmup = opts.warmup;
  r.threads = num_threads();
  r.flops_full = count_flops(net, opts.height, opts.width, FlopPath::kFull).total;
  r.flops_preset = count_flops(net, opts.height, opts.width, FlopPath::kPreset).total;
  r.full = summarize(std::move(full_ms));
  r.preset = summarize(std::move(preset_ms));
  r.speedup = r.preset.mean_ms > 0.0 ? r.full.mean_ms / r.preset.mean_ms : 0.0;
  return r;
}

std::string format_report_kv(const BenchReport& r) {
  std::string out;
  auto kv = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  kv("variant", r.variant);
  kv("params", r.params);
  kv("storage_bytes", r.storage_bytes);
  kv("height", r.height);
  kv("width", r.width);
  kv("reps", r.reps);
  kv("warmup", r.warmup);
  kv("threads", r.threads);
  kv("flops_full", r.flops_full);
  kv("flops_preset", r.flops_preset);
  kv("flops_ratio", fmt::format("{:.6f}", static_cast<double>(r.flops_full) /
                                              static_cast<double>(r.flops_preset)));
  kv("full_ms_mean", fmt::format("{:.4f}", r.full.mean_ms));
  kv("full_ms_p50", fmt::format("{:.4f}", r.full.p50_ms));
  kv("full_ms_p95", fmt::format("{:.4f}", r.full.p95_ms));
  kv("preset_ms_mean", fmt::format("{:.4f}", r.preset.mean_ms));
  kv("preset_ms_p50", fmt::format("{:.4f}", r.preset.p50_ms));
  kv("preset_ms_p95", fmt::format("{:.4f}", r.preset.p95_ms));
  kv("speedup", fmt::format("{:.4f}", r.speedup));
  return out;
}

std::string format_report_table(const BenchReport& r) {
  std::string out;
  out += fmt::format("{} at {}x{}, {} reps ({} warmup), {} thread(s)\n", r.variant, r.height,
                     r.width, r.reps, r.warmup, r.threads);
  out += fmt::format("  params         {:>12}\n", r.params);
  out += fmt::format("  storage        {:>12} bytes\n", r.storage_bytes);
  out += fmt::format("  {:<8} {:>14} {:>10} {:>10} {:>10}\n", "path", "GFLOPs", "mean ms",
                     "p50 ms", "p95 ms");
  out += fmt::format("  {:<8} {:>14.6f} {:>10.3f} {:>10.3f} {:>10.3f}\n", "full",
                     static_cast<double>(r.flops_full) * 1e-9, r.full.mean_ms, r.full.p50_ms,
                     r.full.p95_ms);
  out += fmt::format("  {:<8} {:>14.6f} {:>10.3f} {:>10.3f} {:>10.3f}\n", "preset",
                     static_cast<double>(r.flops_preset) * 1e-9, r.preset.mean_ms,
                     r.preset.p50_ms, r.preset.p95_ms);
  out += fmt::format("  speedup        {:>12.3f}x\n", r.speedup);
  return out;
}

}  // namespace tfp

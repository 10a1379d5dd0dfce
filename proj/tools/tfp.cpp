// tfp: stylize images with a preset texture feature map, generate textures
// and presets, and benchmark the preset path against the full pipeline.

#include "tfp/bench.hpp"
#include "tfp/image.hpp"
#include "tfp/io.hpp"
#include "tfp/parallel.hpp"
#include "tfp/preset.hpp"
#include "tfp/random.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <regex>

namespace {

struct Size {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
};

Size parse_size(const std::string& text) {
  static const std::regex re(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw std::invalid_argument("size '" + text + "' is not of the form HxW");
  }
  Size s{std::stoll(m[1]), std::stoll(m[2])};
  if (s.height < 1 || s.width < 1) throw std::invalid_argument("size must be positive");
  return s;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t generated = (std::uint64_t{rd()} << 32) ^ rd();
  fmt::print("seed: {} (generated; pass --seed {} to reproduce)\n", generated, generated);
  return generated;
}

Eigen::Index round_up(Eigen::Index v, Eigen::Index m) { return (v + m - 1) / m * m; }

struct StylizeArgs {
  std::string weights, preset, content, out;
  std::optional<double> lambda_s, lambda_d;
};

int cmd_stylize(const StylizeArgs& a) {
  const tfp::Network net = tfp::load_weights(a.weights);
  const tfp::Preset preset = tfp::load_preset(a.preset);
  tfp::FusionConfig cfg = preset.recommended;
  if (a.lambda_s) cfg.lambda_s = *a.lambda_s;
  if (a.lambda_d) cfg.lambda_d = *a.lambda_d;
  cfg.validate();

  const tfp::Tensorf content = tfp::to_tensor(tfp::read_image(a.content));
  const tfp::Tensorf padded =
      tfp::reflect_pad_to_multiple(content, net.spec().downsample_factor);
  const tfp::Tensorf styled = tfp::stylize_with_preset(net, preset, padded, cfg);
  tfp::write_png(a.out, tfp::to_image(tfp::crop(styled, content.height(), content.width())));
  fmt::print("wrote {} ({}x{})\n", a.out, content.width(), content.height());
  return 0;
}

struct TextureArgs {
  std::string weights, size, out;
  std::optional<std::uint64_t> seed;
  double lambda_d = 1.0;
};

int cmd_texture(const TextureArgs& a) {
  const tfp::Network net = tfp::load_weights(a.weights);
  const Size size = parse_size(a.size);
  const std::uint64_t seed = resolve_seed(a.seed);
  const Eigen::Index factor = net.spec().downsample_factor;
  const tfp::Tensorf noise =
      tfp::sample_noise(seed, round_up(size.height, factor), round_up(size.width, factor));
  const tfp::Tensorf texture = tfp::decode_texture(net, tfp::enc_deep(net, noise), a.lambda_d);
  tfp::write_png(a.out, tfp::to_image(tfp::crop(texture, size.height, size.width)));
  fmt::print("wrote {} ({}x{}, seed {})\n", a.out, size.width, size.height, seed);
  return 0;
}

struct PresetGenArgs {
  std::string weights, size, style_id, out;
  std::optional<std::uint64_t> seed;
  double lambda_s = 1.0;
  double lambda_d = 1.0;
};

int cmd_preset_gen(const PresetGenArgs& a) {
  const tfp::Network net = tfp::load_weights(a.weights);
  const Size size = parse_size(a.size);
  const std::uint64_t seed = resolve_seed(a.seed);
  const tfp::Preset preset = tfp::capture_preset_from_seed(
      net, seed, size.height, size.width, a.style_id, tfp::FusionConfig{a.lambda_s, a.lambda_d});
  tfp::save_preset(preset, a.out);
  fmt::print("seed: {}\nfeatures: {}\nwrote {}\n", seed, preset.features.shape().str(), a.out);
  return 0;
}

struct BenchArgs {
  std::string weights, preset, size = "512x512", report;
  int reps = 20;
  int warmup = 5;
};

int cmd_bench(const BenchArgs& a) {
  const tfp::Network net = tfp::load_weights(a.weights);
  const tfp::Preset preset = tfp::load_preset(a.preset);
  const Size size = parse_size(a.size);
  tfp::BenchOptions opts;
  opts.height = size.height;
  opts.width = size.width;
  opts.reps = a.reps;
  opts.warmup = a.warmup;
  opts.fusion = preset.recommended;
  const tfp::BenchReport report = tfp::run_bench(net, preset, opts);
  fmt::print("{}", tfp::format_report_table(report));
  if (!a.report.empty()) {
    const std::string kv = tfp::format_report_kv(report);
    tfp::write_file_atomic(a.report, std::span(reinterpret_cast<const std::uint8_t*>(kv.data()),
                                               kv.size()));
    fmt::print("report: {}\n", a.report);
  }
  return 0;
}

struct InitArgs {
  std::string variant = "TFP", out;
  std::optional<std::uint64_t> seed;
};

int cmd_weights_init(const InitArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const tfp::Network net = tfp::Network::build(tfp::default_spec(tfp::parse_variant(a.variant)), seed);
  tfp::save_weights(net, a.out);
  fmt::print("{}: {} parameters, wrote {}\n", tfp::variant_name(net.spec().variant),
             tfp::count_params(net), a.out);
  return 0;
}

int threads_from_env(int flag_value) {
  if (const char* env = std::getenv("TFP_THREADS"); env != nullptr && *env != '\0') {
    return std::stoi(env);
  }
  return flag_value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight texture transfer with preset texture feature maps"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for inference (TFP_THREADS overrides)")
      ->check(CLI::PositiveNumber);

  StylizeArgs stylize;
  auto* s = app.add_subcommand("stylize", "Stylize a content image with a preset");
  s->add_option("--weights", stylize.weights, "Weight file")->required()->check(CLI::ExistingFile);
  s->add_option("--preset", stylize.preset, "Preset file")->required()->check(CLI::ExistingFile);
  s->add_option("--content", stylize.content, "Content image (PNG or JPEG)")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--out", stylize.out, "Output PNG")->required();
  s->add_option("--lambda-s", stylize.lambda_s, "Shallow fusion strength")->check(CLI::NonNegativeNumber);
  s->add_option("--lambda-d", stylize.lambda_d, "Deep fusion strength")->check(CLI::NonNegativeNumber);

  TextureArgs texture;
  auto* t = app.add_subcommand("texture", "Decode a pure texture image from seeded noise");
  t->add_option("--weights", texture.weights, "Weight file")->required()->check(CLI::ExistingFile);
  t->add_option("--seed", texture.seed, "Noise seed");
  t->add_option("--size", texture.size, "Output size HxW")->required();
  t->add_option("--out", texture.out, "Output PNG")->required();
  t->add_option("--lambda-d", texture.lambda_d, "Deep fusion strength")->check(CLI::PositiveNumber);

  PresetGenArgs preset_gen;
  auto* p = app.add_subcommand("preset", "Preset management");
  p->require_subcommand(1);
  auto* pg = p->add_subcommand("gen", "Capture a preset texture feature map from seeded noise");
  pg->add_option("--weights", preset_gen.weights, "Weight file")->required()->check(CLI::ExistingFile);
  pg->add_option("--seed", preset_gen.seed, "Noise seed");
  pg->add_option("--size", preset_gen.size, "Noise size HxW (multiples of 4)")->required();
  pg->add_option("--style-id", preset_gen.style_id, "Style identifier")->required();
  pg->add_option("--out", preset_gen.out, "Output preset file")->required();
  pg->add_option("--lambda-s", preset_gen.lambda_s, "Recommended shallow strength")
      ->check(CLI::NonNegativeNumber);
  pg->add_option("--lambda-d", preset_gen.lambda_d, "Recommended deep strength")
      ->check(CLI::NonNegativeNumber);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Benchmark full pipeline vs preset path");
  b->add_option("--weights", bench.weights, "Weight file")->required()->check(CLI::ExistingFile);
  b->add_option("--preset", bench.preset, "Preset file")->required()->check(CLI::ExistingFile);
  b->add_option("--size", bench.size, "Input size HxW")->capture_default_str();
  b->add_option("--reps", bench.reps, "Timed repetitions (>= 20)")->capture_default_str();
  b->add_option("--warmup", bench.warmup, "Untimed warmup runs")->capture_default_str();
  b->add_option("--report", bench.report, "Machine-readable key=value report file");

  InitArgs init;
  auto* w = app.add_subcommand("weights", "Weight file utilities");
  w->require_subcommand(1);
  auto* wi = w->add_subcommand("init", "Write randomly initialized weights");
  wi->add_option("--variant", init.variant, "TFP or TFP-L")->capture_default_str();
  wi->add_option("--seed", init.seed, "Initialization seed");
  wi->add_option("--out", init.out, "Output weight file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    tfp::set_num_threads(threads_from_env(threads));
    if (s->parsed()) return cmd_stylize(stylize);
    if (t->parsed()) return cmd_texture(texture);
    if (pg->parsed()) return cmd_preset_gen(preset_gen);
    if (b->parsed()) return cmd_bench(bench);
    if (wi->parsed()) return cmd_weights_init(init);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include "fdst/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fdst {

void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> v, double lr,
                  double rho, double eps) {
  if (params.size() != grads.size() || params.size() != v.size()) throw std::invalid_argument("rmsprop_step: shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    v[i] = rho * v[i] + (1.0 - rho) * g * g;
    params[i] -= lr * g / (std::sqrt(v[i]) + eps);
  }
}

void rmsprop_step(LaplacianPyramid& params, const LaplacianPyramid& grads, OptimizerState& state, double lr,
                  double rho, double eps) {
  if (params.level_count() != grads.level_count()) throw std::invalid_argument("rmsprop_step: level count mismatch");
  if (state.v.empty()) {
    for (const Image& lvl : params.levels) state.v.emplace_back(lvl.width, lvl.height, lvl.channels);
  }
  if (static_cast<int>(state.v.size()) != params.level_count()) throw std::invalid_argument("rmsprop_step: stale optimizer state");
  for (int l = 0; l < params.level_count(); ++l) {
    rmsprop_step(params.levels[l].data, grads.levels[l].data, state.v[l].data, lr, rho, eps);
  }
  ++state.iteration;
}

std::vector<PixelCoord> sample_coords(Rng& rng, int width, int height, int n, const Mask* mask) {
  if (width < 1 || height < 1) throw std::invalid_argument("sample_coords: empty frame");
  if (mask && (mask->width != width || mask->height != height)) throw std::invalid_argument("sample_coords: mask size mismatch");
  std::vector<std::uint32_t> candidates;
  candidates.reserve(static_cast<std::size_t>(width) * height);
  for (std::uint32_t p = 0; p < static_cast<std::uint32_t>(width * height); ++p) {
    if (!mask || mask->bits[p]) candidates.push_back(p);
  }
  if (n < 0 || static_cast<std::size_t>(n) > candidates.size()) {
    throw std::invalid_argument("sample_coords: requested " + std::to_string(n) + " samples from a support of " +
                                std::to_string(candidates.size()));
  }
  std::vector<PixelCoord> out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
    out[i] = {static_cast<double>(candidates[i] % width), static_cast<double>(candidates[i] / width)};
  }
  return out;
}

namespace {

struct StageRegion {
  std::optional<Mask> out_mask;
  std::optional<Mask> ss_mask;
  std::optional<Mask> cd_mask;
  double weight = 1.0;
};

int capped(int n, std::size_t support) {
  if (support == 0) throw std::invalid_argument("region mask has empty support at this resolution");
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), support));
}

const Mask* ptr(const std::optional<Mask>& m) { return m ? &*m : nullptr; }

}  // namespace

StageResult run_stage(int stage, int resolution, const StageInputs& in, LaplacianPyramid& pyr,
                      const FeatureExtractor& fx, const TransferConfig& cfg, OptimizerState& state, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  StageResult result;
  if (cfg.iterations_per_resolution == 0) return result;

  const int W = pyr.base_width, H = pyr.base_height;
  if (in.content.width != W || in.content.height != H) throw std::invalid_argument("run_stage: content does not match pyramid");

  const FeatureMapStack content_stack = extract_taps(fx, in.content);
  const FeatureMapStack ss_stack = extract_taps(fx, in.ss_style);
  const FeatureMapStack cd_stack = extract_taps(fx, in.cd_style);

  std::vector<StageRegion> regions;
  if (in.regions.empty()) {
    regions.push_back({});
  } else {
    for (const RegionSpec& spec : in.regions) {
      StageRegion r;
      r.out_mask = mask_from_image(spec.content_mask, W, H);
      r.ss_mask = mask_from_image(spec.content_mask, in.ss_style.width, in.ss_style.height);
      r.cd_mask = mask_from_image(spec.style_mask, in.cd_style.width, in.cd_style.height);
      r.weight = spec.weight;
      regions.push_back(std::move(r));
    }
  }

  const std::size_t frame = static_cast<std::size_t>(W) * H;
  const std::size_t ss_frame = in.ss_style.pixel_count();
  const std::size_t cd_frame = in.cd_style.pixel_count();

  for (int it = 0; it < cfg.iterations_per_resolution; ++it) {
    const Image x = synthesize_from_pyramid(pyr);
    const FeatureMapStack x_stack = extract(fx, x);

    Image pixel_grad(W, H, 3);
    LossTerms sum;
    sum.weights = cfg.weights;
    for (const StageRegion& r : regions) {
      const int n_out = capped(cfg.sample_count, r.out_mask ? r.out_mask->support() : frame);
      const int n_ss = capped(cfg.sample_count, r.ss_mask ? r.ss_mask->support() : ss_frame);
      const int n_cd = capped(cfg.sample_count, r.cd_mask ? r.cd_mask->support() : cd_frame);
      const auto coords = sample_coords(rng, W, H, n_out, ptr(r.out_mask));
      const auto ss_coords = sample_coords(rng, in.ss_style.width, in.ss_style.height, n_ss, ptr(r.ss_mask));
      const auto cd_coords = sample_coords(rng, in.cd_style.width, in.cd_style.height, n_cd, ptr(r.cd_mask));

      const FeatureSet out_set = sample_hypercolumns(x_stack, coords);
      const FeatureSet content_set = sample_hypercolumns(content_stack, coords);
      const FeatureSet ss_set = sample_hypercolumns(ss_stack, ss_coords);
      const FeatureSet cd_set = sample_hypercolumns(cd_stack, cd_coords);

      LossWeights w = cfg.weights;
      w.lambda = cfg.weights.lambda * r.weight;
      TotalLoss loss = total_loss(out_set, ss_set, cd_set, out_set, content_set, w);
      sum.style += loss.terms.style;
      sum.moment += loss.terms.moment;
      sum.content += loss.terms.content;
      sum.total += loss.terms.total;

      loss.grad_a += loss.grad_m;
      const Image g = backprop_to_pixels(fx, x_stack, coords, loss.grad_a);
      for (std::size_t i = 0; i < g.data.size(); ++i) pixel_grad.data[i] += g.data[i];
    }

    const LaplacianPyramid pyr_grad = synthesize_adjoint(pixel_grad, pyr);
    rmsprop_step(pyr, pyr_grad, state, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps);
    result.log.push_back({stage, it, resolution, sum});
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Image initialize_output(const Image& content, const Image& cd_style, const TransferConfig& cfg) {
  cfg.validate();
  const Image c = to_rgb(content);
  const auto [w, h] = fit_long_side(c.width, c.height, cfg.resolutions.front());
  Image x = resize_bilinear(c, w, h);
  const auto mc = mean_color(c);
  const auto ms = mean_color(to_rgb(cd_style));
  for (std::size_t p = 0; p < x.pixel_count(); ++p) {
    for (int k = 0; k < 3; ++k) x.data[3 * p + k] += ms[k] - mc[k];
  }
  return x;
}

ScheduleResult run_schedule(const Image& content_in, const Image& ss_in, const Image& cd_in, const FeatureExtractor& fx,
                            const TransferConfig& cfg, const std::vector<RegionSpec>& regions) {
  cfg.validate();
  const Image content = to_rgb(content_in);
  const Image ss = to_rgb(ss_in);
  const Image cd = to_rgb(cd_in);
  for (const RegionSpec& r : regions) {
    validate(r.content_mask);
    validate(r.style_mask);
    if (r.content_mask.width != content.width || r.content_mask.height != content.height) {
      throw std::invalid_argument("content mask size does not match the content image");
    }
    if (r.style_mask.width != cd.width || r.style_mask.height != cd.height) {
      throw std::invalid_argument("style mask size does not match the CD style image");
    }
  }

  ScheduleResult result;
  Rng rng(cfg.seed);
  Image x = initialize_output(content, cd, cfg);
  for (std::size_t s = 0; s < cfg.resolutions.size(); ++s) {
    const int res = cfg.resolutions[s];
    const auto [w, h] = fit_long_side(content.width, content.height, res);
    if (x.width != w || x.height != h) x = resize_bilinear(x, w, h);

    StageInputs inputs;
    inputs.content = resize_bilinear(content, w, h);
    const auto [sw, sh] = fit_long_side(ss.width, ss.height, res);
    inputs.ss_style = resize_bilinear(ss, sw, sh);
    const auto [cw, ch] = fit_long_side(cd.width, cd.height, res);
    inputs.cd_style = resize_bilinear(cd, cw, ch);
    inputs.regions = regions;

    LaplacianPyramid pyr = decompose_laplacian(x, std::min(cfg.pyramid_levels, max_pyramid_levels(w, h)));
    OptimizerState state;
    StageResult stage = run_stage(static_cast<int>(s), res, inputs, pyr, fx, cfg, state, rng);
    result.log.insert(result.log.end(), stage.log.begin(), stage.log.end());
    result.stage_seconds.push_back(stage.seconds);
    x = synthesize_from_pyramid(pyr);
  }

  result.unclamped = x;
  result.output = clamp01(x);
  if (!regions.empty()) {
    const Image base = resize_bilinear(content, x.width, x.height);
    std::vector<RegionSpec> scaled = regions;
    for (RegionSpec& r : scaled) r.content_mask = resize_bilinear(to_luma(r.content_mask), x.width, x.height);
    result.output = apply_region_composite(result.output, base, scaled, cfg.feather);
  }
  return result;
}

void write_loss_csv(const std::vector<LossLogEntry>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,resolution,style,content,moment,total\n";
  char line[256];
  for (const LossLogEntry& e : log) {
    std::snprintf(line, sizeof(line), "%d,%d,%.9g,%.9g,%.9g,%.9g\n", e.iteration, e.resolution, e.terms.style,
                  e.terms.content, e.terms.moment, e.terms.total);
    out << line;
  }
}

}  // namespace fdst

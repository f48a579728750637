#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "fdst/cli.hpp"
#include "fdst/features.hpp"
#include "fdst/geometry.hpp"
#include "fdst/image_io.hpp"
#include "fdst/metrics.hpp"
#include "fdst/optimizer.hpp"
#include "fdst/parallel.hpp"

namespace fdst {

namespace fs = std::filesystem;

namespace {

/// Bad flag values or combinations; reported with exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kBuiltinWidthDivisor = 2;
constexpr std::uint64_t kBuiltinExtractorSeed = 1;

struct CommonArgs {
  std::string out_dir = "out";
  int threads = 0;
  std::string config_path;
  std::string weights;
  std::string pool;
  int width_divisor = kBuiltinWidthDivisor;
  std::uint64_t extractor_seed = kBuiltinExtractorSeed;

  // Overrides, applied only when given.
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<int> resolutions;
  double alpha = 0, beta = 0, lambda = 0, eta = 0, moment_weight = 0;
  int samples = 0;
  double learning_rate = 0;
  int pyramid_levels = 0;
  double feather = 0;

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

struct GeometryArgs {
  std::string depth;
  std::string style_depth;
  double geo_alpha = 1.0;
  double yaw = 0.0;
};

void add_runtime_options(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
  a.opts["threads"] = cmd->add_option("--threads", a.threads, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  a.opts["seed"] = cmd->add_option("--seed", a.seed, "Random seed for feature sampling");
}

void add_transfer_options(CLI::App* cmd, CommonArgs& a) {
  add_runtime_options(cmd, a);
  cmd->add_option("--config", a.config_path, "JSON config or a previous manifest.json")->check(CLI::ExistingFile);
  a.opts["weights"] = cmd->add_option("--weights", a.weights, "FDSTW1 extractor weights")->check(CLI::ExistingFile);
  a.opts["pool"] = cmd->add_option("--pool", a.pool, "Pooling kind used by the extractor")->check(CLI::IsMember({"avg", "max"}));
  a.opts["width-divisor"] = cmd->add_option("--width-divisor", a.width_divisor, "Channel divisor of the built-in extractor")
                                ->check(CLI::Range(1, 64));
  a.opts["extractor-seed"] = cmd->add_option("--extractor-seed", a.extractor_seed, "Weight seed of the built-in extractor");
  a.opts["iterations"] = cmd->add_option("--iterations", a.iterations, "Iterations per resolution");
  a.opts["resolutions"] = cmd->add_option("--resolutions", a.resolutions, "Long-side resolutions, coarse to fine")->delimiter(',');
  a.opts["alpha"] = cmd->add_option("--alpha", a.alpha, "SS style weight");
  a.opts["beta"] = cmd->add_option("--beta", a.beta, "CD style weight");
  a.opts["lambda"] = cmd->add_option("--lambda", a.lambda, "Style term weight");
  a.opts["eta"] = cmd->add_option("--eta", a.eta, "Content term weight");
  a.opts["moment-weight"] = cmd->add_option("--moment-weight", a.moment_weight, "Moment term weight");
  a.opts["samples"] = cmd->add_option("--samples", a.samples, "Feature samples per iteration");
  a.opts["lr"] = cmd->add_option("--lr", a.learning_rate, "RMSprop learning rate");
  a.opts["pyramid-levels"] = cmd->add_option("--pyramid-levels", a.pyramid_levels, "Laplacian pyramid levels");
  a.opts["feather"] = cmd->add_option("--feather", a.feather, "Region feather radius as a fraction of the diagonal");
}

void add_geometry_options(CLI::App* cmd, GeometryArgs& g) {
  cmd->add_option("--depth", g.depth, "FDSTD1 depth of the content face")->check(CLI::ExistingFile);
  auto* sd = cmd->add_option("--style-depth", g.style_depth, "FDSTD1 depth of the style face")->check(CLI::ExistingFile);
  cmd->add_option("--geo-alpha", g.geo_alpha, "Geometry fusion weight of the content depth")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--yaw", g.yaw, "Preview yaw in degrees")->check(CLI::Range(-90.0, 90.0))->capture_default_str();
  sd->needs("--depth");
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("cannot parse " + path.string() + ": " + e.what());
  }
}

/// Defaults, then the config file, then explicit flags.
TransferConfig resolve_config(const CommonArgs& a, const std::string& task, const nlohmann::json* file) {
  TransferConfig cfg;
  try {
    if (file) cfg = config_from_json(*file, cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.task = task;
  if (a.given("seed")) cfg.seed = a.seed;
  if (a.given("iterations")) cfg.iterations_per_resolution = a.iterations;
  if (a.given("resolutions")) cfg.resolutions = a.resolutions;
  if (a.given("alpha")) cfg.weights.alpha = a.alpha;
  if (a.given("beta")) cfg.weights.beta = a.beta;
  if (a.given("lambda")) cfg.weights.lambda = a.lambda;
  if (a.given("eta")) cfg.weights.eta = a.eta;
  if (a.given("moment-weight")) cfg.weights.moment = a.moment_weight;
  if (a.given("samples")) cfg.sample_count = a.samples;
  if (a.given("lr")) cfg.learning_rate = a.learning_rate;
  if (a.given("pyramid-levels")) cfg.pyramid_levels = a.pyramid_levels;
  if (a.given("feather")) cfg.feather = a.feather;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

/// Extractor selection follows the same precedence as the config: flags,
/// then the "extractor" record of a manifest passed as --config, then the
/// built-in network.
FeatureExtractor resolve_extractor(const CommonArgs& a, const nlohmann::json* file, nlohmann::json& record) {
  nlohmann::json from_file = (file && file->contains("extractor")) ? file->at("extractor") : nlohmann::json::object();
  auto pick = [&](const char* flag, const char* key, auto value) {
    if (a.given(flag) || !from_file.contains(key)) return value;
    return from_file.at(key).get<decltype(value)>();
  };
  const std::string pool = pick("pool", "pool", a.pool.empty() ? std::string("avg") : a.pool);
  const PoolKind kind = pool == "max" ? PoolKind::max : PoolKind::avg;
  if (pool != "max" && pool != "avg") throw UsageError("unknown pool kind " + pool);

  const std::string weights = pick("weights", "weights", a.weights);
  if (!weights.empty() && !a.given("width-divisor") && !a.given("extractor-seed")) {
    FeatureExtractor fx = load_weights(weights).with_pool_kind(kind);
    record = {{"kind", "fdstw1"}, {"weights", weights}, {"crc32", file_crc32(weights)}, {"pool", pool}};
    return fx;
  }
  const int divisor = pick("width-divisor", "width_divisor", a.width_divisor);
  const std::uint64_t seed = pick("extractor-seed", "seed", a.extractor_seed);
  record = {{"kind", "builtin-vgg16"}, {"width_divisor", divisor}, {"seed", seed}, {"pool", pool}};
  return make_random_vgg16(divisor, seed, kind);
}

void apply_threads(const CommonArgs& a) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  set_thread_count(a.given("threads") ? a.threads : static_cast<int>(hw));
}

Image load_input(const std::string& path, const char* role) {
  if (path.empty()) throw UsageError(std::string("missing --") + role);
  try {
    return load_image(path);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("cannot load ") + role + " image: " + e.what());
  }
}

void write_manifest(const RunManifest& m, const fs::path& dir) {
  std::ofstream out(dir / "manifest.json");
  out << to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

struct RegionArg {
  std::string content_mask;
  std::string style_mask;
  double weight = 1.0;
};

RegionArg parse_region(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
    throw UsageError("--regions expects content-mask,style-mask[,weight], got '" + spec + "'");
  }
  RegionArg r{parts[0], parts[1], 1.0};
  if (parts.size() == 3) {
    try {
      std::size_t used = 0;
      r.weight = std::stod(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("bad region weight '" + parts[2] + "'");
    }
    if (!(r.weight >= 0)) throw UsageError("region weights must be non-negative");
  }
  return r;
}

struct TransferRequest {
  std::string command;
  std::string content;
  std::string ss_style;
  std::string cd_style;
  std::vector<std::string> regions;
  GeometryArgs geometry;
};

int do_transfer(const TransferRequest& req, const CommonArgs& a, std::ostream& out) {
  std::optional<nlohmann::json> file;
  if (!a.config_path.empty()) file = read_json_file(a.config_path);
  const TransferConfig cfg = resolve_config(a, req.command, file ? &*file : nullptr);
  apply_threads(a);

  RunManifest m;
  m.command = req.command;
  m.config = cfg;
  const FeatureExtractor fx = resolve_extractor(a, file ? &*file : nullptr, m.extractor);

  const std::string ss_path = req.ss_style.empty() ? req.content : req.ss_style;
  const Image content = load_input(req.content, "content");
  const Image ss = load_input(ss_path, "ss-style");
  const Image cd = load_input(req.cd_style, "cd-style");
  m.inputs.push_back({"content", req.content, file_crc32(req.content)});
  m.inputs.push_back({"ss_style", ss_path, file_crc32(ss_path)});
  m.inputs.push_back({"cd_style", req.cd_style, file_crc32(req.cd_style)});

  std::vector<RegionSpec> regions;
  nlohmann::json region_records = nlohmann::json::array();
  for (const std::string& spec : req.regions) {
    const RegionArg r = parse_region(spec);
    RegionSpec rs{to_luma(load_input(r.content_mask, "content mask")), to_luma(load_input(r.style_mask, "style mask")),
                  r.weight};
    if (rs.content_mask.width != content.width || rs.content_mask.height != content.height) {
      throw UsageError("content mask " + r.content_mask + " does not match the content image size");
    }
    if (rs.style_mask.width != cd.width || rs.style_mask.height != cd.height) {
      throw UsageError("style mask " + r.style_mask + " does not match the CD style image size");
    }
    if (mask_from_image(rs.content_mask, content.width, content.height).support() == 0 ||
        mask_from_image(rs.style_mask, cd.width, cd.height).support() == 0) {
      throw UsageError("region mask has empty support: " + spec);
    }
    m.inputs.push_back({"content_mask", r.content_mask, file_crc32(r.content_mask)});
    m.inputs.push_back({"style_mask", r.style_mask, file_crc32(r.style_mask)});
    region_records.push_back({{"content_mask", r.content_mask}, {"style_mask", r.style_mask}, {"weight", r.weight}});
    regions.push_back(std::move(rs));
  }
  if (!req.regions.empty()) m.extra["regions"] = region_records;

  const ScheduleResult result = run_schedule(content, ss, cd, fx, cfg, regions);

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  save_image(result.output, dir / "stylized.png");
  write_loss_csv(result.log, dir / "loss.csv");
  m.outputs = {"stylized.png", "loss.csv"};
  m.stage_seconds = result.stage_seconds;
  if (!result.log.empty()) m.final_terms = result.log.back().terms;
  m.final_terms.weights = cfg.weights;

  const GeometryArgs& g = req.geometry;
  if (!g.depth.empty()) {
    const DepthMap d = load_depth(g.depth);
    validate(d);
    m.inputs.push_back({"depth", g.depth, file_crc32(g.depth)});
    DepthMap fused = d;
    if (!g.style_depth.empty()) {
      const DepthMap ds = load_depth(g.style_depth);
      m.inputs.push_back({"style_depth", g.style_depth, file_crc32(g.style_depth)});
      fused = fuse_depth(d, ds, g.geo_alpha);
    }
    save_depth(fused, dir / "fused_depth.fdstd");
    const Mesh mesh = depth_to_mesh(fused, result.output);
    export_obj(mesh, result.output, dir / "mesh");
    save_image(render_preview(mesh, result.output, g.yaw), dir / "preview.png");
    m.outputs.insert(m.outputs.end(), {"fused_depth.fdstd", "mesh.obj", "mesh.mtl", "mesh.png", "preview.png"});
    m.extra["geo_alpha"] = g.geo_alpha;
    m.extra["yaw"] = g.yaw;
  }
  m.outputs.push_back("manifest.json");
  write_manifest(m, dir);
  out << (dir / "stylized.png").string() << '\n';
  return 0;
}

int do_fuse(const GeometryArgs& g, double alpha, const std::string& texture, const CommonArgs& a, std::ostream& out) {
  apply_threads(a);
  const DepthMap d = load_depth(g.depth);
  const DepthMap ds = load_depth(g.style_depth);
  const DepthMap fused = fuse_depth(d, ds, alpha);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  save_depth(fused, dir / "fused_depth.fdstd");

  RunManifest m;
  m.command = "fuse-geometry";
  m.config.task = m.command;
  m.extractor = nlohmann::json::object();
  m.inputs = {{"depth", g.depth, file_crc32(g.depth)}, {"style_depth", g.style_depth, file_crc32(g.style_depth)}};
  m.outputs = {"fused_depth.fdstd"};
  m.extra = {{"alpha", alpha}};
  if (!texture.empty()) {
    const Image tex = load_input(texture, "texture");
    m.inputs.push_back({"texture", texture, file_crc32(texture)});
    export_obj(depth_to_mesh(fused, tex), tex, dir / "mesh");
    m.outputs.insert(m.outputs.end(), {"mesh.obj", "mesh.mtl", "mesh.png"});
  }
  m.outputs.push_back("manifest.json");
  write_manifest(m, dir);
  out << (dir / "fused_depth.fdstd").string() << '\n';
  return 0;
}

int do_render(const std::string& depth, const std::string& texture, double yaw, const CommonArgs& a, std::ostream& out) {
  apply_threads(a);
  const DepthMap d = load_depth(depth);
  validate(d);
  const Image tex = to_rgb(load_input(texture, "texture"));
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  save_image(render_preview(depth_to_mesh(d, tex), tex, yaw), dir / "preview.png");

  RunManifest m;
  m.command = "render";
  m.config.task = m.command;
  m.extractor = nlohmann::json::object();
  m.inputs = {{"depth", depth, file_crc32(depth)}, {"texture", texture, file_crc32(texture)}};
  m.outputs = {"preview.png", "manifest.json"};
  m.extra = {{"yaw", yaw}};
  write_manifest(m, dir);
  out << (dir / "preview.png").string() << '\n';
  return 0;
}

int do_metrics(const std::string& a_path, const std::string& b_path, const CommonArgs& a, bool write_files,
               std::ostream& out) {
  apply_threads(a);
  const Image ia = load_input(a_path, "a");
  const Image ib = load_input(b_path, "b");
  if (!ia.same_shape(ib)) throw UsageError("metrics: images differ in size or channel count");
  const nlohmann::json report = to_json(compute_metrics(ia, ib));
  out << report.dump(2) << '\n';
  if (write_files) {
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    std::ofstream(dir / "metrics.json") << report.dump(2) << '\n';
    RunManifest m;
    m.command = "metrics";
    m.config.task = m.command;
    m.extractor = nlohmann::json::object();
    m.inputs = {{"a", a_path, file_crc32(a_path)}, {"b", b_path, file_crc32(b_path)}};
    m.outputs = {"metrics.json", "manifest.json"};
    m.extra = report;
    write_manifest(m, dir);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided 3D face style transfer", "fdst"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CommonArgs t_args, r_args, rt_args, fg_args, mt_args, rd_args;
  TransferRequest transfer{"transfer", {}, {}, {}, {}, {}};
  auto* t = app.add_subcommand("transfer", "Style transfer guided by an SS and a CD style image");
  t->add_option("--content", transfer.content, "Canonical content texture")->required()->check(CLI::ExistingFile);
  t->add_option("--ss-style", transfer.ss_style, "Self-structure style image (default: the content)")->check(CLI::ExistingFile);
  t->add_option("--cd-style", transfer.cd_style, "Color-distribution style image")->required()->check(CLI::ExistingFile);
  add_transfer_options(t, t_args);
  add_geometry_options(t, transfer.geometry);

  TransferRequest recon{"reconstruct", {}, {}, {}, {}, {}};
  std::string hd_input;
  auto* r = app.add_subcommand("reconstruct", "High-fidelity texture reconstruction from an HD input");
  r->add_option("--content", recon.content, "Low-quality canonical texture")->required()->check(CLI::ExistingFile);
  r->add_option("--hd-input", hd_input, "HD input face, used as both SS and CD style")->required()->check(CLI::ExistingFile);
  add_transfer_options(r, r_args);
  add_geometry_options(r, recon.geometry);

  TransferRequest region{"region-transfer", {}, {}, {}, {}, {}};
  auto* rt = app.add_subcommand("region-transfer", "Style transfer restricted to mask regions");
  rt->add_option("--content", region.content, "Canonical content texture")->required()->check(CLI::ExistingFile);
  rt->add_option("--ss-style", region.ss_style, "Self-structure style image (default: the content)")->check(CLI::ExistingFile);
  rt->add_option("--cd-style", region.cd_style, "Color-distribution style image")->required()->check(CLI::ExistingFile);
  rt->add_option("--regions", region.regions, "content-mask,style-mask[,weight]; repeatable")->required();
  add_transfer_options(rt, rt_args);
  add_geometry_options(rt, region.geometry);

  GeometryArgs fuse;
  double fuse_alpha = 1.0;
  std::string fuse_texture;
  auto* fg = app.add_subcommand("fuse-geometry", "Blend two depth maps and optionally export a mesh");
  fg->add_option("--depth", fuse.depth, "FDSTD1 depth d")->required()->check(CLI::ExistingFile);
  fg->add_option("--style-depth", fuse.style_depth, "FDSTD1 depth d'")->required()->check(CLI::ExistingFile);
  fg->add_option("--alpha", fuse_alpha, "Weight of d")->required()->check(CLI::Range(0.0, 1.0));
  fg->add_option("--texture", fuse_texture, "Texture for an OBJ export of the fused depth")->check(CLI::ExistingFile);
  add_runtime_options(fg, fg_args);

  std::string metric_a, metric_b;
  auto* mt = app.add_subcommand("metrics", "Print image-quality metrics of two images as JSON");
  mt->add_option("a", metric_a, "First image")->required()->check(CLI::ExistingFile);
  mt->add_option("b", metric_b, "Second image")->required()->check(CLI::ExistingFile);
  add_runtime_options(mt, mt_args);

  std::string render_depth, render_texture;
  double render_yaw = 0;
  auto* rd = app.add_subcommand("render", "Shaded orthographic preview of a textured depth map");
  rd->add_option("--depth", render_depth, "FDSTD1 depth")->required()->check(CLI::ExistingFile);
  rd->add_option("--texture", render_texture, "Texture image")->required()->check(CLI::ExistingFile);
  rd->add_option("--yaw", render_yaw, "Yaw in degrees")->check(CLI::Range(-90.0, 90.0));
  add_runtime_options(rd, rd_args);

  std::vector<std::string> storage{"fdst"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*t) return do_transfer(transfer, t_args, out);
    if (*r) {
      recon.ss_style = hd_input;
      recon.cd_style = hd_input;
      return do_transfer(recon, r_args, out);
    }
    if (*rt) return do_transfer(region, rt_args, out);
    if (*fg) return do_fuse(fuse, fuse_alpha, fuse_texture, fg_args, out);
    if (*mt) return do_metrics(metric_a, metric_b, mt_args, mt->get_option("--out-dir")->count() > 0, out);
    if (*rd) return do_render(render_depth, render_texture, render_yaw, rd_args, out);
  } catch (const UsageError& e) {
    err << "fdst: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "fdst: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace fdst

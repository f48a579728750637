#include <sstream>

#include "doctest.h"
#include "fdst/cli.hpp"
#include "fdst/geometry.hpp"
#include "fdst/image_io.hpp"
#include "fdst/metrics.hpp"
#include "fdst/optimizer.hpp"
#include "test_support.hpp"

using namespace fdst;
using namespace fdst::test;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

// Fixture images on disk: a 20x16 content, a 16x16 style and their masks.
struct Workspace {
  TempDir dir;
  std::string content, style, full, left, empty, small;
  explicit Workspace(const std::string& name) : dir(name) {
    std::mt19937_64 rng(17);
    content = (dir / "content.png").string();
    style = (dir / "style.png").string();
    save_image(random_image(20, 16, 3, rng), content);
    save_image(random_image(16, 16, 3, rng), style);
    full = (dir / "full.png").string();
    save_image(Image(20, 16, 1, 1.0), full);
    save_image(Image(16, 16, 1, 1.0), (dir / "style_full.png").string());
    Image l(20, 16, 1, 0.0);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 10; ++x) l.at(x, y, 0) = 1.0;
    left = (dir / "left.png").string();
    save_image(l, left);
    empty = (dir / "empty.png").string();
    save_image(Image(20, 16, 1, 0.0), empty);
    small = (dir / "small.png").string();
    save_image(Image(8, 8, 1, 1.0), small);
  }
  std::string out(const std::string& name) const { return (dir / name).string(); }
  std::string style_full() const { return (dir / "style_full.png").string(); }
};

std::vector<std::string> quick(std::vector<std::string> args, const std::string& out_dir, const char* threads = "1",
                               const char* seed = "3") {
  for (std::string s : {"--resolutions", "12,20", "--iterations", "2", "--samples", "32", "--width-divisor", "16",
                        "--seed", seed, "--threads", threads, "--out-dir"})
    args.push_back(s);
  args.push_back(out_dir);
  return args;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and runtime errors map to exit codes") {
    Workspace ws("cli_errors");
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"reconstruct", "--content", ws.content}).code == 2);
    CHECK(run({"transfer", "--content", ws.content}).code == 2);
    CHECK(run({"transfer", "--content", ws.out("absent.png"), "--cd-style", ws.style}).code == 2);
    CHECK(run({"transfer", "--content", ws.content, "--cd-style", ws.style, "--resolutions", "64,32", "--out-dir",
               ws.out("o")})
              .code == 2);
    CHECK(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions",
                     ws.empty + "," + ws.style_full()},
                    ws.out("o")))
              .code == 2);
    CHECK(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions",
                     ws.small + "," + ws.style_full()},
                    ws.out("o")))
              .code == 2);
    CHECK(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions", ws.full},
                    ws.out("o")))
              .code == 2);

    std::ofstream(ws.dir / "broken.png") << "not an image";
    const CliResult broken = run(quick({"transfer", "--content", ws.out("broken.png"), "--cd-style", ws.style}, ws.out("o")));
    CHECK(broken.code == 1);
    CHECK(broken.err.find("fdst:") != std::string::npos);
    std::ofstream(ws.dir / "bad.fdstd") << "FDSTD1";
    CHECK(run({"fuse-geometry", "--depth", ws.out("bad.fdstd"), "--style-depth", ws.out("bad.fdstd"), "--alpha", "0.5",
               "--out-dir", ws.out("f")})
              .code == 1);
  }

  TEST_CASE("defaults are echoed in the manifest") {
    Workspace ws("cli_defaults");
    const CliResult r = run({"transfer", "--content", ws.content, "--cd-style", ws.style, "--iterations", "0",
                             "--threads", "1", "--out-dir", ws.out("o")});
    REQUIRE(r.code == 0);
    for (const char* f : {"stylized.png", "loss.csv", "manifest.json"}) CHECK(std::filesystem::exists(ws.dir / "o" / f));
    const auto m = read_json(ws.dir / "o" / "manifest.json");
    CHECK(m["config"]["alpha"] == 1.0);
    CHECK(m["config"]["beta"] == 3.0);
    CHECK(m["config"]["lambda"] == 0.5);
    CHECK(m["config"]["eta"] == 1.0);
    CHECK(m["config"]["resolutions"] == std::vector<int>{64, 128, 256, 512});
    CHECK(m["config"]["iterations_per_resolution"] == 0);
    CHECK(m["extractor"]["kind"] == "builtin-vgg16");
    CHECK(m["extractor"]["width_divisor"] == 2);
    CHECK(m["inputs"][1]["role"] == "ss_style");
    CHECK(m["inputs"][1]["path"] == ws.content);
    CHECK(m["inputs"][0]["crc32"] == file_crc32(ws.content));
  }

  TEST_CASE("zero iterations write the initialization") {
    Workspace ws("cli_init");
    REQUIRE(run({"transfer", "--content", ws.content, "--cd-style", ws.style, "--iterations", "0", "--resolutions", "20",
                 "--threads", "1", "--out-dir", ws.out("o")})
                .code == 0);
    TransferConfig cfg;
    cfg.resolutions = {20};
    const Image content = load_image(ws.content), style = load_image(ws.style);
    const Image init = initialize_output(content, style, cfg);
    const Image expected = clamp01(synthesize_from_pyramid(decompose_laplacian(init, std::min(5, max_pyramid_levels(20, 16)))));
    save_image(expected, ws.out("expected.png"));
    CHECK(read_bytes(ws.dir / "o" / "stylized.png") == read_bytes(ws.dir / "expected.png"));
  }

  TEST_CASE("fixed seed runs are byte identical and thread independent") {
    Workspace ws("cli_determinism");
    auto args = [&](const std::string& out, const char* threads) {
      return quick({"transfer", "--content", ws.content, "--cd-style", ws.style}, ws.out(out), threads);
    };
    REQUIRE(run(args("a", "1")).code == 0);
    REQUIRE(run(args("b", "1")).code == 0);
    REQUIRE(run(args("c", "4")).code == 0);
    for (const char* f : {"stylized.png", "loss.csv"}) {
      CHECK(read_bytes(ws.dir / "a" / f) == read_bytes(ws.dir / "b" / f));
      CHECK(read_bytes(ws.dir / "a" / f) == read_bytes(ws.dir / "c" / f));
    }
    CHECK(run(quick({"transfer", "--content", ws.content, "--cd-style", ws.style}, ws.out("d"), "1", "4")).code == 0);
    CHECK(read_bytes(ws.dir / "a" / "loss.csv") != read_bytes(ws.dir / "d" / "loss.csv"));
  }

  TEST_CASE("reconstruct preset uses the HD input for both styles") {
    Workspace ws("cli_reconstruct");
    REQUIRE(run(quick({"reconstruct", "--content", ws.content, "--hd-input", ws.style}, ws.out("r"))).code == 0);
    REQUIRE(run(quick({"transfer", "--content", ws.content, "--ss-style", ws.style, "--cd-style", ws.style}, ws.out("t")))
                .code == 0);
    const auto m = read_json(ws.dir / "r" / "manifest.json");
    CHECK(m["command"] == "reconstruct");
    CHECK(m["config"]["task"] == "reconstruct");
    CHECK(m["inputs"][1]["path"] == ws.style);
    CHECK(m["inputs"][2]["path"] == ws.style);
    CHECK(read_bytes(ws.dir / "r" / "stylized.png") == read_bytes(ws.dir / "t" / "stylized.png"));
  }

  TEST_CASE("region-transfer equivalences") {
    Workspace ws("cli_region");
    REQUIRE(run(quick({"transfer", "--content", ws.content, "--cd-style", ws.style}, ws.out("plain"))).code == 0);
    REQUIRE(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions",
                       ws.full + "," + ws.style_full()},
                      ws.out("full")))
                .code == 0);
    CHECK(read_bytes(ws.dir / "plain" / "stylized.png") == read_bytes(ws.dir / "full" / "stylized.png"));

    REQUIRE(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions",
                       ws.full + "," + ws.style_full() + ",0"},
                      ws.out("zero")))
                .code == 0);
    const Image content = load_image(ws.content);
    CHECK(load_image(ws.dir / "zero" / "stylized.png").data == content.data);

    REQUIRE(run(quick({"region-transfer", "--content", ws.content, "--cd-style", ws.style, "--regions",
                       ws.left + "," + ws.style_full()},
                      ws.out("left")))
                .code == 0);
    const Image left = load_image(ws.dir / "left" / "stylized.png");
    for (int y = 0; y < 16; ++y)
      for (int x = 10; x < 20; ++x)
        for (int c = 0; c < 3; ++c) CHECK(left.at(x, y, c) == content.at(x, y, c));
    CHECK(read_json(ws.dir / "left" / "manifest.json")["extra"]["regions"][0]["weight"] == 1.0);
  }

  TEST_CASE("fuse-geometry examples") {
    Workspace ws("cli_fuse");
    save_depth({3, 2, std::vector<double>(6, 2.0)}, ws.out("d2.fdstd"));
    save_depth({3, 2, std::vector<double>(6, 4.0)}, ws.out("d4.fdstd"));
    REQUIRE(run({"fuse-geometry", "--depth", ws.out("d2.fdstd"), "--style-depth", ws.out("d4.fdstd"), "--alpha", "1",
                 "--out-dir", ws.out("one")})
                .code == 0);
    CHECK(read_bytes(ws.dir / "one" / "fused_depth.fdstd") == read_bytes(ws.dir / "d2.fdstd"));
    REQUIRE(run({"fuse-geometry", "--depth", ws.out("d2.fdstd"), "--style-depth", ws.out("d4.fdstd"), "--alpha",
                 "0.5", "--texture", ws.style, "--out-dir", ws.out("half")})
                .code == 0);
    const DepthMap half = load_depth(ws.dir / "half" / "fused_depth.fdstd");
    for (double v : half.values) CHECK(v == 3.0);
    CHECK(std::filesystem::exists(ws.dir / "half" / "mesh.obj"));
    CHECK(read_json(ws.dir / "half" / "manifest.json")["extra"]["alpha"] == 0.5);
    CHECK(run({"fuse-geometry", "--depth", ws.out("d2.fdstd"), "--style-depth", ws.out("d4.fdstd"), "--alpha", "1.5"})
              .code == 2);
  }

  TEST_CASE("transfer with geometry writes the mesh and preview") {
    Workspace ws("cli_geometry");
    std::vector<double> bumpy;
    for (int i = 0; i < 16 * 20; ++i) bumpy.push_back(1.0 + 0.01 * (i % 7));
    save_depth({20, 16, bumpy}, ws.out("d.fdstd"));
    save_depth({10, 8, std::vector<double>(80, 1.5)}, ws.out("s.fdstd"));
    REQUIRE(run(quick({"transfer", "--content", ws.content, "--cd-style", ws.style, "--depth", ws.out("d.fdstd"),
                       "--style-depth", ws.out("s.fdstd"), "--geo-alpha", "0.25", "--yaw", "20"},
                      ws.out("g")))
                .code == 0);
    for (const char* f : {"fused_depth.fdstd", "mesh.obj", "mesh.mtl", "mesh.png", "preview.png"})
      CHECK(std::filesystem::exists(ws.dir / "g" / f));
    REQUIRE(run({"render", "--depth", ws.out("d.fdstd"), "--texture", ws.content, "--yaw", "10", "--out-dir", ws.out("p")})
                .code == 0);
    CHECK(load_image(ws.dir / "p" / "preview.png").width == 20);
  }

  TEST_CASE("metrics prints JSON") {
    Workspace ws("cli_metrics");
    const CliResult r = run({"metrics", ws.content, ws.content});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["psnr"] == kPsnrCap);
    CHECK(j["ssim"] == 1.0);
    CHECK(run({"metrics", ws.content, ws.style}).code == 2);
    REQUIRE(run({"metrics", ws.content, ws.content, "--out-dir", ws.out("m")}).code == 0);
    CHECK(read_json(ws.dir / "m" / "metrics.json") == j);
  }

  TEST_CASE("re-running from a manifest reproduces the outputs") {
    Workspace ws("cli_rerun");
    REQUIRE(run(quick({"transfer", "--content", ws.content, "--cd-style", ws.style, "--lambda", "0.75", "--pool", "max"},
                      ws.out("first")))
                .code == 0);
    REQUIRE(run({"transfer", "--content", ws.content, "--cd-style", ws.style, "--config", ws.out("first/manifest.json"),
                 "--threads", "1", "--out-dir", ws.out("second")})
                .code == 0);
    CHECK(read_bytes(ws.dir / "first" / "stylized.png") == read_bytes(ws.dir / "second" / "stylized.png"));
    const RunManifest a = manifest_from_json(read_json(ws.dir / "first" / "manifest.json"));
    const RunManifest b = manifest_from_json(read_json(ws.dir / "second" / "manifest.json"));
    CHECK(a.config == b.config);
    CHECK(a.extractor == b.extractor);
    CHECK(b.config.weights.lambda == 0.75);
    CHECK(b.extractor["pool"] == "max");

    // Explicit flags still win over the manifest.
    REQUIRE(run({"transfer", "--content", ws.content, "--cd-style", ws.style, "--config", ws.out("first/manifest.json"),
                 "--lambda", "0.5", "--threads", "1", "--out-dir", ws.out("third")})
                .code == 0);
    CHECK(read_json(ws.dir / "third" / "manifest.json")["config"]["lambda"] == 0.5);
  }

  TEST_CASE("manifest JSON round trip") {
    RunManifest m;
    m.command = "transfer";
    m.config.resolutions = {32, 64};
    m.config.seed = 99;
    m.extractor = {{"kind", "builtin-vgg16"}, {"width_divisor", 4}};
    m.inputs = {{"content", "a.png", "0badf00d"}, {"cd_style", "b.png", "12345678"}};
    m.outputs = {"stylized.png", "loss.csv", "manifest.json"};
    m.stage_seconds = {0.125, 2.5};
    m.final_terms = {0.1, 0.2, 0.3, 0.45, {}};
    m.extra = {{"yaw", 15.0}};
    CHECK(manifest_from_json(nlohmann::json::parse(to_json(m).dump())) == m);
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json{{"command", "x"}}), std::invalid_argument);
  }

  TEST_CASE("file checksum") {
    TempDir dir("crc");
    std::ofstream(dir / "f.bin", std::ios::binary) << "123456789";
    CHECK(file_crc32(dir / "f.bin") == "cbf43926");
  }
}

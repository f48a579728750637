#include <bit>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fdst/metrics.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace fdst;
using namespace fdst::test;

namespace {

Image half_black_white(int w, int h, bool left_white) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = ((x < w / 2) == left_white) ? 1.0 : 0.0;
  return img;
}

std::vector<double> histogram_oracle(const Image& img) {
  std::vector<double> h(256, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double l = img.channels == 1 ? img.at(x, y, 0)
                                         : 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      h[static_cast<std::size_t>(std::lround(std::clamp(l, 0.0, 1.0) * 255.0))] += 1.0;
    }
  for (double& v : h) v /= static_cast<double>(img.width) * img.height;
  return h;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("psnr_mse examples") {
    std::mt19937_64 rng(1);
    const Image a = random_image(9, 7, 3, rng);
    const PsnrMse same = psnr_mse(a, a);
    CHECK(same.mse == 0.0);
    CHECK(same.psnr == kPsnrCap);

    const Image g(8, 8, 3, 0.3), h(8, 8, 3, 0.4);
    const PsnrMse u = psnr_mse(g, h);
    CHECK(u.mse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(u.psnr == doctest::Approx(20.0).epsilon(1e-12));

    const Image b = random_image(9, 7, 3, rng);
    double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    const double mse = s / static_cast<double>(a.data.size());
    const PsnrMse r = psnr_mse(a, b);
    CHECK(std::abs(r.mse - mse) <= 1e-12);
    CHECK(std::abs(r.psnr - 10.0 * std::log10(1.0 / mse)) <= 1e-12);
    CHECK_THROWS_AS(psnr_mse(a, random_image(7, 9, 3, rng)), std::invalid_argument);
  }

  TEST_CASE("psnr decreases along a noise ladder") {
    std::mt19937_64 rng(2);
    const Image a = random_image(32, 32, 3, rng, 0.2, 0.8);
    std::vector<double> sign(a.data.size());
    for (double& v : sign) v = rng() % 2 ? 1.0 : -1.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 1; step <= 10; ++step) {
      Image b = a;
      for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] += 0.01 * step * sign[i];
      const double p = psnr_mse(a, b).psnr;
      CHECK(p < previous);
      previous = p;
    }
  }

  TEST_CASE("ssim examples") {
    std::mt19937_64 rng(3);
    const Image a = random_image(20, 16, 3, rng);
    CHECK(ssim(a, a) == 1.0);

    const double ma = 0.2, mb = 0.8, c1 = 1e-4, c2 = 9e-4;
    const double expected = (2 * ma * mb + c1) * c2 / ((ma * ma + mb * mb + c1) * c2);
    CHECK(ssim(Image(16, 16, 1, 0.2), Image(16, 16, 1, 0.8)) == doctest::Approx(expected).epsilon(1e-12));

    const Image b = random_image(20, 16, 3, rng);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-9);
    CHECK_THROWS_AS(ssim(Image(10, 20, 3), Image(10, 20, 3)), std::invalid_argument);
    CHECK_THROWS_AS(ssim(a, random_image(16, 20, 3, rng)), std::invalid_argument);
  }

  TEST_CASE("ssim matches the reference implementation") {
    std::ifstream in(std::filesystem::path(FDST_ORACLE_DIR) / "ssim_reference.json");
    REQUIRE(in);
    const auto cases = nlohmann::json::parse(in);
    REQUIRE(cases.size() == 4);
    for (const auto& c : cases) {
      const int w = c["width"], h = c["height"], ch = c["channels"], noise = c["noise"];
      const Image a = hash_image(w, h, ch, c["seed_a"].get<std::uint64_t>());
      const Image b = noise ? noisy(a, c["seed_b"].get<std::uint64_t>(), noise)
                            : hash_image(w, h, ch, c["seed_b"].get<std::uint64_t>());
      CHECK(std::abs(ssim(a, b) - c["ssim"].get<double>()) <= 1e-6);
    }
  }

  TEST_CASE("cosine similarity") {
    std::mt19937_64 rng(4);
    const Image a = random_image(6, 5, 3, rng), b = random_image(6, 5, 3, rng);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    Image twice = a;
    for (double& v : twice.data) v *= 2;
    CHECK(cosine_similarity(a, twice) == doctest::Approx(1.0).epsilon(1e-15));
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      d += a.data[i] * b.data[i];
      na += a.data[i] * a.data[i];
      nb += b.data[i] * b.data[i];
    }
    CHECK(std::abs(cosine_similarity(a, b) - d / std::sqrt(na * nb)) <= 1e-12);
    CHECK_THROWS_AS(cosine_similarity(a, Image(6, 5, 3, 0.0)), std::invalid_argument);
  }

  TEST_CASE("ahash distance") {
    std::mt19937_64 rng(5);
    const Image a = random_image(30, 20, 3, rng);
    CHECK(ahash_distance(a, a) == 0);
    CHECK(ahash_distance(half_black_white(16, 16, true), half_black_white(16, 16, false)) == 64);

    for (int trial = 0; trial < 20; ++trial) {
      const Image x = random_image(13 + trial, 11, 3, rng), y = random_image(9, 17 + trial, 3, rng);
      auto hash_bits = [](const Image& img) {
        const Image small = resize_bilinear(to_luma(img), 8, 8);
        double mean = 0;
        for (int i = 0; i < 64; ++i) mean += small.data[i];
        mean /= 64;
        std::vector<int> bits(64);
        for (int i = 0; i < 64; ++i) bits[i] = small.data[i] >= mean;
        return bits;
      };
      const auto bx = hash_bits(x), by = hash_bits(y);
      int distance = 0;
      for (int i = 0; i < 64; ++i) distance += bx[i] != by[i];
      CHECK(ahash_distance(x, y) == distance);
    }
  }

  TEST_CASE("ahash distance is a metric on hashes") {
    std::mt19937_64 rng(6);
    std::vector<Image> pool;
    for (int i = 0; i < 8; ++i) pool.push_back(random_image(12, 12, 3, rng));
    for (const Image& a : pool)
      for (const Image& b : pool) {
        CHECK(ahash_distance(a, b) == ahash_distance(b, a));
        for (const Image& c : pool) CHECK(ahash_distance(a, c) <= ahash_distance(a, b) + ahash_distance(b, c));
      }
  }

  TEST_CASE("hist similarity") {
    std::mt19937_64 rng(7);
    const Image a = random_image(20, 20, 3, rng);
    CHECK(hist_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hist_similarity(Image(8, 8, 3, 0.0), Image(8, 8, 3, 1.0)) == 0.0);
    CHECK(hist_similarity(Image(8, 8, 3, 0.5), Image(4, 4, 3, 0.5)) == 1.0);

    const Image b = random_image(15, 25, 1, rng);
    const auto ha = histogram_oracle(a), hb = histogram_oracle(b);
    const double ma = std::accumulate(ha.begin(), ha.end(), 0.0) / 256, mb = std::accumulate(hb.begin(), hb.end(), 0.0) / 256;
    double cov = 0, va = 0, vb = 0;
    for (int i = 0; i < 256; ++i) {
      cov += (ha[i] - ma) * (hb[i] - mb);
      va += (ha[i] - ma) * (ha[i] - ma);
      vb += (hb[i] - mb) * (hb[i] - mb);
    }
    CHECK(std::abs(hist_similarity(a, b) - cov / std::sqrt(va * vb)) <= 1e-9);
  }

  TEST_CASE("metric report") {
    std::mt19937_64 rng(8);
    const Image a = random_image(16, 16, 3, rng), b = random_image(16, 16, 3, rng);
    const MetricReport r = compute_metrics(a, b);
    CHECK(r.mse >= 0);
    CHECK(r.psnr == doctest::Approx(10 * std::log10(1 / r.mse)).epsilon(1e-12));
    CHECK(r.ssim == ssim(a, b));
    const auto j = to_json(r);
    for (const char* key : {"psnr", "ssim", "mse", "cosine", "ahash_distance", "hist_similarity"}) CHECK(j.contains(key));
  }
}

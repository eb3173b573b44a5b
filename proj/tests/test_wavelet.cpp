#include <doctest.h>

#include "support.hpp"
#include "wavets/error.hpp"
#include "wavets/wavelet.hpp"

using namespace wavets;

namespace {

constexpr double kS = 0.70710678118654752440;

// Explicit orthonormal Haar basis: row r of the T x T matrix is the basis
// vector whose inner product with x gives coefficient r in the layout
// [LL_K, LH_K, ..., LH_1]. Built from block supports, not from filters.
std::vector<std::vector<double>> haar_matrix(std::size_t T, std::size_t K) {
  std::vector<std::vector<double>> rows;
  const std::size_t top = std::size_t{1} << K;
  for (std::size_t j = 0; j < T / top; ++j) {
    std::vector<double> r(T, 0.0);
    for (std::size_t t = j * top; t < (j + 1) * top; ++t) r[t] = std::pow(2.0, -0.5 * K);
    rows.push_back(r);
  }
  for (std::size_t l = K; l >= 1; --l) {
    const std::size_t w = std::size_t{1} << l;
    for (std::size_t j = 0; j < T / w; ++j) {
      std::vector<double> r(T, 0.0);
      const double h = std::pow(2.0, -0.5 * static_cast<double>(l));
      for (std::size_t t = j * w; t < j * w + w / 2; ++t) r[t] = h;
      for (std::size_t t = j * w + w / 2; t < (j + 1) * w; ++t) r[t] = -h;
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<double> flatten(const WaveletPyramid& p) {
  std::vector<double> out = p.approx;
  for (std::size_t l = p.levels; l >= 1; --l)
    out.insert(out.end(), p.details[l - 1].begin(), p.details[l - 1].end());
  return out;
}

}  // namespace

TEST_CASE("db1 filter bank coefficients") {
  const FilterBank fb = make_filterbank("db1");
  CHECK(fb.dec_lo[0] == doctest::Approx(0.70710678));
  CHECK(fb.dec_lo[1] == doctest::Approx(0.70710678));
  CHECK(fb.dec_hi[0] == doctest::Approx(0.70710678));
  CHECK(fb.dec_hi[1] == doctest::Approx(-0.70710678));
  CHECK(fb.dec_lo[0] * fb.dec_hi[0] + fb.dec_lo[1] * fb.dec_hi[1] == 0.0);
  CHECK(fb.dec_lo[0] * fb.dec_lo[0] + fb.dec_lo[1] * fb.dec_lo[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("supported wavelet names share the Haar bank") {
  const FilterBank ref = make_filterbank("db1");
  for (const char* name : {"bior1.1", "rbio1.1"}) {
    const FilterBank fb = make_filterbank(name);
    CHECK(fb.name == name);
    CHECK(fb.dec_lo == ref.dec_lo);
    CHECK(fb.dec_hi == ref.dec_hi);
    CHECK(fb.rec_lo == ref.rec_lo);
    CHECK(fb.rec_hi == ref.rec_hi);
  }
  CHECK_THROWS_AS(make_filterbank("db4"), UnknownWaveletError);
  CHECK_THROWS_AS(make_filterbank(""), UnknownWaveletError);
}

TEST_CASE("dwt_level hand cases") {
  const FilterBank fb = make_filterbank("db1");
  SUBCASE("constant") {
    const auto r = dwt_level(std::vector<double>{1, 1, 1, 1}, fb);
    CHECK(r.approx[0] == doctest::Approx(1.41421356));
    CHECK(r.approx[1] == doctest::Approx(1.41421356));
    CHECK(r.detail == std::vector<double>{0, 0});
  }
  SUBCASE("ramp") {
    const auto r = dwt_level(std::vector<double>{1, 2, 3, 4}, fb);
    CHECK(r.approx[0] == doctest::Approx(2.12132034));
    CHECK(r.approx[1] == doctest::Approx(4.94974747));
    CHECK(r.detail[0] == doctest::Approx(-0.70710678));
    CHECK(r.detail[1] == doctest::Approx(-0.70710678));
  }
  SUBCASE("impulse") {
    const auto r = dwt_level(std::vector<double>{1, 0, 0, 0}, fb);
    CHECK(r.approx == std::vector<double>{kS, 0});
    CHECK(r.detail == std::vector<double>{kS, 0});
  }
  CHECK_THROWS_AS(dwt_level(std::vector<double>{1, 2, 3}, fb), OddLengthError);
  CHECK_THROWS_AS(dwt_level(std::vector<double>{}, fb), OddLengthError);
}

TEST_CASE("idwt_level hand cases") {
  const FilterBank fb = make_filterbank("db1");
  const std::vector<double> c{1.41421356237309515, 1.41421356237309515};
  const auto one = idwt_level(c, std::vector<double>{0, 0}, fb);
  CHECK(testing::max_abs_diff(one, std::vector<double>{1, 1, 1, 1}) < 1e-12);

  const auto fwd = dwt_level(std::vector<double>{1, 2, 3, 4}, fb);
  const auto back = idwt_level(fwd.approx, fwd.detail, fb);
  CHECK(testing::max_abs_diff(back, std::vector<double>{1, 2, 3, 4}) < 1e-12);

  const auto step = idwt_level(std::vector<double>{1}, std::vector<double>{0}, fb);
  CHECK(step[0] == doctest::Approx(0.70710678));
  CHECK(step[1] == doctest::Approx(0.70710678));

  CHECK_THROWS_AS(idwt_level(std::vector<double>{1, 2}, std::vector<double>{1}, fb),
                  LengthMismatchError);
}

TEST_CASE("dwt_multi cascade") {
  const FilterBank fb = make_filterbank("db1");
  const auto p = dwt_multi(std::vector<double>{1, 2, 3, 4}, fb, 2);
  CHECK(p.levels == 2);
  CHECK(p.original_length == 4);
  REQUIRE(p.approx.size() == 1);
  CHECK(p.approx[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(p.details[1][0] == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(p.details[0][0] == doctest::Approx(-0.70710678));
  CHECK(p.details[0][1] == doctest::Approx(-0.70710678));

  const double c = 3.25;
  const auto q = dwt_multi(std::vector<double>(8, c), fb, 3);
  CHECK(q.approx[0] == doctest::Approx(c * std::pow(2.0, 1.5)).epsilon(1e-15));
  for (const auto& d : q.details)
    for (double v : d) CHECK(v == 0.0);
}

TEST_CASE("dwt_multi rejects non-dyadic lengths and names the level") {
  const FilterBank fb = make_filterbank("db1");
  try {
    dwt_multi(std::vector<double>(6, 1.0), fb, 2);
    FAIL("expected a divisibility error");
  } catch (const DivisibilityError& e) {
    CHECK(e.level() == 2);
    CHECK(std::string(e.what()).find("level 2") != std::string::npos);
  }
  CHECK_THROWS_AS(dwt_multi(std::vector<double>(8, 1.0), fb, 0), ValidationError);
  CHECK_THROWS_AS(dwt_multi(std::vector<double>(4, 1.0), fb, 3), DivisibilityError);
}

TEST_CASE("idwt_multi hand cases") {
  const FilterBank fb = make_filterbank("db1");
  const auto p = dwt_multi(std::vector<double>{1, 2, 3, 4}, fb, 2);
  CHECK(testing::max_abs_diff(idwt_multi(p, fb), std::vector<double>{1, 2, 3, 4}) < 1e-12);

  const auto z = idwt_multi(zero_pyramid(8, 2), fb);
  CHECK(z == std::vector<double>(8, 0.0));

  WaveletPyramid q = zero_pyramid(4, 2);
  q.approx[0] = 5.0;
  const auto r = idwt_multi(q, fb);
  CHECK(testing::max_abs_diff(r, std::vector<double>(4, 2.5)) < 1e-12);

  WaveletPyramid bad = zero_pyramid(8, 2);
  bad.details[0].pop_back();
  CHECK_THROWS_AS(idwt_multi(bad, fb), InconsistentPyramidError);
  bad = zero_pyramid(8, 2);
  bad.details.pop_back();
  CHECK_THROWS_AS(idwt_multi(bad, fb), InconsistentPyramidError);
}

TEST_CASE("perfect reconstruction over seeded random signals") {
  std::mt19937_64 gen(1);
  for (const std::string name : {"db1", "bior1.1", "rbio1.1"}) {
    const FilterBank fb = make_filterbank(name);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t K = 1 + gen() % 5;
      const std::size_t block = std::size_t{1} << K;
      const std::size_t lo = std::max<std::size_t>(1, 8 / block);
      const std::size_t T = block * (lo + gen() % (1024 / block - lo + 1));  // 8 .. 1024
      const auto x = testing::random_vector(gen, T, 10.0);
      worst = std::max(worst, testing::max_abs_diff(idwt_multi(dwt_multi(x, fb, K), fb), x));
    }
    CAPTURE(name);
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("Parseval energy identity") {
  std::mt19937_64 gen(2);
  const FilterBank fb = make_filterbank("db1");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 1 + gen() % 5;
    const std::size_t T = (std::size_t{1} << K) * (1 + gen() % 32);
    const auto x = testing::random_vector(gen, T, 5.0);
    const auto p = dwt_multi(x, fb, K);
    double e = testing::sum_sq(p.approx);
    for (const auto& d : p.details) e += testing::sum_sq(d);
    const double ex = testing::sum_sq(x);
    CHECK(std::abs(ex - e) / ex < 1e-12);
  }
}

TEST_CASE("dwt_multi is linear") {
  std::mt19937_64 gen(3);
  const FilterBank fb = make_filterbank("db1");
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 1 + gen() % 4;
    const std::size_t T = (std::size_t{1} << K) * (1 + gen() % 8);
    const auto x = testing::random_vector(gen, T);
    const auto y = testing::random_vector(gen, T);
    const double a = testing::uniform(gen, -3, 3), b = testing::uniform(gen, -3, 3);
    std::vector<double> mix(T);
    for (std::size_t i = 0; i < T; ++i) mix[i] = a * x[i] + b * y[i];
    const auto px = flatten(dwt_multi(x, fb, K));
    const auto py = flatten(dwt_multi(y, fb, K));
    const auto pm = flatten(dwt_multi(mix, fb, K));
    for (std::size_t i = 0; i < T; ++i) CHECK(std::abs(pm[i] - (a * px[i] + b * py[i])) < 1e-12);
  }
}

TEST_CASE("coefficients match an explicit orthonormal basis matrix") {
  std::mt19937_64 gen(4);
  const FilterBank fb = make_filterbank("db1");
  for (std::size_t T : {2, 4, 8, 16}) {
    for (std::size_t K = 1; (std::size_t{1} << K) <= T; ++K) {
      const auto H = haar_matrix(T, K);
      REQUIRE(H.size() == T);
      const auto x = testing::random_vector(gen, T);
      const auto coeff = flatten(dwt_multi(x, fb, K));
      for (std::size_t r = 0; r < T; ++r) {
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) v += H[r][t] * x[t];
        CHECK(std::abs(coeff[r] - v) < 1e-12);
      }
    }
  }
}

TEST_CASE("synthesis adjoint is the transpose of synthesis") {
  std::mt19937_64 gen(5);
  const FilterBank fb = make_filterbank("db1");
  const FilterBank adj = synthesis_adjoint(fb);
  // <idwt(c), y> == <c, dwt_adj(y)> for random c, y.
  const auto a = testing::random_vector(gen, 4), d = testing::random_vector(gen, 4);
  const auto y = testing::random_vector(gen, 8);
  const auto s = idwt_level(a, d, fb);
  const auto r = dwt_level(y, adj);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < 8; ++i) lhs += s[i] * y[i];
  for (std::size_t i = 0; i < 4; ++i) rhs += a[i] * r.approx[i] + d[i] * r.detail[i];
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

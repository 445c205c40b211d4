// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otdr/baselines.hpp"
#include "otdr/metrics.hpp"

using namespace otdr;
using namespace otdr::baselines;

TEST_CASE("butterworth: unit DC gain, -3 dB at cutoff, deep stopband") {
  for (real cutoff : {0.05, 0.1, 0.25, 0.4}) {
    IirFilter f = design_butterworth3(cutoff);
    CHECK(filter_gain(f, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(filter_gain(f, cutoff) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));

    // third-order rolloff: one octave above cutoff is ~18 dB down
    if (2 * cutoff < 0.5)
      CHECK(filter_gain(f, 2 * cutoff) < 0.2);
  }

  // constant input passes through a zero-phase run untouched
  IirFilter f = design_butterworth3(0.08);
  std::vector<real> dc(300, 0.7);
  auto y = butterworth_lowpass(dc, f);
  for (real v : y) CHECK(v == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("butterworth: sinusoid at cutoff is attenuated to 1/2 by the two passes") {
  const real cutoff = 0.05;
  IirFilter f = design_butterworth3(cutoff);
  const int n = 2000;
  std::vector<real> x(n);
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = std::sin(2.0 * M_PI * cutoff * i);
  auto y = butterworth_lowpass(x, f);
  real amp = 0.0;
  for (int i = n / 4; i < 3 * n / 4; ++i) amp = std::max(amp, std::abs(y[static_cast<std::size_t>(i)]));
  // single-pass gain 1/sqrt(2), squared for forward-backward
  CHECK(amp == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("butterworth: Nyquist-rate alternation with low cutoff vanishes") {
  IirFilter f = design_butterworth3(0.05);
  std::vector<real> x(500);
  for (int i = 0; i < 500; ++i) x[static_cast<std::size_t>(i)] = (i % 2) ? 1.0 : -1.0;
  auto y = butterworth_lowpass(x, f);
  real amp = 0.0;
  for (int i = 100; i < 400; ++i) amp = std::max(amp, std::abs(y[static_cast<std::size_t>(i)]));
  CHECK(amp < 0.01);
}

TEST_CASE("butterworth: zero-phase filtering does not shift an impulse") {
  IirFilter f = design_butterworth3(0.08);
  const int n = 401;
  Rng rng(9);
  std::vector<real> x(n);
  for (auto& v : x) v = 0.02 * rng.normal();
  x[200] += 1.0;
  auto y = butterworth_lowpass(x, f);
  // cross-correlation peak lag between input and output
  int best_lag = -100;
  real best = -1e9;
  for (int lag = -20; lag <= 20; ++lag) {
    real acc = 0.0;
    for (int i = 50; i < n - 50; ++i)
      acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("iir construction rejects unstable denominators") {
  // pole at z = 2
  CHECK_THROWS_AS(IirFilter::from_coefficients({1.0}, {1.0, -2.0}, 0.1), invalid_argument_error);
  CHECK_THROWS_AS(IirFilter::from_coefficients({1.0}, {0.5, 0.1}, 0.1), invalid_argument_error);
  CHECK_THROWS_AS(design_butterworth3(0.6), invalid_argument_error);
}

TEST_CASE("wavelets: perfect reconstruction for every family and level") {
  Rng rng(77);
  for (WaveletFamily fam : {WaveletFamily::Sym2, WaveletFamily::Sym3, WaveletFamily::Sym7,
                            WaveletFamily::Bior4_4}) {
    for (int n : {100, 101, 64, 200}) {
      WaveletSpec spec;
      spec.family = fam;
      const int maxlev = spec.max_levels(n);
      REQUIRE(maxlev >= 1);
      for (int lev : {1, maxlev}) {
        spec.levels = lev;
        std::vector<real> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.uniform(-1, 1);
        auto pyr = dwt(x, spec);
        auto back = idwt(pyr, spec);
        REQUIRE(back.size() == x.size());
        real err = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back[i] - x[i]));
        CHECK_MESSAGE(err < 1e-8, to_string(fam), " n=", n, " lev=", lev, " err=", err);
      }
    }
  }
}

TEST_CASE("wavelets: level bound enforced") {
  WaveletSpec spec;
  spec.family = WaveletFamily::Sym7;
  CHECK(spec.max_levels(100) == 2);
  spec.levels = 3;
  CHECK_THROWS_AS(dwt(std::vector<real>(100, 0.0), spec), invalid_argument_error);
  spec.family = WaveletFamily::Sym2;
  CHECK(spec.max_levels(100) == 5);
}

TEST_CASE("wavelets: constant input has vanishing details") {
  WaveletSpec spec;
  spec.family = WaveletFamily::Sym3;
  spec.levels = 3;
  std::vector<real> x(128, 2.5);
  auto pyr = dwt(x, spec);
  for (const auto& level : pyr.details)
    for (real v : level) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("wavelets: Parseval holds for orthogonal banks in periodized mode") {
  Rng rng(13);
  struct Case {
    WaveletFamily fam;
    int n, lev;
  };
  for (Case c : {Case{WaveletFamily::Sym2, 128, 4}, Case{WaveletFamily::Sym3, 128, 3},
                 Case{WaveletFamily::Sym7, 64, 2}}) {
    WaveletSpec spec;
    spec.family = c.fam;
    spec.levels = c.lev;
    spec.border = BorderMode::Periodic;
    std::vector<real> x(static_cast<std::size_t>(c.n));
    for (auto& v : x) v = rng.uniform(-1, 1);
    auto pyr = dwt(x, spec);
    real ex = 0.0, ec = 0.0;
    for (real v : x) ex += v * v;
    for (real v : pyr.approx) ec += v * v;
    for (const auto& lvl : pyr.details)
      for (real v : lvl) ec += v * v;
    CHECK(std::abs(ex - ec) < 1e-8 * ex);
    // and reconstruction still exact
    auto back = idwt(pyr, spec);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-10);
  }
  // the dual-lowpass bior bank is not an isometry; periodized mode rejects it
  WaveletSpec bad;
  bad.family = WaveletFamily::Bior4_4;
  bad.levels = 1;
  bad.border = BorderMode::Periodic;
  CHECK_THROWS_AS(dwt(std::vector<real>(64, 0.0), bad), invalid_argument_error);
}

TEST_CASE("soft threshold shrinks detail coefficients toward zero") {
  Rng rng(21);
  std::vector<real> x(100);
  for (auto& v : x) v = rng.uniform(-1, 1);
  WaveletSpec spec;
  spec.family = WaveletFamily::Sym2;
  spec.levels = 4;
  auto pyr = dwt(x, spec);
  auto original = pyr;
  const real t = 0.3;
  soft_threshold(pyr, t);
  for (std::size_t lev = 0; lev < pyr.details.size(); ++lev)
    for (std::size_t i = 0; i < pyr.details[lev].size(); ++i) {
      const real in = original.details[lev][i];
      const real out = pyr.details[lev][i];
      CHECK(std::abs(out) <= std::max(0.0, std::abs(in) - t) + 1e-12);
      CHECK(out * in >= 0.0);  // no sign flips
    }
  for (std::size_t i = 0; i < pyr.approx.size(); ++i)
    CHECK(pyr.approx[i] == original.approx[i]);
}

TEST_CASE("wavelet denoise: near-identity on clean smooth data, strong on pure noise") {
  // smooth ramp with a soft bump
  std::vector<real> smooth(100);
  for (int i = 0; i < 100; ++i)
    smooth[static_cast<std::size_t>(i)] =
        1.0 - i / 99.0 + 0.3 * std::exp(-(i - 50.0) * (i - 50.0) / 60.0);
  WaveletSpec spec;
  spec.family = WaveletFamily::Sym3;
  spec.levels = 3;
  auto den = wavelet_denoise(smooth, spec);
  CHECK(metrics::reconstruction_mse(smooth, den) < 1e-4);

  // pure Gaussian noise loses most of its energy
  Rng rng(5);
  real kept = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<real> noise(256);
    for (auto& v : noise) v = rng.normal();
    WaveletSpec sp;
    sp.family = WaveletFamily::Sym2;
    sp.levels = 4;
    auto out = wavelet_denoise(noise, sp);
    real ei = 0.0, eo = 0.0;
    for (real v : noise) ei += v * v;
    for (real v : out) eo += v * v;
    kept += eo / ei;
  }
  kept /= 20.0;
  CHECK(kept < 0.2);  // > 80% of the noise energy removed
}

TEST_CASE("tuners: argmin contract and determinism") {
  Rng rng(3);
  WindowPairs val;
  for (int k = 0; k < 12; ++k) {
    std::vector<real> clean(100), noisy(100);
    for (int i = 0; i < 100; ++i) {
      clean[static_cast<std::size_t>(i)] = 1.0 - i / 99.0;
      noisy[static_cast<std::size_t>(i)] = clean[static_cast<std::size_t>(i)] + 0.25 * rng.normal();
    }
    val.push_back({noisy, clean});
  }

  TunedButterworth tb = tune_butterworth(val);
  // winner beats every other grid point by construction
  for (real cutoff = 0.01; cutoff < 0.46; cutoff += 0.02) {
    IirFilter f = design_butterworth3(cutoff);
    real acc = 0.0;
    for (const auto& [noisy, clean] : val) acc += metrics::rmse(clean, butterworth_lowpass(noisy, f));
    acc /= static_cast<real>(val.size());
    CHECK(tb.val_rmse <= acc + 1e-12);
  }

  TunedButterworth tb2 = tune_butterworth(val);
  CHECK(tb.cutoff_norm == tb2.cutoff_norm);

  TunedWavelet tw = tune_wavelet(val);
  TunedWavelet tw2 = tune_wavelet(val);
  CHECK(tw.family == tw2.family);
  CHECK(tw.levels == tw2.levels);
  CHECK(tw.val_rmse <= tb.val_rmse + 1.0);  // sanity: both produced finite scores

  CHECK_THROWS_AS(tune_butterworth({}), invalid_argument_error);
  CHECK_THROWS_AS(tune_wavelet({}), invalid_argument_error);
}

TEST_CASE("reference denoisers: shape contract for all three kinds") {
  for (RefKind kind : {RefKind::Dae, RefKind::Cnn, RefKind::Lstm}) {
    ReferenceDenoiser model(kind, 100, 7);
    nn::Tensor x = nn::Tensor::zeros({3, 100});
    Rng rng(1);
    nn::fill_uniform(x, rng, 0, 1);
    nn::Tensor y = model.forward(x, false);
    CHECK(y.shape() == nn::Shape{3, 100});
    CHECK(!model.parameters().empty());
  }
}

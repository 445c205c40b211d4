// SPDX-License-Identifier: Apache-2.0
#include "otdr/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace otdr::baselines {

namespace {

// Scaling filters in the PyWavelets rec_lo orientation (sym2/sym3 equal db2/db3);
// values regenerated by spectral factorization of the Daubechies half-band
// polynomial and matching the published banks.
constexpr real kSym2[] = {0.48296291314453421, 0.83651630373780794, 0.22414386804201339,
                          -0.1294095225512604};
constexpr real kSym3[] = {0.33267055295008258, 0.80689150931109244, 0.45987750211849154,
                          -0.13501102001025453, -0.085441273882026644, 0.035226291885709533};
constexpr real kSym7[] = {0.010268176708464815,   0.0040102448715223704, -0.10780823770328979,
                          -0.14004724044293357,   0.28862963175064849,   0.76776431700488301,
                          0.53610191709056909,    0.017441255086835208,  -0.049552834937042892,
                          0.067892693501220569,   0.030515513165877889,  -0.012636303403240592,
                          -0.0010473848886797383, 0.0026818145682601519};
// CDF 9/7 pair (bior4.4): analysis lowpass (9 taps) and synthesis lowpass (7 taps).
constexpr real kBior44DecLo[] = {0.037828455506995401,  -0.023849465019380022,
                                 -0.11062440441842318,  0.37740285561265391,
                                 0.85269867900940322,   0.3774028556126538,
                                 -0.11062440441842318,  -0.023849465019380022,
                                 0.037828455506995401};
constexpr real kBior44RecLo[] = {-0.064538882628938476, -0.040689417609558506,
                                 0.41809227322221226,   0.7884856164056645,
                                 0.41809227322221226,   -0.040689417609558506,
                                 -0.064538882628938476};

struct Bank {
  std::vector<real> dec_lo, dec_hi, rec_lo, rec_hi;
  int taps() const { return static_cast<int>(dec_lo.size()); }
};

Bank orthogonal_bank(const real* scal, int n) {
  Bank b;
  b.dec_lo.assign(scal, scal + n);
  std::reverse(b.dec_lo.begin(), b.dec_lo.end());
  b.dec_hi.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) b.dec_hi[static_cast<std::size_t>(k)] = (k % 2 ? -1.0 : 1.0) * scal[k];
  b.rec_lo.assign(scal, scal + n);
  b.rec_hi = b.dec_hi;
  std::reverse(b.rec_hi.begin(), b.rec_hi.end());
  return b;
}

Bank bior44_bank() {
  // pad both lowpass filters to a common odd length; the highpass branches are
  // sign-alternated duals with a one-sample relative shift
  const int L = 11;
  auto center = [&](const real* f, int n) {
    std::vector<real> out(L, 0.0);
    const int off = (L - n) / 2;
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(off + i)] = f[i];
    return out;
  };
  Bank b;
  b.dec_lo = center(kBior44DecLo, 9);
  b.rec_lo = center(kBior44RecLo, 7);
  b.dec_hi.assign(L, 0.0);
  b.rec_hi.assign(L, 0.0);
  for (int k = 0; k < L; ++k) {
    const real dh = (k % 2 ? -1.0 : 1.0) * b.rec_lo[static_cast<std::size_t>(k)];
    const real rh = (k % 2 ? -1.0 : 1.0) * b.dec_lo[static_cast<std::size_t>(k)];
    if (k - 1 >= 0) b.dec_hi[static_cast<std::size_t>(k - 1)] = dh;   // shift -1
    if (k + 1 < L) b.rec_hi[static_cast<std::size_t>(k + 1)] = rh;    // shift +1
  }
  return b;
}

const Bank& bank_for(WaveletFamily f) {
  static const Bank s2 = orthogonal_bank(kSym2, 4);
  static const Bank s3 = orthogonal_bank(kSym3, 6);
  static const Bank s7 = orthogonal_bank(kSym7, 14);
  static const Bank b44 = bior44_bank();
  switch (f) {
    case WaveletFamily::Sym2: return s2;
    case WaveletFamily::Sym3: return s3;
    case WaveletFamily::Sym7: return s7;
    default: return b44;
  }
}

// single level over a symmetric extension, keeping every even shift whose
// filter window lies fully inside the extension; those are exactly the atoms
// covering the center, so the dual synthesis reconstructs it exactly while
// boundary coefficients still see only real (reflected) samples
void dwt_step_sym(const std::vector<real>& x, const Bank& bank, std::vector<real>& a,
                  std::vector<real>& d) {
  const int f = bank.taps();
  const int n = static_cast<int>(x.size());
  const int m = n + 2 * (f - 1);
  auto xe = [&](int k) {
    if (k < f - 1) return x[static_cast<std::size_t>(f - 2 - k)];
    if (k < f - 1 + n) return x[static_cast<std::size_t>(k - (f - 1))];
    return x[static_cast<std::size_t>(n - 1 - (k - (f - 1) - n))];
  };
  const int J = (m - f) / 2 + 1;
  a.assign(static_cast<std::size_t>(J), 0.0);
  d.assign(static_cast<std::size_t>(J), 0.0);
  for (int j = 0; j < J; ++j) {
    const int t = 2 * j;
    real lo = 0.0, hi = 0.0;
    for (int mm = 0; mm < f; ++mm) {
      const real v = xe(t + mm);
      lo += v * bank.dec_lo[static_cast<std::size_t>(f - 1 - mm)];
      hi += v * bank.dec_hi[static_cast<std::size_t>(f - 1 - mm)];
    }
    a[static_cast<std::size_t>(j)] = lo;
    d[static_cast<std::size_t>(j)] = hi;
  }
}

std::vector<real> idwt_step_sym(const std::vector<real>& a, const std::vector<real>& d,
                                const Bank& bank, int n) {
  const int f = bank.taps();
  const int m = n + 2 * (f - 1);
  std::vector<real> xe(static_cast<std::size_t>(m), 0.0);
  const int J = static_cast<int>(a.size());
  for (int j = 0; j < J; ++j) {
    const int t = 2 * j;
    for (int mm = 0; mm < f; ++mm) {
      xe[static_cast<std::size_t>(t + mm)] += a[static_cast<std::size_t>(j)] * bank.rec_lo[static_cast<std::size_t>(mm)] +
                                              d[static_cast<std::size_t>(j)] * bank.rec_hi[static_cast<std::size_t>(mm)];
    }
  }
  return std::vector<real>(xe.begin() + (f - 1), xe.begin() + (f - 1) + n);
}

// periodized variant (orthogonal families): exactly n/2 coefficients per band,
// an isometry, so Parseval holds; odd lengths are padded by repeating the last
// sample and cropped on inversion
void dwt_step_per(const std::vector<real>& x_in, const Bank& bank, std::vector<real>& a,
                  std::vector<real>& d) {
  std::vector<real> x = x_in;
  if (x.size() % 2) x.push_back(x.back());
  const int n = static_cast<int>(x.size());
  const int f = bank.taps();
  const int J = n / 2;
  a.assign(static_cast<std::size_t>(J), 0.0);
  d.assign(static_cast<std::size_t>(J), 0.0);
  for (int j = 0; j < J; ++j) {
    real lo = 0.0, hi = 0.0;
    for (int mm = 0; mm < f; ++mm) {
      const int k = (2 * j + mm) % n;
      lo += x[static_cast<std::size_t>(k)] * bank.dec_lo[static_cast<std::size_t>(f - 1 - mm)];
      hi += x[static_cast<std::size_t>(k)] * bank.dec_hi[static_cast<std::size_t>(f - 1 - mm)];
    }
    a[static_cast<std::size_t>(j)] = lo;
    d[static_cast<std::size_t>(j)] = hi;
  }
}

std::vector<real> idwt_step_per(const std::vector<real>& a, const std::vector<real>& d,
                                const Bank& bank, int n) {
  const int n_even = n % 2 ? n + 1 : n;
  const int f = bank.taps();
  std::vector<real> x(static_cast<std::size_t>(n_even), 0.0);
  const int J = static_cast<int>(a.size());
  for (int j = 0; j < J; ++j) {
    for (int mm = 0; mm < f; ++mm) {
      const int k = (2 * j + mm) % n_even;
      // orthogonal adjoint: synthesis reuses the analysis atoms
      x[static_cast<std::size_t>(k)] += a[static_cast<std::size_t>(j)] * bank.dec_lo[static_cast<std::size_t>(f - 1 - mm)] +
                                        d[static_cast<std::size_t>(j)] * bank.dec_hi[static_cast<std::size_t>(f - 1 - mm)];
    }
  }
  x.resize(static_cast<std::size_t>(n));
  return x;
}

}  // namespace

const char* to_string(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::Sym2: return "sym2";
    case WaveletFamily::Sym3: return "sym3";
    case WaveletFamily::Sym7: return "sym7";
    default: return "bior4_4";
  }
}

WaveletFamily wavelet_family_from_string(const std::string& s) {
  if (s == "sym2") return WaveletFamily::Sym2;
  if (s == "sym3") return WaveletFamily::Sym3;
  if (s == "sym7") return WaveletFamily::Sym7;
  if (s == "bior4_4" || s == "bior4.4") return WaveletFamily::Bior4_4;
  throw invalid_argument_error("unknown wavelet family: " + s);
}

int WaveletSpec::filter_length() const { return bank_for(family).taps(); }

int WaveletSpec::max_levels(int signal_len) const {
  const int f = filter_length();
  if (signal_len < f) return 0;
  return static_cast<int>(std::floor(std::log2(static_cast<real>(signal_len) / (f - 1))));
}

void WaveletSpec::validate(int signal_len) const {
  require(levels >= 1, "wavelet: levels must be >= 1");
  require(levels <= max_levels(signal_len),
          "wavelet: too many levels for signal length " + std::to_string(signal_len) +
              " (max " + std::to_string(max_levels(signal_len)) + " for " + to_string(family) + ")");
  if (border == BorderMode::Periodic)
    require(family != WaveletFamily::Bior4_4,
            "wavelet: periodic border mode supports orthogonal families only");
}

WaveletPyramid dwt(const std::vector<real>& x, const WaveletSpec& spec) {
  spec.validate(static_cast<int>(x.size()));
  const Bank& bank = bank_for(spec.family);
  WaveletPyramid pyr;
  pyr.border = spec.border;
  std::vector<real> cur = x;
  for (int lev = 0; lev < spec.levels; ++lev) {
    pyr.level_lengths.push_back(static_cast<int>(cur.size()));
    std::vector<real> a, d;
    if (spec.border == BorderMode::Symmetric)
      dwt_step_sym(cur, bank, a, d);
    else
      dwt_step_per(cur, bank, a, d);
    pyr.details.push_back(std::move(d));  // details[0] = finest scale
    cur = std::move(a);
  }
  pyr.approx = std::move(cur);
  return pyr;
}

std::vector<real> idwt(const WaveletPyramid& pyr, const WaveletSpec& spec) {
  require(pyr.details.size() == pyr.level_lengths.size(), "idwt: malformed pyramid");
  const Bank& bank = bank_for(spec.family);
  std::vector<real> cur = pyr.approx;
  for (std::size_t lev = pyr.details.size(); lev-- > 0;) {
    const int n = pyr.level_lengths[lev];
    if (pyr.border == BorderMode::Symmetric)
      cur = idwt_step_sym(cur, pyr.details[lev], bank, n);
    else
      cur = idwt_step_per(cur, pyr.details[lev], bank, n);
  }
  return cur;
}

void soft_threshold(WaveletPyramid& pyr, real threshold) {
  require(threshold >= 0.0, "soft_threshold: negative threshold");
  for (auto& level : pyr.details)
    for (real& v : level) {
      if (v > threshold)
        v -= threshold;
      else if (v < -threshold)
        v += threshold;
      else
        v = 0.0;
    }
}

std::vector<real> wavelet_denoise(const std::vector<real>& x, const WaveletSpec& spec) {
  WaveletPyramid pyr = dwt(x, spec);

  // sigma from the median absolute value of the finest-scale details
  std::vector<real> fine = pyr.details.front();
  for (real& v : fine) v = std::abs(v);
  std::sort(fine.begin(), fine.end());
  const std::size_t mid = fine.size() / 2;
  const real med = fine.size() % 2 ? fine[mid] : 0.5 * (fine[mid - 1] + fine[mid]);
  const real sigma = med / 0.6745;
  soft_threshold(pyr, sigma * std::sqrt(2.0 * std::log(static_cast<real>(x.size()))));
  return idwt(pyr, spec);
}

TunedButterworth tune_butterworth(const WindowPairs& validation) {
  require(!validation.empty(), "tune_butterworth: empty validation set");
  TunedButterworth best;
  best.val_rmse = std::numeric_limits<real>::infinity();
  for (real cutoff = 0.01; cutoff < 0.46; cutoff += 0.02) {
    const IirFilter f = design_butterworth3(cutoff);
    real acc = 0.0;
    for (const auto& [noisy, clean] : validation) {
      const auto den = butterworth_lowpass(noisy, f);
      real se = 0.0;
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const real dd = den[i] - clean[i];
        se += dd * dd;
      }
      acc += std::sqrt(se / static_cast<real>(clean.size()));
    }
    acc /= static_cast<real>(validation.size());
    if (acc < best.val_rmse) {
      best.val_rmse = acc;
      best.cutoff_norm = cutoff;
    }
  }
  return best;
}

TunedWavelet tune_wavelet(const WindowPairs& validation) {
  require(!validation.empty(), "tune_wavelet: empty validation set");
  const int len = static_cast<int>(validation.front().second.size());
  TunedWavelet best;
  best.val_rmse = std::numeric_limits<real>::infinity();
  for (WaveletFamily fam : {WaveletFamily::Sym2, WaveletFamily::Sym3, WaveletFamily::Sym7,
                            WaveletFamily::Bior4_4}) {
    WaveletSpec spec;
    spec.family = fam;
    const int maxlev = spec.max_levels(len);
    for (int lev = 1; lev <= maxlev; ++lev) {
      spec.levels = lev;
      real acc = 0.0;
      for (const auto& [noisy, clean] : validation) {
        const auto den = wavelet_denoise(noisy, spec);
        real se = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
          const real dd = den[i] - clean[i];
          se += dd * dd;
        }
        acc += std::sqrt(se / static_cast<real>(clean.size()));
      }
      acc /= static_cast<real>(validation.size());
      if (acc < best.val_rmse) {
        best.val_rmse = acc;
        best.family = fam;
        best.levels = lev;
      }
    }
  }
  return best;
}

nlohmann::json tuned_to_json(const TunedButterworth& b) {
  return {{"method", "butterworth"}, {"cutoff_norm", b.cutoff_norm}, {"val_rmse", b.val_rmse}};
}

nlohmann::json tuned_to_json(const TunedWavelet& w) {
  return {{"method", "wavelet"},
          {"family", to_string(w.family)},
          {"levels", w.levels},
          {"val_rmse", w.val_rmse}};
}

TunedButterworth tuned_butterworth_from_json(const nlohmann::json& j) {
  TunedButterworth b;
  b.cutoff_norm = j.at("cutoff_norm").get<real>();
  b.val_rmse = j.at("val_rmse").get<real>();
  return b;
}

TunedWavelet tuned_wavelet_from_json(const nlohmann::json& j) {
  TunedWavelet w;
  w.family = wavelet_family_from_string(j.at("family").get<std::string>());
  w.levels = j.at("levels").get<int>();
  w.val_rmse = j.at("val_rmse").get<real>();
  return w;
}

}  // namespace otdr::baselines

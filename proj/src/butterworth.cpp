// SPDX-License-Identifier: Apache-2.0
#include "otdr/baselines.hpp"

#include <cmath>
#include <complex>

namespace otdr::baselines {

namespace {

using cplx = std::complex<real>;

std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> p = {1.0};
  for (const cplx& r : roots) {
    std::vector<cplx> next(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i] += p[i];
      next[i + 1] -= p[i] * r;
    }
    p = std::move(next);
  }
  return p;
}

// Durand-Kerner roots of a monic polynomial given coefficients a0=1, a1, ...
std::vector<cplx> polynomial_roots(const std::vector<real>& coeffs) {
  const std::size_t n = coeffs.size() - 1;
  std::vector<cplx> roots(n);
  cplx seed(0.4, 0.9);
  cplx cur = 1.0;
  for (auto& r : roots) {
    cur *= seed;
    r = cur;
  }
  for (int iter = 0; iter < 200; ++iter) {
    real worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cplx num = 0.0;
      for (real c : coeffs) num = num * roots[i] + c;
      cplx den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= roots[i] - roots[j];
      const cplx delta = num / den;
      roots[i] -= delta;
      worst = std::max(worst, std::abs(delta));
    }
    if (worst < 1e-13) break;
  }
  return roots;
}

// Direct-form II transposed single pass.
std::vector<real> lfilter(const std::vector<real>& b, const std::vector<real>& a,
                          const std::vector<real>& x, const std::vector<real>& zi) {
  const std::size_t order = a.size() - 1;
  std::vector<real> z = zi;
  z.resize(order, 0.0);
  std::vector<real> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const real xn = x[i];
    const real yn = b[0] * xn + z[0];
    for (std::size_t k = 0; k < order; ++k) {
      const real znext = k + 1 < order ? z[k + 1] : 0.0;
      z[k] = b[k + 1] * xn + znext - a[k + 1] * yn;
    }
    y[i] = yn;
  }
  return y;
}

// Steady-state initial conditions for a unit step (solves (I - A^T) zi = B).
std::vector<real> lfilter_zi(const std::vector<real>& b, const std::vector<real>& a) {
  const std::size_t n = a.size() - 1;
  // companion matrix of the transposed direct form II
  std::vector<std::vector<real>> m(n, std::vector<real>(n, 0.0));
  std::vector<real> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = (i == j ? 1.0 : 0.0);
    m[i][0] += a[i + 1];
    if (i + 1 < n) m[i][i + 1] -= 1.0;
    rhs[i] = b[i + 1] - a[i + 1] * b[0];
  }
  // Gaussian elimination with partial pivoting
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const real f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<real> zi(n);
  for (std::size_t r = n; r-- > 0;) {
    real acc = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= m[r][c] * zi[c];
    zi[r] = acc / m[r][r];
  }
  return zi;
}

}  // namespace

IirFilter IirFilter::from_coefficients(std::vector<real> b, std::vector<real> a, real cutoff) {
  require(!a.empty() && !b.empty(), "iir: empty coefficient arrays");
  require(std::abs(a[0] - 1.0) < 1e-12, "iir: a[0] must be 1");
  require(cutoff > 0.0 && cutoff < 0.5, "iir: cutoff_norm must lie in (0, 0.5)");
  // poles strictly inside the unit circle
  if (a.size() > 1) {
    for (const auto& r : polynomial_roots(a)) {
      require(std::abs(r) < 1.0 - 1e-9, "iir: unstable filter (pole on or outside unit circle)");
    }
  }
  IirFilter f;
  f.b_coeffs = std::move(b);
  f.a_coeffs = std::move(a);
  f.cutoff_norm = cutoff;
  return f;
}

IirFilter design_butterworth3(real cutoff_norm) {
  require(cutoff_norm > 0.0 && cutoff_norm < 0.5, "butterworth: cutoff_norm must be in (0, 0.5)");
  // analog prototype poles on the unit circle, prewarped cutoff, bilinear map
  const real wc = 2.0 * std::tan(M_PI * cutoff_norm);
  const std::vector<cplx> analog = {cplx(-1.0, 0.0), cplx(-0.5, std::sqrt(3.0) / 2.0),
                                    cplx(-0.5, -std::sqrt(3.0) / 2.0)};
  std::vector<cplx> zpoles;
  zpoles.reserve(3);
  for (const cplx& p : analog) {
    const cplx s = p * wc;
    zpoles.push_back((2.0 + s) / (2.0 - s));
  }
  const std::vector<cplx> zzeros = {-1.0, -1.0, -1.0};

  auto bpoly = poly_from_roots(zzeros);
  auto apoly = poly_from_roots(zpoles);
  std::vector<real> b(bpoly.size()), a(apoly.size());
  for (std::size_t i = 0; i < bpoly.size(); ++i) b[i] = bpoly[i].real();
  for (std::size_t i = 0; i < apoly.size(); ++i) a[i] = apoly[i].real();

  // exact unit gain at DC
  real bsum = 0.0, asum = 0.0;
  for (real v : b) bsum += v;
  for (real v : a) asum += v;
  const real g = asum / bsum;
  for (real& v : b) v *= g;
  return IirFilter::from_coefficients(std::move(b), std::move(a), cutoff_norm);
}

real filter_gain(const IirFilter& f, real freq_norm) {
  const cplx z = std::exp(cplx(0.0, -2.0 * M_PI * freq_norm));
  cplx num = 0.0, den = 0.0;
  cplx zp = 1.0;
  for (std::size_t i = 0; i < f.b_coeffs.size(); ++i) {
    num += f.b_coeffs[i] * zp;
    zp *= z;
  }
  zp = 1.0;
  for (std::size_t i = 0; i < f.a_coeffs.size(); ++i) {
    den += f.a_coeffs[i] * zp;
    zp *= z;
  }
  return std::abs(num / den);
}

std::vector<real> butterworth_lowpass(const std::vector<real>& x, const IirFilter& f) {
  require(x.size() >= 2, "butterworth_lowpass: signal too short");
  const std::size_t order = f.a_coeffs.size() - 1;
  // odd (mirror) extension long enough for the slowest tuned cutoff
  const std::size_t pad =
      std::min(x.size() - 1, std::max<std::size_t>(3 * (order + 1),
                                                   static_cast<std::size_t>(2.0 / f.cutoff_norm)));
  std::vector<real> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 2; i <= pad + 1; ++i) ext.push_back(2.0 * x.back() - x[x.size() - i]);

  const std::vector<real> zi = lfilter_zi(f.b_coeffs, f.a_coeffs);
  auto scaled_zi = [&](real v) {
    std::vector<real> z = zi;
    for (real& s : z) s *= v;
    return z;
  };

  std::vector<real> y = lfilter(f.b_coeffs, f.a_coeffs, ext, scaled_zi(ext.front()));
  std::reverse(y.begin(), y.end());
  y = lfilter(f.b_coeffs, f.a_coeffs, y, scaled_zi(y.front()));
  std::reverse(y.begin(), y.end());

  return std::vector<real>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                           y.begin() + static_cast<std::ptrdiff_t>(pad + x.size()));
}

}  // namespace otdr::baselines

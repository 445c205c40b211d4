// SPDX-License-Identifier: Apache-2.0
#include "otdr/ops.hpp"

#include <algorithm>
#include <cmath>

namespace otdr::nn {

namespace {

Tensor op_output(Shape shape, std::initializer_list<const Tensor*> parents) {
  Tensor y = Tensor::zeros(std::move(shape));
  if (!grad_enabled()) return y;
  bool rg = false;
  for (const Tensor* p : parents) rg = rg || p->requires_grad();
  if (rg) {
    y.set_requires_grad(true);
    for (const Tensor* p : parents) y.node()->parents.push_back(p->node_ptr());
  }
  return y;
}

bool tracked(const Tensor& y) { return y.requires_grad() && grad_enabled(); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor y = op_output(a.shape(), {&a, &b});
  const std::int64_t n = a.numel();
  const real* pa = a.data();
  const real* pb = b.data();
  real* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
  if (tracked(y)) {
    auto an = a.node();
    auto bn = b.node();
    y.node()->backward_fn = [an, bn, n](detail::TensorNode& self) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) bn->grad[i] += self.grad[i];
      }
    };
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor y = op_output(a.shape(), {&a, &b});
  const std::int64_t n = a.numel();
  const real* pa = a.data();
  const real* pb = b.data();
  real* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] - pb[i];
  if (tracked(y)) {
    auto an = a.node();
    auto bn = b.node();
    y.node()->backward_fn = [an, bn, n](detail::TensorNode& self) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) bn->grad[i] -= self.grad[i];
      }
    };
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor y = op_output(a.shape(), {&a, &b});
  const std::int64_t n = a.numel();
  const real* pa = a.data();
  const real* pb = b.data();
  real* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
  if (tracked(y)) {
    auto an = a.node();
    auto bn = b.node();
    y.node()->backward_fn = [an, bn, n](detail::TensorNode& self) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) bn->grad[i] += self.grad[i] * an->data[i];
      }
    };
  }
  return y;
}

Tensor scale(const Tensor& a, real c) {
  Tensor y = op_output(a.shape(), {&a});
  const std::int64_t n = a.numel();
  const real* pa = a.data();
  real* py = y.data();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] * c;
  if (tracked(y)) {
    auto an = a.node();
    y.node()->backward_fn = [an, c, n](detail::TensorNode& self) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) an->grad[i] += self.grad[i] * c;
    };
  }
  return y;
}

Tensor activate(const Tensor& x, Activation kind) {
  Tensor y = op_output(x.shape(), {&x});
  const std::int64_t n = x.numel();
  const real* px = x.data();
  real* py = y.data();
  switch (kind) {
    case Activation::Elu:
      for (std::int64_t i = 0; i < n; ++i)
        py[i] = px[i] >= 0.0 ? px[i] : std::expm1(px[i]);
      break;
    case Activation::Sigmoid:
      for (std::int64_t i = 0; i < n; ++i) py[i] = 1.0 / (1.0 + std::exp(-px[i]));
      break;
    case Activation::Tanh:
      for (std::int64_t i = 0; i < n; ++i) py[i] = std::tanh(px[i]);
      break;
  }
  if (tracked(y)) {
    auto xn = x.node();
    auto yn = y.node();
    y.node()->backward_fn = [xn, yn, kind, n](detail::TensorNode& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      const real* v = yn->data.data();
      switch (kind) {
        case Activation::Elu:
          for (std::int64_t i = 0; i < n; ++i)
            xn->grad[i] += self.grad[i] * (xn->data[i] >= 0.0 ? 1.0 : v[i] + 1.0);
          break;
        case Activation::Sigmoid:
          for (std::int64_t i = 0; i < n; ++i)
            xn->grad[i] += self.grad[i] * v[i] * (1.0 - v[i]);
          break;
        case Activation::Tanh:
          for (std::int64_t i = 0; i < n; ++i)
            xn->grad[i] += self.grad[i] * (1.0 - v[i] * v[i]);
          break;
      }
    };
  }
  return y;
}

Tensor sum(const Tensor& x) {
  require(x.numel() > 0, "sum: empty tensor");
  Tensor y = op_output({1}, {&x});
  const std::int64_t n = x.numel();
  real acc = 0.0;
  const real* px = x.data();
  for (std::int64_t i = 0; i < n; ++i) acc += px[i];
  y.data()[0] = acc;
  if (tracked(y)) {
    auto xn = x.node();
    y.node()->backward_fn = [xn, n](detail::TensorNode& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      const real g = self.grad[0];
      for (std::int64_t i = 0; i < n; ++i) xn->grad[i] += g;
    };
  }
  return y;
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<real>(x.numel()));
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require(x.shape().size() == 2 && w.shape().size() == 2, "dense: expects 2-d x and w");
  const int b = x.dim(0), n = x.dim(1);
  const int m = w.dim(0);
  require(w.dim(1) == n, "dense: weight columns must match input width");
  require(bias.numel() == m, "dense: bias length must match output width");

  Tensor y = op_output({b, m}, {&x, &w, &bias});
  const real* px = x.data();
  const real* pw = w.data();
  const real* pb = bias.data();
  real* py = y.data();
  parallel_for(b, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t bi = lo; bi < hi; ++bi) {
      const real* xrow = px + bi * n;
      real* yrow = py + bi * m;
      for (int j = 0; j < m; ++j) {
        const real* wrow = pw + static_cast<std::int64_t>(j) * n;
        real acc = pb[j];
        for (int i = 0; i < n; ++i) acc += xrow[i] * wrow[i];
        yrow[j] = acc;
      }
    }
  });

  if (tracked(y)) {
    auto xn = x.node();
    auto wn = w.node();
    auto bn = bias.node();
    y.node()->backward_fn = [xn, wn, bn, b, n, m](detail::TensorNode& self) {
      const real* g = self.grad.data();
      if (xn->requires_grad) {
        xn->ensure_grad();
        real* dx = xn->grad.data();
        const real* pw = wn->data.data();
        parallel_for(b, [&](std::int64_t lo, std::int64_t hi) {
          for (std::int64_t bi = lo; bi < hi; ++bi) {
            const real* grow = g + bi * m;
            real* dxrow = dx + bi * n;
            for (int j = 0; j < m; ++j) {
              const real gj = grow[j];
              const real* wrow = pw + static_cast<std::int64_t>(j) * n;
              for (int i = 0; i < n; ++i) dxrow[i] += gj * wrow[i];
            }
          }
        });
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        real* dw = wn->grad.data();
        const real* px = xn->data.data();
        parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
          for (std::int64_t j = lo; j < hi; ++j) {
            real* dwrow = dw + j * n;
            for (int bi = 0; bi < b; ++bi) {
              const real gj = g[static_cast<std::int64_t>(bi) * m + j];
              const real* xrow = px + static_cast<std::int64_t>(bi) * n;
              for (int i = 0; i < n; ++i) dwrow[i] += gj * xrow[i];
            }
          }
        });
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        real* db = bn->grad.data();
        for (int bi = 0; bi < b; ++bi)
          for (int j = 0; j < m; ++j) db[j] += g[static_cast<std::int64_t>(bi) * m + j];
      }
    };
  }
  return y;
}

namespace {

struct ConvGeom {
  int in_len = 0;
  int out_len = 0;
  int k = 0;
  int stride = 0;
  int pad_left = 0;
  int pad_total = 0;
};

ConvGeom conv_geometry(int len, int k, int stride) {
  ConvGeom g;
  g.in_len = len;
  g.k = k;
  g.stride = stride;
  g.out_len = conv_out_len(len, stride);
  g.pad_total = std::max((g.out_len - 1) * stride + k - len, 0);
  g.pad_left = g.pad_total / 2;  // odd totals pad more on the right
  return g;
}

// out[oc][t] += sum_ic sum_j w[oc][ic][j] * in_pad[ic][t*s + j]
void kernel_gather(const real* in_pad, int ci, int lp, const real* w, int co, int k,
                   real* out, int lo, int stride) {
  for (int oc = 0; oc < co; ++oc) {
    real* __restrict orow = out + static_cast<std::int64_t>(oc) * lo;
    for (int ic = 0; ic < ci; ++ic) {
      const real* irow = in_pad + static_cast<std::int64_t>(ic) * lp;
      const real* wrow = w + (static_cast<std::int64_t>(oc) * ci + ic) * k;
      if (stride == 1) {
        for (int j = 0; j < k; ++j) {
          const real wv = wrow[j];
          const real* __restrict ip = irow + j;
          for (int t = 0; t < lo; ++t) orow[t] += wv * ip[t];
        }
      } else {
        for (int j = 0; j < k; ++j) {
          const real wv = wrow[j];
          const real* __restrict ip = irow + j;
          for (int t = 0; t < lo; ++t) orow[t] += wv * ip[static_cast<std::int64_t>(t) * stride];
        }
      }
    }
  }
}

// out_pad[ic][t*s + j] += sum_oc w[oc][ic][j] * g[oc][t]
void kernel_scatter(const real* g, int co, int lo, const real* w, int ci, int k,
                    real* out_pad, int lp, int stride) {
  for (int oc = 0; oc < co; ++oc) {
    const real* grow = g + static_cast<std::int64_t>(oc) * lo;
    for (int ic = 0; ic < ci; ++ic) {
      real* orow = out_pad + static_cast<std::int64_t>(ic) * lp;
      const real* wrow = w + (static_cast<std::int64_t>(oc) * ci + ic) * k;
      if (stride == 1) {
        for (int j = 0; j < k; ++j) {
          const real wv = wrow[j];
          real* __restrict op = orow + j;
          for (int t = 0; t < lo; ++t) op[t] += wv * grow[t];
        }
      } else {
        for (int j = 0; j < k; ++j) {
          const real wv = wrow[j];
          real* __restrict op = orow + j;
          for (int t = 0; t < lo; ++t) op[static_cast<std::int64_t>(t) * stride] += wv * grow[t];
        }
      }
    }
  }
}

// dw[oc][ic][j] += sum_t a[oc][t] * b_pad[ic][t*s + j]
void kernel_weight_grad(const real* a, int co, int lo, const real* b_pad, int ci, int lp,
                        real* dw, int k, int stride) {
  for (int oc = 0; oc < co; ++oc) {
    const real* arow = a + static_cast<std::int64_t>(oc) * lo;
    for (int ic = 0; ic < ci; ++ic) {
      const real* brow = b_pad + static_cast<std::int64_t>(ic) * lp;
      real* dwrow = dw + (static_cast<std::int64_t>(oc) * ci + ic) * k;
      if (stride == 1) {
        for (int j = 0; j < k; ++j) {
          const real* __restrict bp = brow + j;
          real acc = 0.0;
          for (int t = 0; t < lo; ++t) acc += arow[t] * bp[t];
          dwrow[j] += acc;
        }
      } else {
        for (int j = 0; j < k; ++j) {
          const real* __restrict bp = brow + j;
          real acc = 0.0;
          for (int t = 0; t < lo; ++t) acc += arow[t] * bp[static_cast<std::int64_t>(t) * stride];
          dwrow[j] += acc;
        }
      }
    }
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride) {
  require(x.shape().size() == 3 && w.shape().size() == 3, "conv1d: expects [b,c,L] x and [co,ci,k] w");
  require(stride >= 1, "conv1d: stride must be >= 1");
  const int b = x.dim(0), ci = x.dim(1), len = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  require(w.dim(1) == ci, "conv1d: channel mismatch");
  require(bias.numel() == co, "conv1d: bias length mismatch");
  const ConvGeom geom = conv_geometry(len, k, stride);
  require(k <= len + geom.pad_total, "conv1d: kernel longer than padded input");
  const int lp = len + geom.pad_total;
  const int lo = geom.out_len;

  // Padded copy of the input, kept for the backward pass.
  auto xp = std::make_shared<std::vector<real>>(
      static_cast<std::size_t>(b) * ci * lp, 0.0);
  {
    const real* px = x.data();
    real* pp = xp->data();
    parallel_for(b, [&](std::int64_t blo, std::int64_t bhi) {
      for (std::int64_t bi = blo; bi < bhi; ++bi)
        for (int c = 0; c < ci; ++c)
          std::copy(px + (bi * ci + c) * len, px + (bi * ci + c) * len + len,
                    pp + (bi * ci + c) * lp + geom.pad_left);
    });
  }

  Tensor y = op_output({b, co, lo}, {&x, &w, &bias});
  {
    const real* pw = w.data();
    const real* pb = bias.data();
    real* py = y.data();
    parallel_for(b, [&](std::int64_t blo, std::int64_t bhi) {
      for (std::int64_t bi = blo; bi < bhi; ++bi) {
        real* yb = py + bi * co * lo;
        for (int oc = 0; oc < co; ++oc)
          std::fill(yb + static_cast<std::int64_t>(oc) * lo,
                    yb + static_cast<std::int64_t>(oc) * lo + lo, pb[oc]);
        kernel_gather(xp->data() + bi * ci * lp, ci, lp, pw, co, k, yb, lo, stride);
      }
    });
  }

  if (tracked(y)) {
    auto xn = x.node();
    auto wn = w.node();
    auto bn = bias.node();
    y.node()->backward_fn = [xn, wn, bn, xp, geom, b, ci, co, lp, lo](detail::TensorNode& self) {
      const real* g = self.grad.data();
      const int k = geom.k, stride = geom.stride, len = geom.in_len;
      if (xn->requires_grad) {
        xn->ensure_grad();
        real* dx = xn->grad.data();
        const real* pw = wn->data.data();
        parallel_for(b, [&](std::int64_t blo, std::int64_t bhi) {
          std::vector<real> dxp(static_cast<std::size_t>(ci) * lp);
          for (std::int64_t bi = blo; bi < bhi; ++bi) {
            std::fill(dxp.begin(), dxp.end(), 0.0);
            kernel_scatter(g + bi * co * lo, co, lo, pw, ci, k, dxp.data(), lp, stride);
            real* dxb = dx + bi * ci * len;
            for (int c = 0; c < ci; ++c)
              for (int t = 0; t < len; ++t)
                dxb[static_cast<std::int64_t>(c) * len + t] +=
                    dxp[static_cast<std::int64_t>(c) * lp + t + geom.pad_left];
          }
        });
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        real* dw = wn->grad.data();
        // per-batch contributions accumulate serially per output channel slice
        parallel_for(co, [&](std::int64_t oclo, std::int64_t ochi) {
          for (std::int64_t oc = oclo; oc < ochi; ++oc) {
            for (int bi = 0; bi < b; ++bi) {
              kernel_weight_grad(g + (static_cast<std::int64_t>(bi) * co + oc) * lo, 1, lo,
                                 xp->data() + static_cast<std::int64_t>(bi) * ci * lp, ci, lp,
                                 dw + oc * ci * k, k, stride);
            }
          }
        });
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        real* db = bn->grad.data();
        for (int bi = 0; bi < b; ++bi)
          for (int oc = 0; oc < co; ++oc) {
            const real* grow = g + (static_cast<std::int64_t>(bi) * co + oc) * lo;
            real acc = 0.0;
            for (int t = 0; t < lo; ++t) acc += grow[t];
            db[oc] += acc;
          }
      }
    };
  }
  return y;
}

Tensor conv1d_transpose(const Tensor& x, const Tensor& w, const Tensor& bias, int stride) {
  require(x.shape().size() == 3 && w.shape().size() == 3,
          "conv1d_transpose: expects [b,c1,L] x and [c1,c2,k] w");
  require(stride >= 1, "conv1d_transpose: stride must be >= 1");
  const int b = x.dim(0), c1 = x.dim(1), len = x.dim(2);
  const int c2 = w.dim(1), k = w.dim(2);
  require(w.dim(0) == c1, "conv1d_transpose: channel mismatch");
  require(bias.numel() == c2, "conv1d_transpose: bias length mismatch");

  const int out_len = len * stride;
  // Geometry of the conv this op is adjoint to (out_len -> len).
  const ConvGeom geom = conv_geometry(out_len, k, stride);
  require(geom.out_len == len, "conv1d_transpose: inconsistent geometry");
  const int lp = out_len + geom.pad_total;

  Tensor y = op_output({b, c2, out_len}, {&x, &w, &bias});
  {
    const real* px = x.data();
    const real* pw = w.data();
    const real* pb = bias.data();
    real* py = y.data();
    parallel_for(b, [&](std::int64_t blo, std::int64_t bhi) {
      std::vector<real> ypad(static_cast<std::size_t>(c2) * lp);
      for (std::int64_t bi = blo; bi < bhi; ++bi) {
        std::fill(ypad.begin(), ypad.end(), 0.0);
        kernel_scatter(px + bi * c1 * len, c1, len, pw, c2, k, ypad.data(), lp, stride);
        real* yb = py + bi * c2 * out_len;
        for (int c = 0; c < c2; ++c)
          for (int t = 0; t < out_len; ++t)
            yb[static_cast<std::int64_t>(c) * out_len + t] =
                ypad[static_cast<std::int64_t>(c) * lp + t + geom.pad_left] + pb[c];
      }
    });
  }

  if (tracked(y)) {
    auto xn = x.node();
    auto wn = w.node();
    auto bn = bias.node();
    y.node()->backward_fn = [xn, wn, bn, geom, b, c1, c2, lp, len, out_len](detail::TensorNode& self) {
      const int k = geom.k, stride = geom.stride;
      // Padded upstream gradient (zero-padded exactly like the adjoint conv input).
      std::vector<real> gpad(static_cast<std::size_t>(b) * c2 * lp, 0.0);
      {
        const real* g = self.grad.data();
        for (int bi = 0; bi < b; ++bi)
          for (int c = 0; c < c2; ++c)
            std::copy(g + (static_cast<std::int64_t>(bi) * c2 + c) * out_len,
                      g + (static_cast<std::int64_t>(bi) * c2 + c) * out_len + out_len,
                      gpad.data() + (static_cast<std::int64_t>(bi) * c2 + c) * lp + geom.pad_left);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        real* dx = xn->grad.data();
        const real* pw = wn->data.data();
        parallel_for(b, [&](std::int64_t blo, std::int64_t bhi) {
          for (std::int64_t bi = blo; bi < bhi; ++bi)
            kernel_gather(gpad.data() + bi * c2 * lp, c2, lp, pw, c1, k,
                          dx + bi * c1 * len, len, stride);
        });
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        real* dw = wn->grad.data();
        parallel_for(c1, [&](std::int64_t clo, std::int64_t chi) {
          for (std::int64_t oc = clo; oc < chi; ++oc)
            for (int bi = 0; bi < b; ++bi)
              kernel_weight_grad(xn->data.data() + (static_cast<std::int64_t>(bi) * c1 + oc) * len,
                                 1, len, gpad.data() + static_cast<std::int64_t>(bi) * c2 * lp,
                                 c2, lp, dw + oc * c2 * k, k, stride);
        });
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        real* db = bn->grad.data();
        const real* g = self.grad.data();
        for (int bi = 0; bi < b; ++bi)
          for (int c = 0; c < c2; ++c) {
            const real* grow = g + (static_cast<std::int64_t>(bi) * c2 + c) * out_len;
            real acc = 0.0;
            for (int t = 0; t < out_len; ++t) acc += grow[t];
            db[c] += acc;
          }
      }
    };
  }
  return y;
}

BatchNorm1d::BatchNorm1d(const std::string& name, int channels)
    : gamma(name + ".gamma", Tensor::full({channels}, 1.0)),
      beta(name + ".beta", Tensor::zeros({channels})),
      running_mean(static_cast<std::size_t>(channels), 0.0),
      running_var(static_cast<std::size_t>(channels), 1.0) {}

Tensor BatchNorm1d::forward(const Tensor& x, bool train) {
  require(x.shape().size() == 3, "batch_norm_1d: expects [b,c,L]");
  const int b = x.dim(0), c = x.dim(1), len = x.dim(2);
  require(c == static_cast<int>(running_mean.size()), "batch_norm_1d: channel mismatch");
  const std::int64_t n_per_c = static_cast<std::int64_t>(b) * len;
  if (train) require(n_per_c > 1, "batch_norm_1d: train mode needs more than one value per channel");

  auto xhat = std::make_shared<std::vector<real>>(x.vec().size());
  auto invstd = std::make_shared<std::vector<real>>(static_cast<std::size_t>(c));

  const real* px = x.data();
  for (int ch = 0; ch < c; ++ch) {
    real mu, var;
    if (train) {
      real s = 0.0, s2 = 0.0;
      for (int bi = 0; bi < b; ++bi) {
        const real* row = px + (static_cast<std::int64_t>(bi) * c + ch) * len;
        for (int t = 0; t < len; ++t) {
          s += row[t];
          s2 += row[t] * row[t];
        }
      }
      mu = s / static_cast<real>(n_per_c);
      var = s2 / static_cast<real>(n_per_c) - mu * mu;
      if (var < 0.0) var = 0.0;
      running_mean[static_cast<std::size_t>(ch)] =
          (1.0 - momentum) * running_mean[static_cast<std::size_t>(ch)] + momentum * mu;
      running_var[static_cast<std::size_t>(ch)] =
          (1.0 - momentum) * running_var[static_cast<std::size_t>(ch)] + momentum * var;
    } else {
      mu = running_mean[static_cast<std::size_t>(ch)];
      var = running_var[static_cast<std::size_t>(ch)];
    }
    const real is = 1.0 / std::sqrt(var + eps);
    (*invstd)[static_cast<std::size_t>(ch)] = is;
    for (int bi = 0; bi < b; ++bi) {
      const real* row = px + (static_cast<std::int64_t>(bi) * c + ch) * len;
      real* hrow = xhat->data() + (static_cast<std::int64_t>(bi) * c + ch) * len;
      for (int t = 0; t < len; ++t) hrow[t] = (row[t] - mu) * is;
    }
  }

  Tensor y = op_output({b, c, len}, {&x, &gamma.value, &beta.value});
  {
    const real* pg = gamma.value.data();
    const real* pb = beta.value.data();
    real* py = y.data();
    for (int bi = 0; bi < b; ++bi)
      for (int ch = 0; ch < c; ++ch) {
        const real* hrow = xhat->data() + (static_cast<std::int64_t>(bi) * c + ch) * len;
        real* yrow = py + (static_cast<std::int64_t>(bi) * c + ch) * len;
        for (int t = 0; t < len; ++t) yrow[t] = pg[ch] * hrow[t] + pb[ch];
      }
  }

  if (tracked(y)) {
    auto xn = x.node();
    auto gn = gamma.value.node();
    auto bn = beta.value.node();
    y.node()->backward_fn = [xn, gn, bn, xhat, invstd, b, c, len, train,
                             n_per_c](detail::TensorNode& self) {
      const real* g = self.grad.data();
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
          for (int ch = 0; ch < c; ++ch) {
            const std::int64_t off = (static_cast<std::int64_t>(bi) * c + ch) * len;
            real acc = 0.0;
            for (int t = 0; t < len; ++t) acc += g[off + t] * (*xhat)[off + t];
            gn->grad[ch] += acc;
          }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
          for (int ch = 0; ch < c; ++ch) {
            const std::int64_t off = (static_cast<std::int64_t>(bi) * c + ch) * len;
            real acc = 0.0;
            for (int t = 0; t < len; ++t) acc += g[off + t];
            bn->grad[ch] += acc;
          }
      }
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch) {
        const real gam = gn->data[static_cast<std::size_t>(ch)];
        const real is = (*invstd)[static_cast<std::size_t>(ch)];
        if (!train) {
          for (int bi = 0; bi < b; ++bi) {
            const std::int64_t off = (static_cast<std::int64_t>(bi) * c + ch) * len;
            for (int t = 0; t < len; ++t) xn->grad[off + t] += g[off + t] * gam * is;
          }
          continue;
        }
        real sum_g = 0.0, sum_gh = 0.0;
        for (int bi = 0; bi < b; ++bi) {
          const std::int64_t off = (static_cast<std::int64_t>(bi) * c + ch) * len;
          for (int t = 0; t < len; ++t) {
            sum_g += g[off + t];
            sum_gh += g[off + t] * (*xhat)[off + t];
          }
        }
        const real inv_n = 1.0 / static_cast<real>(n_per_c);
        for (int bi = 0; bi < b; ++bi) {
          const std::int64_t off = (static_cast<std::int64_t>(bi) * c + ch) * len;
          for (int t = 0; t < len; ++t) {
            const real h = (*xhat)[off + t];
            xn->grad[off + t] +=
                gam * is * (g[off + t] - inv_n * sum_g - h * inv_n * sum_gh);
          }
        }
      }
    };
  }
  return y;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  require(x.shape().size() == 2, "slice_cols: expects [b,n]");
  const int b = x.dim(0), n = x.dim(1);
  require(start >= 0 && len >= 1 && start + len <= n, "slice_cols: range out of bounds");
  Tensor y = op_output({b, len}, {&x});
  const real* px = x.data();
  real* py = y.data();
  for (int bi = 0; bi < b; ++bi)
    std::copy(px + static_cast<std::int64_t>(bi) * n + start,
              px + static_cast<std::int64_t>(bi) * n + start + len,
              py + static_cast<std::int64_t>(bi) * len);
  if (tracked(y)) {
    auto xn = x.node();
    y.node()->backward_fn = [xn, b, n, start, len](detail::TensorNode& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (int bi = 0; bi < b; ++bi)
        for (int j = 0; j < len; ++j)
          xn->grad[static_cast<std::int64_t>(bi) * n + start + j] +=
              self.grad[static_cast<std::int64_t>(bi) * len + j];
    };
  }
  return y;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(0) == b.dim(0),
          "concat_cols: expects [b,n1] and [b,n2]");
  const int rows = a.dim(0), n1 = a.dim(1), n2 = b.dim(1);
  Tensor y = op_output({rows, n1 + n2}, {&a, &b});
  const real* pa = a.data();
  const real* pb = b.data();
  real* py = y.data();
  for (int r = 0; r < rows; ++r) {
    std::copy(pa + static_cast<std::int64_t>(r) * n1, pa + static_cast<std::int64_t>(r) * n1 + n1,
              py + static_cast<std::int64_t>(r) * (n1 + n2));
    std::copy(pb + static_cast<std::int64_t>(r) * n2, pb + static_cast<std::int64_t>(r) * n2 + n2,
              py + static_cast<std::int64_t>(r) * (n1 + n2) + n1);
  }
  if (tracked(y)) {
    auto an = a.node();
    auto bn = b.node();
    y.node()->backward_fn = [an, bn, rows, n1, n2](detail::TensorNode& self) {
      for (int r = 0; r < rows; ++r) {
        const real* g = self.grad.data() + static_cast<std::int64_t>(r) * (n1 + n2);
        if (an->requires_grad) {
          an->ensure_grad();
          for (int j = 0; j < n1; ++j) an->grad[static_cast<std::int64_t>(r) * n1 + j] += g[j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int j = 0; j < n2; ++j) bn->grad[static_cast<std::int64_t>(r) * n2 + j] += g[n1 + j];
        }
      }
    };
  }
  return y;
}

Tensor stack_steps(const std::vector<Tensor>& steps) {
  require(!steps.empty(), "stack_steps: empty input");
  const int b = steps[0].dim(0), f = steps[0].dim(1);
  const int T = static_cast<int>(steps.size());
  for (const auto& s : steps) require(s.dim(0) == b && s.dim(1) == f, "stack_steps: ragged steps");

  Tensor y = Tensor::zeros({b, T, f});
  bool rg = false;
  for (const auto& s : steps) rg = rg || s.requires_grad();
  if (grad_enabled() && rg) {
    y.set_requires_grad(true);
    for (const auto& s : steps) y.node()->parents.push_back(s.node_ptr());
  }
  real* py = y.data();
  for (int t = 0; t < T; ++t) {
    const real* ps = steps[static_cast<std::size_t>(t)].data();
    for (int bi = 0; bi < b; ++bi)
      std::copy(ps + static_cast<std::int64_t>(bi) * f, ps + static_cast<std::int64_t>(bi) * f + f,
                py + (static_cast<std::int64_t>(bi) * T + t) * f);
  }
  if (y.requires_grad() && grad_enabled()) {
    std::vector<detail::TensorNode*> nodes;
    nodes.reserve(steps.size());
    for (const auto& s : steps) nodes.push_back(s.node());
    y.node()->backward_fn = [nodes, b, T, f](detail::TensorNode& self) {
      for (int t = 0; t < T; ++t) {
        detail::TensorNode* sn = nodes[static_cast<std::size_t>(t)];
        if (!sn->requires_grad) continue;
        sn->ensure_grad();
        for (int bi = 0; bi < b; ++bi)
          for (int j = 0; j < f; ++j)
            sn->grad[static_cast<std::int64_t>(bi) * f + j] +=
                self.grad[(static_cast<std::int64_t>(bi) * T + t) * f + j];
      }
    };
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), "reshape: element count mismatch");
  Tensor y = op_output(std::move(shape), {&x});
  std::copy(x.data(), x.data() + x.numel(), y.data());
  if (tracked(y)) {
    auto xn = x.node();
    const std::int64_t n = x.numel();
    y.node()->backward_fn = [xn, n](detail::TensorNode& self) {
      if (!xn->requires_grad) return;
      xn->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) xn->grad[i] += self.grad[i];
    };
  }
  return y;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "mse_loss");
  require(pred.numel() > 0, "mse_loss: empty tensors");
  Tensor y = op_output({1}, {&pred, &target});
  const std::int64_t n = pred.numel();
  const real* pp = pred.data();
  const real* pt = target.data();
  real acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const real d = pp[i] - pt[i];
    acc += d * d;
  }
  y.data()[0] = acc / static_cast<real>(n);
  if (tracked(y)) {
    auto pn = pred.node();
    auto tn = target.node();
    y.node()->backward_fn = [pn, tn, n](detail::TensorNode& self) {
      const real g = self.grad[0] * 2.0 / static_cast<real>(n);
      if (pn->requires_grad) {
        pn->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) pn->grad[i] += g * (pn->data[i] - tn->data[i]);
      }
      if (tn->requires_grad) {
        tn->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) tn->grad[i] -= g * (pn->data[i] - tn->data[i]);
      }
    };
  }
  return y;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require(logits.shape().size() == 2, "softmax_cross_entropy: expects [b,C] logits");
  const int b = logits.dim(0), c = logits.dim(1);
  require(static_cast<int>(labels.size()) == b, "softmax_cross_entropy: label count mismatch");
  for (int y : labels) require(y >= 0 && y < c, "softmax_cross_entropy: label out of range");

  auto probs = std::make_shared<std::vector<real>>(logits.vec().size());
  const real* pl = logits.data();
  real loss = 0.0;
  for (int bi = 0; bi < b; ++bi) {
    const real* row = pl + static_cast<std::int64_t>(bi) * c;
    real m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    real z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const real logz = std::log(z);
    for (int j = 0; j < c; ++j)
      (*probs)[static_cast<std::int64_t>(bi) * c + j] = std::exp(row[j] - m) / z;
    loss += logz - (row[labels[static_cast<std::size_t>(bi)]] - m);
  }

  Tensor y = op_output({1}, {&logits});
  y.data()[0] = loss / static_cast<real>(b);
  if (tracked(y)) {
    auto ln = logits.node();
    auto lab = labels;
    y.node()->backward_fn = [ln, probs, lab, b, c](detail::TensorNode& self) {
      if (!ln->requires_grad) return;
      ln->ensure_grad();
      const real g = self.grad[0] / static_cast<real>(b);
      for (int bi = 0; bi < b; ++bi)
        for (int j = 0; j < c; ++j) {
          real p = (*probs)[static_cast<std::int64_t>(bi) * c + j];
          if (j == lab[static_cast<std::size_t>(bi)]) p -= 1.0;
          ln->grad[static_cast<std::int64_t>(bi) * c + j] += g * p;
        }
    };
  }
  return y;
}

std::vector<real> softmax_probs(const Tensor& logits, int row) {
  require(logits.shape().size() == 2, "softmax_probs: expects [b,C]");
  const int c = logits.dim(1);
  const real* pl = logits.data() + static_cast<std::int64_t>(row) * c;
  real m = pl[0];
  for (int j = 1; j < c; ++j) m = std::max(m, pl[j]);
  real z = 0.0;
  std::vector<real> out(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) {
    out[static_cast<std::size_t>(j)] = std::exp(pl[j] - m);
    z += out[static_cast<std::size_t>(j)];
  }
  for (auto& v : out) v /= z;
  return out;
}

}  // namespace otdr::nn

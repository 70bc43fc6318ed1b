#include "dfd/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace dfd {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check(bool ok, const char* msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch)
    : w({out_ch, 3, 3, in_ch}), b({out_ch}), in_ch_(in_ch), out_ch_(out_ch) {}

void Conv2d::init(Rng& rng) {
  glorot_uniform(w.value, 9 * in_ch_, 9 * out_ch_, rng);
  b.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x) {
  check(x.ndim() == 4 && x.dim(3) == in_ch_, "conv2d: input channel mismatch");
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = in_ch_;
  const std::size_t K = 9 * C, P = H * W;
  x_shape_ = x.shape;

  if (cols_.shape != std::vector<std::size_t>{B, K, P}) cols_ = Tensor({B, K, P});
  Tensor y({B, H, W, out_ch_});

  CMapM wm(w.value.ptr(), static_cast<Eigen::Index>(out_ch_), static_cast<Eigen::Index>(K));
  for (std::size_t bi = 0; bi < B; ++bi) {
    double* cols = cols_.ptr() + bi * K * P;
    const double* xin = x.ptr() + bi * H * W * C;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        for (std::size_t ci = 0; ci < C; ++ci) {
          double* row = cols + ((ky * 3 + kx) * C + ci) * P;
          for (std::size_t yy = 0; yy < H; ++yy) {
            const long sy = static_cast<long>(yy + ky) - 1;
            if (sy < 0 || sy >= static_cast<long>(H)) {
              std::fill(row + yy * W, row + (yy + 1) * W, 0.0);
              continue;
            }
            const double* src = xin + (static_cast<std::size_t>(sy) * W) * C + ci;
            double* dst = row + yy * W;
            for (std::size_t xx = 0; xx < W; ++xx) {
              const long sx = static_cast<long>(xx + kx) - 1;
              dst[xx] = (sx < 0 || sx >= static_cast<long>(W)) ? 0.0 : src[sx * static_cast<long>(C)];
            }
          }
        }
      }
    }

    CMapM cm(cols, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MatRM res = wm * cm;  // (Cout x P)
    double* yout = y.ptr() + bi * P * out_ch_;
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t co = 0; co < out_ch_; ++co) {
        yout[p * out_ch_ + co] = res(static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(p)) +
                                 b.value[co];
      }
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const std::size_t B = x_shape_[0], H = x_shape_[1], W = x_shape_[2], C = in_ch_;
  const std::size_t K = 9 * C, P = H * W;
  check(dy.shape == std::vector<std::size_t>({B, H, W, out_ch_}), "conv2d: bad dy shape");

  Tensor dx(x_shape_);
  CMapM wm(w.value.ptr(), static_cast<Eigen::Index>(out_ch_), static_cast<Eigen::Index>(K));
  MapM dwm(w.grad.ptr(), static_cast<Eigen::Index>(out_ch_), static_cast<Eigen::Index>(K));

  for (std::size_t bi = 0; bi < B; ++bi) {
    CMapM dym(dy.ptr() + bi * P * out_ch_, static_cast<Eigen::Index>(P),
              static_cast<Eigen::Index>(out_ch_));
    CMapM cm(cols_.ptr() + bi * K * P, static_cast<Eigen::Index>(K),
             static_cast<Eigen::Index>(P));

    dwm.noalias() += dym.transpose() * cm.transpose();
    for (std::size_t co = 0; co < out_ch_; ++co) {
      b.grad[co] += dym.col(static_cast<Eigen::Index>(co)).sum();
    }

    MatRM dcols = wm.transpose() * dym.transpose();  // (K x P)
    double* dxp = dx.ptr() + bi * H * W * C;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        for (std::size_t ci = 0; ci < C; ++ci) {
          const double* row = dcols.data() + ((ky * 3 + kx) * C + ci) * P;
          for (std::size_t yy = 0; yy < H; ++yy) {
            const long sy = static_cast<long>(yy + ky) - 1;
            if (sy < 0 || sy >= static_cast<long>(H)) continue;
            for (std::size_t xx = 0; xx < W; ++xx) {
              const long sx = static_cast<long>(xx + kx) - 1;
              if (sx < 0 || sx >= static_cast<long>(W)) continue;
              dxp[(static_cast<std::size_t>(sy) * W + static_cast<std::size_t>(sx)) * C + ci] +=
                  row[yy * W + xx];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

MaxPool2d::MaxPool2d(std::size_t pool_h, std::size_t pool_w) : ph_(pool_h), pw_(pool_w) {}

Tensor MaxPool2d::forward(const Tensor& x) {
  check(x.ndim() == 4, "maxpool2d: expected 4-d input");
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  check(H % ph_ == 0 && W % pw_ == 0, "maxpool2d: dims not divisible by pool size");
  x_shape_ = x.shape;
  const std::size_t OH = H / ph_, OW = W / pw_;

  Tensor y({B, OH, OW, C});
  argmax_.assign(y.size(), 0);
  for (std::size_t bi = 0; bi < B; ++bi) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        for (std::size_t c = 0; c < C; ++c) {
          double best = -1e300;
          std::size_t best_idx = 0;
          for (std::size_t dy = 0; dy < ph_; ++dy) {
            for (std::size_t dx = 0; dx < pw_; ++dx) {
              const std::size_t idx =
                  ((bi * H + oy * ph_ + dy) * W + ox * pw_ + dx) * C + c;
              // strict > keeps the first maximal element on ties
              if (x.data[idx] > best) {
                best = x.data[idx];
                best_idx = idx;
              }
            }
          }
          const std::size_t oidx = ((bi * OH + oy) * OW + ox) * C + c;
          y.data[oidx] = best;
          argmax_[oidx] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  check(dy.size() == argmax_.size(), "maxpool2d: bad dy size");
  Tensor dx(x_shape_);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double momentum, double eps)
    : gamma({channels}),
      beta({channels}),
      running_mean({channels}),
      running_var({channels}),
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {
  gamma.value.fill(1.0);
  running_var.fill(1.0);
}

void BatchNorm::init(Rng&) {
  gamma.value.fill(1.0);
  beta.value.fill(0.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  check(x.ndim() >= 2 && x.shape.back() == channels_, "batchnorm: channel mismatch");
  const std::size_t C = channels_;
  const std::size_t R = x.size() / C;

  Tensor y(x.shape);
  if (mode == Mode::Infer) {
    if (!initialized) {
      throw std::runtime_error("batchnorm: inference before any training step");
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double inv = 1.0 / std::sqrt(running_var[c] + eps_);
      const double g = gamma.value[c], bt = beta.value[c], mu = running_mean[c];
      for (std::size_t r = 0; r < R; ++r) {
        y.data[r * C + c] = g * (x.data[r * C + c] - mu) * inv + bt;
      }
    }
    return y;
  }

  rows_ = R;
  xhat_ = Tensor(x.shape);
  inv_std_.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += x.data[r * C + c];
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double d = x.data[r * C + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(R);

    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const double g = gamma.value[c], bt = beta.value[c];
    for (std::size_t r = 0; r < R; ++r) {
      const double xh = (x.data[r * C + c] - mean) * inv;
      xhat_.data[r * C + c] = xh;
      y.data[r * C + c] = g * xh + bt;
    }
    running_mean[c] = momentum_ * running_mean[c] + (1.0 - momentum_) * mean;
    running_var[c] = momentum_ * running_var[c] + (1.0 - momentum_) * var;
  }
  initialized = true;
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  check(dy.shape == xhat_.shape, "batchnorm: bad dy shape");
  const std::size_t C = channels_;
  const std::size_t R = rows_;
  const double n = static_cast<double>(R);

  Tensor dx(dy.shape);
  for (std::size_t c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double d = dy.data[r * C + c];
      sum_dy += d;
      sum_dy_xh += d * xhat_.data[r * C + c];
    }
    gamma.grad[c] += sum_dy_xh;
    beta.grad[c] += sum_dy;

    const double scale = gamma.value[c] * inv_std_[c] / n;
    for (std::size_t r = 0; r < R; ++r) {
      dx.data[r * C + c] = scale * (n * dy.data[r * C + c] - sum_dy -
                                    xhat_.data[r * C + c] * sum_dy_xh);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// LeakyRelu

Tensor LeakyRelu::forward(const Tensor& x) {
  Tensor y(x.shape);
  mask_.assign(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.data[i] > 0.0) {
      y.data[i] = x.data[i];
      mask_[i] = 1;
    } else {
      y.data[i] = alpha_ * x.data[i];
    }
  }
  return y;
}

Tensor LeakyRelu::backward(const Tensor& dy) {
  check(dy.size() == mask_.size(), "leaky_relu: bad dy size");
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    dx.data[i] = mask_[i] ? dy.data[i] : alpha_ * dy.data[i];
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Lstm

Lstm::Lstm(std::size_t input_dim, std::size_t hidden_dim)
    : w_in({4 * hidden_dim, input_dim}),
      w_rec({4 * hidden_dim, hidden_dim}),
      bias({4 * hidden_dim}),
      input_(input_dim),
      hidden_(hidden_dim) {}

void Lstm::init(Rng& rng) {
  glorot_uniform(w_in.value, input_, hidden_, rng);
  glorot_uniform(w_rec.value, hidden_, hidden_, rng);
  bias.value.fill(0.0);
  // forget-gate bias starts at 1 so the cell carries state early in training
  for (std::size_t i = 0; i < hidden_; ++i) bias.value[i] = 1.0;
}

Tensor Lstm::forward(const Tensor& x) {
  check(x.ndim() == 3 && x.dim(2) == input_, "lstm: bad input shape");
  const std::size_t B = x.dim(0), T = x.dim(1), F = input_, H = hidden_;
  x_ = x;
  gates_.assign(T, Tensor({B, 4 * H}));
  cells_.assign(T, Tensor({B, H}));
  hidden_states_.assign(T, Tensor({B, H}));

  CMapM win(w_in.value.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(F));
  CMapM wrec(w_rec.value.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(H));

  Tensor out({B, T, H});
  MatRM xt(B, F), pre(B, 4 * H);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(x.ptr() + (b * T + t) * F, F, xt.data() + b * F);
    }
    pre.noalias() = xt * win.transpose();
    if (t > 0) {
      CMapM hprev(hidden_states_[t - 1].ptr(), static_cast<Eigen::Index>(B),
                  static_cast<Eigen::Index>(H));
      pre.noalias() += hprev * wrec.transpose();
    }
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < 4 * H; ++j) {
        pre(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) += bias.value[j];
      }
    }

    Tensor& g = gates_[t];
    Tensor& c = cells_[t];
    Tensor& h = hidden_states_[t];
    const Tensor* c_prev = t > 0 ? &cells_[t - 1] : nullptr;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < H; ++j) {
        const double f = sigmoid(pre(b, static_cast<Eigen::Index>(j)));
        const double i = sigmoid(pre(b, static_cast<Eigen::Index>(H + j)));
        const double o = sigmoid(pre(b, static_cast<Eigen::Index>(2 * H + j)));
        const double cand = std::tanh(pre(b, static_cast<Eigen::Index>(3 * H + j)));
        g.data[b * 4 * H + j] = f;
        g.data[b * 4 * H + H + j] = i;
        g.data[b * 4 * H + 2 * H + j] = o;
        g.data[b * 4 * H + 3 * H + j] = cand;
        const double cp = c_prev ? c_prev->data[b * H + j] : 0.0;
        const double ct = f * cp + i * cand;
        c.data[b * H + j] = ct;
        h.data[b * H + j] = o * std::tanh(ct);
        out.data[(b * T + t) * H + j] = h.data[b * H + j];
      }
    }
  }
  return out;
}

Tensor Lstm::backward(const Tensor& dh_all) {
  const std::size_t B = x_.dim(0), T = x_.dim(1), F = input_, H = hidden_;
  check(dh_all.shape == std::vector<std::size_t>({B, T, H}), "lstm: bad dh shape");

  CMapM win(w_in.value.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(F));
  CMapM wrec(w_rec.value.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(H));
  MapM dwin(w_in.grad.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(F));
  MapM dwrec(w_rec.grad.ptr(), static_cast<Eigen::Index>(4 * H), static_cast<Eigen::Index>(H));

  Tensor dx({B, T, F});
  MatRM dh_next = MatRM::Zero(B, H);
  MatRM dc_next = MatRM::Zero(B, H);
  MatRM dpre(B, 4 * H), xt(B, F);

  for (std::size_t tt = T; tt-- > 0;) {
    const Tensor& g = gates_[tt];
    const Tensor& c = cells_[tt];
    const Tensor* c_prev = tt > 0 ? &cells_[tt - 1] : nullptr;

    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < H; ++j) {
        const double f = g.data[b * 4 * H + j];
        const double i = g.data[b * 4 * H + H + j];
        const double o = g.data[b * 4 * H + 2 * H + j];
        const double cand = g.data[b * 4 * H + 3 * H + j];
        const double tc = std::tanh(c.data[b * H + j]);
        const double dh = dh_all.data[(b * T + tt) * H + j] + dh_next(b, static_cast<Eigen::Index>(j));
        const double dc = dh * o * (1.0 - tc * tc) + dc_next(b, static_cast<Eigen::Index>(j));
        const double cp = c_prev ? c_prev->data[b * H + j] : 0.0;

        dpre(b, static_cast<Eigen::Index>(j)) = dc * cp * f * (1.0 - f);
        dpre(b, static_cast<Eigen::Index>(H + j)) = dc * cand * i * (1.0 - i);
        dpre(b, static_cast<Eigen::Index>(2 * H + j)) = dh * tc * o * (1.0 - o);
        dpre(b, static_cast<Eigen::Index>(3 * H + j)) = dc * i * (1.0 - cand * cand);
        dc_next(b, static_cast<Eigen::Index>(j)) = dc * f;
      }
    }

    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(x_.ptr() + (b * T + tt) * F, F, xt.data() + b * F);
    }
    dwin.noalias() += dpre.transpose() * xt;
    if (tt > 0) {
      CMapM hprev(hidden_states_[tt - 1].ptr(), static_cast<Eigen::Index>(B),
                  static_cast<Eigen::Index>(H));
      dwrec.noalias() += dpre.transpose() * hprev;
      dh_next.noalias() = dpre * wrec;
    } else {
      dh_next.setZero();
    }
    for (std::size_t j = 0; j < 4 * H; ++j) {
      bias.grad[j] += dpre.col(static_cast<Eigen::Index>(j)).sum();
    }

    MatRM dxt = dpre * win;  // (B x F)
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(dxt.data() + b * F, F, dx.ptr() + (b * T + tt) * F);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Attention

Attention::Attention(std::size_t hidden_dim) : w({hidden_dim}), hidden_(hidden_dim) {}

void Attention::init(Rng& rng) { glorot_uniform(w.value, hidden_, 1, rng); }

Tensor Attention::forward(const Tensor& h) {
  check(h.ndim() == 3 && h.dim(2) == hidden_, "attention: bad input shape");
  const std::size_t B = h.dim(0), T = h.dim(1), H = hidden_;
  h_ = h;
  alphas_ = Tensor({B, T});

  Tensor ctx({B, H});
  std::vector<double> scores(T);
  for (std::size_t b = 0; b < B; ++b) {
    double mx = -1e300;
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      const double* ht = h.ptr() + (b * T + t) * H;
      for (std::size_t j = 0; j < H; ++j) s += w.value[j] * ht[j];
      scores[t] = s;
      mx = std::max(mx, s);
    }
    double denom = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      scores[t] = std::exp(scores[t] - mx);
      denom += scores[t];
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double a = scores[t] / denom;
      alphas_.at2(b, t) = a;
      const double* ht = h.ptr() + (b * T + t) * H;
      for (std::size_t j = 0; j < H; ++j) ctx.data[b * H + j] += a * ht[j];
    }
  }
  return ctx;
}

Tensor Attention::backward(const Tensor& dctx) {
  const std::size_t B = h_.dim(0), T = h_.dim(1), H = hidden_;
  check(dctx.shape == std::vector<std::size_t>({B, H}), "attention: bad dctx shape");

  Tensor dh({B, T, H});
  std::vector<double> dalpha(T), ds(T);
  for (std::size_t b = 0; b < B; ++b) {
    const double* dc = dctx.ptr() + b * H;
    double dot = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double* ht = h_.ptr() + (b * T + t) * H;
      double da = 0.0;
      for (std::size_t j = 0; j < H; ++j) da += dc[j] * ht[j];
      dalpha[t] = da;
      dot += alphas_.at2(b, t) * da;
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double a = alphas_.at2(b, t);
      ds[t] = a * (dalpha[t] - dot);
      const double* ht = h_.ptr() + (b * T + t) * H;
      double* dht = dh.ptr() + (b * T + t) * H;
      for (std::size_t j = 0; j < H; ++j) {
        dht[j] = a * dc[j] + ds[t] * w.value[j];
        w.grad[j] += ds[t] * ht[j];
      }
    }
  }
  return dh;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t in_dim, std::size_t out_dim)
    : w({out_dim, in_dim}), b({out_dim}), in_(in_dim), out_(out_dim) {}

void Dense::init(Rng& rng) {
  glorot_uniform(w.value, in_, out_, rng);
  b.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x) {
  check(x.ndim() == 2 && x.dim(1) == in_, "dense: bad input shape");
  const std::size_t B = x.dim(0);
  x_ = x;
  Tensor y({B, out_});
  CMapM xm(x.ptr(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(in_));
  CMapM wm(w.value.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
  MapM ym(y.ptr(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(out_));
  ym.noalias() = xm * wm.transpose();
  for (std::size_t bi = 0; bi < B; ++bi) {
    for (std::size_t j = 0; j < out_; ++j) y.data[bi * out_ + j] += b.value[j];
  }
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  const std::size_t B = x_.dim(0);
  check(dy.shape == std::vector<std::size_t>({B, out_}), "dense: bad dy shape");
  CMapM dym(dy.ptr(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(out_));
  CMapM xm(x_.ptr(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(in_));
  CMapM wm(w.value.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
  MapM dwm(w.grad.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));

  dwm.noalias() += dym.transpose() * xm;
  for (std::size_t j = 0; j < out_; ++j) {
    b.grad[j] += dym.col(static_cast<Eigen::Index>(j)).sum();
  }
  Tensor dx({B, in_});
  MapM dxm(dx.ptr(), static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(in_));
  dxm.noalias() = dym * wm;
  return dx;
}

// ---------------------------------------------------------------------------
// Loss / optimizer / gradient checking

Tensor softmax(const Tensor& logits) {
  check(logits.ndim() == 2, "softmax: expected 2-d logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  Tensor p(logits.shape);
  for (std::size_t b = 0; b < B; ++b) {
    const double* z = logits.ptr() + b * C;
    double mx = z[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, z[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      p.data[b * C + c] = std::exp(z[c] - mx);
      denom += p.data[b * C + c];
    }
    for (std::size_t c = 0; c < C; ++c) p.data[b * C + c] /= denom;
  }
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  check(targets.size() == B, "softmax_cross_entropy: target count mismatch");
  Tensor p = softmax(logits);
  double loss = 0.0;
  Tensor d(logits.shape);
  for (std::size_t b = 0; b < B; ++b) {
    const int y = targets[b];
    check(y >= 0 && static_cast<std::size_t>(y) < C, "softmax_cross_entropy: bad target");
    loss -= std::log(std::max(p.data[b * C + static_cast<std::size_t>(y)], 1e-300));
    for (std::size_t c = 0; c < C; ++c) {
      double g = p.data[b * C + c];
      if (c == static_cast<std::size_t>(y)) g -= 1.0;
      d.data[b * C + c] = g / static_cast<double>(B);
    }
  }
  return {loss / static_cast<double>(B), std::move(d)};
}

void adam_step(Parameter& p, const AdamConfig& cfg) {
  p.step_count += 1;
  const double t = static_cast<double>(p.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    p.adam_m[i] = cfg.beta1 * p.adam_m[i] + (1.0 - cfg.beta1) * g;
    p.adam_v[i] = cfg.beta2 * p.adam_v[i] + (1.0 - cfg.beta2) * g * g;
    const double mh = p.adam_m[i] / bc1;
    const double vh = p.adam_v[i] / bc2;
    p.value[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }
  p.zero_grad();
}

GradCheckReport grad_check(const std::function<double()>& loss_fn, Tensor& values,
                           const Tensor& analytic, double step, double denom_floor) {
  check(values.same_shape(analytic), "grad_check: shape mismatch");
  GradCheckReport report;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double fp = loss_fn();
    values[i] = saved - step;
    const double fm = loss_fn();
    values[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), denom_floor});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace dfd

#include "s3/layers.hpp"

#include <algorithm>
#include <cmath>

#include "s3/error.hpp"

namespace s3::nn {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw IntegrityError(std::string("dimension mismatch in ") + what);
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  matmul_acc(out, a, b);
  return out;
}

void matmul_acc(Tensor& out, const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == k && out.rows() == m && out.cols() == n, "matmul");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.rows());
  matmul_nt_acc(out, a, b);
  return out;
}

void matmul_nt_acc(Tensor& out, const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  require(b.cols() == k && out.rows() == m && out.cols() == n, "matmul_nt");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += pa[i * k + p] * pb[j * k + p];
      po[i * n + j] += s;
    }
  }
}

void matmul_tn_acc(Tensor& out, const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == m && out.rows() == k && out.cols() == n, "matmul_tn");
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + i * n;
      double* orow = po + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void add_inplace(Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "add");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void add_row_bias(Tensor& x, const Tensor& bias) {
  require(bias.size() == x.cols(), "bias");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void bias_grad_acc(Tensor& db, const Tensor& dy) {
  require(db.size() == dy.cols(), "bias grad");
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    auto row = dy.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
  }
}

Tensor sinusoidal_positions(std::size_t n, std::size_t d) {
  Tensor pe = Tensor::matrix(n, d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      double rate = std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      double angle = static_cast<double>(pos) / rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Tensor softmax_rows(const Tensor& scores, bool causal) {
  Tensor p = Tensor::matrix(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t len = causal ? std::min(i + 1, scores.cols()) : scores.cols();
    auto s = scores.row(i);
    auto out = p.row(i);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, s[j]);
    if (!std::isfinite(mx)) throw NumericError("softmax: non-finite scores");
    double sum = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      out[j] = std::exp(s[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < len; ++j) out[j] /= sum;
  }
  return p;
}

Tensor softmax_rows_backward(const Tensor& probs, const Tensor& dprobs) {
  Tensor ds = Tensor::matrix(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    auto dp = dprobs.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * dp[j];
    auto out = ds.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) out[j] = p[j] * (dp[j] - dot);
  }
  return ds;
}

Tensor attention(const Tensor& xq, const Tensor& xkv, const Tensor& wq,
                 const Tensor& wk, const Tensor& wv, bool causal,
                 AttentionCache& cache) {
  cache.q = matmul(xq, wq);
  cache.k = matmul(xkv, wk);
  cache.v = matmul(xkv, wv);
  Tensor scores = matmul_nt(cache.q, cache.k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(wk.cols()));
  for (auto& s : scores.data()) s *= scale;
  cache.probs = softmax_rows(scores, causal);
  return matmul(cache.probs, cache.v);
}

void attention_backward(const Tensor& dy, const AttentionCache& cache,
                        const Tensor& xq, const Tensor& xkv, const Tensor& wq,
                        const Tensor& wk, const Tensor& wv, Tensor& dxq,
                        Tensor& dxkv, Tensor& dwq, Tensor& dwk, Tensor& dwv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wk.cols()));
  Tensor dprobs = matmul_nt(dy, cache.v);
  Tensor dv = Tensor::matrix(cache.v.rows(), cache.v.cols());
  matmul_tn_acc(dv, cache.probs, dy);
  Tensor dscores = softmax_rows_backward(cache.probs, dprobs);
  for (auto& s : dscores.data()) s *= scale;
  Tensor dq = matmul(dscores, cache.k);
  Tensor dk = Tensor::matrix(cache.k.rows(), cache.k.cols());
  matmul_tn_acc(dk, dscores, cache.q);

  matmul_tn_acc(dwq, xq, dq);
  matmul_tn_acc(dwk, xkv, dk);
  matmul_tn_acc(dwv, xkv, dv);
  matmul_nt_acc(dxq, dq, wq);
  matmul_nt_acc(dxkv, dk, wk);
  matmul_nt_acc(dxkv, dv, wv);
}

Tensor ffn_residual(const Tensor& x, const Tensor& w1, const Tensor& b1,
                    const Tensor& w2, const Tensor& b2, FfnCache& cache) {
  cache.hidden = matmul(x, w1);
  add_row_bias(cache.hidden, b1);
  for (auto& v : cache.hidden.data()) v = std::tanh(v);
  Tensor y = x;
  matmul_acc(y, cache.hidden, w2);
  add_row_bias(y, b2);
  return y;
}

void ffn_residual_backward(const Tensor& dy, const Tensor& x,
                           const FfnCache& cache, const Tensor& w1,
                           const Tensor& w2, Tensor& dx, Tensor& dw1,
                           Tensor& db1, Tensor& dw2, Tensor& db2) {
  add_inplace(dx, dy);
  bias_grad_acc(db2, dy);
  matmul_tn_acc(dw2, cache.hidden, dy);
  Tensor dh = matmul_nt(dy, w2);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    double h = cache.hidden[i];
    dh[i] *= 1.0 - h * h;
  }
  bias_grad_acc(db1, dh);
  matmul_tn_acc(dw1, x, dh);
  matmul_nt_acc(dx, dh, w1);
}

Tensor log_softmax_rows(const Tensor& logits) {
  Tensor out = Tensor::matrix(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto l = logits.row(i);
    double mx = *std::max_element(l.begin(), l.end());
    if (!std::isfinite(mx)) throw NumericError("log_softmax: non-finite logits");
    double sum = 0.0;
    for (double v : l) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    auto o = out.row(i);
    for (std::size_t j = 0; j < l.size(); ++j) o[j] = l[j] - lse;
  }
  return out;
}

}  // namespace s3::nn

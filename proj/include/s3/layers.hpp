#pragma once

#include "s3/numerics.hpp"

/// Matrix kernels and small layers with hand-written backward passes.
/// Backward functions accumulate (+=) into their gradient arguments.
namespace s3::nn {

Tensor matmul(const Tensor& a, const Tensor& b);          // a b
Tensor matmul_nt(const Tensor& a, const Tensor& b);       // a b^T
void matmul_acc(Tensor& out, const Tensor& a, const Tensor& b);     // out += a b
void matmul_nt_acc(Tensor& out, const Tensor& a, const Tensor& b);  // out += a b^T
void matmul_tn_acc(Tensor& out, const Tensor& a, const Tensor& b);  // out += a^T b

void add_inplace(Tensor& a, const Tensor& b);
void add_row_bias(Tensor& x, const Tensor& bias);
void bias_grad_acc(Tensor& db, const Tensor& dy);

/// Sinusoidal position table [n x d].
Tensor sinusoidal_positions(std::size_t n, std::size_t d);

/// Row softmax. With `causal`, entry (i, j > i) is excluded and set to 0.
Tensor softmax_rows(const Tensor& scores, bool causal);
/// Gradient of the scores given the softmax output and its gradient.
Tensor softmax_rows_backward(const Tensor& probs, const Tensor& dprobs);

struct AttentionCache {
  Tensor q, k, v, probs;
};

/// Single-head scaled dot-product attention:
/// softmax((xq Wq)(xkv Wk)^T / sqrt(d)) (xkv Wv).
Tensor attention(const Tensor& xq, const Tensor& xkv, const Tensor& wq,
                 const Tensor& wk, const Tensor& wv, bool causal,
                 AttentionCache& cache);

void attention_backward(const Tensor& dy, const AttentionCache& cache,
                        const Tensor& xq, const Tensor& xkv, const Tensor& wq,
                        const Tensor& wk, const Tensor& wv, Tensor& dxq,
                        Tensor& dxkv, Tensor& dwq, Tensor& dwk, Tensor& dwv);

struct FfnCache {
  Tensor hidden;  // tanh activations
};

/// y = x + tanh(x W1 + b1) W2 + b2
Tensor ffn_residual(const Tensor& x, const Tensor& w1, const Tensor& b1,
                    const Tensor& w2, const Tensor& b2, FfnCache& cache);

void ffn_residual_backward(const Tensor& dy, const Tensor& x,
                           const FfnCache& cache, const Tensor& w1,
                           const Tensor& w2, Tensor& dx, Tensor& dw1,
                           Tensor& db1, Tensor& dw2, Tensor& db2);

/// Row-wise log-softmax.
Tensor log_softmax_rows(const Tensor& logits);

}  // namespace s3::nn

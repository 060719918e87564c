#pragma once

#include <cstddef>
#include <vector>

#include "s3/layers.hpp"
#include "s3/numerics.hpp"
#include "s3/vocab.hpp"

namespace s3 {

struct GenerationConfig {
  std::size_t beam = 2;
  std::size_t max_len = 16;
  std::size_t bos = SpecialTokens::kBos;
  std::size_t eos = SpecialTokens::kEos;
  std::size_t pad = SpecialTokens::kPad;

  void validate() const;
};

/// Graph-side memory of the decoder. `is_word[i]` marks rows of Z that
/// belong to real word nodes; those rows form Z-bar.
struct FusionInputs {
  Tensor Z;
  std::vector<bool> is_word;
  Tensor O;

  Tensor z_bar() const;
};

struct FusionCache {
  Tensor q, k, v, probs;
};

/// Cross-attention from decoder states to the pruned graph:
///   C = softmax((O Wq)(Z Wk)^T / sqrt(d)) V
/// where row i of V is Z_i for word nodes and Z_i Wv otherwise, so word-node
/// features enter the decoder unprojected. Throws ValidationError when no
/// row is a word row.
Tensor fuse(const FusionInputs& fi, const ParamStore& params, FusionCache* cache = nullptr);

void fuse_backward(const Tensor& dC, const FusionInputs& fi, const FusionCache& cache,
                   const ParamStore& params, Tensor& dZ, Tensor& dO, ParamStore& grads);

void init_decoder_params(ParamStore& params, std::size_t d_model, std::size_t vocab_size,
                         Rng& rng);

struct DecoderCache {
  std::vector<std::size_t> ids;
  Tensor e0;
  nn::AttentionCache self_attn;
  Tensor self_out;
  FusionInputs fusion_in;
  FusionCache fusion;
  Tensor c;
  Tensor g;
  nn::FfnCache ffn;
  Tensor f;
};

/// Teacher-forced pass: causal self-attention over `input_ids`, fusion with
/// the graph memory, a residual feed-forward block and the output
/// projection. Returns logits [t x vocab].
Tensor decoder_logits(const Tensor& Z, const std::vector<bool>& is_word,
                      const std::vector<std::size_t>& input_ids, const ParamStore& params,
                      DecoderCache* cache = nullptr);

void decoder_backward(const Tensor& dlogits, const DecoderCache& cache,
                      const ParamStore& params, Tensor& dZ, ParamStore& grads);

/// Mean negative log-likelihood over targets that are not `pad`.
/// Writes dloss/dlogits when `dlogits` is non-null.
double ce_loss(const Tensor& logits, const std::vector<std::size_t>& targets,
               std::size_t pad = SpecialTokens::kPad, Tensor* dlogits = nullptr);

/// Decoder inputs [bos, y...] and targets [y..., eos] for a reference.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> teacher_forcing_pair(
    const std::vector<std::size_t>& reference, const GenerationConfig& cfg);

struct Hypothesis {
  std::vector<std::size_t> tokens;  // without bos / eos
  double log_prob = 0.0;
  std::size_t scored = 0;  // number of scored steps, eos included
  bool finished = false;   // ended with eos

  double score() const { return scored ? log_prob / static_cast<double>(scored) : 0.0; }
};

/// Beam search ranked by length-normalized log-probability. The greedy
/// hypothesis always competes in the final ranking, so the result never
/// scores below greedy decoding. beam == 1 is greedy decoding.
Hypothesis beam_search(const Tensor& Z, const std::vector<bool>& is_word,
                       const ParamStore& params, const GenerationConfig& cfg);
Hypothesis greedy_search(const Tensor& Z, const std::vector<bool>& is_word,
                         const ParamStore& params, const GenerationConfig& cfg);

std::vector<std::size_t> generate(const Tensor& Z, const std::vector<bool>& is_word,
                                  const ParamStore& params, const GenerationConfig& cfg);

}  // namespace s3

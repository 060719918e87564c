#pragma once

#include <cstddef>
#include <vector>

#include "s3/layers.hpp"
#include "s3/numerics.hpp"
#include "s3/rst.hpp"
#include "s3/s3_graph.hpp"
#include "s3/vocab.hpp"

namespace s3 {

struct EncoderConfig {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t vocab_size = 0;
  double dropout = 0.1;
  std::size_t gat_layers = 1;
  std::size_t max_seq_len = 512;

  std::size_t d_ff() const { return 2 * d_model; }
  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Contextual token representations of [CLS] e1 [SEP] e2 [SEP] ...
struct TokenReps {
  Tensor H;
  /// Row of H for every document token (global position); specials excluded.
  std::vector<std::size_t> token_map;
};

struct EmbedCache {
  std::vector<std::size_t> ids;
  Tensor e0;
  nn::AttentionCache attn;
  Tensor attn_out;
  Tensor h1;
  nn::FfnCache ffn;
};

/// Adds every encoder-side parameter: the token encoder, the dummy-concept
/// and edge-label tables, and the GAT layers.
void init_encoder_params(ParamStore& params, const EncoderConfig& cfg,
                         std::size_t dummy_vocab, std::size_t edge_vocab, Rng& rng);

/// Toy stand-in for a pretrained encoder: token embedding plus sinusoidal
/// position, one self-attention block and one feed-forward block, both
/// residual. Throws ValidationError when the sequence exceeds max_seq_len.
TokenReps embed_document(const Document& d, const Vocab& vocab, const ParamStore& params,
                         const EncoderConfig& cfg, EmbedCache* cache = nullptr);

void embed_document_backward(const Tensor& dH, const EmbedCache& cache,
                             const ParamStore& params, ParamStore& grads);

/// Initial node vectors r^v and edge-label vectors r^m for one graph.
struct NodeReps {
  Tensor R;
  /// Indexed by the adjacency view's local label ids.
  std::vector<Tensor> edge_label_table;
};

struct NodeInitCache {
  /// Per node: H rows averaged into it (empty for dummies).
  std::vector<std::vector<std::size_t>> pooled_rows;
  /// Per node: dummy-concept id, or -1.
  std::vector<long> dummy_ids;
  /// Per local label: edge vocabulary id.
  std::vector<std::size_t> label_ids;
};

/// Word nodes copy their token's row, EDU nodes average their tokens, span
/// nodes average every token of their EDU range, and dummy nodes look up a
/// trainable vector keyed by concept.
NodeReps init_node_embeddings(const S3Graph& g, const AdjacencyView& adj, const Document& d,
                              const TokenReps& h, const ParamStore& params,
                              const Vocab& dummy_concepts, const Vocab& edge_labels,
                              NodeInitCache* cache = nullptr);

void init_node_embeddings_backward(const Tensor& dR, const std::vector<Tensor>& dlabels,
                                   const NodeInitCache& cache, Tensor& dH, ParamStore& grads);

struct GatLayerCache {
  Tensor input;                    // node reps after dropout
  std::vector<double> input_mask;  // dropout scale per entry, empty if off
  std::vector<std::size_t> row_start;  // edge offsets per node (n + 1)
  std::vector<std::size_t> edge_dst;
  std::vector<int> edge_label;
  Tensor x;      // [edges x d]: r_i + r_j + m_ij
  Tensor sx;     // sigmoid(x)
  Tensor beta;   // [heads x edges], normalized per node
  Tensor beta_used;  // after dropout
  std::vector<Tensor> agg;  // per head [n x d]
  Tensor u;
};

struct GatCache {
  std::vector<GatLayerCache> layers;
};

/// Multi-head graph attention:
///   u_i = sigmoid( 1/K sum_k sum_{j in N_i} beta^k_ij (r_i + r_j + m_ij) W^k )
///   beta^k_ij = softmax_j( a^k . sigmoid(r_i + r_j + m_ij) )
/// The learned vector a^k reduces the sigmoid vector to a scalar score.
/// Dropout on node inputs and attention weights is applied only when
/// `dropout_rng` is given.
Tensor gat_forward(const AdjacencyView& adj, const NodeReps& reps, const ParamStore& params,
                   const EncoderConfig& cfg, GatCache* cache = nullptr,
                   Rng* dropout_rng = nullptr);

void gat_backward(const Tensor& du, const AdjacencyView& adj, const GatCache& cache,
                  const ParamStore& params, const EncoderConfig& cfg, Tensor& dR,
                  std::vector<Tensor>& dlabels, ParamStore& grads);

}  // namespace s3

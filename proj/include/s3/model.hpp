#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "s3/decoder.hpp"
#include "s3/encoder.hpp"
#include "s3/pruner.hpp"
#include "s3/rst.hpp"
#include "s3/s3_graph.hpp"
#include "s3/vocab.hpp"

namespace s3 {

/// One training or evaluation example.
struct Sample {
  Document doc;
  S3Graph graph;
};

struct ModelConfig {
  EncoderConfig encoder;
  PrunePolicy policy;
  Thresholds thresholds;
  GenerationConfig generation;
  std::size_t prune_rounds = 3;
  /// Decoder attends to graph node states; false gives the token-only
  /// baseline that attends to the encoder rows directly.
  bool use_graph = true;
  /// Prune with the deterministic policy before generating. Set once the
  /// policy has been trained.
  bool prune_at_inference = false;
  /// Initial policy action: the output bias starts at logit(initial_action).
  double initial_action = 0.40;

  void validate() const;
};

struct HeadlineModel {
  ModelConfig config;
  Vocab tokens = make_token_vocab();
  Vocab dummy_concepts;
  Vocab edge_labels;
  ParamStore params;
};

/// Vocabularies collected from training samples: document and headline
/// tokens, dummy concepts, and base, reverse and self edge labels.
void build_vocabs(const std::vector<Sample>& samples, Vocab& tokens, Vocab& dummy_concepts,
                  Vocab& edge_labels);

/// Builds vocabularies from `samples` and initializes every parameter from
/// `seed`. The token vocabulary size overrides config.encoder.vocab_size.
HeadlineModel make_model(ModelConfig config, const std::vector<Sample>& samples,
                         std::uint64_t seed);

/// Reference token ids; unknown tokens map to UNK.
std::vector<std::size_t> reference_ids(const HeadlineModel& m, const Document& d);

/// Decoder memory for one graph: node states Z and the word-row mask.
struct Memory {
  Tensor Z;
  std::vector<bool> is_word;
};

/// Node states u from the GAT for `g` (token rows when use_graph is off).
Memory encode(const HeadlineModel& m, const Document& d, const S3Graph& g);

struct LossResult {
  double loss = 0.0;
  std::size_t tokens = 0;
};

/// Teacher-forced cross-entropy of the reference headline given graph `g`.
/// Dropout runs only when `dropout_rng` is given; gradients accumulate into
/// `grads` when it is non-null.
LossResult headline_loss(const HeadlineModel& m, const Document& d, const S3Graph& g,
                         Rng* dropout_rng = nullptr, ParamStore* grads = nullptr);

struct Rollout {
  S3Graph pruned;
  PruneTrajectory trajectory;
};

/// Runs config.prune_rounds rounds of scoring, thresholding and pruning.
/// Each round scores the nodes of the previous round's graph. A null
/// `rng` selects the deterministic mean action.
Rollout prune_rollout(const HeadlineModel& m, const Document& d, const S3Graph& g, Rng* rng);

struct Reward {
  double total = 0.0;
  double confidence = 0.0;  // mean per-token log-likelihood on the pruned graph
  double rouge = 0.0;       // ROUGE-L F1 gain of greedy output over the full graph
};

Reward compute_reward(const HeadlineModel& m, const Document& d, const S3Graph& pruned,
                      const S3Graph& original);

/// Graph used for generation: the deterministic pruning result when
/// prune_at_inference is set, otherwise `g`.
S3Graph inference_graph(const HeadlineModel& m, const Document& d, const S3Graph& g);

std::vector<std::string> generate_headline(const HeadlineModel& m, const Document& d,
                                           const S3Graph& g, const GenerationConfig& cfg);

/// Key = value text with every model setting and the three vocabularies,
/// written beside a checkpoint so generation can rebuild the model.
void save_model_meta(const std::string& path, const HeadlineModel& m);
HeadlineModel load_model(const std::string& meta_path, const std::string& ckpt_path);

}  // namespace s3

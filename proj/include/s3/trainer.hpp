#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "s3/metrics.hpp"
#include "s3/model.hpp"

namespace s3 {

struct TrainConfig {
  ModelConfig model;
  double lr_model = 1e-3;
  double lr_gat = 5e-4;
  double lr_agent = 1e-3;
  std::size_t batch_size = 8;
  double clip_norm = 1.0;
  std::size_t patience = 3;
  double min_delta = 1e-4;
  std::size_t max_epochs = 60;
  /// Run the joint phase after the warm phase plateaus.
  bool joint = true;
  /// Keep the parameters with the best dev loss; otherwise the last ones.
  bool select_best_dev = true;
  std::uint64_t seed = 0;

  void validate() const;
  /// The learning rates of the reference setup: 5e-6 for the model and the
  /// agent, 5e-4 for the GAT.
  void apply_reference_lr();
};

/// Every field as "key = value" lines, defaults included.
std::string config_to_text(const TrainConfig& cfg);
/// Parses key = value lines; '#' starts a comment. Unknown keys and bad
/// values raise ValidationError naming `source` and the line.
TrainConfig parse_config(std::string_view text, const std::string& source = "<config>");
TrainConfig load_config(const std::string& path);

/// Adam with beta1 0.9, beta2 0.999 and eps 1e-8. The learning rate is
/// chosen by name prefix: gat/ uses lr_gat, policy/ uses lr_agent, the rest
/// lr_model. Tensors whose gradient is exactly zero are left untouched,
/// moments included.
class Adam {
 public:
  Adam(double lr_model, double lr_gat, double lr_agent)
      : lr_model_(lr_model), lr_gat_(lr_gat), lr_agent_(lr_agent) {}

  /// Descends along `grads`.
  void step(ParamStore& params, const ParamStore& grads);
  double lr_for(const std::string& name) const;

 private:
  struct Moments {
    Tensor m, v;
    std::size_t t = 0;
  };
  double lr_model_, lr_gat_, lr_agent_;
  std::map<std::string, Moments> state_;
};

/// Scales `grads` so their global norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_global_norm(ParamStore& grads, double max_norm);

enum class Phase { Warm, Joint };
std::string_view to_string(Phase p);

struct EpochRecord {
  std::size_t epoch = 0;
  Phase phase = Phase::Warm;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double mean_reward = 0.0;
  double mean_confidence = 0.0;
  double mean_rouge = 0.0;
  double baseline = 0.0;

  std::string to_json() const;
};

struct TrainState {
  std::size_t epoch = 0;
  Phase phase = Phase::Warm;
  std::size_t transitions = 0;
  double best_dev_loss = 0.0;
  RewardBaseline baseline;
  HeadlineModel model;
  std::vector<EpochRecord> log;
};

/// Warm phase on cross-entropy over full graphs until dev loss plateaus,
/// then (with cfg.joint) joint training where each document is pruned by a
/// sampled rollout, the model learns from the pruned graph and the policy
/// from REINFORCE. Stops at max_epochs or on a joint plateau. One JSON
/// record per epoch goes to `metrics_log` when given. A non-finite loss
/// writes the current parameters to `diagnostic_path` (when non-empty) and
/// throws NumericError. The graph-free baseline (use_graph off) trains the
/// warm phase only.
TrainState train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                 const TrainConfig& cfg, std::ostream* metrics_log = nullptr,
                 const std::string& diagnostic_path = "");

/// Mean dev cross-entropy over the graphs used at inference.
double dev_loss(const HeadlineModel& m, const std::vector<Sample>& samples);

struct Evaluation {
  MetricReport report;
  std::vector<std::vector<std::string>> predictions;
};

Evaluation evaluate(const HeadlineModel& m, const std::vector<Sample>& samples,
                    bool with_meteor = false);

/// Pairs documents with graphs by document id, in document order.
std::vector<Sample> pair_samples(const std::vector<Document>& docs,
                                 const std::vector<S3Graph>& graphs);

}  // namespace s3

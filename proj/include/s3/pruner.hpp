#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s3/numerics.hpp"
#include "s3/s3_graph.hpp"

namespace s3 {

/// Per-type pruning thresholds. A node is dropped when its action exceeds
/// the threshold of its type.
struct Thresholds {
  double p_A = 0.85;
  double p_B = 0.60;
  double p_C = 0.40;

  /// Throws ValidationError unless 0 < p_C <= p_B <= p_A < 1.
  void validate() const;
  double for_type(NodeType t) const;
};

/// Gaussian policy whose mean comes from a tanh feed-forward network
/// d -> hidden -> hidden -> 1. The last layer starts at zero, so a fresh
/// policy draws z ~ N(0, std^2) for every state.
struct PrunePolicy {
  std::size_t input_dim = 32;
  std::size_t hidden = 300;
  double action_std = 0.1;

  void validate() const;
  /// Adds policy/w1 b1 w2 b2 w3 b3.
  void init_params(ParamStore& params, Rng& rng) const;
  /// Gaussian log-density of z under N(mean, action_std^2). Zero when
  /// action_std is zero (the action is then a point mass at the mean).
  double log_density(double z, double mean) const;
};

struct PolicyCache {
  Tensor states;
  Tensor h1, h2;
};

/// Policy means for every row of `states` [n x input_dim].
std::vector<double> policy_means(const PrunePolicy& policy, const ParamStore& params,
                                 const Tensor& states, PolicyCache* cache = nullptr);

/// Accumulates d(sum_i dmean_i * mean_i)/dtheta into `grads`.
void policy_means_backward(const PrunePolicy& policy, const ParamStore& params,
                           const PolicyCache& cache, const std::vector<double>& dmean,
                           ParamStore& grads);

struct PolicyAction {
  double action = 0.5;  // sigmoid(z), in [0, 1]
  double z = 0.0;
  double mean = 0.0;
  double logprob = 0.0;
};

/// Draws z ~ N(mean(s), std^2) and squashes it with a sigmoid.
PolicyAction policy_action(std::span<const double> state, const PrunePolicy& policy,
                           const ParamStore& params, Rng& rng);

/// Vectorized sampling over the rows of `states`; draws in row order. With
/// a null `rng` every action is the deterministic sigmoid(mean).
std::vector<PolicyAction> policy_actions(const Tensor& states, const PrunePolicy& policy,
                                         const ParamStore& params, Rng* rng);

enum class Decision { Keep, Drop };

/// `actions` is indexed by node position in `g`. Drops a node when its
/// action exceeds its type's threshold, except that the root is always kept
/// and, when every EDU node would go, the one with the smallest action stays.
std::vector<Decision> apply_thresholds(const std::vector<double>& actions, const S3Graph& g,
                                       const Thresholds& th);

/// Removes dropped nodes and their edges, then every node no longer
/// anchored to the root. Node ids are preserved. The result always holds
/// the root, at least one EDU node with its span ancestors, and at least one
/// word node; those are restored from `g` when the decisions remove them.
S3Graph prune_graph(const S3Graph& g, const std::vector<Decision>& decisions);

struct PruneStep {
  std::size_t node_id = 0;
  std::size_t round = 0;
  std::vector<double> state;
  double z = 0.0;
  double action = 0.0;
  bool kept = true;
};

struct PruneTrajectory {
  std::vector<PruneStep> steps;
  std::size_t rounds = 0;
  double reward = 0.0;
};

/// Exponential moving average of past rewards. Starts at the first reward.
struct RewardBaseline {
  double value = 0.0;
  double decay = 0.99;
  bool initialized = false;

  void update(double reward);
};

/// Policy-gradient ascent direction sum_steps (R - b) * dlogprob/dtheta,
/// with b the baseline before this trajectory. Updates the baseline with R
/// afterwards. Only policy/ entries are returned.
ParamStore reinforce_update(const PruneTrajectory& traj, RewardBaseline& baseline,
                            const PrunePolicy& policy, const ParamStore& params);

/// Gradient of sum_steps logprob(z_i | s_i) with respect to the policy
/// parameters; exposed for finite-difference checks.
ParamStore logprob_gradient(const PruneTrajectory& traj, const PrunePolicy& policy,
                            const ParamStore& params);
double trajectory_logprob(const PruneTrajectory& traj, const PrunePolicy& policy,
                          const ParamStore& params);

}  // namespace s3

#include "s3/pruner.hpp"

#include <cmath>
#include <numbers>

#include "s3/error.hpp"
#include "s3/layers.hpp"

namespace s3 {

void Thresholds::validate() const {
  if (!(0.0 < p_C && p_C <= p_B && p_B <= p_A && p_A < 1.0)) {
    throw ValidationError("thresholds must satisfy 0 < p_C <= p_B <= p_A < 1");
  }
}

double Thresholds::for_type(NodeType t) const {
  switch (t) {
    case NodeType::TextSpan:
      return p_A;
    case NodeType::Edu:
      return p_B;
    case NodeType::Word:
    case NodeType::Dummy:
      return p_C;
  }
  throw IntegrityError("unknown node type");
}

// ---- policy ---------------------------------------------------------------------

void PrunePolicy::validate() const {
  if (input_dim == 0 || hidden == 0) throw ValidationError("policy sizes must be positive");
  if (!(action_std >= 0.0) || !std::isfinite(action_std)) {
    throw ValidationError("action_std must be finite and non-negative");
  }
}

void PrunePolicy::init_params(ParamStore& p, Rng& rng) const {
  validate();
  p.add_uniform("policy/w1", {input_dim, hidden}, input_dim, rng);
  p.add_uniform("policy/b1", {hidden}, input_dim, rng);
  p.add_uniform("policy/w2", {hidden, hidden}, hidden, rng);
  p.add_uniform("policy/b2", {hidden}, hidden, rng);
  p.add("policy/w3", Tensor({hidden, 1}));
  p.add("policy/b3", Tensor({1}));
}

double PrunePolicy::log_density(double z, double mean) const {
  if (action_std == 0.0) return 0.0;
  const double u = (z - mean) / action_std;
  return -0.5 * u * u - std::log(action_std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::vector<double> policy_means(const PrunePolicy& policy, const ParamStore& p,
                                 const Tensor& states, PolicyCache* cache) {
  if (states.cols() != policy.input_dim) {
    throw IntegrityError("policy state width " + std::to_string(states.cols()) +
                         " does not match input_dim " + std::to_string(policy.input_dim));
  }
  PolicyCache local;
  PolicyCache& c = cache ? *cache : local;
  c.states = states;
  c.h1 = nn::matmul(states, p.at("policy/w1"));
  nn::add_row_bias(c.h1, p.at("policy/b1"));
  for (auto& v : c.h1.data()) v = std::tanh(v);
  c.h2 = nn::matmul(c.h1, p.at("policy/w2"));
  nn::add_row_bias(c.h2, p.at("policy/b2"));
  for (auto& v : c.h2.data()) v = std::tanh(v);
  Tensor m = nn::matmul(c.h2, p.at("policy/w3"));
  nn::add_row_bias(m, p.at("policy/b3"));
  return m.data();
}

void policy_means_backward(const PrunePolicy&, const ParamStore& p, const PolicyCache& c,
                           const std::vector<double>& dmean, ParamStore& g) {
  Tensor dm({dmean.size(), 1}, dmean);
  nn::matmul_tn_acc(g.at("policy/w3"), c.h2, dm);
  nn::bias_grad_acc(g.at("policy/b3"), dm);
  Tensor d2 = nn::matmul_nt(dm, p.at("policy/w3"));
  for (std::size_t i = 0; i < d2.size(); ++i) d2[i] *= 1.0 - c.h2[i] * c.h2[i];
  nn::matmul_tn_acc(g.at("policy/w2"), c.h1, d2);
  nn::bias_grad_acc(g.at("policy/b2"), d2);
  Tensor d1 = nn::matmul_nt(d2, p.at("policy/w2"));
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] *= 1.0 - c.h1[i] * c.h1[i];
  nn::matmul_tn_acc(g.at("policy/w1"), c.states, d1);
  nn::bias_grad_acc(g.at("policy/b1"), d1);
}

namespace {

PolicyAction make_action(const PrunePolicy& policy, double mean, Rng* rng) {
  PolicyAction a;
  a.mean = mean;
  a.z = rng ? gaussian_draw(*rng, mean, policy.action_std) : mean;
  a.action = sigmoid(a.z);
  a.logprob = policy.log_density(a.z, mean);
  return a;
}

}  // namespace

PolicyAction policy_action(std::span<const double> state, const PrunePolicy& policy,
                           const ParamStore& p, Rng& rng) {
  Tensor s({1, state.size()}, std::vector<double>(state.begin(), state.end()));
  return make_action(policy, policy_means(policy, p, s)[0], &rng);
}

std::vector<PolicyAction> policy_actions(const Tensor& states, const PrunePolicy& policy,
                                         const ParamStore& p, Rng* rng) {
  auto means = policy_means(policy, p, states);
  std::vector<PolicyAction> out;
  out.reserve(means.size());
  for (double m : means) out.push_back(make_action(policy, m, rng));
  return out;
}

// ---- thresholds and pruning -------------------------------------------------------

std::vector<Decision> apply_thresholds(const std::vector<double>& actions, const S3Graph& g,
                                       const Thresholds& th) {
  if (actions.size() != g.nodes.size()) {
    throw IntegrityError("apply_thresholds needs one action per node");
  }
  std::vector<Decision> out(actions.size(), Decision::Keep);
  bool any_edu_kept = false;
  std::optional<std::size_t> min_edu;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& node = g.nodes[i];
    if (actions[i] > th.for_type(node.type)) out[i] = Decision::Drop;
    if (node.id == g.root) out[i] = Decision::Keep;
    if (node.type == NodeType::Edu) {
      any_edu_kept = any_edu_kept || out[i] == Decision::Keep;
      if (!min_edu || actions[i] < actions[*min_edu]) min_edu = i;
    }
  }
  if (!any_edu_kept && min_edu) out[*min_edu] = Decision::Keep;
  return out;
}

namespace {

S3Graph select_nodes(const S3Graph& g, const std::vector<bool>& keep) {
  S3Graph out;
  out.doc_id = g.doc_id;
  out.root = g.root;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (keep[i]) out.nodes.push_back(g.nodes[i]);
  }
  for (const auto& e : g.edges) {
    auto s = g.position(e.src), t = g.position(e.dst);
    if (s && t && keep[*s] && keep[*t]) out.edges.push_back(e);
  }
  return out;
}

// Decisions followed by the reachability cascade, as a mask over g.
std::vector<bool> cascade(const S3Graph& g, const std::vector<bool>& keep,
                          const std::vector<std::size_t>& orphans) {
  S3Graph sub = select_nodes(g, keep);
  auto anchored = anchored_nodes(sub, orphans);
  std::vector<bool> out(g.nodes.size(), false);
  for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
    if (anchored[i]) out[*g.position(sub.nodes[i].id)] = true;
  }
  return out;
}

bool has_type(const S3Graph& g, const std::vector<bool>& mask, NodeType t) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (mask[i] && g.nodes[i].type == t) return true;
  }
  return false;
}

}  // namespace

S3Graph prune_graph(const S3Graph& g, const std::vector<Decision>& decisions) {
  if (decisions.size() != g.nodes.size()) {
    throw IntegrityError("prune_graph needs one decision per node");
  }
  auto root = g.position(g.root);
  if (!root) throw IntegrityError("graph root is missing");
  std::vector<bool> keep(g.nodes.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = decisions[i] == Decision::Keep;
  keep[*root] = true;
  const auto orphans = orphan_amr_nodes(g);
  auto alive = cascade(g, keep, orphans);

  // Restores an EDU node and the span nodes above it.
  auto restore_edu = [&](std::size_t pos) {
    std::size_t cur = g.nodes[pos].id;
    keep[pos] = true;
    for (bool moved = true; moved && cur != g.root;) {
      moved = false;
      for (const auto& e : g.edges) {
        if (e.origin == EdgeOrigin::Rst && e.dst == cur) {
          cur = e.src;
          keep[*g.position(cur)] = true;
          moved = true;
          break;
        }
      }
    }
  };

  if (!has_type(g, alive, NodeType::Edu)) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < g.nodes.size() && !pick; ++i) {
      if (g.nodes[i].type == NodeType::Edu && keep[i]) pick = i;
    }
    for (std::size_t i = 0; i < g.nodes.size() && !pick; ++i) {
      if (g.nodes[i].type == NodeType::Edu) pick = i;
    }
    if (!pick) throw IntegrityError("graph has no EDU node to keep");
    restore_edu(*pick);
    alive = cascade(g, keep, orphans);
  }

  if (!has_type(g, alive, NodeType::Word)) {
    // Prefer a word under a surviving EDU node; otherwise bring back the
    // first EDU node that still owns a word.
    std::optional<std::pair<std::size_t, std::size_t>> pick, fallback;
    for (const auto& e : g.edges) {
      if (e.origin != EdgeOrigin::RstAmr) continue;
      auto s = g.position(e.src), t = g.position(e.dst);
      if (!s || !t || g.nodes[*t].type != NodeType::Word) continue;
      auto& slot = alive[*s] ? pick : fallback;
      if (!slot || g.nodes[*t].id < g.nodes[slot->second].id) slot = std::pair{*s, *t};
    }
    if (!pick) pick = fallback;
    if (!pick) throw IntegrityError("no word node can be restored after pruning");
    if (!alive[pick->first]) restore_edu(pick->first);
    keep[pick->second] = true;
    alive = cascade(g, keep, orphans);
  }

  if (!alive[*root]) throw IntegrityError("pruning removed the root");
  return select_nodes(g, alive);
}

// ---- REINFORCE ----------------------------------------------------------------------

void RewardBaseline::update(double reward) {
  if (!std::isfinite(reward)) throw NumericError("reward is not finite");
  if (!initialized) {
    value = reward;
    initialized = true;
    return;
  }
  value = decay * value + (1.0 - decay) * reward;
}

namespace {

Tensor stack_states(const PruneTrajectory& traj, std::size_t width) {
  Tensor s = Tensor::matrix(traj.steps.size(), width);
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& st = traj.steps[i].state;
    if (st.size() != width) throw IntegrityError("trajectory state has the wrong width");
    std::copy(st.begin(), st.end(), s.row(i).begin());
  }
  return s;
}

// Accumulates weight * d(sum logprob)/dtheta.
void accumulate_logprob_grad(const PruneTrajectory& traj, const PrunePolicy& policy,
                             const ParamStore& p, double weight, ParamStore& g) {
  if (traj.steps.empty() || policy.action_std == 0.0 || weight == 0.0) return;
  PolicyCache cache;
  auto means = policy_means(policy, p, stack_states(traj, policy.input_dim), &cache);
  const double inv_var = 1.0 / (policy.action_std * policy.action_std);
  std::vector<double> dmean(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    dmean[i] = weight * (traj.steps[i].z - means[i]) * inv_var;
  }
  policy_means_backward(policy, p, cache, dmean, g);
}

}  // namespace

ParamStore logprob_gradient(const PruneTrajectory& traj, const PrunePolicy& policy,
                            const ParamStore& params) {
  ParamStore g = params.zeros_like("policy/");
  accumulate_logprob_grad(traj, policy, params, 1.0, g);
  return g;
}

double trajectory_logprob(const PruneTrajectory& traj, const PrunePolicy& policy,
                          const ParamStore& params) {
  if (traj.steps.empty()) return 0.0;
  auto means = policy_means(policy, params, stack_states(traj, policy.input_dim));
  double total = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    total += policy.log_density(traj.steps[i].z, means[i]);
  }
  return total;
}

ParamStore reinforce_update(const PruneTrajectory& traj, RewardBaseline& baseline,
                            const PrunePolicy& policy, const ParamStore& params) {
  if (!std::isfinite(traj.reward)) throw NumericError("trajectory reward is not finite");
  const double b = baseline.initialized ? baseline.value : traj.reward;
  ParamStore g = params.zeros_like("policy/");
  accumulate_logprob_grad(traj, policy, params, traj.reward - b, g);
  baseline.update(traj.reward);
  return g;
}

}  // namespace s3

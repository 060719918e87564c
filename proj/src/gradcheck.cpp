#include "s3/gradcheck.hpp"

#include <cmath>

#include "s3/decoder.hpp"
#include "s3/encoder.hpp"
#include "s3/model.hpp"
#include "s3/synth.hpp"

namespace s3 {

namespace {

Tensor random_like(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

double weighted_sum(const Tensor& x, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  return s;
}

void copy_prefix(ParamStore& dst, const ParamStore& src, const std::string& prefix) {
  for (const auto& [name, t] : src) {
    if (name.rfind(prefix, 0) == 0) dst.add(name, t);
  }
}

NodeReps reps_from(const ParamStore& p) {
  NodeReps r;
  r.R = p.at("input/R");
  const Tensor& l = p.at("input/labels");
  for (std::size_t i = 0; i < l.rows(); ++i) {
    auto row = l.row(i);
    r.edge_label_table.emplace_back(std::vector<std::size_t>{l.cols()},
                                    std::vector<double>(row.begin(), row.end()));
  }
  return r;
}

void labels_into(const std::vector<Tensor>& dlabels, Tensor& dst) {
  for (std::size_t i = 0; i < dlabels.size(); ++i) {
    std::copy(dlabels[i].data().begin(), dlabels[i].data().end(), dst.row(i).begin());
  }
}

struct Fixture {
  Sample sample;
  HeadlineModel model;
  AdjacencyView adj;
  Rng rng{0};
};

Fixture make_fixture(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_docs = 1;
  spec.edus_min = spec.edus_max = 3;
  spec.tokens_min = 3;
  spec.tokens_max = 4;
  spec.vocab_size = 12;
  spec.key_edu_rate = 0.5;
  spec.seed = seed;
  auto sd = generate_corpus(spec).front();
  Fixture f;
  f.sample = {sd.doc, build_graph(sd)};
  ModelConfig mc;
  mc.encoder.d_model = 8;
  mc.encoder.heads = 2;
  mc.policy.hidden = 16;
  mc.generation.max_len = 4;
  f.model = make_model(mc, {f.sample}, seed);
  f.adj = to_adjacency(f.sample.graph);
  f.rng = Rng(seed).split(0x5eed);
  return f;
}

SuiteResult gat_suite(Fixture& fx, double eps, bool dropout, std::uint64_t seed) {
  const auto& cfg = fx.model.config.encoder;
  ParamStore p;
  copy_prefix(p, fx.model.params, "gat/");
  p.add("input/R", random_like({fx.adj.n, cfg.d_model}, fx.rng));
  p.add("input/labels", random_like({fx.adj.labels.size(), cfg.d_model}, fx.rng));
  Tensor w = random_like({fx.adj.n, cfg.d_model}, fx.rng);
  auto forward = [&](const ParamStore& q, GatCache* cache) {
    Rng drop(seed ^ 0xd0u);
    return gat_forward(fx.adj, reps_from(q), q, cfg, cache, dropout ? &drop : nullptr);
  };
  GatCache cache;
  forward(p, &cache);
  ParamStore g = p.zeros_like();
  Tensor dR = Tensor::matrix(fx.adj.n, cfg.d_model);
  std::vector<Tensor> dlabels;
  gat_backward(w, fx.adj, cache, p, cfg, dR, dlabels, g);
  g.at("input/R") = dR;
  labels_into(dlabels, g.at("input/labels"));
  auto f = [&](const ParamStore& q) { return weighted_sum(forward(q, nullptr), w); };
  return {dropout ? "gat+dropout" : "gat", finite_diff_check(f, p, g, eps)};
}

SuiteResult encoder_suite(Fixture& fx, double eps) {
  const auto& m = fx.model;
  const auto& cfg = m.config.encoder;
  const auto& d = fx.sample.doc;
  const auto& graph = fx.sample.graph;
  ParamStore p;
  copy_prefix(p, m.params, "enc/");
  copy_prefix(p, m.params, "node/");
  copy_prefix(p, m.params, "gat/");
  Tensor w = random_like({fx.adj.n, cfg.d_model}, fx.rng);
  auto f = [&](const ParamStore& q) {
    TokenReps h = embed_document(d, m.tokens, q, cfg);
    NodeReps r = init_node_embeddings(graph, fx.adj, d, h, q, m.dummy_concepts, m.edge_labels);
    return weighted_sum(gat_forward(fx.adj, r, q, cfg), w);
  };
  EmbedCache ec;
  NodeInitCache nc;
  GatCache gc;
  TokenReps h = embed_document(d, m.tokens, p, cfg, &ec);
  NodeReps r = init_node_embeddings(graph, fx.adj, d, h, p, m.dummy_concepts, m.edge_labels, &nc);
  gat_forward(fx.adj, r, p, cfg, &gc);
  ParamStore g = p.zeros_like();
  Tensor dR = Tensor::matrix(r.R.rows(), r.R.cols());
  std::vector<Tensor> dlabels;
  gat_backward(w, fx.adj, gc, p, cfg, dR, dlabels, g);
  Tensor dH = Tensor::matrix(h.H.rows(), h.H.cols());
  init_node_embeddings_backward(dR, dlabels, nc, dH, g);
  embed_document_backward(dH, ec, p, g);
  return {"encoder", finite_diff_check(f, p, g, eps)};
}

std::vector<bool> word_mask(const S3Graph& g) {
  std::vector<bool> out;
  for (const auto& n : g.nodes) out.push_back(n.type == NodeType::Word);
  return out;
}

SuiteResult fusion_suite(Fixture& fx, double eps) {
  const std::size_t d = fx.model.config.encoder.d_model, t = 3;
  ParamStore p;
  copy_prefix(p, fx.model.params, "fuse/");
  p.add("input/Z", random_like({fx.adj.n, d}, fx.rng));
  p.add("input/O", random_like({t, d}, fx.rng));
  const auto mask = word_mask(fx.sample.graph);
  Tensor w = random_like({t, d}, fx.rng);
  auto inputs = [&](const ParamStore& q) { return FusionInputs{q.at("input/Z"), mask, q.at("input/O")}; };
  auto f = [&](const ParamStore& q) { return weighted_sum(fuse(inputs(q), q), w); };
  FusionCache cache;
  FusionInputs fi = inputs(p);
  fuse(fi, p, &cache);
  ParamStore g = p.zeros_like();
  fuse_backward(w, fi, cache, p, g.at("input/Z"), g.at("input/O"), g);
  return {"fusion", finite_diff_check(f, p, g, eps)};
}

SuiteResult decoder_suite(Fixture& fx, double eps) {
  const auto& m = fx.model;
  const std::size_t d = m.config.encoder.d_model;
  ParamStore p;
  copy_prefix(p, m.params, "dec/");
  copy_prefix(p, m.params, "fuse/");
  p.add("input/Z", random_like({fx.adj.n, d}, fx.rng));
  const auto mask = word_mask(fx.sample.graph);
  auto [in, out] = teacher_forcing_pair(reference_ids(m, fx.sample.doc), m.config.generation);
  auto f = [&](const ParamStore& q) {
    return ce_loss(decoder_logits(q.at("input/Z"), mask, in, q), out);
  };
  DecoderCache cache;
  Tensor logits = decoder_logits(p.at("input/Z"), mask, in, p, &cache);
  Tensor dlogits;
  ce_loss(logits, out, m.config.generation.pad, &dlogits);
  ParamStore g = p.zeros_like();
  decoder_backward(dlogits, cache, p, g.at("input/Z"), g);
  return {"decoder-ce", finite_diff_check(f, p, g, eps)};
}

SuiteResult policy_suite(Fixture& fx, double eps) {
  auto& m = fx.model;
  // A fresh policy has a zero output layer; give it weights so every
  // parameter carries gradient.
  Tensor& w3 = m.params.at("policy/w3");
  const double scale = 1.0 / std::sqrt(static_cast<double>(m.config.policy.hidden));
  for (auto& v : w3.data()) v = fx.rng.uniform(-scale, scale);
  Rng sample = fx.rng.split(1);
  Rollout ro = prune_rollout(m, fx.sample.doc, fx.sample.graph, &sample);
  ParamStore p;
  copy_prefix(p, m.params, "policy/");
  const auto& policy = m.config.policy;
  auto f = [&](const ParamStore& q) { return trajectory_logprob(ro.trajectory, policy, q); };
  ParamStore g = logprob_gradient(ro.trajectory, policy, p);
  return {"policy-logprob", finite_diff_check(f, p, g, eps)};
}

SuiteResult end_to_end_suite(Fixture& fx, double eps) {
  HeadlineModel m = fx.model;
  const auto& s = fx.sample;
  ParamStore g = m.params.zeros_like();
  headline_loss(m, s.doc, s.graph, nullptr, &g);
  auto f = [&](const ParamStore& q) {
    HeadlineModel probe = m;
    probe.params = q;
    return headline_loss(probe, s.doc, s.graph).loss;
  };
  auto not_policy = [](const std::string& name) { return name.rfind("policy/", 0) != 0; };
  return {"end-to-end", finite_diff_check(f, m.params, g, eps, not_policy)};
}

}  // namespace

std::vector<SuiteResult> run_gradcheck_suites(std::uint64_t seed, double epsilon) {
  Fixture fx = make_fixture(seed);
  std::vector<SuiteResult> out;
  out.push_back(gat_suite(fx, epsilon, false, seed));
  out.push_back(gat_suite(fx, epsilon, true, seed));
  out.push_back(encoder_suite(fx, epsilon));
  out.push_back(fusion_suite(fx, epsilon));
  out.push_back(decoder_suite(fx, epsilon));
  out.push_back(end_to_end_suite(fx, epsilon));
  out.push_back(policy_suite(fx, epsilon));
  return out;
}

}  // namespace s3

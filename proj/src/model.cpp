#include "s3/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "s3/error.hpp"
#include "s3/metrics.hpp"

namespace s3 {

using json = nlohmann::json;

void ModelConfig::validate() const {
  encoder.validate();
  policy.validate();
  thresholds.validate();
  generation.validate();
  if (policy.input_dim != encoder.d_model) {
    throw ValidationError("policy input_dim must equal d_model");
  }
  if (prune_rounds == 0) throw ValidationError("prune_rounds must be at least 1");
  if (!(initial_action > 0.0 && initial_action < 1.0)) {
    throw ValidationError("initial_action must lie in (0, 1)");
  }
}

void build_vocabs(const std::vector<Sample>& samples, Vocab& tokens, Vocab& dummies,
                  Vocab& edges) {
  edges.add(std::string(kSelfLabel));
  for (const auto& s : samples) {
    for (const auto& edu : s.doc.edus) {
      for (const auto& t : edu.tokens) tokens.add(t);
    }
    for (const auto& t : s.doc.headline_tokens) tokens.add(t);
    for (const auto& n : s.graph.nodes) {
      if (n.type == NodeType::Dummy) dummies.add(n.label);
    }
    for (const auto& e : s.graph.edges) {
      edges.add(e.label);
      edges.add(std::string(kReversePrefix) + e.label);
    }
  }
}

HeadlineModel make_model(ModelConfig config, const std::vector<Sample>& samples,
                         std::uint64_t seed) {
  HeadlineModel m;
  build_vocabs(samples, m.tokens, m.dummy_concepts, m.edge_labels);
  config.encoder.vocab_size = m.tokens.size();
  config.policy.input_dim = config.encoder.d_model;
  config.validate();
  m.config = config;
  m.params = ParamStore(seed);
  Rng root(seed);
  Rng enc = root.split(1), dec = root.split(2), pol = root.split(3);
  init_encoder_params(m.params, config.encoder, m.dummy_concepts.size(), m.edge_labels.size(),
                      enc);
  init_decoder_params(m.params, config.encoder.d_model, m.tokens.size(), dec);
  config.policy.init_params(m.params, pol);
  const double a0 = config.initial_action;
  m.params.at("policy/b3")[0] = std::log(a0 / (1.0 - a0));
  return m;
}

std::vector<std::size_t> reference_ids(const HeadlineModel& m, const Document& d) {
  std::vector<std::size_t> ids;
  ids.reserve(d.headline_tokens.size());
  for (const auto& t : d.headline_tokens) ids.push_back(m.tokens.id(t));
  return ids;
}

namespace {

// Forward state of one encoder pass, kept for the backward pass.
struct EncodePass {
  TokenReps h;
  EmbedCache embed;
  AdjacencyView adj;
  NodeReps reps;
  NodeInitCache init;
  GatCache gat;
  Memory mem;
};

void run_graph(const HeadlineModel& m, const Document& d, const S3Graph& g, EncodePass& p,
               Rng* dropout_rng) {
  const auto& P = m.params;
  if (!m.config.use_graph) {
    const std::size_t dm = m.config.encoder.d_model;
    p.mem.Z = Tensor::matrix(p.h.token_map.size(), dm);
    for (std::size_t i = 0; i < p.h.token_map.size(); ++i) {
      auto src = p.h.H.row(p.h.token_map[i]);
      std::copy(src.begin(), src.end(), p.mem.Z.row(i).begin());
    }
    p.mem.is_word.assign(p.h.token_map.size(), true);
    return;
  }
  p.adj = to_adjacency(g);
  p.reps = init_node_embeddings(g, p.adj, d, p.h, P, m.dummy_concepts, m.edge_labels, &p.init);
  p.mem.Z = gat_forward(p.adj, p.reps, P, m.config.encoder, &p.gat, dropout_rng);
  p.mem.is_word.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    p.mem.is_word[i] = g.nodes[i].type == NodeType::Word;
  }
}

void backward_graph(const HeadlineModel& m, const EncodePass& p, const Tensor& dZ,
                    ParamStore& grads) {
  const auto& P = m.params;
  Tensor dH = Tensor::matrix(p.h.H.rows(), p.h.H.cols());
  if (!m.config.use_graph) {
    for (std::size_t i = 0; i < p.h.token_map.size(); ++i) {
      auto src = dZ.row(i);
      auto dst = dH.row(p.h.token_map[i]);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    }
  } else {
    Tensor dR = Tensor::matrix(p.reps.R.rows(), p.reps.R.cols());
    std::vector<Tensor> dlabels;
    gat_backward(dZ, p.adj, p.gat, P, m.config.encoder, dR, dlabels, grads);
    init_node_embeddings_backward(dR, dlabels, p.init, dH, grads);
  }
  embed_document_backward(dH, p.embed, P, grads);
}

std::vector<std::string> to_strings(const HeadlineModel& m, const std::vector<std::size_t>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(m.tokens.token(id));
  return out;
}

}  // namespace

Memory encode(const HeadlineModel& m, const Document& d, const S3Graph& g) {
  EncodePass p;
  p.h = embed_document(d, m.tokens, m.params, m.config.encoder, &p.embed);
  run_graph(m, d, g, p, nullptr);
  return std::move(p.mem);
}

LossResult headline_loss(const HeadlineModel& m, const Document& d, const S3Graph& g,
                         Rng* dropout_rng, ParamStore* grads) {
  if (d.headline_tokens.empty()) {
    throw ValidationError("document " + d.id + " has an empty headline");
  }
  EncodePass p;
  p.h = embed_document(d, m.tokens, m.params, m.config.encoder, &p.embed);
  run_graph(m, d, g, p, dropout_rng);
  auto [in, out] = teacher_forcing_pair(reference_ids(m, d), m.config.generation);
  DecoderCache dc;
  Tensor logits = decoder_logits(p.mem.Z, p.mem.is_word, in, m.params, &dc);
  Tensor dlogits;
  LossResult r;
  r.loss = ce_loss(logits, out, m.config.generation.pad, grads ? &dlogits : nullptr);
  r.tokens = out.size();
  if (!grads) return r;
  Tensor dZ = Tensor::matrix(p.mem.Z.rows(), p.mem.Z.cols());
  decoder_backward(dlogits, dc, m.params, dZ, *grads);
  backward_graph(m, p, dZ, *grads);
  return r;
}

Rollout prune_rollout(const HeadlineModel& m, const Document& d, const S3Graph& g, Rng* rng) {
  if (!m.config.use_graph) throw ValidationError("pruning needs the graph model");
  Rollout out;
  out.pruned = g;
  EncodePass p;
  p.h = embed_document(d, m.tokens, m.params, m.config.encoder, &p.embed);
  for (std::size_t round = 0; round < m.config.prune_rounds; ++round) {
    const S3Graph& cur = out.pruned;
    run_graph(m, d, cur, p, nullptr);
    auto acts = policy_actions(p.mem.Z, m.config.policy, m.params, rng);
    std::vector<double> a(acts.size());
    for (std::size_t i = 0; i < acts.size(); ++i) a[i] = acts[i].action;
    auto decisions = apply_thresholds(a, cur, m.config.thresholds);
    S3Graph next = prune_graph(cur, decisions);
    for (std::size_t i = 0; i < cur.nodes.size(); ++i) {
      PruneStep st;
      st.node_id = cur.nodes[i].id;
      st.round = round;
      auto row = p.mem.Z.row(i);
      st.state.assign(row.begin(), row.end());
      st.z = acts[i].z;
      st.action = acts[i].action;
      st.kept = next.position(st.node_id).has_value();
      out.trajectory.steps.push_back(std::move(st));
    }
    out.trajectory.rounds = round + 1;
    out.pruned = std::move(next);
  }
  return out;
}

Reward compute_reward(const HeadlineModel& m, const Document& d, const S3Graph& pruned,
                      const S3Graph& original) {
  Reward r;
  r.confidence = -headline_loss(m, d, pruned).loss;
  GenerationConfig greedy = m.config.generation;
  greedy.beam = 1;
  const Tokens ref = fold_case(d.headline_tokens);
  auto rouge_of = [&](const S3Graph& g) {
    Memory mem = encode(m, d, g);
    auto ids = greedy_search(mem.Z, mem.is_word, m.params, greedy).tokens;
    return rouge_l(fold_case(to_strings(m, ids)), ref).f1;
  };
  r.rouge = pruned == original ? 0.0 : rouge_of(pruned) - rouge_of(original);
  r.total = r.confidence + r.rouge;
  return r;
}

S3Graph inference_graph(const HeadlineModel& m, const Document& d, const S3Graph& g) {
  if (!m.config.use_graph || !m.config.prune_at_inference) return g;
  return prune_rollout(m, d, g, nullptr).pruned;
}

std::vector<std::string> generate_headline(const HeadlineModel& m, const Document& d,
                                           const S3Graph& g, const GenerationConfig& cfg) {
  Memory mem = encode(m, d, inference_graph(m, d, g));
  return to_strings(m, generate(mem.Z, mem.is_word, m.params, cfg));
}

// ---- model files --------------------------------------------------------------------

void save_model_meta(const std::string& path, const HeadlineModel& m) {
  const auto& c = m.config;
  json j;
  j["d_model"] = c.encoder.d_model;
  j["heads"] = c.encoder.heads;
  j["dropout"] = c.encoder.dropout;
  j["gat_layers"] = c.encoder.gat_layers;
  j["max_seq_len"] = c.encoder.max_seq_len;
  j["policy_hidden"] = c.policy.hidden;
  j["action_std"] = c.policy.action_std;
  j["p_A"] = c.thresholds.p_A;
  j["p_B"] = c.thresholds.p_B;
  j["p_C"] = c.thresholds.p_C;
  j["beam"] = c.generation.beam;
  j["max_len"] = c.generation.max_len;
  j["prune_rounds"] = c.prune_rounds;
  j["use_graph"] = c.use_graph;
  j["prune_at_inference"] = c.prune_at_inference;
  j["initial_action"] = c.initial_action;
  j["tokens"] = m.tokens.tokens();
  j["dummy_concepts"] = m.dummy_concepts.tokens();
  j["edge_labels"] = m.edge_labels.tokens();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(1) << '\n';
}

namespace {

Vocab vocab_from(const json& arr) {
  auto list = arr.get<std::vector<std::string>>();
  if (list.empty()) throw ValidationError("vocabulary is empty");
  Vocab v(list.front());
  for (std::size_t i = 1; i < list.size(); ++i) v.add(list[i]);
  return v;
}

}  // namespace

HeadlineModel load_model(const std::string& meta_path, const std::string& ckpt_path) {
  std::ifstream in(meta_path);
  if (!in) throw ValidationError("cannot open " + meta_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(meta_path + ": " + e.what(), 0);
  }
  HeadlineModel m;
  try {
    auto& c = m.config;
    c.encoder.d_model = j.at("d_model").get<std::size_t>();
    c.encoder.heads = j.at("heads").get<std::size_t>();
    c.encoder.dropout = j.at("dropout").get<double>();
    c.encoder.gat_layers = j.at("gat_layers").get<std::size_t>();
    c.encoder.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.policy.hidden = j.at("policy_hidden").get<std::size_t>();
    c.policy.action_std = j.at("action_std").get<double>();
    c.thresholds.p_A = j.at("p_A").get<double>();
    c.thresholds.p_B = j.at("p_B").get<double>();
    c.thresholds.p_C = j.at("p_C").get<double>();
    c.generation.beam = j.at("beam").get<std::size_t>();
    c.generation.max_len = j.at("max_len").get<std::size_t>();
    c.prune_rounds = j.at("prune_rounds").get<std::size_t>();
    c.use_graph = j.at("use_graph").get<bool>();
    c.prune_at_inference = j.at("prune_at_inference").get<bool>();
    c.initial_action = j.at("initial_action").get<double>();
    m.tokens = vocab_from(j.at("tokens"));
    m.dummy_concepts = vocab_from(j.at("dummy_concepts"));
    m.edge_labels = vocab_from(j.at("edge_labels"));
    c.encoder.vocab_size = m.tokens.size();
    c.policy.input_dim = c.encoder.d_model;
  } catch (const json::exception& e) {
    throw ValidationError(meta_path + ": " + e.what());
  }
  m.config.validate();
  m.params = load_checkpoint(ckpt_path);
  const std::size_t d = m.config.encoder.d_model;
  if (!m.params.contains("dec/out_w") || m.params.at("dec/out_w").cols() != m.tokens.size() ||
      m.params.at("enc/tok_emb").cols() != d) {
    throw ValidationError(ckpt_path + ": checkpoint does not match " + meta_path);
  }
  return m;
}

}  // namespace s3

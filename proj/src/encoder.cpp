#include "s3/encoder.hpp"

#include <cmath>
#include <string>

#include "s3/error.hpp"

namespace s3 {

// ---- Vocab ------------------------------------------------------------------

std::size_t Vocab::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

Vocab make_token_vocab() {
  Vocab v("<unk>");
  v.add("<pad>");
  v.add("<bos>");
  v.add("<eos>");
  v.add("[CLS]");
  v.add("[SEP]");
  return v;
}

// ---- config -------------------------------------------------------------------

void EncoderConfig::validate() const {
  if (d_model == 0) throw ValidationError("d_model must be positive");
  if (heads == 0 || d_model % heads != 0) {
    throw ValidationError("d_model must be divisible by the head count");
  }
  if (vocab_size == 0) throw ValidationError("vocab_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must lie in [0, 1)");
  if (gat_layers == 0) throw ValidationError("gat_layers must be positive");
  if (max_seq_len < 2) throw ValidationError("max_seq_len too small");
}

namespace {

std::string gat_name(std::size_t layer, const char* kind, std::size_t head) {
  return "gat/" + std::to_string(layer) + "/" + kind + std::to_string(head);
}

}  // namespace

void init_encoder_params(ParamStore& p, const EncoderConfig& cfg, std::size_t dummy_vocab,
                         std::size_t edge_vocab, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model, f = cfg.d_ff();
  // Embedding tables have no fan-in; they draw from [-1, 1].
  p.add_uniform("enc/tok_emb", {cfg.vocab_size, d}, 1, rng);
  p.add_uniform("enc/wq", {d, d}, d, rng);
  p.add_uniform("enc/wk", {d, d}, d, rng);
  p.add_uniform("enc/wv", {d, d}, d, rng);
  p.add_uniform("enc/wo", {d, d}, d, rng);
  p.add_uniform("enc/ff_w1", {d, f}, d, rng);
  p.add_uniform("enc/ff_b1", {f}, d, rng);
  p.add_uniform("enc/ff_w2", {f, d}, f, rng);
  p.add_uniform("enc/ff_b2", {d}, f, rng);
  p.add_uniform("node/dummy_emb", {std::max<std::size_t>(dummy_vocab, 1), d}, 1, rng);
  p.add_uniform("node/edge_emb", {std::max<std::size_t>(edge_vocab, 1), d}, 1, rng);
  for (std::size_t l = 0; l < cfg.gat_layers; ++l) {
    for (std::size_t k = 0; k < cfg.heads; ++k) {
      p.add_uniform(gat_name(l, "w", k), {d, d}, d, rng);
      p.add_uniform(gat_name(l, "a", k), {d}, d, rng);
    }
  }
}

// ---- token encoder ---------------------------------------------------------

TokenReps embed_document(const Document& d, const Vocab& vocab, const ParamStore& p,
                         const EncoderConfig& cfg, EmbedCache* cache) {
  std::vector<std::size_t> ids{SpecialTokens::kCls};
  TokenReps out;
  for (const auto& edu : d.edus) {
    for (const auto& tok : edu.tokens) {
      out.token_map.push_back(ids.size());
      ids.push_back(vocab.id(tok));
    }
    ids.push_back(SpecialTokens::kSep);
  }
  if (ids.size() > cfg.max_seq_len) {
    throw ValidationError("document " + d.id + " needs " + std::to_string(ids.size()) +
                          " positions but max_seq_len is " + std::to_string(cfg.max_seq_len));
  }
  const std::size_t n = ids.size(), dm = cfg.d_model;
  const Tensor& emb = p.at("enc/tok_emb");
  Tensor e0 = nn::sinusoidal_positions(n, dm);
  for (std::size_t r = 0; r < n; ++r) {
    if (ids[r] >= emb.rows()) throw IntegrityError("token id outside the embedding table");
    auto src = emb.row(ids[r]);
    auto dst = e0.row(r);
    for (std::size_t c = 0; c < dm; ++c) dst[c] += src[c];
  }
  EmbedCache local;
  EmbedCache& c = cache ? *cache : local;
  c.ids = ids;
  Tensor a = nn::attention(e0, e0, p.at("enc/wq"), p.at("enc/wk"), p.at("enc/wv"), false, c.attn);
  Tensor h1 = e0;
  nn::matmul_acc(h1, a, p.at("enc/wo"));
  out.H = nn::ffn_residual(h1, p.at("enc/ff_w1"), p.at("enc/ff_b1"), p.at("enc/ff_w2"),
                           p.at("enc/ff_b2"), c.ffn);
  c.e0 = std::move(e0);
  c.attn_out = std::move(a);
  c.h1 = std::move(h1);
  return out;
}

void embed_document_backward(const Tensor& dH, const EmbedCache& c, const ParamStore& p,
                             ParamStore& g) {
  Tensor dh1 = Tensor::matrix(c.h1.rows(), c.h1.cols());
  nn::ffn_residual_backward(dH, c.h1, c.ffn, p.at("enc/ff_w1"), p.at("enc/ff_w2"), dh1,
                            g.at("enc/ff_w1"), g.at("enc/ff_b1"), g.at("enc/ff_w2"),
                            g.at("enc/ff_b2"));
  Tensor de0 = dh1;
  nn::matmul_tn_acc(g.at("enc/wo"), c.attn_out, dh1);
  Tensor da = nn::matmul_nt(dh1, p.at("enc/wo"));
  nn::attention_backward(da, c.attn, c.e0, c.e0, p.at("enc/wq"), p.at("enc/wk"),
                         p.at("enc/wv"), de0, de0, g.at("enc/wq"), g.at("enc/wk"),
                         g.at("enc/wv"));
  Tensor& demb = g.at("enc/tok_emb");
  for (std::size_t r = 0; r < c.ids.size(); ++r) {
    auto src = de0.row(r);
    auto dst = demb.row(c.ids[r]);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

// ---- node initialization ---------------------------------------------------

NodeReps init_node_embeddings(const S3Graph& g, const AdjacencyView& adj, const Document& d,
                              const TokenReps& h, const ParamStore& p,
                              const Vocab& dummy_concepts, const Vocab& edge_labels,
                              NodeInitCache* cache) {
  const std::size_t n = g.nodes.size(), dm = h.H.cols();
  if (adj.n != n) throw IntegrityError("adjacency does not match the graph");
  const auto offsets = d.token_offsets();
  NodeInitCache local;
  NodeInitCache& c = cache ? *cache : local;
  c.pooled_rows.assign(n, {});
  c.dummy_ids.assign(n, -1);
  c.label_ids.clear();

  auto token_row = [&](std::size_t global) {
    if (global >= h.token_map.size()) {
      throw IntegrityError("graph " + g.doc_id + " references token " + std::to_string(global) +
                           " outside the document");
    }
    return h.token_map[global];
  };
  auto edu_rows = [&](std::size_t e, std::vector<std::size_t>& rows) {
    if (e >= d.edus.size()) throw IntegrityError("graph references a missing EDU");
    for (std::size_t k = 0; k < d.edus[e].tokens.size(); ++k) {
      rows.push_back(token_row(offsets[e] + k));
    }
  };

  NodeReps reps;
  reps.R = Tensor::matrix(n, dm);
  const Tensor& dummy_emb = p.at("node/dummy_emb");
  for (std::size_t i = 0; i < n; ++i) {
    const S3Node& node = g.nodes[i];
    auto& rows = c.pooled_rows[i];
    switch (node.type) {
      case NodeType::Word:
        if (!node.token) throw IntegrityError("word node without a token position");
        rows.push_back(token_row(*node.token));
        break;
      case NodeType::Edu:
        edu_rows(*node.edu, rows);
        break;
      case NodeType::TextSpan:
        if (!node.span) throw IntegrityError("text-span node without an EDU range");
        for (std::size_t e = node.span->first; e <= node.span->second; ++e) edu_rows(e, rows);
        break;
      case NodeType::Dummy:
        c.dummy_ids[i] = static_cast<long>(dummy_concepts.id(node.label));
        break;
    }
    auto out = reps.R.row(i);
    if (node.type == NodeType::Dummy) {
      auto src = dummy_emb.row(static_cast<std::size_t>(c.dummy_ids[i]));
      std::copy(src.begin(), src.end(), out.begin());
      continue;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto r : rows) {
      auto src = h.H.row(r);
      for (std::size_t k = 0; k < dm; ++k) out[k] += src[k] * inv;
    }
  }
  const Tensor& edge_emb = p.at("node/edge_emb");
  for (const auto& label : adj.labels) {
    std::size_t id = edge_labels.id(label);
    c.label_ids.push_back(id);
    auto row = edge_emb.row(id);
    reps.edge_label_table.emplace_back(std::vector<std::size_t>{dm},
                                       std::vector<double>(row.begin(), row.end()));
  }
  return reps;
}

void init_node_embeddings_backward(const Tensor& dR, const std::vector<Tensor>& dlabels,
                                   const NodeInitCache& c, Tensor& dH, ParamStore& g) {
  Tensor& ddummy = g.at("node/dummy_emb");
  for (std::size_t i = 0; i < c.pooled_rows.size(); ++i) {
    auto src = dR.row(i);
    if (c.dummy_ids[i] >= 0) {
      auto dst = ddummy.row(static_cast<std::size_t>(c.dummy_ids[i]));
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
      continue;
    }
    const double inv = 1.0 / static_cast<double>(c.pooled_rows[i].size());
    for (auto r : c.pooled_rows[i]) {
      auto dst = dH.row(r);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k] * inv;
    }
  }
  Tensor& dedge = g.at("node/edge_emb");
  for (std::size_t l = 0; l < dlabels.size(); ++l) {
    auto dst = dedge.row(c.label_ids[l]);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += dlabels[l][k];
  }
}

// ---- GAT ------------------------------------------------------------------------

Tensor gat_forward(const AdjacencyView& adj, const NodeReps& reps, const ParamStore& p,
                   const EncoderConfig& cfg, GatCache* cache, Rng* dropout_rng) {
  const std::size_t n = adj.n, d = cfg.d_model, K = cfg.heads;
  if (reps.R.rows() != n || reps.R.cols() != d) {
    throw IntegrityError("node representations do not match the adjacency");
  }
  if (reps.edge_label_table.size() != adj.labels.size()) {
    throw IntegrityError("edge label table does not match the adjacency");
  }
  const double keep = 1.0 - cfg.dropout;
  const bool drop = dropout_rng != nullptr && cfg.dropout > 0.0;
  GatCache local;
  GatCache& c = cache ? *cache : local;
  c.layers.assign(cfg.gat_layers, {});

  Tensor current = reps.R;
  for (std::size_t l = 0; l < cfg.gat_layers; ++l) {
    GatLayerCache& lc = c.layers[l];
    lc.input = std::move(current);
    if (drop) {
      lc.input_mask.resize(lc.input.size());
      for (std::size_t i = 0; i < lc.input.size(); ++i) {
        lc.input_mask[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        lc.input[i] *= lc.input_mask[i];
      }
    }
    lc.row_start.assign(1, 0);
    lc.edge_dst.clear();
    lc.edge_label.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (adj.neighbors[i].empty()) throw IntegrityError("node without neighbors");
      for (auto [j, label] : adj.neighbors[i]) {
        lc.edge_dst.push_back(j);
        lc.edge_label.push_back(label);
      }
      lc.row_start.push_back(lc.edge_dst.size());
    }
    const std::size_t E = lc.edge_dst.size();
    lc.x = Tensor::matrix(E, d);
    lc.sx = Tensor::matrix(E, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = lc.input.row(i);
      for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
        auto rj = lc.input.row(lc.edge_dst[e]);
        const Tensor& m = reps.edge_label_table[static_cast<std::size_t>(lc.edge_label[e])];
        auto x = lc.x.row(e);
        auto sx = lc.sx.row(e);
        for (std::size_t k = 0; k < d; ++k) {
          x[k] = ri[k] + rj[k] + m[k];
          sx[k] = sigmoid(x[k]);
        }
      }
    }
    lc.beta = Tensor::matrix(K, E);
    for (std::size_t h = 0; h < K; ++h) {
      const Tensor& a = p.at(gat_name(l, "a", h));
      for (std::size_t i = 0; i < n; ++i) {
        double mx = -INFINITY;
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          double s = 0.0;
          auto sx = lc.sx.row(e);
          for (std::size_t k = 0; k < d; ++k) s += a[k] * sx[k];
          lc.beta(h, e) = s;
          mx = std::max(mx, s);
        }
        double sum = 0.0;
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          lc.beta(h, e) = std::exp(lc.beta(h, e) - mx);
          sum += lc.beta(h, e);
        }
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) lc.beta(h, e) /= sum;
      }
    }
    lc.beta_used = lc.beta;
    if (drop) {
      for (auto& b : lc.beta_used.data()) b *= dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    }
    lc.agg.assign(K, Tensor::matrix(n, d));
    Tensor pre = Tensor::matrix(n, d);
    for (std::size_t h = 0; h < K; ++h) {
      Tensor& agg = lc.agg[h];
      for (std::size_t i = 0; i < n; ++i) {
        auto out = agg.row(i);
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          double b = lc.beta_used(h, e);
          auto x = lc.x.row(e);
          for (std::size_t k = 0; k < d; ++k) out[k] += b * x[k];
        }
      }
      nn::matmul_acc(pre, agg, p.at(gat_name(l, "w", h)));
    }
    const double invK = 1.0 / static_cast<double>(K);
    lc.u = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < pre.size(); ++i) lc.u[i] = sigmoid(pre[i] * invK);
    current = lc.u;
  }
  return current;
}

void gat_backward(const Tensor& du_out, const AdjacencyView& adj, const GatCache& c,
                  const ParamStore& p, const EncoderConfig& cfg, Tensor& dR,
                  std::vector<Tensor>& dlabels, ParamStore& g) {
  const std::size_t n = adj.n, d = cfg.d_model, K = cfg.heads;
  const double invK = 1.0 / static_cast<double>(K);
  if (dlabels.size() != adj.labels.size()) {
    dlabels.assign(adj.labels.size(), Tensor::vector(d));
  }
  Tensor du = du_out;
  for (std::size_t li = cfg.gat_layers; li-- > 0;) {
    const GatLayerCache& lc = c.layers[li];
    const std::size_t E = lc.edge_dst.size();
    Tensor dpre = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      double u = lc.u[i];
      dpre[i] = du[i] * u * (1.0 - u) * invK;
    }
    Tensor dx = Tensor::matrix(E, d);
    Tensor dinput = Tensor::matrix(n, d);
    for (std::size_t h = 0; h < K; ++h) {
      const Tensor& w = p.at(gat_name(li, "w", h));
      const Tensor& a = p.at(gat_name(li, "a", h));
      nn::matmul_tn_acc(g.at(gat_name(li, "w", h)), lc.agg[h], dpre);
      Tensor dagg = nn::matmul_nt(dpre, w);
      Tensor& da = g.at(gat_name(li, "a", h));
      std::vector<double> dbeta(E, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto dg = dagg.row(i);
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          auto x = lc.x.row(e);
          auto dxe = dx.row(e);
          double bu = lc.beta_used(h, e);
          double dot = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            dot += dg[k] * x[k];
            dxe[k] += bu * dg[k];
          }
          double b = lc.beta(h, e);
          // beta_used = beta * mask; recover the mask scale from the ratio.
          dbeta[e] = b > 0.0 ? dot * (bu / b) : 0.0;
        }
        double s = 0.0;
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          s += lc.beta(h, e) * dbeta[e];
        }
        for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
          double dscore = lc.beta(h, e) * (dbeta[e] - s);
          if (dscore == 0.0) continue;
          auto sx = lc.sx.row(e);
          auto dxe = dx.row(e);
          for (std::size_t k = 0; k < d; ++k) {
            da[k] += dscore * sx[k];
            dxe[k] += dscore * a[k] * sx[k] * (1.0 - sx[k]);
          }
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto di = dinput.row(i);
      for (std::size_t e = lc.row_start[i]; e < lc.row_start[i + 1]; ++e) {
        auto dxe = dx.row(e);
        auto dj = dinput.row(lc.edge_dst[e]);
        auto& dm = dlabels[static_cast<std::size_t>(lc.edge_label[e])];
        for (std::size_t k = 0; k < d; ++k) {
          di[k] += dxe[k];
          dj[k] += dxe[k];
          dm[k] += dxe[k];
        }
      }
    }
    if (!lc.input_mask.empty()) {
      for (std::size_t i = 0; i < dinput.size(); ++i) dinput[i] *= lc.input_mask[i];
    }
    du = std::move(dinput);
  }
  nn::add_inplace(dR, du);
}

}  // namespace s3

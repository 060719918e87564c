#include "s3/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "s3/error.hpp"

namespace s3 {

void GenerationConfig::validate() const {
  if (beam == 0) throw ValidationError("beam must be at least 1");
  if (max_len == 0) throw ValidationError("max_len must be positive");
}

Tensor FusionInputs::z_bar() const {
  std::size_t rows = static_cast<std::size_t>(std::count(is_word.begin(), is_word.end(), true));
  if (rows == 0) throw ValidationError("fusion needs at least one word node");
  Tensor out = Tensor::matrix(rows, Z.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < is_word.size(); ++i) {
    if (!is_word[i]) continue;
    auto src = Z.row(i);
    std::copy(src.begin(), src.end(), out.row(r++).begin());
  }
  return out;
}

// ---- fusion -------------------------------------------------------------------

Tensor fuse(const FusionInputs& fi, const ParamStore& p, FusionCache* cache) {
  const std::size_t n = fi.Z.rows();
  if (fi.is_word.size() != n) throw IntegrityError("fusion word mask does not match Z");
  if (std::find(fi.is_word.begin(), fi.is_word.end(), true) == fi.is_word.end()) {
    throw ValidationError("fusion needs at least one word node");
  }
  if (fi.O.cols() != fi.Z.cols()) throw IntegrityError("fusion width mismatch");
  FusionCache local;
  FusionCache& c = cache ? *cache : local;
  const Tensor& wq = p.at("fuse/wq");
  const Tensor& wk = p.at("fuse/wk");
  const Tensor& wv = p.at("fuse/wv");
  c.q = nn::matmul(fi.O, wq);
  c.k = nn::matmul(fi.Z, wk);
  c.v = nn::matmul(fi.Z, wv);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fi.is_word[i]) continue;
    auto src = fi.Z.row(i);
    std::copy(src.begin(), src.end(), c.v.row(i).begin());
  }
  Tensor scores = nn::matmul_nt(c.q, c.k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(fi.Z.cols()));
  for (auto& s : scores.data()) s *= scale;
  c.probs = nn::softmax_rows(scores, false);
  return nn::matmul(c.probs, c.v);
}

void fuse_backward(const Tensor& dC, const FusionInputs& fi, const FusionCache& c,
                   const ParamStore& p, Tensor& dZ, Tensor& dO, ParamStore& g) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fi.Z.cols()));
  Tensor dprobs = nn::matmul_nt(dC, c.v);
  Tensor dv = Tensor::matrix(c.v.rows(), c.v.cols());
  nn::matmul_tn_acc(dv, c.probs, dC);
  Tensor dscores = nn::softmax_rows_backward(c.probs, dprobs);
  for (auto& s : dscores.data()) s *= scale;
  Tensor dq = nn::matmul(dscores, c.k);
  Tensor dk = Tensor::matrix(c.k.rows(), c.k.cols());
  nn::matmul_tn_acc(dk, dscores, c.q);
  nn::matmul_tn_acc(g.at("fuse/wq"), fi.O, dq);
  nn::matmul_nt_acc(dO, dq, p.at("fuse/wq"));
  nn::matmul_tn_acc(g.at("fuse/wk"), fi.Z, dk);
  nn::matmul_nt_acc(dZ, dk, p.at("fuse/wk"));

  // Word rows pass through; the rest went through Wv.
  Tensor dv_proj = dv;
  for (std::size_t i = 0; i < fi.is_word.size(); ++i) {
    auto src = dv.row(i);
    if (fi.is_word[i]) {
      auto dst = dZ.row(i);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
      auto zero = dv_proj.row(i);
      std::fill(zero.begin(), zero.end(), 0.0);
    }
  }
  nn::matmul_tn_acc(g.at("fuse/wv"), fi.Z, dv_proj);
  nn::matmul_nt_acc(dZ, dv_proj, p.at("fuse/wv"));
}

// ---- decoder ------------------------------------------------------------------

void init_decoder_params(ParamStore& p, std::size_t d, std::size_t vocab, Rng& rng) {
  const std::size_t f = 2 * d;
  p.add_uniform("dec/tok_emb", {vocab, d}, 1, rng);
  p.add_uniform("dec/wq", {d, d}, d, rng);
  p.add_uniform("dec/wk", {d, d}, d, rng);
  p.add_uniform("dec/wv", {d, d}, d, rng);
  p.add_uniform("dec/wo", {d, d}, d, rng);
  p.add_uniform("fuse/wq", {d, d}, d, rng);
  p.add_uniform("fuse/wk", {d, d}, d, rng);
  p.add_uniform("fuse/wv", {d, d}, d, rng);
  p.add_uniform("dec/wc", {d, d}, d, rng);
  p.add_uniform("dec/ff_w1", {d, f}, d, rng);
  p.add_uniform("dec/ff_b1", {f}, d, rng);
  p.add_uniform("dec/ff_w2", {f, d}, f, rng);
  p.add_uniform("dec/ff_b2", {d}, f, rng);
  p.add_uniform("dec/out_w", {d, vocab}, d, rng);
  p.add_uniform("dec/out_b", {vocab}, d, rng);
}

Tensor decoder_logits(const Tensor& Z, const std::vector<bool>& is_word,
                      const std::vector<std::size_t>& ids, const ParamStore& p,
                      DecoderCache* cache) {
  if (ids.empty()) throw IntegrityError("decoder needs at least one input token");
  const Tensor& emb = p.at("dec/tok_emb");
  const std::size_t t = ids.size(), d = emb.cols();
  DecoderCache local;
  DecoderCache& c = cache ? *cache : local;
  c.ids = ids;
  c.e0 = nn::sinusoidal_positions(t, d);
  for (std::size_t r = 0; r < t; ++r) {
    if (ids[r] >= emb.rows()) throw IntegrityError("decoder token outside the vocabulary");
    auto src = emb.row(ids[r]);
    auto dst = c.e0.row(r);
    for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
  }
  c.self_out = nn::attention(c.e0, c.e0, p.at("dec/wq"), p.at("dec/wk"), p.at("dec/wv"), true,
                             c.self_attn);
  c.fusion_in.Z = Z;
  c.fusion_in.is_word = is_word;
  c.fusion_in.O = c.e0;
  nn::matmul_acc(c.fusion_in.O, c.self_out, p.at("dec/wo"));
  c.c = fuse(c.fusion_in, p, &c.fusion);
  c.g = c.fusion_in.O;
  nn::matmul_acc(c.g, c.c, p.at("dec/wc"));
  c.f = nn::ffn_residual(c.g, p.at("dec/ff_w1"), p.at("dec/ff_b1"), p.at("dec/ff_w2"),
                         p.at("dec/ff_b2"), c.ffn);
  Tensor logits = nn::matmul(c.f, p.at("dec/out_w"));
  nn::add_row_bias(logits, p.at("dec/out_b"));
  return logits;
}

void decoder_backward(const Tensor& dlogits, const DecoderCache& c, const ParamStore& p,
                      Tensor& dZ, ParamStore& g) {
  nn::matmul_tn_acc(g.at("dec/out_w"), c.f, dlogits);
  nn::bias_grad_acc(g.at("dec/out_b"), dlogits);
  Tensor df = nn::matmul_nt(dlogits, p.at("dec/out_w"));
  Tensor dg = Tensor::matrix(c.g.rows(), c.g.cols());
  nn::ffn_residual_backward(df, c.g, c.ffn, p.at("dec/ff_w1"), p.at("dec/ff_w2"), dg,
                            g.at("dec/ff_w1"), g.at("dec/ff_b1"), g.at("dec/ff_w2"),
                            g.at("dec/ff_b2"));
  Tensor dO = dg;
  nn::matmul_tn_acc(g.at("dec/wc"), c.c, dg);
  Tensor dC = nn::matmul_nt(dg, p.at("dec/wc"));
  fuse_backward(dC, c.fusion_in, c.fusion, p, dZ, dO, g);
  Tensor de0 = dO;
  nn::matmul_tn_acc(g.at("dec/wo"), c.self_out, dO);
  Tensor dself = nn::matmul_nt(dO, p.at("dec/wo"));
  nn::attention_backward(dself, c.self_attn, c.e0, c.e0, p.at("dec/wq"), p.at("dec/wk"),
                         p.at("dec/wv"), de0, de0, g.at("dec/wq"), g.at("dec/wk"),
                         g.at("dec/wv"));
  Tensor& demb = g.at("dec/tok_emb");
  for (std::size_t r = 0; r < c.ids.size(); ++r) {
    auto src = de0.row(r);
    auto dst = demb.row(c.ids[r]);
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

double ce_loss(const Tensor& logits, const std::vector<std::size_t>& targets, std::size_t pad,
               Tensor* dlogits) {
  if (targets.size() != logits.rows()) throw IntegrityError("targets do not match logits");
  Tensor logp = nn::log_softmax_rows(logits);
  std::size_t count = 0;
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] == pad) continue;
    if (targets[t] >= logits.cols()) throw IntegrityError("target outside the vocabulary");
    loss -= logp(t, targets[t]);
    ++count;
  }
  if (count == 0) throw ValidationError("reference has no scored tokens");
  loss /= static_cast<double>(count);
  if (dlogits) {
    *dlogits = Tensor::matrix(logits.rows(), logits.cols());
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t] == pad) continue;
      auto row = dlogits->row(t);
      for (std::size_t v = 0; v < row.size(); ++v) row[v] = std::exp(logp(t, v)) * inv;
      row[targets[t]] -= inv;
    }
  }
  return loss;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> teacher_forcing_pair(
    const std::vector<std::size_t>& reference, const GenerationConfig& cfg) {
  std::vector<std::size_t> in{cfg.bos};
  in.insert(in.end(), reference.begin(), reference.end());
  std::vector<std::size_t> out = reference;
  out.push_back(cfg.eos);
  return {in, out};
}

// ---- search ------------------------------------------------------------------------

namespace {

std::vector<double> next_log_probs(const Tensor& Z, const std::vector<bool>& is_word,
                                   const ParamStore& p, const GenerationConfig& cfg,
                                   const std::vector<std::size_t>& prefix) {
  std::vector<std::size_t> ids{cfg.bos};
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  Tensor logits = decoder_logits(Z, is_word, ids, p);
  Tensor last = Tensor::matrix(1, logits.cols());
  auto src = logits.row(logits.rows() - 1);
  std::copy(src.begin(), src.end(), last.row(0).begin());
  Tensor lp = nn::log_softmax_rows(last);
  return lp.data();
}

bool better(const Hypothesis& a, const Hypothesis& b) { return a.score() > b.score(); }

}  // namespace

Hypothesis greedy_search(const Tensor& Z, const std::vector<bool>& is_word,
                         const ParamStore& p, const GenerationConfig& cfg) {
  Hypothesis h;
  while (h.tokens.size() < cfg.max_len) {
    auto lp = next_log_probs(Z, is_word, p, cfg, h.tokens);
    auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    h.log_prob += lp[best];
    ++h.scored;
    if (best == cfg.eos) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(best);
  }
  return h;
}

Hypothesis beam_search(const Tensor& Z, const std::vector<bool>& is_word, const ParamStore& p,
                       const GenerationConfig& cfg) {
  cfg.validate();
  Hypothesis greedy = greedy_search(Z, is_word, p, cfg);
  if (cfg.beam == 1) return greedy;

  std::vector<Hypothesis> active{Hypothesis{}};
  std::vector<Hypothesis> done;
  for (std::size_t step = 0; step < cfg.max_len && !active.empty(); ++step) {
    std::vector<Hypothesis> cands;
    for (const auto& h : active) {
      auto lp = next_log_probs(Z, is_word, p, cfg, h.tokens);
      std::vector<std::size_t> order(lp.size());
      for (std::size_t v = 0; v < order.size(); ++v) order[v] = v;
      std::size_t k = std::min(cfg.beam, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return lp[a] > lp[b] || (lp[a] == lp[b] && a < b);
                        });
      for (std::size_t r = 0; r < k; ++r) {
        Hypothesis next = h;
        next.log_prob += lp[order[r]];
        ++next.scored;
        if (order[r] == cfg.eos) {
          next.finished = true;
        } else {
          next.tokens.push_back(order[r]);
        }
        cands.push_back(std::move(next));
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return a.log_prob > b.log_prob;
    });
    active.clear();
    for (std::size_t r = 0; r < cands.size() && r < cfg.beam; ++r) {
      (cands[r].finished ? done : active).push_back(std::move(cands[r]));
    }
  }
  for (auto& h : active) done.push_back(std::move(h));
  Hypothesis best = greedy;
  for (const auto& h : done) {
    if (better(h, best)) best = h;
  }
  return best;
}

std::vector<std::size_t> generate(const Tensor& Z, const std::vector<bool>& is_word,
                                  const ParamStore& p, const GenerationConfig& cfg) {
  return beam_search(Z, is_word, p, cfg).tokens;
}

}  // namespace s3

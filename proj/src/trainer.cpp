#include "s3/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "s3/error.hpp"

namespace s3 {

// ---- configuration -------------------------------------------------------------------

void TrainConfig::validate() const {
  model.validate();
  if (!(lr_model > 0.0 && lr_gat > 0.0 && lr_agent > 0.0)) {
    throw ValidationError("learning rates must be positive");
  }
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(clip_norm > 0.0)) throw ValidationError("clip_norm must be positive");
  if (patience == 0) throw ValidationError("patience must be positive");
  if (!(min_delta >= 0.0)) throw ValidationError("min_delta must be non-negative");
  if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
}

void TrainConfig::apply_reference_lr() {
  lr_model = 5e-6;
  lr_agent = 5e-6;
  lr_gat = 5e-4;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view)> set;
};

template <class T>
T parse_number(std::string_view s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("'" + std::string(s) + "' is not a valid number");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("'" + std::string(s) + "' is not true or false");
}

#define S3_SIZE_FIELD(name, member)                                                       \
  Field {                                                                                 \
    name, [](const TrainConfig& c) { return std::to_string(c.member); },                  \
        [](TrainConfig& c, std::string_view v) { c.member = parse_number<std::size_t>(v); } \
  }
#define S3_REAL_FIELD(name, member)                                                       \
  Field {                                                                                 \
    name, [](const TrainConfig& c) { return fmt(c.member); },                             \
        [](TrainConfig& c, std::string_view v) { c.member = parse_number<double>(v); }    \
  }
#define S3_BOOL_FIELD(name, member)                                                       \
  Field {                                                                                 \
    name, [](const TrainConfig& c) { return std::string(c.member ? "true" : "false"); },  \
        [](TrainConfig& c, std::string_view v) { c.member = parse_bool(v); }              \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      S3_SIZE_FIELD("d_model", model.encoder.d_model),
      S3_SIZE_FIELD("heads", model.encoder.heads),
      S3_REAL_FIELD("dropout", model.encoder.dropout),
      S3_SIZE_FIELD("gat_layers", model.encoder.gat_layers),
      S3_SIZE_FIELD("max_seq_len", model.encoder.max_seq_len),
      S3_SIZE_FIELD("policy_hidden", model.policy.hidden),
      S3_REAL_FIELD("action_std", model.policy.action_std),
      S3_REAL_FIELD("initial_action", model.initial_action),
      S3_REAL_FIELD("p_A", model.thresholds.p_A),
      S3_REAL_FIELD("p_B", model.thresholds.p_B),
      S3_REAL_FIELD("p_C", model.thresholds.p_C),
      S3_SIZE_FIELD("beam", model.generation.beam),
      S3_SIZE_FIELD("max_len", model.generation.max_len),
      S3_SIZE_FIELD("prune_rounds", model.prune_rounds),
      S3_BOOL_FIELD("use_graph", model.use_graph),
      S3_REAL_FIELD("lr_model", lr_model),
      S3_REAL_FIELD("lr_gat", lr_gat),
      S3_REAL_FIELD("lr_agent", lr_agent),
      S3_SIZE_FIELD("batch_size", batch_size),
      S3_REAL_FIELD("clip_norm", clip_norm),
      S3_SIZE_FIELD("patience", patience),
      S3_REAL_FIELD("min_delta", min_delta),
      S3_SIZE_FIELD("max_epochs", max_epochs),
      S3_BOOL_FIELD("joint", joint),
      S3_BOOL_FIELD("select_best_dev", select_best_dev),
      S3_SIZE_FIELD("seed", seed),
  };
  return kFields;
}

#undef S3_SIZE_FIELD
#undef S3_REAL_FIELD
#undef S3_BOOL_FIELD

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string config_to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

TrainConfig parse_config(std::string_view text, const std::string& source) {
  TrainConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (key == f.key) field = &f;
    }
    if (!field) throw ValidationError(where + ": unknown key '" + std::string(key) + "'");
    try {
      field->set(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + std::string(key) + ": " + e.what());
    }
  }
  cfg.model.policy.input_dim = cfg.model.encoder.d_model;
  cfg.model.encoder.vocab_size = std::max<std::size_t>(cfg.model.encoder.vocab_size, 1);
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---- optimizer --------------------------------------------------------------------------

double Adam::lr_for(const std::string& name) const {
  if (name.rfind("gat/", 0) == 0) return lr_gat_;
  if (name.rfind("policy/", 0) == 0) return lr_agent_;
  return lr_model_;
}

void Adam::step(ParamStore& params, const ParamStore& grads) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (const auto& [name, g] : grads) {
    if (g.is_zero()) continue;
    Tensor& p = params.at(name);
    auto& st = state_[name];
    if (st.t == 0) {
      st.m = Tensor(g.shape());
      st.v = Tensor(g.shape());
    }
    ++st.t;
    const double lr = lr_for(name);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < g.size(); ++i) {
      st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
      st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
  }
}

double clip_global_norm(ParamStore& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

// ---- training loop ------------------------------------------------------------------------

std::string_view to_string(Phase p) { return p == Phase::Warm ? "warm" : "joint"; }

std::string EpochRecord::to_json() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["phase"] = std::string(s3::to_string(phase));
  j["train_loss"] = train_loss;
  j["dev_loss"] = dev_loss;
  if (phase == Phase::Joint) {
    j["mean_reward"] = mean_reward;
    j["mean_rc"] = mean_confidence;
    j["mean_rr"] = mean_rouge;
    j["baseline"] = baseline;
  }
  return j.dump();
}

double dev_loss(const HeadlineModel& m, const std::vector<Sample>& samples) {
  if (samples.empty()) throw ValidationError("dev set is empty");
  double total = 0.0;
  for (const auto& s : samples) {
    total += headline_loss(m, s.doc, inference_graph(m, s.doc, s.graph)).loss;
  }
  return total / static_cast<double>(samples.size());
}

namespace {

std::uint64_t step_key(std::size_t epoch, std::size_t index) {
  return (static_cast<std::uint64_t>(epoch) << 32) ^ static_cast<std::uint64_t>(index);
}

std::vector<std::size_t> epoch_order(std::size_t n, const Rng& shuffle_root, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = shuffle_root.split(epoch);
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

[[noreturn]] void abort_non_finite(const HeadlineModel& m, const std::string& diag,
                                   std::size_t epoch, const std::string& what) {
  if (!diag.empty()) save_checkpoint(diag, m.params);
  throw NumericError("non-finite " + what + " in epoch " + std::to_string(epoch) +
                     (diag.empty() ? "" : "; parameters written to " + diag));
}

}  // namespace

TrainState train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                 const TrainConfig& cfg, std::ostream* metrics_log,
                 const std::string& diagnostic_path) {
  if (train_set.empty()) throw ValidationError("training set is empty");
  if (dev_set.empty()) throw ValidationError("dev set is empty");
  TrainConfig c = cfg;
  c.model.policy.input_dim = c.model.encoder.d_model;
  TrainState st;
  st.model = make_model(c.model, train_set, c.seed);
  c.model = st.model.config;
  c.validate();
  HeadlineModel& m = st.model;
  const bool can_join = c.joint && m.config.use_graph;

  Adam adam(c.lr_model, c.lr_gat, c.lr_agent);
  const Rng root(c.seed);
  const Rng dropout_root = root.split(11), sample_root = root.split(12),
            shuffle_root = root.split(13);

  ParamStore best = m.params;
  bool best_joint = false;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    st.epoch = epoch;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = st.phase;
    const bool joint = st.phase == Phase::Joint;
    auto order = epoch_order(train_set.size(), shuffle_root, epoch);
    double loss_sum = 0.0, r_sum = 0.0, rc_sum = 0.0, rr_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += c.batch_size) {
      const std::size_t end = std::min(order.size(), start + c.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      ParamStore grads = m.params.zeros_like();
      ParamStore doc_grads = m.params.zeros_like();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train_set[order[k]];
        const auto key = step_key(epoch, order[k]);
        Rng drop = dropout_root.split(key);
        doc_grads.scale(0.0);
        if (!joint) {
          loss_sum += headline_loss(m, s.doc, s.graph, &drop, &doc_grads).loss;
        } else {
          Rng sample = sample_root.split(key);
          Rollout ro = prune_rollout(m, s.doc, s.graph, &sample);
          Reward r = compute_reward(m, s.doc, ro.pruned, s.graph);
          ro.trajectory.reward = r.total;
          loss_sum += headline_loss(m, s.doc, ro.pruned, &drop, &doc_grads).loss;
          if (!std::isfinite(r.total)) abort_non_finite(m, diagnostic_path, epoch, "reward");
          ParamStore pg = reinforce_update(ro.trajectory, st.baseline, m.config.policy, m.params);
          // The policy gradient is an ascent direction.
          doc_grads.add_scaled(pg, -1.0);
          r_sum += r.total;
          rc_sum += r.confidence;
          rr_sum += r.rouge;
        }
        grads.add_scaled(doc_grads, inv_b);
      }
      if (!std::isfinite(loss_sum)) abort_non_finite(m, diagnostic_path, epoch, "loss");
      if (!std::isfinite(grads.squared_norm())) {
        abort_non_finite(m, diagnostic_path, epoch, "gradient");
      }
      clip_global_norm(grads, c.clip_norm);
      adam.step(m.params, grads);
    }

    const double n = static_cast<double>(train_set.size());
    rec.train_loss = loss_sum / n;
    rec.dev_loss = dev_loss(m, dev_set);
    if (!std::isfinite(rec.dev_loss)) abort_non_finite(m, diagnostic_path, epoch, "dev loss");
    if (joint) {
      rec.mean_reward = r_sum / n;
      rec.mean_confidence = rc_sum / n;
      rec.mean_rouge = rr_sum / n;
      rec.baseline = st.baseline.value;
    }
    st.log.push_back(rec);
    if (metrics_log) *metrics_log << rec.to_json() << '\n' << std::flush;

    if (rec.dev_loss < best_loss - c.min_delta) {
      best_loss = rec.dev_loss;
      best = m.params;
      best_joint = joint;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale < c.patience) continue;
    if (joint || !can_join) break;
    // Warm phase has converged: start pruning. Dev loss is now measured on
    // pruned graphs, so the best-so-far record starts over.
    st.phase = Phase::Joint;
    ++st.transitions;
    m.config.prune_at_inference = true;
    best_loss = std::numeric_limits<double>::infinity();
    stale = 0;
  }

  if (c.select_best_dev) {
    m.params = best;
    m.config.prune_at_inference = best_joint;
  }
  st.best_dev_loss = best_loss;
  return st;
}

// ---- evaluation ------------------------------------------------------------------------------

Evaluation evaluate(const HeadlineModel& m, const std::vector<Sample>& samples,
                    bool with_meteor) {
  Evaluation ev;
  std::vector<MetricReport> reports;
  for (const auto& s : samples) {
    auto pred = generate_headline(m, s.doc, s.graph, m.config.generation);
    reports.push_back(score_pair(pred, s.doc.headline_tokens, with_meteor));
    ev.predictions.push_back(std::move(pred));
  }
  ev.report = average_reports(reports);
  return ev;
}

std::vector<Sample> pair_samples(const std::vector<Document>& docs,
                                 const std::vector<S3Graph>& graphs) {
  std::unordered_map<std::string, const S3Graph*> by_id;
  for (const auto& g : graphs) {
    if (!by_id.emplace(g.doc_id, &g).second) {
      throw ValidationError("duplicate graph for document " + g.doc_id);
    }
  }
  std::vector<Sample> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) throw ValidationError("no graph for document " + d.id);
    out.push_back({d, *it->second});
  }
  return out;
}

}  // namespace s3

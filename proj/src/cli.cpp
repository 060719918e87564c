#include "s3/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "s3/error.hpp"
#include "s3/gradcheck.hpp"
#include "s3/metrics.hpp"
#include "s3/model.hpp"
#include "s3/synth.hpp"
#include "s3/trainer.hpp"

namespace s3::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradTolerance = 1e-4;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written by index so output order never depends on scheduling. The first
/// exception (lowest index) is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < n; i += stride) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    body(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(body, w, jobs);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<Tokens> read_token_lines(const std::string& path) {
  if (fs::path(path).extension() == ".docs") {
    std::vector<Tokens> out;
    for (const auto& d : read_docs_file(path)) out.push_back(d.headline_tokens);
    return out;
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::vector<Tokens> out;
  for (std::string line; std::getline(in, line);) out.push_back(split_ws(line));
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  return f;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("S3_SEED");
  if (!v || !*v) return std::nullopt;
  std::uint64_t s = 0;
  auto res = std::from_chars(v, v + std::strlen(v), s);
  if (res.ec != std::errc() || *res.ptr != '\0') {
    throw ValidationError(std::string("S3_SEED is not an unsigned integer: ") + v);
  }
  return s;
}

// ---- commands ---------------------------------------------------------------------

struct BuildArgs {
  std::string docs, rst_dir, amr_dir, out;
  std::size_t jobs = 1;
};

int cmd_build(const BuildArgs& a, std::ostream& out) {
  auto docs = read_docs_file(a.docs);
  std::vector<S3Graph> graphs(docs.size());
  parallel_for(docs.size(), a.jobs, [&](std::size_t i) {
    const auto& d = docs[i];
    RstTree t = read_rst_file((fs::path(a.rst_dir) / (d.id + ".rst")).string());
    auto amrs = read_amr_file((fs::path(a.amr_dir) / (d.id + ".amr")).string());
    try {
      graphs[i] = build_s3(d, t, amrs);
    } catch (const ValidationError& e) {
      throw ValidationError(a.docs + ": document " + d.id + ": " + e.what());
    }
  });
  write_s3_file(a.out, graphs);
  out << "built " << graphs.size() << " graphs -> " << a.out << '\n';
  return kExitOk;
}

struct StatsArgs {
  std::string graphs, compare;
};

struct Counts {
  std::array<std::size_t, 5> n{};
  std::size_t total() const { return n[0] + n[1] + n[2] + n[3] + n[4]; }
};

Counts count_nodes(const std::vector<S3Graph>& graphs) {
  Counts c;
  for (const auto& g : graphs) {
    for (const auto& node : g.nodes) {
      switch (node.type) {
        case NodeType::TextSpan: ++c.n[0]; break;
        case NodeType::Edu: ++c.n[1]; break;
        case NodeType::Word: ++c.n[node.rest_word ? 3 : 2]; break;
        case NodeType::Dummy: ++c.n[4]; break;
      }
    }
  }
  return c;
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  static const char* kNames[] = {"text-span (A)", "EDU (B)", "AMR word (C)", "rest word (C)",
                                 "dummy (C)"};
  Counts base = count_nodes(read_s3_file(a.graphs));
  std::optional<Counts> other;
  if (!a.compare.empty()) other = count_nodes(read_s3_file(a.compare));
  auto frac = [](const Counts& c, std::size_t i) {
    return c.total() ? static_cast<double>(c.n[i]) / static_cast<double>(c.total()) : 0.0;
  };
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %10s %9s", "category", "count", "fraction");
  out << buf;
  if (other) {
    std::snprintf(buf, sizeof buf, " %10s %9s %10s", "cmp count", "cmp frac", "delta");
    out << buf;
  }
  out << '\n';
  for (std::size_t i = 0; i < 5; ++i) {
    std::snprintf(buf, sizeof buf, "%-14s %10zu %9.4f", kNames[i], base.n[i], frac(base, i));
    out << buf;
    if (other) {
      std::snprintf(buf, sizeof buf, " %10zu %9.4f %+10ld", other->n[i], frac(*other, i),
                    static_cast<long>(other->n[i]) - static_cast<long>(base.n[i]));
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-14s %10zu %9.4f", "total", base.total(), 1.0);
  out << buf;
  if (other) {
    std::snprintf(buf, sizeof buf, " %10zu %9.4f %+10ld", other->total(), 1.0,
                  static_cast<long>(other->total()) - static_cast<long>(base.total()));
    out << buf;
  }
  out << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string config, data, graphs, dev_data, dev_graphs, out_dir;
  std::optional<std::uint64_t> seed;
  bool reference_lr = false;
  bool last_ckpt = false;
  bool no_graph = false;
  bool dump_config = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (auto s = env_seed()) cfg.seed = *s;
  if (a.seed) cfg.seed = *a.seed;
  if (a.reference_lr) cfg.apply_reference_lr();
  if (a.last_ckpt) cfg.select_best_dev = false;
  if (a.no_graph) cfg.model.use_graph = false;
  if (a.dump_config) {
    out << config_to_text(cfg);
    return kExitOk;
  }
  if (a.data.empty() || a.graphs.empty() || a.out_dir.empty()) {
    throw ValidationError("train needs --data, --graphs and --out");
  }
  auto train_set = pair_samples(read_docs_file(a.data), read_s3_file(a.graphs));
  std::vector<Sample> dev_set;
  if (!a.dev_data.empty()) {
    if (a.dev_graphs.empty()) throw ValidationError("--dev-data needs --dev-graphs");
    dev_set = pair_samples(read_docs_file(a.dev_data), read_s3_file(a.dev_graphs));
  } else {
    if (train_set.size() < 2) throw ValidationError("need at least 2 documents to split a dev set");
    const std::size_t n_dev = std::max<std::size_t>(1, train_set.size() / 10);
    dev_set.assign(train_set.end() - static_cast<long>(n_dev), train_set.end());
    train_set.resize(train_set.size() - n_dev);
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  open_out((dir / "config.txt").string()) << config_to_text(cfg);
  auto log = open_out((dir / "metrics.jsonl").string());
  TrainState st = train(train_set, dev_set, cfg, &log, (dir / "diagnostic.ckpt").string());
  save_checkpoint((dir / "model.ckpt").string(), st.model.params);
  save_model_meta((dir / "model.meta").string(), st.model);
  out << "trained " << st.epoch << " epochs (" << st.transitions
      << " phase transition); best dev loss " << st.best_dev_loss << '\n'
      << "checkpoint -> " << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

struct GenerateArgs {
  std::string ckpt, meta, data, graphs, out, pruned_out, dump_attn;
  std::optional<std::size_t> beam, max_len;
  std::size_t jobs = 1;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  std::string meta = a.meta;
  if (meta.empty()) meta = fs::path(a.ckpt).replace_extension(".meta").string();
  HeadlineModel m = load_model(meta, a.ckpt);
  GenerationConfig gen = m.config.generation;
  if (a.beam) gen.beam = *a.beam;
  if (a.max_len) gen.max_len = *a.max_len;
  gen.validate();
  auto samples = pair_samples(read_docs_file(a.data), read_s3_file(a.graphs));
  std::vector<std::string> lines(samples.size());
  std::vector<S3Graph> used(samples.size());
  std::vector<std::string> attn(samples.size());
  parallel_for(samples.size(), a.jobs, [&](std::size_t i) {
    const auto& s = samples[i];
    used[i] = inference_graph(m, s.doc, s.graph);
    Memory mem = encode(m, s.doc, used[i]);
    auto ids = generate(mem.Z, mem.is_word, m.params, gen);
    std::vector<std::string> toks;
    for (auto id : ids) toks.push_back(m.tokens.token(id));
    lines[i] = join(toks);
    if (!a.dump_attn.empty()) {
      std::vector<std::size_t> in{gen.bos};
      in.insert(in.end(), ids.begin(), ids.end());
      DecoderCache cache;
      decoder_logits(mem.Z, mem.is_word, in, m.params, &cache);
      nlohmann::json j;
      j["doc_id"] = s.doc.id;
      std::vector<std::size_t> node_ids;
      for (const auto& n : used[i].nodes) node_ids.push_back(n.id);
      j["nodes"] = node_ids;
      std::vector<std::vector<double>> rows;
      for (std::size_t r = 0; r < cache.fusion.probs.rows(); ++r) {
        auto row = cache.fusion.probs.row(r);
        rows.emplace_back(row.begin(), row.end());
      }
      j["attention"] = rows;
      attn[i] = j.dump();
    }
  });
  if (a.out.empty()) {
    for (const auto& l : lines) out << l << '\n';
  } else {
    auto f = open_out(a.out);
    for (const auto& l : lines) f << l << '\n';
  }
  if (!a.pruned_out.empty()) write_s3_file(a.pruned_out, used);
  if (!a.dump_attn.empty()) {
    auto f = open_out(a.dump_attn);
    for (const auto& l : attn) f << l << '\n';
  }
  return kExitOk;
}

struct EvalArgs {
  std::string pred, ref, label = "corpus";
  bool meteor = false;
  std::size_t jobs = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto pred = read_token_lines(a.pred);
  auto ref = read_token_lines(a.ref);
  if (pred.size() != ref.size()) {
    throw ValidationError(a.pred + " has " + std::to_string(pred.size()) + " lines but " +
                          a.ref + " has " + std::to_string(ref.size()));
  }
  std::vector<MetricReport> reports(pred.size());
  parallel_for(pred.size(), a.jobs,
               [&](std::size_t i) { reports[i] = score_pair(pred[i], ref[i], a.meteor); });
  out << format_report_table(average_reports(reports), a.label);
  if (a.meteor) out << "METEOR is the exact-match variant (no stemming or synonyms).\n";
  out << "ROUGE columns report F1.\n";
  return kExitOk;
}

struct GradcheckArgs {
  std::optional<std::uint64_t> seed;
  double eps = 1e-3;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::uint64_t seed = 0;
  if (auto s = env_seed()) seed = *s;
  if (a.seed) seed = *a.seed;
  bool ok = true;
  char buf[256];
  for (const auto& r : run_gradcheck_suites(seed, a.eps)) {
    const bool pass = r.report.max_rel_error < kGradTolerance;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%-16s max_rel_error=%.3e checked=%zu worst=%s[%zu] %s\n",
                  r.name.c_str(), r.report.max_rel_error, r.report.checked,
                  r.report.worst_param.c_str(), r.report.worst_index, pass ? "PASS" : "FAIL");
    out << buf;
  }
  return ok ? kExitOk : kExitInvalid;
}

struct SynthArgs {
  SynthSpec spec;
  std::string out;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  if (auto s = env_seed(); s && !a.spec.seed) a.spec.seed = *s;
  auto docs = generate_corpus(a.spec);
  write_corpus(a.out, docs);
  out << "wrote " << docs.size() << " documents -> " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headline generation over unified discourse graphs"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* c_build = app.add_subcommand("build", "Assemble graphs from documents, RST trees and AMRs");
  c_build->add_option("--docs", build.docs, "Documents file (.docs)")->required();
  c_build->add_option("--rst", build.rst_dir, "Directory of <id>.rst files")->required();
  c_build->add_option("--amr", build.amr_dir, "Directory of <id>.amr files")->required();
  c_build->add_option("-o,--out", build.out, "Output graph file (.s3)")->required();
  c_build->add_option("--jobs", build.jobs, "Worker threads")->check(CLI::PositiveNumber);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Node category counts and fractions");
  c_stats->add_option("graphs", stats.graphs, "Graph file (.s3)")->required();
  c_stats->add_option("--compare", stats.compare, "Second graph file, e.g. pruned graphs");

  TrainArgs tr;
  std::uint64_t train_seed = 0;
  auto* c_train = app.add_subcommand("train", "Warm-start then joint training");
  c_train->add_option("--config", tr.config, "Run configuration (key = value)");
  c_train->add_option("--data", tr.data, "Training documents (.docs)");
  c_train->add_option("--graphs", tr.graphs, "Training graphs (.s3)");
  c_train->add_option("--dev-data", tr.dev_data, "Dev documents; default: last tenth of --data");
  c_train->add_option("--dev-graphs", tr.dev_graphs, "Dev graphs");
  c_train->add_option("--out", tr.out_dir, "Output directory");
  auto* o_train_seed = c_train->add_option("--seed", train_seed, "Seed (overrides S3_SEED)");
  c_train->add_flag("--reference-lr", tr.reference_lr, "Use lr 5e-6 (model, agent) and 5e-4 (GAT)");
  c_train->add_flag("--last-ckpt", tr.last_ckpt, "Keep the last parameters, not best dev");
  c_train->add_flag("--no-graph", tr.no_graph, "Token-only baseline without the graph");
  c_train->add_flag("--dump-config", tr.dump_config, "Print the effective config and exit");

  GenerateArgs gen;
  std::size_t gen_beam = 0, gen_max_len = 0;
  auto* c_gen = app.add_subcommand("generate", "Generate one headline per document");
  c_gen->add_option("--ckpt", gen.ckpt, "Checkpoint file")->required();
  c_gen->add_option("--meta", gen.meta, "Model file; default: checkpoint path with .meta");
  c_gen->add_option("--data", gen.data, "Documents (.docs)")->required();
  c_gen->add_option("--graphs", gen.graphs, "Graphs (.s3)")->required();
  auto* o_beam = c_gen->add_option("--beam", gen_beam, "Beam size")->check(CLI::PositiveNumber);
  auto* o_len = c_gen->add_option("--max-len", gen_max_len, "Maximum headline length")
                    ->check(CLI::PositiveNumber);
  c_gen->add_option("-o,--out", gen.out, "Output file; default: stdout");
  c_gen->add_option("--pruned-out", gen.pruned_out, "Write the graphs used for generation");
  c_gen->add_option("--dump-attn", gen.dump_attn, "Write fusion attention per document");
  c_gen->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score predictions against references");
  c_eval->add_option("--pred", ev.pred, "Predictions, one per line")->required();
  c_eval->add_option("--ref", ev.ref, "References, one per line, or a .docs file")->required();
  c_eval->add_option("--label", ev.label, "Row label");
  c_eval->add_flag("--meteor-exact", ev.meteor, "Add exact-match METEOR");
  c_eval->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);

  GradcheckArgs gc;
  std::uint64_t gc_seed = 0;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference checks of every backward pass");
  auto* o_gc_seed = c_gc->add_option("--seed", gc_seed, "Seed (overrides S3_SEED)");
  c_gc->add_option("--eps", gc.eps, "Central-difference step")->check(CLI::Range(1e-5, 1e-2));

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic corpus");
  c_synth->add_option("--n", sy.spec.n_docs, "Number of documents")->required();
  c_synth->add_option("--seed", sy.spec.seed, "Seed");
  c_synth->add_option("--edus-min", sy.spec.edus_min, "Fewest EDUs per document");
  c_synth->add_option("--edus-max", sy.spec.edus_max, "Most EDUs per document");
  c_synth->add_option("--tokens-min", sy.spec.tokens_min, "Fewest tokens per EDU");
  c_synth->add_option("--tokens-max", sy.spec.tokens_max, "Most tokens per EDU");
  c_synth->add_option("--vocab", sy.spec.vocab_size, "Word vocabulary size");
  c_synth->add_option("--key-rate", sy.spec.key_edu_rate, "Probability of a key EDU");
  c_synth->add_option("-o,--out", sy.out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*c_build) return cmd_build(build, out);
    if (*c_stats) return cmd_stats(stats, out);
    if (*c_train) {
      if (*o_train_seed) tr.seed = train_seed;
      return cmd_train(tr, out);
    }
    if (*c_gen) {
      if (*o_beam) gen.beam = gen_beam;
      if (*o_len) gen.max_len = gen_max_len;
      return cmd_generate(gen, out);
    }
    if (*c_eval) return cmd_eval(ev, out);
    if (*c_gc) {
      if (*o_gc_seed) gc.seed = gc_seed;
      return cmd_gradcheck(gc, out);
    }
    if (*c_synth) return cmd_synth(sy, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInvalid;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace s3::cli

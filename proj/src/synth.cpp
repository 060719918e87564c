#include "s3/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "s3/amr.hpp"
#include "s3/error.hpp"
#include "s3/numerics.hpp"

namespace s3 {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
  if (n_docs == 0) throw ValidationError("n_docs must be positive");
  if (edus_min == 0 || edus_min > edus_max) throw ValidationError("bad EDU count range");
  if (tokens_min == 0 || tokens_min > tokens_max) throw ValidationError("bad token count range");
  if (vocab_size == 0) throw ValidationError("vocab_size must be positive");
  if (!(key_edu_rate > 0.0 && key_edu_rate <= 1.0)) {
    throw ValidationError("key_edu_rate must lie in (0, 1]");
  }
}

namespace {

const char* const kDummyConcepts[] = {"and", "person", "thing", "have-rel-role-91", "name"};
const char* const kRoles[] = {":ARG0", ":ARG1", ":ARG2", ":mod", ":time"};

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

struct Subtree {
  RstTree tree;
  bool has_key = false;
};

RstTree random_tree(Rng& rng, const std::vector<bool>& key) {
  std::vector<Subtree> parts;
  for (std::size_t i = 0; i < key.size(); ++i) parts.push_back({RstTree::leaf(i), key[i]});
  while (parts.size() > 1) {
    std::size_t i = pick(rng, 0, parts.size() - 2);
    Subtree& l = parts[i];
    Subtree& r = parts[i + 1];
    std::string rel = rng.uniform() < 0.5 ? "Elaborate" : "Background";
    std::array<Nuclearity, 2> nuc;
    if (l.has_key && r.has_key) {
      rel = "Joint";
      nuc = {Nuclearity::Nucleus, Nuclearity::Nucleus};
    } else if (l.has_key) {
      nuc = {Nuclearity::Nucleus, Nuclearity::Satellite};
    } else if (r.has_key) {
      nuc = {Nuclearity::Satellite, Nuclearity::Nucleus};
    } else if (rng.uniform() < 0.5) {
      nuc = {Nuclearity::Nucleus, Nuclearity::Satellite};
    } else {
      nuc = {Nuclearity::Satellite, Nuclearity::Nucleus};
    }
    Subtree merged{RstTree::internal(rel, nuc, std::move(l.tree), std::move(r.tree)),
                   l.has_key || r.has_key};
    parts[i] = std::move(merged);
    parts.erase(parts.begin() + static_cast<long>(i) + 1);
  }
  return std::move(parts.front().tree);
}

// Chain a -> b -> c over aligned tokens and dummy concepts in random order.
std::string random_chain_amr(Rng& rng, const std::vector<std::string>& tokens) {
  struct Item {
    std::string concept_label;
    std::optional<std::size_t> token;
  };
  std::vector<Item> items;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (rng.uniform() < 0.6) items.push_back({tokens[t], t});
  }
  const std::size_t dummies = pick(rng, 0, 2);
  for (std::size_t k = 0; k < dummies; ++k) {
    items.push_back({kDummyConcepts[pick(rng, 0, std::size(kDummyConcepts) - 1)], {}});
  }
  if (items.empty()) items.push_back({"and", {}});
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[pick(rng, 0, i - 1)]);

  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += std::string(" ") + kRoles[pick(rng, 0, std::size(kRoles) - 1)] + " ";
    out += "(v" + std::to_string(i) + " / " + items[i].concept_label;
    if (items[i].token) out += "~e." + std::to_string(*items[i].token);
  }
  out += std::string(items.size(), ')');
  return out;
}

}  // namespace

std::vector<SynthDoc> generate_corpus(const SynthSpec& spec) {
  spec.validate();
  std::vector<SynthDoc> out;
  const Rng root(spec.seed);
  for (std::size_t n = 0; n < spec.n_docs; ++n) {
    Rng rng = root.split(n);
    SynthDoc sd;
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", n);
    sd.doc.id = id;
    const std::size_t n_edus = pick(rng, spec.edus_min, spec.edus_max);
    for (std::size_t e = 0; e < n_edus; ++e) {
      Edu edu;
      edu.id = e;
      const std::size_t len = pick(rng, spec.tokens_min, spec.tokens_max);
      for (std::size_t t = 0; t < len; ++t) {
        edu.tokens.push_back("w" + std::to_string(pick(rng, 0, spec.vocab_size - 1)));
      }
      for (const auto& t : edu.tokens) edu.text += (edu.text.empty() ? "" : " ") + t;
      sd.doc.edus.push_back(std::move(edu));
      sd.key_edus.push_back(rng.uniform() < spec.key_edu_rate);
    }
    if (std::find(sd.key_edus.begin(), sd.key_edus.end(), true) == sd.key_edus.end()) {
      sd.key_edus[pick(rng, 0, n_edus - 1)] = true;
    }
    for (std::size_t e = 0; e < n_edus; ++e) {
      if (!sd.key_edus[e]) continue;
      const auto& first = sd.doc.edus[e].tokens.front();
      sd.doc.headline_tokens.push_back(first);
      sd.doc.headline += (sd.doc.headline.empty() ? "" : " ") + first;
    }
    sd.tree = random_tree(rng, sd.key_edus);
    for (const auto& edu : sd.doc.edus) sd.amrs.push_back(random_chain_amr(rng, edu.tokens));
    out.push_back(std::move(sd));
  }
  return out;
}

std::vector<std::size_t> nuclear_leaves(const RstTree& t) {
  std::vector<std::size_t> out;
  std::function<void(const RstTree&)> walk = [&](const RstTree& n) {
    if (n.is_leaf()) {
      out.push_back(*n.edu);
      return;
    }
    for (int c = 0; c < 2; ++c) {
      if (n.nuclearity[c] == Nuclearity::Nucleus) walk(n.children[c]);
    }
  };
  walk(t);
  return out;
}

S3Graph build_graph(const SynthDoc& sd) {
  std::vector<AmrGraph> amrs;
  for (std::size_t e = 0; e < sd.amrs.size(); ++e) amrs.push_back(parse_penman(sd.amrs[e], e));
  return build_s3(sd.doc, sd.tree, amrs);
}

void write_corpus(const std::string& dir, const std::vector<SynthDoc>& docs) {
  fs::create_directories(fs::path(dir) / "rst");
  fs::create_directories(fs::path(dir) / "amr");
  auto open = [](const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ValidationError("cannot write " + p.string());
    return f;
  };
  auto docs_out = open(fs::path(dir) / "corpus.docs");
  for (const auto& sd : docs) {
    docs_out << serialize_doc(sd.doc) << '\n';
    open(fs::path(dir) / "rst" / (sd.doc.id + ".rst")) << serialize_rst(sd.tree) << '\n';
    auto amr = open(fs::path(dir) / "amr" / (sd.doc.id + ".amr"));
    for (const auto& line : sd.amrs) amr << line << '\n';
  }
}

}  // namespace s3

#pragma once

#include <vector>

#include "s3/amr.hpp"
#include "s3/model.hpp"
#include "s3/rst.hpp"
#include "s3/s3_graph.hpp"
#include "s3/synth.hpp"

namespace s3::testing {

/// Two EDUs: four tokens covered by the boy/girl AMR, then three tokens with
/// a dummy-only AMR.
inline Document two_edu_document() {
  Document d;
  d.id = "boy-girl";
  d.edus.push_back({0, "desires boy girl believe", {"desires", "boy", "girl", "believe"}});
  d.edus.push_back({1, "and so on", {"and", "so", "on"}});
  d.headline = "boy desires";
  d.headline_tokens = {"boy", "desires"};
  return d;
}

inline RstTree two_edu_tree() {
  return RstTree::internal("Elaborate", {Nuclearity::Nucleus, Nuclearity::Satellite},
                           RstTree::leaf(0), RstTree::leaf(1));
}

inline std::vector<AmrGraph> two_edu_amrs() {
  return {parse_penman("(d / desire-01~0 :ARG0 (b / boy~1) :ARG1 (b2 / believe-01~3 "
                       ":ARG0 (g / girl~2) :ARG1 b))",
                       0),
          parse_penman("(a / and)", 1)};
}

inline S3Graph two_edu_graph() {
  return build_s3(two_edu_document(), two_edu_tree(), two_edu_amrs());
}

inline std::vector<Sample> synth_samples(std::size_t n, std::uint64_t seed,
                                         std::size_t vocab = 40) {
  SynthSpec spec;
  spec.n_docs = n;
  spec.seed = seed;
  spec.vocab_size = vocab;
  std::vector<Sample> out;
  for (const auto& sd : generate_corpus(spec)) out.push_back({sd.doc, build_graph(sd)});
  return out;
}

/// A small model: d_model 8, two heads, policy hidden width 16.
inline HeadlineModel small_model(const std::vector<Sample>& samples, std::uint64_t seed = 0) {
  ModelConfig mc;
  mc.encoder.d_model = 8;
  mc.encoder.heads = 2;
  mc.policy.hidden = 16;
  mc.generation.max_len = 6;
  return make_model(mc, samples, seed);
}

}  // namespace s3::testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "s3/rst.hpp"
#include "s3/s3_graph.hpp"

namespace s3 {

struct SynthSpec {
  std::size_t n_docs = 10;
  std::size_t edus_min = 2, edus_max = 5;
  std::size_t tokens_min = 3, tokens_max = 6;
  std::size_t vocab_size = 40;
  /// Probability that an EDU is a key EDU; at least one per document.
  double key_edu_rate = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDoc {
  Document doc;
  RstTree tree;
  /// One PENMAN expression per EDU.
  std::vector<std::string> amrs;
  std::vector<bool> key_edus;
};

/// Random documents whose headline is the first token of every key EDU, in
/// order. The RST tree makes the key EDUs exactly the leaves reached from
/// the root through nucleus children only. AMRs are chains over a random
/// subset of each EDU's tokens plus a few dummy concepts.
std::vector<SynthDoc> generate_corpus(const SynthSpec& spec);

/// Leaves whose path from the root passes through nucleus children only.
std::vector<std::size_t> nuclear_leaves(const RstTree& t);

/// Parses the document's AMRs and assembles its graph.
S3Graph build_graph(const SynthDoc& sd);

/// Writes DIR/corpus.docs, DIR/rst/<id>.rst and DIR/amr/<id>.amr.
void write_corpus(const std::string& dir, const std::vector<SynthDoc>& docs);

}  // namespace s3

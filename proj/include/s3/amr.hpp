#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s3 {

enum class AmrNodeKind { WordAligned, Dummy };

struct AmrNode {
  std::string variable;
  std::string concept_label;
  AmrNodeKind kind = AmrNodeKind::Dummy;
  /// Index into the owning EDU's token list; present iff kind is WordAligned.
  std::optional<std::size_t> token_index;

  bool operator==(const AmrNode&) const = default;
};

/// Directed role edge. Inverse roles (":ARG0-of") are stored normalized,
/// i.e. with the base role and the direction flipped.
struct AmrEdge {
  std::string source;
  std::string target;
  std::string role;

  auto operator<=>(const AmrEdge&) const = default;
};

/// Rooted concept graph of one EDU. Nodes keep their order of first
/// definition in the source text.
struct AmrGraph {
  std::string root;
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;
  std::size_t edu_id = 0;

  const AmrNode* find(std::string_view variable) const;
};

/// Parses one PENMAN expression. Concepts and constants may carry a `~N` or
/// `~e.N` alignment suffix naming a 0-based token of the EDU. Quoted strings,
/// numbers and bare symbols that are not defined variables become dummy
/// nodes whose concept is the literal; they receive fresh variables.
/// Throws ParseError with the byte offset on malformed input.
AmrGraph parse_penman(std::string_view text, std::size_t edu_id);

/// Canonical PENMAN text: at each node the incident unused edges are emitted
/// sorted by role string, then by the other endpoint's variable.
/// Throws IntegrityError when a node is not reachable from the root.
std::string serialize_penman(const AmrGraph& g);

/// Node variables in the order serialize_penman defines them.
std::vector<std::string> serialization_order(const AmrGraph& g);

/// token_index -> variable for every word-aligned node.
std::map<std::size_t, std::string> word_nodes(const AmrGraph& g);

/// True when both graphs have the same root, the same nodes (by variable,
/// with all fields) and the same multiset of edges.
bool isomorphic(const AmrGraph& a, const AmrGraph& b);

/// Reads a `.amr` sidecar: one PENMAN expression per line in EDU order;
/// blank and '#' lines are skipped.
std::vector<AmrGraph> read_amr_file(const std::string& path);
std::vector<AmrGraph> parse_amr_lines(std::string_view text,
                                      const std::string& source_name);

}  // namespace s3

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s3/amr.hpp"
#include "s3/rst.hpp"

namespace s3 {

/// A = text span (RST internal node), B = EDU (RST leaf), C = word level.
enum class NodeType { TextSpan, Edu, Word, Dummy };

enum class EdgeOrigin { Rst, Amr, RstAmr, Reverse, Self };

std::string_view to_string(NodeType t);
std::string_view to_string(EdgeOrigin o);

inline constexpr std::string_view kRstAmrLabel = "RST-AMR";
inline constexpr std::string_view kSelfLabel = "self";
inline constexpr std::string_view kReversePrefix = "rev:";
inline constexpr std::string_view kEmptyAmrConcept = "amr-empty";

struct S3Node {
  std::size_t id = 0;
  NodeType type = NodeType::Word;
  std::string label;
  std::optional<std::size_t> edu;
  /// Global token position in the document (words only).
  std::optional<std::size_t> token;
  /// Inclusive EDU range covered by a text-span node.
  std::optional<std::pair<std::size_t, std::size_t>> span;
  /// Word node added for a token the AMR did not align.
  bool rest_word = false;
  /// Source AMR variable, empty for RST and rest-word nodes.
  std::string amr_var;

  bool operator==(const S3Node&) const = default;
};

struct S3Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::string label;
  EdgeOrigin origin = EdgeOrigin::Rst;

  bool operator==(const S3Edge&) const = default;
};

/// Unified discourse graph. `edges` holds base edges only (RST, AMR and
/// RST-AMR); reverse edges and self loops are added by to_adjacency.
/// Nodes are kept sorted by id; after pruning ids are no longer contiguous.
struct S3Graph {
  std::string doc_id;
  std::vector<S3Node> nodes;
  std::vector<S3Edge> edges;
  std::size_t root = 0;

  /// Position of node `id` in `nodes`.
  std::optional<std::size_t> position(std::size_t id) const;
  const S3Node& node(std::size_t id) const;
  std::size_t count(NodeType t) const;

  bool operator==(const S3Graph&) const = default;
};

/// Assembles the graph from an RST tree and one AMR per EDU.
/// Node ids: text spans in post-order, EDUs by id, each EDU's AMR nodes in
/// canonical serialization order, then rest words by token position.
S3Graph build_s3(const Document& d, const RstTree& t, const std::vector<AmrGraph>& amrs);

/// Per-node flag: reachable from the root over base edges (either
/// direction). An AMR component of an EDU that holds no word node has no
/// edge to the EDU node; its nodes count as anchored through their EDU.
std::vector<bool> anchored_nodes(const S3Graph& g);
/// Same, with the word-less AMR components taken from another graph
/// (the graph before pruning).
std::vector<bool> anchored_nodes(const S3Graph& g, const std::vector<std::size_t>& orphans);
/// Ids of nodes in AMR components that contain no word node.
std::vector<std::size_t> orphan_amr_nodes(const S3Graph& g);
bool is_anchored(const S3Graph& g);

/// Symmetric 0/1 adjacency with unit diagonal over node positions.
struct AdjacencyView {
  std::size_t n = 0;
  std::vector<std::uint8_t> mask;   // n*n
  std::vector<int> label_index;     // n*n, -1 where mask is 0
  std::vector<std::string> labels;  // graph-local label table
  /// Per row: (column, label id) for every set entry, ascending column.
  std::vector<std::vector<std::pair<std::size_t, int>>> neighbors;

  bool at(std::size_t i, std::size_t j) const { return mask[i * n + j] != 0; }
  int label(std::size_t i, std::size_t j) const { return label_index[i * n + j]; }
};

/// When two edges join the same ordered pair, the first one in edge order
/// keeps the label.
AdjacencyView to_adjacency(const S3Graph& g);

struct NodeStats {
  double text_span = 0;
  double edu = 0;
  double amr_word = 0;
  double rest_word = 0;
  double dummy = 0;
};

NodeStats node_stats(const S3Graph& g);

std::string serialize_s3(const S3Graph& g);
S3Graph parse_s3(std::string_view line);
std::vector<S3Graph> read_s3_file(const std::string& path);
void write_s3_file(const std::string& path, const std::vector<S3Graph>& graphs);

}  // namespace s3

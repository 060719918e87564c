#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s3 {

struct Edu {
  std::size_t id = 0;
  std::string text;
  std::vector<std::string> tokens;
};

struct Document {
  std::string id;
  std::vector<Edu> edus;
  std::string headline;
  std::vector<std::string> headline_tokens;

  std::size_t token_count() const;
  /// Global position of the first token of each EDU.
  std::vector<std::size_t> token_offsets() const;
};

enum class Nuclearity { Nucleus, Satellite };

char nuclearity_code(Nuclearity n);

/// Binary discourse tree. Leaves carry an EDU id; internal nodes carry the
/// relation and the nuclearity of their two children.
struct RstTree {
  std::optional<std::size_t> edu;
  std::string relation;
  std::array<Nuclearity, 2> nuclearity{Nuclearity::Nucleus, Nuclearity::Nucleus};
  std::vector<RstTree> children;

  bool is_leaf() const { return edu.has_value(); }
  std::size_t leaf_count() const;
  /// EDU ids in left-to-right order.
  std::vector<std::size_t> leaves() const;

  static RstTree leaf(std::size_t edu_id);
  static RstTree internal(std::string relation,
                          std::array<Nuclearity, 2> nuclearity, RstTree left,
                          RstTree right);

  bool operator==(const RstTree&) const = default;
};

struct RstSpan {
  std::size_t span_id = 0;
  std::size_t first_edu = 0;
  std::size_t last_edu = 0;
  std::string relation;
  std::array<Nuclearity, 2> nuclearity{};
};

/// Parses and validates one tree record. Errors name the node path, e.g.
/// "root.children[1]".
RstTree parse_rst(std::string_view text);
/// Validates an already-built tree (same rules as parse_rst).
void validate_rst(const RstTree& t);
std::string serialize_rst(const RstTree& t);

/// Internal nodes in post-order; span_id is the post-order index.
std::vector<RstSpan> enumerate_spans(const RstTree& t);

/// Throws ValidationError unless the tree has one leaf per EDU of `d`.
void validate_against(const RstTree& t, const Document& d);

/// One JSON record per line.
std::vector<Document> read_docs_file(const std::string& path);
std::vector<Document> parse_docs_lines(std::string_view text,
                                       const std::string& source_name);
std::string serialize_doc(const Document& d);
RstTree read_rst_file(const std::string& path);

}  // namespace s3

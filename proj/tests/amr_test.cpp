#include <gtest/gtest.h>

#include <string>

#include "s3/amr.hpp"
#include "s3/error.hpp"

namespace s3 {
namespace {

const char* const kBoyGirl =
    "(d / desire-01~0 :ARG0 (b / boy~1) :ARG1 (b2 / believe-01~3 :ARG0 (g / girl~2) :ARG1 b))";

std::size_t count_of(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = haystack.find(needle); p != std::string::npos; p = haystack.find(needle, p + 1)) ++n;
  return n;
}

TEST(ParsePenman, BoyGirlExample) {
  const AmrGraph g = parse_penman(kBoyGirl, 0);
  EXPECT_EQ(g.root, "d");
  EXPECT_EQ(g.nodes.size(), 4u);
  EXPECT_EQ(g.edges.size(), 4u);
  std::size_t into_b = 0;
  for (const auto& e : g.edges) into_b += e.target == "b";
  EXPECT_EQ(into_b, 2u);  // one reentrancy
  for (const auto& n : g.nodes) EXPECT_EQ(n.kind, AmrNodeKind::WordAligned);
}

TEST(ParsePenman, SingleDummyNode) {
  const AmrGraph g = parse_penman("(a / and)", 3);
  ASSERT_EQ(g.nodes.size(), 1u);
  EXPECT_EQ(g.nodes[0].kind, AmrNodeKind::Dummy);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.edu_id, 3u);
}

TEST(ParsePenman, TruncatedInputReportsEnd) {
  const std::string text = "(a / ";
  try {
    parse_penman(text, 0);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), text.size());
  }
}

TEST(ParsePenman, InverseRoleIsNormalized) {
  const AmrGraph g = parse_penman("(b / boy :ARG0-of (w / want-01))", 0);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].source, "w");
  EXPECT_EQ(g.edges[0].target, "b");
  EXPECT_EQ(g.edges[0].role, ":ARG0");
}

TEST(ParsePenman, ConstantsBecomeDummyNodes) {
  const AmrGraph g = parse_penman("(c / city :name (n / name :op1 \"Paris\") :quant 3)", 0);
  EXPECT_EQ(g.nodes.size(), 4u);
  for (const auto& n : g.nodes) EXPECT_EQ(n.kind, AmrNodeKind::Dummy);
}

TEST(ParsePenman, AcceptsPrefixedAlignment) {
  const AmrGraph g = parse_penman("(b / boy~e.2)", 0);
  ASSERT_TRUE(g.nodes[0].token_index.has_value());
  EXPECT_EQ(*g.nodes[0].token_index, 2u);
}

TEST(SerializePenman, RoundTrip) {
  for (const char* text : {kBoyGirl, "(a / and)", "(b / boy :ARG0-of (w / want-01 :polarity -))",
                           "(c / city :name (n / name :op1 \"New York\"))"}) {
    const AmrGraph g1 = parse_penman(text, 0);
    const std::string s = serialize_penman(g1);
    const AmrGraph g2 = parse_penman(s, 0);
    EXPECT_TRUE(isomorphic(g1, g2)) << text;
    EXPECT_EQ(serialize_penman(g2), s);
  }
}

TEST(SerializePenman, SingleNode) {
  EXPECT_EQ(serialize_penman(parse_penman("(a / and)", 0)), "(a / and)");
}

TEST(SerializePenman, OneDefinitionPerVariable) {
  const std::string s = serialize_penman(parse_penman(kBoyGirl, 0));
  EXPECT_EQ(count_of(s, "/ boy"), 1u);
  EXPECT_EQ(count_of(s, "/ "), 4u);
}

TEST(WordNodes, MapsTokensToVariables) {
  const auto m = word_nodes(parse_penman(kBoyGirl, 0));
  const std::map<std::size_t, std::string> expect{{0, "d"}, {1, "b"}, {2, "g"}, {3, "b2"}};
  EXPECT_EQ(m, expect);
}

TEST(WordNodes, AllDummyGraphIsEmpty) {
  EXPECT_TRUE(word_nodes(parse_penman("(a / and :op1 (p / person))", 0)).empty());
}

TEST(WordNodes, ConflictingAlignmentsFail) {
  EXPECT_THROW(word_nodes(parse_penman("(a / run~1 :ARG0 (b / boy~1))", 0)), ValidationError);
}

TEST(ParseAmrLines, SkipsBlankAndCommentLines) {
  const auto gs = parse_amr_lines("# comment\n(a / and)\n\n(b / boy~0)\n", "inline");
  ASSERT_EQ(gs.size(), 2u);
  EXPECT_EQ(gs[1].edu_id, 1u);
}

}  // namespace
}  // namespace s3

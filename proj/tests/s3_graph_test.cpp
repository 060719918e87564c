#include <gtest/gtest.h>

#include <map>

#include "fixtures.hpp"
#include "s3/error.hpp"
#include "s3/s3_graph.hpp"

namespace s3 {
namespace {

using testing::two_edu_graph;

TEST(BuildS3, TwoEduExampleCounts) {
  const S3Graph g = two_edu_graph();
  EXPECT_EQ(g.nodes.size(), 11u);
  EXPECT_EQ(g.edges.size(), 13u);
  EXPECT_EQ(g.count(NodeType::TextSpan), 1u);
  EXPECT_EQ(g.count(NodeType::Edu), 2u);
  EXPECT_EQ(g.count(NodeType::Word), 7u);
  EXPECT_EQ(g.count(NodeType::Dummy), 1u);
  std::map<EdgeOrigin, int> origins;
  for (const auto& e : g.edges) ++origins[e.origin];
  EXPECT_EQ(origins[EdgeOrigin::Rst], 2);
  EXPECT_EQ(origins[EdgeOrigin::Amr], 4);
  EXPECT_EQ(origins[EdgeOrigin::RstAmr], 7);
  for (const auto& e : g.edges) {
    if (e.origin == EdgeOrigin::RstAmr) EXPECT_EQ(e.label, kRstAmrLabel);
  }
  EXPECT_EQ(g.root, g.nodes[0].id);
  EXPECT_EQ(g.nodes[0].type, NodeType::TextSpan);
}

TEST(BuildS3, EveryTokenOwnedByOneWordNode) {
  const S3Graph g = two_edu_graph();
  std::vector<int> owners(7, 0);
  for (const auto& n : g.nodes) {
    if (n.type == NodeType::Word) ++owners.at(*n.token);
  }
  for (int c : owners) EXPECT_EQ(c, 1);
}

TEST(BuildS3, FullyAlignedSingleEdu) {
  Document d;
  d.id = "one";
  d.edus.push_back({0, "boy runs", {"boy", "runs"}});
  d.headline_tokens = {"boy"};
  const S3Graph g =
      build_s3(d, RstTree::leaf(0), {parse_penman("(r / run-01~1 :ARG0 (b / boy~0))", 0)});
  EXPECT_EQ(g.nodes.size(), 3u);  // one EDU node plus two AMR nodes
  for (const auto& n : g.nodes) EXPECT_FALSE(n.rest_word);
  EXPECT_EQ(g.root, g.nodes[0].id);
}

TEST(BuildS3, EmptyAmrPlaceholderMakesRestWords) {
  Document d;
  d.id = "one";
  d.edus.push_back({0, "a b c", {"a", "b", "c"}});
  d.headline_tokens = {"a"};
  const S3Graph g = build_s3(d, RstTree::leaf(0), {parse_penman("(x / amr-empty)", 0)});
  EXPECT_EQ(g.nodes.size(), 4u);
  EXPECT_EQ(g.count(NodeType::Dummy), 0u);
  for (const auto& n : g.nodes) {
    if (n.type == NodeType::Word) EXPECT_TRUE(n.rest_word);
  }
}

TEST(BuildS3, AmrCountMismatchFails) {
  EXPECT_THROW(build_s3(testing::two_edu_document(), testing::two_edu_tree(),
                        {parse_penman("(a / and)", 0)}),
               ValidationError);
}

TEST(Adjacency, TwoEduExample) {
  const AdjacencyView a = to_adjacency(two_edu_graph());
  ASSERT_EQ(a.n, 11u);
  std::size_t diag = 0, off = 0;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) {
      if (a.at(i, j)) ++(i == j ? diag : off);
      EXPECT_EQ(a.at(i, j), a.at(j, i));
      EXPECT_EQ(a.at(i, j), a.label(i, j) >= 0);
    }
  }
  EXPECT_EQ(diag, 11u);
  EXPECT_EQ(off, 26u);
}

TEST(Adjacency, SingleNode) {
  Document d;
  d.id = "one";
  d.edus.push_back({0, "", {}});
  S3Graph g;
  g.doc_id = "one";
  g.nodes.push_back({});
  g.nodes[0].type = NodeType::Edu;
  const AdjacencyView a = to_adjacency(g);
  ASSERT_EQ(a.n, 1u);
  EXPECT_TRUE(a.at(0, 0));
  EXPECT_EQ(a.labels.at(a.label(0, 0)), kSelfLabel);
}

TEST(Adjacency, SymmetricOnSyntheticGraphs) {
  for (const auto& s : testing::synth_samples(30, 4)) {
    const AdjacencyView a = to_adjacency(s.graph);
    for (std::size_t i = 0; i < a.n; ++i) {
      EXPECT_TRUE(a.at(i, i));
      for (std::size_t j = 0; j < a.n; ++j) EXPECT_EQ(a.at(i, j), a.at(j, i));
    }
  }
}

TEST(Adjacency, ReverseLabelsMirrorBaseLabels) {
  const S3Graph g = two_edu_graph();
  const AdjacencyView a = to_adjacency(g);
  for (const auto& e : g.edges) {
    const auto s = *g.position(e.src), t = *g.position(e.dst);
    EXPECT_EQ(a.labels[a.label(s, t)], e.label);
    EXPECT_EQ(a.labels[a.label(t, s)], std::string(kReversePrefix) + e.label);
  }
}

TEST(NodeStats, TwoEduExample) {
  const NodeStats st = node_stats(two_edu_graph());
  EXPECT_NEAR(st.text_span, 1.0 / 11, 1e-12);
  EXPECT_NEAR(st.edu, 2.0 / 11, 1e-12);
  EXPECT_NEAR(st.amr_word, 4.0 / 11, 1e-12);
  EXPECT_NEAR(st.rest_word, 3.0 / 11, 1e-12);
  EXPECT_NEAR(st.dummy, 1.0 / 11, 1e-12);
}

TEST(NodeStats, SingleEduNode) {
  S3Graph g;
  g.nodes.push_back({});
  g.nodes[0].type = NodeType::Edu;
  const NodeStats st = node_stats(g);
  EXPECT_EQ(st.edu, 1.0);
  EXPECT_EQ(st.text_span + st.amr_word + st.rest_word + st.dummy, 0.0);
}

TEST(Anchoring, WordlessAmrComponentCountsAsAnchored) {
  const S3Graph g = two_edu_graph();
  EXPECT_TRUE(is_anchored(g));
  EXPECT_EQ(orphan_amr_nodes(g).size(), 1u);
}

TEST(S3File, SerializeParseRoundTrip) {
  const S3Graph g = two_edu_graph();
  EXPECT_EQ(parse_s3(serialize_s3(g)), g);
}

}  // namespace
}  // namespace s3

#include <gtest/gtest.h>

#include <cmath>

#include "s3/metrics.hpp"

namespace s3 {
namespace {

Tokens toks(std::initializer_list<const char*> words) {
  Tokens t;
  for (const char* w : words) t.emplace_back(w);
  return t;
}

TEST(RougeN, IdentityIsOne) {
  const Tokens a = toks({"police", "kill", "the", "gunman"});
  EXPECT_DOUBLE_EQ(rouge_n(a, a, 1).f1, 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(a, a, 2).f1, 1.0);
}

TEST(RougeN, PoliceExample) {
  const Prf r = rouge_n(toks({"police", "kill", "the", "gunman"}),
                        toks({"police", "killed", "the", "gunman"}), 1);
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.f1, 0.75);
}

TEST(RougeN, DisjointAndEmptyAreZero) {
  EXPECT_EQ(rouge_n(toks({"a", "b"}), toks({"c", "d"}), 1).f1, 0.0);
  EXPECT_EQ(rouge_n(toks({"a"}), toks({"a"}), 2).f1, 0.0);
  EXPECT_EQ(rouge_n({}, toks({"a"}), 1).f1, 0.0);
}

TEST(RougeN, CountsAreClipped) {
  const Prf r = rouge_n(toks({"the", "the", "the"}), toks({"the", "cat"}), 1);
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

TEST(RougeL, PoliceExample) {
  const Tokens c = toks({"police", "kill", "the", "gunman"});
  const Tokens r = toks({"police", "killed", "the", "gunman"});
  EXPECT_EQ(lcs_length(c, r), 3u);
  EXPECT_DOUBLE_EQ(rouge_l(c, r).f1, 0.75);
}

TEST(RougeL, SubstringHasFullPrecision) {
  const Prf r = rouge_l(toks({"kill", "the"}), toks({"police", "kill", "the", "gunman"}));
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
}

TEST(RougeL, EmptyCandidateIsZero) { EXPECT_EQ(rouge_l({}, toks({"a"})).f1, 0.0); }

TEST(Bleu, IdentityIsOneAtEveryOrder) {
  const Tokens a = toks({"police", "kill", "the", "gunman", "today"});
  for (double b : bleu(a, {a})) EXPECT_NEAR(b, 1.0, 1e-12);
}

TEST(Bleu, ShortIdentityUsesAvailableOrders) {
  const Tokens a = toks({"boy", "desires"});
  for (double b : bleu(a, {a})) EXPECT_NEAR(b, 1.0, 1e-12);
}

TEST(Bleu, ClippedUnigramPrecision) {
  EXPECT_DOUBLE_EQ(clipped_precision(toks({"the", "the", "the"}), {toks({"the", "cat"})}, 1),
                   1.0 / 3.0);
}

TEST(Bleu, BrevityPenaltyForShortCandidate) {
  const Tokens ref = toks({"police", "kill", "the", "gunman"});
  const Tokens cand = toks({"police", "kill", "the"});
  const auto b = bleu(cand, {ref});
  EXPECT_NEAR(b[0], std::exp(1.0 - 4.0 / 3.0), 1e-12);
  EXPECT_LT(b[0], 1.0);
}

TEST(Bleu, HandComputedBleuTwo) {
  // p1 = 3/4, p2 = 1/3, no brevity penalty.
  const auto b = bleu(toks({"police", "kill", "the", "gunman"}),
                      {toks({"police", "killed", "the", "gunman"})});
  EXPECT_NEAR(b[1], std::sqrt(0.75 * (1.0 / 3.0)), 1e-12);
  EXPECT_EQ(b[2], 0.0);
}

TEST(Bleu, ClosestReferenceLength) {
  const Tokens cand = toks({"a", "b", "c"});
  const auto b = bleu(cand, {toks({"a", "b", "c", "d", "e", "f"}), toks({"a", "b", "c", "x"})});
  EXPECT_NEAR(b[0], std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Meteor, BoundsAndDisjoint) {
  const Tokens a = toks({"police", "kill", "the", "gunman"});
  const double m = meteor_exact(a, a);
  EXPECT_GT(m, 0.9);
  EXPECT_LE(m, 1.0);
  EXPECT_EQ(meteor_exact(a, toks({"x", "y"})), 0.0);
}

TEST(Report, ScorePairFoldsCase) {
  const MetricReport r = score_pair(toks({"Police", "KILL"}), toks({"police", "kill"}));
  EXPECT_DOUBLE_EQ(r.rouge1.f1, 1.0);
  EXPECT_FALSE(r.meteor.has_value());
  EXPECT_NEAR(r.average(), 1.0, 1e-12);
}

TEST(Report, AverageOfEmptyIsZero) {
  const MetricReport r = average_reports({});
  EXPECT_EQ(r.average(), 0.0);
}

TEST(Report, TableHasEveryColumn) {
  const std::string t = format_report_table(score_pair(toks({"a"}), toks({"a"})), "corpus");
  for (const char* col : {"BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-1", "ROUGE-2",
                          "ROUGE-L", "METEOR", "Avg", "corpus"}) {
    EXPECT_NE(t.find(col), std::string::npos) << col;
  }
}

TEST(Metrics, BoundedOnRandomPairs) {
  const Tokens pool = toks({"a", "b", "c", "d", "e"});
  std::uint64_t x = 12345;
  auto next = [&] { return (x = x * 6364136223846793005ULL + 1442695040888963407ULL) >> 33; };
  for (int i = 0; i < 200; ++i) {
    Tokens c, r;
    for (std::size_t k = next() % 7; k > 0; --k) c.push_back(pool[next() % pool.size()]);
    for (std::size_t k = 1 + next() % 6; k > 0; --k) r.push_back(pool[next() % pool.size()]);
    const MetricReport m = score_pair(c, r, true);
    for (double v : {m.rouge1.f1, m.rouge2.f1, m.rougeL.f1, *m.meteor}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (double v : m.bleu) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
  }
}

}  // namespace
}  // namespace s3

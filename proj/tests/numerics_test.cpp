#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "s3/error.hpp"
#include "s3/numerics.hpp"

namespace s3 {
namespace {

TEST(Softmax, SymmetricInputGivesUniform) {
  Tensor x({2}, std::vector<double>{0.0, 0.0});
  Tensor y = softmax_stable(x, 0);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
}

TEST(Softmax, LargeInputStaysFinite) {
  Tensor y = softmax_stable(Tensor({2}, std::vector<double>{1000.0, 0.0}), 0);
  EXPECT_TRUE(y.all_finite());
  EXPECT_NEAR(y[0], 1.0, 1e-12);
  EXPECT_NEAR(y[1], 0.0, 1e-12);
}

TEST(Softmax, ShiftInvariant) {
  Rng rng(3);
  Tensor x = Tensor::matrix(4, 5);
  for (auto& v : x.data()) v = rng.uniform(-3.0, 3.0);
  for (double c : {-50.0, 0.25, 700.0}) {
    Tensor shifted = x;
    for (auto& v : shifted.data()) v += c;
    Tensor a = softmax_stable(x, 1), b = softmax_stable(shifted, 1);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(Softmax, RejectsNonFinite) {
  Tensor x({2}, std::vector<double>{NAN, 0.0});
  EXPECT_THROW(softmax_stable(x, 0), NumericError);
}

TEST(Sigmoid, Basics) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  for (double x : {-7.5, -1.0, 0.3, 4.0, 30.0}) {
    EXPECT_NEAR(sigmoid(x), 1.0 - sigmoid(-x), 1e-12);
  }
  const double s = sigmoid(100.0);
  EXPECT_GT(s, 1.0 - 1e-9);
  EXPECT_LE(s, 1.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
}

TEST(FiniteDiff, QuadraticIsExact) {
  ParamStore p;
  p.add("theta", Tensor({1}, std::vector<double>{3.0}));
  ParamStore g;
  g.add("theta", Tensor({1}, std::vector<double>{6.0}));
  auto f = [](const ParamStore& q) { return q.at("theta")[0] * q.at("theta")[0]; };
  EXPECT_LT(finite_diff_check(f, p, g, 1e-3).max_rel_error, 1e-6);
}

TEST(FiniteDiff, DoubledGradientReportsHalf) {
  ParamStore p;
  p.add("theta", Tensor({1}, std::vector<double>{3.0}));
  ParamStore g;
  g.add("theta", Tensor({1}, std::vector<double>{12.0}));
  auto f = [](const ParamStore& q) { return q.at("theta")[0] * q.at("theta")[0]; };
  EXPECT_NEAR(finite_diff_check(f, p, g, 1e-3).max_rel_error, 0.5, 1e-6);
}

TEST(FiniteDiff, FilterLimitsCheckedParameters) {
  ParamStore p;
  p.add("a", Tensor({2}, 1.0));
  p.add("b", Tensor({3}, 1.0));
  ParamStore g = p.zeros_like();
  auto f = [](const ParamStore&) { return 0.0; };
  auto r = finite_diff_check(f, p, g, 1e-3, [](const std::string& n) { return n == "b"; });
  EXPECT_EQ(r.checked, 3u);
}

TEST(Gaussian, ZeroStdGivesMean) {
  Rng rng(7);
  EXPECT_EQ(gaussian_draw(rng, 0.0, 0.0), 0.0);
}

TEST(Gaussian, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(gaussian_draw(a, 0.0, 1.0), gaussian_draw(b, 0.0, 1.0));
}

TEST(Gaussian, MomentsOverManyDraws) {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian_draw(rng, 0.0, 1.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sd, 1.0, 0.02);
}

TEST(Rng, SplitIsIndependentOfParentPosition) {
  Rng a(5);
  Rng child1 = a.split(9);
  a.next_u64();
  Rng child2 = Rng(5).split(9);
  EXPECT_EQ(child1.next_u64(), child2.next_u64());
  EXPECT_NE(Rng(5).split(1).next_u64(), Rng(5).split(2).next_u64());
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng rng(1);
  bool lo = false, hi = false;
  for (int i = 0; i < 1000; ++i) {
    auto v = rng.uniform_int(2, 4);
    ASSERT_GE(v, 2);
    ASSERT_LE(v, 4);
    lo |= v == 2;
    hi |= v == 4;
  }
  EXPECT_TRUE(lo && hi);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(13);
  ParamStore p(77);
  p.add_uniform("w", {3, 4}, 4, rng);
  p.add("b", Tensor({2}, std::vector<double>{1.0 / 3.0, -2e-300}));
  std::stringstream ss;
  write_checkpoint(ss, p);
  ParamStore q = read_checkpoint(ss);
  EXPECT_TRUE(p == q);
  EXPECT_EQ(q.seed(), 77u);
}

TEST(Checkpoint, TruncatedInputFails) {
  ParamStore p;
  p.add("w", Tensor({4}, 0.5));
  std::stringstream ss;
  write_checkpoint(ss, p);
  std::string text = ss.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(cut), Error);
}

TEST(ParamStore, KeepsInsertionOrderAndRejectsDuplicates) {
  ParamStore p;
  p.add("z", Tensor({1}));
  p.add("a", Tensor({1}));
  std::vector<std::string> names;
  for (const auto& [n, t] : p) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"z", "a"}));
  EXPECT_THROW(p.add("z", Tensor({1})), Error);
}

}  // namespace
}  // namespace s3

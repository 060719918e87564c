#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace s3 {

/// Dense row-major array of doubles. Rank 1 tensors behave as a single row
/// in the matrix helpers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::size_t n, double fill = 0.0) {
    return Tensor({n}, fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols(), cols()};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  bool is_zero() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Counter-based SplitMix64 stream. The state advances by a fixed odd
/// constant per draw and every output is a bijective mix of the state, so the
/// sequence depends only on the seed and is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer uniform in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal();
  /// Independent child stream keyed by `stream`; does not advance this one.
  Rng split(std::uint64_t stream) const;

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Returns mean + std * z with z ~ N(0, 1) drawn from `rng`.
double gaussian_draw(Rng& rng, double mean, double std);

/// Named, insertion-ordered set of tensors. Used both for trainable
/// parameters and for their gradients.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  Tensor& add(const std::string& name, Tensor value);
  /// Adds a tensor drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor& add_uniform(const std::string& name, std::vector<std::size_t> shape,
                      std::size_t fan_in, Rng& rng);

  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Same names and shapes, all values zero.
  ParamStore zeros_like() const;
  /// Entries whose name starts with `prefix`, zero-filled.
  ParamStore zeros_like(const std::string& prefix) const;
  /// this += scale * other for every name present in both.
  void add_scaled(const ParamStore& other, double scale);
  void scale(double s);
  double squared_norm() const;

  bool operator==(const ParamStore& o) const {
    return seed_ == o.seed_ && entries_ == o.entries_;
  }

 private:
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Writes the text checkpoint: a header line with format version, seed and
/// entry count, then per entry a "name rank dims..." line followed by one
/// line of values printed with 17 significant digits.
void write_checkpoint(std::ostream& out, const ParamStore& params);
ParamStore read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ParamStore& params);
ParamStore load_checkpoint(const std::string& path);

// ---- elementwise and reduction ops --------------------------------------

/// Softmax along `axis` with max subtraction. Throws NumericError on
/// non-finite input.
Tensor softmax_stable(const Tensor& x, std::size_t axis);
Tensor sigmoid(const Tensor& x);
double sigmoid(double x);

// ---- finite-difference oracle -------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

using ScalarFn = std::function<double(const ParamStore&)>;

/// Compares `analytic` against central differences of `f` for every scalar
/// of every parameter accepted by `filter` (all parameters when empty).
/// Relative error uses max(|a|, |n|, 1e-8) as denominator.
GradCheckReport finite_diff_check(
    const ScalarFn& f, const ParamStore& params, const ParamStore& analytic,
    double epsilon,
    const std::function<bool(const std::string&)>& filter = {});

}  // namespace s3

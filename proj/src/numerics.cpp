#include "s3/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "s3/error.hpp"

namespace s3 {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {
  for (auto d : shape_) {
    if (d == 0) throw ValidationError("tensor dimensions must be positive");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw ValidationError("tensor dimensions must be positive");
  }
  if (product(shape_) != data_.size()) {
    throw ValidationError("tensor data size does not match shape");
  }
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Tensor::is_zero() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return v == 0.0; });
}

// ---- Rng ------------------------------------------------------------------

std::uint64_t Rng::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ValidationError("uniform_int: empty range");
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());
  // Rejection sampling keeps the draw unbiased.
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + static_cast<std::int64_t>(v % span);
}

double Rng::normal() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix64(state_ ^ mix64(stream + kGamma)));
}

double gaussian_draw(Rng& rng, double mean, double std) {
  if (std < 0) throw ValidationError("gaussian_draw: negative std");
  double z = rng.normal();
  if (std == 0.0) return mean;
  return mean + std * z;
}

// ---- ParamStore -------------------------------------------------------------

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) {
    throw ValidationError("duplicate parameter name: " + name);
  }
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(value));
  return entries_.back().second;
}

Tensor& ParamStore::add_uniform(const std::string& name,
                                std::vector<std::size_t> shape,
                                std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return add(name, std::move(t));
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
  return entries_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
  return entries_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

ParamStore ParamStore::zeros_like() const { return zeros_like(""); }

ParamStore ParamStore::zeros_like(const std::string& prefix) const {
  ParamStore out(seed_);
  for (const auto& [name, t] : entries_) {
    if (name.rfind(prefix, 0) == 0) out.add(name, Tensor(t.shape()));
  }
  return out;
}

void ParamStore::add_scaled(const ParamStore& other, double scale) {
  for (const auto& [name, t] : other) {
    auto it = index_.find(name);
    if (it == index_.end()) continue;
    auto& dst = entries_[it->second].second.data();
    const auto& src = t.data();
    if (dst.size() != src.size()) {
      throw IntegrityError("shape mismatch in add_scaled: " + name);
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

void ParamStore::scale(double s) {
  for (auto& [_, t] : entries_) {
    for (auto& v : t.data()) v *= s;
  }
}

double ParamStore::squared_norm() const {
  double n = 0.0;
  for (const auto& [_, t] : entries_) {
    for (double v : t.data()) n += v * v;
  }
  return n;
}

// ---- checkpoint -------------------------------------------------------------

namespace {
constexpr const char* kCheckpointMagic = "s3-params";
constexpr int kCheckpointVersion = 1;
}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& params) {
  out << kCheckpointMagic << " version=" << kCheckpointVersion
      << " seed=" << params.seed() << " count=" << params.size() << "\n";
  char buf[40];
  for (const auto& [name, t] : params) {
    out << name << " " << t.rank();
    for (auto d : t.shape()) out << " " << d;
    out << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << "\n";
  }
}

ParamStore read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint", 0);
  std::istringstream header(line);
  std::string magic, version, seed, count;
  header >> magic >> version >> seed >> count;
  if (magic != kCheckpointMagic ||
      version != "version=" + std::to_string(kCheckpointVersion) ||
      seed.rfind("seed=", 0) != 0 || count.rfind("count=", 0) != 0) {
    throw ParseError("bad checkpoint header: " + line, 0);
  }
  ParamStore params(std::stoull(seed.substr(5)));
  std::size_t n = std::stoull(count.substr(6));
  for (std::size_t e = 0; e < n; ++e) {
    if (!std::getline(in, line)) {
      throw ParseError("truncated checkpoint at entry " + std::to_string(e), e);
    }
    std::istringstream meta(line);
    std::string name;
    std::size_t rank = 0;
    meta >> name >> rank;
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) meta >> d;
    if (!meta || name.empty()) {
      throw ParseError("bad checkpoint entry header: " + line, e);
    }
    if (!std::getline(in, line)) {
      throw ParseError("missing values for " + name, e);
    }
    std::vector<double> values;
    const char* p = line.c_str();
    char* end = nullptr;
    while (true) {
      double v = std::strtod(p, &end);
      if (end == p) break;
      values.push_back(v);
      p = end;
    }
    params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

void save_checkpoint(const std::string& path, const ParamStore& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint: " + path);
  write_checkpoint(out, params);
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read checkpoint: " + path);
  return read_checkpoint(in);
}

// ---- ops --------------------------------------------------------------------

Tensor softmax_stable(const Tensor& x, std::size_t axis) {
  const auto& shape = x.shape();
  if (axis >= shape.size()) throw ValidationError("softmax: axis out of range");
  if (!x.all_finite()) throw NumericError("softmax: non-finite input");
  std::size_t outer = 1, inner = 1, len = shape[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  Tensor y(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t base = o * len * inner + in;
      double mx = -INFINITY;
      for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, x[base + k * inner]);
      double sum = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        double e = std::exp(x[base + k * inner] - mx);
        y[base + k * inner] = e;
        sum += e;
      }
      for (std::size_t k = 0; k < len; ++k) y[base + k * inner] /= sum;
    }
  }
  return y;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = sigmoid(v);
  return y;
}

// ---- finite differences -----------------------------------------------------

GradCheckReport finite_diff_check(
    const ScalarFn& f, const ParamStore& params, const ParamStore& analytic,
    double epsilon, const std::function<bool(const std::string&)>& filter) {
  if (!(epsilon >= 1e-5 && epsilon <= 1e-2)) {
    throw ValidationError("finite_diff_check: epsilon must lie in [1e-5, 1e-2]");
  }
  double f0 = f(params);
  double f1 = f(params);
  if (f0 != f1) {
    throw NumericError("finite_diff_check: objective is not deterministic");
  }
  GradCheckReport report;
  ParamStore probe = params;
  for (const auto& [name, t] : params) {
    if (filter && !filter(name)) continue;
    const Tensor& grad = analytic.at(name);
    Tensor& slot = probe.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double orig = slot[i];
      slot[i] = orig + epsilon;
      double fp = f(probe);
      slot[i] = orig - epsilon;
      double fm = f(probe);
      slot[i] = orig;
      double numeric = (fp - fm) / (2.0 * epsilon);
      double a = grad[i];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = name;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace s3

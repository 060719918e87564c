#include "s3/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "s3/error.hpp"

namespace s3 {

Prf make_prf(double p, double r) {
  Prf out{p, r, 0.0};
  if (p + r > 0.0) out.f1 = 2.0 * p * r / (p + r);
  return out;
}

Tokens fold_case(const Tokens& tokens) {
  Tokens out = tokens;
  for (auto& t : out) {
    for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (n == 0 || t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++out[std::vector<std::string>(t.begin() + static_cast<long>(i),
                                   t.begin() + static_cast<long>(i + n))];
  }
  return out;
}

std::size_t total(const NgramCounts& c) {
  std::size_t s = 0;
  for (const auto& [g, k] : c) s += k;
  return s;
}

std::size_t overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t s = 0;
  for (const auto& [g, k] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) s += std::min(k, it->second);
  }
  return s;
}

}  // namespace

Prf rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n) {
  if (n == 0) throw ValidationError("rouge_n: n must be at least 1");
  auto c = ngrams(cand, n), r = ngrams(ref, n);
  const std::size_t tc = total(c), tr = total(r);
  if (tc == 0 || tr == 0) return {};
  const double o = static_cast<double>(overlap(c, r));
  return make_prf(o / static_cast<double>(tc), o / static_cast<double>(tr));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Prf rouge_l(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return {};
  const double l = static_cast<double>(lcs_length(cand, ref));
  return make_prf(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

double clipped_precision(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  if (n == 0) throw ValidationError("clipped_precision: n must be at least 1");
  auto c = ngrams(cand, n);
  const std::size_t tc = total(c);
  if (tc == 0) return 0.0;
  NgramCounts max_ref;
  for (const auto& r : refs) {
    for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
  }
  return static_cast<double>(overlap(c, max_ref)) / static_cast<double>(tc);
}

std::vector<double> bleu(const Tokens& cand, const std::vector<Tokens>& refs,
                         std::size_t max_n) {
  if (max_n == 0) throw ValidationError("bleu: max_n must be at least 1");
  if (refs.empty()) throw ValidationError("bleu: at least one reference is required");
  std::vector<double> out(max_n, 0.0);
  if (cand.empty()) return out;
  const double c = static_cast<double>(cand.size());
  double r = static_cast<double>(refs[0].size());
  for (const auto& ref : refs) {
    const double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) {
      r = len;
    }
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  std::vector<double> log_p(max_n);
  for (std::size_t i = 0; i < max_n; ++i) {
    double p = clipped_precision(cand, refs, i + 1);
    log_p[i] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }
  // Effective order: orders longer than the candidate have no n-grams and
  // are left out of the geometric mean instead of zeroing it.
  for (std::size_t n = 1; n <= max_n; ++n) {
    const std::size_t orders = std::min(n, cand.size());
    double s = 0.0;
    bool zero = false;
    for (std::size_t i = 0; i < orders; ++i) {
      if (std::isinf(log_p[i])) zero = true;
      s += log_p[i] / static_cast<double>(orders);
    }
    out[n - 1] = zero ? 0.0 : std::min(1.0, bp * std::exp(s));
  }
  return out;
}

double meteor_exact(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  // Greedy left-to-right alignment to the first unused matching reference token.
  std::vector<bool> used(ref.size(), false);
  std::vector<long> align(cand.size(), -1);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && cand[i] == ref[j]) {
        used[j] = true;
        align[i] = static_cast<long>(j);
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t chunks = 0;
  long prev = -2;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) {
      prev = -2;
      continue;
    }
    if (align[i] != prev + 1) ++chunks;
    prev = align[i];
  }
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / m;
  return fmean * (1.0 - 0.5 * frag * frag * frag);
}

double MetricReport::average() const {
  double s = rouge1.f1 + rouge2.f1 + rougeL.f1;
  for (double b : bleu) s += b;
  double n = 7.0;
  if (meteor) {
    s += *meteor;
    n += 1.0;
  }
  return s / n;
}

MetricReport score_pair(const Tokens& cand_raw, const Tokens& ref_raw, bool with_meteor) {
  const Tokens cand = fold_case(cand_raw), ref = fold_case(ref_raw);
  MetricReport r;
  r.rouge1 = rouge_n(cand, ref, 1);
  r.rouge2 = rouge_n(cand, ref, 2);
  r.rougeL = rouge_l(cand, ref);
  auto b = bleu(cand, {ref}, 4);
  std::copy(b.begin(), b.end(), r.bleu.begin());
  if (with_meteor) r.meteor = meteor_exact(cand, ref);
  return r;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
  MetricReport out;
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  auto acc = [n](Prf& dst, const Prf& src) {
    dst.precision += src.precision / n;
    dst.recall += src.recall / n;
    dst.f1 += src.f1 / n;
  };
  bool meteor = reports.front().meteor.has_value();
  double m = 0.0;
  for (const auto& r : reports) {
    acc(out.rouge1, r.rouge1);
    acc(out.rouge2, r.rouge2);
    acc(out.rougeL, r.rougeL);
    for (std::size_t i = 0; i < 4; ++i) out.bleu[i] += r.bleu[i] / n;
    meteor = meteor && r.meteor.has_value();
    if (r.meteor) m += *r.meteor / n;
  }
  if (meteor) out.meteor = m;
  return out;
}

std::string format_report_table(const MetricReport& r, const std::string& row_label) {
  static const char* kHeaders[] = {"BLEU-1",  "BLEU-2",  "BLEU-3", "BLEU-4", "ROUGE-1",
                                   "ROUGE-2", "ROUGE-L", "METEOR", "Avg"};
  std::size_t label_w = std::max<std::size_t>(row_label.size(), 6);
  std::ostringstream out;
  char buf[32];
  out << std::string(label_w, ' ');
  for (const char* h : kHeaders) {
    std::snprintf(buf, sizeof buf, " %8s", h);
    out << buf;
  }
  out << '\n' << row_label << std::string(label_w - row_label.size(), ' ');
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, " %8.2f", 100.0 * v);
    out << buf;
  };
  for (double b : r.bleu) cell(b);
  cell(r.rouge1.f1);
  cell(r.rouge2.f1);
  cell(r.rougeL.f1);
  if (r.meteor) {
    cell(*r.meteor);
  } else {
    std::snprintf(buf, sizeof buf, " %8s", "-");
    out << buf;
  }
  cell(r.average());
  out << '\n';
  return out.str();
}

}  // namespace s3

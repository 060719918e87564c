#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace s3 {

using Tokens = std::vector<std::string>;

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// F1 from precision and recall; 0 when both are 0.
Prf make_prf(double precision, double recall);

/// Lower-cases ASCII letters. Metrics never normalize on their own; callers
/// that want case-insensitive scores fold both sides first.
Tokens fold_case(const Tokens& tokens);

/// Clipped n-gram overlap. Empty n-gram sets give 0.
Prf rouge_n(const Tokens& cand, const Tokens& ref, std::size_t n);

std::size_t lcs_length(const Tokens& a, const Tokens& b);
Prf rouge_l(const Tokens& cand, const Tokens& ref);

/// Clipped modified n-gram precision against the references.
double clipped_precision(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n);

/// BLEU-1..max_n; entry n-1 holds BLEU-n. The reference length used by the
/// brevity penalty is the closest one to the candidate's length. BLEU-n for a
/// candidate shorter than n tokens averages only the orders it has.
std::vector<double> bleu(const Tokens& cand, const std::vector<Tokens>& refs,
                         std::size_t max_n = 4);

/// Exact-match METEOR: unigram harmonic mean weighted towards recall with a
/// fragmentation penalty. No stemming or synonyms.
double meteor_exact(const Tokens& cand, const Tokens& ref);

struct MetricReport {
  Prf rouge1, rouge2, rougeL;
  std::array<double, 4> bleu{};
  std::optional<double> meteor;

  /// Mean over BLEU-1..4, ROUGE-1/2/L F1 and METEOR when present.
  double average() const;
};

/// Scores one pair after case folding.
MetricReport score_pair(const Tokens& cand, const Tokens& ref, bool with_meteor = false);

/// Field-wise mean; empty input gives an all-zero report.
MetricReport average_reports(const std::vector<MetricReport>& reports);

/// Aligned table: BLEU-1 BLEU-2 BLEU-3 BLEU-4 ROUGE-1 ROUGE-2 ROUGE-L METEOR Avg,
/// as percentages. METEOR prints "-" when absent.
std::string format_report_table(const MetricReport& r, const std::string& row_label);

}  // namespace s3

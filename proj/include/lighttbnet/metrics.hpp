#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ltbn {

/// Area under the ROC curve from mid-ranks (Mann-Whitney U). Tied scores
/// earn half credit. Throws std::invalid_argument unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
  double acc = 0, f1 = 0, auc = 0, sensitivity = 0, specificity = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double threshold = 0.5;
  bool auc_defined = false;  // false when only one class is present

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// score >= threshold predicts TB. F1 is for the positive class. Ratios
/// with an empty denominator are reported as 0.
MetricsReport classify_and_report(std::span<const double> scores, std::span<const int> labels,
                                  double threshold = 0.5);
/// Report fields from a confusion matrix alone (AUC left undefined).
MetricsReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                 double threshold = 0.5);

struct TppResult {
  bool pass = false;
  double sn_margin = 0;  // sensitivity - 0.90
  double sp_margin = 0;  // specificity - 0.70
};

inline constexpr double kTppMinSensitivity = 0.90;
inline constexpr double kTppMinSpecificity = 0.70;

/// WHO triage target: SN >= 0.90 and SP >= 0.70, both inclusive.
TppResult tpp_check(const MetricsReport& report);

inline constexpr std::size_t kEnsembleSize = 5;

/// Per-sample arithmetic mean of exactly five aligned fold score vectors.
std::vector<double> ensemble_scores(std::span<const std::vector<double>> per_fold);

/// Scored samples, optionally with the individual fold scores.
struct PredictionSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::string> cohorts;                // may be empty
  std::vector<std::vector<double>> fold_scores;    // [fold][sample]
  std::vector<double> scores;                      // ensemble

  void validate() const;
};

/// sample_id,label,score_fold0..score_fold{K-1},score_ensemble
void write_prediction_csv(const std::filesystem::path& path, const PredictionSet& preds);
PredictionSet read_prediction_csv(const std::filesystem::path& path);

struct NamedReport {
  std::string name;  // e.g. "MC+SZ", "MC", "SZ"
  MetricsReport report;
};

/// Combined report followed by one report per cohort (in first-seen order),
/// all through classify_and_report.
std::vector<NamedReport> cohort_reports(const PredictionSet& preds, double threshold = 0.5);

/// subset,n,acc,f1,auc,sensitivity,specificity,tp,fp,tn,fn,threshold,f1_mode
void write_metrics_csv(const std::filesystem::path& path, const std::vector<NamedReport>& reports);
void print_metrics_table(std::ostream& os, const std::vector<NamedReport>& reports);

}  // namespace ltbn

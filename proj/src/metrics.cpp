#include "lighttbnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ltbn {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Doubled mid-ranks keep everything integral: a tie group spanning
  // sorted positions [i, j) gets rank (i+1 + j) / 2 each.
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = i + 1 + j;
    i = j;
  }
  std::uint64_t n_pos = 0, rank2_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    if (labels[i] == 1) {
      ++n_pos;
      rank2_pos += rank2[i];
    }
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: undefined unless both classes are present");
  // 2U = sum(2 * rank of positives) - n_pos (n_pos + 1)
  const std::uint64_t u2 = rank2_pos - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                 double threshold) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  r.threshold = threshold;
  auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  r.acc = ratio(static_cast<double>(tp + tn), static_cast<double>(r.total()));
  r.sensitivity = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.specificity = ratio(static_cast<double>(tn), static_cast<double>(tn + fp));
  const double precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.f1 = ratio(2.0 * precision * r.sensitivity, precision + r.sensitivity);
  return r;
}

MetricsReport classify_and_report(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty()) throw std::invalid_argument("classify_and_report: empty input");
  if (scores.size() != labels.size()) throw std::invalid_argument("classify_and_report: length mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) {
      has_pos = true;
      (pred ? tp : fn) += 1;
    } else if (labels[i] == 0) {
      has_neg = true;
      (pred ? fp : tn) += 1;
    } else {
      throw std::invalid_argument("classify_and_report: labels must be 0 or 1");
    }
  }
  auto r = report_from_counts(tp, fp, tn, fn, threshold);
  if (has_pos && has_neg) {
    r.auc = auc(scores, labels);
    r.auc_defined = true;
  }
  return r;
}

TppResult tpp_check(const MetricsReport& report) {
  TppResult t;
  t.sn_margin = report.sensitivity - kTppMinSensitivity;
  t.sp_margin = report.specificity - kTppMinSpecificity;
  t.pass = report.sensitivity >= kTppMinSensitivity && report.specificity >= kTppMinSpecificity;
  return t;
}

std::vector<double> ensemble_scores(std::span<const std::vector<double>> per_fold) {
  if (per_fold.size() != kEnsembleSize) {
    throw std::invalid_argument("ensemble_scores: expected " + std::to_string(kEnsembleSize) + " fold score vectors, got " +
                                std::to_string(per_fold.size()));
  }
  const std::size_t n = per_fold[0].size();
  for (const auto& f : per_fold) {
    if (f.size() != n) throw std::invalid_argument("ensemble_scores: fold score vectors differ in length");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (const auto& f : per_fold) s += f[i];
    out[i] = s / static_cast<double>(per_fold.size());
  }
  return out;
}

void PredictionSet::validate() const {
  const std::size_t n = ids.size();
  if (labels.size() != n || scores.size() != n || (!cohorts.empty() && cohorts.size() != n)) {
    throw std::invalid_argument("PredictionSet: column lengths differ");
  }
  for (const auto& f : fold_scores) {
    if (f.size() != n) throw std::invalid_argument("PredictionSet: fold column length differs");
  }
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("PredictionSet: duplicate sample id");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("PredictionSet: score outside [0,1]");
  }
}

namespace {

std::string fmt_score(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_simple(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_prediction_csv(const std::filesystem::path& path, const PredictionSet& preds) {
  preds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample_id,label";
  for (std::size_t k = 0; k < preds.fold_scores.size(); ++k) out << ",score_fold" << k;
  out << ",score_ensemble\n";
  for (std::size_t i = 0; i < preds.ids.size(); ++i) {
    out << preds.ids[i] << ',' << preds.labels[i];
    for (const auto& f : preds.fold_scores) out << ',' << fmt_score(f[i]);
    out << ',' << fmt_score(preds.scores[i]) << '\n';
  }
}

PredictionSet read_prediction_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty prediction table " + path.string());
  const auto header = split_simple(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label" || header.back() != "score_ensemble") {
    throw std::runtime_error("prediction table has an unexpected header");
  }
  PredictionSet p;
  const std::size_t folds = header.size() - 3;
  p.fold_scores.assign(folds, {});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_simple(line);
    if (f.size() != header.size()) throw std::runtime_error("prediction row has wrong field count");
    p.ids.push_back(f[0]);
    p.labels.push_back(std::stoi(f[1]));
    for (std::size_t k = 0; k < folds; ++k) p.fold_scores[k].push_back(std::stod(f[2 + k]));
    p.scores.push_back(std::stod(f.back()));
  }
  return p;
}

std::vector<NamedReport> cohort_reports(const PredictionSet& preds, double threshold) {
  preds.validate();
  std::vector<NamedReport> out;
  std::vector<std::string> names;
  for (const auto& c : preds.cohorts) {
    if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);
  }
  std::string combined;
  for (std::size_t i = 0; i < names.size(); ++i) combined += (i ? "+" : "") + names[i];
  out.push_back({combined.empty() ? "all" : combined, classify_and_report(preds.scores, preds.labels, threshold)});
  if (names.size() > 1) {
    for (const auto& name : names) {
      std::vector<double> s;
      std::vector<int> l;
      for (std::size_t i = 0; i < preds.ids.size(); ++i) {
        if (preds.cohorts[i] == name) {
          s.push_back(preds.scores[i]);
          l.push_back(preds.labels[i]);
        }
      }
      out.push_back({name, classify_and_report(s, l, threshold)});
    }
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<NamedReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subset,n,acc,f1,auc,sensitivity,specificity,tp,fp,tn,fn,threshold,f1_mode\n";
  out << std::setprecision(6);
  for (const auto& [name, r] : reports) {
    out << name << ',' << r.total() << ',' << r.acc << ',' << r.f1 << ',';
    if (r.auc_defined) out << r.auc;
    out << ',' << r.sensitivity << ',' << r.specificity << ',' << r.tp << ',' << r.fp << ',' << r.tn << ','
        << r.fn << ',' << r.threshold << ",positive_class\n";
  }
}

void print_metrics_table(std::ostream& os, const std::vector<NamedReport>& reports) {
  os << std::left << std::setw(10) << "subset" << std::right << std::setw(6) << "n" << std::setw(8) << "ACC"
     << std::setw(8) << "F1" << std::setw(8) << "AUC" << std::setw(8) << "SN" << std::setw(8) << "SP" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& [name, r] : reports) {
    os << std::left << std::setw(10) << name << std::right << std::setw(6) << r.total() << std::setw(8) << r.acc
       << std::setw(8) << r.f1;
    if (r.auc_defined) {
      os << std::setw(8) << r.auc;
    } else {
      os << std::setw(8) << "-";
    }
    os << std::setw(8) << r.sensitivity << std::setw(8) << r.specificity << '\n';
  }
  os.unsetf(std::ios::fixed);
}

}  // namespace ltbn

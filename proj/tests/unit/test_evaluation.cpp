#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lighttbnet/metrics.hpp"
#include "oracles.hpp"

using namespace ltbn;
namespace fs = std::filesystem;

namespace {

void random_instance(std::mt19937_64& rng, std::vector<double>& s, std::vector<int>& y) {
  const std::size_t n = 2 + rng() % 60;
  s.assign(n, 0);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng() % 12) / 11.0;  // coarse grid forces ties
    y[i] = static_cast<int>(rng() % 2);
  }
  y[0] = 0;
  y[1] = 1;
}

}  // namespace

TEST_CASE("AUC examples") {
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y) == 0.75);
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
}

TEST_CASE("AUC equals pairwise counting exactly, ties included") {
  std::mt19937_64 rng(1);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    random_instance(rng, s, y);
    CHECK(auc(s, y) == oracle::pairwise_auc(s, y));
  }
}

TEST_CASE("AUC is invariant under a strictly increasing transform") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> s(200), c(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    s[i] = u(rng);
    c[i] = s[i] * s[i] * s[i];
    y[i] = static_cast<int>(rng() % 2);
  }
  CHECK(auc(s, y) == auc(c, y));
}

TEST_CASE("AUC rejects single-class input") {
  CHECK_THROWS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}));
  CHECK_THROWS(auc(std::vector<double>{0.1}, std::vector<int>{1, 0}));
}

TEST_CASE("report from counts") {
  auto r = report_from_counts(45, 5, 40, 10);
  CHECK(r.acc == doctest::Approx(0.85));
  CHECK(r.sensitivity == doctest::Approx(45.0 / 55).epsilon(1e-12));
  CHECK(std::fabs(r.sensitivity - 0.818) < 5e-4);
  CHECK(std::fabs(r.specificity - 0.889) < 5e-4);
  CHECK(std::fabs(r.f1 - 0.857) < 5e-4);
  CHECK(r.total() == 100);
}

TEST_CASE("classify_and_report thresholds inclusively") {
  const std::vector<int> y{0, 0, 1, 1};
  auto perfect = classify_and_report(std::vector<double>{0.1, 0.2, 0.5, 0.9}, y);
  CHECK(perfect.acc == 1);
  CHECK(perfect.f1 == 1);
  CHECK(perfect.sensitivity == 1);
  CHECK(perfect.specificity == 1);
  CHECK(perfect.auc_defined);
  auto zero = classify_and_report(std::vector<double>{0.1, 0.2, 0.3, 0.4}, y, 0.0);
  CHECK(zero.sensitivity == 1);
  CHECK(zero.specificity == 0);
  CHECK_THROWS(classify_and_report(std::vector<double>{}, std::vector<int>{}));
  auto one = classify_and_report(std::vector<double>{0.7, 0.8}, std::vector<int>{1, 1});
  CHECK_FALSE(one.auc_defined);
  CHECK(one.tp == 2);
}

TEST_CASE("TPP triage check") {
  auto mk = [](double sn, double sp) {
    MetricsReport r;
    r.sensitivity = sn;
    r.specificity = sp;
    return r;
  };
  CHECK(tpp_check(mk(0.924, 0.889)).pass);
  CHECK(tpp_check(mk(0.90, 0.70)).pass);
  auto f = tpp_check(mk(0.899, 0.95));
  CHECK_FALSE(f.pass);
  CHECK(f.sn_margin < 0);
  CHECK(f.sp_margin > 0);
  CHECK_FALSE(tpp_check(mk(0.95, 0.69)).pass);
}

TEST_CASE("ensemble is the per-sample mean of five folds") {
  std::vector<std::vector<double>> f{{0.8}, {0.9}, {1.0}, {0.7}, {0.85}};
  CHECK(ensemble_scores(f)[0] == doctest::Approx(0.85).epsilon(1e-12));
  std::vector<std::vector<double>> same(5, std::vector<double>{0.1, 0.7, 0.3});
  CHECK(ensemble_scores(same) == same[0]);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> r(5, std::vector<double>(50));
  for (auto& v : r)
    for (auto& e : v) e = u(rng);
  auto e = ensemble_scores(r);
  for (std::size_t i = 0; i < 50; ++i) {
    double lo = 1, hi = 0, m = 0;
    for (const auto& v : r) lo = std::min(lo, v[i]), hi = std::max(hi, v[i]), m += v[i] / 5;
    CHECK(e[i] >= lo);
    CHECK(e[i] <= hi);
    CHECK(std::fabs(e[i] - m) < 1e-7);
  }
}

TEST_CASE("ensemble rejects wrong fold count or ragged lengths") {
  std::vector<std::vector<double>> four(4, std::vector<double>{0.5});
  CHECK_THROWS(ensemble_scores(four));
  std::vector<std::vector<double>> ragged(5, std::vector<double>{0.5});
  ragged[2].push_back(0.1);
  CHECK_THROWS(ensemble_scores(ragged));
}

TEST_CASE("prediction CSV round-trip and per-cohort reports") {
  PredictionSet p;
  p.ids = {"a", "b", "c", "d", "e", "f"};
  p.labels = {0, 1, 0, 1, 0, 1};
  p.cohorts = {"MC", "MC", "MC", "SZ", "SZ", "SZ"};
  p.fold_scores.assign(5, {0.1, 0.9, 0.6, 0.7, 0.2, 0.4});
  p.scores = ensemble_scores(p.fold_scores);
  auto dir = fs::temp_directory_path() / "ltbn_eval";
  fs::create_directories(dir);
  write_prediction_csv(dir / "p.csv", p);
  auto q = read_prediction_csv(dir / "p.csv");
  CHECK(q.ids == p.ids);
  CHECK(q.labels == p.labels);
  CHECK(q.scores == p.scores);
  CHECK(q.fold_scores.size() == 5);

  auto reps = cohort_reports(p);
  REQUIRE(reps.size() == 3);
  CHECK(reps[0].name == "MC+SZ");
  CHECK(reps[0].report.total() == 6);
  CHECK(reps[1].name == "MC");
  CHECK(reps[1].report.total() == 3);
  CHECK(reps[2].name == "SZ");
  write_metrics_csv(dir / "m.csv", reps);
  std::ifstream in(dir / "m.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("subset,n,acc,f1,auc,sensitivity,specificity", 0) == 0);
  std::ostringstream table;
  print_metrics_table(table, reps);
  CHECK(table.str().find("MC+SZ") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("prediction set validation") {
  PredictionSet p;
  p.ids = {"a", "a"};
  p.labels = {0, 1};
  p.scores = {0.1, 0.2};
  CHECK_THROWS(p.validate());
  p.ids = {"a", "b"};
  p.scores = {0.1, 1.2};
  CHECK_THROWS(p.validate());
}

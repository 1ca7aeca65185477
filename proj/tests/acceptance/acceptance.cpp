// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "json.hpp"
#include "lighttbnet/checkpoint.hpp"
#include "lighttbnet/clahe.hpp"
#include "lighttbnet/cli.hpp"
#include "lighttbnet/efficiency.hpp"
#include "lighttbnet/metrics.hpp"
#include "lighttbnet/nn_ops.hpp"
#include "lighttbnet/optim.hpp"
#include "lighttbnet/run_config.hpp"
#include "lighttbnet/training.hpp"
#include "oracles.hpp"

using namespace ltbn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kLayerGradTol = 1e-5;
constexpr double kModelGradTol = 1e-3;
constexpr double kGradRuntimeSec = 60;
constexpr int kConvCases = 50;
constexpr double kConvRelTol = 1e-5;
constexpr double kFocalCeTol = 1e-12;
constexpr double kFocalPoint = 0.173287;
constexpr double kFocalPointTol = 1e-6;
constexpr int kAucSets = 100;
constexpr std::size_t kSplitTest = 160;
constexpr std::size_t kSplitTrain = 640;
constexpr double kToyMinAuc = 0.95;
constexpr double kToyMaxSec = 600;
constexpr int kToyEpochs = 20;
constexpr int kToyPerClass = 400;
constexpr double kEnsembleMeanTol = 1e-7;
constexpr double kEnsembleAucSlack = 0.02;
constexpr int kClaheImages = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  using oracle::gradcheck;
  using oracle::random_vec;
  std::map<std::string, double> err;

  {
    auto r = TensorD::from({2, 3, 6, 6}, random_vec(2 * 3 * 36, rng));
    err["conv"] = gradcheck([&](auto& l) { return sum(conv2d(l[0], l[1], l[2], {1, 1}) * r); },
                            {{2, 2, 6, 6}, {3, 2, 3, 3}, {3}},
                            {random_vec(144, rng), random_vec(54, rng), random_vec(3, rng)});
  }
  {
    auto r = TensorD::from({3, 2, 4, 4}, random_vec(96, rng));
    err["batchnorm"] = gradcheck(
        [&](auto& l) { return sum(batch_norm2d_train(l[0], l[1], l[2], 1e-5, static_cast<BatchStats<double>*>(nullptr)) * r); },
        {{3, 2, 4, 4}, {2}, {2}}, {random_vec(96, rng), random_vec(2, rng, 0.5, 1.5), random_vec(2, rng)});
  }
  {
    auto v = random_vec(32, rng, 0.1, 1.0);
    for (std::size_t i = 0; i < v.size(); i += 3) v[i] = -v[i];
    auto r = TensorD::from({32}, random_vec(32, rng));
    err["relu"] = gradcheck([&](auto& l) { return sum(relu(l[0]) * r); }, {{32}}, {v});
  }
  {
    auto r = TensorD::from({2, 2, 3, 3}, random_vec(36, rng));
    err["maxpool"] = gradcheck([&](auto& l) { return sum(max_pool2d(l[0], 2, 2) * r); }, {{2, 2, 6, 6}},
                               {random_vec(144, rng)});
  }
  {
    auto r = TensorD::from({2, 3, 3, 3}, random_vec(54, rng));
    err["concat"] = gradcheck([&](auto& l) { return sum(concat_channels(l[0], l[1]) * r); },
                              {{2, 1, 3, 3}, {2, 2, 3, 3}}, {random_vec(18, rng), random_vec(36, rng)});
  }
  {
    auto r = TensorD::from({3, 4}, random_vec(12, rng));
    err["linear"] = gradcheck([&](auto& l) { return sum(linear(l[0], l[1], l[2]) * r); }, {{3, 5}, {4, 5}, {4}},
                              {random_vec(15, rng), random_vec(20, rng), random_vec(4, rng)});
    err["softmax"] = gradcheck([&](auto& l) { return sum(softmax_rows(l[0]) * r); }, {{3, 4}},
                               {random_vec(12, rng, -2, 2)});
  }
  {
    auto r = TensorD::from({2, 18}, random_vec(36, rng));
    err["flatten"] = gradcheck([&](auto& l) { return sum(flatten(l[0]) * r); }, {{2, 2, 3, 3}}, {random_vec(36, rng)});
  }
  {
    const std::vector<int> y{1, 0, 0, 1};
    err["focal"] = gradcheck([&](auto& l) { return focal_loss(softmax_rows(l[0]), y, FocalLossConfig{2.0}); },
                             {{4, 2}}, {random_vec(8, rng, -2, 2)});
  }
  double worst_layer = 0;
  std::string worst_name;
  for (const auto& [k, v] : err)
    if (v >= worst_layer) worst_layer = v, worst_name = k;

  // End-to-end through LightTBNet(N=2, widths [2,2], 32x32), every parameter.
  ModelConfig c;
  c.n_blocks = 2;
  c.input_size = 32;
  c.channel_plan = {2, 2};
  c.reduce_channels = 2;
  c.fc_hidden = 8;
  c.seed = 7;
  LightTBNet<double> model(c);
  auto x = TensorD::from({2, 1, 32, 32}, random_vec(2 * 32 * 32, rng, -1, 1));
  const std::vector<int> y{0, 1};
  auto loss_value = [&] {
    NoGradGuard ng;
    return focal_loss(model.forward(x), y, FocalLossConfig{2.0}).item();
  };
  model.zero_grad();
  focal_loss(model.forward(x), y, FocalLossConfig{2.0}).backward();
  double worst_model = 0;
  std::size_t checked = 0;
  const double h = 1e-5;
  for (auto& p : model.parameters()) {
    std::vector<double> analytic(p.tensor.numel(), 0.0);
    if (p.tensor.has_grad()) analytic.assign(p.tensor.grad().begin(), p.tensor.grad().end());
    std::vector<double> numeric(analytic.size());
    auto data = p.tensor.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double fp = loss_value();
      data[i] = orig - h;
      const double fm = loss_value();
      data[i] = orig;
      numeric[i] = (fp - fm) / (2 * h);
    }
    worst_model = std::max(worst_model, oracle::max_rel_err(analytic, numeric));
    checked += data.size();
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_layer < kLayerGradTol && worst_model < kModelGradTol && secs < kGradRuntimeSec;
  o.detail = "layers max rel err " + fmt(worst_layer, 3) + " (" + worst_name + ") < " + fmt(kLayerGradTol) +
             "; model max rel err " + fmt(worst_model, 3) + " over " + std::to_string(checked) + " params < " +
             fmt(kModelGradTol) + "; " + fmt(secs, 3) + " s < " + fmt(kGradRuntimeSec) + " s";
  return o;
}

Outcome convolution_oracle() {
  std::mt19937_64 rng(202);
  double worst_d = 0, worst_f = 0;
  for (int k = 0; k < kConvCases; ++k) {
    auto xv = oracle::random_vec(2 * 3 * 8 * 8, rng), wv = oracle::random_vec(4 * 3 * 9, rng),
         bv = oracle::random_vec(4, rng);
    auto ref = oracle::naive_conv2d(xv, 2, 3, 8, 8, wv, 4, 3, bv, 1, 1);
    auto yd = conv2d(TensorD::from({2, 3, 8, 8}, xv), TensorD::from({4, 3, 3, 3}, wv), TensorD::from({4}, bv), {1, 1});
    std::vector<double> got(yd.data().begin(), yd.data().end());
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst_d = std::max(worst_d, std::fabs(got[i] - ref[i]) / std::max(std::fabs(ref[i]), 1e-300));
    // the float production path, relative to the output scale
    std::vector<float> xf(xv.begin(), xv.end()), wf(wv.begin(), wv.end()), bf(bv.begin(), bv.end());
    std::vector<double> xr(xf.begin(), xf.end()), wr(wf.begin(), wf.end()), br(bf.begin(), bf.end());
    auto reff = oracle::naive_conv2d(xr, 2, 3, 8, 8, wr, 4, 3, br, 1, 1);
    auto yf = conv2d(TensorF::from({2, 3, 8, 8}, xf), TensorF::from({4, 3, 3, 3}, wf), TensorF::from({4}, bf), {1, 1});
    double scale = 0;
    for (double v : reff) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < reff.size(); ++i) worst_f = std::max(worst_f, std::fabs(yf.data()[i] - reff[i]) / scale);
  }
  return {worst_d < kConvRelTol && worst_f < kConvRelTol,
          std::to_string(kConvCases) + " cases 2x3x8x8 (3x3, same padding): 64-bit max rel err " + fmt(worst_d, 3) +
              ", 32-bit max err/scale " + fmt(worst_f, 3) + " < " + fmt(kConvRelTol)};
}

Outcome focal_loss_check() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-4, 4);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 1 + rng() % 32;
    std::vector<double> logits(2 * b);
    for (auto& v : logits) v = u(rng);
    std::vector<int> y(b);
    for (auto& v : y) v = static_cast<int>(rng() % 2);
    auto probs = softmax_rows(TensorD::from({b, 2}, logits));
    double ce = 0;
    for (std::size_t i = 0; i < b; ++i) ce -= std::log(probs.data()[2 * i + static_cast<std::size_t>(y[i])]);
    ce /= static_cast<double>(b);
    worst = std::max(worst, std::fabs(focal_loss(probs, y, FocalLossConfig{0.0}).item() - ce));
  }
  const std::vector<int> pos{1};
  const double point = focal_loss(TensorD::from({1, 2}, {0.5, 0.5}), pos, FocalLossConfig{2.0}).item();
  return {worst <= kFocalCeTol && std::fabs(point - kFocalPoint) <= kFocalPointTol,
          "gamma=0 vs cross-entropy max |diff| " + fmt(worst, 3) + " <= " + fmt(kFocalCeTol) +
              "; FL(0.5, gamma=2) = " + fmt(point, 10) + " vs " + fmt(kFocalPoint) + " +/- " + fmt(kFocalPointTol)};
}

Outcome auc_oracle() {
  std::mt19937_64 rng(404);
  int exact = 0, with_ties = 0;
  for (int k = 0; k < kAucSets; ++k) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<double> s(n);
    std::vector<int> y(n);
    const int grid = 2 + static_cast<int>(rng() % 30);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % static_cast<unsigned>(grid)) / grid;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    std::set<double> distinct(s.begin(), s.end());
    if (distinct.size() < n) ++with_ties;
    if (auc(s, y) == oracle::pairwise_auc(s, y)) ++exact;
  }
  return {exact == kAucSets, std::to_string(exact) + "/" + std::to_string(kAucSets) +
                                 " sets exactly equal to pairwise counting (" + std::to_string(with_ties) +
                                 " with tied scores)"};
}

Outcome counting_oracles() {
  bool ok = true;
  std::string d;
  for (int n : {3, 4, 5}) {
    const auto c = default_model_config(n);
    const auto got = count_params(c), want = oracle::enumerated_params(c);
    ok = ok && got == want;
    d += "N=" + std::to_string(n) + " params " + std::to_string(got) + (got == want ? " == " : " != ") +
         std::to_string(want) + "; ";
  }
  auto scaled = default_model_config(3);
  scaled.input_size = 8;
  const auto macs = count_macs(scaled), mults = oracle::naive_model_multiplies(scaled);
  ok = ok && macs == mults;
  d += "8x8 N=3 MACs " + std::to_string(macs) + (macs == mults ? " == " : " != ") + std::to_string(mults) +
       " naive multiplies";
  return {ok, d};
}

Outcome split_protocol() {
  const auto recs = oracle::synthetic_manifest();
  SplitOptions o;
  o.seed = 42;
  const auto s = stratified_split(recs, o);
  const auto test = s.test_indices();
  std::set<std::size_t> seen(test.begin(), test.end());
  bool disjoint = seen.size() == test.size();
  std::size_t train = 0;
  for (int f = 0; f < 5; ++f) {
    for (auto i : s.fold_indices(f)) disjoint = seen.insert(i).second && disjoint;
    train += s.fold_indices(f).size();
  }
  const auto keys = final_strata(recs, o.min_stratum);
  std::map<std::string, std::pair<int, int>> cnt;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    cnt[keys[i]].first++;
    cnt[keys[i]].second += s.rows[i].test ? 1 : 0;
  }
  double worst = -1;
  bool strata_ok = true;
  for (const auto& [k, c] : cnt) {
    const double dev = std::fabs(static_cast<double>(c.second) / c.first - 0.2);
    strata_ok = strata_ok && dev <= 1.0 / c.first;
    worst = std::max(worst, dev * c.first);
  }
  const bool det = stratified_split(recs, o).rows == s.rows;
  const bool ok = test.size() == kSplitTest && train == kSplitTrain && seen.size() == recs.size() && disjoint &&
                  strata_ok && det;
  return {ok, std::to_string(test.size()) + " TEST; folds disjoint=" + (disjoint ? "yes" : "no") + " covering " +
                  std::to_string(train) + "; " + std::to_string(cnt.size()) +
                  " strata, max |share-0.2|*|stratum| = " + fmt(worst, 3) + " <= 1; deterministic=" +
                  (det ? "yes" : "no")};
}

// Shared by the toy-training and ensemble criteria.
struct ToyRun {
  oracle::ToySet data;
  InMemorySource src;
  SplitAssignment split;
  std::vector<Checkpoint> folds;
  std::vector<double> fold_val_auc;
  std::vector<double> fold_secs;
};

TrainOptions toy_options() {
  TrainOptions o;
  o.epochs = kToyEpochs;
  o.batch_size = 16;
  o.adam.lr = 1e-4;
  o.focal.gamma = 2.0;
  o.augment_enabled = false;
  o.seed = 5;
  return o;
}

ToyRun& toy_run() {
  static ToyRun run = [] {
    ToyRun r;
    r.data = oracle::toy_dataset(64, kToyPerClass, 11);
    r.src = InMemorySource(r.data.images, r.data.labels);
    SplitOptions so;
    so.seed = 3;
    r.split = stratified_split(r.data.records, so);
    return r;
  }();
  return run;
}

void train_toy_fold(int fold) {
  auto& r = toy_run();
  const auto t0 = std::chrono::steady_clock::now();
  auto res = train_fold(oracle::toy_model_config(64), r.src, r.split, fold, toy_options());
  r.fold_secs.push_back(seconds_since(t0));
  r.fold_val_auc.push_back(res.checkpoint.meta.val_auc);
  r.folds.push_back(std::move(res.checkpoint));
}

Outcome toy_training() {
  auto& r = toy_run();
  train_toy_fold(0);
  const double a = r.fold_val_auc[0], secs = r.fold_secs[0];
  return {a >= kToyMinAuc && secs < kToyMaxSec,
          "64x64 toy set " + std::to_string(kToyPerClass) + "/" + std::to_string(kToyPerClass) + ", N=3 widths [4,8,8], " +
              std::to_string(kToyEpochs) + " epochs, batch 16, lr 1e-4, gamma 2: selected val AUC " + fmt(a, 4) +
              " (epoch " + std::to_string(r.folds[0].meta.epoch) + ") >= " + fmt(kToyMinAuc) + "; " + fmt(secs, 3) +
              " s < " + fmt(kToyMaxSec) + " s"};
}

Outcome ensemble_contract() {
  auto& r = toy_run();
  for (int f = static_cast<int>(r.folds.size()); f < 5; ++f) train_toy_fold(f);
  const auto test = r.split.test_indices();
  std::vector<int> y;
  for (auto i : test) y.push_back(r.src.label(i));
  std::vector<std::vector<double>> per_fold;
  double best = 0;
  for (const auto& ck : r.folds) {
    auto m = model_from_checkpoint(ck);
    per_fold.push_back(predict_scores(m, r.src, test));
    best = std::max(best, auc(per_fold.back(), y));
  }
  const auto ens = ensemble_scores(per_fold);
  double worst = 0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    double m = 0;
    for (const auto& f : per_fold) m += f[i];
    worst = std::max(worst, std::fabs(ens[i] - m / 5.0));
  }
  const double ens_auc = auc(ens, y);
  return {worst <= kEnsembleMeanTol && ens_auc >= best - kEnsembleAucSlack,
          "max |ensemble - mean| " + fmt(worst, 3) + " <= " + fmt(kEnsembleMeanTol) + "; test AUC ensemble " +
              fmt(ens_auc, 4) + " >= best fold " + fmt(best, 4) + " - " + fmt(kEnsembleAucSlack) + " (" +
              std::to_string(test.size()) + " test images)"};
}

Outcome timing_protocol() {
  double now = 0;
  int calls = 0;
  auto constant = time_protocol([&] { now += 2.0, ++calls; }, 20, 300, [&] { return now; });
  int k = 0;
  auto alt = time_protocol([&] { now += (k++ % 2 == 0) ? 1.0 : 3.0; }, 20, 300, [&] { return now; });
  // warm-up calls cost 1000 ms each; any leak would move the mean
  int w = 0;
  auto warm = time_protocol([&] { now += (w++ < 20) ? 1000.0 : 2.0; }, 20, 300, [&] { return now; });
  const bool ok = constant.mean_ms == 2.0 && constant.std_ms == 0.0 && calls == 320 && alt.mean_ms == 2.0 &&
                  alt.std_ms == 1.0 && warm.mean_ms == 2.0 && warm.std_ms == 0.0 && warm.samples_ms.size() == 300;
  return {ok, "2 ms clock: mean " + fmt(constant.mean_ms) + " std " + fmt(constant.std_ms) + " (" +
                  std::to_string(calls) + " calls); 1/3 ms clock: mean " + fmt(alt.mean_ms) + " std " +
                  fmt(alt.std_ms) + "; 1000 ms warm-up: mean " + fmt(warm.mean_ms) + " over " +
                  std::to_string(warm.samples_ms.size()) + " kept reps"};
}

Outcome checkpoint_roundtrip() {
  auto cfg = default_model_config(4);
  cfg.seed = 9;
  LightTBNet<float> m(cfg);
  CheckpointMeta meta;
  meta.model = cfg;
  meta.fold_id = 0;
  meta.epoch = 1;
  meta.val_auc = 0.5;
  const auto ck = capture_checkpoint(m, meta);
  const auto dir = fs::temp_directory_path() / "ltbn_accept_ckpt";
  fs::create_directories(dir);
  save_checkpoint(dir / "m.ltbn", ck);
  auto back = load_model(dir / "m.ltbn");
  bool bitwise = true;
  auto a = m.parameters(), b = back.parameters();
  for (std::size_t i = 0; i < a.size(); ++i)
    bitwise = bitwise && std::memcmp(a[i].tensor.data().data(), b[i].tensor.data().data(), a[i].tensor.numel() * 4) == 0;
  auto bufa = m.buffers(), bufb = back.buffers();
  for (std::size_t i = 0; i < bufa.size(); ++i) bitwise = bitwise && *bufa[i].second == *bufb[i].second;
  fs::remove_all(dir);

  const auto good = serialize_checkpoint(ck);
  auto kind = [](std::vector<std::uint8_t> bytes) -> std::string {
    try {
      model_from_checkpoint(deserialize_checkpoint(bytes));
      return "none";
    } catch (const CheckpointError& e) {
      return checkpoint_error_name(e.kind());
    }
  };
  auto magic = good;
  magic[1] = '?';
  auto version = good;
  version[4] = 2;
  auto truncated = good;
  truncated.resize(good.size() / 2);
  const std::set<std::string> kinds{kind(magic), kind(version), kind(truncated)};
  const bool ok = bitwise && kinds.size() == 3 && !kinds.count("none");
  std::string ks;
  for (const auto& s : {kind(magic), kind(version), kind(truncated)}) ks += (ks.empty() ? "" : " / ") + s;
  return {ok, std::string("N=4 save/load bitwise ") + (bitwise ? "identical" : "DIFFERENT") + " (" +
                  std::to_string(a.size()) + " tensors + BN stats); bad magic / version / truncation -> " + ks};
}

Outcome clahe_properties() {
  std::mt19937_64 rng(505);
  bool fixed = true;
  for (int v : {0, 90, 255}) {
    GrayImage8 img(57, 43, static_cast<std::uint8_t>(v));
    fixed = fixed && clahe(img, ClaheConfig{}) == img;
  }
  ClaheConfig single;
  single.tiles_x = single.tiles_y = 1;
  single.clip_limit = std::numeric_limits<double>::infinity();
  int he_match = 0;
  const int he_cases = 10;
  std::uniform_int_distribution<int> px(0, 255);
  for (int k = 0; k < he_cases; ++k) {
    GrayImage8 img(30 + k, 41 - k);
    const int lo = px(rng) / 2, span = 1 + px(rng) / 2;
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(lo + px(rng) % span);
    if (clahe(img, single) == oracle::histogram_equalize(img)) ++he_match;
  }
  int bound_ok = 0;
  std::uint32_t max_excess = 0;
  for (int k = 0; k < kClaheImages; ++k) {
    GrayImage8 img(64 + 7 * k, 80 - k);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp((x * 3 + y) % 256 / (1 + k % 4) + px(rng) % 20, 0, 255));
    ClaheConfig cfg;
    cfg.clip_limit = 1.0 + (k % 4);
    ClaheTrace trace;
    clahe(img, cfg, &trace);
    bool ok = true;
    for (const auto& h : trace.clipped)
      for (auto b : h) {
        ok = ok && b <= trace.clip_count + 1;
        if (b > trace.clip_count) max_excess = std::max(max_excess, b - trace.clip_count);
      }
    bound_ok += ok ? 1 : 0;
  }
  return {fixed && he_match == he_cases && bound_ok == kClaheImages,
          std::string("constant fixed point ") + (fixed ? "yes" : "no") + "; single tile, no clip == HE oracle " +
              std::to_string(he_match) + "/" + std::to_string(he_cases) + "; clip bound holds " +
              std::to_string(bound_ok) + "/" + std::to_string(kClaheImages) + " (max excess " +
              std::to_string(max_excess) + " <= 1)"};
}

// ---------------------------------------------------------------------------
// Full-scale pipeline. Real MC+SZ data is used when LTBN_MCSZ_MANIFEST is
// set (optionally LTBN_MCSZ_CONFIG); otherwise a synthetic stand-in drives
// the same commands so pipeline integrity is still exercised.

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << "  ltbn " << args[0] << " failed (" << code << "): " << e.str();
  return code;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  return n;
}

Outcome pipeline(const fs::path& config, const fs::path& out_dir, std::size_t n_records, bool real) {
  const auto cfg = config.string();
  const auto od = out_dir.string();
  std::string text;
  if (cli({"split", "--config", cfg, "--out-dir", od}) != 0) return {false, "split failed"};
  if (cli({"train", "--config", cfg, "--out-dir", od, "--quiet"}) != 0) return {false, "train failed"};
  if (cli({"eval", "--config", cfg, "--out-dir", od}, &text) != 0) return {false, "eval failed"};
  std::cout << text;

  // metric columns for the efficiency comparison
  const auto metrics = out_dir / "metrics.csv";
  std::ifstream mi(metrics);
  std::string header, combined;
  std::getline(mi, header);
  std::getline(mi, combined);
  std::vector<std::string> cells;
  std::stringstream ss(combined);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (cells.size() < 5) return {false, "metrics.csv malformed"};
  const auto rc = load_run_config(config);
  const std::string name = "LightTBNet (N=" + std::to_string(rc.model.n_blocks) + ")";
  std::ofstream(out_dir / "bench_metrics.csv") << "name,acc,f1,auc\n" << name << ',' << cells[2] << ',' << cells[3]
                                                 << ',' << cells[4] << '\n';
  const std::vector<std::string> bench{"bench", "--config", cfg, "--out-dir", od, "--n",
                                       std::to_string(rc.model.n_blocks), "--reps", real ? "300" : "10", "--warmup",
                                       real ? "20" : "2", "--metrics", (out_dir / "bench_metrics.csv").string()};
  if (cli(bench, &text) != 0)
    return {false, "bench failed"};
  std::cout << text;

  const std::size_t want_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n_records)));
  const std::size_t preds = count_lines(out_dir / "predictions.csv") - 1;
  bool ckpts = true;
  for (int k = 0; k < 5; ++k) ckpts = ckpts && fs::exists(out_dir / ("fold" + std::to_string(k) + ".ltbn"));
  const bool ok = ckpts && preds == want_test && count_lines(metrics) >= 2 &&
                  count_lines(out_dir / "comparison.csv") == 2 && fs::exists(out_dir / "run_record_eval.json");
  return {ok, std::string(real ? "MC+SZ data" : "synthetic stand-in, no MC+SZ images provided") + ": 5 fold models, " +
                  std::to_string(preds) + " ensembled TEST predictions (expected " + std::to_string(want_test) +
                  "), " + name + " ACC " + cells[2] + " F1 " + cells[3] + " AUC " + cells[4] +
                  " (reference only: 0.906 / 0.907 / 0.961); reports in " + od};
}

Outcome full_scale() {
  const auto out_root = fs::temp_directory_path() / "ltbn_accept_pipeline";
  if (const char* manifest = std::getenv("LTBN_MCSZ_MANIFEST")) {
    json cfg;
    if (const char* c = std::getenv("LTBN_MCSZ_CONFIG")) cfg = json::parse(std::ifstream(c));
    cfg["manifest"] = fs::absolute(manifest).string();
    fs::create_directories(out_root);
    std::ofstream(out_root / "config.json") << cfg.dump(2);
    const auto n = load_manifest(manifest).size();
    return pipeline(out_root / "config.json", out_root / "run", n, true);
  }
  fs::remove_all(out_root);
  fs::create_directories(out_root / "img");
  std::mt19937_64 rng(606);
  std::ofstream m(out_root / "manifest.csv");
  m << "image_path,label,cohort,sex,age\n";
  // cohort/label mix in the proportions of MC 80/58 and SZ 326/336, scaled down
  const struct {
    const char* cohort;
    int label, n;
  } groups[] = {{"MC", 0, 20}, {"MC", 1, 15}, {"SZ", 0, 82}, {"SZ", 1, 83}};
  std::size_t total = 0;
  for (const auto& g : groups)
    for (int i = 0; i < g.n; ++i, ++total) {
      const auto name = "img/" + std::string(g.cohort) + std::to_string(g.label) + "_" + std::to_string(i) + ".png";
      write_png(out_root / name, to_u8(oracle::toy_image(96, g.label == 1, rng)));
      m << name << ',' << g.label << ',' << g.cohort << ',' << (i % 2 ? 'M' : 'F') << ',' << 20 + (i * 7) % 60 << '\n';
    }
  m.close();
  json cfg = {{"manifest", "manifest.csv"},
              {"seed", 42},
              {"epochs", 3},
              {"batch_size", 16},
              {"augment", {{"enabled", false}}},
              {"preprocess", {{"size", 64}}},
              {"model", {{"n_blocks", 4}, {"channel_plan", {4, 8, 8, 8}}, {"reduce_channels", 4}, {"fc_hidden", 16}}}};
  std::ofstream(out_root / "config.json") << cfg.dump(2);
  return pipeline(out_root / "config.json", out_root / "run", total, false);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Gradient correctness", gradient_correctness},
      {"Convolution oracle", convolution_oracle},
      {"Focal loss", focal_loss_check},
      {"AUC oracle", auc_oracle},
      {"Counting oracles", counting_oracles},
      {"Split protocol", split_protocol},
      {"End-to-end toy training", toy_training},
      {"Ensemble contract", ensemble_contract},
      {"Timing protocol", timing_protocol},
      {"Checkpoint round-trip", checkpoint_roundtrip},
      {"CLAHE properties", clahe_properties},
      {"Full-scale reproduction (optional)", full_scale},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " | " << name << " | " << o.detail << " [" << fmt(seconds_since(t0), 3)
              << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}

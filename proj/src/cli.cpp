#include "lighttbnet/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <array>
#include <map>
#include <mutex>
#include <span>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lighttbnet/checkpoint.hpp"
#include "lighttbnet/data.hpp"
#include "lighttbnet/efficiency.hpp"
#include "lighttbnet/explain.hpp"
#include "lighttbnet/metrics.hpp"
#include "lighttbnet/preprocess.hpp"
#include "lighttbnet/run_config.hpp"
#include "lighttbnet/training.hpp"

namespace ltbn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand. Values only override the config file
// when the flag was given.
struct CommonFlags {
  std::string config;
  std::string out_dir;
  std::string manifest;
  std::string split_csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* app, bool with_data) {
    app->add_option("--config", config, "JSON run config (flags override its values)");
    app->add_option("--out-dir", out_dir, "Output directory (default: config output_dir)");
    seed_opt = app->add_option("--seed", seed, "Master seed");
    if (with_data) {
      app->add_option("--manifest", manifest, "Manifest CSV: image_path,label,cohort,sex,age");
      app->add_option("--split", split_csv, "Split CSV (default: <out-dir>/split.csv)");
    }
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (!manifest.empty()) c.manifest = manifest;
    if (!split_csv.empty()) c.split_csv = split_csv;
    if (seed_opt && seed_opt->count()) c.seed = seed;
    c.split.seed = c.seed;
    return c;
  }
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

// Config snapshot, seeds and versions, written next to the outputs.
void write_run_record(const fs::path& dir, const std::string& command, const std::vector<std::string>& argv,
                      const RunConfig& cfg, const json& extra, const std::vector<fs::path>& outputs) {
  json rec;
  rec["command"] = command;
  rec["argv"] = argv;
  rec["created_utc"] = utc_now();
  rec["versions"] = {{"ltbn", kVersion}, {"checkpoint_format", kCheckpointVersion}};
  rec["config"] = to_json_value(cfg);
  json folds = json::array();
  for (int k = 0; k < cfg.split.n_folds; ++k) {
    const auto s = fold_seeds(cfg.seed, k);
    folds.push_back({{"fold", k}, {"model", s.model}, {"augment", s.augment}, {"shuffle", s.shuffle}});
  }
  rec["seeds"] = {{"master", cfg.seed}, {"split", cfg.split.seed}, {"folds", folds}};
  rec["extra"] = extra;
  json outs = json::array();
  for (const auto& p : outputs) outs.push_back(p.string());
  rec["outputs"] = outs;
  std::ofstream f(dir / ("run_record_" + command + ".json"));
  if (!f) throw ConfigError("cannot write run record in " + dir.string());
  f << rec.dump(2) << '\n';
}

std::vector<SampleRecord> load_records(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("no manifest given (--manifest or config 'manifest')");
  try {
    return load_manifest(cfg.manifest);
  } catch (const ManifestError& e) {
    throw DataError(e.what());
  }
}

SplitAssignment obtain_split(const RunConfig& cfg, const std::vector<SampleRecord>& records, std::ostream& out,
                             std::vector<fs::path>* outputs) {
  const auto path = cfg.effective_split_csv();
  if (fs::exists(path)) {
    try {
      auto s = read_split_csv(path, records);
      out << "using split " << path.string() << '\n';
      return s;
    } catch (const std::exception& e) {
      throw DataError(std::string("split file: ") + e.what());
    }
  }
  auto s = stratified_split(records, cfg.split);
  write_split_csv(path, records, s);
  if (outputs) outputs->push_back(path);
  out << "wrote split " << path.string() << '\n';
  return s;
}

fs::path fold_checkpoint_path(const fs::path& dir, int fold) { return dir / ("fold" + std::to_string(fold) + ".ltbn"); }

std::vector<fs::path> require_checkpoints(const fs::path& dir, int n) {
  std::vector<fs::path> paths;
  std::string missing;
  for (int k = 0; k < n; ++k) {
    auto p = fold_checkpoint_path(dir, k);
    if (!fs::is_regular_file(p)) missing += (missing.empty() ? "" : ", ") + p.string();
    paths.push_back(std::move(p));
  }
  if (!missing.empty()) throw MissingCheckpoint("missing checkpoints: " + missing);
  return paths;
}

PreprocessConfig preprocessing_of(const CheckpointMeta& meta, const PreprocessConfig& fallback) {
  if (meta.preprocessing.is_object() && !meta.preprocessing.empty()) return meta.preprocessing.get<PreprocessConfig>();
  return fallback;
}

std::vector<std::string> sample_ids(const std::vector<SampleRecord>& records, std::span<const std::size_t> idx) {
  std::vector<std::string> ids;
  std::map<std::string, int> seen;
  for (auto i : idx) {
    ids.push_back(fs::path(records[i].image_path).filename().string());
    ++seen[ids.back()];
  }
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (seen[ids[k]] > 1) ids[k] = records[idx[k]].image_path;
  }
  return ids;
}

// ---- subcommands ---------------------------------------------------------

int cmd_split(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out) {
  auto cfg = flags.resolve();
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const auto records = load_records(cfg);
  const auto split = stratified_split(records, cfg.split);
  const auto path = cfg.effective_split_csv();
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_split_csv(path, records, split);
  out << "records " << records.size() << ", TEST " << split.test_indices().size();
  for (int k = 0; k < split.n_folds; ++k) out << ", fold" << k << ' ' << split.fold_indices(k).size();
  out << "\nwrote " << path.string() << '\n';
  write_run_record(cfg.output_dir, "split", argv, cfg, json::object(), {path});
  return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
              const std::optional<int>& epochs, const std::vector<int>& only_folds, bool parallel, bool quiet) {
  auto cfg = flags.resolve();
  if (epochs) cfg.epochs = *epochs;
  if (parallel) cfg.parallel_folds = true;
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const auto records = load_records(cfg);
  std::vector<fs::path> outputs;
  const auto split = obtain_split(cfg, records, out, &outputs);
  ManifestSource source(records, cfg.preprocess);
  const auto opts_base = cfg.train_options();

  std::vector<int> folds = only_folds;
  if (folds.empty()) {
    for (int k = 0; k < split.n_folds; ++k) folds.push_back(k);
  }
  for (int k : folds) {
    if (k < 0 || k >= split.n_folds) throw ConfigError("fold " + std::to_string(k) + " out of range");
  }

  std::vector<TrainResult> results(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::mutex out_mu;
  auto run_one = [&](std::size_t slot) {
    try {
      const int k = folds[slot];
      auto opts = opts_base;
      if (!quiet) {
        opts.on_epoch = [&, k](const EpochLog& e) {
          std::lock_guard lock(out_mu);
          out << "fold " << k << " epoch " << e.epoch << " loss " << std::setprecision(5) << e.train_loss
              << " val_auc " << e.val_auc << '\n';
        };
      }
      results[slot] = train_fold(cfg.model, source, split, k, opts);
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
  if (cfg.parallel_folds) {
    std::vector<std::thread> threads;
    for (std::size_t s = 0; s < folds.size(); ++s) threads.emplace_back(run_one, s);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t s = 0; s < folds.size(); ++s) run_one(s);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json summary = json::array();
  for (std::size_t s = 0; s < folds.size(); ++s) {
    const int k = folds[s];
    const auto ckpt = fold_checkpoint_path(cfg.output_dir, k);
    const auto log = cfg.output_dir / ("fold" + std::to_string(k) + "_log.csv");
    save_checkpoint(ckpt, results[s].checkpoint);
    write_training_log(log, results[s].log);
    outputs.push_back(ckpt);
    outputs.push_back(log);
    const auto& m = results[s].checkpoint.meta;
    out << "fold " << k << ": best epoch " << m.epoch << ", val AUC " << m.val_auc << " -> " << ckpt.string() << '\n';
    summary.push_back({{"fold", k}, {"epoch", m.epoch}, {"val_auc", m.val_auc}});
  }
  write_run_record(cfg.output_dir, "train", argv, cfg, {{"folds", summary}}, outputs);
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
             const std::string& ckpt_dir_flag, const std::optional<double>& threshold) {
  auto cfg = flags.resolve();
  if (threshold) cfg.threshold = *threshold;
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const fs::path ckpt_dir = ckpt_dir_flag.empty() ? cfg.output_dir : fs::path(ckpt_dir_flag);
  const auto paths = require_checkpoints(ckpt_dir, static_cast<int>(kEnsembleSize));
  const auto records = load_records(cfg);
  const auto split = obtain_split(cfg, records, out, nullptr);
  const auto test = split.test_indices();
  if (test.empty()) throw DataError("split has no TEST records");

  PredictionSet preds;
  preds.ids = sample_ids(records, test);
  std::optional<ManifestSource> source;
  std::optional<PreprocessConfig> pre;
  for (const auto& p : paths) {
    CheckpointMeta meta;
    auto model = load_model(p, &meta);
    const auto this_pre = preprocessing_of(meta, cfg.preprocess);
    if (!pre) {
      pre = this_pre;
      source.emplace(records, *pre);
    } else if (json(*pre) != json(this_pre)) {
      throw ConfigError("checkpoints disagree on preprocessing: " + p.string());
    }
    preds.fold_scores.push_back(predict_scores(model, *source, test, cfg.batch_size));
  }
  preds.scores = ensemble_scores(preds.fold_scores);
  for (auto i : test) {
    preds.labels.push_back(records[i].label);
    preds.cohorts.push_back(records[i].cohort);
  }

  const auto pred_path = cfg.output_dir / "predictions.csv";
  const auto metrics_path = cfg.output_dir / "metrics.csv";
  write_prediction_csv(pred_path, preds);
  const auto reports = cohort_reports(preds, cfg.threshold);
  write_metrics_csv(metrics_path, reports);
  print_metrics_table(out, reports);

  json fold_aucs = json::array();
  for (std::size_t k = 0; k < preds.fold_scores.size(); ++k) {
    const auto r = classify_and_report(preds.fold_scores[k], preds.labels, cfg.threshold);
    fold_aucs.push_back(r.auc_defined ? json(r.auc) : json(nullptr));
    out << "fold " << k << " test AUC " << (r.auc_defined ? std::to_string(r.auc) : "-") << '\n';
  }
  const auto tpp = tpp_check(reports.front().report);
  out << "WHO TPP (SN >= 0.90, SP >= 0.70): " << (tpp.pass ? "PASS" : "FAIL") << "  margins SN "
      << std::showpos << std::fixed << std::setprecision(3) << tpp.sn_margin << " SP " << tpp.sp_margin
      << std::noshowpos << '\n';
  out.unsetf(std::ios::fixed);
  write_run_record(cfg.output_dir, "eval", argv, cfg,
                   {{"checkpoints", ckpt_dir.string()},
                    {"fold_test_auc", fold_aucs},
                    {"tpp_pass", tpp.pass},
                    {"f1_mode", "positive_class"}},
                   {pred_path, metrics_path});
  return kExitOk;
}

int cmd_predict(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
                const std::string& image, const std::string& ckpt_dir_flag) {
  auto cfg = flags.resolve();
  cfg.validate();
  ensure_dir(cfg.output_dir);
  const fs::path ckpt_dir = ckpt_dir_flag.empty() ? cfg.output_dir : fs::path(ckpt_dir_flag);
  const auto paths = require_checkpoints(ckpt_dir, static_cast<int>(kEnsembleSize));
  GrayImage8 raw;
  try {
    raw = read_gray_image(image);
  } catch (const ImageError& e) {
    throw DataError(e.what());
  }
  std::vector<std::vector<double>> per_fold;
  for (const auto& p : paths) {
    CheckpointMeta meta;
    auto model = load_model(p, &meta);
    InMemorySource src;
    src.add(preprocess(raw, preprocessing_of(meta, cfg.preprocess)), 0);
    const std::size_t idx[] = {0};
    per_fold.push_back(predict_scores(model, src, idx));
  }
  const double score = ensemble_scores(per_fold)[0];
  json result = {{"image", image}, {"score", score}, {"threshold", cfg.threshold},
                 {"prediction", score >= cfg.threshold ? "TB" : "normal"}};
  json folds = json::array();
  for (const auto& f : per_fold) folds.push_back(f[0]);
  result["fold_scores"] = folds;
  const auto path = cfg.output_dir / (fs::path(image).stem().string() + "_prediction.json");
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << result.dump(2) << '\n';
  out << score_label(score) << ' ' << result["prediction"].get<std::string>() << '\n';
  write_run_record(cfg.output_dir, "predict", argv, cfg, {{"checkpoints", ckpt_dir.string()}}, {path});
  return kExitOk;
}

std::map<std::string, std::array<std::optional<double>, 3>> read_metric_cells(const fs::path& path) {
  // name,acc,f1,auc with blank cells allowed
  std::map<std::string, std::array<std::optional<double>, 3>> cells;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics table " + path.string());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, v;
    std::getline(ss, name, ',');
    std::array<std::optional<double>, 3> row;
    for (auto& cell : row) {
      if (std::getline(ss, v, ',') && !v.empty()) cell = std::stod(v);
    }
    cells[name] = row;
  }
  return cells;
}

int cmd_bench(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
              std::vector<int> ns, const std::optional<int>& input_size, int warmup, int reps,
              const std::string& metrics_csv) {
  auto cfg = flags.resolve();
  if (ns.empty()) ns = {3, 4, 5};
  const int size = input_size.value_or(cfg.preprocess.size);
  ensure_dir(cfg.output_dir);
  std::map<std::string, std::array<std::optional<double>, 3>> metric_cells;
  if (!metrics_csv.empty()) metric_cells = read_metric_cells(metrics_csv);

  std::vector<ComparisonRow> rows;
  std::vector<fs::path> outputs;
  for (int n : ns) {
    ModelConfig mc;
    try {
      mc = default_model_config(n);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--n: ") + e.what());
    }
    mc.input_size = size;
    mc.seed = cfg.seed;
    try {
      mc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    EfficiencyReport rep;
    rep.name = "LightTBNet (N=" + std::to_string(n) + ")";
    rep.config = mc;
    rep.costs = count_costs(mc);
    LightTBNet<float> model(mc);
    const auto ckpt_path = cfg.output_dir / ("bench_N" + std::to_string(n) + ".ltbn");
    CheckpointMeta meta;
    meta.seed = cfg.seed;
    meta.preprocessing = cfg.preprocess;
    save_checkpoint(ckpt_path, capture_checkpoint(model, meta));
    rep.checkpoint_bytes = fs::file_size(ckpt_path);
    rep.timing = time_inference(model, warmup, reps);
    const auto layers_path = cfg.output_dir / ("layers_N" + std::to_string(n) + ".csv");
    write_layer_costs_csv(layers_path, rep.costs);
    outputs.push_back(ckpt_path);
    outputs.push_back(layers_path);
    std::optional<double> acc, f1, auc_v;
    if (auto it = metric_cells.find(rep.name); it != metric_cells.end()) {
      acc = it->second[0];
      f1 = it->second[1];
      auc_v = it->second[2];
    }
    rows.push_back(comparison_row(rep, acc, f1, auc_v));
  }
  const auto cmp = cfg.output_dir / "comparison.csv";
  const auto scatter = cfg.output_dir / "scatter.csv";
  write_comparison_csv(cmp, rows);
  write_scatter_csv(scatter, rows);
  outputs.push_back(cmp);
  outputs.push_back(scatter);
  print_comparison_table(out, rows);
  write_run_record(cfg.output_dir, "bench", argv, cfg,
                   {{"n", ns}, {"input_size", size}, {"warmup", warmup}, {"reps", reps}}, outputs);
  return kExitOk;
}

int cmd_explain(const CommonFlags& flags, const std::vector<std::string>& argv, std::ostream& out,
                const std::vector<std::string>& images, const std::string& ckpt_flag) {
  auto cfg = flags.resolve();
  cfg.validate();
  const fs::path ckpt = ckpt_flag.empty() ? fold_checkpoint_path(cfg.output_dir, 0) : fs::path(ckpt_flag);
  if (!fs::is_regular_file(ckpt)) throw MissingCheckpoint("missing checkpoint: " + ckpt.string());
  const auto dir = cfg.output_dir / "explain";
  ensure_dir(dir);
  CheckpointMeta meta;
  auto model = load_model(ckpt, &meta);
  const auto pre = preprocessing_of(meta, cfg.preprocess);
  std::vector<fs::path> outputs;
  for (const auto& image : images) {
    GrayImage8 raw;
    try {
      raw = read_gray_image(image);
    } catch (const ImageError& e) {
      throw DataError(e.what());
    }
    const auto base = preprocess(raw, pre);
    const auto sal = saliency(model, base);
    const auto cam = gradcam(model, base);
    const auto png = dir / (fs::path(image).stem().string() + "_explain.png");
    const auto side = render_overlay(base, sal, cam, sal.score, png);
    outputs.push_back(png);
    outputs.push_back(side);
    out << png.string() << ' ' << score_label(sal.score) << '\n';
  }
  write_run_record(cfg.output_dir, "explain", argv, cfg, {{"checkpoint", ckpt.string()}}, outputs);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"LightTBNet: TB detection from chest X-rays (split, train, eval, predict, bench, explain)", "ltbn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.footer(
      "Exit codes: 0 ok, 1 internal error, 2 usage error, 3 config error, 4 missing or unreadable checkpoint, "
      "5 data error, 6 runtime failure.");

  CommonFlags split_f, train_f, eval_f, predict_f, bench_f, explain_f;

  auto* split = app.add_subcommand("split", "Stratified TEST/TRAIN split with cross-validation folds");
  split_f.attach(split, true);

  auto* train = app.add_subcommand("train", "Train one model per fold; writes foldK.ltbn and foldK_log.csv");
  train_f.attach(train, true);
  int epochs_v = 0;
  auto* epochs_opt = train->add_option("--epochs", epochs_v, "Epoch budget per fold")->check(CLI::PositiveNumber);
  std::vector<int> only_folds;
  train->add_option("--fold", only_folds, "Train only these folds (repeatable)");
  bool parallel = false, quiet = false;
  train->add_flag("--parallel", parallel, "Train folds concurrently, one thread each");
  train->add_flag("--quiet", quiet, "Suppress per-epoch progress lines");

  auto* eval = app.add_subcommand("eval", "Ensemble the five fold models on the TEST records");
  eval_f.attach(eval, true);
  std::string eval_ckpt;
  eval->add_option("--checkpoints", eval_ckpt, "Directory holding fold0..fold4.ltbn (default: out-dir)");
  double thr_v = 0.5;
  auto* thr_opt = eval->add_option("--threshold", thr_v, "Decision threshold, score >= threshold is TB");

  auto* predict = app.add_subcommand("predict", "TB score for one image from the five-model ensemble");
  predict_f.attach(predict, false);
  std::string predict_image, predict_ckpt;
  predict->add_option("--image", predict_image, "PNG or PGM radiograph")->required();
  predict->add_option("--checkpoints", predict_ckpt, "Directory holding fold0..fold4.ltbn (default: out-dir)");

  auto* bench = app.add_subcommand("bench", "MACs, parameters, size and latency of N-block models");
  bench_f.attach(bench, false);
  std::vector<int> bench_ns;
  bench->add_option("--n", bench_ns, "Number of residual blocks (repeatable, default 3 4 5)");
  int bench_size = 0;
  auto* size_opt = bench->add_option("--input-size", bench_size, "Input side length (default: preprocess size)");
  int warmup = 20, reps = 300;
  bench->add_option("--warmup", warmup, "Untimed warm-up forward passes")->check(CLI::NonNegativeNumber);
  bench->add_option("--reps", reps, "Timed forward passes")->check(CLI::PositiveNumber);
  std::string bench_metrics;
  bench->add_option("--metrics", bench_metrics, "CSV name,acc,f1,auc to fill the metric columns");

  auto* explain = app.add_subcommand("explain", "Saliency and grad-CAM panels for images");
  explain_f.attach(explain, false);
  std::vector<std::string> explain_images;
  explain->add_option("--image", explain_images, "Image to explain (repeatable)")->required();
  std::string explain_ckpt;
  explain->add_option("--checkpoint", explain_ckpt, "Model checkpoint (default: <out-dir>/fold0.ltbn)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (split->parsed()) return cmd_split(split_f, args, out);
    if (train->parsed()) {
      return cmd_train(train_f, args, out, epochs_opt->count() ? std::optional<int>(epochs_v) : std::nullopt,
                       only_folds, parallel, quiet);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_f, args, out, eval_ckpt,
                      thr_opt->count() ? std::optional<double>(thr_v) : std::nullopt);
    }
    if (predict->parsed()) return cmd_predict(predict_f, args, out, predict_image, predict_ckpt);
    if (bench->parsed()) {
      return cmd_bench(bench_f, args, out, bench_ns, size_opt->count() ? std::optional<int>(bench_size) : std::nullopt,
                       warmup, reps, bench_metrics);
    }
    if (explain->parsed()) return cmd_explain(explain_f, args, out, explain_images, explain_ckpt);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingCheckpoint& e) {
    err << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const CheckpointError& e) {
    err << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ManifestError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ImageError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "no subcommand given\n";
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"ltbn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ltbn

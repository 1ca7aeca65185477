#include "lighttbnet/efficiency.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lighttbnet/layers.hpp"

namespace ltbn {

CostReport count_costs(const ModelConfig& config, int input_size) {
  ModelConfig cfg = config;
  cfg.input_size = input_size;
  if (input_size <= 0) throw ShapeError("shape inference: input size must be positive");
  int side = input_size;
  for (int i = 0; i < cfg.n_blocks; ++i) {
    if (side < 2 || side % 2 != 0) {
      throw ShapeError("shape inference failed at layer blocks." + std::to_string(i) + ".pool: cannot halve a " +
                       std::to_string(side) + "x" + std::to_string(side) + " map");
    }
    side /= 2;
  }

  CostReport r;
  for (const auto& l : describe_layers(cfg)) {
    LayerCost c{l.name, l.kind, l.out_shape, 0, 0};
    switch (l.kind) {
      case LayerKind::Conv: {
        const std::uint64_t cin = l.in_shape[0], cout = l.out_shape[0], k = l.kernel;
        c.macs = cin * k * k * cout * l.out_shape[1] * l.out_shape[2];
        c.params = cin * k * k * cout + cout;
        break;
      }
      case LayerKind::Linear: {
        const std::uint64_t in = l.in_shape[0], out = l.out_shape[0];
        c.macs = in * out;
        c.params = in * out + out;
        break;
      }
      case LayerKind::BatchNorm:
        c.params = 2 * l.out_shape[0];
        break;
      default:
        break;
    }
    r.macs_total += c.macs;
    r.params_total += c.params;
    r.layers.push_back(std::move(c));
  }
  return r;
}

CostReport count_costs(const ModelConfig& config) { return count_costs(config, config.input_size); }
std::uint64_t count_macs(const ModelConfig& config) { return count_costs(config).macs_total; }
std::uint64_t count_params(const ModelConfig& config) { return count_costs(config).params_total; }

void write_layer_costs_csv(const std::filesystem::path& path, const CostReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "layer,kind,out_shape,macs,params\n";
  for (const auto& l : report.layers) {
    out << l.name << ',' << layer_kind_name(l.kind) << ",\"" << shape_str(l.out_shape) << "\"," << l.macs << ','
        << l.params << '\n';
  }
  out << "total,,," << report.macs_total << ',' << report.params_total << '\n';
}

double steady_clock_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

TimingResult time_protocol(const std::function<void()>& fn, int warmup, int reps, const Clock& clock) {
  if (warmup < 0 || reps < 1) throw std::invalid_argument("timing: need warmup >= 0 and reps >= 1");
  TimingResult r;
  r.warmup = warmup;
  r.reps = reps;
  r.samples_ms.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < warmup + reps; ++i) {
    const double t0 = clock();
    fn();
    const double t1 = clock();
    if (i >= warmup) r.samples_ms.push_back(t1 - t0);
  }
  double sum = 0;
  for (double s : r.samples_ms) sum += s;
  r.mean_ms = sum / reps;
  double ss = 0;
  for (double s : r.samples_ms) ss += (s - r.mean_ms) * (s - r.mean_ms);
  r.std_ms = std::sqrt(ss / reps);
  return r;
}

TimingResult time_inference(LightTBNet<float>& model, int warmup, int reps, const Clock& clock,
                            std::uint64_t input_seed) {
  const auto& cfg = model.config();
  const Shape shape{1, static_cast<std::size_t>(cfg.input_channels), static_cast<std::size_t>(cfg.input_size),
                    static_cast<std::size_t>(cfg.input_size)};
  std::mt19937_64 rng(input_seed);
  std::vector<float> data(numel(shape));
  for (auto& v : data) v = static_cast<float>(2.0 * uniform01(rng) - 1.0);
  const auto x = TensorF::from(shape, std::move(data));

  const bool was_training = model.training();
  model.set_training(false);
  NoGradGuard no_grad;
  volatile float sink = 0;
  auto result = time_protocol([&] { sink = sink + model.forward(x).data()[0]; }, warmup, reps, clock);
  model.set_training(was_training);
  return result;
}

ComparisonRow comparison_row(const EfficiencyReport& report, std::optional<double> acc, std::optional<double> f1,
                             std::optional<double> auc) {
  ComparisonRow row;
  row.name = report.name;
  row.acc = acc;
  row.f1 = f1;
  row.auc = auc;
  row.macs = report.costs.macs_total;
  row.params = report.costs.params_total;
  row.time_mean_ms = report.timing.mean_ms;
  row.time_std_ms = report.timing.std_ms;
  row.size_bytes = report.checkpoint_bytes;
  return row;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string opt_fixed(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : std::string(); }

double giga(std::uint64_t v) { return static_cast<double>(v) / 1e9; }
double mega(std::uint64_t v) { return static_cast<double>(v) / 1e6; }

}  // namespace

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "name,acc,f1,auc,macs_g,params_m,time_mean_ms,time_std_ms,size_mb\n";
  for (const auto& r : rows) {
    out << r.name << ',' << opt_fixed(r.acc, 4) << ',' << opt_fixed(r.f1, 4) << ',' << opt_fixed(r.auc, 4) << ','
        << fixed(giga(r.macs), 6) << ',' << fixed(mega(r.params), 6) << ',' << fixed(r.time_mean_ms, 4) << ','
        << fixed(r.time_std_ms, 4) << ',' << fixed(mega(r.size_bytes), 6) << '\n';
  }
}

void write_scatter_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "name,auc,macs,params\n";
  for (const auto& r : rows) out << r.name << ',' << opt_fixed(r.auc, 6) << ',' << r.macs << ',' << r.params << '\n';
}

void print_comparison_table(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) return;
  // Column values as numbers for best-cell marking; empty = not comparable.
  struct Col {
    std::string title;
    bool higher_better;
    std::function<std::optional<double>(const ComparisonRow&)> value;
    std::function<std::string(const ComparisonRow&)> text;
  };
  const std::vector<Col> cols = {
      {"ACC", true, [](const ComparisonRow& r) { return r.acc; }, [](const ComparisonRow& r) { return opt_fixed(r.acc, 3); }},
      {"F1", true, [](const ComparisonRow& r) { return r.f1; }, [](const ComparisonRow& r) { return opt_fixed(r.f1, 3); }},
      {"AUC", true, [](const ComparisonRow& r) { return r.auc; }, [](const ComparisonRow& r) { return opt_fixed(r.auc, 3); }},
      {"MACs (G)", false, [](const ComparisonRow& r) { return std::optional<double>(giga(r.macs)); },
       [](const ComparisonRow& r) { return fixed(giga(r.macs), 3); }},
      {"Params (M)", false, [](const ComparisonRow& r) { return std::optional<double>(mega(r.params)); },
       [](const ComparisonRow& r) { return fixed(mega(r.params), 3); }},
      {"Time (ms)", false, [](const ComparisonRow& r) { return std::optional<double>(r.time_mean_ms); },
       [](const ComparisonRow& r) { return fixed(r.time_mean_ms, 2) + " +- " + fixed(r.time_std_ms, 2); }},
      {"Size (MB)", false, [](const ComparisonRow& r) { return std::optional<double>(mega(r.size_bytes)); },
       [](const ComparisonRow& r) { return fixed(mega(r.size_bytes), 3); }},
  };

  std::vector<std::vector<std::string>> cells(rows.size() + 1);
  cells[0].push_back("Model");
  for (const auto& c : cols) cells[0].push_back(c.title);
  for (std::size_t i = 0; i < rows.size(); ++i) cells[i + 1].push_back(rows[i].name);
  for (const auto& c : cols) {
    std::optional<double> best;
    for (const auto& r : rows) {
      const auto v = c.value(r);
      if (v && (!best || (c.higher_better ? *v > *best : *v < *best))) best = v;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto v = c.value(rows[i]);
      std::string t = c.text(rows[i]);
      if (v && best && *v == *best && rows.size() > 1) t += "*";
      cells[i + 1].push_back(t);
    }
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == 0) {
        os << std::left << std::setw(static_cast<int>(width[j])) << row[j];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[j])) << row[j];
      }
    }
    os << '\n';
  }
  os << std::left << "* best in column\n";
}

}  // namespace ltbn

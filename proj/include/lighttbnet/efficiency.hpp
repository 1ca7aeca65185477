#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lighttbnet/model.hpp"

namespace ltbn {

// Convention: one MAC is one multiply plus one add. Convolutions cost
// Cin*k*k*Cout*Hout*Wout, linear layers in*out; biases, batch norm, ReLU,
// pooling, concatenation and softmax cost nothing. Counts are per image.
struct LayerCost {
  std::string name;
  LayerKind kind;
  Shape out_shape;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t macs_total = 0;
  std::uint64_t params_total = 0;
};

/// Per-layer MACs and parameters for `config` at its own input size.
CostReport count_costs(const ModelConfig& config);
/// Same, with the input side length replaced. A size that cannot be halved
/// N times is rejected naming the pooling layer that fails.
CostReport count_costs(const ModelConfig& config, int input_size);
std::uint64_t count_macs(const ModelConfig& config);
std::uint64_t count_params(const ModelConfig& config);

void write_layer_costs_csv(const std::filesystem::path& path, const CostReport& report);

/// Milliseconds on some monotonic time line.
using Clock = std::function<double()>;
/// steady_clock in milliseconds.
double steady_clock_ms();

struct TimingResult {
  double mean_ms = 0;
  double std_ms = 0;  // population std over the kept repetitions
  int warmup = 0;
  int reps = 0;
  std::vector<double> samples_ms;  // kept repetitions only
};

/// Calls `fn` warmup + reps times, reading the clock immediately before and
/// after each call. Durations of the first `warmup` calls are discarded.
TimingResult time_protocol(const std::function<void()>& fn, int warmup = 20, int reps = 300,
                           const Clock& clock = steady_clock_ms);

/// Forward-only latency at batch size 1 on a fixed random input drawn once.
/// The model is put in eval mode and no graph is recorded.
TimingResult time_inference(LightTBNet<float>& model, int warmup = 20, int reps = 300,
                            const Clock& clock = steady_clock_ms, std::uint64_t input_seed = 0);

struct EfficiencyReport {
  std::string name;
  ModelConfig config;
  CostReport costs;
  TimingResult timing;
  std::uint64_t checkpoint_bytes = 0;
};

/// One comparison row. Metric cells are optional and print blank.
struct ComparisonRow {
  std::string name;
  std::optional<double> acc, f1, auc;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  double time_mean_ms = 0;
  double time_std_ms = 0;
  std::uint64_t size_bytes = 0;
};

ComparisonRow comparison_row(const EfficiencyReport& report, std::optional<double> acc = {},
                             std::optional<double> f1 = {}, std::optional<double> auc = {});

/// name,acc,f1,auc,macs_g,params_m,time_mean_ms,time_std_ms,size_mb
void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);
/// auc,macs,params (one row per model) for external plotting.
void write_scatter_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);
/// Aligned table; the best cell of each column carries a trailing '*'
/// (highest ACC/F1/AUC, lowest cost columns).
void print_comparison_table(std::ostream& os, const std::vector<ComparisonRow>& rows);

}  // namespace ltbn

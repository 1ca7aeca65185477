#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lighttbnet/efficiency.hpp"
#include "lighttbnet/model.hpp"
#include "oracles.hpp"

using namespace ltbn;
namespace fs = std::filesystem;

namespace {

const LayerCost& layer(const CostReport& r, const std::string& name) {
  for (const auto& l : r.layers)
    if (l.name == name) return l;
  throw std::runtime_error("no layer " + name);
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("conv and linear MAC and parameter formulas") {
  auto c = default_model_config(4);
  c.channel_plan[0] = 8;
  c.fc_hidden = 256;
  auto r = count_costs(c);
  CHECK(layer(r, "blocks.0.conv1").macs == 4'718'592);
  CHECK(layer(r, "blocks.0.conv1").params == 80);
  CHECK(layer(r, "fc2").macs == 512);
  CHECK(layer(r, "fc2").params == 514);
  CHECK(layer(r, "blocks.0.bn1").macs == 0);
  CHECK(layer(r, "blocks.0.bn1").params == 16);
  CHECK(layer(r, "blocks.0.pool").macs == 0);
}

TEST_CASE("totals equal the naive oracle multiply count on 8x8 inputs") {
  for (int n : {2, 3}) {
    auto c = default_model_config(n);
    c.input_size = 8;
    CHECK(count_macs(c) == oracle::naive_model_multiplies(c));
  }
  auto tiny = oracle::toy_model_config(16);
  CHECK(count_macs(tiny) == oracle::naive_model_multiplies(tiny));
}

TEST_CASE("parameter totals equal the enumerated scalars") {
  for (int n : {3, 4, 5}) {
    const auto c = default_model_config(n);
    CHECK(count_params(c) == oracle::enumerated_params(c));
    LightTBNet<float> m(c);
    CHECK(count_params(c) == m.param_count());
  }
}

TEST_CASE("sum of layer costs equals the totals") {
  auto r = count_costs(default_model_config(4));
  std::uint64_t macs = 0, params = 0;
  for (const auto& l : r.layers) macs += l.macs, params += l.params;
  CHECK(macs == r.macs_total);
  CHECK(params == r.params_total);
}

TEST_CASE("shape inference failure names the layer") {
  CHECK_THROWS_WITH(count_costs(default_model_config(4), 12), doctest::Contains("blocks."));
}

TEST_CASE("constant 2 ms clock gives mean 2, std 0") {
  double now = 0;
  int calls = 0;
  auto t = time_protocol([&] { now += 2, ++calls; }, 20, 300, [&] { return now; });
  CHECK(t.mean_ms == 2.0);
  CHECK(t.std_ms == 0.0);
  CHECK(t.reps == 300);
  CHECK(t.samples_ms.size() == 300);
  CHECK(calls == 320);
}

TEST_CASE("alternating 1/3 ms clock gives mean 2, std 1") {
  double now = 0;
  int k = 0;
  auto t = time_protocol([&] { now += (k++ % 2 == 0) ? 1 : 3; }, 20, 300, [&] { return now; });
  CHECK(t.mean_ms == 2.0);
  CHECK(t.std_ms == 1.0);
}

TEST_CASE("warm-up calls are excluded from the statistics") {
  double now = 0;
  int k = 0;
  auto t = time_protocol([&] { now += (k++ < 20) ? 1000.0 : 2.0; }, 20, 300, [&] { return now; });
  CHECK(t.mean_ms == 2.0);
  CHECK(t.std_ms == 0.0);
  CHECK(t.warmup == 20);
}

TEST_CASE("real inference timing is finite and positive") {
  auto c = oracle::toy_model_config(32);
  LightTBNet<float> m(c);
  auto t = time_inference(m, 2, 5);
  CHECK(t.mean_ms > 0);
  CHECK(std::isfinite(t.std_ms));
  CHECK(m.training());  // mode restored
}

TEST_CASE("comparison outputs") {
  std::vector<ComparisonRow> rows;
  for (int n : {3, 4, 5}) {
    EfficiencyReport r;
    r.name = "LightTBNet (N=" + std::to_string(n) + ")";
    r.config = default_model_config(n);
    r.costs = count_costs(r.config);
    r.timing.mean_ms = n;
    r.timing.std_ms = 0.1;
    r.checkpoint_bytes = 1'000'000;
    rows.push_back(n == 4 ? comparison_row(r, 0.9, 0.91, 0.96) : comparison_row(r));
  }
  auto dir = fs::temp_directory_path() / "ltbn_eff";
  fs::create_directories(dir);
  write_comparison_csv(dir / "c.csv", rows);
  auto lines = read_lines(dir / "c.csv");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "name,acc,f1,auc,macs_g,params_m,time_mean_ms,time_std_ms,size_mb");
  CHECK(lines[1].rfind("LightTBNet (N=3),,,,", 0) == 0);
  CHECK(lines[2].rfind("LightTBNet (N=4),0.9", 0) == 0);
  CHECK(lines[3].rfind("LightTBNet (N=5)", 0) == 0);
  write_scatter_csv(dir / "s.csv", rows);
  CHECK(read_lines(dir / "s.csv")[0] == "name,auc,macs,params");
  std::ostringstream os;
  print_comparison_table(os, rows);
  CHECK(os.str().find('*') != std::string::npos);
  CHECK(os.str().find("LightTBNet (N=5)") != std::string::npos);
  fs::remove_all(dir);
}

#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library code they check.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lighttbnet/data.hpp"
#include "lighttbnet/image.hpp"
#include "lighttbnet/model.hpp"

namespace oracle {

/// Direct nested-loop cross-correlation, NCHW, zero padding. Counts every
/// multiply into *mults when given.
std::vector<double> naive_conv2d(const std::vector<double>& x, std::size_t n, std::size_t cin, std::size_t h,
                                 std::size_t w, const std::vector<double>& weight, std::size_t cout, std::size_t k,
                                 const std::vector<double>& bias, std::size_t stride, std::size_t pad,
                                 std::uint64_t* mults = nullptr);

/// Dense nested-loop y = W x (W is [out, in]); counts multiplies.
std::vector<double> naive_linear(const std::vector<double>& x, const std::vector<double>& weight,
                                 std::size_t in, std::size_t out, std::uint64_t* mults = nullptr);

/// Multiplies performed by a naive per-layer forward of `config`, excluding
/// bias adds, batch norm, activations and pooling. Shapes are propagated by
/// hand from the architecture description.
std::uint64_t naive_model_multiplies(const ltbn::ModelConfig& config);

/// Stored scalars of a model enumerated by hand from the architecture.
std::uint64_t enumerated_params(const ltbn::ModelConfig& config);

/// Central differences of f at x with step h.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                double h = 1e-6);

/// Largest |a-b| / max(|a|,|b|,floor) over two vectors.
double max_rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-3);

/// Fraction of positive/negative pairs with the positive scored higher,
/// ties counted as one half. Exact rational value as a double.
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Global histogram equalization of an 8-bit image:
/// out = round(cdf(v) * 255 / N), the textbook mapping.
ltbn::GrayImage8 histogram_equalize(const ltbn::GrayImage8& img);

/// 800 records with cohort/label sizes MC 80 normal / 58 TB and SZ 326 / 336,
/// with sex and age drawn from a fixed-seed RNG. Image paths are fake.
std::vector<ltbn::SampleRecord> synthetic_manifest(std::uint64_t seed = 7);

/// Synthetic radiograph-like image: smooth background, noise, and for
/// positives either a bright blob or a ring with a darker core.
ltbn::GrayImageF toy_image(int size, bool positive, std::mt19937_64& rng);

struct ToySet {
  std::vector<ltbn::GrayImageF> images;
  std::vector<int> labels;
  std::vector<ltbn::SampleRecord> records;  // one cohort, sex/age varied
};

/// `per_class` positives and negatives, interleaved.
ToySet toy_dataset(int size, int per_class, std::uint64_t seed);

/// Small N=3 model for the toy experiments.
ltbn::ModelConfig toy_model_config(int size = 64);

}  // namespace oracle

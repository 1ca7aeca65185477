#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltbn {

enum class Sex { Male, Female, Unknown };

const char* sex_code(Sex s);

/// One labelled radiograph. Each record is treated as one patient.
struct SampleRecord {
  std::string image_path;
  int label = 0;  // 1 = TB
  std::string cohort;
  Sex sex = Sex::Unknown;
  std::optional<double> age;

  bool operator==(const SampleRecord&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(const std::string& msg, std::size_t line)
      : std::runtime_error(line ? "manifest line " + std::to_string(line) + ": " + msg : "manifest: " + msg),
        line_(line) {}
  /// 1-based line number (header is line 1), 0 when not line-specific.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// CSV with header containing image_path,label,cohort,sex,age (any column
/// order, extra columns ignored). Sex accepts M/F (any case) and treats
/// anything else as unknown; age accepts a leading number ("45", "045Y")
/// and treats anything else as unknown. Relative image paths resolve
/// against `base_dir`.
std::vector<SampleRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
std::vector<SampleRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

/// Age strata: [0,18), [18,40), [40,60), [60,inf), unknown (4).
int age_bin(const std::optional<double>& age);

struct Assignment {
  bool test = false;
  int fold = -1;  // 0..n_folds-1 for training records
  bool operator==(const Assignment&) const = default;
};

struct SplitAssignment {
  std::vector<Assignment> rows;  // aligned with the record list
  std::uint64_t seed = 0;
  int n_folds = 5;

  std::vector<std::size_t> test_indices() const;
  std::vector<std::size_t> fold_indices(int fold) const;
  /// All training records outside `fold`.
  std::vector<std::size_t> train_indices(int fold) const;
};

struct SplitOptions {
  double test_frac = 0.2;
  int n_folds = 5;
  std::size_t min_stratum = 5;
  std::uint64_t seed = 0;
};

/// Stratum key of a record at a merge level: 0 = cohort/label/sex/age-bin,
/// 1 = cohort/label/sex, 2 = cohort/label.
std::string stratum_key(const SampleRecord& r, int level);

/// Joint stratification by cohort x label x sex x age bin. Strata with fewer
/// than `min_stratum` records fall back to coarser keys (drop age, then
/// sex). A leftover still below the minimum after dropping sex joins the
/// largest stratum of its cohort and label. Within each final stratum records are shuffled with the seed; the
/// test quota of each stratum is floor or ceil of test_frac * n, chosen so
/// the total equals round(test_frac * N) (largest remainder). The rest go
/// round-robin into folds, continuing the fold counter across strata.
SplitAssignment stratified_split(const std::vector<SampleRecord>& records, const SplitOptions& opts);

/// Final stratum key per record, as used by stratified_split.
std::vector<std::string> final_strata(const std::vector<SampleRecord>& records, std::size_t min_stratum);

/// CSV: image_path,assignment,fold_id where assignment is TEST or TRAIN and
/// fold_id is empty for TEST.
void write_split_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                     const SplitAssignment& split);
/// Reads a split CSV and aligns it with `records` by image_path.
SplitAssignment read_split_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

enum class BatchRole { Train, Val };

/// Record indices grouped into batches. Train role covers the training
/// records outside `fold`, shuffled per epoch; Val role covers `fold` in
/// record order. The last partial batch is kept.
std::vector<std::vector<std::size_t>> make_batches(const SplitAssignment& split, int fold, BatchRole role,
                                                   std::size_t batch_size, std::uint64_t seed, int epoch);

}  // namespace ltbn

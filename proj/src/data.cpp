#include "lighttbnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "lighttbnet/augment.hpp"

namespace ltbn {

const char* sex_code(Sex s) {
  switch (s) {
    case Sex::Male: return "M";
    case Sex::Female: return "F";
    case Sex::Unknown: return "U";
  }
  return "U";
}

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

Sex parse_sex(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "M" || s == "MALE") return Sex::Male;
  if (s == "F" || s == "FEMALE") return Sex::Female;
  return Sex::Unknown;
}

std::optional<double> parse_age(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  if (i == 0) return std::nullopt;
  try {
    return std::stod(s.substr(0, i));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<SampleRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv(trim(line));
      break;
    }
  }
  if (header.empty()) throw ManifestError("no records", 0);

  const char* required[] = {"image_path", "label", "cohort", "sex", "age"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* r : required) {
    if (!col.count(r)) throw ManifestError(std::string("missing column '") + r + "'", lineno);
  }

  std::vector<SampleRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv(trim(line));
    if (f.size() < header.size()) {
      throw ManifestError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                          lineno);
    }
    SampleRecord r;
    r.image_path = f[col["image_path"]];
    if (r.image_path.empty()) throw ManifestError("empty image_path", lineno);
    std::filesystem::path p(r.image_path);
    if (p.is_relative() && !base_dir.empty()) r.image_path = (base_dir / p).lexically_normal().string();
    const auto& lab = f[col["label"]];
    if (lab == "0") {
      r.label = 0;
    } else if (lab == "1") {
      r.label = 1;
    } else {
      throw ManifestError("label must be 0 or 1, got '" + lab + "'", lineno);
    }
    r.cohort = f[col["cohort"]];
    if (r.cohort.empty()) throw ManifestError("empty cohort", lineno);
    r.sex = parse_sex(f[col["sex"]]);
    r.age = parse_age(f[col["age"]]);
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ManifestError("no records", 0);
  return out;
}

std::vector<SampleRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read " + path.string(), 0);
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ManifestError("cannot write " + path.string(), 0);
  out << "image_path,label,cohort,sex,age\n";
  for (const auto& r : records) {
    out << csv_field(r.image_path) << ',' << r.label << ',' << csv_field(r.cohort) << ',' << sex_code(r.sex) << ',';
    if (r.age) out << *r.age;
    out << '\n';
  }
}

int age_bin(const std::optional<double>& age) {
  if (!age) return 4;
  if (*age < 18) return 0;
  if (*age < 40) return 1;
  if (*age < 60) return 2;
  return 3;
}

std::vector<std::size_t> SplitAssignment::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].test) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SplitAssignment::fold_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].test && rows[i].fold == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SplitAssignment::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].test && rows[i].fold != fold) out.push_back(i);
  }
  return out;
}

std::string stratum_key(const SampleRecord& r, int level) {
  std::string k = r.cohort + "|" + std::to_string(r.label);
  if (level <= 1) k += std::string("|") + sex_code(r.sex);
  if (level == 0) k += "|" + std::to_string(age_bin(r.age));
  return k;
}

std::vector<std::string> final_strata(const std::vector<SampleRecord>& records, std::size_t min_stratum) {
  std::vector<std::string> keys(records.size());
  std::vector<int> level(records.size(), 0);
  for (int lv = 0; lv < 2; ++lv) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (level[i] == lv) ++counts[stratum_key(records[i], lv)];
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (level[i] == lv && counts[stratum_key(records[i], lv)] < min_stratum) level[i] = lv + 1;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) keys[i] = std::to_string(level[i]) + "#" + stratum_key(records[i], level[i]);

  // A leftover that is still small at the coarsest level joins the largest
  // stratum sharing its cohort and label, when there is one.
  std::map<std::string, std::size_t> sizes;
  for (const auto& k : keys) ++sizes[k];
  std::map<std::string, std::pair<std::size_t, std::string>> largest;  // cohort|label -> (size, key)
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& best = largest[stratum_key(records[i], 2)];
    const auto n = sizes[keys[i]];
    if (n > best.first || (n == best.first && keys[i] < best.second)) best = {n, keys[i]};
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (level[i] == 2 && sizes[keys[i]] < min_stratum) keys[i] = largest[stratum_key(records[i], 2)].second;
  }
  return keys;
}

SplitAssignment stratified_split(const std::vector<SampleRecord>& records, const SplitOptions& opts) {
  if (records.empty()) throw std::invalid_argument("stratified_split: no records");
  if (opts.n_folds < 2) throw std::invalid_argument("stratified_split: need at least 2 folds");
  if (opts.test_frac < 0.0 || opts.test_frac >= 1.0) throw std::invalid_argument("stratified_split: test_frac must be in [0,1)");

  const auto keys = final_strata(records, opts.min_stratum);
  std::map<std::string, std::vector<std::size_t>> strata;  // ordered for determinism
  for (std::size_t i = 0; i < records.size(); ++i) strata[keys[i]].push_back(i);

  // Largest-remainder apportionment of the test quota.
  const auto total_test = static_cast<std::size_t>(std::llround(opts.test_frac * static_cast<double>(records.size())));
  std::vector<std::pair<std::string, double>> remainders;
  std::map<std::string, std::size_t> quota;
  std::size_t assigned = 0;
  for (const auto& [k, idx] : strata) {
    const double exact = opts.test_frac * static_cast<double>(idx.size());
    const auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
    quota[k] = base;
    assigned += base;
    remainders.emplace_back(k, exact - static_cast<double>(base));
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; assigned < total_test && i < remainders.size(); ++i) {
    if (remainders[i].second > 1e-9) {
      ++quota[remainders[i].first];
      ++assigned;
    }
  }

  SplitAssignment split;
  split.seed = opts.seed;
  split.n_folds = opts.n_folds;
  split.rows.resize(records.size());
  std::mt19937_64 rng(mix_seed(opts.seed));
  std::size_t fold_counter = 0;
  for (auto& [k, idx] : strata) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t q = quota[k];
    for (std::size_t j = 0; j < idx.size(); ++j) {
      auto& row = split.rows[idx[j]];
      if (j < q) {
        row.test = true;
        row.fold = -1;
      } else {
        row.fold = static_cast<int>(fold_counter++ % static_cast<std::size_t>(opts.n_folds));
      }
    }
  }
  return split;
}

void write_split_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                     const SplitAssignment& split) {
  if (records.size() != split.rows.size()) throw std::invalid_argument("write_split_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "image_path,assignment,fold_id\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << csv_field(records[i].image_path) << ',' << (split.rows[i].test ? "TEST" : "TRAIN") << ',';
    if (!split.rows[i].test) out << split.rows[i].fold;
    out << '\n';
  }
}

SplitAssignment read_split_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read split file " + path.string());
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < records.size(); ++i) by_path[records[i].image_path] = i;
  SplitAssignment split;
  split.rows.resize(records.size());
  std::vector<bool> seen(records.size(), false);
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  int max_fold = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv(trim(line));
    if (f.size() < 3) throw std::runtime_error("split line " + std::to_string(lineno) + ": expected 3 fields");
    auto it = by_path.find(f[0]);
    if (it == by_path.end()) throw std::runtime_error("split line " + std::to_string(lineno) + ": unknown image " + f[0]);
    auto& row = split.rows[it->second];
    seen[it->second] = true;
    if (f[1] == "TEST") {
      row = {true, -1};
    } else if (f[1] == "TRAIN") {
      row = {false, std::stoi(f[2])};
      max_fold = std::max(max_fold, row.fold);
    } else {
      throw std::runtime_error("split line " + std::to_string(lineno) + ": bad assignment " + f[1]);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw std::runtime_error("split file has no row for " + records[i].image_path);
  }
  split.n_folds = max_fold + 1;
  return split;
}

std::vector<std::vector<std::size_t>> make_batches(const SplitAssignment& split, int fold, BatchRole role,
                                                   std::size_t batch_size, std::uint64_t seed, int epoch) {
  if (fold < 0 || fold >= split.n_folds) throw std::invalid_argument("make_batches: invalid fold " + std::to_string(fold));
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be positive");
  auto idx = role == BatchRole::Train ? split.train_indices(fold) : split.fold_indices(fold);
  if (role == BatchRole::Train) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(epoch), 0x7261696eULL));
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    out.emplace_back(idx.begin() + static_cast<long>(i),
                     idx.begin() + static_cast<long>(std::min(idx.size(), i + batch_size)));
  }
  return out;
}

}  // namespace ltbn

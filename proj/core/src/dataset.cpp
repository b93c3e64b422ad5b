#include "riaft/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "riaft/rng.hpp"

namespace riaft {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool parse_int(const std::string& s, long& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::string codebook_path(const std::string& csv_path) { return csv_path + ".codebook.json"; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

bool MissingMask::any() const {
  for (const auto& c : cols)
    for (auto b : c)
      if (b) return true;
  return false;
}

bool MissingMask::row_incomplete(std::size_t row) const {
  for (const auto& c : cols)
    if (c[row]) return true;
  return false;
}

std::vector<std::size_t> SurvivalDataset::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n_clusters), 0);
  for (int c : cluster) sizes[static_cast<std::size_t>(c - 1)]++;
  return sizes;
}

void SurvivalDataset::check_invariants(bool allow_empty_clusters) const {
  const std::size_t nrows = n();
  if (delta.size() != nrows || cluster.size() != nrows)
    throw DataError("inconsistent column lengths");
  if (has_treatment() && treatment.size() != nrows)
    throw DataError("inconsistent treatment column length");
  for (std::size_t i = 0; i < nrows; ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i]))
      throw DataError("nonpositive time at row " + std::to_string(i + 1), static_cast<long>(i + 1), "y");
    if (delta[i] != 0 && delta[i] != 1)
      throw DataError("event indicator not in {0,1} at row " + std::to_string(i + 1), static_cast<long>(i + 1),
                      "delta");
    if (cluster[i] < 1 || cluster[i] > n_clusters)
      throw DataError("unknown cluster label at row " + std::to_string(i + 1), static_cast<long>(i + 1), "cluster");
    if (has_treatment() && (treatment[i] < 1 || treatment[i] > n_arms))
      throw DataError("unknown treatment label at row " + std::to_string(i + 1), static_cast<long>(i + 1), "a");
  }
  if (!allow_empty_clusters) {
    const auto sizes = cluster_sizes();
    for (std::size_t k = 0; k < sizes.size(); ++k)
      if (sizes[k] == 0) throw DataError("empty cluster " + std::to_string(k + 1), -1, "cluster");
    if (has_treatment()) {
      std::vector<std::size_t> arm(static_cast<std::size_t>(n_arms), 0);
      for (int a : treatment) arm[static_cast<std::size_t>(a - 1)]++;
      for (std::size_t j = 0; j < arm.size(); ++j)
        if (arm[j] == 0) throw DataError("empty treatment arm " + std::to_string(j + 1), -1, "a");
    }
  }
  if (X.size() != column_names.size() || column_types.size() != column_names.size() ||
      levels.size() != column_names.size() || mask.cols.size() != column_names.size())
    throw DataError("inconsistent covariate metadata");
  for (std::size_t j = 0; j < X.size(); ++j)
    if (X[j].size() != nrows || mask.cols[j].size() != nrows)
      throw DataError("covariate column length mismatch: " + column_names[j], -1, column_names[j]);
}

SurvivalDataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  // optional sidecar pins column types and level order
  std::unordered_map<std::string, std::vector<std::string>> sidecar_levels;
  {
    std::ifstream cb(codebook_path(path));
    if (cb) {
      nlohmann::json j;
      cb >> j;
      if (j.contains("columns"))
        for (auto& [name, lv] : j["columns"].items())
          sidecar_levels[name] = lv.get<std::vector<std::string>>();
    }
  }

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const auto header = split_csv_line(line);

  long y_ix = -1, d_ix = -1, c_ix = -1, a_ix = -1;
  std::vector<long> cov_ix;
  std::vector<std::string> cov_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& h = header[j];
    if (h == schema.y_col)
      y_ix = static_cast<long>(j);
    else if (h == schema.delta_col)
      d_ix = static_cast<long>(j);
    else if (h == schema.cluster_col)
      c_ix = static_cast<long>(j);
    else if (h == schema.treatment_col)
      a_ix = static_cast<long>(j);
    else {
      cov_ix.push_back(static_cast<long>(j));
      cov_names.push_back(h);
    }
  }
  if (y_ix < 0) throw DataError("missing required column: " + schema.y_col, -1, schema.y_col);
  if (d_ix < 0) throw DataError("missing required column: " + schema.delta_col, -1, schema.delta_col);
  if (c_ix < 0) throw DataError("missing required column: " + schema.cluster_col, -1, schema.cluster_col);

  const std::size_t L = cov_names.size();
  std::vector<std::vector<std::string>> raw_cols(L);
  SurvivalDataset ds;
  ds.column_names = cov_names;

  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()),
                      row);
    double yv;
    if (is_missing_token(cells[static_cast<std::size_t>(y_ix)]) ||
        !parse_double(cells[static_cast<std::size_t>(y_ix)], yv))
      throw DataError("unparseable time at row " + std::to_string(row), row, schema.y_col);
    if (!(yv > 0.0))
      throw DataError("nonpositive time at row " + std::to_string(row), row, schema.y_col);
    long dv, cv;
    if (!parse_int(cells[static_cast<std::size_t>(d_ix)], dv) || (dv != 0 && dv != 1))
      throw DataError("event indicator not in {0,1} at row " + std::to_string(row), row, schema.delta_col);
    if (!parse_int(cells[static_cast<std::size_t>(c_ix)], cv) || cv < 1)
      throw DataError("unknown cluster label at row " + std::to_string(row), row, schema.cluster_col);
    ds.y.push_back(yv);
    ds.delta.push_back(static_cast<int>(dv));
    ds.cluster.push_back(static_cast<int>(cv));
    if (a_ix >= 0) {
      long av;
      if (!parse_int(cells[static_cast<std::size_t>(a_ix)], av) || av < 1)
        throw DataError("unknown treatment label at row " + std::to_string(row), row, schema.treatment_col);
      ds.treatment.push_back(static_cast<int>(av));
    }
    for (std::size_t j = 0; j < L; ++j) raw_cols[j].push_back(cells[static_cast<std::size_t>(cov_ix[j])]);
  }
  const std::size_t n = ds.y.size();

  // decide column types: sidecar > schema force > numeric sniffing
  ds.column_types.assign(L, ColumnType::Continuous);
  ds.levels.assign(L, {});
  for (std::size_t j = 0; j < L; ++j) {
    const auto side = sidecar_levels.find(cov_names[j]);
    bool forced = side != sidecar_levels.end() ||
                  std::find(schema.categorical_cols.begin(), schema.categorical_cols.end(), cov_names[j]) !=
                      schema.categorical_cols.end();
    bool numeric = true;
    for (const auto& cell : raw_cols[j]) {
      double tmp;
      if (!is_missing_token(cell) && !parse_double(cell, tmp)) {
        numeric = false;
        break;
      }
    }
    if (forced || !numeric) {
      ds.column_types[j] = ColumnType::Categorical;
      if (side != sidecar_levels.end()) ds.levels[j] = side->second;
    }
  }

  ds.X.assign(L, std::vector<double>(n, 0.0));
  ds.mask.cols.assign(L, std::vector<std::uint8_t>(n, 0));
  for (std::size_t j = 0; j < L; ++j) {
    if (ds.column_types[j] == ColumnType::Continuous) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = raw_cols[j][i];
        if (is_missing_token(cell)) {
          ds.mask.set(i, j, true);
        } else {
          double v;
          if (!parse_double(cell, v))
            throw DataError("unparseable value at row " + std::to_string(i + 1) + " column " + cov_names[j],
                            static_cast<long>(i + 1), cov_names[j]);
          ds.X[j][i] = v;
        }
      }
    } else {
      std::unordered_map<std::string, int> code;
      for (std::size_t l = 0; l < ds.levels[j].size(); ++l) code[ds.levels[j][l]] = static_cast<int>(l);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = raw_cols[j][i];
        if (is_missing_token(cell)) {
          ds.mask.set(i, j, true);
          continue;
        }
        auto it = code.find(cell);
        if (it == code.end()) {
          if (!ds.levels[j].empty() && sidecar_levels.count(cov_names[j]))
            throw DataError("level not in codebook at row " + std::to_string(i + 1) + " column " + cov_names[j],
                            static_cast<long>(i + 1), cov_names[j]);
          it = code.emplace(cell, static_cast<int>(ds.levels[j].size())).first;
          ds.levels[j].push_back(cell);
        }
        ds.X[j][i] = static_cast<double>(it->second);
      }
    }
  }

  ds.n_clusters = 0;
  for (int c : ds.cluster) ds.n_clusters = std::max(ds.n_clusters, c);
  if (a_ix >= 0) {
    ds.n_arms = 0;
    for (int a : ds.treatment) ds.n_arms = std::max(ds.n_arms, a);
  }
  ds.check_invariants();
  return ds;
}

void save_dataset(const SurvivalDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "y,delta,cluster";
  if (ds.has_treatment()) out << ",a";
  for (const auto& name : ds.column_names) out << ',' << name;
  out << '\n';
  const std::size_t n = ds.n();
  for (std::size_t i = 0; i < n; ++i) {
    out << format_double(ds.y[i]) << ',' << ds.delta[i] << ',' << ds.cluster[i];
    if (ds.has_treatment()) out << ',' << ds.treatment[i];
    for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
      out << ',';
      if (ds.mask.at(i, j)) continue;  // empty cell
      if (ds.column_types[j] == ColumnType::Categorical)
        out << ds.levels[j][static_cast<std::size_t>(ds.X[j][i])];
      else
        out << format_double(ds.X[j][i]);
    }
    out << '\n';
  }

  bool any_categorical = std::any_of(ds.column_types.begin(), ds.column_types.end(),
                                     [](ColumnType t) { return t == ColumnType::Categorical; });
  if (any_categorical || ds.has_treatment()) {
    nlohmann::json j;
    j["columns"] = nlohmann::json::object();
    for (std::size_t c = 0; c < ds.n_covariates(); ++c)
      if (ds.column_types[c] == ColumnType::Categorical) j["columns"][ds.column_names[c]] = ds.levels[c];
    if (ds.has_treatment()) j["arms"] = ds.n_arms;
    std::ofstream cb(codebook_path(path));
    cb << j.dump(2) << '\n';
  }
}

ValidationReport validate(const SurvivalDataset& ds) {
  ValidationReport r;
  r.n = ds.n();
  r.n_clusters = ds.n_clusters;
  r.cluster_sizes = ds.cluster_sizes();
  double events = 0;
  for (int d : ds.delta) events += d;
  r.censoring_proportion = r.n == 0 ? 0.0 : 1.0 - events / static_cast<double>(r.n);
  std::size_t incomplete = 0;
  for (std::size_t i = 0; i < r.n; ++i)
    if (ds.mask.row_incomplete(i)) ++incomplete;
  r.incomplete_row_proportion = r.n == 0 ? 0.0 : static_cast<double>(incomplete) / static_cast<double>(r.n);
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    std::size_t miss = 0;
    for (auto b : ds.mask.cols[j]) miss += b;
    r.columns.push_back({ds.column_names[j], ds.column_types[j],
                         r.n == 0 ? 0.0 : static_cast<double>(miss) / static_cast<double>(r.n)});
  }
  if (ds.has_treatment()) {
    r.arm_counts.assign(static_cast<std::size_t>(ds.n_arms), 0);
    for (int a : ds.treatment) r.arm_counts[static_cast<std::size_t>(a - 1)]++;
  }
  return r;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  os << "n=" << n << " clusters=" << n_clusters << " (";
  for (std::size_t k = 0; k < cluster_sizes.size(); ++k) os << (k ? "," : "") << cluster_sizes[k];
  os << ") censoring=" << censoring_proportion << " incomplete_rows=" << incomplete_row_proportion;
  if (!arm_counts.empty()) {
    os << " arms=(";
    for (std::size_t j = 0; j < arm_counts.size(); ++j) os << (j ? "," : "") << arm_counts[j];
    os << ")";
  }
  os << "\n";
  for (const auto& c : columns)
    os << "  " << c.name << (c.type == ColumnType::Categorical ? " [cat]" : " [num]")
       << " missing=" << c.missing_proportion << "\n";
  return os.str();
}

SurvivalDataset subset_rows(const SurvivalDataset& ds, const std::vector<std::size_t>& rows) {
  SurvivalDataset out;
  out.n_clusters = ds.n_clusters;
  out.n_arms = ds.n_arms;
  out.column_names = ds.column_names;
  out.column_types = ds.column_types;
  out.levels = ds.levels;
  const std::size_t n = rows.size();
  out.y.reserve(n);
  out.delta.reserve(n);
  out.cluster.reserve(n);
  if (ds.has_treatment()) out.treatment.reserve(n);
  out.X.assign(ds.n_covariates(), {});
  out.mask.cols.assign(ds.n_covariates(), {});
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    out.X[j].reserve(n);
    out.mask.cols[j].reserve(n);
  }
  for (std::size_t s : rows) {
    out.y.push_back(ds.y[s]);
    out.delta.push_back(ds.delta[s]);
    out.cluster.push_back(ds.cluster[s]);
    if (ds.has_treatment()) out.treatment.push_back(ds.treatment[s]);
    for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
      out.X[j].push_back(ds.X[j][s]);
      out.mask.cols[j].push_back(ds.mask.cols[j][s]);
    }
  }
  out.check_invariants(/*allow_empty_clusters=*/true);
  return out;
}

SurvivalDataset bootstrap_resample(const SurvivalDataset& ds, std::uint64_t seed) {
  if (ds.n() == 0) throw DataError("bootstrap_resample: empty dataset");
  Rng rng(seed);
  const std::size_t n = ds.n();
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_below(n));
  return subset_rows(ds, rows);
}

}  // namespace riaft

#include "asbart/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "asbart/error.hpp"
#include "asbart/rng.hpp"

namespace asbart {

namespace {

using json = nlohmann::json;

Error io_error(const std::string& what) { return {ErrorCode::io, what}; }
Error parse_error(const std::string& what) { return {ErrorCode::parse, what}; }
Error schema_error(const std::string& what) { return {ErrorCode::schema, what}; }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_real(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace

void DatasetSchema::validate() const {
  if (target.empty()) throw invalid_argument("schema: target column name is empty");
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw invalid_argument("schema: empty column name");
    if (c.name == target) throw invalid_argument("schema: predictor '" + c.name + "' has the target's name");
    if (!names.insert(c.name).second) throw invalid_argument("schema: duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::categorical) {
      if (c.levels.empty()) throw invalid_argument("schema: categorical column '" + c.name + "' has no levels");
      std::set<std::string> levels(c.levels.begin(), c.levels.end());
      if (levels.size() != c.levels.size()) {
        throw invalid_argument("schema: categorical column '" + c.name + "' has duplicate levels");
      }
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw io_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw io_error("cannot rename into '" + path.string() + "'");
  }
}

DatasetSchema parse_schema(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw parse_error(std::string("schema: ") + e.what());
  }
  DatasetSchema schema;
  try {
    schema.target = doc.at("target").get<std::string>();
    for (const auto& col : doc.at("columns")) {
      ColumnSpec spec;
      spec.name = col.at("name").get<std::string>();
      const auto kind = col.value("kind", std::string("ordinal"));
      if (kind == "ordinal") {
        spec.kind = ColumnKind::ordinal;
      } else if (kind == "categorical") {
        spec.kind = ColumnKind::categorical;
        spec.levels = col.at("levels").get<std::vector<std::string>>();
      } else {
        throw parse_error("schema: column '" + spec.name + "' has unknown kind '" + kind + "'");
      }
      schema.columns.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw parse_error(std::string("schema: ") + e.what());
  }
  schema.validate();
  return schema;
}

std::string schema_to_json(const DatasetSchema& schema) {
  json doc;
  doc["target"] = schema.target;
  doc["columns"] = json::array();
  for (const auto& c : schema.columns) {
    json col{{"name", c.name}, {"kind", c.kind == ColumnKind::ordinal ? "ordinal" : "categorical"}};
    if (c.kind == ColumnKind::categorical) col["levels"] = c.levels;
    doc["columns"].push_back(std::move(col));
  }
  return doc.dump();
}

DatasetSchema load_schema(const std::filesystem::path& path) { return parse_schema(read_file(path)); }

DatasetSchema infer_schema(const std::filesystem::path& csv_path, const std::string& target) {
  const auto text = read_file(csv_path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw parse_error("'" + csv_path.string() + "' is empty");
  DatasetSchema schema;
  schema.target = target;
  for (auto cell : split_row(lines.front())) {
    if (cell != target) schema.columns.push_back({std::string(cell), ColumnKind::ordinal, {}});
  }
  schema.validate();
  return schema;
}

Dataset parse_csv(std::string_view text, const DatasetSchema& schema, TargetPolicy target, std::string_view source) {
  schema.validate();
  const auto lines = split_lines(text);
  if (lines.empty()) throw parse_error(std::string(source) + ": missing header row");
  const auto header = split_row(lines.front());
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (!position.emplace(header[k], k).second) {
      throw parse_error(std::string(source) + ": duplicate header column '" + std::string(header[k]) + "'");
    }
  }

  std::vector<std::size_t> source_col(schema.columns.size());
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    const auto it = position.find(schema.columns[j].name);
    if (it == position.end()) throw schema_error(std::string(source) + ": missing column '" + schema.columns[j].name + "'");
    source_col[j] = it->second;
  }
  Dataset data;
  data.schema = schema;
  const auto target_it = position.find(schema.target);
  data.has_target = target_it != position.end();
  if (!data.has_target && target == TargetPolicy::required) {
    throw schema_error(std::string(source) + ": missing target column '" + schema.target + "'");
  }
  for (auto name : header) {
    const bool known = name == schema.target || std::any_of(schema.columns.begin(), schema.columns.end(),
                                                            [&](const ColumnSpec& c) { return c.name == name; });
    if (!known) warn(std::string(source) + ": ignoring unknown column '" + std::string(name) + "'");
  }

  const std::size_t rows = lines.size() - 1;
  if (rows == 0) throw parse_error(std::string(source) + ": no data rows");
  data.x = FeatureMatrix(rows, schema.columns.size());
  if (data.has_target) data.y.resize(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const auto cells = split_row(lines[r + 1]);
    const std::string where = std::string(source) + ": row " + std::to_string(r + 1);
    if (cells.size() != header.size()) {
      throw parse_error(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                        std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < schema.columns.size(); ++j) {
      const auto& col = schema.columns[j];
      const auto cell = cells[source_col[j]];
      if (col.kind == ColumnKind::ordinal) {
        double v = 0.0;
        if (!parse_real(cell, v)) {
          throw parse_error(where + ", column \"" + col.name + "\": cannot parse '" + std::string(cell) + "' as a number");
        }
        data.x(r, j) = v;
      } else {
        const auto lv = std::find(col.levels.begin(), col.levels.end(), cell);
        if (lv == col.levels.end()) {
          throw schema_error(where + ", column \"" + col.name + "\": unknown category level '" + std::string(cell) + "'");
        }
        data.x(r, j) = static_cast<double>(lv - col.levels.begin());
      }
    }
    if (data.has_target) {
      double v = 0.0;
      const auto cell = cells[target_it->second];
      if (!parse_real(cell, v)) {
        throw parse_error(where + ", column \"" + schema.target + "\": cannot parse '" + std::string(cell) + "' as a number");
      }
      data.y[r] = v;
    }
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema, TargetPolicy target) {
  return parse_csv(read_file(path), schema, target, path.string());
}

namespace {

void append_real(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t j = 0; j < data.schema.columns.size(); ++j) {
    if (j) out += ',';
    out += data.schema.columns[j].name;
  }
  if (data.has_target) out += (data.schema.columns.empty() ? "" : ",") + data.schema.target;
  out += '\n';
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    for (std::size_t j = 0; j < data.x.cols(); ++j) {
      if (j) out += ',';
      const auto& col = data.schema.columns[j];
      if (col.kind == ColumnKind::categorical) {
        out += col.levels.at(static_cast<std::size_t>(data.x(i, j)));
      } else {
        append_real(out, data.x(i, j));
      }
    }
    if (data.has_target) {
      if (data.x.cols()) out += ',';
      append_real(out, data.y[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<FeatureInfo> expanded_features(const DatasetSchema& schema) {
  std::vector<FeatureInfo> out;
  for (const auto& c : schema.columns) {
    if (c.kind == ColumnKind::ordinal) {
      out.push_back({c.name, false, c.name, -1});
    } else {
      for (std::size_t l = 0; l < c.levels.size(); ++l) {
        out.push_back({c.name + "=" + c.levels[l], true, c.name, static_cast<int>(l)});
      }
    }
  }
  return out;
}

Design expand_dummies(const Dataset& data) {
  Design design;
  design.features = expanded_features(data.schema);
  design.x = FeatureMatrix(data.x.rows(), design.features.size());
  std::size_t out_col = 0;
  for (std::size_t j = 0; j < data.schema.columns.size(); ++j) {
    const auto& c = data.schema.columns[j];
    if (c.kind == ColumnKind::ordinal) {
      std::copy(data.x.col(j).begin(), data.x.col(j).end(), design.x.col(out_col).begin());
      ++out_col;
      continue;
    }
    for (std::size_t i = 0; i < data.x.rows(); ++i) {
      const auto level = static_cast<std::size_t>(data.x(i, j));
      design.x(i, out_col + level) = 1.0;
    }
    out_col += c.levels.size();
  }
  return design;
}

NoiseLevel parse_noise_level(std::string_view name) {
  if (name == "high") return NoiseLevel::high;
  if (name == "low") return NoiseLevel::low;
  throw invalid_argument("unknown noise level '" + std::string(name) + "' (expected high|low)");
}

double friedman_function(std::span<const double> x) {
  if (x.size() < 5) throw invalid_argument("friedman_function: need at least 5 features");
  constexpr double pi = 3.14159265358979323846;
  const double d = x[2] - 0.5;
  return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * d * d + 10.0 * x[3] + 5.0 * x[4];
}

FriedmanData gen_friedman(const FriedmanSpec& spec) {
  if (spec.n < 1) throw invalid_argument("gen_friedman: n must be >= 1");
  if (spec.p < 5) throw invalid_argument("gen_friedman: p must be >= 5");
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  FriedmanData out;
  auto& data = out.data;
  data.schema.target = "y";
  for (std::size_t j = 0; j < spec.p; ++j) data.schema.columns.push_back({"x" + std::to_string(j + 1), ColumnKind::ordinal, {}});
  data.x = FeatureMatrix(spec.n, spec.p);
  out.truth.resize(spec.n);
  std::vector<double> row(spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.p; ++j) row[j] = data.x(i, j) = unif(rng);
    out.truth[i] = friedman_function(row);
  }
  double noise_sd = 1.0;
  if (spec.noise == NoiseLevel::high) {
    const double mean = std::accumulate(out.truth.begin(), out.truth.end(), 0.0) / static_cast<double>(spec.n);
    double ss = 0.0;
    for (double f : out.truth) ss += (f - mean) * (f - mean);
    noise_sd = spec.n > 1 ? std::sqrt(ss / static_cast<double>(spec.n - 1)) : 0.0;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  data.y.resize(spec.n);
  data.has_target = true;
  for (std::size_t i = 0; i < spec.n; ++i) data.y[i] = out.truth[i] + noise_sd * normal(rng);
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw invalid_argument("rmse: length mismatch or empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) ss += (predicted[i] - truth[i]) * (predicted[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

}  // namespace asbart

namespace asbart {

FittedModel fit_dataset(const Dataset& data, const FitConfig& config) {
  if (!data.has_target) throw Error(ErrorCode::schema, "fit: dataset has no target column");
  const Design design = expand_dummies(data);
  FittedModel model = fit(design.x, design.features, data.y, config);
  model.schema = data.schema;
  return model;
}

FeatureMatrix model_design(const FittedModel& model, const Dataset& data) {
  if (!model.schema.target.empty() && !(data.schema.columns == model.schema.columns)) {
    throw Error(ErrorCode::schema, "dataset columns do not match the model's training schema");
  }
  Design design = expand_dummies(data);
  if (design.features != model.features) {
    throw Error(ErrorCode::schema, "dataset feature layout does not match the model");
  }
  return std::move(design.x);
}

}  // namespace asbart

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "asbart/dataio.hpp"
#include "asbart/error.hpp"

using namespace asbart;

namespace {

DatasetSchema ordinal_schema(std::vector<std::string> names, std::string target = "y") {
  DatasetSchema schema;
  for (auto& n : names) schema.columns.push_back({n, ColumnKind::ordinal, {}});
  schema.target = std::move(target);
  return schema;
}

std::string error_message(auto&& fn, ErrorCode& code) {
  try {
    fn();
  } catch (const Error& e) {
    code = e.code();
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("csv: basic load") {
  const auto data = parse_csv("x1,y\n1.5,2\n-3,4e-1\n0,7\n", ordinal_schema({"x1"}));
  CHECK(data.x.rows() == 3);
  CHECK(data.x.cols() == 1);
  CHECK(data.x(1, 0) == -3.0);
  CHECK(data.y == std::vector<double>{2.0, 0.4, 7.0});
  CHECK(data.has_target);
}

TEST_CASE("csv: unparseable cell names its row and column") {
  ErrorCode code{};
  const auto msg = error_message([] { parse_csv("x1,y\n1,2\nabc,3\n4,5\n", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::parse);
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("column \"x1\"") != std::string::npos);
}

TEST_CASE("csv: unknown category level") {
  DatasetSchema schema;
  schema.columns.push_back({"c", ColumnKind::categorical, {"a", "b"}});
  schema.target = "y";
  ErrorCode code{};
  const auto msg = error_message([&] { parse_csv("c,y\na,1\nc,2\n", schema); }, code);
  CHECK(code == ErrorCode::schema);
  CHECK(msg.find("'c'") != std::string::npos);
}

TEST_CASE("csv: missing columns, ragged rows, empty input") {
  ErrorCode code{};
  error_message([] { parse_csv("x2,y\n1,2\n", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::schema);
  error_message([] { parse_csv("x1\n1\n", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::schema);
  CHECK(parse_csv("x1\n1\n", ordinal_schema({"x1"}), TargetPolicy::optional).y.empty());
  error_message([] { parse_csv("x1,y\n1,2,3\n", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::parse);
  error_message([] { parse_csv("x1,y\n", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::parse);
  error_message([] { parse_csv("", ordinal_schema({"x1"})); }, code);
  CHECK(code == ErrorCode::parse);
}

TEST_CASE("csv: columns are matched by name and unknown columns are ignored with a warning") {
  std::vector<std::string> warnings;
  set_warning_handler([&](std::string_view m) { warnings.emplace_back(m); });
  const auto a = parse_csv("x1,x2,y\n1,2,3\n4,5,6\n", ordinal_schema({"x1", "x2"}));
  const auto b = parse_csv("y,extra,x2,x1\n3,9,2,1\n6,9,5,4\n", ordinal_schema({"x1", "x2"}));
  set_warning_handler(nullptr);
  CHECK(a.y == b.y);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(a.x(i, j) == b.x(i, j));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("extra") != std::string::npos);
}

TEST_CASE("csv: tolerates CRLF and trailing blank lines") {
  const auto data = parse_csv("x1,y\r\n1,2\r\n3,4\r\n\r\n", ordinal_schema({"x1"}));
  CHECK(data.x.rows() == 2);
  CHECK(data.y[1] == 4.0);
}

TEST_CASE("csv: write then load round-trips") {
  const auto path = std::filesystem::temp_directory_path() / "asbart_dataio_roundtrip.csv";
  DatasetSchema schema = ordinal_schema({"x1"});
  schema.columns.push_back({"c", ColumnKind::categorical, {"lo", "hi"}});
  const auto data = parse_csv("x1,c,y\n0.1,hi,1\n0.30000000000000004,lo,-2.5\n", schema);
  write_csv(data, path);
  const auto back = load_csv(path, schema);
  std::filesystem::remove(path);
  CHECK(back.y == data.y);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(back.x(i, j) == data.x(i, j));
  CHECK_THROWS_AS(load_csv("/nonexistent/asbart.csv", schema), Error);
}

TEST_CASE("schema documents") {
  const auto schema = parse_schema(R"({"target": "y", "columns": [
      {"name": "x1", "kind": "ordinal"},
      {"name": "c", "kind": "categorical", "levels": ["a", "b", "c"]}]})");
  CHECK(schema.target == "y");
  REQUIRE(schema.columns.size() == 2);
  CHECK(schema.columns[1].levels.size() == 3);
  CHECK(parse_schema(schema_to_json(schema)) == schema);
  CHECK_THROWS_AS(parse_schema("{"), Error);
  CHECK_THROWS_AS(parse_schema(R"({"target": "y", "columns": [{"name": "c", "kind": "categorical", "levels": []}]})"),
                  Error);
  CHECK_THROWS_AS(parse_schema(R"({"target": "y", "columns": [{"name": "c", "kind": "nominal"}]})"), Error);
  CHECK_THROWS_AS(parse_schema(R"({"target": "y", "columns": [{"name": "y", "kind": "ordinal"}]})"), Error);
}

TEST_CASE("dummy expansion") {
  DatasetSchema schema = ordinal_schema({"x1"});
  schema.columns.push_back({"c", ColumnKind::categorical, {"a", "b", "c"}});
  const auto data = parse_csv("x1,c,y\n0.5,b,1\n1.5,a,2\n2.5,c,3\n", schema);
  const auto design = expand_dummies(data);
  REQUIRE(design.x.cols() == 4);
  CHECK(design.features[1].name == "c=a");
  CHECK(design.features[3].is_dummy);
  CHECK_FALSE(design.features[0].is_dummy);
  CHECK(design.x.row(0) == std::vector<double>{0.5, 0.0, 1.0, 0.0});
  for (std::size_t i = 0; i < 3; ++i) {
    double block = 0.0;
    std::size_t hot = 0;
    for (std::size_t k = 1; k < 4; ++k) {
      block += design.x(i, k);
      if (design.x(i, k) == 1.0) hot = k - 1;
    }
    CHECK(block == 1.0);
    CHECK(static_cast<double>(hot) == data.x(i, 1));
  }
  CHECK(expanded_features(schema) == design.features);

  const auto plain = parse_csv("x1,y\n1,2\n3,4\n", ordinal_schema({"x1"}));
  const auto same = expand_dummies(plain);
  CHECK(same.x.cols() == 1);
  CHECK(same.x(1, 0) == 3.0);
}

TEST_CASE("friedman function reference values") {
  std::vector<double> x(20, 0.0);
  CHECK(friedman_function(x) == doctest::Approx(5.0).epsilon(1e-15));
  x[0] = 0.5;
  x[1] = 1.0;
  x[2] = 0.5;
  CHECK(friedman_function(x) == doctest::Approx(10.0).epsilon(1e-15));
  auto y = x;
  for (std::size_t j = 5; j < 20; ++j) y[j] = 1.7 - 0.1 * static_cast<double>(j);
  CHECK(friedman_function(y) == friedman_function(x));
}

TEST_CASE("friedman generator: reproducible, in range, truth channel wired") {
  const FriedmanSpec spec{300, 20, NoiseLevel::high, 5};
  const auto a = gen_friedman(spec);
  const auto b = gen_friedman(spec);
  CHECK(a.data.y == b.data.y);
  CHECK(a.truth == b.truth);
  CHECK(a.data.x.cols() == 20);
  for (std::size_t j = 0; j < 20; ++j)
    for (double v : a.data.x.col(j)) CHECK((v >= -2.0 && v <= 2.0));
  for (std::size_t i = 0; i < 300; ++i) CHECK(a.truth[i] == friedman_function(a.data.x.row(i)));
  CHECK(rmse(a.truth, a.truth) == 0.0);
  CHECK(a.data.schema.columns.size() == 20);
}

TEST_CASE("friedman noise levels") {
  const auto high = gen_friedman({5000, 20, NoiseLevel::high, 1});
  const auto low = gen_friedman({5000, 20, NoiseLevel::low, 1});
  auto noise_sd = [](const FriedmanData& d) {
    double ss = 0.0;
    for (std::size_t i = 0; i < d.truth.size(); ++i) ss += std::pow(d.data.y[i] - d.truth[i], 2);
    return std::sqrt(ss / static_cast<double>(d.truth.size()));
  };
  auto sd = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  CHECK(noise_sd(low) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(noise_sd(high) == doctest::Approx(sd(high.truth)).epsilon(0.05));
  CHECK(parse_noise_level("low") == NoiseLevel::low);
  CHECK_THROWS_AS(parse_noise_level("medium"), Error);
}

TEST_CASE("atomic writes leave no temporary files behind") {
  const auto dir = std::filesystem::temp_directory_path() / "asbart_atomic_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "out.txt", "first");
  write_file_atomic(dir / "out.txt", "second");
  CHECK(read_file(dir / "out.txt") == "second");
  CHECK(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}) == 1);
  CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "out.txt", "x"), Error);
  std::filesystem::remove_all(dir);
}

#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "parcmi/error.hpp"
#include "parcmi/io.hpp"

using namespace parcmi;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected parcmi::Error");
  return ErrorKind::Config;
}

}  // namespace

TEST_CASE("numbers round trip") {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5e-300})
    CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(parse_double("inf")));
  CHECK(parse_double("-inf") < 0);
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK_THROWS_AS(parse_double(""), Error);
  CHECK_THROWS_AS(parse_double("1,5"), Error);
}

TEST_CASE("csv reading and mapping") {
  const CsvTable t = parse("id,y,w,delta,age\n1,2.5,3.0,1,40\n\n2,1.5,0.7,0,51\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.line_numbers == std::vector<std::size_t>{2, 4});
  CHECK(t.column("age") == 4);
  CHECK(kind_of([&] { t.column("bmi"); }) == ErrorKind::Config);

  const ColumnMapping m{"y", "w", "delta", {"age"}};
  const Dataset d = dataset_from_table(t, m);
  CHECK(d.w == std::vector<double>{3.0, 0.7});
  CHECK(d.delta == std::vector<int>{1, 0});
  CHECK(d.z == std::vector<double>{40.0, 51.0});
  CHECK(d.covariate_names == std::vector<std::string>{"age"});

  const CsvTable bad = parse("y,w,delta\n1,2,1\n1,oops,0\n");
  try {
    dataset_from_table(bad, {"y", "w", "delta", {}});
    FAIL("bad cell accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  const CsvTable bad_event = parse("y,w,delta\n1,2,2\n");
  CHECK(kind_of([&] { dataset_from_table(bad_event, {"y", "w", "delta", {}}); }) == ErrorKind::Data);
  CHECK(kind_of([] { parse("a,b\n1,2,3\n"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { dataset_from_table(t, {"y", "x", "delta", {}}); }) == ErrorKind::Config);
}

TEST_CASE("imputed table keeps untouched cells verbatim") {
  const std::string src = "id,y,w,delta\na,1.000,2.50,1\nb,2.0,1.25,0\n";
  const CsvTable t = parse(src);
  const ColumnMapping m{"y", "w", "delta", {}};
  const Dataset d = dataset_from_table(t, m);
  const auto imp = impute_single(
      [&] {
        Dataset x = d;
        for (int i = 0; i < 10; ++i) x.add_row(0.0, 0.5 + 0.3 * i, 1, {});
        return x;
      }(),
      Family::Exponential);
  ImputedDataset two = imp;
  two.data = d;
  two.data.w[1] = 3.0;
  two.original_w = d.w;
  two.imputed = {false, true};
  const ImputedDataset both[] = {two, two};
  const CsvTable out = imputed_to_table(t, m, both);
  CHECK(out.header == std::vector<std::string>{"id", "y", "w", "delta", "imputed", "imputation_id"});
  REQUIRE(out.rows.size() == 4);
  CHECK(out.rows[0] == std::vector<std::string>{"a", "1.000", "2.50", "1", "0", "1"});
  CHECK(out.rows[1] == std::vector<std::string>{"b", "2.0", "3", "0", "1", "1"});
  CHECK(out.rows[3][5] == "2");

  std::ostringstream os;
  write_csv(os, out);
  const CsvTable back = parse(os.str());
  CHECK(back.rows == out.rows);
}

TEST_CASE("json") {
  FamilySpec s;
  s.family = Family::PiecewiseExponential;
  s.cutpoints = {0.0, 1.0};
  s.baseline_log_rates = {-0.2, 0.4};
  s.coefficients = {0.0, 0.3};
  const auto j = to_json(s);
  for (const char* key : {"family", "shape", "coefficients", "cutpoints", "baseline_log_rates"})
    CHECK(j.contains(key));
  const FamilySpec back = family_spec_from_json(j);
  CHECK(back.family == s.family);
  CHECK(back.cutpoints == s.cutpoints);
  CHECK(back.baseline_log_rates == s.baseline_log_rates);
  CHECK(back.coefficients == s.coefficients);

  FamilySpec w;
  w.family = Family::Weibull;
  w.shape = 1.5;
  w.coefficients = {0.1};
  CHECK(*family_spec_from_json(to_json(w)).shape == 1.5);

  const SimDesign d = sim_design_from_json(nlohmann::json{{"n", 321}, {"B", 4}, {"family_fit", "weibull"}});
  CHECK(d.n == 321);
  CHECK(d.B == 4);
  CHECK(d.family_fit == Family::Weibull);
  CHECK(d.censor_rate == 0.7);
  const SimDesign again = sim_design_from_json(to_json(d));
  CHECK(again.n == d.n);
  CHECK(again.seed == d.seed);
  CHECK(again.x_model.coefficients == d.x_model.coefficients);
  CHECK(kind_of([] { sim_design_from_json(nlohmann::json{{"nn", 3}}); }) == ErrorKind::Config);

  const std::vector<OlsFit> fits{[] {
    OlsFit f;
    f.names = {"(Intercept)", "w"};
    f.beta = Eigen::Vector2d(1.0, 0.5);
    f.cov = Eigen::Matrix2d::Identity() * 0.01;
    f.n = 100;
    f.p = 2;
    return f;
  }()};
  const auto pj = to_json(pool(fits));
  REQUIRE(pj["coef"].size() == 2);
  CHECK(pj["coef"][1]["name"] == "w");
  CHECK(pj["coef"][1]["estimate"] == 0.5);
  for (const char* key : {"se", "ci_lower", "ci_upper"}) CHECK(pj["coef"][1].contains(key));
  CHECK(pj["B"] == 1);
  CHECK(pj["confidence"] == 0.95);
}

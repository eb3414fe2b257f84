#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "irsa/error.hpp"
#include "irsa/models.hpp"
#include "irsa/sampling.hpp"

using namespace irsa;
namespace fs = std::filesystem;

namespace {

std::vector<InputSpec> unit_inputs(std::size_t d) {
  std::vector<InputSpec> in;
  for (std::size_t i = 0; i < d; ++i) in.push_back({"X" + std::to_string(i + 1), 0.0, 1.0});
  return in;
}

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "irsa_test_sampling";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("row counts of the pick-and-freeze design") {
  CHECK(build_design(unit_inputs(4), 1000, 1).rows() == 10000);
  CHECK(build_design(unit_inputs(10), 2500, 1).rows() == 55000);
  CHECK(build_design(unit_inputs(1), 2, 1).rows() == 8);
}

TEST_CASE("one input: AB_1 equals B and BA_1 equals A") {
  const auto d = build_design(unit_inputs(1), 2, 9);
  CHECK(d.block_ab(0) == d.block_b());
  CHECK(d.block_ba(0) == d.block_a());
}

TEST_CASE("AB_i and BA_i differ from A and B only in column i") {
  std::vector<InputSpec> in = {{"a", -1, 1}, {"b", 2, 5}, {"c", 0, 0.5}};
  const auto d = build_design(in, 50, 3);
  const auto a = d.block_a(), b = d.block_b();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ab = d.block_ab(i), ba = d.block_ba(i);
    for (std::size_t j = 0; j < 50; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(ab(j, c) == (c == i ? b(j, c) : a(j, c)));
        CHECK(ba(j, c) == (c == i ? a(j, c) : b(j, c)));
      }
    }
  }
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(d.points(r, c) >= in[c].lower);
      CHECK(d.points(r, c) <= in[c].upper);
    }
  }
}

TEST_CASE("design is reproducible from its seed") {
  const auto x = build_design(unit_inputs(3), 100, 42);
  const auto y = build_design(unit_inputs(3), 100, 42);
  const auto z = build_design(unit_inputs(3), 100, 43);
  CHECK(x.points == y.points);
  CHECK_FALSE(x.points == z.points);
}

TEST_CASE("column means of A and B are within 3 sigma of the uniform mean") {
  const std::size_t n = 4000;
  const auto d = build_design(unit_inputs(5), n, 11);
  const double sigma = std::sqrt(1.0 / 12.0 / static_cast<double>(n));
  for (const auto& block : {d.block_a(), d.block_b()}) {
    for (std::size_t c = 0; c < 5; ++c) {
      double mean = 0;
      for (std::size_t j = 0; j < n; ++j) mean += block(j, c);
      mean /= static_cast<double>(n);
      CHECK(std::abs(mean - 0.5) < 3 * sigma);
    }
  }
}

TEST_CASE("design validation errors") {
  CHECK_THROWS_AS(build_design(unit_inputs(2), 1, 0), ConfigError);
  CHECK_THROWS_AS(build_design({}, 10, 0), ConfigError);
  CHECK_THROWS_AS(build_design({{"a", 1, 1}}, 10, 0), ConfigError);
  CHECK_THROWS_AS(build_design({{"a", 0, 1}, {"a", 0, 1}}, 10, 0), ConfigError);
  try {
    build_design({{"a", 0, 1}, {"b", 2, 1}}, 10, 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("inputs[1]") != std::string::npos);
  }
}

TEST_CASE("evaluate_model keeps row order") {
  const auto d = build_design(unit_inputs(1), 7, 5);
  Model identity{1, 1, [](std::span<const double> x, std::span<double> y) { y[0] = x[0]; }};
  for (unsigned threads : {1u, 3u}) {
    const auto out = evaluate_model(identity, d, {}, threads);
    REQUIRE(out.rows() == d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) CHECK(out.values(r, 0) == d.points(r, 0));
  }
  Model constant{1, 2, [](std::span<const double>, std::span<double> y) {
                   y[0] = 3.5;
                   y[1] = -1;
                 }};
  const auto out = evaluate_model(constant, d);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    CHECK(out.values(r, 0) == 3.5);
    CHECK(out.values(r, 1) == -1);
  }
}

TEST_CASE("toy2d evaluated on a design point") {
  SobolDesign d = build_design(unit_inputs(4), 2, 1);
  const double x[4] = {0.4, 0.9, 0.0, 1.0};
  for (std::size_t c = 0; c < 4; ++c) d.points(0, c) = x[c];
  const auto out = evaluate_model(builtin_model("toy2d").model, d);
  CHECK(out.values(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(out.values(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("non-finite model output names the first bad row") {
  const auto d = build_design(unit_inputs(1), 10, 2);
  Model bad{1, 1, [](std::span<const double> x, std::span<double> y) {
              y[0] = x[0] > 0.5 ? std::nan("") : x[0];
            }};
  std::size_t expected = d.rows();
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.points(r, 0) > 0.5) {
      expected = r;
      break;
    }
  }
  REQUIRE(expected < d.rows());
  try {
    evaluate_model(bad, d, {}, 2);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.row() == expected);
  }
}

TEST_CASE("CSV round trip is lossless") {
  const auto d = build_design({{"a", -3, 7}, {"b", 0, 1e-9}}, 20, 8);
  const auto path = temp_file("design.csv");
  write_design_csv(path, d);
  const auto table = read_matrix_csv(path);
  CHECK(table.names == std::vector<std::string>{"a", "b"});
  CHECK(table.values == d.points);
}

TEST_CASE("offline outputs must align with the design") {
  const auto d = build_design(unit_inputs(2), 5, 1);
  const auto path = temp_file("short.csv");
  {
    std::ofstream out(path);
    out << "Y\n1\n2\n3\n";
  }
  try {
    read_outputs_csv(path, d);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("N = 30") != std::string::npos);
  }
  CHECK_THROWS_AS(read_outputs_csv(temp_file("missing.csv"), d), IoError);
}

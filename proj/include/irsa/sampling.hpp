#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "irsa/matrix.hpp"

namespace irsa {

/// An independent uniform input on [lower, upper].
struct InputSpec {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

/// Throws ConfigError unless every spec has finite lower < upper and names are unique.
void validate_inputs(std::span<const InputSpec> inputs);

/// Row layout of a pick-and-freeze design with base size n and d inputs.
///
/// Rows are stacked as A (n rows), B (n rows), AB_1 ... AB_d, then
/// BA_1 ... BA_d (n rows each), where AB_i is A with column i taken from B
/// and BA_i is B with column i taken from A. N = n (2d + 2). Everything
/// downstream of sampling depends on this order.
struct DesignLayout {
  std::size_t n = 0;
  std::size_t d = 0;

  std::size_t total_rows() const noexcept { return n * (2 * d + 2); }
  std::size_t a_row(std::size_t j) const noexcept { return j; }
  std::size_t b_row(std::size_t j) const noexcept { return n + j; }
  std::size_t ab_row(std::size_t i, std::size_t j) const noexcept {
    return (2 + i) * n + j;
  }
  std::size_t ba_row(std::size_t i, std::size_t j) const noexcept {
    return (2 + d + i) * n + j;
  }

  friend bool operator==(const DesignLayout&, const DesignLayout&) = default;
};

struct SobolDesign {
  std::vector<InputSpec> inputs;
  DesignLayout layout;
  std::uint64_t seed = 0;
  Matrix points;  // layout.total_rows() x d, stacked as documented on DesignLayout

  std::size_t rows() const noexcept { return points.rows(); }
  std::size_t dim() const noexcept { return layout.d; }

  Matrix block_a() const;
  Matrix block_b() const;
  Matrix block_ab(std::size_t i) const;
  Matrix block_ba(std::size_t i) const;
};

struct OutputEnsemble {
  std::vector<std::string> names;
  Matrix values;  // N x m

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
};

/// Deterministic pick-and-freeze design.
///
/// A is drawn first, column by column, then B, from a single mt19937_64
/// stream seeded with `seed`; each draw maps the top 53 bits to [0,1).
SobolDesign build_design(std::vector<InputSpec> inputs, std::size_t n,
                         std::uint64_t seed);

/// A model maps a d-dimensional point to an m-dimensional output.
struct Model {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::function<void(std::span<const double> x, std::span<double> y)> eval;
};

/// Evaluates `model` on every design row. Rows are split into contiguous
/// chunks across `threads` workers; output row r always matches design row r.
/// Throws EvaluationError naming the first offending row on non-finite output.
OutputEnsemble evaluate_model(const Model& model, const SobolDesign& design,
                              std::vector<std::string> output_names = {},
                              unsigned threads = 1);

// CSV with a header row of column names and values at 17 significant digits.
void write_matrix_csv(const std::filesystem::path& path,
                      std::span<const std::string> names, const Matrix& m);

struct CsvTable {
  std::vector<std::string> names;
  Matrix values;
};
CsvTable read_matrix_csv(const std::filesystem::path& path);

void write_design_csv(const std::filesystem::path& path,
                      const SobolDesign& design);
void write_outputs_csv(const std::filesystem::path& path,
                       const OutputEnsemble& outputs);

/// Loads externally computed outputs and checks they align with `design`.
/// Throws AlignmentError naming the expected row count.
OutputEnsemble read_outputs_csv(const std::filesystem::path& path,
                                const SobolDesign& design);

}  // namespace irsa

#include "irsa/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "irsa/error.hpp"

namespace irsa {

namespace {

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix copy_rows(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t r = 0; r < count; ++r) {
    std::ranges::copy(m.row(first + r), out.row(r).begin());
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void validate_inputs(std::span<const InputSpec> inputs) {
  if (inputs.empty()) throw ConfigError("inputs: at least one input is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    if (in.name.empty()) {
      throw ConfigError(fmt::format("inputs[{}].name: must not be empty", i));
    }
    if (!std::isfinite(in.lower) || !std::isfinite(in.upper) ||
        !(in.lower < in.upper)) {
      throw ConfigError(fmt::format(
          "inputs[{}] ({}): bounds must be finite with lower < upper, got [{}, {}]",
          i, in.name, in.lower, in.upper));
    }
    if (!seen.insert(in.name).second) {
      throw ConfigError(
          fmt::format("inputs[{}].name: duplicate input name '{}'", i, in.name));
    }
  }
}

Matrix SobolDesign::block_a() const { return copy_rows(points, 0, layout.n); }

Matrix SobolDesign::block_b() const {
  return copy_rows(points, layout.n, layout.n);
}

Matrix SobolDesign::block_ab(std::size_t i) const {
  return copy_rows(points, layout.ab_row(i, 0), layout.n);
}

Matrix SobolDesign::block_ba(std::size_t i) const {
  return copy_rows(points, layout.ba_row(i, 0), layout.n);
}

SobolDesign build_design(std::vector<InputSpec> inputs, std::size_t n,
                         std::uint64_t seed) {
  validate_inputs(inputs);
  if (n < 2) throw ConfigError(fmt::format("n: base size must be >= 2, got {}", n));

  const std::size_t d = inputs.size();
  SobolDesign design;
  design.layout = {n, d};
  design.seed = seed;
  design.points = Matrix(design.layout.total_rows(), d);

  std::mt19937_64 rng(seed);
  auto fill_block = [&](std::size_t first_row) {
    for (std::size_t c = 0; c < d; ++c) {
      const double lo = inputs[c].lower;
      const double width = inputs[c].upper - lo;
      for (std::size_t j = 0; j < n; ++j) {
        design.points(first_row + j, c) = lo + width * unit_draw(rng);
      }
    }
  };
  fill_block(design.layout.a_row(0));
  fill_block(design.layout.b_row(0));

  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      auto dst = design.points.row(design.layout.ab_row(i, j));
      std::ranges::copy(design.points.row(design.layout.a_row(j)), dst.begin());
      dst[i] = design.points(design.layout.b_row(j), i);
      auto mirror = design.points.row(design.layout.ba_row(i, j));
      std::ranges::copy(design.points.row(design.layout.b_row(j)), mirror.begin());
      mirror[i] = design.points(design.layout.a_row(j), i);
    }
  }
  design.inputs = std::move(inputs);
  return design;
}

OutputEnsemble evaluate_model(const Model& model, const SobolDesign& design,
                              std::vector<std::string> output_names,
                              unsigned threads) {
  if (model.input_dim != design.dim()) {
    throw ConfigError(fmt::format("model expects {} inputs, design has {}",
                                  model.input_dim, design.dim()));
  }
  if (model.output_dim == 0) throw ConfigError("model output dimension must be >= 1");
  if (output_names.empty()) {
    for (std::size_t k = 0; k < model.output_dim; ++k) {
      output_names.push_back(model.output_dim == 1 ? "Y" : fmt::format("Y{}", k + 1));
    }
  }
  if (output_names.size() != model.output_dim) {
    throw ConfigError("output name count does not match model output dimension");
  }

  const std::size_t rows = design.rows();
  OutputEnsemble out{std::move(output_names), Matrix(rows, model.output_dim)};

  std::size_t bad_row = std::numeric_limits<std::size_t>::max();
  std::mutex bad_mutex;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto y = out.values.row(r);
      model.eval(design.points.row(r), y);
      if (!std::ranges::all_of(y, [](double v) { return std::isfinite(v); })) {
        std::lock_guard lock(bad_mutex);
        bad_row = std::min(bad_row, r);
        return;
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows)));
  if (workers == 1) {
    work(0, rows);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (rows + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(rows, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  if (bad_row != std::numeric_limits<std::size_t>::max()) {
    throw EvaluationError(
        fmt::format("model returned a non-finite output at design row {}", bad_row),
        bad_row);
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path,
                      std::span<const std::string> names, const Matrix& m) {
  if (names.size() != m.cols()) {
    throw DomainError("CSV header size does not match column count");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    os << (c ? "," : "") << names[c];
  }
  os << '\n';
  fmt::memory_buffer buf;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    buf.clear();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", m(r, c));
    }
    buf.push_back('\n');
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

CsvTable read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::string line;
  if (!std::getline(is, line)) {
    throw IoError(fmt::format("'{}' is empty", path.string()));
  }
  CsvTable table;
  table.names = split_csv_line(line);
  const std::size_t cols = table.names.size();
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != cols) {
      throw IoError(fmt::format("{}:{}: expected {} fields, got {}", path.string(),
                                rows + 2, cols, fields.size()));
    }
    for (const auto& f : fields) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw IoError(fmt::format("{}:{}: '{}' is not a number", path.string(),
                                  rows + 2, f));
      }
    }
    ++rows;
  }
  table.values = Matrix(rows, cols);
  std::ranges::copy(values, table.values.values().begin());
  return table;
}

void write_design_csv(const std::filesystem::path& path,
                      const SobolDesign& design) {
  std::vector<std::string> names;
  for (const auto& in : design.inputs) names.push_back(in.name);
  write_matrix_csv(path, names, design.points);
}

void write_outputs_csv(const std::filesystem::path& path,
                       const OutputEnsemble& outputs) {
  write_matrix_csv(path, outputs.names, outputs.values);
}

OutputEnsemble read_outputs_csv(const std::filesystem::path& path,
                                const SobolDesign& design) {
  auto table = read_matrix_csv(path);
  if (table.values.rows() != design.rows()) {
    throw AlignmentError(fmt::format(
        "outputs '{}' have {} rows but the design expects N = {} (n = {}, d = {})",
        path.string(), table.values.rows(), design.rows(), design.layout.n,
        design.layout.d));
  }
  for (std::size_t r = 0; r < table.values.rows(); ++r) {
    for (double v : table.values.row(r)) {
      if (!std::isfinite(v)) {
        throw EvaluationError(
            fmt::format("offline output row {} is not finite", r), r);
      }
    }
  }
  return {std::move(table.names), std::move(table.values)};
}

}  // namespace irsa

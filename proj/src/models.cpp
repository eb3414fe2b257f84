#include "irsa/models.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irsa/error.hpp"

namespace irsa {

double sign_abs(double x1, double x2) {
  return (x1 >= 0.0 ? 1.0 : -1.0) * std::abs(x2);
}

CutSpec CutSpec::one(double yc) {
  CutSpec c{Kind::OneCut, yc, 0.0};
  c.validate();
  return c;
}

CutSpec CutSpec::two(double yc1, double yc2) {
  CutSpec c{Kind::TwoCut, yc1, yc2};
  c.validate();
  return c;
}

void CutSpec::validate() const {
  auto in_range = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
  if (!in_range(y1)) throw DomainError(fmt::format("cut {} outside [-1, 1]", y1));
  if (kind == Kind::TwoCut) {
    if (!in_range(y2)) throw DomainError(fmt::format("cut {} outside [-1, 1]", y2));
    if (!(y1 < y2)) {
      throw DomainError(fmt::format("two cuts need y_c1 < y_c2, got ({}, {})", y1, y2));
    }
  }
}

bool CutSpec::contains(double y) const {
  if (kind == Kind::OneCut) return y <= y1;
  return y >= y1 && y <= y2;
}

double analytic_si(const CutSpec& cut, std::size_t input) {
  cut.validate();
  if (input > 1) throw DomainError(fmt::format("sign-abs has 2 inputs, got index {}", input));

  if (cut.kind == CutSpec::Kind::OneCut) {
    const double a = std::abs(cut.y1);
    if (input == 0) {
      if (a == 1.0) return 0.0;
      return (1.0 - a) * (1.0 - a) / (1.0 - cut.y1 * cut.y1);
    }
    return a / (1.0 + a);
  }

  const double y1 = cut.y1;
  const double y2 = cut.y2;
  const double width = y2 - y1;
  const double rest = 2.0 - y2 + y1;
  if (rest == 0.0) {
    throw DomainError("two cuts (-1, 1) cover the whole output range; the index is undefined");
  }
  if (input == 0) {
    const double d = std::abs(y2) - std::abs(y1);
    return d * d / (width * rest);
  }
  const double base = (1.0 - y2 + y1) / rest;
  if (y2 <= 0.0 || y1 >= 0.0) return base;
  return base + 2.0 * std::min(std::abs(y1), y2) / (width * rest);
}

Point2 toy2d(double x1, double x2, double x3, double x4) {
  double c1 = 0.5;
  double c2 = 0.25;
  if (x1 >= 0.5) {
    c1 = x2 < 0.5 ? 0.25 : 0.75;
    c2 = 0.75;
  }
  const double r = 0.4 * x4 * x4 * x4;
  const double angle = 2.0 * std::numbers::pi * x3;
  return {c1 + r * std::cos(angle), c2 + r * std::sin(angle)};
}

std::vector<double> timeseries_surrogate(std::span<const double> x, std::size_t steps) {
  if (x.size() != kSurrogateInputs) {
    throw DomainError(fmt::format("tsgen expects {} inputs, got {}", kSurrogateInputs, x.size()));
  }
  if (steps < 8) throw DomainError(fmt::format("tsgen needs T >= 8, got {}", steps));
  const double pi = std::numbers::pi;
  const double level = 0.5 + 1.5 * x[kLevelInput];
  const double early = std::tanh(6.0 * (x[kRiseInput] - 0.5));
  std::vector<double> y(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    const double bump = (t / 0.1) * std::exp(1.0 - t / 0.1);
    double v = level * (1.0 + 0.2 * t + 0.5 * early * bump);
    for (std::size_t j = 0; j < 7; ++j) {
      v += 0.05 * (x[j] - 0.5) * std::cos(pi * static_cast<double>(j + 1) * t);
    }
    v += 0.05 * (x[9] - 0.5) * std::sin(pi * t);
    y[k] = v;
  }
  return y;
}

BuiltinModel builtin_model(const std::string& name, std::size_t steps) {
  BuiltinModel m;
  m.name = name;
  if (name == "signabs") {
    m.inputs = {{"X1", -1.0, 1.0}, {"X2", -1.0, 1.0}};
    m.output_names = {"Y"};
    m.model = {2, 1, [](std::span<const double> x, std::span<double> y) {
                 y[0] = sign_abs(x[0], x[1]);
               }};
  } else if (name == "toy2d") {
    m.inputs = {{"X1", 0.0, 1.0}, {"X2", 0.0, 1.0}, {"X3", 0.0, 1.0}, {"X4", 0.0, 1.0}};
    m.output_names = {"Y1", "Y2"};
    m.model = {4, 2, [](std::span<const double> x, std::span<double> y) {
                 const auto p = toy2d(x[0], x[1], x[2], x[3]);
                 y[0] = p.y1;
                 y[1] = p.y2;
               }};
  } else if (name == "tsgen") {
    if (steps < 8) throw ConfigError(fmt::format("model.steps: need T >= 8, got {}", steps));
    for (std::size_t i = 0; i < kSurrogateInputs; ++i) {
      m.inputs.push_back({fmt::format("X{}", i + 1), 0.0, 1.0});
    }
    for (std::size_t k = 0; k < steps; ++k) m.output_names.push_back(fmt::format("t{}", k));
    m.model = {kSurrogateInputs, steps,
               [steps](std::span<const double> x, std::span<double> y) {
                 const auto curve = timeseries_surrogate(x, steps);
                 std::ranges::copy(curve, y.begin());
               }};
  } else {
    throw ConfigError(fmt::format("model: unknown model '{}' (signabs|toy2d|tsgen)", name));
  }
  return m;
}

std::vector<std::string> builtin_model_names() { return {"signabs", "toy2d", "tsgen"}; }

}  // namespace irsa

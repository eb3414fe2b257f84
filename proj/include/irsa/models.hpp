#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "irsa/sampling.hpp"

namespace irsa {

/// Y = sign(X1) * |X2|, with sign(0) = +1.
double sign_abs(double x1, double x2);

/// Region of the sign-abs output: either C = {Y <= y_c} (one cut) or
/// C = {y_c1 <= Y <= y_c2} (two cuts).
struct CutSpec {
  enum class Kind { OneCut, TwoCut };
  Kind kind = Kind::OneCut;
  double y1 = 0.0;  // y_c, or y_c1
  double y2 = 0.0;  // y_c2 (two cuts only)

  static CutSpec one(double yc);
  static CutSpec two(double yc1, double yc2);

  /// Throws DomainError unless cuts lie in [-1, 1] and y_c1 < y_c2.
  void validate() const;
  bool contains(double y) const;
};

/// Closed-form first-order region index of the sign-abs model for input
/// 0 (X1) or 1 (X2), inputs uniform on [-1, 1].
///
/// One cut at |y_c| = 1 is the whole domain or a null set; the continuous
/// extensions SI1 = 0 and SI2 = 1/2 are returned. Two cuts (-1, 1) have no
/// continuous extension and raise DomainError.
double analytic_si(const CutSpec& cut, std::size_t input);

struct Point2 {
  double y1 = 0.0;
  double y2 = 0.0;
};

/// Point at radius 0.4 * X4^3 and angle 2 pi X3 around a center picked by
/// X1 and X2: (0.5, 0.25) if X1 < 0.5, else (0.25, 0.75) if X2 < 0.5,
/// else (0.75, 0.75).
Point2 toy2d(double x1, double x2, double x3, double x4);

/// Synthetic curves over t_k = k / (T - 1), k = 0..T-1:
///
///   y(t) = level * (1 + 0.2 t + 0.5 * early * b(t))
///          + 0.05 * sum_{j<7} (x_j - 0.5) cos(pi (j+1) t)
///          + 0.05 * (x_9 - 0.5) sin(pi t)
///
///   level = 0.5 + 1.5 x_8,  early = tanh(6 (x_7 - 0.5)),
///   b(t)  = (t / 0.1) exp(1 - t / 0.1)
///
/// x_7 switches between an early bump and an early dip; x_8 scales the
/// whole curve; the other inputs are small smooth perturbations.
inline constexpr std::size_t kSurrogateInputs = 10;
inline constexpr std::size_t kRiseInput = 7;
inline constexpr std::size_t kLevelInput = 8;
inline constexpr std::size_t kDefaultSteps = 50;

std::vector<double> timeseries_surrogate(std::span<const double> x,
                                         std::size_t steps = kDefaultSteps);

/// A model resolvable by name from the command line.
struct BuiltinModel {
  std::string name;
  std::vector<InputSpec> inputs;
  std::vector<std::string> output_names;
  Model model;
};

/// "signabs", "toy2d", or "tsgen" (`steps` applies to tsgen only).
/// Throws ConfigError for unknown names.
BuiltinModel builtin_model(const std::string& name, std::size_t steps = kDefaultSteps);
std::vector<std::string> builtin_model_names();

}  // namespace irsa

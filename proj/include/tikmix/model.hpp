#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tikmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Sample {
  std::vector<double> features;
  double target = 0.0;  // regression value or class index {0, 1}
  int domain_id = 0;

  bool operator==(const Sample&) const = default;
};

using Batch = std::span<const Sample>;

enum class ModelKind { Quadratic, LinearRegression, LogisticRegression, Mlp };
enum class Activation { Tanh, Sigmoid };
enum class LossKind { SquaredError, CrossEntropy };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation act);
std::string_view to_string(LossKind loss);
ModelKind parse_model_kind(std::string_view s);
Activation parse_activation(std::string_view s);
LossKind parse_loss_kind(std::string_view s);

struct Architecture {
  ModelKind kind = ModelKind::Quadratic;
  std::size_t input_dim = 1;
  std::size_t hidden = 0;  // mlp only
  Activation activation = Activation::Tanh;

  std::size_t parameter_count() const;
  bool operator==(const Architecture&) const = default;
};

/// Flat parameter vector plus the architecture that interprets it.
///
/// Parameter layout:
///   quadratic            theta (input_dim)
///   linear / logistic    w (input_dim), b
///   mlp                  W1 (hidden x input_dim, row-major), b1 (hidden), w2 (hidden), b2
struct ModelState {
  Architecture arch;
  Vector params;

  std::size_t dim() const { return static_cast<std::size_t>(params.size()); }
  /// Throws InputError / NumericalError when the invariants do not hold.
  void validate() const;
  bool operator==(const ModelState& o) const {
    return arch == o.arch && params.size() == o.params.size() && params == o.params;
  }
};

struct LossSpec {
  LossKind loss = LossKind::SquaredError;
  double l2 = 0.0;     // adds (l2 / 2) * |theta|^2
  double scale = 1.0;  // multiplies every per-sample loss

  void validate() const;
  bool operator==(const LossSpec&) const = default;
};

/// Fresh model. Convex kinds start at zero; the MLP draws N(0, init_scale^2 / fan_in).
ModelState init_model(const Architecture& arch, std::uint64_t seed, double init_scale = 1.0);

/// Mean per-sample loss over `batch` plus the L2 term.
double loss(const ModelState& model, const LossSpec& spec, Batch batch);

/// Gradient of `loss`.
Vector gradient(const ModelState& model, const LossSpec& spec, Batch batch);

/// Hessian of `loss` applied to `v` (forward-over-reverse, never materializes H).
Vector hvp(const ModelState& model, const LossSpec& spec, Batch batch, const Vector& v);

/// Sum (not mean) of unscaled-by-batch per-sample gradients, without the L2 term.
Vector sum_sample_gradients(const ModelState& model, const LossSpec& spec, Batch batch);

/// Model output (pre-link) for one input; used by evaluation and tests.
double predict(const ModelState& model, std::span<const double> features);

}  // namespace tikmix

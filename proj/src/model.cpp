#include "tikmix/model.hpp"

#include <cmath>
#include <sstream>

#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

namespace {

// Dual number for forward-mode differentiation of the reverse-mode gradient.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
Dual sigmoid(Dual x) {
  const double s = sigmoid(x.v);
  return {s, s * (1.0 - s) * x.d};
}
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
Dual tanh(Dual x) {
  const double t = std::tanh(x.v);
  return {t, (1.0 - t * t) * x.d};
}
using std::tanh;

template <class T>
T activate(Activation act, T a) {
  return act == Activation::Tanh ? tanh(a) : sigmoid(a);
}
// Derivative of the activation expressed through its output.
template <class T>
T activation_slope(Activation act, T out) {
  const T one{1.0};
  return act == Activation::Tanh ? one - out * out : out * (one - out);
}

// Per-sample loss and its gradient (accumulated with weight `w`) for a scalar
// type T; T = Dual propagates a tangent through the whole backward pass,
// which is what turns the gradient into a Hessian-vector product.
template <class T>
double accumulate_sample(const Architecture& arch, LossKind loss_kind, const std::vector<T>& theta,
                         const Sample& s, double w, std::vector<T>& grad) {
  const auto& x = s.features;
  const std::size_t in = arch.input_dim;

  if (arch.kind == ModelKind::Quadratic) {
    double l = 0.0;
    for (std::size_t i = 0; i < in; ++i) {
      T r = theta[i] - T{x[i]};
      l += 0.5 * value_of(r) * value_of(r);
      grad[i] += w * r;
    }
    return l;
  }

  // Linear head over either raw features or hidden activations.
  T out{};
  std::vector<T> hidden;
  if (arch.kind == ModelKind::Mlp) {
    const std::size_t h = arch.hidden;
    const std::size_t b1 = h * in;
    const std::size_t w2 = b1 + h;
    const std::size_t b2 = w2 + h;
    hidden.resize(h);
    out = theta[b2];
    for (std::size_t k = 0; k < h; ++k) {
      T a = theta[b1 + k];
      for (std::size_t i = 0; i < in; ++i) a += x[i] * theta[k * in + i];
      hidden[k] = activate(arch.activation, a);
      out += theta[w2 + k] * hidden[k];
    }
  } else {
    out = theta[in];
    for (std::size_t i = 0; i < in; ++i) out += x[i] * theta[i];
  }

  double l = 0.0;
  T delta{};
  if (loss_kind == LossKind::SquaredError) {
    T r = out - T{s.target};
    l = 0.5 * value_of(r) * value_of(r);
    delta = r;
  } else {
    l = softplus(value_of(out)) - s.target * value_of(out);
    delta = sigmoid(out) - T{s.target};
  }
  delta = w * delta;

  if (arch.kind == ModelKind::Mlp) {
    const std::size_t h = arch.hidden;
    const std::size_t b1 = h * in;
    const std::size_t w2 = b1 + h;
    const std::size_t b2 = w2 + h;
    grad[b2] += delta;
    for (std::size_t k = 0; k < h; ++k) {
      grad[w2 + k] += delta * hidden[k];
      T da = delta * theta[w2 + k] * activation_slope(arch.activation, hidden[k]);
      grad[b1 + k] += da;
      for (std::size_t i = 0; i < in; ++i) grad[k * in + i] += x[i] * da;
    }
  } else {
    grad[in] += delta;
    for (std::size_t i = 0; i < in; ++i) grad[i] += x[i] * delta;
  }
  return l;
}

void check_compatible(const ModelState& model, const LossSpec& spec) {
  const auto kind = model.arch.kind;
  if (kind == ModelKind::LogisticRegression && spec.loss != LossKind::CrossEntropy)
    throw ConfigError("logistic-regression requires cross-entropy loss");
  if ((kind == ModelKind::LinearRegression || kind == ModelKind::Quadratic) &&
      spec.loss != LossKind::SquaredError)
    throw ConfigError(std::string(to_string(kind)) + " requires squared-error loss");
}

void check_batch(const ModelState& model, Batch batch) {
  if (batch.empty()) throw InputError("empty batch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.size() != model.arch.input_dim) {
      std::ostringstream os;
      os << "sample " << i << " has " << batch[i].features.size() << " features, model expects "
         << model.arch.input_dim;
      throw InputError(os.str());
    }
  }
}

void check_finite(double value, std::size_t index, const char* what) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite " << what << " at sample " << index;
    throw NumericalError(os.str());
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Quadratic: return "quadratic";
    case ModelKind::LinearRegression: return "linear-regression";
    case ModelKind::LogisticRegression: return "logistic-regression";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}
std::string_view to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "sigmoid"; }
std::string_view to_string(LossKind loss) {
  return loss == LossKind::SquaredError ? "squared-error" : "cross-entropy";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "quadratic") return ModelKind::Quadratic;
  if (s == "linear-regression") return ModelKind::LinearRegression;
  if (s == "logistic-regression") return ModelKind::LogisticRegression;
  if (s == "mlp") return ModelKind::Mlp;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}
Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}
LossKind parse_loss_kind(std::string_view s) {
  if (s == "squared-error") return LossKind::SquaredError;
  if (s == "cross-entropy") return LossKind::CrossEntropy;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

std::size_t Architecture::parameter_count() const {
  switch (kind) {
    case ModelKind::Quadratic: return input_dim;
    case ModelKind::LinearRegression:
    case ModelKind::LogisticRegression: return input_dim + 1;
    case ModelKind::Mlp: return hidden * input_dim + 2 * hidden + 1;
  }
  return 0;
}

void ModelState::validate() const {
  if (arch.input_dim == 0) throw ConfigError("input_dim must be positive");
  if (arch.kind == ModelKind::Mlp && arch.hidden == 0) throw ConfigError("mlp needs hidden > 0");
  if (dim() != arch.parameter_count()) {
    std::ostringstream os;
    os << "parameter vector has length " << dim() << ", architecture declares "
       << arch.parameter_count();
    throw InputError(os.str());
  }
  if (!params.allFinite()) throw NumericalError("model parameters contain non-finite entries");
}

void LossSpec::validate() const {
  if (!std::isfinite(l2) || l2 < 0.0) throw ConfigError("l2 coefficient must be finite and >= 0");
  if (!std::isfinite(scale) || scale <= 0.0) throw ConfigError("loss scale must be finite and > 0");
}

ModelState init_model(const Architecture& arch, std::uint64_t seed, double init_scale) {
  ModelState m{arch, Vector::Zero(static_cast<Eigen::Index>(arch.parameter_count()))};
  if (arch.kind == ModelKind::Mlp) {
    Rng rng = make_rng(seed);
    const std::size_t h = arch.hidden;
    const std::size_t in = arch.input_dim;
    const double s1 = init_scale / std::sqrt(static_cast<double>(in));
    const double s2 = init_scale / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < h * in; ++i) m.params[static_cast<Eigen::Index>(i)] = s1 * standard_normal(rng);
    for (std::size_t k = 0; k < h; ++k)
      m.params[static_cast<Eigen::Index>(h * in + h + k)] = s2 * standard_normal(rng);
  }
  m.validate();
  return m;
}

double loss(const ModelState& model, const LossSpec& spec, Batch batch) {
  check_batch(model, batch);
  check_compatible(model, spec);
  std::vector<double> theta(model.params.data(), model.params.data() + model.dim());
  std::vector<double> scratch(model.dim(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double l = accumulate_sample(model.arch, spec.loss, theta, batch[i], 0.0, scratch);
    check_finite(l, i, "loss");
    total += l;
  }
  double result = spec.scale * total / static_cast<double>(batch.size());
  if (spec.l2 > 0.0) result += 0.5 * spec.l2 * model.params.squaredNorm();
  return result;
}

Vector sum_sample_gradients(const ModelState& model, const LossSpec& spec, Batch batch) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  check_compatible(model, spec);
  if (batch.empty()) return g;
  check_batch(model, batch);
  std::vector<double> theta(model.params.data(), model.params.data() + model.dim());
  std::vector<double> grad(model.dim(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    accumulate_sample(model.arch, spec.loss, theta, batch[i], spec.scale, grad);
    for (double gi : grad) check_finite(gi, i, "gradient");
  }
  for (std::size_t k = 0; k < grad.size(); ++k) g[static_cast<Eigen::Index>(k)] = grad[k];
  return g;
}

Vector gradient(const ModelState& model, const LossSpec& spec, Batch batch) {
  check_batch(model, batch);
  Vector g = sum_sample_gradients(model, spec, batch) / static_cast<double>(batch.size());
  if (spec.l2 > 0.0) g += spec.l2 * model.params;
  return g;
}

Vector hvp(const ModelState& model, const LossSpec& spec, Batch batch, const Vector& v) {
  check_batch(model, batch);
  check_compatible(model, spec);
  if (static_cast<std::size_t>(v.size()) != model.dim())
    throw InputError("hvp direction has wrong length");
  std::vector<Dual> theta(model.dim());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    theta[k] = {model.params[e], v[e]};
  }
  std::vector<Dual> grad(model.dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    accumulate_sample(model.arch, spec.loss, theta, batch[i], spec.scale, grad);
    check_finite(grad[0].d, i, "hessian-vector product");
  }
  Vector out(static_cast<Eigen::Index>(model.dim()));
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < grad.size(); ++k) out[static_cast<Eigen::Index>(k)] = grad[k].d * inv_n;
  if (spec.l2 > 0.0) out += spec.l2 * v;
  if (!out.allFinite()) throw NumericalError("non-finite hessian-vector product");
  return out;
}

double predict(const ModelState& model, std::span<const double> x) {
  const auto& arch = model.arch;
  const auto& p = model.params;
  if (x.size() != arch.input_dim) throw InputError("predict: feature dimension mismatch");
  switch (arch.kind) {
    case ModelKind::Quadratic: return 0.0;
    case ModelKind::LinearRegression:
    case ModelKind::LogisticRegression: {
      double out = p[static_cast<Eigen::Index>(arch.input_dim)];
      for (std::size_t i = 0; i < x.size(); ++i) out += x[i] * p[static_cast<Eigen::Index>(i)];
      return out;
    }
    case ModelKind::Mlp: {
      const std::size_t h = arch.hidden;
      const std::size_t in = arch.input_dim;
      double out = p[static_cast<Eigen::Index>(h * in + 2 * h)];
      for (std::size_t k = 0; k < h; ++k) {
        double a = p[static_cast<Eigen::Index>(h * in + k)];
        for (std::size_t i = 0; i < in; ++i) a += x[i] * p[static_cast<Eigen::Index>(k * in + i)];
        out += p[static_cast<Eigen::Index>(h * in + h + k)] * activate(arch.activation, a);
      }
      return out;
    }
  }
  return 0.0;
}

}  // namespace tikmix

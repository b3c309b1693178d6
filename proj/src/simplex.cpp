#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tikmix/error.hpp"
#include "tikmix/mixture.hpp"

namespace tikmix {

void MixtureWeights::validate(double tol) const {
  if (w.size() == 0) throw InputError("mixture weights are empty");
  if (!names.empty() && names.size() != size())
    throw InputError("mixture weights and names differ in length");
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (!std::isfinite(w[j]) || w[j] < 0.0) {
      std::ostringstream os;
      os << "mixture weight " << j << " is " << w[j];
      throw InputError(os.str());
    }
  }
  const double total = w.sum();
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream os;
    os.precision(17);
    os << "mixture weights sum to " << total;
    throw InputError(os.str());
  }
}

MixtureWeights MixtureWeights::uniform(std::vector<std::string> names) {
  const auto m = static_cast<Eigen::Index>(names.size());
  return {Vector::Constant(m, 1.0 / static_cast<double>(m)), std::move(names)};
}

MixtureWeights MixtureWeights::uniform(std::size_t m) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m; ++j) names.push_back("d" + std::to_string(j));
  return uniform(std::move(names));
}

Vector project_to_simplex(const Vector& v) {
  // Sort-based projection (Held, Wolfe & Crowder).
  const auto n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) tau = t;
  }
  Vector out = (v.array() - tau).max(0.0).matrix();
  // Correct the last-ulp drift so the sum is 1 to machine precision.
  const double s = out.sum();
  if (s > 0.0) out /= s;
  return out;
}

Vector clean_simplex_point(const Vector& v) {
  Vector out = v.array().max(0.0).matrix();
  const double s = out.sum();
  if (!(s > 0.0)) throw NumericalError("simplex point has no positive mass");
  return out / s;
}

double entropy(const Vector& w) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w[j] > 0.0) h -= w[j] * std::log(w[j]);
  return h;
}

}  // namespace tikmix

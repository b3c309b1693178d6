#pragma once

#include <string>
#include <vector>

#include "tikmix/model.hpp"

namespace tikmix {

/// A point on the probability simplex over named domains.
struct MixtureWeights {
  Vector w;
  std::vector<std::string> names;

  std::size_t size() const { return static_cast<std::size_t>(w.size()); }
  /// Throws InputError unless w >= 0 and sums to 1 within `tol`.
  void validate(double tol = 1e-9) const;

  static MixtureWeights uniform(std::vector<std::string> names);
  static MixtureWeights uniform(std::size_t m);

  bool operator==(const MixtureWeights& o) const { return names == o.names && w.size() == o.w.size() && w == o.w; }
};

/// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

/// Clamps tiny negatives to zero and renormalizes.
Vector clean_simplex_point(const Vector& v);

/// Shannon entropy with 0 log 0 := 0.
double entropy(const Vector& w);

}  // namespace tikmix

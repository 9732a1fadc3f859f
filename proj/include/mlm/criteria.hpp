#pragma once

#include <cmath>

#include "mlm/error.hpp"

namespace mlm {

struct Criteria {
  double aic = 0.0;
  double bic = 0.0;
};

/// AIC = -2 l + 2 p, BIC = -2 l + p log n.
inline Criteria aic_bic(double loglik, int p, double n) {
  if (p < 0) throw InvalidArgument("aic_bic: p must be non-negative");
  if (!(n > 0.0)) throw InvalidArgument("aic_bic: n must be positive");
  return {-2.0 * loglik + 2.0 * p, -2.0 * loglik + std::log(n) * p};
}

enum class Criterion { aic, bic };

inline double criterion_value(const Criteria& c, Criterion which) {
  return which == Criterion::aic ? c.aic : c.bic;
}

}  // namespace mlm

#pragma once

#include <string>
#include <vector>

#include "mlm/design.hpp"
#include "mlm/error.hpp"
#include "mlm/structure.hpp"

namespace mlm {

/// Full probability vector (pi_1, ..., pi_J) at one setting.
using CategoryProbs = Vec;

/// rho_j = g_j^{-1}(eta_j).
inline Vec rho_from_eta(const ModelSpec& spec, const Vec& eta) {
  Vec rho(eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j) rho(j) = spec.link(static_cast<int>(j)).inverse(eta(j));
  return rho;
}

/// Probabilities from the ratios rho. Throws Infeasible when D is singular or
/// some coordinate of D^{-1} b is not strictly positive.
inline CategoryProbs pi_from_rho(const ModelSpec& spec, const Vec& rho, int setting = -1) {
  Vec v;
  try {
    v = dinv_b(spec, rho);
  } catch (const SingularMatrix&) {
    throw Infeasible("D is singular", setting);
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (!(v(j) > 0.0))
      throw Infeasible("coordinate " + std::to_string(j + 1) + " of D^{-1}b is not positive",
                       setting);
  }
  const double denom = 1.0 + v.sum();
  CategoryProbs pi(spec.J());
  pi.head(spec.J() - 1) = v / denom;
  pi(spec.J() - 1) = 1.0 / denom;
  return pi;
}

/// rho_j = L_j' pi / (R_j' pi + pi_J b_j).
inline Vec rho_from_pi(const ModelSpec& spec, const CategoryProbs& pi) {
  const int q = spec.J() - 1;
  if (pi.size() != spec.J()) throw InvalidArgument("rho_from_pi: pi must have J entries");
  for (Eigen::Index j = 0; j < pi.size(); ++j) {
    if (!(pi(j) > 0.0 && pi(j) < 1.0)) throw DomainError("rho_from_pi: pi entries must lie in (0, 1)");
  }
  const LRb& m = spec.lrb();
  const Vec head = pi.head(q);
  const Vec num = m.L * head;
  const Vec den = m.R * head + pi(q) * m.b;
  return num.cwiseQuotient(den);
}

struct FeasibilityFailure {
  enum class Cause { singular_d, nonpositive_dinv_b };
  int setting = -1;
  Cause cause = Cause::nonpositive_dinv_b;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<FeasibilityFailure> failures;

  std::string describe() const {
    if (feasible) return "feasible";
    std::string out = "infeasible at setting";
    for (size_t a = 0; a < failures.size() && a < 10; ++a) {
      out += (a ? ", " : " ") + std::to_string(failures[a].setting + 1);
      out += failures[a].cause == FeasibilityFailure::Cause::singular_d ? " (singular D)"
                                                                         : " (D^{-1}b not positive)";
    }
    if (failures.size() > 10) out += ", ...";
    return out;
  }
};

/// Membership test at one rho via the general solve.
inline bool dinv_b_positive_generic(const ModelSpec& spec, const Vec& rho,
                                    FeasibilityFailure::Cause* cause = nullptr) {
  Vec v;
  try {
    v = dinv_generic(spec, rho) * spec.lrb().b;
  } catch (const SingularMatrix&) {
    if (cause) *cause = FeasibilityFailure::Cause::singular_d;
    return false;
  }
  if (cause) *cause = FeasibilityFailure::Cause::nonpositive_dinv_b;
  return (v.array() > 0.0).all();
}

namespace detail {

inline bool strictly_increasing(const Vec& rho) {
  for (Eigen::Index j = 1; j < rho.size(); ++j) {
    if (!(rho(j - 1) < rho(j))) return false;
  }
  return true;
}

}  // namespace detail

/// Feasibility of theta over all settings given precomputed model matrices.
inline FeasibilityReport check_feasible(const ModelSpec& spec, const std::vector<Mat>& Xs,
                                        const Vec& theta) {
  FeasibilityReport rep;
  const Family f = spec.family();
  if (f == Family::baseline || f == Family::adjacent || f == Family::continuation) return rep;
  if (spec.s() == spec.J() &&
      (f == Family::baseline_adjacent || f == Family::baseline_continuation))
    return rep;
  for (size_t i = 0; i < Xs.size(); ++i) {
    const Vec rho = rho_from_eta(spec, Xs[i] * theta);
    bool ok = true;
    FeasibilityFailure::Cause cause = FeasibilityFailure::Cause::nonpositive_dinv_b;
    if (f == Family::cumulative) {
      ok = detail::strictly_increasing(rho);
    } else if (spec.has_closed_form()) {
      ok = (dinv_b(spec, rho).array() > 0.0).all();
    } else {
      ok = dinv_b_positive_generic(spec, rho, &cause);
    }
    if (!ok) {
      rep.feasible = false;
      rep.failures.push_back({static_cast<int>(i), cause});
    }
  }
  return rep;
}

/// Same test without any family-specific shortcut.
inline FeasibilityReport check_feasible_generic(const ModelSpec& spec, const std::vector<Mat>& Xs,
                                                const Vec& theta) {
  FeasibilityReport rep;
  for (size_t i = 0; i < Xs.size(); ++i) {
    const Vec rho = rho_from_eta(spec, Xs[i] * theta);
    FeasibilityFailure::Cause cause{};
    if (!dinv_b_positive_generic(spec, rho, &cause)) {
      rep.feasible = false;
      rep.failures.push_back({static_cast<int>(i), cause});
    }
  }
  return rep;
}

inline std::vector<Mat> model_matrices(const DesignSpec& design, const std::vector<Vec>& settings) {
  std::vector<Mat> Xs;
  Xs.reserve(settings.size());
  for (const Vec& x : settings) Xs.push_back(design.build_X(x));
  return Xs;
}

inline FeasibilityReport check_feasible(const ModelSpec& spec, const DesignSpec& design,
                                        const Vec& theta, const std::vector<Vec>& settings) {
  if (theta.size() != design.p()) throw InvalidArgument("theta has the wrong length");
  return check_feasible(spec, model_matrices(design, settings), theta);
}

/// pi at every setting; throws Infeasible naming the first bad setting.
inline Mat fitted_probabilities(const ModelSpec& spec, const std::vector<Mat>& Xs,
                                const Vec& theta) {
  Mat out(static_cast<Eigen::Index>(Xs.size()), spec.J());
  for (size_t i = 0; i < Xs.size(); ++i) {
    const Vec rho = rho_from_eta(spec, Xs[i] * theta);
    out.row(static_cast<Eigen::Index>(i)) = pi_from_rho(spec, rho, static_cast<int>(i)).transpose();
  }
  return out;
}

}  // namespace mlm

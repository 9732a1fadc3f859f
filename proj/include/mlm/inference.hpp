#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mlm/criteria.hpp"
#include "mlm/error.hpp"
#include "mlm/fit.hpp"
#include "mlm/special.hpp"

namespace mlm {

struct CoefficientInterval {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double z = 0.0;        // estimate / se
  double p_value = 1.0;  // two-sided, H0: coefficient = 0
};

struct WaldTest {
  double W = 0.0;
  int df = 0;
  double p_value = 1.0;
};

struct LikelihoodRatioTest {
  double Lambda = 0.0;
  int df = 0;
  double p_value = 1.0;
};

inline constexpr double kSingularInfoRatio = 1e-12;

/// Inverse of a symmetric information matrix through its eigen-decomposition.
/// Throws SingularMatrix when an eigenvalue is below 1e-12 times the trace.
inline Mat covariance(const Mat& info) {
  if (info.rows() == 0) return Mat(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(info);
  const Vec& lambda = es.eigenvalues();
  const double tol = kSingularInfoRatio * std::abs(info.trace());
  if (!(lambda(0) > tol)) throw SingularMatrix("information matrix is singular");
  const Mat& V = es.eigenvectors();
  return V * lambda.cwiseInverse().asDiagonal() * V.transpose();
}

/// (1 - alpha) Wald intervals from the diagonal of F(theta_hat)^{-1}.
inline std::vector<CoefficientInterval> wald_ci(const FitResult& fit, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("wald_ci: alpha must lie in (0, 1)");
  const Mat cov = covariance(fit.info);
  const double z = special::normal_quantile(1.0 - alpha / 2.0);
  std::vector<CoefficientInterval> out;
  for (int c = 0; c < fit.p(); ++c) {
    CoefficientInterval ci;
    ci.name = c < static_cast<int>(fit.names.size()) ? fit.names[static_cast<size_t>(c)]
                                                     : "theta" + std::to_string(c + 1);
    ci.estimate = fit.theta(c);
    ci.se = std::sqrt(cov(c, c));
    ci.lower = ci.estimate - z * ci.se;
    ci.upper = ci.estimate + z * ci.se;
    ci.z = ci.estimate / ci.se;
    ci.p_value = 2.0 * special::normal_ccdf(std::abs(ci.z));
    out.push_back(ci);
  }
  return out;
}

/// W = (theta_hat - theta0)' F (theta_hat - theta0), chi-square with p df.
inline WaldTest wald_test(const FitResult& fit, const Vec& theta0) {
  if (theta0.size() != fit.theta.size()) throw InvalidArgument("wald_test: theta0 has the wrong length");
  covariance(fit.info);  // singularity check
  const Vec d = fit.theta - theta0;
  WaldTest out;
  out.W = std::max(0.0, d.dot(fit.info * d));
  out.df = fit.p();
  out.p_value = out.df > 0 ? special::chi2_sf(out.W, out.df) : 1.0;
  return out;
}

inline constexpr double kLrtSlack = -1e-8;

/// Lambda = 2 (l_full - l_reduced), chi-square with r df.
inline LikelihoodRatioTest lrt(const FitResult& full, const FitResult& reduced, int r) {
  if (r < 0) throw InvalidArgument("lrt: r must be non-negative");
  double Lambda = 2.0 * (full.loglik - reduced.loglik);
  if (Lambda < kLrtSlack)
    throw FitError("lrt: reduced model fits better than the full model (Lambda = " +
                   std::to_string(Lambda) + "); a fit probably failed");
  Lambda = std::max(0.0, Lambda);
  LikelihoodRatioTest out;
  out.Lambda = Lambda;
  out.df = r;
  out.p_value = r > 0 ? special::chi2_sf(Lambda, r) : 1.0;
  return out;
}

inline Criteria aic_bic(const FitResult& fit) { return aic_bic(fit.loglik, fit.p(), fit.n); }

inline Criteria aic_bic(const FitResult& fit, double n) { return aic_bic(fit.loglik, fit.p(), n); }

}  // namespace mlm

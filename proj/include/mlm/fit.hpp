#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlm/criteria.hpp"
#include "mlm/likelihood.hpp"

namespace mlm {

struct FitOptions {
  double epsilon = 1e-6;
  double delta = 0.5;
  double lambda0 = 1e-6;
  int max_iter = 200;
  int max_backtrack = 50;

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("fit: epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("fit: delta must lie in (0, 1)");
    if (!(lambda0 > 0.0)) throw InvalidArgument("fit: lambda0 must be positive");
    if (max_iter < 0) throw InvalidArgument("fit: max_iter must be non-negative");
    if (max_backtrack < 0) throw InvalidArgument("fit: max_backtrack must be non-negative");
  }
};

struct TraceEntry {
  int iteration = 0;
  double loglik = 0.0;
  double step_norm = 0.0;
  int backtracks = 0;
  double shift = 0.0;  // lambda added to F, 0 when none
};

struct FitResult {
  Vec theta;
  std::vector<std::string> names;
  double loglik = 0.0;
  Vec score;
  Mat info;
  Mat fitted;  // m x J
  double aic = 0.0;
  double bic = 0.0;
  double n = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceEntry> trace;
  std::vector<std::string> diagnostics;

  int p() const { return static_cast<int>(theta.size()); }
  double min_fitted() const { return fitted.size() ? fitted.minCoeff() : 1.0; }
};

/// Smoothed empirical starting point followed by least squares on the
/// transformed scale, using a Moore-Penrose inverse.
inline Vec initial_theta(const LikelihoodProblem& prob) {
  const ModelSpec& spec = prob.spec();
  const int q = prob.J() - 1;
  const int m = prob.m();
  const int p = prob.p();
  if (p == 0) return Vec(0);
  Mat XX(m * q, p);
  Vec YY(m * q);
  for (int i = 0; i < m; ++i) {
    const Vec y = prob.counts().row(i).transpose();
    const Vec pi0 = (y.array() + 1.0) / (prob.n()(i) + prob.J());
    const Vec rho = rho_from_pi(spec, pi0);
    for (int j = 0; j < q; ++j) YY(i * q + j) = spec.link(j)(rho(j));
    XX.middleRows(i * q, q) = prob.Xs()[static_cast<size_t>(i)];
  }
  const Mat XtX = XX.transpose() * XX;
  const Mat pinv = Eigen::CompleteOrthogonalDecomposition<Mat>(XtX).pseudoInverse();
  return pinv * (XX.transpose() * YY);
}

/// Pulls theta0 back into the feasible space along the segment to an
/// intercept-only anchor built from pooled proportions.
inline Vec feasible_initial(const LikelihoodProblem& prob, const Vec& theta0,
                            const FitOptions& opt = {},
                            std::vector<std::string>* diagnostics = nullptr) {
  auto note = [&](const std::string& s) {
    if (diagnostics) diagnostics->push_back(s);
  };
  if (prob.feasible(theta0)) return theta0;

  const ModelSpec& spec = prob.spec();
  const DesignSpec& design = prob.design();
  const int q = prob.J() - 1;
  const int m = prob.m();
  const Vec totals = prob.counts().colwise().sum().transpose();
  const Vec pooled = (totals.array() + m) / (prob.total_n() + static_cast<double>(m) * prob.J());

  std::vector<int> anchor(static_cast<size_t>(q));
  bool any_missing = false;
  for (int j = 0; j < q; ++j) {
    anchor[static_cast<size_t>(j)] = design.intercept_column(j);
    if (anchor[static_cast<size_t>(j)] < 0) any_missing = true;
  }

  Vec rho = rho_from_pi(spec, pooled);
  if (any_missing) {
    for (int j = 0; j < q; ++j) {
      if (anchor[static_cast<size_t>(j)] < 0) rho(j) = spec.link(j).inverse(0.0);
    }
    Vec pi0;
    try {
      pi0 = pi_from_rho(spec, rho);
    } catch (const Infeasible&) {
      throw FitError("feasible start: anchor probabilities for categories without intercept are "
                     "infeasible");
    }
    rho = rho_from_pi(spec, pi0);
  }
  Vec eta(q);
  for (int j = 0; j < q; ++j) eta(j) = spec.link(j)(rho(j));

  Vec theta00 = Vec::Zero(prob.p());
  std::vector<int> uses(static_cast<size_t>(prob.p()), 0);
  for (int j = 0; j < q; ++j) {
    const int c = anchor[static_cast<size_t>(j)];
    if (c < 0) continue;
    theta00(c) += eta(j);
    ++uses[static_cast<size_t>(c)];
  }
  for (int c = 0; c < prob.p(); ++c) {
    if (uses[static_cast<size_t>(c)] > 1) {
      theta00(c) /= uses[static_cast<size_t>(c)];
      note("feasible start: intercept " + design.param_name(c) +
           " is shared by several categories; anchored at the mean of their values");
    }
  }
  if (!prob.feasible(theta00))
    throw FitError("feasible start: anchor point is infeasible (" +
                   prob.feasibility(theta00).describe() + ")");

  const Vec diff = theta0 - theta00;
  double step = 1.0;
  for (int s = 0; s <= opt.max_backtrack; ++s) {
    const Vec cand = theta00 + step * diff;
    if (prob.feasible(cand)) {
      note("feasible start: initial estimate pulled back with s* = " + std::to_string(s));
      return cand;
    }
    step *= opt.delta;
  }
  note("feasible start: fell back to the intercept-only anchor");
  return theta00;
}

namespace detail {

inline FitResult finish(const LikelihoodProblem& prob, Vec theta, bool converged, int iterations,
                        std::vector<TraceEntry> trace, std::vector<std::string> diagnostics) {
  FitResult r;
  const ScoreAndInfo si = prob.score_and_info(theta);
  r.theta = std::move(theta);
  for (int c = 0; c < prob.p(); ++c) r.names.push_back(prob.design().param_name(c));
  r.loglik = si.loglik;
  r.score = si.score;
  r.info = si.info;
  r.fitted = prob.fitted(r.theta);
  r.n = prob.total_n();
  const Criteria cr = aic_bic(r.loglik, prob.p(), r.n);
  r.aic = cr.aic;
  r.bic = cr.bic;
  r.converged = converged;
  r.iterations = iterations;
  r.trace = std::move(trace);
  r.diagnostics = std::move(diagnostics);
  return r;
}

}  // namespace detail

/// Fisher scoring with geometric backtracking that keeps every iterate
/// feasible and strictly increases the log-likelihood.
inline FitResult fisher_scoring(const LikelihoodProblem& prob, const FitOptions& opt = {},
                                std::optional<Vec> start = std::nullopt) {
  opt.validate();
  std::vector<std::string> diag;
  const int p = prob.p();

  if (p > 0) {
    const RankReport rr = check_rank(prob.H());
    if (!rr.full_row_rank)
      diag.push_back("H is not of full row rank (rank " + std::to_string(rr.rank) + " < p = " +
                     std::to_string(p) + "); the information matrix is singular");
  }

  Vec theta;
  if (start) {
    theta = *start;
    if (!prob.feasible(theta)) theta = feasible_initial(prob, theta, opt, &diag);
  } else {
    theta = feasible_initial(prob, initial_theta(prob), opt, &diag);
  }

  std::vector<TraceEntry> trace;
  ScoreAndInfo si = prob.score_and_info(theta);
  trace.push_back({0, si.loglik, 0.0, 0, 0.0});
  if (p == 0) return detail::finish(prob, theta, true, 0, std::move(trace), std::move(diag));

  int t = 0;
  bool converged = false;
  while (true) {
    if (t >= opt.max_iter) {
      diag.push_back("maximum number of iterations (" + std::to_string(opt.max_iter) +
                     ") reached without convergence");
      break;
    }
    const double l = si.loglik;
    Eigen::SelfAdjointEigenSolver<Mat> es(si.info);
    Vec lambda = es.eigenvalues();
    double shift = 0.0;
    if (lambda(0) < opt.lambda0) {
      shift = opt.lambda0 - lambda(0);
      lambda.array() += shift;
    }
    const Mat& V = es.eigenvectors();
    const Vec delta_theta = V * (V.transpose() * si.score).cwiseQuotient(lambda);
    const double full_norm = delta_theta.norm();
    const double scale = std::max(1.0, theta.norm());

    double step = 1.0;
    bool accepted = false;
    bool stop = false;
    int s = 0;
    Vec cand;
    for (; s <= opt.max_backtrack; ++s, step *= opt.delta) {
      if (step * full_norm / scale < opt.epsilon) {
        stop = true;
        break;
      }
      cand = theta + step * delta_theta;
      const std::optional<double> lc = prob.try_loglik(cand);
      if (!lc) continue;
      if ((*lc - l) / std::max(1.0, std::abs(l)) < opt.epsilon) continue;
      accepted = true;
      break;
    }
    if (stop) {
      converged = true;
      break;
    }
    if (!accepted) {
      diag.push_back("backtracking limit reached at iteration " + std::to_string(t + 1));
      break;
    }
    theta = cand;
    ++t;
    si = prob.score_and_info(theta);
    trace.push_back({t, si.loglik, step * full_norm, s, shift});
  }
  return detail::finish(prob, std::move(theta), converged, t, std::move(trace), std::move(diag));
}

inline FitResult fisher_scoring(const ModelSpec& spec, const DesignSpec& design,
                                const Dataset& data, const FitOptions& opt = {}) {
  return fisher_scoring(LikelihoodProblem({spec, design}, data), opt);
}

inline Vec initial_theta(const ModelSpec& spec, const DesignSpec& design, const Dataset& data) {
  return initial_theta(LikelihoodProblem({spec, design}, data));
}

inline Vec feasible_initial(const ModelSpec& spec, const DesignSpec& design, const Dataset& data,
                            const Vec& theta0, const FitOptions& opt = {}) {
  return feasible_initial(LikelihoodProblem({spec, design}, data), theta0, opt);
}

}  // namespace mlm

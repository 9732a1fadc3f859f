#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/design.hpp"
#include "mlm/error.hpp"
#include "mlm/prob.hpp"
#include "mlm/structure.hpp"

namespace mlm {

struct Model {
  ModelSpec spec;
  DesignSpec design;
};

struct ScoreAndInfo {
  double loglik = 0.0;
  Vec score;
  Mat info;
};

struct RankDiagnostics {
  std::vector<int> setting_ranks;  // rank(F_i)
  std::vector<int> design_ranks;   // rank(X_i)
  RankReport H;
  double min_eigenvalue = 0.0;
  bool positive_definite = false;
};

/// Per-setting quantities at one theta.
struct SettingState {
  Vec eta;
  Vec rho;
  Vec pi;  // length J
  Mat dinv;
};

/// Log-likelihood, score and expected information of a model on a dataset.
/// Model matrices and count constants are computed once.
class LikelihoodProblem {
 public:
  LikelihoodProblem(Model model, const Dataset& data)
      : model_(std::move(model)), y_(data.counts_real()) {
    const ModelSpec& spec = model_.spec;
    if (data.J() != spec.J())
      throw InvalidArgument("dataset has " + std::to_string(data.J()) + " categories, model has " +
                            std::to_string(spec.J()));
    if (model_.design.J() != spec.J()) throw InvalidArgument("design and model disagree on J");
    if (model_.design.d() != data.d())
      throw InvalidArgument("design expects " + std::to_string(model_.design.d()) +
                            " covariates, dataset has " + std::to_string(data.d()));
    settings_ = data.settings();
    Xs_ = model_matrices(model_.design, settings_);
    n_ = y_.rowwise().sum();
    constant_ = 0.0;
    for (Eigen::Index i = 0; i < y_.rows(); ++i) {
      constant_ += std::lgamma(n_(i) + 1.0);
      for (Eigen::Index j = 0; j < y_.cols(); ++j) constant_ -= std::lgamma(y_(i, j) + 1.0);
    }
  }

  const Model& model() const { return model_; }
  const ModelSpec& spec() const { return model_.spec; }
  const DesignSpec& design() const { return model_.design; }
  int m() const { return static_cast<int>(Xs_.size()); }
  int p() const { return model_.design.p(); }
  int J() const { return model_.spec.J(); }
  double total_n() const { return n_.sum(); }
  const std::vector<Mat>& Xs() const { return Xs_; }
  const std::vector<Vec>& settings() const { return settings_; }
  const Mat& counts() const { return y_; }
  const Vec& n() const { return n_; }
  double constant() const { return constant_; }

  SettingState state(int i, const Vec& theta) const {
    check_theta(theta);
    SettingState st;
    st.eta = Xs_[static_cast<size_t>(i)] * theta;
    st.rho = rho_from_eta(model_.spec, st.eta);
    try {
      st.dinv = dinv(model_.spec, st.rho);
    } catch (const SingularMatrix&) {
      throw Infeasible("D is singular", i);
    }
    st.pi = pi_from_rho(model_.spec, st.rho, i);
    return st;
  }

  FeasibilityReport feasibility(const Vec& theta) const {
    check_theta(theta);
    return check_feasible(model_.spec, Xs_, theta);
  }

  bool feasible(const Vec& theta) const { return feasibility(theta).feasible; }

  /// Fitted probabilities, m x J. Throws Infeasible.
  Mat fitted(const Vec& theta) const {
    check_theta(theta);
    return fitted_probabilities(model_.spec, Xs_, theta);
  }

  double loglik(const Vec& theta) const {
    const Mat pi = fitted(theta);
    return loglik_from_pi(pi);
  }

  double loglik_from_pi(const Mat& pi) const {
    double l = constant_;
    for (Eigen::Index i = 0; i < y_.rows(); ++i) {
      for (Eigen::Index j = 0; j < y_.cols(); ++j) {
        if (y_(i, j) > 0.0) l += y_(i, j) * std::log(pi(i, j));
      }
    }
    return l;
  }

  /// Log-likelihood, or nothing when theta is infeasible.
  std::optional<double> try_loglik(const Vec& theta) const {
    if (!feasible(theta)) return std::nullopt;
    try {
      return loglik(theta);
    } catch (const Infeasible&) {
      return std::nullopt;
    }
  }

  /// C_i = E_i D^{-1} diag(L pi * rho^-2 * (g^{-1})'(eta)), a J x (J-1) matrix.
  Mat C(const SettingState& st) const {
    const int q = J() - 1;
    const LRb& m = model_.spec.lrb();
    const Vec Lpi = m.L * st.pi.head(q);
    Vec w(q);
    for (int j = 0; j < q; ++j) {
      w(j) = Lpi(j) / (st.rho(j) * st.rho(j)) * model_.spec.link(j).inverse_derivative(st.eta(j));
    }
    Mat E = Mat::Zero(J(), q);
    E.topRows(q).setIdentity();
    E -= st.pi * Vec::Ones(q).transpose();
    return E * st.dinv * w.asDiagonal();
  }

  /// d pi_bar_i / d theta^T, a J x p matrix.
  Mat dpi_dtheta(int i, const Vec& theta) const {
    const SettingState st = state(i, theta);
    return C(st) * Xs_[static_cast<size_t>(i)];
  }

  /// U_i = C_i^T diag(pi_bar_i)^{-1} C_i.
  Mat U_block(int i, const Vec& theta) const {
    const SettingState st = state(i, theta);
    const Mat Ci = C(st);
    return Ci.transpose() * st.pi.cwiseInverse().asDiagonal() * Ci;
  }

  /// U = (U_st) with U_st = diag(n_1 u_st(pi_1), ..., n_m u_st(pi_m)).
  Mat U(const Vec& theta) const {
    const int q = J() - 1;
    const int mm = m();
    Mat out = Mat::Zero(mm * q, mm * q);
    for (int i = 0; i < mm; ++i) {
      const Mat Ui = U_block(i, theta);
      for (int s = 0; s < q; ++s) {
        for (int t = 0; t < q; ++t) out(s * mm + i, t * mm + i) = n_(i) * Ui(s, t);
      }
    }
    return out;
  }

  Mat H() const { return model_.design.build_H(settings_); }

  ScoreAndInfo score_and_info(const Vec& theta) const {
    check_theta(theta);
    ScoreAndInfo out;
    out.score = Vec::Zero(p());
    out.info = Mat::Zero(p(), p());
    out.loglik = constant_;
    for (int i = 0; i < m(); ++i) {
      const SettingState st = state(i, theta);
      const Mat& X = Xs_[static_cast<size_t>(i)];
      const Mat CX = C(st) * X;
      const Vec yi = y_.row(i).transpose();
      const Vec inv_pi = st.pi.cwiseInverse();
      out.score.noalias() += CX.transpose() * yi.cwiseProduct(inv_pi);
      out.info.noalias() += n_(i) * (CX.transpose() * inv_pi.asDiagonal() * CX);
      for (int j = 0; j < J(); ++j) {
        if (yi(j) > 0.0) out.loglik += yi(j) * std::log(st.pi(j));
      }
    }
    out.info = 0.5 * (out.info + out.info.transpose()).eval();
    return out;
  }

  RankDiagnostics rank_diagnostics(const Vec& theta) const {
    RankDiagnostics rd;
    const ScoreAndInfo si = score_and_info(theta);
    for (int i = 0; i < m(); ++i) {
      const Mat& X = Xs_[static_cast<size_t>(i)];
      const Mat Fi = X.transpose() * U_block(i, theta) * X;
      rd.setting_ranks.push_back(check_rank(Fi).rank);
      rd.design_ranks.push_back(check_rank(X).rank);
    }
    rd.H = check_rank(H());
    if (p() > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> es(si.info, Eigen::EigenvaluesOnly);
      rd.min_eigenvalue = es.eigenvalues()(0);
      rd.positive_definite = rd.min_eigenvalue > 1e-12 * std::max(1.0, si.info.trace());
    } else {
      rd.positive_definite = true;
    }
    return rd;
  }

 private:
  void check_theta(const Vec& theta) const {
    if (theta.size() != p())
      throw InvalidArgument("theta has " + std::to_string(theta.size()) + " entries, expected " +
                            std::to_string(p()));
    for (Eigen::Index a = 0; a < theta.size(); ++a) {
      if (!std::isfinite(theta(a))) throw DomainError("theta has a non-finite entry");
    }
  }

  Model model_;
  std::vector<Vec> settings_;
  std::vector<Mat> Xs_;
  Mat y_;
  Vec n_;
  double constant_ = 0.0;
};

inline double loglik(const ModelSpec& spec, const DesignSpec& design, const Vec& theta,
                     const Dataset& data) {
  return LikelihoodProblem({spec, design}, data).loglik(theta);
}

inline ScoreAndInfo score_and_info(const ModelSpec& spec, const DesignSpec& design,
                                   const Vec& theta, const Dataset& data) {
  return LikelihoodProblem({spec, design}, data).score_and_info(theta);
}

inline RankDiagnostics rank_diagnostics(const ModelSpec& spec, const DesignSpec& design,
                                        const Vec& theta, const Dataset& data) {
  return LikelihoodProblem({spec, design}, data).rank_diagnostics(theta);
}

}  // namespace mlm

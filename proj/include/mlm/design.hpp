#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlm/error.hpp"
#include "mlm/structure.hpp"

namespace mlm {

/// A predictor function of the covariate vector: 1, x_c, or x_c^2.
struct Term {
  enum class Kind { intercept, linear, square };
  Kind kind = Kind::intercept;
  int covariate = -1;

  static Term intercept() { return {Kind::intercept, -1}; }
  static Term linear(int c) { return {Kind::linear, c}; }
  static Term square(int c) { return {Kind::square, c}; }

  double operator()(const Vec& x) const {
    switch (kind) {
      case Kind::intercept: return 1.0;
      case Kind::linear: return x(covariate);
      case Kind::square: return x(covariate) * x(covariate);
    }
    return 0.0;
  }

  bool is_intercept() const { return kind == Kind::intercept; }

  std::string name(const std::vector<std::string>& covariates) const {
    switch (kind) {
      case Kind::intercept: return "intercept";
      case Kind::linear: return covariates.at(static_cast<size_t>(covariate));
      case Kind::square: return covariates.at(static_cast<size_t>(covariate)) + "^2";
    }
    return "?";
  }

  /// "1" or "intercept", "<name>", "<name>^2".
  static Term parse(std::string_view s, const std::vector<std::string>& covariates) {
    if (s == "1" || s == "intercept") return intercept();
    bool sq = false;
    if (s.size() > 2 && s.substr(s.size() - 2) == "^2") {
      sq = true;
      s.remove_suffix(2);
    }
    const auto it = std::find(covariates.begin(), covariates.end(), s);
    if (it == covariates.end())
      throw InvalidArgument("term refers to unknown covariate '" + std::string(s) + "'");
    const int c = static_cast<int>(it - covariates.begin());
    return sq ? square(c) : linear(c);
  }

  friend bool operator==(const Term& a, const Term& b) {
    return a.kind == b.kind && a.covariate == b.covariate;
  }
  friend bool operator<(const Term& a, const Term& b) {
    return std::pair(static_cast<int>(a.kind), a.covariate) <
           std::pair(static_cast<int>(b.kind), b.covariate);
  }
};

/// One free coefficient: a term shared by a set of categories (0-based j < J-1).
struct Parameter {
  Term term;
  std::vector<int> categories;
};

/// A merge group: the listed categories share one coefficient for `term`.
struct Constraint {
  Term term;
  std::vector<int> categories;
};

/// Maps theta to the linear predictors eta_i = X_i theta.
///
/// Column order: parameters owned by a single category come first, grouped by
/// category in term-declaration order; parameters shared by several categories
/// follow, ordered by term then lowest category.
class DesignSpec {
 public:
  DesignSpec() = default;

  DesignSpec(int J, std::vector<std::string> covariates, std::vector<Parameter> params)
      : J_(J), covariates_(std::move(covariates)), params_(std::move(params)) {
    if (J_ < 2) throw InvalidArgument("design: J must be at least 2");
    normalize();
  }

  /// Generic builder. `intercept[j]` adds a per-category intercept, `per_category[j]`
  /// lists category-specific terms, `common` terms are shared by all categories,
  /// and `constraints` merge coefficients afterwards.
  static DesignSpec from_parts(int J, std::vector<std::string> covariates,
                               const std::vector<bool>& intercept,
                               const std::vector<std::vector<Term>>& per_category,
                               const std::vector<Term>& common,
                               const std::vector<Constraint>& constraints = {}) {
    const int q = J - 1;
    if (J < 2) throw InvalidArgument("design: J must be at least 2");
    if (static_cast<int>(intercept.size()) != q)
      throw InvalidArgument("design: intercept flags must have J-1 entries");
    if (!per_category.empty() && static_cast<int>(per_category.size()) != q)
      throw InvalidArgument("design: predictors_per_category must have J-1 lists");
    std::vector<Parameter> params;
    for (int j = 0; j < q; ++j) {
      if (intercept[static_cast<size_t>(j)]) params.push_back({Term::intercept(), {j}});
      if (!per_category.empty()) {
        for (const Term& t : per_category[static_cast<size_t>(j)]) params.push_back({t, {j}});
      }
    }
    std::vector<int> all(static_cast<size_t>(q));
    for (int j = 0; j < q; ++j) all[static_cast<size_t>(j)] = j;
    for (const Term& t : common) params.push_back({t, all});
    DesignSpec d(J, std::move(covariates), std::move(params));
    for (const Constraint& c : constraints) d = d.constrained(c);
    return d;
  }

  static std::vector<bool> all_intercepts(int J) {
    return std::vector<bool>(static_cast<size_t>(J - 1), true);
  }

  static DesignSpec po(int J, std::vector<std::string> covariates, const std::vector<Term>& terms) {
    return from_parts(J, std::move(covariates), all_intercepts(J), {}, terms);
  }

  static DesignSpec npo(int J, std::vector<std::string> covariates,
                        const std::vector<Term>& terms) {
    std::vector<std::vector<Term>> per(static_cast<size_t>(J - 1), terms);
    return from_parts(J, std::move(covariates), all_intercepts(J), per, {});
  }

  static DesignSpec ppo(int J, std::vector<std::string> covariates,
                        const std::vector<Term>& npo_terms, const std::vector<Term>& po_terms) {
    std::vector<std::vector<Term>> per(static_cast<size_t>(J - 1), npo_terms);
    return from_parts(J, std::move(covariates), all_intercepts(J), per, po_terms);
  }

  int J() const { return J_; }
  int p() const { return static_cast<int>(params_.size()); }
  int d() const { return static_cast<int>(covariates_.size()); }
  const std::vector<std::string>& covariates() const { return covariates_; }
  const std::vector<Parameter>& params() const { return params_; }

  std::string param_name(int col) const {
    const Parameter& par = params_.at(static_cast<size_t>(col));
    std::string out = par.term.name(covariates_) + "@";
    for (size_t a = 0; a < par.categories.size(); ++a)
      out += (a ? "," : "") + std::to_string(par.categories[a] + 1);
    return out;
  }

  /// Column holding the coefficient of `term` for category j, or -1.
  int column_of(const Term& term, int j) const {
    for (size_t c = 0; c < params_.size(); ++c) {
      const Parameter& par = params_[c];
      if (par.term == term &&
          std::binary_search(par.categories.begin(), par.categories.end(), j))
        return static_cast<int>(c);
    }
    return -1;
  }

  /// Column of the intercept of category j, or -1 if it has none.
  int intercept_column(int j) const { return column_of(Term::intercept(), j); }

  /// Distinct terms in order of first appearance in the canonical column order.
  std::vector<Term> terms() const {
    std::vector<Term> out;
    for (const Parameter& par : params_) {
      if (std::find(out.begin(), out.end(), par.term) == out.end()) out.push_back(par.term);
    }
    return out;
  }

  /// Design with the coefficients of `term` for categories a and b merged.
  DesignSpec merged(const Term& term, int a, int b) const {
    const int ca = column_of(term, a);
    const int cb = column_of(term, b);
    if (ca < 0 || cb < 0) throw InvalidArgument("merge: category lacks the term");
    if (ca == cb) throw InvalidArgument("merge: coefficients already equal");
    std::vector<Parameter> params;
    Parameter joined{term, {}};
    for (int c = 0; c < p(); ++c) {
      const Parameter& par = params_[static_cast<size_t>(c)];
      if (c == ca || c == cb) {
        joined.categories.insert(joined.categories.end(), par.categories.begin(),
                                 par.categories.end());
      } else {
        params.push_back(par);
      }
    }
    params.push_back(std::move(joined));
    return DesignSpec(J_, covariates_, std::move(params));
  }

  DesignSpec constrained(const Constraint& c) const {
    if (c.categories.size() < 2) throw InvalidArgument("constraint needs at least two categories");
    DesignSpec out = *this;
    for (size_t a = 1; a < c.categories.size(); ++a) {
      const int first = c.categories.front();
      const int other = c.categories[a];
      if (out.column_of(c.term, first) == out.column_of(c.term, other) &&
          out.column_of(c.term, first) >= 0)
        continue;
      out = out.merged(c.term, first, other);
    }
    return out;
  }

  /// Design restricted to a subset of columns (used to drop predictors).
  DesignSpec without_column(int col) const {
    std::vector<Parameter> params = params_;
    params.erase(params.begin() + col);
    return DesignSpec(J_, covariates_, std::move(params));
  }

  /// (J-1) x p model matrix at covariate vector x.
  Mat build_X(const Vec& x) const {
    if (x.size() != d())
      throw InvalidArgument("design: covariate vector has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(d()));
    Mat X = Mat::Zero(J_ - 1, p());
    for (int c = 0; c < p(); ++c) {
      const Parameter& par = params_[static_cast<size_t>(c)];
      const double v = par.term(x);
      for (int j : par.categories) X(j, c) = v;
    }
    return X;
  }

  /// p x m(J-1) matrix with column j*m + i equal to f_j(x_i).
  Mat build_H(const std::vector<Vec>& settings) const {
    const int m = static_cast<int>(settings.size());
    Mat H(p(), m * (J_ - 1));
    for (int i = 0; i < m; ++i) {
      const Mat X = build_X(settings[static_cast<size_t>(i)]);
      for (int j = 0; j < J_ - 1; ++j) H.col(j * m + i) = X.row(j).transpose();
    }
    return H;
  }

 private:
  void normalize() {
    const int q = J_ - 1;
    std::set<std::pair<Term, int>> seen;
    for (Parameter& par : params_) {
      if (par.term.kind != Term::Kind::intercept &&
          (par.term.covariate < 0 || par.term.covariate >= d()))
        throw InvalidArgument("design: term refers to an unknown covariate");
      std::sort(par.categories.begin(), par.categories.end());
      if (par.categories.empty()) throw InvalidArgument("design: parameter without categories");
      for (int j : par.categories) {
        if (j < 0 || j >= q) throw InvalidArgument("design: category index out of range");
        if (!seen.insert({par.term, j}).second)
          throw InvalidArgument("design: term '" + par.term.name(covariates_) +
                                "' appears twice for category " + std::to_string(j + 1));
      }
    }
    // Stable ordering: declaration order is kept among single-category terms.
    std::vector<Term> order;
    for (const Parameter& par : params_) {
      if (std::find(order.begin(), order.end(), par.term) == order.end()) order.push_back(par.term);
    }
    auto term_rank = [&](const Term& t) {
      return static_cast<int>(std::find(order.begin(), order.end(), t) - order.begin());
    };
    std::stable_sort(params_.begin(), params_.end(), [&](const Parameter& a, const Parameter& b) {
      const bool sa = a.categories.size() == 1;
      const bool sb = b.categories.size() == 1;
      if (sa != sb) return sa;
      if (sa) return a.categories.front() < b.categories.front();
      if (term_rank(a.term) != term_rank(b.term)) return term_rank(a.term) < term_rank(b.term);
      return a.categories.front() < b.categories.front();
    });
  }

  int J_ = 2;
  std::vector<std::string> covariates_;
  std::vector<Parameter> params_;
};

struct RankReport {
  bool full_row_rank = false;
  int rank = 0;
};

inline constexpr double kRankTolerance = 1e-10;

/// Numerical rank from singular values; those below kRankTolerance times the
/// largest count as zero.
inline RankReport check_rank(const Mat& H) {
  if (H.rows() == 0) return {true, 0};
  if (H.cols() == 0) return {false, 0};
  Eigen::JacobiSVD<Mat> svd(H);
  const Vec& sv = svd.singularValues();
  const double top = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index a = 0; a < sv.size(); ++a) {
    if (sv(a) > kRankTolerance * top && sv(a) > 0.0) ++rank;
  }
  return {rank == H.rows(), rank};
}

inline Mat build_X(const DesignSpec& design, const Vec& x) { return design.build_X(x); }
inline Mat build_H(const DesignSpec& design, const std::vector<Vec>& settings) {
  return design.build_H(settings);
}

}  // namespace mlm

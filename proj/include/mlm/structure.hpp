#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlm/error.hpp"
#include "mlm/links.hpp"

namespace mlm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Family {
  baseline,
  cumulative,
  adjacent,
  continuation,
  baseline_cumulative,
  baseline_adjacent,
  baseline_continuation,
};

inline bool is_two_group(Family f) {
  return f == Family::baseline_cumulative || f == Family::baseline_adjacent ||
         f == Family::baseline_continuation;
}

inline std::string family_name(Family f) {
  switch (f) {
    case Family::baseline: return "baseline";
    case Family::cumulative: return "cumulative";
    case Family::adjacent: return "adjacent";
    case Family::continuation: return "continuation";
    case Family::baseline_cumulative: return "baseline-cumulative";
    case Family::baseline_adjacent: return "baseline-adjacent";
    case Family::baseline_continuation: return "baseline-continuation";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  for (Family f : {Family::baseline, Family::cumulative, Family::adjacent, Family::continuation,
                   Family::baseline_cumulative, Family::baseline_adjacent,
                   Family::baseline_continuation}) {
    if (family_name(f) == s) return f;
  }
  throw InvalidArgument("unknown model family '" + std::string(s) + "'");
}

/// Constant matrices of g(L pi / (R pi + pi_J b)) = X theta.
struct LRb {
  Mat L;
  Mat R;
  Vec b;
};

namespace detail {

inline void fill_sub_family(Family sub, int off, int q, Mat& L, Mat& R) {
  for (int a = 0; a < q; ++a) {
    for (int c = 0; c < q; ++c) {
      const int r = off + a;
      const int col = off + c;
      switch (sub) {
        case Family::cumulative:
          L(r, col) = (c <= a) ? 1.0 : 0.0;
          R(r, col) = 1.0;
          break;
        case Family::adjacent:
          L(r, col) = (c == a) ? 1.0 : 0.0;
          R(r, col) = (c == a || c == a + 1) ? 1.0 : 0.0;
          break;
        case Family::continuation:
          L(r, col) = (c == a) ? 1.0 : 0.0;
          R(r, col) = (c >= a) ? 1.0 : 0.0;
          break;
        default:
          L(r, col) = (c == a) ? 1.0 : 0.0;
          R(r, col) = (c == a) ? 1.0 : 0.0;
          break;
      }
    }
  }
}

inline Family sub_family(Family f) {
  switch (f) {
    case Family::baseline_cumulative: return Family::cumulative;
    case Family::baseline_adjacent: return Family::adjacent;
    case Family::baseline_continuation: return Family::continuation;
    default: return f;
  }
}

}  // namespace detail

/// Response structure of a multinomial link model: category count J, family
/// (with k and s for two-group models) and one link per ratio rho_j.
class ModelSpec {
 public:
  ModelSpec() : ModelSpec(Family::baseline, 2, {Link::logit()}) {}

  /// `s` = 0 means s = J. `k` and `s` are ignored unless the family is two-group.
  ModelSpec(Family family, int J, std::vector<Link> links, int k = 0, int s = 0)
      : family_(family), J_(J), k_(k), s_(s), links_(std::move(links)) {
    if (J_ < 2) throw InvalidArgument("model: J must be at least 2");
    if (links_.size() == 1 && J_ > 2) links_.assign(static_cast<size_t>(J_ - 1), links_.front());
    if (static_cast<int>(links_.size()) != J_ - 1)
      throw InvalidArgument("model: expected " + std::to_string(J_ - 1) + " links, got " +
                            std::to_string(links_.size()));
    if (is_two_group(family_)) {
      if (s_ == 0) s_ = J_;
      if (J_ < 4) throw InvalidArgument("two-group models need J >= 4");
      if (k_ < 1 || k_ > J_ - 3)
        throw InvalidArgument("two-group models need 1 <= k <= J-3 (J=" + std::to_string(J_) +
                              ", k=" + std::to_string(k_) + ")");
      if (s_ < k_ + 1 || s_ > J_)
        throw InvalidArgument("two-group models need k+1 <= s <= J (k=" + std::to_string(k_) +
                              ", s=" + std::to_string(s_) + ")");
    } else {
      k_ = 0;
      s_ = J_;
    }
    lrb_ = build();
  }

  Family family() const { return family_; }
  int J() const { return J_; }
  int k() const { return k_; }
  int s() const { return s_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int j) const { return links_[static_cast<size_t>(j)]; }
  const LRb& lrb() const { return lrb_; }

  ModelSpec with_links(std::vector<Link> links) const {
    return ModelSpec(family_, J_, std::move(links), k_, s_);
  }

  /// Closed-form inverse available (every family except two-group with s < J).
  bool has_closed_form() const { return !is_two_group(family_) || s_ == J_; }

  std::string describe() const {
    std::string out = family_name(family_) + " J=" + std::to_string(J_);
    if (is_two_group(family_)) out += " k=" + std::to_string(k_) + " s=" + std::to_string(s_);
    out += " links=";
    for (size_t j = 0; j < links_.size(); ++j) out += (j ? "," : "") + links_[j].name();
    return out;
  }

 private:
  LRb build() const {
    const int q = J_ - 1;
    LRb out{Mat::Zero(q, q), Mat::Zero(q, q), Vec::Ones(q)};
    if (!is_two_group(family_)) {
      detail::fill_sub_family(family_, 0, q, out.L, out.R);
      if (family_ == Family::adjacent) {
        out.b.setZero();
        out.b(q - 1) = 1.0;
      }
      return out;
    }
    detail::fill_sub_family(Family::baseline, 0, k_, out.L, out.R);
    detail::fill_sub_family(detail::sub_family(family_), k_, q - k_, out.L, out.R);
    const bool adjacent = family_ == Family::baseline_adjacent;
    if (s_ == J_) {
      if (adjacent) {
        for (int j = k_; j < q - 1; ++j) out.b(j) = 0.0;
      }
      return out;
    }
    for (int r = 0; r < k_; ++r) out.R(r, s_ - 1) = 1.0;
    out.b.setZero();
    if (adjacent) {
      out.b(q - 1) = 1.0;
    } else {
      for (int j = k_; j < q; ++j) out.b(j) = 1.0;
    }
    return out;
  }

  Family family_;
  int J_;
  int k_;
  int s_;
  std::vector<Link> links_;
  LRb lrb_;
};

inline LRb build_lrb(const ModelSpec& spec) { return spec.lrb(); }

/// D = diag(1/rho) L - R.
inline Mat d_matrix(const ModelSpec& spec, const Vec& rho) {
  const LRb& m = spec.lrb();
  return rho.cwiseInverse().asDiagonal() * m.L - m.R;
}

inline constexpr double kSingularRcond = 1e-14;

/// Inverse of D by partial-pivot LU. Throws SingularMatrix when the reciprocal
/// condition estimate falls below kSingularRcond.
inline Mat dinv_generic(const ModelSpec& spec, const Vec& rho) {
  const Mat D = d_matrix(spec, rho);
  // Row equilibration, so the condition estimate ignores the scale of 1/rho.
  const Vec scale = D.cwiseAbs().rowwise().maxCoeff().cwiseInverse();
  if (!scale.allFinite()) throw SingularMatrix("D has a zero row");
  Eigen::PartialPivLU<Mat> lu(scale.asDiagonal() * D);
  const double rc = lu.rcond();
  if (!(rc >= kSingularRcond)) throw SingularMatrix("D is numerically singular");
  return lu.inverse() * scale.asDiagonal();
}

namespace detail {

inline void check_rho(const Vec& rho, int J) {
  if (rho.size() != J - 1) throw InvalidArgument("rho must have J-1 entries");
  for (Eigen::Index j = 0; j < rho.size(); ++j) {
    if (!(rho(j) > 0.0 && rho(j) < 1.0)) throw DomainError("rho entries must lie in (0, 1)");
  }
}

inline void baseline_block(const Vec& rho, int off, int q, Mat& out) {
  for (int a = 0; a < q; ++a) out(off + a, off + a) = rho(off + a) / (1.0 - rho(off + a));
}

inline void cumulative_block(const Vec& rho, int off, int q, Mat& out) {
  auto r = [&](int a) { return rho(off + a); };
  if (q == 1) {
    out(off, off) = r(0) / (1.0 - r(0));
    return;
  }
  for (int t = 0; t < q - 1; ++t) {
    out(off + t, off + t) = r(t);
    out(off + t + 1, off + t) = -r(t);
  }
  const double last = r(q - 1);
  const double scale = last / (1.0 - last);
  out(off, off + q - 1) = scale * r(0);
  for (int a = 1; a < q - 1; ++a) out(off + a, off + q - 1) = scale * (r(a) - r(a - 1));
  out(off + q - 1, off + q - 1) = scale * (1.0 - r(q - 2));
}

inline void adjacent_block(const Vec& rho, int off, int q, Mat& out) {
  for (int a = 0; a < q; ++a) {
    double prod = 1.0;
    for (int c = a; c < q; ++c) {
      const double r = rho(off + c);
      prod *= r / (1.0 - r);
      out(off + a, off + c) = prod;
    }
  }
}

inline void continuation_block(const Vec& rho, int off, int q, Mat& out) {
  for (int a = 0; a < q; ++a) {
    const double ra = rho(off + a);
    double denom = 1.0 - ra;
    out(off + a, off + a) = ra / denom;
    for (int c = a + 1; c < q; ++c) {
      const double rc = rho(off + c);
      denom *= 1.0 - rc;
      out(off + a, off + c) = ra * rc / denom;
    }
  }
}

inline void family_block(Family f, const Vec& rho, int off, int q, Mat& out) {
  switch (f) {
    case Family::cumulative: cumulative_block(rho, off, q, out); break;
    case Family::adjacent: adjacent_block(rho, off, q, out); break;
    case Family::continuation: continuation_block(rho, off, q, out); break;
    default: baseline_block(rho, off, q, out); break;
  }
}

inline void family_dinv_b(Family f, const Vec& rho, int off, int q, Vec& out) {
  switch (f) {
    case Family::cumulative: {
      const double denom = 1.0 - rho(off + q - 1);
      out(off) = rho(off) / denom;
      for (int a = 1; a < q; ++a) out(off + a) = (rho(off + a) - rho(off + a - 1)) / denom;
      break;
    }
    case Family::adjacent: {
      double prod = 1.0;
      for (int a = q - 1; a >= 0; --a) {
        const double r = rho(off + a);
        prod *= r / (1.0 - r);
        out(off + a) = prod;
      }
      break;
    }
    case Family::continuation: {
      double tail = 1.0;
      for (int a = q - 1; a >= 0; --a) {
        const double r = rho(off + a);
        tail *= 1.0 - r;
        out(off + a) = r / tail;
      }
      break;
    }
    default:
      for (int a = 0; a < q; ++a) out(off + a) = rho(off + a) / (1.0 - rho(off + a));
      break;
  }
}

}  // namespace detail

/// D^{-1} from the family's closed form when one exists, otherwise by generic solve.
inline Mat dinv(const ModelSpec& spec, const Vec& rho) {
  detail::check_rho(rho, spec.J());
  if (!spec.has_closed_form()) return dinv_generic(spec, rho);
  const int q = spec.J() - 1;
  Mat out = Mat::Zero(q, q);
  if (!is_two_group(spec.family())) {
    detail::family_block(spec.family(), rho, 0, q, out);
  } else {
    detail::baseline_block(rho, 0, spec.k(), out);
    detail::family_block(detail::sub_family(spec.family()), rho, spec.k(), q - spec.k(), out);
  }
  return out;
}

/// D^{-1} b. Closed form for every family except two-group models with s < J.
inline Vec dinv_b(const ModelSpec& spec, const Vec& rho) {
  detail::check_rho(rho, spec.J());
  if (!spec.has_closed_form()) return dinv_generic(spec, rho) * spec.lrb().b;
  const int q = spec.J() - 1;
  Vec out(q);
  if (!is_two_group(spec.family())) {
    detail::family_dinv_b(spec.family(), rho, 0, q, out);
  } else {
    detail::family_dinv_b(Family::baseline, rho, 0, spec.k(), out);
    detail::family_dinv_b(detail::sub_family(spec.family()), rho, spec.k(), q - spec.k(), out);
  }
  return out;
}

}  // namespace mlm

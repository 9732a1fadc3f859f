#pragma once

#include <charconv>
#include <cfloat>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mlm/error.hpp"
#include "mlm/special.hpp"

namespace mlm {

enum class LinkKind { logit, probit, loglog, cloglog, cauchit, t };

/// Bounds applied to every inverse-link evaluation.
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kProbCeil = 1.0 - 1e-12;

/// A link function g: (0,1) -> R with its inverse (a cdf) and the density of
/// that inverse. `nu` is only meaningful for the t link.
struct Link {
  LinkKind kind = LinkKind::logit;
  double nu = 0.0;

  static Link logit() { return {LinkKind::logit, 0.0}; }
  static Link probit() { return {LinkKind::probit, 0.0}; }
  static Link loglog() { return {LinkKind::loglog, 0.0}; }
  static Link cloglog() { return {LinkKind::cloglog, 0.0}; }
  static Link cauchit() { return {LinkKind::cauchit, 0.0}; }
  static Link student_t(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("t link: nu must be positive");
    return {LinkKind::t, nu};
  }

  /// Parses "logit", "probit", "loglog", "cloglog", "cauchit" or "t:<nu>".
  static Link parse(std::string_view s) {
    if (s == "logit") return logit();
    if (s == "probit") return probit();
    if (s == "loglog") return loglog();
    if (s == "cloglog") return cloglog();
    if (s == "cauchit") return cauchit();
    if (s.size() > 2 && s.substr(0, 2) == "t:") {
      const std::string_view num = s.substr(2);
      double nu = 0.0;
      const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), nu);
      if (ec != std::errc() || ptr != num.data() + num.size())
        throw InvalidArgument("bad degrees of freedom in link '" + std::string(s) + "'");
      return student_t(nu);
    }
    throw InvalidArgument("unknown link '" + std::string(s) + "'");
  }

  std::string name() const {
    switch (kind) {
      case LinkKind::logit: return "logit";
      case LinkKind::probit: return "probit";
      case LinkKind::loglog: return "loglog";
      case LinkKind::cloglog: return "cloglog";
      case LinkKind::cauchit: return "cauchit";
      case LinkKind::t: {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, nu);
        return "t:" + std::string(buf, res.ptr);
      }
    }
    return "?";
  }

  friend bool operator==(const Link& a, const Link& b) {
    return a.kind == b.kind && (a.kind != LinkKind::t || a.nu == b.nu);
  }

  /// Unclamped inverse link P(Z <= eta).
  double cdf(double eta) const {
    switch (kind) {
      case LinkKind::logit:
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        return std::exp(eta) / (1.0 + std::exp(eta));
      case LinkKind::probit: return special::normal_cdf(eta);
      case LinkKind::loglog: return std::exp(-std::exp(-eta));
      case LinkKind::cloglog: return -std::expm1(-std::exp(eta));
      case LinkKind::cauchit:
        if (eta < 0.0) return std::atan(-1.0 / eta) / special::kPi;
        return 0.5 + std::atan(eta) / special::kPi;
      case LinkKind::t: return special::student_t_cdf(eta, nu);
    }
    return 0.0;
  }

  /// Unclamped 1 - cdf(eta), accurate in the upper tail.
  double ccdf(double eta) const {
    switch (kind) {
      case LinkKind::logit:
      case LinkKind::probit:
      case LinkKind::cauchit:
      case LinkKind::t: return Link{kind, nu}.cdf(-eta);
      case LinkKind::loglog: return -std::expm1(-std::exp(-eta));
      case LinkKind::cloglog: return std::exp(-std::exp(eta));
    }
    return 0.0;
  }

  /// rho = g^{-1}(eta), clamped to [kProbFloor, kProbCeil].
  double inverse(double eta) const {
    if (std::isnan(eta)) throw DomainError("inverse link: eta is NaN");
    double rho = cdf(eta);
    if (rho > 0.5) rho = 1.0 - ccdf(eta);
    if (rho < kProbFloor) return kProbFloor;
    if (rho > kProbCeil) return kProbCeil;
    return rho;
  }

  /// (g^{-1})'(eta); never below DBL_MIN.
  double inverse_derivative(double eta) const {
    double d = 0.0;
    switch (kind) {
      case LinkKind::logit: {
        const double e = std::exp(-std::abs(eta));
        d = e / ((1.0 + e) * (1.0 + e));
        break;
      }
      case LinkKind::probit: d = special::normal_pdf(eta); break;
      case LinkKind::loglog: d = std::exp(-eta - std::exp(-eta)); break;
      case LinkKind::cloglog: d = std::exp(eta - std::exp(eta)); break;
      case LinkKind::cauchit: d = 1.0 / (special::kPi * (1.0 + eta * eta)); break;
      case LinkKind::t: d = special::student_t_pdf(eta, nu); break;
    }
    return (d >= DBL_MIN) ? d : DBL_MIN;
  }

  /// eta = g(rho). Throws DomainError unless 0 < rho < 1.
  double operator()(double rho) const {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("link: rho must lie in (0, 1)");
    switch (kind) {
      case LinkKind::logit: return std::log(rho) - std::log1p(-rho);
      case LinkKind::probit: return special::normal_quantile(rho);
      case LinkKind::loglog: return -std::log(-std::log(rho));
      case LinkKind::cloglog: return std::log(-std::log1p(-rho));
      case LinkKind::cauchit:
        if (rho < 0.5) return -1.0 / std::tan(special::kPi * rho);
        return 1.0 / std::tan(special::kPi * (1.0 - rho));
      case LinkKind::t: return special::student_t_quantile(rho, nu);
    }
    return 0.0;
  }
};

inline double eval_g(const Link& link, double rho) { return link(rho); }
inline double eval_ginv(const Link& link, double eta) { return link.inverse(eta); }
inline double eval_ginv_prime(const Link& link, double eta) { return link.inverse_derivative(eta); }

inline std::vector<Link> parse_links(const std::vector<std::string>& names) {
  std::vector<Link> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(Link::parse(n));
  return out;
}

}  // namespace mlm

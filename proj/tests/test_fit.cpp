#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace mlm;

namespace {

Vec V(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index a = 0;
  for (double x : v) out(a++) = x;
  return out;
}

std::vector<Vec> line_settings(int m, double lo, double hi) {
  std::vector<Vec> xs;
  for (int i = 0; i < m; ++i) xs.push_back(V({lo + (hi - lo) * i / (m - 1)}));
  return xs;
}

}  // namespace

TEST(InitialTheta, SaturatedInterceptOnlyReproducesEta) {
  Counts y(1, 4);
  y << 3, 5, 9, 2;
  const Dataset d({}, {Vec(0)}, y);
  for (Family f : {Family::baseline, Family::cumulative, Family::adjacent, Family::continuation}) {
    const ModelSpec s(f, 4, {Link::probit(), Link::logit(), Link::cloglog()});
    const LikelihoodProblem prob({s, DesignSpec::npo(4, {}, {})}, d);
    Vec pi0(4);
    pi0 << 4.0 / 23, 6.0 / 23, 10.0 / 23, 3.0 / 23;
    const Vec rho = rho_from_pi(s, pi0);
    Vec eta(3);
    for (int j = 0; j < 3; ++j) eta(j) = s.link(j)(rho(j));
    EXPECT_LT((initial_theta(prob) - eta).cwiseAbs().maxCoeff(), 1e-12) << family_name(f);
  }
}

TEST(InitialTheta, BinaryLogitIsOlsOfEmpiricalLogits) {
  const std::vector<Vec> xs = line_settings(6, -2, 3);
  Counts y(6, 2);
  y << 2, 18, 5, 14, 9, 11, 12, 7, 15, 3, 19, 1;
  const Dataset d({"x"}, xs, y);
  const LikelihoodProblem prob({ModelSpec(Family::baseline, 2, {Link::logit()}),
                                DesignSpec::npo(2, {"x"}, {Term::linear(0)})},
                               d);
  Mat Z(6, 2);
  Vec z(6);
  for (int i = 0; i < 6; ++i) {
    Z.row(i) << 1, xs[static_cast<size_t>(i)](0);
    const double p = (static_cast<double>(y(i, 0)) + 1) / (static_cast<double>(y.row(i).sum()) + 2);
    z(i) = std::log(p / (1 - p));
  }
  EXPECT_LT((initial_theta(prob) - oracle::ols(Z, z)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InitialTheta, EqualCountsGiveUniformEta) {
  const std::vector<Vec> xs = line_settings(4, 0, 3);
  const Counts y = Counts::Constant(4, 3, 6);
  const Dataset d({"x"}, xs, y);
  for (Family f : {Family::baseline, Family::cumulative, Family::adjacent, Family::continuation}) {
    const ModelSpec s(f, 3, {Link::logit()});
    const LikelihoodProblem prob({s, DesignSpec::po(3, {"x"}, {Term::linear(0)})}, d);
    const Vec rho = rho_from_pi(s, Vec::Constant(3, 1.0 / 3));
    const Vec th = initial_theta(prob);
    EXPECT_NEAR(th(0), std::log(rho(0) / (1 - rho(0))), 1e-12);
    EXPECT_NEAR(th(1), std::log(rho(1) / (1 - rho(1))), 1e-12);
    EXPECT_NEAR(th(2), 0.0, 1e-12);
  }
}

TEST(FeasibleInitial, FeasibleStartUnchanged) {
  const oracle::Case c = oracle::make_case(oracle::family_specs(0)[1], oracle::Structure::npo, 4);
  const LikelihoodProblem prob({c.spec, c.design}, c.data);
  SplitMix64 rng(1);
  const Vec th = oracle::random_feasible_theta(prob, rng);
  std::vector<std::string> diag;
  EXPECT_EQ(feasible_initial(prob, th, {}, &diag), th);
  EXPECT_TRUE(diag.empty());
}

TEST(FeasibleInitial, PullsViolatingCumulativeStartOntoSegment) {
  const ModelSpec s(Family::cumulative, 4, {Link::logit()});
  const DesignSpec d = DesignSpec::npo(4, {"x"}, {Term::linear(0)});
  const std::vector<Vec> xs = line_settings(5, -2, 2);
  const Dataset data = oracle::random_counts(4, xs, 77, {"x"});
  const LikelihoodProblem prob({s, d}, data);
  // Slopes of opposite sign cross the cumulative curves away from x = 0.
  const Vec bad = V({-1.0, 3.0, 0.0, 0.5, 1.0, -3.0});
  ASSERT_FALSE(prob.feasible(bad));
  std::vector<std::string> diag;
  const Vec th = feasible_initial(prob, bad, {}, &diag);
  EXPECT_TRUE(prob.feasible(th));
  EXPECT_FALSE(diag.empty());
  // The anchor has zero slopes, so each slope is the same fraction of the start.
  const double t = th(1) / bad(1);
  EXPECT_NEAR(th(3) / bad(3), t, 1e-12);
  EXPECT_NEAR(th(5) / bad(5), t, 1e-12);
  const double s_star = std::log(t) / std::log(0.5);
  EXPECT_NEAR(s_star, std::round(s_star), 1e-9);
  EXPECT_GE(std::round(s_star), 1.0);
  const Vec theta00 = (th - t * bad) / (1 - t);
  EXPECT_TRUE(prob.feasible(theta00));
  // One fewer halving is infeasible.
  EXPECT_FALSE(prob.feasible(theta00 + 2 * t * (bad - theta00)));
}

TEST(FeasibleInitial, AnchorFromPooledProportions) {
  const ModelSpec s(Family::cumulative, 3, {Link::logit()});
  const DesignSpec d = DesignSpec::npo(3, {"x"}, {Term::linear(0)});
  Counts y(2, 3);
  y << 4, 6, 10, 8, 2, 10;
  const Dataset data({"x"}, {V({0}), V({1})}, y);
  const LikelihoodProblem prob({s, d}, data);
  // Extreme start: the pullback hits the anchor only after many halvings.
  const Vec bad = V({50.0, 0.0, -50.0, 0.0});
  FitOptions opt;
  opt.max_backtrack = 0;
  const Vec th = feasible_initial(prob, bad, opt);
  const double p1 = (12.0 + 2) / (40 + 6), p2 = (8.0 + 2) / (40 + 6);
  EXPECT_NEAR(th(0), std::log(p1 / (1 - p1)), 1e-12);
  EXPECT_NEAR(th(2), std::log((p1 + p2) / (1 - p1 - p2)), 1e-12);
  EXPECT_EQ(th(1), 0.0);
  EXPECT_EQ(th(3), 0.0);
}

TEST(FisherScoring, MonotoneFeasibleAndStationary) {
  for (int mix = 0; mix < 3; ++mix) {
    for (const ModelSpec& spec : oracle::family_specs(mix)) {
      for (auto st : {oracle::Structure::po, oracle::Structure::npo, oracle::Structure::ppo,
                      oracle::Structure::mixture}) {
        const oracle::Case c = oracle::make_case(spec, st, 400 + mix);
        const LikelihoodProblem prob({c.spec, c.design}, c.data);
        const FitResult f = fisher_scoring(prob);
        ASSERT_TRUE(f.converged) << c.label;
        for (size_t t = 1; t < f.trace.size(); ++t) EXPECT_GT(f.trace[t].loglik, f.trace[t - 1].loglik) << c.label;
        EXPECT_TRUE(prob.feasible(f.theta)) << c.label;
        EXPECT_GT(f.min_fitted(), 0.0);
        EXPECT_LT(f.fitted.maxCoeff(), 1.0);
        EXPECT_EQ(f.trace.back().loglik, f.loglik);
        // Steps gaining less than epsilon * |l| are refused, which leaves
        // |score|^2 <= 2 epsilon |l| lambda_max(F).
        Eigen::SelfAdjointEigenSolver<Mat> es(f.info);
        const double floor = std::sqrt(2e-6 * std::max(1.0, std::abs(f.loglik)) * es.eigenvalues().maxCoeff());
        EXPECT_LE(f.score.norm(), floor) << c.label;

        FitOptions tight;
        tight.epsilon = 1e-10;
        const FitResult g = fisher_scoring(prob, tight);
        EXPECT_TRUE(g.converged);
        EXPECT_GE(g.loglik, f.loglik);
        EXPECT_LE(g.score.cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, std::abs(g.loglik))) << c.label;
      }
    }
  }
}

TEST(FisherScoring, TightToleranceReachesFirstOrderCondition) {
  FitOptions opt;
  opt.epsilon = 1e-13;
  for (const ModelSpec& spec : oracle::family_specs(1)) {
    const oracle::Case c = oracle::make_case(spec, oracle::Structure::ppo, 9);
    const FitResult f = fisher_scoring(LikelihoodProblem({c.spec, c.design}, c.data), opt);
    EXPECT_LE(f.score.cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, std::abs(f.loglik))) << c.label;
  }
}

TEST(FisherScoring, NoBetterPointOnGrid) {
  struct P {
    ModelSpec spec;
    DesignSpec design;
    Dataset data;
  };
  const std::vector<Vec> xs = line_settings(5, -1, 1);
  std::vector<P> problems;
  {
    Counts y(5, 2);
    y << 14, 6, 11, 9, 9, 11, 6, 14, 4, 16;
    problems.push_back({ModelSpec(Family::baseline, 2, {Link::probit()}),
                        DesignSpec::npo(2, {"x"}, {Term::linear(0)}), Dataset({"x"}, xs, y)});
  }
  {
    Counts y(1, 3);
    y << 12, 30, 18;
    problems.push_back({ModelSpec(Family::cumulative, 3, {Link::loglog(), Link::cauchit()}),
                        DesignSpec::npo(3, {}, {}), Dataset({}, {Vec(0)}, y)});
  }
  {
    problems.push_back({ModelSpec(Family::continuation, 3, {Link::cloglog()}),
                        DesignSpec::from_parts(3, {"x"}, {false, false}, {}, {Term::intercept(), Term::linear(0)}),
                        oracle::random_counts(3, xs, 5, {"x"})});
  }
  for (const P& pr : problems) {
    const LikelihoodProblem prob({pr.spec, pr.design}, pr.data);
    FitOptions tight;
    tight.epsilon = 1e-10;
    const FitResult f = fisher_scoring(prob, tight);
    const FitResult loose = fisher_scoring(prob);
    ASSERT_TRUE(f.converged);
    ASSERT_TRUE(loose.converged);
    ASSERT_EQ(f.p(), 2);
    auto l = [&](const Vec& t) {
      const auto v = prob.try_loglik(t);
      return v ? *v : -std::numeric_limits<double>::infinity();
    };
    const double best = oracle::grid_max(l, f.theta, 0.05, 1e-3);
    EXPECT_LE(best, f.loglik + 1e-6) << pr.spec.describe();
    // The default tolerance stops once a step gains less than 1e-6 |l|.
    EXPECT_LE(best, loose.loglik + 2e-6 * std::max(1.0, std::abs(loose.loglik))) << pr.spec.describe();
  }
}

TEST(FisherScoring, ConsistentAsSampleSizeGrows) {
  const ModelSpec s(Family::baseline_cumulative, 5, {Link::logit(), Link::probit(), Link::logit(), Link::probit()}, 1, 3);
  const DesignSpec d = DesignSpec::po(5, {"x"}, {Term::linear(0)});
  const std::vector<Vec> xs = line_settings(5, -1, 1);
  const Vec truth = V({-0.5, -1.0, 0.2, 1.0, 0.4});
  const LikelihoodProblem probe({s, d}, oracle::random_counts(5, xs, 1, {"x"}));
  ASSERT_TRUE(probe.feasible(truth));
  double err[2];
  int k = 0;
  for (std::int64_t n : {1000, 100000}) {
    const Dataset data = simulate(s, d, truth, xs, std::vector<std::int64_t>(5, n), 2024);
    const FitResult f = fisher_scoring(s, d, data);
    ASSERT_TRUE(f.converged);
    err[k++] = (f.theta - truth).norm();
  }
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[1], 0.05);
}

TEST(FisherScoring, EigenvalueShiftOnSingularInformation) {
  // One setting cannot identify category-specific slopes.
  const ModelSpec s(Family::adjacent, 3, {Link::logit()});
  const DesignSpec d = DesignSpec::npo(3, {"x"}, {Term::linear(0)});
  Counts y(1, 3);
  y << 7, 3, 10;
  const LikelihoodProblem prob({s, d}, Dataset({"x"}, {V({1.0})}, y));
  const FitResult f = fisher_scoring(prob, {}, Vec::Zero(4));
  bool shifted = false;
  for (const TraceEntry& e : f.trace) shifted = shifted || e.shift > 0.0;
  EXPECT_TRUE(shifted);
  for (size_t t = 1; t < f.trace.size(); ++t) EXPECT_GT(f.trace[t].loglik, f.trace[t - 1].loglik);
  ASSERT_FALSE(f.diagnostics.empty());
  EXPECT_NE(f.diagnostics.front().find("full row rank"), std::string::npos);
  // The saturated fit reproduces the observed proportions.
  EXPECT_NEAR(f.fitted(0, 0), 0.35, 1e-4);
  EXPECT_NEAR(f.fitted(0, 2), 0.5, 1e-4);
}

TEST(FisherScoring, IterationLimitReportsNonConvergence) {
  const oracle::Case c = oracle::make_case(oracle::family_specs(2)[4], oracle::Structure::npo, 12);
  FitOptions opt;
  opt.max_iter = 1;
  const FitResult f = fisher_scoring(LikelihoodProblem({c.spec, c.design}, c.data), opt);
  EXPECT_FALSE(f.converged);
  EXPECT_EQ(f.iterations, 1);
  bool found = false;
  for (const auto& s : f.diagnostics) found = found || s.find("maximum number of iterations") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(FisherScoring, Deterministic) {
  const oracle::Case c = oracle::make_case(oracle::family_specs(1)[6], oracle::Structure::mixture, 13);
  const LikelihoodProblem prob({c.spec, c.design}, c.data);
  const FitResult a = fisher_scoring(prob);
  const FitResult b = fisher_scoring(prob);
  EXPECT_EQ(a.theta, b.theta);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (size_t t = 0; t < a.trace.size(); ++t) EXPECT_EQ(a.trace[t].loglik, b.trace[t].loglik);
}

TEST(FisherScoring, ReportsCriteria) {
  const oracle::Case c = oracle::make_case(oracle::family_specs(0)[0], oracle::Structure::po, 14);
  const FitResult f = fisher_scoring(c.spec, c.design, c.data);
  EXPECT_NEAR(f.aic, -2 * f.loglik + 2 * f.p(), 1e-9);
  EXPECT_NEAR(f.bic, -2 * f.loglik + f.p() * std::log(static_cast<double>(c.data.total())), 1e-9);
  EXPECT_EQ(f.names.size(), static_cast<size_t>(f.p()));
  EXPECT_EQ(f.names.front(), "intercept@1");
}

TEST(FitOptions, Validation) {
  FitOptions o;
  o.delta = 1.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.epsilon = 0;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.lambda0 = -1;
  EXPECT_THROW(o.validate(), InvalidArgument);
}

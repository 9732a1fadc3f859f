#include <gtest/gtest.h>

#include "mlm/design.hpp"

using namespace mlm;

namespace {

Mat M(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (auto row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Vec V(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index a = 0;
  for (double x : v) out(a++) = x;
  return out;
}

}  // namespace

TEST(Design, ProportionalOddsRows) {
  const DesignSpec d = DesignSpec::po(3, {"x"}, {Term::linear(0)});
  EXPECT_EQ(d.p(), 3);
  EXPECT_EQ(d.build_X(V({2})), M({{1, 0, 2}, {0, 1, 2}}));
  EXPECT_EQ(d.param_name(0), "intercept@1");
  EXPECT_EQ(d.param_name(2), "x@1,2");
}

TEST(Design, NonProportionalOddsRows) {
  const DesignSpec d = DesignSpec::npo(3, {"x"}, {Term::linear(0)});
  EXPECT_EQ(d.build_X(V({2})), M({{1, 2, 0, 0}, {0, 0, 1, 2}}));
  EXPECT_EQ(d.param_name(1), "x@1");
  EXPECT_EQ(d.param_name(3), "x@2");
}

TEST(Design, MixtureSharingFirstTwoCategories) {
  const std::vector<Term> xs{Term::linear(0), Term::linear(1)};
  const std::vector<std::vector<Term>> per{xs, xs, xs, xs};
  const DesignSpec d = DesignSpec::from_parts(5, {"x1", "x2"}, DesignSpec::all_intercepts(5), per, {},
                                              {{Term::linear(0), {0, 1}}, {Term::linear(1), {0, 1}}});
  ASSERT_EQ(d.p(), 10);
  const double a = 0.7, b = -1.3;
  const Mat expect = M({{1, 0, 0, 0, 0, 0, 0, 0, a, b},
                        {0, 1, 0, 0, 0, 0, 0, 0, a, b},
                        {0, 0, 1, a, b, 0, 0, 0, 0, 0},
                        {0, 0, 0, 0, 0, 1, a, b, 0, 0}});
  EXPECT_EQ(d.build_X(V({a, b})), expect);
}

TEST(Design, ConstraintsEquivalentToMerges) {
  const DesignSpec npo = DesignSpec::npo(5, {"x1", "x2"}, {Term::linear(0), Term::linear(1)});
  const DesignSpec viaC = npo.constrained({Term::linear(0), {0, 1, 3}});
  const DesignSpec viaM = npo.merged(Term::linear(0), 0, 1).merged(Term::linear(0), 0, 3);
  EXPECT_EQ(viaC.p(), npo.p() - 2);
  const Vec x = V({0.4, 2.0});
  EXPECT_EQ(viaC.build_X(x), viaM.build_X(x));
  EXPECT_EQ(viaC.column_of(Term::linear(0), 0), viaC.column_of(Term::linear(0), 3));
  EXPECT_NE(viaC.column_of(Term::linear(0), 0), viaC.column_of(Term::linear(0), 2));
  EXPECT_EQ(viaC.param_name(viaC.p() - 1), "x1@1,2,4");
}

TEST(Design, SingleConstraintDropsOneParameter) {
  const DesignSpec npo = DesignSpec::npo(4, {"x"}, {Term::linear(0)});
  EXPECT_EQ(npo.constrained({Term::linear(0), {1, 2}}).p(), npo.p() - 1);
  EXPECT_THROW(npo.merged(Term::linear(0), 1, 1), InvalidArgument);
  EXPECT_THROW(npo.constrained({Term::linear(0), {1}}), InvalidArgument);
}

TEST(Design, PartialProportionalOddsBlocks) {
  const DesignSpec d = DesignSpec::ppo(4, {"x1", "x2"}, {Term::linear(0)}, {Term::linear(1)});
  EXPECT_EQ(d.p(), 7);
  EXPECT_EQ(d.build_X(V({3, 5})), M({{1, 3, 0, 0, 0, 0, 5}, {0, 0, 1, 3, 0, 0, 5}, {0, 0, 0, 0, 1, 3, 5}}));
}

TEST(Design, ColumnOrderIndependentOfMergeOrder) {
  const DesignSpec npo = DesignSpec::npo(5, {"x1", "x2"}, {Term::linear(0), Term::linear(1)});
  const DesignSpec a = npo.merged(Term::linear(1), 2, 3).merged(Term::linear(0), 0, 1);
  const DesignSpec b = npo.merged(Term::linear(0), 0, 1).merged(Term::linear(1), 2, 3);
  ASSERT_EQ(a.p(), b.p());
  for (int c = 0; c < a.p(); ++c) EXPECT_EQ(a.param_name(c), b.param_name(c));
  const Vec x = V({1.5, -2});
  EXPECT_EQ(a.build_X(x), b.build_X(x));
}

TEST(Design, HColumnsFollowCategoryMajorOrder) {
  const DesignSpec d = DesignSpec::npo(3, {"x"}, {Term::linear(0)});
  const std::vector<Vec> xs{V({1}), V({2}), V({4})};
  const Mat H = d.build_H(xs);
  ASSERT_EQ(H.rows(), 4);
  ASSERT_EQ(H.cols(), 6);
  const int m = 3;
  for (int i = 0; i < m; ++i) {
    const Mat X = d.build_X(xs[static_cast<size_t>(i)]);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(Vec(H.col(j * m + i)), Vec(X.row(j).transpose()));
  }
}

TEST(Design, InterceptOnlySingleSettingIsIdentity) {
  for (int J : {2, 3, 5}) {
    const DesignSpec d = DesignSpec::npo(J, {}, {});
    const Mat H = d.build_H({Vec(0)});
    EXPECT_EQ(H, Mat::Identity(J - 1, J - 1));
    EXPECT_TRUE(check_rank(H).full_row_rank);
  }
}

TEST(Design, RankChecks) {
  const DesignSpec npo = DesignSpec::npo(3, {"x"}, {Term::linear(0)});
  const RankReport full = check_rank(npo.build_H({V({0}), V({1}), V({2})}));
  EXPECT_TRUE(full.full_row_rank);
  EXPECT_EQ(full.rank, 4);

  const RankReport one = check_rank(npo.build_H({V({1})}));
  EXPECT_FALSE(one.full_row_rank);
  EXPECT_EQ(one.rank, 2);

  const DesignSpec twin = DesignSpec::po(3, {"x", "z"}, {Term::linear(0), Term::linear(1)});
  const RankReport dup = check_rank(twin.build_H({V({0, 0}), V({1, 1}), V({2, 2})}));
  EXPECT_FALSE(dup.full_row_rank);
  EXPECT_EQ(dup.rank, 3);
}

TEST(Design, TermParsing) {
  const std::vector<std::string> cov{"age", "dose"};
  EXPECT_EQ(Term::parse("1", cov), Term::intercept());
  EXPECT_EQ(Term::parse("intercept", cov), Term::intercept());
  EXPECT_EQ(Term::parse("dose", cov), Term::linear(1));
  EXPECT_EQ(Term::parse("age^2", cov), Term::square(0));
  EXPECT_THROW(Term::parse("weight", cov), InvalidArgument);
  EXPECT_EQ(Term::square(1).name(cov), "dose^2");
  EXPECT_DOUBLE_EQ(Term::square(1)(V({0, 3})), 9.0);
}

TEST(Design, InvalidDesigns) {
  EXPECT_THROW(DesignSpec::po(1, {}, {}), InvalidArgument);
  EXPECT_THROW(DesignSpec::from_parts(3, {"x"}, {true}, {}, {}), InvalidArgument);
  EXPECT_THROW(DesignSpec::from_parts(3, {"x"}, {true, true}, {{Term::linear(0)}}, {}), InvalidArgument);
  EXPECT_THROW(DesignSpec::from_parts(3, {"x"}, {true, true}, {{Term::linear(0)}, {}}, {Term::linear(0)}),
               InvalidArgument);
  EXPECT_THROW(DesignSpec::po(3, {"x"}, {Term::linear(1)}), InvalidArgument);
  const DesignSpec d = DesignSpec::po(3, {"x"}, {Term::linear(0)});
  EXPECT_THROW(d.build_X(V({1, 2})), InvalidArgument);
  EXPECT_THROW(d.merged(Term::linear(0), 0, 1), InvalidArgument);
}

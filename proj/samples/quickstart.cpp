// Fits a cumulative logit po model to a summarized CSV, prints Wald intervals,
// then compares it with the npo model by a likelihood-ratio test.
//
//   quickstart [path/to/trauma_like.csv]

#include <cstdio>
#include <iostream>

#include "mlm/mlm.hpp"

int main(int argc, char** argv) {
  using namespace mlm;
  const std::string path = argc > 1 ? argv[1] : "samples/data/trauma_like.csv";
  try {
    const Dataset data = read_summarized_file(path);
    const int J = data.J();
    std::vector<Term> terms;
    for (int c = 0; c < data.d(); ++c) terms.push_back(Term::linear(c));

    const ModelSpec spec(Family::cumulative, J, {Link::logit()});
    FitOptions opt;
    opt.epsilon = 1e-10;
    const FitResult po = fisher_scoring(spec, DesignSpec::po(J, data.covariates(), terms), data, opt);
    const FitResult npo = fisher_scoring(spec, DesignSpec::npo(J, data.covariates(), terms), data, opt);

    std::printf("%s, m = %d, n = %lld\n", spec.describe().c_str(), data.m(),
                static_cast<long long>(data.total()));
    std::printf("%-16s %10s %10s %10s %10s\n", "parameter", "estimate", "se", "lower", "upper");
    for (const auto& c : wald_ci(po))
      std::printf("%-16s %10.4f %10.4f %10.4f %10.4f\n", c.name.c_str(), c.estimate, c.se, c.lower, c.upper);
    std::printf("po:  loglik %.3f  AIC %.2f  BIC %.2f\n", po.loglik, po.aic, po.bic);
    std::printf("npo: loglik %.3f  AIC %.2f  BIC %.2f\n", npo.loglik, npo.aic, npo.bic);
    const auto t = lrt(npo, po, npo.p() - po.p());
    std::printf("LRT po vs npo: Lambda = %.3f on %d df, p = %.4f\n", t.Lambda, t.df, t.p_value);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

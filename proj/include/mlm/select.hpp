#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlm/criteria.hpp"
#include "mlm/data.hpp"
#include "mlm/design.hpp"
#include "mlm/fit.hpp"
#include "mlm/parallel.hpp"
#include "mlm/rng.hpp"

namespace mlm {

// ---------------------------------------------------------------------------
// Backward selection of a po-npo mixture

struct MergeCandidate {
  int term_index = 0;  // position in DesignSpec::terms()
  Term term;
  int a = 0;  // 0-based categories, a < b
  int b = 0;
  double gap = 0.0;
  double aic = std::numeric_limits<double>::infinity();
  bool ok = false;
  std::string error;
};

struct SelectionStep {
  int iteration = 0;
  MergeCandidate chosen;
  double aic = 0.0;
  bool accepted = false;
  std::vector<MergeCandidate> candidates;
};

struct SelectionTrace {
  double initial_aic = 0.0;
  std::vector<SelectionStep> steps;  // the last one is rejected unless nothing was left to merge
  std::vector<Constraint> constraints;
  DesignSpec design;
  FitResult fit;
  std::vector<std::string> warnings;

  /// AIC after each accepted merge, starting with the npo fit.
  std::vector<double> aic_path() const {
    std::vector<double> out{initial_aic};
    for (const auto& s : steps) {
      if (s.accepted) out.push_back(s.aic);
    }
    return out;
  }
};

namespace detail {

inline std::vector<MergeCandidate> closest_pairs(const DesignSpec& design, const Vec& theta) {
  std::vector<MergeCandidate> out;
  const std::vector<Term> terms = design.terms();
  const int q = design.J() - 1;
  for (size_t s = 0; s < terms.size(); ++s) {
    std::optional<MergeCandidate> best;
    for (int a = 0; a < q; ++a) {
      const int ca = design.column_of(terms[s], a);
      if (ca < 0) continue;
      for (int b = a + 1; b < q; ++b) {
        const int cb = design.column_of(terms[s], b);
        if (cb < 0 || cb == ca) continue;
        const double gap = std::abs(theta(ca) - theta(cb));
        if (!best || gap < best->gap) {
          MergeCandidate c;
          c.term_index = static_cast<int>(s);
          c.term = terms[s];
          c.a = a;
          c.b = b;
          c.gap = gap;
          best = c;
        }
      }
    }
    if (best) out.push_back(*best);
  }
  return out;
}

}  // namespace detail

/// Starting from `npo_design`, repeatedly merges the closest pair of unequal
/// coefficients of some term, keeping the merge with the smallest AIC as long
/// as it improves on the current model.
inline SelectionTrace backward_mixture(const ModelSpec& spec, const DesignSpec& npo_design,
                                       const Dataset& data, const FitOptions& opt = {},
                                       int jobs = 1) {
  SelectionTrace tr;
  tr.design = npo_design;
  tr.fit = fisher_scoring(LikelihoodProblem({spec, npo_design}, data), opt);
  if (!tr.fit.converged)
    tr.warnings.push_back("initial fit did not converge; selection continues from its last iterate");
  tr.initial_aic = tr.fit.aic;

  for (int t = 1;; ++t) {
    std::vector<MergeCandidate> cands = detail::closest_pairs(tr.design, tr.fit.theta);
    if (cands.empty()) break;
    std::vector<FitResult> fits(cands.size());
    parallel_for(static_cast<int>(cands.size()), jobs, [&](int c) {
      MergeCandidate& mc = cands[static_cast<size_t>(c)];
      try {
        const DesignSpec d = tr.design.merged(mc.term, mc.a, mc.b);
        FitResult f = fisher_scoring(LikelihoodProblem({spec, d}, data), opt);
        if (!f.converged) {
          mc.error = "fit did not converge";
        } else {
          mc.aic = f.aic;
          mc.ok = true;
        }
        fits[static_cast<size_t>(c)] = std::move(f);
      } catch (const std::exception& e) {
        mc.error = e.what();
      }
    });
    int best = -1;
    for (size_t c = 0; c < cands.size(); ++c) {
      const MergeCandidate& mc = cands[c];
      if (!mc.ok) {
        tr.warnings.push_back("iteration " + std::to_string(t) + ": candidate " +
                              mc.term.name(tr.design.covariates()) + "@" + std::to_string(mc.a + 1) +
                              "=" + std::to_string(mc.b + 1) + " skipped (" + mc.error + ")");
        continue;
      }
      if (best < 0 || mc.aic < cands[static_cast<size_t>(best)].aic) best = static_cast<int>(c);
    }
    if (best < 0) break;
    SelectionStep step;
    step.iteration = t;
    step.chosen = cands[static_cast<size_t>(best)];
    step.aic = step.chosen.aic;
    step.accepted = step.aic < tr.fit.aic;
    step.candidates = cands;
    tr.steps.push_back(step);
    if (!step.accepted) break;
    tr.design = tr.design.merged(step.chosen.term, step.chosen.a, step.chosen.b);
    tr.fit = std::move(fits[static_cast<size_t>(best)]);
  }

  for (const Term& term : tr.design.terms()) {
    std::vector<std::vector<int>> groups;
    for (const Parameter& par : tr.design.params()) {
      if (par.term == term && par.categories.size() > 1) groups.push_back(par.categories);
    }
    for (auto& g : groups) tr.constraints.push_back({term, g});
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Link assignment search

inline constexpr std::uint64_t kMaxLinkCombinations = 100000;

struct LinkCandidateResult {
  std::vector<Link> links;
  double value = std::numeric_limits<double>::infinity();
  double loglik = 0.0;
  bool ok = false;
  std::string error;

  std::string label() const {
    std::string s;
    for (size_t j = 0; j < links.size(); ++j) {
      if (j) s += ',';
      s += links[j].name();
    }
    return s;
  }
};

struct LinkSearchResult {
  ModelSpec spec;
  FitResult fit;
  Criterion criterion = Criterion::aic;
  std::vector<LinkCandidateResult> table;  // enumeration order

  /// Successful candidates sorted by criterion value; ties keep enumeration order.
  std::vector<LinkCandidateResult> ranking() const {
    std::vector<LinkCandidateResult> out;
    for (const auto& r : table) {
      if (r.ok) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& x, const auto& y) { return x.value < y.value; });
    return out;
  }
};

inline std::uint64_t link_combinations(std::size_t candidates, int slots) {
  std::uint64_t n = 1;
  for (int j = 0; j < slots; ++j) {
    if (n > kMaxLinkCombinations) return n;
    n *= candidates;
  }
  return n;
}

/// Fits every assignment of candidate links to the J-1 categories and returns
/// the one with the smallest criterion. Candidates are ordered by name, so
/// equal values resolve to the lexicographically smallest assignment.
inline LinkSearchResult link_search(const ModelSpec& templ, std::vector<Link> candidates,
                                    const DesignSpec& design, const Dataset& data,
                                    Criterion criterion = Criterion::bic,
                                    const FitOptions& opt = {}, int jobs = 1) {
  std::sort(candidates.begin(), candidates.end(),
            [](const Link& a, const Link& b) { return a.name() < b.name(); });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) throw InvalidArgument("link search: no candidate links");
  const int q = templ.J() - 1;
  const std::uint64_t total = link_combinations(candidates.size(), q);
  if (total > kMaxLinkCombinations)
    throw InvalidArgument("link search: " + std::to_string(candidates.size()) + "^" +
                          std::to_string(q) + " combinations exceed the limit of " +
                          std::to_string(kMaxLinkCombinations));

  LinkSearchResult res;
  res.criterion = criterion;
  res.table.resize(static_cast<size_t>(total));
  std::vector<std::optional<FitResult>> fits(static_cast<size_t>(total));
  parallel_for(static_cast<int>(total), jobs, [&](int idx) {
    LinkCandidateResult& r = res.table[static_cast<size_t>(idx)];
    r.links.resize(static_cast<size_t>(q));
    std::uint64_t rem = static_cast<std::uint64_t>(idx);
    for (int j = q - 1; j >= 0; --j) {
      r.links[static_cast<size_t>(j)] = candidates[static_cast<size_t>(rem % candidates.size())];
      rem /= candidates.size();
    }
    try {
      const ModelSpec spec = templ.with_links(r.links);
      FitResult f = fisher_scoring(LikelihoodProblem({spec, design}, data), opt);
      r.loglik = f.loglik;
      if (!f.converged) {
        r.error = "fit did not converge";
      } else {
        r.value = criterion_value({f.aic, f.bic}, criterion);
        r.ok = true;
        fits[static_cast<size_t>(idx)] = std::move(f);
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  int best = -1;
  for (size_t a = 0; a < res.table.size(); ++a) {
    if (res.table[a].ok && (best < 0 || res.table[a].value < res.table[static_cast<size_t>(best)].value))
      best = static_cast<int>(a);
  }
  if (best < 0) throw FitError("link search: no candidate assignment could be fitted");
  res.spec = templ.with_links(res.table[static_cast<size_t>(best)].links);
  res.fit = std::move(*fits[static_cast<size_t>(best)]);
  return res;
}

// ---------------------------------------------------------------------------
// Two-group candidates

/// Every two-group model with 1 <= k <= J-3 and k+1 <= s <= J.
inline std::vector<ModelSpec> enumerate_two_group_specs(int J, const Link& link = Link::logit()) {
  if (J < 4) throw InvalidArgument("two-group models need J >= 4");
  std::vector<ModelSpec> out;
  for (Family f : {Family::baseline_cumulative, Family::baseline_adjacent,
                   Family::baseline_continuation}) {
    for (int k = 1; k <= J - 3; ++k) {
      for (int s = k + 1; s <= J; ++s) out.emplace_back(f, J, std::vector<Link>{link}, k, s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

/// -sum y log pi over the entries with y > 0.
inline double cross_entropy(const Counts& y, const Mat& pi) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) > 0) loss -= static_cast<double>(y(i, j)) * std::log(pi(i, j));
    }
  }
  return loss;
}

struct CrossValidationResult {
  int k = 0;
  double loss = 0.0;  // summed over the held-out folds
  double mean_loss = 0.0;  // per held-out observation
  std::int64_t observations = 0;
  std::vector<double> fold_loss;
  std::vector<std::int64_t> fold_size;
  std::vector<int> failed_folds;
  std::vector<std::string> warnings;
};

/// Assigns every observation to a fold: within each setting the observations
/// are shuffled and dealt round-robin starting at a random fold.
inline std::vector<Counts> cv_partition(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation: k must be at least 2");
  if (data.total() < k) throw InvalidArgument("cross-validation: fewer observations than folds");
  std::vector<Counts> folds(static_cast<size_t>(k), Counts::Zero(data.m(), data.J()));
  SplitMix64 rng(seed);
  for (int i = 0; i < data.m(); ++i) {
    std::vector<int> obs;
    for (int j = 0; j < data.J(); ++j) obs.insert(obs.end(), static_cast<size_t>(data.count(i, j)), j);
    rng.shuffle(obs);
    const auto offset = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(k)));
    for (size_t r = 0; r < obs.size(); ++r) ++folds[(offset + r) % static_cast<size_t>(k)](i, obs[r]);
  }
  return folds;
}

/// k-fold cross-validated cross-entropy. Folds whose training fit fails are
/// excluded and reported.
inline CrossValidationResult cross_validate(const ModelSpec& spec, const DesignSpec& design,
                                            const Dataset& data, int k, std::uint64_t seed,
                                            const FitOptions& opt = {}, int jobs = 1) {
  const std::vector<Counts> folds = cv_partition(data, k, seed);
  CrossValidationResult res;
  res.k = k;
  res.fold_loss.assign(static_cast<size_t>(k), 0.0);
  res.fold_size.assign(static_cast<size_t>(k), 0);
  std::vector<std::string> errors(static_cast<size_t>(k));
  const std::vector<Mat> Xs = model_matrices(design, data.settings());
  parallel_for(k, jobs, [&](int f) {
    const Counts& held = folds[static_cast<size_t>(f)];
    res.fold_size[static_cast<size_t>(f)] = held.sum();
    try {
      const Dataset train = data.with_counts(data.counts() - held);
      const FitResult fit = fisher_scoring(LikelihoodProblem({spec, design}, train), opt);
      if (!fit.converged) throw FitError("training fit did not converge");
      const Mat pi = fitted_probabilities(spec, Xs, fit.theta);
      res.fold_loss[static_cast<size_t>(f)] = cross_entropy(held, pi);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(f)] = e.what();
    }
  });
  for (int f = 0; f < k; ++f) {
    if (!errors[static_cast<size_t>(f)].empty()) {
      res.failed_folds.push_back(f);
      res.warnings.push_back("fold " + std::to_string(f + 1) + " excluded: " +
                             errors[static_cast<size_t>(f)]);
      continue;
    }
    res.loss += res.fold_loss[static_cast<size_t>(f)];
    res.observations += res.fold_size[static_cast<size_t>(f)];
  }
  if (res.observations == 0) throw FitError("cross-validation: every fold failed");
  res.mean_loss = res.loss / static_cast<double>(res.observations);
  return res;
}

}  // namespace mlm

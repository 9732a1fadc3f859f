#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mlm/mlm.hpp"
#include "run_config.hpp"

namespace mlm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct Options {
  std::string command;
  std::string config;
  std::string data;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> alpha;
  std::string criterion;
};

inline std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

/// Output files collected in memory and written together once the command has
/// finished, each through a temporary file and a rename.
class Outputs {
 public:
  std::ostringstream& file(const std::string& name) { return files_[name]; }

  void kv(const std::string& key, const std::string& value) { file("result.kv") << key << '=' << value << '\n'; }
  void kv(const std::string& key, double value) { kv(key, num(value)); }
  void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, std::int64_t value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, bool value) { kv(key, std::string(value ? "true" : "false")); }

  void commit(const std::string& dir) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<std::pair<fs::path, fs::path>> staged;
    for (const auto& [name, body] : files_) {
      const fs::path final_path = fs::path(dir) / name;
      fs::path tmp = final_path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary);
      out << body.str();
      out.close();
      if (!out) throw InputError("cannot write '" + tmp.string() + "'");
      staged.emplace_back(tmp, final_path);
    }
    for (const auto& [tmp, final_path] : staged) {
      fs::rename(tmp, final_path, ec);
      if (ec) throw InputError("cannot rename '" + tmp.string() + "': " + ec.message());
    }
  }

 private:
  std::map<std::string, std::ostringstream> files_;
};

struct Context {
  RunConfig config;
  Options opts;
  std::vector<std::string> warnings;
};

inline Dataset load_data(Context& ctx) {
  const DataConfig& d = ctx.config.data;
  const std::string path = ctx.opts.data.empty() ? d.path : ctx.opts.data;
  if (path.empty()) throw InputError("no data file given (use --data or data.path)");
  if (d.format == "raw") {
    if (d.categories.empty()) throw InputError("raw data needs data.categories in the config");
    return read_raw_file(path, d.categories, d.covariates, d.category_column);
  }
  return read_summarized_file(path, d.covariates, d.categories, &ctx.warnings);
}

inline std::uint64_t require_seed(const Context& ctx) {
  if (ctx.opts.seed) return *ctx.opts.seed;
  if (ctx.config.seed) return *ctx.config.seed;
  throw InputError("'" + ctx.opts.command + "' needs a seed (--seed or config seed)");
}

inline void write_fit(Outputs& out, const std::string& prefix, const FitResult& fit, double alpha,
                      std::ostream& report) {
  std::vector<CoefficientInterval> ci;
  std::string cov_error;
  try {
    ci = wald_ci(fit, alpha);
  } catch (const Error& e) {
    cov_error = e.what();
  }
  out.kv(prefix + "converged", fit.converged);
  out.kv(prefix + "iterations", fit.iterations);
  out.kv(prefix + "loglik", fit.loglik);
  out.kv(prefix + "aic", fit.aic);
  out.kv(prefix + "bic", fit.bic);
  out.kv(prefix + "p", fit.p());
  out.kv(prefix + "min_fitted", fit.min_fitted());
  for (int c = 0; c < fit.p(); ++c) {
    const std::string& name = fit.names[static_cast<size_t>(c)];
    out.kv(prefix + "theta[" + name + "]", fit.theta(c));
    if (!ci.empty()) {
      out.kv(prefix + "se[" + name + "]", ci[static_cast<size_t>(c)].se);
      out.kv(prefix + "lower[" + name + "]", ci[static_cast<size_t>(c)].lower);
      out.kv(prefix + "upper[" + name + "]", ci[static_cast<size_t>(c)].upper);
    }
  }

  report << "converged      " << (fit.converged ? "yes" : "no") << " after " << fit.iterations
         << " iteration(s)\n";
  report << "log-likelihood " << fixed(fit.loglik, 10) << "\n";
  report << "AIC            " << fixed(fit.aic, 10) << "\n";
  report << "BIC            " << fixed(fit.bic, 10) << "\n";
  report << "min fitted pi  " << fixed(fit.min_fitted(), 6) << "\n\n";
  const int level = static_cast<int>(std::lround(100.0 * (1.0 - alpha)));
  report << std::left << std::setw(20) << "coefficient" << std::right << std::setw(14) << "estimate"
         << std::setw(14) << "std.err" << std::setw(14) << ("lower " + std::to_string(level) + "%")
         << std::setw(14) << ("upper " + std::to_string(level) + "%") << std::setw(12) << "p-value"
         << "\n";
  for (int c = 0; c < fit.p(); ++c) {
    report << std::left << std::setw(20) << fit.names[static_cast<size_t>(c)] << std::right
           << std::setw(14) << fixed(fit.theta(c));
    if (!ci.empty()) {
      const auto& r = ci[static_cast<size_t>(c)];
      report << std::setw(14) << fixed(r.se) << std::setw(14) << fixed(r.lower) << std::setw(14)
             << fixed(r.upper) << std::setw(12) << fixed(r.p_value, 4);
    }
    report << "\n";
  }
  if (!cov_error.empty()) report << "\nstandard errors unavailable: " << cov_error << "\n";
  if (!fit.diagnostics.empty()) {
    report << "\ndiagnostics:\n";
    for (const auto& d : fit.diagnostics) report << "  " << d << "\n";
  }
}

inline void write_trace(Outputs& out, const FitResult& fit) {
  auto& t = out.file("trace.csv");
  t << "iteration,loglik,step_norm,backtracks,shift\n";
  for (const auto& e : fit.trace)
    t << e.iteration << ',' << num(e.loglik) << ',' << num(e.step_norm) << ',' << e.backtracks << ','
      << num(e.shift) << '\n';
}

inline void write_header(std::ostream& report, const ModelSpec& spec, const Dataset& data) {
  report << "model          " << spec.describe() << "\n";
  report << "data           m=" << data.m() << " settings, n=" << data.total() << ", J=" << data.J()
         << "\n";
}

inline void write_warnings(Outputs& out, std::ostream& report, const std::vector<std::string>& w) {
  for (size_t a = 0; a < w.size(); ++a) out.kv("warning." + std::to_string(a + 1), w[a]);
  if (w.empty()) return;
  report << "\nwarnings:\n";
  for (const auto& s : w) report << "  " << s << "\n";
}

inline int cmd_fit(Context& ctx, Outputs& out) {
  const Dataset data = load_data(ctx);
  const ModelSpec spec = build_model(ctx.config, data.J());
  const DesignSpec design = build_design(ctx.config, data.J(), data.covariates());
  const LikelihoodProblem prob({spec, design}, data);
  const FitResult fit = fisher_scoring(prob, ctx.config.fit);
  auto& report = out.file("report.txt");
  write_header(report, spec, data);
  out.kv("command", std::string("fit"));
  out.kv("model", spec.describe());
  out.kv("m", data.m());
  out.kv("n", data.total());
  write_fit(out, "", fit, ctx.config.alpha, report);
  write_trace(out, fit);
  write_warnings(out, report, ctx.warnings);
  const bool ok = fit.converged && prob.feasible(fit.theta) && fit.min_fitted() > 0.0;
  return ok ? kExitOk : kExitNotConverged;
}

inline std::string criterion_name(Criterion c) { return c == Criterion::aic ? "AIC" : "BIC"; }

inline int select_mixture(Context& ctx, Outputs& out, const Dataset& data, const ModelSpec& spec,
                          const DesignSpec& design, std::ostream& report) {
  const SelectionTrace tr = backward_mixture(spec, design, data, ctx.config.fit, ctx.config.jobs);
  auto& rk = out.file("ranking.csv");
  rk << "iteration,term,category_a,category_b,gap,aic,fitted,chosen,accepted\n";
  for (const auto& step : tr.steps) {
    for (const auto& c : step.candidates) {
      const bool chosen = c.term == step.chosen.term && c.a == step.chosen.a && c.b == step.chosen.b;
      rk << step.iteration << ',' << c.term.name(design.covariates()) << ',' << c.a + 1 << ','
         << c.b + 1 << ',' << num(c.gap) << ',' << (c.ok ? num(c.aic) : "") << ','
         << (c.ok ? 1 : 0) << ',' << (chosen ? 1 : 0) << ',' << (chosen && step.accepted ? 1 : 0)
         << '\n';
    }
  }
  auto& t = out.file("trace.csv");
  t << "iteration,aic,accepted\n";
  t << 0 << ',' << num(tr.initial_aic) << ",1\n";
  for (const auto& step : tr.steps) t << step.iteration << ',' << num(step.aic) << ',' << (step.accepted ? 1 : 0) << '\n';

  report << "mode           backward po-npo mixture selection\n";
  report << "starting AIC   " << fixed(tr.initial_aic, 10) << "\n";
  for (const auto& step : tr.steps) {
    report << "iteration " << step.iteration << ": merge " << step.chosen.term.name(design.covariates())
           << " for categories " << step.chosen.a + 1 << " and " << step.chosen.b + 1 << ", AIC "
           << fixed(step.aic, 10) << (step.accepted ? " (accepted)" : " (rejected, stop)") << "\n";
  }
  report << "constraints:\n";
  if (tr.constraints.empty()) report << "  none\n";
  for (const auto& c : tr.constraints) {
    report << "  " << c.term.name(design.covariates()) << " shared by categories";
    for (int j : c.categories) report << ' ' << j + 1;
    report << "\n";
  }
  report << "\nselected model:\n";
  out.kv("mode", std::string("mixture"));
  out.kv("initial_aic", tr.initial_aic);
  const auto path = tr.aic_path();
  for (size_t a = 0; a < path.size(); ++a) out.kv("aic_path." + std::to_string(a), path[a]);
  out.kv("constraints", static_cast<int>(tr.constraints.size()));
  write_fit(out, "", tr.fit, ctx.config.alpha, report);
  ctx.warnings.insert(ctx.warnings.end(), tr.warnings.begin(), tr.warnings.end());
  return tr.fit.converged ? kExitOk : kExitNotConverged;
}

inline int select_links(Context& ctx, Outputs& out, const Dataset& data, const ModelSpec& spec,
                        const DesignSpec& design, std::ostream& report) {
  std::vector<std::string> names = ctx.config.select.candidate_links;
  if (names.empty()) names = {"logit", "probit", "loglog", "cloglog"};
  std::vector<Link> cands;
  try {
    cands = parse_links(names);
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  const Criterion crit = ctx.config.criterion;
  const LinkSearchResult res =
      link_search(spec, cands, design, data, crit, ctx.config.fit, ctx.config.jobs);
  auto& rk = out.file("ranking.csv");
  rk << "rank,links," << (crit == Criterion::aic ? "aic" : "bic") << ",loglik\n";
  const auto ranking = res.ranking();
  for (size_t a = 0; a < ranking.size(); ++a)
    rk << a + 1 << ",\"" << ranking[a].label() << "\"," << num(ranking[a].value) << ','
       << num(ranking[a].loglik) << '\n';
  report << "mode           link search over " << res.table.size() << " assignments by "
         << criterion_name(crit) << "\n";
  report << "best links     " << res.spec.describe() << "\n";
  const size_t shown = std::min<size_t>(ranking.size(), 10);
  report << "top " << shown << ":\n";
  for (size_t a = 0; a < shown; ++a)
    report << "  " << std::setw(3) << a + 1 << "  " << std::left << std::setw(40) << ranking[a].label()
           << std::right << fixed(ranking[a].value, 10) << "\n";
  for (const auto& r : res.table) {
    if (!r.ok) ctx.warnings.push_back("links " + r.label() + " skipped: " + r.error);
  }
  report << "\nselected model:\n";
  out.kv("mode", std::string("links"));
  out.kv("best_links", res.table.empty() ? std::string() : res.spec.describe());
  out.kv("criterion", criterion_name(crit));
  out.kv("candidates", static_cast<int>(res.table.size()));
  write_fit(out, "", res.fit, ctx.config.alpha, report);
  write_trace(out, res.fit);
  return res.fit.converged ? kExitOk : kExitNotConverged;
}

inline int select_two_group(Context& ctx, Outputs& out, const Dataset& data, const ModelSpec& spec,
                            const DesignSpec& design, std::ostream& report) {
  std::vector<ModelSpec> specs;
  try {
    specs = enumerate_two_group_specs(data.J(), spec.link(0));
  } catch (const InvalidArgument& e) {
    throw InputError(e.what());
  }
  const Criterion crit = ctx.config.criterion;
  struct Row {
    ModelSpec spec;
    std::optional<FitResult> fit;
    double value = 0.0;
    std::string error;
  };
  std::vector<Row> rows(specs.size());
  parallel_for(static_cast<int>(specs.size()), ctx.config.jobs, [&](int a) {
    Row& r = rows[static_cast<size_t>(a)];
    r.spec = specs[static_cast<size_t>(a)];
    try {
      FitResult f = fisher_scoring(LikelihoodProblem({r.spec, design}, data), ctx.config.fit);
      if (!f.converged) {
        r.error = "fit did not converge";
        return;
      }
      r.value = criterion_value({f.aic, f.bic}, crit);
      r.fit = std::move(f);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  std::vector<size_t> order;
  for (size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].fit) order.push_back(a);
    else ctx.warnings.push_back(rows[a].spec.describe() + " skipped: " + rows[a].error);
  }
  if (order.empty()) throw FitError("two-group search: no candidate could be fitted");
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rows[a].value < rows[b].value; });
  auto& rk = out.file("ranking.csv");
  rk << "rank,family,k,s," << (crit == Criterion::aic ? "aic" : "bic") << ",loglik\n";
  report << "mode           two-group search over " << rows.size() << " structures by "
         << criterion_name(crit) << "\n";
  for (size_t a = 0; a < order.size(); ++a) {
    const Row& r = rows[order[a]];
    rk << a + 1 << ',' << family_name(r.spec.family()) << ',' << r.spec.k() << ',' << r.spec.s() << ','
       << num(r.value) << ',' << num(r.fit->loglik) << '\n';
    report << "  " << std::setw(3) << a + 1 << "  " << std::left << std::setw(28)
           << family_name(r.spec.family()) << std::right << " k=" << r.spec.k() << " s=" << r.spec.s()
           << "  " << fixed(r.value, 10) << "\n";
  }
  const Row& best = rows[order.front()];
  report << "\nselected model: " << best.spec.describe() << "\n";
  out.kv("mode", std::string("two-group"));
  out.kv("best_model", best.spec.describe());
  out.kv("criterion", criterion_name(crit));
  write_fit(out, "", *best.fit, ctx.config.alpha, report);
  write_trace(out, *best.fit);
  return kExitOk;
}

inline int cmd_select(Context& ctx, Outputs& out) {
  const Dataset data = load_data(ctx);
  const ModelSpec spec = build_model(ctx.config, data.J());
  const DesignSpec design = build_design(ctx.config, data.J(), data.covariates());
  auto& report = out.file("report.txt");
  write_header(report, spec, data);
  out.kv("command", std::string("select"));
  int code = kExitOk;
  const std::string& mode = ctx.config.select.mode;
  if (mode == "mixture") code = select_mixture(ctx, out, data, spec, design, report);
  else if (mode == "links") code = select_links(ctx, out, data, spec, design, report);
  else code = select_two_group(ctx, out, data, spec, design, report);
  write_warnings(out, report, ctx.warnings);
  return code;
}

/// theta[...] entries of a result.kv file, in file order.
inline std::vector<double> read_theta_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> theta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("theta[", 0) != 0) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    double v = 0.0;
    const char* b = line.data() + eq + 1;
    const char* e = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw InputError("bad value in '" + path + "': " + line);
    theta.push_back(v);
  }
  if (theta.empty()) throw InputError("no theta[...] entries in '" + path + "'");
  return theta;
}

inline int cmd_simulate(Context& ctx, Outputs& out) {
  const std::uint64_t seed = require_seed(ctx);
  const SimulateConfig& sc = ctx.config.simulate;
  std::optional<Dataset> data;
  if (!ctx.opts.data.empty() || !ctx.config.data.path.empty()) data = load_data(ctx);

  std::vector<std::string> covariates = data ? data->covariates() : ctx.config.data.covariates;
  std::vector<Vec> settings;
  if (!sc.settings.empty()) {
    for (const auto& s : sc.settings) {
      if (s.size() != covariates.size())
        throw InputError("simulate.settings entries need one value per covariate (" +
                         std::to_string(covariates.size()) + ")");
      settings.push_back(Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())));
    }
  } else if (data) {
    settings = data->settings();
  } else {
    throw InputError("simulate needs simulate.settings or a data file");
  }
  std::vector<std::int64_t> n = sc.n;
  if (n.empty()) {
    if (!data || !sc.settings.empty()) throw InputError("simulate needs simulate.n");
    for (int i = 0; i < data->m(); ++i) n.push_back(data->n(i));
  } else if (n.size() == 1) {
    n.assign(settings.size(), n.front());
  }
  if (n.size() != settings.size())
    throw InputError("simulate.n must hold one count or one per setting");

  int J = ctx.config.model.J;
  if (data) J = data->J();
  if (J == 0 && !ctx.config.data.categories.empty()) J = static_cast<int>(ctx.config.data.categories.size());
  if (J == 0) throw InputError("simulate needs model.J");
  const ModelSpec spec = build_model(ctx.config, J);
  const DesignSpec design = build_design(ctx.config, J, covariates);
  std::vector<double> theta = sc.theta;
  if (!sc.theta_from.empty()) {
    if (!theta.empty()) throw InputError("give either simulate.theta or simulate.theta_from");
    theta = read_theta_kv(sc.theta_from);
  }
  if (static_cast<int>(theta.size()) != design.p())
    throw InputError("theta has " + std::to_string(theta.size()) + " entries but the design has p = " +
                     std::to_string(design.p()));
  const Vec th = Eigen::Map<const Vec>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  std::vector<std::string> labels = data ? data->categories() : ctx.config.data.categories;
  if (static_cast<int>(labels.size()) != J) labels.clear();
  Dataset sim = [&] {
    try {
      return simulate(spec, design, th, settings, n, seed, labels);
    } catch (const Infeasible& e) {
      throw Infeasible("theta is infeasible at setting " + std::to_string(e.setting() + 1) + ": " +
                           e.what(),
                       e.setting());
    } catch (const InvalidArgument& e) {
      throw InputError(e.what());
    }
  }();
  write_summarized(out.file("simulated.csv"), sim);
  auto& report = out.file("report.txt");
  report << "model          " << spec.describe() << "\n";
  report << "simulated      m=" << sim.m() << " settings, n=" << sim.total() << ", seed " << seed << "\n";
  out.kv("command", std::string("simulate"));
  out.kv("seed", std::to_string(seed));
  out.kv("m", sim.m());
  out.kv("n", sim.total());
  write_warnings(out, report, ctx.warnings);
  return kExitOk;
}

inline int cmd_bootstrap(Context& ctx, Outputs& out) {
  const std::uint64_t seed = require_seed(ctx);
  const Dataset data = load_data(ctx);
  const ModelSpec spec = build_model(ctx.config, data.J());
  const DesignSpec design = build_design(ctx.config, data.J(), data.covariates());
  const BootstrapReport rep =
      bootstrap_study(data, spec, design, ctx.config.bootstrap_B, seed, ctx.config.fit, ctx.config.jobs);
  auto& csv = out.file("replicates.csv");
  csv << "replicate,converged,feasible,min_fitted,loglik,iterations,settings,error\n";
  double min_all = 1.0;
  for (const auto& r : rep.replicates) {
    csv << r.index + 1 << ',' << (r.converged ? 1 : 0) << ',' << (r.feasible ? 1 : 0) << ','
        << num(r.min_fitted) << ',' << num(r.loglik) << ',' << r.iterations << ',' << r.m << ",\""
        << r.error << "\"\n";
    if (r.error.empty()) min_all = std::min(min_all, r.min_fitted);
  }
  auto& report = out.file("report.txt");
  write_header(report, spec, data);
  report << "bootstrap      B=" << rep.B << ", seed " << seed << "\n";
  report << "converged      " << rep.n_converged << "\n";
  report << "feasible       " << rep.n_feasible << "\n";
  report << "non-positive   " << rep.n_nonpositive << "\n";
  report << "failed         " << rep.n_failed << "\n";
  report << "min fitted pi  " << fixed(min_all) << "\n";
  out.kv("command", std::string("bootstrap"));
  out.kv("seed", std::to_string(seed));
  out.kv("B", rep.B);
  out.kv("converged", rep.n_converged);
  out.kv("feasible", rep.n_feasible);
  out.kv("nonpositive", rep.n_nonpositive);
  out.kv("failed", rep.n_failed);
  out.kv("min_fitted", min_all);
  write_warnings(out, report, ctx.warnings);
  const bool all_ok = rep.n_failed == 0 && rep.n_converged == rep.B && rep.n_feasible == rep.B;
  return all_ok ? kExitOk : kExitNotConverged;
}

inline int cmd_cv(Context& ctx, Outputs& out) {
  const std::uint64_t seed = require_seed(ctx);
  const Dataset data = load_data(ctx);
  const ModelSpec spec = build_model(ctx.config, data.J());
  const DesignSpec design = build_design(ctx.config, data.J(), data.covariates());
  const CrossValidationResult res =
      cross_validate(spec, design, data, ctx.config.cv_folds, seed, ctx.config.fit, ctx.config.jobs);
  auto& csv = out.file("folds.csv");
  csv << "fold,observations,loss,excluded\n";
  for (int f = 0; f < res.k; ++f) {
    const bool excluded =
        std::find(res.failed_folds.begin(), res.failed_folds.end(), f) != res.failed_folds.end();
    csv << f + 1 << ',' << res.fold_size[static_cast<size_t>(f)] << ','
        << num(res.fold_loss[static_cast<size_t>(f)]) << ',' << (excluded ? 1 : 0) << '\n';
  }
  auto& report = out.file("report.txt");
  write_header(report, spec, data);
  report << "folds          " << res.k << ", seed " << seed << "\n";
  report << "cross-entropy  " << fixed(res.loss, 10) << " over " << res.observations
         << " held-out observations\n";
  report << "per obs.       " << fixed(res.mean_loss, 10) << "\n";
  out.kv("command", std::string("cv"));
  out.kv("seed", std::to_string(seed));
  out.kv("folds", res.k);
  out.kv("loss", res.loss);
  out.kv("mean_loss", res.mean_loss);
  out.kv("observations", res.observations);
  out.kv("excluded_folds", static_cast<int>(res.failed_folds.size()));
  ctx.warnings.insert(ctx.warnings.end(), res.warnings.begin(), res.warnings.end());
  write_warnings(out, report, ctx.warnings);
  return res.failed_folds.empty() ? kExitOk : kExitNotConverged;
}

/// Parses the command line, runs one subcommand and writes its outputs.
/// Returns the process exit code; messages go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Multinomial link models: fitting, selection, simulation and bootstrap"};
  Options o;
  app.require_subcommand(1);
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"fit", "fit one model by Fisher scoring"},
      {"select", "backward mixture selection, link search or two-group search"},
      {"simulate", "draw multinomial responses from a model"},
      {"bootstrap", "refit the model on bootstrap resamples and audit feasibility"},
      {"cv", "k-fold cross-validated cross-entropy"}};
  std::uint64_t seed = 0;
  int jobs = 1;
  double alpha = 0.05;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--data", o.data, "data CSV (overrides data.path)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--jobs", jobs, "concurrent fits")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", alpha, "1 - confidence level")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--criterion", o.criterion, "aic or bic")->check(CLI::IsMember({"aic", "bic"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    err << os.str();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  CLI::App* sub = app.get_subcommands().front();
  o.command = sub->get_name();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--jobs")) o.jobs = jobs;
  if (sub->count("--alpha")) o.alpha = alpha;

  try {
    Context ctx;
    ctx.opts = o;
    ctx.config = load_config(o.config);
    if (o.jobs) ctx.config.jobs = *o.jobs;
    if (o.alpha) ctx.config.alpha = *o.alpha;
    if (!o.criterion.empty()) ctx.config.criterion = parse_criterion(o.criterion);
    Outputs out;
    int code = kExitOk;
    if (o.command == "fit") code = cmd_fit(ctx, out);
    else if (o.command == "select") code = cmd_select(ctx, out);
    else if (o.command == "simulate") code = cmd_simulate(ctx, out);
    else if (o.command == "bootstrap") code = cmd_bootstrap(ctx, out);
    else code = cmd_cv(ctx, out);
    out.commit(o.out);
    for (const auto& w : ctx.warnings) err << "warning: " << w << "\n";
    if (code == kExitNotConverged) err << "warning: not every fit converged; see " << o.out << "/report.txt\n";
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace mlm::cli

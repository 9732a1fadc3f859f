#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/error.hpp"
#include "mlm/fit.hpp"
#include "mlm/parallel.hpp"
#include "mlm/prob.hpp"
#include "mlm/rng.hpp"

namespace mlm {

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits one line on commas; double-quoted fields may contain commas.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t a = 0; a < line.size(); ++a) {
    const char c = line[a];
    if (quoted) {
      if (c == '"' && a + 1 < line.size() && line[a + 1] == '"') {
        cur += '"';
        ++a;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw InputError("unterminated quote in CSV line");
  out.emplace_back(trim(cur));
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != t.header.size())
      throw InputError("CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw InputError("CSV input is empty");
  if (t.rows.empty()) throw InputError("CSV input has a header but no data rows");
  return t;
}

inline double to_double(std::string_view s, int lineno, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw InputError("CSV line " + std::to_string(lineno) + ": column '" + std::string(column) +
                     "' is not a finite number: '" + std::string(s) + "'");
  return v;
}

inline std::int64_t to_count(std::string_view s, int lineno, std::string_view column) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw InputError("CSV line " + std::to_string(lineno) + ": column '" + std::string(column) +
                     "' is not a non-negative integer: '" + std::string(s) + "'");
  return v;
}

inline std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

}  // namespace csv

/// Reads summarized data: columns x_<name> and y_1..y_J. When `covariates` is
/// non-empty only those x columns are used, in that order. Rows repeating a
/// setting are summed and reported through `warnings`.
inline Dataset read_summarized(std::istream& in, const std::vector<std::string>& covariates = {},
                               const std::vector<std::string>& categories = {},
                               std::vector<std::string>* warnings = nullptr) {
  const csv::Table t = csv::read(in);
  std::vector<std::string> xnames;
  std::vector<int> xcols;
  std::vector<int> ycols;
  for (size_t c = 0; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h.rfind("x_", 0) == 0 && h.size() > 2) {
      xnames.push_back(h.substr(2));
      xcols.push_back(static_cast<int>(c));
    } else if (h.rfind("y_", 0) == 0 && h.size() > 2) {
      ycols.push_back(static_cast<int>(c));
    } else {
      throw InputError("summarized CSV: unexpected column '" + h + "'");
    }
  }
  const int J = static_cast<int>(ycols.size());
  for (int j = 0; j < J; ++j) {
    if (t.header[static_cast<size_t>(ycols[static_cast<size_t>(j)])] != "y_" + std::to_string(j + 1))
      throw InputError("summarized CSV: count columns must be y_1..y_J in order");
  }
  if (J < 2) throw InputError("summarized CSV needs at least two count columns");
  if (!covariates.empty()) {
    std::vector<int> sel;
    for (const std::string& name : covariates) {
      const auto it = std::find(xnames.begin(), xnames.end(), name);
      if (it == xnames.end()) throw InputError("summarized CSV: no column 'x_" + name + "'");
      sel.push_back(xcols[static_cast<size_t>(it - xnames.begin())]);
    }
    xcols = sel;
    xnames = covariates;
  }
  std::vector<std::string> labels = categories;
  if (labels.empty()) labels = Dataset::default_labels(J);
  if (static_cast<int>(labels.size()) != J)
    throw InputError("summarized CSV has " + std::to_string(J) + " count columns but " +
                     std::to_string(labels.size()) + " category labels were declared");

  std::vector<Vec> rows;
  Counts counts(static_cast<Eigen::Index>(t.rows.size()), J);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const int ln = t.line_numbers[r];
    Vec x(static_cast<Eigen::Index>(xcols.size()));
    for (size_t c = 0; c < xcols.size(); ++c)
      x(static_cast<Eigen::Index>(c)) =
          csv::to_double(f[static_cast<size_t>(xcols[c])], ln, t.header[static_cast<size_t>(xcols[c])]);
    for (int j = 0; j < J; ++j)
      counts(static_cast<Eigen::Index>(r), j) = csv::to_count(
          f[static_cast<size_t>(ycols[static_cast<size_t>(j)])], ln,
          t.header[static_cast<size_t>(ycols[static_cast<size_t>(j)])]);
    rows.push_back(std::move(x));
  }
  int folded = 0;
  Dataset d = Dataset::aggregate(xnames, labels, rows, counts, &folded);
  if (folded > 0 && warnings)
    warnings->push_back(std::to_string(folded) + " duplicate setting row(s) merged by summing counts");
  return d;
}

/// Reads one observation per row: covariate columns plus a category column
/// whose labels must appear in `categories` (which fixes J and the order).
inline Dataset read_raw(std::istream& in, const std::vector<std::string>& categories,
                        const std::vector<std::string>& covariates = {},
                        const std::string& category_column = "category") {
  if (categories.size() < 2) throw InputError("raw CSV: declare at least two category labels");
  const csv::Table t = csv::read(in);
  int ccol = -1;
  std::vector<std::string> xnames;
  std::vector<int> xcols;
  for (size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == category_column) {
      ccol = static_cast<int>(c);
    } else if (covariates.empty()) {
      xnames.push_back(t.header[c]);
      xcols.push_back(static_cast<int>(c));
    }
  }
  if (ccol < 0) throw InputError("raw CSV: no column '" + category_column + "'");
  if (!covariates.empty()) {
    for (const std::string& name : covariates) {
      const auto it = std::find(t.header.begin(), t.header.end(), name);
      if (it == t.header.end()) throw InputError("raw CSV: no column '" + name + "'");
      xcols.push_back(static_cast<int>(it - t.header.begin()));
    }
    xnames = covariates;
  }
  const int J = static_cast<int>(categories.size());
  std::vector<Vec> rows;
  Counts counts = Counts::Zero(static_cast<Eigen::Index>(t.rows.size()), J);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const int ln = t.line_numbers[r];
    Vec x(static_cast<Eigen::Index>(xcols.size()));
    for (size_t c = 0; c < xcols.size(); ++c)
      x(static_cast<Eigen::Index>(c)) =
          csv::to_double(f[static_cast<size_t>(xcols[c])], ln, t.header[static_cast<size_t>(xcols[c])]);
    const std::string& label = f[static_cast<size_t>(ccol)];
    const auto it = std::find(categories.begin(), categories.end(), label);
    if (it == categories.end())
      throw InputError("raw CSV line " + std::to_string(ln) + ": unknown category label '" + label +
                       "'");
    counts(static_cast<Eigen::Index>(r), it - categories.begin()) = 1;
    rows.push_back(std::move(x));
  }
  return Dataset::aggregate(xnames, categories, rows, counts);
}

inline Dataset read_summarized_file(const std::string& path,
                                    const std::vector<std::string>& covariates = {},
                                    const std::vector<std::string>& categories = {},
                                    std::vector<std::string>* warnings = nullptr) {
  auto in = csv::open(path);
  return read_summarized(in, covariates, categories, warnings);
}

inline Dataset read_raw_file(const std::string& path, const std::vector<std::string>& categories,
                             const std::vector<std::string>& covariates = {},
                             const std::string& category_column = "category") {
  auto in = csv::open(path);
  return read_raw(in, categories, covariates, category_column);
}

/// Writes the summarized format read by read_summarized.
inline void write_summarized(std::ostream& out, const Dataset& d) {
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (const auto& name : d.covariates()) {
    sep();
    out << "x_" << name;
  }
  for (int j = 1; j <= d.J(); ++j) {
    sep();
    out << "y_" << j;
  }
  out << '\n';
  for (int i = 0; i < d.m(); ++i) {
    first = true;
    for (int c = 0; c < d.d(); ++c) {
      sep();
      out << csv::format(d.setting(i)(c));
    }
    for (int j = 0; j < d.J(); ++j) {
      sep();
      out << d.count(i, j);
    }
    out << '\n';
  }
}

inline std::string to_summarized_csv(const Dataset& d) {
  std::ostringstream os;
  write_summarized(os, d);
  return os.str();
}

/// Draws Multinomial(n, pi) by inverting the cdf once per observation.
inline Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> draw_multinomial(const Vec& pi, std::int64_t n,
                                                                      SplitMix64& rng) {
  const Eigen::Index J = pi.size();
  Vec cum(J);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < J; ++j) {
    acc += pi(j);
    cum(j) = acc;
  }
  Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> y = Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>::Zero(J);
  for (std::int64_t r = 0; r < n; ++r) {
    const double u = rng.uniform() * acc;
    Eigen::Index j = 0;
    while (j < J - 1 && u >= cum(j)) ++j;
    ++y(j);
  }
  return y;
}

/// Multinomial responses at the given settings under the model at theta.
/// Setting i uses the stream derive_seed(seed, i).
inline Dataset simulate(const ModelSpec& spec, const DesignSpec& design, const Vec& theta,
                        const std::vector<Vec>& settings, const std::vector<std::int64_t>& n,
                        std::uint64_t seed, std::vector<std::string> categories = {}) {
  if (settings.size() != n.size()) throw InvalidArgument("simulate: one n_i per setting required");
  if (theta.size() != design.p()) throw InvalidArgument("simulate: theta has the wrong length");
  for (std::int64_t ni : n) {
    if (ni < 1) throw InvalidArgument("simulate: every n_i must be positive");
  }
  const std::vector<Mat> Xs = model_matrices(design, settings);
  const Mat pi = fitted_probabilities(spec, Xs, theta);
  Counts counts(static_cast<Eigen::Index>(settings.size()), spec.J());
  for (size_t i = 0; i < settings.size(); ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    counts.row(static_cast<Eigen::Index>(i)) =
        draw_multinomial(pi.row(static_cast<Eigen::Index>(i)).transpose(), n[i], rng);
  }
  if (categories.empty()) categories = Dataset::default_labels(spec.J());
  return Dataset(design.covariates(), std::move(categories), settings, std::move(counts));
}

/// Observation-level resample with replacement of the same total size.
inline Dataset resample(const Dataset& data, SplitMix64& rng) {
  std::vector<std::pair<int, int>> obs;
  obs.reserve(static_cast<size_t>(data.total()));
  for (int i = 0; i < data.m(); ++i) {
    for (int j = 0; j < data.J(); ++j) {
      for (std::int64_t r = 0; r < data.count(i, j); ++r) obs.emplace_back(i, j);
    }
  }
  Counts counts = Counts::Zero(data.m(), data.J());
  const auto total = static_cast<std::uint64_t>(obs.size());
  for (std::uint64_t r = 0; r < total; ++r) {
    const auto& o = obs[static_cast<size_t>(rng.below(total))];
    ++counts(o.first, o.second);
  }
  return data.with_counts(counts);
}

struct BootstrapReplicate {
  int index = 0;
  bool converged = false;
  bool feasible = false;
  double min_fitted = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  int m = 0;
  std::string error;
};

struct BootstrapReport {
  int B = 0;
  std::vector<BootstrapReplicate> replicates;
  int n_converged = 0;
  int n_feasible = 0;
  int n_nonpositive = 0;  // some fitted probability <= 0
  int n_failed = 0;       // fit threw
};

/// Refits the model on B observation-level bootstrap resamples and audits each
/// fit. Replicate b uses the stream derive_seed(seed, b).
inline BootstrapReport bootstrap_study(const Dataset& data, const ModelSpec& spec,
                                       const DesignSpec& design, int B, std::uint64_t seed,
                                       const FitOptions& opt = {}, int jobs = 1) {
  if (B < 1) throw InvalidArgument("bootstrap: B must be at least 1");
  BootstrapReport rep;
  rep.B = B;
  rep.replicates.resize(static_cast<size_t>(B));
  parallel_for(B, jobs, [&](int b) {
    BootstrapReplicate& r = rep.replicates[static_cast<size_t>(b)];
    r.index = b;
    try {
      SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
      const Dataset boot = resample(data, rng);
      r.m = boot.m();
      const LikelihoodProblem prob({spec, design}, boot);
      const FitResult fit = fisher_scoring(prob, opt);
      r.converged = fit.converged;
      r.loglik = fit.loglik;
      r.iterations = fit.iterations;
      r.min_fitted = fit.min_fitted();
      r.feasible = prob.feasible(fit.theta) && r.min_fitted > 0.0;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  for (const auto& r : rep.replicates) {
    if (!r.error.empty()) {
      ++rep.n_failed;
      continue;
    }
    if (r.converged) ++rep.n_converged;
    if (r.feasible) ++rep.n_feasible;
    if (!(r.min_fitted > 0.0)) ++rep.n_nonpositive;
  }
  return rep;
}

}  // namespace mlm

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mlm/error.hpp"
#include "mlm/structure.hpp"

namespace mlm {

using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Summarized data: m distinct covariate settings with a count vector each.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<std::string> covariates, std::vector<std::string> categories,
          std::vector<Vec> settings, Counts counts)
      : covariates_(std::move(covariates)),
        categories_(std::move(categories)),
        settings_(std::move(settings)),
        counts_(std::move(counts)) {
    validate();
  }

  /// Convenience constructor with default category labels "1".."J".
  Dataset(std::vector<std::string> covariates, std::vector<Vec> settings, Counts counts)
      : Dataset(std::move(covariates), default_labels(static_cast<int>(counts.cols())),
                std::move(settings), Counts(counts)) {}

  static std::vector<std::string> default_labels(int J) {
    std::vector<std::string> out;
    for (int j = 1; j <= J; ++j) out.push_back(std::to_string(j));
    return out;
  }

  int m() const { return static_cast<int>(settings_.size()); }
  int J() const { return static_cast<int>(counts_.cols()); }
  int d() const { return static_cast<int>(covariates_.size()); }
  const std::vector<std::string>& covariates() const { return covariates_; }
  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<Vec>& settings() const { return settings_; }
  const Vec& setting(int i) const { return settings_[static_cast<size_t>(i)]; }
  const Counts& counts() const { return counts_; }
  std::int64_t count(int i, int j) const { return counts_(i, j); }
  std::int64_t n(int i) const { return counts_.row(i).sum(); }
  std::int64_t total() const { return counts_.sum(); }

  /// Counts as doubles, row i = y_i.
  Mat counts_real() const { return counts_.cast<double>(); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (a.covariates_ != b.covariates_ || a.categories_ != b.categories_) return false;
    if (a.settings_.size() != b.settings_.size()) return false;
    for (size_t i = 0; i < a.settings_.size(); ++i) {
      if (a.settings_[i] != b.settings_[i]) return false;
    }
    return a.counts_ == b.counts_;
  }

  /// Groups rows with identical settings, summing their counts. Order of first
  /// appearance is kept. `merged` receives the number of rows folded in.
  static Dataset aggregate(std::vector<std::string> covariates, std::vector<std::string> categories,
                           const std::vector<Vec>& rows, const Counts& counts, int* merged = nullptr) {
    std::map<std::vector<double>, int> index;
    std::vector<Vec> settings;
    std::vector<Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>> acc;
    int folded = 0;
    for (size_t r = 0; r < rows.size(); ++r) {
      std::vector<double> key(rows[r].data(), rows[r].data() + rows[r].size());
      auto [it, inserted] = index.emplace(key, static_cast<int>(settings.size()));
      if (inserted) {
        settings.push_back(rows[r]);
        acc.push_back(counts.row(static_cast<Eigen::Index>(r)));
      } else {
        acc[static_cast<size_t>(it->second)] += counts.row(static_cast<Eigen::Index>(r));
        ++folded;
      }
    }
    Counts out(static_cast<Eigen::Index>(settings.size()), counts.cols());
    for (size_t i = 0; i < acc.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = acc[i];
    if (merged) *merged = folded;
    return Dataset(std::move(covariates), std::move(categories), std::move(settings), std::move(out));
  }

  /// Subset of settings (rows with n_i = 0 are dropped).
  Dataset with_counts(const Counts& counts) const {
    std::vector<Vec> settings;
    std::vector<Eigen::Index> keep;
    for (int i = 0; i < m(); ++i) {
      if (counts.row(i).sum() > 0) {
        settings.push_back(settings_[static_cast<size_t>(i)]);
        keep.push_back(i);
      }
    }
    Counts out(static_cast<Eigen::Index>(keep.size()), counts.cols());
    for (size_t a = 0; a < keep.size(); ++a) out.row(static_cast<Eigen::Index>(a)) = counts.row(keep[a]);
    return Dataset(covariates_, categories_, std::move(settings), std::move(out));
  }

 private:
  void validate() const {
    if (settings_.empty()) throw InputError("dataset has no covariate settings");
    if (counts_.rows() != static_cast<Eigen::Index>(settings_.size()))
      throw InputError("dataset: count rows do not match settings");
    if (counts_.cols() < 2) throw InputError("dataset needs at least two categories");
    if (static_cast<Eigen::Index>(categories_.size()) != counts_.cols())
      throw InputError("dataset: category labels do not match count columns");
    std::map<std::vector<double>, int> seen;
    for (size_t i = 0; i < settings_.size(); ++i) {
      const Vec& x = settings_[i];
      if (x.size() != d()) throw InputError("dataset: setting has the wrong dimension");
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        if (!std::isfinite(x(c))) throw InputError("dataset: non-finite covariate value");
      }
      std::vector<double> key(x.data(), x.data() + x.size());
      if (!seen.emplace(key, static_cast<int>(i)).second)
        throw InputError("dataset: settings " + std::to_string(seen[key] + 1) + " and " +
                         std::to_string(i + 1) + " are identical");
      const auto row = counts_.row(static_cast<Eigen::Index>(i));
      if ((row.array() < 0).any()) throw InputError("dataset: negative count");
      if (row.sum() < 1)
        throw InputError("dataset: setting " + std::to_string(i + 1) + " has no observations");
    }
  }

  std::vector<std::string> covariates_;
  std::vector<std::string> categories_;
  std::vector<Vec> settings_;
  Counts counts_;
};

}  // namespace mlm

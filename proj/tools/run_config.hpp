#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlm/mlm.hpp"

namespace mlm::cli {

using json = nlohmann::json;

struct DataConfig {
  std::string path;
  std::string format = "summarized";  // or "raw"
  std::vector<std::string> covariates;
  std::vector<std::string> categories;
  std::string category_column = "category";
};

struct ModelConfig {
  Family family = Family::cumulative;
  int J = 0;
  int k = 0;
  int s = 0;
  std::vector<std::string> links{"logit"};
};

struct ConstraintConfig {
  std::string column;
  std::vector<int> categories;  // 1-based
};

struct DesignConfig {
  std::string structure = "npo";  // po, npo, ppo, mixture
  std::optional<std::vector<bool>> intercepts;
  std::vector<std::string> common;
  std::vector<std::vector<std::string>> per_category;
  std::vector<ConstraintConfig> constraints;
};

struct SelectConfig {
  std::string mode = "mixture";  // mixture, links, two-group
  std::vector<std::string> candidate_links;
};

struct SimulateConfig {
  std::vector<double> theta;
  std::string theta_from;  // result.kv of an earlier fit
  std::vector<std::vector<double>> settings;
  std::vector<std::int64_t> n;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  DesignConfig design;
  FitOptions fit;
  SelectConfig select;
  SimulateConfig simulate;
  int bootstrap_B = 100;
  int cv_folds = 5;
  double alpha = 0.05;
  Criterion criterion = Criterion::aic;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

namespace detail {

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw InputError("config: unknown key '" + item.key() + "' in '" + where + "'");
  }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("config: '" + where + "." + key + "' has the wrong type");
  }
}

template <class T>
void maybe(const json& j, const char* key, const std::string& where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

}  // namespace detail

inline Criterion parse_criterion(const std::string& s) {
  if (s == "aic") return Criterion::aic;
  if (s == "bic") return Criterion::bic;
  throw InputError("criterion must be 'aic' or 'bic', got '" + s + "'");
}

inline RunConfig parse_config(const json& root) {
  using detail::maybe;
  RunConfig c;
  detail::only_keys(root, "config",
                    {"data", "model", "design", "fit", "select", "simulate", "bootstrap", "cv",
                     "alpha", "criterion", "seed", "jobs"});
  if (root.contains("data")) {
    const json& d = root["data"];
    detail::only_keys(d, "data", {"path", "format", "covariates", "categories", "category_column"});
    maybe(d, "path", "data", c.data.path);
    maybe(d, "format", "data", c.data.format);
    maybe(d, "covariates", "data", c.data.covariates);
    maybe(d, "categories", "data", c.data.categories);
    maybe(d, "category_column", "data", c.data.category_column);
    if (c.data.format != "summarized" && c.data.format != "raw")
      throw InputError("config: data.format must be 'summarized' or 'raw'");
  }
  if (!root.contains("model")) throw InputError("config: 'model' is required");
  {
    const json& m = root["model"];
    detail::only_keys(m, "model", {"family", "J", "k", "s", "links"});
    try {
      c.model.family = parse_family(detail::get<std::string>(m, "family", "model"));
    } catch (const InvalidArgument& e) {
      throw InputError(std::string("config: ") + e.what());
    }
    maybe(m, "J", "model", c.model.J);
    maybe(m, "k", "model", c.model.k);
    maybe(m, "s", "model", c.model.s);
    if (m.contains("links")) {
      if (m["links"].is_string()) {
        c.model.links = {m["links"].get<std::string>()};
      } else {
        c.model.links = detail::get<std::vector<std::string>>(m, "links", "model");
      }
    }
  }
  if (root.contains("design")) {
    const json& d = root["design"];
    detail::only_keys(d, "design",
                      {"structure", "intercepts", "predictors_common", "predictors_per_category",
                       "constraints"});
    maybe(d, "structure", "design", c.design.structure);
    if (d.contains("intercepts")) c.design.intercepts = detail::get<std::vector<bool>>(d, "intercepts", "design");
    maybe(d, "predictors_common", "design", c.design.common);
    maybe(d, "predictors_per_category", "design", c.design.per_category);
    if (d.contains("constraints")) {
      if (!d["constraints"].is_array()) throw InputError("config: design.constraints must be a list");
      for (const json& item : d["constraints"]) {
        detail::only_keys(item, "design.constraints[]", {"column", "categories"});
        ConstraintConfig cc;
        cc.column = detail::get<std::string>(item, "column", "design.constraints[]");
        cc.categories = detail::get<std::vector<int>>(item, "categories", "design.constraints[]");
        c.design.constraints.push_back(cc);
      }
    }
    const std::string& st = c.design.structure;
    if (st != "po" && st != "npo" && st != "ppo" && st != "mixture")
      throw InputError("config: design.structure must be po, npo, ppo or mixture");
  }
  if (root.contains("fit")) {
    const json& f = root["fit"];
    detail::only_keys(f, "fit", {"epsilon", "delta", "lambda0", "max_iter", "max_backtrack"});
    maybe(f, "epsilon", "fit", c.fit.epsilon);
    maybe(f, "delta", "fit", c.fit.delta);
    maybe(f, "lambda0", "fit", c.fit.lambda0);
    maybe(f, "max_iter", "fit", c.fit.max_iter);
    maybe(f, "max_backtrack", "fit", c.fit.max_backtrack);
    try {
      c.fit.validate();
    } catch (const InvalidArgument& e) {
      throw InputError(std::string("config: ") + e.what());
    }
  }
  if (root.contains("select")) {
    const json& s = root["select"];
    detail::only_keys(s, "select", {"mode", "candidate_links"});
    maybe(s, "mode", "select", c.select.mode);
    maybe(s, "candidate_links", "select", c.select.candidate_links);
    if (c.select.mode != "mixture" && c.select.mode != "links" && c.select.mode != "two-group")
      throw InputError("config: select.mode must be mixture, links or two-group");
  }
  if (root.contains("simulate")) {
    const json& s = root["simulate"];
    detail::only_keys(s, "simulate", {"theta", "theta_from", "settings", "n"});
    maybe(s, "theta", "simulate", c.simulate.theta);
    maybe(s, "theta_from", "simulate", c.simulate.theta_from);
    maybe(s, "settings", "simulate", c.simulate.settings);
    if (s.contains("n")) {
      if (s["n"].is_number_integer()) {
        c.simulate.n = {s["n"].get<std::int64_t>()};
      } else {
        c.simulate.n = detail::get<std::vector<std::int64_t>>(s, "n", "simulate");
      }
    }
  }
  if (root.contains("bootstrap")) {
    detail::only_keys(root["bootstrap"], "bootstrap", {"B"});
    maybe(root["bootstrap"], "B", "bootstrap", c.bootstrap_B);
    if (c.bootstrap_B < 1) throw InputError("config: bootstrap.B must be at least 1");
  }
  if (root.contains("cv")) {
    detail::only_keys(root["cv"], "cv", {"folds"});
    maybe(root["cv"], "folds", "cv", c.cv_folds);
    if (c.cv_folds < 2) throw InputError("config: cv.folds must be at least 2");
  }
  maybe(root, "alpha", "config", c.alpha);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw InputError("config: alpha must lie in (0, 1)");
  if (root.contains("criterion")) c.criterion = parse_criterion(detail::get<std::string>(root, "criterion", "config"));
  if (root.contains("seed")) c.seed = detail::get<std::uint64_t>(root, "seed", "config");
  maybe(root, "jobs", "config", c.jobs);
  if (c.jobs < 1) throw InputError("config: jobs must be at least 1");
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline ModelSpec build_model(const RunConfig& c, int J) {
  if (c.model.J != 0 && c.model.J != J)
    throw InputError("config: model.J = " + std::to_string(c.model.J) + " but the data have " +
                     std::to_string(J) + " categories");
  try {
    return ModelSpec(c.model.family, J, parse_links(c.model.links), c.model.k, c.model.s);
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

inline std::vector<Term> parse_terms(const std::vector<std::string>& names,
                                     const std::vector<std::string>& covariates) {
  std::vector<Term> out;
  for (const auto& n : names) out.push_back(Term::parse(n, covariates));
  return out;
}

inline DesignSpec build_design(const RunConfig& c, int J, const std::vector<std::string>& covariates) {
  const DesignConfig& d = c.design;
  try {
    const std::vector<bool> icpt = d.intercepts.value_or(DesignSpec::all_intercepts(J));
    const std::vector<Term> common = parse_terms(d.common, covariates);
    std::vector<std::vector<Term>> per;
    for (const auto& list : d.per_category) per.push_back(parse_terms(list, covariates));
    std::vector<Constraint> cons;
    for (const auto& cc : d.constraints) {
      Constraint k{Term::parse(cc.column, covariates), {}};
      for (int cat : cc.categories) {
        if (cat < 1 || cat > J - 1)
          throw InvalidArgument("constraint category " + std::to_string(cat) + " outside 1..J-1");
        k.categories.push_back(cat - 1);
      }
      cons.push_back(k);
    }
    if (d.structure != "mixture" && !cons.empty())
      throw InvalidArgument("constraints require design.structure = mixture");
    if (d.structure == "po") {
      if (!per.empty()) throw InvalidArgument("po designs take predictors_common only");
      return DesignSpec::from_parts(J, covariates, icpt, {}, common);
    }
    if (d.structure == "npo") {
      if (per.empty()) per.assign(static_cast<size_t>(J - 1), common);
      else if (!common.empty()) throw InvalidArgument("npo designs take one of predictors_common or predictors_per_category");
      return DesignSpec::from_parts(J, covariates, icpt, per, {});
    }
    return DesignSpec::from_parts(J, covariates, icpt, per, common, cons);
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

}  // namespace mlm::cli

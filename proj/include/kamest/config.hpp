#pragma once

#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kamest/measure_survey.hpp"
#include "kamest/model_io.hpp"
#include "kamest/torus_solver.hpp"

namespace kamest {

/// Parsed run configuration.  Files are INI-style: `key = value` lines under
/// [model] [domain] [constants] [norms] [survey] [torus] [invert] [output],
/// with `seed` at top level.  Vectors are comma separated; rows of a box or a
/// point list are separated by ';'.
struct RunConfig {
  std::string family = "forced_pendulum";
  std::map<std::string, double> params;
  std::optional<std::string> model_file;  ///< resolved path for user_spec

  DomainSpec domain = DomainSpec::make_box({{0.2, 1.2}, {0.2, 1.2}}, 1.0, 1.0, 1.5);

  double cstar = 0.0;  ///< 0: default for n
  double chat_star = kDefaultChatStar;

  NormOptions norms;
  std::optional<double> eps_override;

  std::vector<double> eps_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::size_t samples = 2000;
  double survey_t_max = ClassifyOptions{}.t_max;
  double survey_dt = ClassifyOptions{}.dt;
  double a_res = SurveyOptions{}.a_res;
  int K_res = ClassifyOptions{}.K_res;
  bool slow_recheck = false;

  std::uint64_t seed = 0;

  std::optional<RVec> omega;
  std::optional<RVec> base_point;
  TorusOptions torus;
  double verify_t_max = 1000.0;
  double verify_dt = 1e-3;

  std::optional<RVec> invert_center;
  std::optional<double> invert_radius;
  std::vector<RVec> invert_targets;

  std::string out_dir = "out";

  AnalyticModel model() const {
    if (family == "user_spec") {
      if (!model_file) throw Error("family user_spec needs [model] file");
      return model_from_tables(parse_model_tables(text::read_file(*model_file)), "user_spec", params);
    }
    return builtin(family, params);
  }

  PipelineOptions pipeline() const {
    PipelineOptions p;
    p.norms = norms;
    p.cstar = cstar;
    p.chat_star = chat_star;
    p.eps_override = eps_override;
    return p;
  }

  SurveyOptions survey_options() const {
    SurveyOptions s;
    s.eps_grid = eps_grid;
    s.samples = samples;
    s.seed = seed;
    s.classify.t_max = survey_t_max;
    s.classify.dt = survey_dt;
    s.classify.K_res = K_res;
    s.a_res = a_res;
    s.slow_recheck = slow_recheck;
    s.pipeline = pipeline();
    return s;
  }
};

namespace detail {

inline RVec to_rvec(const std::vector<double>& v) { return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline std::vector<std::vector<double>> parse_rows(std::string_view s) {
  std::vector<std::vector<double>> rows;
  s = text::trim(s);
  while (!s.empty()) {
    const auto semi = s.find(';');
    const auto row = text::trim(s.substr(0, semi));
    if (!row.empty()) rows.push_back(text::parse_number_list(row));
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return rows;
}

inline bool parse_bool(std::string_view s) {
  s = text::trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParseError("not a boolean: '" + std::string(s) + "'");
}

inline int parse_int(std::string_view s) {
  const double v = text::parse_decimal(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError("not an integer: '" + std::string(s) + "'");
  return static_cast<int>(v);
}

inline std::uint64_t parse_u64(std::string_view s) {
  s = text::trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Parse from a property tree; relative model paths resolve against base_dir.
inline RunConfig config_from_ptree(const boost::property_tree::ptree& pt, const std::filesystem::path& base_dir = ".") {
  RunConfig c;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto v = pt.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!v || text::trim(*v).empty()) return std::nullopt;
    return *v;
  };
  static const std::map<std::string, std::vector<std::string>> known = {
      {"model", {}},
      {"domain", {"box", "points", "r0", "s", "tau"}},
      {"constants", {"cstar", "chat_star"}},
      {"norms", {"mode", "grid", "budget", "eps_override"}},
      {"survey", {"eps", "samples", "t_max", "dt", "a_res", "K_res", "slow_recheck"}},
      {"torus", {"omega", "base_point", "N_F", "tol", "max_newton", "t_max", "dt"}},
      {"invert", {"center", "radius", "targets"}},
      {"output", {"dir"}},
  };
  for (const auto& [key, node] : pt) {
    if (node.empty()) {
      if (key != "seed") throw ParseError("config: unknown top-level key '" + key + "'");
      continue;
    }
    auto it = known.find(key);
    if (it == known.end()) throw ParseError("config: unknown section [" + key + "]");
    if (key == "model") continue;
    for (const auto& [sub, _] : node)
      if (std::find(it->second.begin(), it->second.end(), sub) == it->second.end())
        throw ParseError("config: unknown key '" + sub + "' in [" + key + "]");
  }

  if (auto v = get("seed")) c.seed = detail::parse_u64(*v);

  if (auto m = pt.get_child_optional("model")) {
    for (const auto& [key, node] : *m) {
      if (key == "family")
        c.family = std::string(text::trim(node.data()));
      else if (key == "file")
        c.model_file = (base_dir / std::string(text::trim(node.data()))).lexically_normal().string();
      else
        c.params[key] = text::parse_number(node.data());
    }
    if (c.model_file && !m->get_optional<std::string>("family")) c.family = "user_spec";
  }

  double r0 = c.domain.r0, s = c.domain.s, tau = c.domain.tau;
  if (auto v = get("domain.r0")) r0 = text::parse_number(*v);
  if (auto v = get("domain.s")) s = text::parse_number(*v);
  if (auto v = get("domain.tau")) tau = text::parse_number(*v);
  const auto box = get("domain.box");
  const auto points = get("domain.points");
  if (box && points) throw ParseError("config: [domain] takes either box or points");
  if (points) {
    std::vector<RVec> pts;
    for (const auto& row : detail::parse_rows(*points)) pts.push_back(detail::to_rvec(row));
    c.domain = DomainSpec::make_points(std::move(pts), r0, s, tau);
  } else if (box) {
    std::vector<Interval> iv;
    for (const auto& row : detail::parse_rows(*box)) {
      if (row.size() != 2) throw ParseError("config: each box row must read 'lo, hi'");
      iv.push_back({row[0], row[1]});
    }
    c.domain = DomainSpec::make_box(std::move(iv), r0, s, tau);
  } else {
    c.domain.r0 = r0;
    c.domain.s = s;
    c.domain.tau = tau;
  }

  if (auto v = get("constants.cstar")) c.cstar = text::parse_number(*v);
  if (auto v = get("constants.chat_star")) c.chat_star = text::parse_number(*v);

  if (auto v = get("norms.mode")) c.norms.mode = parse_norm_mode(std::string(text::trim(*v)));
  if (auto v = get("norms.grid")) c.norms.grid = detail::parse_int(*v);
  if (auto v = get("norms.budget")) c.norms.budget = text::parse_number(*v);
  if (auto v = get("norms.eps_override")) c.eps_override = text::parse_number(*v);

  if (auto v = get("survey.eps")) c.eps_grid = text::parse_number_list(*v);
  if (auto v = get("survey.samples")) c.samples = detail::parse_u64(*v);
  if (auto v = get("survey.t_max")) c.survey_t_max = text::parse_number(*v);
  if (auto v = get("survey.dt")) c.survey_dt = text::parse_number(*v);
  if (auto v = get("survey.a_res")) c.a_res = text::parse_number(*v);
  if (auto v = get("survey.K_res")) c.K_res = detail::parse_int(*v);
  if (auto v = get("survey.slow_recheck")) c.slow_recheck = detail::parse_bool(*v);

  if (auto v = get("torus.omega")) c.omega = detail::to_rvec(text::parse_number_list(*v));
  if (auto v = get("torus.base_point")) c.base_point = detail::to_rvec(text::parse_number_list(*v));
  if (auto v = get("torus.N_F")) c.torus.N_F = detail::parse_int(*v);
  if (auto v = get("torus.tol")) c.torus.tol = text::parse_number(*v);
  if (auto v = get("torus.max_newton")) c.torus.max_newton = detail::parse_int(*v);
  if (auto v = get("torus.t_max")) c.verify_t_max = text::parse_number(*v);
  if (auto v = get("torus.dt")) c.verify_dt = text::parse_number(*v);

  if (auto v = get("invert.center")) c.invert_center = detail::to_rvec(text::parse_number_list(*v));
  if (auto v = get("invert.radius")) c.invert_radius = text::parse_number(*v);
  if (auto v = get("invert.targets"))
    for (const auto& row : detail::parse_rows(*v)) c.invert_targets.push_back(detail::to_rvec(row));

  if (auto v = get("output.dir")) c.out_dir = std::string(text::trim(*v));
  return c;
}

/// Apply "section.key=value" overrides on top of the file contents.
inline boost::property_tree::ptree apply_overrides(boost::property_tree::ptree pt, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + s + "' must read section.key=value");
    const std::string key(text::trim(std::string_view(s).substr(0, eq)));
    const std::string value(text::trim(std::string_view(s).substr(eq + 1)));
    if (key.empty()) throw ParseError("override '" + s + "' has an empty key");
    pt.put(boost::property_tree::ptree::path_type(key, '.'), value);
  }
  return pt;
}

inline RunConfig parse_config(const std::string& content, const std::filesystem::path& base_dir = ".",
                              const std::vector<std::string>& sets = {}) {
  return config_from_ptree(apply_overrides(text::read_ini_text(content), sets), base_dir);
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& sets = {}) {
  return parse_config(text::read_file(path), std::filesystem::path(path).parent_path(), sets);
}

/// Range checks that the modules would otherwise report late.
inline void validate(const RunConfig& c) {
  if (c.samples == 0) throw ConstraintError("survey samples must be positive");
  if (!(c.survey_dt > 0.0) || !(c.survey_t_max > 2.0 * c.survey_dt)) throw ConstraintError("survey needs dt > 0 and t_max > 2 dt");
  if (!(c.a_res > 0.0)) throw ConstraintError("survey a_res must be positive");
  if (c.K_res < 1) throw ConstraintError("survey K_res must be at least 1");
  for (double e : c.eps_grid)
    if (!(e >= 0.0)) throw ConstraintError("survey eps values must be non-negative");
  if (!(c.verify_dt > 0.0) || !(c.verify_t_max > 0.0)) throw ConstraintError("torus verification needs dt, t_max > 0");
  if (c.norms.grid < 2) throw ConstraintError("norm grid must be at least 2");
  if (c.chat_star <= 0.0 || c.cstar < 0.0) throw ConstraintError("constants must be positive");
}

}  // namespace kamest

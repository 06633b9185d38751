// kamest: certification, covering, inversion, torus and survey front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kamest/config.hpp"
#include "kamest/report.hpp"

namespace fs = std::filesystem;
using namespace kamest;

namespace {

enum Exit : int {
  kOk = 0,
  kFail = 1,
  kNondegeneracy = 2,
  kConstraint = 3,
  kResonance = 4,
  kNoConvergence = 5,
  kUsage = 64,
  kOther = 70,
};

struct Cli {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<std::string> eps;
  std::optional<std::size_t> samples;
  std::vector<std::string> sets;
};

RunConfig build_config(const Cli& cli, bool survey_cmd) {
  std::vector<std::string> sets = cli.sets;
  if (cli.seed) sets.push_back("seed=" + std::to_string(*cli.seed));
  if (cli.mode) sets.push_back("norms.mode=" + *cli.mode);
  if (cli.out) sets.push_back("output.dir=" + *cli.out);
  if (cli.samples) sets.push_back("survey.samples=" + std::to_string(*cli.samples));
  if (cli.eps) {
    if (survey_cmd)
      sets.push_back("survey.eps=" + *cli.eps);
    else if (text::parse_number_list(*cli.eps).size() == 1)
      sets.push_back("model.eps=" + *cli.eps);
    else
      throw ParseError("--eps takes a single value outside the survey command");
  }
  RunConfig c = cli.config_path.empty() ? parse_config("", ".", sets) : load_config(cli.config_path, sets);
  validate(c);
  return c;
}

fs::path output_dir(const RunConfig& c) {
  fs::path d(c.out_dir);
  fs::create_directories(d);
  return d;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

int cmd_certify(const RunConfig& c) {
  const AnalyticModel model = c.model();
  const PipelineResult r = certify_model(model, c.domain, c.pipeline());
  const json j = certificate_json(r, c.domain);
  write_json(output_dir(c) / "certificate.json", j);
  std::cout << "pass " << (r.cert.pass ? "true" : "false") << "  eps_hat " << r.cert.bundle.eps_hat << "  threshold "
            << r.cert.threshold << "  alpha " << r.cert.alpha << '\n';
  if (!r.cert.pass) std::cout << "dominant failure factor: " << r.cert.dominant_failure << '\n';
  return r.cert.pass ? kOk : kFail;
}

int cmd_cover(const RunConfig& c) {
  const AnalyticModel model = c.model();
  const PipelineResult r = certify_model(model, c.domain, c.pipeline());
  const Covering cov = cover_for_certificate(c.domain, r.cert);
  write_json(output_dir(c) / "covering.json", covering_json(cov, c.domain));
  std::cout << "r_hat " << cov.radius << "  N " << cov.N() << "  bound " << cov.cardinality_bound() << '\n';
  return kOk;
}

int cmd_invert(const RunConfig& c) {
  const AnalyticModel model = c.model();
  const int n = model.n();
  const RVec center = c.invert_center.value_or(0.5 * (c.domain.lower() + c.domain.upper()));
  double radius = 0.0;
  if (c.invert_radius) {
    radius = *c.invert_radius;
  } else {
    const double M = hess_norm(model, c.domain, c.norms);
    const double mu = torsion_parameter(det_inf(model, c.domain, c.norms), M, n);
    radius = local_radii(n, mu, M, c.domain.r0).r_star;
  }
  const InverseBranch br = make_branch(model, center, radius);
  json j;
  j["tool_version"] = kToolVersion;
  j["center"] = detail::vec_json(center);
  j["radius"] = br.r;
  j["delta"] = br.delta;
  j["delta_caveat"] = "sampled supremum over the complex ball";
  j["T_norm"] = br.T_norm;
  j["rho"] = br.rho;
  j["L_local"] = br.L_local;
  json results = json::array();
  int code = kOk;
  for (const RVec& w : c.invert_targets) {
    json x;
    x["omega"] = detail::vec_json(w);
    try {
      const InversionResult inv = invert(model, br, w);
      x["p"] = detail::vec_json(inv.p.real());
      x["iterations"] = inv.iterations;
      x["residual"] = inv.residual;
    } catch (const Error& e) {
      x["error"] = e.what();
      code = kFail;
    }
    results.push_back(x);
  }
  j["targets"] = results;
  write_json(output_dir(c) / "inversion.json", j);
  std::cout << "rho " << br.rho << "  delta " << br.delta << "  targets " << c.invert_targets.size() << '\n';
  return code;
}

int cmd_torus(const RunConfig& c) {
  const AnalyticModel model = c.model();
  RVec omega, guess;
  if (c.omega) {
    omega = *c.omega;
    guess = c.base_point.value_or(omega);
  } else if (c.base_point) {
    guess = *c.base_point;
    omega = model.frequency(guess.data()).real();
  } else {
    throw ParseError("torus needs [torus] omega or base_point");
  }
  const TorusEmbedding T = construct_torus(model, omega, guess, c.torus);
  const ConjugacyReport rep = verify_conjugacy(model, T, c.verify_t_max, c.verify_dt);
  const fs::path dir = output_dir(c);
  save_torus(T, (dir / "torus.txt").string());
  json j = torus_json(T, rep);
  try {
    const PipelineResult r = certify_model(model, c.domain, c.pipeline());
    j["certificate_pass"] = r.cert.pass;
    if (r.cert.pass)
      j["geometry"] = geometry_json(check_paper_geometry(T, r.cert));
    else
      j["geometry"] = "n/a (certificate does not pass)";
  } catch (const Error& e) {
    j["geometry"] = std::string("n/a (") + e.what() + ")";
  }
  write_json(dir / "torus.json", j);
  std::cout << "residual " << T.residual << "  newton_steps " << T.newton_steps << "  conjugacy " << rep.max_deviation
            << "  frequency_error " << rep.frequency_error << '\n';
  return kOk;
}

int cmd_survey(const RunConfig& c) {
  const SurveyOptions opt = c.survey_options();
  SurveyResult s;
  if (c.family == "user_spec") {
    const ModelTables tables = parse_model_tables(text::read_file(c.model_file.value()));
    s = survey(c.family, c.params, c.domain, opt, &tables);
  } else {
    s = survey(c.family, c.params, c.domain, opt);
  }
  const auto cmp = compare_with_certificate(s);
  const fs::path dir = output_dir(c);
  {
    std::ofstream out(dir / "survey.csv");
    write_survey_csv(s, out);
  }
  {
    std::ofstream out(dir / "survey_plot.csv");
    write_plot_csv(s, out);
  }
  write_json(dir / "survey.json", survey_json(s, cmp));
  write_survey_csv(s, std::cout);
  if (s.fit)
    std::cout << "fit slope " << s.fit->slope << "  ci95 [" << s.fit->slope_ci_lo << ", " << s.fit->slope_ci_hi
              << "]  R2 " << s.fit->r2 << '\n';
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& r : cmp)
    if (r.violation) std::cerr << "falsification: measured measure exceeds the certified bound at eps " << r.eps << '\n';
  return kOk;
}

int cmd_constants(const RunConfig& c) {
  const AnalyticModel model = c.model();
  const int n = model.n();
  const double cstar = c.cstar > 0.0 ? c.cstar : default_cstar(n);
  const StructuralConstants sc = structural(n, c.domain.tau, cstar, c.chat_star);
  json j;
  j["tool_version"] = kToolVersion;
  j["constants"] = constants_json(sc);
  write_json(output_dir(c) / "constants.json", j);
  std::cout << j["constants"].dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAM certificate and survey tool"};
  app.set_version_flag("--version", kToolVersion);
  Cli cli;
  app.add_option("--config", cli.config_path, "Config file (INI sections)")->check(CLI::ExistingFile);
  app.add_option("--seed", cli.seed, "Survey seed");
  app.add_option("--mode", cli.mode, "Norm mode")->check(CLI::IsMember({"rigorous", "sampled"}));
  app.add_option("--out", cli.out, "Output directory");
  app.add_option("--eps", cli.eps, "Comma-separated eps grid (survey) or eps value");
  app.add_option("--samples", cli.samples, "Samples per eps");
  app.add_option("--set", cli.sets, "Override section.key=value");
  app.require_subcommand(1, 1);
  app.fallthrough();

  const std::map<std::string, int (*)(const RunConfig&)> commands = {
      {"certify", cmd_certify}, {"cover", cmd_cover},   {"invert", cmd_invert},
      {"torus", cmd_torus},     {"survey", cmd_survey}, {"constants", cmd_constants},
  };
  std::map<std::string, CLI::App*> subs;
  subs["certify"] = app.add_subcommand("certify", "Norms, local inverses and the smallness condition");
  subs["cover"] = app.add_subcommand("cover", "Covering of D by r_hat balls");
  subs["invert"] = app.add_subcommand("invert", "Local inverse of the frequency map");
  subs["torus"] = app.add_subcommand("torus", "Construct and verify one invariant torus");
  subs["survey"] = app.add_subcommand("survey", "Monte Carlo non-torus measure survey");
  subs["constants"] = app.add_subcommand("constants", "Structural constants table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  std::string name;
  for (const auto& [k, sub] : subs)
    if (sub->parsed()) name = k;
  try {
    const RunConfig cfg = build_config(cli, name == "survey");
    return commands.at(name)(cfg);
  } catch (const NondegeneracyError& e) {
    std::cerr << "nondegeneracy failure: " << e.what() << '\n';
    return kNondegeneracy;
  } catch (const ConstraintError& e) {
    std::cerr << "constraint violated: " << e.what() << '\n';
    return kConstraint;
  } catch (const ResonanceError& e) {
    std::cerr << "resonance: " << e.what() << '\n';
    return kResonance;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

// Command-line front end: forward simulation of interferograms and voltage
// scans, curve fitting, the two-run stray-field inversion, and the
// decision-logic report.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 degenerate inversion.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hfringe/config.hpp"
#include "hfringe/hfringe.hpp"
#include "hfringe/io.hpp"

namespace fs = std::filesystem;
using hfringe::io::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_degenerate = 4;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json beam_meta(const hfringe::ScenarioConfig& cfg) {
  return {{"v_a", cfg.beam.v_a},
          {"nu0", cfg.beam.nu0},
          {"tau", cfg.beam.tau},
          {"k0", cfg.constants.k0},
          {"beta", cfg.constants.beta},
          {"range_m", cfg.constants.range}};
}

json geometry_meta(const hfringe::ScenarioConfig& cfg) {
  return {{"xi0", cfg.geometry.xi0},
          {"x_star", cfg.geometry.x_star},
          {"d0", cfg.geometry.d0}};
}

json noise_meta(const hfringe::NoiseSpec& noise) {
  if (noise.kind == hfringe::NoiseSpec::Kind::Poisson)
    return {{"type", "poisson"}, {"seed", noise.seed}, {"exposure", noise.exposure}};
  return {{"type", "none"}};
}

json field_meta(const hfringe::FieldGeometry& field) {
  json j;
  if (std::holds_alternative<hfringe::UniformGap>(field.gap)) {
    j["gap"] = "uniform";
  } else {
    const auto& t = std::get<hfringe::TabulatedGap>(field.gap);
    j["gap"] = "tabulated";
    json pts = json::array();
    for (std::size_t i = 0; i < t.x.size(); ++i) pts.push_back({t.x[i], t.lambda[i]});
    j["lambda"] = pts;
  }
  j["u0"] = field.u0_scale;
  return j;
}

hfringe::FieldGeometry field_from_meta(const json& j) {
  const std::string gap = j.value("gap", "uniform");
  const double u0 = j.value("u0", 1.0);
  if (gap == "uniform") return hfringe::FieldGeometry::uniform(u0);
  std::vector<double> x, lam;
  for (const auto& pt : j.at("lambda")) {
    x.push_back(pt[0].get<double>());
    lam.push_back(pt[1].get<double>());
  }
  return hfringe::FieldGeometry::tabulated(std::move(x), std::move(lam), u0);
}

void write_run_record(const fs::path& out_dir, const std::string& command,
                      const std::vector<std::string>& outputs, const json& config_echo) {
  json record{{"command", command},
              {"toolkit_version", hfringe::version_string},
              {"timestamp", iso_timestamp()},
              {"outputs", outputs},
              {"config", config_echo}};
  hfringe::io::write_json_atomic(out_dir / "run_record.json", record);
}

json config_echo(const hfringe::ScenarioConfig& cfg) {
  json j{{"beam", beam_meta(cfg)},
         {"units", "dimensionless"},
         {"geometry", geometry_meta(cfg)},
         {"profiles",
          {{"p1", hfringe::profile_to_json(cfg.p1)}, {"p2", hfringe::profile_to_json(cfg.p2)}}},
         {"amplitudes",
          {{"s0", {cfg.s0.real(), cfg.s0.imag()}}, {"p0", {cfg.p0.real(), cfg.p0.imag()}}}},
         {"scale",
          {{"k_factor", cfg.k_factor}, {"background", cfg.background}, {"exposure", cfg.exposure}}},
         {"noise", noise_meta(cfg.noise)}};
  if (cfg.field) j["field"] = field_meta(*cfg.field);
  if (cfg.scan)
    j["scan"] = {{"d", cfg.scan->d}, {"u_i", cfg.scan->u_i}, {"points", cfg.scan->u_e.size()}};
  if (cfg.fcf) j["fcf"] = {{"u_i", cfg.fcf->u_i}};
  return j;
}

struct SimulateArgs {
  std::string config_path;
  std::string mode = "interferogram";
  std::string out_dir = ".";
  std::string name;
  std::optional<std::uint64_t> seed;
  bool emit_plot_data = false;
};

int cmd_simulate(const SimulateArgs& args) {
  hfringe::ScenarioConfig cfg = hfringe::load_scenario(args.config_path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  if (args.seed) {
    if (cfg.noise.kind == hfringe::NoiseSpec::Kind::Poisson)
      cfg.noise.seed = *args.seed;
    else
      std::cerr << "warning: --seed ignored (config has no poisson noise)\n";
  }

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  const hfringe::QuadratureOptions quad{1e-12, 0.0, 40000, std::numbers::pi};
  std::vector<std::string> outputs;

  json meta{{"kind", args.mode},
            {"beam", beam_meta(cfg)},
            {"units", "dimensionless"},
            {"geometry", geometry_meta(cfg)},
            {"scale",
             {{"k_factor", cfg.k_factor},
              {"background", cfg.background},
              {"exposure", cfg.exposure}}},
            {"noise", noise_meta(cfg.noise)},
            {"profiles",
             {{"p1", hfringe::profile_to_json(cfg.p1)}, {"p2", hfringe::profile_to_json(cfg.p2)}}},
            {"toolkit_version", hfringe::version_string}};

  std::string base = args.name;
  const bool noisy = cfg.noise.kind == hfringe::NoiseSpec::Kind::Poisson;

  if (args.mode == "interferogram") {
    if (cfg.geometry.ell.empty())
      throw hfringe::ValidationError("interferogram mode needs an 'ell' grid");
    if (base.empty()) base = "interferogram";
    hfringe::Interferogram expected = hfringe::simulate_interferogram(
        cfg.p1, cfg.p2, cfg.geometry, cfg.s0, cfg.p0, cfg.constants.beta, cfg.k_factor,
        cfg.background, quad);
    hfringe::Interferogram out = hfringe::synthesize(expected, cfg.noise);
    const fs::path csv = out_dir / (base + ".csv");
    hfringe::io::write_xy_csv(csv, "ell", "counts", out.ell, out.counts);
    outputs.push_back(csv.string());
    if (args.emit_plot_data) {
      std::vector<double> dense_ell, dense_counts;
      const double lo = cfg.geometry.ell.front(), hi = cfg.geometry.ell.back();
      for (int i = 0; i < 512; ++i) {
        const double l = lo + (hi - lo) * i / 511.0;
        dense_ell.push_back(l);
        const double c = hfringe::exact_intensity(cfg.p1, cfg.p2, cfg.geometry,
                                                  cfg.geometry.d0 + l, cfg.s0, cfg.p0,
                                                  cfg.constants.beta, cfg.k_factor,
                                                  cfg.background, quad);
        dense_counts.push_back(noisy ? cfg.exposure * c : c);
      }
      const fs::path curve = out_dir / (base + "_curve.csv");
      hfringe::io::write_xy_csv(curve, "ell", "expected", dense_ell, dense_counts);
      outputs.push_back(curve.string());
    }
  } else if (args.mode == "voltage-scan") {
    if (!cfg.scan) throw hfringe::ValidationError("voltage-scan mode needs a 'scan' section");
    if (!cfg.field) throw hfringe::ValidationError("voltage-scan mode needs a 'field' section");
    if (base.empty()) base = "voltage_scan";
    hfringe::VoltageScan expected = hfringe::simulate_voltage_scan(
        cfg.p1, cfg.p2, *cfg.field, cfg.geometry, cfg.scan->d, cfg.scan->u_e, cfg.scan->u_i,
        cfg.s0, cfg.p0, cfg.constants.beta, cfg.k_factor, cfg.background, quad);
    hfringe::VoltageScan out = hfringe::synthesize(expected, cfg.noise);
    const fs::path csv = out_dir / (base + ".csv");
    hfringe::io::write_xy_csv(csv, "u_e", "counts", out.u_e, out.counts);
    outputs.push_back(csv.string());
    meta["scan"] = {{"d", cfg.scan->d}, {"u_i", cfg.scan->u_i}};
    meta["field"] = field_meta(*cfg.field);
  } else if (args.mode == "fcf-distorted") {
    if (!cfg.fcf) throw hfringe::ValidationError("fcf-distorted mode needs an 'fcf' section");
    if (!cfg.field) throw hfringe::ValidationError("fcf-distorted mode needs a 'field' section");
    if (cfg.geometry.ell.empty())
      throw hfringe::ValidationError("fcf-distorted mode needs an 'ell' grid");
    if (base.empty()) base = "fcf_distorted";
    std::vector<double> d_grid;
    for (double l : cfg.geometry.ell) {
      const double d = cfg.geometry.d0 + l;
      if (!(d > 0.0))
        throw hfringe::ValidationError("fcf-distorted: all separations d0 + ell must be positive");
      d_grid.push_back(d);
    }
    const auto integrals = hfringe::compute_integrals(cfg.p1, cfg.p2, cfg.geometry, d_grid.front(),
                                                      cfg.s0, cfg.p0, cfg.constants.beta, quad);
    const auto fcf_model = hfringe::make_fcf_model(*cfg.field, cfg.geometry, cfg.fcf->u_i,
                                                   cfg.constants.beta, quad);
    hfringe::Interferogram gram = hfringe::fcf_distorted_interferogram(
        integrals.z10, integrals.z20, fcf_model, cfg.geometry, d_grid, cfg.constants.beta,
        cfg.k_factor);
    for (double& c : gram.counts) c += cfg.background;
    gram.ell = cfg.geometry.ell;  // write the variable part, like the other modes
    hfringe::Interferogram out = hfringe::synthesize(gram, cfg.noise);
    const fs::path csv = out_dir / (base + ".csv");
    hfringe::io::write_xy_csv(csv, "ell", "counts", out.ell, out.counts);
    outputs.push_back(csv.string());
    meta["fcf"] = {{"u_i", cfg.fcf->u_i},
                   {"z10", {integrals.z10.real(), integrals.z10.imag()}},
                   {"z20", {integrals.z20.real(), integrals.z20.imag()}}};
    meta["field"] = field_meta(*cfg.field);
  } else {
    throw hfringe::ValidationError("unknown simulate mode '" + args.mode + "'");
  }

  const fs::path meta_path = out_dir / (base + ".meta.json");
  hfringe::io::write_json_atomic(meta_path, meta);
  outputs.push_back(meta_path.string());
  write_run_record(out_dir, "simulate --mode " + args.mode, outputs, config_echo(cfg));
  std::cout << "wrote " << outputs.front() << " (" << args.mode << ")\n";
  return exit_ok;
}

struct FitArgs {
  std::string data_path;
  std::string model = "standard";
  std::string meta_path;
  std::string out_dir = ".";
  std::string weights = "poisson";
  std::optional<double> beta;
  std::optional<double> d0;
  std::optional<double> range;
  bool emit_plot_data = false;
};

json convergence_json(const hfringe::ConvergenceReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"gradient_norm", r.gradient_norm},
          {"condition_number", r.condition_number},
          {"message", r.message},
          {"warnings", r.warnings}};
}

int cmd_fit(const FitArgs& args) {
  const hfringe::io::XyData data = hfringe::io::read_xy_csv(args.data_path);

  json meta;
  fs::path meta_path = args.meta_path.empty()
                           ? fs::path(args.data_path).replace_extension(".meta.json")
                           : fs::path(args.meta_path);
  if (fs::exists(meta_path)) meta = hfringe::io::load_json(meta_path);

  double beta = 0.0;
  if (args.beta)
    beta = *args.beta;
  else if (meta.contains("beam") && meta["beam"].contains("beta"))
    beta = meta["beam"]["beta"].get<double>();
  else if (args.model != "legacy" && args.model != "quadratic")
    throw hfringe::ValidationError("beta is required: pass --beta or provide a metadata sidecar");

  double d0 = 0.0;
  if (args.d0)
    d0 = *args.d0;
  else if (meta.contains("geometry") && meta["geometry"].contains("d0"))
    d0 = meta["geometry"]["d0"].get<double>();

  const hfringe::Weighting weighting =
      args.weights == "none" ? hfringe::Weighting::None : hfringe::Weighting::Poisson;

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  json report{{"dataset", args.data_path},
              {"model", args.model},
              {"weights", args.weights},
              {"beta", beta},
              {"d0", d0},
              {"toolkit_version", hfringe::version_string}};
  std::vector<double> model_curve(data.x.size(), 0.0);

  if (args.model == "standard" || args.model == "corrected") {
    hfringe::Interferogram gram;
    gram.ell = data.x;
    gram.counts = data.y;
    if (args.model == "standard") {
      hfringe::StandardFitOptions opt;
      opt.weighting = weighting;
      const hfringe::FitResultF0 fit = hfringe::fit_standard(gram, beta, opt);
      report["params"] = {{"a1", fit.a1}, {"a2", fit.a2}, {"a3", fit.a3}, {"b", fit.b}};
      report["sigmas"] = {{"a1", fit.sigma(0)}, {"a2", fit.sigma(1)}, {"a3", fit.sigma(2)},
                          {"b", fit.sigma(3)}};
      report["covariance"] = fit.covariance;
      report["derived"] = {{"mu", fit.mu()},
                           {"pedestal", fit.pedestal()},
                           {"mu_identical_slits", hfringe::identical_slit_modulation(beta, d0)}};
      report["residual_norm"] = fit.residual_norm;
      report["reduced_chi2"] = fit.reduced_chi2;
      report["convergence"] = convergence_json(fit.report);
      if (!fit.report.converged) {
        hfringe::io::write_json_atomic(out_dir / "fit_report.json", report);
        throw hfringe::ConvergenceError("standard fit did not converge: " + fit.report.message);
      }
      for (std::size_t i = 0; i < data.x.size(); ++i) {
        const double damp = std::exp(-beta * data.x[i]);
        model_curve[i] = fit.a1 * damp * damp + fit.a2 * damp * std::cos(data.x[i] + fit.a3) +
                         fit.pedestal() + fit.b;
      }
    } else {
      const hfringe::FitResultF1 fit = hfringe::fit_corrected(gram, beta, weighting);
      report["params"] = {{"a1", fit.a[0]}, {"a2", fit.a[1]}, {"a3", fit.a[2]}, {"a4", fit.a[3]},
                          {"a5", fit.a[4]}, {"a6", fit.a[5]}, {"a7", fit.a[6]}, {"a8", fit.a[7]}};
      json sig;
      for (int i = 0; i < 8; ++i) sig["a" + std::to_string(i + 1)] = fit.sigma(i);
      report["sigmas"] = sig;
      report["covariance"] = fit.covariance;
      report["linear_coefficients"] = fit.c;
      report["gauge_resolved"] = fit.gauge_resolved;
      report["residual_norm"] = fit.residual_norm;
      report["reduced_chi2"] = fit.reduced_chi2;
      report["convergence"] = convergence_json(fit.report);
      const hfringe::ExtractedParams ex = hfringe::extract(fit, beta);
      json extraction{{"eps1", ex.eps1},
                      {"eps2", ex.eps2},
                      {"pedestal_residual", ex.pedestal_residual},
                      {"eps_ratio_residual", ex.eps_ratio_residual}};
      if (ex.d0)
        extraction["d0"] = *ex.d0;
      else
        extraction["d0_note"] = ex.d0_note;
      if (ex.z_ratio) extraction["z_ratio"] = *ex.z_ratio;
      report["extraction"] = extraction;
      if (!fit.report.converged) {
        hfringe::io::write_json_atomic(out_dir / "fit_report.json", report);
        throw hfringe::ConvergenceError("corrected fit did not converge: " + fit.report.message);
      }
      for (std::size_t i = 0; i < data.x.size(); ++i)
        model_curve[i] = hfringe::corrected_fit_model_F1(fit.a, beta, data.x[i]);
    }
  } else if (args.model == "legacy") {
    if (!args.range) throw hfringe::ValidationError("legacy model needs --range (same units as L)");
    const hfringe::FitResultLegacy fit =
        hfringe::fit_legacy(data.x, data.y, *args.range, weighting);
    report["params"] = {{"a1", fit.a[0]}, {"a2", fit.a[1]}, {"a3", fit.a[2]},
                        {"a4", fit.a[3]}, {"a5", fit.a[4]}};
    report["range"] = *args.range;
    report["covariance"] = fit.covariance;
    report["period_identifiable"] = fit.period_identifiable;
    report["residual_norm"] = fit.residual_norm;
    report["reduced_chi2"] = fit.reduced_chi2;
    report["convergence"] = convergence_json(fit.report);
    if (!fit.report.converged) {
      hfringe::io::write_json_atomic(out_dir / "fit_report.json", report);
      throw hfringe::ConvergenceError("legacy fit did not converge: " + fit.report.message);
    }
    for (std::size_t i = 0; i < data.x.size(); ++i)
      model_curve[i] = hfringe::legacy_model_F(fit.a, *args.range, data.x[i]);
  } else if (args.model == "quadratic") {
    hfringe::VoltageScan scan;
    scan.u_e = data.x;
    scan.counts = data.y;
    if (meta.contains("scan") && meta["scan"].contains("d"))
      scan.d = meta["scan"]["d"].get<double>();
    const hfringe::QuadraticFit fit = hfringe::fit_voltage_scan(scan, weighting);
    report["params"] = {{"c0", fit.c0}, {"c1", fit.c1}, {"c2", fit.c2}};
    report["sigmas"] = {{"c0", fit.sigma(0)}, {"c1", fit.sigma(1)}, {"c2", fit.sigma(2)}};
    report["covariance"] = fit.covariance;
    report["curvature_nonnegative"] = fit.curvature_nonnegative;
    report["residual_norm"] = fit.residual_norm;
    report["reduced_chi2"] = fit.reduced_chi2;
    if (scan.d > 0.0) report["d"] = scan.d;
    for (std::size_t i = 0; i < data.x.size(); ++i)
      model_curve[i] = fit.c0 + fit.c1 * data.x[i] + fit.c2 * data.x[i] * data.x[i];
  } else {
    throw hfringe::ValidationError("unknown fit model '" + args.model + "'");
  }

  std::vector<std::string> outputs;
  const fs::path report_path = out_dir / "fit_report.json";
  hfringe::io::write_json_atomic(report_path, report);
  outputs.push_back(report_path.string());

  if (args.emit_plot_data) {
    std::vector<double> residual(data.x.size());
    for (std::size_t i = 0; i < data.x.size(); ++i) residual[i] = data.y[i] - model_curve[i];
    const fs::path res_path = out_dir / "fit_residuals.csv";
    std::ostringstream out;
    out << data.x_name << ",counts,model,residual\n";
    for (std::size_t i = 0; i < data.x.size(); ++i)
      out << hfringe::io::format_double(data.x[i]) << ',' << hfringe::io::format_double(data.y[i])
          << ',' << hfringe::io::format_double(model_curve[i]) << ','
          << hfringe::io::format_double(residual[i]) << '\n';
    hfringe::io::write_text_atomic(res_path, out.str());
    outputs.push_back(res_path.string());
  }
  write_run_record(out_dir, "fit --model " + args.model, outputs,
                   json{{"dataset", args.data_path}});
  std::cout << "wrote " << report_path.string() << "\n";
  return exit_ok;
}

struct FcfArgs {
  std::string scan1, scan2;
  std::string out_dir = ".";
  std::string weights = "auto";
};

int cmd_fcf(const FcfArgs& args) {
  struct ScanBundle {
    hfringe::VoltageScan scan;
    json meta;
    double d = 0.0;
    double g = 0.0;
    hfringe::QuadraticFit fit;
  };
  const hfringe::QuadratureOptions quad{1e-12, 0.0, 40000, std::numbers::pi};

  auto load = [&](const std::string& path) {
    ScanBundle b;
    const hfringe::io::XyData data = hfringe::io::read_xy_csv(path);
    b.scan.u_e = data.x;
    b.scan.counts = data.y;
    const fs::path meta_path = fs::path(path).replace_extension(".meta.json");
    if (!fs::exists(meta_path))
      throw hfringe::ValidationError("missing metadata sidecar: " + meta_path.string());
    b.meta = hfringe::io::load_json(meta_path);
    if (!b.meta.contains("scan") || !b.meta["scan"].contains("d"))
      throw hfringe::ValidationError(meta_path.string() + ": no scan separation 'd' recorded");
    b.d = b.meta["scan"]["d"].get<double>();
    b.scan.d = b.d;

    const double beta = b.meta.at("beam").at("beta").get<double>();
    hfringe::ExperimentGeometry geom;
    geom.xi0 = b.meta.at("geometry").at("xi0").get<double>();
    geom.x_star = b.meta.at("geometry").at("x_star").get<double>();
    const hfringe::FieldGeometry field = field_from_meta(b.meta.at("field"));
    const hfringe::Complex z_e = hfringe::zeta0(field, geom, b.d, beta, quad);
    b.g = hfringe::g_factor(b.d, beta, std::norm(z_e));

    hfringe::Weighting weighting = hfringe::Weighting::None;
    if (args.weights == "poisson" ||
        (args.weights == "auto" && b.meta.contains("noise") &&
         b.meta["noise"].value("type", "none") == "poisson"))
      weighting = hfringe::Weighting::Poisson;
    b.fit = hfringe::fit_voltage_scan(b.scan, weighting);
    return b;
  };

  const ScanBundle b1 = load(args.scan1);
  const ScanBundle b2 = load(args.scan2);
  if (b1.d == b2.d)
    throw hfringe::DegenerateError("fcf: both scans taken at the same separation d");

  const hfringe::FcfSolution solution = hfringe::solve_fcf(b1.fit, b1.g, b2.fit, b2.g);

  json roots = json::array();
  for (const auto& r : solution.admissible)
    roots.push_back({{"u_i", r.u_i}, {"z_mod2", r.z_mod2}, {"residual", r.residual}});
  json report{{"scan1", args.scan1},
              {"scan2", args.scan2},
              {"d", {b1.d, b2.d}},
              {"g", {b1.g, b2.g}},
              {"quadratics",
               {{{"c0", b1.fit.c0}, {"c1", b1.fit.c1}, {"c2", b1.fit.c2}},
                {{"c0", b2.fit.c0}, {"c1", b2.fit.c1}, {"c2", b2.fit.c2}}}},
              {"root_multiplicity", solution.root_multiplicity},
              {"roots", roots},
              {"toolkit_version", hfringe::version_string}};

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  const fs::path out_path = out_dir / "fcf_solution.json";
  hfringe::io::write_json_atomic(out_path, report);
  write_run_record(out_dir, "fcf", {out_path.string()},
                   json{{"scan1", args.scan1}, {"scan2", args.scan2}});
  std::cout << "wrote " << out_path.string() << " (" << solution.root_multiplicity
            << " admissible root(s))\n";
  return exit_ok;
}

struct DiagnoseArgs {
  std::vector<std::string> reports;
  std::string out_dir = ".";
  std::optional<double> z10, z20;
  double scatter_threshold = 0.05;
  double chi2_cutoff = 2.0;
  double mu_threshold = 0.10;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  if (args.reports.empty()) throw hfringe::ValidationError("diagnose: no fit reports given");
  std::vector<hfringe::RunSummary> runs;
  double beta = 0.0, d0 = 0.0;
  for (const auto& path : args.reports) {
    const json r = hfringe::io::load_json(path);
    if (r.value("model", "") != "standard")
      throw hfringe::ValidationError(path + ": diagnose expects standard-model fit reports");
    hfringe::RunSummary run;
    run.a1 = r.at("params").at("a1").get<double>();
    run.a2 = r.at("params").at("a2").get<double>();
    run.a3 = r.at("params").at("a3").get<double>();
    run.mu_exp = r.at("derived").at("mu").get<double>();
    run.reduced_chi2 = r.at("reduced_chi2").get<double>();
    run.fit_converged = r.at("convergence").at("converged").get<bool>();
    runs.push_back(run);
    beta = r.at("beta").get<double>();
    d0 = r.at("d0").get<double>();
  }

  std::optional<hfringe::VoltageScanEvidence> scans;
  if (args.z10 && args.z20) scans = hfringe::VoltageScanEvidence{*args.z10, *args.z20};

  hfringe::DiagnoseThresholds thresholds{args.scatter_threshold, args.chi2_cutoff,
                                         args.mu_threshold};
  const hfringe::ScenarioReport report = hfringe::diagnose(runs, beta, d0, scans, thresholds);

  json j{{"scenario", hfringe::to_string(report.scenario)},
         {"scatter", report.scatter},
         {"mean_reduced_chi2", report.mean_reduced_chi2},
         {"mu_mean", report.mu_mean},
         {"mu_expected", report.mu_expected},
         {"mu_rel_dev", report.mu_rel_dev},
         {"evidence", report.evidence},
         {"missing", report.missing},
         {"recommendations", report.recommendations},
         {"runs", args.reports.size()},
         {"toolkit_version", hfringe::version_string}};
  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  const fs::path out_path = out_dir / "diagnosis.json";
  hfringe::io::write_json_atomic(out_path, j);
  write_run_record(out_dir, "diagnose", {out_path.string()}, json{{"reports", args.reports}});

  std::cout << "scenario: " << hfringe::to_string(report.scenario) << "\n";
  for (const auto& e : report.evidence) std::cout << "  evidence: " << e << "\n";
  for (const auto& m : report.missing) std::cout << "  missing: " << m << "\n";
  for (const auto& r : report.recommendations) std::cout << "  next: " << r << "\n";
  return exit_ok;
}

struct CheckGeometryArgs {
  std::string config_path;
  double margin = 3.0;
};

int cmd_check_geometry(const CheckGeometryArgs& args) {
  const hfringe::ScenarioConfig cfg = hfringe::load_scenario(args.config_path);
  const hfringe::Complex z10 =
      hfringe::kernel_integral(cfg.p1, cfg.geometry.xi0, cfg.geometry.x_star, cfg.constants.beta);
  const double z10_mod = std::abs(z10);
  if (!(z10_mod > 0.0))
    throw hfringe::ValidationError("check-geometry: first profile integrates to zero");
  const hfringe::CollimatorCheck check =
      hfringe::check_collimator_distance(cfg.geometry.xi0, cfg.constants.beta, z10_mod, args.margin);
  json j{{"xi0", cfg.geometry.xi0},
         {"z10_mod", z10_mod},
         {"threshold", check.threshold},
         {"margin_factor", check.margin_factor},
         {"required", check.margin_factor * check.threshold},
         {"satisfied", check.satisfied}};
  std::cout << j.dump(2) << "\n";
  if (!check.satisfied)
    std::cerr << "warning: collimator distance |xi0| = " << std::abs(cfg.geometry.xi0)
              << " is below " << check.margin_factor << " x threshold = "
              << check.margin_factor * check.threshold
              << "; the initial 2P admixture may bias the interferogram\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-level beam interferometry: simulate, fit, invert, diagnose"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "synthesize a dataset from a config");
  simulate->add_option("--config", sim.config_path, "scenario config JSON")->required();
  simulate->add_option("--mode", sim.mode, "interferogram | voltage-scan | fcf-distorted");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_option("--name", sim.name, "dataset base name");
  std::uint64_t seed_value = 0;
  auto* seed_opt = simulate->add_option("--seed", seed_value, "override the noise seed");
  simulate->add_flag("--emit-plot-data", sim.emit_plot_data, "also write a dense model curve");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a dataset with one of the model functions");
  fit_cmd->add_option("--data", fit.data_path, "dataset CSV")->required();
  fit_cmd->add_option("--model", fit.model, "standard | corrected | legacy | quadratic");
  fit_cmd->add_option("--meta", fit.meta_path, "metadata sidecar (default: <data>.meta.json)");
  fit_cmd->add_option("--out", fit.out_dir, "output directory");
  fit_cmd->add_option("--weights", fit.weights, "poisson | none");
  double beta_v = 0, d0_v = 0, range_v = 0;
  auto* beta_opt = fit_cmd->add_option("--beta", beta_v, "damping ratio (overrides metadata)");
  auto* d0_opt = fit_cmd->add_option("--d0", d0_v, "constant displacement (overrides metadata)");
  auto* range_opt = fit_cmd->add_option("--range", range_v, "2P range for the legacy model");
  fit_cmd->add_flag("--emit-plot-data", fit.emit_plot_data, "write residual/model CSVs");

  FcfArgs fcf;
  auto* fcf_cmd = app.add_subcommand("fcf", "invert two voltage scans for u_i and |z|^2");
  fcf_cmd->add_option("--scan1", fcf.scan1, "first scan CSV")->required();
  fcf_cmd->add_option("--scan2", fcf.scan2, "second scan CSV")->required();
  fcf_cmd->add_option("--out", fcf.out_dir, "output directory");
  fcf_cmd->add_option("--weights", fcf.weights, "auto | poisson | none");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "classify runs against the decision logic");
  diag_cmd->add_option("--reports", diag.reports, "standard fit report JSONs")->required();
  diag_cmd->add_option("--out", diag.out_dir, "output directory");
  double z10_v = 0, z20_v = 0;
  auto* z10_opt = diag_cmd->add_option("--z10", z10_v, "|z10| from voltage scans (optional)");
  auto* z20_opt = diag_cmd->add_option("--z20", z20_v, "|z20| from voltage scans (optional)");
  diag_cmd->add_option("--scatter-threshold", diag.scatter_threshold, "reproducibility threshold");
  diag_cmd->add_option("--chi2-cutoff", diag.chi2_cutoff, "reduced chi^2 cutoff");
  diag_cmd->add_option("--mu-threshold", diag.mu_threshold, "modulation deviation threshold");

  CheckGeometryArgs geo;
  auto* geo_cmd = app.add_subcommand("check-geometry", "collimator distance check");
  geo_cmd->add_option("--config", geo.config_path, "scenario config JSON")->required();
  geo_cmd->add_option("--margin", geo.margin, "margin factor on the threshold");

  try {
    app.parse(argc, argv);
    if (*seed_opt) sim.seed = seed_value;
    if (*beta_opt) fit.beta = beta_v;
    if (*d0_opt) fit.d0 = d0_v;
    if (*range_opt) fit.range = range_v;
    if (*z10_opt) diag.z10 = z10_v;
    if (*z20_opt) diag.z20 = z20_v;

    if (simulate->parsed()) return cmd_simulate(sim);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (fcf_cmd->parsed()) return cmd_fcf(fcf);
    if (diag_cmd->parsed()) return cmd_diagnose(diag);
    if (geo_cmd->parsed()) return cmd_check_geometry(geo);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hfringe::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const hfringe::DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_degenerate;
  } catch (const hfringe::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
  return exit_ok;
}

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hfringe/fitting.hpp"
#include "hfringe/models.hpp"

namespace hfringe {

// One measured-or-synthetic interferogram run reduced to the quantities the
// decision logic needs.
struct RunSummary {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double mu_exp = 0.0;        // a2/a1
  double reduced_chi2 = 0.0;  // of the standard fit
  bool fit_converged = true;

  static RunSummary from_fit(const FitResultF0& fit) {
    return {fit.a1, fit.a2, fit.a3, fit.mu(), fit.reduced_chi2, fit.report.converged};
  }
};

// Slit integrals obtained independently from voltage scans.
struct VoltageScanEvidence {
  double z10_mod = 0.0;
  double z20_mod = 0.0;
};

struct DiagnoseThresholds {
  double reproducibility_scatter = 0.05;  // relative spread across runs
  double reduced_chi2_cutoff = 2.0;
  double modulation_deviation = 0.10;     // |mu_exp/mu_identical - 1|
};

enum class ScenarioClass {
  NotReproducible,          // parameter scatter beyond threshold
  PoorStandardFit,          // reproducible but the standard form misses
  ModulationMismatch,       // good fit, modulation far from the identical-slit value
  ConsistentIdenticalSlits, // everything agrees with identical regular slits
  Inconclusive
};

inline const char* to_string(ScenarioClass c) {
  switch (c) {
    case ScenarioClass::NotReproducible: return "not-reproducible";
    case ScenarioClass::PoorStandardFit: return "poor-standard-fit";
    case ScenarioClass::ModulationMismatch: return "modulation-mismatch";
    case ScenarioClass::ConsistentIdenticalSlits: return "consistent-identical-slits";
    case ScenarioClass::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct ScenarioReport {
  ScenarioClass scenario = ScenarioClass::Inconclusive;
  double scatter = 0.0;
  double mean_reduced_chi2 = 0.0;
  double mu_mean = 0.0;
  double mu_expected = 0.0;  // identical-slit value 2 e^{beta d0}
  double mu_rel_dev = 0.0;
  std::vector<std::string> evidence;
  std::vector<std::string> missing;
  std::vector<std::string> recommendations;
};

namespace detail {

inline double relative_spread(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double lo = values[0], hi = values[0], mean = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return hi - lo > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return 0.5 * (hi - lo) / std::abs(mean);
}

}  // namespace detail

// Decision logic over one or more interferogram runs, optionally backed by
// voltage-scan evidence. Classification precedence: reproducibility first,
// then fit quality, then the identical-slit modulation comparison.
inline ScenarioReport diagnose(std::span<const RunSummary> runs, double beta, double d0,
                               std::optional<VoltageScanEvidence> scans = std::nullopt,
                               const DiagnoseThresholds& thresholds = {}) {
  if (runs.empty()) throw ValidationError("diagnose: need at least one interferogram fit");
  if (!(beta > 0.0)) throw ValidationError("diagnose: beta must be positive");

  ScenarioReport report;
  std::ostringstream note;

  std::vector<double> a1s, a2s, mus;
  double chi2_sum = 0.0, mu_sum = 0.0;
  for (const auto& r : runs) {
    a1s.push_back(r.a1);
    a2s.push_back(r.a2);
    mus.push_back(r.mu_exp);
    chi2_sum += r.reduced_chi2;
    mu_sum += r.mu_exp;
  }
  report.mean_reduced_chi2 = chi2_sum / static_cast<double>(runs.size());
  report.mu_mean = mu_sum / static_cast<double>(runs.size());
  report.mu_expected = identical_slit_modulation(beta, d0);
  report.mu_rel_dev = std::abs(report.mu_mean / report.mu_expected - 1.0);
  report.scatter = std::max({detail::relative_spread(a1s), detail::relative_spread(a2s),
                             detail::relative_spread(mus)});

  if (runs.size() < 2)
    report.missing.push_back("single run only; reproducibility across runs not assessed");
  if (!scans)
    report.missing.push_back("no voltage-scan evidence; slit integrals not independently checked");

  if (runs.size() >= 2 && report.scatter > thresholds.reproducibility_scatter) {
    report.scenario = ScenarioClass::NotReproducible;
    note << "fit parameters scatter by " << report.scatter * 100.0 << "% across runs (threshold "
         << thresholds.reproducibility_scatter * 100.0 << "%)";
    report.evidence.push_back(note.str());
    report.recommendations = {
        "hunt for uncontrolled factors; stray film fields are the prime suspect",
        "run voltage scans at two electrode separations to bound the internal voltage",
        "repeat both experiments at several beam intensities under otherwise identical conditions",
        "large or unstable film fields call for better vacuum conditions"};
    return report;
  }

  if (report.mean_reduced_chi2 > thresholds.reduced_chi2_cutoff) {
    report.scenario = ScenarioClass::PoorStandardFit;
    note << "mean reduced chi^2 = " << report.mean_reduced_chi2 << " exceeds "
         << thresholds.reduced_chi2_cutoff << "; the standard damped-cosine form does not describe the data";
    report.evidence.push_back(note.str());
    report.recommendations = {
        "a capacitor-like film field distorts the curve; measure voltage scans at two separations",
        "check whether the distortion tracks beam intensity (charging of surface films)"};
    return report;
  }

  if (report.mu_rel_dev > thresholds.modulation_deviation) {
    report.scenario = ScenarioClass::ModulationMismatch;
    note << "modulation " << report.mu_mean << " deviates from the identical-slit value "
         << report.mu_expected << " by " << report.mu_rel_dev * 100.0 << "%";
    report.evidence.push_back(note.str());
    report.recommendations = {
        "global film fields are excluded; run voltage scans at four separations to get both slit integrals",
        "re-measure the slit integrals at different beam intensities",
        "unequal slit integrals with drifting modulation point to charged slit edges"};
    return report;
  }

  report.scenario = ScenarioClass::ConsistentIdenticalSlits;
  note << "modulation " << report.mu_mean << " matches the identical-slit value "
       << report.mu_expected << " within " << thresholds.modulation_deviation * 100.0 << "%";
  report.evidence.push_back(note.str());
  if (scans) {
    const double ratio_dev = scans->z20_mod > 0.0
                                 ? std::abs(scans->z10_mod / scans->z20_mod - 1.0)
                                 : std::numeric_limits<double>::infinity();
    std::ostringstream s2;
    if (ratio_dev <= thresholds.reproducibility_scatter) {
      s2 << "voltage scans give equal slit integrals (|z10|/|z20| off by " << ratio_dev * 100.0
         << "%)";
      report.evidence.push_back(s2.str());
    } else {
      s2 << "voltage scans give unequal slit integrals (|z10|/|z20| off by " << ratio_dev * 100.0
         << "%); regular-perturbation picture is strained";
      report.evidence.push_back(s2.str());
    }
  }
  report.recommendations = {
      "repeat both experiments with slits of a different geometry and compare the integrals",
      "check that the recovered integrals stay put when the beam intensity changes"};
  return report;
}

}  // namespace hfringe

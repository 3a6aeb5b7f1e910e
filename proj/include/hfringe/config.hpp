#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hfringe/core.hpp"
#include "hfringe/interferogram.hpp"
#include "hfringe/io.hpp"
#include "hfringe/profile.hpp"

namespace hfringe {

// Run configuration as read from a JSON file. Geometry and profile
// coordinates may arrive in mm or dimensionless (mandatory "units" key);
// everything is converted to dimensionless x = k0*z on load.

struct ScanConfig {
  double d = 0.0;  // electrode separation for the scan, dimensionless
  std::vector<double> u_e;
  double u_i = 0.0;
};

// Stray-field strength for distorted-interferogram synthesis; the separation
// grid is d = d0 + ell from the shared geometry.
struct FcfConfig {
  double u_i = 0.0;
};

struct ScenarioConfig {
  BeamParameters beam;
  DimensionlessConstants constants;
  std::string units = "dimensionless";
  ExperimentGeometry geometry;
  PerturbationProfile p1 = PerturbationProfile::zero();
  PerturbationProfile p2 = PerturbationProfile::zero();
  std::optional<FieldGeometry> field;
  Complex s0{1.0, 0.0};
  Complex p0{0.0, 0.0};
  double k_factor = 1.0;
  double background = 0.0;
  double exposure = 1.0;
  NoiseSpec noise{};
  std::optional<ScanConfig> scan;
  std::optional<FcfConfig> fcf;
  std::vector<std::string> warnings;
};

namespace config_detail {

using io::json;

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ValidationError(where + ": missing numeric key '" + key + "'");
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ValidationError("expected number for key '" + key + "'");
  return j.at(key).get<double>();
}

inline std::vector<double> grid_from_json(const json& j, double scale, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>() * scale);
    return out;
  }
  if (!j.is_object()) throw ValidationError(where + ": expected array or {min,max,count}");
  const double lo = require_number(j, "min", where) * scale;
  const double hi = require_number(j, "max", where) * scale;
  const int count = static_cast<int>(require_number(j, "count", where));
  if (count < 2 || !(hi > lo)) throw ValidationError(where + ": need count >= 2 and max > min");
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  return out;
}

inline Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) return Complex(j[0].get<double>(), j[1].get<double>());
  if (j.is_object() && j.contains("mod") && j.contains("phase")) {
    const double m = j.at("mod").get<double>();
    const double p = j.at("phase").get<double>();
    return std::polar(m, p);
  }
  throw ValidationError(where + ": expected number, [re, im], or {mod, phase}");
}

}  // namespace config_detail

// `scale` converts config coordinates to dimensionless (1 for dimensionless
// input, k0*1e-3 for mm). Amplitude values phi are dimensionless either way.
inline PerturbationProfile profile_from_json(const io::json& j, double scale) {
  using config_detail::number_or;
  using config_detail::require_number;
  if (!j.is_object() || !j.contains("shape"))
    throw ValidationError("profile: expected object with a 'shape' key");
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "zero") return PerturbationProfile::zero();
  if (shape == "gaussian")
    return PerturbationProfile::gaussian(require_number(j, "center", "gaussian") * scale,
                                         require_number(j, "sigma", "gaussian") * scale,
                                         require_number(j, "peak", "gaussian"),
                                         number_or(j, "cutoff_sigmas", 8.0));
  if (shape == "lorentzian")
    return PerturbationProfile::lorentzian(require_number(j, "center", "lorentzian") * scale,
                                           require_number(j, "gamma", "lorentzian") * scale,
                                           require_number(j, "peak", "lorentzian"),
                                           number_or(j, "rel_floor", 1e-12));
  if (shape == "tophat")
    return PerturbationProfile::top_hat(require_number(j, "left", "tophat") * scale,
                                        require_number(j, "right", "tophat") * scale,
                                        require_number(j, "height", "tophat"));
  if (shape == "expdecay")
    return PerturbationProfile::exp_decay(require_number(j, "edge", "expdecay") * scale,
                                          require_number(j, "scale", "expdecay") * scale,
                                          require_number(j, "peak", "expdecay"),
                                          static_cast<int>(number_or(j, "direction", 1.0)),
                                          number_or(j, "rel_floor", 1e-12));
  if (shape == "tabulated") {
    if (!j.contains("points") || !j.at("points").is_array())
      throw ValidationError("tabulated profile: missing 'points' array");
    std::vector<double> x, v;
    for (const auto& pt : j.at("points")) {
      if (!pt.is_array() || pt.size() != 2)
        throw ValidationError("tabulated profile: points must be [x, phi] pairs");
      x.push_back(pt[0].get<double>() * scale);
      v.push_back(pt[1].get<double>());
    }
    return PerturbationProfile::tabulated(std::move(x), std::move(v));
  }
  throw ValidationError("profile: unknown shape '" + shape + "'");
}

// Canonical (dimensionless) serialization; inverse of profile_from_json.
inline io::json profile_to_json(const PerturbationProfile& profile) {
  io::json j;
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianShape>) {
          j = {{"shape", "gaussian"}, {"center", s.center}, {"sigma", s.sigma},
               {"peak", s.peak},     {"cutoff_sigmas", s.cutoff_sigmas}};
        } else if constexpr (std::is_same_v<T, LorentzianShape>) {
          j = {{"shape", "lorentzian"}, {"center", s.center}, {"gamma", s.gamma},
               {"peak", s.peak},        {"rel_floor", s.rel_floor}};
        } else if constexpr (std::is_same_v<T, TopHatShape>) {
          j = {{"shape", "tophat"}, {"left", s.left}, {"right", s.right}, {"height", s.height}};
        } else if constexpr (std::is_same_v<T, ExpDecayShape>) {
          j = {{"shape", "expdecay"}, {"edge", s.edge},           {"scale", s.scale},
               {"peak", s.peak},      {"direction", s.direction}, {"rel_floor", s.rel_floor}};
        } else {
          io::json pts = io::json::array();
          for (std::size_t i = 0; i < s.x.size(); ++i) pts.push_back({s.x[i], s.value[i]});
          j = {{"shape", "tabulated"}, {"points", pts}};
        }
      },
      profile.shape());
  return j;
}

inline ScenarioConfig scenario_from_json(const io::json& root) {
  using namespace config_detail;
  if (!root.is_object()) throw ValidationError("config: expected a JSON object");
  ScenarioConfig cfg;

  if (!root.contains("beam") || !root.at("beam").is_object())
    throw ValidationError("config: missing 'beam' section");
  const json& beam = root.at("beam");
  cfg.beam.v_a = require_number(beam, "v_a", "beam");
  cfg.beam.nu0 = number_or(beam, "nu0", default_transition_frequency_hz);
  cfg.beam.tau = number_or(beam, "tau", default_upper_lifetime_s);
  cfg.warnings = validate(cfg.beam);
  cfg.constants = derive_constants(cfg.beam);

  if (!root.contains("units") || !root.at("units").is_string())
    throw ValidationError("config: missing 'units' key ('dimensionless' or 'mm')");
  cfg.units = root.at("units").get<std::string>();
  double scale = 1.0;
  if (cfg.units == "mm")
    scale = cfg.constants.k0 * 1e-3;
  else if (cfg.units != "dimensionless")
    throw ValidationError("config: units must be 'dimensionless' or 'mm'");

  if (!root.contains("geometry") || !root.at("geometry").is_object())
    throw ValidationError("config: missing 'geometry' section");
  const json& g = root.at("geometry");
  cfg.geometry.xi0 = require_number(g, "xi0", "geometry") * scale;
  cfg.geometry.x_star = require_number(g, "x_star", "geometry") * scale;
  cfg.geometry.d0 = number_or(g, "d0", 0.0) * scale;
  if (root.contains("ell")) cfg.geometry.ell = grid_from_json(root.at("ell"), scale, "ell");
  cfg.geometry.validate();

  if (!root.contains("profiles") || !root.at("profiles").is_object())
    throw ValidationError("config: missing 'profiles' section");
  cfg.p1 = profile_from_json(root.at("profiles").at("p1"), scale);
  cfg.p2 = profile_from_json(root.at("profiles").at("p2"), scale);
  if (cfg.p1.amplitude_warning() || cfg.p2.amplitude_warning())
    cfg.warnings.push_back("profile peak exceeds 0.05; first-order accuracy degrades");

  if (root.contains("field")) {
    const json& f = root.at("field");
    const std::string gap = f.contains("gap") ? f.at("gap").get<std::string>() : "uniform";
    const double u0 = number_or(f, "u0", 1.0);
    if (gap == "uniform") {
      cfg.field = FieldGeometry::uniform(u0);
    } else if (gap == "tabulated") {
      if (!f.contains("lambda") || !f.at("lambda").is_array())
        throw ValidationError("field: tabulated gap needs a 'lambda' array of [x, width] pairs");
      std::vector<double> x, lam;
      for (const auto& pt : f.at("lambda")) {
        x.push_back(pt[0].get<double>() * scale);
        lam.push_back(pt[1].get<double>() * scale);
      }
      cfg.field = FieldGeometry::tabulated(std::move(x), std::move(lam), u0);
    } else {
      throw ValidationError("field: unknown gap model '" + gap + "'");
    }
  }

  if (root.contains("amplitudes")) {
    const json& a = root.at("amplitudes");
    if (a.contains("s0")) cfg.s0 = complex_from_json(a.at("s0"), "amplitudes.s0");
    if (a.contains("p0")) cfg.p0 = complex_from_json(a.at("p0"), "amplitudes.p0");
  }
  if (cfg.s0 == Complex(0.0, 0.0)) throw ValidationError("config: s0 must be nonzero");

  if (root.contains("scale")) {
    const json& s = root.at("scale");
    cfg.k_factor = number_or(s, "k_factor", 1.0);
    cfg.background = number_or(s, "background", 0.0);
    cfg.exposure = number_or(s, "exposure", 1.0);
  }
  if (!(cfg.k_factor > 0.0)) throw ValidationError("config: k_factor must be positive");
  if (!(cfg.background >= 0.0)) throw ValidationError("config: background must be >= 0");
  if (!(cfg.exposure > 0.0)) throw ValidationError("config: exposure must be positive");

  if (root.contains("noise")) {
    const json& nj = root.at("noise");
    const std::string type = nj.contains("type") ? nj.at("type").get<std::string>() : "none";
    if (type == "poisson") {
      if (!nj.contains("seed")) throw ValidationError("noise: poisson requires a seed");
      cfg.noise = NoiseSpec::poisson(nj.at("seed").get<std::uint64_t>(), cfg.exposure);
    } else if (type != "none") {
      throw ValidationError("noise: unknown type '" + type + "'");
    }
  }

  if (root.contains("scan")) {
    const json& s = root.at("scan");
    ScanConfig scan;
    scan.d = require_number(s, "d", "scan") * scale;
    if (!s.contains("u_e")) throw ValidationError("scan: missing 'u_e' grid");
    scan.u_e = grid_from_json(s.at("u_e"), 1.0, "scan.u_e");  // voltages are already dimensionless
    scan.u_i = number_or(s, "u_i", 0.0);
    if (!(scan.d > 0.0)) throw ValidationError("scan: d must be positive");
    cfg.scan = scan;
  }

  if (root.contains("fcf")) {
    const json& f = root.at("fcf");
    FcfConfig fcf;
    fcf.u_i = number_or(f, "u_i", 0.0);
    cfg.fcf = fcf;
  }

  return cfg;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(io::load_json(path));
}

}  // namespace hfringe

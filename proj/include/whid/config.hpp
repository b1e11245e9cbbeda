#pragma once

// INI experiment configuration; the schema is documented in docs/config.md.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "whid/channel.hpp"
#include "whid/error.hpp"
#include "whid/experiments.hpp"
#include "whid/io.hpp"
#include "whid/metrics.hpp"

namespace whid {

struct CapturedPaths {
  std::filesystem::path x1, w1, x2, w2, x3, w3;
};

struct ExperimentConfig {
  IdentifyOptions identify;
  BudgetInputs budget;
  SweepOptions sweep;
  VolterraExperiment volterra;
  std::size_t seeds = 1;
  std::uint64_t seed = 1;
  std::optional<CapturedPaths> captured;
  std::string signal_format = "csv";
};

namespace config_detail {

using boost::property_tree::ptree;

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  const auto last = s.find_last_not_of(" \t\r");
  return first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
}

inline std::optional<std::string> text(const ptree& tree, const std::string& key) {
  if (const auto v = tree.get_optional<std::string>(key)) return trim(*v);
  return std::nullopt;
}

inline double number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (trim(value.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ParameterError("config field '" + key + "': expected a number, got '" + value + "'");
}

inline void read(const ptree& t, const std::string& key, double& out) {
  if (const auto v = text(t, key)) out = number(key, *v);
}

inline void read(const ptree& t, const std::string& key, std::size_t& out) {
  if (const auto v = text(t, key)) {
    const double d = number(key, *v);
    if (d < 0.0 || d != std::floor(d))
      throw ParameterError("config field '" + key + "': expected a non-negative integer");
    out = static_cast<std::size_t>(d);
  }
}

inline void read(const ptree& t, const std::string& key, int& out) {
  if (const auto v = text(t, key)) {
    const double d = number(key, *v);
    if (d != std::floor(d)) throw ParameterError("config field '" + key + "': expected an integer");
    out = static_cast<int>(d);
  }
}

inline void read_seed(const ptree& t, const std::string& key, std::uint64_t& out) {
  if (const auto v = text(t, key)) {
    try {
      std::size_t used = 0;
      out = std::stoull(*v, &used);
      if (used == v->size()) return;
    } catch (const std::exception&) {
    }
    throw ParameterError("config field '" + key + "': expected an unsigned integer");
  }
}

/// "none" clears the optional.
inline void read(const ptree& t, const std::string& key, std::optional<double>& out) {
  if (const auto v = text(t, key)) out = (*v == "none" || v->empty()) ? std::nullopt : std::optional(number(key, *v));
}

inline std::vector<double> list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(number(key, trim(item)));
  return out;
}

/// "1:1.0, 3:-0.01" -> {1: 1.0, 3: -0.01}.
inline std::map<int, double> polynomial(const std::string& key, const std::string& value) {
  std::map<int, double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParameterError("config field '" + key + "': expected order:value pairs");
    out[static_cast<int>(number(key, trim(item.substr(0, colon))))] = number(key, trim(item.substr(colon + 1)));
  }
  return out;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "run.seed", "run.seeds", "run.signal_format",
      "channel.preset", "channel.h_file", "channel.g_file", "channel.amplifier", "channel.rapp_gain",
      "channel.rapp_saturation", "channel.rapp_smoothness", "channel.polynomial", "channel.noise_variance",
      "pilot.taps_h", "pilot.taps_g", "pilot.order", "pilot.x1_harmonics", "pilot.x1_fundamental",
      "pilot.x1_length", "pilot.ibo_db", "pilot.x1_backoff_db", "pilot.input_saturation_power",
      "pilot.phase_mode", "pilot.phase_search_min_harmonics", "pilot.phase_search_budget", "pilot.x2_harmonics",
      "pilot.x2_fundamental", "pilot.x2_first_harmonic", "pilot.x2_length", "pilot.x2_peak", "pilot.x3_length",
      "pilot.snr_db", "pilot.band_threshold_db", "pilot.delay_low", "pilot.delay_high",
      "validation.backoff_db", "validation.length", "validation.peak_reference", "validation.reference_max_abs",
      "budget.target_nmse_db", "budget.bandwidth_ratio_x", "budget.bandwidth_ratio_u", "budget.par_increase",
      "budget.beta", "budget.noise_variance",
      "sweep.axis", "sweep.values", "sweep.seeds",
      "volterra.taps_h", "volterra.taps_g", "volterra.gamma1", "volterra.gamma3", "volterra.input_power",
      "volterra.lengths", "volterra.length_factors", "volterra.snr_db", "volterra.seeds", "volterra.ridge",
      "captured.x1", "captured.w1", "captured.x2", "captured.w2", "captured.x3", "captured.w3"};
  return keys;
}

}  // namespace config_detail

/// Parses INI text; relative file paths resolve against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".") {
  using namespace config_detail;
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParameterError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto& keys = known_keys();
      if (std::find(keys.begin(), keys.end(), full) == keys.end())
        throw ParameterError("config: unknown field '" + full + "'");
    }
  }

  ExperimentConfig cfg;
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  read_seed(tree, "run.seed", cfg.seed);
  read(tree, "run.seeds", cfg.seeds);
  if (const auto v = text(tree, "run.signal_format")) {
    if (*v != "csv" && *v != "binary") throw ParameterError("config field 'run.signal_format': csv or binary");
    cfg.signal_format = *v;
  }

  // channel
  WhModel& model = cfg.identify.model;
  const std::string preset = text(tree, "channel.preset").value_or("reference");
  if (preset == "reference") {
    model = reference_model();
  } else if (preset == "files") {
    const auto h = text(tree, "channel.h_file");
    const auto g = text(tree, "channel.g_file");
    if (!h || !g) throw ParameterError("config: channel.preset = files needs channel.h_file and channel.g_file");
    model.h = io::read_filter_csv(resolve(*h));
    model.g = io::read_filter_csv(resolve(*g));
  } else {
    throw ParameterError("config field 'channel.preset': expected 'reference' or 'files', got '" + preset + "'");
  }
  const std::string amp = text(tree, "channel.amplifier").value_or("rapp");
  if (amp == "rapp") {
    RappAmplifier r;
    read(tree, "channel.rapp_gain", r.gain);
    read(tree, "channel.rapp_saturation", r.saturation);
    read(tree, "channel.rapp_smoothness", r.smoothness);
    r.validate();
    model.amplifier = r;
  } else if (amp == "polynomial") {
    const auto p = text(tree, "channel.polynomial");
    if (!p) throw ParameterError("config: channel.amplifier = polynomial needs channel.polynomial");
    model.amplifier = PolynomialAmplifier(polynomial("channel.polynomial", *p));
  } else {
    throw ParameterError("config field 'channel.amplifier': expected 'rapp' or 'polynomial'");
  }
  read(tree, "channel.noise_variance", model.noise_variance);
  if (model.noise_variance < 0.0) throw ParameterError("config field 'channel.noise_variance' must be >= 0");

  // pilots
  PilotPlan& plan = cfg.identify.plan;
  plan.taps_h = model.h.size();
  plan.taps_g = model.g.size();
  read(tree, "pilot.taps_h", plan.taps_h);
  read(tree, "pilot.taps_g", plan.taps_g);
  read(tree, "pilot.order", plan.order);
  read(tree, "pilot.x1_harmonics", plan.x1_harmonics);
  read(tree, "pilot.x1_fundamental", plan.x1_fundamental);
  read(tree, "pilot.x1_length", plan.x1_length);
  read(tree, "pilot.ibo_db", plan.ibo_db);
  read(tree, "pilot.x1_backoff_db", plan.x1_backoff_db);
  read(tree, "pilot.input_saturation_power", plan.input_saturation_power);
  if (const auto v = text(tree, "pilot.phase_mode")) {
    if (*v == "schroeder") plan.x1_phase = PhaseMode::kSchroeder;
    else if (*v == "minmax") plan.x1_phase = PhaseMode::kMinMax;
    else throw ParameterError("config field 'pilot.phase_mode': expected 'schroeder' or 'minmax'");
  }
  read(tree, "pilot.phase_search_min_harmonics", plan.phase_search_min_harmonics);
  read(tree, "pilot.phase_search_budget", plan.phase_search_budget);
  read(tree, "pilot.x2_harmonics", plan.x2_harmonics);
  read(tree, "pilot.x2_fundamental", plan.x2_fundamental);
  read(tree, "pilot.x2_first_harmonic", plan.x2_first_harmonic);
  read(tree, "pilot.x2_length", plan.x2_length);
  read(tree, "pilot.x2_peak", plan.x2_peak);
  read(tree, "pilot.x3_length", plan.x3_length);
  read(tree, "pilot.snr_db", plan.snr_db);
  read(tree, "pilot.band_threshold_db", plan.band_threshold_db);
  std::optional<double> d_lo, d_hi;
  read(tree, "pilot.delay_low", d_lo);
  read(tree, "pilot.delay_high", d_hi);
  if (d_lo.has_value() != d_hi.has_value())
    throw ParameterError("config: pilot.delay_low and pilot.delay_high must be given together");
  if (d_lo) plan.delay_bracket = std::pair(*d_lo, *d_hi);
  if (plan.taps_h != model.h.size() || plan.taps_g != model.g.size())
    throw ParameterError("config: pilot.taps_h / pilot.taps_g must match the channel filter lengths");
  for (const auto& [name, spec] :
       {std::pair{"pilot.x1", schroeder_multisine(plan.x1_harmonics, plan.x1_fundamental, plan.x1_length)},
        std::pair{"pilot.x2", schroeder_multisine(plan.x2_harmonics, plan.x2_fundamental, plan.x2_length,
                                                  plan.x2_first_harmonic)}}) {
    try {
      spec.validate();
    } catch (const ParameterError& e) {
      throw ParameterError(std::string(name) + "_*: " + e.what());
    }
  }
  plan.validate();

  // validation
  ValidationOptions& val = cfg.identify.validation;
  read(tree, "validation.backoff_db", val.backoff_db);
  read(tree, "validation.length", val.length);
  read(tree, "validation.peak_reference", val.peak_reference);
  read(tree, "validation.reference_max_abs", cfg.identify.reference_max_abs);

  // budget
  read(tree, "budget.target_nmse_db", cfg.budget.target_nmse_db);
  read(tree, "budget.bandwidth_ratio_x", cfg.budget.bandwidth_ratio_x);
  read(tree, "budget.bandwidth_ratio_u", cfg.budget.bandwidth_ratio_u);
  read(tree, "budget.par_increase", cfg.budget.par_increase);
  read(tree, "budget.beta", cfg.budget.beta);
  std::optional<double> budget_noise;
  read(tree, "budget.noise_variance", budget_noise);
  if (budget_noise) cfg.budget.noise_variance = *budget_noise;
  else cfg.budget.noise_variance = 0.0;  // filled from the channel by design-pilot

  // sweep
  if (const auto v = text(tree, "sweep.axis")) {
    parse_sweep_axis(*v);
    cfg.sweep.axis = *v;
  }
  if (const auto v = text(tree, "sweep.values")) cfg.sweep.values = list("sweep.values", *v);
  cfg.sweep.seeds = cfg.seeds;
  read(tree, "sweep.seeds", cfg.sweep.seeds);

  // volterra
  VolterraExperiment& ve = cfg.volterra;
  read(tree, "volterra.taps_h", ve.taps_h);
  read(tree, "volterra.taps_g", ve.taps_g);
  read(tree, "volterra.gamma1", ve.gamma1);
  read(tree, "volterra.gamma3", ve.gamma3);
  read(tree, "volterra.input_power", ve.input_power);
  if (const auto v = text(tree, "volterra.lengths")) {
    ve.lengths.clear();
    for (double n : list("volterra.lengths", *v)) {
      if (n < 1.0 || n != std::floor(n)) throw ParameterError("config field 'volterra.lengths': positive integers");
      ve.lengths.push_back(static_cast<std::size_t>(n));
    }
  }
  if (const auto v = text(tree, "volterra.length_factors")) ve.length_factors = list("volterra.length_factors", *v);
  if (const auto v = text(tree, "volterra.snr_db")) ve.snr_db = list("volterra.snr_db", *v);
  ve.seeds = cfg.seeds;
  read(tree, "volterra.seeds", ve.seeds);
  read(tree, "volterra.ridge", ve.ridge);
  if (ve.taps_h < 1 || ve.taps_g < 1) throw ParameterError("config: volterra taps must be >= 1");
  if (!(ve.input_power > 0.0)) throw ParameterError("config field 'volterra.input_power' must be > 0");

  // captured data
  if (tree.get_child_optional("captured")) {
    CapturedPaths cp;
    const auto need = [&](const char* key) {
      const auto v = text(tree, std::string("captured.") + key);
      if (!v) throw ParameterError(std::string("config: captured.") + key + " is required with [captured]");
      const auto path = resolve(*v);
      if (!std::filesystem::exists(path))
        throw IoError("config field 'captured." + std::string(key) + "': file '" + path.string() + "' not found");
      return path;
    };
    cp.x1 = need("x1");
    cp.w1 = need("w1");
    cp.x2 = need("x2");
    cp.w2 = need("w2");
    cp.x3 = need("x3");
    cp.w3 = need("w3");
    cfg.captured = cp;
  }

  if (cfg.seeds < 1) throw ParameterError("config field 'run.seeds' must be >= 1");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace whid

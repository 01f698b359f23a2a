// nearfocus: beamdepth / EBRD sweeps and multiuser sum-rate experiments.

#include "nearfocus/experiment.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>

using namespace nearfocus;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  bool gnuplot = false;

  std::optional<int> n1, n2;
  std::optional<double> carrier_hz;
  std::vector<double> phi_deg, theta_deg, rf_m;
  std::optional<double> rf_fraction;
  std::optional<int> z_points;
};

nlohmann::json build_document(const Options& o, Command cmd) {
  nlohmann::json doc;
  if (!o.config.empty() && !o.preset.empty()) throw ConfigError("use either --config or --preset");
  if (!o.preset.empty()) {
    doc = preset_document(o.preset);
  } else if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw IoError("cannot read config file '" + o.config + "'");
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(o.config + ": malformed JSON: " + e.what());
    }
  } else {
    doc = {{"command", std::string(to_string(cmd))}};
    if (cmd == Command::beamdepth || cmd == Command::gain_profile) {
      doc["array"] = {{"n1", 16}, {"n2", 16}};
    }
    if (cmd == Command::sumrate) {
      throw ConfigError("sumrate needs --config or --preset");
    }
  }

  // presets may route a subcommand to a related one (beamdepth's eta-sweep mode)
  const auto declared = parse_command(doc.value("command", std::string{}));
  const bool eta_mode = cmd == Command::beamdepth && declared == Command::eta_sweep;
  if (declared && *declared != cmd && !eta_mode) {
    throw ConfigError("config is for '" + std::string(to_string(*declared)) +
                      "', not '" + std::string(to_string(cmd)) + "'");
  }
  if (!doc.contains("command")) doc["command"] = std::string(to_string(cmd));

  if (o.n1 || o.n2) {
    auto& a = doc["array"];
    if (o.n1) a["n1"] = *o.n1;
    if (o.n2) a["n2"] = *o.n2;
  }
  if (o.carrier_hz) {
    if (doc.contains("array")) doc["array"]["carrier_hz"] = *o.carrier_hz;
    else doc["carrier_hz"] = *o.carrier_hz;
  }
  if (!o.phi_deg.empty()) doc["phi_deg"] = o.phi_deg;
  if (!o.theta_deg.empty()) doc["theta_deg"] = o.theta_deg;
  if (!o.rf_m.empty()) {
    doc["rf_m"] = o.rf_m;
    doc.erase("rf_rayleigh_fraction");
  }
  if (o.rf_fraction) {
    doc["rf_rayleigh_fraction"] = *o.rf_fraction;
    if (o.rf_m.empty()) doc.erase("rf_m");
  }
  if (o.z_points) doc["z"]["points"] = *o.z_points;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.trials) doc["trials"] = *o.trials;
  if (o.threads) doc["threads"] = *o.threads;
  if (!o.out.empty()) doc["output"] = o.out;
  return doc;
}

int execute(const Options& o, Command cmd) {
  try {
    const auto doc = build_document(o, cmd);
    ExperimentConfig cfg = load_config(doc, doc.dump(2));
    cfg.preset = o.preset;
    const Table table = run_command(cfg);
    if (cfg.output.empty()) {
      write_csv(std::cout, table, cfg);
    } else {
      write_csv_file(cfg.output, table, cfg);
      if (o.gnuplot) {
        const std::string gp_path = cfg.output + ".gp";
        std::ofstream gp(gp_path);
        if (!gp) throw IoError("cannot open '" + gp_path + "'");
        gp << gnuplot_script(table, cfg, cfg.output);
      }
    }
    if (o.gnuplot && cfg.output.empty()) std::cerr << "note: --gnuplot needs --out\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "numeric domain error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field beamfocusing for uniform rectangular arrays"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Options o;
  Command chosen = Command::beamdepth;

  auto add_common = [&](CLI::App* sub, Command cmd) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--preset", o.preset, "figure preset")
        ->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6", "fig7"}));
    sub->add_option("--out", o.out, "CSV output path (default: stdout)");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::NonNegativeNumber);
    sub->add_flag("--gnuplot", o.gnuplot, "also write <out>.gp");
    sub->callback([&, cmd] { chosen = cmd; });
  };
  auto add_geometry = [&](CLI::App* sub) {
    sub->add_option("--n1", o.n1, "elements along y")->check(CLI::PositiveNumber);
    sub->add_option("--n2", o.n2, "elements along z")->check(CLI::PositiveNumber);
    sub->add_option("--carrier", o.carrier_hz, "carrier frequency [Hz]");
    sub->add_option("--phi", o.phi_deg, "azimuth [deg]");
    sub->add_option("--theta", o.theta_deg, "elevation from the z-axis [deg]");
  };

  auto* bd = app.add_subcommand("beamdepth", "3 dB beamdepth sweep");
  add_common(bd, Command::beamdepth);
  add_geometry(bd);
  bd->add_option("--rf", o.rf_m, "focus range [m]");
  bd->add_option("--rf-fraction", o.rf_fraction, "focus range as a fraction of R_D");

  auto* eb = app.add_subcommand("ebrd", "effective beamfocusing Rayleigh distance");
  add_common(eb, Command::ebrd);
  eb->add_option("--carrier", o.carrier_hz, "carrier frequency [Hz]");
  eb->add_option("--phi", o.phi_deg, "azimuth [deg]");
  eb->add_option("--theta", o.theta_deg, "elevation from the z-axis [deg]");

  auto* es = app.add_subcommand("eta-sweep", "beamdepth and R_D across aspect ratios");
  add_common(es, Command::eta_sweep);
  es->add_option("--carrier", o.carrier_hz, "carrier frequency [Hz]");
  es->add_option("--phi", o.phi_deg, "azimuth [deg]");
  es->add_option("--theta", o.theta_deg, "elevation from the z-axis [deg]");

  auto* gp = app.add_subcommand("gain-profile", "exact vs Fresnel gain along range");
  add_common(gp, Command::gain_profile);
  add_geometry(gp);
  gp->add_option("--rf", o.rf_m, "focus range [m]");
  gp->add_option("--rf-fraction", o.rf_fraction, "focus range as a fraction of R_D");
  gp->add_option("--points", o.z_points, "range samples")->check(CLI::Range(2, 10'000'000));

  auto* sr = app.add_subcommand("sumrate", "multiuser spectral efficiency vs SNR");
  add_common(sr, Command::sumrate);
  sr->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return execute(o, chosen);
}

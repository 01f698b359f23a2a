#include "nearfocus/experiment.hpp"

#include "nearfocus/channel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace nearfocus {

using nlohmann::json;

std::string_view to_string(Command command) {
  switch (command) {
    case Command::beamdepth: return "beamdepth";
    case Command::ebrd: return "ebrd";
    case Command::eta_sweep: return "eta-sweep";
    case Command::gain_profile: return "gain-profile";
    case Command::sumrate: return "sumrate";
  }
  return "";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::beamdepth, Command::ebrd, Command::eta_sweep, Command::gain_profile,
                 Command::sumrate}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::vector<double> kFig5Etas{1.0, 4.0, 16.0, 0.016, 0.004};

// Walks a JSON document while remembering where each key sits in the source text.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string where;
    for (const auto& p : path) where += (where.empty() ? "" : ".") + p;
    std::string prefix = "config";
    if (const int line = line_of(path); line > 0) prefix += " line " + std::to_string(line);
    if (!where.empty()) prefix += " '" + where + "'";
    throw ConfigError(prefix + ": " + msg);
  }

  void only_keys(const json& obj, const std::set<std::string>& allowed,
                 const std::vector<std::string>& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.contains(key)) {
        auto p = path;
        p.push_back(key);
        fail(p, "unknown key");
      }
    }
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  double positive(const json& v, const std::vector<std::string>& path) const {
    const double x = number(v, path);
    if (!(x > 0.0)) fail(path, "must be positive");
    return x;
  }

  int integer(const json& v, const std::vector<std::string>& path, int min_value) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value || x > 1'000'000'000) {
      fail(path, "must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<int>(x);
  }

  /// number | [numbers] | {"start", "stop", "step"} (stop inclusive)
  std::vector<double> grid(const json& v, const std::vector<std::string>& path) const {
    if (v.is_number()) return {number(v, path)};
    if (v.is_array()) {
      if (v.empty()) fail(path, "must not be empty");
      std::vector<double> out;
      for (const auto& e : v) out.push_back(number(e, path));
      return out;
    }
    if (v.is_object()) {
      only_keys(v, {"start", "stop", "step"}, path);
      for (const char* k : {"start", "stop", "step"}) {
        if (!v.contains(k)) fail(path, std::string("range needs '") + k + "'");
      }
      const double start = number(v["start"], path);
      const double stop = number(v["stop"], path);
      const double step = number(v["step"], path);
      if (!(step > 0.0) || stop < start) fail(path, "range needs step > 0 and stop >= start");
      const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
      if (count > 1'000'000) fail(path, "range has too many points");
      std::vector<double> out;
      for (long long i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
      return out;
    }
    fail(path, "expected a number, a list or a {start, stop, step} range");
  }

 private:
  int line_of(const std::vector<std::string>& path) const {
    if (text_.empty() || path.empty()) return 0;
    std::size_t pos = 0;
    for (const auto& key : path) {
      const auto found = text_.find("\"" + key + "\"", pos);
      if (found == std::string_view::npos) break;
      pos = found;
    }
    if (pos == 0 && text_.find("\"" + path.front() + "\"") != 0) {
      if (text_.find("\"" + path.front() + "\"") == std::string_view::npos) return 0;
    }
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + pos, '\n'));
  }

  std::string_view text_;
};

using Path = std::vector<std::string>;

ArraySpec read_array(const Reader& rd, const json& v, const Path& path) {
  rd.only_keys(v, {"n1", "n2", "carrier_hz", "spacing_factor"}, path);
  ArraySpec a;
  if (!v.contains("n1") || !v.contains("n2")) rd.fail(path, "array needs 'n1' and 'n2'");
  a.n1 = rd.integer(v["n1"], {path[0], "n1"}, 1);
  a.n2 = rd.integer(v["n2"], {path[0], "n2"}, 1);
  if (v.contains("carrier_hz")) a.carrier_hz = rd.positive(v["carrier_hz"], {path[0], "carrier_hz"});
  if (v.contains("spacing_factor")) {
    a.spacing_factor = rd.positive(v["spacing_factor"], {path[0], "spacing_factor"});
  }
  return a;
}

std::vector<double> read_angles(const Reader& rd, const json& doc, const char* key,
                                std::vector<double> fallback_rad, bool azimuth) {
  if (!doc.contains(key)) return fallback_rad;
  std::vector<double> out;
  for (const double deg : rd.grid(doc[key], {key})) {
    if (azimuth && !(deg >= -90.0 && deg <= 90.0)) rd.fail({key}, "azimuth must lie in [-90, 90] deg");
    if (!azimuth && !(deg > 0.0 && deg < 180.0)) {
      rd.fail({key}, "elevation (from the z-axis) must lie in (0, 180) deg");
    }
    // keep ±90 exact in radians
    out.push_back(deg == 90.0 ? std::numbers::pi / 2.0
                  : deg == -90.0 ? -std::numbers::pi / 2.0
                                 : deg * kDeg);
  }
  return out;
}

Ura checked_ura(const Reader& rd, const ArraySpec& a, const Path& path) {
  try {
    return a.build();
  } catch (const DomainError& e) {
    rd.fail(path, e.what());
  }
}

}  // namespace

ExperimentConfig load_config(const json& doc_in, std::string_view source_text) {
  const Reader rd(source_text);
  if (!doc_in.is_object()) rd.fail({}, "top level must be an object");
  if (!doc_in.contains("command") || !doc_in["command"].is_string()) {
    rd.fail({"command"}, "missing string 'command'");
  }
  const auto command = parse_command(doc_in["command"].get<std::string>());
  if (!command) rd.fail({"command"}, "unknown command '" + doc_in["command"].get<std::string>() + "'");

  ExperimentConfig cfg;
  cfg.command = *command;
  const json& doc = doc_in;

  std::set<std::string> allowed{"command", "output", "phi_deg", "theta_deg"};
  switch (cfg.command) {
    case Command::beamdepth: allowed.insert({"array", "rf_m", "rf_rayleigh_fraction"}); break;
    case Command::gain_profile:
      allowed.insert({"array", "rf_m", "rf_rayleigh_fraction", "z"});
      break;
    case Command::ebrd: allowed.insert({"n_bs", "carrier_hz", "etas"}); break;
    case Command::eta_sweep: allowed.insert({"n_bs", "carrier_hz", "etas", "focus"}); break;
    case Command::sumrate:
      allowed.insert({"curves", "users", "region", "snr_db", "trials", "seed", "n_rf", "rings",
                      "threads"});
      break;
  }
  rd.only_keys(doc, allowed, {});

  if (doc.contains("output")) {
    if (!doc["output"].is_string()) rd.fail({"output"}, "expected a path string");
    cfg.output = doc["output"].get<std::string>();
  }
  cfg.phi_rad = read_angles(rd, doc, "phi_deg", cfg.phi_rad, true);
  cfg.theta_rad = read_angles(rd, doc, "theta_deg", cfg.theta_rad, false);

  if (doc.contains("array")) cfg.array = read_array(rd, doc["array"], {"array"});
  if (doc.contains("carrier_hz")) cfg.array.carrier_hz = rd.positive(doc["carrier_hz"], {"carrier_hz"});

  switch (cfg.command) {
    case Command::beamdepth:
    case Command::gain_profile: {
      const Ura ura = checked_ura(rd, cfg.array, {"array"});
      if (doc.contains("rf_m")) {
        for (const double r : rd.grid(doc["rf_m"], {"rf_m"})) {
          if (!(r >= ura.near_field_min())) {
            rd.fail({"rf_m"}, "focus range " + format_number(r) + " m is below 1.2D = " +
                                  format_number(ura.near_field_min()) + " m");
          }
          cfg.rf_m.push_back(r);
        }
      }
      if (doc.contains("rf_rayleigh_fraction")) {
        for (const double f : rd.grid(doc["rf_rayleigh_fraction"], {"rf_rayleigh_fraction"})) {
          if (!(f * ura.rayleigh_distance() >= ura.near_field_min())) {
            rd.fail({"rf_rayleigh_fraction"}, "fraction " + format_number(f) +
                                                  " puts the focus below 1.2D");
          }
          cfg.rf_rayleigh_fraction.push_back(f);
        }
      }
      if (cfg.rf_m.empty() && cfg.rf_rayleigh_fraction.empty()) {
        rd.fail({"rf_m"}, "a focus range ('rf_m' or 'rf_rayleigh_fraction') is required");
      }
      if (cfg.command == Command::gain_profile) {
        if (cfg.rf_m.size() + cfg.rf_rayleigh_fraction.size() != 1 || cfg.phi_rad.size() != 1 ||
            cfg.theta_rad.size() != 1) {
          rd.fail({"rf_m"}, "gain-profile takes exactly one focus point");
        }
        if (doc.contains("z")) {
          const json& z = doc["z"];
          rd.only_keys(z, {"min_m", "max_m", "points", "spacing"}, {"z"});
          if (z.contains("min_m")) cfg.z_min_m = rd.positive(z["min_m"], {"z", "min_m"});
          if (z.contains("max_m")) cfg.z_max_m = rd.positive(z["max_m"], {"z", "max_m"});
          if (z.contains("points")) cfg.z_points = rd.integer(z["points"], {"z", "points"}, 2);
          if (z.contains("spacing")) {
            const auto s = z["spacing"].is_string() ? z["spacing"].get<std::string>() : "";
            if (s != "log" && s != "linear") rd.fail({"z", "spacing"}, "expected 'log' or 'linear'");
            cfg.z_log = s == "log";
          }
        }
        const double lo = cfg.z_min_m.value_or(ura.near_field_min());
        const double hi = cfg.z_max_m.value_or(10.0 * ura.rayleigh_distance());
        if (!(hi > lo)) rd.fail({"z"}, "need max_m > min_m");
      }
      break;
    }
    case Command::ebrd:
    case Command::eta_sweep: {
      if (doc.contains("n_bs")) cfg.n_bs = rd.integer(doc["n_bs"], {"n_bs"}, 1);
      if (doc.contains("etas")) {
        for (const double e : rd.grid(doc["etas"], {"etas"})) {
          if (!(e > 0.0)) rd.fail({"etas"}, "eta values must be positive");
          cfg.etas.push_back(e);
        }
      } else {
        cfg.etas = cfg.command == Command::ebrd ? kFig5Etas : default_eta_grid();
      }
      if (cfg.command == Command::eta_sweep) {
        if (cfg.phi_rad.size() != 1 || cfg.theta_rad.size() != 1) {
          rd.fail({"phi_deg"}, "eta-sweep takes a single direction");
        }
        if (doc.contains("focus")) {
          const json& f = doc["focus"];
          rd.only_keys(f, {"rf_m", "rayleigh_fraction"}, {"focus"});
          if (f.contains("rf_m") == f.contains("rayleigh_fraction")) {
            rd.fail({"focus"}, "give exactly one of 'rf_m' or 'rayleigh_fraction'");
          }
          cfg.focus = f.contains("rf_m")
                          ? FocusSpec{FocusAbsolute{rd.positive(f["rf_m"], {"focus", "rf_m"})}}
                          : FocusSpec{FocusRayleighFraction{
                                rd.positive(f["rayleigh_fraction"], {"focus", "rayleigh_fraction"})}};
        }
        for (const double e : cfg.etas) {
          const auto [n1, n2] = factor_pair(cfg.n_bs, e);
          const Ura ura = checked_ura(rd, {n1, n2, cfg.array.carrier_hz, 0.5}, {"etas"});
          const double r = std::holds_alternative<FocusAbsolute>(cfg.focus)
                               ? std::get<FocusAbsolute>(cfg.focus).meters
                               : std::get<FocusRayleighFraction>(cfg.focus).fraction *
                                     ura.rayleigh_distance();
          if (!(r >= ura.near_field_min())) {
            rd.fail({"focus"}, "focus " + format_number(r) + " m is below 1.2D for eta = " +
                                   format_number(e) + " (" + std::to_string(n1) + "x" +
                                   std::to_string(n2) + ")");
          }
        }
      }
      break;
    }
    case Command::sumrate: {
      if (!doc.contains("curves") || !doc["curves"].is_array() || doc["curves"].empty()) {
        rd.fail({"curves"}, "sumrate needs a non-empty 'curves' list");
      }
      for (const auto& c : doc["curves"]) {
        rd.only_keys(c, {"array", "codebook"}, {"curves"});
        if (!c.contains("array")) rd.fail({"curves"}, "each curve needs an 'array'");
        SumRateCurve curve;
        curve.array = read_array(rd, c["array"], {"curves", "array"});
        checked_ura(rd, curve.array, {"curves", "array"});
        if (c.contains("codebook")) {
          const auto k = c["codebook"].is_string() ? c["codebook"].get<std::string>() : "";
          if (k != "polar" && k != "dft") rd.fail({"curves", "codebook"}, "expected 'polar' or 'dft'");
          curve.codebook = k == "polar" ? CodebookKind::polar : CodebookKind::dft;
        }
        cfg.curves.push_back(curve);
      }
      if (doc.contains("users")) cfg.users = rd.integer(doc["users"], {"users"}, 1);
      if (doc.contains("trials")) cfg.trials = rd.integer(doc["trials"], {"trials"}, 0);
      if (doc.contains("n_rf")) cfg.n_rf = rd.integer(doc["n_rf"], {"n_rf"}, 1);
      if (doc.contains("rings")) cfg.rings = rd.integer(doc["rings"], {"rings"}, 1);
      if (doc.contains("threads")) cfg.threads = rd.integer(doc["threads"], {"threads"}, 1);
      if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() &&
                                                  doc["seed"].get<long long>() >= 0)) {
          rd.fail({"seed"}, "expected a non-negative integer");
        }
        cfg.seed = doc["seed"].get<std::uint64_t>();
      }
      if (!doc.contains("snr_db")) rd.fail({"snr_db"}, "sumrate needs an 'snr_db' grid");
      cfg.snr_db = rd.grid(doc["snr_db"], {"snr_db"});
      if (cfg.phi_rad.size() != 1 || cfg.theta_rad.size() != 1) {
        rd.fail({"phi_deg"}, "sumrate takes a single user direction");
      }
      if (doc.contains("region")) {
        const json& r = doc["region"];
        if (r.is_string()) {
          const auto s = r.get<std::string>();
          if (s == "ebrd") cfg.region.kind = RegionKind::ebrd;
          else if (s == "extended") cfg.region.kind = RegionKind::extended;
          else if (s == "far-field") cfg.region.kind = RegionKind::far_field;
          else rd.fail({"region"}, "expected 'ebrd', 'extended', 'far-field' or {min_m, max_m}");
        } else {
          rd.only_keys(r, {"min_m", "max_m"}, {"region"});
          if (!r.contains("min_m") || !r.contains("max_m")) rd.fail({"region"}, "needs min_m and max_m");
          cfg.region = {RegionKind::custom, rd.positive(r["min_m"], {"region", "min_m"}),
                        rd.positive(r["max_m"], {"region", "max_m"})};
        }
      }
      const Dir dir(cfg.phi_rad[0], cfg.theta_rad[0]);
      for (const auto& curve : cfg.curves) {
        const Ura ura = curve.array.build();
        const auto [lo, hi] = region_bounds(ura, cfg.region, dir);
        if (!(lo > 0.0 && hi > lo)) {
          rd.fail({"region"}, "empty user region for the " + std::to_string(curve.array.n1) + "x" +
                                  std::to_string(curve.array.n2) + " array");
        }
        if (curve.codebook == CodebookKind::dft && cfg.users > ura.size()) {
          rd.fail({"users"}, "more users than DFT codewords");
        }
      }
      break;
    }
  }

  cfg.canonical = doc;
  cfg.canonical.erase("output");
  return cfg;
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return load_config(doc, text);
}

ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json preset_document(std::string_view name) {
  if (name == "fig3") {
    return {{"command", "beamdepth"},
            {"array", {{"n1", 16}, {"n2", 16}, {"carrier_hz", 28e9}}},
            {"phi_deg", {{"start", 0}, {"stop", 80}, {"step", 5}}},
            {"theta_deg", {90}},
            {"rf_m", {0.16, 0.2, 0.25}}};
  }
  if (name == "fig4") {
    return {{"command", "eta-sweep"},
            {"n_bs", 4096},
            {"carrier_hz", 28e9},
            {"phi_deg", 0},
            {"theta_deg", 90},
            {"focus", {{"rayleigh_fraction", 0.02}}}};
  }
  if (name == "fig5") {
    return {{"command", "ebrd"},
            {"n_bs", 4096},
            {"carrier_hz", 28e9},
            {"etas", kFig5Etas},
            {"phi_deg", {{"start", -85}, {"stop", 85}, {"step", 5}}},
            {"theta_deg", {90, 60}}};
  }
  const json snr = {{"start", -40}, {"stop", -10}, {"step", 5}};
  if (name == "fig6") {
    const json array = {{"n1", 64}, {"n2", 8}, {"carrier_hz", 28e9}};
    return {{"command", "sumrate"},
            {"curves", {{{"array", array}, {"codebook", "polar"}}, {{"array", array}, {"codebook", "dft"}}}},
            {"users", 5},
            {"region", "ebrd"},
            {"snr_db", snr},
            {"trials", 200},
            {"seed", 1},
            {"n_rf", 4},
            {"rings", 8}};
  }
  if (name == "fig7") {
    // common user region: from 1.2D of the larger aperture out to the wide array's EBRD
    const Ura square(32, 32, 28e9);
    const Ura wide(128, 8, 28e9);
    const double lo = std::max(square.near_field_min(), wide.near_field_min());
    const double hi = ebrd(wide, Dir::boresight()).ebrd_m;
    return {{"command", "sumrate"},
            {"curves",
             {{{"array", {{"n1", 32}, {"n2", 32}, {"carrier_hz", 28e9}}}, {"codebook", "polar"}},
              {{"array", {{"n1", 128}, {"n2", 8}, {"carrier_hz", 28e9}}}, {"codebook", "polar"}}}},
            {"users", 6},
            {"region", {{"min_m", lo}, {"max_m", hi}}},
            {"snr_db", snr},
            {"trials", 200},
            {"seed", 1},
            {"n_rf", 4},
            {"rings", 8}};
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig3..fig7)");
}

ExperimentConfig preset_config(std::string_view name) {
  const json doc = preset_document(name);
  ExperimentConfig cfg = load_config(doc, doc.dump(2));
  cfg.preset = std::string(name);
  return cfg;
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_extent(const Extent& value) {
  return value.is_finite() ? format_number(value.meters()) : "inf";
}

namespace {

std::vector<double> focus_ranges(const ExperimentConfig& cfg, const Ura& ura) {
  std::vector<double> out = cfg.rf_m;
  for (const double f : cfg.rf_rayleigh_fraction) out.push_back(f * ura.rayleigh_distance());
  return out;
}

}  // namespace

Table cmd_beamdepth(const ExperimentConfig& cfg) {
  if (cfg.command == Command::eta_sweep) return cmd_eta_sweep(cfg);
  const Ura ura = cfg.array.build();
  Table t{{"phi_rad", "theta_rad", "rf_m", "bd_m", "rf_min_m", "rf_max_m", "alpha_3db"}, {}};
  for (const double theta : cfg.theta_rad) {
    for (const double phi : cfg.phi_rad) {
      const Dir dir(phi, theta);
      for (const double rf : focus_ranges(cfg, ura)) {
        const BeamdepthResult bd = beamdepth(ura, dir, rf);
        t.rows.push_back({format_number(phi), format_number(theta), format_number(rf),
                          format_extent(bd.bd), format_number(bd.rf_min_m),
                          format_extent(bd.rf_max), format_number(bd.alpha_3db)});
      }
    }
  }
  return t;
}

Table cmd_ebrd(const ExperimentConfig& cfg) {
  Table t{{"eta", "phi_rad", "theta_rad", "ebrd_m"}, {}};
  for (const double eta : cfg.etas) {
    const auto [n1, n2] = factor_pair(cfg.n_bs, eta);
    const Ura ura(n1, n2, cfg.array.carrier_hz);
    for (const double theta : cfg.theta_rad) {
      for (const double phi : cfg.phi_rad) {
        const EbrdResult e = ebrd(ura, Dir(phi, theta));
        t.rows.push_back({format_number(eta), format_number(phi), format_number(theta),
                          format_number(e.ebrd_m)});
      }
    }
  }
  return t;
}

Table cmd_eta_sweep(const ExperimentConfig& cfg) {
  const Dir dir(cfg.phi_rad.at(0), cfg.theta_rad.at(0));
  Table t{{"eta", "n1", "n2", "rayleigh_m", "alpha_3db", "combined_factor", "rf_m", "bd_m",
           "ebrd_m"},
          {}};
  for (const auto& row : eta_sweep(cfg.n_bs, cfg.array.carrier_hz, dir, cfg.focus, cfg.etas)) {
    t.rows.push_back({format_number(row.eta_requested), std::to_string(row.n1),
                      std::to_string(row.n2), format_number(row.rayleigh_m),
                      format_number(row.alpha_3db), format_number(row.combined_factor),
                      format_number(row.rf_m), format_extent(row.beamdepth.bd),
                      format_number(row.ebrd_m)});
  }
  return t;
}

Table cmd_gain_profile(const ExperimentConfig& cfg) {
  const Ura ura = cfg.array.build();
  const Dir dir(cfg.phi_rad.at(0), cfg.theta_rad.at(0));
  const double rf = focus_ranges(cfg, ura).at(0);
  const double lo = cfg.z_min_m.value_or(ura.near_field_min());
  const double hi = cfg.z_max_m.value_or(10.0 * ura.rayleigh_distance());

  std::vector<double> zs(cfg.z_points);
  for (int i = 0; i < cfg.z_points; ++i) {
    const double s = static_cast<double>(i) / (cfg.z_points - 1);
    zs[i] = cfg.z_log ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo);
  }
  if (rf >= lo && rf <= hi) {
    zs.insert(std::lower_bound(zs.begin(), zs.end(), rf), rf);
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  }

  const Point focus(dir, rf);
  const CVector w = steering_vector(ura, focus);
  Table t{{"z_m", "gain_exact", "gain_fresnel"}, {}};
  for (const double z : zs) {
    const double exact = std::norm(w.dot(steering_vector(ura, Point(dir, z))));
    t.rows.push_back({format_number(z), format_number(exact),
                      format_number(array_gain_fresnel(ura, dir, rf, z))});
  }
  return t;
}

Table cmd_sumrate(const ExperimentConfig& cfg) {
  Table t{{"snr_db", "codebook", "eta", "mean_sum_rate_bps_hz", "ci95_low", "ci95_high", "trials",
           "seed"},
          {}};
  for (const auto& curve : cfg.curves) {
    SumRateExperiment ex;
    ex.array = curve.array;
    ex.codebook = curve.codebook;
    ex.users = cfg.users;
    ex.region = cfg.region;
    ex.user_direction = Dir(cfg.phi_rad.at(0), cfg.theta_rad.at(0));
    ex.snr_db = cfg.snr_db;
    ex.trials = cfg.trials;
    ex.seed = cfg.seed;
    ex.n_rf = cfg.n_rf;
    ex.rings = cfg.rings;
    ex.threads = cfg.threads;
    const auto records = run_monte_carlo(ex);
    if (records.empty()) continue;
    for (const auto& s : summarize(records, cfg.snr_db)) {
      t.rows.push_back({format_number(s.snr_db), std::string(to_string(curve.codebook)),
                        format_number(static_cast<double>(curve.array.n1) / curve.array.n2),
                        format_number(s.mean), format_number(s.ci95_low),
                        format_number(s.ci95_high), std::to_string(s.trials),
                        std::to_string(cfg.seed)});
    }
  }
  return t;
}

Table run_command(const ExperimentConfig& cfg) {
  switch (cfg.command) {
    case Command::beamdepth: return cmd_beamdepth(cfg);
    case Command::ebrd: return cmd_ebrd(cfg);
    case Command::eta_sweep: return cmd_eta_sweep(cfg);
    case Command::gain_profile: return cmd_gain_profile(cfg);
    case Command::sumrate: return cmd_sumrate(cfg);
  }
  return {};
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : cfg.canonical.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_csv(std::ostream& os, const Table& table, const ExperimentConfig& cfg) {
  os << "# nearfocus " << kToolVersion << '\n';
  os << "# command: " << to_string(cfg.command) << '\n';
  if (!cfg.preset.empty()) os << "# preset: " << cfg.preset << '\n';
  os << "# config_hash: " << config_hash(cfg) << '\n';
  if (cfg.command == Command::sumrate) os << "# seed: " << cfg.seed << '\n';
  if (cfg.command == Command::ebrd || cfg.command == Command::eta_sweep) {
    for (const double eta : cfg.etas) {
      const auto [n1, n2] = factor_pair(cfg.n_bs, eta);
      os << "# eta " << format_number(eta) << " -> " << n1 << "x" << n2 << '\n';
    }
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

void write_csv_file(const std::string& path, const Table& table, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  write_csv(out, table, cfg);
  out.flush();
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

std::string gnuplot_script(const Table& table, const ExperimentConfig& cfg,
                           const std::string& csv_path) {
  std::ostringstream gp;
  gp << "# generated by nearfocus " << kToolVersion << "\n"
     << "set datafile separator ','\n"
     << "set datafile commentschars '#'\n"
     << "set key autotitle columnhead\n"
     << "set grid\n";
  const std::string f = "'" + csv_path + "'";
  switch (cfg.command) {
    case Command::beamdepth:
      gp << "set xlabel 'azimuth [rad]'\nset ylabel 'beamdepth [m]'\n"
         << "plot " << f << " using 1:4 with linespoints\n";
      break;
    case Command::ebrd:
      gp << "set xlabel 'azimuth [rad]'\nset ylabel 'EBRD [m]'\nset logscale y\n"
         << "plot " << f << " using 2:4:1 with points palette\n";
      break;
    case Command::eta_sweep:
      gp << "set xlabel 'eta'\nset logscale xy\n"
         << "plot " << f << " using 1:4 with linespoints title 'R_D [m]', \\\n     " << f
         << " using 1:8 with linespoints title 'BD [m]', \\\n     " << f
         << " using 1:6 with linespoints title 'alpha (eta^2+1)/eta'\n";
      break;
    case Command::gain_profile:
      gp << "set xlabel 'z [m]'\nset ylabel 'normalized gain'\nset logscale x\n"
         << "plot " << f << " using 1:2 with lines, " << f << " using 1:3 with lines dt 2\n";
      break;
    case Command::sumrate:
      gp << "set xlabel 'SNR [dB]'\nset ylabel 'sum rate [bps/Hz]'\n"
         << "plot " << f << " using 1:4 with linespoints\n";
      break;
  }
  (void)table;
  return gp.str();
}

}  // namespace nearfocus

#pragma once

// Experiment configuration, figure presets and CSV tables behind the command-line tool.

#include "nearfocus/focusing.hpp"
#include "nearfocus/multiuser.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nearfocus {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Invalid or unreadable configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure. Maps to exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { beamdepth, ebrd, eta_sweep, gain_profile, sumrate };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

struct SumRateCurve {
  ArraySpec array;
  CodebookKind codebook = CodebookKind::polar;
};

/// Parsed experiment. Angles are stored in radians; JSON documents carry degrees.
struct ExperimentConfig {
  Command command = Command::beamdepth;
  std::string preset;
  std::string output;

  ArraySpec array{16, 16, 28e9, 0.5};
  std::vector<double> phi_rad{0.0};
  std::vector<double> theta_rad{std::numbers::pi / 2.0};

  // beamdepth / gain-profile focus ranges: absolute, or fractions of R_D
  std::vector<double> rf_m;
  std::vector<double> rf_rayleigh_fraction;

  // ebrd / eta-sweep
  int n_bs = 4096;
  std::vector<double> etas;
  FocusSpec focus = FocusRayleighFraction{0.02};

  // gain-profile; unset bounds default to [1.2 D, 10 R_D]
  std::optional<double> z_min_m;
  std::optional<double> z_max_m;
  int z_points = 4096;
  bool z_log = true;

  // sumrate
  std::vector<SumRateCurve> curves;
  int users = 5;
  UserRegion region;
  std::vector<double> snr_db;
  int trials = 200;
  std::uint64_t seed = 1;
  int n_rf = 4;
  int rings = 8;
  int threads = 1;

  /// Normalized JSON form; its hash goes into the CSV header.
  nlohmann::json canonical;
};

/**
 * Validates a JSON document against the schema and every downstream
 * precondition. Errors are ConfigError with the offending key's line in
 * `source_text` when it can be located.
 */
ExperimentConfig load_config(const nlohmann::json& doc, std::string_view source_text = {});

/// Parses and validates JSON text.
ExperimentConfig parse_config(std::string_view text);

/// Reads a config file; unreadable files raise IoError.
ExperimentConfig read_config_file(const std::string& path);

/// fig3 | fig4 | fig5 | fig6 | fig7
nlohmann::json preset_document(std::string_view name);
ExperimentConfig preset_config(std::string_view name);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// Shortest round-trippable decimal form; "inf" for unbounded extents.
std::string format_number(double value);
std::string format_extent(const Extent& value);

Table cmd_beamdepth(const ExperimentConfig& cfg);
Table cmd_ebrd(const ExperimentConfig& cfg);
Table cmd_eta_sweep(const ExperimentConfig& cfg);
Table cmd_gain_profile(const ExperimentConfig& cfg);
Table cmd_sumrate(const ExperimentConfig& cfg);

/// Dispatches on cfg.command.
Table run_command(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// `#`-prefixed metadata lines (tool version, command, preset, config hash, seed) then the table.
void write_csv(std::ostream& os, const Table& table, const ExperimentConfig& cfg);

/// Writes to `path`, raising IoError with the path on failure.
void write_csv_file(const std::string& path, const Table& table, const ExperimentConfig& cfg);

/// gnuplot script plotting `csv_path`.
std::string gnuplot_script(const Table& table, const ExperimentConfig& cfg,
                           const std::string& csv_path);

}  // namespace nearfocus

#pragma once

// Configuration-driven runs: amplitudes -> assembly -> distillation ->
// analysis, parameter sweeps, and file emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdistill/amplitudes.hpp"
#include "wdistill/errors.hpp"
#include "wdistill/quantum_info.hpp"
#include "wdistill/wick.hpp"

namespace wdistill {

inline constexpr const char* kToolVersion = "0.1.0";

/// Fails while reading or writing an artifact; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

struct AnalysisToggles {
  bool fidelity = true;
  bool negativity = true;
  bool gme = true;
  bool svetlichny = false;
  SvetlichnyControls svetlichny_controls;
};

struct SweepGrid {
  // Dotted path into the configuration ("synthetic.kappa",
  // "detectors.2.window.stretch"), or "separation" to rescale all positions
  // so the closest pair sits at the given distance.
  std::string parameter;
  std::vector<double> values;
};

struct RunConfig {
  FieldParams field;
  QuadControls quadrature;
  std::vector<DetectorSpec> detectors;
  std::string hub;
  FilterSpec filter;
  std::optional<int> truncation;  // drop entries above this perturbative order
  bool waive_causality = false;
  bool vacuum_correction = true;
  bool balance_hub = false;  // rescale the hub window so its emission matches the largest other one
  AnalysisToggles analysis;
  std::optional<SyntheticParams> synthetic;
  std::optional<std::filesystem::path> amplitude_table;
  std::optional<SweepGrid> sweep;
  std::optional<std::filesystem::path> output_dir;  // used when the CLI gets no --out
  std::set<std::string> formats{"txt", "json", "csv"};

  nlohmann::json raw;  // normalized source, hashed and re-parsed per sweep point
  std::filesystem::path base_dir;

  std::size_t size() const;
  std::vector<std::string> labels() const;
  std::size_t hub_index() const;
  /// FNV-1a 64 of the canonical JSON without the output block, as 16 hex digits.
  std::string hash() const;
};

/// Collects every violation into one ValidationError. Relative paths are
/// resolved against base_dir.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Applies the optimizer seed override and re-normalizes the raw record.
RunConfig with_seed(const RunConfig& c, std::uint64_t seed);

enum class Stage { amplitudes, assemble, distill, analyze };

struct Bundle {
  std::string config_hash;
  AmplitudeTable table;
  double hub_scale = 1.0;  // applied by balance_hub
  std::optional<ReducedDensityMatrix> assembled;
  std::optional<DistillationResult> distillation;
  std::optional<nlohmann::json> analysis;
};

/// Wraps a failure inside a pipeline stage, keeping its kind.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner);
  const char* kind() const noexcept override { return kind_.c_str(); }
  const std::string& stage() const noexcept { return stage_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::string stage_;
  std::string kind_;
  std::vector<std::string> violations_;
};

/// Failures inside a stage surface as StageError naming the stage.
Bundle run_pipeline(const RunConfig& c, Stage upto = Stage::analyze);

nlohmann::json analyze(const RunConfig& c, const Bundle& b);

/// Negativity of the trace-normalized assembled matrix across hub|rest.
double assembled_negativity(const ReducedDensityMatrix& m, std::size_t hub);

const std::vector<std::string>& sweep_columns();

struct SweepRow {
  std::size_t index = 0;
  double value = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  nlohmann::json record;  // analysis, when ok
  std::vector<std::string> cells;  // one per sweep_columns()
};

struct SweepResult {
  std::string config_hash;
  std::string parameter;
  std::vector<SweepRow> rows;
  std::optional<nlohmann::json> decay_fit;  // separation sweeps only
};

/// Per-point seed from (master seed, point index).
std::uint64_t derive_seed(std::uint64_t master, std::size_t index);
/// The configuration of grid point k.
RunConfig sweep_point(const RunConfig& c, std::size_t k);
/// Rows are computed in grid order; a failing point is recorded in its row.
SweepResult run_sweep(const RunConfig& c);

/// Power law fit of negativity against separation over the positive rows,
/// with exp(-(L/cT)^3) alongside for comparison.
nlohmann::json fit_decay(const std::vector<double>& separation, const std::vector<double>& negativity,
                         double duration);

/// "<stage>-<hash>.<ext>"
std::string artifact_name(const std::string& stage, const std::string& hash, const std::string& ext);

inline const std::set<std::string> kAllFormats{"txt", "json", "csv"};

/// Writes every artifact of the bundle up to the given stage whose extension
/// is in `formats`, plus one metadata sidecar carrying the timestamp. Returns
/// the paths written.
std::vector<std::filesystem::path> emit_outputs(const Bundle& b, Stage upto, const std::filesystem::path& dir,
                                                const std::string& command,
                                                const std::set<std::string>& formats = kAllFormats);
std::vector<std::filesystem::path> emit_sweep(const SweepResult& s, const std::filesystem::path& dir,
                                              const std::string& command,
                                              const std::set<std::string>& formats = kAllFormats);

std::string to_csv(const SweepResult& s);

/// Machine-readable failure record for the CLI.
nlohmann::json error_report(const std::exception& e, const std::string& stage = {});

}  // namespace wdistill

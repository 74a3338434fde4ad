// wdistill: amplitudes | assemble | distill | analyze | sweep
//
// Every subcommand reads --config and writes into --out, or into
// output.directory from the configuration when --out is absent. On failure a
// JSON error report goes to stderr and to <out>/error-report.json when that
// directory exists; validation failures leave no other artifacts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wdistill/errors.hpp"
#include "wdistill/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wdistill;

namespace {

int exit_code(const std::string& kind) {
  if (kind == "validation") return 2;
  if (kind == "numerical") return 3;
  if (kind == "domain") return 4;
  if (kind == "lookup") return 5;
  if (kind == "io") return 6;
  return 1;
}

int fail(const std::exception& e, const fs::path& out, const std::string& command) {
  auto report = error_report(e);
  report["command"] = command;
  std::cerr << report.dump(1) << "\n";
  std::error_code ec;
  if (!out.empty() && fs::is_directory(out, ec)) {
    std::ofstream f(out / "error-report.json");
    f << report.dump(1) << "\n";
  }
  return exit_code(report["error"]["kind"].get<std::string>());
}

Stage stage_of(const std::string& command) {
  if (command == "amplitudes") return Stage::amplitudes;
  if (command == "assemble") return Stage::assemble;
  if (command == "distill") return Stage::distill;
  return Stage::analyze;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"W-state distillation from the Klein-Gordon vacuum"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  const char* names[] = {"amplitudes", "assemble", "distill", "analyze", "sweep"};
  const char* help[] = {"exchange amplitude table", "reduced density matrix",
                        "filtered and distilled matrices", "full analysis record",
                        "parameter sweep table"};
  for (int k = 0; k < 5; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (default: output.directory)");
    sub->add_option("--seed", seed, "override the Svetlichny optimizer seed");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg = with_seed(cfg, *seed);
    if (out_dir.empty()) {
      if (!cfg.output_dir) throw ValidationError("no output directory: pass --out or set output.directory");
      out_dir = cfg.output_dir->string();
    }
    if (command == "sweep") {
      if (!cfg.sweep) throw ValidationError("sweep needs a sweep grid in the configuration");
      const auto result = run_sweep(cfg);
      for (const auto& p : emit_sweep(result, out_dir, command, cfg.formats)) std::cout << p.string() << "\n";
      return 0;
    }
    const Stage stage = stage_of(command);
    const auto bundle = run_pipeline(cfg, stage);
    for (const auto& p : emit_outputs(bundle, stage, out_dir, command, cfg.formats)) std::cout << p.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir, command);
  }
}

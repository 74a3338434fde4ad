#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "wdistill/errors.hpp"
#include "wdistill/pipeline.hpp"

using namespace wdistill;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json synthetic(double kappa = 1e3) {
  return {{"synthetic", {{"detectors", 3}, {"exchange", 0.01}, {"kappa", kappa}, {"overlap_fraction", 0.1}}},
          {"hub", "C"},
          {"filter", {{"mode", "auto"}}}};
}

json physical() {
  auto det = [](const char* label, double x) {
    return json{{"label", label},
                {"position", {x, 0.0, 0.0}},
                {"gap", 30.0},
                {"window", {{"family", "gaussian"}, {"amplitude", 1.0}, {"duration", 1.0}, {"sigma", 0.12}}}};
  };
  return {{"detectors", {det("A", -1.5), det("B", 1.5)}}, {"hub", "B"}};
}

std::vector<std::string> violations_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& what) {
  for (const auto& s : v) {
    if (s.find(what) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("wdistill-test-" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("configuration validation collects every violation") {
  auto j = synthetic();
  j.erase("hub");
  j["colour"] = "blue";
  j["truncation"] = -1;
  const auto v = violations_of(j);
  CHECK(mentions(v, "hub label is required"));
  CHECK(mentions(v, "unknown configuration key 'colour'"));
  CHECK(mentions(v, "truncation must be >= 0"));

  auto both = synthetic();
  both["detectors"] = physical()["detectors"];
  CHECK(mentions(violations_of(both), "exactly one of"));

  auto empty = synthetic();
  empty["sweep"] = {{"parameter", "synthetic.kappa"}, {"values", json::array()}};
  CHECK(mentions(violations_of(empty), "sweep grid is empty"));

  CHECK_THROWS_AS(parse_config(json{{"hub", "Z"}, {"synthetic", synthetic()["synthetic"]}}), ValidationError);
}

TEST_CASE("causality is enforced unless waived") {
  auto j = physical();
  j["detectors"][0]["position"] = {-0.4, 0.0, 0.0};
  j["detectors"][1]["position"] = {0.4, 0.0, 0.0};
  CHECK(mentions(violations_of(j), "causally connected"));
  j["waive_causality"] = true;
  CHECK(violations_of(j).empty());
}

TEST_CASE("infinite kappa is accepted as a string") {
  auto j = synthetic();
  j["synthetic"]["kappa"] = "inf";
  const auto c = parse_config(j);
  REQUIRE(c.synthetic);
  CHECK(std::isinf(c.synthetic->kappa));
}

TEST_CASE("hash is deterministic and sensitive to content") {
  const auto a = parse_config(synthetic());
  const auto b = parse_config(synthetic());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(parse_config(synthetic(1e4)).hash() != a.hash());
  CHECK(with_seed(a, 99).hash() != a.hash());
  CHECK(with_seed(a, 99).analysis.svetlichny_controls.seed == 99);
}

TEST_CASE("the synthetic hub-only limit distills the target exactly") {
  auto j = synthetic();
  j["synthetic"]["kappa"] = "inf";
  const auto b = run_pipeline(parse_config(j));
  REQUIRE(b.analysis);
  CHECK((*b.analysis)["fidelity"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stages stop where asked") {
  const auto c = parse_config(synthetic());
  const auto amp = run_pipeline(c, Stage::amplitudes);
  CHECK_FALSE(amp.assembled);
  const auto as = run_pipeline(c, Stage::assemble);
  CHECK(as.assembled);
  CHECK_FALSE(as.distillation);
  const auto full = run_pipeline(c, Stage::analyze);
  CHECK(full.analysis);
}

TEST_CASE("outputs are byte-identical across runs apart from the sidecar") {
  const auto c = parse_config(synthetic());
  const auto d1 = scratch("emit1");
  const auto d2 = scratch("emit2");
  const auto f1 = emit_outputs(run_pipeline(c), Stage::analyze, d1, "analyze");
  const auto f2 = emit_outputs(run_pipeline(c), Stage::analyze, d2, "analyze");
  REQUIRE(f1.size() == f2.size());
  CHECK(f1.size() == 6);
  for (std::size_t k = 0; k < f1.size(); ++k) {
    CHECK(f1[k].filename() == f2[k].filename());
    CHECK(f1[k].filename().string().find(c.hash()) != std::string::npos);
    if (f1[k].filename().string().find(".meta.") != std::string::npos) continue;
    CHECK(slurp(f1[k]) == slurp(f2[k]));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("output block: directory, formats, and no effect on the hash") {
  auto j = synthetic();
  j["output"] = {{"directory", "runs"}, {"formats", {"json"}}};
  const auto c = parse_config(j, "/base");
  REQUIRE(c.output_dir);
  CHECK(*c.output_dir == fs::path("/base/runs"));
  CHECK(c.hash() == parse_config(synthetic()).hash());

  const auto d = scratch("formats");
  const auto files = emit_outputs(run_pipeline(c), Stage::analyze, d, "analyze", c.formats);
  for (const auto& f : files) CHECK(f.extension() == ".json");
  CHECK(files.size() == 5);
  fs::remove_all(d);

  j["output"] = {{"formats", {"xml"}}, {"colour", 1}};
  const auto v = violations_of(j);
  CHECK(mentions(v, "'xml' is not one of"));
  CHECK(mentions(v, "'output.colour'"));
}

TEST_CASE("sweep rows are complete and failures stay in their row") {
  auto j = synthetic();
  j["sweep"] = {{"parameter", "synthetic.kappa"}, {"values", {10.0, 1e3}}};
  const auto s = run_sweep(parse_config(j));
  REQUIRE(s.rows.size() == 2);
  for (const auto& r : s.rows) {
    CHECK(r.ok);
    CHECK(r.cells.size() == sweep_columns().size());
  }
  CHECK(s.rows[0].seed != s.rows[1].seed);

  // A negative overlap fraction is rejected when the table is built; the
  // failure is recorded and the next point still runs.
  j["sweep"] = {{"parameter", "synthetic.overlap_fraction"}, {"values", {-1.0, 0.1}}};
  const auto bad = run_sweep(parse_config(j));
  REQUIRE(bad.rows.size() == 2);
  CHECK_FALSE(bad.rows[0].ok);
  CHECK_FALSE(bad.rows[0].error.empty());
  CHECK(bad.rows[1].ok);

  const auto csv = to_csv(s);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("geometric sweep ranges") {
  auto j = synthetic();
  j["sweep"] = {{"parameter", "synthetic.kappa"}, {"geometric", {{"start", 10.0}, {"stop", 1e4}, {"count", 4}}}};
  const auto c = parse_config(j);
  REQUIRE(c.sweep);
  REQUIRE(c.sweep->values.size() == 4);
  CHECK(c.sweep->values[1] == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(sweep_point(c, 3).synthetic->kappa == doctest::Approx(1e4).epsilon(1e-12));
}

TEST_CASE("decay fit recovers a power law") {
  std::vector<double> L{1.0, 2.0, 4.0}, n{1.0, 0.25, 0.0625};
  const auto f = fit_decay(L, n, 1.0);
  CHECK(f["exponent"].get<double>() == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f["monotone_nonincreasing"].get<bool>());
}

TEST_CASE("error reports carry kind, stage and violations") {
  try {
    parse_config(json{{"colour", 1}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const auto r = error_report(e);
    CHECK(r["error"]["kind"] == "validation");
    CHECK(r["error"]["violations"].size() >= 2);
  }
  const NumericalError ne("did not settle", 3e-9);
  const auto r = error_report(StageError("amplitudes", ne));
  CHECK(r["error"]["kind"] == "numerical");
  CHECK(r["error"]["stage"] == "amplitudes");
}

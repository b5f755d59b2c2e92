#pragma once

#include "nlvn/evolution.hpp"
#include "nlvn/oracle.hpp"
#include "nlvn/seed.hpp"
#include "nlvn/series.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nlvn {

struct GridSpec {
  double start = 0.0;
  double end = 5.0;
  std::size_t steps = 201;
};

// Bipartite structure for subsystem reporting: the state lives on
// C^{d1} (x) C^{d2} with row index i1 * d2 + i2.
struct TensorSplit {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  CMatrix H1;
  CMatrix H2;
};

// A complete, runnable problem description. Builtins carry the published
// data sets; files supply either explicit matrices or the equally-spaced
// three-level family via its (k, m, a, b) parameters.
struct ScenarioSpec {
  std::string name;
  CMatrix H;   // physical Hamiltonian
  CMatrix U0;  // initial state (possibly non-normalized)
  cplx mu;     // spectral parameter of the dressing (engine value)
  double a = 0.0;
  SeedSelection selection;
  cplx A{1, 0}, B{0, 0};
  std::vector<CVector> basis_hint; // optional pinned eigenbasis convention
  RhsKind kind = RhsKind::quadratic;
  double eps = 0.0;          // linear_plus_quadratic strength
  double omega = 1.0;        // level spacing unit for the eps-variant engine
  double lambda_gauge = 0.0; // nonzero: report through the gauge map
  bool normalize = false;    // homogeneous kind: divide output by Tr U0
  std::optional<TensorSplit> tensor;
  GridSpec grid;
  // Extra dressings stacked on the closed form; iteration j uses the
  // spectral parameter (j+1) * mu.
  std::size_t iterations = 0;
};

// The six shipped data sets: ex51..ex56.
std::vector<ScenarioSpec> builtin_scenarios();
ScenarioSpec builtin_scenario(const std::string& name);

struct ValidationIssue {
  std::string rule;   // stable machine-readable rule name
  std::string detail; // human explanation
};

// Non-throwing check; empty result means the spec is runnable.
std::vector<ValidationIssue> validate_spec(const ScenarioSpec& spec);
// Throws std::invalid_argument listing the violated rule names.
void require_valid(const ScenarioSpec& spec);

// JSON round trip. load_scenario reports syntax errors with a line/column
// position and schema or rule violations with their names.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario_text(const std::string& text);
std::string serialize_scenario(const ScenarioSpec& spec);

enum class RunMode { evolve, verify, subsystem };

struct RunControls {
  double fd_step = 1e-4;  // half-width of the local derivative stencil
  double rk4_step = 1e-3; // integrator base substep
};

// Fixed pass/fail thresholds applied in verify mode.
struct VerifyGates {
  double ode = 1e-5;
  double rk4 = 1e-6;
  double hermiticity = 1e-10;
  double spectrum = 1e-7;
  double trace = 1e-10; // scaled by (1 + |Tr U0|)
};

struct RunOutput {
  ScenarioSpec spec;
  RunMode mode = RunMode::evolve;
  TimeSeries series;
  std::optional<ResidualReport> residuals; // verify and subsystem modes
  double rk4_deviation = 0.0;
  std::optional<SubsystemReport> subsystem;
  std::string provenance; // hash of the spec, mode, and controls
  bool gates_pass = true;
  RunControls controls;
};

// Builds the evolution context the closed form runs in (seed included).
EvolutionContext scenario_context(const ScenarioSpec& spec);

// Full pipeline: validate, build, evaluate, and (verify/subsystem modes)
// compare against the equation and the independent integrator.
RunOutput run_scenario(const ScenarioSpec& spec, RunMode mode, const RunControls& controls = {});

// Row-per-time table / structured report. Both writes are atomic
// (temporary file plus rename) and byte-deterministic for a fixed input.
void write_csv(const RunOutput& out, const std::string& path);
void write_json(const RunOutput& out, const std::string& path);

// 64-bit FNV-1a of the canonical serialization, as fixed-width hex.
std::string provenance_hash(const ScenarioSpec& spec, RunMode mode, const RunControls& controls);

} // namespace nlvn

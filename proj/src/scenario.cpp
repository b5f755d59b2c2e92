#include "nlvn/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlvn {

namespace {

using nlohmann::json;

const double rt2 = std::sqrt(2.0);
const double rt5 = std::sqrt(5.0);
const double rt7 = std::sqrt(7.0);
const double rt15 = std::sqrt(15.0);

// ---- builtin data sets ----------------------------------------------------

CMatrix three_level_h() {
  CMatrix h(3);
  h.at(0, 1) = h.at(1, 0) = cplx(1, 0);
  h.at(2, 2) = cplx(1.0 / rt2, 0);
  return h;
}

CMatrix three_level_u0() {
  CMatrix u(3);
  u.at(0, 0) = cplx(0.5 + rt2 / 2, 0);
  u.at(1, 1) = cplx(0.5 - rt2 / 2, 0);
  u.at(2, 2) = cplx(0.5, 0);
  return u;
}

std::vector<CVector> three_level_hint() {
  cplx ph = std::polar(1.0, std::acos(-1.0) / 4);
  return {
      {cplx(0, 0), cplx(0, 0), cplx(1, 0)},
      {ph / rt2, cplx(1.0 / rt2, 0), cplx(0, 0)},
  };
}

CMatrix two_spin_h() {
  CMatrix h(4);
  h.at(0, 0) = h.at(1, 1) = cplx(1, 0);
  h.at(0, 1) = h.at(1, 0) = cplx(2, 0);
  h.at(2, 2) = h.at(3, 3) = cplx(-1, 0);
  h.at(2, 3) = h.at(3, 2) = cplx(2, 0);
  return h;
}

CMatrix two_spin_u0() {
  CMatrix u(4);
  u.at(0, 0) = cplx((5 + rt7) / 2, 0);
  u.at(1, 1) = cplx((5 - rt7) / 2, 0);
  u.at(2, 2) = cplx((5 + rt15) / 2, 0);
  u.at(3, 3) = cplx((5 - rt15) / 2, 0);
  return u;
}

std::vector<CVector> two_spin_hint() {
  double s = 4 * rt2;
  return {
      {cplx(0, 0), cplx(0, 0), cplx(1, rt15) / s, cplx(4, 0) / s},
      {cplx(-3, rt7) / s, cplx(4, 0) / s, cplx(0, 0), cplx(0, 0)},
  };
}

CMatrix oscillator_h() {
  CMatrix h(6);
  for (std::size_t n = 0; n < 6; ++n) h.at(n, n) = cplx(n + 0.5, 0);
  return h;
}

CMatrix oscillator_u0() {
  CMatrix u(6);
  u.at(0, 0) = u.at(2, 2) = cplx(2.5, 0);
  u.at(1, 1) = cplx((5 + rt5) / 2, 0);
  u.at(0, 2) = u.at(2, 0) = cplx(-1.5, 0);
  return u;
}

// Equally spaced three-level family. c is pinned by c(c-a) = b - m^2 with the
// root chosen nonnegative.
void family_matrices(double k, double m, double a, double b, CMatrix& H, CMatrix& U0) {
  double disc = a * a + 4 * (b - m * m);
  double c = disc >= 0 ? (a + std::sqrt(disc)) / 2 : -1.0;
  validate_equally_spaced_scenario(a, b, c, m, k);
  double s = std::sqrt(4 * b + a * a);
  H = CMatrix(3);
  H.at(0, 0) = H.at(1, 1) = H.at(2, 2) = cplx(k + m, 0);
  H.at(0, 1) = H.at(1, 0) = cplx(-m, 0);
  U0 = CMatrix(3);
  U0.at(0, 0) = cplx((a + s) / 2, 0);
  U0.at(1, 1) = cplx((a - s) / 2, 0);
  U0.at(2, 2) = cplx(c, 0);
}

cplx half_half() { return cplx(1.0 / rt2, 0); }

// ---- json helpers ----------------------------------------------------------

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j, const char* what) {
  if (j.is_number()) return cplx(j.get<double>(), 0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  throw std::invalid_argument(std::string("scenario field '") + what +
                              "' must be a number or an [re, im] pair");
}

json vector_to_json(const CVector& v) {
  json out = json::array();
  for (const auto& z : v) out.push_back(cplx_to_json(z));
  return out;
}

CVector vector_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string("scenario field '") + what +
                                "' must be a nonempty array");
  CVector v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(cplx_from_json(e, what));
  return v;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(cplx_to_json(m.at(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string("scenario matrix '") + what +
                                "' must be a nonempty array of rows");
  std::size_t n = j.size();
  CMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != n)
      throw std::invalid_argument(std::string("scenario matrix '") + what +
                                  "' must be square (row-major rows)");
    for (std::size_t c = 0; c < n; ++c) m.at(i, c) = cplx_from_json(row[c], what);
  }
  return m;
}

std::string kind_name(RhsKind k) {
  switch (k) {
    case RhsKind::quadratic: return "quadratic";
    case RhsKind::linear_plus_quadratic: return "linear_plus_quadratic";
    case RhsKind::homogeneous: return "homogeneous";
    case RhsKind::cubic: return "cubic";
    case RhsKind::full_with_tau: return "full_with_tau";
  }
  return "quadratic";
}

RhsKind kind_from_name(const std::string& s) {
  if (s == "quadratic") return RhsKind::quadratic;
  if (s == "linear_plus_quadratic") return RhsKind::linear_plus_quadratic;
  if (s == "homogeneous") return RhsKind::homogeneous;
  if (s == "cubic") return RhsKind::cubic;
  if (s == "full_with_tau") return RhsKind::full_with_tau;
  throw std::invalid_argument("unknown right-hand-side kind: " + s);
}

std::string rule_name(SeedSelection::Rule r) {
  switch (r) {
    case SeedSelection::Rule::most_degenerate: return "most_degenerate";
    case SeedSelection::Rule::match_value: return "match_value";
    case SeedSelection::Rule::explicit_index: return "explicit_index";
  }
  return "most_degenerate";
}

SeedSelection::Rule rule_from_name(const std::string& s) {
  if (s == "most_degenerate") return SeedSelection::Rule::most_degenerate;
  if (s == "match_value") return SeedSelection::Rule::match_value;
  if (s == "explicit_index") return SeedSelection::Rule::explicit_index;
  throw std::invalid_argument("unknown seed selection rule: " + s);
}

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::evolve: return "evolve";
    case RunMode::verify: return "verify";
    case RunMode::subsystem: return "subsystem";
  }
  return "evolve";
}

json spec_to_json(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["H"] = matrix_to_json(spec.H);
  j["U0"] = matrix_to_json(spec.U0);
  j["mu"] = cplx_to_json(spec.mu);
  j["a"] = spec.a;
  json sel;
  sel["rule"] = rule_name(spec.selection.rule);
  if (spec.selection.rule == SeedSelection::Rule::match_value)
    sel["z0"] = cplx_to_json(spec.selection.z0);
  if (spec.selection.rule == SeedSelection::Rule::explicit_index)
    sel["index"] = spec.selection.index;
  j["selection"] = std::move(sel);
  j["A"] = cplx_to_json(spec.A);
  j["B"] = cplx_to_json(spec.B);
  if (!spec.basis_hint.empty()) {
    json hint = json::array();
    for (const auto& v : spec.basis_hint) hint.push_back(vector_to_json(v));
    j["basis_hint"] = std::move(hint);
  }
  j["kind"] = kind_name(spec.kind);
  if (spec.kind == RhsKind::linear_plus_quadratic) {
    j["eps"] = spec.eps;
    j["omega"] = spec.omega;
  }
  if (spec.lambda_gauge != 0.0) j["lambda_gauge"] = spec.lambda_gauge;
  if (spec.normalize) j["normalize"] = true;
  if (spec.tensor) {
    json t;
    t["d1"] = spec.tensor->d1;
    t["d2"] = spec.tensor->d2;
    t["H1"] = matrix_to_json(spec.tensor->H1);
    t["H2"] = matrix_to_json(spec.tensor->H2);
    j["tensor"] = std::move(t);
  }
  j["grid"] = {{"start", spec.grid.start}, {"end", spec.grid.end}, {"steps", spec.grid.steps}};
  if (spec.iterations > 0) j["iterations"] = spec.iterations;
  return j;
}

ScenarioSpec spec_from_json(const json& j) {
  ScenarioSpec s;
  s.name = j.value("name", std::string("scenario"));

  bool has_family = j.contains("family");
  bool has_matrices = j.contains("H") || j.contains("U0");
  if (has_family && has_matrices)
    throw std::invalid_argument("scenario supplies both a family block and explicit matrices");
  if (has_family) {
    const json& f = j.at("family");
    double k = f.at("k").get<double>();
    double m = f.at("m").get<double>();
    double a = f.at("a").get<double>();
    double b = f.at("b").get<double>();
    family_matrices(k, m, a, b, s.H, s.U0);
    s.a = a;
  } else {
    s.H = matrix_from_json(j.at("H"), "H");
    s.U0 = matrix_from_json(j.at("U0"), "U0");
    s.a = j.at("a").get<double>();
  }

  s.mu = j.contains("mu") ? cplx_from_json(j.at("mu"), "mu") : cplx(0, 1);
  if (j.contains("selection")) {
    const json& sel = j.at("selection");
    s.selection.rule = rule_from_name(sel.value("rule", std::string("most_degenerate")));
    if (sel.contains("z0")) s.selection.z0 = cplx_from_json(sel.at("z0"), "selection.z0");
    if (sel.contains("index")) s.selection.index = sel.at("index").get<std::size_t>();
  }
  if (j.contains("A")) s.A = cplx_from_json(j.at("A"), "A");
  if (j.contains("B")) s.B = cplx_from_json(j.at("B"), "B");
  if (j.contains("basis_hint")) {
    const json& hint = j.at("basis_hint");
    if (!hint.is_array())
      throw std::invalid_argument("scenario field 'basis_hint' must be an array of vectors");
    for (const auto& v : hint) s.basis_hint.push_back(vector_from_json(v, "basis_hint"));
  }
  s.kind = kind_from_name(j.value("kind", std::string("quadratic")));
  s.eps = j.value("eps", 0.0);
  s.omega = j.value("omega", 1.0);
  s.lambda_gauge = j.value("lambda_gauge", 0.0);
  s.normalize = j.value("normalize", false);
  if (j.contains("tensor")) {
    const json& t = j.at("tensor");
    TensorSplit split;
    split.d1 = t.at("d1").get<std::size_t>();
    split.d2 = t.at("d2").get<std::size_t>();
    split.H1 = matrix_from_json(t.at("H1"), "tensor.H1");
    split.H2 = matrix_from_json(t.at("H2"), "tensor.H2");
    s.tensor = std::move(split);
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    s.grid.start = g.at("start").get<double>();
    s.grid.end = g.at("end").get<double>();
    s.grid.steps = g.at("steps").get<std::size_t>();
  }
  s.iterations = j.value("iterations", std::size_t{0});
  return s;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& body) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file: " + tmp);
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move output into place: " + path);
}

std::vector<double> spectrum_of(const CMatrix& m) {
  EigenSystem es = herm_eig(hermitize(m));
  std::vector<double> out;
  out.reserve(es.values.size());
  for (const auto& v : es.values) out.push_back(v.real());
  return out;
}

} // namespace

std::vector<ScenarioSpec> builtin_scenarios() {
  std::vector<ScenarioSpec> all;

  {
    ScenarioSpec s;
    s.name = "ex51";
    s.H = three_level_h();
    s.U0 = three_level_u0();
    s.mu = cplx(0, 1);
    s.a = 1.0;
    s.A = s.B = half_half();
    s.basis_hint = three_level_hint();
    s.grid = {-5.0, 5.0, 201};
    all.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "ex52";
    family_matrices(0.5, 1.0, 5.0, -4.0, s.H, s.U0);
    s.mu = cplx(0, 1);
    s.a = 5.0;
    s.A = s.B = half_half();
    s.grid = {-5.0, 5.0, 201};
    all.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "ex53";
    s.H = oscillator_h();
    s.U0 = oscillator_u0();
    s.mu = cplx(0, 1);
    s.a = 5.0;
    s.A = s.B = half_half();
    s.grid = {-25.0, 5.0, 301};
    all.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "ex54";
    s.H = oscillator_h();
    s.U0 = oscillator_u0();
    s.kind = RhsKind::linear_plus_quadratic;
    s.eps = 0.1;
    s.omega = 1.0;
    s.mu = cplx(0, 1.0 / (s.eps * s.omega));
    s.a = 5.0;
    s.A = s.B = half_half();
    s.grid = {-5.0, 5.0, 201};
    all.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "ex55";
    s.H = three_level_h();
    s.U0 = three_level_u0();
    s.kind = RhsKind::homogeneous;
    s.normalize = true;
    s.mu = cplx(0, 1);
    s.a = 1.0;
    s.A = s.B = half_half();
    s.basis_hint = three_level_hint();
    s.grid = {-5.0, 5.0, 201};
    all.push_back(std::move(s));
  }
  {
    ScenarioSpec s;
    s.name = "ex56";
    s.H = two_spin_h();
    s.U0 = two_spin_u0();
    s.mu = cplx(0, 1);
    s.a = 5.0;
    s.A = s.B = half_half();
    s.basis_hint = two_spin_hint();
    TensorSplit t;
    t.d1 = t.d2 = 2;
    t.H1 = CMatrix(2);
    t.H1.at(0, 0) = cplx(1, 0);
    t.H1.at(1, 1) = cplx(-1, 0);
    t.H2 = CMatrix(2);
    t.H2.at(0, 1) = t.H2.at(1, 0) = cplx(2, 0);
    s.tensor = std::move(t);
    s.grid = {-3.0, 3.0, 241};
    all.push_back(std::move(s));
  }
  return all;
}

ScenarioSpec builtin_scenario(const std::string& name) {
  for (auto& s : builtin_scenarios())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown builtin scenario: " + name);
}

std::vector<ValidationIssue> validate_spec(const ScenarioSpec& spec) {
  std::vector<ValidationIssue> out;
  auto add = [&](const char* rule, std::string detail) {
    out.push_back({rule, std::move(detail)});
  };

  std::size_t n = spec.H.dim();
  if (n == 0 || spec.U0.dim() != n) {
    add("dimensions", "H and U0 must be square with the same nonzero dimension");
    return out; // everything else needs matching matrices
  }
  if (!spec.H.hermitian()) add("hermiticity", "H must be Hermitian");
  if (!spec.U0.hermitian()) add("hermiticity", "U0 must be Hermitian");

  if (spec.grid.steps == 0)
    add("grid-steps", "grid needs at least one sample");
  else if (spec.grid.steps > 1 && !(spec.grid.end > spec.grid.start))
    add("grid-steps", "multi-point grids must run forward (end > start)");

  if (std::abs(std::norm(spec.A) + std::norm(spec.B) - 1.0) > 1e-12)
    add("amplitude-normalization", "|A|^2 + |B|^2 must equal 1");

  if (!spec.basis_hint.empty()) {
    if (spec.basis_hint.size() < 2)
      add("basis-hint", "a basis hint needs at least two vectors");
    for (const auto& v : spec.basis_hint)
      if (v.size() != n) {
        add("basis-hint", "basis hint vectors must match the matrix dimension");
        break;
      }
  }

  if (spec.mu.imag() == 0.0)
    add("mu-nonreal", "mu must have a nonzero imaginary part (the Hermitian branch pairs mu with its conjugate)");

  if (spec.kind == RhsKind::cubic || spec.kind == RhsKind::full_with_tau)
    add("kind-runnable", "no closed-form evolution exists for kind '" + kind_name(spec.kind) + "'");

  if (spec.kind == RhsKind::linear_plus_quadratic && !(spec.eps > 0))
    add("epsilon-positive", "linear_plus_quadratic needs eps > 0");
  if (!(spec.omega > 0)) add("omega-positive", "omega must be positive");

  if (spec.lambda_gauge != 0.0 && spec.kind != RhsKind::quadratic)
    add("gauge-plain", "the gauge map applies to the quadratic kind only");
  if (spec.normalize && spec.kind != RhsKind::homogeneous)
    add("normalize-homogeneous", "normalize applies to the homogeneous kind only");

  if (spec.tensor) {
    const TensorSplit& t = *spec.tensor;
    if (t.d1 == 0 || t.d2 == 0 || t.d1 * t.d2 != n)
      add("tensor-dims", "tensor split must satisfy d1 * d2 = dim");
    else if (t.H1.dim() != t.d1 || t.H2.dim() != t.d2 || !t.H1.hermitian() || !t.H2.hermitian())
      add("tensor-hamiltonians", "H1 and H2 must be Hermitian with dimensions d1 and d2");
  }

  if (spec.iterations > 0 && (spec.kind != RhsKind::quadratic || spec.lambda_gauge != 0.0))
    add("iterations-plain", "chained dressings require the plain quadratic kind");

  return out;
}

void require_valid(const ScenarioSpec& spec) {
  auto issues = validate_spec(spec);
  if (issues.empty()) return;
  std::string msg = "scenario '" + spec.name + "' rejected:";
  for (const auto& i : issues) msg += " " + i.rule;
  throw std::invalid_argument(msg);
}

ScenarioSpec parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    std::size_t stop = e.byte > 0 ? e.byte - 1 : 0;
    for (std::size_t i = 0; i < stop && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    char pos[64];
    std::snprintf(pos, sizeof pos, "line %zu, column %zu", line, col);
    throw std::invalid_argument("scenario parse failure at " + std::string(pos) + ": " + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario schema error: ") + e.what());
  }
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read scenario file: " + path);
  std::ostringstream body;
  body << f.rdbuf();
  return parse_scenario_text(body.str());
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  return spec_to_json(spec).dump(2) + "\n";
}

EvolutionContext scenario_context(const ScenarioSpec& spec) {
  require_valid(spec);
  // The seed lives on the engine pencil: the linear_plus_quadratic variant is
  // run as the quadratic flow of the scaled Hamiltonian eps * H.
  CMatrix engine_h = spec.kind == RhsKind::linear_plus_quadratic
                         ? cplx(spec.eps, 0) * spec.H
                         : spec.H;
  SpectralSeed seed = spec.basis_hint.empty()
                          ? make_seed(spec.U0, engine_h, spec.mu, spec.selection, spec.A, spec.B)
                          : make_seed_with_basis(spec.U0, engine_h, spec.mu, spec.basis_hint,
                                                 spec.A, spec.B);
  switch (spec.kind) {
    case RhsKind::quadratic:
      if (spec.lambda_gauge != 0.0)
        return make_gauge_context(spec.H, spec.U0, seed, spec.a, spec.lambda_gauge);
      return make_context(spec.H, spec.U0, seed, spec.a);
    case RhsKind::linear_plus_quadratic:
      return make_epsilon_context(spec.H, spec.U0, seed, spec.a, spec.eps);
    case RhsKind::homogeneous:
      return make_homogeneous_context(spec.H, spec.U0, seed, spec.a, spec.normalize);
    default:
      throw std::invalid_argument("no closed-form evolution exists for kind '" +
                                  kind_name(spec.kind) + "'");
  }
}

std::string provenance_hash(const ScenarioSpec& spec, RunMode mode, const RunControls& controls) {
  std::string canon = serialize_scenario(spec);
  canon += "|mode=" + mode_name(mode);
  canon += "|fd=" + fmt_double(controls.fd_step);
  canon += "|rk4=" + fmt_double(controls.rk4_step);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char out[24];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

RunOutput run_scenario(const ScenarioSpec& spec, RunMode mode, const RunControls& controls) {
  require_valid(spec);
  if (mode != RunMode::evolve && spec.iterations > 0)
    throw std::invalid_argument("verification runs need iterations = 0: the comparison "
                                "targets the closed form");
  if (mode == RunMode::subsystem && !spec.tensor)
    throw std::invalid_argument("subsystem mode needs a tensor split in the scenario");

  RunOutput out;
  out.spec = spec;
  out.mode = mode;
  out.controls = controls;
  out.provenance = provenance_hash(spec, mode, controls);

  EvolutionContext ctx = scenario_context(spec);
  std::vector<double> times = linspace(spec.grid.start, spec.grid.end, spec.grid.steps);

  std::vector<cplx> mus;
  for (std::size_t j = 0; j < spec.iterations; ++j)
    mus.push_back(cplx(static_cast<double>(j + 2), 0) * spec.mu);
  out.series = evolve_series(ctx, times, mus, controls.rk4_step);

  if (mode == RunMode::evolve) return out;

  std::optional<double> eps_opt;
  if (spec.kind == RhsKind::linear_plus_quadratic) eps_opt = spec.eps;

  // Residuals against the physical equation. The derivative comes from a
  // local five-point stencil around each output time (fourth order, so frame
  // frequencies of a few tens stay well under the gate), independent of the
  // output grid density.
  ResidualReport rep;
  rep.times = times;
  const double fd = controls.fd_step;
  std::vector<double> eig0 = spectrum_of(out.series.matrices.front());
  cplx tr0 = trace(out.series.matrices.front());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const CMatrix& m = out.series.matrices[i];
    CMatrix deriv = cplx(1.0 / (12 * fd), 0) *
                    (solution_at(ctx, times[i] - 2 * fd) - solution_at(ctx, times[i] + 2 * fd) +
                     cplx(8, 0) * (solution_at(ctx, times[i] + fd) - solution_at(ctx, times[i] - fd)));
    rep.ode_residual.push_back(fro_norm(deriv - rhs(spec.kind, spec.H, m, eps_opt)));
    rep.hermiticity_defect.push_back(m.hermiticity_defect());
    std::vector<double> eig = spectrum_of(m);
    double drift = 0.0;
    for (std::size_t k = 0; k < eig.size(); ++k) drift = std::max(drift, std::abs(eig[k] - eig0[k]));
    rep.spectrum_drift.push_back(drift);
    rep.trace_drift.push_back(std::abs(trace(m) - tr0));
    rep.max_ode_residual = std::max(rep.max_ode_residual, rep.ode_residual.back());
  }

  TimeSeries check = rk4_integrate(spec.kind, spec.H, out.series.matrices.front(), times, eps_opt,
                                   Rk4Options{controls.rk4_step, 1e-9, true});
  double dev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i)
    dev = std::max(dev, matrix_distance(check.matrices[i], out.series.matrices[i]));
  out.rk4_deviation = dev;

  VerifyGates gates;
  bool pass = rep.max_ode_residual < gates.ode && dev < gates.rk4;
  double trace_gate = gates.trace * (1.0 + std::abs(tr0));
  for (std::size_t i = 0; i < times.size() && pass; ++i) {
    pass = rep.hermiticity_defect[i] < gates.hermiticity &&
           rep.spectrum_drift[i] < gates.spectrum && rep.trace_drift[i] < trace_gate;
  }
  out.gates_pass = pass;
  out.residuals = std::move(rep);

  if (mode == RunMode::subsystem) {
    const TensorSplit& t = *spec.tensor;
    out.subsystem = subsystem_monitor(out.series, t.d1, t.d2, t.H1, t.H2);
  }
  return out;
}

void write_csv(const RunOutput& out, const std::string& path) {
  const std::size_t n = out.spec.H.dim();
  std::string body;
  body.reserve(out.series.times.size() * (n * n * 40 + 64));

  char col[96];
  body += "t";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(col, sizeof col, ",re_%zu_%zu,im_%zu_%zu", i, j, i, j);
      body += col;
    }
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(col, sizeof col, ",eig_%zu", i);
    body += col;
  }
  if (out.residuals)
    body += ",ode_residual,hermiticity_defect,spectrum_drift,trace_drift";
  if (out.subsystem) {
    const TensorSplit& t = *out.spec.tensor;
    for (std::size_t i = 0; i < t.d1; ++i) {
      std::snprintf(col, sizeof col, ",sub1_eig_%zu", i);
      body += col;
    }
    for (std::size_t i = 0; i < t.d2; ++i) {
      std::snprintf(col, sizeof col, ",sub2_eig_%zu", i);
      body += col;
    }
    body += ",energy1,energy2,purity1,purity2";
    body += ",balance_residual1,balance_residual2,balance_scale1,balance_scale2";
  }
  body += "\n";

  for (std::size_t r = 0; r < out.series.times.size(); ++r) {
    body += fmt_double(out.series.times[r]);
    const CMatrix& m = out.series.matrices[r];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        body += ',';
        body += fmt_double(m.at(i, j).real());
        body += ',';
        body += fmt_double(m.at(i, j).imag());
      }
    for (double e : spectrum_of(m)) {
      body += ',';
      body += fmt_double(e);
    }
    if (out.residuals) {
      const ResidualReport& rep = *out.residuals;
      body += ',';
      body += fmt_double(rep.ode_residual[r]);
      body += ',';
      body += fmt_double(rep.hermiticity_defect[r]);
      body += ',';
      body += fmt_double(rep.spectrum_drift[r]);
      body += ',';
      body += fmt_double(rep.trace_drift[r]);
    }
    if (out.subsystem) {
      const SubsystemReport& sub = *out.subsystem;
      for (double e : sub.spectrum1[r]) {
        body += ',';
        body += fmt_double(e);
      }
      for (double e : sub.spectrum2[r]) {
        body += ',';
        body += fmt_double(e);
      }
      for (double v : {sub.energy1[r], sub.energy2[r], sub.purity1[r], sub.purity2[r],
                       sub.balance_residual1[r], sub.balance_residual2[r], sub.balance_scale1[r],
                       sub.balance_scale2[r]}) {
        body += ',';
        body += fmt_double(v);
      }
    }
    body += "\n";
  }
  write_text_atomic(path, body);
}

void write_json(const RunOutput& out, const std::string& path) {
  json j;
  j["scenario"] = spec_to_json(out.spec);
  j["mode"] = mode_name(out.mode);
  j["controls"] = {{"fd_step", out.controls.fd_step}, {"rk4_step", out.controls.rk4_step}};
  j["provenance"] = out.provenance;
  j["times"] = out.series.times;

  json mats = json::array();
  json eigs = json::array();
  for (const auto& m : out.series.matrices) {
    mats.push_back(matrix_to_json(m));
    eigs.push_back(spectrum_of(m));
  }
  j["matrices"] = std::move(mats);
  j["eigenvalues"] = std::move(eigs);

  if (out.residuals) {
    const ResidualReport& rep = *out.residuals;
    j["residuals"] = {{"ode_residual", rep.ode_residual},
                      {"hermiticity_defect", rep.hermiticity_defect},
                      {"spectrum_drift", rep.spectrum_drift},
                      {"trace_drift", rep.trace_drift},
                      {"max_ode_residual", rep.max_ode_residual}};
    j["rk4_deviation"] = out.rk4_deviation;
    j["gates_pass"] = out.gates_pass;
  }
  if (out.subsystem) {
    const SubsystemReport& sub = *out.subsystem;
    j["subsystem"] = {{"spectrum1", sub.spectrum1},
                      {"spectrum2", sub.spectrum2},
                      {"energy1", sub.energy1},
                      {"energy2", sub.energy2},
                      {"purity1", sub.purity1},
                      {"purity2", sub.purity2},
                      {"balance_residual1", sub.balance_residual1},
                      {"balance_residual2", sub.balance_residual2},
                      {"balance_scale1", sub.balance_scale1},
                      {"balance_scale2", sub.balance_scale2}};
  }
  write_text_atomic(path, j.dump(2) + "\n");
}

} // namespace nlvn

#include "tersoff/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tersoff/kernels.hpp"
#include "tersoff/neighbor.hpp"
#include "tersoff/report.hpp"
#include "tersoff/system.hpp"

namespace tersoff {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_field(const std::string& text, const std::string& what) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("bad " + what + " '" + text + "'");
  return value;
}

ParamTable load_table(const std::string& path) { return path.empty() ? carbon_params() : load_params(path); }

struct Common {
  std::string params;
  std::string structure = "nanotube:5:10";
  std::string variant;
  std::string backend;
  int width = 0;  // 0: backend default
  std::string precision = "double";
  int steps = -1;
  double dt = 0.5;
  double skin = default_skin;
  int threads = 1;
  std::string format;
  std::uint64_t seed = 1;
  double temperature = 300.0;
};

void add_common(CLI::App* app, Common& c, bool with_variant) {
  app->add_option("--params", c.params, "Parameter file (17-token layout); built-in carbon when omitted");
  app->add_option("--structure", c.structure,
                  "XYZ path or generator: nanotube:N:CELLS[:BOND], diamond:CELLS[:A], random:ATOMS[:SEED]");
  if (with_variant) app->add_option("--variant", c.variant, "reference|scalar|vec-j|vec-i");
  app->add_option("--backend", c.backend, "scalar|emulated|native");
  app->add_option("--width", c.width, "Lane count for the emulated backend (1, 2, 4, 8, 16)");
  app->add_option("--precision", c.precision, "single|double");
  app->add_option("--steps", c.steps, "Number of time steps");
  app->add_option("--dt", c.dt, "Time step in fs");
  app->add_option("--skin", c.skin, "Neighbor list skin in A");
  app->add_option("--threads", c.threads, "Worker threads for the force kernel");
  app->add_option("--format", c.format, "table|csv|json");
  app->add_option("--seed", c.seed, "Seed for random structures and velocities");
  app->add_option("--temperature", c.temperature, "Initial temperature in K");
}

BackendKind default_backend() { return native_available() ? BackendKind::Native : BackendKind::Emulated; }

BackendDescriptor resolve_backend(BackendKind kind, int width, Precision precision) {
  if (kind == BackendKind::Emulated && width == 0) width = 8;
  return make_backend(kind, width, precision);
}

KernelVariant make_variant(Variant tag, BackendKind kind, int width, Precision precision) {
  KernelVariant v;
  v.tag = tag;
  v.precision = precision;
  if (tag == Variant::VecJ || tag == Variant::VecI) {
    v.backend = resolve_backend(kind, width, precision);
  } else {
    v.backend = make_backend(BackendKind::Scalar, 1, precision);
  }
  return v;
}

void check_format(const std::string& f) {
  if (f != "table" && f != "csv" && f != "json") throw ConfigError("unknown format '" + f + "' (table|csv|json)");
}

SimulationState prepared_structure(const Common& c, const ParamTable& params) {
  auto s = make_structure(c.structure, params, c.seed);
  if (c.temperature > 0.0) assign_velocities(s, c.temperature, c.seed);
  return s;
}

Json step_json(const StepRecord& r) {
  return {{"step", r.step},           {"time_fs", r.time},        {"potential_eV", r.potential},
          {"kinetic_eV", r.kinetic},  {"total_eV", r.total()},    {"force_sum", r.force_sum},
          {"momentum", r.momentum}};
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const std::vector<std::string>& positional, const Common& c, const std::string& output,
            std::ostream& out) {
  std::string spec = c.structure;
  if (!positional.empty()) {
    spec = positional.front();
    for (std::size_t n = 1; n < positional.size(); ++n) spec += ":" + positional[n];
  }
  const ParamTable params = load_table(c.params);
  auto s = make_structure(spec, params, c.seed);
  if (output.empty()) {
    write_xyz(out, s);
  } else {
    std::ofstream f(output);
    if (!f) throw ConfigError("cannot write '" + output + "'");
    write_xyz(f, s);
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// run

struct RunExtras {
  std::string dump;
  int dump_every = 100;
  double stretch = 0.0;
  bool stretch_set = false;
  double grip_width = 2.5;
  int axis = 2;
};

int cmd_run(const Common& c, const RunExtras& x, std::ostream& out) {
  const std::string format = c.format.empty() ? "json" : c.format;
  check_format(format);
  const ParamTable params = load_table(c.params);
  const Precision precision = parse_precision(c.precision);
  const Variant tag = parse_variant(c.variant.empty() ? "scalar" : c.variant);
  const BackendKind kind = c.backend.empty() ? default_backend() : parse_backend(c.backend);

  RunConfig cfg;
  cfg.dt = c.dt;
  cfg.steps = c.steps < 0 ? 0 : c.steps;
  cfg.variant = make_variant(tag, kind, c.width, precision);
  cfg.kernel.threads = c.threads;
  cfg.skin = c.skin;
  if (x.stretch_set) cfg.stretch = StretchSpec{x.stretch, x.axis, x.grip_width};

  auto state = prepared_structure(c, params);
  std::ofstream dump;
  if (!x.dump.empty()) {
    dump.open(x.dump);
    if (!dump) throw ConfigError("cannot write '" + x.dump + "'");
    if (x.dump_every < 1) throw ConfigError("--dump-every must be positive");
  }
  StepObserver observe;
  if (dump.is_open()) {
    observe = [&](const SimulationState& s, const StepRecord& r) {
      if (r.step % x.dump_every == 0 || r.step == cfg.steps) write_xyz(dump, s, "Step=" + std::to_string(r.step));
    };
  }

  const auto summary = cfg.stretch ? run_stretch(state, params, cfg, observe) : run_nve(state, params, cfg, observe);
  const auto& first = summary.steps.front();
  const auto& last = summary.steps.back();

  if (format == "csv") {
    out << "step,time_fs,potential_eV,kinetic_eV,total_eV,force_sum,momentum\n";
    for (const auto& r : summary.steps) {
      out << r.step << ',' << format_number(r.time) << ',' << format_number(r.potential) << ','
          << format_number(r.kinetic) << ',' << format_number(r.total()) << ',' << format_number(r.force_sum) << ','
          << format_number(r.momentum) << '\n';
    }
    return exit_code::ok;
  }
  if (format == "table") {
    out << "atoms           " << summary.atoms << '\n'
        << "variant         " << to_string(cfg.variant.tag) << " (" << cfg.variant.backend.name() << ", W="
        << cfg.variant.backend.width << ", " << to_string(precision) << ")\n"
        << "steps           " << cfg.steps << " x " << cfg.dt << " fs\n"
        << "E_pot initial   " << format_number(first.potential) << " eV\n"
        << "E_pot final     " << format_number(last.potential) << " eV\n"
        << "E_total drift   " << format_number(summary.energy_drift()) << " (relative to |E_pot(0)|)\n"
        << "max |sum F|     " << format_number(summary.max_force_sum()) << " eV/A\n"
        << "max |P|         " << format_number(summary.max_momentum()) << " amu A/fs\n"
        << "rebuilds        " << summary.rebuilds << '\n'
        << "grip atoms      " << summary.grip_atoms << '\n'
        << "force time      " << format_number(summary.force_seconds) << " s\n"
        << "neighbor time   " << format_number(summary.neighbor_seconds) << " s\n"
        << "integrate time  " << format_number(summary.integrate_seconds) << " s\n";
    return exit_code::ok;
  }

  Json trace = Json::array();
  for (const auto& r : summary.steps) trace.push_back(step_json(r));
  Json j = {{"atoms", summary.atoms},
            {"variant", to_string(cfg.variant.tag)},
            {"backend", cfg.variant.backend.name()},
            {"width", cfg.variant.backend.width},
            {"precision", to_string(precision)},
            {"steps", cfg.steps},
            {"dt_fs", cfg.dt},
            {"initial", step_json(first)},
            {"final", step_json(last)},
            {"energy_drift", summary.energy_drift()},
            {"max_force_sum", summary.max_force_sum()},
            {"max_momentum", summary.max_momentum()},
            {"rebuilds", summary.rebuilds},
            {"grip_atoms", summary.grip_atoms},
            {"timing_s", {{"force", summary.force_seconds},
                          {"neighbor", summary.neighbor_seconds},
                          {"integrate", summary.integrate_seconds}}},
            {"trace", trace}};
  out << j.dump(2) << '\n';
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// bench

struct BenchExtras {
  int reps = 5;
  int warmup = 1;
};

BenchRow time_variant(const SimulationState& initial, const ParamTable& params, const KernelVariant& v,
                      const Common& c, const BenchExtras& x, int steps, std::ostream& err) {
  BenchTiming timing;
  timing.steps = steps;
  timing.dt = c.dt;
  timing.skin = c.skin;
  timing.threads = c.threads;
  timing.reps = x.reps;
  timing.warmup = x.warmup;
  return time_kernel(initial, params, v, timing, err);
}

int cmd_bench(const Common& c, const BenchExtras& x, std::ostream& out, std::ostream& err) {
  const std::string format = c.format.empty() ? "table" : c.format;
  check_format(format);
  if (x.reps < 1) throw ConfigError("--reps must be at least 1");
  if (x.warmup < 0) throw ConfigError("--warmup must be non-negative");
  const int steps = c.steps < 0 ? 20 : c.steps;
  const ParamTable params = load_table(c.params);
  const auto initial = prepared_structure(c, params);

  std::vector<Variant> tags;
  for (const auto& t : split(c.variant.empty() ? "reference,scalar,vec-j,vec-i" : c.variant, ',')) {
    tags.push_back(parse_variant(t));
  }
  std::vector<BackendKind> kinds;
  if (c.backend.empty()) {
    kinds.push_back(default_backend());
  } else {
    for (const auto& b : split(c.backend, ',')) kinds.push_back(parse_backend(b));
  }
  std::vector<Precision> precisions;
  for (const auto& p : split(c.precision, ',')) precisions.push_back(parse_precision(p));

  err << "bench: " << initial.size() << " atoms, " << steps << " steps, " << x.reps << " reps, " << c.threads
      << " thread(s)\n";
  BenchReport report;
  for (Precision prec : precisions) {
    // Baselines are always timed so that every row has its speedups.
    for (Variant base : {Variant::Reference, Variant::ScalarOpt}) {
      report.rows.push_back(time_variant(initial, params, make_variant(base, BackendKind::Scalar, 1, prec), c, x,
                                         steps, err));
    }
    for (Variant tag : tags) {
      if (tag == Variant::Reference || tag == Variant::ScalarOpt) continue;
      for (BackendKind kind : kinds) {
        report.rows.push_back(
            time_variant(initial, params, make_variant(tag, kind, c.width, prec), c, x, steps, err));
      }
    }
  }
  finalize_speedups(report);

  if (format == "csv") {
    out << render_csv(report);
  } else if (format == "json") {
    out << render_json(report);
  } else {
    out << render_table(report);
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyExtras {
  double tol_scale = 1.0;
  std::string fault = "none";
  int gradient_atoms = 24;
};

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool passed() const { return value <= tolerance; }
};

struct ForceDiff {
  double energy_rel = 0.0;
  double force_abs = 0.0;
  int atom = -1;
  int component = -1;
};

ForceDiff compare(const ForceEnergyResult& a, const ForceEnergyResult& b) {
  ForceDiff d;
  d.energy_rel = std::abs(a.potential_energy - b.potential_energy) / std::max(std::abs(b.potential_energy), 1e-300);
  for (Eigen::Index i = 0; i < a.forces.cols(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double diff = std::abs(a.forces(k, i) - b.forces(k, i));
      if (diff > d.force_abs || std::isnan(diff)) {
        d.force_abs = std::isnan(diff) ? INFINITY : diff;
        d.atom = static_cast<int>(i);
        d.component = k;
      }
    }
  }
  return d;
}

std::string variant_label(const KernelVariant& v) {
  return std::string(to_string(v.tag)) + "/" + v.backend.name() + "/W" + std::to_string(v.backend.width) + "/" +
         std::string(to_string(v.precision));
}

std::string where(int atom, int comp) {
  static const char* axis = "xyz";
  if (atom < 0) return "";
  return " atom " + std::to_string(atom) + " " + axis[comp];
}

int cmd_verify(const Common& c, const VerifyExtras& x, std::ostream& out) {
  const std::string format = c.format.empty() ? "json" : c.format;
  if (format != "json" && format != "table") throw ConfigError("verify reports as table or json");
  if (x.fault != "none" && x.fault != "force-sign") throw ConfigError("unknown fault '" + x.fault + "' (none|force-sign)");
  const double ts = x.tol_scale;
  if (!(ts >= 0.0)) throw ConfigError("--tol-scale must be non-negative");

  const ParamTable params = load_table(c.params);
  auto state = make_structure(c.structure, params, c.seed);
  validate_state(state, params.species_count());
  const int n = state.size();
  const auto nl = build_neighbor_list(state, params.cutoff(), c.skin);
  KernelOptions ko;
  ko.threads = c.threads;

  std::vector<Check> checks;
  const auto dbl = Precision::Double;
  const auto base = compute_forces(state, nl, params, make_variant(Variant::ScalarOpt, BackendKind::Scalar, 1, dbl), ko);

  // Analytic forces against central differences of the energy of the atoms
  // whose terms involve the displaced atom. Components below the threshold
  // are skipped; double-precision roundoff makes them meaningless.
  {
    constexpr double h = 1e-5;
    constexpr double significant = 1e-3;
    auto probe = state;
    perturb(probe, 0.05, c.seed + 7);
    const auto pnl = build_neighbor_list(probe, params.cutoff(), c.skin);
    KernelOptions eo = ko;
    eo.per_atom_energy = true;
    const auto sv = make_variant(Variant::ScalarOpt, BackendKind::Scalar, 1, dbl);
    const auto analytic = compute_forces(probe, pnl, params, sv, ko);
    const double sign = x.fault == "force-sign" ? -1.0 : 1.0;

    std::vector<int> atoms(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) atoms[static_cast<std::size_t>(i)] = i;
    std::shuffle(atoms.begin(), atoms.end(), std::mt19937_64(c.seed));
    atoms.resize(std::min<std::size_t>(atoms.size(), static_cast<std::size_t>(x.gradient_atoms)));

    Check chk{"gradient", 0.0, 1e-6 * ts, ""};
    int tested = 0;
    for (int a : atoms) {
      std::vector<int> affected{a};
      for (int j : pnl.of(a)) affected.push_back(j);
      auto local_energy = [&](const SimulationState& s) {
        const auto r = compute_forces(s, pnl, params, sv, eo);
        long double e = 0.0L;
        for (int i : affected) e += r.per_atom_energy[i];
        return e;
      };
      for (int k = 0; k < 3; ++k) {
        const double f = sign * analytic.forces(k, a);
        if (std::abs(f) < significant) continue;
        auto plus = probe;
        auto minus = probe;
        plus.positions(k, a) += h;
        minus.positions(k, a) -= h;
        const double fd = -static_cast<double>((local_energy(plus) - local_energy(minus)) / (2.0L * h));
        const double rel = std::abs(fd - f) / std::abs(fd);
        ++tested;
        if (rel > chk.value || std::isnan(rel)) {
          chk.value = std::isnan(rel) ? INFINITY : rel;
          chk.detail = "worst" + where(a, k) + ": analytic " + format_number(f) + " vs fd " + format_number(fd);
        }
      }
    }
    chk.detail += (chk.detail.empty() ? "" : "; ") + std::to_string(tested) + " components";
    checks.push_back(chk);
  }

  // Cross-variant equivalence and momentum balance.
  {
    std::vector<KernelVariant> vs;
    for (Precision p : {Precision::Double, Precision::Single}) {
      vs.push_back(make_variant(Variant::Reference, BackendKind::Scalar, 1, p));
      vs.push_back(make_variant(Variant::ScalarOpt, BackendKind::Scalar, 1, p));
      for (Variant t : {Variant::VecJ, Variant::VecI}) {
        vs.push_back(make_variant(t, BackendKind::Emulated, 8, p));
        if (native_available()) vs.push_back(make_variant(t, BackendKind::Native, 0, p));
      }
    }
    Check energy_d{"equivalence.energy.double", 0.0, 1e-10 * ts, ""};
    Check force_d{"equivalence.force.double", 0.0, 1e-8 * ts, ""};
    Check energy_s{"equivalence.energy.single", 0.0, 1e-4 * ts, ""};
    Check force_s{"equivalence.force.single", 0.0, 1e-3 * ts, ""};
    Check newton{"newton.third_law", 0.0, 1e-9 * n * ts, ""};
    for (const auto& v : vs) {
      const auto r = compute_forces(state, nl, params, v, ko);
      const auto d = compare(r, base);
      const bool single = v.precision == Precision::Single;
      auto& ce = single ? energy_s : energy_d;
      auto& cf = single ? force_s : force_d;
      if (d.energy_rel > ce.value) {
        ce.value = d.energy_rel;
        ce.detail = "worst " + variant_label(v);
      }
      if (d.force_abs > cf.value) {
        cf.value = d.force_abs;
        cf.detail = "worst " + variant_label(v) + where(d.atom, d.component);
      }
      if (!single) {
        const double sum = r.forces.rowwise().sum().norm();
        if (sum > newton.value) {
          newton.value = sum;
          newton.detail = "worst " + variant_label(v);
        }
      }
    }
    for (auto* ch : {&energy_d, &force_d, &energy_s, &force_s, &newton}) checks.push_back(*ch);
  }

  // Width independence on the emulated backend, plus exact agreement of the
  // W = 1 vector kernels with the scalar-optimized kernel.
  {
    Check widths{"width_independence", 0.0, 1e-12 * ts, ""};
    Check exact{"w1_bit_identity", 0.0, 0.0, ""};
    for (Variant t : {Variant::VecJ, Variant::VecI}) {
      const auto w1 = compute_forces(state, nl, params, make_variant(t, BackendKind::Emulated, 1, dbl), ko);
      const auto d1 = compare(w1, base);
      const double mismatch = std::max(d1.energy_rel, d1.force_abs);
      if (mismatch > exact.value) {
        exact.value = mismatch;
        exact.detail = std::string("worst ") + std::string(to_string(t)) + where(d1.atom, d1.component);
      }
      for (int w : emulated_widths) {
        const auto r = compute_forces(state, nl, params, make_variant(t, BackendKind::Emulated, w, dbl), ko);
        const auto d = compare(r, w1);
        if (d.energy_rel > widths.value) {
          widths.value = d.energy_rel;
          widths.detail = std::string("worst ") + std::string(to_string(t)) + " W=" + std::to_string(w);
        }
      }
    }
    if (ts == 0.0 && exact.value == 0.0) exact.value = 0.0;
    checks.push_back(widths);
    checks.push_back(exact);
  }

  // Short NVE run.
  {
    RunConfig cfg;
    cfg.dt = c.dt;
    cfg.steps = c.steps < 0 ? 200 : c.steps;
    cfg.variant = make_variant(Variant::ScalarOpt, BackendKind::Scalar, 1, dbl);
    cfg.kernel = ko;
    cfg.skin = c.skin;
    auto s = state;
    assign_velocities(s, c.temperature, c.seed);
    const auto summary = run_nve(s, params, cfg);
    checks.push_back({"conservation.energy", summary.energy_drift(), 1e-4 * ts,
                      std::to_string(cfg.steps) + " steps of " + format_number(cfg.dt) + " fs"});
    checks.push_back({"conservation.force_sum", summary.max_force_sum(), 1e-9 * n * ts, ""});
    checks.push_back({"conservation.momentum", summary.max_momentum(), 1e-9 * n * ts, ""});
  }

  bool all = true;
  for (const auto& ch : checks) all = all && ch.passed();
  if (ts == 0.0) all = false;  // a zero tolerance admits nothing, not even exact zeros

  if (format == "table") {
    for (const auto& ch : checks) {
      char line[256];
      std::snprintf(line, sizeof(line), "%-4s %-28s value %-12.4g tol %-12.4g ", ch.passed() && ts != 0.0 ? "ok" : "FAIL",
                    ch.name.c_str(), ch.value, ch.tolerance);
      out << line << ch.detail << '\n';
    }
    out << (all ? "verify: all checks passed" : "verify: FAILED") << '\n';
  } else {
    Json arr = Json::array();
    for (const auto& ch : checks) {
      arr.push_back({{"name", ch.name},
                     {"passed", ch.passed() && ts != 0.0},
                     {"value", ch.value},
                     {"tolerance", ch.tolerance},
                     {"margin", ch.tolerance - ch.value},
                     {"detail", ch.detail}});
    }
    Json j = {{"structure", c.structure}, {"atoms", n}, {"passed", all}, {"checks", arr}};
    out << j.dump(2) << '\n';
  }
  return all ? exit_code::ok : exit_code::verification_failed;
}

}  // namespace

BenchRow time_kernel(const SimulationState& initial, const ParamTable& params, const KernelVariant& v,
                     const BenchTiming& timing, std::ostream& log) {
  if (timing.reps < 1) throw ConfigError("--reps must be at least 1");
  if (timing.warmup < 0) throw ConfigError("--warmup must be non-negative");
  KernelOptions ko;
  ko.threads = timing.threads;

  BenchRow row;
  row.variant = std::string(to_string(v.tag));
  row.backend = v.backend.name();
  row.width = v.backend.width;
  row.precision = std::string(to_string(v.precision));
  row.atoms = initial.size();
  row.steps = timing.steps;

  {
    // Untimed probe: lane counters and the initial energy.
    const auto nl = build_neighbor_list(initial, params.cutoff(), timing.skin);
    KernelOptions probe = ko;
    probe.count = true;
    const auto res = compute_forces(initial, nl, params, v, probe);
    const bool lanes = v.tag == Variant::VecJ || v.tag == Variant::VecI;
    row.lane_util = lanes ? round_decimals(res.counters.lane_fraction(), 4) : 1.0;
    row.energy = res.potential_energy;
    for (int w = 0; w < timing.warmup; ++w) compute_forces(initial, nl, params, v, ko);
  }

  std::vector<double> times;
  for (int rep = 0; rep < timing.reps; ++rep) {
    SimulationState s = initial;
    ForceField ff(params, v, ko, timing.skin);
    ff.compute(s);
    const double t0 = ff.force_seconds();
    for (int step = 0; step < timing.steps; ++step) velocity_verlet_step(s, timing.dt, ff);
    times.push_back(ff.force_seconds() - t0);
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median = n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  row.time_s = round_significant(times.front(), 6);
  row.time_median_s = round_significant(median, 6);
  log << "  " << row.variant << " " << row.backend << " W=" << row.width << " " << row.precision << ": min "
      << format_number(row.time_s) << " s, median " << format_number(row.time_median_s) << " s over " << timing.reps
      << " reps, E0 = " << format_number(row.energy) << " eV\n";
  return row;
}

SimulationState make_structure(const std::string& spec, const ParamTable& params, std::uint64_t seed) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw ConfigError("empty structure argument");
  const auto& kind = parts.front();
  auto arg = [&](std::size_t i, const std::string& what) -> const std::string& {
    if (i >= parts.size()) throw ConfigError("structure '" + spec + "' is missing " + what);
    return parts[i];
  };
  SimulationState s;
  if (kind == "nanotube") {
    if (parts.size() > 4) throw ConfigError("nanotube:N:CELLS[:BOND]");
    const int n = parse_field<int>(arg(1, "N"), "chirality");
    const int cells = parse_field<int>(arg(2, "CELLS"), "cell count");
    const double b = parts.size() > 3 ? parse_field<double>(parts[3], "bond length") : graphene_bond_length;
    s = gen_nanotube(n, cells, b);
  } else if (kind == "diamond") {
    if (parts.size() > 3) throw ConfigError("diamond:CELLS[:A]");
    const int cells = parse_field<int>(arg(1, "CELLS"), "cell count");
    const double a = parts.size() > 2 ? parse_field<double>(parts[2], "lattice constant") : diamond_lattice_constant;
    s = gen_diamond(cells, a);
  } else if (kind == "random") {
    if (parts.size() > 3) throw ConfigError("random:ATOMS[:SEED]");
    const int atoms = parse_field<int>(arg(1, "ATOMS"), "atom count");
    const auto rs = parts.size() > 2 ? parse_field<std::uint64_t>(parts[2], "seed") : seed;
    ClusterOptions opts;
    opts.species = static_cast<int>(params.species_count());
    opts.names = params.species();
    s = gen_random_cluster(atoms, rs, opts);
  } else if (parts.size() == 1 || spec.find('/') != std::string::npos || spec.find('.') != std::string::npos) {
    s = read_xyz_file(spec);
  } else {
    throw ConfigError("unknown structure '" + spec + "'");
  }
  align_species(s, params);
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tersoff potential force kernels: structure generation, MD runs, benchmarks, verification"};
  app.name("tersoff_cli");
  app.require_subcommand(1);

  Common gen_c, run_c, bench_c, verify_c;
  std::vector<std::string> gen_pos;
  std::string gen_output;
  auto* gen = app.add_subcommand("gen", "Write a structure as XYZ (e.g. gen nanotube 5 10)");
  gen->add_option("spec", gen_pos, "Generator and its arguments: nanotube N CELLS [BOND] | diamond CELLS [A] | random ATOMS [SEED]");
  gen->add_option("--structure", gen_c.structure, "Generator spec, e.g. nanotube:5:10");
  gen->add_option("--params", gen_c.params, "Parameter file; species for random clusters");
  gen->add_option("--seed", gen_c.seed, "Seed for random clusters");
  gen->add_option("--output,-o", gen_output, "Output path (stdout when omitted)");

  RunExtras rx;
  auto* run = app.add_subcommand("run", "Velocity-Verlet NVE or stretching run with a JSON summary");
  add_common(run, run_c, true);
  run->add_option("--dump", rx.dump, "XYZ trajectory output");
  run->add_option("--dump-every", rx.dump_every, "Steps between dumped frames");
  run->add_option("--stretch", rx.stretch, "Grip separation speed in A/fs (enables the stretching run)")
      ->each([&](const std::string&) { rx.stretch_set = true; });
  run->add_option("--grip-width", rx.grip_width, "Grip thickness from each end in A");
  run->add_option("--axis", rx.axis, "Stretch axis (0, 1, 2)");

  BenchExtras bx;
  auto* bench = app.add_subcommand("bench", "Time the force kernels and report speedups");
  add_common(bench, bench_c, true);
  bench->add_option("--reps", bx.reps, "Timed repetitions (min and median reported)");
  bench->add_option("--warmup", bx.warmup, "Untimed force evaluations before timing");

  VerifyExtras vx;
  auto* verify = app.add_subcommand("verify", "Run the invariant checks; exit 1 on any failure");
  add_common(verify, verify_c, false);
  verify->add_option("--tol-scale", vx.tol_scale, "Multiply every tolerance (0 makes every check fail)");
  verify->add_option("--fault", vx.fault, "Inject a defect: none|force-sign");
  verify->add_option("--gradient-atoms", vx.gradient_atoms, "Atoms sampled by the gradient check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::input_error;
  }

  try {
    if (*gen) return cmd_gen(gen_pos, gen_c, gen_output, out);
    if (*run) return cmd_run(run_c, rx, out);
    if (*bench) return cmd_bench(bench_c, bx, out, err);
    if (*verify) return cmd_verify(verify_c, vx, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  }
  return exit_code::input_error;
}

}  // namespace tersoff

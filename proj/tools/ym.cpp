// Experiment driver for the SU(2) gradient-flow laboratory on the flat torus.
//
// Subcommands: flow, retract, scan-lambda, pillowcase, kuranishi, loja,
// selftest.  Exit codes: 0 success, 1 experiment failure (for instance a
// flow that reaches t_max before the gradient tolerance), 2 configuration
// errors.  All file outputs are written atomically and reproduce
// byte-for-byte for a fixed (config, seed, grid).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ym/flow.hpp"
#include "ym/io.hpp"
#include "ym/kuranishi.hpp"
#include "ym/lojasiewicz.hpp"
#include "ym/moduli.hpp"
#include "ym/parallel.hpp"
#include "ym/random_fields.hpp"
#include "ym/selftest.hpp"

namespace {

using nlohmann::json;

// Angles in radians as decimals, with the named constants "pi" and friends
// ("pi/2", "3pi/4", "-pi", "2pi") parsed exactly, so pillowcase corners are
// representable in configs.
double parse_angle(std::string s) {
  auto trim = [](std::string& v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
  };
  trim(s);
  if (s.empty()) throw CLI::ValidationError("angle", "empty angle");
  const size_t pi_pos = s.find("pi");
  if (pi_pos == std::string::npos) {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw CLI::ValidationError("angle", "trailing characters in '" + s + "'");
    return v;
  }
  std::string coef = s.substr(0, pi_pos);
  std::string rest = s.substr(pi_pos + 2);
  trim(coef);
  trim(rest);
  double num = 1.0;
  if (coef == "-") {
    num = -1.0;
  } else if (!coef.empty()) {
    num = std::stod(coef);
  }
  double den = 1.0;
  if (!rest.empty()) {
    if (rest.front() != '/') throw CLI::ValidationError("angle", "malformed angle '" + s + "'");
    den = std::stod(rest.substr(1));
  }
  return num * ym::kPi / den;
}

std::pair<double, double> parse_base(const std::string& s) {
  const size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw CLI::ValidationError("base", "expected 'alpha,beta', got '" + s + "'");
  return {parse_angle(s.substr(0, comma)), parse_angle(s.substr(comma + 1))};
}

struct DriverConfig {
  int grid = 16;
  std::string base = "0,0";
  std::string init = "zero";
  uint64_t seed = 1;
  std::string out;
  double t_max = 10.0;
  double grad_tol = 1e-8;
  std::string integrator = "etd";
  int record_stride = 1;
  double dt_init = 1e-4;
  double p = 2.0;
  double t_lo = 1e-3, t_hi = 1e-1;
  int t_count = 20;
  std::string ray = "at";
  double mu = -1.0;
  int samples = 100;
  double radius = 0.1;
  std::string function = "quartic";
  std::string x0 = "0.5";
  double tol = 1e-10;
  std::string save_terminal;
};

// Schema-validated config file; unknown keys are rejected by name and flags
// given on the command line take precedence.
void merge_config_file(DriverConfig& cfg, const std::string& path,
                       const std::function<bool(const std::string&)>& flag_was_set) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("config", "cannot open config file " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw CLI::ValidationError("config", std::string("JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw CLI::ValidationError("config", "config root must be an object");

  static const std::map<std::string, std::string> key_to_flag = {
      {"grid", "--grid"},       {"base", "--base"},           {"init", "--init"},
      {"seed", "--seed"},       {"out", "--out"},             {"t_max", "--t-max"},
      {"grad_tol", "--tol"},    {"integrator", "--integrator"}, {"record_stride", "--stride"},
      {"dt_init", "--dt-init"}, {"p", "--p"},                 {"t_lo", "--t-lo"},
      {"t_hi", "--t-hi"},       {"t_count", "--t-count"},     {"ray", "--ray"},
      {"mu", "--mu"},           {"samples", "--samples"},     {"radius", "--radius"},
      {"function", "--function"}, {"x0", "--x0"},             {"tol", "--tol"}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (key_to_flag.find(it.key()) == key_to_flag.end())
      throw CLI::ValidationError("config", "unknown config key '" + it.key() + "'");
  }
  auto want = [&](const char* k) {
    return j.contains(k) && !flag_was_set(key_to_flag.at(k));
  };
  auto get_int = [&](const char* k, int& dst) { if (want(k)) dst = j[k].get<int>(); };
  auto get_dbl = [&](const char* k, double& dst) { if (want(k)) dst = j[k].get<double>(); };
  auto get_str = [&](const char* k, std::string& dst) { if (want(k)) dst = j[k].get<std::string>(); };
  get_int("grid", cfg.grid);
  get_str("base", cfg.base);
  get_str("init", cfg.init);
  if (want("seed")) cfg.seed = j["seed"].get<uint64_t>();
  get_str("out", cfg.out);
  get_dbl("t_max", cfg.t_max);
  get_dbl("grad_tol", cfg.grad_tol);
  get_str("integrator", cfg.integrator);
  get_int("record_stride", cfg.record_stride);
  get_dbl("dt_init", cfg.dt_init);
  get_dbl("p", cfg.p);
  get_dbl("t_lo", cfg.t_lo);
  get_dbl("t_hi", cfg.t_hi);
  get_int("t_count", cfg.t_count);
  get_str("ray", cfg.ray);
  get_dbl("mu", cfg.mu);
  get_int("samples", cfg.samples);
  get_dbl("radius", cfg.radius);
  get_str("function", cfg.function);
  get_str("x0", cfg.x0);
  get_dbl("tol", cfg.tol);
}

ym::Connection build_initial(ym::SpectralWorkspace& ws, const DriverConfig& cfg) {
  using namespace ym;
  const auto [alpha, beta] = parse_base(cfg.base);
  const FlatBase base(alpha, beta);
  const Grid g = ws.grid();

  const std::string& init = cfg.init;
  auto starts_with = [&](const char* p) { return init.rfind(p, 0) == 0; };
  if (init == "zero") return Connection(base, g);
  if (starts_with("random:")) {
    const double amp = std::stod(init.substr(7));
    return random_slice_connection(ws, base, cfg.seed, amp);
  }
  if (starts_with("random-curv:")) {
    const double amp = std::stod(init.substr(12));
    return random_small_curvature_connection(ws, base, cfg.seed, amp);
  }
  if (starts_with("at-ray:")) {
    const double t = std::stod(init.substr(7));
    Connection A(base, g);
    A.a.x.fill({t, 0.0, 0.0});
    A.a.y.fill({0.0, t, 0.0});
    return A;
  }
  if (starts_with("snapshot:")) {
    Connection A = load_snapshot(init.substr(9));
    if (A.grid() != g) fail(ErrorCode::BadArgument, "snapshot grid does not match --grid");
    return A;
  }
  fail(ErrorCode::BadArgument, "unknown init spec '" + init + "'");
}

ym::FlowConfig flow_config(const DriverConfig& cfg) {
  ym::FlowConfig fc;
  fc.t_max = cfg.t_max;
  fc.grad_tol = cfg.grad_tol;
  fc.integrator =
      (cfg.integrator == "rk4") ? ym::Integrator::ExplicitRk4 : ym::Integrator::EtdRk2;
  fc.record_stride = cfg.record_stride;
  fc.dt_init = cfg.dt_init;
  fc.keep_states = false;
  return fc;
}

std::string flow_summary_json(const ym::Trajectory& tr) {
  std::ostringstream os;
  os << "{\"converged\": " << (tr.converged ? "true" : "false")
     << ", \"energy_initial\": " << ym::format_real(tr.energy_initial)
     << ", \"energy_terminal\": " << ym::format_real(tr.energy_terminal)
     << ", \"grad_sq_integral\": " << ym::format_real(tr.grad_sq_integral)
     << ", \"energy_equality_residual\": " << ym::format_real(tr.energy_equality_residual)
     << ", \"steps_accepted\": " << tr.steps_accepted
     << ", \"steps_rejected\": " << tr.steps_rejected
     << ", \"samples\": " << tr.samples.size() << "}\n";
  return os.str();
}

int cmd_flow(const DriverConfig& cfg) {
  using namespace ym;
  Grid g(cfg.grid);
  SpectralWorkspace ws(g);
  const Connection A0 = build_initial(ws, cfg);
  const Trajectory tr = run(ws, A0, flow_config(cfg));
  if (!cfg.out.empty()) {
    atomic_write(cfg.out, trajectory_csv(tr));
    atomic_write(cfg.out + ".json", flow_summary_json(tr));
  } else {
    std::cout << flow_summary_json(tr);
  }
  if (!cfg.save_terminal.empty()) save_snapshot(tr.terminal, cfg.save_terminal);
  if (!tr.converged) {
    std::cerr << "DidNotConverge: t_max reached with gradient above tolerance\n";
    return 1;
  }
  return 0;
}

int cmd_retract(const DriverConfig& cfg) {
  using namespace ym;
  Grid g(cfg.grid);
  SpectralWorkspace ws(g);
  const Connection A0 = build_initial(ws, cfg);
  const RetractResult rr = retract(ws, A0, flow_config(cfg));
  std::ostringstream os;
  os << "{\"alpha\": " << format_real(rr.point.alpha) << ", \"beta\": "
     << format_real(rr.point.beta)
     << ", \"terminal_curvature\": " << format_real(rr.terminal_curvature)
     << ", \"commutator_norm\": " << format_real(rr.holonomy_pair.commutator_norm)
     << ", \"s_terminal\": " << format_real(retraction_parameter(rr.trajectory.samples.back().t))
     << "}\n";
  if (!cfg.out.empty()) {
    atomic_write(cfg.out, trajectory_csv(rr.trajectory));
    atomic_write(cfg.out + ".json", os.str());
  }
  std::cout << os.str();
  return 0;
}

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) {
    const double f = (count == 1) ? 0.0 : double(i) / (count - 1);
    t[i] = lo * std::pow(hi / lo, f);
  }
  return t;
}

int cmd_scan_lambda(const DriverConfig& cfg) {
  using namespace ym;
  const auto [alpha, beta] = parse_base(cfg.base);
  const FlatBase base(alpha, beta);
  const std::vector<double> ts = logspace(cfg.t_lo, cfg.t_hi, cfg.t_count);

  // Named rays: "at" is the constant I dx + J dy direction, "transverse" a
  // mixed exact-plus-slice direction, "harmonic" the flat K-direction.
  auto make_ray = [&](SpectralWorkspace& ws) -> std::function<Connection(double)> {
    const Grid g = ws.grid();
    if (cfg.ray == "at") {
      return [g, base](double t) {
        Connection A(base, g);
        A.a.x.fill({t, 0.0, 0.0});
        A.a.y.fill({0.0, t, 0.0});
        return A;
      };
    }
    if (cfg.ray == "harmonic") {
      return [g, base](double t) {
        Connection A(base, g);
        A.a.x.fill({0.0, 0.0, t});
        return A;
      };
    }
    if (cfg.ray == "transverse") {
      // d_Gamma-exact part plus a non-harmonic slice part, unit-normalized.
      Su2Field phi = random_scalar_field(g, cfg.seed, {1, 1.0});
      const Connection gamma(base, g);
      OneForm exact = covariant_d(ws, gamma, phi);
      OneForm slice = coulomb_project(ws, random_one_form(g, cfg.seed + 1, {1, 1.0}), base);
      LowModeSpace space = make_low_mode_space(ws, base);
      slice = low_mode_projection(slice, space).perpendicular;
      OneForm dir = exact;
      dir *= 1.0 / std::max(1e-30, l2_norm(exact));
      OneForm snorm = slice;
      snorm *= 1.0 / std::max(1e-30, l2_norm(slice));
      dir += snorm;
      return [g, base, dir](double t) {
        OneForm a = dir;
        a *= t;
        return Connection(base, std::move(a));
      };
    }
    fail(ErrorCode::BadArgument, "unknown ray '" + cfg.ray + "'");
  };

  // Scan points fan out across workers, one workspace each.
  LambdaScanResult result;
  result.samples.resize(ts.size());
  std::vector<std::string> errors(ts.size());
  parallel_for(static_cast<int>(ts.size()), [&](int i) {
    try {
      SpectralWorkspace ws(Grid(cfg.grid));
      auto ray = make_ray(ws);
      const Connection A = ray(ts[i]);
      LambdaScanSample s;
      s.t = ts[i];
      s.curvature_norm = lp_norm(curvature(ws, A), cfg.p);
      const NearestFlatResult nf = nearest_flat(ws, A);
      s.distance = sobolev_norm(ws, nf.rep.a, cfg.p, 1);
      s.alpha = nf.point.alpha;
      s.beta = nf.point.beta;
      result.samples[i] = s;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ym::Error(ym::ErrorCode::NoConvergence, e);

  bool degenerate = true;
  for (const auto& s : result.samples)
    if (s.distance >= 1e-12) degenerate = false;
  if (degenerate) fail(ErrorCode::DegenerateRay, "all distances below 1e-12");

  std::vector<double> lx, ly;
  for (const auto& s : result.samples) {
    lx.push_back(std::log(s.curvature_norm));
    ly.push_back(std::log(s.distance));
  }
  const LineFit f = linear_fit(lx, ly);
  result.lambda = f.slope;
  result.C = std::exp(f.intercept);
  result.r2 = f.r2;

  if (!cfg.out.empty()) {
    atomic_write(cfg.out, lambda_scan_csv(result));
    atomic_write(cfg.out + ".json", lambda_scan_summary_json(result));
  }
  std::cout << lambda_scan_summary_json(result);
  return 0;
}

int cmd_pillowcase(const DriverConfig& cfg) {
  using namespace ym;
  Grid g(cfg.grid);
  SpectralWorkspace ws(g);
  const Connection A = build_initial(ws, cfg);
  const HolonomyPair hp = holonomy(A);
  const PillowcasePoint p = to_pillowcase(hp, 1e-4);
  const Stratum st = classify(p);
  std::ostringstream os;
  os << "{\"alpha\": " << format_real(p.alpha) << ", \"beta\": " << format_real(p.beta)
     << ", \"commutator_norm\": " << format_real(hp.commutator_norm) << ", \"stratum\": \""
     << (st == Stratum::Central ? "central" : "abelian") << "\", \"zariski_dim\": "
     << zariski_dim(st) << "}\n";
  if (!cfg.out.empty()) atomic_write(cfg.out, os.str());
  std::cout << os.str();
  return 0;
}

int cmd_kuranishi(const DriverConfig& cfg) {
  using namespace ym;
  const auto [alpha, beta] = parse_base(cfg.base);
  const FlatBase base(alpha, beta);
  Grid g(cfg.grid);
  SpectralWorkspace ws0(g);
  const LowModeSpace space = make_low_mode_space(ws0, base, cfg.mu);
  const int dim = space.dimension();

  std::vector<std::vector<double>> coords(cfg.samples), chis(cfg.samples);
  std::vector<double> residuals(cfg.samples, 0.0);
  std::vector<std::string> errors(cfg.samples);
  parallel_for(cfg.samples, [&](int i) {
    try {
      SpectralWorkspace ws(g);
      const LowModeSpace sp = make_low_mode_space(ws, base, cfg.mu);
      std::mt19937_64 rng(cfg.seed + 7919 * uint64_t(i));
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> c(dim);
      double nrm = 0.0;
      for (double& v : c) {
        v = gauss(rng);
        nrm += v * v;
      }
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      const double r = cfg.radius * std::pow(uni(rng), 1.0 / dim);
      for (double& v : c) v *= r / std::sqrt(nrm);
      const BalancingResult b = balancing(ws, c, sp, cfg.tol);
      coords[i] = c;
      chis[i] = b.chi;
      residuals[i] = b.solution.residual;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ym::Error(ym::ErrorCode::NoConvergence, e);

  const std::string csv = balancing_csv(coords, chis, residuals);
  if (!cfg.out.empty()) atomic_write(cfg.out, csv);
  std::cout << "{\"dimension\": " << dim << ", \"cutoff\": " << format_real(space.cutoff)
            << ", \"samples\": " << cfg.samples << "}\n";
  return 0;
}

int cmd_loja(const DriverConfig& cfg) {
  using namespace ym::loja;
  TestFunction f;
  if (cfg.function == "quadratic") f = quadratic(2);
  else if (cfg.function == "quartic") f = quartic();
  else if (cfg.function == "morse-bott") f = morse_bott();
  else if (cfg.function == "double-well") f = double_well();
  else ym::fail(ym::ErrorCode::BadArgument, "unknown function '" + cfg.function + "'");

  Vec x0;
  std::stringstream ss(cfg.x0);
  std::string tok;
  while (std::getline(ss, tok, ',')) x0.push_back(std::stod(tok));
  if (static_cast<int>(x0.size()) != f.n)
    ym::fail(ym::ErrorCode::BadArgument, "x0 dimension mismatch for " + f.name);

  const FlowTrajectory tr = flow_ode(f, x0, cfg.t_max, cfg.tol);
  const double resid = energy_identity_check(tr);
  std::vector<double> ts, ys;
  for (const auto& s : tr.samples) {
    ts.push_back(s.t);
    ys.push_back(f.value(s.x));  // energy decay series
  }
  std::ostringstream os;
  os << "{\"function\": \"" << f.name << "\", \"converged\": "
     << (tr.converged ? "true" : "false")
     << ", \"terminal\": [";
  for (size_t i = 0; i < tr.terminal.size(); ++i)
    os << (i ? "," : "") << ym::format_real(tr.terminal[i]);
  os << "], \"energy_identity_residual\": " << ym::format_real(resid)
     << ", \"samples\": " << tr.samples.size() << "}\n";
  if (!cfg.out.empty()) {
    std::ostringstream csv;
    csv << "t,energy,grad_norm\n";
    for (const auto& s : tr.samples)
      csv << ym::format_real(s.t) << "," << ym::format_real(s.energy) << ","
          << ym::format_real(s.grad_norm) << "\n";
    ym::atomic_write(cfg.out, csv.str());
    ym::atomic_write(cfg.out + ".json", os.str());
  }
  std::cout << os.str();
  return tr.converged ? 0 : 1;
}

int cmd_selftest() {
  const auto results = ym::selftest::run_all();
  bool ok = true;
  for (const auto& r : results) {
    std::cout << r.name << ": " << r.passed << "/" << (r.passed + r.failed) << " passed\n";
    for (const auto& f : r.failures) {
      std::cout << "  FAIL: " << f << "\n";
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SU(2) gradient-flow laboratory on the flat two-torus"};
  app.require_subcommand(1);

  DriverConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid, "sites per axis (even, >= 4)");
    sub->add_option("--base", cfg.base, "flat base angles 'alpha,beta' (accepts pi, pi/2, ...)");
    sub->add_option("--init", cfg.init,
                    "initial data: zero | random:AMP | random-curv:AMP | at-ray:T | snapshot:PATH");
    sub->add_option("--seed", cfg.seed, "random seed (fully determines random initial data)");
    sub->add_option("--out", cfg.out, "output path (CSV; a .json summary is written alongside)");
    sub->add_option("--config", config_path, "JSON config file (unknown keys rejected)");
  };

  CLI::App* flow = app.add_subcommand("flow", "integrate the slice gradient flow");
  add_common(flow);
  flow->add_option("--t-max", cfg.t_max, "integration horizon");
  flow->add_option("--tol", cfg.grad_tol, "gradient L2 tolerance");
  flow->add_option("--integrator", cfg.integrator, "etd | rk4");
  flow->add_option("--stride", cfg.record_stride, "record every k-th accepted step");
  flow->add_option("--dt-init", cfg.dt_init, "initial step size");
  flow->add_option("--save-terminal", cfg.save_terminal, "write the terminal connection snapshot");

  CLI::App* retract = app.add_subcommand("retract", "flow to the nearest flat class");
  add_common(retract);
  retract->add_option("--t-max", cfg.t_max, "integration horizon");
  retract->add_option("--tol", cfg.grad_tol, "gradient L2 tolerance");
  retract->add_option("--integrator", cfg.integrator, "etd | rk4");
  retract->add_option("--stride", cfg.record_stride, "record every k-th accepted step");

  CLI::App* scan = app.add_subcommand("scan-lambda", "distance-vs-curvature exponent scan");
  add_common(scan);
  scan->add_option("--ray", cfg.ray, "at | transverse | harmonic");
  scan->add_option("--p", cfg.p, "norm exponent");
  scan->add_option("--t-lo", cfg.t_lo, "smallest ray parameter");
  scan->add_option("--t-hi", cfg.t_hi, "largest ray parameter");
  scan->add_option("--t-count", cfg.t_count, "number of logarithmic ray samples");

  CLI::App* pillow = app.add_subcommand("pillowcase", "holonomy point of a connection");
  add_common(pillow);

  CLI::App* kur = app.add_subcommand("kuranishi", "balancing-map sample dump");
  add_common(kur);
  kur->add_option("--mu", cfg.mu, "low-mode cutoff (default: spectral-gap midpoint)");
  kur->add_option("--samples", cfg.samples, "number of sampled low-mode points");
  kur->add_option("--radius", cfg.radius, "sampling ball radius");
  kur->add_option("--tol", cfg.tol, "high-mode solver tolerance");

  CLI::App* loja = app.add_subcommand("loja", "finite-dimensional gradient-system toolkit");
  loja->add_option("--function", cfg.function, "quadratic | quartic | morse-bott | double-well");
  loja->add_option("--x0", cfg.x0, "initial point, comma separated");
  loja->add_option("--t-max", cfg.t_max, "integration horizon");
  loja->add_option("--tol", cfg.tol, "gradient tolerance");
  loja->add_option("--out", cfg.out, "output CSV path");
  loja->add_option("--config", config_path, "JSON config file");

  CLI::App* self = app.add_subcommand("selftest", "run every module's invariant suite");
  (void)self;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) {
      CLI::App* active = app.get_subcommands().front();
      auto flag_was_set = [&](const std::string& flag) {
        const CLI::Option* o = active->get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
      };
      merge_config_file(cfg, config_path, flag_was_set);
    }

    if (app.got_subcommand("flow")) return cmd_flow(cfg);
    if (app.got_subcommand("retract")) return cmd_retract(cfg);
    if (app.got_subcommand("scan-lambda")) return cmd_scan_lambda(cfg);
    if (app.got_subcommand("pillowcase")) return cmd_pillowcase(cfg);
    if (app.got_subcommand("kuranishi")) return cmd_kuranishi(cfg);
    if (app.got_subcommand("loja")) return cmd_loja(cfg);
    if (app.got_subcommand("selftest")) return cmd_selftest();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ym::Error& e) {
    if (e.code() == ym::ErrorCode::BadArgument) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "experiment failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

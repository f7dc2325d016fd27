#include "saddle/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "saddle/oracles.hpp"
#include "saddle/random.hpp"

namespace saddle::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigParseError(path + ": " + message);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail(path + "." + item.key(), "unknown field");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing required field");
  return obj.at(key);
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    fail(path, "expected a nonnegative integer seed");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Vector get_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = get_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

SpectrumBounds get_bounds(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) fail(path, "expected [lo, hi]");
  return {get_number(v[0], path + "[0]"), get_number(v[1], path + "[1]")};
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigParseError(file.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const QuadraticSaddleProblem> parse_problem(const json& j, const std::string& path,
                                                            const fs::path& base_dir) {
  check_keys(j, path, {"generate", "file", "inline"});
  if (j.size() != 1) fail(path, "give exactly one of generate, file, inline");
  try {
    if (j.contains("generate")) {
      const json& g = j["generate"];
      const std::string gp = path + ".generate";
      check_keys(g, gp, {"kind", "dim_x", "dim_y", "seed", "p_spectrum", "q_spectrum", "a_spectrum", "linear_scale"});
      ProblemSpec spec;
      const std::string kind = get_string(require(g, gp, "kind"), gp + ".kind");
      if (kind == "bilinear") {
        spec.kind = ProblemKind::bilinear;
      } else if (kind == "quadratic") {
        spec.kind = ProblemKind::quadratic;
      } else {
        fail(gp + ".kind", "expected bilinear or quadratic");
      }
      spec.dim_x = get_int(require(g, gp, "dim_x"), gp + ".dim_x");
      spec.dim_y = get_int(require(g, gp, "dim_y"), gp + ".dim_y");
      spec.seed = get_seed(require(g, gp, "seed"), gp + ".seed");
      if (g.contains("p_spectrum")) spec.p_spectrum = get_bounds(g["p_spectrum"], gp + ".p_spectrum");
      if (g.contains("q_spectrum")) spec.q_spectrum = get_bounds(g["q_spectrum"], gp + ".q_spectrum");
      if (g.contains("a_spectrum")) spec.a_spectrum = get_bounds(g["a_spectrum"], gp + ".a_spectrum");
      if (g.contains("linear_scale")) spec.linear_scale = get_number(g["linear_scale"], gp + ".linear_scale");
      return std::make_shared<const QuadraticSaddleProblem>(generate(spec));
    }
    if (j.contains("file")) {
      fs::path file = get_string(j["file"], path + ".file");
      if (file.is_relative()) file = base_dir / file;
      return std::make_shared<const QuadraticSaddleProblem>(problem_from_json(read_file(file)));
    }
    return std::make_shared<const QuadraticSaddleProblem>(problem_from_json(j["inline"].dump()));
  } catch (const ConfigParseError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

StepsizeRule parse_stepsize(const json& j, const std::string& path) {
  check_keys(j, path, {"scheme", "sigma", "eta"});
  const std::string scheme = get_string(require(j, path, "scheme"), path + ".scheme");
  StepsizeRule rule;
  if (scheme == "ogda_default") {
    rule = StepsizeRule::ogda_default();
  } else if (scheme == "eg_sigma") {
    rule = StepsizeRule::eg_sigma(j.contains("sigma") ? get_number(j["sigma"], path + ".sigma") : 0.5);
    if (!(rule.sigma > 0.0 && rule.sigma < 1.0)) fail(path + ".sigma", "sigma must lie in (0,1)");
  } else if (scheme == "pp_fixed" || scheme == "explicit") {
    const double eta = get_number(require(j, path, "eta"), path + ".eta");
    if (!(eta > 0.0)) fail(path + ".eta", "eta must be positive");
    rule = scheme == "pp_fixed" ? StepsizeRule::pp_fixed(eta) : StepsizeRule::explicit_eta(eta);
  } else {
    fail(path + ".scheme", "expected ogda_default, eg_sigma, pp_fixed or explicit");
  }
  return rule;
}

InnerSolver parse_inner(const json& j, const std::string& path) {
  check_keys(j, path, {"mode", "tol", "max_iter"});
  InnerSolver inner;
  const std::string mode = get_string(require(j, path, "mode"), path + ".mode");
  if (mode == "affine_exact") {
    inner.mode = InnerSolver::Mode::affine_exact;
  } else if (mode == "fixed_point") {
    inner.mode = InnerSolver::Mode::fixed_point;
  } else {
    fail(path + ".mode", "expected affine_exact or fixed_point");
  }
  if (j.contains("tol")) inner.tol = get_number(j["tol"], path + ".tol");
  if (j.contains("max_iter")) inner.max_iter = static_cast<int>(get_int(j["max_iter"], path + ".max_iter"));
  if (!(inner.tol > 0.0) || inner.max_iter < 1) fail(path, "tol must be positive and max_iter at least 1");
  return inner;
}

JointPoint parse_z0(const json& j, const std::string& path, const QuadraticSaddleProblem& problem) {
  if (j.contains("x") || j.contains("y")) {
    check_keys(j, path, {"x", "y"});
    const Vector x = get_vector(require(j, path, "x"), path + ".x");
    const Vector y = get_vector(require(j, path, "y"), path + ".y");
    if (x.size() != problem.dim_x() || y.size() != problem.dim_y()) {
      fail(path, "z0 dimensions do not match the problem");
    }
    return JointPoint(x, y);
  }
  check_keys(j, path, {"seed", "radius"});
  const std::uint64_t seed = get_seed(require(j, path, "seed"), path + ".seed");
  const double radius = get_number(require(j, path, "radius"), path + ".radius");
  if (!(radius >= 0.0)) fail(path + ".radius", "radius must be nonnegative");
  const JointPoint z_star = *problem.saddle_point();
  Rng rng(seed);
  Vector z = z_star.stacked() + rng.in_ball(z_star.size(), radius);
  return JointPoint::from_stacked(std::move(z), z_star.dim_x());
}

Scenario parse_scenario(const json& j, const std::string& path, const fs::path& base_dir) {
  check_keys(j, path, {"id", "problem", "solver", "stepsize", "inner", "z0", "iterations", "certificates"});
  Scenario s;
  s.id = get_string(require(j, path, "id"), path + ".id");
  if (s.id.empty() || !std::all_of(s.id.begin(), s.id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
      })) {
    fail(path + ".id", "id must be nonempty and use only [A-Za-z0-9_.-]");
  }
  s.problem = parse_problem(require(j, path, "problem"), path + ".problem", base_dir);
  try {
    s.solver = solver_kind_from_string(get_string(require(j, path, "solver"), path + ".solver"));
  } catch (const ConfigError& e) {
    fail(path + ".solver", e.what());
  }
  s.rule = parse_stepsize(require(j, path, "stepsize"), path + ".stepsize");
  if (j.contains("inner")) s.inner = parse_inner(j["inner"], path + ".inner");
  s.z0 = parse_z0(require(j, path, "z0"), path + ".z0", *s.problem);
  s.iterations = get_int(require(j, path, "iterations"), path + ".iterations");
  if (s.iterations < 1) fail(path + ".iterations", "N must be at least 1");

  s.certify = s.solver != SolverKind::gda;
  if (j.contains("certificates")) {
    const json& c = j["certificates"];
    const std::string cp = path + ".certificates";
    if (c.is_string() && c.get<std::string>() == "none") {
      s.certify = false;
    } else {
      check_keys(c, cp, {"schedule"});
      s.certify = true;
      const json& sched = require(c, cp, "schedule");
      if (sched.is_string()) {
        if (sched.get<std::string>() != "log2") fail(cp + ".schedule", "expected \"log2\" or a list of N");
      } else if (sched.is_array()) {
        for (std::size_t i = 0; i < sched.size(); ++i) {
          const std::int64_t n = get_int(sched[i], cp + ".schedule[" + std::to_string(i) + "]");
          if (n < 1 || n > s.iterations) fail(cp + ".schedule[" + std::to_string(i) + "]", "N outside [1, iterations]");
          s.schedule.push_back(n);
        }
        std::sort(s.schedule.begin(), s.schedule.end());
        s.schedule.erase(std::unique(s.schedule.begin(), s.schedule.end()), s.schedule.end());
      } else {
        fail(cp + ".schedule", "expected \"log2\" or a list of N");
      }
    }
    if (s.certify && s.solver == SolverKind::gda) fail(cp, "no bound defined for solver gda");
  }

  try {
    resolve_stepsize(s.rule, s.solver, *s.problem->lipschitz());
  } catch (const ConfigError& e) {
    fail(path + ".stepsize", e.what());
  }
  return s;
}

struct Outcome {
  std::optional<Trajectory> trajectory;
  std::optional<CertificateReport> report;
  std::string error;
};

Outcome run_scenario(const Scenario& s) {
  Outcome out;
  try {
    RunOptions options;
    options.inner = s.inner;
    out.trajectory = run(*s.problem, s.solver, s.z0, s.iterations, s.rule, options);
    if (s.certify) out.report = certify(*out.trajectory, *s.problem, s.schedule);
  } catch (const RunError& e) {
    out.error = e.what();
    out.trajectory = e.partial();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

void write_trajectory_csv(const fs::path& file, const Scenario& s, const Trajectory& traj) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  const QuadraticSaddleProblem& problem = *s.problem;
  const JointPoint z_star = *problem.saddle_point();
  const double f_star = problem.value(z_star);
  const auto theorem = theorem_for(s.solver);

  out << "scenario_id,k";
  for (Index i = 0; i < problem.dim_x(); ++i) out << ",x" << i;
  for (Index j = 0; j < problem.dim_y(); ++j) out << ",y" << j;
  out << ",f_at_ergodic,corollary_gap,bound_value,in_ball\n";

  BoundConstants constants;
  constants.d = squared_distance(traj.initial, z_star);
  constants.l = traj.lipschitz;
  constants.eta = traj.eta;
  constants.sigma = traj.sigma.value_or(0.0);
  CompactBall ball = CompactBall::pp(traj.initial, z_star);
  if (s.solver == SolverKind::ogda) ball = CompactBall::ogda(traj.initial, z_star);
  if (s.solver == SolverKind::eg) ball = CompactBall::eg(traj.initial, z_star, traj.eta, traj.lipschitz);

  std::string line;
  for (const auto& rec : traj.records) {
    const std::int64_t k = rec.k + 1;
    line = s.id + "," + std::to_string(k);
    for (Index i = 0; i < rec.iterate.size(); ++i) {
      line += ',';
      line += format_double(rec.iterate.stacked()[i]);
    }
    line += ',' + format_double(rec.f_at_ergodic);
    line += ',' + format_double(std::abs(rec.f_at_ergodic - f_star));
    double bound = std::numeric_limits<double>::quiet_NaN();
    if (theorem) {
      constants.n = k;
      bound = bound_value(*theorem, constants);
    }
    line += ',' + format_double(bound);
    bool in_ball = ball.contains(rec.iterate);
    if (rec.midpoint) in_ball = in_ball && ball.contains(*rec.midpoint);
    line += in_ball ? ",1\n" : ",0\n";
    out << line;
  }
}

ordered_json certificate_json(const std::string& id, const BoundCertificate& c) {
  ordered_json j;
  j["scenario"] = id;
  j["theorem"] = to_string(c.theorem);
  j["N"] = c.n;
  j["D"] = c.d;
  j["L"] = c.l;
  j["eta"] = c.eta;
  j["sigma"] = c.sigma ? ordered_json(*c.sigma) : ordered_json(nullptr);
  j["bound"] = c.bound;
  j["gap"] = c.gap;
  j["pass"] = c.pass;
  j["margin"] = c.margin;
  return j;
}

std::int64_t ball_failures(const CertificateReport& r) {
  return std::count_if(r.balls.begin(), r.balls.end(), [](const BallCertificate& b) { return !b.pass; });
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError("config syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  check_keys(root, "$", {"schema_version", "output_dir", "scenarios"});
  const std::int64_t version = get_int(require(root, "$", "schema_version"), "$.schema_version");
  if (version != kConfigSchemaVersion) {
    fail("$.schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                 std::to_string(kConfigSchemaVersion) + ")");
  }
  ExperimentConfig config;
  config.output_dir = root.contains("output_dir")
                          ? fs::path(get_string(root["output_dir"], "$.output_dir"))
                          : fs::path("results");
  if (config.output_dir.is_relative()) config.output_dir = base_dir / config.output_dir;

  const json& scenarios = require(root, "$", "scenarios");
  if (!scenarios.is_array()) fail("$.scenarios", "expected an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::string path = "$.scenarios[" + std::to_string(i) + "]";
    Scenario s = parse_scenario(scenarios[i], path, base_dir);
    if (!ids.insert(s.id).second) fail(path + ".id", "duplicate scenario id '" + s.id + "'");
    config.scenarios.push_back(std::move(s));
  }
  if (config.scenarios.empty()) fail("$.scenarios", "no scenarios");
  return config;
}

ExperimentConfig load_config(const fs::path& file) {
  const std::string text = read_file(file);
  try {
    return parse_config(text, file.parent_path());
  } catch (const ConfigParseError& e) {
    throw ConfigParseError(file.string() + ": " + e.what());
  }
}

unsigned threads_from_environment() {
  if (const char* env = std::getenv("SADDLE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_experiments(const ExperimentConfig& config, const RunSettings& settings, std::ostream& log) {
  const auto& scenarios = config.scenarios;
  std::vector<Outcome> outcomes(scenarios.size());
  parallel_for(scenarios.size(), settings.threads,
               [&](std::size_t i) { outcomes[i] = run_scenario(scenarios[i]); });

  std::vector<std::size_t> order(scenarios.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scenarios[a].id < scenarios[b].id; });

  fs::create_directories(config.output_dir);
  ordered_json certificates = ordered_json::array();
  std::ofstream summary(config.output_dir / "summary.csv", std::ios::binary);
  summary << "scenario_id,solver,problem,dim_x,dim_y,iterations,eta,lipschitz,D,final_gap,final_bound,"
             "bound_pass,bound_total,ball_violations,status\n";

  log << fmt::format("{:<28} {:<5} {:>7} {:>12} {:>14} {:>14} {:>9} {}\n", "scenario", "solver", "N",
                     "eta", "final_gap", "final_bound", "certs", "status");
  int exit_code = kExitOk;
  for (std::size_t idx : order) {
    const Scenario& s = scenarios[idx];
    const Outcome& o = outcomes[idx];
    if (o.trajectory && !o.trajectory->records.empty()) {
      write_trajectory_csv(config.output_dir / (s.id + ".csv"), s, *o.trajectory);
    }
    std::string status = "ok";
    std::int64_t passed = 0, total = 0, balls_bad = 0;
    double final_gap = std::numeric_limits<double>::quiet_NaN();
    double final_bound = std::numeric_limits<double>::quiet_NaN();
    if (!o.error.empty()) {
      status = "run_failed";
      exit_code = kExitFailure;
      log << "scenario " << s.id << ": run failed: " << o.error << "\n";
    }
    if (o.report) {
      for (const auto& c : o.report->bounds) {
        certificates.push_back(certificate_json(s.id, c));
        ++total;
        passed += c.pass ? 1 : 0;
      }
      balls_bad = ball_failures(*o.report);
      if (!o.report->bounds.empty()) final_bound = o.report->bounds.back().bound;
      if (!o.report->all_pass()) {
        status = o.error.empty() ? "certificate_failed" : status;
        exit_code = kExitFailure;
      }
    }
    if (o.trajectory && !o.trajectory->records.empty()) {
      final_gap = corollary_gap(*s.problem, o.trajectory->records.back().ergodic);
    }
    const double d = squared_distance(s.z0, *s.problem->saddle_point());
    const double eta = o.trajectory ? o.trajectory->eta : std::numeric_limits<double>::quiet_NaN();
    const double l = s.problem->lipschitz()->l_max;
    summary << s.id << ',' << to_string(s.solver) << ',' << to_string(s.problem->kind()) << ','
            << s.problem->dim_x() << ',' << s.problem->dim_y() << ',' << s.iterations << ','
            << format_double(eta) << ',' << format_double(l) << ',' << format_double(d) << ','
            << format_double(final_gap) << ',' << format_double(final_bound) << ',' << passed << ','
            << total << ',' << balls_bad << ',' << status << '\n';
    log << fmt::format("{:<28} {:<5} {:>7} {:>12.6g} {:>14.6e} {:>14.6e} {:>4}/{:<4} {}\n", s.id,
                       to_string(s.solver), s.iterations, eta, final_gap, final_bound, passed, total,
                       status);
  }
  std::ofstream cert_out(config.output_dir / "certificates.json", std::ios::binary);
  cert_out << certificates.dump(2) << '\n';
  log << (exit_code == kExitOk ? "all certificates pass\n" : "FAILED\n");
  return exit_code;
}

double replay_deviation(const Scenario& s) {
  RunOptions options;
  options.inner = s.inner;
  if (s.solver == SolverKind::pp && s.inner.mode != InnerSolver::Mode::affine_exact) {
    throw ConfigError("replay supports the proximal point method with affine_exact only");
  }
  const Trajectory traj = run(*s.problem, s.solver, s.z0, s.iterations, s.rule, options);
  oracles::ReplaySolver kind = oracles::ReplaySolver::gda;
  switch (s.solver) {
    case SolverKind::gda: kind = oracles::ReplaySolver::gda; break;
    case SolverKind::ogda: kind = oracles::ReplaySolver::ogda; break;
    case SolverKind::eg: kind = oracles::ReplaySolver::eg; break;
    case SolverKind::pp: kind = oracles::ReplaySolver::pp; break;
  }
  const auto replay = oracles::recurrence_replay(kind, *s.problem, s.z0, s.iterations, traj.eta);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.records.size(); ++k) {
    const Vector& z = traj.records[k].iterate.stacked();
    for (Index i = 0; i < z.size(); ++i) {
      worst = std::max(worst, std::abs(z[i] - replay.iterates[k][static_cast<std::size_t>(i)]));
    }
    if (traj.records[k].midpoint) {
      const Vector& m = traj.records[k].midpoint->stacked();
      for (Index i = 0; i < m.size(); ++i) {
        worst = std::max(worst, std::abs(m[i] - replay.midpoints[k][static_cast<std::size_t>(i)]));
      }
    }
  }
  return worst;
}

int replay_experiments(const ExperimentConfig& config, std::ostream& log, double tolerance) {
  int exit_code = kExitOk;
  for (const auto& s : config.scenarios) {
    try {
      const double dev = replay_deviation(s);
      const bool ok = dev <= tolerance;
      log << fmt::format("{:<28} max deviation {:.3e} {}\n", s.id, dev, ok ? "ok" : "MISMATCH");
      if (!ok) exit_code = kExitFailure;
    } catch (const std::exception& e) {
      log << fmt::format("{:<28} replay failed: {}\n", s.id, e.what());
      exit_code = kExitFailure;
    }
  }
  return exit_code;
}

}  // namespace saddle::experiment

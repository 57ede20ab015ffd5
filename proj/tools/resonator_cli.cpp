// resonator: factor single problems and run the experiment protocols.
//
// Every experiment writes <out>/<command>.csv plus <out>/<command>.json, a
// sidecar with the effective configuration, seed, version and timing. Passing
// that sidecar back through --config reproduces the CSV byte for byte.
//
// Exit status: 0 success, 1 usage or I/O error, 2 the decoded factorization
// does not match the known truth (factor only).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "resonator/benchmarks.hpp"
#include "resonator/experiments.hpp"
#include "resonator/problem.hpp"
#include "resonator/resonator.hpp"
#include "resonator/serialization.hpp"
#include "resonator/stability.hpp"

#ifndef RESONATOR_VERSION
#define RESONATOR_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace resonator;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMismatch = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// RESONATOR_LOG: quiet (or 0), info (default), debug.
enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("RESONATOR_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "quiet" || v == "0" || v == "off" || v == "error") return LogLevel::Quiet;
    if (v == "debug" || v == "2" || v == "trace") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log(LogLevel level, const std::string& message) {
  if (level == LogLevel::Quiet || static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::cerr << "[resonator] " << message << '\n';
}

// Options a command understands, keyed by long name. Each knows how to read
// its bound variable into JSON and how to overwrite it from a config value.
struct Param {
  CLI::Option* option = nullptr;
  std::function<json()> get;
  std::function<void(const json&)> set;
};

using Params = std::map<std::string, Param>;

template <class T>
CLI::Option* add(CLI::App* app, Params& params, const std::string& name, T& var, const std::string& help) {
  auto* opt = app->add_option("--" + name, var, help);
  params[name] = {opt, [&var] { return json(var); }, [&var](const json& j) { var = j.get<T>(); }};
  return opt;
}

CLI::Option* add_flag(CLI::App* app, Params& params, const std::string& name, bool& var,
                      const std::string& help) {
  auto* opt = app->add_flag("--" + name, var, help);
  params[name] = {opt, [&var] { return json(var); }, [&var](const json& j) { var = j.get<bool>(); }};
  return opt;
}

// Values from --config fill every option not given on the command line. A
// sidecar is accepted as is: its "config" object is used and its "command"
// must match.
void apply_config(const std::string& path, const std::string& command, Params& params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  if (j.contains("config")) {
    if (j.contains("command") && j["command"] != command) {
      throw UsageError("config file was written by '" + j["command"].get<std::string>() + "', not '" +
                       command + "'");
    }
    j = j["config"];
  }
  for (const auto& [key, value] : j.items()) {
    auto it = params.find(key);
    if (it == params.end()) throw UsageError("unknown config key '" + key + "' for " + command);
    if (it->second.option->count() > 0) continue;
    try {
      it->second.set(value);
    } catch (const json::exception&) {
      throw UsageError("config key '" + key + "' has the wrong type");
    }
  }
}

json effective_config(const Params& params) {
  json j = json::object();
  for (const auto& [name, p] : params) {
    if (name == "config" || name == "out") continue;
    j[name] = p.get();
  }
  return j;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

struct Common {
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 0;
  std::string config;
};

void add_common(CLI::App* app, Params& params, Common& common) {
  add(app, params, "seed", common.seed, "Master seed");
  add(app, params, "out", common.out, "Output directory");
  add(app, params, "threads", common.threads, "Worker threads, 0 = all cores");
  add(app, params, "config", common.config, "JSON config file (a sidecar works too)");
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(10);
  return out;
}

void write_sidecar(const fs::path& path, const std::string& command, const Common& common, const Params& params,
                   const std::string& started, double seconds, const std::vector<std::string>& outputs,
                   json extra = json::object()) {
  json j;
  j["command"] = command;
  j["version"] = RESONATOR_VERSION;
  j["seed"] = common.seed;
  j["threads"] = common.threads;
  j["config"] = effective_config(params);
  j["timing"] = {{"started_utc", started}, {"wall_seconds", seconds}};
  j["outputs"] = outputs;
  for (auto& [k, v] : extra.items()) j[k] = v;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw UsageError("bad value for " + key + ": '" + text + "'");
  return static_cast<std::size_t>(v);
}

WeightVariant parse_variant(const std::string& v) {
  if (v == "op") return WeightVariant::OuterProduct;
  if (v == "ols") return WeightVariant::OrdinaryLeastSquares;
  throw UsageError("variant must be op or ols, got '" + v + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

// ---- factor ----------------------------------------------------------------

struct FactorArgs {
  std::vector<std::string> gen;
  std::string alg = "resonator-op";
  std::string problem;
  std::vector<std::string> codebooks;
  std::string composite;
  std::vector<std::size_t> truth;
  std::string write_problem;
  std::size_t max_iterations = 1000;
  bool synchronous = false;
  bool brute_force = false;
};

FactorizationProblem factor_problem(const FactorArgs& a, const Common& common) {
  if (!a.gen.empty()) {
    std::map<std::string, std::string> kv;
    for (const auto& item : a.gen) {
      const auto eq = item.find('=');
      require(eq != std::string::npos, "--gen expects KEY=VALUE items, got '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    for (const auto& [k, v] : kv) require(k == "N" || k == "F" || k == "D", "--gen: unknown key '" + k + "'");
    require(kv.count("N") && kv.count("D"), "--gen needs N= and D=");
    const std::size_t n = parse_size("N", kv["N"]);
    std::vector<std::size_t> sizes;
    std::stringstream ds(kv["D"]);
    for (std::string part; std::getline(ds, part, ',');) sizes.push_back(parse_size("D", part));
    if (kv.count("F")) {
      const std::size_t f = parse_size("F", kv["F"]);
      if (sizes.size() == 1) sizes.assign(f, sizes.front());
      require(sizes.size() == f, "--gen: D lists " + std::to_string(sizes.size()) + " sizes but F=" +
                                     std::to_string(f));
    }
    require(sizes.size() >= 2, "--gen: need F >= 2");
    require(n >= 1, "--gen: need N >= 1");
    for (auto d : sizes) require(d >= 1, "--gen: codebook sizes must be >= 1");
    return trial_problem(common.seed, n, sizes, 0);
  }
  if (!a.problem.empty()) return load_problem(a.problem);
  require(!a.codebooks.empty() && !a.composite.empty(),
          "factor needs --gen, --problem, or --codebook (one per factor) with --composite");
  std::vector<Codebook> codebooks;
  for (const auto& path : a.codebooks) codebooks.push_back(load_codebook(path));
  auto composite = load_vector(a.composite);
  if (a.truth.empty()) return FactorizationProblem(std::move(codebooks), std::move(composite));
  return FactorizationProblem(std::move(codebooks), std::move(composite), a.truth);
}

// Exhaustive search for the indices maximizing |<c, prod_f x_f>|, ties to the
// lexicographically first tuple.
std::vector<std::size_t> brute_force(const FactorizationProblem& problem) {
  const auto f = problem.factors();
  const auto n = problem.dimension();
  std::vector<std::size_t> idx(f, 0), best(f, 0);
  long best_score = -1;
  std::vector<std::int8_t> prod(n);
  while (true) {
    const auto c = problem.composite().entries();
    for (std::size_t i = 0; i < n; ++i) prod[i] = c[i];
    for (std::size_t g = 0; g < f; ++g) {
      const auto col = problem.codebook(g).column_entries(idx[g]);
      for (std::size_t i = 0; i < n; ++i) prod[i] = static_cast<std::int8_t>(prod[i] * col[i]);
    }
    long s = 0;
    for (auto v : prod) s += v;
    if (std::labs(s) > best_score) {
      best_score = std::labs(s);
      best = idx;
    }
    std::size_t g = 0;
    while (g < f && ++idx[g] == problem.codebook(g).size()) idx[g++] = 0;
    if (g == f) break;
  }
  return best;
}

int cmd_factor(const FactorArgs& a, const Common& common, const Params& params) {
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const auto problem = factor_problem(a, common);
  if (!a.write_problem.empty()) {
    save_problem(a.write_problem, problem);
    log(LogLevel::Info, "wrote problem to " + a.write_problem);
  }

  SolveResult result;
  if (a.alg == "resonator-op" || a.alg == "resonator-ols") {
    ResonatorConfig config;
    config.weights = a.alg == "resonator-op" ? WeightVariant::OuterProduct : WeightVariant::OrdinaryLeastSquares;
    config.convention = a.synchronous ? UpdateConvention::Synchronous : UpdateConvention::Asynchronous;
    config.max_iterations = a.max_iterations;
    config.validate();
    result = run_resonator(problem, config, derive_seed(common.seed, Stream::Solver, {0}));
  } else {
    require(!a.synchronous, "--synchronous only applies to the resonator");
    auto solver = make_solver(a.alg);
    result = solver.solve(problem, derive_seed(common.seed, Stream::Solver, {0}), a.max_iterations);
  }

  const double similarity = result.similarity_trace.empty() ? 0.0 : result.similarity_trace.back();
  std::cout << "indices:";
  for (const auto& d : result.decoded) std::cout << ' ' << d.index;
  std::cout << "\nsigns:  ";
  for (const auto& d : result.decoded) std::cout << ' ' << (d.sign < 0 ? '-' : '+');
  std::cout << "\ntermination: " << to_string(result.termination.kind);
  if (result.termination.kind == TerminationKind::LimitCycle) {
    std::cout << " (length " << result.termination.cycle_length << ")";
  }
  std::cout << "\niterations: " << result.iterations << "\nsimilarity: " << similarity << '\n';

  int status = kExitOk;
  json extra;
  extra["result"] = {{"indices", result.indices()},
                     {"termination", to_string(result.termination.kind)},
                     {"cycle_length", result.termination.cycle_length},
                     {"iterations", result.iterations},
                     {"similarity", similarity}};
  std::vector<int> signs;
  for (const auto& d : result.decoded) signs.push_back(d.sign);
  extra["result"]["signs"] = signs;
  if (problem.truth()) {
    const double acc = total_accuracy(result, *problem.truth());
    std::cout << "accuracy: " << acc << '\n';
    extra["result"]["truth"] = *problem.truth();
    extra["result"]["accuracy"] = acc;
    if (acc < 1.0) status = kExitMismatch;
  }
  if (a.brute_force) {
    require(problem.search_space_size() <= 1e7, "--brute-force is limited to M <= 1e7");
    const auto best = brute_force(problem);
    const bool agree = best == result.indices();
    std::cout << "brute force:";
    for (auto i : best) std::cout << ' ' << i;
    std::cout << (agree ? " (agrees)" : " (differs)") << '\n';
    extra["result"]["brute_force"] = best;
    if (!agree) status = kExitMismatch;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(fs::path(common.out) / "factor.json", "factor", common, params, started, seconds, {}, extra);
  return status;
}

// ---- experiments -----------------------------------------------------------

struct AccuracyArgs {
  std::size_t n = 1500;
  std::size_t f = 3;
  std::vector<std::size_t> d = {2, 4, 8, 16, 32, 64};
  std::size_t trials = 1000;
  std::string alg = "resonator-op";
  double k_fraction = 0.001;
  std::size_t min_iterations = 100;
};

int cmd_accuracy(const AccuracyArgs& a, const Common& common, const Params& params) {
  require(a.trials >= 1 && a.f >= 2 && a.n >= 1, "accuracy needs N >= 1, F >= 2, trials >= 1");
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOptions opts{a.k_fraction, a.min_iterations, common.threads};
  const auto solver = make_solver(a.alg);
  const fs::path csv = fs::path(common.out) / "accuracy.csv";
  auto out = open_output(csv);
  out << "N,F,D,M,solver,trials,accuracy,stderr,aborted,mean_iterations\n";
  for (auto d : a.d) {
    require(d >= 1, "D must be >= 1");
    const std::vector<std::size_t> grid{d};
    const auto row = accuracy_curve(a.n, a.f, grid, a.trials, solver, common.seed, opts).front();
    out << a.n << ',' << a.f << ',' << d << ',' << row.m << ',' << a.alg << ',' << row.estimate.trials << ','
        << row.estimate.mean << ',' << row.estimate.standard_error << ',' << row.estimate.aborted << ','
        << row.estimate.mean_iterations << '\n';
    log(LogLevel::Info, a.alg + " D=" + std::to_string(d) + " accuracy " + std::to_string(row.estimate.mean));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(fs::path(common.out) / "accuracy.json", "accuracy", common, params, started, seconds,
                {"accuracy.csv"});
  return kExitOk;
}

struct CapacityArgs {
  std::vector<std::size_t> n = {1000};
  std::vector<std::size_t> f = {3};
  double p = 0.99;
  double k_fraction = 0.001;
  std::size_t min_iterations = 100;
  std::size_t trials = 1000;
  std::string alg = "resonator-op";
  std::size_t d_limit = 4096;
  std::size_t early_stop_block = 50;
};

int cmd_capacity(const CapacityArgs& a, const Common& common, const Params& params) {
  require(a.trials >= 1, "capacity needs trials >= 1");
  require(a.p > 0.0 && a.p < 1.0, "p must be in (0, 1)");
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const auto solver = make_solver(a.alg);
  ExperimentOptions opts{a.k_fraction, a.min_iterations, common.threads, a.early_stop_block, {}};
  const fs::path dir(common.out);
  auto out = open_output(dir / "capacity.csv");
  auto path_out = open_output(dir / "capacity_path.csv");
  out << "N,F,p,k_fraction,trials,D_max,M_max,accuracy,stderr,trials_at_max,below_floor,hit_limit\n";
  path_out << "N,F,D,M,trials,accuracy,stderr,passed\n";
  std::vector<std::string> outputs{"capacity.csv", "capacity_path.csv"};
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_f;
  for (auto f : a.f) {
    for (auto n : a.n) {
      opts.on_capacity_step = [&](const CapacityStep& s) {
        log(LogLevel::Debug, a.alg + " N=" + std::to_string(n) + " F=" + std::to_string(f) + " D=" +
                                 std::to_string(s.d) + " accuracy " + std::to_string(s.estimate.mean) + " over " +
                                 std::to_string(s.estimate.trials) + " trials");
      };
      const auto point = find_operational_capacity(n, f, a.p, a.trials, solver, common.seed, opts, a.d_limit);
      out << n << ',' << f << ',' << a.p << ',' << a.k_fraction << ',' << a.trials << ',' << point.d_max << ','
          << point.m_max << ',' << point.accuracy_at_max.mean << ',' << point.accuracy_at_max.standard_error << ','
          << point.accuracy_at_max.trials << ',' << point.below_floor << ',' << point.hit_limit << '\n';
      for (const auto& s : point.path) {
        path_out << n << ',' << f << ',' << s.d << ',' << std::pow(static_cast<double>(s.d), static_cast<double>(f))
                 << ',' << s.estimate.trials << ',' << s.estimate.mean << ',' << s.estimate.standard_error << ','
                 << s.passed << '\n';
      }
      log(LogLevel::Info, a.alg + " N=" + std::to_string(n) + " F=" + std::to_string(f) +
                              " D_max=" + std::to_string(point.d_max));
      by_f[f].push_back({static_cast<double>(n), point.m_max});
    }
  }
  std::vector<std::pair<double, double>> c_by_f;
  bool fitted = false;
  std::ofstream fit_out;
  for (const auto& [f, pts] : by_f) {
    std::vector<double> xs;
    for (const auto& pt : pts) xs.push_back(pt.first);
    std::sort(xs.begin(), xs.end());
    if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3) continue;
    if (!fitted) {
      fit_out = open_output(dir / "capacity_fit.csv");
      fit_out << "F,a,b,c,r_squared\n";
      outputs.push_back("capacity_fit.csv");
      fitted = true;
    }
    const auto fit = fit_quadratic(pts);
    fit_out << f << ',' << fit.a << ',' << fit.b << ',' << fit.c << ',' << fit.r_squared << '\n';
    if (fit.c > 0.0) c_by_f.push_back({static_cast<double>(f), fit.c});
  }
  json extra;
  if (c_by_f.size() >= 2) {
    const auto law = fit_power_law(c_by_f);
    extra["c_vs_F_power_law"] = {{"coefficient", law.coefficient}, {"exponent", law.exponent}};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(dir / "capacity.json", "capacity", common, params, started, seconds, outputs, extra);
  return kExitOk;
}

struct BitflipArgs {
  std::size_t n = 1000;
  std::size_t f = 5;
  std::vector<std::size_t> d = {50, 100, 200, 400};
  std::size_t trials = 250;
  std::string variant = "op";
};

int cmd_bitflip(const BitflipArgs& a, const Common& common, const Params& params) {
  require(a.f >= 2 && a.n >= 2 && a.trials >= 2, "bitflip needs N >= 2, F >= 2, trials >= 2");
  const auto variant = parse_variant(a.variant);
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  auto out = open_output(fs::path(common.out) / "bitflip.csv");
  bool header = true;
  for (auto d : a.d) {
    require(d >= 2, "bitflip needs D >= 2");
    const std::vector<std::size_t> sizes(a.f, d);
    const auto rows = percolated_chain(a.n, sizes);
    const auto empirical = empirical_bitflip(common.seed, a.n, sizes, a.trials, variant, common.threads);
    write_bitflip_csv(out, a.n, sizes, rows, empirical, header);
    header = false;
    log(LogLevel::Info, "bitflip D=" + std::to_string(d) + " done");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(fs::path(common.out) / "bitflip.json", "bitflip", common, params, started, seconds,
                {"bitflip.csv"});
  return kExitOk;
}

struct SpeedArgs {
  std::size_t n = 1500;
  std::size_t f = 3;
  std::size_t d = 40;
  std::size_t trials = 100;
  std::vector<std::string> algs = {"resonator-op", "resonator-ols", "als", "ista",
                                   "fista", "pgd-simplex", "mw", "msc"};
  std::size_t resonator_iterations = 1000;
  std::size_t warmup = 3;
  bool traces = false;
};

int cmd_speed(const SpeedArgs& a, const Common& common, const Params& params) {
  require(a.trials >= 1 && a.f >= 2, "speed needs F >= 2 and trials >= 1");
  if (common.threads > 1) log(LogLevel::Info, "speed always runs on one thread; --threads ignored");
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SolverSpec> solvers;
  for (const auto& name : a.algs) solvers.push_back(make_solver(name));
  const auto summaries = speed_trace(a.n, a.f, a.d, a.trials, solvers, common.seed, a.resonator_iterations, a.warmup);

  const fs::path dir(common.out);
  std::vector<std::string> outputs{"speed.csv", "speed_trials.csv", "speed_timing.csv"};
  auto out = open_output(dir / "speed.csv");
  out << "algorithm,N,F,D,trials,accuracy,stderr,aborted,mean_iterations\n";
  auto trials_out = open_output(dir / "speed_trials.csv");
  trials_out << "algorithm,trial,composite_checksum,accuracy,iterations,termination,aborted,final_similarity\n";
  // Wall-clock numbers vary run to run, so they live apart from the
  // reproducible files.
  auto timing = open_output(dir / "speed_timing.csv");
  timing << "algorithm,total_seconds,total_iterations,seconds_per_iteration,relative_to_first\n";
  std::ofstream traces;
  if (a.traces) {
    traces = open_output(dir / "speed_traces.csv");
    traces << "algorithm,trial,iteration,similarity,linear_similarity\n";
    outputs.push_back("speed_traces.csv");
  }
  const double reference = summaries.empty() ? 0.0 : summaries.front().seconds_per_iteration;
  for (const auto& s : summaries) {
    out << s.algorithm << ',' << a.n << ',' << a.f << ',' << a.d << ',' << s.accuracy.trials << ','
        << s.accuracy.mean << ',' << s.accuracy.standard_error << ',' << s.accuracy.aborted << ','
        << s.accuracy.mean_iterations << '\n';
    timing << s.algorithm << ',' << s.total_seconds << ',' << s.total_iterations << ',' << s.seconds_per_iteration
           << ',' << (reference > 0.0 ? s.seconds_per_iteration / reference : 0.0) << '\n';
    for (std::size_t t = 0; t < s.trials.size(); ++t) {
      const auto& tr = s.trials[t];
      trials_out << s.algorithm << ',' << t << ',' << tr.composite_checksum << ',' << tr.accuracy << ','
                 << tr.iterations << ',' << to_string(tr.termination) << ',' << tr.aborted << ','
                 << (tr.similarity_trace.empty() ? 0.0 : tr.similarity_trace.back()) << '\n';
      if (a.traces) {
        for (std::size_t i = 0; i < tr.similarity_trace.size(); ++i) {
          traces << s.algorithm << ',' << t << ',' << i + 1 << ',' << tr.similarity_trace[i] << ',';
          if (i < tr.linear_similarity_trace.size()) traces << tr.linear_similarity_trace[i];
          traces << '\n';
        }
      }
    }
    log(LogLevel::Info, s.algorithm + " accuracy " + std::to_string(s.accuracy.mean) + ", " +
                            std::to_string(s.seconds_per_iteration * 1e6) + " us/iteration");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(dir / "speed.json", "speed", common, params, started, seconds, outputs);
  return kExitOk;
}

struct NoiseArgs {
  std::size_t n = 1500;
  std::size_t f = 3;
  std::vector<std::size_t> d = {10};
  std::vector<double> zeta = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::size_t trials = 500;
  std::string variant = "op";
  double k_fraction = 0.001;
  std::size_t min_iterations = 100;
};

int cmd_noise(const NoiseArgs& a, const Common& common, const Params& params) {
  require(a.trials >= 1 && a.f >= 2, "noise needs F >= 2 and trials >= 1");
  for (double z : a.zeta) require(z >= 0.0 && z <= 1.0, "zeta must be in [0, 1]");
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  NoiseOptions opts;
  opts.experiment = {a.k_fraction, a.min_iterations, common.threads, 0, {}};
  opts.variant = parse_variant(a.variant);
  const auto rows = noise_sweep(a.n, a.f, a.d, a.zeta, a.trials, common.seed, opts);
  auto out = open_output(fs::path(common.out) / "noise.csv");
  out << "N,F,D,zeta,flipped,trials,accuracy,stderr,mean_iterations\n";
  for (const auto& r : rows) {
    out << a.n << ',' << a.f << ',' << r.d << ',' << r.zeta << ',' << r.flipped << ',' << r.estimate.trials << ','
        << r.estimate.mean << ',' << r.estimate.standard_error << ',' << r.estimate.mean_iterations << '\n';
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(fs::path(common.out) / "noise.json", "noise", common, params, started, seconds, {"noise.csv"});
  return kExitOk;
}

struct BasinArgs {
  std::size_t n = 1500;
  std::size_t f = 3;
  std::size_t d = 50;
  std::vector<double> theta = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t trials = 1000;
  std::vector<std::string> algs = {"pgd-simplex", "mw"};
};

int cmd_basin(const BasinArgs& a, const Common& common, const Params& params) {
  require(a.trials >= 1 && a.f >= 2 && a.d >= 2, "basin needs F >= 2, D >= 2, trials >= 1");
  std::vector<Algorithm> algorithms;
  for (const auto& name : a.algs) {
    if (name == "pgd-simplex" || name == "pgd") {
      algorithms.push_back(Algorithm::PGD);
    } else if (name == "mw") {
      algorithms.push_back(Algorithm::MW);
    } else {
      throw UsageError("basin supports pgd-simplex and mw, got '" + name + "'");
    }
  }
  for (double t : a.theta) require(t >= 0.0 && t <= 1.0, "theta must be in [0, 1]");
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = basin_experiment(a.n, a.f, a.d, a.theta, a.trials, algorithms, common.seed, common.threads);
  auto out = open_output(fs::path(common.out) / "basin.csv");
  out << "algorithm,N,F,D,theta,direction,trials,accuracy,stderr,mean_iterations\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << a.n << ',' << a.f << ',' << a.d << ',' << r.theta << ',' << to_string(r.target)
        << ',' << r.estimate.trials << ',' << r.estimate.mean << ',' << r.estimate.standard_error << ','
        << r.estimate.mean_iterations << '\n';
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_sidecar(fs::path(common.out) / "basin.json", "basin", common, params, started, seconds, {"basin.csv"});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonator network factorization and experiments"};
  app.set_version_flag("--version", std::string(RESONATOR_VERSION));
  app.require_subcommand(1);

  Common common;
  std::map<std::string, Params> params;

  FactorArgs fa;
  auto* factor = app.add_subcommand("factor", "Factor one composite");
  {
    auto& p = params["factor"];
    add_common(factor, p, common);
    add(factor, p, "gen", fa.gen, "Generate a problem: N=.. F=.. D=.. (D may list one size per factor)")
        ->expected(1, 3);
    add(factor, p, "alg", fa.alg, "Solver")->check(CLI::IsMember(solver_names()));
    add(factor, p, "problem", fa.problem, "Problem file (binary or JSON)");
    add(factor, p, "codebook", fa.codebooks, "Codebook file, once per factor in order");
    add(factor, p, "composite", fa.composite, "Composite vector file");
    add(factor, p, "truth", fa.truth, "Known indices, for checking loaded codebooks");
    add(factor, p, "write-problem", fa.write_problem, "Save the problem (.json for JSON)");
    add(factor, p, "max-iterations", fa.max_iterations, "Resonator iteration cap")->check(CLI::PositiveNumber);
    add_flag(factor, p, "synchronous", fa.synchronous, "Resonator: update all factors from the previous sweep");
    add_flag(factor, p, "brute-force", fa.brute_force, "Also enumerate every factorization and compare");
  }

  AccuracyArgs aa;
  auto* accuracy = app.add_subcommand("accuracy", "Accuracy as a function of M");
  {
    auto& p = params["accuracy"];
    add_common(accuracy, p, common);
    add(accuracy, p, "N", aa.n, "Vector dimension");
    add(accuracy, p, "F", aa.f, "Number of factors");
    add(accuracy, p, "D", aa.d, "Codebook sizes to test")->delimiter(',');
    add(accuracy, p, "trials", aa.trials, "Problems per point");
    add(accuracy, p, "alg", aa.alg, "Solver")->check(CLI::IsMember(solver_names()));
    add(accuracy, p, "k-fraction", aa.k_fraction, "Iteration cap as a fraction of M");
    add(accuracy, p, "min-iterations", aa.min_iterations, "Floor on the iteration cap");
  }

  CapacityArgs ca;
  auto* capacity = app.add_subcommand("capacity", "Operational capacity search and quadratic fit");
  {
    auto& p = params["capacity"];
    add_common(capacity, p, common);
    add(capacity, p, "N", ca.n, "Vector dimensions")->delimiter(',');
    add(capacity, p, "F", ca.f, "Numbers of factors")->delimiter(',');
    add(capacity, p, "p", ca.p, "Accuracy bar");
    add(capacity, p, "k-fraction", ca.k_fraction, "Iteration cap as a fraction of M");
    add(capacity, p, "min-iterations", ca.min_iterations, "Floor on the iteration cap");
    add(capacity, p, "trials", ca.trials, "Problems per tested D");
    add(capacity, p, "alg", ca.alg, "Solver")->check(CLI::IsMember(solver_names()));
    add(capacity, p, "d-limit", ca.d_limit, "Largest D the doubling phase may reach");
    add(capacity, p, "early-stop-block", ca.early_stop_block,
        "Trials per block before checking whether p is out of reach, 0 = off");
  }

  BitflipArgs ba;
  auto* bitflip = app.add_subcommand("bitflip", "Percolated-noise theory against simulation");
  {
    auto& p = params["bitflip"];
    add_common(bitflip, p, common);
    add(bitflip, p, "N", ba.n, "Vector dimension");
    add(bitflip, p, "F", ba.f, "Number of factors");
    add(bitflip, p, "D", ba.d, "Codebook sizes")->delimiter(',');
    add(bitflip, p, "trials", ba.trials, "Simulated problems per size");
    add(bitflip, p, "variant", ba.variant, "op or ols");
  }

  SpeedArgs sa;
  auto* speed = app.add_subcommand("speed", "Per-iteration cost and accuracy on shared problems");
  {
    auto& p = params["speed"];
    add_common(speed, p, common);
    add(speed, p, "N", sa.n, "Vector dimension");
    add(speed, p, "F", sa.f, "Number of factors");
    add(speed, p, "D", sa.d, "Codebook size");
    add(speed, p, "trials", sa.trials, "Problems");
    add(speed, p, "algs", sa.algs, "Solvers")->delimiter(',')->check(CLI::IsMember(solver_names()));
    add(speed, p, "resonator-iterations", sa.resonator_iterations, "Resonator iteration cap");
    add(speed, p, "warmup", sa.warmup, "Untimed warm-up problems per solver");
    add_flag(speed, p, "traces", sa.traces, "Write per-iteration similarity traces");
  }

  NoiseArgs na;
  auto* noise = app.add_subcommand("noise", "Factoring corrupted composites");
  {
    auto& p = params["noise"];
    add_common(noise, p, common);
    add(noise, p, "N", na.n, "Vector dimension");
    add(noise, p, "F", na.f, "Number of factors");
    add(noise, p, "D", na.d, "Codebook sizes")->delimiter(',');
    add(noise, p, "zeta", na.zeta, "Fractions of flipped bits")->delimiter(',');
    add(noise, p, "trials", na.trials, "Problems per point");
    add(noise, p, "variant", na.variant, "op or ols");
    add(noise, p, "k-fraction", na.k_fraction, "Iteration cap as a fraction of M");
    add(noise, p, "min-iterations", na.min_iterations, "Floor on the iteration cap");
  }

  BasinArgs sb;
  auto* basin = app.add_subcommand("basin", "Simplex-interior initializations nudged toward or away from the truth");
  {
    auto& p = params["basin"];
    add_common(basin, p, common);
    add(basin, p, "N", sb.n, "Vector dimension");
    add(basin, p, "F", sb.f, "Number of factors");
    add(basin, p, "D", sb.d, "Codebook size");
    add(basin, p, "theta", sb.theta, "Nudge sizes")->delimiter(',');
    add(basin, p, "trials", sb.trials, "Problems per point");
    add(basin, p, "algs", sb.algs, "pgd-simplex and/or mw")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    auto& p = params[name];
    if (!common.config.empty()) apply_config(common.config, name, p);
    if (name == "factor") return cmd_factor(fa, common, p);
    if (name == "accuracy") return cmd_accuracy(aa, common, p);
    if (name == "capacity") return cmd_capacity(ca, common, p);
    if (name == "bitflip") return cmd_bitflip(ba, common, p);
    if (name == "speed") return cmd_speed(sa, common, p);
    if (name == "noise") return cmd_noise(na, common, p);
    if (name == "basin") return cmd_basin(sb, common, p);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

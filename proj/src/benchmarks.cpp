#include "resonator/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "resonator/projections.hpp"

namespace resonator {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ALS: return "als";
    case Algorithm::ISTA: return "ista";
    case Algorithm::FISTA: return "fista";
    case Algorithm::PGD: return "pgd";
    case Algorithm::MW: return "mw";
    case Algorithm::MSC: return "msc";
  }
  return "unknown";
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::None: return "none";
    case Constraint::Simplex: return "simplex";
    case Constraint::L1Ball: return "l1";
    case Constraint::Box01: return "box01";
  }
  return "unknown";
}

BenchmarkConfig BenchmarkConfig::defaults(Algorithm algorithm, Constraint constraint) {
  BenchmarkConfig c;
  c.algorithm = algorithm;
  switch (algorithm) {
    case Algorithm::ALS:
      c.loss = Loss::SquaredError;
      c.constraint = Constraint::None;
      break;
    case Algorithm::ISTA:
    case Algorithm::FISTA:
      c.loss = Loss::SquaredError;
      c.constraint = Constraint::None;
      c.lambda = 0.01;
      break;
    case Algorithm::PGD:
      c.loss = Loss::NegInnerProduct;
      c.constraint = constraint == Constraint::L1Ball ? Constraint::L1Ball : Constraint::Simplex;
      c.eta = 0.01;
      break;
    case Algorithm::MW:
      c.loss = Loss::NegInnerProduct;
      c.constraint = Constraint::Simplex;
      c.eta = 0.3;
      c.epsilon = 1e-5;
      break;
    case Algorithm::MSC:
      c.loss = Loss::NegInnerProduct;
      c.constraint = Constraint::Box01;
      c.eta = 0.1;
      c.epsilon = 1e-5;
      break;
  }
  return c;
}

double BenchmarkConfig::convergence_scale() const {
  switch (algorithm) {
    case Algorithm::PGD:
    case Algorithm::MW:
    case Algorithm::MSC: return eta;
    default: return 1.0;
  }
}

void BenchmarkConfig::validate() const {
  bool ok = false;
  switch (algorithm) {
    case Algorithm::ALS:
    case Algorithm::ISTA:
    case Algorithm::FISTA:
      ok = loss == Loss::SquaredError && constraint == Constraint::None;
      break;
    case Algorithm::PGD:
      ok = loss == Loss::NegInnerProduct &&
           (constraint == Constraint::Simplex || constraint == Constraint::L1Ball);
      break;
    case Algorithm::MW:
      ok = loss == Loss::NegInnerProduct && constraint == Constraint::Simplex;
      break;
    case Algorithm::MSC:
      ok = loss == Loss::NegInnerProduct && constraint == Constraint::Box01;
      break;
  }
  if (!ok) {
    throw std::invalid_argument("BenchmarkConfig: unsupported combination " + to_string(algorithm) +
                                " with constraint " + to_string(constraint));
  }
  if (!(eta > 0.0)) throw std::invalid_argument("BenchmarkConfig: eta must be > 0");
  if (algorithm == Algorithm::MW && eta > 0.5) {
    throw std::invalid_argument("BenchmarkConfig: MW needs eta <= 0.5 to keep weights positive");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("BenchmarkConfig: lambda must be >= 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("BenchmarkConfig: epsilon must be >= 0");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("BenchmarkConfig: tolerance must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("BenchmarkConfig: max_iterations must be >= 1");
}

void BenchmarkState::refresh(const FactorizationProblem& problem, std::size_t f) {
  estimates[f].noalias() = problem.codebook(f).matrix() * coeffs[f];
}

namespace {

std::vector<Eigen::VectorXd> estimates_of(const FactorizationProblem& problem,
                                          const std::vector<Eigen::VectorXd>& coeffs) {
  if (coeffs.size() != problem.factors()) throw std::invalid_argument("coefficients: wrong factor count");
  std::vector<Eigen::VectorXd> out;
  out.reserve(coeffs.size());
  for (std::size_t f = 0; f < coeffs.size(); ++f) {
    const auto& x = problem.codebook(f).matrix();
    if (coeffs[f].size() != x.cols()) throw std::invalid_argument("coefficients: wrong length");
    out.emplace_back(x * coeffs[f]);
  }
  return out;
}

Eigen::VectorXd composite_real(const FactorizationProblem& problem) {
  return problem.composite().to_real();
}

Eigen::VectorXd product_of(const std::vector<Eigen::VectorXd>& estimates) {
  Eigen::VectorXd p = estimates.front();
  for (std::size_t g = 1; g < estimates.size(); ++g) p.array() *= estimates[g].array();
  return p;
}

void require_finite(const Eigen::VectorXd& a, std::size_t f, std::size_t iteration, const char* what) {
  if (!a.allFinite()) {
    std::ostringstream msg;
    msg << what << ": non-finite coefficients for factor " << f << " at iteration " << iteration;
    throw NumericalError(msg.str());
  }
}

void commit(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
            Eigen::VectorXd next, const char* what) {
  require_finite(next, f, state.iteration, what);
  state.coeffs[f] = std::move(next);
  state.refresh(problem, f);
}

// Lipschitz constant of the squared-error gradient in a_f: the largest
// eigenvalue of xi^T xi with xi = diag(o) X_f.
double squared_error_lipschitz(const Eigen::MatrixXd& x, const Eigen::VectorXd& o_squared,
                               Eigen::VectorXd& warm) {
  if (warm.size() != x.cols()) warm = Eigen::VectorXd::Ones(x.cols());
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd y = x * v;
    y.array() *= o_squared.array();
    return x.transpose() * y;
  };
  return power_iteration(apply, warm);
}

// One proximal gradient step on the squared error from point p.
Eigen::VectorXd proximal_step(const FactorizationProblem& problem, const BenchmarkState& state,
                              std::size_t f, const Eigen::VectorXd& p, double lambda,
                              Eigen::VectorXd& warm) {
  const auto& x = problem.codebook(f).matrix();
  const Eigen::VectorXd o = others_estimate_product(problem, state.estimates, f);
  require_finite(o, f, state.iteration, "proximal_step");
  const Eigen::VectorXd o2 = o.array().square();
  const double lipschitz = squared_error_lipschitz(x, o2, warm);
  if (!(lipschitz > 0.0)) {
    // xi = 0: the loss is flat in a_f and the threshold lambda/L is unbounded.
    return Eigen::VectorXd::Zero(p.size());
  }
  Eigen::VectorXd residual = x * p;
  residual.array() = o.array() * (o.array() * residual.array() - composite_real(problem).array());
  const Eigen::VectorXd grad = x.transpose() * residual;
  return soft_threshold(p - grad / lipschitz, lambda / lipschitz);
}

Eigen::VectorXd neg_inner_gradient(const FactorizationProblem& problem, const BenchmarkState& state,
                                   std::size_t f) {
  Eigen::VectorXd v = others_estimate_product(problem, state.estimates, f);
  const auto c = problem.composite().entries();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= c[static_cast<std::size_t>(i)];
  return -(problem.codebook(f).matrix().transpose() * v);
}

}  // namespace

Eigen::VectorXd others_estimate_product(const FactorizationProblem& problem,
                                        const std::vector<Eigen::VectorXd>& estimates, std::size_t f) {
  if (f >= estimates.size()) throw std::out_of_range("others_estimate_product: factor index");
  Eigen::VectorXd o = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(problem.dimension()));
  for (std::size_t g = 0; g < estimates.size(); ++g) {
    if (g != f) o.array() *= estimates[g].array();
  }
  return o;
}

double loss_neg_inner(const FactorizationProblem& problem, const std::vector<Eigen::VectorXd>& coeffs) {
  return -composite_real(problem).dot(product_of(estimates_of(problem, coeffs)));
}

double loss_squared_error(const FactorizationProblem& problem,
                          const std::vector<Eigen::VectorXd>& coeffs) {
  return 0.5 * (composite_real(problem) - product_of(estimates_of(problem, coeffs))).squaredNorm();
}

Eigen::VectorXd grad_neg_inner(const FactorizationProblem& problem,
                               const std::vector<Eigen::VectorXd>& coeffs, std::size_t f) {
  const auto est = estimates_of(problem, coeffs);
  Eigen::VectorXd v = others_estimate_product(problem, est, f);
  v.array() *= composite_real(problem).array();
  return -(problem.codebook(f).matrix().transpose() * v);
}

Eigen::VectorXd grad_squared_error(const FactorizationProblem& problem,
                                   const std::vector<Eigen::VectorXd>& coeffs, std::size_t f) {
  const auto est = estimates_of(problem, coeffs);
  const Eigen::VectorXd o = others_estimate_product(problem, est, f);
  Eigen::VectorXd v = est[f].array() * o.array().square() - composite_real(problem).array() * o.array();
  return problem.codebook(f).matrix().transpose() * v;
}

double power_iteration(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                       Eigen::VectorXd& v, int max_iterations, double rel_tol) {
  double norm = v.norm();
  if (!(norm > 0.0) || !v.allFinite()) {
    v = Eigen::VectorXd::Ones(v.size());
    norm = v.norm();
  }
  v /= norm;
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd w = apply(v);
    const double next = v.dot(w);  // Rayleigh quotient
    const double wn = w.norm();
    if (!(wn > 0.0)) return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // The Rayleigh quotient of the final iterate is the tighter lower bound.
  return std::max(estimate, v.dot(apply(v)));
}

Eigen::VectorXd als_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f) {
  const auto& x = problem.codebook(f).matrix();
  const Eigen::VectorXd o = others_estimate_product(problem, state.estimates, f);
  const Eigen::MatrixXd xi = o.asDiagonal() * x;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(xi.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success || !(llt.rcond() >= 1e-12)) {
    throw NumericalError("als_update: singular normal equations for factor " + std::to_string(f) +
                         " at iteration " + std::to_string(state.iteration));
  }
  Eigen::VectorXd next = llt.solve(xi.transpose() * composite_real(problem));
  commit(problem, state, f, std::move(next), "als_update");
  return state.coeffs[f];
}

Eigen::VectorXd ista_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                            double lambda) {
  Eigen::VectorXd next = proximal_step(problem, state, f, state.coeffs[f], lambda, state.eigenvector[f]);
  commit(problem, state, f, std::move(next), "ista_update");
  return state.coeffs[f];
}

Eigen::VectorXd fista_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                             double lambda) {
  const double alpha_prev = state.alpha[f];
  const double alpha = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha_prev * alpha_prev));
  const double beta = (alpha_prev - 1.0) / alpha;
  const Eigen::VectorXd& a = state.coeffs[f];
  const Eigen::VectorXd p = a + beta * (a - state.previous[f]);
  Eigen::VectorXd next = proximal_step(problem, state, f, p, lambda, state.eigenvector[f]);
  state.previous[f] = a;
  state.alpha[f] = alpha;
  commit(problem, state, f, std::move(next), "fista_update");
  return state.coeffs[f];
}

Eigen::VectorXd pgd_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                           Constraint constraint, double eta) {
  const Eigen::VectorXd step = state.coeffs[f] - eta * neg_inner_gradient(problem, state, f);
  Eigen::VectorXd next;
  if (constraint == Constraint::Simplex) {
    next = project_simplex(step);
  } else if (constraint == Constraint::L1Ball) {
    next = project_l1_ball(step, 1.0);
  } else {
    throw std::invalid_argument("pgd_update: constraint must be simplex or l1");
  }
  commit(problem, state, f, std::move(next), "pgd_update");
  return state.coeffs[f];
}

Eigen::VectorXd mw_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                          double eta) {
  const Eigen::VectorXd grad = neg_inner_gradient(problem, state, f);
  const double rho = grad.cwiseAbs().maxCoeff();
  if (!(rho > 0.0)) return state.coeffs[f];
  Eigen::VectorXd& w = state.weights[f];
  w.array() *= 1.0 - (eta / rho) * grad.array();
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("mw_update: degenerate weights for factor " + std::to_string(f));
  }
  // The update is scale-free; keep the weights near unit mass.
  if (total > 1e100 || total < 1e-100) w /= total;
  commit(problem, state, f, w / w.sum(), "mw_update");
  return state.coeffs[f];
}

Eigen::VectorXd msc_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                           double eta, double epsilon) {
  const Eigen::VectorXd grad = neg_inner_gradient(problem, state, f);
  const double rho = std::abs(grad.minCoeff());
  Eigen::VectorXd next = state.coeffs[f];
  if (rho > 0.0) {
    next.array() -= eta * (1.0 + grad.array() / rho);
  } else {
    next.array() -= eta;
  }
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    if (next[i] < epsilon) next[i] = 0.0;
  }
  commit(problem, state, f, std::move(next), "msc_update");
  return state.coeffs[f];
}

BenchmarkState benchmark_state_from(const FactorizationProblem& problem, const BenchmarkConfig& config,
                                    std::vector<Eigen::VectorXd> coeffs) {
  config.validate();
  const std::size_t nf = problem.factors();
  if (coeffs.size() != nf) throw std::invalid_argument("benchmark_state_from: wrong factor count");
  BenchmarkState s;
  s.estimates.resize(nf);
  s.previous.resize(nf);
  s.alpha.assign(nf, 1.0);
  s.weights.resize(nf);
  s.eigenvector.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto d = static_cast<Eigen::Index>(problem.codebook(f).size());
    if (coeffs[f].size() != d) throw std::invalid_argument("benchmark_state_from: wrong coefficient length");
    if (!coeffs[f].allFinite()) throw std::invalid_argument("benchmark_state_from: non-finite coefficients");
    if (config.algorithm == Algorithm::MW) {
      if ((coeffs[f].array() < 0.0).any() || !(coeffs[f].sum() > 0.0)) {
        throw std::invalid_argument("benchmark_state_from: MW weights must be nonnegative, not all zero");
      }
      s.weights[f] = coeffs[f];
      coeffs[f] /= coeffs[f].sum();
    }
    s.previous[f] = coeffs[f];
    s.eigenvector[f] = Eigen::VectorXd::Ones(d);
  }
  s.coeffs = std::move(coeffs);
  for (std::size_t f = 0; f < nf; ++f) s.refresh(problem, f);
  return s;
}

BenchmarkState initial_benchmark_state(const FactorizationProblem& problem,
                                       const BenchmarkConfig& config) {
  std::vector<Eigen::VectorXd> coeffs;
  for (const auto& cb : problem.codebooks()) {
    const auto d = static_cast<Eigen::Index>(cb.size());
    double value = 1.0;
    if (config.algorithm == Algorithm::PGD) {
      value = config.constraint == Constraint::L1Ball ? 0.5 / static_cast<double>(d)
                                                      : 1.0 / static_cast<double>(d);
    }
    coeffs.push_back(Eigen::VectorXd::Constant(d, value));
  }
  return benchmark_state_from(problem, config, std::move(coeffs));
}

double benchmark_sweep(const FactorizationProblem& problem, const BenchmarkConfig& config,
                       BenchmarkState& state, const UpdateObserver& observer) {
  double max_change = 0.0;
  for (std::size_t f = 0; f < problem.factors(); ++f) {
    const Eigen::VectorXd before = state.coeffs[f];
    switch (config.algorithm) {
      case Algorithm::ALS: als_update(problem, state, f); break;
      case Algorithm::ISTA: ista_update(problem, state, f, config.lambda); break;
      case Algorithm::FISTA: fista_update(problem, state, f, config.lambda); break;
      case Algorithm::PGD: pgd_update(problem, state, f, config.constraint, config.eta); break;
      case Algorithm::MW: mw_update(problem, state, f, config.eta); break;
      case Algorithm::MSC: msc_update(problem, state, f, config.eta, config.epsilon); break;
    }
    max_change = std::max(max_change, (state.coeffs[f] - before).cwiseAbs().maxCoeff());
    if (observer) observer(f, state);
  }
  ++state.iteration;
  return max_change;
}

namespace {

std::pair<double, double> trace_similarities(const FactorizationProblem& problem,
                                             const BenchmarkState& state) {
  const auto c = problem.composite().entries();
  const auto n = problem.dimension();
  long long agree = 0;
  double dot = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int sign = c[i];
    double value = 1.0;
    for (const auto& e : state.estimates) {
      const double v = e[static_cast<Eigen::Index>(i)];
      value *= v;
      if (v < 0.0) sign = -sign;
    }
    agree += sign;
    dot += value * c[i];
    norm2 += value * value;
  }
  const double thresholded = static_cast<double>(agree) / static_cast<double>(n);
  const double linear = norm2 > 0.0 ? dot / (std::sqrt(norm2) * std::sqrt(static_cast<double>(n))) : 0.0;
  return {thresholded, linear};
}

}  // namespace

SolveResult run_benchmark(const FactorizationProblem& problem, const BenchmarkConfig& config,
                          const BenchmarkRunOptions& options, BenchmarkState& state) {
  config.validate();
  state = options.initial_coeffs ? benchmark_state_from(problem, config, *options.initial_coeffs)
                                 : initial_benchmark_state(problem, config);
  SolveResult result;
  const double scale = config.convergence_scale();
  result.termination = {TerminationKind::IterationCap, 0};
  while (state.iteration < config.max_iterations) {
    const double change = benchmark_sweep(problem, config, state, options.observer);
    const auto [thresholded, linear] = trace_similarities(problem, state);
    result.similarity_trace.push_back(thresholded);
    result.linear_similarity_trace.push_back(linear);
    if (change / scale < config.convergence_tol) {
      result.termination = {TerminationKind::FixedPoint, 0};
      break;
    }
  }
  result.iterations = state.iteration;
  for (std::size_t f = 0; f < problem.factors(); ++f) {
    const Eigen::VectorXd& a = state.coeffs[f];
    Eigen::VectorXd x = state.estimates[f];
    if (config.constraint == Constraint::L1Ball) {
      Eigen::Index k = 0;
      a.cwiseAbs().maxCoeff(&k);
      if (a[k] < 0.0) x = -x;
    }
    result.decoded.push_back(
        decode_unsigned(problem.codebook(f), std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))));
  }
  return result;
}

SolveResult run_benchmark(const FactorizationProblem& problem, const BenchmarkConfig& config,
                          const BenchmarkRunOptions& options) {
  BenchmarkState state;
  return run_benchmark(problem, config, options, state);
}

}  // namespace resonator

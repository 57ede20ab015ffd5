#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resonator/problem.hpp"
#include "resonator/solve_result.hpp"

namespace resonator {

enum class Algorithm { ALS, ISTA, FISTA, PGD, MW, MSC };
enum class Loss { SquaredError, NegInnerProduct };
enum class Constraint { None, Simplex, L1Ball, Box01 };

std::string to_string(Algorithm a);
std::string to_string(Constraint c);

/// Raised when coefficients stop being finite or a normal-equation solve fails;
/// the trial is aborted.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchmarkConfig {
  Algorithm algorithm = Algorithm::PGD;
  Loss loss = Loss::NegInnerProduct;
  Constraint constraint = Constraint::Simplex;
  double eta = 0.01;
  double lambda = 0.01;
  double epsilon = 1e-5;
  double convergence_tol = 1e-5;
  std::size_t max_iterations = 100000;

  /// Loss, constraint and hyperparameters this algorithm is normally run
  /// with. `constraint` only matters for PGD (Simplex or L1Ball).
  static BenchmarkConfig defaults(Algorithm algorithm, Constraint constraint = Constraint::Simplex);

  /// The divisor in the convergence test: eta for the methods that have a
  /// fixed stepsize, 1 for ALS, ISTA and FISTA.
  double convergence_scale() const;

  /// Throws std::invalid_argument for unsupported algorithm/loss/constraint
  /// combinations or out-of-range hyperparameters.
  void validate() const;
};

/// Coefficients per factor plus the auxiliary variables of each method.
struct BenchmarkState {
  std::vector<Eigen::VectorXd> coeffs;
  /// X_f a_f, kept in sync with coeffs.
  std::vector<Eigen::VectorXd> estimates;
  /// FISTA: coefficients before the last update and alpha_t per factor.
  std::vector<Eigen::VectorXd> previous;
  std::vector<double> alpha;
  /// MW: positive weights per factor; coeffs are the normalized weights.
  std::vector<Eigen::VectorXd> weights;
  /// ISTA/FISTA: warm start for the power iteration.
  std::vector<Eigen::VectorXd> eigenvector;
  std::size_t iteration = 0;

  /// Recomputes estimates[f] from coeffs[f].
  void refresh(const FactorizationProblem& problem, std::size_t f);
};

/// State with the algorithm's standard initial coefficients: ones for ALS,
/// ISTA, FISTA and MSC, ones as MW weights, 1/D on the simplex and 1/(2D)
/// inside the l1 ball for PGD.
BenchmarkState initial_benchmark_state(const FactorizationProblem& problem,
                                       const BenchmarkConfig& config);

/// State starting from the given coefficients. For MW they become the weights,
/// so they must be nonnegative with a positive sum.
BenchmarkState benchmark_state_from(const FactorizationProblem& problem,
                                    const BenchmarkConfig& config,
                                    std::vector<Eigen::VectorXd> coeffs);

/// Entrywise product of X_g a_g over g != f.
Eigen::VectorXd others_estimate_product(const FactorizationProblem& problem,
                                        const std::vector<Eigen::VectorXd>& estimates,
                                        std::size_t f);

/// -<c, prod_f X_f a_f>.
double loss_neg_inner(const FactorizationProblem& problem, const std::vector<Eigen::VectorXd>& coeffs);
/// 0.5 |c - prod_f X_f a_f|^2.
double loss_squared_error(const FactorizationProblem& problem,
                          const std::vector<Eigen::VectorXd>& coeffs);

/// -X_f^T (c * o_f).
Eigen::VectorXd grad_neg_inner(const FactorizationProblem& problem,
                               const std::vector<Eigen::VectorXd>& coeffs, std::size_t f);
/// X_f^T (x_f * o_f^2 - c * o_f).
Eigen::VectorXd grad_squared_error(const FactorizationProblem& problem,
                                   const std::vector<Eigen::VectorXd>& coeffs, std::size_t f);

/// Largest eigenvalue of the symmetric PSD operator `apply` by power
/// iteration from `v` (updated in place): at most max_iterations steps or
/// until the estimate changes by less than rel_tol relatively.
double power_iteration(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                       Eigen::VectorXd& v, int max_iterations = 500, double rel_tol = 1e-10);

// Single-factor updates. Each writes the new coefficients (and the method's
// auxiliary variables) into `state`, refreshes estimates[f] and returns the
// new coefficients.
Eigen::VectorXd als_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f);
Eigen::VectorXd ista_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                            double lambda);
Eigen::VectorXd fista_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                             double lambda);
Eigen::VectorXd pgd_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                           Constraint constraint, double eta);
Eigen::VectorXd mw_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                          double eta);
Eigen::VectorXd msc_update(const FactorizationProblem& problem, BenchmarkState& state, std::size_t f,
                           double eta, double epsilon);

/// Called after every single-factor update.
using UpdateObserver = std::function<void(std::size_t f, const BenchmarkState& state)>;

/// Updates factors 0..F-1 in order, each seeing the fresh values of earlier
/// ones. Returns max |a_new - a_old| over all factors and entries.
double benchmark_sweep(const FactorizationProblem& problem, const BenchmarkConfig& config,
                       BenchmarkState& state, const UpdateObserver& observer = {});

struct BenchmarkRunOptions {
  std::optional<std::vector<Eigen::VectorXd>> initial_coeffs;
  UpdateObserver observer;
};

/// Iterates sweeps until max |delta a| / convergence_scale() < tol (reported as
/// FixedPoint) or max_iterations (IterationCap), then decodes X_f a_f. The
/// dynamics are deterministic, so no seed is taken. Throws NumericalError.
SolveResult run_benchmark(const FactorizationProblem& problem, const BenchmarkConfig& config,
                          const BenchmarkRunOptions& options = {});

/// Runs and also returns the final state.
SolveResult run_benchmark(const FactorizationProblem& problem, const BenchmarkConfig& config,
                          const BenchmarkRunOptions& options, BenchmarkState& final_state);

}  // namespace resonator

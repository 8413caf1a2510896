#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "specflow/reduction.hpp"

namespace specflow {

using PointwiseFn = std::function<double(double x, double t, double u)>;
using FieldFn = std::function<double(double x, double t)>;

// A pointwise nonlinearity f(x,t,u) for u_tt - u_xx = f, together with the
// shift b (f_b = f - b u), the claimed Lipschitz constant of f_b, and the
// comparison fields the hypothesis checkers consume. Fields irrelevant to a
// given example stay empty.
struct Nonlinearity {
  std::string name;
  double b = 0.0;
  double lipschitz_claimed = 0.0;
  std::map<std::string, double> params;

  PointwiseFn f;

  // Closed-form antiderivative of f_b in u (from 0); empty means the
  // Nemytskii value falls back to adaptive quadrature per grid node.
  PointwiseFn antiderivative_fb;

  PointwiseFn g_of_u;  // g(x,t,u) of condition (f2)
  FieldFn g1, g2;      // envelope fields of (f2)
  FieldFn g_inf;       // asymptotic field of (f2+-)
  int f2pm_sign = 0;   // +1 / -1 selects which signed condition applies
  FieldFn g3;          // comparison field of (f3+-)
  int f3_sign = 0;
  FieldFn b0;          // f_b'(x,t,0), the linearization at zero for (f4+-)
  FieldFn forcing;     // additive forcing h(x,t), used by the linear example

  bool odd_in_u = false;

  double fb(double x, double t, double u) const { return f(x, t, u) - b * u; }
  void validate() const;
};

// Pointwise formulas of the worked examples. Required params (throws
// ValidationError listing missing names):
//   ex_thm41:       alpha, beta, b, eps1, eps2
//   ex_thm42_plus:  b, eps, gamma0, gamma1   (g_inf = gamma0 + gamma1 sin x cos wt)
//   ex_thm42_minus: same as ex_thm42_plus
//   ex_thm43:       k, alpha, beta, eps1, eps2, g3  (b = lambda_k / 2)
//   linear_forced:  b, g_amp, h_amp           (f = b u + g(x,t) u + h(x,t))
// The helper h(u) defaults to sign(u) * ln(1 + |u|).
Nonlinearity example_nonlinearity(const std::string& name,
                                  const std::map<std::string, double>& params);

// k-th positive distinct eigenvalue of the truncated wave operator
// (lambda_0 = 0 is the essential-spectrum surrogate).
double truncated_lambda_k(const TruncationSpec& spec, int k);

struct WaveProblem {
  TruncationSpec spec;
  Nonlinearity nl;
  std::shared_ptr<const FourierBasis> basis;
  TruncatedOperator A;  // wave_operator(spec) - b * I, exactly
  ReducedProblem reduced;

  // Picks the split threshold automatically (widest admissible gap in
  // (l_F, |b|) avoiding |sigma(A)|) unless `l` is given.
  static WaveProblem create(const TruncationSpec& spec, Nonlinearity nl,
                            std::optional<double> l = {});

  double threshold() const { return reduced.threshold(); }
};

// L2 gradient of F at u: project f_b(.,.,u(.)) back onto the truncation.
FourierField nemytskii_gradient(const Nonlinearity& nl, const FourierField& u);
Eigen::VectorXd nemytskii_gradient(const Nonlinearity& nl,
                                   const FourierBasis& basis,
                                   const Eigen::VectorXd& coeffs);

// F(u) = integral of the u-antiderivative of f_b over the domain.
double nemytskii_value(const Nonlinearity& nl, const FourierField& u);
double nemytskii_value(const Nonlinearity& nl, const FourierBasis& basis,
                       const Eigen::VectorXd& coeffs);

// NonlinearMap backed by the two operations above.
NonlinearMap nemytskii_map(const Nonlinearity& nl,
                           std::shared_ptr<const FourierBasis> basis);

// Seeded max of pointwise difference quotients |f_b(u+v)-f_b(u)| / |v|.
struct LipschitzEstimate {
  double value = 0.0;
  double witness_x = 0.0, witness_t = 0.0, witness_u = 0.0, witness_v = 0.0;
};
LipschitzEstimate estimate_lipschitz_detail(const Nonlinearity& nl,
                                            long sample_count,
                                            std::uint64_t seed);
double estimate_lipschitz(const Nonlinearity& nl, long sample_count,
                          std::uint64_t seed);

// Computes the index pair of the multiplication operator of g relative to
// A = box - b, then repeats at the refined truncation and sets `stable`.
IndexPair field_index_pair(const TruncationSpec& spec, double b,
                           const FieldFn& g);

struct HypothesisReport {
  std::string condition;  // f1, f2, f2pm, f3plus, f3minus, f4plus, f4minus
  bool holds = false;
  std::map<std::string, double> evidence;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
};

// Deterministic sweep checks for the conditions named in `which`.
// u-sweep: +-10^m, m = -2..4, crossed with every grid node.
std::vector<HypothesisReport> check_hypotheses(const WaveProblem& problem,
                                               const std::set<std::string>& which,
                                               std::uint64_t seed);

enum class SolveMethod { reduce_direct, homotopy, regularized };

// Hypotheses a method refuses without (see solve_wave): maximize needs the
// matching (f3) bound, homotopy needs {f1, f2}, regularized {f1, f2pm},
// plain multistart {f1}.
std::set<std::string> required_hypotheses(SolveMethod method,
                                          SearchStrategy strategy);

struct WaveSolution {
  CriticalPointReport cp;
  double residual = 0.0;       // ||box u - f(.,.,u)|| on the truncation grid
  double residual_fine = 0.0;  // same, recomputed at doubled oversampling
};

struct WaveSolveResult {
  std::vector<WaveSolution> solutions;
  std::vector<HypothesisReport> hypothesis_reports;
  std::string diagnostics;
  // Method-specific traces (empty when unused).
  std::vector<HomotopyStep> homotopy_steps;
  std::vector<RegularizationStep> regularization_steps;
  std::vector<double> regularization_distances;
};

struct WaveSolveOptions {
  SearchStrategy strategy = SearchStrategy::multistart_newton;
  long budget = 40000;
  std::uint64_t seed = 1;
  bool force = false;
  std::vector<double> eps_sequence = {1e-1, 1e-2, 1e-3, 1e-4};
  int lambda_steps = 21;
};

// Dispatches to the reduction solver and certifies every returned solution
// with residuals on the problem grid and on a doubled-oversampling grid.
// Throws HypothesisRefusalError when a required hypothesis fails and
// `force` is not set.
WaveSolveResult solve_wave(const WaveProblem& problem, SolveMethod method,
                           const WaveSolveOptions& opts = {});

// Shipped example configurations used by tests and the acceptance suite.
std::vector<std::string> shipped_problem_names();
WaveProblem shipped_problem(const std::string& name);

}  // namespace specflow

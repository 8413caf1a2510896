#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specflow/index_theory.hpp"
#include "specflow/operators.hpp"

namespace specflow {

// Nonlinear functional F on coefficient space, given through its value and
// its L2 gradient F'. lipschitz_bound is the constant the caller claims for
// F' (spot-checked by tests, trusted by threshold selection); origin_norm
// is ||F'(0)||.
struct NonlinearMap {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  double lipschitz_bound = 0.0;
  double origin_norm = 0.0;

  static NonlinearMap zero(int dim);
  // F(z) = 0.5 z^T B z + w^T z (affine gradient B z + w).
  static NonlinearMap quadratic(const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& w);
};

// The operator equation A z = F'(z) after eliminating the +- spectral
// components: everything needed to evaluate the reduced functional
// a(x) = 0.5 (A z(x), z(x)) - F(z(x)) on the finite block H0.
struct ReducedProblem {
  TruncatedOperator A;
  SpectralSplit split;
  NonlinearMap F;
  double gap_b = 0.0;          // spectral gap radius b with l_F < l < b
  double contraction_tol = 1e-12;
  int max_iter = 10000;
  Eigen::MatrixXd inverse_pm;  // (A^+)^{-1} P^+ + (A^-)^{-1} P^-

  // Validates l_F < l < gap_b and +-l off the spectrum.
  static ReducedProblem create(TruncatedOperator A, double l, NonlinearMap F,
                               double gap_b, double contraction_tol = 1e-12,
                               int max_iter = 10000);

  int dim() const { return A.dim(); }
  int h0_dim() const { return split.n_zero; }
  double threshold() const { return split.l; }

  Eigen::VectorXd field_from_h0(const Eigen::VectorXd& x) const;
  Eigen::VectorXd h0_from_field(const Eigen::VectorXd& z) const;

  // |A|^{1/2}-weighted norm of the +- component of a coefficient vector.
  double e_norm_pm(const Eigen::VectorXd& w) const;
};

struct FixedPointResult {
  Eigen::VectorXd zplus;   // full-length, supported on H+
  Eigen::VectorXd zminus;  // full-length, supported on H-
  Eigen::VectorXd z;       // x-tilde + zplus + zminus
  int iterations = 0;
  std::vector<double> update_ratios;  // ||u_k|| / ||u_{k-1}||, k >= 1
};

// Contraction iteration for z_pm = (A_pm)^{-1} P_pm F'(z_pm + x). Starts
// from zero unless warm_pm seeds the +- component. Throws
// NonContractionError when max_iter is reached before contraction_tol.
FixedPointResult fixed_point_z(const ReducedProblem& prob,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd* warm_pm = nullptr);

double reduced_value(const ReducedProblem& prob, const Eigen::VectorXd& x);
Eigen::VectorXd reduced_gradient(const ReducedProblem& prob,
                                 const Eigen::VectorXd& x);

struct HessianSignature {
  int negatives = 0;
  int zeros = 0;
  int positives = 0;
};

struct CriticalPointReport {
  Eigen::VectorXd x;  // H0 coordinates
  Eigen::VectorXd z;  // full coefficient vector x + z^+(x) + z^-(x)
  double value = 0.0;
  double grad_norm = 0.0;
  double residual = 0.0;  // ||A z - F'(z)||
  HessianSignature hessian_signature;
};

enum class SearchStrategy { maximize, multistart_newton };

struct SearchOptions {
  long budget = 40000;      // reduced value/gradient evaluations
  std::uint64_t seed = 1;
  double grad_tol = 1e-8;
  double dedup_tol = 1e-4;
  int max_points = 16;
  std::vector<double> start_radii = {1.0, 4.0, 16.0};
};

struct SearchResult {
  std::vector<CriticalPointReport> points;  // sorted by value, then lexicographic x
  long evaluations = 0;
  std::string diagnostics;
};

SearchResult find_critical_points(const ReducedProblem& prob,
                                  SearchStrategy strategy,
                                  const SearchOptions& opts = {});

// Central finite-difference Hessian of the reduced functional; step is
// cbrt(machine eps) * (1 + ||x||).
Eigen::MatrixXd reduced_hessian_fd(const ReducedProblem& prob,
                                   const Eigen::VectorXd& x);
HessianSignature classify_signature(const Eigen::MatrixXd& hessian);

// --- epsilon-regularized continuation ------------------------------------

struct RegularizationStep {
  double eps = 0.0;
  Eigen::VectorXd z;
  double kernel_norm = 0.0;      // component in ker(A - Binf)
  double complement_norm = 0.0;
  double residual = 0.0;         // ||eps z + (A - Binf) z - r(z)||
};

struct RegularizationPath {
  std::vector<RegularizationStep> steps;
  std::vector<double> successive_distances;
  Eigen::VectorXd limit;
  double limit_residual = 0.0;   // ||(A - Binf) z - r(z)|| at the limit
  bool kernel_diverged = false;
  bool completed = false;
  std::string diagnostics;
};

struct RegularizeOptions {
  double l = 0.0;                // split threshold for A + eps
  double gap_b = 0.0;
  double kernel_ceiling = 1e6;
  double kernel_tol = 0.0;       // 0 = auto
  SearchOptions search;
};

// Solves eps z + (A - Binf) z = r(z) for each eps by the reduction applied
// to A + eps with nonlinearity Binf z + r(z), warm-starting along the path.
RegularizationPath regularized_solve(const TruncatedOperator& A,
                                     const TruncatedOperator& Binf,
                                     const NonlinearMap& r,
                                     const std::vector<double>& eps_sequence,
                                     const RegularizeOptions& opts);

// --- homotopy continuation ------------------------------------------------

struct HomotopyStep {
  double lambda = 0.0;
  Eigen::VectorXd z;
  double grad_norm = 0.0;
  double residual = 0.0;  // ||A z - F_lambda'(z)||
};

struct HomotopyPath {
  std::vector<HomotopyStep> steps;
  bool completed = false;
  bool escaped = false;    // left the a priori radius
  std::string diagnostics;
};

struct HomotopyOptions {
  double l = 0.0;
  double gap_b = 0.0;
  double radius = 1e4;     // boundedness certificate for the solution path
  int max_refinements = 64;
  SearchOptions search;
};

std::vector<double> uniform_lambda_grid(int steps = 21);

// Continuation for A z = (1-lambda) B1 z + lambda F'(z) from the trivial
// solution at lambda = 0 (requires nu_A(B1) = 0), with adaptive halving of
// lambda steps on warm-start failure.
HomotopyPath homotopy_solve(const TruncatedOperator& A,
                            const TruncatedOperator& B1, const NonlinearMap& F,
                            const std::vector<double>& lambda_grid,
                            const HomotopyOptions& opts);

}  // namespace specflow

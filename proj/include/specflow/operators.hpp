#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "specflow/fourier.hpp"

namespace specflow {

// Dense symmetric operator acting on mode coefficients. `spec` is set for
// operators that came from a truncated field model and empty for abstract
// matrices (the CLI's raw-matrix mode and the index-theory tests).
struct TruncatedOperator {
  std::optional<TruncationSpec> spec;
  Eigen::MatrixXd matrix;

  // Symmetrizes and validates. Rejects matrices further than 1e-10 from
  // symmetric; smaller asymmetry is averaged away.
  static TruncatedOperator from_matrix(Eigen::MatrixXd m,
                                       std::optional<TruncationSpec> spec = {});

  int dim() const { return static_cast<int>(matrix.rows()); }
  TruncatedOperator shifted(double c) const;  // this - c*I
  double spectral_norm() const;               // max |eigenvalue|
};

TruncatedOperator operator+(const TruncatedOperator& a, const TruncatedOperator& b);
TruncatedOperator operator-(const TruncatedOperator& a, const TruncatedOperator& b);

// Diagonal wave operator: entry lambda_{j,k} = j^2 - (k p / q)^2 on every
// mode (j,k,*). Both phases of a (j,k) pair share the eigenvalue.
TruncatedOperator wave_operator(const TruncationSpec& spec);

// Multiplication operator of a grid function g: entries are quadrature inner
// products of g*basis_a with basis_b. Symmetric by construction.
TruncatedOperator multiplication_operator(const Eigen::MatrixXd& g_values,
                                          const TruncationSpec& spec);
TruncatedOperator multiplication_operator(const FourierBasis& basis,
                                          const Eigen::MatrixXd& g_values);

// Threshold split of the spectrum at +-l with the three orthogonal
// projections. Eigenvalues are ascending; the minus/zero/plus blocks are
// contiguous index ranges [0,n_minus), [n_minus,n_minus+n_zero), rest.
struct SpectralSplit {
  double l = 0.0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  int n_minus = 0, n_zero = 0, n_plus = 0;
  Eigen::MatrixXd Pminus, Pzero, Pplus;

  auto minus_basis() const { return eigenvectors.leftCols(n_minus); }
  auto zero_basis() const { return eigenvectors.middleCols(n_minus, n_zero); }
  auto plus_basis() const { return eigenvectors.rightCols(n_plus); }
  auto zero_eigenvalues() const { return eigenvalues.segment(n_minus, n_zero); }
};

// Requires l > 0 and every eigenvalue at distance > 1e-9 from +-l, else
// throws ThresholdOnSpectrumError naming the offending eigenvalue.
SpectralSplit spectral_split(const TruncatedOperator& op, double l);

// Eigenvalues of the truncated operator inside the open interval (a,b),
// plus the distance from the whole spectrum to the endpoints. A degenerate
// endpoint choice shows up as min_distance_to_endpoints = 0.
struct GapReport {
  double a = 0.0, b = 0.0;
  std::vector<double> eigenvalues_inside;  // ascending
  double min_distance_to_endpoints = 0.0;
};

GapReport gap_report(const TruncatedOperator& op, double a, double b);

// Sorted eigenvalues (ascending) of a symmetric operator.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

}  // namespace specflow

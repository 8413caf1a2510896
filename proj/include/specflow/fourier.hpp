#pragma once

#include <Eigen/Dense>
#include <vector>

#include "specflow/errors.hpp"

namespace specflow {

inline constexpr double kPi = 3.14159265358979323846;

// Finite Fourier model of L2([0,pi] x S1) with period T = 2*pi*q/p.
// Spatial modes sin(j x), j = 1..J; temporal modes cos(k w t), sin(k w t),
// k = 0..K with w = p/q (the sin phase is dropped at k = 0).
struct TruncationSpec {
  int p = 1;   // period numerator, T = 2*pi*q/p
  int q = 1;   // period denominator, coprime with p
  int J = 1;   // largest spatial mode index
  int K = 0;   // largest temporal mode index
  int Nx = 4;  // spatial quadrature points (midpoint rule)
  int Nt = 4;  // temporal quadrature points (uniform periodic rule)

  double period() const { return 2.0 * kPi * static_cast<double>(q) / p; }
  double omega() const { return static_cast<double>(p) / q; }
  int mode_count() const { return J * (2 * K + 1); }

  // Throws ValidationError unless gcd(p,q)=1, J>=1, K>=0, Nx>=4J, Nt>=4K+4.
  void validate() const;

  // Next truncation level used by index stability checks. Grids grow just
  // enough to keep the oversampling invariant.
  TruncationSpec refined(int dj = 2, int dk = 2) const;

  bool operator==(const TruncationSpec&) const = default;
};

enum class Phase { cos, sin };

struct ModeIndex {
  int j = 1;
  int k = 0;
  Phase phase = Phase::cos;
  bool operator==(const ModeIndex&) const = default;
};

// Fixed enumeration: ascending j, then ascending k, cos before sin.
std::vector<ModeIndex> mode_table(const TruncationSpec& spec);

// Coefficients of a real field in the unit-L2-normalized mode basis.
// The Euclidean norm of coeffs equals the L2 norm of the field.
struct FourierField {
  TruncationSpec spec;
  Eigen::VectorXd coeffs;

  double norm() const { return coeffs.norm(); }
  void validate() const;
};

// Precomputed basis evaluation tables for one truncation. Construction is
// O(N * Nx * Nt); everything downstream is dense linear algebra against
// these tables. Immutable after construction.
class FourierBasis {
 public:
  explicit FourierBasis(const TruncationSpec& spec);

  const TruncationSpec& spec() const { return spec_; }
  int grid_size() const { return spec_.Nx * spec_.Nt; }

  // Basis values on the tensor grid, one column per mode, rows flattened
  // x-major: row index g = m * Nt + n.
  const Eigen::MatrixXd& eval_matrix() const { return eval_; }

  // Uniform tensor quadrature weight pi*T / (Nx*Nt).
  double quad_weight() const { return weight_; }

  double x_node(int m) const { return kPi * (m + 0.5) / spec_.Nx; }
  double t_node(int n) const { return spec_.period() * n / spec_.Nt; }

  Eigen::MatrixXd to_grid(const Eigen::VectorXd& coeffs) const;   // Nx x Nt
  Eigen::VectorXd from_grid(const Eigen::MatrixXd& values) const; // length N

  // Discrete L2 inner product of two grid functions.
  double grid_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;

 private:
  TruncationSpec spec_;
  Eigen::MatrixXd eval_;
  double weight_ = 0.0;
};

// Convenience entry points building the tables on the fly. Fine for tests
// and one-shot calls; hot loops should hold a FourierBasis.
Eigen::MatrixXd to_grid(const FourierField& u);
FourierField from_grid(const Eigen::MatrixXd& values, const TruncationSpec& spec);

}  // namespace specflow

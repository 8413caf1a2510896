#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specflow/operators.hpp"

namespace specflow {

// Kernel window used when a caller passes kernel_tol = 0: 1e-8 relative to
// the larger of the scales of A and A-B.
double default_kernel_tol(const TruncatedOperator& A, const TruncatedOperator& B);

// Dimension of the (numerical) kernel of A - B: eigenvalues inside
// (-kernel_tol, kernel_tol). ill_conditioned is set when some eigenvalue
// sits within 10% of +-kernel_tol, where the count is unreliable.
struct NullityResult {
  int value = 0;
  bool ill_conditioned = false;
  double nearest_eigenvalue = 0.0;  // eigenvalue closest to the window edge
};

NullityResult nullity(const TruncatedOperator& A, const TruncatedOperator& B,
                      double kernel_tol);

// Index pair (index, nullity) of the perturbation B relative to A:
// index = m^-(A - B) - m^-(A) with m^- counting eigenvalues <= -kernel_tol,
// nullity the kernel dimension of A - B. `stable` is false until a caller
// reproduces the pair at the refined truncation (see wave module).
struct IndexPair {
  int index = 0;
  int nullity = 0;
  std::optional<TruncationSpec> spec;
  double kernel_tol = 0.0;
  bool stable = false;
  bool nullity_ill_conditioned = false;
};

struct IndexOptions {
  double kernel_tol = 0.0;              // 0 = auto (scale-relative)
  std::optional<double> gap_radius;     // when set, enforce ||B|| < gap_radius
};

IndexPair relative_morse_index(const TruncatedOperator& A,
                               const TruncatedOperator& B,
                               const IndexOptions& opts = {});

// Fredholm-style index of the orthogonal projection restricted between the
// spans of two orthonormal column sets, from the singular values of W^T V.
struct ProjectionIndexResult {
  int dim_domain = 0;
  int dim_codomain = 0;
  int dim_kernel = 0;
  int dim_cokernel = 0;
  int index = 0;
};

ProjectionIndexResult projection_index(const Eigen::MatrixXd& V,
                                       const Eigen::MatrixXd& W);

// One detected eigenvalue crossing of the path t -> A - tB. `branch` is the
// position of the branch in the ascending spectrum at the left end of the
// resolved subinterval; sign +1 means the branch moved from positive to
// negative as t increased.
struct Crossing {
  double t = 0.0;
  int branch = 0;
  int sign = 0;
};

struct FlowResult {
  int flow = 0;
  std::vector<Crossing> crossings;
  std::vector<double> partition;  // all t values where the spectrum was sampled
};

// Spectral flow of t -> A - tB over [t0, t1]: signed count of eigenvalue
// branches crossing zero. Branches are tracked by sorted order on an
// initially uniform partition with `steps` pieces, adaptively bisected until
// every crossing is localized (branch displacement below kernel_tol/2) and
// no near-zero branch can hide a double crossing (Weyl bound ||B|| * width).
// Throws DegenerateEndpointError when an endpoint eigenvalue lies inside the
// kernel window.
FlowResult spectral_flow(const TruncatedOperator& A, const TruncatedOperator& B,
                         double t0, double t1, int steps,
                         double kernel_tol = 0.0);

// Sampled lower-bound certificate for the spectral-gap lemma: draws
// operators B with B1 <= B <= B2 and reports the smallest distance from
// sigma(A - B) to zero. Hypothesis failures are reported, not thrown.
struct GapWitness {
  int sample = -1;                 // -1/-2 mark the endpoints B1/B2
  double min_abs_eigenvalue = 0.0;
};

struct GapCheckResult {
  bool hypotheses_ok = false;
  std::string violated_hypothesis;  // empty when ok
  double epsilon_estimate = 0.0;
  std::vector<GapWitness> witnesses;
};

GapCheckResult gap_nondegeneracy_check(const TruncatedOperator& A,
                                       const TruncatedOperator& B1,
                                       const TruncatedOperator& B2,
                                       int samples, std::uint64_t seed);

}  // namespace specflow

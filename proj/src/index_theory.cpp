#include "specflow/index_theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace specflow {

namespace {

void require_same_shape(const TruncatedOperator& A, const TruncatedOperator& B) {
  if (A.dim() != B.dim()) {
    throw ValidationError("operators act on different coefficient spaces");
  }
  if (A.spec && B.spec && !(*A.spec == *B.spec)) {
    throw ValidationError("operators built from different truncations");
  }
}

// Eigenvalues strictly below -tol.
int morse_count(const Eigen::VectorXd& ev, double tol) {
  int count = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) <= -tol) ++count;
  }
  return count;
}

}  // namespace

double default_kernel_tol(const TruncatedOperator& A, const TruncatedOperator& B) {
  require_same_shape(A, B);
  const double scale =
      std::max((A.matrix - B.matrix).cwiseAbs().rowwise().sum().maxCoeff(),
               A.matrix.cwiseAbs().rowwise().sum().maxCoeff());
  return 1e-8 * (1.0 + scale);
}

NullityResult nullity(const TruncatedOperator& A, const TruncatedOperator& B,
                      double kernel_tol) {
  require_same_shape(A, B);
  if (!(kernel_tol > 0.0)) throw ValidationError("kernel_tol must be positive");
  Eigen::VectorXd ev = symmetric_eigenvalues(A.matrix - B.matrix);

  NullityResult result;
  double best_edge_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ev.size(); ++i) {
    const double mag = std::abs(ev(i));
    if (mag < kernel_tol) ++result.value;
    const double edge = std::abs(mag - kernel_tol);
    if (edge < best_edge_distance) {
      best_edge_distance = edge;
      result.nearest_eigenvalue = ev(i);
    }
    if (edge <= 0.1 * kernel_tol) result.ill_conditioned = true;
  }
  return result;
}

IndexPair relative_morse_index(const TruncatedOperator& A,
                               const TruncatedOperator& B,
                               const IndexOptions& opts) {
  require_same_shape(A, B);
  const double tol =
      opts.kernel_tol > 0.0 ? opts.kernel_tol : default_kernel_tol(A, B);

  if (opts.gap_radius) {
    const double norm_b = B.spectral_norm();
    if (!(norm_b < *opts.gap_radius)) {
      std::ostringstream err;
      err << "perturbation norm " << norm_b
          << " is not inside the gap radius " << *opts.gap_radius;
      throw GapViolationError(err.str());
    }
  }

  Eigen::VectorXd ev_a = symmetric_eigenvalues(A.matrix);
  Eigen::VectorXd ev_ab = symmetric_eigenvalues(A.matrix - B.matrix);

  IndexPair pair;
  pair.spec = A.spec ? A.spec : B.spec;
  pair.kernel_tol = tol;
  pair.index = morse_count(ev_ab, tol) - morse_count(ev_a, tol);
  NullityResult nul = nullity(A, B, tol);
  pair.nullity = nul.value;
  pair.nullity_ill_conditioned = nul.ill_conditioned;
  pair.stable = false;
  return pair;
}

ProjectionIndexResult projection_index(const Eigen::MatrixXd& V,
                                       const Eigen::MatrixXd& W) {
  constexpr double kOrthoTol = 1e-10;
  auto check_orthonormal = [](const Eigen::MatrixXd& M, const char* name) {
    if (M.rows() == 0 || M.cols() == 0 || M.cols() > M.rows()) {
      throw ValidationError(std::string(name) + ": invalid basis shape");
    }
    Eigen::MatrixXd gram = M.transpose() * M;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > kOrthoTol) {
      throw ValidationError(std::string(name) + ": columns are not orthonormal");
    }
  };
  check_orthonormal(V, "domain basis");
  check_orthonormal(W, "codomain basis");
  if (V.rows() != W.rows()) {
    throw ValidationError("bases live in different ambient spaces");
  }

  ProjectionIndexResult result;
  result.dim_domain = static_cast<int>(V.cols());
  result.dim_codomain = static_cast<int>(W.cols());

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W.transpose() * V);
  const Eigen::VectorXd& sv = svd.singularValues();
  constexpr double kRankTol = 1e-8;  // relative; singular values are <= 1
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTol) ++rank;
  }
  result.dim_kernel = result.dim_domain - rank;
  result.dim_cokernel = result.dim_codomain - rank;
  result.index = result.dim_kernel - result.dim_cokernel;
  return result;
}

namespace {

struct FlowWorkspace {
  const Eigen::MatrixXd* A = nullptr;
  const Eigen::MatrixXd* B = nullptr;
  double tol = 0.0;
  double norm_b = 0.0;
  double floor_width = 0.0;
  int max_depth = 60;
  std::vector<Crossing> crossings;
  std::vector<double> partition;

  Eigen::VectorXd eigenvalues_at(double t) const {
    return symmetric_eigenvalues(*A - t * (*B));
  }

  bool in_window(const Eigen::VectorXd& ev) const {
    for (int i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i)) < tol) return true;
    }
    return false;
  }

  // Pick an interior sample point with no eigenvalue inside the kernel
  // window; interior points are ours to choose, so nudge until clean.
  std::pair<double, Eigen::VectorXd> clean_point(double lo, double hi) const {
    double t = 0.5 * (lo + hi);
    Eigen::VectorXd ev = eigenvalues_at(t);
    const double width = hi - lo;
    int attempts = 0;
    while (in_window(ev) && attempts < 24) {
      t = lo + width * (0.5 + 0.013 * (attempts + 1));
      if (t >= hi) t = lo + 0.25 * width / (attempts + 1);
      ev = eigenvalues_at(t);
      ++attempts;
    }
    if (in_window(ev)) {
      throw NumericalError(
          "spectral_flow: could not find a nondegenerate interior slice");
    }
    return {t, std::move(ev)};
  }

  void resolve(double ta, double tb, const Eigen::VectorXd& eva,
               const Eigen::VectorXd& evb, int depth) {
    const double width = tb - ta;
    bool needs_split = false;
    for (int i = 0; i < eva.size() && !needs_split; ++i) {
      const bool sign_change = (eva(i) < 0.0) != (evb(i) < 0.0);
      const double motion = std::abs(evb(i) - eva(i));
      if (sign_change) {
        // Localize the crossing until the branch barely moves.
        if (motion > 0.5 * tol) needs_split = true;
      } else {
        // A branch that moves further than its distance to zero could have
        // crossed and come back unseen. Weyl: |d lambda| <= ||B|| * dt.
        const double closest = std::min(std::abs(eva(i)), std::abs(evb(i)));
        if (closest <= norm_b * width) needs_split = true;
      }
    }

    if (needs_split && width > floor_width && depth < max_depth) {
      auto [tm, evm] = clean_point(ta, tb);
      partition.push_back(tm);
      resolve(ta, tm, eva, evm, depth + 1);
      resolve(tm, tb, evm, evb, depth + 1);
      return;
    }

    for (int i = 0; i < eva.size(); ++i) {
      if ((eva(i) < 0.0) != (evb(i) < 0.0)) {
        const double denom = eva(i) - evb(i);
        const double frac = (std::abs(denom) > 0.0) ? eva(i) / denom : 0.5;
        Crossing c;
        c.t = ta + frac * width;
        c.branch = i;
        c.sign = (eva(i) > 0.0) ? +1 : -1;
        crossings.push_back(c);
      }
    }
  }
};

}  // namespace

FlowResult spectral_flow(const TruncatedOperator& A, const TruncatedOperator& B,
                         double t0, double t1, int steps, double kernel_tol) {
  require_same_shape(A, B);
  if (steps < 1) throw ValidationError("spectral_flow requires steps >= 1");
  if (!(t0 < t1)) throw ValidationError("spectral_flow requires t0 < t1");

  const double tol =
      kernel_tol > 0.0 ? kernel_tol : default_kernel_tol(A, B);

  FlowWorkspace ws;
  ws.A = &A.matrix;
  ws.B = &B.matrix;
  ws.tol = tol;
  ws.norm_b = B.spectral_norm();
  ws.floor_width = std::max(1e-13 * (t1 - t0),
                            (t1 - t0) * 4.0 * std::numeric_limits<double>::epsilon());

  Eigen::VectorXd ev0 = ws.eigenvalues_at(t0);
  Eigen::VectorXd ev1 = ws.eigenvalues_at(t1);
  for (const auto& [t, ev] : {std::pair{t0, &ev0}, std::pair{t1, &ev1}}) {
    if (ws.in_window(*ev)) {
      std::ostringstream err;
      err << "endpoint t=" << t << " is degenerate (eigenvalue inside the "
          << "kernel window " << tol << "); perturb the endpoint";
      throw DegenerateEndpointError(err.str());
    }
  }

  // Initial uniform partition; interior points nudged off the window.
  std::vector<std::pair<double, Eigen::VectorXd>> nodes;
  nodes.emplace_back(t0, std::move(ev0));
  for (int s = 1; s < steps; ++s) {
    const double lo = t0 + (t1 - t0) * (s - 0.4999) / steps;
    const double hi = t0 + (t1 - t0) * (s + 0.4999) / steps;
    nodes.push_back(ws.clean_point(lo, hi));
  }
  nodes.emplace_back(t1, std::move(ev1));

  for (const auto& node : nodes) ws.partition.push_back(node.first);
  for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
    ws.resolve(nodes[s].first, nodes[s + 1].first, nodes[s].second,
               nodes[s + 1].second, 0);
  }

  FlowResult result;
  result.crossings = std::move(ws.crossings);
  std::sort(result.crossings.begin(), result.crossings.end(),
            [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
  for (const Crossing& c : result.crossings) result.flow += c.sign;

  std::sort(ws.partition.begin(), ws.partition.end());
  result.partition = std::move(ws.partition);

  // Per-interval sign counting makes the sum equal the Morse-count
  // difference by construction; keep the cross-check as a tripwire.
  const int expected = morse_count(nodes.back().second, 0.0) -
                       morse_count(nodes.front().second, 0.0);
  if (result.flow != expected) {
    throw NumericalError("spectral_flow: crossing count disagrees with "
                         "endpoint Morse counts");
  }
  return result;
}

GapCheckResult gap_nondegeneracy_check(const TruncatedOperator& A,
                                       const TruncatedOperator& B1,
                                       const TruncatedOperator& B2,
                                       int samples, std::uint64_t seed) {
  require_same_shape(A, B1);
  require_same_shape(A, B2);
  if (samples < 1) throw ValidationError("samples must be >= 1");

  GapCheckResult result;

  Eigen::MatrixXd D = B2.matrix - B1.matrix;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dsolver(D);
  if (dsolver.eigenvalues().minCoeff() < -1e-10) {
    result.violated_hypothesis = "B1 <= B2 fails: B2 - B1 has eigenvalue " +
                                 std::to_string(dsolver.eigenvalues().minCoeff());
    return result;
  }

  IndexPair i1 = relative_morse_index(A, B1);
  IndexPair i2 = relative_morse_index(A, B2);
  if (i1.index != i2.index) {
    result.violated_hypothesis =
        "i_A(B1) = " + std::to_string(i1.index) +
        " differs from i_A(B2) = " + std::to_string(i2.index);
    return result;
  }
  if (i2.nullity != 0) {
    result.violated_hypothesis =
        "nu_A(B2) = " + std::to_string(i2.nullity) + " is nonzero";
    return result;
  }
  result.hypotheses_ok = true;

  // Square root of the positive part of D; convex interior samples are
  // B1 + D^{1/2} Theta D^{1/2} with 0 <= Theta <= I, which stays in
  // [B1, B2] as quadratic forms.
  const int n = A.dim();
  Eigen::VectorXd dvals = dsolver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd sqrtD =
      dsolver.eigenvectors() * dvals.asDiagonal() * dsolver.eigenvectors().transpose();

  auto record = [&](int id, const Eigen::MatrixXd& B) {
    Eigen::VectorXd ev = symmetric_eigenvalues(A.matrix - B);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ev.size(); ++i) best = std::min(best, std::abs(ev(i)));
    result.witnesses.push_back({id, best});
  };

  record(-1, B1.matrix);
  record(-2, B2.matrix);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    // Random coefficient field Theta: random orthogonal frame with
    // uniform [0,1] eigenvalues.
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd theta(n);
    for (int i = 0; i < n; ++i) theta(i) = unit(rng);
    Eigen::MatrixXd Theta = Q * theta.asDiagonal() * Q.transpose();
    Eigen::MatrixXd B = B1.matrix + sqrtD * Theta * sqrtD;
    record(s, 0.5 * (B + B.transpose()));
  }

  result.epsilon_estimate = std::numeric_limits<double>::infinity();
  for (const GapWitness& w : result.witnesses) {
    result.epsilon_estimate = std::min(result.epsilon_estimate, w.min_abs_eigenvalue);
  }
  return result;
}

}  // namespace specflow

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "specflow/index_theory.hpp"
#include "specflow/operators.hpp"

using namespace specflow;

namespace {

TruncatedOperator diag_op(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return TruncatedOperator::from_matrix(Eigen::MatrixXd(v.asDiagonal()));
}

TruncatedOperator random_symmetric(int n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> diag(-scale, scale);
  Eigen::MatrixXd g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = diag(rng);
  return TruncatedOperator::from_matrix(q * d.asDiagonal() * q.transpose());
}

int negative_count(const TruncatedOperator& op, double tol) {
  Eigen::VectorXd ev = symmetric_eigenvalues(op.matrix);
  int count = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) <= -tol) ++count;
  return count;
}

Eigen::MatrixXd random_orthonormal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

bool nondegenerate(const TruncatedOperator& A, const TruncatedOperator& B,
                   double t, double margin) {
  Eigen::VectorXd ev = symmetric_eigenvalues(A.matrix - t * B.matrix);
  return ev.cwiseAbs().minCoeff() > margin;
}

}  // namespace

TEST_CASE("nullity counts the kernel window") {
  CHECK(nullity(diag_op({-1.0, 1.0}), diag_op({0.0, 0.0}), 1e-8).value == 0);

  // Zero modes of the wave operator at J=K=2: (1,1) and (2,2), two phases
  // each.
  TruncationSpec spec{1, 1, 2, 2, 8, 12};
  TruncatedOperator box = wave_operator(spec);
  TruncatedOperator zero = TruncatedOperator::from_matrix(
      Eigen::MatrixXd::Zero(box.dim(), box.dim()), spec);
  CHECK(nullity(box, zero, 1e-8).value == 4);

  // An eigenvalue halfway into the window counts, with a conditioning flag
  // when it sits within 10% of the edge.
  const double tol = 1e-6;
  NullityResult inside = nullity(diag_op({0.5 * tol}), diag_op({0.0}), tol);
  CHECK(inside.value == 1);
  CHECK_FALSE(inside.ill_conditioned);
  NullityResult edgy = nullity(diag_op({0.95 * tol}), diag_op({0.0}), tol);
  CHECK(edgy.value == 1);
  CHECK(edgy.ill_conditioned);
}

TEST_CASE("relative Morse index on closed forms") {
  // B = 0: index 0, nullity = dim ker A.
  TruncatedOperator A = diag_op({-1.0, 0.0, 2.0});
  TruncatedOperator Z = diag_op({0.0, 0.0, 0.0});
  IndexPair p0 = relative_morse_index(A, Z);
  CHECK(p0.index == 0);
  CHECK(p0.nullity == 1);

  // diag(1,-1) against 2I: one eigenvalue crosses.
  IndexPair p1 = relative_morse_index(diag_op({1.0, -1.0}), diag_op({2.0, 2.0}));
  CHECK(p1.index == 1);
  CHECK(p1.nullity == 0);

  // Gap precondition: ||B|| must stay inside the stated radius.
  IndexOptions opts;
  opts.gap_radius = 1.5;
  CHECK_THROWS_AS(
      relative_morse_index(diag_op({1.0, -1.0}), diag_op({2.0, 2.0}), opts),
      GapViolationError);
}

TEST_CASE("index monotonicity in the perturbation") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 6 + trial % 7;
    TruncatedOperator A = random_symmetric(n, 3.0, rng);
    TruncatedOperator B1 = random_symmetric(n, 1.0, rng);
    TruncatedOperator P = random_symmetric(n, 1.0, rng);
    Eigen::MatrixXd psd = P.matrix * P.matrix.transpose() * 0.3;
    TruncatedOperator B2 = TruncatedOperator::from_matrix(B1.matrix + psd);
    IndexPair i1 = relative_morse_index(A, B1);
    IndexPair i2 = relative_morse_index(A, B2);
    if (i1.nullity == 0) CHECK(i1.index <= i2.index);
  }
}

TEST_CASE("projection index identity cases") {
  Eigen::MatrixXd V(3, 2), W(3, 1);
  V << 1, 0, 0, 1, 0, 0;
  W << 1, 0, 0;

  ProjectionIndexResult same = projection_index(V, V);
  CHECK(same.index == 0);
  CHECK(same.dim_kernel == 0);
  CHECK(same.dim_cokernel == 0);

  ProjectionIndexResult r = projection_index(V, W);
  CHECK(r.index == 1);
  CHECK(r.dim_domain - r.dim_codomain == 1);

  // Non-orthonormal input is rejected.
  Eigen::MatrixXd bad = 2.0 * V;
  CHECK_THROWS_AS(projection_index(bad, W), ValidationError);
}

TEST_CASE("projection index on generic subspaces and antisymmetry") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd V = random_orthonormal(12, 5, rng);
  Eigen::MatrixXd W = random_orthonormal(12, 3, rng);
  ProjectionIndexResult vw = projection_index(V, W);
  ProjectionIndexResult wv = projection_index(W, V);
  CHECK(vw.index == 2);
  CHECK(wv.index == -2);
  CHECK(vw.dim_kernel == 2);  // generic position
  CHECK(vw.dim_cokernel == 0);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 6 + trial % 12;
    std::uniform_int_distribution<int> dim(1, n - 1);
    Eigen::MatrixXd Vr = random_orthonormal(n, dim(rng), rng);
    Eigen::MatrixXd Wr = random_orthonormal(n, dim(rng), rng);
    CHECK(projection_index(Vr, Wr).index == -projection_index(Wr, Vr).index);
  }
}

TEST_CASE("spectral flow of a 1x1 path") {
  TruncatedOperator A = diag_op({1.0});
  TruncatedOperator B = diag_op({2.0});
  FlowResult flow = spectral_flow(A, B, 0.0, 1.0, 4);
  CHECK(flow.flow == 1);
  REQUIRE(flow.crossings.size() == 1);
  CHECK(flow.crossings[0].t == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(flow.crossings[0].sign == 1);

  // Constant path: no crossings.
  FlowResult still = spectral_flow(A, diag_op({0.0}), 0.0, 1.0, 4);
  CHECK(still.flow == 0);
  CHECK(still.crossings.empty());

  // Degenerate endpoint is refused.
  CHECK_THROWS_AS(spectral_flow(diag_op({0.0}), B, 0.0, 1.0, 4),
                  DegenerateEndpointError);
}

TEST_CASE("flow equals the relative Morse index") {
  std::mt19937_64 rng(90210);
  int done = 0;
  while (done < 50) {
    const int n = 3 + static_cast<int>(rng() % 10);
    TruncatedOperator A = random_symmetric(n, 3.0, rng);
    TruncatedOperator B = random_symmetric(n, 2.5, rng);
    if (!nondegenerate(A, B, 0.0, 1e-4) || !nondegenerate(A, B, 1.0, 1e-4)) {
      continue;
    }
    FlowResult flow = spectral_flow(A, B, 0.0, 1.0, 8);
    IndexPair pair = relative_morse_index(A, B);
    CHECK(flow.flow == pair.index);
    ++done;
  }
}

TEST_CASE("flow is additive across an interior slice") {
  std::mt19937_64 rng(314);
  int done = 0;
  while (done < 20) {
    const int n = 4 + static_cast<int>(rng() % 8);
    TruncatedOperator A = random_symmetric(n, 3.0, rng);
    TruncatedOperator B = random_symmetric(n, 2.5, rng);
    const double mid = 0.37;
    if (!nondegenerate(A, B, 0.0, 1e-4) || !nondegenerate(A, B, 1.0, 1e-4) ||
        !nondegenerate(A, B, mid, 1e-4)) {
      continue;
    }
    const int whole = spectral_flow(A, B, 0.0, 1.0, 8).flow;
    const int left = spectral_flow(A, B, 0.0, mid, 4).flow;
    const int right = spectral_flow(A, B, mid, 1.0, 4).flow;
    CHECK(whole == left + right);
    ++done;
  }
}

TEST_CASE("flow crossing signs sum to the Morse count difference") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 10;
    TruncatedOperator A = random_symmetric(n, 3.0, rng);
    TruncatedOperator B = random_symmetric(n, 3.0, rng);
    if (!nondegenerate(A, B, 0.0, 1e-4) || !nondegenerate(A, B, 1.0, 1e-4)) {
      continue;
    }
    FlowResult flow = spectral_flow(A, B, 0.0, 1.0, 6);
    TruncatedOperator A1 = TruncatedOperator::from_matrix(A.matrix - B.matrix);
    const double tol = default_kernel_tol(A, B);
    CHECK(flow.flow == negative_count(A1, tol) - negative_count(A, tol));
    int sum = 0;
    for (const Crossing& c : flow.crossings) sum += c.sign;
    CHECK(sum == flow.flow);
    // The partition brackets every crossing.
    for (const Crossing& c : flow.crossings) {
      CHECK(c.t >= flow.partition.front());
      CHECK(c.t <= flow.partition.back());
    }
  }
}

TEST_CASE("gap nondegeneracy certificate") {
  // B1 = B2 = 0 and A = diag(-1, 1): the distance is exactly 1.
  TruncatedOperator A = diag_op({-1.0, 1.0});
  TruncatedOperator Z = diag_op({0.0, 0.0});
  GapCheckResult r = gap_nondegeneracy_check(A, Z, Z, 5, 99);
  CHECK(r.hypotheses_ok);
  CHECK(r.epsilon_estimate == doctest::Approx(1.0));

  // Diagonal closed form: constant bands [alpha, beta] against the shifted
  // wave operator; dist(sigma(A - B), 0) >= dist([alpha, beta], sigma(A)).
  TruncationSpec spec{1, 1, 4, 4, 16, 20};
  TruncatedOperator Ab = wave_operator(spec).shifted(1.2);
  const int n = Ab.dim();
  const double alpha = 0.05, beta = 0.35;
  TruncatedOperator B1 = TruncatedOperator::from_matrix(
      Eigen::MatrixXd((alpha * Eigen::VectorXd::Ones(n)).asDiagonal()), spec);
  TruncatedOperator B2 = TruncatedOperator::from_matrix(
      Eigen::MatrixXd((beta * Eigen::VectorXd::Ones(n)).asDiagonal()), spec);
  GapCheckResult rb = gap_nondegeneracy_check(Ab, B1, B2, 40, 4);
  CHECK(rb.hypotheses_ok);
  double closed_form = std::numeric_limits<double>::infinity();
  Eigen::VectorXd ev = symmetric_eigenvalues(Ab.matrix);
  for (int i = 0; i < ev.size(); ++i) {
    double d;
    if (ev(i) < alpha) d = alpha - ev(i);
    else if (ev(i) > beta) d = ev(i) - beta;
    else d = 0.0;
    closed_form = std::min(closed_form, d);
  }
  CHECK(rb.epsilon_estimate >= closed_form - 1e-6);
  CHECK(rb.epsilon_estimate > 0.0);
  CHECK(rb.witnesses.size() == 42);  // 40 samples + both endpoints

  // Violated hypothesis: nu_A(B2) != 0 is reported, not sampled.
  TruncatedOperator Bbad = diag_op({0.0, 1.0});
  GapCheckResult rv = gap_nondegeneracy_check(A, Z, Bbad, 5, 1);
  CHECK_FALSE(rv.hypotheses_ok);
  CHECK(rv.violated_hypothesis.find("nu_A(B2)") != std::string::npos);
  CHECK(rv.witnesses.empty());
}

TEST_CASE("gap check determinism") {
  std::mt19937_64 rng(5);
  TruncatedOperator A = random_symmetric(7, 3.0, rng);
  TruncatedOperator B1 = diag_op({0, 0, 0, 0, 0, 0, 0});
  TruncatedOperator B2 =
      TruncatedOperator::from_matrix(0.3 * Eigen::MatrixXd::Identity(7, 7));
  GapCheckResult a = gap_nondegeneracy_check(A, B1, B2, 20, 123);
  GapCheckResult b = gap_nondegeneracy_check(A, B1, B2, 20, 123);
  if (a.hypotheses_ok) {
    CHECK(a.epsilon_estimate == b.epsilon_estimate);
  } else {
    CHECK(a.violated_hypothesis == b.violated_hypothesis);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "specflow/operators.hpp"
#include "specflow/wave.hpp"

using namespace specflow;

namespace {

Eigen::MatrixXd sample_field(const FourierBasis& basis, const FieldFn& g) {
  const TruncationSpec& spec = basis.spec();
  Eigen::MatrixXd grid(spec.Nx, spec.Nt);
  for (int m = 0; m < spec.Nx; ++m)
    for (int n = 0; n < spec.Nt; ++n)
      grid(m, n) = g(basis.x_node(m), basis.t_node(n));
  return grid;
}

}  // namespace

TEST_CASE("wave operator eigenvalues") {
  // lambda_{1,0} = 1: substituting sin(x) into u_tt - u_xx gives sin(x).
  TruncatedOperator w1 = wave_operator({1, 1, 1, 0, 4, 4});
  CHECK(w1.matrix(0, 0) == doctest::Approx(1.0));

  // lambda_{1,1} = 0: the essential-spectrum surrogate at p = q = 1.
  TruncatedOperator w2 = wave_operator({1, 1, 1, 1, 4, 8});
  CHECK(w2.matrix(1, 1) == 0.0);
  CHECK(w2.matrix(2, 2) == 0.0);

  // p=2, q=3: lambda_{1,1} = 1 - 4/9 = 5/9, rational with denominator 9.
  TruncatedOperator w3 = wave_operator({2, 3, 1, 1, 4, 8});
  CHECK(w3.matrix(1, 1) == doctest::Approx(5.0 / 9.0).epsilon(1e-14));

  // Diagonal: off-diagonal entries exactly zero.
  TruncatedOperator w4 = wave_operator({2, 3, 3, 2, 12, 12});
  for (int r = 0; r < w4.dim(); ++r)
    for (int c = 0; c < w4.dim(); ++c)
      if (r != c) CHECK(w4.matrix(r, c) == 0.0);
}

TEST_CASE("wave operator matches a finite-difference application of the PDE") {
  // Apply d_tt - d_xx by central differences to each basis function sampled
  // on a fine auxiliary grid and compare with lambda * (basis value).
  TruncationSpec spec{2, 3, 3, 2, 12, 12};
  TruncatedOperator box = wave_operator(spec);
  const auto modes = mode_table(spec);
  const double w = spec.omega();
  const double hx = 1e-5, ht = 1e-5;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.5, 2.5), ut(0.1, 4.0);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    auto phi = [&](double x, double t) {
      const double arg = modes[a].k * w * t;
      const double tv =
          modes[a].phase == Phase::cos ? std::cos(arg) : std::sin(arg);
      return std::sin(modes[a].j * x) * tv;
    };
    const double x = ux(rng), t = ut(rng);
    const double utt =
        (phi(x, t + ht) - 2.0 * phi(x, t) + phi(x, t - ht)) / (ht * ht);
    const double uxx =
        (phi(x + hx, t) - 2.0 * phi(x, t) + phi(x - hx, t)) / (hx * hx);
    CHECK(utt - uxx ==
          doctest::Approx(box.matrix(a, a) * phi(x, t)).epsilon(1e-4));
  }
}

TEST_CASE("multiplication operator basics") {
  TruncationSpec spec{1, 1, 3, 2, 16, 16};
  FourierBasis basis(spec);

  // Constant field: c * identity.
  TruncatedOperator c_op = multiplication_operator(
      basis, Eigen::MatrixXd::Constant(spec.Nx, spec.Nt, 0.7));
  Eigen::MatrixXd diff =
      c_op.matrix - 0.7 * Eigen::MatrixXd::Identity(c_op.dim(), c_op.dim());
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(multiplication_operator(Eigen::MatrixXd::Zero(2, 2), spec),
                  ValidationError);
}

TEST_CASE("cos(2x) multiplication couples j with j +- 2 only") {
  TruncationSpec spec{1, 1, 4, 1, 16, 8};
  FourierBasis basis(spec);
  TruncatedOperator op = multiplication_operator(
      basis, sample_field(basis, [](double x, double) { return std::cos(2.0 * x); }));
  const auto modes = mode_table(spec);
  for (int r = 0; r < op.dim(); ++r) {
    for (int c = 0; c < op.dim(); ++c) {
      const int dj = std::abs(modes[r].j - modes[c].j);
      const bool same_tmode =
          modes[r].k == modes[c].k && modes[r].phase == modes[c].phase;
      // 2 sin(jx) sin(j'x) cos(2x): nonzero only for |j-j'| = 2 or the
      // j = j' = 1 self-term from the product identity.
      const bool allowed =
          same_tmode && (dj == 2 || (dj == 0 && modes[r].j == 1));
      if (!allowed) CHECK(std::abs(op.matrix(r, c)) < 1e-12);
    }
  }
  // The j=1 self-term is -1/2 under the unit-normalized basis.
  CHECK(op.matrix(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("multiplication operator norm bounded by sup|g|") {
  TruncationSpec spec{2, 3, 3, 2, 16, 16};
  FourierBasis basis(spec);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a0 = amp(rng), a1 = amp(rng), a2 = amp(rng);
    auto g = [&](double x, double t) {
      return a0 + a1 * std::sin(x) * std::cos(spec.omega() * t) +
             a2 * std::cos(2.0 * x);
    };
    Eigen::MatrixXd grid = sample_field(basis, g);
    TruncatedOperator op = multiplication_operator(basis, grid);
    CHECK(op.spectral_norm() <= grid.cwiseAbs().maxCoeff() + 1e-6);
  }
}

TEST_CASE("example band field gives operator norm within the band") {
  // g from the first worked example with alpha = -0.2, beta = 0.2 takes
  // values in [-0.2, 0.2]; the induced operator norm stays within it.
  Nonlinearity nl = example_nonlinearity("ex_thm41", {{"alpha", -0.2},
                                                      {"beta", 0.2},
                                                      {"b", 1.0},
                                                      {"eps1", 0.3},
                                                      {"eps2", 0.0}});
  TruncationSpec spec{1, 1, 3, 2, 16, 16};
  FourierBasis basis(spec);
  Eigen::MatrixXd grid = sample_field(
      basis, [&](double x, double t) { return nl.g_of_u(x, t, 0.4); });
  CHECK(grid.cwiseAbs().maxCoeff() <= 0.2);
  TruncatedOperator op = multiplication_operator(basis, grid);
  CHECK(op.spectral_norm() <= 0.2 + 1e-6);
}

TEST_CASE("spectral split ranks and algebra") {
  Eigen::MatrixXd d = Eigen::Vector3d(-2.0, 0.0, 2.0).asDiagonal();
  SpectralSplit s = spectral_split(TruncatedOperator::from_matrix(d), 1.0);
  CHECK(s.n_minus == 1);
  CHECK(s.n_zero == 1);
  CHECK(s.n_plus == 1);

  // Threshold above the spectral radius: everything lands in the zero block.
  SpectralSplit wide = spectral_split(TruncatedOperator::from_matrix(d), 10.0);
  CHECK(wide.n_zero == 3);
  CHECK((wide.Pzero - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);

  // Threshold on an eigenvalue is refused, naming the offender.
  try {
    spectral_split(TruncatedOperator::from_matrix(d), 2.0);
    FAIL("expected ThresholdOnSpectrumError");
  } catch (const ThresholdOnSpectrumError& e) {
    CHECK(std::abs(e.offending_eigenvalue) == doctest::Approx(2.0));
  }
}

TEST_CASE("split of the shifted wave operator counts the zero block") {
  TruncationSpec spec{1, 1, 2, 2, 8, 12};
  TruncatedOperator A = wave_operator(spec).shifted(0.5);
  SpectralSplit s = spectral_split(A, 0.4);
  int expected = 0;
  Eigen::VectorXd diag = wave_operator(spec).matrix.diagonal();
  for (int i = 0; i < diag.size(); ++i) {
    if (std::abs(diag(i) - 0.5) < 0.4) ++expected;
  }
  CHECK(s.n_zero == expected);
}

TEST_CASE("projection algebra invariants") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8 + trial;
    Eigen::MatrixXd g(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) g(r, c) = gauss(rng);
    TruncatedOperator op = TruncatedOperator::from_matrix(0.5 * (g + g.transpose()));
    SpectralSplit s = spectral_split(op, 0.37);

    auto check_projection = [&](const Eigen::MatrixXd& P) {
      CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((P * op.matrix - op.matrix * P).cwiseAbs().maxCoeff() < 1e-8);
    };
    check_projection(s.Pminus);
    check_projection(s.Pzero);
    check_projection(s.Pplus);
    Eigen::MatrixXd sum = s.Pminus + s.Pzero + s.Pplus;
    CHECK((sum - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("resolvent bound on the +- blocks") {
  TruncationSpec spec{1, 1, 4, 4, 16, 20};
  TruncatedOperator A = wave_operator(spec).shifted(1.2);
  const double l = 0.8;
  SpectralSplit s = spectral_split(A, l);
  double max_inverse = 0.0;
  for (int i = 0; i < s.eigenvalues.size(); ++i) {
    if (std::abs(s.eigenvalues(i)) > l) {
      max_inverse = std::max(max_inverse, 1.0 / std::abs(s.eigenvalues(i)));
    }
  }
  CHECK(max_inverse <= 1.0 / l + 1e-10);
}

TEST_CASE("gap report") {
  // diag(-1, 1) has nothing inside (-0.5, 0.5).
  Eigen::MatrixXd d = Eigen::Vector2d(-1.0, 1.0).asDiagonal();
  GapReport r = gap_report(TruncatedOperator::from_matrix(d), -0.5, 0.5);
  CHECK(r.eigenvalues_inside.empty());
  CHECK(r.min_distance_to_endpoints == doctest::Approx(0.5));

  // Box at p=q=1 on (-0.5, 0.5): only the zero cluster, multiplicity from
  // the j = |k| modes.
  TruncationSpec spec{1, 1, 3, 3, 12, 16};
  TruncatedOperator box = wave_operator(spec);
  GapReport rb = gap_report(box, -0.5, 0.5);
  int zero_modes = 0;
  for (const ModeIndex& m : mode_table(spec)) {
    if (m.j == m.k) ++zero_modes;
  }
  CHECK(static_cast<int>(rb.eigenvalues_inside.size()) == zero_modes);
  for (double ev : rb.eigenvalues_inside) CHECK(std::abs(ev) < 1e-12);

  // Shifting by 0.5 parks the cluster exactly on the endpoint: nothing
  // inside and a flagged degenerate distance.
  GapReport rs = gap_report(box.shifted(0.5), -0.5, 0.5);
  for (double ev : rs.eigenvalues_inside) CHECK(std::abs(ev + 0.5) > 1e-9);
  CHECK(rs.min_distance_to_endpoints == doctest::Approx(0.0));

  CHECK_THROWS_AS(gap_report(box, 1.0, -1.0), ValidationError);
}

TEST_CASE("essential spectrum surrogate grows with the truncation") {
  // The zero cluster of the wave operator gains multiplicity as J, K grow;
  // gap_report exposes this to the caller.
  GapReport small = gap_report(wave_operator({1, 1, 2, 2, 8, 12}), -0.4, 0.4);
  GapReport large = gap_report(wave_operator({1, 1, 4, 4, 16, 20}), -0.4, 0.4);
  CHECK(large.eigenvalues_inside.size() > small.eigenvalues_inside.size());
}

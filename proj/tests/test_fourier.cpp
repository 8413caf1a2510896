#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "specflow/fourier.hpp"

using namespace specflow;

namespace {

FourierField random_field(const TruncationSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd c(spec.mode_count());
  for (int i = 0; i < c.size(); ++i) c(i) = gauss(rng);
  return FourierField{spec, c};
}

}  // namespace

TEST_CASE("spec validation") {
  TruncationSpec ok{1, 1, 2, 1, 8, 8};
  CHECK_NOTHROW(ok.validate());

  TruncationSpec bad_gcd{2, 4, 2, 1, 8, 8};
  CHECK_THROWS_AS(bad_gcd.validate(), ValidationError);

  TruncationSpec undersampled{1, 1, 3, 1, 8, 8};  // Nx < 4J
  CHECK_THROWS_AS(undersampled.validate(), ValidationError);

  CHECK(TruncationSpec{2, 3, 1, 0, 4, 4}.period() == doctest::Approx(3.0 * kPi));
}

TEST_CASE("mode table enumeration") {
  // Single mode.
  auto single = mode_table({1, 1, 1, 0, 4, 4});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == ModeIndex{1, 0, Phase::cos});

  // Order is j-major, then k, cos before sin.
  auto six = mode_table({1, 1, 2, 1, 8, 8});
  REQUIRE(six.size() == 6);
  CHECK(six[0] == ModeIndex{1, 0, Phase::cos});
  CHECK(six[1] == ModeIndex{1, 1, Phase::cos});
  CHECK(six[2] == ModeIndex{1, 1, Phase::sin});
  CHECK(six[3] == ModeIndex{2, 0, Phase::cos});
  CHECK(six[4] == ModeIndex{2, 1, Phase::cos});
  CHECK(six[5] == ModeIndex{2, 1, Phase::sin});

  // Count matches J * (2K + 1).
  TruncationSpec spec{2, 3, 3, 2, 12, 12};
  CHECK(mode_table(spec).size() == 15);
  CHECK(spec.mode_count() == 15);

  // Determinism across calls.
  auto again = mode_table({1, 1, 2, 1, 8, 8});
  CHECK(six == again);
}

TEST_CASE("to_grid of a single mode") {
  TruncationSpec spec{1, 1, 2, 1, 8, 8};
  FourierBasis basis(spec);

  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.mode_count());
  c(0) = 1.0;  // (j=1, k=0, cos)
  Eigen::MatrixXd grid = basis.to_grid(c);

  // Values are norm * sin(x_m), constant in t, with the unit-L2 scaling.
  const double scale = std::sqrt(2.0 / (kPi * spec.period()));
  for (int m = 0; m < spec.Nx; ++m) {
    for (int n = 0; n < spec.Nt; ++n) {
      CHECK(grid(m, n) ==
            doctest::Approx(scale * std::sin(basis.x_node(m))).epsilon(1e-14));
    }
  }

  // Zero field maps to the zero matrix.
  CHECK(basis.to_grid(Eigen::VectorXd::Zero(spec.mode_count())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("from_grid picks out pure modes") {
  TruncationSpec spec{1, 1, 3, 2, 16, 16};
  FourierBasis basis(spec);

  // v = sin(x), constant in t: all mass on (1,0,cos).
  Eigen::MatrixXd v(spec.Nx, spec.Nt);
  for (int m = 0; m < spec.Nx; ++m)
    for (int n = 0; n < spec.Nt; ++n) v(m, n) = std::sin(basis.x_node(m));
  Eigen::VectorXd c = basis.from_grid(v);
  for (int i = 1; i < c.size(); ++i) CHECK(std::abs(c(i)) < 1e-12);
  CHECK(c(0) == doctest::Approx(std::sqrt(kPi * spec.period() / 2.0)));

  // v = sin(x) cos(p t / q): all mass on (1,1,cos).
  for (int m = 0; m < spec.Nx; ++m)
    for (int n = 0; n < spec.Nt; ++n)
      v(m, n) = std::sin(basis.x_node(m)) * std::cos(basis.t_node(n));
  c = basis.from_grid(v);
  for (int i = 0; i < c.size(); ++i) {
    if (i != 1) CHECK(std::abs(c(i)) < 1e-12);
  }
  CHECK(c(1) > 0.0);

  // Shape mismatch is rejected.
  CHECK_THROWS_AS(basis.from_grid(Eigen::MatrixXd::Zero(3, 3)), ValidationError);
}

TEST_CASE("round trip and linearity") {
  for (TruncationSpec spec : {TruncationSpec{1, 1, 4, 3, 16, 16},
                              TruncationSpec{2, 3, 3, 2, 16, 16},
                              TruncationSpec{3, 2, 5, 1, 24, 8}}) {
    FourierBasis basis(spec);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      FourierField u = random_field(spec, 100 + seed);
      FourierField w = random_field(spec, 200 + seed);
      Eigen::VectorXd back = basis.from_grid(basis.to_grid(u.coeffs));
      CHECK((back - u.coeffs).cwiseAbs().maxCoeff() < 1e-12);

      // from_grid(to_grid(u) + to_grid(w)) = u + w.
      Eigen::VectorXd sum =
          basis.from_grid(basis.to_grid(u.coeffs) + basis.to_grid(w.coeffs));
      CHECK((sum - u.coeffs - w.coeffs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("discrete Parseval identity") {
  TruncationSpec spec{2, 3, 4, 3, 16, 16};
  FourierBasis basis(spec);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    FourierField u = random_field(spec, 1000 + seed);
    FourierField w = random_field(spec, 5000 + seed);
    const double grid_ip =
        basis.grid_inner(basis.to_grid(u.coeffs), basis.to_grid(w.coeffs));
    CHECK(grid_ip == doctest::Approx(u.coeffs.dot(w.coeffs)).epsilon(1e-10));
  }
}

TEST_CASE("convenience wrappers validate input") {
  TruncationSpec spec{1, 1, 2, 1, 8, 8};
  FourierField bad{spec, Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(to_grid(bad), ValidationError);

  FourierField u = random_field(spec, 7);
  FourierField round = from_grid(to_grid(u), spec);
  CHECK((round.coeffs - u.coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

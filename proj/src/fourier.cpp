#include "specflow/fourier.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace specflow {

void TruncationSpec::validate() const {
  std::ostringstream err;
  if (p < 1 || q < 1) {
    err << "period pair must be positive, got p=" << p << " q=" << q;
    throw ValidationError(err.str());
  }
  if (std::gcd(p, q) != 1) {
    err << "period pair must be coprime, got p=" << p << " q=" << q;
    throw ValidationError(err.str());
  }
  if (J < 1 || K < 0) {
    err << "mode cutoffs out of range: J=" << J << " K=" << K;
    throw ValidationError(err.str());
  }
  if (Nx < 4 * J) {
    err << "Nx=" << Nx << " undersamples J=" << J << " (need Nx >= 4J)";
    throw ValidationError(err.str());
  }
  if (Nt < 4 * K + 4) {
    err << "Nt=" << Nt << " undersamples K=" << K << " (need Nt >= 4K+4)";
    throw ValidationError(err.str());
  }
}

TruncationSpec TruncationSpec::refined(int dj, int dk) const {
  TruncationSpec r = *this;
  r.J = J + dj;
  r.K = K + dk;
  r.Nx = std::max(Nx, 4 * r.J);
  r.Nt = std::max(Nt, 4 * r.K + 4);
  return r;
}

std::vector<ModeIndex> mode_table(const TruncationSpec& spec) {
  spec.validate();
  std::vector<ModeIndex> modes;
  modes.reserve(spec.mode_count());
  for (int j = 1; j <= spec.J; ++j) {
    modes.push_back({j, 0, Phase::cos});
    for (int k = 1; k <= spec.K; ++k) {
      modes.push_back({j, k, Phase::cos});
      modes.push_back({j, k, Phase::sin});
    }
  }
  return modes;
}

void FourierField::validate() const {
  spec.validate();
  if (coeffs.size() != spec.mode_count()) {
    std::ostringstream err;
    err << "coefficient vector has length " << coeffs.size() << ", expected "
        << spec.mode_count();
    throw ValidationError(err.str());
  }
  if (!coeffs.allFinite()) throw ValidationError("non-finite coefficient");
}

FourierBasis::FourierBasis(const TruncationSpec& spec) : spec_(spec) {
  spec.validate();
  const int N = spec.mode_count();
  const int G = spec.Nx * spec.Nt;
  const double T = spec.period();
  const double w = spec.omega();

  weight_ = kPi * T / static_cast<double>(G);

  // L2 normalization on [0,pi] x [0,T]: ||sin(jx)||^2 = pi/2 in x,
  // ||cos(k w t)||^2 = T (k=0) or T/2 (k>=1) in t.
  const double norm_k0 = std::sqrt(2.0 / (kPi * T));
  const double norm_k = 2.0 / std::sqrt(kPi * T);

  const auto modes = mode_table(spec);
  eval_.resize(G, N);
  for (int a = 0; a < N; ++a) {
    const ModeIndex& mode = modes[a];
    const double scale = (mode.k == 0) ? norm_k0 : norm_k;
    for (int m = 0; m < spec.Nx; ++m) {
      const double sx = std::sin(mode.j * x_node(m));
      for (int n = 0; n < spec.Nt; ++n) {
        const double arg = mode.k * w * t_node(n);
        const double tv = (mode.phase == Phase::cos) ? std::cos(arg) : std::sin(arg);
        eval_(m * spec.Nt + n, a) = scale * sx * tv;
      }
    }
  }
}

Eigen::MatrixXd FourierBasis::to_grid(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != spec_.mode_count()) {
    throw ValidationError("to_grid: coefficient length mismatch");
  }
  Eigen::VectorXd flat = eval_ * coeffs;
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), spec_.Nx,
                                                          spec_.Nt);
}

Eigen::VectorXd FourierBasis::from_grid(const Eigen::MatrixXd& values) const {
  if (values.rows() != spec_.Nx || values.cols() != spec_.Nt) {
    std::ostringstream err;
    err << "from_grid: expected " << spec_.Nx << "x" << spec_.Nt
        << " grid, got " << values.rows() << "x" << values.cols();
    throw ValidationError(err.str());
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      values;
  Eigen::Map<const Eigen::VectorXd> flat(rm.data(), rm.size());
  return weight_ * (eval_.transpose() * flat);
}

double FourierBasis::grid_inner(const Eigen::MatrixXd& a,
                                const Eigen::MatrixXd& b) const {
  return weight_ * a.cwiseProduct(b).sum();
}

Eigen::MatrixXd to_grid(const FourierField& u) {
  u.validate();
  return FourierBasis(u.spec).to_grid(u.coeffs);
}

FourierField from_grid(const Eigen::MatrixXd& values, const TruncationSpec& spec) {
  FourierBasis basis(spec);
  return FourierField{spec, basis.from_grid(values)};
}

}  // namespace specflow

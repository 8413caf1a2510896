#include "specflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace specflow {

TruncatedOperator TruncatedOperator::from_matrix(Eigen::MatrixXd m,
                                                 std::optional<TruncationSpec> spec) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError("operator matrix must be square and non-empty");
  }
  if (!m.allFinite()) throw ValidationError("operator matrix has non-finite entries");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    std::ostringstream err;
    err << "matrix is not symmetric (max |M - M^T| = " << asym << ")";
    throw ValidationError(err.str());
  }
  if (spec && m.rows() != spec->mode_count()) {
    throw ValidationError("operator size does not match truncation mode count");
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return TruncatedOperator{std::move(spec), std::move(sym)};
}

TruncatedOperator TruncatedOperator::shifted(double c) const {
  TruncatedOperator out = *this;
  out.matrix.diagonal().array() -= c;
  return out;
}

double TruncatedOperator::spectral_norm() const {
  Eigen::VectorXd ev = symmetric_eigenvalues(matrix);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

TruncatedOperator operator+(const TruncatedOperator& a, const TruncatedOperator& b) {
  if (a.dim() != b.dim()) throw ValidationError("operator dimension mismatch");
  return TruncatedOperator{a.spec ? a.spec : b.spec, a.matrix + b.matrix};
}

TruncatedOperator operator-(const TruncatedOperator& a, const TruncatedOperator& b) {
  if (a.dim() != b.dim()) throw ValidationError("operator dimension mismatch");
  return TruncatedOperator{a.spec ? a.spec : b.spec, a.matrix - b.matrix};
}

TruncatedOperator wave_operator(const TruncationSpec& spec) {
  spec.validate();
  const auto modes = mode_table(spec);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(spec.mode_count(), spec.mode_count());
  for (int a = 0; a < static_cast<int>(modes.size()); ++a) {
    const double kw = modes[a].k * spec.omega();
    m(a, a) = static_cast<double>(modes[a].j) * modes[a].j - kw * kw;
  }
  return TruncatedOperator{spec, std::move(m)};
}

TruncatedOperator multiplication_operator(const FourierBasis& basis,
                                          const Eigen::MatrixXd& g_values) {
  const TruncationSpec& spec = basis.spec();
  if (g_values.rows() != spec.Nx || g_values.cols() != spec.Nt) {
    std::ostringstream err;
    err << "multiplication_operator: expected " << spec.Nx << "x" << spec.Nt
        << " grid, got " << g_values.rows() << "x" << g_values.cols();
    throw ValidationError(err.str());
  }
  if (!g_values.allFinite()) {
    throw ValidationError("multiplication_operator: non-finite grid value");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
      g_values;
  Eigen::Map<const Eigen::VectorXd> flat(rm.data(), rm.size());
  // M = E^T diag(w * g) E; exactly symmetric up to rounding.
  Eigen::MatrixXd weighted =
      flat.asDiagonal() * basis.eval_matrix() * basis.quad_weight();
  Eigen::MatrixXd m = basis.eval_matrix().transpose() * weighted;
  m = 0.5 * (m + m.transpose()).eval();
  return TruncatedOperator{spec, std::move(m)};
}

TruncatedOperator multiplication_operator(const Eigen::MatrixXd& g_values,
                                          const TruncationSpec& spec) {
  return multiplication_operator(FourierBasis(spec), g_values);
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed");
  }
  return solver.eigenvalues();
}

SpectralSplit spectral_split(const TruncatedOperator& op, double l) {
  if (!(l > 0.0)) throw ValidationError("split threshold must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.matrix);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed");
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();

  constexpr double kExclusion = 1e-9;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(std::abs(ev(i)) - l) < kExclusion) {
      std::ostringstream err;
      err << "threshold l=" << l << " lies on the spectrum: eigenvalue "
          << ev(i) << " within " << kExclusion;
      throw ThresholdOnSpectrumError(err.str(), ev(i));
    }
  }

  SpectralSplit split;
  split.l = l;
  split.eigenvalues = ev;
  split.eigenvectors = solver.eigenvectors();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -l) {
      ++split.n_minus;
    } else if (ev(i) < l) {
      ++split.n_zero;
    } else {
      ++split.n_plus;
    }
  }
  split.Pminus = split.minus_basis() * split.minus_basis().transpose();
  split.Pzero = split.zero_basis() * split.zero_basis().transpose();
  split.Pplus = split.plus_basis() * split.plus_basis().transpose();
  return split;
}

GapReport gap_report(const TruncatedOperator& op, double a, double b) {
  if (!(a < b)) throw ValidationError("gap_report requires a < b");
  Eigen::VectorXd ev = symmetric_eigenvalues(op.matrix);
  GapReport report;
  report.a = a;
  report.b = b;
  report.min_distance_to_endpoints = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > a && ev(i) < b) report.eigenvalues_inside.push_back(ev(i));
    const double d = std::min(std::abs(ev(i) - a), std::abs(ev(i) - b));
    report.min_distance_to_endpoints =
        std::min(report.min_distance_to_endpoints, d);
  }
  return report;
}

}  // namespace specflow

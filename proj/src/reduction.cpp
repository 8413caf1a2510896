#include "specflow/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

namespace specflow {

NonlinearMap NonlinearMap::zero(int dim) {
  NonlinearMap map;
  map.value = [](const Eigen::VectorXd&) { return 0.0; };
  map.gradient = [dim](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(dim).eval();
  };
  map.lipschitz_bound = 0.0;
  map.origin_norm = 0.0;
  return map;
}

NonlinearMap NonlinearMap::quadratic(const Eigen::MatrixXd& B,
                                     const Eigen::VectorXd& w) {
  if (B.rows() != B.cols() || B.rows() != w.size()) {
    throw ValidationError("quadratic map: shape mismatch");
  }
  Eigen::MatrixXd Bs = 0.5 * (B + B.transpose());
  NonlinearMap map;
  map.value = [Bs, w](const Eigen::VectorXd& z) {
    return 0.5 * z.dot(Bs * z) + w.dot(z);
  };
  map.gradient = [Bs, w](const Eigen::VectorXd& z) {
    return (Bs * z + w).eval();
  };
  Eigen::VectorXd ev = symmetric_eigenvalues(Bs);
  map.lipschitz_bound = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  map.origin_norm = w.norm();
  return map;
}

ReducedProblem ReducedProblem::create(TruncatedOperator A, double l,
                                      NonlinearMap F, double gap_b,
                                      double contraction_tol, int max_iter) {
  if (!(F.lipschitz_bound < l && l < gap_b)) {
    std::ostringstream err;
    err << "need l_F < l < b, got l_F=" << F.lipschitz_bound << " l=" << l
        << " b=" << gap_b;
    throw ValidationError(err.str());
  }
  if (!(contraction_tol > 0.0) || max_iter < 1) {
    throw ValidationError("bad contraction parameters");
  }

  ReducedProblem prob;
  prob.split = spectral_split(A, l);  // rejects +-l on the spectrum
  prob.A = std::move(A);
  prob.F = std::move(F);
  prob.gap_b = gap_b;
  prob.contraction_tol = contraction_tol;
  prob.max_iter = max_iter;

  const int n = prob.A.dim();
  prob.inverse_pm = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double lambda = prob.split.eigenvalues(i);
    if (std::abs(lambda) > l) {
      prob.inverse_pm.noalias() +=
          (1.0 / lambda) * prob.split.eigenvectors.col(i) *
          prob.split.eigenvectors.col(i).transpose();
    }
  }
  return prob;
}

Eigen::VectorXd ReducedProblem::field_from_h0(const Eigen::VectorXd& x) const {
  if (x.size() != h0_dim()) throw ValidationError("H0 coordinate size mismatch");
  return split.zero_basis() * x;
}

Eigen::VectorXd ReducedProblem::h0_from_field(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw ValidationError("field size mismatch");
  return split.zero_basis().transpose() * z;
}

double ReducedProblem::e_norm_pm(const Eigen::VectorXd& w) const {
  double acc = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double lambda = split.eigenvalues(i);
    if (std::abs(lambda) > split.l) {
      const double c = split.eigenvectors.col(i).dot(w);
      acc += std::abs(lambda) * c * c;
    }
  }
  return std::sqrt(acc);
}

FixedPointResult fixed_point_z(const ReducedProblem& prob,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd* warm_pm) {
  const int n = prob.dim();
  Eigen::VectorXd xfield = prob.field_from_h0(x);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (warm_pm != nullptr) {
    // Keep only the +- content of the seed.
    w = *warm_pm - prob.split.zero_basis() *
                       (prob.split.zero_basis().transpose() * *warm_pm);
  }

  FixedPointResult result;
  double prev_update = -1.0;
  bool converged = false;
  double last_ratio = 0.0;
  for (int iter = 1; iter <= prob.max_iter; ++iter) {
    Eigen::VectorXd w_next = prob.inverse_pm * prob.F.gradient(w + xfield);
    const double update = (w_next - w).norm();
    if (!std::isfinite(update)) {
      throw NonContractionError("fixed point iteration diverged", last_ratio);
    }
    if (prev_update > 0.0) {
      last_ratio = update / prev_update;
      result.update_ratios.push_back(last_ratio);
    }
    w = std::move(w_next);
    result.iterations = iter;
    if (update <= prob.contraction_tol) {
      converged = true;
      break;
    }
    if (update > 0.0) prev_update = update;
  }
  if (!converged) {
    std::ostringstream err;
    err << "fixed point not converged after " << prob.max_iter
        << " iterations (last ratio " << last_ratio
        << "); the Lipschitz estimate may be too low or l too close to l_F";
    throw NonContractionError(err.str(), last_ratio);
  }

  result.zplus = prob.split.plus_basis() *
                 (prob.split.plus_basis().transpose() * w);
  result.zminus = prob.split.minus_basis() *
                  (prob.split.minus_basis().transpose() * w);
  result.z = xfield + result.zplus + result.zminus;
  return result;
}

namespace {

double value_at(const ReducedProblem& prob, const Eigen::VectorXd& z) {
  return 0.5 * z.dot(prob.A.matrix * z) - prob.F.value(z);
}

Eigen::VectorXd gradient_at(const ReducedProblem& prob, const Eigen::VectorXd& z) {
  return prob.split.zero_basis().transpose() *
         (prob.A.matrix * z - prob.F.gradient(z));
}

double residual_at(const ReducedProblem& prob, const Eigen::VectorXd& z) {
  return (prob.A.matrix * z - prob.F.gradient(z)).norm();
}

// Warm-started evaluation cache. The contraction fixed point is unique, so
// seeding from the previous solve changes nothing but the iteration count.
struct Evaluator {
  const ReducedProblem& prob;
  long evals = 0;
  Eigen::VectorXd warm;
  bool has_warm = false;

  explicit Evaluator(const ReducedProblem& p) : prob(p) {}

  FixedPointResult solve(const Eigen::VectorXd& x) {
    FixedPointResult fp = fixed_point_z(prob, x, has_warm ? &warm : nullptr);
    warm = fp.zplus + fp.zminus;
    has_warm = true;
    return fp;
  }

  double value(const Eigen::VectorXd& x) {
    ++evals;
    return value_at(prob, solve(x).z);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x,
                           Eigen::VectorXd* z_out = nullptr) {
    ++evals;
    FixedPointResult fp = solve(x);
    if (z_out) *z_out = fp.z;
    return gradient_at(prob, fp.z);
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) {
    const int d = prob.h0_dim();
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                     (1.0 + x.norm());
    Eigen::MatrixXd H(d, d);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      H.col(i) = (gradient(xp) - gradient(xm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose()).eval();
  }
};

struct PathSolve {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  double value = 0.0;
  double grad_norm = 0.0;
  double residual = 0.0;
};

// Damped Newton on the reduced gradient. Returns the refined point when the
// gradient norm reaches grad_tol, nothing on stall or budget exhaustion.
std::optional<PathSolve> newton_refine(Evaluator& ev, Eigen::VectorXd x,
                                       const SearchOptions& opts,
                                       int max_newton = 30) {
  const double target = std::min(opts.grad_tol * 1e-2, 1e-10);
  Eigen::VectorXd z;
  Eigen::VectorXd g = ev.gradient(x, &z);
  double gn = g.norm();
  for (int iter = 0; iter < max_newton && ev.evals < opts.budget; ++iter) {
    if (gn <= target) break;
    Eigen::MatrixXd H = ev.hessian(x);
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());

    bool stepped = false;
    double mu = 0.0;
    for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
      Eigen::MatrixXd Hmu = H;
      Hmu.diagonal().array() += mu;
      Eigen::VectorXd delta = Hmu.fullPivLu().solve(-g);
      const bool usable = delta.allFinite() &&
                          delta.norm() <= 1e4 * (1.0 + x.norm());
      if (usable) {
        double step = 1.0;
        for (int halving = 0; halving < 12; ++halving) {
          Eigen::VectorXd xc = x + step * delta;
          Eigen::VectorXd zc;
          Eigen::VectorXd gc = ev.gradient(xc, &zc);
          const double gcn = gc.norm();
          if (gcn < gn * (1.0 - 1e-4 * step) || gcn <= target) {
            x = std::move(xc);
            z = std::move(zc);
            g = std::move(gc);
            gn = gcn;
            stepped = true;
            break;
          }
          step *= 0.5;
          if (ev.evals >= opts.budget) break;
        }
      }
      mu = (mu == 0.0) ? 1e-10 * hscale : mu * 16.0;
    }
    if (!stepped) break;
  }
  if (gn > opts.grad_tol) return std::nullopt;
  PathSolve out;
  out.x = std::move(x);
  out.z = std::move(z);
  out.grad_norm = gn;
  out.value = value_at(ev.prob, out.z);
  out.residual = residual_at(ev.prob, out.z);
  return out;
}

// Gradient ascent with backtracking, used by the maximize strategy to walk
// uphill before handing over to Newton.
Eigen::VectorXd ascend(Evaluator& ev, Eigen::VectorXd x,
                       const SearchOptions& opts, int max_ascent = 400) {
  double alpha = 1.0;
  double val = ev.value(x);
  for (int iter = 0; iter < max_ascent && ev.evals < opts.budget; ++iter) {
    Eigen::VectorXd g = ev.gradient(x);
    const double gn = g.norm();
    if (gn <= 1e-3) break;
    bool improved = false;
    for (int halving = 0; halving < 40 && ev.evals < opts.budget; ++halving) {
      Eigen::VectorXd xc = x + alpha * g;
      const double vc = ev.value(xc);
      if (vc > val + 1e-4 * alpha * gn * gn) {
        x = std::move(xc);
        val = vc;
        alpha = std::min(alpha * 1.6, 1e6);
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  return x;
}

bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return a.size() < b.size();
}

}  // namespace

double reduced_value(const ReducedProblem& prob, const Eigen::VectorXd& x) {
  return value_at(prob, fixed_point_z(prob, x).z);
}

Eigen::VectorXd reduced_gradient(const ReducedProblem& prob,
                                 const Eigen::VectorXd& x) {
  return gradient_at(prob, fixed_point_z(prob, x).z);
}

Eigen::MatrixXd reduced_hessian_fd(const ReducedProblem& prob,
                                   const Eigen::VectorXd& x) {
  Evaluator ev(prob);
  return ev.hessian(x);
}

HessianSignature classify_signature(const Eigen::MatrixXd& hessian) {
  HessianSignature sig;
  if (hessian.size() == 0) return sig;
  Eigen::VectorXd ev = symmetric_eigenvalues(hessian);
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  const double tol = 1e-6 * (1.0 + scale);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol) {
      ++sig.negatives;
    } else if (ev(i) > tol) {
      ++sig.positives;
    } else {
      ++sig.zeros;
    }
  }
  return sig;
}

SearchResult find_critical_points(const ReducedProblem& prob,
                                  SearchStrategy strategy,
                                  const SearchOptions& opts) {
  SearchResult result;
  Evaluator ev(prob);
  const int d0 = prob.h0_dim();

  auto make_report = [&](const PathSolve& ps) {
    CriticalPointReport report;
    report.x = ps.x;
    report.z = ps.z;
    report.value = ps.value;
    report.grad_norm = ps.grad_norm;
    report.residual = ps.residual;
    if (d0 > 0) report.hessian_signature = classify_signature(ev.hessian(ps.x));
    return report;
  };

  if (d0 == 0) {
    // Nothing to reduce over: the contraction solves the whole equation.
    FixedPointResult fp = fixed_point_z(prob, Eigen::VectorXd(0));
    PathSolve ps;
    ps.x = Eigen::VectorXd(0);
    ps.z = fp.z;
    ps.value = value_at(prob, fp.z);
    ps.grad_norm = 0.0;
    ps.residual = residual_at(prob, fp.z);
    result.points.push_back(make_report(ps));
    result.evaluations = ev.evals;
    return result;
  }

  // Seeded lattice of starts: the origin, curvature directions of the
  // reduced Hessian at 0, then random directions, each at several radii.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(d0));
  {
    Eigen::MatrixXd H0 = ev.hessian(Eigen::VectorXd::Zero(d0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H0);
    std::vector<int> order(d0);
    for (int i = 0; i < d0; ++i) order[i] = i;
    if (strategy == SearchStrategy::maximize) {
      // Positive curvature at the origin marks directions where maxima lie
      // beyond; visit them first, largest curvature first.
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return es.eigenvalues()(a) > es.eigenvalues()(b);
      });
    } else {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
      });
    }
    const int n_dirs = std::min(d0, 6);
    for (int rank = 0; rank < n_dirs; ++rank) {
      Eigen::VectorXd dir = es.eigenvectors().col(order[rank]);
      for (double r : opts.start_radii) {
        starts.push_back(r * dir);
        starts.push_back(-r * dir);
      }
    }
  }
  {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n_random = 4 + 2 * std::min(d0, 8);
    for (int s = 0; s < n_random; ++s) {
      Eigen::VectorXd dir(d0);
      for (int i = 0; i < d0; ++i) dir(i) = gauss(rng);
      dir.normalize();
      for (double r : opts.start_radii) starts.push_back(r * dir);
    }
  }

  std::vector<Eigen::VectorXd> visited;
  int failed_starts = 0;
  for (const Eigen::VectorXd& start : starts) {
    if (ev.evals >= opts.budget) break;
    bool near_visited = false;
    for (const Eigen::VectorXd& v : visited) {
      if ((v - start).norm() < 1e-9) near_visited = true;
    }
    if (near_visited) continue;
    visited.push_back(start);

    try {
      Eigen::VectorXd x = start;
      if (strategy == SearchStrategy::maximize) x = ascend(ev, x, opts);
      std::optional<PathSolve> ps = newton_refine(ev, x, opts);
      if (!ps) {
        ++failed_starts;
        continue;
      }
      bool merged = false;
      for (auto& existing : result.points) {
        if ((existing.x - ps->x).norm() <= opts.dedup_tol) {
          if (ps->grad_norm < existing.grad_norm) existing = make_report(*ps);
          merged = true;
          break;
        }
      }
      if (!merged) result.points.push_back(make_report(*ps));
    } catch (const NonContractionError&) {
      ++failed_starts;
    }
    if (static_cast<int>(result.points.size()) >= opts.max_points) break;
  }

  std::sort(result.points.begin(), result.points.end(),
            [](const CriticalPointReport& a, const CriticalPointReport& b) {
              if (a.value != b.value) return a.value < b.value;
              return lexicographic_less(a.x, b.x);
            });
  result.evaluations = ev.evals;
  std::ostringstream diag;
  diag << result.points.size() << " accepted, " << failed_starts
       << " failed starts, " << ev.evals << " evaluations";
  result.diagnostics = diag.str();
  return result;
}

RegularizationPath regularized_solve(const TruncatedOperator& A,
                                     const TruncatedOperator& Binf,
                                     const NonlinearMap& r,
                                     const std::vector<double>& eps_sequence,
                                     const RegularizeOptions& opts) {
  if (eps_sequence.empty()) throw ValidationError("empty eps sequence");
  for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
    if (!(eps_sequence[i] > 0.0)) throw ValidationError("eps must be positive");
    if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1])) {
      throw ValidationError("eps sequence must be strictly decreasing");
    }
  }

  TruncatedOperator AB = A - Binf;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AB.matrix);
  const double ker_tol = opts.kernel_tol > 0.0
                             ? opts.kernel_tol
                             : default_kernel_tol(A, Binf);
  const int n = A.dim();
  std::vector<int> kernel_cols;
  double eta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double mag = std::abs(es.eigenvalues()(i));
    if (mag <= ker_tol) {
      kernel_cols.push_back(i);
    } else {
      eta = std::min(eta, mag);
    }
  }
  if (eps_sequence.front() >= eta) {
    std::ostringstream err;
    err << "largest eps " << eps_sequence.front()
        << " reaches the nonzero spectrum of A - Binf (eta = " << eta << ")";
    throw ValidationError(err.str());
  }
  Eigen::MatrixXd kernel_basis(n, static_cast<int>(kernel_cols.size()));
  for (std::size_t c = 0; c < kernel_cols.size(); ++c) {
    kernel_basis.col(c) = es.eigenvectors().col(kernel_cols[c]);
  }

  const Eigen::VectorXd binf_ev = symmetric_eigenvalues(Binf.matrix);
  const double binf_norm =
      std::max(std::abs(binf_ev(0)), std::abs(binf_ev(binf_ev.size() - 1)));
  const double lip = binf_norm + r.lipschitz_bound;

  RegularizationPath path;
  Eigen::VectorXd prev_z;
  bool has_prev = false;

  for (double eps : eps_sequence) {
    TruncatedOperator A_eps = A.shifted(-eps);  // A + eps * I

    NonlinearMap F_eps;
    const Eigen::MatrixXd Bm = Binf.matrix;
    F_eps.value = [Bm, &r](const Eigen::VectorXd& z) {
      return 0.5 * z.dot(Bm * z) + r.value(z);
    };
    F_eps.gradient = [Bm, &r](const Eigen::VectorXd& z) {
      return (Bm * z + r.gradient(z)).eval();
    };
    F_eps.lipschitz_bound = lip;
    F_eps.origin_norm = r.gradient(Eigen::VectorXd::Zero(n)).norm();

    ReducedProblem prob =
        ReducedProblem::create(std::move(A_eps), opts.l, std::move(F_eps),
                               opts.gap_b);

    std::optional<PathSolve> solved;
    if (has_prev) {
      try {
        Evaluator ev(prob);
        ev.warm = prev_z;
        ev.has_warm = true;
        solved = newton_refine(ev, prob.h0_from_field(prev_z), opts.search);
      } catch (const NonContractionError&) {
        solved = std::nullopt;
      }
    }
    if (!solved) {
      SearchResult sr = find_critical_points(
          prob, SearchStrategy::multistart_newton, opts.search);
      const CriticalPointReport* best = nullptr;
      for (const auto& p : sr.points) {
        if (!best || p.residual < best->residual ||
            (p.residual == best->residual && p.z.norm() < best->z.norm())) {
          best = &p;
        }
      }
      if (best) {
        PathSolve ps;
        ps.x = best->x;
        ps.z = best->z;
        ps.value = best->value;
        ps.grad_norm = best->grad_norm;
        ps.residual = best->residual;
        solved = ps;
      }
    }
    if (!solved) {
      std::ostringstream diag;
      diag << "no solution found at eps = " << eps;
      path.diagnostics = diag.str();
      return path;
    }

    RegularizationStep step;
    step.eps = eps;
    step.z = solved->z;
    step.kernel_norm = (kernel_basis.transpose() * solved->z).norm();
    step.complement_norm = std::sqrt(std::max(
        0.0, solved->z.squaredNorm() - step.kernel_norm * step.kernel_norm));
    step.residual =
        (eps * solved->z + AB.matrix * solved->z - r.gradient(solved->z)).norm();
    if (has_prev) {
      path.successive_distances.push_back((solved->z - prev_z).norm());
    }
    path.steps.push_back(step);

    if (step.kernel_norm > opts.kernel_ceiling) {
      path.kernel_diverged = true;
      std::ostringstream diag;
      diag << "kernel component " << step.kernel_norm << " exceeded ceiling "
           << opts.kernel_ceiling << " at eps = " << eps
           << "; the bounded-remainder sign mechanism looks violated";
      path.diagnostics = diag.str();
      return path;
    }

    prev_z = solved->z;
    has_prev = true;
  }

  path.completed = true;
  path.limit = prev_z;
  path.limit_residual = (AB.matrix * prev_z - r.gradient(prev_z)).norm();
  return path;
}

std::vector<double> uniform_lambda_grid(int steps) {
  if (steps < 2) throw ValidationError("lambda grid needs at least 2 points");
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i) {
    grid[i] = static_cast<double>(i) / (steps - 1);
  }
  return grid;
}

HomotopyPath homotopy_solve(const TruncatedOperator& A,
                            const TruncatedOperator& B1, const NonlinearMap& F,
                            const std::vector<double>& lambda_grid,
                            const HomotopyOptions& opts) {
  if (lambda_grid.size() < 2 || lambda_grid.front() != 0.0 ||
      lambda_grid.back() != 1.0) {
    throw ValidationError("lambda grid must run from 0 to 1");
  }
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) {
      throw ValidationError("lambda grid must be strictly increasing");
    }
  }
  NullityResult nu = nullity(A, B1, default_kernel_tol(A, B1));
  if (nu.value != 0) {
    std::ostringstream err;
    err << "homotopy requires nu_A(B1) = 0, got " << nu.value;
    throw ValidationError(err.str());
  }

  const int n = A.dim();
  const Eigen::VectorXd b1_ev = symmetric_eigenvalues(B1.matrix);
  const double b1_norm =
      std::max(std::abs(b1_ev(0)), std::abs(b1_ev(b1_ev.size() - 1)));
  const double lip_hat = std::max(b1_norm, F.lipschitz_bound);

  HomotopyPath path;
  Eigen::VectorXd prev_z = Eigen::VectorXd::Zero(n);
  path.steps.push_back({0.0, prev_z, 0.0, 0.0});

  std::deque<double> queue(lambda_grid.begin() + 1, lambda_grid.end());
  double prev_lambda = 0.0;
  int refinements = 0;

  while (!queue.empty()) {
    const double lam = queue.front();

    NonlinearMap F_lam;
    const Eigen::MatrixXd B1m = B1.matrix;
    F_lam.value = [B1m, &F, lam](const Eigen::VectorXd& z) {
      return 0.5 * (1.0 - lam) * z.dot(B1m * z) + lam * F.value(z);
    };
    F_lam.gradient = [B1m, &F, lam](const Eigen::VectorXd& z) {
      return ((1.0 - lam) * (B1m * z) + lam * F.gradient(z)).eval();
    };
    F_lam.lipschitz_bound = lip_hat;
    F_lam.origin_norm = lam * F.origin_norm;

    ReducedProblem prob =
        ReducedProblem::create(A, opts.l, std::move(F_lam), opts.gap_b);

    std::optional<PathSolve> solved;
    try {
      Evaluator ev(prob);
      ev.warm = prev_z;
      ev.has_warm = true;
      solved = newton_refine(ev, prob.h0_from_field(prev_z), opts.search);
    } catch (const NonContractionError&) {
      solved = std::nullopt;
    }

    if (!solved) {
      if (refinements >= opts.max_refinements ||
          lam - prev_lambda < 1e-8) {
        std::ostringstream diag;
        diag << "continuation stalled between lambda = " << prev_lambda
             << " and " << lam;
        path.diagnostics = diag.str();
        return path;
      }
      queue.push_front(0.5 * (prev_lambda + lam));
      ++refinements;
      continue;
    }

    if (solved->z.norm() > opts.radius) {
      path.escaped = true;
      std::ostringstream diag;
      diag << "path norm " << solved->z.norm() << " escaped the radius "
           << opts.radius << " at lambda = " << lam
           << "; boundedness hypothesis looks violated";
      path.diagnostics = diag.str();
      return path;
    }

    path.steps.push_back({lam, solved->z, solved->grad_norm, solved->residual});
    prev_z = solved->z;
    prev_lambda = lam;
    queue.pop_front();
  }

  path.completed = true;
  return path;
}

}  // namespace specflow

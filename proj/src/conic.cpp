#include "semidi/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace semidi {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kConeDim = 3;

// PSD block -> second-order-cone coordinates ((p+r)/2, (p-r)/2, q).
Eigen::Vector3d to_cone(const Sym2& m) {
  return {0.5 * (m.xx + m.yy), 0.5 * (m.xx - m.yy), m.xy};
}

// Inverse of the pairing above for dual variables: s'z = Tr[S Z].
Sym2 dual_block(const Eigen::Ref<const VectorXd>& z) {
  return {0.5 * (z[0] + z[1]), 0.5 * z[2], 0.5 * (z[0] - z[1])};
}

// J-norm sqrt(u0^2 - |u1|^2) of an interior cone point.
double jnorm(const Eigen::Ref<const VectorXd>& u) {
  const double r = u.tail(u.size() - 1).norm();
  return std::sqrt(std::max((u[0] - r) * (u[0] + r), 0.0));
}

// Largest step t >= 0 with u + t d in the cone (u interior). Returns +inf when
// the ray never leaves the cone.
double max_cone_step(const Eigen::Ref<const VectorXd>& u, const Eigen::Ref<const VectorXd>& d) {
  const auto u1 = u.tail(u.size() - 1);
  const auto d1 = d.tail(d.size() - 1);
  const double qa = d[0] * d[0] - d1.squaredNorm();
  const double qb = 2.0 * (u[0] * d[0] - u1.dot(d1));
  const double r = u1.norm();
  const double qc = (u[0] - r) * (u[0] + r);
  constexpr double inf = std::numeric_limits<double>::infinity();
  // The first positive root of qa t^2 + qb t + qc is the exit point; leaving
  // through the apex also zeroes the quadratic.
  double best = inf;
  const auto consider = [&best](double t) {
    if (t > 0.0 && t < best) best = t;
  };
  if (std::abs(qa) < 1e-300) {
    if (qb < 0.0) consider(-qc / qb);
    return best;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return best;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
  if (q != 0.0) {
    consider(q / qa);
    consider(qc / q);
  }
  return best;
}

// Nesterov-Todd scaling of one cone: W (symmetric), W^2 and lambda = W z.
struct NtScaling {
  Eigen::Matrix3d w;
  Eigen::Matrix3d w_inv;
  Eigen::Matrix3d w2;
  Eigen::Vector3d lambda;
};

NtScaling nt_scaling(const Eigen::Vector3d& s, const Eigen::Vector3d& z) {
  const double sn = jnorm(s);
  const double zn = jnorm(z);
  const Eigen::Vector3d sb = s / sn;
  const Eigen::Vector3d zb = z / zn;
  const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
  Eigen::Vector3d wb;
  wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
  wb.tail<2>() = (sb.tail<2>() - zb.tail<2>()) / (2.0 * gamma);
  const double beta = std::sqrt(sn / zn);

  const Eigen::Vector2d w1 = wb.tail<2>();
  const Eigen::Matrix2d lower = Eigen::Matrix2d::Identity() + w1 * w1.transpose() / (1.0 + wb[0]);
  NtScaling out;
  out.w(0, 0) = wb[0];
  out.w.block<1, 2>(0, 1) = w1.transpose();
  out.w.block<2, 1>(1, 0) = w1;
  out.w.block<2, 2>(1, 1) = lower;
  out.w_inv = out.w;
  out.w_inv.block<1, 2>(0, 1) *= -1.0;
  out.w_inv.block<2, 1>(1, 0) *= -1.0;
  out.w *= beta;
  out.w_inv /= beta;
  Eigen::Matrix3d jmat = Eigen::Matrix3d::Identity();
  jmat(1, 1) = jmat(2, 2) = -1.0;
  out.w2 = beta * beta * (2.0 * wb * wb.transpose() - jmat);
  out.lambda = out.w * z;
  return out;
}

// Jordan product u o v and its inverse lambda \ d.
Eigen::Vector3d jordan(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
  Eigen::Vector3d out;
  out[0] = u.dot(v);
  out.tail<2>() = u[0] * v.tail<2>() + v[0] * u.tail<2>();
  return out;
}

Eigen::Vector3d jordan_solve(const Eigen::Vector3d& lambda, const Eigen::Vector3d& d) {
  const double det = lambda[0] * lambda[0] - lambda.tail<2>().squaredNorm();
  Eigen::Vector3d out;
  out[0] = (lambda[0] * d[0] - lambda.tail<2>().dot(d.tail<2>())) / det;
  out.tail<2>() = (d.tail<2>() - out[0] * lambda.tail<2>()) / lambda[0];
  return out;
}

struct DenseForm {
  MatrixXd g;  // m x n
  VectorXd h;
  MatrixXd a;  // p x n
  VectorXd b;
  VectorXd c;
  std::vector<int> kept_rows;
};

struct Presolve {
  DenseForm form;
  bool inconsistent = false;
  VectorXd infeasibility_ray;  // over all original equality rows
};

Presolve build_dense(const ConicProblem& prob, double tol) {
  const int n = prob.num_vars;
  const int m = kConeDim * static_cast<int>(prob.blocks.size());
  const int p_all = static_cast<int>(prob.equalities.size());
  Presolve out;
  DenseForm& f = out.form;
  f.c = prob.objective;
  f.g = MatrixXd::Zero(m, n);
  f.h = VectorXd::Zero(m);
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    const auto& blk = prob.blocks[k];
    f.h.segment<kConeDim>(kConeDim * k) = to_cone(blk.constant);
    for (const auto& [i, coef] : blk.terms) f.g.block<kConeDim, 1>(kConeDim * k, i) -= to_cone(coef);
  }
  MatrixXd a_all = MatrixXd::Zero(p_all, n);
  VectorXd b_all(p_all);
  for (int r = 0; r < p_all; ++r) {
    for (const auto& [i, coef] : prob.equalities[r].terms) a_all(r, i) += coef;
    b_all[r] = prob.equalities[r].rhs;
  }
  if (p_all == 0) {
    f.a = MatrixXd::Zero(0, n);
    f.b = VectorXd::Zero(0);
    return out;
  }
  // Drop linearly dependent rows; an inconsistent dependent row means the
  // affine constraints alone are infeasible.
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(a_all.transpose());
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> kept;
  std::vector<int> dropped;
  for (int i = 0; i < p_all; ++i) {
    const int row = qr.colsPermutation().indices()[i];
    (i < rank ? kept : dropped).push_back(row);
  }
  std::sort(kept.begin(), kept.end());
  f.kept_rows = kept;
  f.a.resize(static_cast<Eigen::Index>(kept.size()), n);
  f.b.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    f.a.row(static_cast<Eigen::Index>(r)) = a_all.row(kept[r]);
    f.b[static_cast<Eigen::Index>(r)] = b_all[kept[r]];
  }
  if (!dropped.empty()) {
    const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(f.a.transpose());
    for (const int row : dropped) {
      const VectorXd coeff = cod.solve(a_all.row(row).transpose());
      const double mismatch = b_all[row] - coeff.dot(f.b);
      if (std::abs(mismatch) > tol * (1.0 + std::abs(b_all[row]))) {
        out.inconsistent = true;
        out.infeasibility_ray = VectorXd::Zero(p_all);
        out.infeasibility_ray[row] = -1.0 / mismatch;
        for (std::size_t r = 0; r < kept.size(); ++r)
          out.infeasibility_ray[kept[r]] = coeff[static_cast<Eigen::Index>(r)] / mismatch;
        break;
      }
    }
  }
  return out;
}

}  // namespace

double Sym2::min_eigenvalue() const {
  const double mean = 0.5 * (xx + yy);
  return mean - std::hypot(0.5 * (xx - yy), xy);
}

Sym2 PsdBlock2::evaluate(const Eigen::VectorXd& x) const {
  Sym2 out = constant;
  for (const auto& [i, coef] : terms) out += x[i] * coef;
  return out;
}

void ConicProblem::check() const {
  if (objective.size() != num_vars) throw std::invalid_argument("objective size mismatch");
  const auto in_range = [this](int i) { return i >= 0 && i < num_vars; };
  for (const auto& blk : blocks)
    for (const auto& t : blk.terms)
      if (!in_range(t.first)) throw std::invalid_argument("PSD block references unknown variable");
  for (const auto& eq : equalities)
    for (const auto& t : eq.terms)
      if (!in_range(t.first)) throw std::invalid_argument("equality references unknown variable");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSolved: return "SOLVED";
    case SolveStatus::kPrimalInfeasible: return "INFEASIBLE";
    case SolveStatus::kDualInfeasible: return "UNBOUNDED";
    case SolveStatus::kSolvedInaccurate: return "SOLVED_INACCURATE";
    case SolveStatus::kNumericalFailure: return "NUMERICAL_FAILURE";
  }
  return "UNKNOWN";
}

SolverSettings default_solver_settings() {
  SolverSettings s;
  if (const char* env = std::getenv("SEMIDI_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0 && std::isfinite(v)) s.tol = v;
  }
  return s;
}

nlohmann::json ConicSolution::diagnostics() const {
  return {{"status", to_string(status)},
          {"iterations", iterations},
          {"primal_value", primal_value},
          {"dual_value", dual_value},
          {"gap", gap},
          {"primal_residual", primal_residual},
          {"dual_residual", dual_residual}};
}

ConicSolution solve_conic(const ConicProblem& prob, const SolverSettings& settings) {
  prob.check();
  const double tol = settings.tol;
  Presolve pre = build_dense(prob, tol);
  const DenseForm& f = pre.form;
  const int n = prob.num_vars;
  const int ncones = static_cast<int>(prob.blocks.size());
  const int m = kConeDim * ncones;
  const int p = static_cast<int>(f.a.rows());
  const int p_all = static_cast<int>(prob.equalities.size());

  ConicSolution sol;
  sol.x = VectorXd::Zero(n);
  sol.equality_duals = VectorXd::Zero(p_all);
  sol.block_duals.assign(prob.blocks.size(), Sym2{});
  if (pre.inconsistent) {
    sol.status = SolveStatus::kPrimalInfeasible;
    sol.equality_duals = pre.infeasibility_ray;
    return sol;
  }

  VectorXd x = VectorXd::Zero(n);
  VectorXd y = VectorXd::Zero(p);
  VectorXd s = VectorXd::Zero(m);
  VectorXd z = VectorXd::Zero(m);
  for (int k = 0; k < ncones; ++k) s[kConeDim * k] = z[kConeDim * k] = 1.0;
  double tau = 1.0;
  double kappa = 1.0;

  const double norm_b = f.b.size() ? f.b.norm() : 0.0;
  const double norm_h = f.h.norm();
  const double norm_c = f.c.norm();
  const int dim = n + p + m;

  const auto export_solution = [&](SolveStatus status, double scale_primal, double scale_dual) {
    sol.status = status;
    sol.x = x / scale_primal;
    for (int r = 0; r < p; ++r) sol.equality_duals[f.kept_rows[r]] = y[r] / scale_dual;
    for (int k = 0; k < ncones; ++k)
      sol.block_duals[k] = dual_block(z.segment<kConeDim>(kConeDim * k) / scale_dual);
  };

  // Best iterate so far, kept for a reduced-accuracy exit on stalls.
  struct Snapshot {
    VectorXd x, y, z;
    double tau = 1.0, pcost = 0.0, dcost = 0.0, gap = 0.0, pres = 0.0, dres = 0.0;
    int iter = 0;
  };
  Snapshot best;
  double best_metric = std::numeric_limits<double>::infinity();
  const auto interior = [&](const VectorXd& sv, const VectorXd& zv) {
    for (int k = 0; k < ncones; ++k) {
      if (!(jnorm(sv.segment<kConeDim>(kConeDim * k)) > 0.0) || !(sv[kConeDim * k] > 0.0)) return false;
      if (!(jnorm(zv.segment<kConeDim>(kConeDim * k)) > 0.0) || !(zv[kConeDim * k] > 0.0)) return false;
    }
    return true;
  };

  std::vector<NtScaling> scal(ncones);
  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    sol.iterations = iter;
    const VectorXd rx = f.a.transpose() * y + f.g.transpose() * z + f.c * tau;
    const VectorXd ry = f.a * x - f.b * tau;
    const VectorXd rz = s + f.g * x - f.h * tau;
    const double hz_by = f.h.dot(z) + f.b.dot(y);
    const double cx = f.c.dot(x);
    const double rt = kappa + cx + hz_by;
    const double mu = (s.dot(z) + tau * kappa) / (ncones + 1);

    const double pcost = cx / tau;
    const double dcost = -hz_by / tau;
    const double pres = std::max(p ? ry.norm() / tau / (1.0 + norm_b) : 0.0, rz.norm() / tau / (1.0 + norm_h));
    const double dres = rx.norm() / tau / (1.0 + norm_c);
    const double gap = s.dot(z) / (tau * tau);
    sol.primal_value = pcost;
    sol.dual_value = dcost;
    sol.gap = gap;
    sol.primal_residual = pres;
    sol.dual_residual = dres;

    const double gap_scale = 1.0 + std::min(std::abs(pcost), std::abs(dcost));
    const double metric = std::max({pres, dres, gap / gap_scale, std::abs(pcost - dcost) / gap_scale});
    if (std::isfinite(metric) && metric < best_metric) {
      best_metric = metric;
      best = {x, y, z, tau, pcost, dcost, gap, pres, dres, iter};
    }
    if (pres <= tol && dres <= tol && gap <= tol * gap_scale && std::abs(pcost - dcost) <= tol * gap_scale) {
      export_solution(SolveStatus::kSolved, tau, tau);
      return sol;
    }
    if (hz_by < 0.0) {
      const double pinf = (f.a.transpose() * y + f.g.transpose() * z).norm() / std::max(1.0, norm_c) / (-hz_by);
      if (pinf <= tol) {
        export_solution(SolveStatus::kPrimalInfeasible, 1.0, -hz_by);
        return sol;
      }
    }
    if (cx < 0.0) {
      const double dinf = std::max(p ? (f.a * x).norm() / std::max(1.0, norm_b) : 0.0,
                                   (f.g * x + s).norm() / std::max(1.0, norm_h)) / (-cx);
      if (dinf <= tol) {
        export_solution(SolveStatus::kDualInfeasible, -cx, 1.0);
        return sol;
      }
    }
    if (iter == settings.max_iterations) break;

    for (int k = 0; k < ncones; ++k)
      scal[k] = nt_scaling(s.segment<kConeDim>(kConeDim * k), z.segment<kConeDim>(kConeDim * k));

    MatrixXd kkt = MatrixXd::Zero(dim, dim);
    kkt.block(0, n, n, p) = f.a.transpose();
    kkt.block(0, n + p, n, m) = f.g.transpose();
    kkt.block(n, 0, p, n) = f.a;
    kkt.block(n + p, 0, m, n) = f.g;
    for (int k = 0; k < ncones; ++k)
      kkt.block<kConeDim, kConeDim>(n + p + kConeDim * k, n + p + kConeDim * k) = -scal[k].w2;
    MatrixXd kkt_reg = kkt;
    kkt_reg.diagonal().head(n).array() += settings.regularization;
    kkt_reg.diagonal().tail(p + m).array() -= settings.regularization;
    const Eigen::PartialPivLU<MatrixXd> lu(kkt_reg);
    const auto kkt_solve = [&](const VectorXd& rhs) {
      VectorXd u = lu.solve(rhs);
      for (int r = 0; r < settings.refinement_steps; ++r) u += lu.solve(rhs - kkt * u);
      return u;
    };

    VectorXd q2(dim);
    q2 << -f.c, f.b, f.h;
    const VectorXd u2 = kkt_solve(q2);
    const double denom_base = f.c.dot(u2.head(n)) + f.b.dot(u2.segment(n, p)) + f.h.dot(u2.tail(m));

    struct Direction {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    // ds_target: lambda o (W dz + W^{-1} ds); dk_target: kappa dtau + tau dkappa.
    const auto direction = [&](double resid_scale, const VectorXd& ds_target, double dk_target) {
      VectorXd q1(dim);
      q1.head(n) = -resid_scale * rx;
      q1.segment(n, p) = -resid_scale * ry;
      VectorXd lam_inv_ds(m);
      for (int k = 0; k < ncones; ++k) {
        lam_inv_ds.segment<kConeDim>(kConeDim * k) =
            jordan_solve(scal[k].lambda, ds_target.segment<kConeDim>(kConeDim * k));
        q1.segment<kConeDim>(n + p + kConeDim * k) =
            -resid_scale * rz.segment<kConeDim>(kConeDim * k) - scal[k].w * lam_inv_ds.segment<kConeDim>(kConeDim * k);
      }
      const VectorXd u1 = kkt_solve(q1);
      Direction d;
      const double num = -resid_scale * rt - dk_target / tau - f.c.dot(u1.head(n)) - f.b.dot(u1.segment(n, p)) -
                         f.h.dot(u1.tail(m));
      d.dtau = num / (denom_base - kappa / tau);
      d.dx = u1.head(n) + d.dtau * u2.head(n);
      d.dy = u1.segment(n, p) + d.dtau * u2.segment(n, p);
      d.dz = u1.tail(m) + d.dtau * u2.tail(m);
      d.ds.resize(m);
      for (int k = 0; k < ncones; ++k) {
        d.ds.segment<kConeDim>(kConeDim * k) = scal[k].w * lam_inv_ds.segment<kConeDim>(kConeDim * k) -
                                               scal[k].w2 * d.dz.segment<kConeDim>(kConeDim * k);
      }
      d.dkappa = (dk_target - kappa * d.dtau) / tau;
      return d;
    };
    const auto step_to_boundary = [&](const Direction& d) {
      double alpha = std::numeric_limits<double>::infinity();
      for (int k = 0; k < ncones; ++k) {
        alpha = std::min(alpha, max_cone_step(s.segment<kConeDim>(kConeDim * k), d.ds.segment<kConeDim>(kConeDim * k)));
        alpha = std::min(alpha, max_cone_step(z.segment<kConeDim>(kConeDim * k), d.dz.segment<kConeDim>(kConeDim * k)));
      }
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    // Predictor.
    VectorXd ds_aff(m);
    for (int k = 0; k < ncones; ++k)
      ds_aff.segment<kConeDim>(kConeDim * k) = -jordan(scal[k].lambda, scal[k].lambda);
    const Direction aff = direction(1.0, ds_aff, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    // Corrector.
    VectorXd ds_cor(m);
    for (int k = 0; k < ncones; ++k) {
      const Eigen::Vector3d ws = scal[k].w_inv * aff.ds.segment<kConeDim>(kConeDim * k);
      const Eigen::Vector3d wz = scal[k].w * aff.dz.segment<kConeDim>(kConeDim * k);
      Eigen::Vector3d t = -jordan(scal[k].lambda, scal[k].lambda) - jordan(ws, wz);
      t[0] += sigma * mu;
      ds_cor.segment<kConeDim>(kConeDim * k) = t;
    }
    const double dk_cor = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Direction d = direction(1.0 - sigma, ds_cor, dk_cor);
    const double to_boundary = step_to_boundary(d);
    if (std::isnan(to_boundary) || !d.dx.allFinite() || !d.dz.allFinite() || !d.ds.allFinite()) break;
    double alpha = std::min(1.0, 0.99 * to_boundary);
    // Rounding can still push an iterate onto the cone boundary.
    for (int bt = 0; bt < 60 && alpha > 1e-12; ++bt) {
      if (interior(s + alpha * d.ds, z + alpha * d.dz) && tau + alpha * d.dtau > 0.0 &&
          kappa + alpha * d.dkappa > 0.0)
        break;
      alpha *= 0.8;
    }
    if (!(alpha > 1e-12)) break;

    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }
  if (best_metric <= settings.inaccurate_factor * tol) {
    x = best.x;
    y = best.y;
    z = best.z;
    export_solution(SolveStatus::kSolvedInaccurate, best.tau, best.tau);
    sol.primal_value = best.pcost;
    sol.dual_value = best.dcost;
    sol.gap = best.gap;
    sol.primal_residual = best.pres;
    sol.dual_residual = best.dres;
    return sol;
  }
  export_solution(SolveStatus::kNumericalFailure, tau, tau);
  return sol;
}

}  // namespace semidi

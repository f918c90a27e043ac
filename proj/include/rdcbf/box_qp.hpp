#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "rdcbf/errors.hpp"
#include "rdcbf/numeric.hpp"

namespace rdcbf {

/// minimize 1/2 u^T Q u - q^T u  s.t.  lo <= u <= hi,  a^T u <= b (when has_affine).
struct BoxAffineQP {
  Mat Q;
  Vec q;
  Vec lo, hi;
  Vec a;
  double b = 0.0;
  bool has_affine = false;
  double tol = 1e-9;
};

struct BoxAffineSolution {
  Vec u;
  double multiplier = 0.0;  // of the affine constraint
  bool affine_active = false;
};

// Smallest value of a^T u over the box.
inline double min_over_box(const Vec& a, const Vec& lo, const Vec& hi) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * (a[i] > 0.0 ? lo[i] : hi[i]);
  return s;
}

/// Exact solve by enumerating active sets and checking the KKT conditions of each.
///
/// With Q positive definite the KKT point is unique, so the first candidate that passes is
/// the optimum. Cost grows as 2 * 3^m, which is fine for the handful of inputs a vehicle has.
/// Returns nullopt when no candidate passes (infeasible or numerically degenerate).
inline std::optional<BoxAffineSolution> solve_box_affine_qp(const BoxAffineQP& p) {
  const Eigen::Index m = p.q.size();
  if (m > 10) throw ContractViolation("active-set enumeration supports at most 10 inputs");
  if (p.Q.rows() != m || p.Q.cols() != m || p.lo.size() != m || p.hi.size() != m ||
      (p.has_affine && p.a.size() != m))
    throw ContractViolation("QP dimensions are inconsistent");

  const double scale = 1.0 + p.q.cwiseAbs().maxCoeff() + p.Q.cwiseAbs().maxCoeff() +
                       (p.has_affine ? p.a.cwiseAbs().maxCoeff() + std::abs(p.b) : 0.0);
  const double tol = p.tol * scale;

  // 0 = free, 1 = at lower bound, 2 = at upper bound
  std::vector<int> state(static_cast<std::size_t>(m), 0);
  std::vector<Eigen::Index> free_idx, fixed_idx;
  free_idx.reserve(m);
  fixed_idx.reserve(m);
  long total = 1;
  for (Eigen::Index i = 0; i < m; ++i) total *= 3;

  for (long code = 0; code < total; ++code) {
    long c = code;
    free_idx.clear();
    fixed_idx.clear();
    Vec u = Vec::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 0) {
        free_idx.push_back(i);
      } else {
        fixed_idx.push_back(i);
        u[i] = state[i] == 1 ? p.lo[i] : p.hi[i];
      }
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());

    for (int affine = 0; affine <= (p.has_affine ? 1 : 0); ++affine) {
      double lambda = 0.0;
      Vec trial = u;
      Vec rhs(nf);
      for (Eigen::Index r = 0; r < nf; ++r) {
        const Eigen::Index i = free_idx[r];
        double v = p.q[i];
        for (Eigen::Index f : fixed_idx) v -= p.Q(i, f) * u[f];
        rhs[r] = v;
      }

      // Interval of admissible multipliers when the affine constraint pins an all-fixed point.
      double lambda_lo = 0.0, lambda_hi = 0.0;
      bool lambda_interval = false;

      if (affine == 0) {
        if (nf > 0) {
          Mat K(nf, nf);
          for (Eigen::Index r = 0; r < nf; ++r)
            for (Eigen::Index s = 0; s < nf; ++s) K(r, s) = p.Q(free_idx[r], free_idx[s]);
          Eigen::LDLT<Mat> ldlt(K);
          if (ldlt.info() != Eigen::Success) continue;
          const Vec sol = ldlt.solve(rhs);
          for (Eigen::Index r = 0; r < nf; ++r) trial[free_idx[r]] = sol[r];
        }
      } else {
        double fixed_part = 0.0;
        for (Eigen::Index f : fixed_idx) fixed_part += p.a[f] * u[f];
        if (nf > 0) {
          Mat K = Mat::Zero(nf + 1, nf + 1);
          Vec rhs_aug(nf + 1);
          for (Eigen::Index r = 0; r < nf; ++r) {
            for (Eigen::Index s = 0; s < nf; ++s) K(r, s) = p.Q(free_idx[r], free_idx[s]);
            K(r, nf) = p.a[free_idx[r]];
            K(nf, r) = p.a[free_idx[r]];
            rhs_aug[r] = rhs[r];
          }
          rhs_aug[nf] = p.b - fixed_part;
          Eigen::FullPivLU<Mat> lu(K);
          if (!lu.isInvertible()) continue;
          const Vec sol = lu.solve(rhs_aug);
          for (Eigen::Index r = 0; r < nf; ++r) trial[free_idx[r]] = sol[r];
          lambda = sol[nf];
          if (lambda < -tol) continue;
          lambda = std::max(lambda, 0.0);
        } else {
          if (std::abs(fixed_part - p.b) > tol) continue;
          lambda_interval = true;
          lambda_lo = 0.0;
          lambda_hi = std::numeric_limits<double>::infinity();
        }
      }

      bool ok = true;
      for (Eigen::Index r = 0; r < nf && ok; ++r) {
        const Eigen::Index i = free_idx[r];
        ok = trial[i] >= p.lo[i] - tol && trial[i] <= p.hi[i] + tol;
      }
      if (!ok) continue;
      if (p.has_affine && affine == 0 && p.a.dot(trial) > p.b + tol) continue;

      const Vec grad = p.Q * trial - p.q;
      for (Eigen::Index f : fixed_idx) {
        if (p.lo[f] == p.hi[f]) continue;
        const double gf = grad[f];
        const double af = (p.has_affine && affine == 1) ? p.a[f] : 0.0;
        // at lower bound: gf + lambda af >= 0; at upper bound: gf + lambda af <= 0
        const double sign = state[f] == 1 ? 1.0 : -1.0;
        const double base = sign * gf;
        const double slope = sign * af;
        if (lambda_interval) {
          // base + slope * lambda >= -tol
          if (slope > 0.0) lambda_lo = std::max(lambda_lo, (-tol - base) / slope);
          else if (slope < 0.0) lambda_hi = std::min(lambda_hi, (-tol - base) / slope);
          else if (base < -tol) ok = false;
        } else if (base + slope * lambda < -tol) {
          ok = false;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      if (lambda_interval) {
        if (lambda_lo > lambda_hi) continue;
        lambda = lambda_lo;
      }

      for (Eigen::Index i = 0; i < m; ++i) trial[i] = std::clamp(trial[i], p.lo[i], p.hi[i]);
      return BoxAffineSolution{trial, lambda, affine == 1};
    }
  }
  return std::nullopt;
}

}  // namespace rdcbf

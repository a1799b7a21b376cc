// SPDX-License-Identifier: Apache-2.0
//
// Mixed direct / first-order path estimation: per insertion the estimator
// grows the model either by one direct path or by one reciprocal pair of
// first-order paths, refines all angles with Levenberg-Marquardt in the
// continuous domain, and keeps the candidate the residual prefers. A pair
// angle moves both of its reciprocal columns at once, which is what makes
// the recovery group sparse. Dropping the refinement gives the on-grid group
// matching pursuit baseline.
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "ghostid/common.hpp"
#include "ghostid/estimate_common.hpp"
#include "ghostid/estimate_h0.hpp"

namespace ghostid {

struct StopConfigH1 {
    int max_outer = 10;          // cap on inserted paths (direct or pair)
    int refine_iters = 10;       // LM iterations per candidate refinement
    int damping_retries = 3;     // damping inflations per LM iteration
    double grid_step_deg = 2.0;
    double eps = 0.0;  // residual-norm stop
    // Minimum residual-norm improvement per insertion. With the monotone
    // refinement used here an insertion always improves the fit by some
    // epsilon, so a zero margin never stops and the mixed model quietly
    // absorbs noise that the direct-only estimator (with its 0.4 margin)
    // leaves alone, which skews the detector. The default mirrors the
    // direct-only margin.
    double eps2 = 0.4;
    double delta_r = 1.0;  // residual margin a pair must win by (see cscd_h1)
    double mu0_factor = 1e-2;    // initial damping relative to max diag of the Hessian
    double pair_collapse_deg = 0.01;  // minimum pair separation an LM step may leave

    void validate() const {
        if (max_outer < 1) throw InvalidArgument("max_outer must be >= 1");
        if (refine_iters < 0) throw InvalidArgument("refine_iters must be >= 0");
        if (damping_retries < 1) throw InvalidArgument("damping_retries must be >= 1");
        if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
        if (!std::isfinite(delta_r)) throw InvalidArgument("delta_r must be finite");
        if (!(grid_step_deg > 0.0)) throw InvalidArgument("grid_step_deg must be > 0");
        if (!(mu0_factor > 0.0)) throw InvalidArgument("mu0_factor must be > 0");
    }
};

// Angle sets of the mixed model, stacked as [dods; doas; direct] to match the
// response-matrix column blocks. Pairs are kept canonical: theta1[k] <
// phi1[k].
struct MixedAngleSet {
    std::vector<double> theta1;  // pair departure angles
    std::vector<double> phi1;    // pair arrival angles
    std::vector<double> theta0;  // direct angles

    int k1() const { return static_cast<int>(theta1.size()); }
    int k0() const { return static_cast<int>(theta0.size()); }
    int angle_count() const { return 2 * k1() + k0(); }

    std::vector<std::pair<double, double>> pairs() const {
        std::vector<std::pair<double, double>> p;
        p.reserve(theta1.size());
        for (size_t k = 0; k < theta1.size(); ++k) p.emplace_back(theta1[k], phi1[k]);
        return p;
    }

    RVec stacked_deg() const {
        RVec x(angle_count());
        const int n1 = k1();
        for (int k = 0; k < n1; ++k) {
            x[k] = theta1[k];
            x[n1 + k] = phi1[k];
        }
        for (int k = 0; k < k0(); ++k) x[2 * n1 + k] = theta0[k];
        return x;
    }

    static MixedAngleSet from_stacked_deg(const RVec& x, int k1, int k0) {
        MixedAngleSet s;
        s.theta1.assign(x.data(), x.data() + k1);
        s.phi1.assign(x.data() + k1, x.data() + 2 * k1);
        s.theta0.assign(x.data() + 2 * k1, x.data() + 2 * k1 + k0);
        return s;
    }

    void canonicalize() {
        for (size_t k = 0; k < theta1.size(); ++k)
            if (theta1[k] > phi1[k]) std::swap(theta1[k], phi1[k]);
    }

    double min_pair_separation_deg() const {
        double sep = 180.0;
        for (size_t k = 0; k < theta1.size(); ++k) sep = std::min(sep, std::abs(phi1[k] - theta1[k]));
        return sep;
    }

    ResponseMatrix response(const ArrayGeometry& geom) const { return build_response(geom, theta0, pairs()); }
};

namespace detail {

// Derivative columns of the mixed response, grouped per angle block. A pair
// angle differentiates both of its reciprocal columns.
struct MixedDerivatives {
    CMat d_t;  // M x 2 k1: [d a1/d dod | d a2/d dod]
    CMat d_r;  // M x 2 k1: [d a1/d doa | d a2/d doa]
    CMat d_0;  // M x k0

    MixedDerivatives(const ArrayGeometry& geom, const MixedAngleSet& set) {
        const int m = geom.virtual_size();
        const int n1 = set.k1();
        const int n0 = set.k0();
        d_t.resize(m, 2 * n1);
        d_r.resize(m, 2 * n1);
        d_0.resize(m, n0);
        for (int q = 0; q < n1; ++q) {
            const double dod = set.theta1[q];
            const double doa = set.phi1[q];
            d_t.col(q) = steering_derivative(geom, dod, doa, AngleAxis::Dod);
            d_t.col(n1 + q) = steering_derivative(geom, doa, dod, AngleAxis::Doa);
            d_r.col(q) = steering_derivative(geom, dod, doa, AngleAxis::Doa);
            d_r.col(n1 + q) = steering_derivative(geom, doa, dod, AngleAxis::Dod);
        }
        for (int q = 0; q < n0; ++q) d_0.col(q) = direct_column_derivative(geom, set.theta0[q]);
    }
};

// Sum of the four k x k blocks of a 2k x 2k matrix: contracts the reciprocal
// column pair contributions onto the shared angle.
inline CMat fold_pair_blocks(const CMat& m, int k) {
    if (k == 0) return CMat(0, 0);
    return m.block(0, 0, k, k) + m.block(0, k, k, k) + m.block(k, 0, k, k) + m.block(k, k, k, k);
}

inline CMat fold_pair_rows(const CMat& m, int k) {  // 2k x c -> k x c
    if (k == 0) return CMat(0, m.cols());
    return m.topRows(k) + m.bottomRows(k);
}

inline CMat fold_pair_cols(const CMat& m, int k) {  // r x 2k -> r x k
    if (k == 0) return CMat(m.rows(), 0);
    return m.leftCols(k) + m.rightCols(k);
}

}  // namespace detail

// Gradient of the projected residual energy of the mixed model with respect
// to [dods; doas; direct angles], per radian.
inline RVec group_gradient(const ArrayGeometry& geom, const MixedAngleSet& set, const CVec& z) {
    const int n1 = set.k1();
    const int n0 = set.k0();
    const ResponseMatrix a = set.response(geom);
    const CMat pinv = pseudo_inverse(a.entries);
    const CMat p1 = projector_complement(a.entries, geom.virtual_size());
    const CVec u = pinv * z;
    const CVec pz = p1 * z;
    const detail::MixedDerivatives d(geom, set);

    const CVec c_t = d.d_t.adjoint() * pz;  // 2 n1
    const CVec c_r = d.d_r.adjoint() * pz;
    const CVec c_0 = d.d_0.adjoint() * pz;  // n0

    RVec g(2 * n1 + n0);
    for (int q = 0; q < n1; ++q) {
        g[q] = -2.0 * std::real(u[q] * std::conj(c_t[q]) + u[n1 + q] * std::conj(c_t[n1 + q]));
        g[n1 + q] = -2.0 * std::real(u[q] * std::conj(c_r[q]) + u[n1 + q] * std::conj(c_r[n1 + q]));
    }
    for (int q = 0; q < n0; ++q) g[2 * n1 + q] = -2.0 * std::real(u[2 * n1 + q] * std::conj(c_0[q]));
    return g;
}

// Gauss-Newton Hessian of the mixed objective, assembled from the block
// partition of the amplitude and energy couplings. Symmetric; the direct
// block reduces to the direct-only Hessian when no pairs are present.
inline RMat group_hessian(const ArrayGeometry& geom, const MixedAngleSet& set, const CVec& z) {
    const int n1 = set.k1();
    const int n0 = set.k0();
    const ResponseMatrix a = set.response(geom);
    const CMat pinv = pseudo_inverse(a.entries);
    const CMat p1 = projector_complement(a.entries, geom.virtual_size());
    const CVec u = pinv * z;
    const CVec pz = p1 * z;
    const detail::MixedDerivatives d(geom, set);

    const CMat s = u * u.adjoint();       // amplitude coupling
    const CMat cc = pinv * pinv.adjoint();  // pseudo-inverse coupling
    const CVec c_t = d.d_t.adjoint() * pz;
    const CVec c_r = d.d_r.adjoint() * pz;
    const CVec c_0 = d.d_0.adjoint() * pz;

    const CMat s1 = s.topLeftCorner(2 * n1, 2 * n1);
    const CMat s10 = s.topRightCorner(2 * n1, n0);
    const CMat s01 = s.bottomLeftCorner(n0, 2 * n1);
    const CMat s0 = s.bottomRightCorner(n0, n0);
    const CMat c1 = cc.topLeftCorner(2 * n1, 2 * n1);
    const CMat c10 = cc.topRightCorner(2 * n1, n0);
    const CMat c01 = cc.bottomLeftCorner(n0, 2 * n1);
    const CMat c0blk = cc.bottomRightCorner(n0, n0);

    auto cross = [](const CVec& x, const CVec& y) { return CMat((y * x.adjoint()).transpose()); };

    const CMat h_tt = detail::fold_pair_blocks(
        CMat((d.d_t.adjoint() * p1 * d.d_t).cwiseProduct(CMat(s1.transpose())) + cross(c_t, c_t).cwiseProduct(c1)),
        n1);
    const CMat h_tr = detail::fold_pair_blocks(
        CMat((d.d_t.adjoint() * p1 * d.d_r).cwiseProduct(CMat(s1.transpose())) + cross(c_t, c_r).cwiseProduct(c1)),
        n1);
    const CMat h_rt = detail::fold_pair_blocks(
        CMat((d.d_r.adjoint() * p1 * d.d_t).cwiseProduct(CMat(s1.transpose())) + cross(c_r, c_t).cwiseProduct(c1)),
        n1);
    const CMat h_rr = detail::fold_pair_blocks(
        CMat((d.d_r.adjoint() * p1 * d.d_r).cwiseProduct(CMat(s1.transpose())) + cross(c_r, c_r).cwiseProduct(c1)),
        n1);
    const CMat h_t0 = detail::fold_pair_rows(
        CMat((d.d_t.adjoint() * p1 * d.d_0).cwiseProduct(CMat(s01.transpose())) + cross(c_t, c_0).cwiseProduct(c10)),
        n1);
    const CMat h_r0 = detail::fold_pair_rows(
        CMat((d.d_r.adjoint() * p1 * d.d_0).cwiseProduct(CMat(s01.transpose())) + cross(c_r, c_0).cwiseProduct(c10)),
        n1);
    const CMat h_0t = detail::fold_pair_cols(
        CMat((d.d_0.adjoint() * p1 * d.d_t).cwiseProduct(CMat(s10.transpose())) + cross(c_0, c_t).cwiseProduct(c01)),
        n1);
    const CMat h_0r = detail::fold_pair_cols(
        CMat((d.d_0.adjoint() * p1 * d.d_r).cwiseProduct(CMat(s10.transpose())) + cross(c_0, c_r).cwiseProduct(c01)),
        n1);
    const CMat h_00 =
        (d.d_0.adjoint() * p1 * d.d_0).cwiseProduct(CMat(s0.transpose())) + cross(c_0, c_0).cwiseProduct(c0blk);

    const int n = 2 * n1 + n0;
    CMat hc(n, n);
    hc.setZero();
    if (n1 > 0) {
        hc.block(0, 0, n1, n1) = h_tt;
        hc.block(0, n1, n1, n1) = h_tr;
        hc.block(n1, 0, n1, n1) = h_rt;
        hc.block(n1, n1, n1, n1) = h_rr;
        if (n0 > 0) {
            hc.block(0, 2 * n1, n1, n0) = h_t0;
            hc.block(n1, 2 * n1, n1, n0) = h_r0;
            hc.block(2 * n1, 0, n0, n1) = h_0t;
            hc.block(2 * n1, n1, n0, n1) = h_0r;
        }
    }
    if (n0 > 0) hc.block(2 * n1, 2 * n1, n0, n0) = h_00;
    RMat h = 2.0 * hc.real();
    h = 0.5 * (h + h.transpose().eval());
    return h;
}

struct LmResult {
    MixedAngleSet angles;
    double objective = 0.0;
    int accepted_steps = 0;
};

// Levenberg-Marquardt refinement of a mixed angle set. Damping follows a
// gain-ratio schedule: a step is retried with inflated damping up to
// damping_retries times and only taken when it actually lowers the
// objective; afterwards the damping relaxes or stiffens with the gain ratio.
// Steps that would collapse a pair below pair_collapse_deg, or that leave a
// non-finite objective, count as failed trials. Angles are clamped to
// [-90, 90] and pairs re-canonicalized on every trial.
inline LmResult lm_refine(const ArrayGeometry& geom, MixedAngleSet set, const CVec& z,
                          const StopConfigH1& cfg) {
    cfg.validate();
    set.canonicalize();
    LmResult result;
    result.angles = set;
    result.objective = detail::subspace_objective(geom, set.theta0, set.pairs(), z);
    if (set.angle_count() == 0) return result;

    const int n = set.angle_count();
    const int n1 = set.k1();
    double mu = 0.0;
    for (int i = 0; i < cfg.refine_iters; ++i) {
        RVec g;
        RMat h;
        try {
            g = group_gradient(geom, result.angles, z);
            h = group_hessian(geom, result.angles, z);
        } catch (const GhostidError&) {
            break;  // rank loss at the current point
        }
        if (i == 0) mu = std::max(cfg.mu0_factor * h.diagonal().maxCoeff(), 1e-12);

        const RVec x = result.angles.stacked_deg();
        bool accepted = false;
        double rho = -1.0;
        double step_deg = 0.0;
        MixedAngleSet trial_set;
        double f_trial = 0.0;
        bool converged = false;

        for (int j = 0;; ++j) {
            Eigen::LDLT<RMat> ldlt(h + mu * RMat::Identity(n, n));
            RVec step;
            bool solvable = ldlt.info() == Eigen::Success;
            if (solvable) {
                step = ldlt.solve(-g);
                solvable = step.allFinite();
            }
            if (solvable) {
                if (step.norm() * kRadToDeg < 1e-12) {
                    converged = true;  // stationary point
                    break;
                }
                RVec x_trial = x + step * kRadToDeg;
                for (int q = 0; q < n; ++q) x_trial[q] = clamp_angle_deg(x_trial[q]);
                trial_set = MixedAngleSet::from_stacked_deg(x_trial, n1, result.angles.k0());
                trial_set.canonicalize();
                if (n1 == 0 || trial_set.min_pair_separation_deg() >= cfg.pair_collapse_deg) {
                    f_trial = detail::subspace_objective(geom, trial_set.theta0, trial_set.pairs(), z);
                    const double denom = 0.5 * step.dot(mu * step - g);
                    rho = denom > 0.0 ? (result.objective - f_trial) / denom
                                      : (f_trial < result.objective ? 1.0 : -1.0);
                    if (rho > 0.0 && std::isfinite(f_trial)) {
                        accepted = true;
                        step_deg = step.cwiseAbs().maxCoeff() * kRadToDeg;
                        break;
                    }
                } else {
                    rho = -1.0;  // pair collapse: reject and stiffen
                }
            } else {
                rho = -1.0;
            }
            if (j >= cfg.damping_retries) break;
            mu *= std::pow(2.0, j + 1);
        }
        if (converged) break;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3.0));
        if (!accepted) continue;  // angles kept, damping stiffened
        result.angles = trial_set;
        result.objective = f_trial;
        ++result.accepted_steps;
        if (step_deg < 1e-6) break;
    }
    return result;
}

enum class InsertionKind { Direct, Pair };

struct OuterDiagH1 {
    InsertionKind chosen = InsertionKind::Direct;
    double direct_candidate_residual = 0.0;  // +inf when infeasible
    double pair_candidate_residual = 0.0;
    double grid_direct_deg = 0.0;
    std::pair<double, double> grid_pair_deg{0.0, 0.0};
    double residual_norm = 0.0;
};

struct EstimateH1 {
    MixedAngleSet angles;
    CVec beta;
    int k0 = 0;
    int k1 = 0;
    double residual_norm = 0.0;
    std::vector<OuterDiagH1> trace;
};

namespace detail {

inline EstimateH1 greedy_mixed(const ArrayGeometry& geom, const CVec& z, const StopConfigH1& cfg,
                               bool refine) {
    geom.validate();
    cfg.validate();
    const int m = geom.virtual_size();
    const std::vector<double> grid = make_angle_grid(cfg.grid_step_deg);
    const GridAtoms atoms(geom, grid);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    EstimateH1 est;
    est.beta = CVec(0);
    CVec residual = z;
    double res_norm = residual.norm();
    est.residual_norm = res_norm;

    while (res_norm > cfg.eps) {
        if (est.k0 + est.k1 >= cfg.max_outer) break;
        const int cols = 2 * est.k1 + est.k0;
        const bool can_direct = cols + 1 <= m - 1;
        const bool can_pair = cols + 2 <= m - 1;
        if (!can_direct && !can_pair) break;

        OuterDiagH1 diag;
        MixedAngleSet set1, set2;
        LsFit fit1, fit2;
        double r1 = kInf, r2 = kInf;

        if (can_direct) {
            diag.grid_direct_deg = atoms.grid_deg[grid_select_direct_index(residual, atoms)];
            set1 = est.angles;
            set1.theta0.push_back(diag.grid_direct_deg);
            if (refine) set1 = lm_refine(geom, set1, z, cfg).angles;
            try {
                fit1 = least_squares_fit(set1.response(geom).entries, z);
                r1 = fit1.residual_norm;
            } catch (const GhostidError&) {
                r1 = kInf;
            }
        }
        if (can_pair) {
            diag.grid_pair_deg = grid_select_pair(residual, grid, grid, geom);
            set2 = est.angles;
            set2.theta1.push_back(diag.grid_pair_deg.first);
            set2.phi1.push_back(diag.grid_pair_deg.second);
            if (refine) set2 = lm_refine(geom, set2, z, cfg).angles;
            try {
                fit2 = least_squares_fit(set2.response(geom).entries, z);
                r2 = fit2.residual_norm;
            } catch (const GhostidError&) {
                r2 = kInf;
            }
        }
        diag.direct_candidate_residual = r1;
        diag.pair_candidate_residual = r2;
        if (!std::isfinite(r1) && !std::isfinite(r2)) break;

        // A pair is kept only when it beats the direct insertion by more
        // than delta_r in residual norm; at a tie the simpler direct model
        // wins. This keeps ghost-free scenes from accreting fake pairs.
        const bool take_pair = std::isfinite(r2) && (!std::isfinite(r1) || r2 - r1 < -cfg.delta_r);
        const double prev_norm = res_norm;
        if (take_pair) {
            est.angles = set2;
            est.beta = fit2.amplitudes;
            residual = fit2.residual;
            res_norm = fit2.residual_norm;
            est.k1 += 1;
            diag.chosen = InsertionKind::Pair;
        } else {
            est.angles = set1;
            est.beta = fit1.amplitudes;
            residual = fit1.residual;
            res_norm = fit1.residual_norm;
            est.k0 += 1;
            diag.chosen = InsertionKind::Direct;
        }
        est.residual_norm = res_norm;
        diag.residual_norm = res_norm;
        est.trace.push_back(diag);

        if (est.k0 + est.k1 >= cfg.max_outer) break;
        if (prev_norm - res_norm <= cfg.eps2) break;
    }
    return est;
}

}  // namespace detail

// Greedy mixed estimator in the continuous domain: per insertion, refine and
// compare a direct-path candidate against a reciprocal-pair candidate and
// keep the one the residual margin selects.
inline EstimateH1 cscd_h1(const ArrayGeometry& geom, const CVec& z, const StopConfigH1& cfg) {
    return detail::greedy_mixed(geom, z, cfg, /*refine=*/true);
}

// On-grid group baseline: identical competitive insertion without the LM
// refinement.
inline EstimateH1 gomp_h1(const ArrayGeometry& geom, const CVec& z, const StopConfigH1& cfg) {
    return detail::greedy_mixed(geom, z, cfg, /*refine=*/false);
}

}  // namespace ghostid

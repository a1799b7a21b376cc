// SPDX-License-Identifier: Apache-2.0
//
// Sparse direct-path estimation assuming no first-order reflections: greedy
// grid selection followed by safeguarded Gauss-Newton refinement of all
// angles in the continuous domain. Dropping the refinement gives the on-grid
// orthogonal matching pursuit baseline.
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "ghostid/common.hpp"
#include "ghostid/estimate_common.hpp"

namespace ghostid {

struct StopConfigH0 {
    int max_outer = 10;          // cap on inserted paths
    int refine_iters = 10;       // refinement iterations per insertion
    double grid_step_deg = 2.0;  // uniform grid pitch over [-90, 90]
    double eps = 0.0;            // residual-norm stop; typically sqrt(sigma2 * M)
    double eps1 = 0.4;           // minimum residual-norm improvement per insertion

    void validate() const {
        if (max_outer < 1) throw InvalidArgument("max_outer must be >= 1");
        if (refine_iters < 0) throw InvalidArgument("refine_iters must be >= 0");
        if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
        if (!(grid_step_deg > 0.0)) throw InvalidArgument("grid_step_deg must be > 0");
    }

    static double default_eps(const ArrayGeometry& geom, double sigma2) {
        return std::sqrt(sigma2 * geom.virtual_size());
    }
};

struct OuterDiagH0 {
    double grid_pick_deg = 0.0;
    std::vector<double> init_angles_deg;
    std::vector<double> refined_angles_deg;
    double residual_norm = 0.0;
};

struct EstimateH0 {
    std::vector<double> theta0_deg;
    CVec alpha;
    int k0 = 0;
    double residual_norm = 0.0;
    std::vector<OuterDiagH0> trace;
};

// Gradient of ||P(theta) z||^2 with respect to the direct angles, per radian.
inline RVec gn_gradient(const ArrayGeometry& geom, const std::vector<double>& theta0_deg, const CVec& z) {
    const int k = static_cast<int>(theta0_deg.size());
    const ResponseMatrix a = build_response(geom, theta0_deg, {});
    const CMat pinv = pseudo_inverse(a.entries);
    const CMat p0 = projector_complement(a.entries, geom.virtual_size());
    const CVec u = pinv * z;
    const CVec pz = p0 * z;
    CMat d(geom.virtual_size(), k);
    for (int q = 0; q < k; ++q) d.col(q) = detail::direct_column_derivative(geom, theta0_deg[q]);
    const CVec c = d.adjoint() * pz;
    RVec g(k);
    for (int q = 0; q < k; ++q) g[q] = -2.0 * std::real(u[q] * std::conj(c[q]));
    return g;
}

// Gauss-Newton Hessian of the same objective: 2 Re{J^H J} with J the
// Jacobian of the projected residual. Symmetric and positive semidefinite.
inline RMat gn_hessian(const ArrayGeometry& geom, const std::vector<double>& theta0_deg, const CVec& z) {
    const int k = static_cast<int>(theta0_deg.size());
    const ResponseMatrix a = build_response(geom, theta0_deg, {});
    const CMat pinv = pseudo_inverse(a.entries);
    const CMat p0 = projector_complement(a.entries, geom.virtual_size());
    const CVec u = pinv * z;
    const CVec pz = p0 * z;
    CMat d(geom.virtual_size(), k);
    for (int q = 0; q < k; ++q) d.col(q) = detail::direct_column_derivative(geom, theta0_deg[q]);
    const CVec c = d.adjoint() * pz;
    const CMat term1 = (d.adjoint() * p0 * d).cwiseProduct(CMat((u * u.adjoint()).transpose()));
    const CMat term2 = CMat((c * c.adjoint()).transpose()).cwiseProduct(CMat(pinv * pinv.adjoint()));
    RMat h = 2.0 * (term1 + term2).real();
    h = 0.5 * (h + h.transpose().eval());
    return h;
}

namespace detail {

// Solve H h = -g; falls back to a diagonal-regularized solve and finally to
// a short gradient step when the system is numerically singular.
inline RVec gn_step(const RMat& h, const RVec& g) {
    const int k = static_cast<int>(g.size());
    auto try_solve = [&](const RMat& m) -> std::pair<bool, RVec> {
        Eigen::LDLT<RMat> ldlt(m);
        if (ldlt.info() != Eigen::Success) return {false, RVec()};
        RVec step = ldlt.solve(-g);
        if (!step.allFinite()) return {false, RVec()};
        const double resid = (m * step + g).norm();
        if (resid > 1e-6 * std::max(1.0, g.norm())) return {false, RVec()};
        return {true, step};
    };
    if (auto [ok, step] = try_solve(h); ok) return step;
    const double reg = 1e-8 * h.trace() / std::max(1, k);
    if (auto [ok, step] = try_solve(h + reg * RMat::Identity(k, k)); ok) return step;
    // Gradient fallback, scaled to a 0.1 degree largest component.
    const double gmax = g.cwiseAbs().maxCoeff();
    if (gmax == 0.0) return RVec::Zero(k);
    return (-0.1 * kDegToRad / gmax) * g;
}

}  // namespace detail

// Continuous refinement of the direct angle set. Raw Gauss-Newton steps are
// safeguarded with backtracking: a step is halved (up to 8 times) until the
// objective decreases and the angles stay inside [-90, 90], which keeps the
// fixed points of the unsafeguarded update while making the residual
// monotone.
inline std::vector<double> gn_refine(const ArrayGeometry& geom, std::vector<double> theta0_deg, const CVec& z,
                                     int iters) {
    if (theta0_deg.empty()) return theta0_deg;
    double f_cur = detail::subspace_objective(geom, theta0_deg, {}, z);
    for (int i = 0; i < iters; ++i) {
        RVec g, step;
        try {
            g = gn_gradient(geom, theta0_deg, z);
            const RMat h = gn_hessian(geom, theta0_deg, z);
            step = detail::gn_step(h, g);
        } catch (const GhostidError&) {
            break;  // rank loss at the current point; keep what we have
        }
        double scale = 1.0;
        bool accepted = false;
        std::vector<double> trial(theta0_deg.size());
        for (int halving = 0; halving <= 8; ++halving, scale *= 0.5) {
            bool inside = true;
            for (size_t q = 0; q < theta0_deg.size(); ++q) {
                trial[q] = theta0_deg[q] + scale * step[q] * kRadToDeg;
                if (trial[q] < -90.0 || trial[q] > 90.0) inside = false;
            }
            if (!inside) continue;
            const double f_trial = detail::subspace_objective(geom, trial, {}, z);
            if (f_trial < f_cur) {
                accepted = true;
                f_cur = f_trial;
                break;
            }
        }
        if (!accepted) break;
        double move = 0.0;
        for (size_t q = 0; q < theta0_deg.size(); ++q)
            move = std::max(move, std::abs(trial[q] - theta0_deg[q]));
        theta0_deg = trial;
        if (move < 1e-6) break;
    }
    return theta0_deg;
}

namespace detail {

inline EstimateH0 greedy_direct(const ArrayGeometry& geom, const CVec& z, const StopConfigH0& cfg,
                                bool refine) {
    geom.validate();
    cfg.validate();
    const int m = geom.virtual_size();
    const GridAtoms atoms(geom, make_angle_grid(cfg.grid_step_deg));

    EstimateH0 est;
    est.alpha = CVec(0);
    CVec residual = z;
    double res_norm = residual.norm();
    est.residual_norm = res_norm;

    while (res_norm > cfg.eps) {
        if (est.k0 >= cfg.max_outer) break;
        if (est.k0 + 1 >= m) break;  // keep the fit overdetermined

        OuterDiagH0 diag;
        diag.grid_pick_deg = atoms.grid_deg[grid_select_direct_index(residual, atoms)];
        std::vector<double> trial = est.theta0_deg;
        trial.push_back(diag.grid_pick_deg);
        diag.init_angles_deg = trial;
        if (refine) trial = gn_refine(geom, trial, z, cfg.refine_iters);
        diag.refined_angles_deg = trial;

        LsFit fit;
        try {
            const ResponseMatrix a = build_response(geom, trial, {});
            fit = least_squares_fit(a.entries, z);
        } catch (const GhostidError&) {
            break;  // degenerate insertion; stop rather than abort
        }

        const double prev_norm = res_norm;
        est.theta0_deg = trial;
        est.alpha = fit.amplitudes;
        est.k0 = static_cast<int>(trial.size());
        residual = fit.residual;
        res_norm = fit.residual_norm;
        est.residual_norm = res_norm;
        diag.residual_norm = res_norm;
        est.trace.push_back(diag);

        if (est.k0 >= cfg.max_outer) break;
        if (prev_norm - res_norm <= cfg.eps1) break;
    }
    return est;
}

}  // namespace detail

// Greedy continuous-domain estimator of the direct angle set: per insertion,
// pick the best grid atom against the residual, refine every angle with
// safeguarded Gauss-Newton, refit amplitudes and update the residual. Stops
// on the residual threshold, the insertion cap, or a too-small improvement.
inline EstimateH0 cscd_h0(const ArrayGeometry& geom, const CVec& z, const StopConfigH0& cfg) {
    return detail::greedy_direct(geom, z, cfg, /*refine=*/true);
}

// On-grid baseline: the same greedy loop without continuous refinement.
inline EstimateH0 omp_h0(const ArrayGeometry& geom, const CVec& z, const StopConfigH0& cfg) {
    return detail::greedy_direct(geom, z, cfg, /*refine=*/false);
}

}  // namespace ghostid

// SPDX-License-Identifier: Apache-2.0
//
// Shared machinery for the greedy continuous-domain estimators: angle grids,
// precomputed grid atoms, least-squares amplitude fits and the projected
// residual objective.
#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "ghostid/array.hpp"
#include "ghostid/common.hpp"

namespace ghostid {

// Uniform grid over [-90, 90] degrees, endpoints included.
inline std::vector<double> make_angle_grid(double step_deg) {
    if (!(step_deg > 0.0) || step_deg > 180.0) throw InvalidArgument("grid step must lie in (0, 180]");
    const int n = static_cast<int>(std::lround(180.0 / step_deg));
    std::vector<double> grid;
    grid.reserve(n + 1);
    for (int i = 0; i <= n; ++i) grid.push_back(clamp_angle_deg(-90.0 + i * step_deg));
    return grid;
}

namespace detail {

// Steering atoms of a grid, cached so the per-iteration correlation scans
// reduce to small matrix products.
struct GridAtoms {
    std::vector<double> grid_deg;
    CMat tx;    // tx_count x G
    CMat rx;    // rx_count x G
    CMat virt;  // M x G, direct columns a(theta_g)

    GridAtoms(const ArrayGeometry& geom, const std::vector<double>& grid) : grid_deg(grid) {
        const int g = static_cast<int>(grid.size());
        tx.resize(geom.tx_count(), g);
        rx.resize(geom.rx_count(), g);
        virt.resize(geom.virtual_size(), g);
        for (int i = 0; i < g; ++i) {
            tx.col(i) = steering_tx(geom, grid[i]);
            rx.col(i) = steering_rx(geom, grid[i]);
            virt.col(i) = detail::kron(CVec(tx.col(i)), CVec(rx.col(i)));
        }
    }
};

// Residual viewed as a tx_count x rx_count matrix: the correlation of r with
// a_T (x) a_R factors through it, turning grid scans into two GEMMs.
inline CMat residual_as_tx_rx(const CVec& r, int tx_count, int rx_count) {
    CMat rm(tx_count, rx_count);
    for (int m = 0; m < tx_count; ++m)
        for (int n = 0; n < rx_count; ++n) rm(m, n) = std::conj(r[m * rx_count + n]);
    return rm;
}

struct LsFit {
    CVec amplitudes;
    CVec residual;
    double residual_norm = 0.0;
};

// Least-squares amplitudes and residual for a fixed response matrix.
inline LsFit least_squares_fit(const CMat& a, const CVec& z) {
    LsFit fit;
    if (a.cols() == 0) {
        fit.amplitudes = CVec(0);
        fit.residual = z;
        fit.residual_norm = z.norm();
        return fit;
    }
    const CMat pinv = pseudo_inverse(a);
    fit.amplitudes = pinv * z;
    fit.residual = z - a * fit.amplitudes;
    fit.residual_norm = fit.residual.norm();
    return fit;
}

// Projected residual energy || P z ||^2 of a column set; +inf marks an
// infeasible candidate (rank loss, degenerate pair) so that line searches
// reject it instead of aborting.
inline double subspace_objective(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                                 const std::vector<std::pair<double, double>>& pairs_deg, const CVec& z) {
    try {
        const ResponseMatrix a = build_response(geom, direct_deg, pairs_deg);
        const LsFit fit = least_squares_fit(a.entries, z);
        return fit.residual.squaredNorm();
    } catch (const GhostidError&) {
        return std::numeric_limits<double>::infinity();
    }
}

// Total per-radian derivative of the direct column a(theta): both the
// departure and the arrival factor move with theta.
inline CVec direct_column_derivative(const ArrayGeometry& geom, double theta_deg) {
    return steering_derivative(geom, theta_deg, theta_deg, AngleAxis::Dod) +
           steering_derivative(geom, theta_deg, theta_deg, AngleAxis::Doa);
}

}  // namespace detail

// Grid angle with the largest correlation against the residual; ties resolve
// to the smaller angle.
inline double grid_select_direct(const CVec& residual, const std::vector<double>& grid_deg,
                                 const ArrayGeometry& geom) {
    if (grid_deg.empty()) throw InvalidArgument("grid must be nonempty");
    double best = -1.0;
    double best_angle = grid_deg.front();
    for (double angle : grid_deg) {
        const double corr = std::abs(virtual_steering(geom, angle, angle).dot(residual));
        if (corr > best) {
            best = corr;
            best_angle = angle;
        }
    }
    return best_angle;
}

namespace detail {

inline int grid_select_direct_index(const CVec& residual, const GridAtoms& atoms) {
    const CVec corr = atoms.virt.adjoint() * residual;
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < corr.size(); ++i) {
        const double v = std::abs(corr[i]);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

// Grid pair (dod < doa) maximizing the summed correlation of the residual
// with both reciprocal columns; lexicographically smallest maximizer wins.
inline std::pair<double, double> grid_select_pair(const CVec& residual, const std::vector<double>& grid_t_deg,
                                                  const std::vector<double>& grid_r_deg,
                                                  const ArrayGeometry& geom) {
    if (grid_t_deg.empty() || grid_r_deg.empty()) throw InvalidArgument("grids must be nonempty");
    const detail::GridAtoms at_t(geom, grid_t_deg);
    const detail::GridAtoms at_r(geom, grid_r_deg);
    const CMat rm = detail::residual_as_tx_rx(residual, geom.tx_count(), geom.rx_count());
    // w1(i, j) = r^H (a_T(t_i) (x) a_R(r_j)), w2(j, i) = r^H (a_T(r_j) (x) a_R(t_i))
    const CMat w1 = at_t.tx.transpose() * rm * at_r.rx;
    const CMat w2 = at_r.tx.transpose() * rm * at_t.rx;
    double best = -1.0;
    std::pair<double, double> best_pair{grid_t_deg.front(), grid_r_deg.back()};
    bool found = false;
    for (size_t i = 0; i < grid_t_deg.size(); ++i) {
        for (size_t j = 0; j < grid_r_deg.size(); ++j) {
            if (!(grid_t_deg[i] < grid_r_deg[j])) continue;
            const double v = std::abs(w1(i, j)) + std::abs(w2(j, i));
            if (v > best) {
                best = v;
                best_pair = {grid_t_deg[i], grid_r_deg[j]};
                found = true;
            }
        }
    }
    if (!found) throw InvalidArgument("grids admit no pair with dod < doa");
    return best_pair;
}

}  // namespace ghostid

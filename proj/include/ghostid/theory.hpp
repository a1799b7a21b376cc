// SPDX-License-Identifier: Apache-2.0
//
// Closed-form performance of the subspace ratio test: exact densities of the
// excess statistic under both hypotheses, false-alarm and detection
// probabilities through the regularized incomplete beta function, and the
// CFAR threshold inversion.
#pragma once

#include <utility>
#include <vector>

#include "ghostid/array.hpp"
#include "ghostid/common.hpp"

namespace ghostid {

namespace detail {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz iteration).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 1e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double betainc_reg(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("betainc_reg requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// Distribution parameters of the excess statistic X = ratio - 1: virtual
// array size, direct path count, pair count and the pair signal-to-noise
// ratio (linear). The statistic compares a 2*k1-dimensional excess subspace
// against noise_dim() leftover noise dimensions.
struct TheoryModel {
    int m_virtual = 0;  // total virtual elements
    int k0 = 0;
    int k1 = 1;
    double rho1 = 0.0;

    int noise_dim() const { return m_virtual - k0 - 2 * k1; }

    void validate() const {
        if (k1 < 1) throw InvalidArgument("TheoryModel requires k1 >= 1");
        if (k0 < 0) throw InvalidArgument("TheoryModel requires k0 >= 0");
        if (noise_dim() < 1) throw InvalidArgument("TheoryModel requires m_virtual - k0 - 2 k1 >= 1");
        if (!(rho1 >= 0.0)) throw InvalidArgument("TheoryModel requires rho1 >= 0");
    }
};

// Density of X under the no-ghost hypothesis: a Fisher-Snedecor-type law
// x^(2 k1 - 1) (1 + x)^-(m + 2 k1) / B(2 k1, m). Evaluated in log space.
inline double pdf_h0(double x, const TheoryModel& model) {
    model.validate();
    if (x < 0.0) throw InvalidArgument("pdf_h0 requires x >= 0");
    if (x == 0.0) return 0.0;  // exponent 2 k1 - 1 >= 1
    const double a = 2.0 * model.k1;
    const double b = static_cast<double>(model.noise_dim());
    const double logf = (a - 1.0) * std::log(x) - (a + b) * std::log1p(x) - detail::log_beta(a, b);
    return std::exp(logf);
}

// Density of X under the ghost hypothesis with pair SNR rho1: the H0 law
// stretched by (1 + rho1). Reduces to pdf_h0 at rho1 = 0.
inline double pdf_h1(double x, const TheoryModel& model) {
    const double s = 1.0 + model.rho1;
    return pdf_h0(x / s, model) / s;
}

// False-alarm probability of the ratio test at threshold lambda_g. Depends
// only on (k0, k1, m): the test is CFAR in the noise floor and in the direct
// path parameters.
inline double pfa(double lambda_g, const TheoryModel& model) {
    model.validate();
    if (!(lambda_g >= 1.0)) throw InvalidArgument("pfa requires lambda_g >= 1");
    // Complement form keeps the deep tail exact: 1 - I_x(a, b) = I_{1-x}(b, a).
    return betainc_reg(static_cast<double>(model.noise_dim()), 2.0 * model.k1, 1.0 / lambda_g);
}

// Detection probability at threshold lambda_g; monotone increasing in rho1
// and equal to pfa when rho1 = 0.
inline double pd(double lambda_g, const TheoryModel& model) {
    model.validate();
    if (!(lambda_g >= 1.0)) throw InvalidArgument("pd requires lambda_g >= 1");
    const double y_complement = (1.0 + model.rho1) / (lambda_g + model.rho1);
    return betainc_reg(static_cast<double>(model.noise_dim()), 2.0 * model.k1, y_complement);
}

// Threshold with pfa(threshold) equal to the target, by bisection on the
// monotone map. Independent of the noise power and of the direct angles.
inline double threshold_for_pfa(double pfa_target, const TheoryModel& model) {
    model.validate();
    if (!(pfa_target > 0.0) || !(pfa_target < 1.0))
        throw InvalidArgument("pfa target must lie in (0, 1)");
    double lo = 1.0;  // pfa(1) = 1
    double hi = 2.0;
    while (pfa(hi, model) > pfa_target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e18) throw NoConvergence("threshold bracket expansion failed");
    }
    double mid = hi;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double p = pfa(mid, model);
        if (std::abs(p - pfa_target) <= 1e-12) return mid;
        if (p > pfa_target)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(pfa(mid, model) - pfa_target) <= 1e-9) return mid;
    throw NoConvergence("threshold bisection did not reach the pfa target");
}

// Projector onto the excess subspace: the part of the direct-only complement
// that the pair columns open up. Computed as P0 - P1 for the nested column
// sets.
inline CMat projector_sperp(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                            const std::vector<std::pair<double, double>>& pairs_deg) {
    const int m = geom.virtual_size();
    const ResponseMatrix a0 = build_response(geom, direct_deg, {});
    const ResponseMatrix a1 = build_response(geom, direct_deg, pairs_deg);
    const CMat p0 = projector_complement(a0.entries, m);
    const CMat p1 = projector_complement(a1.entries, m);
    return p0 - p1;
}

// Exact pair SNR: trace of the response energy that falls into the excess
// subspace, weighted by a diagonal amplitude covariance, over 2 k1 sigma^2.
// kbeta_diag holds per-column variances for the 2 k1 pair columns (direct
// columns may be appended; they contribute nothing since the excess
// projector annihilates them).
inline double rho1_exact(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                         const std::vector<std::pair<double, double>>& pairs_deg,
                         const std::vector<double>& kbeta_diag, double sigma2) {
    const int k1 = static_cast<int>(pairs_deg.size());
    const int k0 = static_cast<int>(direct_deg.size());
    if (k1 < 1) throw InvalidArgument("rho1_exact requires at least one pair");
    if (!(sigma2 > 0.0)) throw InvalidArgument("rho1_exact requires sigma2 > 0");
    const int n_cols = 2 * k1 + k0;
    if (static_cast<int>(kbeta_diag.size()) != 2 * k1 && static_cast<int>(kbeta_diag.size()) != n_cols)
        throw InvalidArgument("kbeta_diag must cover the pair columns (2 k1) or all columns");
    const ResponseMatrix a = build_response(geom, direct_deg, pairs_deg);
    const CMat psp = projector_sperp(geom, direct_deg, pairs_deg);
    double trace = 0.0;
    for (int j = 0; j < static_cast<int>(kbeta_diag.size()); ++j) {
        if (j >= n_cols) break;
        const CVec col = a.entries.col(j);
        trace += kbeta_diag[j] * (col.adjoint() * psp * col).real()(0, 0);
    }
    return trace / (2.0 * k1 * sigma2);
}

// Isotropic convenience wrapper: every pair column carries sigma_beta2.
inline double rho1_exact_iso(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                             const std::vector<std::pair<double, double>>& pairs_deg, double sigma_beta2,
                             double sigma2) {
    std::vector<double> diag(2 * pairs_deg.size(), sigma_beta2);
    return rho1_exact(geom, direct_deg, pairs_deg, diag, sigma2);
}

// Gap between the exact excess-subspace response energy and its isotropic
// approximation 2 k1. Zero when the pair columns are orthogonal to the direct
// subspace; reported as a diagnostic alongside theory curves.
inline double sperp_trace_gap(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                              const std::vector<std::pair<double, double>>& pairs_deg) {
    const int k1 = static_cast<int>(pairs_deg.size());
    if (k1 < 1) return 0.0;
    std::vector<double> unit(2 * k1, 1.0);
    const double trace = rho1_exact(geom, direct_deg, pairs_deg, unit, 1.0) * 2.0 * k1;
    return std::abs(trace - 2.0 * k1);
}

}  // namespace ghostid

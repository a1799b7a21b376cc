// SPDX-License-Identifier: Apache-2.0
//
// Array geometry, steering vectors and their angle derivatives, virtual-array
// response matrices, pseudo-inverses and orthogonal projectors. All angles
// cross this interface in degrees; trigonometry is done in radians and the
// derivative routines return per-radian values.
#pragma once

#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ghostid/common.hpp"

namespace ghostid {

// Colocated MIMO layout: element offsets from the reference element, in
// meters, plus the carrier wavelength. The virtual array it induces has
// tx_count * rx_count elements.
struct ArrayGeometry {
    std::vector<double> tx_positions_m;
    std::vector<double> rx_positions_m;
    double wavelength_m = 0.0;

    int tx_count() const { return static_cast<int>(tx_positions_m.size()); }
    int rx_count() const { return static_cast<int>(rx_positions_m.size()); }
    int virtual_size() const { return tx_count() * rx_count(); }

    void validate() const {
        if (!(wavelength_m > 0.0)) throw InvalidArgument("wavelength_m must be > 0");
        if (tx_positions_m.empty()) throw InvalidArgument("tx_positions_m must be nonempty");
        if (rx_positions_m.empty()) throw InvalidArgument("rx_positions_m must be nonempty");
        for (double p : tx_positions_m)
            if (!std::isfinite(p)) throw InvalidArgument("tx position must be finite");
        for (double p : rx_positions_m)
            if (!std::isfinite(p)) throw InvalidArgument("rx position must be finite");
    }

    // Extent of the virtual aperture (max minus min virtual element
    // position), used for the beamwidth default.
    double virtual_aperture_m() const {
        double lo = tx_positions_m.front() + rx_positions_m.front();
        double hi = lo;
        for (double t : tx_positions_m)
            for (double r : rx_positions_m) {
                lo = std::min(lo, t + r);
                hi = std::max(hi, t + r);
            }
        return hi - lo;
    }

    // Rayleigh width of the virtual aperture, in degrees.
    double beamwidth_deg() const {
        const double extent = virtual_aperture_m();
        if (extent <= 0.0) return 180.0;
        return (wavelength_m / extent) * kRadToDeg;
    }

    // Reference layout: both physical arrays are half-wavelength ULAs. Every
    // steering factor is then free of grating lobes, so a reciprocal-pair
    // column is uniquely parameterized by its angle pair.
    static ArrayGeometry make_ula(int tx, int rx, double wavelength_m) {
        ArrayGeometry g;
        g.wavelength_m = wavelength_m;
        for (int m = 0; m < tx; ++m) g.tx_positions_m.push_back(m * wavelength_m / 2.0);
        for (int n = 0; n < rx; ++n) g.rx_positions_m.push_back(n * wavelength_m / 2.0);
        g.validate();
        return g;
    }

    // Classic filled-virtual MIMO layout (TX spacing = rx * lambda / 2): the
    // virtual array is a filled half-wavelength ULA of tx * rx elements. The
    // sparse TX factor has grating lobes, so pair columns alias in departure
    // angle; direct-path work is unaffected.
    static ArrayGeometry make_filled_virtual_ula(int tx, int rx, double wavelength_m) {
        ArrayGeometry g;
        g.wavelength_m = wavelength_m;
        for (int m = 0; m < tx; ++m) g.tx_positions_m.push_back(m * rx * wavelength_m / 2.0);
        for (int n = 0; n < rx; ++n) g.rx_positions_m.push_back(n * wavelength_m / 2.0);
        g.validate();
        return g;
    }
};

namespace detail {
inline CVec steering_from_positions(const std::vector<double>& positions_m, double wavelength_m,
                                    double angle_deg) {
    const int n = static_cast<int>(positions_m.size());
    const double sin_a = std::sin(angle_deg * kDegToRad);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CVec v(n);
    for (int i = 0; i < n; ++i) {
        const double phase = 2.0 * kPi * positions_m[i] * sin_a / wavelength_m;
        v[i] = scale * Complex(std::cos(phase), std::sin(phase));
    }
    return v;
}

// d/d(angle_rad) of the steering vector above: each element picks up the
// factor j * 2*pi*d/lambda * cos(angle).
inline CVec steering_deriv_from_positions(const std::vector<double>& positions_m, double wavelength_m,
                                          double angle_deg) {
    const int n = static_cast<int>(positions_m.size());
    const double rad = angle_deg * kDegToRad;
    const double sin_a = std::sin(rad);
    const double cos_a = std::cos(rad);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CVec v(n);
    for (int i = 0; i < n; ++i) {
        const double k = 2.0 * kPi * positions_m[i] / wavelength_m;
        const Complex base = scale * Complex(std::cos(k * sin_a), std::sin(k * sin_a));
        v[i] = Complex(0.0, k * cos_a) * base;
    }
    return v;
}

inline CVec kron(const CVec& a, const CVec& b) {
    CVec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}
}  // namespace detail

// Unit-norm TX steering vector at the given departure angle.
inline CVec steering_tx(const ArrayGeometry& geom, double angle_deg) {
    check_angle_deg(angle_deg);
    return detail::steering_from_positions(geom.tx_positions_m, geom.wavelength_m, angle_deg);
}

// Unit-norm RX steering vector at the given arrival angle.
inline CVec steering_rx(const ArrayGeometry& geom, double angle_deg) {
    check_angle_deg(angle_deg);
    return detail::steering_from_positions(geom.rx_positions_m, geom.wavelength_m, angle_deg);
}

// Virtual-array column a_T(dod) (x) a_R(doa); unit norm. A direct path is the
// dod == doa special case.
inline CVec virtual_steering(const ArrayGeometry& geom, double dod_deg, double doa_deg) {
    return detail::kron(steering_tx(geom, dod_deg), steering_rx(geom, doa_deg));
}

enum class AngleAxis { Dod, Doa };

// Exact per-radian derivative of virtual_steering with respect to one of its
// two angles.
inline CVec steering_derivative(const ArrayGeometry& geom, double dod_deg, double doa_deg, AngleAxis wrt) {
    check_angle_deg(dod_deg, "dod");
    check_angle_deg(doa_deg, "doa");
    if (wrt == AngleAxis::Dod) {
        const CVec dt = detail::steering_deriv_from_positions(geom.tx_positions_m, geom.wavelength_m, dod_deg);
        return detail::kron(dt, steering_rx(geom, doa_deg));
    }
    const CVec dr = detail::steering_deriv_from_positions(geom.rx_positions_m, geom.wavelength_m, doa_deg);
    return detail::kron(steering_tx(geom, dod_deg), dr);
}

enum class PathKind { Direct, FirstOrder };

struct ColumnInfo {
    PathKind kind = PathKind::Direct;
    double dod_deg = 0.0;
    double doa_deg = 0.0;
};

// Virtual-array response matrix. Column layout follows the stacked-model
// convention: for k1 pairs the first k1 columns are a_T(dod_k) (x)
// a_R(doa_k), the next k1 columns the reversed companions a_T(doa_k) (x)
// a_R(dod_k), and the direct columns come last.
struct ResponseMatrix {
    CMat entries;
    std::vector<ColumnInfo> columns;

    int cols() const { return static_cast<int>(entries.cols()); }
};

inline ResponseMatrix build_response(const ArrayGeometry& geom, const std::vector<double>& direct_deg,
                                     const std::vector<std::pair<double, double>>& pairs_deg) {
    const int k1 = static_cast<int>(pairs_deg.size());
    const int k0 = static_cast<int>(direct_deg.size());
    ResponseMatrix rm;
    rm.entries.resize(geom.virtual_size(), 2 * k1 + k0);
    rm.columns.resize(2 * k1 + k0);
    for (int k = 0; k < k1; ++k) {
        const auto& [dod, doa] = pairs_deg[k];
        if (dod == doa)
            throw DegeneratePair("first-order pair with dod == doa duplicates a direct column (angle " +
                                 std::to_string(dod) + ")");
        rm.entries.col(k) = virtual_steering(geom, dod, doa);
        rm.entries.col(k1 + k) = virtual_steering(geom, doa, dod);
        rm.columns[k] = {PathKind::FirstOrder, dod, doa};
        rm.columns[k1 + k] = {PathKind::FirstOrder, doa, dod};
    }
    for (int k = 0; k < k0; ++k) {
        rm.entries.col(2 * k1 + k) = virtual_steering(geom, direct_deg[k], direct_deg[k]);
        rm.columns[2 * k1 + k] = {PathKind::Direct, direct_deg[k], direct_deg[k]};
    }
    return rm;
}

// Moore-Penrose pseudo-inverse through an SVD, restricted to full column
// rank: if the smallest singular value falls below rank_tol times the
// largest, the caller gets RankDeficient instead of a silently unstable
// result.
inline CMat pseudo_inverse(const CMat& a, double rank_tol = kRankTol) {
    if (a.cols() == 0) return CMat(0, a.rows());
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (a.cols() > a.rows() || !(smin > rank_tol * smax))
        throw RankDeficient("column rank loss: smin/smax = " + std::to_string(smax > 0 ? smin / smax : 0.0));
    CMat v_scaled = svd.matrixV();
    for (Eigen::Index i = 0; i < sv.size(); ++i) v_scaled.col(i) /= sv(i);
    return v_scaled * svd.matrixU().adjoint();
}

// Ratio of extreme singular values; a cheap collinearity flag for candidate
// column sets.
inline double column_condition(const CMat& a) {
    if (a.cols() == 0) return 1.0;
    Eigen::JacobiSVD<CMat> svd(a);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

// Orthogonal projector onto the complement of the column space: I - A A^+.
// Hermitian, idempotent, annihilates A; empty column set gives the identity.
inline CMat projector_complement(const CMat& a, int m_dim, double rank_tol = kRankTol) {
    if (a.cols() == 0) return CMat::Identity(m_dim, m_dim);
    if (a.rows() != m_dim) throw InvalidArgument("projector_complement: row count mismatch");
    const CMat pinv = pseudo_inverse(a, rank_tol);
    CMat p = CMat::Identity(m_dim, m_dim) - a * pinv;
    // Symmetrize to kill roundoff drift in the Hermitian structure.
    p = Complex(0.5, 0.0) * (p + p.adjoint().eval());
    return p;
}

}  // namespace ghostid

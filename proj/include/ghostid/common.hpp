// SPDX-License-Identifier: Apache-2.0
//
// ghostid: multipath ghost identification for colocated MIMO radar.
// Shared error types, numeric constants and small helpers.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ghostid {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// Relative singular-value cutoff below which a matrix is declared rank
// deficient.
inline constexpr double kRankTol = 1e-10;

struct GhostidError : std::runtime_error {
    explicit GhostidError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidArgument : GhostidError {
    using GhostidError::GhostidError;
};

// A matrix handed to the pseudo-inverse has (numerically) dependent columns.
struct RankDeficient : GhostidError {
    using GhostidError::GhostidError;
};

// A reflection pair with equal departure and arrival angle would duplicate a
// direct column.
struct DegeneratePair : GhostidError {
    using GhostidError::GhostidError;
};

// Scene carries more unknowns than the virtual array has elements.
struct SceneTooDense : GhostidError {
    using GhostidError::GhostidError;
};

struct NoConvergence : GhostidError {
    using GhostidError::GhostidError;
};

inline void check_angle_deg(double angle_deg, const char* what = "angle") {
    if (!std::isfinite(angle_deg) || angle_deg < -90.0 || angle_deg > 90.0)
        throw InvalidArgument(std::string(what) + " must be finite and inside [-90, 90] degrees, got " +
                              std::to_string(angle_deg));
}

inline double clamp_angle_deg(double angle_deg) {
    if (angle_deg < -90.0) return -90.0;
    if (angle_deg > 90.0) return 90.0;
    return angle_deg;
}

}  // namespace ghostid

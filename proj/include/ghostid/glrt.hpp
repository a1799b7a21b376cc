// SPDX-License-Identifier: Apache-2.0
//
// Subspace ratio test for the presence of first-order reflections: the
// projected residual energy under the direct-only model over the projected
// residual energy under the mixed model, compared against a CFAR threshold.
#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "ghostid/common.hpp"
#include "ghostid/estimate_h0.hpp"
#include "ghostid/estimate_h1.hpp"
#include "ghostid/theory.hpp"

namespace ghostid {

struct GlrtOutcome {
    double statistic = 1.0;
    double threshold = 1.0;
    bool ghost_detected = false;  // true = mixed hypothesis accepted
    double excess = 0.0;          // statistic - 1
    TheoryModel model;            // model the threshold was drawn from
};

// Ratio statistic with explicit angle sets. Near-zero residual energies are
// resolved in favor of the simpler model: when both projections annihilate z
// the statistic is 1 (no ghost), when only the mixed model explains z it is
// +inf.
inline double glrt_statistic(const ArrayGeometry& geom, const CVec& z,
                             const std::vector<double>& h0_direct_deg,
                             const std::vector<double>& h1_direct_deg,
                             const std::vector<std::pair<double, double>>& h1_pairs_deg) {
    const int m = geom.virtual_size();
    if (static_cast<int>(h0_direct_deg.size()) >= m ||
        static_cast<int>(h1_direct_deg.size()) + 2 * static_cast<int>(h1_pairs_deg.size()) >= m)
        throw InvalidArgument("estimated sets must leave the fit overdetermined");
    const ResponseMatrix a0 = build_response(geom, h0_direct_deg, {});
    const ResponseMatrix a1 = build_response(geom, h1_direct_deg, h1_pairs_deg);
    const CMat p0 = projector_complement(a0.entries, m);
    const CMat p1 = projector_complement(a1.entries, m);
    const double num = (p0 * z).squaredNorm();
    const double den = (p1 * z).squaredNorm();
    const double floor = 1e-12 * z.squaredNorm();
    if (den < floor) return num < floor ? 1.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

// Decision with estimated angle sets: the threshold is read from the
// estimated model order at the requested false-alarm level. A mixed estimate
// without pairs still needs a threshold, so the pair count is floored at one
// (the statistic is near 1 in that case and the decision is insensitive to
// the floor).
inline GlrtOutcome detect(const ArrayGeometry& geom, const CVec& z, const EstimateH0& est_h0,
                          const EstimateH1& est_h1, double pfa_target) {
    GlrtOutcome out;
    out.statistic =
        glrt_statistic(geom, z, est_h0.theta0_deg, est_h1.angles.theta0, est_h1.angles.pairs());
    out.excess = out.statistic - 1.0;
    TheoryModel model;
    model.m_virtual = geom.virtual_size();
    model.k0 = est_h0.k0;
    model.k1 = std::max(1, est_h1.k1);
    // Keep the model admissible even for extreme estimated orders.
    if (model.noise_dim() < 1) model.k0 = std::max(0, model.m_virtual - 2 * model.k1 - 1);
    out.model = model;
    out.threshold = threshold_for_pfa(pfa_target, model);
    out.ghost_detected = out.statistic > out.threshold;
    return out;
}

// Decision with known (true) angle sets; the reference mode of the ratio
// test, CFAR by construction.
inline GlrtOutcome detect_with_known_sets(const ArrayGeometry& geom, const CVec& z,
                                          const std::vector<double>& direct_deg,
                                          const std::vector<std::pair<double, double>>& pairs_deg,
                                          double pfa_target) {
    GlrtOutcome out;
    out.statistic = glrt_statistic(geom, z, direct_deg, direct_deg, pairs_deg);
    out.excess = out.statistic - 1.0;
    TheoryModel model;
    model.m_virtual = geom.virtual_size();
    model.k0 = static_cast<int>(direct_deg.size());
    model.k1 = std::max<int>(1, static_cast<int>(pairs_deg.size()));
    out.model = model;
    out.threshold = threshold_for_pfa(pfa_target, model);
    out.ghost_detected = out.statistic > out.threshold;
    return out;
}

}  // namespace ghostid

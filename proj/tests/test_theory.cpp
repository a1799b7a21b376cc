// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ghostid/rng.hpp"
#include "ghostid/scene.hpp"
#include "ghostid/theory.hpp"
#include "oracles.hpp"

using namespace ghostid;

namespace {

TheoryModel model_of(int m, int k0, int k1, double rho1 = 0.0) {
    TheoryModel model;
    model.m_virtual = m;
    model.k0 = k0;
    model.k1 = k1;
    model.rho1 = rho1;
    return model;
}

const ArrayGeometry kGeom = ArrayGeometry::make_ula(6, 8, 0.0038);

}  // namespace

TEST(BetaInc, ComplementIdentity) {
    for (double x : {0.05, 0.3, 0.7, 0.95})
        EXPECT_NEAR(betainc_reg(2.0, 45.0, x) + betainc_reg(45.0, 2.0, 1.0 - x), 1.0, 1e-13);
}

TEST(PdfH0, NormalizesToOneByQuadrature) {
    for (const auto& [k0, k1] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 1}}) {
        const TheoryModel model = model_of(48, k0, k1);
        const double integral =
            oracle::integrate_halfline([&](double x) { return pdf_h0(x, model); }, 1e-9);
        EXPECT_NEAR(integral, 1.0, 1e-6) << "k0=" << k0 << " k1=" << k1;
    }
}

TEST(PdfH0, VanishesAtZero) {
    EXPECT_EQ(pdf_h0(0.0, model_of(48, 1, 1)), 0.0);
    EXPECT_EQ(pdf_h0(0.0, model_of(48, 3, 2)), 0.0);
}

TEST(PdfH0, ModeMatchesGridArgmax) {
    const TheoryModel model = model_of(48, 2, 1);
    double best_x = 0.0, best_f = -1.0;
    for (double x = 1e-4; x < 2.0; x += 1e-4) {
        const double f = pdf_h0(x, model);
        if (f > best_f) {
            best_f = f;
            best_x = x;
        }
    }
    // Stationary point of x^(a-1) (1+x)^-(a+b): x* = (a - 1) / (b + 1).
    const double a = 2.0 * model.k1;
    const double b = model.noise_dim();
    EXPECT_NEAR(best_x, (a - 1.0) / (b + 1.0), 2e-4);
}

TEST(PdfH1, ReducesToH0AtZeroSnr) {
    const TheoryModel model = model_of(48, 1, 1, 0.0);
    for (double x : {0.01, 0.1, 0.5, 1.0, 3.0})
        EXPECT_NEAR(pdf_h1(x, model), pdf_h0(x, model), 1e-12 * pdf_h0(x, model) + 1e-300);
}

TEST(PdfH1, NormalizesToOneByQuadrature) {
    const TheoryModel model = model_of(48, 1, 1, 10.0);
    const double integral = oracle::integrate_halfline([&](double x) { return pdf_h1(x, model); }, 1e-9);
    EXPECT_NEAR(integral, 1.0, 1e-6);
}

TEST(PdfH1, KolmogorovSmirnovAgainstSimulation) {
    // Isotropic pair amplitudes on well-separated angles; the excess ratio
    // follows the stretched law with the exact subspace SNR.
    const std::vector<double> direct{25.4};
    const std::vector<std::pair<double, double>> pairs{{-9.3, 10.7}};
    const double sigma_beta2 = 10.0;
    const double rho = rho1_exact_iso(kGeom, direct, pairs, sigma_beta2, 1.0);
    const TheoryModel model = model_of(48, 1, 1, rho);

    const CMat psp = projector_sperp(kGeom, direct, pairs);
    const CMat p1 =
        projector_complement(build_response(kGeom, direct, pairs).entries, kGeom.virtual_size());
    const CVec e1 = virtual_steering(kGeom, -9.3, 10.7);
    const CVec e2 = virtual_steering(kGeom, 10.7, -9.3);
    const CVec a0 = virtual_steering(kGeom, 25.4, 25.4);

    Rng rng(404);
    const int n = 10000;
    std::vector<double> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        const CVec z = rng.next_cnormal(sigma_beta2) * e1 + rng.next_cnormal(sigma_beta2) * e2 +
                       rng.next_cnormal(4.0) * a0 + rng.next_cnormal_vector(48, 1.0);
        samples.push_back((psp * z).squaredNorm() / (p1 * z).squaredNorm());
    }
    const double dist = oracle::ks_distance(samples, [&](double x) {
        const double scaled = x / (1.0 + model.rho1);
        return betainc_reg(2.0 * model.k1, model.noise_dim(), scaled / (1.0 + scaled));
    });
    EXPECT_LT(dist, 1.628 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST(Pfa, UnitThresholdGivesCertainAlarm) {
    EXPECT_NEAR(pfa(1.0, model_of(48, 1, 1)), 1.0, 1e-15);
}

TEST(Pfa, MonotoneDecreasingToZero) {
    const TheoryModel model = model_of(48, 2, 1);
    double prev = 1.0;
    for (double lambda : {1.1, 1.3, 1.8, 2.5, 4.0, 8.0, 32.0}) {
        const double p = pfa(lambda, model);
        EXPECT_LT(p, prev);
        prev = p;
    }
    EXPECT_LT(prev, 1e-9);
}

TEST(Pfa, MatchesAlternatingSumAtSmallNoiseDim) {
    for (int k1 = 1; k1 <= 3; ++k1)
        for (int m = 2; m <= 12; ++m) {
            const int m_virtual = m + 1 + 2 * k1;
            const TheoryModel model = model_of(m_virtual, 1, k1);
            for (double lambda : {1.1, 2.0, 5.0})
                EXPECT_NEAR(pfa(lambda, model), oracle::pfa_alternating_sum(lambda, k1, m), 1e-9)
                    << "k1=" << k1 << " m=" << m << " lambda=" << lambda;
        }
}

TEST(Pd, EqualsPfaAtZeroSnr) {
    const TheoryModel model = model_of(48, 1, 1, 0.0);
    for (double lambda : {1.05, 1.4, 2.0, 6.0}) EXPECT_NEAR(pd(lambda, model), pfa(lambda, model), 1e-14);
}

TEST(Pd, IncreasesWithSnrToOne) {
    double prev = 0.0;
    for (double rho : {0.0, 1.0, 10.0, 100.0, 1e4}) {
        const double p = pd(2.0, model_of(48, 1, 1, rho));
        EXPECT_GE(p, prev);
        prev = p;
    }
    EXPECT_GT(prev, 0.9999);
}

TEST(Pd, DominatesPfaForAnyPairSnr) {
    for (double rho : {0.0, 0.5, 3.0, 30.0})
        for (double lambda : {1.05, 1.5, 3.0}) {
            const TheoryModel model = model_of(48, 2, 1, rho);
            EXPECT_GE(pd(lambda, model), pfa(lambda, model) - 1e-14);
        }
}

TEST(Pd, MorePairsDetectEasier) {
    // At matched false-alarm level and matched pair SNR, the richer excess
    // subspace wins.
    const TheoryModel m1 = model_of(48, 1, 1, 10.0);
    const TheoryModel m3 = model_of(48, 1, 3, 10.0);
    const double l1 = threshold_for_pfa(1e-3, m1);
    const double l3 = threshold_for_pfa(1e-3, m3);
    EXPECT_GT(pd(l3, m3), pd(l1, m1));
}

TEST(ThresholdForPfa, RoundTrips) {
    const TheoryModel model = model_of(48, 1, 1);
    for (double target : {1e-1, 1e-2, 1e-3}) {
        const double lambda = threshold_for_pfa(target, model);
        EXPECT_NEAR(pfa(lambda, model), target, 1e-10);
    }
}

TEST(ThresholdForPfa, NearCertainAlarmPushesThresholdToOne) {
    const double lambda = threshold_for_pfa(1.0 - 1e-9, model_of(48, 1, 1));
    EXPECT_GT(lambda, 1.0);
    EXPECT_LT(lambda, 1.0 + 1e-3);
}

TEST(ThresholdForPfa, PlausibleScaleForStandardSetup) {
    const double lambda = threshold_for_pfa(1e-3, model_of(48, 1, 1));
    EXPECT_GT(lambda, 1.05);
    EXPECT_LT(lambda, 2.0);
}

TEST(Rho1Exact, WellSeparatedIsotropicMatchesVarianceRatio) {
    const double rho = rho1_exact_iso(kGeom, {25.4}, {{-9.3, 10.7}}, 10.0, 1.0);
    EXPECT_NEAR(rho, 10.0, 0.1);  // within 1%
}

TEST(Rho1Exact, ZeroVarianceAndLinearity) {
    EXPECT_EQ(rho1_exact_iso(kGeom, {25.4}, {{-9.3, 10.7}}, 0.0, 1.0), 0.0);
    const double r1 = rho1_exact_iso(kGeom, {25.4}, {{-9.3, 10.7}}, 3.0, 1.0);
    const double r2 = rho1_exact_iso(kGeom, {25.4}, {{-9.3, 10.7}}, 6.0, 1.0);
    const double r3 = rho1_exact_iso(kGeom, {25.4}, {{-9.3, 10.7}}, 3.0, 2.0);
    EXPECT_NEAR(r2, 2.0 * r1, 1e-12);
    EXPECT_NEAR(r3, 0.5 * r1, 1e-12);
}

TEST(Rho1Exact, TraceGapGrowsWhenPairHugsDirectSubspace) {
    const double far = sperp_trace_gap(kGeom, {25.4}, {{-40.0, 40.0}});
    const double near = sperp_trace_gap(kGeom, {10.0}, {{9.0, 11.0}});
    EXPECT_LT(far, 0.05);
    EXPECT_GT(near, far);
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ghostid/experiments.hpp"
#include "oracles.hpp"

using namespace ghostid;

namespace {

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.geometry = ArrayGeometry::make_ula(6, 8, 0.0038);
    cfg.scene.k0 = 1;
    cfg.scene.k1 = 1;
    cfg.scene.direct_deg = {25.4};
    cfg.scene.pairs_deg = {{-9.3, 10.7}};
    cfg.scene.rho0_db = 10.0;
    cfg.scene.rho1_db = 10.0;
    cfg.seed = 2024;
    cfg.ideal_glrt = true;
    cfg.pfa_target = 5e-2;
    return cfg;
}

ArrayGeometry example_sla() {
    ArrayGeometry g;
    g.wavelength_m = 0.0038;
    for (int m : {0, 1, 9, 14, 20, 23}) g.tx_positions_m.push_back(m * 0.0038 / 2.0);
    for (int n : {0, 3, 5, 11, 16, 19, 26, 30}) g.rx_positions_m.push_back(n * 0.0038 / 2.0);
    return g;
}

}  // namespace

TEST(ParallelFor, CoversAllIndicesOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, 4, [&](long i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Harness, ReportsAreThreadCountInvariant) {
    ExperimentConfig cfg = base_config();
    cfg.trials_pfa = 400;
    std::string dumps[3];
    int idx = 0;
    for (int threads : {1, 2, 4}) {
        cfg.threads = threads;
        dumps[idx++] = run_pfa_experiment(cfg).to_json().dump();
    }
    EXPECT_EQ(dumps[0], dumps[1]);
    EXPECT_EQ(dumps[1], dumps[2]);
}

TEST(Harness, IdealFalseAlarmRateWithinBand) {
    ExperimentConfig cfg = base_config();
    cfg.trials_pfa = 20000;
    const MetricsReport report = run_pfa_experiment(cfg);
    ASSERT_EQ(report.probability.size(), 1u);
    const auto& point = report.probability[0];
    const double sigma = std::sqrt(cfg.pfa_target * (1.0 - cfg.pfa_target) / point.trials);
    EXPECT_NEAR(point.empirical, cfg.pfa_target, 3.0 * sigma);
    EXPECT_LE(point.ci_lo, point.empirical);
    EXPECT_GE(point.ci_hi, point.empirical);
}

TEST(Harness, DetectionAtZeroPairSnrEqualsFalseAlarmRate) {
    ExperimentConfig cfg = base_config();
    cfg.trials_pd = 4000;
    cfg.rho1_sweep_db = {-300.0};  // exactly zero pair power
    const MetricsReport report = run_pd_experiment(cfg);
    ASSERT_EQ(report.probability.size(), 1u);
    const auto& point = report.probability[0];
    EXPECT_GE(cfg.pfa_target, point.ci_lo);
    EXPECT_LE(cfg.pfa_target, point.ci_hi);
    EXPECT_NEAR(point.theory, cfg.pfa_target, 1e-9);
}

TEST(Harness, IdealDetectionTracksTheoryColumn) {
    ExperimentConfig cfg = base_config();
    cfg.trials_pd = 4000;
    cfg.pfa_target = 1e-2;
    cfg.rho1_sweep_db = {5.0, 10.0};
    const MetricsReport report = run_pd_experiment(cfg);
    for (const auto& point : report.probability) EXPECT_NEAR(point.empirical, point.theory, 0.03);
}

TEST(Harness, RecordsReproduceTheReport) {
    ExperimentConfig cfg = base_config();
    cfg.trials_pd = 500;
    cfg.rho1_sweep_db = {10.0};
    std::vector<TrialRecord> records;
    const MetricsReport report = run_pd_experiment(cfg, &records);
    ASSERT_EQ(records.size(), 500u);

    // Round-trip through JSON, then re-aggregate.
    Json arr = Json::array();
    for (const auto& r : records) arr.push_back(trial_record_to_json(r));
    const Json parsed = Json::parse(arr.dump());
    std::vector<TrialRecord> restored;
    for (const auto& jr : parsed) restored.push_back(trial_record_from_json(jr));
    const auto point = aggregate_detection(restored, 10.0, cfg.pfa_target);
    EXPECT_EQ(point.count, report.probability[0].count);
    EXPECT_EQ(point.empirical, report.probability[0].empirical);
    EXPECT_EQ(point.theory, report.probability[0].theory);
}

TEST(Harness, RmseSweepProducesFiniteOrderedResults) {
    ExperimentConfig cfg = base_config();
    cfg.ideal_glrt = false;
    cfg.scene.random_angles = true;
    cfg.scene.amplitude_mode = AmplitudeMode::FixedMagnitude;
    cfg.trials_rmse = 40;
    cfg.snr_sweep_db = {20.0};
    const MetricsReport report = run_rmse_experiment(cfg);
    ASSERT_EQ(report.accuracy.size(), 1u);
    const auto& point = report.accuracy[0];
    EXPECT_TRUE(std::isfinite(point.rmse1_primary));
    EXPECT_TRUE(std::isfinite(point.rmse1_baseline));
    EXPECT_LT(point.rmse1_primary, point.rmse1_baseline);
    EXPECT_GE(point.success_primary, 0.8);
}

TEST(Harness, RefinedRmseFallsWithSnrAndBaselineHitsQuantizationFloor) {
    ExperimentConfig cfg = base_config();
    cfg.ideal_glrt = false;
    cfg.scene.k1 = 0;
    cfg.scene.pairs_deg.clear();
    cfg.scene.random_angles = true;
    cfg.scene.amplitude_mode = AmplitudeMode::FixedMagnitude;
    cfg.trials_rmse = 150;
    cfg.snr_sweep_db = {10.0, 20.0, 30.0};
    const MetricsReport report = run_rmse_experiment(cfg);
    ASSERT_EQ(report.accuracy.size(), 3u);
    // Monotone improvement with SNR for the refined estimator.
    EXPECT_GT(report.accuracy[0].rmse0_primary, report.accuracy[1].rmse0_primary);
    EXPECT_GT(report.accuracy[1].rmse0_primary, report.accuracy[2].rmse0_primary);
    // The grid baseline saturates at the quantization scale while the
    // refined estimator keeps improving well below it.
    const auto& high = report.accuracy[2];
    EXPECT_GT(high.rmse0_baseline, 0.3);  // 2-degree grid: rms offset ~ 0.58 deg
    EXPECT_LT(high.rmse0_baseline, 0.9);
    EXPECT_LT(high.rmse0_primary, 0.2);
}

TEST(Harness, DenserScenesEstimateWorse) {
    ExperimentConfig cfg = base_config();
    cfg.ideal_glrt = false;
    cfg.scene.random_angles = true;
    cfg.scene.amplitude_mode = AmplitudeMode::FixedMagnitude;
    cfg.trials_rmse = 120;
    cfg.snr_sweep_db = {20.0};

    cfg.scene.k0 = 1;
    cfg.scene.k1 = 1;
    const auto sparse = run_rmse_experiment(cfg).accuracy[0];
    cfg.scene.k1 = 3;
    cfg.seed = 2025;
    const auto dense = run_rmse_experiment(cfg).accuracy[0];
    EXPECT_GE(dense.rmse1_primary, sparse.rmse1_primary);
    EXPECT_LE(dense.success_primary, sparse.success_primary + 1e-12);
}

TEST(Harness, RandomAnglePlacementHonorsSeparation) {
    ExperimentConfig cfg = base_config();
    cfg.scene.random_angles = true;
    cfg.scene.k0 = 2;
    cfg.scene.k1 = 1;
    const double bw = cfg.effective_beamwidth_deg();
    for (int t = 0; t < 50; ++t) {
        Rng rng(99, t);
        const auto setup = detail::make_trial_setup(cfg, rng, true, 10.0, 10.0);
        std::vector<double> coords;
        for (const auto& d : setup.truth.direct) coords.push_back(d.theta_deg);
        for (const auto& p : setup.truth.pairs) {
            coords.push_back(p.dod_deg);
            coords.push_back(p.doa_deg);
        }
        for (size_t i = 0; i < coords.size(); ++i)
            for (size_t j = i + 1; j < coords.size(); ++j)
                EXPECT_GE(std::abs(coords[i] - coords[j]), bw);
    }
}

TEST(CorrelationProfile, UnitPeakAtReference) {
    const auto profile = correlation_profile(base_config().geometry, 10.0, 10.0, 0.5);
    double peak = 0.0, peak_psi = 0.0;
    for (const auto& p : profile)
        if (p.magnitude > peak) {
            peak = p.magnitude;
            peak_psi = p.psi_deg;
        }
    EXPECT_NEAR(peak, 1.0, 1e-12);
    EXPECT_EQ(peak_psi, 10.0);
}

TEST(CorrelationProfile, DenseUlaMatchesDirichletProduct) {
    const ArrayGeometry geom = ArrayGeometry::make_ula(6, 8, 0.0038);
    const double theta = 10.0;
    const auto profile = correlation_profile(geom, theta, theta, 1.0);
    for (const auto& p : profile) {
        const double du = std::sin(p.psi_deg * kDegToRad) - std::sin(theta * kDegToRad);
        const double expected =
            oracle::dirichlet_magnitude(6, kPi * du) * oracle::dirichlet_magnitude(8, kPi * du);
        EXPECT_NEAR(p.magnitude, expected, 1e-10);
    }
}

TEST(CorrelationProfile, FilledVirtualUlaMatchesSingleDirichlet) {
    const ArrayGeometry geom = ArrayGeometry::make_filled_virtual_ula(6, 8, 0.0038);
    const double theta = 10.0;
    const auto profile = correlation_profile(geom, theta, theta, 1.0);
    for (const auto& p : profile) {
        const double du = std::sin(p.psi_deg * kDegToRad) - std::sin(theta * kDegToRad);
        EXPECT_NEAR(p.magnitude, oracle::dirichlet_magnitude(48, kPi * du), 1e-10);
    }
}

TEST(CorrelationProfile, SparseLayoutHasHigherPeakSidelobe) {
    const double theta = 10.0;
    const auto sidelobe_peak = [&](const ArrayGeometry& geom) {
        const double bw = geom.beamwidth_deg();
        double peak = 0.0;
        for (const auto& p : correlation_profile(geom, theta, theta, 0.05))
            if (std::abs(p.psi_deg - theta) > 2.0 * bw) peak = std::max(peak, p.magnitude);
        return peak;
    };
    EXPECT_GT(sidelobe_peak(example_sla()), sidelobe_peak(ArrayGeometry::make_ula(6, 8, 0.0038)));
}

TEST(ConfigJson, ParsesFullDocument) {
    const Json j = {
        {"geometry", geometry_to_json(ArrayGeometry::make_ula(6, 8, 0.0038))},
        {"scene",
         {{"k0", 1},
          {"k1", 1},
          {"direct_deg", {25.4}},
          {"pairs_deg", {{-9.3, 10.7}}},
          {"rho0_db", 10.0},
          {"rho1_db", 15.0},
          {"sigma2", 1.0},
          {"amplitude_mode", "drawn"}}},
        {"stop", {{"max_outer", 10}, {"grid_step_deg", 2.0}, {"eps", "auto"}, {"delta_r", 1.0}}},
        {"pfa_target", 1e-3},
        {"trials_pd", 5000},
        {"seed", 7},
        {"estimator", "grid-baseline"},
        {"ideal_glrt", true},
        {"rho1_sweep_db", {0.0, 5.0}},
        {"threads", 2},
    };
    const ExperimentConfig cfg = experiment_config_from_json(j);
    EXPECT_EQ(cfg.scene.pairs_deg[0].first, -9.3);
    EXPECT_EQ(cfg.estimator, EstimatorKind::GridBaseline);
    EXPECT_TRUE(cfg.ideal_glrt);
    EXPECT_TRUE(cfg.eps_auto);
    EXPECT_EQ(cfg.trials_pd, 5000);
    EXPECT_EQ(cfg.rho1_sweep_db.size(), 2u);
    EXPECT_EQ(cfg.threads, 2);
    EXPECT_EQ(cfg.effective_trials_pfa(), 100000);
}

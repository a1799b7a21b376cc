// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment runner: false-alarm tables, detection curves against
// the closed-form bound, estimation accuracy sweeps and correlation
// profiles. Trials are independent work units with per-trial random streams,
// so any thread count reproduces the same report bytes.
#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ghostid/glrt.hpp"
#include "ghostid/io.hpp"
#include "ghostid/metrics.hpp"
#include "ghostid/rng.hpp"
#include "ghostid/scene.hpp"
#include "ghostid/theory.hpp"

namespace ghostid {

inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(1, n)));
    if (threads == 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

enum class EstimatorKind { Cscd, GridBaseline };

enum class AmplitudeMode { Drawn, FixedMagnitude };

// Scene recipe for a Monte Carlo study. Angle placements may be pinned or
// redrawn per trial; the pair placements double as the designed alternative
// for the known-matrix detector even when the truth carries no pair signal.
struct SceneTemplate {
    int k0 = 1;
    int k1 = 1;
    std::vector<double> direct_deg;                     // size k0 when fixed
    std::vector<std::pair<double, double>> pairs_deg;   // size k1 when fixed
    bool random_angles = false;
    double rho0_db = 10.0;
    double rho1_db = 10.0;
    double sigma2 = 1.0;
    AmplitudeMode amplitude_mode = AmplitudeMode::Drawn;
};

struct ExperimentConfig {
    ArrayGeometry geometry;
    SceneTemplate scene;
    StopConfigH0 stop_h0;
    StopConfigH1 stop_h1;
    bool eps_auto = true;  // eps = sqrt(sigma2 * M) when set
    double pfa_target = 1e-2;
    long trials_pfa = 0;  // 0 = 100 / pfa_target
    long trials_pd = 10000;
    long trials_rmse = 200;
    std::uint64_t seed = 1;
    EstimatorKind estimator = EstimatorKind::Cscd;
    bool ideal_glrt = false;
    std::vector<double> rho1_sweep_db{0.0, 5.0, 10.0, 15.0};
    std::vector<double> snr_sweep_db{10.0, 15.0, 20.0};
    double beamwidth_deg = 0.0;  // 0 = Rayleigh width of the virtual aperture
    int threads = 0;             // 0 = hardware concurrency

    long effective_trials_pfa() const {
        return trials_pfa > 0 ? trials_pfa : static_cast<long>(std::llround(100.0 / pfa_target));
    }
    double effective_beamwidth_deg() const {
        return beamwidth_deg > 0.0 ? beamwidth_deg : geometry.beamwidth_deg();
    }
    StopConfigH0 stop_h0_for(double sigma2) const {
        StopConfigH0 s = stop_h0;
        if (eps_auto) s.eps = StopConfigH0::default_eps(geometry, sigma2);
        return s;
    }
    StopConfigH1 stop_h1_for(double sigma2) const {
        StopConfigH1 s = stop_h1;
        if (eps_auto) s.eps = StopConfigH0::default_eps(geometry, sigma2);
        return s;
    }
};

// dB knobs map through 10^(db/10); values at or below -200 dB mean exactly
// zero (JSON cannot carry -inf).
inline double db_to_linear(double db) { return db <= -200.0 ? 0.0 : std::pow(10.0, db / 10.0); }

namespace detail {

// Angle placement for one trial: either the pinned template angles or a
// fresh draw, uniform over [-60, 60] with at least one beamwidth separating
// every pair of scalar coordinates.
struct TrialAngles {
    std::vector<double> direct_deg;
    std::vector<std::pair<double, double>> pairs_deg;
};

inline TrialAngles draw_trial_angles(const ExperimentConfig& cfg, Rng& rng) {
    TrialAngles out;
    if (!cfg.scene.random_angles) {
        out.direct_deg = cfg.scene.direct_deg;
        out.pairs_deg = cfg.scene.pairs_deg;
        if (static_cast<int>(out.direct_deg.size()) != cfg.scene.k0 ||
            static_cast<int>(out.pairs_deg.size()) != cfg.scene.k1)
            throw InvalidArgument("fixed scene template must pin k0 direct angles and k1 pairs");
        return out;
    }
    const int needed = cfg.scene.k0 + 2 * cfg.scene.k1;
    const double min_sep = cfg.effective_beamwidth_deg();
    std::vector<double> coords;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        coords.clear();
        for (int i = 0; i < needed; ++i) coords.push_back(-60.0 + 120.0 * rng.next_uniform());
        bool ok = true;
        for (size_t i = 0; i < coords.size() && ok; ++i)
            for (size_t j = i + 1; j < coords.size() && ok; ++j)
                if (std::abs(coords[i] - coords[j]) < min_sep) ok = false;
        if (ok) break;
        coords.clear();
    }
    if (coords.empty()) throw NoConvergence("could not place angles with the requested separation");
    for (int i = 0; i < cfg.scene.k0; ++i) out.direct_deg.push_back(coords[i]);
    for (int k = 0; k < cfg.scene.k1; ++k) {
        double a = coords[cfg.scene.k0 + 2 * k];
        double b = coords[cfg.scene.k0 + 2 * k + 1];
        if (a > b) std::swap(a, b);
        out.pairs_deg.emplace_back(a, b);
    }
    return out;
}

struct TrialSetup {
    Scene truth;
    std::vector<std::pair<double, double>> designed_pairs_deg;
};

// One trial's ground truth. Under a ghost-free truth the pair placements are
// still kept as the designed alternative subspace of the known-matrix
// detector.
inline TrialSetup make_trial_setup(const ExperimentConfig& cfg, Rng& rng, bool pairs_in_truth,
                                   double rho0_db, double rho1_db) {
    const TrialAngles angles = draw_trial_angles(cfg, rng);
    TrialSetup setup;
    setup.designed_pairs_deg = angles.pairs_deg;
    Scene& scene = setup.truth;
    scene.sigma2 = cfg.scene.sigma2;
    scene.sigma_alpha2 = db_to_linear(rho0_db) * cfg.scene.sigma2;
    scene.sigma_beta2 = pairs_in_truth ? db_to_linear(rho1_db) * cfg.scene.sigma2 : 0.0;
    for (double theta : angles.direct_deg) scene.direct.push_back(DirectPath{theta, {0.0, 0.0}});
    if (pairs_in_truth)
        for (const auto& [dod, doa] : angles.pairs_deg) scene.pairs.push_back(FirstOrderPair::make(dod, doa));
    if (cfg.scene.amplitude_mode == AmplitudeMode::Drawn)
        randomize_scene_amplitudes(scene, rng);
    else
        fixed_magnitude_scene_amplitudes(scene, rng);
    return setup;
}

struct EstimatePairOutput {
    EstimateH0 h0;
    EstimateH1 h1;
};

// The grid baseline runs with a zero improvement margin on the mixed side:
// its insertions are monotone by construction, so that is the stop rule the
// plain group-pursuit reference actually has.
inline StopConfigH1 baseline_stop(StopConfigH1 s1) {
    s1.eps2 = 0.0;
    return s1;
}

inline EstimatePairOutput run_estimators(const ArrayGeometry& geom, const CVec& z, const StopConfigH0& s0,
                                         const StopConfigH1& s1, EstimatorKind kind) {
    EstimatePairOutput out;
    if (kind == EstimatorKind::Cscd) {
        out.h0 = cscd_h0(geom, z, s0);
        out.h1 = cscd_h1(geom, z, s1);
    } else {
        out.h0 = omp_h0(geom, z, s0);
        out.h1 = gomp_h1(geom, z, baseline_stop(s1));
    }
    return out;
}

}  // namespace detail

struct TrialRecord {
    long index = 0;
    bool detected = false;
    double statistic = 0.0;
    double threshold = 0.0;
    double theory_pd = 0.0;
    MatchResult match_primary;
    MatchResult match_baseline;
};

inline Json match_result_to_json(const MatchResult& m) {
    Json direct = Json::array();
    for (const auto& d : m.direct)
        direct.push_back(Json{{"truth_deg", d.truth_deg}, {"identified", d.identified}, {"error_deg", d.error_deg}});
    Json pairs = Json::array();
    for (const auto& p : m.pairs)
        pairs.push_back(Json{{"truth_dod_deg", p.truth_dod_deg},
                             {"truth_doa_deg", p.truth_doa_deg},
                             {"identified", p.identified},
                             {"error_dod_deg", p.error_dod_deg},
                             {"error_doa_deg", p.error_doa_deg}});
    return Json{{"direct", direct}, {"pairs", pairs}};
}

inline MatchResult match_result_from_json(const Json& j) {
    MatchResult m;
    for (const auto& d : j.value("direct", Json::array())) {
        MatchedDirect md;
        md.truth_deg = d.at("truth_deg").get<double>();
        md.identified = d.at("identified").get<bool>();
        md.error_deg = d.at("error_deg").get<double>();
        m.direct.push_back(md);
    }
    for (const auto& p : j.value("pairs", Json::array())) {
        MatchedPair mp;
        mp.truth_dod_deg = p.at("truth_dod_deg").get<double>();
        mp.truth_doa_deg = p.at("truth_doa_deg").get<double>();
        mp.identified = p.at("identified").get<bool>();
        mp.error_dod_deg = p.at("error_dod_deg").get<double>();
        mp.error_doa_deg = p.at("error_doa_deg").get<double>();
        m.pairs.push_back(mp);
    }
    return m;
}

inline Json trial_record_to_json(const TrialRecord& r) {
    return Json{{"index", r.index},
                {"detected", r.detected},
                {"statistic", r.statistic},
                {"threshold", r.threshold},
                {"theory_pd", r.theory_pd},
                {"match_primary", match_result_to_json(r.match_primary)},
                {"match_baseline", match_result_to_json(r.match_baseline)}};
}

inline TrialRecord trial_record_from_json(const Json& j) {
    TrialRecord r;
    r.index = j.at("index").get<long>();
    r.detected = j.at("detected").get<bool>();
    r.statistic = j.at("statistic").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.theory_pd = j.at("theory_pd").get<double>();
    r.match_primary = match_result_from_json(j.at("match_primary"));
    r.match_baseline = match_result_from_json(j.at("match_baseline"));
    return r;
}

struct MetricsReport {
    std::string experiment;
    Json manifest;

    struct ProbabilityPoint {
        double param_db = 0.0;  // rho0 for false-alarm runs, rho1 for detection runs
        double nominal = 0.0;
        long trials = 0;
        long count = 0;
        double empirical = 0.0;
        double ci_lo = 0.0;
        double ci_hi = 0.0;
        double theory = 0.0;
    };
    std::vector<ProbabilityPoint> probability;

    struct AccuracyPoint {
        double snr_db = 0.0;
        long trials = 0;
        double rmse0_primary = 0.0;
        double rmse1_primary = 0.0;
        double success_primary = 0.0;
        double rmse0_baseline = 0.0;
        double rmse1_baseline = 0.0;
        double success_baseline = 0.0;
    };
    std::vector<AccuracyPoint> accuracy;

    Json to_json() const {
        Json points = Json::array();
        for (const auto& p : probability)
            points.push_back(Json{{"param_db", p.param_db},
                                  {"nominal", p.nominal},
                                  {"trials", p.trials},
                                  {"count", p.count},
                                  {"empirical", p.empirical},
                                  {"ci_lo", p.ci_lo},
                                  {"ci_hi", p.ci_hi},
                                  {"theory", p.theory}});
        Json acc = Json::array();
        for (const auto& a : accuracy)
            acc.push_back(Json{{"snr_db", a.snr_db},
                               {"trials", a.trials},
                               {"rmse0_primary", a.rmse0_primary},
                               {"rmse1_primary", a.rmse1_primary},
                               {"success_primary", a.success_primary},
                               {"rmse0_baseline", a.rmse0_baseline},
                               {"rmse1_baseline", a.rmse1_baseline},
                               {"success_baseline", a.success_baseline}});
        return Json{{"experiment", experiment}, {"manifest", manifest}, {"probability", points}, {"accuracy", acc}};
    }

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(12);
        if (!probability.empty()) {
            os << "param_db,nominal,trials,count,empirical,ci_lo,ci_hi,theory\n";
            for (const auto& p : probability)
                os << p.param_db << "," << p.nominal << "," << p.trials << "," << p.count << "," << p.empirical
                   << "," << p.ci_lo << "," << p.ci_hi << "," << p.theory << "\n";
        }
        if (!accuracy.empty()) {
            os << "snr_db,trials,rmse0_primary,rmse1_primary,success_primary,"
                  "rmse0_baseline,rmse1_baseline,success_baseline\n";
            for (const auto& a : accuracy)
                os << a.snr_db << "," << a.trials << "," << a.rmse0_primary << "," << a.rmse1_primary << ","
                   << a.success_primary << "," << a.rmse0_baseline << "," << a.rmse1_baseline << ","
                   << a.success_baseline << "\n";
        }
        return os.str();
    }
};

// Aggregators are pure functions of the trial records so persisted records
// reproduce the report exactly.
inline MetricsReport::ProbabilityPoint aggregate_detection(const std::vector<TrialRecord>& records,
                                                           double param_db, double nominal) {
    MetricsReport::ProbabilityPoint point;
    point.param_db = param_db;
    point.nominal = nominal;
    point.trials = static_cast<long>(records.size());
    double theory_sum = 0.0;
    for (const auto& r : records) {
        point.count += r.detected;
        theory_sum += r.theory_pd;
    }
    const BinomialCi ci = binomial_ci(point.count, point.trials);
    point.empirical = ci.estimate;
    point.ci_lo = ci.lo;
    point.ci_hi = ci.hi;
    point.theory = theory_sum / std::max<long>(1, point.trials);
    return point;
}

inline MetricsReport::AccuracyPoint aggregate_accuracy(const std::vector<TrialRecord>& records, double snr_db) {
    MetricsReport::AccuracyPoint point;
    point.snr_db = snr_db;
    point.trials = static_cast<long>(records.size());
    std::vector<MatchResult> primary, baseline;
    long success_primary = 0, success_baseline = 0;
    for (const auto& r : records) {
        primary.push_back(r.match_primary);
        baseline.push_back(r.match_baseline);
        success_primary += r.match_primary.all_identified();
        success_baseline += r.match_baseline.all_identified();
    }
    const RmseMetrics mp = rmse_metrics(primary);
    const RmseMetrics mb = rmse_metrics(baseline);
    point.rmse0_primary = mp.rmse0_deg;
    point.rmse1_primary = mp.rmse1_deg;
    point.rmse0_baseline = mb.rmse0_deg;
    point.rmse1_baseline = mb.rmse1_deg;
    point.success_primary = static_cast<double>(success_primary) / std::max<long>(1, point.trials);
    point.success_baseline = static_cast<double>(success_baseline) / std::max<long>(1, point.trials);
    return point;
}

namespace detail {

inline Json manifest_for(const ExperimentConfig& cfg, const std::string& experiment) {
    return Json{{"version", kVersion},
                {"experiment", experiment},
                {"seed", cfg.seed},
                {"pfa_target", cfg.pfa_target},
                {"estimator", cfg.estimator == EstimatorKind::Cscd ? "cscd" : "grid-baseline"},
                {"ideal_glrt", cfg.ideal_glrt},
                {"geometry", geometry_to_json(cfg.geometry)},
                {"beamwidth_deg", cfg.effective_beamwidth_deg()},
                {"scene", Json{{"k0", cfg.scene.k0},
                               {"k1", cfg.scene.k1},
                               {"rho0_db", cfg.scene.rho0_db},
                               {"rho1_db", cfg.scene.rho1_db},
                               {"sigma2", cfg.scene.sigma2},
                               {"random_angles", cfg.scene.random_angles}}}};
}

}  // namespace detail

// Ghost-free truth, nominal threshold from the designed model order: how
// often does the detector cry ghost? Known-matrix mode exercises the CFAR
// property; estimator mode measures the sensitivity of the nominal threshold
// to estimation errors.
inline MetricsReport run_pfa_experiment(const ExperimentConfig& cfg,
                                        std::vector<TrialRecord>* records_out = nullptr) {
    if (cfg.scene.k1 < 1)
        throw InvalidArgument("false-alarm runs need at least one designed pair for the alternative");
    const long trials = cfg.effective_trials_pfa();
    const StopConfigH0 s0 = cfg.stop_h0_for(cfg.scene.sigma2);
    const StopConfigH1 s1 = cfg.stop_h1_for(cfg.scene.sigma2);
    std::vector<TrialRecord> records(trials);
    parallel_for(trials, cfg.threads, [&](long i) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
        const detail::TrialSetup setup =
            detail::make_trial_setup(cfg, rng, /*pairs_in_truth=*/false, cfg.scene.rho0_db, cfg.scene.rho1_db);
        const Snapshot snap = synthesize(cfg.geometry, setup.truth, rng, cfg.seed + i);
        GlrtOutcome outcome;
        if (cfg.ideal_glrt) {
            std::vector<double> direct;
            for (const auto& d : setup.truth.direct) direct.push_back(d.theta_deg);
            outcome = detect_with_known_sets(cfg.geometry, snap.z, direct, setup.designed_pairs_deg,
                                             cfg.pfa_target);
        } else {
            const auto est = detail::run_estimators(cfg.geometry, snap.z, s0, s1, cfg.estimator);
            outcome = detect(cfg.geometry, snap.z, est.h0, est.h1, cfg.pfa_target);
        }
        TrialRecord rec;
        rec.index = i;
        rec.detected = outcome.ghost_detected;
        rec.statistic = outcome.statistic;
        rec.threshold = outcome.threshold;
        rec.theory_pd = cfg.pfa_target;
        records[i] = rec;
    });
    MetricsReport report;
    report.experiment = "pfa";
    report.manifest = detail::manifest_for(cfg, "pfa");
    report.probability.push_back(aggregate_detection(records, cfg.scene.rho0_db, cfg.pfa_target));
    if (records_out) *records_out = std::move(records);
    return report;
}

// Pair signal present, swept over the pair SNR; the closed-form bound, fed
// with the exact excess-subspace SNR of each trial's angles, rides along as
// the theory column.
inline MetricsReport run_pd_experiment(const ExperimentConfig& cfg,
                                       std::vector<TrialRecord>* records_out = nullptr) {
    if (cfg.scene.k1 < 1) throw InvalidArgument("detection runs need k1 >= 1");
    MetricsReport report;
    report.experiment = "pd";
    report.manifest = detail::manifest_for(cfg, "pd");
    if (!cfg.scene.random_angles)
        // Gap between the excess-subspace response energy and its isotropic
        // approximation for the pinned scene; nonzero when pair columns lean
        // into the direct subspace.
        report.manifest["sperp_trace_gap"] =
            sperp_trace_gap(cfg.geometry, cfg.scene.direct_deg, cfg.scene.pairs_deg);
    std::vector<TrialRecord> all_records;
    const StopConfigH0 s0 = cfg.stop_h0_for(cfg.scene.sigma2);
    const StopConfigH1 s1 = cfg.stop_h1_for(cfg.scene.sigma2);
    for (size_t sweep = 0; sweep < cfg.rho1_sweep_db.size(); ++sweep) {
        const double rho1_db = cfg.rho1_sweep_db[sweep];
        std::vector<TrialRecord> records(cfg.trials_pd);
        parallel_for(cfg.trials_pd, cfg.threads, [&](long i) {
            // Streams must differ across sweep points as well as trials.
            Rng rng(cfg.seed, (static_cast<std::uint64_t>(sweep) << 40) + static_cast<std::uint64_t>(i));
            const detail::TrialSetup setup =
                detail::make_trial_setup(cfg, rng, /*pairs_in_truth=*/true, cfg.scene.rho0_db, rho1_db);
            const Snapshot snap = synthesize(cfg.geometry, setup.truth, rng, cfg.seed + i);
            std::vector<double> direct;
            for (const auto& d : setup.truth.direct) direct.push_back(d.theta_deg);
            GlrtOutcome outcome;
            if (cfg.ideal_glrt) {
                outcome = detect_with_known_sets(cfg.geometry, snap.z, direct, setup.designed_pairs_deg,
                                                 cfg.pfa_target);
            } else {
                const auto est = detail::run_estimators(cfg.geometry, snap.z, s0, s1, cfg.estimator);
                outcome = detect(cfg.geometry, snap.z, est.h0, est.h1, cfg.pfa_target);
            }
            TheoryModel bound;
            bound.m_virtual = cfg.geometry.virtual_size();
            bound.k0 = cfg.scene.k0;
            bound.k1 = cfg.scene.k1;
            bound.rho1 = rho1_exact_iso(cfg.geometry, direct, setup.designed_pairs_deg,
                                        setup.truth.sigma_beta2, setup.truth.sigma2);
            const double lambda = threshold_for_pfa(cfg.pfa_target, bound);
            TrialRecord rec;
            rec.index = i;
            rec.detected = outcome.ghost_detected;
            rec.statistic = outcome.statistic;
            rec.threshold = outcome.threshold;
            rec.theory_pd = pd(lambda, bound);
            records[i] = rec;
        });
        report.probability.push_back(aggregate_detection(records, rho1_db, cfg.pfa_target));
        if (records_out) all_records.insert(all_records.end(), records.begin(), records.end());
    }
    if (records_out) *records_out = std::move(all_records);
    return report;
}

// Estimation accuracy sweep: the continuous-domain estimator against the
// on-grid baseline at matched SNR (rho0 = rho1 = sweep value), scored by
// beamwidth-gated matching.
inline MetricsReport run_rmse_experiment(const ExperimentConfig& cfg,
                                         std::vector<TrialRecord>* records_out = nullptr) {
    MetricsReport report;
    report.experiment = "rmse";
    report.manifest = detail::manifest_for(cfg, "rmse");
    const bool mixed = cfg.scene.k1 > 0;
    std::vector<TrialRecord> all_records;
    for (size_t sweep = 0; sweep < cfg.snr_sweep_db.size(); ++sweep) {
        const double snr_db = cfg.snr_sweep_db[sweep];
        const StopConfigH0 s0 = cfg.stop_h0_for(cfg.scene.sigma2);
        const StopConfigH1 s1 = cfg.stop_h1_for(cfg.scene.sigma2);
        std::vector<TrialRecord> records(cfg.trials_rmse);
        parallel_for(cfg.trials_rmse, cfg.threads, [&](long i) {
            Rng rng(cfg.seed, (static_cast<std::uint64_t>(sweep) << 40) + static_cast<std::uint64_t>(i));
            const detail::TrialSetup setup = detail::make_trial_setup(cfg, rng, mixed, snr_db, snr_db);
            const Snapshot snap = synthesize(cfg.geometry, setup.truth, rng, cfg.seed + i);
            const double bw = cfg.effective_beamwidth_deg();
            TrialRecord rec;
            rec.index = i;
            if (mixed) {
                const EstimateH1 refined = cscd_h1(cfg.geometry, snap.z, s1);
                const EstimateH1 baseline = gomp_h1(cfg.geometry, snap.z, detail::baseline_stop(s1));
                rec.match_primary =
                    match_paths(setup.truth, refined.angles.theta0, refined.angles.pairs(), bw);
                rec.match_baseline =
                    match_paths(setup.truth, baseline.angles.theta0, baseline.angles.pairs(), bw);
            } else {
                const EstimateH0 refined = cscd_h0(cfg.geometry, snap.z, s0);
                const EstimateH0 baseline = omp_h0(cfg.geometry, snap.z, s0);
                rec.match_primary = match_paths(setup.truth, refined.theta0_deg, {}, bw);
                rec.match_baseline = match_paths(setup.truth, baseline.theta0_deg, {}, bw);
            }
            records[i] = rec;
        });
        report.accuracy.push_back(aggregate_accuracy(records, snr_db));
        if (records_out) all_records.insert(all_records.end(), records.begin(), records.end());
    }
    if (records_out) *records_out = std::move(all_records);
    return report;
}

struct ProfilePoint {
    double psi_deg = 0.0;
    double magnitude = 0.0;
};

// Magnitude of the inner product between a reference column (direct when
// dod == doa, reciprocal-pair column otherwise) and the direct atom a(psi)
// swept over the angle domain; the sidelobe landscape the greedy selection
// sees.
inline std::vector<ProfilePoint> correlation_profile(const ArrayGeometry& geom, double ref_dod_deg,
                                                     double ref_doa_deg, double scan_step_deg) {
    const CVec ref = virtual_steering(geom, ref_dod_deg, ref_doa_deg);
    std::vector<ProfilePoint> out;
    for (double psi : make_angle_grid(scan_step_deg))
        out.push_back({psi, std::abs(ref.dot(virtual_steering(geom, psi, psi)))});
    return out;
}

inline std::string profile_to_csv(const std::vector<ProfilePoint>& profile) {
    std::ostringstream os;
    os.precision(12);
    os << "psi_deg,magnitude\n";
    for (const auto& p : profile) os << p.psi_deg << "," << p.magnitude << "\n";
    return os.str();
}

// Experiment configuration JSON. Geometry may be inline under "geometry" or
// referenced through "geometry_file"; "eps": "auto" tracks sqrt(sigma2 * M).
inline ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig cfg;
    if (j.contains("geometry_file"))
        cfg.geometry = geometry_from_json(read_json_file(j.at("geometry_file").get<std::string>()));
    else
        cfg.geometry = geometry_from_json(j.at("geometry"));

    if (j.contains("scene")) {
        const Json& s = j.at("scene");
        cfg.scene.k0 = s.value("k0", 1);
        cfg.scene.k1 = s.value("k1", 1);
        cfg.scene.random_angles = s.value("random_angles", false);
        cfg.scene.rho0_db = s.value("rho0_db", 10.0);
        cfg.scene.rho1_db = s.value("rho1_db", 10.0);
        cfg.scene.sigma2 = s.value("sigma2", 1.0);
        if (s.contains("direct_deg")) cfg.scene.direct_deg = s.at("direct_deg").get<std::vector<double>>();
        if (s.contains("pairs_deg"))
            for (const auto& p : s.at("pairs_deg")) {
                if (!p.is_array() || p.size() != 2)
                    throw InvalidArgument("scene.pairs_deg entries must be [dod, doa]");
                double a = p[0].get<double>(), b = p[1].get<double>();
                if (a > b) std::swap(a, b);
                cfg.scene.pairs_deg.emplace_back(a, b);
            }
        const std::string amp = s.value("amplitude_mode", "drawn");
        if (amp == "drawn")
            cfg.scene.amplitude_mode = AmplitudeMode::Drawn;
        else if (amp == "fixed_magnitude")
            cfg.scene.amplitude_mode = AmplitudeMode::FixedMagnitude;
        else
            throw InvalidArgument("scene.amplitude_mode must be drawn or fixed_magnitude");
        if (!cfg.scene.random_angles) {
            cfg.scene.k0 = static_cast<int>(cfg.scene.direct_deg.size());
            cfg.scene.k1 = static_cast<int>(cfg.scene.pairs_deg.size());
        }
    }

    if (j.contains("stop")) {
        const Json& s = j.at("stop");
        cfg.stop_h0.max_outer = s.value("max_outer", 10);
        cfg.stop_h0.refine_iters = s.value("refine_iters", 10);
        cfg.stop_h0.grid_step_deg = s.value("grid_step_deg", 2.0);
        cfg.stop_h0.eps1 = s.value("eps1", 0.4);
        cfg.stop_h1.max_outer = cfg.stop_h0.max_outer;
        cfg.stop_h1.refine_iters = cfg.stop_h0.refine_iters;
        cfg.stop_h1.grid_step_deg = cfg.stop_h0.grid_step_deg;
        cfg.stop_h1.eps2 = s.value("eps2", 0.4);
        cfg.stop_h1.delta_r = s.value("delta_r", 1.0);
        cfg.stop_h1.damping_retries = s.value("damping_retries", 3);
        cfg.stop_h1.mu0_factor = s.value("mu0_factor", 1e-2);
        if (s.contains("eps") && !s.at("eps").is_string()) {
            cfg.eps_auto = false;
            cfg.stop_h0.eps = s.at("eps").get<double>();
            cfg.stop_h1.eps = cfg.stop_h0.eps;
        }
    }

    cfg.pfa_target = j.value("pfa_target", 1e-2);
    cfg.trials_pfa = j.value("trials_pfa", 0L);
    cfg.trials_pd = j.value("trials_pd", 10000L);
    cfg.trials_rmse = j.value("trials_rmse", 200L);
    cfg.seed = j.value("seed", 1ULL);
    cfg.ideal_glrt = j.value("ideal_glrt", false);
    const std::string est = j.value("estimator", "cscd");
    if (est == "cscd")
        cfg.estimator = EstimatorKind::Cscd;
    else if (est == "grid-baseline")
        cfg.estimator = EstimatorKind::GridBaseline;
    else
        throw InvalidArgument("estimator must be cscd or grid-baseline");
    if (j.contains("rho1_sweep_db")) cfg.rho1_sweep_db = j.at("rho1_sweep_db").get<std::vector<double>>();
    if (j.contains("snr_sweep_db")) cfg.snr_sweep_db = j.at("snr_sweep_db").get<std::vector<double>>();
    if (j.contains("beamwidth_deg") && !j.at("beamwidth_deg").is_string())
        cfg.beamwidth_deg = j.at("beamwidth_deg").get<double>();
    cfg.threads = j.value("threads", 0);
    return cfg;
}

}  // namespace ghostid

// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: snapshot synthesis, angle estimation, ghost
// detection, closed-form theory curves, Monte Carlo studies and correlation
// profiles. Outputs are JSON and CSV files; failures exit nonzero with an
// error JSON on stdout.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ghostid/ghostid.hpp"

namespace fs = std::filesystem;
using namespace ghostid;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

StopConfigH0 stop_h0_from(double grid_step, double eps, double eps1) {
    StopConfigH0 s;
    s.grid_step_deg = grid_step;
    s.eps = eps;
    s.eps1 = eps1;
    return s;
}

StopConfigH1 stop_h1_from(double grid_step, double eps, double delta_r) {
    StopConfigH1 s;
    s.grid_step_deg = grid_step;
    s.eps = eps;
    s.delta_r = delta_r;
    return s;
}

int run_synth(const std::string& geometry_path, const std::string& scene_path, std::uint64_t seed,
              const std::string& out, const std::string& truth_out, bool draw_amplitudes) {
    const ArrayGeometry geom = geometry_from_json(read_json_file(geometry_path));
    Scene scene = scene_from_json(read_json_file(scene_path));
    Rng rng(seed);
    if (draw_amplitudes) randomize_scene_amplitudes(scene, rng);
    const Snapshot snap = synthesize(geom, scene, rng, seed);
    write_text_file(out, snapshot_to_csv(snap));
    if (!truth_out.empty()) write_text_file(truth_out, scene_to_json(scene).dump(2) + "\n");
    std::cout << Json{{"status", "ok"}, {"snapshot", out}, {"elements", snap.z.size()}}.dump() << "\n";
    return 0;
}

int run_estimate(const std::string& hypothesis, const std::string& geometry_path,
                 const std::string& snapshot_path, const std::string& estimator, double grid_step,
                 double eps, double sigma2, double eps1, double delta_r, const std::string& out) {
    const ArrayGeometry geom = geometry_from_json(read_json_file(geometry_path));
    std::ifstream is(snapshot_path);
    if (!is) throw InvalidArgument("cannot open snapshot: " + snapshot_path);
    const CVec z = snapshot_from_csv(is);
    if (z.size() != geom.virtual_size())
        throw InvalidArgument("snapshot length does not match the geometry's virtual size");
    const double eps_eff = eps >= 0.0 ? eps : StopConfigH0::default_eps(geom, sigma2);
    Json result;
    if (hypothesis == "h0") {
        const StopConfigH0 cfg = stop_h0_from(grid_step, eps_eff, eps1);
        const EstimateH0 est = estimator == "cscd" ? cscd_h0(geom, z, cfg) : omp_h0(geom, z, cfg);
        result = estimate_to_json(est);
    } else if (hypothesis == "h1") {
        const StopConfigH1 cfg = stop_h1_from(grid_step, eps_eff, delta_r);
        const EstimateH1 est = estimator == "cscd" ? cscd_h1(geom, z, cfg) : gomp_h1(geom, z, cfg);
        result = estimate_to_json(est);
    } else {
        throw InvalidArgument("--hypothesis must be h0 or h1");
    }
    if (out.empty())
        std::cout << result.dump(2) << "\n";
    else {
        write_text_file(out, result.dump(2) + "\n");
        std::cout << Json{{"status", "ok"}, {"estimate", out}}.dump() << "\n";
    }
    return 0;
}

int run_detect(const std::string& geometry_path, const std::string& snapshot_path, double pfa_target,
               const std::string& estimator, double grid_step, double eps, double sigma2,
               const std::string& out) {
    const ArrayGeometry geom = geometry_from_json(read_json_file(geometry_path));
    std::ifstream is(snapshot_path);
    if (!is) throw InvalidArgument("cannot open snapshot: " + snapshot_path);
    const CVec z = snapshot_from_csv(is);
    const double eps_eff = eps >= 0.0 ? eps : StopConfigH0::default_eps(geom, sigma2);
    const StopConfigH0 s0 = stop_h0_from(grid_step, eps_eff, 0.4);
    StopConfigH1 s1 = stop_h1_from(grid_step, eps_eff, 1.0);
    const bool refined = estimator == "cscd";
    if (!refined) s1.eps2 = 0.0;  // the plain group pursuit has no improvement margin
    const EstimateH0 est0 = refined ? cscd_h0(geom, z, s0) : omp_h0(geom, z, s0);
    const EstimateH1 est1 = refined ? cscd_h1(geom, z, s1) : gomp_h1(geom, z, s1);
    const GlrtOutcome outcome = detect(geom, z, est0, est1, pfa_target);
    Json result = outcome_to_json(outcome);
    result["estimate_h0"] = estimate_to_json(est0);
    result["estimate_h1"] = estimate_to_json(est1);
    if (out.empty())
        std::cout << result.dump(2) << "\n";
    else {
        write_text_file(out, result.dump(2) + "\n");
        std::cout << Json{{"status", "ok"},
                          {"decision", outcome.ghost_detected ? "h1" : "h0"},
                          {"outcome", out}}
                         .dump()
                  << "\n";
    }
    return 0;
}

int run_theory(int m_virtual, int k0, int k1, double pfa_target, const std::string& out_dir) {
    TheoryModel model;
    model.m_virtual = m_virtual;
    model.k0 = k0;
    model.k1 = k1;
    model.validate();

    // Threshold sweep for the false-alarm curve.
    std::ostringstream pfa_csv;
    pfa_csv.precision(12);
    pfa_csv << "lambda_g,pfa\n";
    const double lambda_hi = threshold_for_pfa(1e-8, model);
    for (int i = 0; i <= 400; ++i) {
        const double lambda = 1.0 + (lambda_hi - 1.0) * i / 400.0;
        pfa_csv << lambda << "," << pfa(lambda, model) << "\n";
    }
    write_text_file(out_path(out_dir, "pfa_vs_threshold.csv"), pfa_csv.str());

    // Detection curve against pair SNR at the requested false-alarm level.
    const double lambda = threshold_for_pfa(pfa_target, model);
    std::ostringstream pd_csv;
    pd_csv.precision(12);
    pd_csv << "rho1_db,pd\n";
    for (double rho_db = -10.0; rho_db <= 30.0 + 1e-9; rho_db += 0.5) {
        TheoryModel m = model;
        m.rho1 = db_to_linear(rho_db);
        pd_csv << rho_db << "," << pd(lambda, m) << "\n";
    }
    write_text_file(out_path(out_dir, "pd_vs_rho1.csv"), pd_csv.str());
    std::cout << Json{{"status", "ok"},
                      {"threshold", lambda},
                      {"pfa_target", pfa_target},
                      {"out", out_dir}}
                     .dump()
              << "\n";
    return 0;
}

ExperimentConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                             std::optional<long> trials, std::optional<bool> ideal,
                             const std::string& estimator, std::optional<int> threads,
                             std::optional<double> pfa_target) {
    ExperimentConfig cfg = experiment_config_from_json(read_json_file(config_path));
    if (seed) cfg.seed = *seed;
    if (trials) {
        cfg.trials_pfa = *trials;
        cfg.trials_pd = *trials;
        cfg.trials_rmse = *trials;
    }
    if (ideal) cfg.ideal_glrt = *ideal;
    if (!estimator.empty())
        cfg.estimator = estimator == "cscd" ? EstimatorKind::Cscd : EstimatorKind::GridBaseline;
    if (threads) cfg.threads = *threads;
    if (pfa_target) cfg.pfa_target = *pfa_target;
    return cfg;
}

int run_mc(const std::string& kind, const ExperimentConfig& cfg, const std::string& out_dir,
           bool save_trials) {
    std::vector<TrialRecord> records;
    MetricsReport report;
    if (kind == "pfa")
        report = run_pfa_experiment(cfg, save_trials ? &records : nullptr);
    else if (kind == "pd")
        report = run_pd_experiment(cfg, save_trials ? &records : nullptr);
    else
        report = run_rmse_experiment(cfg, save_trials ? &records : nullptr);
    write_text_file(out_path(out_dir, kind + "_report.csv"), report.to_csv());
    write_text_file(out_path(out_dir, kind + "_report.json"), report.to_json().dump(2) + "\n");
    if (save_trials) {
        Json arr = Json::array();
        for (const auto& r : records) arr.push_back(trial_record_to_json(r));
        write_text_file(out_path(out_dir, kind + "_trials.json"), arr.dump() + "\n");
    }
    std::cout << Json{{"status", "ok"}, {"experiment", kind}, {"out", out_dir}}.dump() << "\n";
    return 0;
}

int run_profile(const std::string& geometry_path, double ref_dod, double ref_doa, double step,
                const std::string& out) {
    const ArrayGeometry geom = geometry_from_json(read_json_file(geometry_path));
    const auto profile = correlation_profile(geom, ref_dod, ref_doa, step);
    write_text_file(out, profile_to_csv(profile));
    std::cout << Json{{"status", "ok"}, {"profile", out}, {"points", profile.size()}}.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multipath ghost identification for colocated MIMO radar"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize a noisy virtual-array snapshot");
    std::string geometry_path, scene_path, out, truth_out;
    std::uint64_t seed = 1;
    bool draw_amps = false;
    synth->add_option("--geometry", geometry_path, "geometry JSON")->required();
    synth->add_option("--scene", scene_path, "scene JSON")->required();
    synth->add_option("--seed", seed, "random seed");
    synth->add_option("--out", out, "snapshot CSV path")->required();
    synth->add_option("--truth-out", truth_out, "write the realized scene JSON here");
    synth->add_flag("--draw-amplitudes", draw_amps, "draw amplitudes from the scene variances");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate path angles from a snapshot");
    std::string hypothesis = "h0", est_geometry, snapshot_path, estimator = "cscd", est_out;
    double grid_step = 2.0, eps = -1.0, sigma2 = 1.0, eps1 = 0.4, delta_r = 1.0;
    estimate->add_option("--hypothesis", hypothesis, "h0 or h1")->required();
    estimate->add_option("--geometry", est_geometry, "geometry JSON")->required();
    estimate->add_option("--snapshot", snapshot_path, "snapshot CSV")->required();
    estimate->add_option("--estimator", estimator, "cscd or grid-baseline");
    estimate->add_option("--grid-step", grid_step, "grid pitch in degrees");
    estimate->add_option("--eps", eps, "residual stop threshold; negative selects sqrt(sigma2 M)");
    estimate->add_option("--sigma2", sigma2, "noise variance for the default stop threshold");
    estimate->add_option("--eps1", eps1, "minimum improvement, direct-only stop rule");
    estimate->add_option("--delta-r", delta_r, "pair-vs-direct residual margin");
    estimate->add_option("--out", est_out, "estimate JSON path (stdout when omitted)");

    // detect
    auto* det = app.add_subcommand("detect", "run both estimators and the ratio test");
    std::string det_geometry, det_snapshot, det_estimator = "cscd", det_out;
    double det_pfa = 1e-3, det_grid = 2.0, det_eps = -1.0, det_sigma2 = 1.0;
    det->add_option("--geometry", det_geometry, "geometry JSON")->required();
    det->add_option("--snapshot", det_snapshot, "snapshot CSV")->required();
    det->add_option("--pfa", det_pfa, "nominal false-alarm probability");
    det->add_option("--estimator", det_estimator, "cscd or grid-baseline");
    det->add_option("--grid-step", det_grid, "grid pitch in degrees");
    det->add_option("--eps", det_eps, "residual stop threshold; negative selects sqrt(sigma2 M)");
    det->add_option("--sigma2", det_sigma2, "noise variance for the default stop threshold");
    det->add_option("--out", det_out, "outcome JSON path (stdout when omitted)");

    // theory
    auto* theory = app.add_subcommand("theory", "closed-form false-alarm and detection curves");
    int m_virtual = 48, k0 = 1, k1 = 1;
    double theory_pfa = 1e-3;
    std::string theory_out = ".";
    theory->add_option("--m-virtual", m_virtual, "virtual array size");
    theory->add_option("--k0", k0, "direct path count");
    theory->add_option("--k1", k1, "first-order pair count");
    theory->add_option("--pfa", theory_pfa, "false-alarm level for the detection curve");
    theory->add_option("--out", theory_out, "output directory");

    // mc with nested subcommands
    auto* mc = app.add_subcommand("mc", "Monte Carlo studies");
    mc->require_subcommand(1);
    std::string mc_config, mc_out = ".", mc_estimator;
    std::uint64_t mc_seed = 0;
    bool mc_seed_set = false, mc_ideal = false, mc_save_trials = false;
    long mc_trials = 0;
    int mc_threads = -1;
    double mc_pfa = 0.0;
    for (const char* kind : {"pfa", "pd", "rmse"}) {
        auto* sub = mc->add_subcommand(kind);
        sub->add_option("--config", mc_config, "experiment config JSON")->required();
        sub->add_option("--out", mc_out, "output directory");
        sub->add_option("--seed", mc_seed, "seed override")->each([&](const std::string&) { mc_seed_set = true; });
        sub->add_option("--trials", mc_trials, "trial count override");
        sub->add_option("--pfa", mc_pfa, "nominal false-alarm override");
        sub->add_option("--estimator", mc_estimator, "cscd or grid-baseline");
        sub->add_option("--threads", mc_threads, "worker threads (0 = hardware)");
        sub->add_flag("--ideal-glrt", mc_ideal, "use true angle sets instead of estimators");
        sub->add_flag("--save-trials", mc_save_trials, "persist per-trial records");
    }

    // profile
    auto* profile = app.add_subcommand("profile", "correlation profile of a reference column");
    std::string prof_geometry, prof_out = "profile.csv";
    double ref_dod = 10.0, ref_doa = 10.0, prof_step = 0.1;
    profile->add_option("--geometry", prof_geometry, "geometry JSON")->required();
    profile->add_option("--ref-dod", ref_dod, "reference departure angle (deg)");
    profile->add_option("--ref-doa", ref_doa, "reference arrival angle (deg)");
    profile->add_option("--step", prof_step, "scan step (deg)");
    profile->add_option("--out", prof_out, "profile CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return run_synth(geometry_path, scene_path, seed, out, truth_out, draw_amps);
        if (*estimate)
            return run_estimate(hypothesis, est_geometry, snapshot_path, estimator, grid_step, eps, sigma2,
                                eps1, delta_r, est_out);
        if (*det)
            return run_detect(det_geometry, det_snapshot, det_pfa, det_estimator, det_grid, det_eps,
                              det_sigma2, det_out);
        if (*theory) return run_theory(m_virtual, k0, k1, theory_pfa, theory_out);
        if (*mc) {
            const std::string kind = mc->get_subcommands().front()->get_name();
            const ExperimentConfig cfg = load_config(
                mc_config, mc_seed_set ? std::optional<std::uint64_t>(mc_seed) : std::nullopt,
                mc_trials > 0 ? std::optional<long>(mc_trials) : std::nullopt,
                mc_ideal ? std::optional<bool>(true) : std::nullopt, mc_estimator,
                mc_threads >= 0 ? std::optional<int>(mc_threads) : std::nullopt,
                mc_pfa > 0.0 ? std::optional<double>(mc_pfa) : std::nullopt);
            return run_mc(kind, cfg, mc_out, mc_save_trials);
        }
        if (*profile) return run_profile(prof_geometry, ref_dod, ref_doa, prof_step, prof_out);
    } catch (const std::exception& e) {
        std::cout << Json{{"error", Json{{"message", e.what()}, {"type", "runtime"}}}}.dump() << "\n";
        return 1;
    }
    return 0;
}

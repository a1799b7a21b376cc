// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth scene description and synthesis of noisy virtual-array
// snapshots: a sum of direct columns, reciprocal first-order pair columns and
// circular white Gaussian noise.
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ghostid/array.hpp"
#include "ghostid/common.hpp"
#include "ghostid/rng.hpp"

namespace ghostid {

struct DirectPath {
    double theta_deg = 0.0;
    Complex alpha{0.0, 0.0};
};

// Reciprocal first-order reflection: one bounce on departure, one on arrival.
// Stored canonically with dod < doa; beta1 rides the a_T(dod) (x) a_R(doa)
// column and beta2 the reversed one, so canonicalization swaps amplitudes
// together with the angles.
struct FirstOrderPair {
    double dod_deg = 0.0;
    double doa_deg = 0.0;
    Complex beta1{0.0, 0.0};
    Complex beta2{0.0, 0.0};

    static FirstOrderPair make(double dod_deg, double doa_deg, Complex beta1 = {0.0, 0.0},
                               Complex beta2 = {0.0, 0.0}) {
        if (dod_deg == doa_deg)
            throw DegeneratePair("first-order pair requires dod != doa, got " + std::to_string(dod_deg));
        FirstOrderPair p;
        if (dod_deg < doa_deg) {
            p.dod_deg = dod_deg;
            p.doa_deg = doa_deg;
            p.beta1 = beta1;
            p.beta2 = beta2;
        } else {
            p.dod_deg = doa_deg;
            p.doa_deg = dod_deg;
            p.beta1 = beta2;
            p.beta2 = beta1;
        }
        return p;
    }
};

struct Scene {
    std::vector<DirectPath> direct;
    std::vector<FirstOrderPair> pairs;
    double sigma2 = 1.0;        // noise variance; 0 allowed for noiseless tests
    double sigma_alpha2 = 0.0;  // direct amplitude variance
    double sigma_beta2 = 0.0;   // first-order amplitude variance

    int k0() const { return static_cast<int>(direct.size()); }
    int k1() const { return static_cast<int>(pairs.size()); }
    int unknown_columns() const { return k0() + 2 * k1(); }

    double rho0() const { return sigma2 > 0.0 ? sigma_alpha2 / sigma2 : 0.0; }
    double rho1() const { return sigma2 > 0.0 ? sigma_beta2 / sigma2 : 0.0; }

    void validate(const ArrayGeometry& geom) const {
        if (sigma2 < 0.0) throw InvalidArgument("sigma2 must be >= 0");
        if (sigma_alpha2 < 0.0 || sigma_beta2 < 0.0) throw InvalidArgument("amplitude variances must be >= 0");
        for (const auto& d : direct) check_angle_deg(d.theta_deg, "direct theta");
        for (const auto& p : pairs) {
            check_angle_deg(p.dod_deg, "pair dod");
            check_angle_deg(p.doa_deg, "pair doa");
            if (p.dod_deg >= p.doa_deg) throw InvalidArgument("pair must be stored with dod < doa");
        }
        if (unknown_columns() >= geom.virtual_size())
            throw SceneTooDense("scene has " + std::to_string(unknown_columns()) +
                                " unknown columns but the virtual array only has " +
                                std::to_string(geom.virtual_size()) + " elements");
    }

    ResponseMatrix response(const ArrayGeometry& geom) const {
        std::vector<double> dir;
        std::vector<std::pair<double, double>> prs;
        for (const auto& d : direct) dir.push_back(d.theta_deg);
        for (const auto& p : pairs) prs.emplace_back(p.dod_deg, p.doa_deg);
        return build_response(geom, dir, prs);
    }

    // Amplitudes stacked to match the response column layout.
    CVec amplitude_vector() const {
        CVec b(unknown_columns());
        const int n1 = k1();
        for (int k = 0; k < n1; ++k) {
            b[k] = pairs[k].beta1;
            b[n1 + k] = pairs[k].beta2;
        }
        for (int k = 0; k < k0(); ++k) b[2 * n1 + k] = direct[k].alpha;
        return b;
    }
};

// i.i.d. circular complex Gaussian amplitude draws for k0 direct paths and
// k1 pairs (2 k1 entries, beta1 block then beta2 block).
inline std::pair<std::vector<Complex>, std::vector<Complex>> draw_scene_amplitudes(Rng& rng, int k0, int k1,
                                                                                   double sigma_alpha2,
                                                                                   double sigma_beta2) {
    if (sigma_alpha2 < 0.0 || sigma_beta2 < 0.0) throw InvalidArgument("variances must be >= 0");
    std::vector<Complex> alpha(k0);
    std::vector<Complex> beta(2 * k1);
    for (auto& a : alpha) a = rng.next_cnormal(sigma_alpha2);
    for (auto& b : beta) b = rng.next_cnormal(sigma_beta2);
    return {alpha, beta};
}

// Replace the scene's amplitudes by fresh draws from its variances.
inline void randomize_scene_amplitudes(Scene& scene, Rng& rng) {
    auto [alpha, beta] = draw_scene_amplitudes(rng, scene.k0(), scene.k1(), scene.sigma_alpha2, scene.sigma_beta2);
    for (int k = 0; k < scene.k0(); ++k) scene.direct[k].alpha = alpha[k];
    for (int k = 0; k < scene.k1(); ++k) {
        scene.pairs[k].beta1 = beta[k];
        scene.pairs[k].beta2 = beta[scene.k1() + k];
    }
}

// Amplitudes with the exact magnitude implied by the variances and a uniform
// random phase; useful when a study needs the SNR pinned rather than faded.
inline void fixed_magnitude_scene_amplitudes(Scene& scene, Rng& rng) {
    const double mag_a = std::sqrt(scene.sigma_alpha2);
    const double mag_b = std::sqrt(scene.sigma_beta2);
    auto phase = [&rng] { return 2.0 * kPi * rng.next_uniform(); };
    for (auto& d : scene.direct) d.alpha = std::polar(mag_a, phase());
    for (auto& p : scene.pairs) {
        p.beta1 = std::polar(mag_b, phase());
        p.beta2 = std::polar(mag_b, phase());
    }
}

struct Snapshot {
    CVec z;
    std::optional<Scene> truth;
    std::uint64_t seed = 0;
};

// One noisy virtual-array observation of the scene. Deterministic given the
// rng state; the caller owns stream derivation.
inline Snapshot synthesize(const ArrayGeometry& geom, const Scene& scene, Rng& rng,
                           std::uint64_t seed_label = 0) {
    geom.validate();
    scene.validate(geom);
    const int m = geom.virtual_size();
    CVec z = CVec::Zero(m);
    for (const auto& p : scene.pairs) {
        z += p.beta1 * virtual_steering(geom, p.dod_deg, p.doa_deg);
        z += p.beta2 * virtual_steering(geom, p.doa_deg, p.dod_deg);
    }
    for (const auto& d : scene.direct) z += d.alpha * virtual_steering(geom, d.theta_deg, d.theta_deg);
    if (scene.sigma2 > 0.0) z += rng.next_cnormal_vector(m, scene.sigma2);
    Snapshot snap;
    snap.z = std::move(z);
    snap.truth = scene;
    snap.seed = seed_label;
    return snap;
}

}  // namespace ghostid

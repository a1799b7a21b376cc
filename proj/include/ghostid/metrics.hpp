// SPDX-License-Identifier: Apache-2.0
//
// Scoring of estimates against ground truth: beamwidth-gated path matching,
// RMSE conditioned on identified paths, and binomial confidence intervals
// for empirical probabilities.
#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "ghostid/common.hpp"
#include "ghostid/scene.hpp"

namespace ghostid {

struct MatchedDirect {
    double truth_deg = 0.0;
    bool identified = false;
    double error_deg = 0.0;  // valid when identified
};

struct MatchedPair {
    double truth_dod_deg = 0.0;
    double truth_doa_deg = 0.0;
    bool identified = false;
    double error_dod_deg = 0.0;
    double error_doa_deg = 0.0;
};

struct MatchResult {
    std::vector<MatchedDirect> direct;
    std::vector<MatchedPair> pairs;

    bool all_identified() const {
        for (const auto& d : direct)
            if (!d.identified) return false;
        for (const auto& p : pairs)
            if (!p.identified) return false;
        return true;
    }

    int identified_direct() const {
        int n = 0;
        for (const auto& d : direct) n += d.identified;
        return n;
    }
    int identified_pairs() const {
        int n = 0;
        for (const auto& p : pairs) n += p.identified;
        return n;
    }
};

namespace detail {

// Greedy nearest-neighbor assignment: repeatedly match the globally closest
// (truth, estimate) pair among the unmatched ones.
template <typename DistFn>
inline std::vector<int> greedy_assign(int n_truth, int n_est, const DistFn& dist) {
    std::vector<int> match(n_truth, -1);
    std::vector<bool> truth_used(n_truth, false), est_used(n_est, false);
    const int rounds = std::min(n_truth, n_est);
    for (int r = 0; r < rounds; ++r) {
        double best = std::numeric_limits<double>::infinity();
        int bt = -1, be = -1;
        for (int t = 0; t < n_truth; ++t) {
            if (truth_used[t]) continue;
            for (int e = 0; e < n_est; ++e) {
                if (est_used[e]) continue;
                const double d = dist(t, e);
                if (d < best) {
                    best = d;
                    bt = t;
                    be = e;
                }
            }
        }
        if (bt < 0) break;
        truth_used[bt] = true;
        est_used[be] = true;
        match[bt] = be;
    }
    return match;
}

}  // namespace detail

// Match estimated paths to true paths of the same type. A true path counts
// as identified when its matched estimate errs by less than the beamwidth in
// every angle coordinate; pairs compare in canonical (dod < doa) order,
// which honors their reciprocal symmetry.
inline MatchResult match_paths(const Scene& truth, const std::vector<double>& est_direct_deg,
                               const std::vector<std::pair<double, double>>& est_pairs_deg,
                               double beamwidth_deg) {
    if (!(beamwidth_deg > 0.0)) throw InvalidArgument("beamwidth must be > 0");
    MatchResult result;

    result.direct.resize(truth.direct.size());
    for (size_t t = 0; t < truth.direct.size(); ++t) result.direct[t].truth_deg = truth.direct[t].theta_deg;
    const auto dist_direct = [&](int t, int e) {
        return std::abs(truth.direct[t].theta_deg - est_direct_deg[e]);
    };
    const auto dmatch = detail::greedy_assign(static_cast<int>(truth.direct.size()),
                                              static_cast<int>(est_direct_deg.size()), dist_direct);
    for (size_t t = 0; t < truth.direct.size(); ++t) {
        if (dmatch[t] < 0) continue;
        const double err = dist_direct(static_cast<int>(t), dmatch[t]);
        if (err < beamwidth_deg) {
            result.direct[t].identified = true;
            result.direct[t].error_deg = truth.direct[t].theta_deg - est_direct_deg[dmatch[t]];
        }
    }

    // Canonicalize estimated pairs before comparing coordinates.
    std::vector<std::pair<double, double>> est_pairs = est_pairs_deg;
    for (auto& p : est_pairs)
        if (p.first > p.second) std::swap(p.first, p.second);
    result.pairs.resize(truth.pairs.size());
    for (size_t t = 0; t < truth.pairs.size(); ++t) {
        result.pairs[t].truth_dod_deg = truth.pairs[t].dod_deg;
        result.pairs[t].truth_doa_deg = truth.pairs[t].doa_deg;
    }
    const auto dist_pair = [&](int t, int e) {
        return std::max(std::abs(truth.pairs[t].dod_deg - est_pairs[e].first),
                        std::abs(truth.pairs[t].doa_deg - est_pairs[e].second));
    };
    const auto pmatch = detail::greedy_assign(static_cast<int>(truth.pairs.size()),
                                              static_cast<int>(est_pairs.size()), dist_pair);
    for (size_t t = 0; t < truth.pairs.size(); ++t) {
        if (pmatch[t] < 0) continue;
        if (dist_pair(static_cast<int>(t), pmatch[t]) < beamwidth_deg) {
            result.pairs[t].identified = true;
            result.pairs[t].error_dod_deg = truth.pairs[t].dod_deg - est_pairs[pmatch[t]].first;
            result.pairs[t].error_doa_deg = truth.pairs[t].doa_deg - est_pairs[pmatch[t]].second;
        }
    }
    return result;
}

struct RmseMetrics {
    double rmse0_deg = 0.0;
    double rmse1_deg = 0.0;
    bool any_direct_identified = false;
    bool any_pair_identified = false;
};

// RMSE conditioned on identification. Per run the squared errors of the
// identified paths are averaged (pairs pool both coordinates with a 1/2
// factor), runs are averaged under the square root, and runs without any
// identified path of a type do not enter that type's average.
inline RmseMetrics rmse_metrics(const std::vector<MatchResult>& records) {
    RmseMetrics out;
    double sum0 = 0.0, sum1 = 0.0;
    long runs0 = 0, runs1 = 0;
    for (const auto& rec : records) {
        double s0 = 0.0;
        int n0 = 0;
        for (const auto& d : rec.direct)
            if (d.identified) {
                s0 += d.error_deg * d.error_deg;
                ++n0;
            }
        if (n0 > 0) {
            sum0 += s0 / n0;
            ++runs0;
        }
        double s1 = 0.0;
        int n1 = 0;
        for (const auto& p : rec.pairs)
            if (p.identified) {
                s1 += p.error_dod_deg * p.error_dod_deg + p.error_doa_deg * p.error_doa_deg;
                ++n1;
            }
        if (n1 > 0) {
            sum1 += s1 / (2.0 * n1);
            ++runs1;
        }
    }
    out.any_direct_identified = runs0 > 0;
    out.any_pair_identified = runs1 > 0;
    out.rmse0_deg = runs0 > 0 ? std::sqrt(sum0 / runs0) : std::numeric_limits<double>::quiet_NaN();
    out.rmse1_deg = runs1 > 0 ? std::sqrt(sum1 / runs1) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

struct BinomialCi {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// 95% Wilson score interval.
inline BinomialCi binomial_ci(long successes, long trials) {
    if (trials <= 0) throw InvalidArgument("binomial_ci requires trials > 0");
    constexpr double zq = 1.959963984540054;  // 97.5% normal quantile
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = zq * zq;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = zq * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace ghostid

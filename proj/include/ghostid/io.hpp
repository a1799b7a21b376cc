// SPDX-License-Identifier: Apache-2.0
//
// File formats: geometry and scene JSON, snapshot CSV, estimate and decision
// JSON. Angles are serialized in degrees, complex numbers as [re, im].
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ghostid/estimate_h0.hpp"
#include "ghostid/estimate_h1.hpp"
#include "ghostid/glrt.hpp"
#include "ghostid/scene.hpp"

namespace ghostid {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

namespace detail {
inline Json complex_to_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }
inline Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("complex values must be [re, im]");
    return Complex(j[0].get<double>(), j[1].get<double>());
}
}  // namespace detail

inline Json geometry_to_json(const ArrayGeometry& geom) {
    return Json{{"tx_positions_m", geom.tx_positions_m},
                {"rx_positions_m", geom.rx_positions_m},
                {"wavelength_m", geom.wavelength_m}};
}

inline ArrayGeometry geometry_from_json(const Json& j) {
    ArrayGeometry geom;
    geom.tx_positions_m = j.at("tx_positions_m").get<std::vector<double>>();
    geom.rx_positions_m = j.at("rx_positions_m").get<std::vector<double>>();
    geom.wavelength_m = j.at("wavelength_m").get<double>();
    geom.validate();
    return geom;
}

inline Json scene_to_json(const Scene& scene) {
    Json direct = Json::array();
    for (const auto& d : scene.direct)
        direct.push_back(Json{{"theta_deg", d.theta_deg}, {"alpha", detail::complex_to_json(d.alpha)}});
    Json pairs = Json::array();
    for (const auto& p : scene.pairs)
        pairs.push_back(Json{{"dod_deg", p.dod_deg},
                             {"doa_deg", p.doa_deg},
                             {"beta1", detail::complex_to_json(p.beta1)},
                             {"beta2", detail::complex_to_json(p.beta2)}});
    return Json{{"direct", direct},
                {"pairs", pairs},
                {"sigma2", scene.sigma2},
                {"sigma_alpha2", scene.sigma_alpha2},
                {"sigma_beta2", scene.sigma_beta2}};
}

inline Scene scene_from_json(const Json& j) {
    Scene scene;
    scene.sigma2 = j.value("sigma2", 1.0);
    scene.sigma_alpha2 = j.value("sigma_alpha2", 0.0);
    scene.sigma_beta2 = j.value("sigma_beta2", 0.0);
    for (const auto& d : j.value("direct", Json::array())) {
        DirectPath p;
        p.theta_deg = d.at("theta_deg").get<double>();
        if (d.contains("alpha")) p.alpha = detail::complex_from_json(d.at("alpha"));
        scene.direct.push_back(p);
    }
    for (const auto& q : j.value("pairs", Json::array())) {
        const Complex b1 = q.contains("beta1") ? detail::complex_from_json(q.at("beta1")) : Complex{};
        const Complex b2 = q.contains("beta2") ? detail::complex_from_json(q.at("beta2")) : Complex{};
        scene.pairs.push_back(
            FirstOrderPair::make(q.at("dod_deg").get<double>(), q.at("doa_deg").get<double>(), b1, b2));
    }
    return scene;
}

// Snapshot CSV: header then one row per virtual element.
inline std::string snapshot_to_csv(const Snapshot& snap) {
    std::ostringstream os;
    os.precision(17);
    os << "index,re,im\n";
    for (Eigen::Index i = 0; i < snap.z.size(); ++i)
        os << i << "," << snap.z[i].real() << "," << snap.z[i].imag() << "\n";
    return os.str();
}

inline CVec snapshot_from_csv(std::istream& is) {
    std::string line;
    std::vector<Complex> values;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("index", 0) == 0) continue;  // header row
        }
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw InvalidArgument("snapshot CSV: bad row: " + line);
        const long idx = std::stol(cell);
        if (idx != static_cast<long>(values.size()))
            throw InvalidArgument("snapshot CSV: rows must be indexed consecutively from 0");
        if (!std::getline(row, cell, ',')) throw InvalidArgument("snapshot CSV: missing re column");
        const double re = std::stod(cell);
        if (!std::getline(row, cell, ',')) throw InvalidArgument("snapshot CSV: missing im column");
        const double im = std::stod(cell);
        values.emplace_back(re, im);
    }
    if (values.empty()) throw InvalidArgument("snapshot CSV: no rows");
    CVec z(static_cast<Eigen::Index>(values.size()));
    for (size_t i = 0; i < values.size(); ++i) z[static_cast<Eigen::Index>(i)] = values[i];
    return z;
}

inline Json estimate_to_json(const EstimateH0& est) {
    Json alpha = Json::array();
    for (Eigen::Index i = 0; i < est.alpha.size(); ++i) alpha.push_back(detail::complex_to_json(est.alpha[i]));
    return Json{{"k0", est.k0},
                {"theta0_deg", est.theta0_deg},
                {"alpha", alpha},
                {"residual_norm", est.residual_norm},
                {"iterations", est.trace.size()}};
}

inline Json estimate_to_json(const EstimateH1& est) {
    Json beta = Json::array();
    for (Eigen::Index i = 0; i < est.beta.size(); ++i) beta.push_back(detail::complex_to_json(est.beta[i]));
    return Json{{"k0", est.k0},           {"k1", est.k1},
                {"theta1_deg", est.angles.theta1}, {"phi1_deg", est.angles.phi1},
                {"theta0_deg", est.angles.theta0}, {"beta", beta},
                {"residual_norm", est.residual_norm}};
}

inline Json outcome_to_json(const GlrtOutcome& out) {
    return Json{{"statistic", out.statistic},
                {"threshold", out.threshold},
                {"decision", out.ghost_detected ? "h1" : "h0"},
                {"excess", out.excess},
                {"model", Json{{"m_virtual", out.model.m_virtual},
                               {"k0", out.model.k0},
                               {"k1", out.model.k1},
                               {"rho1", out.model.rho1}}}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open for writing: " + path);
    os << content;
    if (!os) throw InvalidArgument("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open for reading: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline Json read_json_file(const std::string& path) {
    return Json::parse(read_text_file(path));
}

}  // namespace ghostid

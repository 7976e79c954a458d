#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "regime/error.hpp"

namespace regime::jsonio {

using nlohmann::json;

/// NaN is stored as null so documents stay valid JSON.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json vector(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

inline Eigen::VectorXd vector_from(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(j[i]);
    return v;
}

/// Row-major nested arrays.
inline json matrix(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector(m.row(i).transpose()));
    return rows;
}

inline Eigen::MatrixXd matrix_from(const json& j) {
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != c) {
            throw data_error("MalformedArtifact", "ragged matrix in JSON document");
        }
        m.row(i) = vector_from(j[static_cast<std::size_t>(i)]).transpose();
    }
    return m;
}

inline void write_file(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("WriteFailed", "cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

inline json read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("FileNotFound", "cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw data_error("MalformedArtifact", path.string() + ": " + e.what());
    }
}

}  // namespace regime::jsonio

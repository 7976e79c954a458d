#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "regime/error.hpp"
#include "regime/panel.hpp"
#include "regime/pca.hpp"
#include "regime/random.hpp"
#include "regime/synth.hpp"

namespace testing_helpers {

inline oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
    oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

/// T x S panel of correlated normal draws on consecutive business days.
inline regime::Panel random_panel(int t, int s, std::uint64_t seed) {
    regime::Rng rng(seed);
    Eigen::MatrixXd mix(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) mix(i, j) = rng.normal();
    Eigen::MatrixXd raw(t, s);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < s; ++j) raw(i, j) = rng.normal();
    Eigen::MatrixXd v = raw * mix * 0.01;
    std::vector<std::string> names;
    for (int j = 0; j < s; ++j) names.push_back("c" + std::to_string(j));
    return regime::Panel(regime::synth::business_days(regime::Date{2001, 1, 1}, t), v, names);
}

inline regime::ScoreMatrix scores_of(const Eigen::MatrixXd& x) {
    return {regime::synth::business_days(regime::Date{2001, 1, 1}, static_cast<int>(x.rows())), x};
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / ("regime_test_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

private:
    std::filesystem::path path_;
};

/// Code of the regime::Error thrown by `fn`, or "" when nothing is thrown.
template <class Fn>
std::string error_code(Fn&& fn) {
    try {
        fn();
    } catch (const regime::Error& e) {
        return e.code();
    }
    return "";
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_helpers

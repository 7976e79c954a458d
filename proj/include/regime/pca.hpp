#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "regime/csv.hpp"
#include "regime/json_util.hpp"
#include "regime/panel.hpp"

namespace regime {

/// Principal directions of a standardized panel.
///
/// `loadings` is S x S with orthonormal columns ordered by descending
/// eigenvalue. Each column is sign-normalized so that its largest-magnitude
/// entry is positive, which makes fits reproducible across SVD backends.
struct PcaModel {
    std::vector<std::string> names;
    Standardizer standardizer;
    Eigen::MatrixXd loadings;
    Eigen::VectorXd eigenvalues;
    int n_selected = 0;
};

/// Date-indexed component scores (T x d).
struct ScoreMatrix {
    std::vector<Date> dates;
    Eigen::MatrixXd scores;

    Eigen::Index rows() const { return scores.rows(); }
    Eigen::Index dims() const { return scores.cols(); }
};

struct VarianceRow {
    int dimension;
    double eigenvalue;
    double pct;
    double cumulative_pct;
};

struct Contribution {
    std::string name;
    double contribution;
};

inline constexpr double kNullEigenvalue = 1e-12;

/// Fits by SVD of the (already standardized) data matrix; eigenvalue_j = sigma_j^2 / (T - 1).
/// `n_selected` starts at S; narrow it with select_components.
inline PcaModel fit_pca(const Panel& standardized, Standardizer standardizer = {}) {
    const Eigen::Index t = standardized.rows();
    const Eigen::Index s = standardized.cols();
    if (t < 2) throw data_error("TooFewRows", "PCA needs at least two rows");
    if (s < 1) throw data_error("NoColumns", "PCA needs at least one column");
    if (!standardized.values().allFinite()) throw numerical_error("NonFiniteInput", "PCA input contains NaN or inf");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(standardized.values(), Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw numerical_error("SvdFailed", "singular value decomposition did not converge");

    const Eigen::VectorXd& sv = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(s);
    for (Eigen::Index j = 0; j < sv.size(); ++j) raw(j) = sv(j) * sv(j) / static_cast<double>(t - 1);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return raw(a) > raw(b); });

    PcaModel model;
    model.names = standardized.names();
    model.standardizer = std::move(standardizer);
    model.loadings.resize(s, s);
    model.eigenvalues.resize(s);
    for (Eigen::Index k = 0; k < s; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        double ev = raw(src);
        model.eigenvalues(k) = ev < kNullEigenvalue ? 0.0 : ev;
        Eigen::VectorXd col = v.col(src);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < s; ++i) {
            if (std::abs(col(i)) > std::abs(col(arg))) arg = i;
        }
        if (col(arg) < 0) col = -col;
        model.loadings.col(k) = col;
    }
    model.n_selected = static_cast<int>(s);
    return model;
}

/// Smallest d whose leading eigenvalues carry at least `threshold` of the variance.
inline int select_components(const PcaModel& model, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw config_error("BadThreshold", "variance threshold must lie in (0, 1]");
    }
    const double total = model.eigenvalues.sum();
    double running = 0.0;
    for (Eigen::Index j = 0; j < model.eigenvalues.size(); ++j) {
        running += model.eigenvalues(j);
        if (running / total >= threshold - 1e-12) return static_cast<int>(j + 1);
    }
    return static_cast<int>(model.eigenvalues.size());
}

inline ScoreMatrix transform(const PcaModel& model, const Panel& standardized, int d) {
    check_columns(model.names, standardized.names());
    if (d < 1 || d > model.loadings.cols()) {
        throw config_error("DimensionOutOfRange", "d=" + std::to_string(d) + " not in [1, " +
                                                      std::to_string(model.loadings.cols()) + "]");
    }
    return {standardized.dates(), standardized.values() * model.loadings.leftCols(d)};
}

/// Uses the model's own standardizer and n_selected.
inline ScoreMatrix transform_raw(const PcaModel& model, const Panel& panel) {
    return transform(model, apply_standardizer(model.standardizer, panel), model.n_selected);
}

inline std::vector<VarianceRow> explained_variance_table(const PcaModel& model) {
    std::vector<VarianceRow> rows;
    const double total = model.eigenvalues.sum();
    double running = 0.0;
    for (Eigen::Index j = 0; j < model.eigenvalues.size(); ++j) {
        running += model.eigenvalues(j);
        rows.push_back({static_cast<int>(j + 1), model.eigenvalues(j), 100.0 * model.eigenvalues(j) / total,
                        100.0 * running / total});
    }
    return rows;
}

/// Columns with the largest squared loading on `dimension` (1-based).
inline std::vector<Contribution> top_loadings(const PcaModel& model, int dimension, int n) {
    if (dimension < 1 || dimension > model.loadings.cols()) {
        throw config_error("DimensionOutOfRange", "dimension " + std::to_string(dimension));
    }
    const Eigen::VectorXd sq = model.loadings.col(dimension - 1).array().square();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(sq.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sq(a) > sq(b); });
    std::vector<Contribution> out;
    for (int i = 0; i < n && i < static_cast<int>(order.size()); ++i) {
        auto idx = order[static_cast<std::size_t>(i)];
        out.push_back({model.names[static_cast<std::size_t>(idx)], sq(idx)});
    }
    return out;
}

inline void write_variance_table(const std::vector<VarianceRow>& rows, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"dimension", "eigenvalue", "pct_variance", "cumulative_pct_variance"});
    for (const auto& r : rows) {
        w.row({std::to_string(r.dimension), csv::format_double(r.eigenvalue), csv::format_double(r.pct),
               csv::format_double(r.cumulative_pct)});
    }
}

inline void write_scores(const ScoreMatrix& s, const std::filesystem::path& path) {
    csv::Writer w(path);
    csv::Row header{"date"};
    for (Eigen::Index j = 0; j < s.dims(); ++j) header.push_back("PC" + std::to_string(j + 1));
    w.row(header);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        csv::Row r{s.dates[static_cast<std::size_t>(i)].to_string()};
        for (Eigen::Index j = 0; j < s.dims(); ++j) r.push_back(csv::format_double(s.scores(i, j)));
        w.row(r);
    }
}

inline ScoreMatrix read_scores(const std::filesystem::path& path) {
    Panel p = load_panel(path, "date");
    if (p.missing_count() > 0) throw data_error("MissingValues", path.string());
    return {p.dates(), p.values()};
}

inline void to_json(nlohmann::json& j, const PcaModel& m) {
    j = nlohmann::json{{"names", m.names},
                       {"means", jsonio::vector(m.standardizer.means)},
                       {"stds", jsonio::vector(m.standardizer.stds)},
                       {"eigenvalues", jsonio::vector(m.eigenvalues)},
                       {"loadings", jsonio::matrix(m.loadings)},
                       {"n_selected", m.n_selected}};
}

inline void from_json(const nlohmann::json& j, PcaModel& m) {
    m.names = j.at("names").get<std::vector<std::string>>();
    m.standardizer = {m.names, jsonio::vector_from(j.at("means")), jsonio::vector_from(j.at("stds"))};
    m.eigenvalues = jsonio::vector_from(j.at("eigenvalues"));
    m.loadings = jsonio::matrix_from(j.at("loadings"));
    m.n_selected = j.at("n_selected").get<int>();
}

}  // namespace regime

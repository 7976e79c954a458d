#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regime/csv.hpp"
#include "regime/error.hpp"
#include "regime/json_util.hpp"
#include "regime/parallel.hpp"
#include "regime/pca.hpp"
#include "regime/random.hpp"

namespace regime {

using Labels = std::vector<int>;

/// k-means fit over component scores.
///
/// Regime ids are canonical: regime 1 is the most populous training cluster,
/// then descending by size, ties broken by lexicographic centroid order.
/// `centroids.row(r - 1)` belongs to regime r.
struct ClusterModel {
    int k = 0;
    Eigen::MatrixXd centroids;
    Labels train_labels;
    double inertia = 0.0;
    int iterations = 0;
    std::map<int, double> silhouette_by_k;
};

struct KMeansOptions {
    int n_init = 100;
    int max_iter = 300;
    std::uint64_t seed = 0;
    int threads = 1;
};

namespace detail {

inline double squared_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

/// Nearest centroid per row; ties go to the lower centroid index.
inline double assign_nearest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int best = 0;
        double best_d = squared_distance(x, i, centroids, 0);
        for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
            double d = squared_distance(x, i, centroids, c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        inertia += best_d;
    }
    return inertia;
}

inline std::size_t count_distinct_rows(const Eigen::MatrixXd& x) {
    std::set<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index j = 0; j < x.cols(); ++j) r[static_cast<std::size_t>(j)] = x(i, j);
        rows.insert(std::move(r));
    }
    return rows.size();
}

struct LloydRun {
    Eigen::MatrixXd centroids;
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
};

/// One Lloyd run from random distinct rows. Inertia is checked to be
/// nonincreasing across iterations.
inline LloydRun lloyd(const Eigen::MatrixXd& x, int k, int max_iter, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(x.rows());
    Rng rng(seed);
    LloydRun run;
    run.centroids.resize(k, x.cols());
    auto init = rng.sample_without_replacement(n, static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) run.centroids.row(c) = x.row(static_cast<Eigen::Index>(init[static_cast<std::size_t>(c)]));

    run.labels.assign(n, -1);
    std::vector<int> next(n, 0);
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= max_iter; ++iter) {
        double inertia = assign_nearest(x, run.centroids, next);

        // Empty-cluster repair: move the centroid onto the point farthest from its own centroid.
        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (int l : next) ++sizes[static_cast<std::size_t>(l)];
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(next[i])] < 2) continue;
                double d = squared_distance(x, static_cast<Eigen::Index>(i), run.centroids, next[i]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far_d < 0.0) throw numerical_error("EmptyCluster", "cannot repair empty cluster");
            --sizes[static_cast<std::size_t>(next[far])];
            run.centroids.row(c) = x.row(static_cast<Eigen::Index>(far));
            next[far] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            inertia -= far_d;
        }

        if (inertia > previous * (1.0 + 1e-10) + 1e-300) {
            throw numerical_error("InertiaIncreased", "Lloyd iteration " + std::to_string(iter) + " raised inertia");
        }
        previous = inertia;
        run.iterations = iter;
        const bool stable = next == run.labels;
        run.labels = next;
        run.inertia = inertia;
        if (stable || iter == max_iter) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        for (std::size_t i = 0; i < n; ++i) sums.row(run.labels[i]) += x.row(static_cast<Eigen::Index>(i));
        for (int c = 0; c < k; ++c) run.centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
    return run;
}

}  // namespace detail

/// Best-of-`n_init` Lloyd k-means (lowest inertia, ties to the earliest restart).
inline ClusterModel kmeans(const ScoreMatrix& scores, int k, const KMeansOptions& opts = {}) {
    const Eigen::MatrixXd& x = scores.scores;
    if (k < 2) throw config_error("BadK", "k must be at least 2");
    if (opts.n_init < 1) throw config_error("BadNInit", "n_init must be at least 1");
    if (x.rows() < k) throw data_error("TooFewPoints", "k=" + std::to_string(k) + " exceeds " + std::to_string(x.rows()) + " points");
    if (!x.allFinite()) throw numerical_error("NonFiniteInput", "scores contain NaN or inf");
    if (detail::count_distinct_rows(x) < static_cast<std::size_t>(k)) {
        throw data_error("TooFewDistinctPoints", "k=" + std::to_string(k) + " exceeds number of distinct points");
    }

    std::vector<detail::LloydRun> runs(static_cast<std::size_t>(opts.n_init));
    parallel_for(runs.size(), opts.threads, [&](std::size_t r) {
        runs[r] = detail::lloyd(x, k, opts.max_iter, derive_seed(opts.seed, r));
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].inertia < runs[best].inertia) best = r;
    }
    const auto& run = runs[best];

    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : run.labels) ++sizes[static_cast<std::size_t>(l)];
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (sizes[static_cast<std::size_t>(a)] != sizes[static_cast<std::size_t>(b)]) {
            return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (run.centroids(a, j) != run.centroids(b, j)) return run.centroids(a, j) < run.centroids(b, j);
        }
        return a < b;
    });
    std::vector<int> regime_of(static_cast<std::size_t>(k));
    ClusterModel model;
    model.k = k;
    model.centroids.resize(k, x.cols());
    for (int r = 0; r < k; ++r) {
        regime_of[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r + 1;
        model.centroids.row(r) = run.centroids.row(order[static_cast<std::size_t>(r)]);
    }
    model.train_labels.reserve(run.labels.size());
    for (int l : run.labels) model.train_labels.push_back(regime_of[static_cast<std::size_t>(l)]);
    model.inertia = run.inertia;
    model.iterations = run.iterations;
    return model;
}

/// Mean over points of (b - a) / max(a, b) with euclidean distance.
/// Points in singleton clusters contribute 0.
inline double average_silhouette(const ScoreMatrix& scores, const Labels& labels, int threads = 1) {
    const Eigen::MatrixXd& x = scores.scores;
    const auto n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n) throw data_error("LengthMismatch", "labels and scores differ in length");
    std::map<int, int> index;
    for (int l : labels) index.emplace(l, 0);
    if (index.size() < 2) throw data_error("SingleCluster", "silhouette needs at least two clusters");
    int next = 0;
    for (auto& [label, idx] : index) idx = next++;
    const auto k = index.size();
    std::vector<std::size_t> dense(n);
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        dense[i] = static_cast<std::size_t>(index[labels[i]]);
        counts[dense[i]] += 1.0;
    }

    std::vector<double> s(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        const std::size_t own = dense[i];
        if (counts[own] < 2.0) return;
        std::vector<double> sums(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[dense[j]] += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
        }
        const double a = sums[own] / (counts[own] - 1.0);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) b = std::min(b, sums[c] / counts[c]);
        }
        const double m = std::max(a, b);
        s[i] = m > 0.0 ? (b - a) / m : 0.0;
    });
    double total = 0.0;
    for (double v : s) total += v;
    return total / static_cast<double>(n);
}

struct KSelection {
    int best_k = 0;
    std::map<int, double> silhouette_by_k;
    ClusterModel model;
};

/// Fits k-means for every k in [k_min, k_max] and keeps the k with the
/// highest average silhouette (ties toward smaller k). k = 1 is never a
/// candidate because its silhouette is undefined.
inline KSelection select_k(const ScoreMatrix& scores, int k_min, int k_max, const KMeansOptions& opts = {}) {
    if (k_min < 2 || k_min > k_max) throw config_error("BadKRange", "need 2 <= k_min <= k_max");
    if (k_max > scores.rows() - 1) throw config_error("BadKRange", "k_max must be below the number of points");
    KSelection out;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        KMeansOptions o = opts;
        o.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(k) << 32);
        ClusterModel m = kmeans(scores, k, o);
        double width = average_silhouette(scores, m.train_labels, opts.threads);
        out.silhouette_by_k[k] = width;
        if (width > best) {
            best = width;
            out.best_k = k;
            out.model = std::move(m);
        }
    }
    out.model.silhouette_by_k = out.silhouette_by_k;
    return out;
}

/// Nearest canonical centroid; ties go to the lower regime id.
inline Labels assign(const ClusterModel& model, const ScoreMatrix& scores) {
    if (scores.dims() != model.centroids.cols()) {
        throw data_error("DimensionMismatch", "scores have " + std::to_string(scores.dims()) + " columns, centroids " +
                                                  std::to_string(model.centroids.cols()));
    }
    std::vector<int> idx(static_cast<std::size_t>(scores.rows()));
    detail::assign_nearest(scores.scores, model.centroids, idx);
    for (int& v : idx) v += 1;
    return idx;
}

inline void write_silhouette(const std::map<int, double>& by_k, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"k", "average_silhouette_width"});
    for (const auto& [k, width] : by_k) w.row({std::to_string(k), csv::format_double(width)});
}

inline void write_labels(const std::vector<Date>& dates, const Labels& labels, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"date", "regime"});
    for (std::size_t i = 0; i < labels.size(); ++i) w.row({dates[i].to_string(), std::to_string(labels[i])});
}

inline std::pair<std::vector<Date>, Labels> read_labels(const std::filesystem::path& path, const std::string& column = "regime") {
    Panel p = load_panel(path, "date");
    auto it = std::find(p.names().begin(), p.names().end(), column);
    if (it == p.names().end()) throw data_error("MissingColumn", "no '" + column + "' column in " + path.string());
    const auto j = static_cast<Eigen::Index>(it - p.names().begin());
    Labels labels;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double v = p.values()(i, j);
        if (std::isnan(v) || v != std::round(v)) throw data_error("BadLabel", path.string());
        labels.push_back(static_cast<int>(v));
    }
    return {p.dates(), labels};
}

inline void to_json(nlohmann::json& j, const ClusterModel& m) {
    nlohmann::json sil = nlohmann::json::array();
    for (const auto& [k, w] : m.silhouette_by_k) sil.push_back({{"k", k}, {"width", jsonio::number(w)}});
    j = nlohmann::json{{"k", m.k},
                       {"centroids", jsonio::matrix(m.centroids)},
                       {"train_labels", m.train_labels},
                       {"inertia", m.inertia},
                       {"iterations", m.iterations},
                       {"silhouette_by_k", sil}};
}

inline void from_json(const nlohmann::json& j, ClusterModel& m) {
    m.k = j.at("k").get<int>();
    m.centroids = jsonio::matrix_from(j.at("centroids"));
    m.train_labels = j.at("train_labels").get<Labels>();
    m.inertia = j.at("inertia").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.silhouette_by_k.clear();
    for (const auto& e : j.at("silhouette_by_k")) m.silhouette_by_k[e.at("k").get<int>()] = jsonio::number_from(e.at("width"));
}

}  // namespace regime

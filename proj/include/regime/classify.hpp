#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "regime/cluster.hpp"
#include "regime/csv.hpp"
#include "regime/error.hpp"
#include "regime/json_util.hpp"
#include "regime/parallel.hpp"
#include "regime/random.hpp"

namespace regime {

enum class ClassifierKind { Lda, Qda, Logistic, Tree, AdaBoost, NaiveBayes };

inline constexpr std::array<ClassifierKind, 6> kAllKinds{ClassifierKind::Lda,  ClassifierKind::Qda,
                                                         ClassifierKind::Logistic, ClassifierKind::Tree,
                                                         ClassifierKind::AdaBoost, ClassifierKind::NaiveBayes};

/// Stable identifier used in configs and file names.
inline std::string_view kind_id(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::Lda: return "LDA";
        case ClassifierKind::Qda: return "QDA";
        case ClassifierKind::Logistic: return "LOGISTIC";
        case ClassifierKind::Tree: return "TREE";
        case ClassifierKind::AdaBoost: return "ADABOOST";
        case ClassifierKind::NaiveBayes: return "NAIVE_BAYES";
    }
    return "?";
}

/// Row label used in report tables.
inline std::string_view kind_display(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::Lda: return "LDA";
        case ClassifierKind::Qda: return "QDA";
        case ClassifierKind::Logistic: return "Logistic Regression";
        case ClassifierKind::Tree: return "Decision Tree";
        case ClassifierKind::AdaBoost: return "AdaBoost";
        case ClassifierKind::NaiveBayes: return "Naive Bayes";
    }
    return "?";
}

inline ClassifierKind parse_kind(std::string_view id) {
    for (auto k : kAllKinds) {
        if (kind_id(k) == id) return k;
    }
    throw config_error("UnknownClassifier", "unknown classifier kind '" + std::string(id) + "'");
}

struct HyperParams {
    double ridge = 1e-6;  // LDA/QDA: lambda = ridge * trace(cov) / d
    int logistic_max_iter = 100;
    double logistic_tol = 1e-8;
    int tree_max_depth = 8;
    int tree_min_leaf = 5;
    int boost_rounds = 100;
    double nb_var_floor = 1e-9;
};

namespace model {

struct Lda {
    Eigen::VectorXd mean1, mean2;
    Eigen::MatrixXd covariance;  // pooled ML estimate plus ridge
    Eigen::VectorXd direction;   // covariance^-1 (mean2 - mean1)
    double intercept = 0.0;
};

struct Qda {
    std::array<Eigen::VectorXd, 2> means;
    std::array<Eigen::MatrixXd, 2> precisions;
    std::array<double, 2> log_dets{};
    std::array<double, 2> log_priors{};
};

/// Intercept first.
struct Logistic {
    Eigen::VectorXd beta;
    int iterations = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p2 = 0.0;  // fraction of regime 2 among training rows reaching the node
    int count = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

/// Votes +polarity when x[feature] > threshold, -polarity otherwise.
/// feature == -1 is a constant vote of `polarity`.
struct Stump {
    int feature = -1;
    double threshold = 0.0;
    int polarity = 1;
    double alpha = 0.0;
    double weighted_error = 0.0;
};

struct AdaBoost {
    std::vector<Stump> stumps;
};

struct NaiveBayes {
    std::array<Eigen::VectorXd, 2> means;
    std::array<Eigen::VectorXd, 2> variances;
    std::array<double, 2> log_priors{};
};

}  // namespace model

using ModelParams = std::variant<model::Lda, model::Qda, model::Logistic, model::Tree, model::AdaBoost, model::NaiveBayes>;

/// Binary regime classifier. Regime 2 is the positive class; predict_score
/// grows with how regime-2-like a row is, and predict is exactly
/// `score > decision_threshold ? 2 : 1`.
struct RegimeClassifier {
    ClassifierKind kind = ClassifierKind::Lda;
    int n_features = 0;
    std::array<int, 2> classes{1, 2};
    ModelParams params;

    double decision_threshold() const { return kind == ClassifierKind::Tree ? 0.5 : 0.0; }
};

namespace detail {

struct BinaryData {
    const Eigen::MatrixXd& x;
    std::vector<int> y;  // 0 = regime 1, 1 = regime 2
    std::array<int, 2> counts{0, 0};
};

inline BinaryData check_binary(const Eigen::MatrixXd& x, const Labels& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw data_error("LengthMismatch", "labels and scores differ in length");
    if (!x.allFinite()) throw numerical_error("NonFiniteInput", "classifier input contains NaN or inf");
    BinaryData d{x, {}, {0, 0}};
    d.y.reserve(labels.size());
    for (int l : labels) {
        if (l != 1 && l != 2) {
            throw data_error("NotBinary", "classifiers support regimes {1, 2} only; got regime " + std::to_string(l));
        }
        d.y.push_back(l - 1);
        ++d.counts[static_cast<std::size_t>(l - 1)];
    }
    if (d.counts[0] == 0 || d.counts[1] == 0) throw data_error("SingleClass", "training labels contain a single regime");
    if (d.counts[0] < 2 || d.counts[1] < 2) {
        throw data_error("TooFewSamples", "each regime needs at least two samples (got " + std::to_string(d.counts[0]) + ", " +
                                              std::to_string(d.counts[1]) + ")");
    }
    return d;
}

inline std::array<Eigen::VectorXd, 2> class_means(const BinaryData& d) {
    std::array<Eigen::VectorXd, 2> m{Eigen::VectorXd::Zero(d.x.cols()), Eigen::VectorXd::Zero(d.x.cols())};
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) m[static_cast<std::size_t>(d.y[static_cast<std::size_t>(i)])] += d.x.row(i).transpose();
    for (std::size_t c = 0; c < 2; ++c) m[c] /= static_cast<double>(d.counts[c]);
    return m;
}

inline Eigen::MatrixXd scatter(const BinaryData& d, const Eigen::VectorXd& mean, int cls) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d.x.cols(), d.x.cols());
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        if (d.y[static_cast<std::size_t>(i)] != cls) continue;
        Eigen::VectorXd c = d.x.row(i).transpose() - mean;
        s.noalias() += c * c.transpose();
    }
    return s;
}

inline void add_ridge(Eigen::MatrixXd& cov, double ridge, double fallback_trace) {
    const double d = static_cast<double>(cov.rows());
    double trace = cov.trace();
    if (!(trace > 0.0)) trace = fallback_trace;
    cov.diagonal().array() += ridge * trace / d;
}

inline model::Lda fit_lda(const BinaryData& d, const HyperParams& hp) {
    auto means = class_means(d);
    Eigen::MatrixXd cov = (scatter(d, means[0], 0) + scatter(d, means[1], 1)) / static_cast<double>(d.x.rows());
    add_ridge(cov, hp.ridge, 1.0);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw numerical_error("SingularCovariance", "LDA pooled covariance is singular after ridge");
    model::Lda m;
    m.mean1 = means[0];
    m.mean2 = means[1];
    m.covariance = cov;
    m.direction = llt.solve(means[1] - means[0]);
    m.intercept = -0.5 * (means[0] + means[1]).dot(m.direction) +
                  std::log(static_cast<double>(d.counts[1]) / static_cast<double>(d.counts[0]));
    return m;
}

inline model::Qda fit_qda(const BinaryData& d, const HyperParams& hp) {
    auto means = class_means(d);
    Eigen::MatrixXd pooled = (scatter(d, means[0], 0) + scatter(d, means[1], 1)) / static_cast<double>(d.x.rows());
    model::Qda m;
    const double n = static_cast<double>(d.x.rows());
    for (std::size_t c = 0; c < 2; ++c) {
        Eigen::MatrixXd cov = scatter(d, means[c], static_cast<int>(c)) / static_cast<double>(d.counts[c]);
        add_ridge(cov, hp.ridge, pooled.trace());
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw numerical_error("SingularCovariance", "QDA covariance of regime " + std::to_string(c + 1) + " is singular after ridge");
        }
        m.means[c] = means[c];
        m.precisions[c] = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
        m.log_dets[c] = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        m.log_priors[c] = std::log(static_cast<double>(d.counts[c]) / n);
    }
    return m;
}

inline double sigmoid(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Binomial deviance, evaluated stably from the linear predictor.
inline double logistic_deviance(const Eigen::VectorXd& eta, const std::vector<int>& y) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double z = y[static_cast<std::size_t>(i)] ? -eta(i) : eta(i);
        dev += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return 2.0 * dev;
}

/// Unpenalized maximum likelihood by iteratively reweighted least squares.
/// Converges on max |step| < tol or on a relative deviance change below tol
/// (the latter also terminates perfectly separated fits, where the deviance
/// decays to zero while the parameters keep growing).
inline model::Logistic fit_logistic(const BinaryData& d, const HyperParams& hp) {
    const Eigen::Index n = d.x.rows();
    const Eigen::Index p = d.x.cols() + 1;
    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    design.rightCols(p - 1) = d.x;
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv(i) = d.y[static_cast<std::size_t>(i)];

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double dev = logistic_deviance(design * beta, d.y);
    for (int iter = 1; iter <= hp.logistic_max_iter; ++iter) {
        Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd prob = eta.unaryExpr([](double z) { return sigmoid(z); });
        Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
        Eigen::VectorXd grad = design.transpose() * (yv - prob);

        Eigen::VectorXd step;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-300) {
            step = ldlt.solve(grad);
        }
        if (step.size() == 0 || !step.allFinite()) {
            step = hessian.completeOrthogonalDecomposition().solve(grad);
        }
        if (!step.allFinite()) throw numerical_error("LogisticNonConvergence", "non-finite Newton step at iteration " + std::to_string(iter));

        double next_dev = logistic_deviance(design * (beta + step), d.y);
        for (int half = 0; half < 30 && next_dev > dev * (1.0 + 1e-12); ++half) {
            step *= 0.5;
            next_dev = logistic_deviance(design * (beta + step), d.y);
        }
        beta += step;
        const bool small_step = step.cwiseAbs().maxCoeff() < hp.logistic_tol;
        const bool flat = std::abs(dev - next_dev) / (std::abs(next_dev) + 0.1) < hp.logistic_tol;
        dev = next_dev;
        if (small_step || flat) return {beta, iter};
    }
    throw numerical_error("LogisticNonConvergence",
                          "IRLS did not converge after " + std::to_string(hp.logistic_max_iter) + " iterations");
}

inline double gini(double n2, double n) {
    if (n <= 0) return 0.0;
    double p = n2 / n;
    return 2.0 * p * (1.0 - p);
}

/// CART with Gini impurity. Splits send x[f] <= threshold left; candidate
/// thresholds are midpoints between consecutive distinct values. Ties in gain
/// keep the earliest (feature, threshold).
inline model::Tree fit_tree(const BinaryData& d, const HyperParams& hp) {
    model::Tree tree;
    const Eigen::Index nf = d.x.cols();
    const int min_leaf = std::max(1, hp.tree_min_leaf);

    struct Frame {
        std::vector<Eigen::Index> rows;
        int depth;
        int node;
    };
    std::vector<Frame> stack;
    std::vector<Eigen::Index> all(static_cast<std::size_t>(d.x.rows()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    tree.nodes.emplace_back();
    stack.push_back({std::move(all), 0, 0});

    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const double n = static_cast<double>(f.rows.size());
        double n2 = 0;
        for (auto i : f.rows) n2 += d.y[static_cast<std::size_t>(i)];
        auto& node = tree.nodes[static_cast<std::size_t>(f.node)];
        node.p2 = n2 / n;
        node.count = static_cast<int>(f.rows.size());
        if (f.depth >= hp.tree_max_depth || n2 == 0 || n2 == n || n < 2.0 * min_leaf) continue;

        const double parent = gini(n2, n);
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<Eigen::Index> sorted = f.rows;
        for (Eigen::Index j = 0; j < nf; ++j) {
            std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return d.x(a, j) < d.x(b, j); });
            double left2 = 0;
            for (std::size_t pos = 1; pos < sorted.size(); ++pos) {
                left2 += d.y[static_cast<std::size_t>(sorted[pos - 1])];
                const double lo = d.x(sorted[pos - 1], j);
                const double hi = d.x(sorted[pos], j);
                if (!(lo < hi)) continue;
                const double nl = static_cast<double>(pos);
                const double nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double child = (nl * gini(left2, nl) + nr * gini(n2 - left2, nr)) / n;
                const double gain = parent - child;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = static_cast<int>(j);
                    best_threshold = lo + (hi - lo) / 2.0;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<Eigen::Index> left, right;
        for (auto i : f.rows) (d.x(i, best_feature) <= best_threshold ? left : right).push_back(i);
        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& parent_node = tree.nodes[static_cast<std::size_t>(f.node)];
        parent_node.feature = best_feature;
        parent_node.threshold = best_threshold;
        parent_node.left = left_id;
        parent_node.right = left_id + 1;
        stack.push_back({std::move(right), f.depth + 1, left_id + 1});
        stack.push_back({std::move(left), f.depth + 1, left_id});
    }
    return tree;
}

inline double stump_vote(const model::Stump& s, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (s.feature < 0) return s.polarity;
    return x(s.feature) > s.threshold ? s.polarity : -s.polarity;
}

/// Discrete AdaBoost over depth-1 stumps chosen by minimum weighted error.
/// Stops early on a perfect stump or when no stump beats chance.
inline model::AdaBoost fit_adaboost(const BinaryData& d, const HyperParams& hp) {
    const Eigen::Index n = d.x.rows();
    const Eigen::Index nf = d.x.cols();
    std::vector<double> sign(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sign[static_cast<std::size_t>(i)] = d.y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));

    std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(nf));
    for (Eigen::Index j = 0; j < nf; ++j) {
        auto& o = order[static_cast<std::size_t>(j)];
        o.resize(static_cast<std::size_t>(n));
        std::iota(o.begin(), o.end(), Eigen::Index{0});
        std::stable_sort(o.begin(), o.end(), [&](auto a, auto b) { return d.x(a, j) < d.x(b, j); });
    }

    constexpr double kMinError = 1e-10;
    model::AdaBoost boost;
    for (int round = 0; round < hp.boost_rounds; ++round) {
        double total_pos = 0;
        double total_neg = 0;
        for (Eigen::Index i = 0; i < n; ++i) (sign[static_cast<std::size_t>(i)] > 0 ? total_pos : total_neg) += w[static_cast<std::size_t>(i)];

        // Constant stump first so that ties prefer it.
        model::Stump best;
        best.feature = -1;
        best.polarity = total_pos >= total_neg ? 1 : -1;
        best.weighted_error = std::min(total_pos, total_neg);
        for (Eigen::Index j = 0; j < nf; ++j) {
            const auto& o = order[static_cast<std::size_t>(j)];
            double left_pos = 0;
            double left_neg = 0;
            for (std::size_t pos = 1; pos < o.size(); ++pos) {
                const auto i = static_cast<std::size_t>(o[pos - 1]);
                (sign[i] > 0 ? left_pos : left_neg) += w[i];
                const double lo = d.x(o[pos - 1], j);
                const double hi = d.x(o[pos], j);
                if (!(lo < hi)) continue;
                // polarity +1: right votes regime 2, left votes regime 1
                const double err_plus = left_pos + (total_neg - left_neg);
                const double err_minus = left_neg + (total_pos - left_pos);
                const double err = std::min(err_plus, err_minus);
                if (err < best.weighted_error - 1e-15) {
                    best.feature = static_cast<int>(j);
                    best.threshold = lo + (hi - lo) / 2.0;
                    best.polarity = err_plus <= err_minus ? 1 : -1;
                    best.weighted_error = err;
                }
            }
        }
        const double err = best.weighted_error / (total_pos + total_neg);
        best.weighted_error = err;
        if (err >= 0.5) break;
        const double clamped = std::max(err, kMinError);
        best.alpha = 0.5 * std::log((1.0 - clamped) / clamped);
        boost.stumps.push_back(best);
        if (err <= kMinError) break;

        double z = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& wi = w[static_cast<std::size_t>(i)];
            wi *= std::exp(-best.alpha * sign[static_cast<std::size_t>(i)] * stump_vote(best, d.x.row(i)));
            z += wi;
        }
        for (auto& wi : w) wi /= z;
    }
    if (boost.stumps.empty()) throw numerical_error("NoWeakLearner", "AdaBoost found no stump better than chance");
    return boost;
}

inline model::NaiveBayes fit_naive_bayes(const BinaryData& d, const HyperParams& hp) {
    auto means = class_means(d);
    model::NaiveBayes m;
    const double n = static_cast<double>(d.x.rows());
    for (std::size_t c = 0; c < 2; ++c) {
        Eigen::VectorXd var = Eigen::VectorXd::Zero(d.x.cols());
        for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
            if (d.y[static_cast<std::size_t>(i)] != static_cast<int>(c)) continue;
            var.array() += (d.x.row(i).transpose() - means[c]).array().square();
        }
        var /= static_cast<double>(d.counts[c]);
        m.means[c] = means[c];
        m.variances[c] = var.cwiseMax(hp.nb_var_floor);
        m.log_priors[c] = std::log(static_cast<double>(d.counts[c]) / n);
    }
    return m;
}

inline double gaussian_log_joint(const model::NaiveBayes& m, std::size_t c, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    double s = m.log_priors[c];
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double v = m.variances[c](j);
        const double z = x(j) - m.means[c](j);
        s += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * z * z / v;
    }
    return s;
}

inline double score_row(const RegimeClassifier& clf, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, model::Lda>) {
                return x.dot(m.direction.transpose()) + m.intercept;
            } else if constexpr (std::is_same_v<T, model::Qda>) {
                std::array<double, 2> ll{};
                for (std::size_t c = 0; c < 2; ++c) {
                    Eigen::VectorXd z = x.transpose() - m.means[c];
                    ll[c] = -0.5 * (z.dot(m.precisions[c] * z) + m.log_dets[c]) + m.log_priors[c];
                }
                return ll[1] - ll[0];
            } else if constexpr (std::is_same_v<T, model::Logistic>) {
                return m.beta(0) + x.dot(m.beta.tail(m.beta.size() - 1).transpose());
            } else if constexpr (std::is_same_v<T, model::Tree>) {
                std::size_t node = 0;
                while (m.nodes[node].feature >= 0) {
                    const auto& nd = m.nodes[node];
                    node = static_cast<std::size_t>(x(nd.feature) <= nd.threshold ? nd.left : nd.right);
                }
                return m.nodes[node].p2;
            } else if constexpr (std::is_same_v<T, model::AdaBoost>) {
                double s = 0.0;
                for (const auto& st : m.stumps) s += st.alpha * stump_vote(st, x);
                return s;
            } else {
                return gaussian_log_joint(m, 1, x) - gaussian_log_joint(m, 0, x);
            }
        },
        clf.params);
}

inline void check_features(const RegimeClassifier& clf, const Eigen::MatrixXd& x) {
    if (x.cols() != clf.n_features) {
        throw data_error("DimensionMismatch", "classifier expects " + std::to_string(clf.n_features) + " features, got " +
                                                  std::to_string(x.cols()));
    }
}

}  // namespace detail

inline RegimeClassifier fit(ClassifierKind kind, const Eigen::MatrixXd& x, const Labels& labels, const HyperParams& hp = {}) {
    auto data = detail::check_binary(x, labels);
    RegimeClassifier clf;
    clf.kind = kind;
    clf.n_features = static_cast<int>(x.cols());
    switch (kind) {
        case ClassifierKind::Lda: clf.params = detail::fit_lda(data, hp); break;
        case ClassifierKind::Qda: clf.params = detail::fit_qda(data, hp); break;
        case ClassifierKind::Logistic: clf.params = detail::fit_logistic(data, hp); break;
        case ClassifierKind::Tree: clf.params = detail::fit_tree(data, hp); break;
        case ClassifierKind::AdaBoost: clf.params = detail::fit_adaboost(data, hp); break;
        case ClassifierKind::NaiveBayes: clf.params = detail::fit_naive_bayes(data, hp); break;
    }
    return clf;
}

inline RegimeClassifier fit(ClassifierKind kind, const ScoreMatrix& scores, const Labels& labels, const HyperParams& hp = {}) {
    return fit(kind, scores.scores, labels, hp);
}

inline std::vector<double> predict_score(const RegimeClassifier& clf, const Eigen::MatrixXd& x) {
    detail::check_features(clf, x);
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = detail::score_row(clf, x.row(i));
    return out;
}

inline Labels predict(const RegimeClassifier& clf, const Eigen::MatrixXd& x) {
    auto scores = predict_score(clf, x);
    Labels out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s > clf.decision_threshold() ? clf.classes[1] : clf.classes[0]);
    return out;
}

inline std::vector<double> predict_score(const RegimeClassifier& clf, const ScoreMatrix& s) { return predict_score(clf, s.scores); }
inline Labels predict(const RegimeClassifier& clf, const ScoreMatrix& s) { return predict(clf, s.scores); }

/// Naive Bayes posterior probability of regime 2.
inline double naive_bayes_posterior(const RegimeClassifier& clf, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const auto* m = std::get_if<model::NaiveBayes>(&clf.params);
    if (!m) throw config_error("WrongKind", "posterior requires a naive Bayes model");
    return detail::sigmoid(detail::gaussian_log_joint(*m, 1, x) - detail::gaussian_log_joint(*m, 0, x));
}

// ---------------------------------------------------------------------------
// Metrics. Regime 2 is the positive class.

namespace detail {
inline std::array<std::size_t, 2> class_counts(const Labels& truth) {
    std::array<std::size_t, 2> c{0, 0};
    for (int t : truth) {
        if (t != 1 && t != 2) throw data_error("NotBinary", "metric labels must be regimes 1 or 2");
        ++c[static_cast<std::size_t>(t - 1)];
    }
    return c;
}
}  // namespace detail

/// Mann-Whitney rank statistic; tied scores get half credit.
inline double metric_auc(const std::vector<double>& scores, const Labels& truth) {
    if (scores.size() != truth.size() || scores.empty()) throw data_error("LengthMismatch", "AUC inputs differ in length or are empty");
    auto counts = detail::class_counts(truth);
    if (counts[0] == 0 || counts[1] == 0) throw data_error("OneClass", "AUC needs both regimes present");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (truth[idx[t]] == 2) rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(counts[1]);
    const double nn = static_cast<double>(counts[0]);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double metric_accuracy(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw data_error("LengthMismatch", "accuracy inputs differ in length or are empty");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline double metric_f1(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw data_error("LengthMismatch", "F1 inputs differ in length or are empty");
    auto counts = detail::class_counts(truth);
    if (counts[0] == 0 || counts[1] == 0) throw data_error("OneClass", "F1 needs both regimes present");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == 2;
        const bool t = truth[i] == 2;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

// ---------------------------------------------------------------------------
// Cross-validation.

enum class CvMode { Block, Shuffled };

struct FoldMetrics {
    double auc;  // NaN when the validation fold holds a single regime
    double accuracy;
    double f1;  // NaN when the validation fold holds a single regime
};

struct CvReport {
    ClassifierKind kind;
    double auc;
    double accuracy;
    double f1;
    std::vector<FoldMetrics> per_fold;
};

/// Block mode validates on contiguous time slices; shuffled mode permutes rows
/// with `seed` first. AUC and F1 are averaged over folds where both regimes
/// appear in the validation slice.
inline CvReport cross_validate(ClassifierKind kind, const Eigen::MatrixXd& x, const Labels& labels, int folds,
                               CvMode mode = CvMode::Block, std::uint64_t seed = 0, const HyperParams& hp = {},
                               int threads = 1) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (folds < 2) throw config_error("BadFolds", "cross-validation needs at least 2 folds");
    if (static_cast<std::size_t>(folds) > n) throw data_error("TooFewRows", "more folds than rows");
    if (labels.size() != n) throw data_error("LengthMismatch", "labels and scores differ in length");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (mode == CvMode::Shuffled) {
        Rng rng(seed);
        rng.shuffle(order);
    }
    const auto nf = static_cast<std::size_t>(folds);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t p = f * n / nf; p < (f + 1) * n / nf; ++p) fold_of[order[p]] = f;
    }
    for (std::size_t f = 0; f < nf; ++f) {
        std::array<bool, 2> seen{false, false};
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] != f && (labels[i] == 1 || labels[i] == 2)) seen[static_cast<std::size_t>(labels[i] - 1)] = true;
        }
        if (!seen[0] || !seen[1]) {
            throw data_error("FoldMissingClass", "fold " + std::to_string(f + 1) + " training side lacks a regime");
        }
    }

    std::vector<FoldMetrics> per_fold(nf);
    parallel_for(nf, threads, [&](std::size_t f) {
        std::vector<Eigen::Index> tr, va;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
        Eigen::MatrixXd xtr = x(tr, Eigen::all);
        Eigen::MatrixXd xva = x(va, Eigen::all);
        Labels ytr, yva;
        for (auto i : tr) ytr.push_back(labels[static_cast<std::size_t>(i)]);
        for (auto i : va) yva.push_back(labels[static_cast<std::size_t>(i)]);
        auto clf = fit(kind, xtr, ytr, hp);
        auto s = predict_score(clf, xva);
        auto p = predict(clf, xva);
        auto counts = detail::class_counts(yva);
        const bool both = counts[0] > 0 && counts[1] > 0;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        per_fold[f] = {both ? metric_auc(s, yva) : nan, metric_accuracy(p, yva), both ? metric_f1(p, yva) : nan};
    });

    auto mean_defined = [&](auto field) {
        double sum = 0;
        int count = 0;
        for (const auto& fm : per_fold) {
            double v = fm.*field;
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
    };
    return {kind, mean_defined(&FoldMetrics::auc), mean_defined(&FoldMetrics::accuracy), mean_defined(&FoldMetrics::f1),
            std::move(per_fold)};
}

inline CvReport cross_validate(ClassifierKind kind, const ScoreMatrix& s, const Labels& labels, int folds,
                               CvMode mode = CvMode::Block, std::uint64_t seed = 0, const HyperParams& hp = {},
                               int threads = 1) {
    return cross_validate(kind, s.scores, labels, folds, mode, seed, hp, threads);
}

/// Table layout: model, AUC, accuracy, F1.
inline void write_cv_reports(const std::vector<CvReport>& reports, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"model", "auc", "accuracy", "f1"});
    for (const auto& r : reports) {
        w.row({std::string(kind_display(r.kind)), csv::format_fixed(r.auc, 4), csv::format_fixed(r.accuracy, 4),
               csv::format_fixed(r.f1, 4)});
    }
}

inline void to_json(nlohmann::json& j, const CvReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.per_fold) {
        folds.push_back({{"auc", jsonio::number(f.auc)}, {"accuracy", jsonio::number(f.accuracy)}, {"f1", jsonio::number(f.f1)}});
    }
    j = nlohmann::json{{"kind", kind_id(r.kind)},
                       {"auc", jsonio::number(r.auc)},
                       {"accuracy", jsonio::number(r.accuracy)},
                       {"f1", jsonio::number(r.f1)},
                       {"per_fold", folds}};
}

inline void from_json(const nlohmann::json& j, CvReport& r) {
    r.kind = parse_kind(j.at("kind").get<std::string>());
    r.auc = jsonio::number_from(j.at("auc"));
    r.accuracy = jsonio::number_from(j.at("accuracy"));
    r.f1 = jsonio::number_from(j.at("f1"));
    r.per_fold.clear();
    for (const auto& f : j.at("per_fold")) {
        r.per_fold.push_back({jsonio::number_from(f.at("auc")), jsonio::number_from(f.at("accuracy")), jsonio::number_from(f.at("f1"))});
    }
}

inline void to_json(nlohmann::json& j, const RegimeClassifier& c) {
    using jsonio::matrix;
    using jsonio::vector;
    nlohmann::json p;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, model::Lda>) {
                p = {{"mean1", vector(m.mean1)}, {"mean2", vector(m.mean2)}, {"covariance", matrix(m.covariance)},
                     {"direction", vector(m.direction)}, {"intercept", m.intercept}};
            } else if constexpr (std::is_same_v<T, model::Qda>) {
                p = {{"means", {vector(m.means[0]), vector(m.means[1])}},
                     {"precisions", {matrix(m.precisions[0]), matrix(m.precisions[1])}},
                     {"log_dets", m.log_dets},
                     {"log_priors", m.log_priors}};
            } else if constexpr (std::is_same_v<T, model::Logistic>) {
                p = {{"beta", vector(m.beta)}, {"iterations", m.iterations}};
            } else if constexpr (std::is_same_v<T, model::Tree>) {
                nlohmann::json nodes = nlohmann::json::array();
                for (const auto& nd : m.nodes) {
                    nodes.push_back({{"feature", nd.feature}, {"threshold", nd.threshold}, {"left", nd.left},
                                     {"right", nd.right}, {"p2", nd.p2}, {"count", nd.count}});
                }
                p = {{"nodes", nodes}};
            } else if constexpr (std::is_same_v<T, model::AdaBoost>) {
                nlohmann::json st = nlohmann::json::array();
                for (const auto& s : m.stumps) {
                    st.push_back({{"feature", s.feature}, {"threshold", s.threshold}, {"polarity", s.polarity},
                                  {"alpha", s.alpha}, {"weighted_error", s.weighted_error}});
                }
                p = {{"stumps", st}};
            } else {
                p = {{"means", {vector(m.means[0]), vector(m.means[1])}},
                     {"variances", {vector(m.variances[0]), vector(m.variances[1])}},
                     {"log_priors", m.log_priors}};
            }
        },
        c.params);
    j = nlohmann::json{{"kind", kind_id(c.kind)}, {"n_features", c.n_features}, {"classes", c.classes}, {"params", p}};
}

inline void from_json(const nlohmann::json& j, RegimeClassifier& c) {
    using jsonio::matrix_from;
    using jsonio::vector_from;
    c.kind = parse_kind(j.at("kind").get<std::string>());
    c.n_features = j.at("n_features").get<int>();
    c.classes = j.at("classes").get<std::array<int, 2>>();
    const auto& p = j.at("params");
    switch (c.kind) {
        case ClassifierKind::Lda: {
            model::Lda m{vector_from(p.at("mean1")), vector_from(p.at("mean2")), matrix_from(p.at("covariance")),
                         vector_from(p.at("direction")), p.at("intercept").get<double>()};
            c.params = std::move(m);
            break;
        }
        case ClassifierKind::Qda: {
            model::Qda m;
            for (std::size_t k = 0; k < 2; ++k) {
                m.means[k] = vector_from(p.at("means")[k]);
                m.precisions[k] = matrix_from(p.at("precisions")[k]);
            }
            m.log_dets = p.at("log_dets").get<std::array<double, 2>>();
            m.log_priors = p.at("log_priors").get<std::array<double, 2>>();
            c.params = std::move(m);
            break;
        }
        case ClassifierKind::Logistic:
            c.params = model::Logistic{vector_from(p.at("beta")), p.at("iterations").get<int>()};
            break;
        case ClassifierKind::Tree: {
            model::Tree m;
            for (const auto& nd : p.at("nodes")) {
                m.nodes.push_back({nd.at("feature").get<int>(), nd.at("threshold").get<double>(), nd.at("left").get<int>(),
                                   nd.at("right").get<int>(), nd.at("p2").get<double>(), nd.at("count").get<int>()});
            }
            c.params = std::move(m);
            break;
        }
        case ClassifierKind::AdaBoost: {
            model::AdaBoost m;
            for (const auto& s : p.at("stumps")) {
                m.stumps.push_back({s.at("feature").get<int>(), s.at("threshold").get<double>(), s.at("polarity").get<int>(),
                                    s.at("alpha").get<double>(), s.at("weighted_error").get<double>()});
            }
            c.params = std::move(m);
            break;
        }
        case ClassifierKind::NaiveBayes: {
            model::NaiveBayes m;
            for (std::size_t k = 0; k < 2; ++k) {
                m.means[k] = vector_from(p.at("means")[k]);
                m.variances[k] = vector_from(p.at("variances")[k]);
            }
            m.log_priors = p.at("log_priors").get<std::array<double, 2>>();
            c.params = std::move(m);
            break;
        }
    }
}

}  // namespace regime

#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "regime/classify.hpp"

using namespace regime;
using testing_helpers::error_code;

namespace {

/// Two 2-D Gaussian blobs, `gap` noise units apart along the first axis.
synth::Blobs two_blobs(int n_per, double gap, std::uint64_t seed) {
    Eigen::MatrixXd centers(2, 2);
    centers << 0.0, 0.0, gap, 0.0;
    return synth::gaussian_blobs(centers, n_per, 1.0, seed);
}

/// Blobs whose classes are strictly separated by a margin on the first axis.
synth::Blobs separable(int n_per, std::uint64_t seed) {
    auto b = two_blobs(n_per, 8.0, seed);
    for (Eigen::Index i = 0; i < b.scores.rows(); ++i) {
        double& v = b.scores.scores(i, 0);
        v = b.truth[static_cast<std::size_t>(i)] == 1 ? std::min(v, 3.0) : std::max(v, 5.0);
    }
    return b;
}

double pooled_trace(const synth::Blobs& b) {
    double mu[2][2] = {{0, 0}, {0, 0}}, cnt[2] = {0, 0};
    for (Eigen::Index i = 0; i < b.scores.rows(); ++i) {
        const int c = b.truth[static_cast<std::size_t>(i)] - 1;
        cnt[c] += 1;
        for (int j = 0; j < 2; ++j) mu[c][j] += b.scores.scores(i, j);
    }
    double tr = 0;
    for (Eigen::Index i = 0; i < b.scores.rows(); ++i) {
        const int c = b.truth[static_cast<std::size_t>(i)] - 1;
        for (int j = 0; j < 2; ++j) {
            const double dlt = b.scores.scores(i, j) - mu[c][j] / cnt[c];
            tr += dlt * dlt;
        }
    }
    return tr / static_cast<double>(b.scores.rows());
}

}  // namespace

TEST(Fit, SeparableBlobsTrainPerfectly) {
    auto b = two_blobs(100, 8.0, 11);
    for (auto kind : kAllKinds) {
        auto clf = fit(kind, b.scores, b.truth);
        EXPECT_EQ(predict(clf, b.scores), b.truth) << kind_id(kind);
    }
}

TEST(Fit, PredictIsThresholdedScore) {
    auto b = two_blobs(60, 2.0, 5);
    for (auto kind : kAllKinds) {
        auto clf = fit(kind, b.scores, b.truth);
        auto score = predict_score(clf, b.scores);
        auto lab = predict(clf, b.scores);
        for (std::size_t i = 0; i < lab.size(); ++i) EXPECT_EQ(lab[i], score[i] > clf.decision_threshold() ? 2 : 1);
    }
}

TEST(Fit, ConstantRowsShareALabel) {
    auto b = two_blobs(30, 3.0, 2);
    Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 2, 1.3);
    for (auto kind : kAllKinds) {
        auto lab = predict(fit(kind, b.scores, b.truth), same);
        for (int v : lab) EXPECT_EQ(v, lab[0]);
    }
}

TEST(Fit, DepthOneTreeSplitsBetweenClasses) {
    Eigen::MatrixXd x(6, 1);
    x << 1, 2, 3, 7, 8, 9;
    HyperParams hp;
    hp.tree_max_depth = 1;
    hp.tree_min_leaf = 1;
    auto clf = fit(ClassifierKind::Tree, x, {1, 1, 1, 2, 2, 2}, hp);
    const auto& tree = std::get<model::Tree>(clf.params);
    EXPECT_EQ(tree.nodes[0].feature, 0);
    EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 5.0);
}

TEST(Fit, LdaBoundaryAtMidpointForSymmetricClasses) {
    Eigen::MatrixXd x(8, 1);
    x << -3, -2, -1, 0, 4, 5, 6, 7;  // means -1.5 and 5.5, equal spread and size
    HyperParams hp;
    hp.ridge = 0.0;
    auto clf = fit(ClassifierKind::Lda, x, {1, 1, 1, 1, 2, 2, 2, 2}, hp);
    Eigen::MatrixXd probe(2, 1);
    probe << 2.0 - 1e-9, 2.0 + 1e-9;
    EXPECT_EQ(predict(clf, probe), (Labels{1, 2}));
    EXPECT_NEAR(predict_score(clf, Eigen::MatrixXd::Constant(1, 1, 2.0))[0], 0.0, 1e-12);
}

TEST(Fit, LdaDirectionMatchesClosedForm) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto b = two_blobs(40, 1.5, 60 + seed);
        auto rows = testing_helpers::to_rows(b.scores.scores);
        HyperParams hp;
        auto clf = fit(ClassifierKind::Lda, b.scores, b.truth, hp);
        auto w = std::get<model::Lda>(clf.params).direction;
        auto expected = oracle::lda_direction_2d(rows, b.truth, hp.ridge * pooled_trace(b) / 2.0);
        EXPECT_NEAR(w(0), expected[0], 1e-6);
        EXPECT_NEAR(w(1), expected[1], 1e-6);

        hp.ridge = 0.0;
        auto plain = std::get<model::Lda>(fit(ClassifierKind::Lda, b.scores, b.truth, hp).params).direction;
        auto exact = oracle::lda_direction_2d(rows, b.truth);
        EXPECT_NEAR(plain(0), exact[0], 1e-9);
        EXPECT_NEAR(plain(1), exact[1], 1e-9);
    }
}

TEST(Fit, NaiveBayesPosteriorMatchesDensityProduct) {
    auto b = two_blobs(50, 1.0, 8);
    auto rows = testing_helpers::to_rows(b.scores.scores);
    auto clf = fit(ClassifierKind::NaiveBayes, b.scores, b.truth);
    for (Eigen::Index i = 0; i < b.scores.rows(); i += 7) {
        EXPECT_NEAR(naive_bayes_posterior(clf, b.scores.scores.row(i)),
                    oracle::naive_bayes_posterior(rows, b.truth, rows[static_cast<std::size_t>(i)]), 1e-10);
    }
}

TEST(Fit, AdaBoostRoundsBeatChance) {
    auto b = two_blobs(80, 1.0, 13);
    auto clf = fit(ClassifierKind::AdaBoost, b.scores, b.truth);
    const auto& boost = std::get<model::AdaBoost>(clf.params);
    ASSERT_FALSE(boost.stumps.empty());
    for (const auto& s : boost.stumps) EXPECT_LT(s.weighted_error, 0.5);
}

TEST(Fit, LogisticSeparatesPerfectlySeparableData) {
    auto b = separable(50, 3);
    auto clf = fit(ClassifierKind::Logistic, b.scores, b.truth);
    EXPECT_EQ(predict(clf, b.scores), b.truth);
}

TEST(Fit, RejectsBadLabels) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
    EXPECT_EQ(error_code([&] { fit(ClassifierKind::Lda, x, {1, 1, 1, 1, 1, 1}); }), "SingleClass");
    EXPECT_EQ(error_code([&] { fit(ClassifierKind::Lda, x, {1, 1, 1, 1, 1, 2}); }), "TooFewSamples");
    EXPECT_EQ(error_code([&] { fit(ClassifierKind::Lda, x, {1, 2, 3, 1, 2, 1}); }), "NotBinary");
    EXPECT_EQ(error_code([&] { fit(ClassifierKind::Lda, x, {1, 2, 1}); }), "LengthMismatch");
    EXPECT_EQ(error_code([] { parse_kind("SVM"); }), "UnknownClassifier");
}

TEST(Metrics, Examples) {
    EXPECT_DOUBLE_EQ(metric_auc({0.1, 0.9}, {1, 2}), 1.0);
    EXPECT_DOUBLE_EQ(metric_auc({0.3, 0.3, 0.3, 0.3}, {1, 2, 1, 2}), 0.5);
    EXPECT_DOUBLE_EQ(metric_accuracy({2, 2, 1, 1}, {2, 1, 2, 1}), 0.5);
    EXPECT_DOUBLE_EQ(metric_f1({2, 2, 1, 1}, {2, 1, 2, 1}), 0.5);
    EXPECT_EQ(error_code([] { metric_auc({0.1, 0.2}, {1, 1}); }), "OneClass");
}

TEST(Metrics, AucInvariantUnderMonotoneMaps) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s(40);
        Labels t(40);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = std::round(rng.normal() * 4.0) / 4.0;  // ties on purpose
            t[i] = 1 + static_cast<int>(rng.below(2));
        }
        t[0] = 1;
        t[1] = 2;
        std::vector<double> mapped(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) mapped[i] = std::exp(3.0 * s[i]) + 1.0;
        const double a = metric_auc(s, t);
        EXPECT_DOUBLE_EQ(a, metric_auc(mapped, t));
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
    }
}

TEST(CrossValidate, SeparableDataScoresPerfectly) {
    auto b = separable(60, 21);
    for (auto kind : kAllKinds) {
        auto r = cross_validate(kind, b.scores, b.truth, 10, CvMode::Shuffled, 5);
        EXPECT_DOUBLE_EQ(r.accuracy, 1.0) << kind_id(kind);
        EXPECT_DOUBLE_EQ(r.auc, 1.0) << kind_id(kind);
        EXPECT_DOUBLE_EQ(r.f1, 1.0) << kind_id(kind);
        EXPECT_EQ(r.per_fold.size(), 10u);
    }
}

TEST(CrossValidate, IndependentLabelsNearMajorityRate) {
    Rng rng(99);
    Eigen::MatrixXd x(500, 3);
    Labels y(500);
    int ones = 0;
    for (int i = 0; i < 500; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
        y[static_cast<std::size_t>(i)] = rng.uniform() < 0.7 ? 1 : 2;
        ones += y[static_cast<std::size_t>(i)] == 1;
    }
    const double majority = ones / 500.0;
    for (auto kind : {ClassifierKind::Lda, ClassifierKind::Logistic, ClassifierKind::NaiveBayes}) {
        auto r = cross_validate(kind, x, y, 10, CvMode::Shuffled, 1);
        EXPECT_NEAR(r.accuracy, majority, 0.1) << kind_id(kind);
    }
}

TEST(CrossValidate, NamesFoldMissingARegime) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 2);
    Labels y(20, 1);
    y[0] = y[1] = 2;  // both regime-2 rows sit in the first block
    try {
        cross_validate(ClassifierKind::Lda, x, y, 10);
        FAIL() << "expected FoldMissingClass";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "FoldMissingClass");
        EXPECT_NE(e.message().find("fold 1"), std::string::npos) << e.message();
    }
    EXPECT_EQ(error_code([&] { cross_validate(ClassifierKind::Lda, x, y, 1); }), "BadFolds");
}

TEST(CrossValidate, ThreadCountDoesNotChangeResult) {
    auto b = two_blobs(50, 1.5, 31);
    auto a = cross_validate(ClassifierKind::Tree, b.scores, b.truth, 5, CvMode::Shuffled, 3, {}, 1);
    auto c = cross_validate(ClassifierKind::Tree, b.scores, b.truth, 5, CvMode::Shuffled, 3, {}, 3);
    EXPECT_EQ(a.auc, c.auc);
    EXPECT_EQ(a.accuracy, c.accuracy);
    EXPECT_EQ(a.f1, c.f1);
}

TEST(ClassifierIo, JsonRoundTripPreservesScores) {
    auto b = two_blobs(40, 2.0, 17);
    for (auto kind : kAllKinds) {
        auto clf = fit(kind, b.scores, b.truth);
        nlohmann::json j = clf;
        auto back = nlohmann::json::parse(j.dump()).get<RegimeClassifier>();
        EXPECT_EQ(predict_score(back, b.scores), predict_score(clf, b.scores)) << kind_id(kind);
    }
}

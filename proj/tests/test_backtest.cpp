#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "regime/backtest.hpp"

using namespace regime;
using testing_helpers::error_code;

namespace {

std::vector<Date> days(std::size_t n) { return synth::business_days(Date{2015, 1, 5}, static_cast<int>(n)); }

RegimeSignal constant_signal(std::size_t n, int regime) { return {days(n), Labels(n, regime)}; }

std::vector<double> random_returns(std::size_t n, std::uint64_t seed, double sd = 0.01) {
    Rng rng(seed);
    std::vector<double> r(n);
    for (auto& v : r) v = rng.normal(0.0003, sd);
    return r;
}

void expect_same_report(const BacktestReport& a, const BacktestReport& b) {
    EXPECT_EQ(a.cumulative_return_pct, b.cumulative_return_pct);
    EXPECT_EQ(a.annualized_return_pct, b.annualized_return_pct);
    EXPECT_EQ(a.annualized_vol_pct, b.annualized_vol_pct);
    EXPECT_EQ(a.skewness, b.skewness);
    EXPECT_EQ(a.kurtosis, b.kurtosis);
    EXPECT_EQ(a.alpha_pct, b.alpha_pct);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.max_drawdown_pct, b.max_drawdown_pct);
    EXPECT_EQ(a.daily_returns, b.daily_returns);
    EXPECT_EQ(a.wealth, b.wealth);
}

CvReport cv_with(double accuracy) { return {ClassifierKind::Lda, 0.5, accuracy, 0.5, {}}; }

BacktestReport report_with(double cumulative) {
    BacktestReport r;
    r.cumulative_return_pct = cumulative;
    return r;
}

}  // namespace

TEST(BuyHold, ZeroReturns) {
    auto r = buy_hold(days(5), std::vector<double>(5, 0.0));
    EXPECT_EQ(r.cumulative_return_pct, 100.0);
    EXPECT_EQ(r.annualized_vol_pct, 0.0);
    EXPECT_EQ(r.max_drawdown_pct, 0.0);
}

TEST(BuyHold, UpThenDown) {
    auto r = buy_hold(days(2), {0.10, -0.10});
    EXPECT_NEAR(r.wealth.back(), 99.0, 1e-12);
    EXPECT_NEAR(r.cumulative_return_pct, 99.0, 1e-12);
    // Peak 110, trough 99.
    EXPECT_NEAR(r.max_drawdown_pct, 10.0, 1e-12);
    EXPECT_NEAR(r.max_drawdown_pct, oracle::exhaustive_drawdown({0.10, -0.10}), 1e-12);
}

TEST(PerformanceStats, ThreeDayExample) {
    auto r = performance_stats(std::vector<double>{0.01, -0.02, 0.03});
    EXPECT_NEAR(r.cumulative_return_pct, 101.9494, 1e-4);
    EXPECT_NEAR(r.max_drawdown_pct, 2.0, 1e-12);
    EXPECT_EQ(error_code([] { performance_stats(std::vector<double>{}); }), "EmptySeries");
}

TEST(PerformanceStats, MomentsOfKnownSeries) {
    std::vector<double> r{0.01, 0.02, 0.03, 0.10};
    auto rep = performance_stats(r);
    const double m = 0.04;
    double m2 = 0, m3 = 0, m4 = 0, ss = 0;
    for (double v : r) {
        m2 += std::pow(v - m, 2) / 4;
        m3 += std::pow(v - m, 3) / 4;
        m4 += std::pow(v - m, 4) / 4;
        ss += std::pow(v - m, 2) / 3;
    }
    EXPECT_NEAR(rep.annualized_vol_pct, 100.0 * std::sqrt(ss * 252.0), 1e-10);
    EXPECT_NEAR(rep.skewness, m3 / std::pow(m2, 1.5), 1e-10);
    EXPECT_NEAR(rep.kurtosis, m4 / (m2 * m2), 1e-10);
    auto excess = performance_stats(r, std::nullopt, {.excess_kurtosis = true});
    EXPECT_NEAR(excess.kurtosis, rep.kurtosis - 3.0, 1e-12);
}

TEST(TailHedge, AllNormalIsBuyHold) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto r = random_returns(300, seed);
        expect_same_report(tail_hedge(constant_signal(300, 1), days(300), r), buy_hold(days(300), r));
    }
}

TEST(TailHedge, AllCrisisNegates) {
    auto r = random_returns(200, 4);
    auto rep = tail_hedge(constant_signal(200, 2), days(200), r);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(rep.daily_returns[i], -r[i]);
}

TEST(TailHedge, MixedSignal) {
    auto rep = tail_hedge({days(3), {1, 2, 1}}, days(3), {0.01, 0.02, -0.01});
    EXPECT_EQ(rep.daily_returns, (std::vector<double>{0.01, -0.02, -0.01}));
    EXPECT_NEAR(rep.wealth.back(), 100 * 1.01 * 0.98 * 0.99, 1e-12);
}

TEST(TailHedge, RejectsMisalignedOrBadSignal) {
    EXPECT_EQ(error_code([] { tail_hedge({days(2), {1, 1}}, days(3), {0, 0, 0}); }), "DateMisalignment");
    EXPECT_EQ(error_code([] { tail_hedge({days(2), {1, 3}}, days(2), {0, 0}); }), "BadRegime");
}

TEST(Tactical, DayFormulas) {
    EXPECT_DOUBLE_EQ(tactical_day_return(1, 0.01, 0.3, -0.2, 0.005), 0.008);
    EXPECT_DOUBLE_EQ(tactical_day_return(2, -0.02, -0.04, 0.01, 0.005), 0.01875);
}

TEST(Tactical, MatchesHandFormulasOnRandomInputs) {
    Rng rng(12);
    const std::size_t n = 250;
    AssetReturns a;
    a.dates = days(n);
    for (std::size_t k = 0; k < 4; ++k) a.returns[k] = random_returns(n, 50 + k);
    RegimeSignal s{a.dates, Labels(n)};
    for (auto& v : s.regime) v = 1 + static_cast<int>(rng.below(2));
    auto rep = tactical_allocation(s, a);
    for (std::size_t i = 0; i < n; ++i) {
        const double sp = a.returns[0][i], cr = a.returns[1][i], go = a.returns[2][i], bo = a.returns[3][i];
        const double expected = s.regime[i] == 1 ? 0.6 * sp + 0.4 * bo : 0.25 * (-sp - cr + go + bo);
        EXPECT_EQ(rep.daily_returns[i], expected);
    }
}

TEST(Tactical, ZeroAssetsAreTrivial) {
    AssetReturns a;
    a.dates = days(10);
    for (auto& r : a.returns) r.assign(10, 0.0);
    auto rep = tactical_allocation(constant_signal(10, 2), a);
    EXPECT_EQ(rep.cumulative_return_pct, 100.0);
    EXPECT_EQ(rep.annualized_vol_pct, 0.0);
}

TEST(AlphaBeta, IdentityAndScaling) {
    auto b = random_returns(500, 8);
    std::vector<double> twice(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) twice[i] = 2.0 * b[i];
    auto same = alpha_beta(b, b);
    EXPECT_NEAR(same.beta, 1.0, 1e-10);
    EXPECT_NEAR(same.alpha_pct, 0.0, 1e-10);
    auto doubled = alpha_beta(twice, b);
    EXPECT_NEAR(doubled.beta, 2.0, 1e-10);
    EXPECT_NEAR(doubled.alpha_pct, 0.0, 1e-10);
    EXPECT_EQ(error_code([] { alpha_beta(std::vector<double>{1, 2}, std::vector<double>{0, 0}); }), "ZeroVariance");
}

TEST(AlphaBeta, MatchesNormalEquations) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto bench = random_returns(300, seed);
        auto noise = random_returns(300, 1000 + seed, 0.005);
        std::vector<double> strat(bench.size());
        for (std::size_t i = 0; i < bench.size(); ++i) strat[i] = 0.0002 + 0.7 * bench[i] + noise[i];
        auto ab = alpha_beta(strat, bench);
        auto o = oracle::ols(strat, bench);
        EXPECT_NEAR(ab.beta, o.slope, 1e-10);
        EXPECT_NEAR(ab.alpha_pct, 100.0 * 252.0 * o.intercept, 1e-10);
    }
}

TEST(Drawdown, MatchesPairwiseScan) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto r = random_returns(200 + seed * 10, seed, 0.02);
        EXPECT_NEAR(performance_stats(r).max_drawdown_pct, oracle::exhaustive_drawdown(r), 1e-12);
    }
}

TEST(Report, JsonRoundTrip) {
    auto r = buy_hold(days(20), random_returns(20, 3));
    nlohmann::json j = r;
    BacktestReport back = nlohmann::json::parse(j.dump()).get<BacktestReport>();
    expect_same_report(back, r);
    EXPECT_EQ(back.dates, r.dates);
}

TEST(LagSignal, UsesPreviousPanelRow) {
    auto pd = days(4);
    AssetReturns a;
    a.dates = {pd[0], pd[1], pd[2], pd[3], pd[3].next_day()};
    for (auto& r : a.returns) r = {0.1, 0.2, 0.3, 0.4, 0.5};
    auto [sig, traded] = lag_signal(pd, {1, 2, 2, 1}, a);
    EXPECT_EQ(sig.dates, (std::vector<Date>{pd[1], pd[2], pd[3], pd[3].next_day()}));
    EXPECT_EQ(sig.regime, (Labels{1, 2, 2, 1}));
    EXPECT_EQ(traded.of(Asset::Gold), (std::vector<double>{0.2, 0.3, 0.4, 0.5}));
}

TEST(Correlate, PerfectPositiveAndNegative) {
    std::vector<CvReport> cv;
    std::vector<BacktestReport> up, down;
    for (int i = 1; i <= 6; ++i) {
        cv.push_back(cv_with(0.9 + 0.01 * i));
        up.push_back(report_with(100.0 + i));
        down.push_back(report_with(100.0 - i));
    }
    auto pos = correlate_metrics(cv, up, "accuracy", "cumulative_return");
    EXPECT_NEAR(pos.r, 1.0, 1e-12);
    EXPECT_LT(pos.p_value, 1e-6);
    EXPECT_NEAR(correlate_metrics(cv, down, "accuracy", "cumulative_return").r, -1.0, 1e-12);
    EXPECT_EQ(error_code([&] { correlate_metrics(cv, up, "auc", "cumulative_return"); }), "ZeroVariance");
}

TEST(Correlate, PValueMatchesStudentT) {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(6), y(6);
        for (std::size_t i = 0; i < 6; ++i) {
            x[i] = rng.normal();
            y[i] = 0.5 * x[i] + rng.normal();
        }
        auto c = stats::pearson(x, y);
        EXPECT_NEAR(c.p_value, oracle::pearson_p(c.r, 6), 1e-6);
    }
}

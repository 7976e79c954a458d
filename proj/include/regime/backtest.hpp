#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regime/classify.hpp"
#include "regime/csv.hpp"
#include "regime/date.hpp"
#include "regime/error.hpp"
#include "regime/json_util.hpp"
#include "regime/panel.hpp"
#include "regime/stats.hpp"

namespace regime {

inline constexpr double kTradingDays = 252.0;
inline constexpr double kBaseWealth = 100.0;

enum class Asset { Sp500 = 0, Crude = 1, Gold = 2, Bonds = 3 };
inline constexpr std::array<std::string_view, 4> kAssetColumns{"sp500", "crude", "gold", "bonds"};

/// Daily fractional returns of the four traded futures, aligned by date.
struct AssetReturns {
    std::vector<Date> dates;
    std::array<std::vector<double>, 4> returns;

    const std::vector<double>& of(Asset a) const { return returns[static_cast<std::size_t>(a)]; }
    std::size_t size() const { return dates.size(); }
};

/// Regime in force on each date; the value for date t+1 is predicted from data through t.
struct RegimeSignal {
    std::vector<Date> dates;
    Labels regime;
};

struct BacktestReport {
    double cumulative_return_pct = 0.0;  // final wealth per 100 invested
    double annualized_return_pct = 0.0;
    double annualized_vol_pct = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double alpha_pct = 0.0;
    double beta = 0.0;
    double max_drawdown_pct = 0.0;
    std::vector<Date> dates;
    std::vector<double> daily_returns;
    std::vector<double> wealth;  // wealth after each day, base 100
};

struct StatsOptions {
    bool excess_kurtosis = false;
};

inline AssetReturns load_asset_returns(const std::filesystem::path& path) {
    Panel p = load_panel(path, "date");
    AssetReturns out;
    out.dates = p.dates();
    for (std::size_t a = 0; a < kAssetColumns.size(); ++a) {
        auto it = std::find(p.names().begin(), p.names().end(), kAssetColumns[a]);
        if (it == p.names().end()) {
            throw data_error("MissingAsset", "asset returns file lacks column '" + std::string(kAssetColumns[a]) + "'");
        }
        const auto j = static_cast<Eigen::Index>(it - p.names().begin());
        out.returns[a].resize(out.dates.size());
        for (Eigen::Index i = 0; i < p.rows(); ++i) out.returns[a][static_cast<std::size_t>(i)] = p.values()(i, j);
    }
    return out;
}

inline void write_asset_returns(const AssetReturns& a, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"date", "sp500", "crude", "gold", "bonds"});
    for (std::size_t i = 0; i < a.size(); ++i) {
        csv::Row r{a.dates[i].to_string()};
        for (const auto& col : a.returns) r.push_back(csv::format_double(col[i]));
        w.row(r);
    }
}

/// Rows with date > `after`.
inline AssetReturns window_after(const AssetReturns& a, Date after) {
    AssetReturns out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a.dates[i] > after)) continue;
        out.dates.push_back(a.dates[i]);
        for (std::size_t k = 0; k < 4; ++k) out.returns[k].push_back(a.returns[k][i]);
    }
    return out;
}

/// Builds the traded signal: the regime on trading date D is the prediction
/// made from the latest panel row dated strictly before D. Trading dates with
/// no earlier panel row are dropped from the result.
inline std::pair<RegimeSignal, AssetReturns> lag_signal(const std::vector<Date>& prediction_dates, const Labels& predictions,
                                                        const AssetReturns& assets) {
    if (prediction_dates.size() != predictions.size()) throw data_error("LengthMismatch", "prediction dates and labels differ");
    RegimeSignal sig;
    AssetReturns traded;
    for (std::size_t i = 0; i < assets.size(); ++i) {
        const Date d = assets.dates[i];
        auto it = std::lower_bound(prediction_dates.begin(), prediction_dates.end(), d);
        if (it == prediction_dates.begin()) continue;
        const auto src = static_cast<std::size_t>(it - prediction_dates.begin()) - 1;
        sig.dates.push_back(d);
        sig.regime.push_back(predictions[src]);
        traded.dates.push_back(d);
        for (std::size_t k = 0; k < 4; ++k) traded.returns[k].push_back(assets.returns[k][i]);
    }
    return {sig, traded};
}

/// Largest peak-to-trough decline of the wealth path (base included), in %.
inline double max_drawdown_pct(std::span<const double> wealth, double base = kBaseWealth) {
    double peak = base;
    double worst = 0.0;
    for (double w : wealth) {
        peak = std::max(peak, w);
        worst = std::max(worst, (peak - w) / peak);
    }
    return 100.0 * worst;
}

struct AlphaBeta {
    double alpha_pct;
    double beta;
};

/// OLS of strategy on benchmark; alpha annualized arithmetically with a zero risk-free rate.
inline AlphaBeta alpha_beta(std::span<const double> strategy, std::span<const double> benchmark) {
    if (strategy.size() != benchmark.size()) throw data_error("DateMisalignment", "strategy and benchmark lengths differ");
    const double ms = stats::mean(strategy);
    const double mb = stats::mean(benchmark);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < strategy.size(); ++i) {
        sxy += (strategy[i] - ms) * (benchmark[i] - mb);
        sxx += (benchmark[i] - mb) * (benchmark[i] - mb);
    }
    if (!(sxx > 0.0)) throw data_error("ZeroVariance", "benchmark returns have zero variance");
    const double beta = sxy / sxx;
    return {100.0 * kTradingDays * (ms - beta * mb), beta};
}

/// Full statistics for a daily return series. With a benchmark, alpha/beta
/// come from OLS; a zero-variance benchmark raises ZeroVariance.
inline BacktestReport performance_stats(std::span<const double> daily, std::optional<std::span<const double>> benchmark = {},
                                        StatsOptions opts = {}) {
    if (daily.empty()) throw data_error("EmptySeries", "performance statistics need at least one return");
    BacktestReport r;
    r.daily_returns.assign(daily.begin(), daily.end());
    r.wealth.reserve(daily.size());
    double growth = 1.0;
    for (double v : daily) {
        growth *= 1.0 + v;
        r.wealth.push_back(kBaseWealth * growth);
    }
    const double n = static_cast<double>(daily.size());
    r.cumulative_return_pct = kBaseWealth * growth;
    r.annualized_return_pct = 100.0 * (std::pow(growth, kTradingDays / n) - 1.0);

    const double m = stats::mean(daily);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : daily) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    r.annualized_vol_pct = daily.size() > 1 ? 100.0 * std::sqrt(m2 / (n - 1.0)) * std::sqrt(kTradingDays) : 0.0;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        r.skewness = m3 / std::pow(m2, 1.5);
        r.kurtosis = m4 / (m2 * m2) - (opts.excess_kurtosis ? 3.0 : 0.0);
    }
    r.max_drawdown_pct = max_drawdown_pct(r.wealth);
    if (benchmark) {
        auto ab = alpha_beta(daily, *benchmark);
        r.alpha_pct = ab.alpha_pct;
        r.beta = ab.beta;
    }
    return r;
}

namespace detail {

/// Strategy reports regress on their benchmark; when the benchmark is flat the
/// slope is unidentified and the report carries beta 0 with alpha = annualized mean.
inline BacktestReport strategy_report(std::span<const double> daily, std::span<const double> benchmark,
                                      const std::vector<Date>& dates, StatsOptions opts) {
    BacktestReport r;
    try {
        r = performance_stats(daily, benchmark, opts);
    } catch (const Error& e) {
        if (e.code() != "ZeroVariance") throw;
        r = performance_stats(daily, std::nullopt, opts);
        r.beta = 0.0;
        r.alpha_pct = 100.0 * kTradingDays * stats::mean(daily);
    }
    r.dates = dates;
    return r;
}

inline void check_signal(const RegimeSignal& s, const std::vector<Date>& dates) {
    if (s.dates != dates || s.regime.size() != dates.size()) {
        throw data_error("DateMisalignment", "signal dates do not match asset dates");
    }
    for (int v : s.regime) {
        if (v != 1 && v != 2) throw data_error("BadRegime", "signal regimes must be 1 or 2, got " + std::to_string(v));
    }
}

}  // namespace detail

/// Passive holding; the asset is its own benchmark.
inline BacktestReport buy_hold(const std::vector<Date>& dates, const std::vector<double>& returns, StatsOptions opts = {}) {
    if (dates.size() != returns.size()) throw data_error("DateMisalignment", "dates and returns differ in length");
    return detail::strategy_report(returns, returns, dates, opts);
}

/// Long in regime 1, short in regime 2.
inline BacktestReport tail_hedge(const RegimeSignal& signal, const std::vector<Date>& dates, const std::vector<double>& returns,
                                 StatsOptions opts = {}) {
    if (dates.size() != returns.size()) throw data_error("DateMisalignment", "dates and returns differ in length");
    detail::check_signal(signal, dates);
    std::vector<double> daily(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) daily[i] = signal.regime[i] == 1 ? returns[i] : -returns[i];
    return detail::strategy_report(daily, returns, dates, opts);
}

/// Daily strategy return for one day of tactical allocation.
inline double tactical_day_return(int regime, double sp500, double crude, double gold, double bonds) {
    if (regime == 1) return 0.6 * sp500 + 0.4 * bonds;
    return 0.25 * (-sp500 - crude + gold + bonds);
}

/// 60/40 equity/bond in regime 1; 25% each short equity, short crude, long
/// gold and long bonds in regime 2. Weights reset daily; benchmark is the S&P 500.
inline BacktestReport tactical_allocation(const RegimeSignal& signal, const AssetReturns& assets, StatsOptions opts = {}) {
    for (std::size_t k = 0; k < 4; ++k) {
        if (assets.returns[k].size() != assets.dates.size()) {
            throw data_error("MissingAsset", "asset series '" + std::string(kAssetColumns[k]) + "' is missing or misaligned");
        }
    }
    detail::check_signal(signal, assets.dates);
    std::vector<double> daily(assets.size());
    for (std::size_t i = 0; i < assets.size(); ++i) {
        daily[i] = tactical_day_return(signal.regime[i], assets.of(Asset::Sp500)[i], assets.of(Asset::Crude)[i],
                                       assets.of(Asset::Gold)[i], assets.of(Asset::Bonds)[i]);
    }
    return detail::strategy_report(daily, assets.of(Asset::Sp500), assets.dates, opts);
}

// ---------------------------------------------------------------------------
// Metric-to-performance correlation.

inline double metric_value(const CvReport& r, std::string_view metric) {
    if (metric == "auc") return r.auc;
    if (metric == "accuracy") return r.accuracy;
    if (metric == "f1") return r.f1;
    throw config_error("UnknownMetric", "unknown metric '" + std::string(metric) + "'");
}

inline constexpr std::array<std::string_view, 8> kReportStats{
    "cumulative_return", "annualized_return", "annualized_vol", "skewness", "kurtosis", "alpha", "beta", "max_drawdown"};

inline double stat_value(const BacktestReport& r, std::string_view stat) {
    if (stat == "cumulative_return") return r.cumulative_return_pct;
    if (stat == "annualized_return") return r.annualized_return_pct;
    if (stat == "annualized_vol") return r.annualized_vol_pct;
    if (stat == "skewness") return r.skewness;
    if (stat == "kurtosis") return r.kurtosis;
    if (stat == "alpha") return r.alpha_pct;
    if (stat == "beta") return r.beta;
    if (stat == "max_drawdown") return r.max_drawdown_pct;
    throw config_error("UnknownStat", "unknown statistic '" + std::string(stat) + "'");
}

/// Pearson r and two-sided p between a CV metric and a strategy statistic,
/// paired by position (one entry per classifier kind).
inline stats::Correlation correlate_metrics(const std::vector<CvReport>& cv, const std::vector<BacktestReport>& reports,
                                            std::string_view metric, std::string_view stat) {
    if (cv.size() != reports.size()) throw data_error("LengthMismatch", "CV and backtest lists differ in length");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < cv.size(); ++i) {
        x.push_back(metric_value(cv[i], metric));
        y.push_back(stat_value(reports[i], stat));
    }
    return stats::pearson(x, y);
}

// ---------------------------------------------------------------------------
// Serialization.

inline void to_json(nlohmann::json& j, const BacktestReport& r) {
    std::vector<std::string> dates;
    for (const auto& d : r.dates) dates.push_back(d.to_string());
    nlohmann::json daily = nlohmann::json::array();
    nlohmann::json wealth = nlohmann::json::array();
    for (double v : r.daily_returns) daily.push_back(jsonio::number(v));
    for (double v : r.wealth) wealth.push_back(jsonio::number(v));
    j = nlohmann::json{{"cumulative_return_pct", jsonio::number(r.cumulative_return_pct)},
                       {"annualized_return_pct", jsonio::number(r.annualized_return_pct)},
                       {"annualized_vol_pct", jsonio::number(r.annualized_vol_pct)},
                       {"skewness", jsonio::number(r.skewness)},
                       {"kurtosis", jsonio::number(r.kurtosis)},
                       {"alpha_pct", jsonio::number(r.alpha_pct)},
                       {"beta", jsonio::number(r.beta)},
                       {"max_drawdown_pct", jsonio::number(r.max_drawdown_pct)},
                       {"dates", dates},
                       {"daily_returns", daily},
                       {"wealth", wealth}};
}

inline void from_json(const nlohmann::json& j, BacktestReport& r) {
    r.cumulative_return_pct = jsonio::number_from(j.at("cumulative_return_pct"));
    r.annualized_return_pct = jsonio::number_from(j.at("annualized_return_pct"));
    r.annualized_vol_pct = jsonio::number_from(j.at("annualized_vol_pct"));
    r.skewness = jsonio::number_from(j.at("skewness"));
    r.kurtosis = jsonio::number_from(j.at("kurtosis"));
    r.alpha_pct = jsonio::number_from(j.at("alpha_pct"));
    r.beta = jsonio::number_from(j.at("beta"));
    r.max_drawdown_pct = jsonio::number_from(j.at("max_drawdown_pct"));
    r.dates.clear();
    for (const auto& d : j.at("dates")) r.dates.push_back(Date::parse(d.get<std::string>()));
    r.daily_returns.clear();
    r.wealth.clear();
    for (const auto& v : j.at("daily_returns")) r.daily_returns.push_back(jsonio::number_from(v));
    for (const auto& v : j.at("wealth")) r.wealth.push_back(jsonio::number_from(v));
}

struct SummaryRow {
    std::string label;
    const BacktestReport* report;
};

/// Table layout: label, the eight statistics. `with_alpha_beta = false`
/// drops alpha and beta (buy-hold benchmark table).
inline void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path, bool with_alpha_beta = true) {
    csv::Writer w(path);
    csv::Row header{"strategy", "cumulative_return_pct", "annualized_return_pct", "annualized_vol_pct", "skewness", "kurtosis"};
    if (with_alpha_beta) {
        header.push_back("alpha_pct");
        header.push_back("beta");
    }
    header.push_back("max_drawdown_pct");
    w.row(header);
    for (const auto& [label, r] : rows) {
        csv::Row out{label,
                     csv::format_fixed(r->cumulative_return_pct, 2),
                     csv::format_fixed(r->annualized_return_pct, 2),
                     csv::format_fixed(r->annualized_vol_pct, 2),
                     csv::format_fixed(r->skewness, 3),
                     csv::format_fixed(r->kurtosis, 3)};
        if (with_alpha_beta) {
            out.push_back(csv::format_fixed(r->alpha_pct, 2));
            out.push_back(csv::format_fixed(r->beta, 3));
        }
        out.push_back(csv::format_fixed(r->max_drawdown_pct, 2));
        w.row(out);
    }
}

inline void write_wealth(const BacktestReport& r, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"date", "wealth"});
    for (std::size_t i = 0; i < r.wealth.size(); ++i) {
        w.row({i < r.dates.size() ? r.dates[i].to_string() : std::to_string(i), csv::format_double(r.wealth[i])});
    }
}

}  // namespace regime

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "regime/backtest.hpp"
#include "regime/classify.hpp"
#include "regime/cluster.hpp"
#include "regime/config.hpp"
#include "regime/csv.hpp"
#include "regime/json_util.hpp"
#include "regime/panel.hpp"
#include "regime/pca.hpp"
#include "regime/synth.hpp"

namespace regime {

namespace fs = std::filesystem;

struct RunOptions {
    int threads = 1;
};

/// One-line `key=value` summary printed by every command.
struct StageSummary {
    std::string stage;
    std::vector<std::pair<std::string, std::string>> fields;

    void add(std::string key, std::string value) { fields.emplace_back(std::move(key), std::move(value)); }
    std::string line() const {
        std::string out = "stage=" + stage + " status=ok";
        for (const auto& [k, v] : fields) out += " " + k + "=" + v;
        return out;
    }
};

/// Artifact locations inside a run directory.
struct RunLayout {
    fs::path root;

    fs::path train_panel() const { return root / "ingest" / "train_panel.csv"; }
    fs::path test_panel() const { return root / "ingest" / "test_panel.csv"; }
    fs::path pca_model() const { return root / "pca" / "pca_model.json"; }
    fs::path variance_table() const { return root / "pca" / "explained_variance.csv"; }
    fs::path top_loadings() const { return root / "pca" / "top_loadings.csv"; }
    fs::path train_scores() const { return root / "pca" / "train_scores.csv"; }
    fs::path test_scores() const { return root / "pca" / "test_scores.csv"; }
    fs::path cluster_model() const { return root / "cluster" / "cluster_model.json"; }
    fs::path silhouette() const { return root / "cluster" / "silhouette_by_k.csv"; }
    fs::path train_regimes() const { return root / "cluster" / "train_regimes.csv"; }
    fs::path cv_csv() const { return root / "train" / "cv_report.csv"; }
    fs::path cv_json() const { return root / "train" / "cv_report.json"; }
    fs::path classifier(ClassifierKind k) const { return root / "train" / "models" / (std::string(kind_id(k)) + ".json"); }
    fs::path backtest_dir() const { return root / "backtest"; }
};

inline RunLayout layout(const RunConfig& c) { return {run_directory(c)}; }

namespace detail {

/// Runs `body`, prefixing any failure with the stage name.
template <class Fn>
auto in_stage(const std::string& stage, Fn&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        if (e.message().rfind("stage ", 0) == 0) throw;
        throw Error(e.kind(), e.code(), "stage " + stage + ": " + e.message());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Data, "Internal", "stage " + stage + ": " + e.what());
    }
}

inline void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) {
        throw data_error("MissingArtifact", p.string() + " not found; run `" + producer + "` first");
    }
}

inline void ensure_dir(const fs::path& p) { fs::create_directories(p); }

inline void write_config_snapshot(const RunConfig& c, const RunLayout& l) {
    ensure_dir(l.root);
    jsonio::write_file(nlohmann::json(c), l.root / "config.json");
}

inline std::string asset_display(std::string_view id) {
    if (id == "sp500") return "S&P 500";
    if (id == "crude") return "Crude Oil";
    if (id == "gold") return "Gold";
    if (id == "bonds") return "Bonds";
    return std::string(id);
}

inline std::size_t asset_index(std::string_view id) {
    return static_cast<std::size_t>(std::find(kAssetColumns.begin(), kAssetColumns.end(), id) - kAssetColumns.begin());
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline StageSummary cmd_synth(const RunConfig& c, const RunOptions& = {}) {
    return detail::in_stage("synth", [&] {
        validate(c);
        auto market = synth::generate_market(c.synth, c.seed);
        auto ensure_parent = [](const fs::path& p) {
            if (p.has_parent_path()) fs::create_directories(p.parent_path());
        };
        ensure_parent(c.panel_path);
        ensure_parent(c.assets_path);
        write_panel(market.panel, c.panel_path, c.date_column);
        write_asset_returns(market.assets, c.assets_path);
        const fs::path truth = c.truth_path.empty() ? fs::path(c.panel_path).parent_path() / "truth.csv" : fs::path(c.truth_path);
        ensure_parent(truth);
        write_labels(market.dates, market.truth, truth);
        std::size_t crisis = std::count(market.truth.begin(), market.truth.end(), 2);
        StageSummary s{"synth", {}};
        s.add("rows", std::to_string(market.dates.size()));
        s.add("series", std::to_string(market.panel.cols()));
        s.add("crisis_days", std::to_string(crisis));
        s.add("panel", c.panel_path);
        return s;
    });
}

inline StageSummary cmd_ingest(const RunConfig& c, const RunOptions& = {}) {
    return detail::in_stage("ingest", [&] {
        validate(c);
        auto l = layout(c);
        detail::write_config_snapshot(c, l);
        Panel raw = load_panel(c.panel_path, c.date_column);
        const auto missing = raw.missing_count();
        Panel full = impute_forward(raw, c.leading_missing);
        auto split = split_at(full, c.split_date);
        detail::ensure_dir(l.train_panel().parent_path());
        write_panel(split.train, l.train_panel(), c.date_column);
        write_panel(split.test, l.test_panel(), c.date_column);
        StageSummary s{"ingest", {}};
        s.add("rows", std::to_string(full.rows()));
        s.add("columns", std::to_string(full.cols()));
        s.add("imputed", std::to_string(missing));
        s.add("train_rows", std::to_string(split.train.rows()));
        s.add("test_rows", std::to_string(split.test.rows()));
        return s;
    });
}

/// Standardizer and PCA are fit on training rows only and reused for test rows.
inline StageSummary cmd_pca(const RunConfig& c, const RunOptions& = {}) {
    return detail::in_stage("pca", [&] {
        validate(c);
        auto l = layout(c);
        detail::require(l.train_panel(), "ingest");
        detail::require(l.test_panel(), "ingest");
        Panel train = load_panel(l.train_panel(), c.date_column);
        Panel test = load_panel(l.test_panel(), c.date_column);
        Standardizer st = fit_standardizer(train);
        Panel z = apply_standardizer(st, train);
        PcaModel model = fit_pca(z, st);
        model.n_selected = select_components(model, c.variance_threshold);

        detail::ensure_dir(l.pca_model().parent_path());
        jsonio::write_file(nlohmann::json(model), l.pca_model());
        auto table = explained_variance_table(model);
        write_variance_table(table, l.variance_table());
        {
            csv::Writer w(l.top_loadings());
            w.row({"dimension", "rank", "column", "contribution"});
            for (int dim = 1; dim <= std::min<int>(2, static_cast<int>(model.loadings.cols())); ++dim) {
                int rank = 1;
                for (const auto& t : top_loadings(model, dim, 4)) {
                    w.row({std::to_string(dim), std::to_string(rank++), t.name, csv::format_double(t.contribution)});
                }
            }
        }
        write_scores(transform(model, z, model.n_selected), l.train_scores());
        write_scores(transform_raw(model, test), l.test_scores());

        StageSummary s{"pca", {}};
        s.add("components", std::to_string(model.n_selected));
        s.add("of", std::to_string(model.loadings.cols()));
        s.add("cumulative_pct", csv::format_fixed(table[static_cast<std::size_t>(model.n_selected - 1)].cumulative_pct, 2));
        s.add("top_eigenvalue", csv::format_fixed(model.eigenvalues(0), 3));
        return s;
    });
}

inline double label_agreement(const std::vector<Date>& dates, const Labels& labels, const std::vector<Date>& truth_dates,
                              const Labels& truth) {
    std::size_t matched = 0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        auto it = std::lower_bound(truth_dates.begin(), truth_dates.end(), dates[i]);
        if (it == truth_dates.end() || *it != dates[i]) continue;
        ++matched;
        agree += truth[static_cast<std::size_t>(it - truth_dates.begin())] == labels[i];
    }
    if (matched == 0) throw data_error("NoOverlap", "ground-truth labels share no dates with predictions");
    return static_cast<double>(agree) / static_cast<double>(matched);
}

struct ClusterStage {
    KSelection selection;
    StageSummary summary;
};

inline ClusterStage run_cluster(const RunConfig& c, const RunOptions& opt) {
    return detail::in_stage("cluster", [&] {
        validate(c);
        auto l = layout(c);
        detail::require(l.train_scores(), "pca");
        ScoreMatrix train = read_scores(l.train_scores());
        const int k_max = std::min<int>(c.k_max, static_cast<int>(train.rows()) - 1);
        KMeansOptions ko{c.n_init, c.max_iter, c.seed, opt.threads};
        auto sel = select_k(train, c.k_min, k_max, ko);

        detail::ensure_dir(l.cluster_model().parent_path());
        jsonio::write_file(nlohmann::json(sel.model), l.cluster_model());
        write_silhouette(sel.silhouette_by_k, l.silhouette());
        write_labels(train.dates, sel.model.train_labels, l.train_regimes());

        StageSummary s{"cluster", {}};
        s.add("k", std::to_string(sel.best_k));
        s.add("silhouette", csv::format_fixed(sel.silhouette_by_k.at(sel.best_k), 4));
        std::size_t second = std::count(sel.model.train_labels.begin(), sel.model.train_labels.end(), 2);
        s.add("regime2_days", std::to_string(second));
        if (!c.truth_path.empty() && fs::exists(c.truth_path)) {
            auto [td, tl] = read_labels(c.truth_path);
            s.add("train_agreement", csv::format_fixed(label_agreement(train.dates, sel.model.train_labels, td, tl), 4));
        }
        return ClusterStage{std::move(sel), std::move(s)};
    });
}

inline StageSummary cmd_cluster(const RunConfig& c, const RunOptions& opt = {}) { return run_cluster(c, opt).summary; }

struct TrainStage {
    std::vector<CvReport> cv;
    StageSummary summary;
};

inline TrainStage run_train(const RunConfig& c, const RunOptions& opt) {
    return detail::in_stage("train", [&] {
        validate(c);
        auto l = layout(c);
        detail::require(l.train_scores(), "pca");
        detail::require(l.cluster_model(), "cluster");
        ScoreMatrix train = read_scores(l.train_scores());
        ClusterModel cm = jsonio::read_file(l.cluster_model()).get<ClusterModel>();
        if (cm.train_labels.size() != static_cast<std::size_t>(train.rows())) {
            throw data_error("StaleArtifact", "cluster labels do not match training scores; rerun `cluster`");
        }

        std::vector<CvReport> reports(c.classifiers.size());
        std::vector<RegimeClassifier> models(c.classifiers.size());
        parallel_for(c.classifiers.size(), opt.threads, [&](std::size_t i) {
            const auto kind = c.classifiers[i];
            reports[i] = cross_validate(kind, train, cm.train_labels, c.cv_folds, c.cv_mode, derive_seed(c.seed, 7000 + i), c.hyper);
            models[i] = fit(kind, train, cm.train_labels, c.hyper);
        });

        detail::ensure_dir(l.classifier(ClassifierKind::Lda).parent_path());
        write_cv_reports(reports, l.cv_csv());
        jsonio::write_file(nlohmann::json(reports), l.cv_json());
        for (std::size_t i = 0; i < models.size(); ++i) jsonio::write_file(nlohmann::json(models[i]), l.classifier(c.classifiers[i]));

        StageSummary s{"train", {}};
        s.add("models", std::to_string(models.size()));
        double worst = 1.0;
        for (const auto& r : reports) worst = std::min(worst, r.accuracy);
        s.add("min_cv_accuracy", csv::format_fixed(worst, 4));
        return TrainStage{std::move(reports), std::move(s)};
    });
}

inline StageSummary cmd_train(const RunConfig& c, const RunOptions& opt = {}) { return run_train(c, opt).summary; }

struct CorrelationRow {
    std::string strategy;
    std::string metric;
    std::string stat;
    double r;        // NaN when undefined (constant input)
    double p_value;  // NaN when undefined
};

struct BacktestStage {
    std::map<std::string, BacktestReport> benchmarks;                     // asset id -> buy-hold
    std::map<std::string, std::vector<BacktestReport>> strategies;        // strategy id -> per-classifier
    std::vector<CorrelationRow> correlations;
    std::map<ClassifierKind, double> test_agreement;                      // only with ground truth
    StageSummary summary;
};

inline BacktestStage run_backtest(const RunConfig& c, const RunOptions& = {}) {
    return detail::in_stage("backtest", [&] {
        validate(c);
        auto l = layout(c);
        detail::require(l.train_scores(), "pca");
        detail::require(l.test_scores(), "pca");
        detail::require(l.cv_json(), "train");
        for (auto k : c.classifiers) detail::require(l.classifier(k), "train");

        ScoreMatrix train = read_scores(l.train_scores());
        ScoreMatrix test = read_scores(l.test_scores());
        std::vector<Date> all_dates = train.dates;
        all_dates.insert(all_dates.end(), test.dates.begin(), test.dates.end());
        Eigen::MatrixXd all_scores(train.rows() + test.rows(), train.dims());
        all_scores << train.scores, test.scores;
        auto cv = jsonio::read_file(l.cv_json()).get<std::vector<CvReport>>();

        AssetReturns assets = load_asset_returns(c.assets_path);
        AssetReturns window = window_after(assets, c.split_date);
        if (window.size() == 0) throw data_error("EmptyWindow", "no asset returns after the split date");

        const auto nk = c.classifiers.size();
        std::vector<Labels> predictions(nk);
        std::vector<RegimeSignal> signals(nk);
        AssetReturns traded;
        for (std::size_t i = 0; i < nk; ++i) {
            auto clf = jsonio::read_file(l.classifier(c.classifiers[i])).get<RegimeClassifier>();
            predictions[i] = predict(clf, all_scores);
            auto [sig, tr] = lag_signal(all_dates, predictions[i], window);
            signals[i] = std::move(sig);
            traded = std::move(tr);
        }
        if (traded.size() == 0) throw data_error("EmptyWindow", "no trading dates follow a panel observation");

        const fs::path out = l.backtest_dir();
        detail::ensure_dir(out / "reports");
        detail::ensure_dir(out / "wealth");
        {
            csv::Writer w(out / "predictions.csv");
            csv::Row header{"date"};
            for (auto k : c.classifiers) header.emplace_back(kind_id(k));
            w.row(header);
            const auto offset = static_cast<std::size_t>(train.rows());
            for (std::size_t t = 0; t < test.dates.size(); ++t) {
                csv::Row r{test.dates[t].to_string()};
                for (std::size_t i = 0; i < nk; ++i) r.push_back(std::to_string(predictions[i][offset + t]));
                w.row(r);
            }
        }
        {
            csv::Writer w(out / "signals.csv");
            csv::Row header{"date"};
            for (auto k : c.classifiers) header.emplace_back(kind_id(k));
            w.row(header);
            for (std::size_t t = 0; t < traded.size(); ++t) {
                csv::Row r{traded.dates[t].to_string()};
                for (std::size_t i = 0; i < nk; ++i) r.push_back(std::to_string(signals[i].regime[t]));
                w.row(r);
            }
        }

        StatsOptions so{c.excess_kurtosis};
        BacktestStage res;
        auto save = [&](const std::string& name, const BacktestReport& r) {
            jsonio::write_file(nlohmann::json(r), out / "reports" / (name + ".json"));
            write_wealth(r, out / "wealth" / (name + ".csv"));
        };

        std::vector<std::string> bench_ids = c.tail_hedge_assets;
        if (c.tactical_allocation && std::find(bench_ids.begin(), bench_ids.end(), "sp500") == bench_ids.end()) {
            bench_ids.insert(bench_ids.begin(), "sp500");
        }
        std::vector<SummaryRow> bench_rows;
        for (const auto& id : bench_ids) res.benchmarks[id] = buy_hold(traded.dates, traded.returns[detail::asset_index(id)], so);
        for (const auto& id : bench_ids) {
            save("buy_hold__" + id, res.benchmarks[id]);
            bench_rows.push_back({detail::asset_display(id), &res.benchmarks[id]});
        }
        write_summary(bench_rows, out / "buy_hold_summary.csv", false);

        std::vector<std::string> strategy_ids;
        for (const auto& id : c.tail_hedge_assets) {
            const std::string sid = "tail_hedge_" + id;
            strategy_ids.push_back(sid);
            auto& reports = res.strategies[sid];
            for (std::size_t i = 0; i < nk; ++i) {
                reports.push_back(tail_hedge(signals[i], traded.dates, traded.returns[detail::asset_index(id)], so));
            }
        }
        if (c.tactical_allocation) {
            strategy_ids.push_back("tactical_allocation");
            auto& reports = res.strategies["tactical_allocation"];
            for (std::size_t i = 0; i < nk; ++i) reports.push_back(tactical_allocation(signals[i], traded, so));
        }
        for (const auto& sid : strategy_ids) {
            const auto& reports = res.strategies[sid];
            std::vector<SummaryRow> rows;
            for (std::size_t i = 0; i < nk; ++i) {
                save(sid + "__" + std::string(kind_id(c.classifiers[i])), reports[i]);
                rows.push_back({std::string(kind_display(c.classifiers[i])), &reports[i]});
            }
            write_summary(rows, out / (sid + "_summary.csv"));
        }

        // Metric-to-performance correlations across classifier kinds.
        std::vector<CvReport> cv_aligned;
        for (auto k : c.classifiers) {
            auto it = std::find_if(cv.begin(), cv.end(), [&](const CvReport& r) { return r.kind == k; });
            if (it == cv.end()) throw data_error("StaleArtifact", "no CV report for " + std::string(kind_id(k)) + "; rerun `train`");
            cv_aligned.push_back(*it);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& sid : strategy_ids) {
            for (std::string_view metric : {"auc", "accuracy", "f1"}) {
                for (auto stat : kReportStats) {
                    CorrelationRow row{sid, std::string(metric), std::string(stat), nan, nan};
                    try {
                        auto cr = correlate_metrics(cv_aligned, res.strategies[sid], metric, stat);
                        row.r = cr.r;
                        row.p_value = cr.p_value;
                    } catch (const Error& e) {
                        if (e.code() != "ZeroVariance" && e.code() != "TooFewPoints") throw;
                    }
                    res.correlations.push_back(row);
                }
            }
        }
        {
            csv::Writer w(out / "correlations.csv");
            w.row({"strategy", "metric", "stat", "r", "p_value"});
            for (const auto& r : res.correlations) {
                w.row({r.strategy, r.metric, r.stat, std::isnan(r.r) ? "" : csv::format_fixed(r.r, 3),
                       std::isnan(r.p_value) ? "" : csv::format_fixed(r.p_value, 4)});
            }
        }

        StageSummary s{"backtest", {}};
        s.add("models", std::to_string(nk));
        s.add("days", std::to_string(traded.size()));
        s.add("start", traded.dates.front().to_string());
        s.add("end", traded.dates.back().to_string());

        if (!c.truth_path.empty() && fs::exists(c.truth_path)) {
            auto [td, tl] = read_labels(c.truth_path);
            csv::Writer w(out / "regime_agreement.csv");
            w.row({"model", "test_agreement"});
            const auto offset = static_cast<std::size_t>(train.rows());
            double worst = 1.0;
            for (std::size_t i = 0; i < nk; ++i) {
                Labels test_pred(predictions[i].begin() + static_cast<std::ptrdiff_t>(offset), predictions[i].end());
                double a = label_agreement(test.dates, test_pred, td, tl);
                res.test_agreement[c.classifiers[i]] = a;
                worst = std::min(worst, a);
                w.row({std::string(kind_id(c.classifiers[i])), csv::format_fixed(a, 4)});
            }
            s.add("min_test_agreement", csv::format_fixed(worst, 4));
        }
        res.summary = std::move(s);
        return res;
    });
}

inline StageSummary cmd_backtest(const RunConfig& c, const RunOptions& opt = {}) { return run_backtest(c, opt).summary; }

struct PipelineResult {
    ClusterModel cluster;
    int k = 0;
    std::vector<CvReport> cv;
    BacktestStage backtest;
    std::vector<StageSummary> stages;
};

/// ingest -> pca -> cluster -> train -> backtest.
inline PipelineResult run_pipeline(const RunConfig& c, const RunOptions& opt = {}) {
    PipelineResult out;
    out.stages.push_back(cmd_ingest(c, opt));
    out.stages.push_back(cmd_pca(c, opt));
    auto cl = run_cluster(c, opt);
    out.cluster = cl.selection.model;
    out.k = cl.selection.best_k;
    out.stages.push_back(cl.summary);
    auto tr = run_train(c, opt);
    out.cv = tr.cv;
    out.stages.push_back(tr.summary);
    out.backtest = run_backtest(c, opt);
    out.stages.push_back(out.backtest.summary);
    return out;
}

inline StageSummary cmd_run(const RunConfig& c, const RunOptions& opt = {}) {
    auto res = run_pipeline(c, opt);
    StageSummary s{"run", {}};
    s.add("k", std::to_string(res.k));
    s.add("dir", run_directory(c).string());
    for (const auto& st : res.stages) {
        for (const auto& [key, value] : st.fields) {
            if (key == "min_test_agreement" || key == "components" || key == "days") s.add(key, value);
        }
    }
    return s;
}

}  // namespace regime

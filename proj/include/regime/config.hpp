#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "regime/classify.hpp"
#include "regime/date.hpp"
#include "regime/error.hpp"
#include "regime/json_util.hpp"
#include "regime/panel.hpp"
#include "regime/synth.hpp"

namespace regime {

/// Every knob of a pipeline run. Defaults are the published configuration:
/// 90% variance threshold, k searched over 2..6, 100 k-means restarts,
/// 10-fold CV, train/test split at 2013-12-31.
struct RunConfig {
    std::string panel_path = "panel.csv";
    std::string assets_path = "assets.csv";
    std::string truth_path;  // optional ground-truth labels (date, regime)
    std::string output_dir = "out";

    std::string date_column = "date";
    LeadingMissingPolicy leading_missing = LeadingMissingPolicy::Error;
    Date split_date{2013, 12, 31};
    double variance_threshold = 0.90;
    int k_min = 2;
    int k_max = 6;
    int n_init = 100;
    int max_iter = 300;
    int cv_folds = 10;
    CvMode cv_mode = CvMode::Block;
    std::vector<ClassifierKind> classifiers{kAllKinds.begin(), kAllKinds.end()};
    HyperParams hyper;
    std::vector<std::string> tail_hedge_assets{"sp500", "crude"};
    bool tactical_allocation = true;
    bool excess_kurtosis = false;
    std::uint64_t seed = 0;
    synth::MarketSpec synth;

    friend bool operator==(const RunConfig& a, const RunConfig& b);
};

/// Restores the published parameter values, leaving paths and seed alone.
inline void apply_published_defaults(RunConfig& c) {
    RunConfig d;
    c.split_date = d.split_date;
    c.variance_threshold = d.variance_threshold;
    c.k_min = d.k_min;
    c.k_max = d.k_max;
    c.n_init = d.n_init;
    c.cv_folds = d.cv_folds;
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : c.classifiers) kinds.push_back(kind_id(k));
    nlohmann::json laws = nlohmann::json::array();
    for (const auto& a : c.synth.assets) laws.push_back({a.mean1, a.sd1, a.mean2, a.sd2});
    j = nlohmann::json{
        {"paths", {{"panel", c.panel_path}, {"assets", c.assets_path}, {"truth", c.truth_path}, {"output", c.output_dir}}},
        {"date_column", c.date_column},
        {"leading_missing", c.leading_missing == LeadingMissingPolicy::Error ? "error" : "zero"},
        {"split_date", c.split_date.to_string()},
        {"variance_threshold", c.variance_threshold},
        {"k_range", {c.k_min, c.k_max}},
        {"n_init", c.n_init},
        {"max_iter", c.max_iter},
        {"cv_folds", c.cv_folds},
        {"cv_mode", c.cv_mode == CvMode::Block ? "block" : "shuffled"},
        {"classifiers", kinds},
        {"hyper",
         {{"ridge", c.hyper.ridge},
          {"logistic_max_iter", c.hyper.logistic_max_iter},
          {"logistic_tol", c.hyper.logistic_tol},
          {"tree_max_depth", c.hyper.tree_max_depth},
          {"tree_min_leaf", c.hyper.tree_min_leaf},
          {"boost_rounds", c.hyper.boost_rounds},
          {"nb_var_floor", c.hyper.nb_var_floor}}},
        {"strategies", {{"tail_hedge_assets", c.tail_hedge_assets}, {"tactical_allocation", c.tactical_allocation}}},
        {"excess_kurtosis", c.excess_kurtosis},
        {"seed", c.seed},
        {"synth",
         {{"start", c.synth.start.to_string()},
          {"n_days", c.synth.n_days},
          {"n_series", c.synth.n_series},
          {"n_sparse", c.synth.n_sparse},
          {"sparse_every", c.synth.sparse_every},
          {"p_stay_normal", c.synth.p_stay_normal},
          {"p_stay_crisis", c.synth.p_stay_crisis},
          {"crisis_shift", c.synth.crisis_shift},
          {"series_scale", c.synth.series_scale},
          {"asset_laws", laws}}},
    };
}

namespace detail {

/// Copies `key` from `obj` into `out` when present; rejects unknown keys.
class Reader {
public:
    Reader(const nlohmann::json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw config_error("BadConfig", where_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw config_error("BadConfig", where_ + "." + key + ": " + e.what());
        }
    }

    const nlohmann::json* child(const char* key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw config_error("UnknownKey", "unknown config key '" + where_ + "." + key + "'");
            }
        }
    }

private:
    const nlohmann::json& obj_;
    std::string where_;
    std::vector<std::string> seen_;
};

inline Date parse_config_date(const std::string& s, const char* key) {
    try {
        return Date::parse(s);
    } catch (const Error&) {
        throw config_error("BadConfig", std::string(key) + ": invalid date '" + s + "'");
    }
}

}  // namespace detail

/// Overlays `j` onto `c`; keys absent from `j` keep their current value.
inline void merge_config(const nlohmann::json& j, RunConfig& c) {
    detail::Reader r(j, "config");
    if (auto* p = r.child("paths")) {
        detail::Reader pr(*p, "paths");
        pr.get("panel", c.panel_path);
        pr.get("assets", c.assets_path);
        pr.get("truth", c.truth_path);
        pr.get("output", c.output_dir);
        pr.finish();
    }
    r.get("date_column", c.date_column);
    std::string s;
    if (auto* v = r.child("leading_missing")) {
        s = v->get<std::string>();
        if (s == "error") c.leading_missing = LeadingMissingPolicy::Error;
        else if (s == "zero") c.leading_missing = LeadingMissingPolicy::FillZero;
        else throw config_error("BadConfig", "leading_missing must be 'error' or 'zero'");
    }
    if (auto* v = r.child("split_date")) c.split_date = detail::parse_config_date(v->get<std::string>(), "split_date");
    r.get("variance_threshold", c.variance_threshold);
    if (auto* v = r.child("k_range")) {
        if (!v->is_array() || v->size() != 2) throw config_error("BadConfig", "k_range must be [k_min, k_max]");
        c.k_min = (*v)[0].get<int>();
        c.k_max = (*v)[1].get<int>();
    }
    r.get("n_init", c.n_init);
    r.get("max_iter", c.max_iter);
    r.get("cv_folds", c.cv_folds);
    if (auto* v = r.child("cv_mode")) {
        s = v->get<std::string>();
        if (s == "block") c.cv_mode = CvMode::Block;
        else if (s == "shuffled") c.cv_mode = CvMode::Shuffled;
        else throw config_error("BadConfig", "cv_mode must be 'block' or 'shuffled'");
    }
    if (auto* v = r.child("classifiers")) {
        c.classifiers.clear();
        for (const auto& k : *v) c.classifiers.push_back(parse_kind(k.get<std::string>()));
    }
    if (auto* h = r.child("hyper")) {
        detail::Reader hr(*h, "hyper");
        hr.get("ridge", c.hyper.ridge);
        hr.get("logistic_max_iter", c.hyper.logistic_max_iter);
        hr.get("logistic_tol", c.hyper.logistic_tol);
        hr.get("tree_max_depth", c.hyper.tree_max_depth);
        hr.get("tree_min_leaf", c.hyper.tree_min_leaf);
        hr.get("boost_rounds", c.hyper.boost_rounds);
        hr.get("nb_var_floor", c.hyper.nb_var_floor);
        hr.finish();
    }
    if (auto* st = r.child("strategies")) {
        detail::Reader sr(*st, "strategies");
        sr.get("tail_hedge_assets", c.tail_hedge_assets);
        sr.get("tactical_allocation", c.tactical_allocation);
        sr.finish();
    }
    r.get("excess_kurtosis", c.excess_kurtosis);
    r.get("seed", c.seed);
    if (auto* sy = r.child("synth")) {
        detail::Reader yr(*sy, "synth");
        if (auto* v = yr.child("start")) c.synth.start = detail::parse_config_date(v->get<std::string>(), "synth.start");
        yr.get("n_days", c.synth.n_days);
        yr.get("n_series", c.synth.n_series);
        yr.get("n_sparse", c.synth.n_sparse);
        yr.get("sparse_every", c.synth.sparse_every);
        yr.get("p_stay_normal", c.synth.p_stay_normal);
        yr.get("p_stay_crisis", c.synth.p_stay_crisis);
        yr.get("crisis_shift", c.synth.crisis_shift);
        yr.get("series_scale", c.synth.series_scale);
        if (auto* v = yr.child("asset_laws")) {
            if (!v->is_array() || v->size() != 4) throw config_error("BadConfig", "synth.asset_laws needs four entries");
            for (std::size_t k = 0; k < 4; ++k) {
                const auto& a = (*v)[k];
                if (!a.is_array() || a.size() != 4) throw config_error("BadConfig", "asset law must be [mean1, sd1, mean2, sd2]");
                c.synth.assets[k] = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()};
            }
        }
        yr.finish();
    }
    r.finish();
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    c = RunConfig{};
    merge_config(j, c);
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return nlohmann::json(a) == nlohmann::json(b);
}

inline void validate(const RunConfig& c) {
    if (!(c.variance_threshold > 0.0 && c.variance_threshold <= 1.0)) throw config_error("BadConfig", "variance_threshold must lie in (0, 1]");
    if (c.k_min < 2 || c.k_min > c.k_max) throw config_error("BadConfig", "k_range must satisfy 2 <= k_min <= k_max");
    if (c.n_init < 1) throw config_error("BadConfig", "n_init must be positive");
    if (c.max_iter < 1) throw config_error("BadConfig", "max_iter must be positive");
    if (c.cv_folds < 2) throw config_error("BadConfig", "cv_folds must be at least 2");
    if (c.classifiers.empty()) throw config_error("BadConfig", "at least one classifier is required");
    for (const auto& a : c.tail_hedge_assets) {
        if (std::find(kAssetColumns.begin(), kAssetColumns.end(), a) == kAssetColumns.end()) {
            throw config_error("BadConfig", "unknown tail-hedge asset '" + a + "'");
        }
    }
    if (c.synth.n_days < 10 || c.synth.n_series < 1 || c.synth.n_sparse < 0 || c.synth.n_sparse > c.synth.n_series ||
        c.synth.sparse_every < 1) {
        throw config_error("BadConfig", "invalid synth dimensions");
    }
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
    nlohmann::json j;
    {
        std::ifstream in(path);
        if (!in) throw config_error("ConfigNotFound", "cannot open config '" + path.string() + "'");
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw config_error("BadConfig", path.string() + ": " + e.what());
        }
    }
    try {
        merge_config(j, base);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("BadConfig", e.what());
    }
    return base;
}

/// FNV-1a over the canonical config document, excluding the output directory.
inline std::string config_digest(const RunConfig& c) {
    nlohmann::json j = c;
    j["paths"].erase("output");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::filesystem::path run_directory(const RunConfig& c) {
    return std::filesystem::path(c.output_dir) / ("run-" + config_digest(c));
}

}  // namespace regime

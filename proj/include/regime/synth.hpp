#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regime/backtest.hpp"
#include "regime/cluster.hpp"
#include "regime/panel.hpp"
#include "regime/random.hpp"

namespace regime::synth {

/// Per-regime normal parameters of one asset's daily return.
struct AssetLaw {
    double mean1, sd1, mean2, sd2;
};

struct MarketSpec {
    Date start{1994, 1, 7};
    int n_days = 3000;
    int n_series = 12;
    int n_sparse = 2;        // series observed only every `sparse_every` days
    int sparse_every = 5;
    double p_stay_normal = 0.995;
    double p_stay_crisis = 0.97;
    double crisis_shift = 2.0;  // mean shift per series in noise-sd units
    double series_scale = 0.01;
    std::array<AssetLaw, 4> assets{{
        {0.0006, 0.009, -0.004, 0.025},   // sp500
        {0.0004, 0.020, -0.006, 0.040},   // crude
        {0.0001, 0.009, 0.002, 0.015},    // gold
        {0.0001, 0.004, 0.001, 0.006},    // bonds
    }};
};

struct Market {
    Panel panel;  // with missing cells on sparse series
    AssetReturns assets;
    std::vector<Date> dates;
    Labels truth;
};

/// Weekdays starting at `start`.
inline std::vector<Date> business_days(Date start, int n) {
    std::vector<Date> out;
    Date d = start;
    while (static_cast<int>(out.size()) < n) {
        if (d.iso_weekday_index() < 5) out.push_back(d);
        d = d.next_day();
    }
    return out;
}

/// Two-regime market: a persistent Markov chain picks the regime of each
/// day; panel rows are normal noise shifted along a fixed random direction
/// during crises, and asset returns are drawn from the regime's law.
inline Market generate_market(const MarketSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    Market m;
    m.dates = business_days(spec.start, spec.n_days);
    const auto n = static_cast<std::size_t>(spec.n_days);

    m.truth.resize(n);
    int state = 1;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            const double stay = state == 1 ? spec.p_stay_normal : spec.p_stay_crisis;
            if (rng.uniform() >= stay) state = 3 - state;
        }
        m.truth[t] = state;
    }

    Eigen::VectorXd direction(spec.n_series);
    for (int j = 0; j < spec.n_series; ++j) direction(j) = rng.uniform() < 0.5 ? -1.0 : 1.0;

    Eigen::MatrixXd values(spec.n_days, spec.n_series);
    for (std::size_t t = 0; t < n; ++t) {
        for (int j = 0; j < spec.n_series; ++j) {
            double z = rng.normal();
            if (m.truth[t] == 2) z += spec.crisis_shift * direction(j);
            values(static_cast<Eigen::Index>(t), j) = spec.series_scale * z;
        }
    }
    for (int j = spec.n_series - spec.n_sparse; j < spec.n_series; ++j) {
        for (std::size_t t = 1; t < n; ++t) {
            if (t % static_cast<std::size_t>(spec.sparse_every) != 0) values(static_cast<Eigen::Index>(t), j) = Panel::missing();
        }
    }
    std::vector<std::string> names;
    for (int j = 0; j < spec.n_series; ++j) names.push_back("series_" + std::to_string(j + 1));
    m.panel = Panel(m.dates, std::move(values), std::move(names));

    m.assets.dates = m.dates;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& law = spec.assets[k];
        auto& col = m.assets.returns[k];
        col.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            col[t] = m.truth[t] == 1 ? rng.normal(law.mean1, law.sd1) : rng.normal(law.mean2, law.sd2);
        }
    }
    return m;
}

struct Blobs {
    ScoreMatrix scores;
    Labels truth;  // 1-based blob index
};

/// `n_per` isotropic normal points around each center.
inline Blobs gaussian_blobs(const Eigen::MatrixXd& centers, int n_per, double sd, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index k = centers.rows();
    const Eigen::Index d = centers.cols();
    Blobs b;
    b.scores.scores.resize(k * n_per, d);
    b.scores.dates = business_days(Date{2000, 1, 3}, static_cast<int>(k * n_per));
    for (Eigen::Index c = 0; c < k; ++c) {
        for (int i = 0; i < n_per; ++i) {
            const Eigen::Index row = c * n_per + i;
            for (Eigen::Index j = 0; j < d; ++j) b.scores.scores(row, j) = centers(c, j) + sd * rng.normal();
            b.truth.push_back(static_cast<int>(c + 1));
        }
    }
    return b;
}

/// `k` centers on distinct axes of a d-dimensional space, `separation` apart from the origin.
inline Eigen::MatrixXd axis_centers(int k, int d, double separation) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, d);
    for (int i = 0; i < k; ++i) c(i, i % d) = separation * (1 + i / d);
    return c;
}

}  // namespace regime::synth

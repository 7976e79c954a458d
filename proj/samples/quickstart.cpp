// Library walk-through on a synthetic market: PCA, k selection, one
// classifier and the tail-hedge strategy, all in memory.

#include <iostream>

#include "regime/backtest.hpp"
#include "regime/classify.hpp"
#include "regime/cluster.hpp"
#include "regime/pca.hpp"
#include "regime/synth.hpp"

int main() {
    using namespace regime;

    synth::MarketSpec spec;
    spec.n_days = 1500;
    auto market = synth::generate_market(spec, 42);

    Panel full = impute_forward(market.panel);
    auto split = split_at(full, market.dates[999]);

    Standardizer st = fit_standardizer(split.train);
    PcaModel pca = fit_pca(apply_standardizer(st, split.train), st);
    pca.n_selected = select_components(pca, 0.90);
    ScoreMatrix train = transform_raw(pca, split.train);
    ScoreMatrix test = transform_raw(pca, split.test);
    std::cout << "components: " << pca.n_selected << " of " << pca.loadings.cols() << '\n';

    auto sel = select_k(train, 2, 6, {.n_init = 20, .seed = 1});
    for (const auto& [k, width] : sel.silhouette_by_k) std::cout << "k=" << k << " silhouette=" << width << '\n';

    auto clf = fit(ClassifierKind::Lda, train, sel.model.train_labels);
    Labels predicted = predict(clf, test);

    AssetReturns window = window_after(market.assets, split.split_date);
    auto [signal, traded] = lag_signal(test.dates, predicted, window);
    auto hedge = tail_hedge(signal, traded.dates, traded.of(Asset::Sp500));
    auto bench = buy_hold(traded.dates, traded.of(Asset::Sp500));
    std::cout << "tail hedge cumulative " << hedge.cumulative_return_pct << " vs buy-hold " << bench.cumulative_return_pct
              << '\n';
}

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "boruta/data.hpp"
#include "boruta/forest.hpp"
#include "boruta/importance.hpp"
#include "boruta/rng.hpp"

namespace boruta {

struct RegressionMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double r2 = std::numeric_limits<double>::quiet_NaN();
    bool r2_defined = false;
};

struct ClassificationMetrics {
    double accuracy = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    bool zero_division = false;  // precision/recall hit an empty denominator
};

inline RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                            const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 2)
        throw DataError("regression_metrics needs equal lengths >= 2");
    RegressionMetrics m;
    double n = static_cast<double>(y_true.size());
    double mean = 0.0;
    for (double y : y_true) mean += y;
    mean /= n;

    double sse = 0.0, sae = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        double d = y_true[i] - y_pred[i];
        sse += d * d;
        sae += std::abs(d);
        double c = y_true[i] - mean;
        sst += c * c;
    }
    m.mse = sse / n;
    m.mae = sae / n;
    if (sst > 0.0) {
        m.r2 = 1.0 - sse / sst;
        m.r2_defined = true;
    }
    return m;
}

inline ClassificationMetrics classification_metrics(
    const std::vector<int>& y_true, const std::vector<int>& y_pred,
    int positive_class) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw DataError("classification_metrics needs equal non-empty inputs");
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        bool t = y_true[i] == positive_class;
        bool p = y_pred[i] == positive_class;
        if (t && p) ++tp;
        else if (!t && p) ++fp;
        else if (t && !p) ++fn;
        else ++tn;
    }
    ClassificationMetrics m;
    m.accuracy = (tp + tn) / static_cast<double>(y_true.size());
    if (tp + fp > 0) m.precision = tp / (tp + fp);
    else m.zero_division = true;
    if (tp + fn > 0) m.recall = tp / (tp + fn);
    else m.zero_division = true;
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

inline std::vector<int> argmax_labels(const Prediction& pred) {
    std::vector<int> labels(pred.n);
    for (std::size_t r = 0; r < pred.n; ++r) {
        const double* row = pred.row(r);
        int best = 0;
        for (std::size_t c = 1; c < pred.num_classes; ++c)
            if (row[c] > row[best]) best = static_cast<int>(c);
        labels[r] = best;
    }
    return labels;
}

struct CvMetrics {
    Task task;
    RegressionMetrics regression;
    ClassificationMetrics classification;
    std::size_t folds = 0;
};

inline CvMetrics cross_validate(const DataMatrix& data,
                                const std::vector<std::size_t>& feature_subset,
                                const ForestParams& params, std::size_t k,
                                std::uint64_t seed, unsigned threads = 0) {
    DataMatrix subset = select_columns(data, feature_subset);
    auto folds = kfold_split(subset, k, seed);

    CvMetrics out;
    out.task = data.task;
    out.folds = k;
    std::size_t defined_r2 = 0;

    for (std::size_t f = 0; f < folds.size(); ++f) {
        // folds must never leak training rows into the held-out set
        std::set<std::size_t> train_set(folds[f].train.begin(),
                                        folds[f].train.end());
        for (std::size_t i : folds[f].test)
            if (train_set.count(i))
                throw DataError("fold leakage: index in both partitions");

        DataMatrix train = select_rows(subset, folds[f].train);
        DataMatrix test = select_rows(subset, folds[f].test);
        ForestParams fp = params;
        fp.seed = derive_seed(seed, 7000 + f);
        Forest forest = fit_forest(train, fp, threads);
        Prediction pred = predict(forest, test.X, threads);

        if (data.task.is_classification()) {
            std::vector<int> y_true(test.n());
            for (std::size_t i = 0; i < test.n(); ++i) y_true[i] = test.label(i);
            auto m = classification_metrics(y_true, argmax_labels(pred), 1);
            out.classification.accuracy += m.accuracy;
            out.classification.recall += m.recall;
            out.classification.precision += m.precision;
            out.classification.f1 += m.f1;
            out.classification.zero_division |= m.zero_division;
        } else {
            auto m = regression_metrics(test.target, pred.values);
            out.regression.mse += m.mse;
            out.regression.mae += m.mae;
            if (m.r2_defined) {
                if (!out.regression.r2_defined) out.regression.r2 = 0.0;
                out.regression.r2 += m.r2;
                out.regression.r2_defined = true;
                ++defined_r2;
            }
        }
    }

    double kk = static_cast<double>(k);
    if (data.task.is_classification()) {
        out.classification.accuracy /= kk;
        out.classification.recall /= kk;
        out.classification.precision /= kk;
        out.classification.f1 /= kk;
    } else {
        out.regression.mse /= kk;
        out.regression.mae /= kk;
        if (out.regression.r2_defined)
            out.regression.r2 /= static_cast<double>(defined_r2);
    }
    return out;
}

struct BenchmarkRecord {
    std::size_t n = 0;
    std::size_t p = 0;
    int num_trees = 0;
    double avg_depth = 0.0;
    double fit_s = 0.0;
    double importance_s = 0.0;
    double total_s = 0.0;
};

namespace detail {

// Generic regression data for timing runs at arbitrary (n, p); the target
// mixes the first few features so trees have structure to find.
inline DataMatrix make_bench_data(std::size_t n, std::size_t p,
                                  std::uint64_t seed) {
    DataMatrix d;
    d.task = Task::regression();
    d.X = Matrix(n, p);
    d.target.resize(n);
    for (std::size_t j = 0; j < p; ++j)
        d.feature_names.push_back("x" + std::to_string(j));
    Rng rng(derive_seed(seed, 0x62656e6368ULL));
    for (double& v : d.X.v) v = rng.uniform();
    std::size_t used = std::min<std::size_t>(10, p);
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < used; ++j)
            y += (0.5 + 0.3 * static_cast<double>(j)) * d.X.at(i, j);
        d.target[i] = y + rng.normal(0.0, 0.01);
    }
    return d;
}

template <typename F>
double time_median_of_3(F&& fn) {
    fn();  // warm-up, discarded
    std::vector<double> times;
    for (int rep = 0; rep < 3; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        times.push_back(std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
    }
    std::sort(times.begin(), times.end());
    return times[1];
}

}  // namespace detail

inline std::vector<BenchmarkRecord> benchmark(
    const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
    const ForestParams& params, ImportanceMethod method,
    unsigned threads = 0) {
    std::vector<BenchmarkRecord> records;
    for (auto [n, p] : sizes) {
        DataMatrix d = detail::make_bench_data(n, p, params.seed);
        BenchmarkRecord rec;
        rec.n = n;
        rec.p = p;
        rec.num_trees = params.num_trees;

        Forest forest;
        rec.fit_s = detail::time_median_of_3(
            [&] { forest = fit_forest(d, params, threads); });
        rec.avg_depth = forest_stats(forest).avg_depth;

        if (method == ImportanceMethod::TreeImp) {
            rec.importance_s =
                detail::time_median_of_3([&] { impurity_importance(forest); });
        } else {
            rec.importance_s = detail::time_median_of_3([&] {
                permutation_importance(forest, d.X, params.seed, threads);
            });
        }
        rec.total_s = rec.fit_s + rec.importance_s;
        records.push_back(rec);
    }
    return records;
}

}  // namespace boruta

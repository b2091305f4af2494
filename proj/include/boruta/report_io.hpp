#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "boruta/boruta.hpp"
#include "boruta/eval.hpp"

namespace boruta {

inline nlohmann::json report_to_json(const SelectionReport& report) {
    nlohmann::json features;
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        nlohmann::json f;
        f["state"] = report.state[j];
        f["rank"] = report.rank[j];
        f["hits"] = report.hits[j];
        if (std::isnan(report.median_importance[j]))
            f["median_importance"] = nullptr;
        else
            f["median_importance"] = report.median_importance[j];
        features[report.feature_names[j]] = std::move(f);
    }
    nlohmann::json j;
    j["seed"] = report.seed;
    j["iterations_run"] = report.iterations_run;
    j["features"] = std::move(features);
    return j;
}

inline nlohmann::json aggregate_to_json(const AggregateResult& agg) {
    nlohmann::json features;
    for (std::size_t j = 0; j < agg.feature_names.size(); ++j) {
        nlohmann::json f;
        f["consensus_state"] = agg.consensus_state[j];
        if (std::isnan(agg.median_importance[j]))
            f["median_importance"] = nullptr;
        else
            f["median_importance"] = agg.median_importance[j];
        features[agg.feature_names[j]] = std::move(f);
    }
    nlohmann::json j;
    j["features"] = std::move(features);
    return j;
}

inline nlohmann::json importance_to_json(const ImportanceVector& imp,
                                         const std::vector<std::string>& names) {
    nlohmann::json j;
    for (std::size_t i = 0; i < imp.scores.size(); ++i)
        j[names[i]] = imp.scores[i];
    return j;
}

// long format: iteration,feature,importance (absent iterations skipped)
inline void write_history_csv(const SelectionReport& report,
                              std::ostream& out) {
    out.precision(17);
    out << "iteration,feature,importance\n";
    for (std::size_t t = 0; t < report.history.size(); ++t)
        for (std::size_t j = 0; j < report.feature_names.size(); ++j)
            if (!std::isnan(report.history[t][j]))
                out << (t + 1) << ',' << report.feature_names[j] << ','
                    << report.history[t][j] << '\n';
}

struct HistoryRecord {
    int iteration;
    std::string feature;
    double importance;
};

inline std::vector<HistoryRecord> read_history_csv(std::istream& in) {
    std::vector<HistoryRecord> records;
    std::string line;
    if (!std::getline(in, line) || line.rfind("iteration,feature,", 0) != 0)
        throw DataError("malformed history CSV: bad header");
    std::size_t row = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 3)
            throw DataError("malformed history CSV at line " +
                            std::to_string(row));
        HistoryRecord r;
        double it, imp;
        if (!detail::parse_double(cells[0], it) ||
            !detail::parse_double(cells[2], imp))
            throw DataError("malformed history CSV at line " +
                            std::to_string(row));
        r.iteration = static_cast<int>(it);
        r.feature = detail::trim(cells[1]);
        r.importance = imp;
        records.push_back(std::move(r));
    }
    return records;
}

struct BoxStats {
    std::string feature;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    int state = 0;
};

namespace detail {

// type-7 (linear interpolation) quantile of a sorted sample
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.size() == 1) return v[0];
    double h = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

// Box-plot statistics per feature over all history records, ordered by
// descending median importance. States come from an optional name -> state
// map (0 when absent).
inline std::vector<BoxStats> boxplot_stats(
    const std::vector<HistoryRecord>& records,
    const std::map<std::string, int>& states = {}) {
    if (records.empty()) throw DataError("no history records");
    std::map<std::string, std::vector<double>> by_feature;
    for (const auto& r : records) by_feature[r.feature].push_back(r.importance);

    std::vector<BoxStats> out;
    for (auto& [name, vals] : by_feature) {
        std::sort(vals.begin(), vals.end());
        BoxStats b;
        b.feature = name;
        b.min = vals.front();
        b.max = vals.back();
        b.q1 = detail::quantile_sorted(vals, 0.25);
        b.median = detail::quantile_sorted(vals, 0.5);
        b.q3 = detail::quantile_sorted(vals, 0.75);
        auto it = states.find(name);
        b.state = it == states.end() ? 0 : it->second;
        out.push_back(std::move(b));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const BoxStats& a, const BoxStats& b) {
                         return a.median > b.median;
                     });
    return out;
}

inline void write_boxplot_csv(const std::vector<BoxStats>& stats,
                              std::ostream& out) {
    out.precision(17);
    out << "feature,min,q1,median,q3,max,state\n";
    for (const auto& b : stats)
        out << b.feature << ',' << b.min << ',' << b.q1 << ',' << b.median
            << ',' << b.q3 << ',' << b.max << ',' << b.state << '\n';
}

inline void write_benchmark_csv(const std::vector<BenchmarkRecord>& records,
                                std::ostream& out) {
    out.precision(17);
    out << "n,p,trees,avg_depth,fit_s,importance_s,total_s\n";
    for (const auto& r : records)
        out << r.n << ',' << r.p << ',' << r.num_trees << ',' << r.avg_depth
            << ',' << r.fit_s << ',' << r.importance_s << ',' << r.total_s
            << '\n';
}

inline nlohmann::json metrics_to_json(const CvMetrics& m) {
    nlohmann::json j;
    j["folds"] = m.folds;
    if (m.task.is_classification()) {
        j["task"] = "classification";
        j["accuracy"] = m.classification.accuracy;
        j["recall"] = m.classification.recall;
        j["precision"] = m.classification.precision;
        j["f1"] = m.classification.f1;
        j["zero_division"] = m.classification.zero_division;
    } else {
        j["task"] = "regression";
        j["mse"] = m.regression.mse;
        j["mae"] = m.regression.mae;
        if (m.regression.r2_defined)
            j["r2"] = m.regression.r2;
        else
            j["r2"] = nullptr;
    }
    return j;
}

}  // namespace boruta

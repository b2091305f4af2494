#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "boruta/data.hpp"
#include "boruta/forest.hpp"
#include "boruta/importance.hpp"
#include "boruta/rng.hpp"

namespace boruta {

enum class ShadowMode { PerColumn, JointRows };

struct BorutaConfig {
    int max_iterations = 100;
    double alpha = 0.05;
    bool bonferroni = true;
    ImportanceMethod method = ImportanceMethod::TreeImp;
    ShadowMode shadow_mode = ShadowMode::PerColumn;
    ForestParams forest;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_iterations < 1) throw DataError("max_iterations must be >= 1");
        if (alpha <= 0 || alpha >= 1) throw DataError("alpha must lie in (0, 1)");
        forest.validate();
    }
};

enum class Decision { Accept, Reject, KeepUndecided };

struct SelectionReport {
    std::vector<std::string> feature_names;
    std::vector<int> state;                    // -1, 0, 1
    std::vector<int> rank;                     // accepted 1, undecided 2, rejected 3..
    std::vector<int> hits;
    std::vector<std::vector<double>> history;  // iterations x p, NaN = not in model
    std::vector<double> median_importance;     // over iterations in the model
    int iterations_run = 0;
    std::vector<double> iteration_seconds;
    std::uint64_t seed = 0;
};

// Shadow matrix: copy of X, self-concatenated column-wise until at least 5
// columns, then shuffled across rows. Each shadow column is a permutation of
// its source column's values.
inline Matrix build_shadow(const Matrix& X, ShadowMode mode,
                           std::uint64_t seed) {
    if (X.cols == 0) throw DataError("cannot build shadows of zero columns");
    Matrix sha = X;
    while (sha.cols < 5) {
        Matrix wide(sha.rows, sha.cols * 2);
        for (std::size_t r = 0; r < sha.rows; ++r)
            for (std::size_t c = 0; c < sha.cols; ++c) {
                wide.at(r, c) = sha.at(r, c);
                wide.at(r, c + sha.cols) = sha.at(r, c);
            }
        sha = std::move(wide);
    }
    Rng rng(derive_seed(seed, 0x736861ULL));
    if (mode == ShadowMode::JointRows) {
        auto perm = rng.permutation(sha.rows);
        Matrix out(sha.rows, sha.cols);
        for (std::size_t r = 0; r < sha.rows; ++r)
            for (std::size_t c = 0; c < sha.cols; ++c)
                out.at(r, c) = sha.at(perm[r], c);
        return out;
    }
    for (std::size_t c = 0; c < sha.cols; ++c) {
        auto perm = rng.permutation(sha.rows);
        std::vector<double> col = sha.column(c);
        for (std::size_t r = 0; r < sha.rows; ++r)
            sha.at(r, c) = col[perm[r]];
    }
    return sha;
}

inline void update_hits(const std::vector<double>& imp_cur,
                        const std::vector<double>& imp_sha,
                        std::vector<int>& hits) {
    if (imp_cur.size() != hits.size())
        throw DataError("update_hits: length mismatch");
    double max_sha = -std::numeric_limits<double>::infinity();
    for (double s : imp_sha) max_sha = std::max(max_sha, s);
    for (std::size_t i = 0; i < imp_cur.size(); ++i)
        if (imp_cur[i] > max_sha) ++hits[i];
}

namespace detail {

// Exact binomial tail sums for p = 1/2. Pascal sums are exact in double up
// to t = 56; beyond that a lgamma-based evaluation takes over.
inline double binom_pmf_log(int t, int k) {
    return std::lgamma(t + 1.0) - std::lgamma(k + 1.0) -
           std::lgamma(t - k + 1.0) - t * std::log(2.0);
}

}  // namespace detail

// P[Bin(t, 1/2) >= h]
inline double binom_tail_upper(int t, int h) {
    if (h <= 0) return 1.0;
    if (h > t) return 0.0;
    if (t <= 56) {
        double coef = 1.0, sum = 0.0;  // C(t, t) = 1, walk k = t down to h
        for (int k = t; k >= h; --k) {
            sum += coef;
            coef = coef * k / (t - k + 1.0);
        }
        return std::ldexp(sum, -t);
    }
    double sum = 0.0;
    for (int k = h; k <= t; ++k) sum += std::exp(detail::binom_pmf_log(t, k));
    return std::min(1.0, sum);
}

// P[Bin(t, 1/2) <= h]
inline double binom_tail_lower(int t, int h) {
    if (h < 0) return 0.0;
    if (h >= t) return 1.0;
    return binom_tail_upper(t, t - h);  // symmetry at p = 1/2
}

// Two-sided exact binomial test against Bin(t, 1/2); only undecided features
// are tested. Under Bonferroni, alpha is divided by the number of currently
// undecided features.
inline std::vector<Decision> significance_test(const std::vector<int>& hits,
                                               int t, double alpha,
                                               bool bonferroni,
                                               std::size_t num_undecided) {
    double alpha_eff =
        bonferroni && num_undecided > 0
            ? alpha / static_cast<double>(num_undecided)
            : alpha;
    std::vector<Decision> out(hits.size(), Decision::KeepUndecided);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (binom_tail_upper(t, hits[i]) < alpha_eff)
            out[i] = Decision::Accept;
        else if (binom_tail_lower(t, hits[i]) < alpha_eff)
            out[i] = Decision::Reject;
    }
    return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

inline SelectionReport run_boruta(const DataMatrix& data,
                                  const BorutaConfig& config,
                                  unsigned threads = 0) {
    config.validate();
    data.validate();
    const std::size_t p = data.p();
    if (p == 0) throw DataError("dataset has no features");

    SelectionReport report;
    report.feature_names = data.feature_names;
    report.seed = config.seed;
    report.state.assign(p, 0);
    report.hits.assign(p, 0);

    int t = 0;
    auto undecided_count = [&] {
        return static_cast<std::size_t>(
            std::count(report.state.begin(), report.state.end(), 0));
    };

    while (t < config.max_iterations && undecided_count() > 0) {
        ++t;
        auto iter_start = std::chrono::steady_clock::now();
        std::uint64_t iter_seed = derive_seed(config.seed, 1000 + t);

        std::vector<std::size_t> in_model;
        for (std::size_t j = 0; j < p; ++j)
            if (report.state[j] >= 0) in_model.push_back(j);

        DataMatrix cur = select_columns(data, in_model);
        Matrix sha =
            build_shadow(cur.X, config.shadow_mode, derive_seed(iter_seed, 1));

        DataMatrix joint;
        joint.task = data.task;
        joint.target = data.target;
        joint.X = Matrix(cur.n(), cur.p() + sha.cols);
        for (std::size_t r = 0; r < cur.n(); ++r) {
            for (std::size_t c = 0; c < cur.p(); ++c)
                joint.X.at(r, c) = cur.X.at(r, c);
            for (std::size_t c = 0; c < sha.cols; ++c)
                joint.X.at(r, cur.p() + c) = sha.at(r, c);
        }
        joint.feature_names = cur.feature_names;
        for (std::size_t c = 0; c < sha.cols; ++c)
            joint.feature_names.push_back("shadow-" + std::to_string(c + 1));

        ForestParams fp = config.forest;
        fp.seed = derive_seed(iter_seed, 2);
        Forest forest = fit_forest(joint, fp, threads);

        ImportanceVector imp =
            config.method == ImportanceMethod::TreeImp
                ? impurity_importance(forest)
                : permutation_importance(forest, joint.X,
                                         derive_seed(iter_seed, 3), threads);

        std::vector<double> imp_cur(imp.scores.begin(),
                                    imp.scores.begin() + cur.p());
        std::vector<double> imp_sha(imp.scores.begin() + cur.p(),
                                    imp.scores.end());

        std::vector<double> row(p, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < in_model.size(); ++k)
            row[in_model[k]] = imp_cur[k];
        report.history.push_back(std::move(row));

        std::vector<int> model_hits(in_model.size());
        for (std::size_t k = 0; k < in_model.size(); ++k)
            model_hits[k] = report.hits[in_model[k]];
        update_hits(imp_cur, imp_sha, model_hits);
        for (std::size_t k = 0; k < in_model.size(); ++k)
            report.hits[in_model[k]] = model_hits[k];

        std::size_t undecided = undecided_count();
        auto decisions = significance_test(report.hits, t, config.alpha,
                                           config.bonferroni, undecided);
        for (std::size_t j = 0; j < p; ++j) {
            if (report.state[j] != 0) continue;
            if (decisions[j] == Decision::Accept) report.state[j] = 1;
            if (decisions[j] == Decision::Reject) report.state[j] = -1;
        }

        report.iteration_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          iter_start)
                .count());
    }
    report.iterations_run = t;

    // median importance over iterations where the feature was in the model
    report.median_importance.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> vals;
        for (const auto& row : report.history)
            if (!std::isnan(row[j])) vals.push_back(row[j]);
        report.median_importance[j] = detail::median_of(std::move(vals));
    }

    // ranks: accepted 1, undecided 2, rejected dense from 3 by descending
    // median importance (ties to the lower feature index)
    report.rank.assign(p, 0);
    std::vector<std::size_t> rejected;
    for (std::size_t j = 0; j < p; ++j) {
        if (report.state[j] == 1)
            report.rank[j] = 1;
        else if (report.state[j] == 0)
            report.rank[j] = 2;
        else
            rejected.push_back(j);
    }
    std::sort(rejected.begin(), rejected.end(),
              [&](std::size_t a, std::size_t b) {
                  double ia = report.median_importance[a];
                  double ib = report.median_importance[b];
                  if (ia != ib) return ia > ib;
                  return a < b;
              });
    for (std::size_t k = 0; k < rejected.size(); ++k)
        report.rank[rejected[k]] = static_cast<int>(3 + k);

    return report;
}

struct AggregateResult {
    std::vector<std::string> feature_names;
    std::vector<double> median_importance;
    std::vector<int> consensus_state;
};

inline AggregateResult aggregate_runs(
    const std::vector<SelectionReport>& reports) {
    if (reports.empty()) throw DataError("no reports to aggregate");
    const auto& names = reports[0].feature_names;
    for (const auto& r : reports)
        if (r.feature_names != names)
            throw DataError("reports cover different feature sets");

    std::size_t p = names.size();
    AggregateResult agg;
    agg.feature_names = names;
    agg.median_importance.resize(p);
    agg.consensus_state.resize(p);

    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> meds;
        for (const auto& r : reports)
            if (!std::isnan(r.median_importance[j]))
                meds.push_back(r.median_importance[j]);
        agg.median_importance[j] = detail::median_of(std::move(meds));

        int votes[3] = {0, 0, 0};  // rejected, undecided, accepted
        for (const auto& r : reports) ++votes[r.state[j] + 1];
        if (votes[2] > votes[0] && votes[2] > votes[1])
            agg.consensus_state[j] = 1;
        else if (votes[0] > votes[2] && votes[0] > votes[1])
            agg.consensus_state[j] = -1;
        else
            agg.consensus_state[j] = 0;
    }
    return agg;
}

}  // namespace boruta

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "boruta/forest.hpp"
#include "boruta/parallel.hpp"
#include "boruta/rng.hpp"

namespace boruta {

enum class ImportanceMethod { TreeImp, Permut };

struct ImportanceVector {
    std::vector<double> scores;
    ImportanceMethod method = ImportanceMethod::TreeImp;
    bool normalized = false;
};

inline double loss_mse(const std::vector<double>& a,
                       const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw DataError("loss_mse: length mismatch or empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

// Mean over rows of KL(P_row || Q_row). Q is clamped to >= 1e-12 before the
// log; zero entries of P contribute nothing.
inline double loss_kl(const Prediction& p, const Prediction& q) {
    if (p.n != q.n || p.num_classes != q.num_classes || p.n == 0)
        throw DataError("loss_kl: shape mismatch or empty input");
    double acc = 0.0;
    for (std::size_t r = 0; r < p.n; ++r) {
        const double* pr = p.row(r);
        const double* qr = q.row(r);
        for (std::size_t c = 0; c < p.num_classes; ++c) {
            if (pr[c] <= 0.0) continue;
            double qc = qr[c] < 1e-12 ? 1e-12 : qr[c];
            acc += pr[c] * std::log(pr[c] / qc);
        }
    }
    return std::max(0.0, acc / static_cast<double>(p.n));
}

// Per tree: accumulate gain * instance_count per split feature, normalize
// the tree's vector to sum 1, average across trees, renormalize. Trees with
// no splits contribute a zero vector. An all-zero result is returned
// unnormalized.
inline ImportanceVector impurity_importance(const Forest& forest) {
    if (forest.trees.empty()) throw DataError("forest has no trees");
    std::size_t p = forest.num_features;

    std::vector<double> avg(p, 0.0);
    std::vector<double> gains(p);
    for (const Tree& tree : forest.trees) {
        std::fill(gains.begin(), gains.end(), 0.0);
        for (const TreeNode& n : tree.nodes)
            if (!n.is_leaf())
                gains[static_cast<std::size_t>(n.split_feature)] +=
                    n.gain * n.instance_count;
        double total = 0.0;
        for (double g : gains) total += g;
        if (total > 0.0)
            for (std::size_t j = 0; j < p; ++j) avg[j] += gains[j] / total;
    }
    double m = static_cast<double>(forest.trees.size());
    for (double& a : avg) a /= m;

    ImportanceVector imp;
    imp.method = ImportanceMethod::TreeImp;
    double total = 0.0;
    for (double a : avg) total += a;
    if (total > 0.0) {
        for (double& a : avg) a /= total;
        imp.normalized = true;
    }
    imp.scores = std::move(avg);
    return imp;
}

// Shared-permutation prediction divergence: the baseline is the model's own
// prediction on X, one row permutation is drawn once and reused for every
// feature. MSE for regression, mean KL divergence for classification.
inline ImportanceVector permutation_importance(const Forest& forest,
                                               const Matrix& X,
                                               std::uint64_t seed,
                                               unsigned threads = 0) {
    if (X.cols != forest.num_features)
        throw DataError("permutation input has wrong column count");

    Prediction baseline = predict(forest, X, threads);
    Rng rng(derive_seed(seed, 0x7065726dULL));
    std::vector<std::size_t> perm = rng.permutation(X.rows);

    ImportanceVector imp;
    imp.method = ImportanceMethod::Permut;
    imp.normalized = false;
    imp.scores.assign(X.cols, 0.0);

    // each worker owns a private copy of X; the caller's matrix is untouched
    parallel_for(X.cols, threads, [&](std::size_t j) {
        Matrix work = X;
        for (std::size_t r = 0; r < X.rows; ++r)
            work.at(r, j) = X.at(perm[r], j);
        Prediction shuffled = predict(forest, work, 1);
        if (forest.task.is_classification())
            imp.scores[j] = loss_kl(baseline, shuffled);
        else
            imp.scores[j] = loss_mse(baseline.values, shuffled.values);
    });
    return imp;
}

}  // namespace boruta

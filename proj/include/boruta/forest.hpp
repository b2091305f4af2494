#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "boruta/data.hpp"
#include "boruta/parallel.hpp"
#include "boruta/rng.hpp"

namespace boruta {

struct MaxFeatures {
    enum class Kind { Sqrt, Fraction, All };
    Kind kind = Kind::Sqrt;
    double fraction = 1.0;

    static MaxFeatures sqrt() { return {Kind::Sqrt, 1.0}; }
    static MaxFeatures frac(double f) { return {Kind::Fraction, f}; }
    static MaxFeatures all() { return {Kind::All, 1.0}; }

    std::size_t resolve(std::size_t p) const {
        switch (kind) {
            case Kind::Sqrt:
                return std::max<std::size_t>(
                    1, static_cast<std::size_t>(
                           std::floor(std::sqrt(static_cast<double>(p)))));
            case Kind::Fraction:
                return std::clamp<std::size_t>(
                    static_cast<std::size_t>(std::floor(fraction * p)), 1, p);
            case Kind::All:
                return p;
        }
        return p;
    }
};

struct ForestParams {
    int num_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_split = 2;
    MaxFeatures max_features{};
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_trees < 1) throw DataError("num_trees must be >= 1");
        if (min_samples_split < 2)
            throw DataError("min_samples_split must be >= 2");
        if (max_features.kind == MaxFeatures::Kind::Fraction &&
            (max_features.fraction <= 0 || max_features.fraction > 1))
            throw DataError("max_features fraction must lie in (0, 1]");
    }
};

inline ForestParams default_forest_params(Task task) {
    ForestParams p;
    p.max_features = task.is_classification() ? MaxFeatures::sqrt()
                                              : MaxFeatures::frac(1.0 / 3.0);
    return p;
}

// Flat node record; split_feature < 0 marks a leaf. gain is the unweighted
// impurity decrease at the split; importance accumulation multiplies it by
// instance_count.
struct TreeNode {
    int split_feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    int instance_count = 0;
    int left = -1;
    int right = -1;
    double value = 0.0;               // regression leaf
    std::vector<double> probs;        // classification leaf

    bool is_leaf() const { return split_feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct Forest {
    std::vector<Tree> trees;
    ForestParams params;
    std::size_t num_features = 0;
    Task task;
};

struct Prediction {
    Task task;
    std::size_t n = 0;
    std::size_t num_classes = 0;          // 0 for regression
    std::vector<double> values;           // n (regression) or n*num_classes

    const double* row(std::size_t r) const {
        return values.data() + r * num_classes;
    }
};

namespace detail {

class TreeBuilder {
  public:
    TreeBuilder(const DataMatrix& data, const ForestParams& params, Rng rng)
        : data_(data), prm_(params), rng_(rng) {
        num_classes_ = data.task.is_classification()
                           ? static_cast<std::size_t>(data.task.num_classes)
                           : 0;
        mtry_ = prm_.max_features.resolve(data.p());
        feat_pool_.resize(data.p());
        for (std::size_t j = 0; j < data.p(); ++j) feat_pool_[j] = j;
    }

    Tree build() {
        std::size_t n = data_.n();
        idx_.resize(n);
        if (prm_.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                idx_[i] = static_cast<std::size_t>(rng_.below(n));
        } else {
            for (std::size_t i = 0; i < n; ++i) idx_[i] = i;
        }
        counts_.assign(num_classes_, 0);
        grow(0, n, 0);
        Tree t;
        t.nodes = std::move(nodes_);
        return t;
    }

  private:
    struct NodeStats {
        double impurity = 0.0;
        double mean = 0.0;                 // regression
        std::vector<double> class_frac;    // classification
    };

    NodeStats stats(std::size_t lo, std::size_t hi) {
        NodeStats s;
        std::size_t cnt = hi - lo;
        if (num_classes_ == 0) {
            double sum = 0, sumsq = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                double y = data_.target[idx_[i]];
                sum += y;
                sumsq += y * y;
            }
            s.mean = sum / cnt;
            s.impurity = std::max(0.0, sumsq / cnt - s.mean * s.mean);
        } else {
            std::fill(counts_.begin(), counts_.end(), 0);
            for (std::size_t i = lo; i < hi; ++i)
                ++counts_[static_cast<std::size_t>(data_.target[idx_[i]])];
            s.class_frac.resize(num_classes_);
            double g = 1.0;
            for (std::size_t c = 0; c < num_classes_; ++c) {
                double f = static_cast<double>(counts_[c]) / cnt;
                s.class_frac[c] = f;
                g -= f * f;
            }
            s.impurity = std::max(0.0, g);
        }
        return s;
    }

    int make_leaf(const NodeStats& s, std::size_t cnt) {
        TreeNode node;
        node.instance_count = static_cast<int>(cnt);
        if (num_classes_ == 0)
            node.value = s.mean;
        else
            node.probs = s.class_frac;
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size() - 1);
    }

    int grow(std::size_t lo, std::size_t hi, int depth) {
        std::size_t cnt = hi - lo;
        NodeStats s = stats(lo, hi);

        bool stop = cnt < static_cast<std::size_t>(prm_.min_samples_split) ||
                    (prm_.max_depth > 0 && depth >= prm_.max_depth) ||
                    s.impurity <= 1e-12;
        if (stop) return make_leaf(s, cnt);

        // Draw mtry distinct candidate features and visit them in draw
        // order. Exact gain ties go to the earliest-drawn candidate: this is
        // deterministic given the seed, but unbiased across feature indices.
        // (Index-ordered tie-breaking systematically inflates the impurity
        // importance of low-index features, because at two-sample nodes every
        // separating candidate achieves the same gain.)
        for (std::size_t j = 0; j < mtry_; ++j) {
            std::size_t k = j + static_cast<std::size_t>(
                                    rng_.below(feat_pool_.size() - j));
            std::swap(feat_pool_[j], feat_pool_[k]);
        }
        candidates_.assign(feat_pool_.begin(), feat_pool_.begin() + mtry_);

        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        pairs_.resize(cnt);
        for (std::size_t f : candidates_) {
            for (std::size_t i = 0; i < cnt; ++i) {
                std::size_t r = idx_[lo + i];
                pairs_[i] = {data_.X.at(r, f), data_.target[r]};
            }
            std::sort(pairs_.begin(), pairs_.end(),
                      [](const auto& a, const auto& b) {
                          return a.first < b.first;
                      });

            if (num_classes_ == 0)
                scan_regression(f, cnt, s, best_gain, best_feature,
                                best_threshold);
            else
                scan_classification(f, cnt, s, best_gain, best_feature,
                                    best_threshold);
        }

        if (best_feature < 0 || best_gain <= 1e-12) return make_leaf(s, cnt);

        // stable two-pass partition keeps child sample order deterministic
        scratch_.clear();
        std::size_t nl = 0;
        for (std::size_t i = lo; i < hi; ++i)
            if (data_.X.at(idx_[i], static_cast<std::size_t>(best_feature)) <=
                best_threshold) {
                scratch_.push_back(idx_[i]);
                ++nl;
            }
        for (std::size_t i = lo; i < hi; ++i)
            if (data_.X.at(idx_[i], static_cast<std::size_t>(best_feature)) >
                best_threshold)
                scratch_.push_back(idx_[i]);
        std::copy(scratch_.begin(), scratch_.end(), idx_.begin() + lo);

        int node_index = static_cast<int>(nodes_.size());
        TreeNode node;
        node.split_feature = best_feature;
        node.threshold = best_threshold;
        node.gain = best_gain;
        node.instance_count = static_cast<int>(cnt);
        nodes_.push_back(std::move(node));

        int left = grow(lo, lo + nl, depth + 1);
        int right = grow(lo + nl, hi, depth + 1);
        nodes_[node_index].left = left;
        nodes_[node_index].right = right;
        return node_index;
    }

    void consider(double gain, std::size_t f, double thr, double& best_gain,
                  int& best_feature, double& best_threshold) {
        // ties go to the earliest-drawn candidate feature, then the lowest
        // threshold; candidates and thresholds are visited in that order, so
        // strict > suffices
        if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = thr;
        }
    }

    void scan_regression(std::size_t f, std::size_t cnt, const NodeStats& s,
                         double& best_gain, int& best_feature,
                         double& best_threshold) {
        double lsum = 0, lsumsq = 0;
        double tsum = 0, tsumsq = 0;
        for (auto& pr : pairs_) {
            tsum += pr.second;
            tsumsq += pr.second * pr.second;
        }
        for (std::size_t i = 0; i + 1 < cnt; ++i) {
            lsum += pairs_[i].second;
            lsumsq += pairs_[i].second * pairs_[i].second;
            if (pairs_[i + 1].first <= pairs_[i].first) continue;
            double nl = static_cast<double>(i + 1);
            double nr = static_cast<double>(cnt - i - 1);
            double lmean = lsum / nl;
            double rmean = (tsum - lsum) / nr;
            double lvar = std::max(0.0, lsumsq / nl - lmean * lmean);
            double rvar =
                std::max(0.0, (tsumsq - lsumsq) / nr - rmean * rmean);
            double gain =
                s.impurity - (nl / cnt) * lvar - (nr / cnt) * rvar;
            consider(gain, f, 0.5 * (pairs_[i].first + pairs_[i + 1].first),
                     best_gain, best_feature, best_threshold);
        }
    }

    void scan_classification(std::size_t f, std::size_t cnt,
                             const NodeStats& s, double& best_gain,
                             int& best_feature, double& best_threshold) {
        left_counts_.assign(num_classes_, 0);
        total_counts_.assign(num_classes_, 0);
        for (auto& pr : pairs_)
            ++total_counts_[static_cast<std::size_t>(pr.second)];
        for (std::size_t i = 0; i + 1 < cnt; ++i) {
            ++left_counts_[static_cast<std::size_t>(pairs_[i].second)];
            if (pairs_[i + 1].first <= pairs_[i].first) continue;
            double nl = static_cast<double>(i + 1);
            double nr = static_cast<double>(cnt - i - 1);
            double gl = 1.0, gr = 1.0;
            for (std::size_t c = 0; c < num_classes_; ++c) {
                double fl = left_counts_[c] / nl;
                double fr = (total_counts_[c] - left_counts_[c]) / nr;
                gl -= fl * fl;
                gr -= fr * fr;
            }
            double gain = s.impurity - (nl / cnt) * gl - (nr / cnt) * gr;
            consider(gain, f, 0.5 * (pairs_[i].first + pairs_[i + 1].first),
                     best_gain, best_feature, best_threshold);
        }
    }

    const DataMatrix& data_;
    const ForestParams& prm_;
    Rng rng_;
    std::size_t num_classes_;
    std::size_t mtry_;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> idx_;
    std::vector<std::size_t> feat_pool_;
    std::vector<std::size_t> candidates_;
    std::vector<std::size_t> scratch_;
    std::vector<std::pair<double, double>> pairs_;
    std::vector<int> counts_;
    std::vector<double> left_counts_;
    std::vector<double> total_counts_;
};

}  // namespace detail

inline Forest fit_forest(const DataMatrix& data, const ForestParams& params,
                         unsigned threads = 0) {
    params.validate();
    if (data.p() == 0) throw DataError("cannot fit a forest on zero features");
    if (data.n() < static_cast<std::size_t>(params.min_samples_split))
        throw DataError("too few samples to fit a forest");

    Forest forest;
    forest.params = params;
    forest.num_features = data.p();
    forest.task = data.task;
    forest.trees.resize(static_cast<std::size_t>(params.num_trees));

    // per-tree seeds depend only on (seed, tree index), never on scheduling
    parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
        detail::TreeBuilder builder(data, params,
                                    Rng(derive_seed(params.seed, t)));
        forest.trees[t] = builder.build();
    });
    return forest;
}

namespace detail {

inline const TreeNode& descend(const Tree& tree, const double* row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        std::size_t f = static_cast<std::size_t>(node->split_feature);
        node = &tree.nodes[row[f] <= node->threshold ? node->left
                                                     : node->right];
    }
    return *node;
}

}  // namespace detail

inline Prediction predict(const Forest& forest, const Matrix& X,
                          unsigned threads = 0) {
    if (X.cols != forest.num_features)
        throw DataError("prediction input has wrong column count");

    Prediction pred;
    pred.task = forest.task;
    pred.n = X.rows;
    const double inv_m = 1.0 / static_cast<double>(forest.trees.size());

    if (forest.task.is_classification()) {
        std::size_t c = static_cast<std::size_t>(forest.task.num_classes);
        pred.num_classes = c;
        pred.values.assign(X.rows * c, 0.0);
        parallel_for(X.rows, threads, [&](std::size_t r) {
            double* out = pred.values.data() + r * c;
            for (const Tree& tree : forest.trees) {
                const TreeNode& leaf = detail::descend(tree, X.row(r));
                for (std::size_t k = 0; k < c; ++k) out[k] += leaf.probs[k];
            }
            for (std::size_t k = 0; k < c; ++k) out[k] *= inv_m;
        });
    } else {
        pred.values.assign(X.rows, 0.0);
        parallel_for(X.rows, threads, [&](std::size_t r) {
            double acc = 0.0;
            for (const Tree& tree : forest.trees)
                acc += detail::descend(tree, X.row(r)).value;
            pred.values[r] = acc * inv_m;
        });
    }
    return pred;
}

struct ForestStats {
    double avg_depth = 0.0;
    double avg_leaves = 0.0;
    std::size_t total_nodes = 0;
};

namespace detail {

inline int node_depth(const Tree& tree, int i) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(node_depth(tree, n.left), node_depth(tree, n.right));
}

}  // namespace detail

inline ForestStats forest_stats(const Forest& forest) {
    ForestStats s;
    for (const Tree& tree : forest.trees) {
        s.total_nodes += tree.nodes.size();
        s.avg_depth += detail::node_depth(tree, 0);
        for (const TreeNode& n : tree.nodes)
            if (n.is_leaf()) s.avg_leaves += 1.0;
    }
    s.avg_depth /= static_cast<double>(forest.trees.size());
    s.avg_leaves /= static_cast<double>(forest.trees.size());
    return s;
}

}  // namespace boruta

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "boruta/forest_json.hpp"
#include "boruta/importance.hpp"
#include "boruta/rng.hpp"
#include "boruta/synthetic.hpp"

using namespace boruta;

namespace {

// Independent brute-force oracle for impurity importance: recursive
// traversal with long double accumulation, no shared code with the
// implementation's flat-loop path.
std::vector<double> oracle_impurity(const Forest& forest) {
    std::size_t p = forest.num_features;
    std::vector<long double> avg(p, 0.0L);

    std::function<void(const Tree&, int, std::vector<long double>&)> walk =
        [&](const Tree& tree, int i, std::vector<long double>& gains) {
            const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) return;
            gains[static_cast<std::size_t>(n.split_feature)] +=
                static_cast<long double>(n.gain) * n.instance_count;
            walk(tree, n.left, gains);
            walk(tree, n.right, gains);
        };

    for (const Tree& tree : forest.trees) {
        std::vector<long double> gains(p, 0.0L);
        walk(tree, 0, gains);
        long double total = 0;
        for (auto g : gains) total += g;
        if (total > 0)
            for (std::size_t j = 0; j < p; ++j) avg[j] += gains[j] / total;
    }
    long double total = 0;
    for (auto& a : avg) {
        a /= static_cast<long double>(forest.trees.size());
        total += a;
    }
    std::vector<double> out(p, 0.0);
    if (total > 0)
        for (std::size_t j = 0; j < p; ++j)
            out[j] = static_cast<double>(avg[j] / total);
    return out;
}

// random fixture tree, depth <= max_depth, leaves carry regression values
int random_tree(Rng& rng, Tree& tree, std::size_t p, int depth,
                int max_depth, int count) {
    int idx = static_cast<int>(tree.nodes.size());
    TreeNode n;
    n.instance_count = count;
    bool leaf = depth >= max_depth || count < 2 || rng.uniform() < 0.3;
    if (leaf) {
        n.value = rng.uniform();
        tree.nodes.push_back(n);
        return idx;
    }
    n.split_feature = static_cast<int>(rng.below(p));
    n.threshold = rng.uniform();
    n.gain = rng.uniform();
    tree.nodes.push_back(n);
    int lc = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(count - 1)));
    int l = random_tree(rng, tree, p, depth + 1, max_depth, lc);
    int r = random_tree(rng, tree, p, depth + 1, max_depth, count - lc);
    tree.nodes[static_cast<std::size_t>(idx)].left = l;
    tree.nodes[static_cast<std::size_t>(idx)].right = r;
    return idx;
}

Forest random_fixture_forest(std::uint64_t seed) {
    Rng rng(seed);
    Forest f;
    f.task = Task::regression();
    f.num_features = 4 + rng.below(5);
    std::size_t trees = 1 + rng.below(5);
    for (std::size_t t = 0; t < trees; ++t) {
        Tree tree;
        random_tree(rng, tree, f.num_features, 0, 4,
                    20 + static_cast<int>(rng.below(100)));
        f.trees.push_back(std::move(tree));
    }
    f.params.num_trees = static_cast<int>(f.trees.size());
    return f;
}

}  // namespace

TEST_CASE("single split concentrates all importance") {
    Forest f = forest_from_json(nlohmann::json::parse(R"({
        "task": "regression", "num_classes": 0, "num_features": 3,
        "trees": [{
            "split_feature": 1, "threshold": 0.5, "gain": 0.25,
            "instance_count": 10,
            "children": [
                {"instance_count": 4, "value": 0.0},
                {"instance_count": 6, "value": 1.0}
            ]
        }]
    })"));
    auto imp = impurity_importance(f);
    CHECK(imp.normalized);
    CHECK(imp.scores == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("fixture from hand-evaluated accumulation") {
    // root splits feature 0 (gain 0.5, count 100); its left child splits
    // feature 1 (gain 0.2, count 60): raw {50, 12} -> {50/62, 12/62}
    Forest f = forest_from_json(nlohmann::json::parse(R"({
        "task": "regression", "num_classes": 0, "num_features": 2,
        "trees": [{
            "split_feature": 0, "threshold": 0.5, "gain": 0.5,
            "instance_count": 100,
            "children": [
                {"split_feature": 1, "threshold": 0.3, "gain": 0.2,
                 "instance_count": 60,
                 "children": [
                     {"instance_count": 20, "value": 0.0},
                     {"instance_count": 40, "value": 1.0}
                 ]},
                {"instance_count": 40, "value": 2.0}
            ]
        }]
    })"));
    auto imp = impurity_importance(f);
    CHECK(imp.scores[0] == doctest::Approx(50.0 / 62.0).epsilon(1e-12));
    CHECK(imp.scores[1] == doctest::Approx(12.0 / 62.0).epsilon(1e-12));
}

TEST_CASE("two single-feature trees average to a half each") {
    auto tree_json = [](int feature) {
        nlohmann::json j;
        j["split_feature"] = feature;
        j["threshold"] = 0.5;
        j["gain"] = 0.1 * (feature + 1);
        j["instance_count"] = 10;
        j["children"] = {nlohmann::json{{"instance_count", 5}, {"value", 0.0}},
                         nlohmann::json{{"instance_count", 5}, {"value", 1.0}}};
        return j;
    };
    nlohmann::json j;
    j["task"] = "regression";
    j["num_classes"] = 0;
    j["num_features"] = 2;
    j["trees"] = {tree_json(0), tree_json(1)};
    auto imp = impurity_importance(forest_from_json(j));
    CHECK(imp.scores[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(imp.scores[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("matches brute-force oracle on random fixtures") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        Forest f = random_fixture_forest(derive_seed(1234, s));
        auto imp = impurity_importance(f);
        auto expected = oracle_impurity(f);
        REQUIRE(imp.scores.size() == expected.size());
        double sum = 0;
        for (std::size_t j = 0; j < imp.scores.size(); ++j) {
            CHECK(imp.scores[j] ==
                  doctest::Approx(expected[j]).epsilon(1e-9));
            CHECK(imp.scores[j] >= 0.0);
            CHECK(imp.scores[j] <= 1.0 + 1e-12);
            sum += imp.scores[j];
        }
        if (imp.normalized) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("all-leaf forest returns unnormalized zeros") {
    Forest f;
    f.task = Task::regression();
    f.num_features = 3;
    Tree t;
    TreeNode leaf;
    leaf.instance_count = 5;
    leaf.value = 1.0;
    t.nodes.push_back(leaf);
    f.trees.push_back(t);
    f.params.num_trees = 1;
    auto imp = impurity_importance(f);
    CHECK_FALSE(imp.normalized);
    CHECK(imp.scores == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("loss_mse") {
    CHECK(loss_mse({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(loss_mse({0, 0}, {1, 1}) == 1.0);
    CHECK(loss_mse({1, 2, 3}, {2, 2, 5}) ==
          doctest::Approx((1.0 + 0.0 + 4.0) / 3.0));
    CHECK_THROWS_AS(loss_mse({1}, {1, 2}), DataError);
}

TEST_CASE("loss_kl closed forms") {
    auto make = [](std::vector<double> rows, std::size_t c) {
        Prediction p;
        p.task = Task::classification(static_cast<int>(c));
        p.num_classes = c;
        p.n = rows.size() / c;
        p.values = std::move(rows);
        return p;
    };
    auto p = make({1.0, 0.0}, 2);
    auto q = make({0.5, 0.5}, 2);
    CHECK(loss_kl(p, p) == 0.0);
    CHECK(loss_kl(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // reversed direction is clamped but finite and positive
    double rev = loss_kl(q, p);
    CHECK(std::isfinite(rev));
    CHECK(rev > 0.0);

    CHECK_THROWS_AS(loss_kl(p, make({1.0, 0.0, 0.0}, 3)), DataError);
}

TEST_CASE("loss_kl nonnegative on random distributions") {
    Rng rng(77);
    for (int it = 0; it < 200; ++it) {
        std::size_t c = 2 + rng.below(4);
        std::size_t n = 1 + rng.below(6);
        auto draw = [&] {
            Prediction p;
            p.task = Task::classification(static_cast<int>(c));
            p.num_classes = c;
            p.n = n;
            for (std::size_t r = 0; r < n; ++r) {
                std::vector<double> row(c);
                double sum = 0;
                for (auto& x : row) {
                    x = rng.uniform();
                    sum += x;
                }
                for (auto& x : row) p.values.push_back(x / sum);
            }
            return p;
        };
        auto p = draw();
        auto q = draw();
        CHECK(loss_kl(p, q) >= 0.0);
        CHECK(loss_kl(p, p) == 0.0);
    }
}

TEST_CASE("permutation: unused feature scores exactly zero") {
    // single tree splitting feature 0; feature 1 never appears
    Forest f = forest_from_json(nlohmann::json::parse(R"({
        "task": "regression", "num_classes": 0, "num_features": 2,
        "trees": [{
            "split_feature": 0, "threshold": 0.5, "gain": 0.25,
            "instance_count": 4,
            "children": [
                {"instance_count": 2, "value": 0.0},
                {"instance_count": 2, "value": 1.0}
            ]
        }]
    })"));
    Matrix X(4, 2);
    Rng rng(5);
    for (auto& v : X.v) v = rng.uniform();
    auto imp = permutation_importance(f, X, 123, 1);
    CHECK(imp.scores[1] == 0.0);
    CHECK_FALSE(imp.normalized);
}

TEST_CASE("permutation two-row hand trace") {
    Forest f = forest_from_json(nlohmann::json::parse(R"({
        "task": "regression", "num_classes": 0, "num_features": 1,
        "trees": [{
            "split_feature": 0, "threshold": 0.5, "gain": 0.25,
            "instance_count": 2,
            "children": [
                {"instance_count": 1, "value": 0.0},
                {"instance_count": 1, "value": 1.0}
            ]
        }]
    })"));
    Matrix X(2, 1);
    X.at(0, 0) = 0.1;
    X.at(1, 0) = 0.9;

    // find a seed whose 2-row permutation swaps the rows
    std::uint64_t seed = 0;
    for (;; ++seed) {
        Rng rng(derive_seed(seed, 0x7065726dULL));
        auto perm = rng.permutation(2);
        if (perm[0] == 1) break;
    }
    auto imp = permutation_importance(f, X, seed, 1);
    CHECK(imp.scores[0] == 1.0);  // baseline (0,1) vs permuted (1,0)

    // and an identity permutation gives exactly zero
    for (seed = 0;; ++seed) {
        Rng rng(derive_seed(seed, 0x7065726dULL));
        auto perm = rng.permutation(2);
        if (perm[0] == 0) break;
    }
    imp = permutation_importance(f, X, seed, 1);
    CHECK(imp.scores[0] == 0.0);
}

TEST_CASE("permutation leaves the input matrix unmodified") {
    SyntheticSpec spec;
    spec.n_samples = 60;
    spec.seed = 14;
    auto d = generate_synthetic(spec);
    ForestParams p = default_forest_params(d.task);
    p.num_trees = 5;
    auto f = fit_forest(d, p, 1);
    auto copy = d.X.v;
    permutation_importance(f, d.X, 9, 4);
    CHECK(d.X.v == copy);
}

TEST_CASE("both backends deterministic across worker counts") {
    SyntheticSpec spec;
    spec.n_samples = 120;
    spec.seed = 20;
    auto d = generate_synthetic(spec);
    ForestParams p = default_forest_params(d.task);
    p.num_trees = 8;
    auto f = fit_forest(d, p, 2);
    auto a = permutation_importance(f, d.X, 42, 1);
    auto b = permutation_importance(f, d.X, 42, 8);
    CHECK(a.scores == b.scores);
    auto ia = impurity_importance(f);
    auto ib = impurity_importance(f);
    CHECK(ia.scores == ib.scores);
}

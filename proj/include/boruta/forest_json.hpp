#pragma once

#include <string>

#include <json.hpp>

#include "boruta/forest.hpp"

namespace boruta {

// JSON schema (one object per node, nested children):
//   split: {"split_feature": j, "threshold": x, "gain": g,
//           "instance_count": c, "children": [left, right]}
//   leaf:  {"instance_count": c, "value": v}            (regression)
//          {"instance_count": c, "probs": [p0, ...]}    (classification)
// Forest: {"task": "regression"|"classification", "num_classes": c,
//          "num_features": p, "trees": [root, ...]}

namespace detail {

inline nlohmann::json node_to_json(const Tree& tree, int i) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
    nlohmann::json j;
    j["instance_count"] = n.instance_count;
    if (n.is_leaf()) {
        if (n.probs.empty())
            j["value"] = n.value;
        else
            j["probs"] = n.probs;
    } else {
        j["split_feature"] = n.split_feature;
        j["threshold"] = n.threshold;
        j["gain"] = n.gain;
        j["children"] = {node_to_json(tree, n.left), node_to_json(tree, n.right)};
    }
    return j;
}

inline int node_from_json(const nlohmann::json& j, Tree& tree) {
    TreeNode n;
    n.instance_count = j.at("instance_count").get<int>();
    int index = static_cast<int>(tree.nodes.size());
    if (j.contains("children")) {
        n.split_feature = j.at("split_feature").get<int>();
        n.threshold = j.at("threshold").get<double>();
        n.gain = j.at("gain").get<double>();
        if (n.gain < 0) throw DataError("fixture tree has negative gain");
        tree.nodes.push_back(std::move(n));
        const auto& children = j.at("children");
        if (children.size() != 2)
            throw DataError("split node must have exactly 2 children");
        int left = node_from_json(children[0], tree);
        int right = node_from_json(children[1], tree);
        tree.nodes[static_cast<std::size_t>(index)].left = left;
        tree.nodes[static_cast<std::size_t>(index)].right = right;
    } else {
        if (j.contains("probs"))
            n.probs = j.at("probs").get<std::vector<double>>();
        else
            n.value = j.at("value").get<double>();
        tree.nodes.push_back(std::move(n));
    }
    return index;
}

}  // namespace detail

inline nlohmann::json forest_to_json(const Forest& forest) {
    nlohmann::json j;
    j["task"] = forest.task.is_classification() ? "classification"
                                                : "regression";
    j["num_classes"] = forest.task.num_classes;
    j["num_features"] = forest.num_features;
    auto trees = nlohmann::json::array();
    for (const Tree& t : forest.trees)
        trees.push_back(detail::node_to_json(t, 0));
    j["trees"] = std::move(trees);
    return j;
}

inline Forest forest_from_json(const nlohmann::json& j) {
    Forest forest;
    std::string task = j.at("task").get<std::string>();
    forest.task = task == "classification"
                      ? Task::classification(j.at("num_classes").get<int>())
                      : Task::regression();
    forest.num_features = j.at("num_features").get<std::size_t>();
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        detail::node_from_json(tj, tree);
        forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.empty()) throw DataError("forest has no trees");
    for (const Tree& t : forest.trees)
        for (const TreeNode& n : t.nodes)
            if (!n.is_leaf() &&
                static_cast<std::size_t>(n.split_feature) >=
                    forest.num_features)
                throw DataError("split feature index out of range");
    forest.params.num_trees = static_cast<int>(forest.trees.size());
    return forest;
}

}  // namespace boruta

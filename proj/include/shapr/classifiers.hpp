#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shapr/spectrum.hpp"

namespace shapr::ml {

using Rows = std::vector<std::vector<double>>;

/// k nearest neighbours by Euclidean distance on z-scored features.
class KnnModel {
public:
    static constexpr std::size_t kDefaultK = 5;

    KnnModel() = default;

    /// Throws ConfigError when k is 0 or exceeds the number of training rows.
    static KnnModel fit(const Rows& features, const std::vector<std::string>& labels, std::size_t k = kDefaultK,
                        bool normalize = true);

    /// Majority label of the k nearest; ties go to the smaller summed distance, then the
    /// lexicographically smaller label.
    std::string predict(std::span<const double> query) const;

    std::size_t k() const { return k_; }
    std::size_t feature_count() const { return dims_; }

    std::string serialize() const;
    static KnnModel deserialize(std::string_view text, const std::string& source = "<memory>");

private:
    std::size_t k_ = kDefaultK;
    std::size_t dims_ = 0;
    std::optional<Normalizer> normalizer_;
    Rows train_;  // normalized when a normalizer is present
    std::vector<std::string> labels_;
};

struct TreeParams {
    std::size_t max_depth = 0;           // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t features_per_split = 0;  // 0 = every feature
};

/// Binary CART tree grown greedily on Gini impurity. Samples with x[f] <= threshold go left.
class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int label = -1;                   // index into classes()
        std::vector<std::size_t> counts;  // training samples per class reaching this node
    };

    DecisionTree() = default;

    static DecisionTree fit(const Rows& features, const std::vector<std::string>& labels, const TreeParams& params,
                            std::uint64_t seed);

    /// Grows a tree on rows[indices] (indices may repeat, as in a bootstrap resample).
    static DecisionTree fit_indices(const Rows& features, const std::vector<std::string>& labels,
                                    const std::vector<std::size_t>& indices, const TreeParams& params,
                                    std::mt19937_64& rng);

    const std::string& predict(std::span<const double> query) const;

    std::size_t depth() const;
    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::string>& classes() const { return classes_; }
    std::size_t feature_count() const { return dims_; }

    // Preorder: "N <feature> <threshold>" followed by the left then right subtree, or
    // "L <label> <count per class...>".
    std::string serialize() const;
    static DecisionTree deserialize(std::string_view text, const std::string& source = "<memory>");

private:
    friend class RandomForest;
    void write_nodes(std::string& out) const;
    static DecisionTree read_nodes(const std::vector<std::string_view>& lines, std::size_t& pos,
                                   const std::vector<std::string>& classes, std::size_t dims,
                                   const std::string& source);

    std::vector<std::string> classes_;  // sorted
    std::vector<Node> nodes_;           // nodes_[0] is the root
    std::size_t dims_ = 0;
};

struct ForestParams {
    std::size_t trees = 100;
    TreeParams tree;           // tree.features_per_split 0 means ceil(sqrt(d))
    bool bootstrap = true;
};

/// Bagged Gini trees with per-split feature subsampling; majority vote, ties to the
/// lexicographically smaller label.
class RandomForest {
public:
    RandomForest() = default;

    static RandomForest fit(const Rows& features, const std::vector<std::string>& labels, const ForestParams& params,
                            std::uint64_t seed);

    std::string predict(std::span<const double> query) const;

    const std::vector<DecisionTree>& trees() const { return trees_; }

    std::string serialize() const;
    static RandomForest deserialize(std::string_view text, const std::string& source = "<memory>");

private:
    std::vector<DecisionTree> trees_;
};

}  // namespace shapr::ml

#include <doctest.h>

#include <cmath>
#include <random>

#include "shapr/classifiers.hpp"
#include "shapr/error.hpp"

using namespace shapr;
using namespace shapr::ml;

namespace {

struct Blobs {
    Rows x;
    std::vector<std::string> y;
};

Blobs blobs(std::uint64_t seed, std::size_t per_class, std::size_t dims, double gap) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Blobs b;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> row(dims);
            for (auto& v : row) v = g(rng) + (c == 0 ? 0.0 : gap);
            b.x.push_back(row);
            b.y.push_back(c == 0 ? "A" : "B");
        }
    }
    return b;
}

double train_accuracy(const auto& model, const Blobs& b) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < b.x.size(); ++i) ok += model.predict(b.x[i]) == b.y[i];
    return static_cast<double>(ok) / static_cast<double>(b.x.size());
}

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("knn hand case") {
    const Rows x{{0, 0}, {0, 1}, {5, 5}};
    const std::vector<std::string> y{"A", "A", "B"};
    const std::vector<double> q{0, 0.5};
    CHECK(KnnModel::fit(x, y, 3, false).predict(q) == "A");
    CHECK(KnnModel::fit(x, y, 3, true).predict(q) == "A");
}

TEST_CASE("knn with k = 1 returns the matching training label") {
    const auto b = blobs(1, 15, 3, 1.0);
    const auto m = KnnModel::fit(b.x, b.y, 1);
    CHECK(train_accuracy(m, b) == 1.0);
}

TEST_CASE("knn with k = n returns the global majority") {
    const Rows x{{0}, {1}, {2}, {10}, {11}};
    const std::vector<std::string> y{"B", "B", "B", "A", "A"};
    const auto m = KnnModel::fit(x, y, 5);
    for (double q : {-5.0, 0.0, 10.5, 100.0}) CHECK(m.predict(std::vector<double>{q}) == "B");
}

TEST_CASE("knn ties") {
    // one vote each: the closer neighbour wins
    const Rows x{{0}, {3}};
    CHECK(KnnModel::fit(x, {"B", "A"}, 2, false).predict(std::vector<double>{1}) == "B");
    // equal distance too: lexicographic
    CHECK(KnnModel::fit(x, {"B", "A"}, 2, false).predict(std::vector<double>{1.5}) == "A");
}

TEST_CASE("knn rejects bad input") {
    const Rows x{{0, 0}, {1, 1}};
    CHECK_THROWS_AS(KnnModel::fit(x, {"A", "B"}, 0), ConfigError);
    CHECK_THROWS_AS(KnnModel::fit(x, {"A", "B"}, 3), ConfigError);
    const auto m = KnnModel::fit(x, {"A", "B"}, 1);
    CHECK_THROWS(m.predict(std::vector<double>{1}));
}

TEST_CASE("knn text round trip") {
    const auto b = blobs(3, 10, 4, 2.0);
    const auto m = KnnModel::fit(b.x, b.y, 3);
    const auto back = KnnModel::deserialize(m.serialize());
    CHECK(back.serialize() == m.serialize());
    for (const auto& row : b.x) CHECK(back.predict(row) == m.predict(row));
}

TEST_CASE("single class tree is a leaf") {
    const Rows x{{1, 2}, {3, 4}, {5, 6}};
    const auto t = DecisionTree::fit(x, {"only", "only", "only"}, {}, 1);
    CHECK(t.depth() == 0);
    CHECK(t.node_count() == 1);
    CHECK(t.predict(std::vector<double>{100, -100}) == "only");
}

TEST_CASE("separable line needs one split") {
    const Rows x{{-3}, {-2}, {-0.5}, {0.25}, {1}, {4}};
    const std::vector<std::string> y{"A", "A", "A", "B", "B", "B"};
    const auto t = DecisionTree::fit(x, y, {}, 1);
    CHECK(t.depth() == 1);
    const auto& root = t.nodes()[0];
    CHECK(root.threshold > -0.5);
    CHECK(root.threshold < 0.25);
    CHECK(root.threshold == doctest::Approx(-0.125));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(t.predict(x[i]) == y[i]);
}

TEST_CASE("conflicting duplicates go to the majority") {
    const Rows x{{1}, {1}, {1}};
    const auto t = DecisionTree::fit(x, {"B", "A", "B"}, {}, 1);
    CHECK(t.predict(std::vector<double>{1}) == "B");
    // even split: first class in sorted order
    const auto u = DecisionTree::fit(Rows{{1}, {1}}, {"B", "A"}, {}, 1);
    CHECK(u.predict(std::vector<double>{1}) == "A");
}

TEST_CASE("thresholds lie strictly between observed values") {
    const auto b = blobs(8, 40, 5, 1.0);
    const auto t = DecisionTree::fit(b.x, b.y, {}, 2);
    CHECK(train_accuracy(t, b) == 1.0);
    for (const auto& n : t.nodes()) {
        if (n.feature < 0) continue;
        bool below = false, above = false;
        for (const auto& row : b.x) {
            below = below || row[static_cast<std::size_t>(n.feature)] < n.threshold;
            above = above || row[static_cast<std::size_t>(n.feature)] > n.threshold;
            CHECK(row[static_cast<std::size_t>(n.feature)] != n.threshold);
        }
        CHECK(below);
        CHECK(above);
    }
}

TEST_CASE("depth and split limits") {
    const auto b = blobs(9, 40, 3, 0.5);
    CHECK(DecisionTree::fit(b.x, b.y, {2, 2, 0}, 1).depth() <= 2);
    const auto wide = DecisionTree::fit(b.x, b.y, {0, 30, 0}, 1);
    for (const auto& n : wide.nodes()) {
        if (n.feature >= 0) {
            std::size_t total = 0;
            for (auto c : n.counts) total += c;
            CHECK(total >= 30);
        }
    }
    CHECK_THROWS(DecisionTree::fit({}, {}, {}, 1));
}

TEST_CASE("tree text round trip") {
    const auto b = blobs(10, 20, 4, 1.0);
    const auto t = DecisionTree::fit(b.x, b.y, {}, 3);
    const auto back = DecisionTree::deserialize(t.serialize());
    CHECK(back.serialize() == t.serialize());
    CHECK_THROWS_AS(DecisionTree::deserialize("SHAPR1 tree\nfeatures 1\nclasses 1 A\nnodes 1\nN 0 0.5\n"), ParseError);
}

TEST_CASE("one tree forest without bootstrap equals a tree") {
    const auto b = blobs(11, 25, 9, 1.0);
    ForestParams fp;
    fp.trees = 1;
    fp.bootstrap = false;
    fp.tree.features_per_split = 3;
    const auto forest = RandomForest::fit(b.x, b.y, fp, 42);
    const auto tree = DecisionTree::fit(b.x, b.y, fp.tree, 42);
    REQUIRE(forest.trees().size() == 1);
    CHECK(forest.trees()[0].serialize() == tree.serialize());
}

TEST_CASE("forest separates two blobs") {
    const auto b = blobs(12, 30, 6, 4.0);
    ForestParams fp;
    fp.trees = 25;
    const auto f = RandomForest::fit(b.x, b.y, fp, 5);
    CHECK(train_accuracy(f, b) == 1.0);
}

TEST_CASE("forest is deterministic") {
    const auto b = blobs(13, 30, 6, 1.0);
    ForestParams fp;
    fp.trees = 15;
    const auto f1 = RandomForest::fit(b.x, b.y, fp, 99);
    const auto f2 = RandomForest::fit(b.x, b.y, fp, 99);
    CHECK(f1.serialize() == f2.serialize());
    const auto q = blobs(14, 20, 6, 1.0);
    for (const auto& row : q.x) CHECK(f1.predict(row) == f2.predict(row));
    const auto back = RandomForest::deserialize(f1.serialize());
    for (const auto& row : q.x) CHECK(back.predict(row) == f1.predict(row));
}

TEST_CASE("monotone feature transforms keep tree decisions") {
    const auto b = blobs(15, 30, 4, 1.0);
    Blobs t = b;
    for (auto& row : t.x)
        for (auto& v : row) v = std::exp(v) * 3.0 - 7.0;
    // bootstrap off: out-of-bag points may sit between a midpoint and its transformed image
    ForestParams fp;
    fp.trees = 10;
    fp.bootstrap = false;
    const auto f1 = RandomForest::fit(b.x, b.y, fp, 3);
    const auto f2 = RandomForest::fit(t.x, t.y, fp, 3);
    const auto d1 = DecisionTree::fit(b.x, b.y, {}, 3);
    const auto d2 = DecisionTree::fit(t.x, t.y, {}, 3);
    for (std::size_t i = 0; i < b.x.size(); ++i) {
        CHECK(f1.predict(b.x[i]) == f2.predict(t.x[i]));
        CHECK(d1.predict(b.x[i]) == d2.predict(t.x[i]));
    }
}

}

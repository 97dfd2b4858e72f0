#include "shapr/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"
#include "shapr/types.hpp"

namespace shapr::ml {

namespace {

void check_training(const Rows& features, const std::vector<std::string>& labels) {
    if (features.empty()) throw ConfigError("empty training set");
    if (features.size() != labels.size()) throw ConfigError("feature and label counts differ");
    const std::size_t d = features.front().size();
    if (d == 0) throw ConfigError("training rows have no features");
    for (const auto& r : features) {
        if (r.size() != d) throw ConfigError("training rows differ in length");
    }
}

void check_query(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw ConfigError("query has " + std::to_string(got) + " features, model expects " + std::to_string(expected));
    }
}

std::vector<std::string> sorted_classes(const std::vector<std::string>& labels) {
    std::vector<std::string> c(labels);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double s = 0.0;
    const double n = static_cast<double>(total);
    for (std::size_t c : counts) {
        const double p = static_cast<double>(c) / n;
        s += p * p;
    }
    return 1.0 - s;
}

int majority(const std::vector<std::size_t>& counts) {
    // first maximum = lexicographically smallest label since classes are sorted
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct LineReader {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    std::string source;

    std::vector<std::string_view> next() {
        while (pos < lines.size() && io::trim(lines[pos]).empty()) ++pos;
        if (pos >= lines.size()) throw ParseError(source, pos, "unexpected end of model file");
        return io::split(io::trim(lines[pos++]), ' ');
    }
    std::size_t line() const { return pos; }
    std::size_t count(std::string_view s) const {
        unsigned long long v = 0;
        if (!io::parse_u64(s, v)) throw ParseError(source, pos, "bad count '" + std::string(s) + "'");
        return static_cast<std::size_t>(v);
    }
    double number(std::string_view s) const {
        double v = 0.0;
        if (!io::parse_double(s, v)) throw ParseError(source, pos, "bad number '" + std::string(s) + "'");
        return v;
    }
};

std::string row_text(std::span<const double> v) {
    std::string out;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) out += ' ';
        out += io::format_sig(v[j], 17);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- k-NN

KnnModel KnnModel::fit(const Rows& features, const std::vector<std::string>& labels, std::size_t k, bool normalize) {
    check_training(features, labels);
    if (k == 0 || k > features.size()) {
        throw ConfigError("k must lie in [1, " + std::to_string(features.size()) + "], got " + std::to_string(k));
    }
    KnnModel m;
    m.k_ = k;
    m.dims_ = features.front().size();
    m.labels_ = labels;
    if (normalize && features.size() >= 2) {
        m.normalizer_ = Normalizer::fit(std::span<const std::vector<double>>(features));
        m.train_.reserve(features.size());
        for (const auto& r : features) m.train_.push_back(m.normalizer_->apply(std::span<const double>(r)));
    } else {
        m.train_ = features;
    }
    return m;
}

std::string KnnModel::predict(std::span<const double> query) const {
    check_query(dims_, query.size());
    std::vector<double> q(query.begin(), query.end());
    if (normalizer_) q = normalizer_->apply(std::span<const double>(q));
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dims_; ++j) {
            const double e = train_[i][j] - q[j];
            d2 += e * e;
        }
        dist.emplace_back(std::sqrt(d2), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::map<std::string, std::pair<std::size_t, double>> votes;  // label -> (count, summed distance)
    for (std::size_t i = 0; i < k_; ++i) {
        auto& v = votes[labels_[dist[i].second]];
        v.first += 1;
        v.second += dist[i].first;
    }
    const std::string* best = nullptr;
    std::pair<std::size_t, double> best_v{0, 0.0};
    for (const auto& [label, v] : votes) {  // ascending label order
        if (!best || v.first > best_v.first || (v.first == best_v.first && v.second < best_v.second)) {
            best = &label;
            best_v = v;
        }
    }
    return *best;
}

std::string KnnModel::serialize() const {
    std::string out = "SHAPR1 knn\n";
    out += "k " + std::to_string(k_) + "\n";
    if (normalizer_) {
        out += "normalizer " + std::to_string(dims_) + "\n";
        out += row_text(normalizer_->mean()) + "\n";
        out += row_text(normalizer_->stddev()) + "\n";
    } else {
        out += "normalizer none\n";
    }
    out += "train " + std::to_string(train_.size()) + " " + std::to_string(dims_) + "\n";
    for (std::size_t i = 0; i < train_.size(); ++i) {
        out += labels_[i] + " " + row_text(train_[i]) + "\n";
    }
    return out;
}

KnnModel KnnModel::deserialize(std::string_view text, const std::string& source) {
    LineReader r{io::split(text, '\n'), 0, source};
    auto magic = r.next();
    if (magic.size() != 2 || magic[0] != "SHAPR1" || magic[1] != "knn") {
        throw ParseError(source, 1, "not a k-NN model file (expected 'SHAPR1 knn')");
    }
    KnnModel m;
    auto kline = r.next();
    if (kline.size() != 2 || kline[0] != "k") throw ParseError(source, r.line(), "expected 'k <n>'");
    m.k_ = r.count(kline[1]);
    auto nline = r.next();
    if (nline.size() != 2 || nline[0] != "normalizer") throw ParseError(source, r.line(), "expected 'normalizer'");
    if (nline[1] != "none") {
        const std::size_t d = r.count(nline[1]);
        std::vector<double> mean, sd;
        for (auto* dst : {&mean, &sd}) {
            auto p = r.next();
            if (p.size() != d) throw ParseError(source, r.line(), "normalizer row has wrong length");
            for (auto s : p) dst->push_back(r.number(s));
        }
        try {
            m.normalizer_ = Normalizer(std::move(mean), std::move(sd));
        } catch (const ConfigError& e) {
            throw ParseError(source, r.line(), e.what());
        }
    }
    auto t = r.next();
    if (t.size() != 3 || t[0] != "train") throw ParseError(source, r.line(), "expected 'train <n> <d>'");
    const std::size_t n = r.count(t[1]);
    m.dims_ = r.count(t[2]);
    for (std::size_t i = 0; i < n; ++i) {
        auto p = r.next();
        if (p.size() != m.dims_ + 1) throw ParseError(source, r.line(), "training row has wrong length");
        m.labels_.emplace_back(p[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < p.size(); ++j) row.push_back(r.number(p[j]));
        m.train_.push_back(std::move(row));
    }
    if (m.k_ == 0 || m.k_ > n) throw ParseError(source, 0, "k out of range for the stored training set");
    if (m.normalizer_ && m.normalizer_->size() != m.dims_) throw ParseError(source, 0, "normalizer size mismatch");
    return m;
}

// ---------------------------------------------------------------- decision tree

namespace {

struct TreeBuilder {
    const Rows& X;
    const std::vector<int>& y;  // class index per row
    std::size_t n_classes;
    std::size_t dims;
    const TreeParams& params;
    std::mt19937_64& rng;
    std::vector<DecisionTree::Node>& nodes;

    std::vector<std::size_t> counts_of(const std::vector<std::size_t>& idx) const {
        std::vector<std::size_t> c(n_classes, 0);
        for (std::size_t i : idx) ++c[static_cast<std::size_t>(y[i])];
        return c;
    }

    std::vector<std::size_t> feature_order() {
        std::vector<std::size_t> f(dims);
        std::iota(f.begin(), f.end(), std::size_t{0});
        const std::size_t m = params.features_per_split;
        if (m == 0 || m >= dims) return f;
        // random order; the first m are the candidates, the rest a fallback when all m are constant
        for (std::size_t i = dims; i > 1; --i) {
            std::swap(f[i - 1], f[static_cast<std::size_t>(rng() % i)]);
        }
        return f;
    }

    struct Split {
        std::size_t feature = 0;
        double threshold = 0.0;
        double impurity = 0.0;  // weighted child Gini
    };

    std::optional<Split> best_split(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& counts) {
        const auto order = feature_order();
        const std::size_t m = params.features_per_split == 0 ? dims : std::min(params.features_per_split, dims);
        const std::size_t n = idx.size();
        std::optional<Split> best;
        std::vector<std::pair<double, int>> vals(n);
        std::vector<std::size_t> left(n_classes), right(n_classes);
        for (std::size_t fi = 0; fi < order.size(); ++fi) {
            if (fi >= m && best) break;
            const std::size_t f = order[fi];
            for (std::size_t k = 0; k < n; ++k) vals[k] = {X[idx[k]][f], y[idx[k]]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (!(vals.front().first < vals.back().first)) continue;
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const auto c = static_cast<std::size_t>(vals[k].second);
                ++left[c];
                --right[c];
                const double lo = vals[k].first;
                const double hi = vals[k + 1].first;
                if (!(lo < hi)) continue;
                const double mid = lo + (hi - lo) / 2.0;
                if (!(lo < mid && mid < hi)) continue;
                const std::size_t nl = k + 1;
                const std::size_t nr = n - nl;
                const double imp = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                                   static_cast<double>(n);
                if (!best || imp < best->impurity) best = Split{f, mid, imp};
            }
        }
        return best;
    }

    int build(const std::vector<std::size_t>& idx, std::size_t depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        auto counts = counts_of(idx);
        nodes[static_cast<std::size_t>(id)].counts = counts;
        nodes[static_cast<std::size_t>(id)].label = majority(counts);
        const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
        if (pure || idx.size() < std::max<std::size_t>(params.min_samples_split, 2) ||
            (params.max_depth != 0 && depth >= params.max_depth)) {
            return id;
        }
        const auto split = best_split(idx, counts);
        if (!split) return id;  // identical feature vectors with conflicting labels
        std::vector<std::size_t> l, r;
        for (std::size_t i : idx) (X[i][split->feature] <= split->threshold ? l : r).push_back(i);
        const int left = build(l, depth + 1);
        const int right = build(r, depth + 1);
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        node.left = left;
        node.right = right;
        return id;
    }
};

}  // namespace

DecisionTree DecisionTree::fit(const Rows& features, const std::vector<std::string>& labels, const TreeParams& params,
                               std::uint64_t seed) {
    check_training(features, labels);
    std::vector<std::size_t> all(features.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 0));
    return fit_indices(features, labels, all, params, rng);
}

DecisionTree DecisionTree::fit_indices(const Rows& features, const std::vector<std::string>& labels,
                                       const std::vector<std::size_t>& indices, const TreeParams& params,
                                       std::mt19937_64& rng) {
    check_training(features, labels);
    if (indices.empty()) throw ConfigError("empty training set");
    DecisionTree t;
    t.classes_ = sorted_classes(labels);
    t.dims_ = features.front().size();
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y[i] = static_cast<int>(std::lower_bound(t.classes_.begin(), t.classes_.end(), labels[i]) - t.classes_.begin());
    }
    TreeBuilder b{features, y, t.classes_.size(), t.dims_, params, rng, t.nodes_};
    b.build(indices, 0);
    return t;
}

const std::string& DecisionTree::predict(std::span<const double> query) const {
    if (nodes_.empty()) throw ConfigError("tree is not fitted");
    check_query(dims_, query.size());
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(query[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return classes_[static_cast<std::size_t>(nodes_[i].label)];
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t best = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes_[i].feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
        }
    }
    return best;
}

void DecisionTree::write_nodes(std::string& out) const {
    out += "nodes " + std::to_string(nodes_.size()) + "\n";
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const auto& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.feature >= 0) {
            out += "N " + std::to_string(n.feature) + " " + io::format_sig(n.threshold, 17) + "\n";
            stack.push_back(static_cast<std::size_t>(n.right));
            stack.push_back(static_cast<std::size_t>(n.left));
        } else {
            out += "L " + classes_[static_cast<std::size_t>(n.label)];
            for (std::size_t c : n.counts) out += " " + std::to_string(c);
            out += "\n";
        }
    }
}

DecisionTree DecisionTree::read_nodes(const std::vector<std::string_view>& lines, std::size_t& pos,
                                      const std::vector<std::string>& classes, std::size_t dims,
                                      const std::string& source) {
    LineReader r{lines, pos, source};
    auto head = r.next();
    if (head.size() != 2 || head[0] != "nodes") throw ParseError(source, r.line(), "expected 'nodes <count>'");
    const std::size_t count = r.count(head[1]);
    DecisionTree t;
    t.classes_ = classes;
    t.dims_ = dims;
    // preorder rebuild: parent indices whose right child is still pending
    std::vector<std::size_t> pending;
    for (std::size_t k = 0; k < count; ++k) {
        auto p = r.next();
        DecisionTree::Node node;
        if (!p.empty() && p[0] == "N" && p.size() == 3) {
            node.feature = static_cast<int>(r.count(p[1]));
            if (static_cast<std::size_t>(node.feature) >= dims) throw ParseError(source, r.line(), "feature index out of range");
            node.threshold = r.number(p[2]);
        } else if (!p.empty() && p[0] == "L" && p.size() == classes.size() + 2) {
            const auto it = std::lower_bound(classes.begin(), classes.end(), std::string(p[1]));
            if (it == classes.end() || *it != p[1]) throw ParseError(source, r.line(), "unknown leaf label");
            node.label = static_cast<int>(it - classes.begin());
            for (std::size_t c = 2; c < p.size(); ++c) node.counts.push_back(r.count(p[c]));
        } else {
            throw ParseError(source, r.line(), "expected 'N <feature> <threshold>' or 'L <label> <counts>'");
        }
        const std::size_t id = t.nodes_.size();
        if (k > 0) {
            if (pending.empty()) throw ParseError(source, r.line(), "node outside the tree");
            auto& parent = t.nodes_[pending.back()];
            if (parent.left < 0) {
                parent.left = static_cast<int>(id);
            } else {
                parent.right = static_cast<int>(id);
                pending.pop_back();
            }
        }
        const bool internal = node.feature >= 0;
        t.nodes_.push_back(std::move(node));
        if (internal) pending.push_back(id);
    }
    if (!pending.empty() || t.nodes_.empty()) throw ParseError(source, r.line(), "incomplete tree");
    pos = r.pos;
    return t;
}

std::string DecisionTree::serialize() const {
    std::string out = "SHAPR1 tree\n";
    out += "features " + std::to_string(dims_) + "\n";
    out += "classes " + std::to_string(classes_.size());
    for (const auto& c : classes_) out += " " + c;
    out += "\n";
    write_nodes(out);
    return out;
}

namespace {

std::pair<std::size_t, std::vector<std::string>> read_header(LineReader& r, const char* kind) {
    auto magic = r.next();
    if (magic.size() != 2 || magic[0] != "SHAPR1" || magic[1] != kind) {
        throw ParseError(r.source, 1, std::string("not a ") + kind + " model file (expected 'SHAPR1 " + kind + "')");
    }
    auto f = r.next();
    if (f.size() != 2 || f[0] != "features") throw ParseError(r.source, r.line(), "expected 'features <d>'");
    const std::size_t dims = r.count(f[1]);
    auto c = r.next();
    if (c.size() < 2 || c[0] != "classes" || c.size() != r.count(c[1]) + 2) {
        throw ParseError(r.source, r.line(), "expected 'classes <k> <labels...>'");
    }
    std::vector<std::string> classes;
    for (std::size_t i = 2; i < c.size(); ++i) classes.emplace_back(c[i]);
    if (!std::is_sorted(classes.begin(), classes.end())) throw ParseError(r.source, r.line(), "classes must be sorted");
    return {dims, classes};
}

}  // namespace

DecisionTree DecisionTree::deserialize(std::string_view text, const std::string& source) {
    LineReader r{io::split(text, '\n'), 0, source};
    auto [dims, classes] = read_header(r, "tree");
    return read_nodes(r.lines, r.pos, classes, dims, source);
}

// ---------------------------------------------------------------- random forest

RandomForest RandomForest::fit(const Rows& features, const std::vector<std::string>& labels, const ForestParams& params,
                               std::uint64_t seed) {
    check_training(features, labels);
    if (params.trees == 0) throw ConfigError("forest needs at least one tree");
    const std::size_t n = features.size();
    const std::size_t d = features.front().size();
    TreeParams tp = params.tree;
    if (tp.features_per_split == 0) {
        tp.features_per_split = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    }
    RandomForest f;
    f.trees_.reserve(params.trees);
    for (std::size_t t = 0; t < params.trees; ++t) {
        std::mt19937_64 rng(derive_seed(seed, t));
        std::vector<std::size_t> idx(n);
        if (params.bootstrap) {
            for (auto& i : idx) i = static_cast<std::size_t>(rng() % n);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        f.trees_.push_back(DecisionTree::fit_indices(features, labels, idx, tp, rng));
    }
    return f;
}

std::string RandomForest::predict(std::span<const double> query) const {
    if (trees_.empty()) throw ConfigError("forest is not fitted");
    std::map<std::string, std::size_t> votes;
    for (const auto& t : trees_) ++votes[t.predict(query)];
    const std::string* best = nullptr;
    std::size_t best_n = 0;
    for (const auto& [label, n] : votes) {
        if (n > best_n) {
            best = &label;
            best_n = n;
        }
    }
    return *best;
}

std::string RandomForest::serialize() const {
    if (trees_.empty()) throw ConfigError("forest is not fitted");
    const auto& first = trees_.front();
    std::string out = "SHAPR1 forest\n";
    out += "features " + std::to_string(first.dims_) + "\n";
    out += "classes " + std::to_string(first.classes_.size());
    for (const auto& c : first.classes_) out += " " + c;
    out += "\n";
    out += "trees " + std::to_string(trees_.size()) + "\n";
    for (const auto& t : trees_) t.write_nodes(out);
    return out;
}

RandomForest RandomForest::deserialize(std::string_view text, const std::string& source) {
    LineReader r{io::split(text, '\n'), 0, source};
    auto [dims, classes] = read_header(r, "forest");
    auto t = r.next();
    if (t.size() != 2 || t[0] != "trees") throw ParseError(source, r.line(), "expected 'trees <count>'");
    const std::size_t count = r.count(t[1]);
    if (count == 0) throw ParseError(source, r.line(), "forest without trees");
    RandomForest f;
    for (std::size_t i = 0; i < count; ++i) {
        f.trees_.push_back(DecisionTree::read_nodes(r.lines, r.pos, classes, dims, source));
    }
    return f;
}

}  // namespace shapr::ml

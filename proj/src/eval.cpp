#include "shapr/eval.hpp"

#include <algorithm>
#include <unordered_map>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr::eval {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string coord_text(const Point2& p) {
    return io::format_sig(p.x, 10) + ";" + io::format_sig(p.y, 10);
}

std::vector<const LabeledSample*> select(const Dataset& d, const std::vector<std::string>& ids) {
    std::unordered_map<std::string_view, const LabeledSample*> by_id;
    for (const auto& s : d.samples) by_id.emplace(s.sample_id, &s);
    std::vector<const LabeledSample*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("sample '" + id + "' is not in the dataset");
        out.push_back(it->second);
    }
    if (out.empty()) throw ConfigError("no samples selected");
    return out;
}

}  // namespace

std::string_view model_tag(ModelKind kind) {
    switch (kind) {
        case ModelKind::knn: return "knn";
        case ModelKind::dt: return "dt";
        case ModelKind::rfr: return "rfr";
        case ModelKind::gpr: return "gpr";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view tag) {
    if (tag == "knn") return ModelKind::knn;
    if (tag == "dt") return ModelKind::dt;
    if (tag == "rfr") return ModelKind::rfr;
    if (tag == "gpr") return ModelKind::gpr;
    throw ConfigError("unknown model '" + std::string(tag) + "' (expected knn, dt, rfr or gpr)");
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& r : counts)
        for (std::size_t c : r) t += c;
    return t;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::size_t t = 0;
    for (std::size_t c : counts.at(i)) t += c;
    return t;
}

double ConfusionMatrix::accuracy() const {
    const std::size_t t = total();
    if (t == 0) throw ConfigError("accuracy of an empty confusion matrix");
    return static_cast<double>(trace()) / static_cast<double>(t);
}

std::string ConfusionMatrix::to_csv() const {
    std::string out = "true\\pred";
    for (const auto& l : labels) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += labels[i];
        for (std::size_t c : counts[i]) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& truth, const std::vector<std::string>& predicted) {
    if (truth.size() != predicted.size()) {
        throw ConfigError("confusion matrix needs equal-length label lists (" + std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
    }
    if (truth.empty()) throw ConfigError("confusion matrix of zero predictions");
    ConfusionMatrix cm;
    cm.labels = truth;
    cm.labels.insert(cm.labels.end(), predicted.begin(), predicted.end());
    std::sort(cm.labels.begin(), cm.labels.end());
    cm.labels.erase(std::unique(cm.labels.begin(), cm.labels.end()), cm.labels.end());
    cm.counts.assign(cm.labels.size(), std::vector<std::size_t>(cm.labels.size(), 0));
    const auto index = [&](const std::string& l) {
        return static_cast<std::size_t>(std::lower_bound(cm.labels.begin(), cm.labels.end(), l) - cm.labels.begin());
    };
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[index(truth[i])][index(predicted[i])];
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    return cm.accuracy();
}

ModelKind kind_of(const TrainedModel& model) {
    return std::visit(overloaded{
                          [](const ml::KnnModel&) { return ModelKind::knn; },
                          [](const ml::DecisionTree&) { return ModelKind::dt; },
                          [](const ml::RandomForest&) { return ModelKind::rfr; },
                          [](const gpr::Model&) { return ModelKind::gpr; },
                      },
                      model);
}

TrainedModel train_model(const Dataset& d, const std::vector<std::string>& train_ids, ModelKind kind,
                         const ModelParams& params, std::uint64_t seed) {
    const auto samples = select(d, train_ids);
    if (kind == ModelKind::gpr) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(d.feature_count()));
        Eigen::MatrixXd Y(static_cast<Eigen::Index>(samples.size()), 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto* s = samples[i];
            if (s->task != Task::coord_localization || !s->coords) {
                throw ConfigError("gpr needs a coordinate-labelled dataset; sample '" + s->sample_id + "' is task " +
                                  std::string(task_tag(s->task)));
            }
            const auto r = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < d.feature_count(); ++j) X(r, static_cast<Eigen::Index>(j)) = s->features.values[j];
            Y(r, 0) = s->coords->x;
            Y(r, 1) = s->coords->y;
        }
        std::optional<Normalizer> norm;
        Eigen::MatrixXd Xfit = X;
        if (params.normalize_gpr) {
            std::vector<FeatureVector> rows;
            for (const auto* s : samples) rows.push_back(s->features);
            norm = Normalizer::fit(std::span<const FeatureVector>(rows));
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                for (Eigen::Index j = 0; j < X.cols(); ++j)
                    Xfit(i, j) = (X(i, j) - norm->mean()[static_cast<std::size_t>(j)]) / norm->stddev()[static_cast<std::size_t>(j)];
        }
        const auto mle = gpr::fit_mle(Xfit, Y, params.mle);
        return gpr::Model::fit(X, Y, mle.hp, norm);
    }

    ml::Rows rows;
    std::vector<std::string> labels;
    for (const auto* s : samples) {
        if (s->label.empty()) {
            throw ConfigError(std::string(model_tag(kind)) + " needs category labels; sample '" + s->sample_id +
                              "' has none");
        }
        rows.push_back(s->features.values);
        labels.push_back(s->label);
    }
    switch (kind) {
        case ModelKind::knn: return ml::KnnModel::fit(rows, labels, params.k);
        case ModelKind::dt: return ml::DecisionTree::fit(rows, labels, params.tree, seed);
        case ModelKind::rfr: return ml::RandomForest::fit(rows, labels, params.forest, seed);
        case ModelKind::gpr: break;
    }
    throw ConfigError("unsupported model kind");
}

std::string serialize_model(const TrainedModel& model) {
    return std::visit([](const auto& m) { return m.serialize(); }, model);
}

TrainedModel deserialize_model(std::string_view text, const std::string& source) {
    const auto first = io::trim(text.substr(0, text.find('\n')));
    if (first == "SHAPR1 knn") return ml::KnnModel::deserialize(text, source);
    if (first == "SHAPR1 tree") return ml::DecisionTree::deserialize(text, source);
    if (first == "SHAPR1 forest") return ml::RandomForest::deserialize(text, source);
    if (first == "SHAPR1 gpr") return gpr::Model::deserialize(text, source);
    throw ParseError(source, 1, "unknown model file header '" + std::string(first) + "'");
}

double Report::accuracy() const {
    if (!confusion) throw ConfigError("report has no accuracy (regression model)");
    return confusion->accuracy();
}

std::string Report::to_csv() const {
    std::string out = "metric,value\n";
    out += "task," + std::string(task_tag(task)) + "\n";
    out += "model," + std::string(model_tag(model)) + "\n";
    out += "n_train," + std::to_string(n_train) + "\n";
    out += "n_test," + std::to_string(rows.size()) + "\n";
    if (confusion) out += "accuracy," + io::format_sig(confusion->accuracy(), 10) + "\n";
    if (mean_error_m) out += "mean_error_m," + io::format_sig(*mean_error_m, 10) + "\n";
    out += mean_error_m ? "sample_id,true,pred,err_m\n" : "sample_id,true,pred\n";
    for (const auto& r : rows) {
        out += r.sample_id + "," + r.truth + "," + r.predicted;
        if (r.error_m) out += "," + io::format_sig(*r.error_m, 10);
        out += "\n";
    }
    return out;
}

Report evaluate_model(const TrainedModel& model, const Dataset& d, const std::vector<std::string>& ids,
                      std::size_t n_train) {
    const auto samples = select(d, ids);
    Report rep;
    rep.task = samples.front()->task;
    rep.model = kind_of(model);
    rep.n_train = n_train;
    if (const auto* g = std::get_if<gpr::Model>(&model)) {
        std::vector<std::pair<Point2, Point2>> pairs;
        for (const auto* s : samples) {
            if (!s->coords) throw ConfigError("gpr evaluation needs coordinates on '" + s->sample_id + "'");
            const auto p = g->predict_mean(std::span<const double>(s->features.values));
            const Point2 pred{p(0), p(1)};
            pairs.emplace_back(pred, *s->coords);
            rep.rows.push_back({s->sample_id, coord_text(*s->coords), coord_text(pred),
                                gpr::localization_error(pred, *s->coords)});
        }
        rep.mean_error_m = gpr::mean_error(pairs);
        return rep;
    }
    std::vector<std::string> truth, pred;
    for (const auto* s : samples) {
        const std::string p = std::visit(overloaded{
                                             [&](const gpr::Model&) { return std::string(); },
                                             [&](const auto& m) { return std::string(m.predict(s->features.values)); },
                                         },
                                         model);
        truth.push_back(s->label);
        pred.push_back(p);
        rep.rows.push_back({s->sample_id, s->label, p, std::nullopt});
    }
    rep.confusion = confusion_matrix(truth, pred);
    return rep;
}

Report run_experiment(const Dataset& d, const SplitManifest& split, ModelKind kind, const ModelParams& params,
                      std::uint64_t seed) {
    split.validate(d);
    if (kind == ModelKind::gpr) {
        for (const auto& s : d.samples) {
            if (s.task != Task::coord_localization) {
                throw ConfigError("gpr needs a coordinate-localization dataset, found task " +
                                  std::string(task_tag(s.task)));
            }
        }
    }
    const auto model = train_model(d, split.train_ids, kind, params, seed);
    return evaluate_model(model, d, split.test_ids, split.train_ids.size());
}

std::string AblationResult::to_csv() const {
    std::string out = "sensors,accuracy,seed\n";
    for (const auto& p : points) {
        out += std::to_string(p.sensors) + "," + io::format_sig(p.accuracy, 10) + "," + std::to_string(p.seed) + "\n";
    }
    return out;
}

AblationResult receiver_ablation(const Dataset& d, const SplitManifest& split, ModelKind kind,
                                 const std::vector<std::size_t>& sensor_counts, const ModelParams& params,
                                 std::uint64_t seed) {
    if (kind == ModelKind::gpr) throw ConfigError("receiver ablation reports accuracy; use a classifier");
    if (sensor_counts.empty()) throw ConfigError("no sensor counts given");
    for (std::size_t i = 0; i < sensor_counts.size(); ++i) {
        if (sensor_counts[i] == 0 || sensor_counts[i] > d.sensor_ids.size()) {
            throw ConfigError("sensor count " + std::to_string(sensor_counts[i]) + " outside [1, " +
                              std::to_string(d.sensor_ids.size()) + "]");
        }
        if (i > 0 && sensor_counts[i] <= sensor_counts[i - 1]) {
            throw ConfigError("sensor counts must be strictly increasing");
        }
    }
    AblationResult res;
    for (std::size_t m : sensor_counts) {
        const Dataset sub = m == d.sensor_ids.size() ? d : d.restrict_sensors(m);
        const auto rep = run_experiment(sub, split, kind, params, seed);
        res.points.push_back({m, rep.accuracy(), seed});
    }
    return res;
}

}  // namespace shapr::eval

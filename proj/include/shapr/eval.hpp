#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shapr/classifiers.hpp"
#include "shapr/dataset.hpp"
#include "shapr/gpr.hpp"

namespace shapr::eval {

enum class ModelKind { knn, dt, rfr, gpr };

std::string_view model_tag(ModelKind kind);
ModelKind parse_model_kind(std::string_view tag);

struct ModelParams {
    std::size_t k = ml::KnnModel::kDefaultK;
    ml::TreeParams tree;        // decision tree (all features per split)
    ml::ForestParams forest;    // random forest
    bool normalize_gpr = true;  // z-score GPR inputs on the training split
    gpr::MleConfig mle;
};

struct ConfusionMatrix {
    std::vector<std::string> labels;               // sorted union of true and predicted labels
    std::vector<std::vector<std::size_t>> counts;  // [true][predicted]

    std::size_t total() const;
    std::size_t trace() const;
    double accuracy() const;
    std::size_t row_sum(std::size_t i) const;

    /// "true\pred,<labels...>" header, one row per true label.
    std::string to_csv() const;
};

ConfusionMatrix confusion_matrix(const std::vector<std::string>& truth, const std::vector<std::string>& predicted);
double accuracy(const ConfusionMatrix& cm);

using TrainedModel = std::variant<ml::KnnModel, ml::DecisionTree, ml::RandomForest, gpr::Model>;

ModelKind kind_of(const TrainedModel& model);

/// Fits `kind` on the listed samples. GPR requires coordinate labels on every sample;
/// classifiers require category labels.
TrainedModel train_model(const Dataset& d, const std::vector<std::string>& train_ids, ModelKind kind,
                         const ModelParams& params, std::uint64_t seed);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text, const std::string& source = "<memory>");

struct PredictionRow {
    std::string sample_id;
    std::string truth;
    std::string predicted;
    std::optional<double> error_m;
};

struct Report {
    Task task = Task::authentication;
    ModelKind model = ModelKind::knn;
    std::size_t n_train = 0;
    std::vector<PredictionRow> rows;
    std::optional<ConfusionMatrix> confusion;  // classifiers
    std::optional<double> mean_error_m;        // GPR

    double accuracy() const;

    /// "metric,value" summary then "sample_id,true,pred[,err_m]" detail rows.
    std::string to_csv() const;
};

/// Predicts every listed sample and scores it.
Report evaluate_model(const TrainedModel& model, const Dataset& d, const std::vector<std::string>& ids,
                      std::size_t n_train = 0);

/// Trains on split.train_ids, evaluates on split.test_ids.
Report run_experiment(const Dataset& d, const SplitManifest& split, ModelKind kind, const ModelParams& params,
                      std::uint64_t seed);

struct AblationPoint {
    std::size_t sensors = 0;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
};

struct AblationResult {
    std::vector<AblationPoint> points;  // strictly increasing sensor counts per seed

    /// "sensors,accuracy,seed"
    std::string to_csv() const;
};

/// Re-runs the experiment with features restricted to the first m sensors, for each m.
AblationResult receiver_ablation(const Dataset& d, const SplitManifest& split, ModelKind kind,
                                 const std::vector<std::size_t>& sensor_counts, const ModelParams& params,
                                 std::uint64_t seed);

}  // namespace shapr::eval

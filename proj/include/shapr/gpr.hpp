#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "shapr/spectrum.hpp"
#include "shapr/types.hpp"

namespace shapr::gpr {

struct Hyperparams {
    double sigma = 1.0;         // signal standard deviation
    double length_scale = 1.0;
    double jitter = 0.0;        // added to the Gram diagonal

    void validate() const;
};

/// sigma^2 * exp(-|a - b|^2 / (2 l^2))
double kernel(std::span<const double> a, std::span<const double> b, const Hyperparams& hp);

/// Pairwise squared Euclidean distances between the rows of X; exactly symmetric, zero diagonal.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X);

/// K(X, X) without jitter.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Hyperparams& hp);

/// Rows are queries, columns training points.
Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& X, const Hyperparams& hp);

/// Sum over the columns of Y of  -1/2 y^T (K + jI)^-1 y - 1/2 log|K + jI| - n/2 log 2pi.
/// Throws NumericError when K + jI is not positive definite.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y_centered, const Hyperparams& hp);

struct MleConfig {
    double grid_low = 1e-2;     // length-scale grid, in units of the median pairwise distance
    double grid_high = 1e2;
    int grid_points = 41;
    int refine_rounds = 3;
    double jitter_relative = 1e-6;      // jitter starts at this fraction of sigma^2
    double jitter_relative_max = 1e-2;  // and grows x10 on factorization failure up to this
};

struct MleCandidate {
    double length_scale = 0.0;
    Hyperparams hp;
    double lml = 0.0;
};

struct MleFit {
    Hyperparams hp;
    double lml = 0.0;
    std::vector<MleCandidate> evaluated;  // every candidate that factorized
};

/// Maximum-likelihood hyperparameters. Targets are centered internally; sigma^2 is profiled
/// in closed form and the length scale chosen by log-grid search plus local refinement.
MleFit fit_mle(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const MleConfig& config = {});

/// Constant the targets are measured from: the per-output training mean, or 0.
enum class PriorMean { training_mean, zero };

/// Exact GP posterior mean, by default with per-output training-mean centering.
class Model {
public:
    Model() = default;

    /// Factorizes K + jitter I; throws NumericError if that fails. The optional normalizer is
    /// applied to raw inputs before they reach the kernel (X is expected raw as well).
    static Model fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparams& hp,
                     std::optional<Normalizer> normalizer = std::nullopt,
                     PriorMean prior = PriorMean::training_mean);

    /// Posterior mean K_* (K + jI)^-1 (Y - mean) + mean, one row per query.
    Eigen::MatrixXd predict_mean(const Eigen::MatrixXd& queries) const;
    Eigen::RowVectorXd predict_mean(std::span<const double> query) const;

    const Hyperparams& hyperparams() const { return hp_; }
    const Eigen::MatrixXd& inputs() const { return X_; }  // normalized when a normalizer is set
    const Eigen::MatrixXd& alpha() const { return alpha_; }
    const Eigen::RowVectorXd& target_mean() const { return target_mean_; }
    const std::optional<Normalizer>& normalizer() const { return normalizer_; }

    /// Text format: "SHAPR1 gpr", hyperparameters, target means, normalizer, X and alpha
    /// with 17 significant digits.
    std::string serialize() const;
    static Model deserialize(std::string_view text, const std::string& source = "<memory>");

private:
    Eigen::MatrixXd transform(const Eigen::MatrixXd& raw) const;

    Hyperparams hp_;
    Eigen::MatrixXd X_;
    Eigen::MatrixXd alpha_;
    Eigen::RowVectorXd target_mean_;
    std::optional<Normalizer> normalizer_;
};

/// Euclidean distance between predicted and actual position.
double localization_error(const Point2& predicted, const Point2& actual);

/// Arithmetic mean of per-pair errors; throws ConfigError on empty input.
double mean_error(std::span<const std::pair<Point2, Point2>> pairs);

}  // namespace shapr::gpr

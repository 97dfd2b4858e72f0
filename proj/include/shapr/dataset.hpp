#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shapr/spectrum.hpp"
#include "shapr/types.hpp"

namespace shapr {

/// Significant digits used for feature values in dataset files.
inline constexpr int kFeatureDigits = 9;

/// Rounds a power to what a dataset file stores, so in-memory datasets equal their reloads.
double quantize_feature(double value);

struct LabeledSample {
    std::string sample_id;
    Task task = Task::authentication;
    /// Subject, grid cell or activity name. Coordinate samples may also carry one.
    std::string label;
    std::optional<Point2> coords;
    FeatureVector features;

    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct Dataset {
    std::vector<SensorId> sensor_ids;  // ascending; defines the feature layout
    std::size_t bands_per_sensor = 0;
    std::vector<LabeledSample> samples;

    std::size_t feature_count() const { return sensor_ids.size() * bands_per_sensor; }
    std::size_t size() const { return samples.size(); }

    /// Throws ConfigError on duplicate ids, ragged features, bad labels or missing coordinates.
    void validate() const;

    /// Index of the sample with the given id; throws ConfigError when absent.
    std::size_t index_of(std::string_view sample_id) const;

    /// Copy keeping only the features of the first `sensor_count` sensors.
    Dataset restrict_sensors(std::size_t sensor_count) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Dataset CSV: sample_id,task,label,x,y,f_<sensor>_<band>... with x,y empty for
// category tasks and feature columns sensor-major ascending.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(std::string_view text, const std::string& source = "<memory>");
void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);

struct SplitManifest {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    /// Disjoint, covering every sample of `d`, both sides non-empty.
    void validate(const Dataset& d) const;

    friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

/// Per label: train = max(1, floor(fraction * n)) capped at n - 1, the rest is test.
SplitManifest stratified_split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// Holds out every sample of `holdout_locations` distinct coordinates chosen at random.
SplitManifest location_holdout_split(const Dataset& d, std::size_t holdout_locations, std::uint64_t seed);

// Manifest text: one "train <id>" or "test <id>" per line.
std::string manifest_to_text(const SplitManifest& m);
SplitManifest manifest_from_text(std::string_view text, const std::string& source = "<memory>");
void save_manifest(const std::filesystem::path& path, const SplitManifest& m);
SplitManifest load_manifest(const std::filesystem::path& path);

}  // namespace shapr

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace shapr {

using SensorId = std::uint32_t;

/// One raw capture from one sensor at one band center. Bytes are unsigned 8-bit
/// samples interleaved I,Q,I,Q,...
struct IqFrame {
    SensorId sensor_id = 0;
    std::uint64_t center_freq_hz = 0;
    std::uint64_t sample_rate_hz = 0;
    std::vector<std::uint8_t> bytes;

    friend bool operator==(const IqFrame&, const IqFrame&) = default;
};

/// Band centers start, start+step, ..., stop (inclusive at both ends).
struct BandPlan {
    std::int64_t start_hz = 300'000'000;
    std::int64_t stop_hz = 420'000'000;
    std::int64_t step_hz = 1'200'000;

    /// Throws ConfigError when the plan is not a whole number of positive steps.
    void validate() const;
    std::size_t band_count() const;

    friend bool operator==(const BandPlan&, const BandPlan&) = default;
};

struct SpectrumSweep {
    SensorId sensor_id = 0;
    BandPlan band_plan;
    std::vector<double> powers_db;
};

/// Per-sensor sweeps concatenated sensor-major (ascending sensor id, then frequency).
struct FeatureVector {
    std::vector<double> values;
    std::size_t sensor_count = 0;
    std::size_t bands_per_sensor = 0;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Per-feature z-score fitted on a training set.
class Normalizer {
public:
    /// Standard deviations below this are replaced by 1.
    static constexpr double kStddevFloor = 1e-12;

    Normalizer() = default;
    Normalizer(std::vector<double> mean, std::vector<double> stddev);

    static Normalizer fit(std::span<const FeatureVector> train);
    static Normalizer fit(std::span<const std::vector<double>> train);

    std::vector<double> apply(std::span<const double> values) const;
    FeatureVector apply(const FeatureVector& fv) const;
    std::vector<double> invert(std::span<const double> normalized) const;

    std::size_t size() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

std::vector<std::int64_t> band_centers(const BandPlan& plan);

/// Average power in dB of one frame: 10*log10( sum_i (b_i/127.5 - 1)^2 / (N/2) ).
double band_average_power(const IqFrame& frame);

/// Builds one sensor's sweep from exactly one frame per band center, in any order.
SpectrumSweep assemble_sweep(std::span<const IqFrame> frames, const BandPlan& plan);

FeatureVector stack_features(std::span<const SpectrumSweep> sweeps);

// IQ frame binary file: "SHIQ", u32 sensor_id, u64 center_freq_hz, u64 sample_rate_hz,
// u32 byte_count, then the raw bytes. All integers little-endian.
std::string encode_iq_frame(const IqFrame& frame);
IqFrame decode_iq_frame(std::string_view data, const std::string& source = "<memory>");
void write_iq_file(const std::filesystem::path& path, const IqFrame& frame);
IqFrame read_iq_file(const std::filesystem::path& path);

// Sweep CSV: header sensor_id,freq_hz,power_db and one row per band, ascending frequency.
std::string sweep_to_csv(const SpectrumSweep& sweep);
SpectrumSweep sweep_from_csv(std::string_view text, const std::string& source = "<memory>");

}  // namespace shapr

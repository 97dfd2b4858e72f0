#include "shapr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr {

namespace {

constexpr double kMinLinearPower = 1e-30;
constexpr char kIqMagic[4] = {'S', 'H', 'I', 'Q'};
constexpr std::size_t kIqHeaderSize = 4 + 4 + 8 + 8 + 4;

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(const char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return static_cast<T>(v);
}

std::string mhz(std::int64_t hz) {
    std::ostringstream ss;
    ss << hz << " Hz (" << io::format_sig(static_cast<double>(hz) / 1e6, 10) << " MHz)";
    return ss.str();
}

}  // namespace

void BandPlan::validate() const {
    if (step_hz <= 0) {
        throw ConfigError("band plan step must be positive, got " + std::to_string(step_hz));
    }
    if (stop_hz <= start_hz) {
        throw ConfigError("band plan stop (" + std::to_string(stop_hz) + ") must exceed start (" +
                          std::to_string(start_hz) + ")");
    }
    if ((stop_hz - start_hz) % step_hz != 0) {
        throw ConfigError("band plan span " + std::to_string(stop_hz - start_hz) +
                          " Hz is not a multiple of the step " + std::to_string(step_hz) + " Hz");
    }
}

std::size_t BandPlan::band_count() const {
    validate();
    return static_cast<std::size_t>((stop_hz - start_hz) / step_hz) + 1;
}

std::vector<std::int64_t> band_centers(const BandPlan& plan) {
    const std::size_t n = plan.band_count();
    std::vector<std::int64_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = plan.start_hz + static_cast<std::int64_t>(i) * plan.step_hz;
    }
    return out;
}

double band_average_power(const IqFrame& frame) {
    const std::size_t n = frame.bytes.size();
    if (n < 2 || n % 2 != 0) {
        throw IngestError("IQ frame of sensor " + std::to_string(frame.sensor_id) + " at " +
                          mhz(static_cast<std::int64_t>(frame.center_freq_hz)) +
                          " has " + std::to_string(n) + " bytes; need an even count >= 2");
    }
    double sum = 0.0;
    for (std::uint8_t b : frame.bytes) {
        const double v = static_cast<double>(b) / 127.5 - 1.0;
        sum += v * v;
    }
    const double linear = sum / (static_cast<double>(n) / 2.0);
    if (!(linear >= kMinLinearPower)) {
        throw NumericError("zero power in frame of sensor " + std::to_string(frame.sensor_id));
    }
    return 10.0 * std::log10(linear);
}

SpectrumSweep assemble_sweep(std::span<const IqFrame> frames, const BandPlan& plan) {
    const auto centers = band_centers(plan);
    if (frames.empty()) {
        throw IngestError("no frames supplied for sweep");
    }
    const SensorId sensor = frames.front().sensor_id;
    std::map<std::int64_t, const IqFrame*> by_freq;
    for (const IqFrame& f : frames) {
        if (f.sensor_id != sensor) {
            throw IngestError("sweep mixes sensors " + std::to_string(sensor) + " and " +
                              std::to_string(f.sensor_id));
        }
        const auto freq = static_cast<std::int64_t>(f.center_freq_hz);
        if (!std::binary_search(centers.begin(), centers.end(), freq)) {
            throw IngestError("sensor " + std::to_string(sensor) + ": frame at " + mhz(freq) +
                              " is not a band center of the plan");
        }
        if (!by_freq.emplace(freq, &f).second) {
            throw IngestError("sensor " + std::to_string(sensor) + ": duplicate frame at " + mhz(freq));
        }
    }
    SpectrumSweep sweep{sensor, plan, {}};
    sweep.powers_db.reserve(centers.size());
    for (std::int64_t c : centers) {
        auto it = by_freq.find(c);
        if (it == by_freq.end()) {
            throw IngestError("sensor " + std::to_string(sensor) + ": missing frame at " + mhz(c));
        }
        sweep.powers_db.push_back(band_average_power(*it->second));
    }
    return sweep;
}

FeatureVector stack_features(std::span<const SpectrumSweep> sweeps) {
    if (sweeps.empty()) {
        throw IngestError("no sweeps to stack");
    }
    std::vector<const SpectrumSweep*> order;
    for (const auto& s : sweeps) {
        if (!(s.band_plan == sweeps.front().band_plan)) {
            throw IngestError("sweeps of sensors " + std::to_string(sweeps.front().sensor_id) + " and " +
                              std::to_string(s.sensor_id) + " use different band plans");
        }
        if (s.powers_db.size() != s.band_plan.band_count()) {
            throw IngestError("sweep of sensor " + std::to_string(s.sensor_id) +
                              " does not match its band plan length");
        }
        order.push_back(&s);
    }
    std::sort(order.begin(), order.end(),
              [](const SpectrumSweep* a, const SpectrumSweep* b) { return a->sensor_id < b->sensor_id; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (order[i]->sensor_id == order[i - 1]->sensor_id) {
            throw IngestError("duplicate sensor id " + std::to_string(order[i]->sensor_id));
        }
    }
    FeatureVector fv;
    fv.sensor_count = order.size();
    fv.bands_per_sensor = order.front()->powers_db.size();
    fv.values.reserve(fv.sensor_count * fv.bands_per_sensor);
    for (const auto* s : order) {
        for (double p : s->powers_db) {
            if (!std::isfinite(p)) {
                throw NumericError("non-finite power in sweep of sensor " + std::to_string(s->sensor_id));
            }
            fv.values.push_back(p);
        }
    }
    return fv;
}

Normalizer::Normalizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
    if (mean_.size() != stddev_.size()) {
        throw ConfigError("normalizer mean/stddev length mismatch");
    }
    for (double s : stddev_) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ConfigError("normalizer stddev entries must be positive and finite");
        }
    }
}

Normalizer Normalizer::fit(std::span<const std::vector<double>> train) {
    if (train.size() < 2) {
        throw ConfigError("normalizer needs at least 2 training vectors, got " + std::to_string(train.size()));
    }
    const std::size_t d = train.front().size();
    for (const auto& v : train) {
        if (v.size() != d) {
            throw ConfigError("inconsistent feature lengths: " + std::to_string(d) + " vs " +
                              std::to_string(v.size()));
        }
    }
    const double n = static_cast<double>(train.size());
    std::vector<double> mean(d, 0.0);
    std::vector<double> sd(d, 0.0);
    for (const auto& v : train) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
    }
    for (double& m : mean) m /= n;
    for (const auto& v : train) {
        for (std::size_t j = 0; j < d; ++j) {
            const double e = v[j] - mean[j];
            sd[j] += e * e;
        }
    }
    for (double& s : sd) {
        s = std::sqrt(s / n);
        if (s < kStddevFloor) s = 1.0;
    }
    return Normalizer(std::move(mean), std::move(sd));
}

Normalizer Normalizer::fit(std::span<const FeatureVector> train) {
    std::vector<std::vector<double>> rows;
    rows.reserve(train.size());
    for (const auto& fv : train) rows.push_back(fv.values);
    return fit(std::span<const std::vector<double>>(rows));
}

std::vector<double> Normalizer::apply(std::span<const double> values) const {
    if (values.size() != mean_.size()) {
        throw ConfigError("normalizer fitted on " + std::to_string(mean_.size()) +
                          " features, got " + std::to_string(values.size()));
    }
    std::vector<double> out(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        out[j] = (values[j] - mean_[j]) / stddev_[j];
    }
    return out;
}

FeatureVector Normalizer::apply(const FeatureVector& fv) const {
    return FeatureVector{apply(std::span<const double>(fv.values)), fv.sensor_count, fv.bands_per_sensor};
}

std::vector<double> Normalizer::invert(std::span<const double> normalized) const {
    if (normalized.size() != mean_.size()) {
        throw ConfigError("normalizer length mismatch");
    }
    std::vector<double> out(normalized.size());
    for (std::size_t j = 0; j < normalized.size(); ++j) {
        out[j] = mean_[j] + stddev_[j] * normalized[j];
    }
    return out;
}

std::string encode_iq_frame(const IqFrame& frame) {
    std::string out(kIqMagic, 4);
    put_le<std::uint32_t>(out, frame.sensor_id);
    put_le<std::uint64_t>(out, frame.center_freq_hz);
    put_le<std::uint64_t>(out, frame.sample_rate_hz);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frame.bytes.size()));
    out.append(reinterpret_cast<const char*>(frame.bytes.data()), frame.bytes.size());
    return out;
}

IqFrame decode_iq_frame(std::string_view data, const std::string& source) {
    if (data.size() < kIqHeaderSize || std::memcmp(data.data(), kIqMagic, 4) != 0) {
        throw ParseError(source, 0, "not an IQ frame file (missing SHIQ header)");
    }
    const char* p = data.data() + 4;
    IqFrame f;
    f.sensor_id = get_le<std::uint32_t>(p);
    f.center_freq_hz = get_le<std::uint64_t>(p + 4);
    f.sample_rate_hz = get_le<std::uint64_t>(p + 12);
    const auto count = get_le<std::uint32_t>(p + 20);
    if (data.size() - kIqHeaderSize != count) {
        throw ParseError(source, 0, "byte_count " + std::to_string(count) + " does not match payload size " +
                                        std::to_string(data.size() - kIqHeaderSize));
    }
    if (count < 2 || count % 2 != 0) {
        throw ParseError(source, 0, "byte_count must be even and >= 2, got " + std::to_string(count));
    }
    const auto* payload = reinterpret_cast<const std::uint8_t*>(data.data() + kIqHeaderSize);
    f.bytes.assign(payload, payload + count);
    return f;
}

void write_iq_file(const std::filesystem::path& path, const IqFrame& frame) {
    io::write_file_atomic(path, encode_iq_frame(frame));
}

IqFrame read_iq_file(const std::filesystem::path& path) {
    return decode_iq_frame(io::read_file(path), path.string());
}

std::string sweep_to_csv(const SpectrumSweep& sweep) {
    const auto centers = band_centers(sweep.band_plan);
    if (centers.size() != sweep.powers_db.size()) {
        throw ConfigError("sweep length does not match band plan");
    }
    std::string out = "sensor_id,freq_hz,power_db\n";
    for (std::size_t i = 0; i < centers.size(); ++i) {
        out += std::to_string(sweep.sensor_id) + "," + std::to_string(centers[i]) + "," +
               io::format_exact(sweep.powers_db[i]) + "\n";
    }
    return out;
}

SpectrumSweep sweep_from_csv(std::string_view text, const std::string& source) {
    auto lines = io::split(text, '\n');
    while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty() || io::trim(lines.front()) != "sensor_id,freq_hz,power_db") {
        throw ParseError(source, 1, "expected header 'sensor_id,freq_hz,power_db'");
    }
    SpectrumSweep sweep;
    std::vector<std::int64_t> freqs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cols = io::split(io::trim(lines[i]), ',');
        unsigned long long sensor = 0, freq = 0;
        double power = 0.0;
        if (cols.size() != 3 || !io::parse_u64(cols[0], sensor) || !io::parse_u64(cols[1], freq) ||
            !io::parse_double(cols[2], power)) {
            throw ParseError(source, i + 1, "expected sensor_id,freq_hz,power_db");
        }
        if (i == 1) {
            sweep.sensor_id = static_cast<SensorId>(sensor);
        } else if (sensor != sweep.sensor_id) {
            throw ParseError(source, i + 1, "sensor id changes within a sweep");
        }
        if (!freqs.empty() && static_cast<std::int64_t>(freq) <= freqs.back()) {
            throw ParseError(source, i + 1, "frequencies must be strictly ascending");
        }
        freqs.push_back(static_cast<std::int64_t>(freq));
        sweep.powers_db.push_back(power);
    }
    if (freqs.size() < 2) {
        throw ParseError(source, 0, "a sweep needs at least two bands");
    }
    sweep.band_plan = BandPlan{freqs.front(), freqs.back(), freqs[1] - freqs[0]};
    const auto expected = band_centers(sweep.band_plan);
    if (expected != freqs) {
        throw ParseError(source, 0, "frequencies are not evenly spaced");
    }
    return sweep;
}

}  // namespace shapr

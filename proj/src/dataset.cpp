#include "shapr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr {

namespace {

bool valid_token(std::string_view s) {
    return std::none_of(s.begin(), s.end(), [](char c) {
        return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

std::string feature_column(SensorId sensor, std::size_t band) {
    return "f_" + std::to_string(sensor) + "_" + std::to_string(band);
}

template <typename Rng>
void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
    // Fisher-Yates with explicit draws so the order does not depend on the standard library
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

double quantize_feature(double value) {
    return io::round_sig(value, kFeatureDigits);
}

void Dataset::validate() const {
    if (sensor_ids.empty() || bands_per_sensor == 0) {
        throw ConfigError("dataset has no feature layout");
    }
    for (std::size_t i = 1; i < sensor_ids.size(); ++i) {
        if (sensor_ids[i] <= sensor_ids[i - 1]) throw ConfigError("dataset sensor ids must be ascending and unique");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : samples) {
        if (s.sample_id.empty() || !valid_token(s.sample_id)) {
            throw ConfigError("invalid sample id '" + s.sample_id + "'");
        }
        if (!seen.insert(s.sample_id).second) throw ConfigError("duplicate sample id '" + s.sample_id + "'");
        if (!valid_token(s.label)) throw ConfigError("label of '" + s.sample_id + "' contains a separator");
        if (s.task == Task::coord_localization) {
            if (!s.coords || !std::isfinite(s.coords->x) || !std::isfinite(s.coords->y)) {
                throw ConfigError("coordinate sample '" + s.sample_id + "' lacks finite x,y");
            }
        } else if (s.label.empty()) {
            throw ConfigError("category sample '" + s.sample_id + "' has an empty label");
        }
        if (s.features.size() != feature_count() || s.features.sensor_count != sensor_ids.size() ||
            s.features.bands_per_sensor != bands_per_sensor) {
            throw ConfigError("sample '" + s.sample_id + "' has " + std::to_string(s.features.size()) +
                              " features, dataset layout needs " + std::to_string(feature_count()));
        }
    }
}

std::size_t Dataset::index_of(std::string_view sample_id) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].sample_id == sample_id) return i;
    }
    throw ConfigError("sample '" + std::string(sample_id) + "' is not in the dataset");
}

Dataset Dataset::restrict_sensors(std::size_t sensor_count) const {
    if (sensor_count == 0 || sensor_count > sensor_ids.size()) {
        throw ConfigError("cannot keep " + std::to_string(sensor_count) + " of " +
                          std::to_string(sensor_ids.size()) + " sensors");
    }
    Dataset out;
    out.sensor_ids.assign(sensor_ids.begin(), sensor_ids.begin() + static_cast<std::ptrdiff_t>(sensor_count));
    out.bands_per_sensor = bands_per_sensor;
    out.samples = samples;
    const std::size_t keep = sensor_count * bands_per_sensor;
    for (auto& s : out.samples) {
        s.features.values.resize(keep);
        s.features.sensor_count = sensor_count;
    }
    return out;
}

std::string dataset_to_csv(const Dataset& d) {
    d.validate();
    std::string out = "sample_id,task,label,x,y";
    for (SensorId s : d.sensor_ids) {
        for (std::size_t b = 0; b < d.bands_per_sensor; ++b) out += "," + feature_column(s, b);
    }
    out += "\n";
    for (const auto& s : d.samples) {
        out += s.sample_id;
        out += ",";
        out += task_tag(s.task);
        out += "," + s.label + ",";
        if (s.coords) out += io::format_exact(s.coords->x) + "," + io::format_exact(s.coords->y);
        else out += ",";
        for (double v : s.features.values) out += "," + io::format_sig(v, kFeatureDigits);
        out += "\n";
    }
    return out;
}

Dataset dataset_from_csv(std::string_view text, const std::string& source) {
    auto lines = io::split(text, '\n');
    while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(source, 1, "empty dataset file");

    const auto header = io::split(io::trim(lines[0]), ',');
    static const char* fixed[] = {"sample_id", "task", "label", "x", "y"};
    if (header.size() < 6) throw ParseError(source, 1, "header has no feature columns");
    for (std::size_t i = 0; i < 5; ++i) {
        if (header[i] != fixed[i]) {
            throw ParseError(source, 1, "expected column '" + std::string(fixed[i]) + "', found '" +
                                            std::string(header[i]) + "'");
        }
    }
    Dataset d;
    std::vector<std::pair<SensorId, std::size_t>> layout;
    for (std::size_t i = 5; i < header.size(); ++i) {
        const auto parts = io::split(header[i], '_');
        unsigned long long sensor = 0, band = 0;
        if (parts.size() != 3 || parts[0] != "f" || !io::parse_u64(parts[1], sensor) || !io::parse_u64(parts[2], band)) {
            throw ParseError(source, 1, "bad feature column '" + std::string(header[i]) + "'");
        }
        layout.emplace_back(static_cast<SensorId>(sensor), static_cast<std::size_t>(band));
        if (d.sensor_ids.empty() || d.sensor_ids.back() != sensor) d.sensor_ids.push_back(static_cast<SensorId>(sensor));
    }
    d.bands_per_sensor = layout.size() / d.sensor_ids.size();
    if (d.bands_per_sensor * d.sensor_ids.size() != layout.size()) {
        throw ParseError(source, 1, "feature columns do not form a sensor x band grid");
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto expect_sensor = d.sensor_ids[i / d.bands_per_sensor];
        if (layout[i].first != expect_sensor || layout[i].second != i % d.bands_per_sensor ||
            (i > 0 && i % d.bands_per_sensor == 0 && expect_sensor <= d.sensor_ids[i / d.bands_per_sensor - 1])) {
            throw ParseError(source, 1, "feature column '" + std::string(header[5 + i]) +
                                            "' is out of sensor-major order (missing a feature column?)");
        }
    }

    std::unordered_set<std::string> ids;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const auto cols = io::split(io::trim(lines[li]), ',');
        if (cols.size() != header.size()) {
            throw ParseError(source, line_no, "expected " + std::to_string(header.size()) + " columns, found " +
                                                  std::to_string(cols.size()));
        }
        LabeledSample s;
        s.sample_id = std::string(cols[0]);
        if (s.sample_id.empty()) throw ParseError(source, line_no, "empty sample_id");
        if (!ids.insert(s.sample_id).second) throw ParseError(source, line_no, "duplicate sample_id '" + s.sample_id + "'");
        try {
            s.task = parse_task(cols[1]);
        } catch (const ConfigError& e) {
            throw ParseError(source, line_no, e.what());
        }
        s.label = std::string(cols[2]);
        if (!cols[3].empty() || !cols[4].empty()) {
            Point2 p;
            if (!io::parse_double(cols[3], p.x) || !io::parse_double(cols[4], p.y)) {
                throw ParseError(source, line_no, "non-numeric coordinates");
            }
            s.coords = p;
        }
        if (s.task == Task::coord_localization && !s.coords) {
            throw ParseError(source, line_no, "coordinate sample without x,y");
        }
        if (s.task != Task::coord_localization && s.label.empty()) {
            throw ParseError(source, line_no, "category sample without label");
        }
        s.features.sensor_count = d.sensor_ids.size();
        s.features.bands_per_sensor = d.bands_per_sensor;
        s.features.values.resize(layout.size());
        for (std::size_t j = 0; j < layout.size(); ++j) {
            if (!io::parse_double(cols[5 + j], s.features.values[j])) {
                throw ParseError(source, line_no, "non-numeric value in column '" + std::string(header[5 + j]) + "'");
            }
        }
        d.samples.push_back(std::move(s));
    }
    try {
        d.validate();
    } catch (const ConfigError& e) {
        throw ParseError(source, 0, e.what());
    }
    return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
    io::write_file_atomic(path, dataset_to_csv(d));
}

Dataset load_dataset(const std::filesystem::path& path) {
    return dataset_from_csv(io::read_file(path), path.string());
}

void SplitManifest::validate(const Dataset& d) const {
    if (train_ids.empty() || test_ids.empty()) throw ConfigError("split has an empty train or test side");
    std::unordered_set<std::string> all;
    for (const auto& s : d.samples) all.insert(s.sample_id);
    std::unordered_set<std::string> seen;
    for (const auto* side : {&train_ids, &test_ids}) {
        for (const auto& id : *side) {
            if (!all.count(id)) throw ConfigError("split references unknown sample '" + id + "'");
            if (!seen.insert(id).second) throw ConfigError("sample '" + id + "' appears twice in the split");
        }
    }
    if (seen.size() != all.size()) {
        throw ConfigError("split covers " + std::to_string(seen.size()) + " of " + std::to_string(all.size()) +
                          " samples");
    }
}

SplitManifest stratified_split(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie strictly between 0 and 1");
    }
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < d.samples.size(); ++i) by_label[d.samples[i].label].push_back(i);
    std::vector<bool> is_train(d.samples.size(), false);
    std::size_t stream = 0;
    for (auto& [label, idx] : by_label) {
        if (idx.size() < 2) {
            throw ConfigError("class '" + label + "' has " + std::to_string(idx.size()) +
                              " sample(s); stratified split needs at least 2");
        }
        std::mt19937_64 rng(derive_seed(seed, stream++));
        shuffle_indices(idx, rng);
        const auto n = idx.size();
        std::size_t n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        for (std::size_t k = 0; k < n_train; ++k) is_train[idx[k]] = true;
    }
    SplitManifest m;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        (is_train[i] ? m.train_ids : m.test_ids).push_back(d.samples[i].sample_id);
    }
    m.validate(d);
    return m;
}

SplitManifest location_holdout_split(const Dataset& d, std::size_t holdout_locations, std::uint64_t seed) {
    std::vector<Point2> locations;
    for (const auto& s : d.samples) {
        if (!s.coords) throw ConfigError("location holdout needs coordinates on every sample ('" + s.sample_id + "')");
        if (std::find(locations.begin(), locations.end(), *s.coords) == locations.end()) locations.push_back(*s.coords);
    }
    if (holdout_locations == 0) throw ConfigError("holdout of 0 locations leaves the test set empty");
    if (locations.size() <= holdout_locations) {
        throw ConfigError("dataset has " + std::to_string(locations.size()) + " distinct locations, cannot hold out " +
                          std::to_string(holdout_locations));
    }
    std::sort(locations.begin(), locations.end(),
              [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<std::size_t> order(locations.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, 0));
    shuffle_indices(order, rng);
    std::vector<Point2> held;
    for (std::size_t k = 0; k < holdout_locations; ++k) held.push_back(locations[order[k]]);

    SplitManifest m;
    for (const auto& s : d.samples) {
        const bool test = std::find(held.begin(), held.end(), *s.coords) != held.end();
        (test ? m.test_ids : m.train_ids).push_back(s.sample_id);
    }
    m.validate(d);
    return m;
}

std::string manifest_to_text(const SplitManifest& m) {
    std::string out;
    for (const auto& id : m.train_ids) out += "train " + id + "\n";
    for (const auto& id : m.test_ids) out += "test " + id + "\n";
    return out;
}

SplitManifest manifest_from_text(std::string_view text, const std::string& source) {
    SplitManifest m;
    const auto lines = io::split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = io::trim(lines[i]);
        if (line.empty()) continue;
        const auto sp = line.find(' ');
        if (sp == std::string_view::npos) throw ParseError(source, i + 1, "expected 'train <id>' or 'test <id>'");
        const auto kind = line.substr(0, sp);
        const auto id = io::trim(line.substr(sp + 1));
        if (id.empty() || !valid_token(id)) throw ParseError(source, i + 1, "bad sample id");
        if (kind == "train") m.train_ids.emplace_back(id);
        else if (kind == "test") m.test_ids.emplace_back(id);
        else throw ParseError(source, i + 1, "expected 'train' or 'test', found '" + std::string(kind) + "'");
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const SplitManifest& m) {
    io::write_file_atomic(path, manifest_to_text(m));
}

SplitManifest load_manifest(const std::filesystem::path& path) {
    return manifest_from_text(io::read_file(path), path.string());
}

}  // namespace shapr

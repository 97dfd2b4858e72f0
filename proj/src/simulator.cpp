#include "shapr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr {

namespace {

constexpr double kPathLossExponent = 2.0;
constexpr double kNearFieldClampM = 0.1;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinSeparationDb = 0.5;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng, double sigma) {
    return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
}

Point2 clamp_to_room(const Scene& scene, Point2 p) {
    p.x = std::clamp(p.x, 0.0, scene.width_m);
    p.y = std::clamp(p.y, 0.0, scene.height_m);
    return p;
}

std::string padded(std::size_t value, int width) {
    std::string s = std::to_string(value);
    return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0, '0') + s;
}

}  // namespace

bool Scene::contains(const Point2& p) const {
    return p.x >= 0.0 && p.x <= width_m && p.y >= 0.0 && p.y <= height_m;
}

void Scene::validate() const {
    if (!(width_m > 0.0) || !(height_m > 0.0)) {
        throw ConfigError("room dimensions must be positive");
    }
    const std::size_t bands = band_plan.band_count();
    if (transmitters.empty()) throw ConfigError("scene needs at least one transmitter");
    if (sensors.empty()) throw ConfigError("scene needs at least one sensor");
    if (!(noise_sigma_db >= 0.0) || !std::isfinite(noise_sigma_db)) {
        throw ConfigError("noise sigma must be finite and >= 0");
    }
    for (std::size_t i = 0; i < transmitters.size(); ++i) {
        const auto& t = transmitters[i];
        if (!contains(t.position)) throw ConfigError("transmitter " + std::to_string(i + 1) + " is outside the room");
        if (t.baseline_spectrum_db.size() != bands) {
            throw ConfigError("transmitter " + std::to_string(i + 1) + " spectrum length does not match band plan");
        }
        for (double v : t.baseline_spectrum_db) {
            if (!std::isfinite(v)) throw ConfigError("transmitter spectrum must be finite");
        }
    }
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (!contains(sensors[i].position)) {
            throw ConfigError("sensor " + std::to_string(sensors[i].sensor_id) + " is outside the room");
        }
        if (i > 0 && sensors[i].sensor_id <= sensors[i - 1].sensor_id) {
            throw ConfigError("sensor ids must be unique and ascending");
        }
    }
}

double path_gain_db(double distance_m) {
    if (!(distance_m > 0.0)) {
        throw ConfigError("path distance must be positive");
    }
    return -10.0 * kPathLossExponent * std::log10(std::max(distance_m, kNearFieldClampM));
}

double shadowing_factor(const Point2& body, double body_radius_m, double absorption, const Point2& tx,
                        const Point2& rx) {
    if (!(body_radius_m > 0.0)) throw ConfigError("body radius must be positive");
    if (!(absorption >= 0.0 && absorption <= 1.0)) throw ConfigError("absorption must lie in [0, 1]");
    const double p = distance_to_segment(body, tx, rx) / body_radius_m;
    return 1.0 - absorption * std::exp(-p * p);
}

std::vector<double> expected_band_power(const Scene& scene, std::size_t band_index,
                                        const std::optional<BodyState>& body) {
    if (band_index >= scene.band_plan.band_count()) {
        throw ConfigError("band index " + std::to_string(band_index) + " outside the band plan");
    }
    std::vector<double> out;
    out.reserve(scene.sensors.size());
    for (const auto& s : scene.sensors) {
        double linear = 0.0;
        for (const auto& t : scene.transmitters) {
            // co-located tx/rx fall under the near-field clamp
            const double d = std::max(distance(t.position, s.position), kNearFieldClampM);
            double g = std::pow(10.0, (t.baseline_spectrum_db[band_index] + path_gain_db(d)) / 10.0);
            if (body) {
                g *= shadowing_factor(body->position, body->radius_m, body->absorption, t.position, s.position);
            }
            linear += g;
        }
        if (!(linear > 0.0)) {
            throw NumericError("zero simulated power at sensor " + std::to_string(s.sensor_id));
        }
        out.push_back(10.0 * std::log10(linear));
    }
    return out;
}

std::vector<double> simulate_band_power(const Scene& scene, std::size_t band_index,
                                        const std::optional<BodyState>& body, std::mt19937_64& rng) {
    auto out = expected_band_power(scene, band_index, body);
    for (double& v : out) v += normal(rng, scene.noise_sigma_db);
    return out;
}

std::vector<double> make_baseline_spectrum(std::size_t bands, std::mt19937_64& rng) {
    const double level = uniform(rng, -30.0, -22.0);
    std::vector<double> s(bands, level);
    for (int k = 0; k < 3; ++k) {
        const double amp = uniform(rng, 1.0, 2.0);
        const double cycles = uniform(rng, 0.5, 6.0);
        const double phase = uniform(rng, 0.0, kTwoPi);
        for (std::size_t b = 0; b < bands; ++b) {
            const double u = bands > 1 ? static_cast<double>(b) / static_cast<double>(bands - 1) : 0.0;
            s[b] += amp * std::sin(kTwoPi * cycles * u + phase);
        }
    }
    return s;
}

Scene build_scene(double width_m, double height_m, const BandPlan& plan, std::vector<SensorSpec> sensors,
                  const std::vector<Point2>& transmitter_positions, double noise_sigma_db, std::uint64_t seed) {
    Scene scene;
    scene.width_m = width_m;
    scene.height_m = height_m;
    scene.band_plan = plan;
    std::sort(sensors.begin(), sensors.end(),
              [](const SensorSpec& a, const SensorSpec& b) { return a.sensor_id < b.sensor_id; });
    scene.sensors = std::move(sensors);
    scene.noise_sigma_db = noise_sigma_db;
    scene.seed = seed;
    const std::size_t bands = plan.band_count();
    for (std::size_t i = 0; i < transmitter_positions.size(); ++i) {
        std::mt19937_64 rng(derive_seed(seed, 1000 + i));
        scene.transmitters.push_back({transmitter_positions[i], make_baseline_spectrum(bands, rng)});
    }
    scene.validate();
    return scene;
}

std::vector<SubjectProfile> make_subject_profiles(std::size_t count, std::size_t bands, const TaskLayout& layout,
                                                  std::uint64_t seed) {
    if (!(layout.radius_min_m > 0.0) || layout.radius_max_m < layout.radius_min_m) {
        throw ConfigError("subject radius range must satisfy 0 < min <= max");
    }
    std::vector<SubjectProfile> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::mt19937_64 rng(derive_seed(seed, 2000 + k));
        SubjectProfile p;
        p.subject_id = "subject" + padded(k + 1, 2);
        p.body_radius_m = layout.radius_min_m == layout.radius_max_m
                              ? layout.radius_min_m
                              : uniform(rng, layout.radius_min_m, layout.radius_max_m);
        const double base = uniform(rng, 0.4, 0.6);
        const double amp = uniform(rng, 0.3, 0.4);
        const double cycles = uniform(rng, 1.5, 3.0);
        const double phase = kTwoPi * (static_cast<double>(k) + uniform(rng, 0.0, 0.5)) / static_cast<double>(count);
        p.absorption.resize(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            const double u = bands > 1 ? static_cast<double>(b) / static_cast<double>(bands - 1) : 0.0;
            p.absorption[b] = std::clamp(base + amp * std::sin(kTwoPi * cycles * u + phase), 0.02, 0.98);
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ActivityTemplate> default_activities(double w, double h) {
    return {
        {"smartphone", Motion::fidget, {0.25 * w, 0.3 * h}, {0.05, 0.05}, 0.75, 6.0},
        {"sitting", Motion::still, {0.75 * w, 0.3 * h}, {0.0, 0.0}, 0.7, 20.0},
        {"watching-tv", Motion::still, {0.5 * w, 0.8 * h}, {0.0, 0.0}, 0.65, 20.0},
        {"walking", Motion::walk, {0.15 * w, 0.55 * h}, {0.7 * w, 0.0}, 1.0, 20.0},
        {"standing", Motion::still, {0.5 * w, 0.45 * h}, {0.0, 0.0}, 1.0, 20.0},
        {"exercise", Motion::exercise, {0.3 * w, 0.7 * h}, {0.35, 0.0}, 0.9, 10.0},
        {"board-writing", Motion::board_writing, {0.5 * w, 0.1 * h}, {0.6, 0.0}, 1.0, 40.0},
        {"falling", Motion::fall, {0.75 * w, 0.65 * h}, {0.5, -0.3}, 1.0, 20.0},
    };
}

ActivityScript instantiate_activity(const ActivityTemplate& tmpl, std::size_t bands, const Scene& scene,
                                    std::mt19937_64& rng) {
    ActivityScript s;
    s.activity_id = tmpl.activity_id;
    s.trajectory.resize(bands);
    s.posture_scale.resize(bands);
    const double phase = uniform(rng, 0.0, kTwoPi);
    const Point2 offset{normal(rng, 0.05), normal(rng, 0.05)};
    const double fall_at = uniform(rng, 0.3, 0.7) * static_cast<double>(bands);
    const bool reverse = uniform(rng, 0.0, 1.0) < 0.5;
    const double period = std::max(tmpl.period_bands, 1.0);
    for (std::size_t b = 0; b < bands; ++b) {
        const double t = static_cast<double>(b);
        const double u = bands > 1 ? t / static_cast<double>(bands - 1) : 0.0;
        Point2 p = tmpl.anchor;
        double posture = tmpl.posture;
        switch (tmpl.motion) {
            case Motion::still:
                break;
            case Motion::fidget:
                p.x += tmpl.extent.x * std::sin(kTwoPi * t / period + phase);
                p.y += tmpl.extent.y * std::cos(kTwoPi * t / period + phase);
                break;
            case Motion::walk: {
                const double f = reverse ? 1.0 - u : u;
                p.x += f * tmpl.extent.x;
                p.y += f * tmpl.extent.y;
                break;
            }
            case Motion::exercise: {
                const double c = std::sin(kTwoPi * t / period + phase);
                p.x += tmpl.extent.x * c;
                p.y += tmpl.extent.y * c;
                posture *= 1.0 + 0.25 * std::cos(kTwoPi * t / period + phase);
                break;
            }
            case Motion::board_writing:
                p.x += tmpl.extent.x * std::sin(kTwoPi * t / period + phase);
                p.y += tmpl.extent.y * std::sin(kTwoPi * t / period + phase);
                break;
            case Motion::fall:
                if (t >= fall_at) {
                    p.x += tmpl.extent.x;
                    p.y += tmpl.extent.y;
                    posture *= 0.45;
                }
                break;
        }
        s.trajectory[b] = clamp_to_room(scene, Point2{p.x + offset.x, p.y + offset.y});
        s.posture_scale[b] = posture;
    }
    return s;
}

SceneSetup preset_setup(Task task, std::uint64_t seed, double noise_sigma_db, const BandPlan& plan) {
    SceneSetup setup;
    std::vector<SensorSpec> sensors;
    std::vector<Point2> tx;
    double w = 0.0, h = 0.0;
    switch (task) {
        case Task::authentication: {
            // living room: sensors on the floor around the subject
            w = 6.0;
            h = 5.0;
            setup.layout.anchor = {3.0, 2.5};
            for (int k = 0; k < 5; ++k) {
                const double a = kTwoPi * k / 5.0 + 0.3;
                sensors.push_back({static_cast<SensorId>(k + 1), {3.0 + 0.5 * std::cos(a), 2.5 + 0.5 * std::sin(a)}});
            }
            for (int k = 0; k < 8; ++k) {
                const double a = kTwoPi * k / 8.0 + 0.1;
                tx.push_back({3.0 + 2.9 * std::cos(a), 2.5 + 2.4 * std::sin(a)});
            }
            setup.layout.radius_min_m = 1.0;
            setup.layout.radius_max_m = 1.4;
            break;
        }
        case Task::grid_localization: {
            // vehicle cabin: four seats
            w = 1.8;
            h = 4.5;
            sensors = {{1, {0.2, 0.2}}, {2, {1.6, 0.2}}, {3, {1.6, 4.3}}, {4, {0.2, 4.3}}, {5, {0.9, 2.25}}};
            tx = {{0.05, 0.8}, {1.75, 1.2}, {0.05, 3.6}, {1.75, 3.0}, {0.9, 0.05}, {0.9, 4.45}};
            setup.layout.positions = {{0.45, 1.5}, {1.35, 1.5}, {0.45, 3.2}, {1.35, 3.2}};
            setup.layout.radius_min_m = 1.0;
            setup.layout.radius_max_m = 1.2;
            break;
        }
        case Task::coord_localization: {
            // classroom: 5 x 4 grid, 1.8 m spacing
            w = 10.0;
            h = 8.0;
            sensors = {{1, {0.5, 0.5}}, {2, {9.5, 0.5}}, {3, {9.5, 7.5}}, {4, {0.5, 7.5}}, {5, {5.0, 4.0}}};
            std::mt19937_64 rng(derive_seed(seed, 17));
            for (int k = 0; k < 12; ++k) {
                const double x = uniform(rng, 0.0, w);
                tx.push_back({x, uniform(rng, 0.0, h)});
            }
            setup.layout.grid_spacing_m = 1.8;
            setup.layout.grid_columns = 5;
            // the shadow must reach neighbouring grid points for the spectrum field to be smooth
            setup.layout.radius_min_m = 4.0;
            setup.layout.radius_max_m = 4.0;
            break;
        }
        case Task::activity: {
            // laboratory: receivers sit next to the furniture where activities happen
            w = 7.0;
            h = 6.0;
            sensors = {{1, {1.75, 2.4}}, {2, {5.25, 2.4}}, {3, {3.5, 4.2}}, {4, {3.5, 1.3}}, {5, {2.5, 3.7}}};
            for (int k = 0; k < 8; ++k) {
                const double a = kTwoPi * k / 8.0 + 0.2;
                tx.push_back({3.5 + 3.3 * std::cos(a), 3.0 + 2.8 * std::sin(a)});
            }
            setup.layout.activities = default_activities(w, h);
            setup.layout.radius_min_m = 1.0;
            setup.layout.radius_max_m = 1.2;
            break;
        }
    }
    setup.scene = build_scene(w, h, plan, std::move(sensors), tx, noise_sigma_db, seed);
    return setup;
}

std::vector<Point2> grid_positions(const Scene& scene, const TaskLayout& layout, std::size_t count) {
    if (count == 0 || layout.grid_columns == 0 || !(layout.grid_spacing_m > 0.0)) {
        throw ConfigError("grid needs positive location count, columns and spacing");
    }
    const std::size_t cols = std::min(layout.grid_columns, count);
    const std::size_t rows = (count + cols - 1) / cols;
    const double span_x = static_cast<double>(cols - 1) * layout.grid_spacing_m;
    const double span_y = static_cast<double>(rows - 1) * layout.grid_spacing_m;
    const Point2 origin = layout.grid_origin.value_or(
        Point2{(scene.width_m - span_x) / 2.0, (scene.height_m - span_y) / 2.0});
    if (origin.x < 0.0 || origin.y < 0.0 || origin.x + span_x > scene.width_m ||
        origin.y + span_y > scene.height_m) {
        throw ConfigError("a " + std::to_string(cols) + " x " + std::to_string(rows) + " grid with " +
                          io::format_sig(layout.grid_spacing_m, 6) + " m spacing does not fit in the room");
    }
    std::vector<Point2> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = origin.x + static_cast<double>(i % cols) * layout.grid_spacing_m;
        const double y = origin.y + static_cast<double>(i / cols) * layout.grid_spacing_m;
        // round so coordinates print exactly as the spacing suggests
        out.push_back({io::round_sig(x, 12), io::round_sig(y, 12)});
    }
    return out;
}

std::vector<SpectrumSweep> simulate_sweeps(const Scene& scene, const std::vector<std::optional<BodyState>>& body,
                                           std::mt19937_64& rng) {
    const std::size_t bands = scene.band_plan.band_count();
    if (body.size() != bands) {
        throw ConfigError("body trajectory must have one entry per band");
    }
    std::vector<SpectrumSweep> sweeps;
    for (const auto& s : scene.sensors) {
        sweeps.push_back({s.sensor_id, scene.band_plan, std::vector<double>(bands)});
    }
    for (std::size_t b = 0; b < bands; ++b) {
        const auto p = simulate_band_power(scene, b, body[b], rng);
        for (std::size_t s = 0; s < p.size(); ++s) sweeps[s].powers_db[b] = p[s];
    }
    return sweeps;
}

namespace {

std::vector<std::optional<BodyState>> static_body(const SubjectProfile& subject, const Point2& pos,
                                                  std::size_t bands) {
    std::vector<std::optional<BodyState>> out(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        out[b] = BodyState{pos, subject.body_radius_m, subject.absorption[b]};
    }
    return out;
}

FeatureVector to_features(const std::vector<SpectrumSweep>& sweeps) {
    FeatureVector fv = stack_features(sweeps);
    for (double& v : fv.values) v = quantize_feature(v);
    return fv;
}

void check_subject_separation(const Scene& scene, const std::vector<SubjectProfile>& subjects, const Point2& pos) {
    const std::size_t bands = scene.band_plan.band_count();
    std::vector<std::vector<double>> expected;
    for (const auto& s : subjects) {
        std::vector<double> fv;
        for (std::size_t b = 0; b < bands; ++b) {
            const auto p = expected_band_power(scene, b, BodyState{pos, s.body_radius_m, s.absorption[b]});
            fv.insert(fv.end(), p.begin(), p.end());
        }
        expected.push_back(std::move(fv));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        for (std::size_t j = i + 1; j < expected.size(); ++j) {
            double max_diff = 0.0;
            for (std::size_t k = 0; k < expected[i].size(); ++k) {
                max_diff = std::max(max_diff, std::abs(expected[i][k] - expected[j][k]));
            }
            if (max_diff <= kMinSeparationDb) {
                throw ConfigError(subjects[i].subject_id + " and " + subjects[j].subject_id +
                                  " produce spectra within " + io::format_sig(kMinSeparationDb, 3) +
                                  " dB of each other; move the subject closer to the sensors");
            }
        }
    }
}

}  // namespace

Dataset generate_dataset(const SceneSetup& setup, Task task, std::size_t categories,
                         std::size_t samples_per_category, std::uint64_t seed) {
    const Scene& scene = setup.scene;
    const TaskLayout& layout = setup.layout;
    scene.validate();
    if (categories == 0 || samples_per_category == 0) {
        throw ConfigError("categories and samples per category must be positive");
    }
    const std::size_t bands = scene.band_plan.band_count();

    Dataset d;
    for (const auto& s : scene.sensors) d.sensor_ids.push_back(s.sensor_id);
    d.bands_per_sensor = bands;

    std::vector<SubjectProfile> subjects;
    std::vector<Point2> positions;
    std::vector<std::string> labels;
    switch (task) {
        case Task::authentication:
            if (!scene.contains(layout.anchor)) throw ConfigError("subject anchor is outside the room");
            subjects = make_subject_profiles(categories, bands, layout, scene.seed);
            check_subject_separation(scene, subjects, layout.anchor);
            for (const auto& s : subjects) labels.push_back(s.subject_id);
            break;
        case Task::grid_localization:
            if (categories > layout.positions.size()) {
                throw ConfigError("layout defines " + std::to_string(layout.positions.size()) +
                                  " positions, " + std::to_string(categories) + " requested");
            }
            subjects = make_subject_profiles(1, bands, layout, scene.seed);
            positions.assign(layout.positions.begin(), layout.positions.begin() + categories);
            for (std::size_t i = 0; i < categories; ++i) {
                if (!scene.contains(positions[i])) throw ConfigError("grid position " + std::to_string(i + 1) + " is outside the room");
                labels.push_back("pos" + padded(i + 1, 2));
            }
            break;
        case Task::coord_localization:
            subjects = make_subject_profiles(1, bands, layout, scene.seed);
            positions = grid_positions(scene, layout, categories);
            for (std::size_t i = 0; i < categories; ++i) labels.push_back("loc" + padded(i + 1, 2));
            break;
        case Task::activity:
            if (categories > layout.activities.size()) {
                throw ConfigError("layout defines " + std::to_string(layout.activities.size()) +
                                  " activities, " + std::to_string(categories) + " requested");
            }
            subjects = make_subject_profiles(1, bands, layout, scene.seed);
            for (std::size_t i = 0; i < categories; ++i) {
                if (!scene.contains(layout.activities[i].anchor)) {
                    throw ConfigError("activity '" + layout.activities[i].activity_id + "' anchor is outside the room");
                }
                labels.push_back(layout.activities[i].activity_id);
            }
            break;
    }

    const int digits = static_cast<int>(std::to_string(samples_per_category).size());
    std::size_t index = 0;
    for (std::size_t c = 0; c < categories; ++c) {
        for (std::size_t k = 0; k < samples_per_category; ++k, ++index) {
            std::mt19937_64 rng(derive_seed(seed, index));
            LabeledSample sample;
            sample.sample_id = labels[c] + "-" + padded(k + 1, std::max(digits, 3));
            sample.task = task;
            sample.label = labels[c];
            const double jitter = layout.position_jitter_m;
            std::vector<std::optional<BodyState>> body;
            switch (task) {
                case Task::authentication: {
                    const Point2 p{layout.anchor.x + normal(rng, jitter), layout.anchor.y + normal(rng, jitter)};
                    body = static_body(subjects[c], clamp_to_room(scene, p), bands);
                    break;
                }
                case Task::grid_localization:
                case Task::coord_localization: {
                    const Point2 p{positions[c].x + normal(rng, jitter), positions[c].y + normal(rng, jitter)};
                    body = static_body(subjects[0], clamp_to_room(scene, p), bands);
                    if (task == Task::coord_localization) sample.coords = positions[c];
                    break;
                }
                case Task::activity: {
                    const auto script = instantiate_activity(layout.activities[c], bands, scene, rng);
                    body.resize(bands);
                    for (std::size_t b = 0; b < bands; ++b) {
                        body[b] = BodyState{script.trajectory[b], subjects[0].body_radius_m * script.posture_scale[b],
                                            subjects[0].absorption[b]};
                    }
                    break;
                }
            }
            sample.features = to_features(simulate_sweeps(scene, body, rng));
            d.samples.push_back(std::move(sample));
        }
    }
    d.validate();
    return d;
}

IqFrame synth_iq_frame(double target_db, std::size_t n_bytes, std::uint64_t seed) {
    if (!(target_db >= kSynthMinDb && target_db <= kSynthMaxDb)) {
        throw ConfigError("synthesis target " + io::format_sig(target_db, 6) + " dB outside [" +
                          io::format_sig(kSynthMinDb, 3) + ", " + io::format_sig(kSynthMaxDb, 3) + "] dB");
    }
    if (n_bytes < 512 || n_bytes % 2 != 0) {
        throw ConfigError("synthesized frames need an even byte count >= 512");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> z(n_bytes);
    for (double& v : z) v = unit(rng);

    const double target_linear = std::pow(10.0, target_db / 10.0);
    IqFrame frame;
    frame.bytes.resize(n_bytes);
    const auto quantize = [&](double scale) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_bytes; ++i) {
            const double b = std::clamp(std::round(127.5 + 127.5 * scale * z[i]), 0.0, 255.0);
            frame.bytes[i] = static_cast<std::uint8_t>(b);
            const double v = b / 127.5 - 1.0;
            sum += v * v;
        }
        return sum / (static_cast<double>(n_bytes) / 2.0);
    };
    // quantized power is non-decreasing in scale; bisect for the target
    const double nominal = std::sqrt(target_linear / 2.0);
    double lo = 0.5 * nominal;
    double hi = 2.0 * nominal;
    while (lo > 0.0 && quantize(lo) > target_linear) lo *= 0.5;
    while (quantize(hi) < target_linear && hi < 1e3) hi *= 2.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (quantize(mid) < target_linear) lo = mid;
        else hi = mid;
    }
    const double p_lo = quantize(lo);
    const double p_hi = quantize(hi);
    quantize(std::abs(p_lo - target_linear) <= std::abs(p_hi - target_linear) ? lo : hi);
    return frame;
}

std::vector<IqFrame> synth_sweep_frames(const SpectrumSweep& sweep, std::size_t n_bytes, std::uint64_t seed,
                                        std::uint64_t sample_rate_hz) {
    const auto centers = band_centers(sweep.band_plan);
    if (centers.size() != sweep.powers_db.size()) throw ConfigError("sweep length does not match band plan");
    std::vector<IqFrame> frames;
    frames.reserve(centers.size());
    for (std::size_t b = 0; b < centers.size(); ++b) {
        IqFrame f = synth_iq_frame(sweep.powers_db[b], n_bytes, derive_seed(seed, b));
        f.sensor_id = sweep.sensor_id;
        f.center_freq_hz = static_cast<std::uint64_t>(centers[b]);
        f.sample_rate_hz = sample_rate_hz;
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace shapr

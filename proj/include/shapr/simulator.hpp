#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "shapr/dataset.hpp"
#include "shapr/spectrum.hpp"
#include "shapr/types.hpp"

namespace shapr {

struct TransmitterSpec {
    Point2 position;
    std::vector<double> baseline_spectrum_db;  // one level per band center, referenced to 1 m
};

struct SensorSpec {
    SensorId sensor_id = 0;
    Point2 position;
};

struct Scene {
    double width_m = 0.0;
    double height_m = 0.0;
    BandPlan band_plan;
    std::vector<TransmitterSpec> transmitters;
    std::vector<SensorSpec> sensors;  // ascending sensor id
    double noise_sigma_db = 0.0;
    std::uint64_t seed = 0;

    bool contains(const Point2& p) const;
    void validate() const;
};

struct SubjectProfile {
    std::string subject_id;
    /// Lateral extent of the body's RF shadow (the r in exp(-(p/r)^2)).
    double body_radius_m = 0.5;
    /// Attenuation fraction per band, each in [0, 1].
    std::vector<double> absorption;
};

/// Where the body is and how it shadows during a single band.
struct BodyState {
    Point2 position;
    double radius_m = 0.5;
    double absorption = 0.0;
};

enum class Motion { still, fidget, walk, exercise, board_writing, fall };

/// Class-level description of an activity; each recorded sample instantiates it
/// with its own start phase and offset.
struct ActivityTemplate {
    std::string activity_id;
    Motion motion = Motion::still;
    Point2 anchor;
    Point2 extent;          // walk: end point offset; oscillations: amplitude vector
    double posture = 1.0;   // multiplier on body radius
    double period_bands = 20.0;
};

/// Sweep-sequential behaviour of one sample: band index doubles as time.
struct ActivityScript {
    std::string activity_id;
    std::vector<Point2> trajectory;     // per band
    std::vector<double> posture_scale;  // per band, > 0
};

/// Placement of subjects for each task.
struct TaskLayout {
    Point2 anchor;                         // authentication: fixed subject position
    std::vector<Point2> positions;         // grid localization: indexed positions
    double grid_spacing_m = 1.8;           // coordinate localization
    std::size_t grid_columns = 5;
    std::optional<Point2> grid_origin;     // centred in the room when empty
    double radius_min_m = 0.6;
    double radius_max_m = 1.0;
    double position_jitter_m = 0.05;
    std::vector<ActivityTemplate> activities;
};

struct SceneSetup {
    Scene scene;
    TaskLayout layout;
};

/// Log-distance gain, exponent 2, 1 m reference, 0.1 m near-field clamp.
double path_gain_db(double distance_m);

/// 1 - a * exp(-(p/r)^2), p the distance from the body to the tx->rx segment.
double shadowing_factor(const Point2& body, double body_radius_m, double absorption,
                        const Point2& tx, const Point2& rx);

/// Noise-free received power per sensor (dB) at one band.
std::vector<double> expected_band_power(const Scene& scene, std::size_t band_index,
                                        const std::optional<BodyState>& body);

/// expected_band_power plus N(0, noise_sigma_db) per sensor drawn from `rng`.
std::vector<double> simulate_band_power(const Scene& scene, std::size_t band_index,
                                        const std::optional<BodyState>& body, std::mt19937_64& rng);

/// Smooth emission curve over the plan's bands.
std::vector<double> make_baseline_spectrum(std::size_t bands, std::mt19937_64& rng);

/// Scene with transmitter spectra drawn deterministically from `seed`.
Scene build_scene(double width_m, double height_m, const BandPlan& plan, std::vector<SensorSpec> sensors,
                  const std::vector<Point2>& transmitter_positions, double noise_sigma_db, std::uint64_t seed);

/// Subject k of `count` gets an absorption curve phase-staggered by k/count of a cycle.
std::vector<SubjectProfile> make_subject_profiles(std::size_t count, std::size_t bands, const TaskLayout& layout,
                                                  std::uint64_t seed);

ActivityScript instantiate_activity(const ActivityTemplate& tmpl, std::size_t bands, const Scene& scene,
                                    std::mt19937_64& rng);

/// Default eight activities for a room (smartphone, sitting, watching-tv, walking,
/// standing, exercise, board-writing, falling).
std::vector<ActivityTemplate> default_activities(double width_m, double height_m);

/// Built-in room for each task: living room, vehicle cabin, classroom, laboratory.
SceneSetup preset_setup(Task task, std::uint64_t seed, double noise_sigma_db = 1.0, const BandPlan& plan = {});

/// Coordinate-task grid positions, row-major. Throws ConfigError if the grid does not fit.
std::vector<Point2> grid_positions(const Scene& scene, const TaskLayout& layout, std::size_t count);

/// Labeled dataset for `task`. Deterministic in (setup, seed).
Dataset generate_dataset(const SceneSetup& setup, Task task, std::size_t categories,
                         std::size_t samples_per_category, std::uint64_t seed);

/// Per-sensor sweeps for one body trajectory (nullopt entries mean an empty room).
std::vector<SpectrumSweep> simulate_sweeps(const Scene& scene, const std::vector<std::optional<BodyState>>& body,
                                           std::mt19937_64& rng);

/// Lowest/highest target accepted by synth_iq_frame.
inline constexpr double kSynthMinDb = -40.0;
inline constexpr double kSynthMaxDb = 0.0;

/// Frame whose average power reproduces `target_db`: Gaussian I/Q with per-component
/// variance 10^(target/10)/2, with the scale calibrated after byte quantization.
IqFrame synth_iq_frame(double target_db, std::size_t n_bytes, std::uint64_t seed);

/// One synthesized frame per band, tagged with the sweep's sensor and center frequencies.
std::vector<IqFrame> synth_sweep_frames(const SpectrumSweep& sweep, std::size_t n_bytes, std::uint64_t seed,
                                        std::uint64_t sample_rate_hz = 2'400'000);

}  // namespace shapr

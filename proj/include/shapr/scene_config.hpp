#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "shapr/simulator.hpp"

namespace shapr {

/// Scene configuration: an INI-style file whose sections override the built-in preset
/// for the task. Full-line comments start with ';' or '#'.
///
///   [room]         width, height (m)
///   [sensors]      <sensor id> = x, y             (replaces all preset sensors)
///   [transmitters] <any key> = x, y               (replaces all preset transmitters)
///                  count = n                      (n random positions instead)
///   [subjects]     radius_min, radius_max, anchor = x, y, jitter,
///                  positions = x y; x y; ...      (grid-loc positions)
///                  grid_spacing, grid_columns, grid_origin = x, y
///   [activities]   <name> = motion, x, y, ex, ey, posture, period
///                  motion: still|fidget|walk|exercise|board_writing|fall
///   [noise]        sigma_db
///   [seed]         value                          (transmitter spectra and subject profiles)
///
/// Keys are validated; unknown sections or keys are errors.
SceneSetup parse_scene_config(std::string_view text, Task task, std::uint64_t default_seed,
                              double default_noise_db, const BandPlan& plan,
                              const std::string& source = "<memory>");

SceneSetup load_scene_config(const std::filesystem::path& path, Task task, std::uint64_t default_seed,
                             double default_noise_db, const BandPlan& plan);

}  // namespace shapr

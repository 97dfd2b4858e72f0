#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace shapr {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

/// Perpendicular distance from p to the segment a-b, clamped to the endpoints.
double distance_to_segment(const Point2& p, const Point2& a, const Point2& b);

enum class Task { authentication, grid_localization, coord_localization, activity };

/// Short tags used in files and on the command line: auth, grid-loc, coord-loc, activity.
std::string_view task_tag(Task task);
Task parse_task(std::string_view tag);

/// Derives an independent 64-bit stream seed from a base seed and a stream index (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace shapr

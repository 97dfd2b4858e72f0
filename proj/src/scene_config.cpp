#include "shapr/scene_config.hpp"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "shapr/error.hpp"
#include "shapr/text_io.hpp"

namespace shapr {

namespace {

namespace pt = boost::property_tree;

struct Reader {
    const std::string& source;

    [[noreturn]] void fail(const std::string& where, const std::string& what) const {
        throw ParseError(source, 0, "[" + where + "] " + what);
    }

    double number(const std::string& where, std::string_view text) const {
        double v = 0.0;
        if (!io::parse_double(text, v)) fail(where, "expected a number, found '" + std::string(text) + "'");
        return v;
    }

    std::vector<double> numbers(const std::string& where, std::string_view text, std::size_t n) const {
        const auto parts = io::split(text, ',');
        if (parts.size() != n) {
            fail(where, "expected " + std::to_string(n) + " comma-separated values, found '" + std::string(text) + "'");
        }
        std::vector<double> out;
        for (auto p : parts) out.push_back(number(where, p));
        return out;
    }

    Point2 point(const std::string& where, std::string_view text) const {
        const auto v = numbers(where, text, 2);
        return {v[0], v[1]};
    }

    std::uint64_t unsigned_value(const std::string& where, std::string_view text) const {
        unsigned long long v = 0;
        if (!io::parse_u64(text, v)) fail(where, "expected an unsigned integer, found '" + std::string(text) + "'");
        return v;
    }

    void only_keys(const std::string& section, const pt::ptree& tree, std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : tree) {
            bool ok = false;
            for (const char* allowed : keys) ok = ok || k == allowed;
            if (!ok) fail(section, "unknown key '" + k + "'");
        }
    }
};

Motion parse_motion(const Reader& r, const std::string& where, std::string_view text) {
    text = io::trim(text);
    if (text == "still") return Motion::still;
    if (text == "fidget") return Motion::fidget;
    if (text == "walk") return Motion::walk;
    if (text == "exercise") return Motion::exercise;
    if (text == "board_writing") return Motion::board_writing;
    if (text == "fall") return Motion::fall;
    r.fail(where, "unknown motion '" + std::string(text) + "'");
}

}  // namespace

SceneSetup parse_scene_config(std::string_view text, Task task, std::uint64_t default_seed, double default_noise_db,
                              const BandPlan& plan, const std::string& source) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(source, e.line(), e.message());
    }
    const Reader r{source};
    static const std::set<std::string> sections{"room", "sensors", "transmitters", "subjects", "activities", "noise", "seed"};
    for (const auto& [name, sub] : tree) {
        if (!sections.count(name)) r.fail(name, "unknown section");
        if (sub.empty() && !sub.data().empty()) r.fail(name, "key outside any section");
    }

    std::uint64_t seed = default_seed;
    if (auto s = tree.get_child_optional("seed")) {
        r.only_keys("seed", *s, {"value"});
        if (auto v = s->get_optional<std::string>("value")) seed = r.unsigned_value("seed", *v);
    }
    double noise = default_noise_db;
    if (auto s = tree.get_child_optional("noise")) {
        r.only_keys("noise", *s, {"sigma_db"});
        if (auto v = s->get_optional<std::string>("sigma_db")) noise = r.number("noise", *v);
    }

    SceneSetup setup = preset_setup(task, seed, noise, plan);
    const double preset_width = setup.scene.width_m;
    const double preset_height = setup.scene.height_m;
    double width = preset_width;
    double height = preset_height;
    std::vector<SensorSpec> sensors = setup.scene.sensors;
    std::vector<Point2> tx;
    for (const auto& t : setup.scene.transmitters) tx.push_back(t.position);

    if (auto s = tree.get_child_optional("room")) {
        r.only_keys("room", *s, {"width", "height"});
        if (auto v = s->get_optional<std::string>("width")) width = r.number("room", *v);
        if (auto v = s->get_optional<std::string>("height")) height = r.number("room", *v);
    }
    if (auto s = tree.get_child_optional("sensors")) {
        sensors.clear();
        for (const auto& [k, v] : *s) {
            const auto id = r.unsigned_value("sensors", k);
            if (id > 0xFFFFFFFFULL) r.fail("sensors", "sensor id out of range");
            sensors.push_back({static_cast<SensorId>(id), r.point("sensors", v.data())});
        }
    }
    if (auto s = tree.get_child_optional("transmitters")) {
        tx.clear();
        if (auto count = s->get_optional<std::string>("count")) {
            if (s->size() != 1) r.fail("transmitters", "use either 'count' or explicit positions, not both");
            const auto n = r.unsigned_value("transmitters", *count);
            std::mt19937_64 rng(derive_seed(seed, 17));
            for (std::uint64_t i = 0; i < n; ++i) {
                const double x = std::uniform_real_distribution<double>(0.0, width)(rng);
                tx.push_back({x, std::uniform_real_distribution<double>(0.0, height)(rng)});
            }
        } else {
            for (const auto& [k, v] : *s) tx.push_back(r.point("transmitters", v.data()));
        }
    }
    try {
        setup.scene = build_scene(width, height, plan, sensors, tx, noise, seed);
    } catch (const ConfigError& e) {
        throw ParseError(source, 0, e.what());
    }

    TaskLayout& layout = setup.layout;
    if (auto s = tree.get_child_optional("subjects")) {
        r.only_keys("subjects", *s, {"radius_min", "radius_max", "anchor", "jitter", "positions", "grid_spacing",
                                     "grid_columns", "grid_origin"});
        if (auto v = s->get_optional<std::string>("radius_min")) layout.radius_min_m = r.number("subjects", *v);
        if (auto v = s->get_optional<std::string>("radius_max")) layout.radius_max_m = r.number("subjects", *v);
        if (auto v = s->get_optional<std::string>("anchor")) layout.anchor = r.point("subjects", *v);
        if (auto v = s->get_optional<std::string>("jitter")) layout.position_jitter_m = r.number("subjects", *v);
        if (auto v = s->get_optional<std::string>("grid_spacing")) layout.grid_spacing_m = r.number("subjects", *v);
        if (auto v = s->get_optional<std::string>("grid_columns")) layout.grid_columns = r.unsigned_value("subjects", *v);
        if (auto v = s->get_optional<std::string>("grid_origin")) layout.grid_origin = r.point("subjects", *v);
        if (auto v = s->get_optional<std::string>("positions")) {
            layout.positions.clear();
            for (auto item : io::split(*v, ';')) {
                const auto xy = io::split(io::trim(item), ' ');
                if (xy.size() != 2) r.fail("subjects", "positions are 'x y; x y; ...'");
                layout.positions.push_back({r.number("subjects", xy[0]), r.number("subjects", xy[1])});
            }
        }
        if (!(layout.radius_min_m > 0.0) || layout.radius_max_m < layout.radius_min_m) {
            r.fail("subjects", "radius range must satisfy 0 < radius_min <= radius_max");
        }
        if (!(layout.position_jitter_m >= 0.0)) r.fail("subjects", "jitter must be >= 0");
    }
    if (!layout.activities.empty() && (width != preset_width || height != preset_height)) {
        layout.activities = default_activities(width, height);
    }
    if (auto s = tree.get_child_optional("activities")) {
        layout.activities.clear();
        for (const auto& [k, v] : *s) {
            const auto parts = io::split(v.data(), ',');
            if (parts.size() != 7) r.fail("activities", "'" + k + "' needs motion, x, y, ex, ey, posture, period");
            ActivityTemplate a;
            a.activity_id = k;
            a.motion = parse_motion(r, "activities", parts[0]);
            a.anchor = {r.number("activities", parts[1]), r.number("activities", parts[2])};
            a.extent = {r.number("activities", parts[3]), r.number("activities", parts[4])};
            a.posture = r.number("activities", parts[5]);
            a.period_bands = r.number("activities", parts[6]);
            if (!(a.posture > 0.0)) r.fail("activities", "posture of '" + k + "' must be positive");
            layout.activities.push_back(a);
        }
    }
    return setup;
}

SceneSetup load_scene_config(const std::filesystem::path& path, Task task, std::uint64_t default_seed,
                             double default_noise_db, const BandPlan& plan) {
    return parse_scene_config(io::read_file(path), task, default_seed, default_noise_db, plan, path.string());
}

}  // namespace shapr

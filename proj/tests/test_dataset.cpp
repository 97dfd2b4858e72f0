#include <doctest.h>

#include <set>

#include "shapr/dataset.hpp"
#include "shapr/error.hpp"
#include "shapr/simulator.hpp"
#include "shapr/text_io.hpp"
#include "support.hpp"

using namespace shapr;

namespace {

Dataset toy(std::size_t classes, std::size_t per_class) {
    Dataset d;
    d.sensor_ids = {1, 2};
    d.bands_per_sensor = 2;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            LabeledSample s;
            s.sample_id = "c" + std::to_string(c) + "-" + std::to_string(k);
            s.task = Task::authentication;
            s.label = "class" + std::to_string(c);
            s.features = {{-20.5 - c, -21.25 + k, -30.0, 1e-3}, 2, 2};
            d.samples.push_back(s);
        }
    }
    return d;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("csv round trip is exact") {
    const auto d = generate_dataset(preset_setup(Task::coord_localization, 2), Task::coord_localization, 20, 2, 2);
    CHECK(dataset_from_csv(dataset_to_csv(d)) == d);
    const auto a = generate_dataset(preset_setup(Task::authentication, 42), Task::authentication, 7, 20, 42);
    const auto text = dataset_to_csv(a);
    CHECK(dataset_from_csv(text) == a);
    CHECK(std::count(text.begin(), text.end(), '\n') == 141);
    test::TempDir dir("ds");
    save_dataset(dir / "a.csv", a);
    CHECK(load_dataset(dir / "a.csv") == a);
}

TEST_CASE("csv header") {
    const auto text = dataset_to_csv(toy(1, 2));
    CHECK(text.rfind("sample_id,task,label,x,y,f_1_0,f_1_1,f_2_0,f_2_1\n", 0) == 0);
}

TEST_CASE("csv errors carry line numbers") {
    const auto text = dataset_to_csv(toy(2, 2));
    auto expect_line = [](const std::string& bad, std::size_t line) {
        try {
            dataset_from_csv(bad, "d.csv");
        } catch (const ParseError& e) {
            return e.line() == line;
        }
        return false;
    };
    // header missing a feature column
    std::string no_col = text;
    no_col.replace(no_col.find(",f_2_1"), 6, "");
    CHECK(expect_line(no_col, 1));
    std::string ragged = text;
    ragged.insert(ragged.find('\n', ragged.find('\n') + 1), ",7");
    CHECK(expect_line(ragged, 2));
    std::string word = text;
    const auto third = word.find('\n', word.find('\n', word.find('\n') + 1) + 1) + 1;
    word.replace(word.find("-30", third), 3, "abc");
    CHECK(expect_line(word, 4));
}

TEST_CASE("stratified split 70/30") {
    const auto d = toy(7, 20);
    const auto m = stratified_split(d, 0.7, 42);
    CHECK(m.train_ids.size() == 98);
    CHECK(m.test_ids.size() == 42);
    for (std::size_t c = 0; c < 7; ++c) {
        std::size_t tr = 0;
        for (const auto& id : m.train_ids) tr += d.samples[d.index_of(id)].label == "class" + std::to_string(c);
        CHECK(tr == 14);
    }
    m.validate(d);
    CHECK(stratified_split(d, 0.7, 42) == m);
    CHECK(!(stratified_split(d, 0.7, 43) == m));
}

TEST_CASE("stratified split edge cases") {
    const auto m = stratified_split(toy(3, 2), 0.5, 1);
    CHECK(m.train_ids.size() == 3);
    CHECK(m.test_ids.size() == 3);
    CHECK(stratified_split(toy(2, 2), 0.01, 1).train_ids.size() == 2);
    CHECK(stratified_split(toy(2, 2), 0.99, 1).test_ids.size() == 2);
    CHECK_THROWS_AS(stratified_split(toy(2, 1), 0.7, 1), ConfigError);
    CHECK_THROWS_AS(stratified_split(toy(2, 5), 0.0, 1), ConfigError);
    CHECK_THROWS_AS(stratified_split(toy(2, 5), 1.0, 1), ConfigError);
}

TEST_CASE("split properties over many seeds") {
    const auto d = toy(5, 9);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto m = stratified_split(d, 0.7, seed);
        const auto tr = as_set(m.train_ids), te = as_set(m.test_ids);
        CHECK(tr.size() == m.train_ids.size());
        CHECK(tr.size() + te.size() == d.size());
        for (const auto& id : te) CHECK(tr.count(id) == 0);
        // floor(0.7 * 9) = 6 per class
        CHECK(m.train_ids.size() == 30);
    }
}

TEST_CASE("location holdout") {
    const auto d = generate_dataset(preset_setup(Task::coord_localization, 1), Task::coord_localization, 20, 3, 1);
    const auto m = location_holdout_split(d, 3, 5);
    m.validate(d);
    std::set<std::pair<double, double>> tr, te;
    for (const auto& id : m.train_ids) tr.insert({d.samples[d.index_of(id)].coords->x, d.samples[d.index_of(id)].coords->y});
    for (const auto& id : m.test_ids) te.insert({d.samples[d.index_of(id)].coords->x, d.samples[d.index_of(id)].coords->y});
    CHECK(tr.size() == 17);
    CHECK(te.size() == 3);
    for (const auto& p : te) CHECK(tr.count(p) == 0);
    CHECK(m.test_ids.size() == 9);
    CHECK(location_holdout_split(d, 3, 5) == m);
    CHECK_THROWS_AS(location_holdout_split(d, 0, 5), ConfigError);
    CHECK_THROWS_AS(location_holdout_split(d, 20, 5), ConfigError);
    CHECK_THROWS_AS(location_holdout_split(toy(2, 2), 1, 5), ConfigError);
}

TEST_CASE("manifest validation and text") {
    const auto d = toy(2, 3);
    auto m = stratified_split(d, 0.5, 3);
    CHECK(manifest_from_text(manifest_to_text(m)) == m);
    auto overlap = m;
    overlap.test_ids.push_back(m.train_ids[0]);
    CHECK_THROWS_AS(overlap.validate(d), ConfigError);
    auto missing = m;
    missing.test_ids.pop_back();
    CHECK_THROWS_AS(missing.validate(d), ConfigError);
    auto unknown = m;
    unknown.test_ids.push_back("ghost");
    CHECK_THROWS_AS(unknown.validate(d), ConfigError);
    CHECK_THROWS_AS(manifest_from_text("train a\nvalidate b\n", "m.txt"), ParseError);
}

TEST_CASE("restrict sensors keeps a prefix") {
    const auto d = toy(2, 2);
    const auto r = d.restrict_sensors(1);
    CHECK(r.sensor_ids == std::vector<SensorId>{1});
    CHECK(r.samples[0].features.values == std::vector<double>{-20.5, -21.25});
    CHECK(d.restrict_sensors(2) == d);
    CHECK_THROWS_AS(d.restrict_sensors(3), ConfigError);
    CHECK_THROWS_AS(d.restrict_sensors(0), ConfigError);
}

TEST_CASE("dataset validation") {
    auto d = toy(1, 2);
    d.samples[1].sample_id = d.samples[0].sample_id;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    auto e = toy(1, 2);
    e.samples[0].features.values.pop_back();
    CHECK_THROWS_AS(e.validate(), ConfigError);
    auto f = toy(1, 2);
    f.samples[0].task = Task::coord_localization;
    CHECK_THROWS_AS(f.validate(), ConfigError);
}

}

TEST_SUITE("text_io") {

TEST_CASE("number formatting") {
    CHECK(io::format_exact(0.1) == "0.1");
    CHECK(io::format_exact(-20.123456789) == "-20.123456789");
    CHECK(io::format_sig(-20.1234567891234, 9) == "-20.1234568");
    CHECK(io::round_sig(-20.1234567891234, 9) == -20.1234568);
    double v = 0;
    CHECK(io::parse_double(" 1.5 ", v));
    CHECK(v == 1.5);
    CHECK(io::parse_double("1.5x", v) == false);
    CHECK(io::parse_double("nan", v) == false);
    CHECK(io::parse_double("-2e-3", v));
    CHECK(v == -2e-3);
    unsigned long long u = 0;
    CHECK(io::parse_u64("42", u));
    CHECK(u == 42);
    CHECK(!io::parse_u64("-1", u));
}

TEST_CASE("atomic write replaces the file") {
    test::TempDir dir("io");
    io::write_file_atomic(dir / "x.txt", "one");
    io::write_file_atomic(dir / "x.txt", "two");
    CHECK(io::read_file(dir / "x.txt") == "two");
    CHECK_THROWS(io::read_file(dir / "absent.txt"));
}

TEST_CASE("derived seeds") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    CHECK(parse_task("grid-loc") == Task::grid_localization);
    CHECK(task_tag(Task::coord_localization) == "coord-loc");
    CHECK_THROWS_AS(parse_task("dance"), ConfigError);
}

}

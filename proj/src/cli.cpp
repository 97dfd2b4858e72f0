#include "shapr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <unistd.h>

#include <CLI11.hpp>

#include "shapr/dataset.hpp"
#include "shapr/error.hpp"
#include "shapr/eval.hpp"
#include "shapr/scene_config.hpp"
#include "shapr/simulator.hpp"
#include "shapr/spectrum.hpp"
#include "shapr/text_io.hpp"

namespace shapr::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormats = R"(File formats:
  dataset CSV   sample_id,task,label,x,y,f_<sensor>_<band>...  (x,y empty for category tasks)
  split         one 'train <id>' or 'test <id>' per line
  model         text, first line 'SHAPR1 knn|tree|forest|gpr'
  report CSV    metric,value summary, then sample_id,true,pred[,err_m]; coordinates as x;y
  ablation CSV  sensors,accuracy,seed
  IQ frame      'SHIQ', u32 sensor_id, u64 center_freq_hz, u64 sample_rate_hz, u32 byte_count,
                raw interleaved unsigned I/Q bytes (little-endian integers)
  IQ directory  labels.csv (sample_id,task,label,x,y) plus <sample_id>/*.shiq frames)";

struct BandFlags {
    std::int64_t start = 300'000'000;
    std::int64_t stop = 420'000'000;
    std::int64_t step = 1'200'000;

    void add(CLI::App* app) {
        app->add_option("--band-start", start, "First band center in Hz")->capture_default_str();
        app->add_option("--band-stop", stop, "Last band center in Hz (inclusive)")->capture_default_str();
        app->add_option("--band-step", step, "Band spacing in Hz")->capture_default_str();
    }
    BandPlan plan() const {
        BandPlan p{start, stop, step};
        p.validate();
        return p;
    }
};

struct ModelFlags {
    eval::ModelParams params;
    std::size_t trees = 100;
    std::size_t max_depth = 0;
    std::size_t min_split = 2;
    std::size_t features_per_split = 0;
    bool no_bootstrap = false;
    bool no_normalize = false;

    void add(CLI::App* app) {
        app->add_option("--k", params.k, "k-NN neighbour count")->capture_default_str();
        app->add_option("--trees", trees, "Random forest tree count")->capture_default_str();
        app->add_option("--max-depth", max_depth, "Tree depth limit, 0 = unlimited")->capture_default_str();
        app->add_option("--min-samples-split", min_split, "Smallest node that may be split")->capture_default_str();
        app->add_option("--features-per-split", features_per_split,
                        "Candidate features per split (forest default ceil(sqrt(d)), tree default all)");
        app->add_flag("--no-bootstrap", no_bootstrap, "Train every forest tree on the full training set");
        app->add_flag("--no-normalize", no_normalize, "Feed raw dB features to GPR");
    }
    eval::ModelParams resolve() const {
        eval::ModelParams p = params;
        p.tree = {max_depth, min_split, features_per_split};
        p.forest.trees = trees;
        p.forest.tree = {max_depth, min_split, features_per_split};
        p.forest.bootstrap = !no_bootstrap;
        p.normalize_gpr = !no_normalize;
        return p;
    }
};

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw Error("input file '" + path + "' does not exist");
}

void require_output_dir(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw Error("output directory '" + parent.string() + "' does not exist");
    }
}

std::size_t default_categories(Task t) {
    switch (t) {
        case Task::authentication: return 7;
        case Task::grid_localization: return 4;
        case Task::coord_localization: return 20;
        case Task::activity: return 8;
    }
    return 1;
}

std::size_t default_per_category(Task t) {
    return t == Task::activity ? 100 : 20;
}

std::vector<SpectrumSweep> sweeps_of(const LabeledSample& s, const Dataset& d, const BandPlan& plan) {
    std::vector<SpectrumSweep> out;
    for (std::size_t k = 0; k < d.sensor_ids.size(); ++k) {
        const auto begin = s.features.values.begin() + static_cast<std::ptrdiff_t>(k * d.bands_per_sensor);
        out.push_back({d.sensor_ids[k], plan, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(d.bands_per_sensor))});
    }
    return out;
}

std::string labels_csv(const Dataset& d) {
    std::string out = "sample_id,task,label,x,y\n";
    for (const auto& s : d.samples) {
        out += s.sample_id + "," + std::string(task_tag(s.task)) + "," + s.label + ",";
        if (s.coords) out += io::format_exact(s.coords->x) + "," + io::format_exact(s.coords->y);
        else out += ",";
        out += "\n";
    }
    return out;
}

void write_iq_dir(const Dataset& d, const BandPlan& plan, const fs::path& dir, std::size_t n_bytes, std::uint64_t seed) {
    for (const auto& s : d.samples) {
        for (double v : s.features.values) {
            if (v < kSynthMinDb || v > kSynthMaxDb) {
                throw ConfigError("sample '" + s.sample_id + "' has power " + io::format_sig(v, 6) +
                                  " dB outside the synthesizable range; adjust the scene");
            }
        }
    }
    if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir))) {
        throw Error("IQ output directory '" + dir.string() + "' already exists and is not empty");
    }
    fs::path tmp = dir;
    tmp += ".partial." + std::to_string(::getpid());
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    try {
        std::size_t index = 0;
        for (const auto& s : d.samples) {
            const fs::path sd = tmp / s.sample_id;
            fs::create_directory(sd);
            for (const auto& sweep : sweeps_of(s, d, plan)) {
                for (const auto& f : synth_sweep_frames(sweep, n_bytes, derive_seed(seed, 1'000'000 + index++))) {
                    write_iq_file(sd / ("s" + std::to_string(f.sensor_id) + "_" + std::to_string(f.center_freq_hz) + ".shiq"), f);
                }
            }
        }
        io::write_file_atomic(tmp / "labels.csv", labels_csv(d));
        if (fs::exists(dir)) fs::remove(dir);
        fs::rename(tmp, dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

Dataset featurize_dir(const fs::path& dir, const fs::path& labels_path, const BandPlan& plan) {
    const std::string source = labels_path.string();
    const std::string text = io::read_file(labels_path);
    auto lines = io::split(text, '\n');
    while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty() || io::trim(lines[0]) != "sample_id,task,label,x,y") {
        throw ParseError(source, 1, "expected header 'sample_id,task,label,x,y'");
    }
    Dataset d;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cols = io::split(io::trim(lines[i]), ',');
        if (cols.size() != 5) throw ParseError(source, i + 1, "expected 5 columns");
        LabeledSample s;
        s.sample_id = std::string(cols[0]);
        try {
            s.task = parse_task(cols[1]);
        } catch (const ConfigError& e) {
            throw ParseError(source, i + 1, e.what());
        }
        s.label = std::string(cols[2]);
        if (!cols[3].empty() || !cols[4].empty()) {
            Point2 p;
            if (!io::parse_double(cols[3], p.x) || !io::parse_double(cols[4], p.y)) {
                throw ParseError(source, i + 1, "non-numeric coordinates");
            }
            s.coords = p;
        }
        const fs::path sd = dir / s.sample_id;
        if (!fs::is_directory(sd)) throw IngestError("no frame directory '" + sd.string() + "'");
        std::map<SensorId, std::vector<IqFrame>> frames;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(sd)) {
            if (e.is_regular_file() && e.path().extension() == ".shiq") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            IqFrame frame = read_iq_file(f);
            frames[frame.sensor_id].push_back(std::move(frame));
        }
        if (frames.empty()) throw IngestError("no .shiq frames in '" + sd.string() + "'");
        std::vector<SpectrumSweep> sweeps;
        for (const auto& [sensor, fr] : frames) {
            try {
                sweeps.push_back(assemble_sweep(fr, plan));
            } catch (const IngestError& e) {
                throw IngestError(sd.string() + ": " + e.what());
            }
        }
        s.features = stack_features(sweeps);
        for (double& v : s.features.values) v = quantize_feature(v);
        if (d.sensor_ids.empty()) {
            for (const auto& [sensor, fr] : frames) d.sensor_ids.push_back(sensor);
            d.bands_per_sensor = s.features.bands_per_sensor;
        } else if (s.features.size() != d.feature_count()) {
            throw IngestError(sd.string() + ": sensor set differs from earlier samples");
        }
        d.samples.push_back(std::move(s));
    }
    if (d.samples.empty()) throw ParseError(source, 0, "no samples listed");
    d.validate();
    return d;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (auto part : io::split(text, ',')) {
        unsigned long long v = 0;
        if (!io::parse_u64(part, v)) throw CLI::ValidationError(std::string(what), "expected comma-separated integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Passive RF human sensing pipeline: simulate, featurize, split, train, predict, evaluate, ablate",
                 "shapr"};
    app.footer(kFormats);
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a labeled dataset from a simulated RF scene");
    std::string sim_task, sim_out, sim_scene, sim_iq_dir;
    std::optional<std::size_t> sim_categories, sim_per_category;
    std::uint64_t sim_seed = 0;
    double sim_noise = 1.0;
    std::size_t sim_iq_bytes = 4800;
    BandFlags sim_band;
    sim->add_option("--task", sim_task, "auth | grid-loc | coord-loc | activity")->required()
        ->check(CLI::IsMember({"auth", "grid-loc", "coord-loc", "activity"}));
    sim->add_option("--categories", sim_categories, "Subjects / positions / grid points / activities (default 7 / 4 / 20 / 8 by task)");
    sim->add_option("--per-category", sim_per_category, "Samples per category (default 20, activity 100)");
    sim->add_option("--seed", sim_seed, "Seed for the scene and the samples")->required();
    sim->add_option("--noise", sim_noise, "Per-band Gaussian noise in dB")->capture_default_str();
    sim->add_option("--scene", sim_scene, "Scene config file overriding the built-in room for the task");
    sim->add_option("--out", sim_out, "Output dataset CSV")->required();
    sim->add_option("--iq-dir", sim_iq_dir, "Also write synthesized IQ frames for every sample to this directory");
    sim->add_option("--iq-bytes", sim_iq_bytes, "Bytes per synthesized frame")->capture_default_str();
    sim_band.add(sim);

    // featurize
    auto* feat = app.add_subcommand("featurize", "Convert IQ frame files into a dataset");
    std::string feat_dir, feat_labels, feat_out;
    BandFlags feat_band;
    feat->add_option("--input-dir", feat_dir, "Directory with one sub-directory of .shiq frames per sample")->required();
    feat->add_option("--labels", feat_labels, "Labels CSV sample_id,task,label,x,y (default <input-dir>/labels.csv)");
    feat->add_option("--out", feat_out, "Output dataset CSV")->required();
    feat_band.add(feat);

    // split
    auto* split = app.add_subcommand("split", "Write a train/test split manifest");
    std::string split_dataset, split_out;
    double split_fraction = 0.7;
    std::optional<std::size_t> split_holdout;
    std::uint64_t split_seed = 0;
    split->add_option("--dataset", split_dataset, "Dataset CSV")->required();
    split->add_option("--out", split_out, "Output manifest")->required();
    split->add_option("--seed", split_seed, "Shuffle seed")->required();
    auto* frac_opt = split->add_option("--train-fraction", split_fraction, "Stratified per-class train fraction")
                         ->capture_default_str();
    split->add_option("--holdout-locations", split_holdout, "Hold out every sample of n random locations instead")
        ->excludes(frac_opt);

    // train
    auto* train = app.add_subcommand("train", "Fit a model on the train side of a split");
    std::string train_dataset, train_split, train_model_kind, train_out;
    std::uint64_t train_seed = 0;
    ModelFlags train_flags;
    train->add_option("--dataset", train_dataset, "Dataset CSV")->required();
    train->add_option("--split", train_split, "Split manifest")->required();
    train->add_option("--model", train_model_kind, "knn | dt | rfr | gpr")->required()
        ->check(CLI::IsMember({"knn", "dt", "rfr", "gpr"}));
    train->add_option("--seed", train_seed, "Model seed")->required();
    train->add_option("--out", train_out, "Output model file")->required();
    train_flags.add(train);

    // predict
    auto* pred = app.add_subcommand("predict", "Apply a saved model and write a report");
    std::string pred_model, pred_dataset, pred_split, pred_out, pred_confusion;
    pred->add_option("--model-file", pred_model, "Model file written by 'train'")->required();
    pred->add_option("--dataset", pred_dataset, "Dataset CSV")->required();
    pred->add_option("--split", pred_split, "Only predict the test side of this manifest");
    pred->add_option("--out", pred_out, "Output report CSV")->required();
    pred->add_option("--confusion", pred_confusion, "Also write the confusion matrix CSV");

    // eval
    auto* ev = app.add_subcommand("eval", "Train on the split's train side and report on its test side");
    std::string ev_dataset, ev_split, ev_model_kind, ev_out, ev_confusion;
    std::uint64_t ev_seed = 0;
    ModelFlags ev_flags;
    ev->add_option("--dataset", ev_dataset, "Dataset CSV")->required();
    ev->add_option("--split", ev_split, "Split manifest")->required();
    ev->add_option("--model", ev_model_kind, "knn | dt | rfr | gpr")->required()
        ->check(CLI::IsMember({"knn", "dt", "rfr", "gpr"}));
    ev->add_option("--seed", ev_seed, "Model seed")->required();
    ev->add_option("--out", ev_out, "Output report CSV")->required();
    ev->add_option("--confusion", ev_confusion, "Also write the confusion matrix CSV");
    ev_flags.add(ev);

    // ablate
    auto* abl = app.add_subcommand("ablate", "Accuracy versus number of receivers (first m sensors)");
    std::string abl_dataset, abl_split, abl_model_kind, abl_out, abl_sensors, abl_seeds;
    double abl_fraction = 0.7;
    ModelFlags abl_flags;
    abl->add_option("--dataset", abl_dataset, "Dataset CSV")->required();
    abl->add_option("--split", abl_split, "Split manifest (default: a stratified split per seed)");
    abl->add_option("--train-fraction", abl_fraction, "Train fraction for per-seed splits")->capture_default_str();
    abl->add_option("--model", abl_model_kind, "knn | dt | rfr")->required()->check(CLI::IsMember({"knn", "dt", "rfr"}));
    abl->add_option("--seeds", abl_seeds, "Comma-separated seeds, one ablation curve each")->required();
    abl->add_option("--sensors", abl_sensors, "Comma-separated sensor counts (default 1..all)");
    abl->add_option("--out", abl_out, "Output ablation CSV")->required();
    abl_flags.add(abl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            const Task task = parse_task(sim_task);
            const BandPlan plan = sim_band.plan();
            require_output_dir(sim_out);
            SceneSetup setup = sim_scene.empty() ? preset_setup(task, sim_seed, sim_noise, plan)
                                                 : (require_file(sim_scene),
                                                    load_scene_config(sim_scene, task, sim_seed, sim_noise, plan));
            const Dataset d = generate_dataset(setup, task, sim_categories.value_or(default_categories(task)),
                                               sim_per_category.value_or(default_per_category(task)), sim_seed);
            if (!sim_iq_dir.empty()) write_iq_dir(d, plan, sim_iq_dir, sim_iq_bytes, sim_seed);
            save_dataset(sim_out, d);
            out << "wrote " << d.size() << " samples x " << d.feature_count() << " features to " << sim_out << "\n";
        } else if (feat->parsed()) {
            if (!fs::is_directory(feat_dir)) throw Error("input directory '" + feat_dir + "' does not exist");
            const std::string labels = feat_labels.empty() ? (fs::path(feat_dir) / "labels.csv").string() : feat_labels;
            require_file(labels);
            require_output_dir(feat_out);
            const Dataset d = featurize_dir(feat_dir, labels, feat_band.plan());
            save_dataset(feat_out, d);
            out << "wrote " << d.size() << " samples x " << d.feature_count() << " features to " << feat_out << "\n";
        } else if (split->parsed()) {
            require_file(split_dataset);
            require_output_dir(split_out);
            const Dataset d = load_dataset(split_dataset);
            const SplitManifest m = split_holdout ? location_holdout_split(d, *split_holdout, split_seed)
                                                  : stratified_split(d, split_fraction, split_seed);
            save_manifest(split_out, m);
            out << "train " << m.train_ids.size() << ", test " << m.test_ids.size() << "\n";
        } else if (train->parsed()) {
            require_file(train_dataset);
            require_file(train_split);
            require_output_dir(train_out);
            const Dataset d = load_dataset(train_dataset);
            const SplitManifest m = load_manifest(train_split);
            m.validate(d);
            const auto model = eval::train_model(d, m.train_ids, eval::parse_model_kind(train_model_kind),
                                                 train_flags.resolve(), train_seed);
            io::write_file_atomic(train_out, eval::serialize_model(model));
            out << "trained " << train_model_kind << " on " << m.train_ids.size() << " samples\n";
        } else if (pred->parsed()) {
            require_file(pred_model);
            require_file(pred_dataset);
            if (!pred_split.empty()) require_file(pred_split);
            require_output_dir(pred_out);
            const auto model = eval::deserialize_model(io::read_file(pred_model), pred_model);
            const Dataset d = load_dataset(pred_dataset);
            std::vector<std::string> ids;
            if (!pred_split.empty()) {
                const SplitManifest m = load_manifest(pred_split);
                m.validate(d);
                ids = m.test_ids;
            } else {
                for (const auto& s : d.samples) ids.push_back(s.sample_id);
            }
            const auto rep = eval::evaluate_model(model, d, ids);
            if (!pred_confusion.empty() && rep.confusion) io::write_file_atomic(pred_confusion, rep.confusion->to_csv());
            io::write_file_atomic(pred_out, rep.to_csv());
            out << "predicted " << rep.rows.size() << " samples\n";
        } else if (ev->parsed()) {
            require_file(ev_dataset);
            require_file(ev_split);
            require_output_dir(ev_out);
            const Dataset d = load_dataset(ev_dataset);
            const SplitManifest m = load_manifest(ev_split);
            const auto rep = eval::run_experiment(d, m, eval::parse_model_kind(ev_model_kind), ev_flags.resolve(), ev_seed);
            if (!ev_confusion.empty() && rep.confusion) io::write_file_atomic(ev_confusion, rep.confusion->to_csv());
            io::write_file_atomic(ev_out, rep.to_csv());
            if (rep.confusion) out << "accuracy " << io::format_sig(rep.accuracy(), 6) << "\n";
            if (rep.mean_error_m) out << "mean error " << io::format_sig(*rep.mean_error_m, 6) << " m\n";
        } else if (abl->parsed()) {
            require_file(abl_dataset);
            if (!abl_split.empty()) require_file(abl_split);
            require_output_dir(abl_out);
            const Dataset d = load_dataset(abl_dataset);
            std::vector<std::size_t> counts;
            if (abl_sensors.empty()) {
                for (std::size_t m = 1; m <= d.sensor_ids.size(); ++m) counts.push_back(m);
            } else {
                counts = parse_list(abl_sensors, "--sensors");
            }
            const auto seeds = parse_list(abl_seeds, "--seeds");
            const auto kind = eval::parse_model_kind(abl_model_kind);
            eval::AblationResult all;
            for (std::size_t seed : seeds) {
                const SplitManifest m = abl_split.empty() ? stratified_split(d, abl_fraction, seed) : load_manifest(abl_split);
                const auto r = eval::receiver_ablation(d, m, kind, counts, abl_flags.resolve(), seed);
                all.points.insert(all.points.end(), r.points.begin(), r.points.end());
            }
            io::write_file_atomic(abl_out, all.to_csv());
            for (const auto& p : all.points) {
                out << "sensors " << p.sensors << " seed " << p.seed << " accuracy " << io::format_sig(p.accuracy, 6) << "\n";
            }
        }
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace shapr::cli

#include "stedge_cli/config.hpp"

#include <fstream>
#include <set>

namespace stedge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(where.empty() ? "<root>" : where, "expected an object");
    const std::set<std::string> names(known.begin(), known.end());
    for (const auto& [key, value] : j.items()) {
        if (!names.contains(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
}

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where.empty() ? key : where + "." + key, e.what());
    }
}

imgproc::CannyThresholds read_thresholds(const json& j, const char* key, imgproc::CannyThresholds fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(key, "expected [low, high] on the 0-255 scale");
    }
    return imgproc::CannyThresholds::from_255(v[0].get<double>(), v[1].get<double>());
}

json thresholds_to_json(imgproc::CannyThresholds t) { return json::array({t.low * 255.0, t.high * 255.0}); }

template <typename Fn>
void checked(const char* field, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
}

}  // namespace

RunConfig config_from_json(const json& j) {
    reject_unknown(j, "",
                   {"dataset_dir", "output_dir", "manifest", "backbone", "loss", "adam", "l0", "canny_high",
                    "canny_low", "blur_kernel", "bilateral", "binarize", "min_component", "batch_size",
                    "epochs_phase1", "epochs_per_round", "termination_pct", "max_rounds", "seed", "workers"});
    RunConfig cfg;
    selftrain::TrainConfig& t = cfg.train;
    std::string path;
    if (j.contains("dataset_dir")) {
        read(j, "dataset_dir", "", path);
        cfg.dataset_dir = path;
    }
    if (j.contains("output_dir")) {
        read(j, "output_dir", "", path);
        cfg.output_dir = path;
    }
    if (j.contains("manifest")) {
        read(j, "manifest", "", path);
        cfg.manifest = path;
    }
    if (j.contains("backbone")) {
        const json& b = j.at("backbone");
        reject_unknown(b, "backbone", {"num_blocks", "base_channels", "in_channels", "input_height", "input_width"});
        read(b, "num_blocks", "backbone", t.backbone.num_blocks);
        read(b, "base_channels", "backbone", t.backbone.base_channels);
        read(b, "in_channels", "backbone", t.backbone.in_channels);
        read(b, "input_height", "backbone", t.backbone.input_height);
        read(b, "input_width", "backbone", t.backbone.input_width);
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        reject_unknown(l, "loss", {"lambda", "delta", "mu"});
        read(l, "lambda", "loss", t.loss.lambda);
        read(l, "delta", "loss", t.loss.delta);
        read(l, "mu", "loss", t.loss.mu);
    }
    if (j.contains("adam")) {
        const json& a = j.at("adam");
        reject_unknown(a, "adam", {"learning_rate", "beta1", "beta2", "epsilon"});
        read(a, "learning_rate", "adam", t.adam.learning_rate);
        read(a, "beta1", "adam", t.adam.beta1);
        read(a, "beta2", "adam", t.adam.beta2);
        read(a, "epsilon", "adam", t.adam.epsilon);
    }
    if (j.contains("l0")) {
        const json& l = j.at("l0");
        reject_unknown(l, "l0", {"lambda", "kappa", "beta_max"});
        read(l, "lambda", "l0", t.l0.lambda);
        read(l, "kappa", "l0", t.l0.kappa);
        read(l, "beta_max", "l0", t.l0.beta_max);
    }
    t.labeling.canny_high = read_thresholds(j, "canny_high", t.labeling.canny_high);
    t.labeling.canny_low = read_thresholds(j, "canny_low", t.labeling.canny_low);
    read(j, "blur_kernel", "", t.labeling.blur_kernel);
    if (j.contains("bilateral")) {
        const json& b = j.at("bilateral");
        reject_unknown(b, "bilateral", {"diameter", "sigma_color", "sigma_space"});
        read(b, "diameter", "bilateral", t.labeling.bilateral_diameter);
        double sigma_color = t.labeling.bilateral_sigma_color * 255.0;
        read(b, "sigma_color", "bilateral", sigma_color);
        t.labeling.bilateral_sigma_color = sigma_color / 255.0;
        read(b, "sigma_space", "bilateral", t.labeling.bilateral_sigma_space);
    }
    if (j.contains("binarize")) {
        const json& b = j.at("binarize");
        reject_unknown(b, "binarize", {"block_size", "offset", "global_threshold"});
        read(b, "block_size", "binarize", t.labeling.binarize.block_size);
        read(b, "offset", "binarize", t.labeling.binarize.offset);
        read(b, "global_threshold", "binarize", t.labeling.binarize.global_threshold);
    }
    read(j, "min_component", "", t.labeling.min_component);
    read(j, "batch_size", "", t.batch_size);
    read(j, "epochs_phase1", "", t.epochs_phase1);
    read(j, "epochs_per_round", "", t.epochs_per_round);
    read(j, "termination_pct", "", t.termination_pct);
    read(j, "max_rounds", "", t.max_rounds);
    read(j, "seed", "", t.seed);
    read(j, "workers", "", t.workers);
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    const selftrain::TrainConfig& t = cfg.train;
    json j;
    j["dataset_dir"] = cfg.dataset_dir.string();
    j["output_dir"] = cfg.output_dir.string();
    if (cfg.manifest) j["manifest"] = cfg.manifest->string();
    j["backbone"] = {{"num_blocks", t.backbone.num_blocks},
                     {"base_channels", t.backbone.base_channels},
                     {"in_channels", t.backbone.in_channels},
                     {"input_height", t.backbone.input_height},
                     {"input_width", t.backbone.input_width}};
    j["loss"] = {{"lambda", t.loss.lambda}, {"delta", t.loss.delta}, {"mu", t.loss.mu}};
    j["adam"] = {{"learning_rate", t.adam.learning_rate},
                 {"beta1", t.adam.beta1},
                 {"beta2", t.adam.beta2},
                 {"epsilon", t.adam.epsilon}};
    j["l0"] = {{"lambda", t.l0.lambda}, {"kappa", t.l0.kappa}, {"beta_max", t.l0.beta_max}};
    j["canny_high"] = thresholds_to_json(t.labeling.canny_high);
    j["canny_low"] = thresholds_to_json(t.labeling.canny_low);
    j["blur_kernel"] = t.labeling.blur_kernel;
    j["bilateral"] = {{"diameter", t.labeling.bilateral_diameter},
                      {"sigma_color", t.labeling.bilateral_sigma_color * 255.0},
                      {"sigma_space", t.labeling.bilateral_sigma_space}};
    j["binarize"] = {{"block_size", t.labeling.binarize.block_size},
                     {"offset", t.labeling.binarize.offset},
                     {"global_threshold", t.labeling.binarize.global_threshold}};
    j["min_component"] = t.labeling.min_component;
    j["batch_size"] = t.batch_size;
    j["epochs_phase1"] = t.epochs_phase1;
    j["epochs_per_round"] = t.epochs_per_round;
    j["termination_pct"] = t.termination_pct;
    j["max_rounds"] = t.max_rounds;
    j["seed"] = t.seed;
    j["workers"] = t.workers;
    return j;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path.string(), "cannot open config file");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), e.what());
    }
    return config_from_json(j);
}

void RunConfig::validate() const {
    if (dataset_dir.empty()) throw ConfigError("dataset_dir", "not set");
    if (!fs::is_directory(dataset_dir)) throw ConfigError("dataset_dir", "not a directory: " + dataset_dir.string());
    if (output_dir.empty()) throw ConfigError("output_dir", "not set");
    if (manifest && !fs::is_regular_file(*manifest)) throw ConfigError("manifest", "no such file: " + manifest->string());
    if (train.workers < 0) throw ConfigError("workers", "must be >= 0");
    checked("backbone", [&] { train.backbone.validate(); });
    checked("loss", [&] { train.loss.validate(); });
    checked("l0", [&] { train.l0.validate(); });
    const auto& lab = train.labeling;
    if (lab.blur_kernel < 1 || lab.blur_kernel % 2 == 0) throw ConfigError("blur_kernel", "must be odd and >= 1");
    if (lab.bilateral_diameter < 1 || lab.bilateral_diameter % 2 == 0) {
        throw ConfigError("bilateral.diameter", "must be odd and >= 1");
    }
    if (!(lab.bilateral_sigma_color > 0.0) || !(lab.bilateral_sigma_space > 0.0)) {
        throw ConfigError("bilateral", "sigmas must be positive");
    }
    if (lab.binarize.block_size < 1 || lab.binarize.block_size % 2 == 0) {
        throw ConfigError("binarize.block_size", "must be odd and >= 1");
    }
    checked("train", [&] { train.validate(); });
}

void echo_config(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::ofstream os(cfg.output_dir / "config.json");
    if (!os) throw std::runtime_error("cannot write " + (cfg.output_dir / "config.json").string());
    os << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace stedge::cli

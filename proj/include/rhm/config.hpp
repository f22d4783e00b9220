#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "rhm/contrastive.hpp"
#include "rhm/encoders.hpp"
#include "rhm/error.hpp"
#include "rhm/helm.hpp"
#include "rhm/ocsvm.hpp"
#include "rhm/toydata.hpp"
#include "rhm/wheelsim.hpp"

namespace rhm {

using json = nlohmann::json;

enum class Task { WheelUnsupervised, SupervisedToy };

// Recipe the CLI expands into a concrete FleetConfig: counts per split and
// fault kind plus the physical ranges. Faults land on test wheels only.
struct SimulatorConfig {
    int train_wheels = 16;
    int test_healthy_wheels = 10;
    int test_shelling_wheels = 10;
    int test_crack_wheels = 10;
    int test_flat_wheels = 0;
    int monitoring_days = 120;
    double passes_per_day = 5.0;
    double speed_min_kmh = 40.0, speed_max_kmh = 120.0;
    double load_min = 80.0, load_max = 120.0;
    int checkpoints = 4;
    double gain_sigma = 0.03;
    double noise_level = 0.02;
    int fault_onset_min = 30, fault_onset_max = 60;
    int fault_orange_min = 20, fault_orange_max = 40;
    double harmonic_amp = 0.02;
    double harmonic_spread = 0.5;
    double polygon_jitter = 0.2;
    double degradation_rate = 6e-4;
    double rotation_jitter = 1.0;
    FaultShape fault_shape;

    int total_wheels() const {
        return train_wheels + test_healthy_wheels + test_shelling_wheels + test_crack_wheels +
               test_flat_wheels;
    }
};

struct ThresholdConfig {
    double health = 0.88;
    double dyncoeff = 1.8;
};

struct ExperimentConfig {
    Task task = Task::WheelUnsupervised;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string dataset_path;  // optional; empty means `run` simulates
    std::string out_dir = "out";
    SimulatorConfig simulator;
    WheelEncoderConfig encoder;
    SupervisedHeadConfig head;
    TrainSpec train;
    int bucket_days = 30;
    int max_train_samples = 4800;       // encoder training subsample cap (0 = all)
    OcSvmConfig ocsvm;
    int ocsvm_max_features = 3000;
    HelmConfig helm;
    int helm_max_signals = 2400;
    std::vector<std::string> detectors = {"contrastive-ocsvm", "helm", "dyncoeff", "ensemble"};
    ThresholdConfig thresholds;
    int detection_window = 5;
    ToyConfig toy;
    bool plots = false;

    bool detector_selected(const std::string& name) const {
        for (const auto& d : detectors)
            if (d == name) return true;
        return false;
    }

    void validate() const {
        if (!seed_set) throw ConfigError("config: \"seed\" is mandatory");
        if (detectors.empty()) throw ConfigError("config: no detectors selected");
        for (const auto& d : detectors) {
            if (d != "contrastive-ocsvm" && d != "helm" && d != "dyncoeff" && d != "ensemble")
                throw ConfigError("config: unknown detector \"" + d + "\"");
        }
        if (detector_selected("ensemble") &&
            !(detector_selected("contrastive-ocsvm") && detector_selected("helm")))
            throw ConfigError("config: ensemble requires both contrastive-ocsvm and helm");
        if (detection_window < 1) throw ConfigError("config: detection window must be >= 1");
        encoder.validate();
        if (task == Task::SupervisedToy) {
            head.validate();
            toy.validate();
        }
    }
};

namespace cfgdetail {

inline void reject_unknown_keys(const json& obj, const std::string& context,
                                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + key + "\" in " + context);
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline void read_range(const json& obj, const char* key, double& lo, double& hi) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2)
        throw ConfigError(std::string("config: \"") + key + "\" must be [min, max]");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
}

inline void read_range_int(const json& obj, const char* key, int& lo, int& hi) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2)
        throw ConfigError(std::string("config: \"") + key + "\" must be [min, max]");
    lo = v[0].get<int>();
    hi = v[1].get<int>();
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const json& root) {
    using namespace cfgdetail;
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(root, "top level",
                        {"task", "seed", "dataset", "out", "simulator", "encoder", "head", "train",
                         "ocsvm", "helm", "detectors", "thresholds", "detection_window", "toy",
                         "plots"});
    ExperimentConfig cfg;
    if (root.contains("task")) {
        const std::string task = root.at("task").get<std::string>();
        if (task == "wheel-unsupervised")
            cfg.task = Task::WheelUnsupervised;
        else if (task == "supervised-toy")
            cfg.task = Task::SupervisedToy;
        else
            throw ConfigError("config: unknown task \"" + task + "\"");
    }
    if (root.contains("seed")) {
        cfg.seed = root.at("seed").get<uint64_t>();
        cfg.seed_set = true;
    }
    read_if(root, "dataset", cfg.dataset_path);
    read_if(root, "out", cfg.out_dir);
    read_if(root, "plots", cfg.plots);

    if (root.contains("simulator")) {
        const auto& s = root.at("simulator");
        reject_unknown_keys(s, "\"simulator\"",
                            {"train_wheels", "test_healthy_wheels", "test_shelling_wheels",
                             "test_crack_wheels", "test_flat_wheels", "monitoring_days",
                             "passes_per_day", "speed_kmh", "load", "checkpoints", "gain_sigma",
                             "noise_level", "fault_onset_day", "fault_orange_days", "harmonic_amp",
                             "harmonic_spread", "polygon_jitter", "degradation_rate", "rotation_jitter",
                             "fault_shape"});
        read_if(s, "train_wheels", cfg.simulator.train_wheels);
        read_if(s, "test_healthy_wheels", cfg.simulator.test_healthy_wheels);
        read_if(s, "test_shelling_wheels", cfg.simulator.test_shelling_wheels);
        read_if(s, "test_crack_wheels", cfg.simulator.test_crack_wheels);
        read_if(s, "test_flat_wheels", cfg.simulator.test_flat_wheels);
        read_if(s, "monitoring_days", cfg.simulator.monitoring_days);
        read_if(s, "passes_per_day", cfg.simulator.passes_per_day);
        read_range(s, "speed_kmh", cfg.simulator.speed_min_kmh, cfg.simulator.speed_max_kmh);
        read_range(s, "load", cfg.simulator.load_min, cfg.simulator.load_max);
        read_if(s, "checkpoints", cfg.simulator.checkpoints);
        read_if(s, "gain_sigma", cfg.simulator.gain_sigma);
        read_if(s, "noise_level", cfg.simulator.noise_level);
        read_range_int(s, "fault_onset_day", cfg.simulator.fault_onset_min,
                       cfg.simulator.fault_onset_max);
        read_range_int(s, "fault_orange_days", cfg.simulator.fault_orange_min,
                       cfg.simulator.fault_orange_max);
        read_if(s, "harmonic_amp", cfg.simulator.harmonic_amp);
        read_if(s, "harmonic_spread", cfg.simulator.harmonic_spread);
        read_if(s, "polygon_jitter", cfg.simulator.polygon_jitter);
        read_if(s, "degradation_rate", cfg.simulator.degradation_rate);
        read_if(s, "rotation_jitter", cfg.simulator.rotation_jitter);
        if (s.contains("fault_shape")) {
            const auto& f = s.at("fault_shape");
            reject_unknown_keys(f, "\"fault_shape\"",
                                {"shelling_amp", "shelling_sigma", "crack_amp", "crack_sigma",
                                 "flat_amp", "flat_sigma"});
            read_if(f, "shelling_amp", cfg.simulator.fault_shape.shelling_amp);
            read_if(f, "shelling_sigma", cfg.simulator.fault_shape.shelling_sigma);
            read_if(f, "crack_amp", cfg.simulator.fault_shape.crack_amp);
            read_if(f, "crack_sigma", cfg.simulator.fault_shape.crack_sigma);
            read_if(f, "flat_amp", cfg.simulator.fault_shape.flat_amp);
            read_if(f, "flat_sigma", cfg.simulator.fault_shape.flat_sigma);
        }
    }

    if (root.contains("encoder")) {
        const auto& e = root.at("encoder");
        reject_unknown_keys(e, "\"encoder\"",
                            {"conv_layers", "filters", "kernel_size", "activation_slope",
                             "feature_dim", "input_length"});
        read_if(e, "conv_layers", cfg.encoder.conv_layers);
        read_if(e, "filters", cfg.encoder.filters_per_layer);
        read_if(e, "kernel_size", cfg.encoder.kernel_size);
        read_if(e, "activation_slope", cfg.encoder.activation_slope);
        read_if(e, "feature_dim", cfg.encoder.feature_dim);
        read_if(e, "input_length", cfg.encoder.input_length);
    }

    if (root.contains("head")) {
        const auto& h = root.at("head");
        reject_unknown_keys(h, "\"head\"", {"hidden_dims", "triplet_layer_dim", "output_categories"});
        read_if(h, "hidden_dims", cfg.head.hidden_dims);
        read_if(h, "triplet_layer_dim", cfg.head.triplet_layer_dim);
        read_if(h, "output_categories", cfg.head.output_categories);
    }

    if (root.contains("train")) {
        const auto& t = root.at("train");
        reject_unknown_keys(t, "\"train\"",
                            {"margin", "epochs", "batch_size", "optimizer", "learning_rate",
                             "bucket_days", "max_train_samples"});
        read_if(t, "margin", cfg.train.margin);
        read_if(t, "epochs", cfg.train.epochs);
        read_if(t, "batch_size", cfg.train.batch_size);
        if (t.contains("optimizer")) {
            const std::string opt = t.at("optimizer").get<std::string>();
            if (opt == "sgd")
                cfg.train.optimizer = OptimizerKind::Sgd;
            else if (opt == "adam")
                cfg.train.optimizer = OptimizerKind::Adam;
            else
                throw ConfigError("config: unknown optimizer \"" + opt + "\"");
        }
        read_if(t, "learning_rate", cfg.train.learning_rate);
        read_if(t, "bucket_days", cfg.bucket_days);
        read_if(t, "max_train_samples", cfg.max_train_samples);
    }

    if (root.contains("ocsvm")) {
        const auto& o = root.at("ocsvm");
        reject_unknown_keys(o, "\"ocsvm\"",
                            {"nu", "gamma", "gamma_scale", "tolerance", "max_train_features"});
        read_if(o, "nu", cfg.ocsvm.nu);
        if (o.contains("gamma")) {
            const auto& g = o.at("gamma");
            if (g.is_string()) {
                if (g.get<std::string>() != "median")
                    throw ConfigError("config: gamma must be a number or \"median\"");
                cfg.ocsvm.gamma = 0.0;
            } else {
                cfg.ocsvm.gamma = g.get<double>();
            }
        }
        read_if(o, "gamma_scale", cfg.ocsvm.gamma_scale);
        read_if(o, "tolerance", cfg.ocsvm.tolerance);
        read_if(o, "max_train_features", cfg.ocsvm_max_features);
    }

    if (root.contains("helm")) {
        const auto& h = root.at("helm");
        reject_unknown_keys(h, "\"helm\"",
                            {"layers", "occ_units", "ridge_c", "l1_lambda", "max_train_signals"});
        read_if(h, "layers", cfg.helm.layer_units);
        read_if(h, "occ_units", cfg.helm.occ_units);
        read_if(h, "ridge_c", cfg.helm.ridge_c);
        read_if(h, "l1_lambda", cfg.helm.l1_lambda);
        read_if(h, "max_train_signals", cfg.helm_max_signals);
    }

    read_if(root, "detectors", cfg.detectors);

    if (root.contains("thresholds")) {
        const auto& t = root.at("thresholds");
        reject_unknown_keys(t, "\"thresholds\"", {"health", "dyncoeff"});
        read_if(t, "health", cfg.thresholds.health);
        read_if(t, "dyncoeff", cfg.thresholds.dyncoeff);
    }
    read_if(root, "detection_window", cfg.detection_window);

    if (root.contains("toy")) {
        const auto& t = root.at("toy");
        reject_unknown_keys(t, "\"toy\"",
                            {"signal_length", "train_per_class", "test_per_class", "class_amp",
                             "confounder_amp", "noise", "correlation"});
        read_if(t, "signal_length", cfg.toy.signal_length);
        read_if(t, "train_per_class", cfg.toy.train_per_class);
        read_if(t, "test_per_class", cfg.toy.test_per_class);
        read_if(t, "class_amp", cfg.toy.class_amp);
        read_if(t, "confounder_amp", cfg.toy.confounder_amp);
        read_if(t, "noise", cfg.toy.noise);
        read_if(t, "correlation", cfg.toy.correlation);
    }

    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config: invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_config(root);
}

// Expands the recipe into a concrete fleet: train wheels first, then healthy
// test wheels, then shelling / crack / flat wheels with seeded fault windows.
inline FleetConfig make_fleet_config(const SimulatorConfig& sim, uint64_t seed) {
    FleetConfig fc;
    fc.n_wheels = sim.total_wheels();
    fc.monitoring_days = sim.monitoring_days;
    fc.passes_per_day_mean = sim.passes_per_day;
    fc.speed_min_kmh = sim.speed_min_kmh;
    fc.speed_max_kmh = sim.speed_max_kmh;
    fc.load_min = sim.load_min;
    fc.load_max = sim.load_max;
    fc.checkpoint_count = sim.checkpoints;
    fc.gain_sigma = sim.gain_sigma;
    fc.noise_level = sim.noise_level;
    fc.harmonic_amp = sim.harmonic_amp;
    fc.harmonic_spread = sim.harmonic_spread;
    fc.polygon_jitter = sim.polygon_jitter;
    fc.degradation_rate = sim.degradation_rate;
    fc.rotation_jitter = sim.rotation_jitter;
    fc.fault_shape = sim.fault_shape;

    Rng rng = Rng(seed).derive(0xFA171ULL);
    uint32_t wheel = static_cast<uint32_t>(sim.train_wheels + sim.test_healthy_wheels);
    auto add_faults = [&](int count, FaultKind kind) {
        for (int i = 0; i < count; ++i) {
            FaultAssignment f;
            f.wheel_id = wheel++;
            f.kind = kind;
            f.onset_day = sim.fault_onset_min +
                          static_cast<int>(rng.uniform_index(
                              static_cast<uint64_t>(sim.fault_onset_max - sim.fault_onset_min + 1)));
            f.manifest_day =
                f.onset_day + sim.fault_orange_min +
                static_cast<int>(rng.uniform_index(
                    static_cast<uint64_t>(sim.fault_orange_max - sim.fault_orange_min + 1)));
            fc.faults.push_back(f);
        }
    };
    add_faults(sim.test_shelling_wheels, FaultKind::Shelling);
    add_faults(sim.test_crack_wheels, FaultKind::Crack);
    add_faults(sim.test_flat_wheels, FaultKind::Flat);
    return fc;
}

}  // namespace rhm

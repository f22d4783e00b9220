#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhm/checkpoint.hpp"
#include "rhm/config.hpp"
#include "rhm/contrastive.hpp"
#include "rhm/detection.hpp"
#include "rhm/encoders.hpp"
#include "rhm/evaluation.hpp"
#include "rhm/helm.hpp"
#include "rhm/io/csv.hpp"
#include "rhm/io/dataset.hpp"
#include "rhm/io/svg.hpp"
#include "rhm/ocsvm.hpp"
#include "rhm/parallel.hpp"
#include "rhm/signal_prep.hpp"
#include "rhm/toydata.hpp"
#include "rhm/wheelsim.hpp"

namespace rhm {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct PipelinePaths {
    fs::path out;
    fs::path dataset;
    fs::path prepared;
    fs::path model;
    fs::path loss_history;
    fs::path health;
    fs::path detections;
    fs::path report_json;
    fs::path report_text;
    fs::path plots;
};

inline PipelinePaths pipeline_paths(const ExperimentConfig& cfg) {
    PipelinePaths p;
    p.out = cfg.out_dir;
    p.dataset = cfg.dataset_path.empty() ? p.out / "dataset" : fs::path(cfg.dataset_path);
    p.prepared = p.out / "prepared";
    p.model = p.out / "model.rhm";
    p.loss_history = p.out / "loss_history.csv";
    p.health = p.out / "health.csv";
    p.detections = p.out / "detections.json";
    p.report_json = p.out / "report.json";
    p.report_text = p.out / "report.txt";
    p.plots = p.out / "plots";
    return p;
}

namespace pipedetail {

// Manifest-only view of the dataset (no measurement payloads).
struct ManifestWheel {
    uint32_t wheel_id = 0;
    Split split = Split::Train;
    std::optional<FaultAssignment> fault;
    std::optional<ZoneAnnotation> annotation;
};

struct ManifestView {
    int monitoring_days = 0;
    std::vector<int> workshop_visits;
    std::vector<ManifestWheel> wheels;
};

inline ManifestView load_manifest(const fs::path& root) {
    std::ifstream in(root / "manifest.json");
    if (!in) throw IoError("cannot open " + (root / "manifest.json").string());
    ordered_json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest: " + std::string(e.what()));
    }
    ManifestView view;
    view.monitoring_days = manifest.at("monitoring_days").get<int>();
    view.workshop_visits = manifest.at("workshop_visits").get<std::vector<int>>();
    for (const auto& entry : manifest.at("wheels")) {
        ManifestWheel w;
        w.wheel_id = entry.at("id").get<uint32_t>();
        w.split = entry.at("split").get<std::string>() == "train" ? Split::Train : Split::Test;
        if (!entry.at("fault").is_null()) {
            const auto& f = entry.at("fault");
            w.fault = FaultAssignment{w.wheel_id, fault_kind_from(f.at("kind").get<std::string>()),
                                      f.at("onset_day").get<int>(), f.at("manifest_day").get<int>()};
            const auto& a = entry.at("annotation");
            w.annotation =
                ZoneAnnotation{a.at("green_end_day").get<int>(), a.at("red_start_day").get<int>(),
                               a.at("monitoring_end_day").get<int>()};
        }
        view.wheels.push_back(w);
    }
    return view;
}

inline fs::path prepared_file(const PipelinePaths& paths, uint32_t wheel_id) {
    return paths.prepared / ("wheel_" + std::to_string(wheel_id) + ".psg");
}

// Deterministic size cap: evenly strided selection, order preserved.
template <typename T>
std::vector<T> strided_cap(std::vector<T> items, int cap) {
    if (cap <= 0 || static_cast<int>(items.size()) <= cap) return items;
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(cap));
    const double stride = static_cast<double>(items.size()) / cap;
    for (int i = 0; i < cap; ++i) out.push_back(items[static_cast<std::size_t>(i * stride)]);
    return out;
}

struct TrainInputs {
    std::vector<std::vector<float>> signals;
    std::vector<PairLabel> labels;
};

inline TrainInputs load_train_inputs(const ExperimentConfig& cfg, const PipelinePaths& paths,
                                     const ManifestView& manifest, int cap) {
    struct Tagged {
        std::vector<float> signal;
        PairLabel label;
    };
    std::vector<Tagged> all;
    for (const auto& w : manifest.wheels) {
        if (w.split != Split::Train) continue;
        auto prepared = io::read_prepared(prepared_file(paths, w.wheel_id), w.wheel_id);
        std::vector<uint64_t> times;
        times.reserve(prepared.size());
        for (const auto& p : prepared) times.push_back(p.timestamp);
        const auto labels = temporal_pair_labels_from_times(w.wheel_id, times,
                                                            manifest.workshop_visits,
                                                            cfg.bucket_days);
        for (std::size_t i = 0; i < prepared.size(); ++i)
            all.push_back({std::move(prepared[i].values), labels[i].label});
    }
    if (all.empty()) throw DataError("no prepared training signals found; run prep first");
    all = strided_cap(std::move(all), cap);
    TrainInputs out;
    out.signals.reserve(all.size());
    out.labels.reserve(all.size());
    for (auto& t : all) {
        out.signals.push_back(std::move(t.signal));
        out.labels.push_back(t.label);
    }
    return out;
}

struct ModelBundle {
    std::optional<Network<float>> encoder;
    std::optional<OcSvmModel> ocsvm;
    std::optional<HelmModel> helm;
};

inline ModelBundle load_models(const PipelinePaths& paths) {
    ModelBundle bundle;
    const auto ckpt = Checkpoint::load(paths.model);
    if (ckpt.has("NETW")) bundle.encoder = decode_network(ckpt.section("NETW"));
    if (ckpt.has("OCSV")) bundle.ocsvm = decode_ocsvm(ckpt.section("OCSV"));
    if (ckpt.has("HELM")) bundle.helm = decode_helm(ckpt.section("HELM"));
    return bundle;
}

}  // namespace pipedetail

// ---------------------------------------------------------------------------
// Pipeline stages (wheel task). Each stage reads its inputs from and writes
// its outputs to the run directory, so CLI subcommands compose the same way
// `run` does.

inline void stage_simulate(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const FleetConfig fleet_cfg = make_fleet_config(cfg.simulator, cfg.seed);
    Fleet fleet = simulate_fleet(fleet_cfg, cfg.seed);
    for (auto& w : fleet.wheels)
        w.split = w.wheel_id < static_cast<uint32_t>(cfg.simulator.train_wheels) ? Split::Train
                                                                                 : Split::Test;
    io::write_dataset(paths.dataset, fleet);
}

inline void stage_prep(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const Fleet fleet = io::load_dataset(paths.dataset);
    std::vector<std::vector<PreparedSignal>> prepared(fleet.wheels.size());
    parallel_for(fleet.wheels.size(), [&](std::size_t w) {
        prepared[w].reserve(fleet.wheels[w].measurements.size());
        for (const auto& m : fleet.wheels[w].measurements) prepared[w].push_back(prepare(m));
    });
    for (std::size_t w = 0; w < fleet.wheels.size(); ++w)
        io::write_prepared(pipedetail::prepared_file(paths, fleet.wheels[w].wheel_id), prepared[w]);
}

inline std::vector<EpochStats> stage_train(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    if (cfg.encoder.input_length != kPreparedLength)
        throw ConfigError("wheel task: encoder input_length must equal " +
                          std::to_string(kPreparedLength));
    const auto manifest = pipedetail::load_manifest(paths.dataset);
    auto inputs = pipedetail::load_train_inputs(cfg, paths, manifest, cfg.max_train_samples);

    Network<float> encoder = build_wheel_encoder(cfg.encoder, cfg.seed);
    TrainSpec spec = cfg.train;
    spec.seed = cfg.seed;
    const auto history = train_contrastive(encoder, inputs.signals, inputs.labels, spec);

    Checkpoint ckpt;
    if (fs::exists(paths.model)) ckpt = Checkpoint::load(paths.model);
    ckpt.sections["NETW"] = encode_network(encoder);
    ckpt.save(paths.model);
    io::write_loss_history(paths.loss_history, history);
    return history;
}

inline void stage_fit_occ(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const auto manifest = pipedetail::load_manifest(paths.dataset);
    auto ckpt = Checkpoint::load(paths.model);
    const Network<float> encoder = decode_network(ckpt.section("NETW"));

    auto inputs = pipedetail::load_train_inputs(cfg, paths, manifest, cfg.ocsvm_max_features);
    std::vector<std::vector<float>> features(inputs.signals.size());
    parallel_for(inputs.signals.size(),
                 [&](std::size_t i) { features[i] = encode(encoder, inputs.signals[i]); });
    const OcSvmModel model = fit_ocsvm(features, cfg.ocsvm);
    ckpt.sections["OCSV"] = encode_ocsvm(model);
    ckpt.save(paths.model);
}

inline void stage_fit_helm(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const auto manifest = pipedetail::load_manifest(paths.dataset);
    auto inputs = pipedetail::load_train_inputs(cfg, paths, manifest, cfg.helm_max_signals);
    const HelmModel model = fit_helm(inputs.signals, cfg.helm, cfg.seed);
    Checkpoint ckpt;
    if (fs::exists(paths.model)) ckpt = Checkpoint::load(paths.model);
    ckpt.sections["HELM"] = encode_helm(model);
    ckpt.save(paths.model);
}

inline void stage_score(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const auto manifest = pipedetail::load_manifest(paths.dataset);
    const auto models = pipedetail::load_models(paths);
    const bool want_contrastive = cfg.detector_selected("contrastive-ocsvm");
    const bool want_helm = cfg.detector_selected("helm");
    const bool want_dyn = cfg.detector_selected("dyncoeff");
    if (want_contrastive && (!models.encoder || !models.ocsvm))
        throw ConfigError("score: contrastive-ocsvm selected but the model lacks NETW/OCSV; run "
                          "train and fit-occ first");
    if (want_helm && !models.helm)
        throw ConfigError("score: helm selected but the model lacks a HELM section; run fit-helm");

    std::vector<const pipedetail::ManifestWheel*> test_wheels;
    for (const auto& w : manifest.wheels)
        if (w.split == Split::Test) test_wheels.push_back(&w);

    std::vector<std::vector<io::HealthRow>> rows(test_wheels.size());
    parallel_for(test_wheels.size(), [&](std::size_t t) {
        const auto& w = *test_wheels[t];
        const auto prepared = io::read_prepared(pipedetail::prepared_file(paths, w.wheel_id),
                                                w.wheel_id);
        for (const auto& p : prepared) {
            if (want_dyn)
                rows[t].push_back({w.wheel_id, p.timestamp, "dyncoeff", dyn_coeff(p.values)});
            if (want_contrastive) {
                const auto feature = encode(*models.encoder, p.values);
                rows[t].push_back({w.wheel_id, p.timestamp, "contrastive-ocsvm",
                                   health_index(*models.ocsvm, feature)});
            }
            if (want_helm)
                rows[t].push_back({w.wheel_id, p.timestamp, "helm",
                                   helm_health(*models.helm, p.values)});
        }
    });
    std::vector<io::HealthRow> flat;
    for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    io::write_health_csv(paths.health, flat);
}

inline void stage_detect(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const auto rows = io::read_health_csv(paths.health);

    std::map<uint32_t, std::map<std::string, HealthSeries>> by_wheel;
    for (const auto& r : rows) {
        auto& series = by_wheel[r.wheel_id][r.detector];
        series.wheel_id = r.wheel_id;
        series.points.push_back({r.timestamp, r.value});
    }

    ordered_json out = ordered_json::array();
    for (auto& [wheel_id, detectors] : by_wheel) {
        std::map<std::string, DetectionResult> results;
        for (auto& [name, series] : detectors) {
            const double threshold =
                name == "dyncoeff" ? cfg.thresholds.dyncoeff : cfg.thresholds.health;
            results[name] = detect(series, threshold, name, cfg.detection_window);
        }
        if (cfg.detector_selected("ensemble")) {
            results["ensemble"] = ensemble_or(
                {results.at("contrastive-ocsvm"), results.at("helm")}, "ensemble");
        }
        for (const auto& [name, result] : results) {
            ordered_json entry;
            entry["wheel_id"] = result.wheel_id;
            entry["detector"] = name;
            entry["flagged"] = result.flagged;
            if (result.flagged)
                entry["detection_timestamp"] = *result.detection_timestamp;
            else
                entry["detection_timestamp"] = nullptr;
            out.push_back(entry);
        }
    }
    atomic_write_text(paths.detections, out.dump(2) + "\n");
}

namespace pipedetail {

inline ordered_json confusion_json(const Confusion2& c) {
    return ordered_json{{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

inline ordered_json zones_json(const ZoneHistogram& z) {
    return ordered_json{{"green", z.green}, {"orange", z.orange}, {"red", z.red}};
}

inline ordered_json report_to_json(const ExperimentConfig& cfg, const ManifestView& manifest,
                                   const EvalReport& report) {
    ordered_json j;
    j["task"] = "wheel-unsupervised";
    j["seed"] = cfg.seed;
    int train_wheels = 0, test_wheels = 0;
    for (const auto& w : manifest.wheels)
        (w.split == Split::Train ? train_wheels : test_wheels) += 1;
    j["dataset"] = {{"wheels", manifest.wheels.size()},
                    {"train_wheels", train_wheels},
                    {"test_wheels", test_wheels},
                    {"defective_wheels", report.defective_wheels},
                    {"healthy_test_wheels", report.healthy_wheels},
                    {"monitoring_days", manifest.monitoring_days}};
    j["thresholds"] = {{"health", cfg.thresholds.health}, {"dyncoeff", cfg.thresholds.dyncoeff}};
    ordered_json detectors = ordered_json::array();
    for (const auto& d : report.detectors) {
        ordered_json dj;
        dj["name"] = d.detector;
        dj["confusion"] = confusion_json(d.confusion);
        if (d.balanced_accuracy)
            dj["balanced_accuracy"] = *d.balanced_accuracy;
        else
            dj["balanced_accuracy"] = nullptr;
        dj["zones"] = zones_json(d.zones);
        dj["dr_buckets"] = {{"below_0.1", d.dr_buckets.below_01},
                            {"upto_0.5", d.dr_buckets.upto_05},
                            {"above_0.5", d.dr_buckets.above_05}};
        ordered_json per_kind = ordered_json::object();
        for (const auto& [kind, conf] : d.per_kind) {
            ordered_json kj;
            kj["tp"] = conf.tp;
            kj["fn"] = conf.fn;
            auto it = d.per_kind_zones.find(kind);
            kj["zones"] = it != d.per_kind_zones.end() ? zones_json(it->second)
                                                       : zones_json(ZoneHistogram{});
            per_kind[kind] = kj;
        }
        dj["per_kind"] = per_kind;
        ordered_json wheels = ordered_json::array();
        for (const auto& w : d.wheels) {
            ordered_json wj;
            wj["id"] = w.wheel_id;
            wj["defective"] = w.defective;
            wj["kind"] = w.kind ? ordered_json(fault_kind_name(*w.kind)) : ordered_json(nullptr);
            wj["flagged"] = w.flagged;
            wj["detection_day"] = w.detection_day ? ordered_json(*w.detection_day)
                                                  : ordered_json(nullptr);
            if (w.delay && w.flagged) {
                wj["zone"] = zone_name(w.delay->zone);
                wj["dt_days"] = w.delay->dt_days;
                wj["dr"] = w.delay->dr ? ordered_json(*w.delay->dr) : ordered_json(nullptr);
            } else if (w.defective) {
                wj["zone"] = "missed";
            }
            wheels.push_back(wj);
        }
        dj["wheels"] = wheels;
        detectors.push_back(dj);
    }
    j["detectors"] = detectors;
    return j;
}

inline std::string report_to_text(const EvalReport& report) {
    char buf[256];
    std::string out;
    out += "Anomaly detection results (wheel level)\n";
    out += "----------------------------------------\n";
    out += "detector             TP   FN   FP   TN   balanced accuracy\n";
    for (const auto& d : report.detectors) {
        std::snprintf(buf, sizeof(buf), "%-20s %3d  %3d  %3d  %3d   %s\n", d.detector.c_str(),
                      d.confusion.tp, d.confusion.fn, d.confusion.fp, d.confusion.tn,
                      d.balanced_accuracy
                          ? (std::to_string(*d.balanced_accuracy * 100.0).substr(0, 5) + "%").c_str()
                          : "n/a");
        out += buf;
    }
    out += "\nDetection time (true positives by zone; dr buckets for late detections)\n";
    out += "-----------------------------------------------------------------------\n";
    out += "detector             kind       FN  TP   dt<0  dt=0  dt>0   dr<0.1  dr<=0.5  dr>0.5\n";
    for (const auto& d : report.detectors) {
        for (const auto& [kind, conf] : d.per_kind) {
            ZoneHistogram z;
            auto it = d.per_kind_zones.find(kind);
            if (it != d.per_kind_zones.end()) z = it->second;
            std::snprintf(buf, sizeof(buf), "%-20s %-9s %3d %3d   %4d  %4d  %4d\n",
                          d.detector.c_str(), kind.c_str(), conf.fn, conf.tp, z.green, z.orange,
                          z.red);
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%-20s %-9s %3d %3d   %4d  %4d  %4d   %6d  %7d  %6d\n",
                      d.detector.c_str(), "all", d.confusion.fn, d.confusion.tp, d.zones.green,
                      d.zones.orange, d.zones.red, d.dr_buckets.below_01, d.dr_buckets.upto_05,
                      d.dr_buckets.above_05);
        out += buf;
    }
    return out;
}

}  // namespace pipedetail

inline EvalReport stage_evaluate(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    const auto manifest = pipedetail::load_manifest(paths.dataset);

    std::ifstream in(paths.detections);
    if (!in) throw IoError("cannot open " + paths.detections.string() + "; run detect first");
    ordered_json det_json;
    in >> det_json;
    std::map<std::string, std::vector<DetectionResult>> detections;
    for (const auto& entry : det_json) {
        DetectionResult r;
        r.wheel_id = entry.at("wheel_id").get<uint32_t>();
        r.detector = entry.at("detector").get<std::string>();
        r.flagged = entry.at("flagged").get<bool>();
        if (!entry.at("detection_timestamp").is_null())
            r.detection_timestamp = entry.at("detection_timestamp").get<uint64_t>();
        detections[r.detector].push_back(r);
    }

    std::vector<GroundTruthWheel> truth;
    for (const auto& w : manifest.wheels) {
        if (w.split != Split::Test) continue;
        GroundTruthWheel gt;
        gt.wheel_id = w.wheel_id;
        gt.fault = w.fault;
        gt.annotation = w.annotation;
        truth.push_back(gt);
    }

    const EvalReport report = build_report(detections, truth);
    atomic_write_text(paths.report_json,
                      pipedetail::report_to_json(cfg, manifest, report).dump(2) + "\n");
    atomic_write_text(paths.report_text, pipedetail::report_to_text(report));

    if (cfg.plots) {
        const auto rows = io::read_health_csv(paths.health);
        std::map<uint32_t, std::map<std::string, std::vector<std::pair<double, double>>>> series;
        for (const auto& r : rows)
            series[r.wheel_id][r.detector].push_back(
                {static_cast<double>(r.timestamp) / kSecondsPerDay, r.value});
        for (const auto& w : manifest.wheels) {
            if (w.split != Split::Test) continue;
            auto it = series.find(w.wheel_id);
            if (it == series.end()) continue;
            io::write_health_svg(paths.plots / ("wheel_" + std::to_string(w.wheel_id) + ".svg"),
                                 w.wheel_id, it->second, w.annotation, cfg.thresholds.health,
                                 manifest.monitoring_days);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Supervised toy task: phase 1 trains the trunk with triplets on the 8-dim
// layer, phase 2 trains the classification layer on frozen features. The
// cross-entropy baseline shares the architecture and hyperparameters.

struct ToyRunResult {
    std::vector<std::vector<int>> confusion_contrastive{3, std::vector<int>(3, 0)};
    std::vector<std::vector<int>> confusion_baseline{3, std::vector<int>(3, 0)};
    double ba_contrastive = 0.0;
    double ba_baseline = 0.0;
};

inline ToyRunResult run_toy(const ExperimentConfig& cfg) {
    const auto paths = pipeline_paths(cfg);
    if (cfg.encoder.input_length != cfg.toy.signal_length)
        throw ConfigError("supervised-toy: encoder input_length must equal toy signal_length");
    const ToyDataset ds = make_toy_dataset(cfg.toy, cfg.seed);

    std::vector<std::vector<float>> train_signals;
    std::vector<PairLabel> train_pairs;
    std::vector<int> train_labels;
    for (const auto& s : ds.train) {
        train_signals.push_back(s.signal);
        train_pairs.push_back(PairLabel::from_class(s.label));
        train_labels.push_back(s.label);
    }

    // phase 1: triplet loss on the trunk's 8-dim output, all parameters
    Network<float> trunk = build_supervised_trunk(cfg.encoder, cfg.head, cfg.seed);
    TrainSpec phase1 = cfg.train;
    phase1.seed = cfg.seed;
    const auto history = train_contrastive(trunk, train_signals, train_pairs, phase1);
    io::write_loss_history(paths.loss_history, history);

    // phase 2: classifier layer on frozen triplet features
    std::vector<std::vector<float>> train_features(train_signals.size());
    parallel_for(train_signals.size(),
                 [&](std::size_t i) { train_features[i] = encode(trunk, train_signals[i]); });
    Network<float> head = build_classifier_head(cfg.head, Rng(cfg.seed).derive(2).seed());
    TrainSpec phase2 = cfg.train;
    phase2.seed = Rng(cfg.seed).derive(3).seed();
    train_cross_entropy(head, train_features, train_labels, phase2);

    // comparison model: identical architecture, cross-entropy on the last layer
    Network<float> baseline = build_supervised_model(cfg.encoder, cfg.head, cfg.seed);
    TrainSpec base_spec = cfg.train;
    base_spec.seed = Rng(cfg.seed).derive(4).seed();
    train_cross_entropy(baseline, train_signals, train_labels, base_spec);

    Checkpoint ckpt;
    ckpt.sections["NETW"] = encode_network(trunk);
    ckpt.sections["HEAD"] = encode_network(head);
    ckpt.sections["BASE"] = encode_network(baseline);
    ckpt.save(paths.model);

    ToyRunResult result;
    auto argmax = [](const std::vector<float>& p) {
        int best = 0;
        for (int c = 1; c < static_cast<int>(p.size()); ++c)
            if (p[c] > p[best]) best = c;
        return best;
    };
    std::vector<int> pred_c(ds.test.size()), pred_b(ds.test.size());
    parallel_for(ds.test.size(), [&](std::size_t i) {
        pred_c[i] = argmax(classify(head, encode(trunk, ds.test[i].signal)));
        Tensor<float> in = Tensor<float>::from(baseline.input_shape, ds.test[i].signal);
        pred_b[i] = argmax(forward(baseline, in).data);
    });
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
        result.confusion_contrastive[ds.test[i].label][pred_c[i]] += 1;
        result.confusion_baseline[ds.test[i].label][pred_b[i]] += 1;
    }
    result.ba_contrastive = balanced_accuracy_multi(result.confusion_contrastive);
    result.ba_baseline = balanced_accuracy_multi(result.confusion_baseline);

    ordered_json j;
    j["task"] = "supervised-toy";
    j["seed"] = cfg.seed;
    j["dataset"] = {{"train_per_class", cfg.toy.train_per_class},
                    {"test_per_class", cfg.toy.test_per_class},
                    {"train_confounder_correlation", cfg.toy.correlation},
                    {"test_confounder", "shifted by one class"}};
    j["models"] = {{"contrastive",
                    {{"confusion", result.confusion_contrastive},
                     {"balanced_accuracy", result.ba_contrastive}}},
                   {"cross_entropy",
                    {{"confusion", result.confusion_baseline},
                     {"balanced_accuracy", result.ba_baseline}}}};
    atomic_write_text(paths.report_json, j.dump(2) + "\n");

    char buf[128];
    std::string text = "Supervised toy task: 3-class classification, confounder-shifted test\n";
    text += "---------------------------------------------------------------------\n";
    std::snprintf(buf, sizeof(buf), "contrastive (two-step):   balanced accuracy %.1f%%\n",
                  result.ba_contrastive * 100.0);
    text += buf;
    std::snprintf(buf, sizeof(buf), "cross-entropy (baseline): balanced accuracy %.1f%%\n",
                  result.ba_baseline * 100.0);
    text += buf;
    atomic_write_text(paths.report_text, text);
    return result;
}

// ---------------------------------------------------------------------------

template <typename Fn>
void run_stage(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        throw Error("stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error("stage " + name + ": " + e.what());
    }
}

// Full experiment: simulate/load -> prep -> train -> fit detectors -> score
// -> detect -> evaluate. Deterministic per seed; reports carry no wall-clock.
inline EvalReport run_pipeline(const ExperimentConfig& cfg) {
    if (cfg.task == Task::SupervisedToy) {
        run_toy(cfg);
        EvalReport empty;
        return empty;
    }
    const auto paths = pipeline_paths(cfg);
    if (cfg.dataset_path.empty() || !fs::exists(paths.dataset / "manifest.json"))
        run_stage("simulate", [&] { stage_simulate(cfg); });
    run_stage("prep", [&] { stage_prep(cfg); });
    run_stage("train", [&] { stage_train(cfg); });
    if (cfg.detector_selected("contrastive-ocsvm"))
        run_stage("fit-occ", [&] { stage_fit_occ(cfg); });
    if (cfg.detector_selected("helm"))
        run_stage("fit-helm", [&] { stage_fit_helm(cfg); });
    run_stage("score", [&] { stage_score(cfg); });
    run_stage("detect", [&] { stage_detect(cfg); });
    EvalReport report;
    run_stage("evaluate", [&] { report = stage_evaluate(cfg); });
    return report;
}

}  // namespace rhm

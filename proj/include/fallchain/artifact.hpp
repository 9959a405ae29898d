#pragma once

// Versioned JSON containers for trained models. Parameter vectors are stored
// as raw doubles (nlohmann serializes IEEE doubles losslessly, shortest
// round-trip), so save -> load -> forward is bit-identical.

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fallchain/common.hpp"
#include "fallchain/locmodel.hpp"
#include "fallchain/nnkernel.hpp"
#include "fallchain/preproc.hpp"
#include "fallchain/visionstage.hpp"

namespace fallchain {

inline constexpr int kArtifactVersion = 1;

inline nlohmann::json params_to_json(const ModelParams& p) {
    nlohmann::json j;
    j["version"] = p.version;
    j["layout"] = nlohmann::json::array();
    for (const auto& b : p.layout)
        j["layout"].push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    j["data"] = p.data;
    return j;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.version = j.at("version").get<int>();
    for (const auto& b : j.at("layout"))
        p.layout.push_back({b.at("name").get<std::string>(), b.at("rows").get<std::size_t>(),
                            b.at("cols").get<std::size_t>()});
    p.data = j.at("data").get<std::vector<double>>();
    return p;
}

inline nlohmann::json preproc_to_json(const PreprocConfig& c) {
    return {{"resample_hz", c.resample_hz}, {"window_len", c.window_len},
            {"step", c.step},               {"ewma_alpha", c.ewma_alpha},
            {"savgol_window", c.savgol_window}, {"savgol_order", c.savgol_order},
            {"ewma_enabled", c.ewma_enabled},   {"savgol_enabled", c.savgol_enabled},
            {"trim_margin", c.trim_margin}};
}

inline PreprocConfig preproc_from_json(const nlohmann::json& j) {
    PreprocConfig c;
    c.resample_hz = j.at("resample_hz").get<double>();
    c.window_len = j.at("window_len").get<std::size_t>();
    c.step = j.at("step").get<std::size_t>();
    c.ewma_alpha = j.at("ewma_alpha").get<double>();
    c.savgol_window = j.at("savgol_window").get<std::size_t>();
    c.savgol_order = j.at("savgol_order").get<std::size_t>();
    c.ewma_enabled = j.at("ewma_enabled").get<bool>();
    c.savgol_enabled = j.at("savgol_enabled").get<bool>();
    c.trim_margin = j.at("trim_margin").get<std::size_t>();
    return c;
}

inline nlohmann::json norm_to_json(const NormBounds& b) {
    nlohmann::json j;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        j["min"].push_back(b.min[c]);
        j["max"].push_back(b.max[c]);
        j["degenerate"].push_back(b.degenerate[c]);
    }
    return j;
}

inline NormBounds norm_from_json(const nlohmann::json& j) {
    NormBounds b;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        b.min[c] = j.at("min").at(c).get<double>();
        b.max[c] = j.at("max").at(c).get<double>();
        b.degenerate[c] = j.at("degenerate").at(c).get<bool>();
    }
    return b;
}

// ---- fall-detection artifacts ---------------------------------------------

struct FallEncoderArtifact {
    AutoencoderConfig arch;
    std::uint64_t init_seed = 1;
    ModelParams params;
    PreprocConfig preproc;
    NormBounds norm;
};

struct FallClassifierArtifact {
    FallEncoderArtifact encoder;
    ClassifierConfig head;
    std::uint64_t head_seed = 1;
    ModelParams params;  // full classifier layout (encoder + head)
};

inline nlohmann::json encoder_artifact_to_json(const FallEncoderArtifact& a) {
    nlohmann::json j;
    j["kind"] = "fall_encoder";
    j["artifact_version"] = kArtifactVersion;
    j["arch"]["hidden_sizes"] = a.arch.hidden_sizes;
    j["arch"]["input_channels"] = a.arch.input_channels;
    j["arch"]["cell_kind"] = a.arch.cell_kind == CellKind::gated ? "gated" : "simple_tanh";
    j["init_seed"] = a.init_seed;
    j["params"] = params_to_json(a.params);
    j["preproc"] = preproc_to_json(a.preproc);
    j["norm"] = norm_to_json(a.norm);
    return j;
}

inline FallEncoderArtifact encoder_artifact_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "fall_encoder")
        throw parse_error("artifact: expected kind fall_encoder");
    if (j.at("artifact_version").get<int>() != kArtifactVersion)
        throw parse_error("artifact: unsupported version");
    FallEncoderArtifact a;
    a.arch.hidden_sizes = j.at("arch").at("hidden_sizes").get<std::vector<std::size_t>>();
    a.arch.input_channels = j.at("arch").at("input_channels").get<std::size_t>();
    a.arch.cell_kind = j.at("arch").at("cell_kind").get<std::string>() == "gated"
                           ? CellKind::gated
                           : CellKind::simple_tanh;
    a.init_seed = j.at("init_seed").get<std::uint64_t>();
    a.params = params_from_json(j.at("params"));
    a.preproc = preproc_from_json(j.at("preproc"));
    a.norm = norm_from_json(j.at("norm"));
    return a;
}

inline AutoencoderModel restore_autoencoder(const FallEncoderArtifact& a) {
    AutoencoderModel m = AutoencoderModel::init(a.arch, a.init_seed);
    m.set_params(a.params);
    return m;
}

inline nlohmann::json classifier_artifact_to_json(const FallClassifierArtifact& a) {
    nlohmann::json j;
    j["kind"] = "fall_classifier";
    j["artifact_version"] = kArtifactVersion;
    j["encoder"] = encoder_artifact_to_json(a.encoder);
    j["head"]["head_hidden"] = a.head.head_hidden;
    j["head"]["num_classes"] = a.head.num_classes;
    j["head_seed"] = a.head_seed;
    j["params"] = params_to_json(a.params);
    return j;
}

inline FallClassifierArtifact classifier_artifact_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "fall_classifier")
        throw parse_error("artifact: expected kind fall_classifier");
    if (j.at("artifact_version").get<int>() != kArtifactVersion)
        throw parse_error("artifact: unsupported version");
    FallClassifierArtifact a;
    a.encoder = encoder_artifact_from_json(j.at("encoder"));
    a.head.head_hidden = j.at("head").at("head_hidden").get<std::size_t>();
    a.head.num_classes = j.at("head").at("num_classes").get<std::size_t>();
    a.head_seed = j.at("head_seed").get<std::uint64_t>();
    a.params = params_from_json(j.at("params"));
    return a;
}

inline ClassifierModel restore_classifier(const FallClassifierArtifact& a) {
    const AutoencoderModel enc = restore_autoencoder(a.encoder);
    ClassifierModel m = ClassifierModel::init(enc, a.head, a.head_seed);
    m.set_params(a.params);
    return m;
}

// ---- localization artifact -------------------------------------------------
// Stored as training data + hyperparameters + seed; the regressor is refit on
// load. Every fit is deterministic under a fixed seed, so the restored model
// predicts identically to the one that was saved.

struct LocArtifact {
    std::string kind;  // knn | decision_tree | random_forest | mlp
    std::uint64_t seed = 0;
    bool engineered = true;
    double floor_dbm = -100.0;
    std::vector<std::vector<double>> features;  // already raw/engineered per flag
    std::vector<std::array<double, 2>> targets;
};

inline nlohmann::json loc_artifact_to_json(const LocArtifact& a) {
    nlohmann::json j;
    j["kind"] = "loc_regressor";
    j["artifact_version"] = kArtifactVersion;
    j["model"] = a.kind;
    j["seed"] = a.seed;
    j["engineered"] = a.engineered;
    j["floor_dbm"] = a.floor_dbm;
    j["features"] = a.features;
    j["targets"] = nlohmann::json::array();
    for (const auto& t : a.targets) j["targets"].push_back({t[0], t[1]});
    return j;
}

inline LocArtifact loc_artifact_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "loc_regressor")
        throw parse_error("artifact: expected kind loc_regressor");
    if (j.at("artifact_version").get<int>() != kArtifactVersion)
        throw parse_error("artifact: unsupported version");
    LocArtifact a;
    a.kind = j.at("model").get<std::string>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.engineered = j.at("engineered").get<bool>();
    a.floor_dbm = j.at("floor_dbm").get<double>();
    a.features = j.at("features").get<std::vector<std::vector<double>>>();
    for (const auto& t : j.at("targets"))
        a.targets.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    return a;
}

inline std::unique_ptr<Regressor> restore_regressor(const LocArtifact& a) {
    auto r = make_regressor(a.kind, a.seed);
    r->fit(a.features, a.targets);
    return r;
}

// ---- vision fall classifier -----------------------------------------------

struct VisionArtifact {
    std::string kind;  // logistic | random_forest
    std::uint64_t seed = 0;
    // logistic weights, or training data for the forest refit
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<std::array<double, kSceneFeatureLen>> features;
    std::vector<int> labels;
};

inline nlohmann::json vision_artifact_to_json(const VisionArtifact& a) {
    nlohmann::json j;
    j["kind"] = "vision_classifier";
    j["artifact_version"] = kArtifactVersion;
    j["model"] = a.kind;
    j["seed"] = a.seed;
    j["weights"] = a.weights;
    j["bias"] = a.bias;
    j["features"] = nlohmann::json::array();
    for (const auto& f : a.features)
        j["features"].push_back(std::vector<double>(f.begin(), f.end()));
    j["labels"] = a.labels;
    return j;
}

inline VisionArtifact vision_artifact_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "vision_classifier")
        throw parse_error("artifact: expected kind vision_classifier");
    if (j.at("artifact_version").get<int>() != kArtifactVersion)
        throw parse_error("artifact: unsupported version");
    VisionArtifact a;
    a.kind = j.at("model").get<std::string>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.weights = j.at("weights").get<std::vector<double>>();
    a.bias = j.at("bias").get<double>();
    for (const auto& f : j.at("features")) {
        std::array<double, kSceneFeatureLen> row{};
        for (std::size_t i = 0; i < kSceneFeatureLen; ++i) row[i] = f.at(i).get<double>();
        a.features.push_back(row);
    }
    a.labels = j.at("labels").get<std::vector<int>>();
    return a;
}

inline LogisticFallClassifier restore_logistic(const VisionArtifact& a) {
    if (a.kind != "logistic") throw parse_error("artifact: expected a logistic vision model");
    LogisticFallClassifier c;
    c.set_weights(a.weights, a.bias);
    return c;
}

inline ForestFallClassifier restore_vision_forest(const VisionArtifact& a) {
    if (a.kind != "random_forest") throw parse_error("artifact: expected a forest vision model");
    ForestFallClassifier c(50, TreeConfig{}, a.seed);
    c.fit(a.features, a.labels);
    return c;
}

// ---- helpers ---------------------------------------------------------------

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace fallchain

// fallchain command line: ingestion, training, evaluation, map building,
// simulation, and reporting. Exit codes: 0 success, 1 validation error,
// 2 runtime failure. All randomness flows from --seed through named streams,
// so identical inputs and seeds give byte-identical outputs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fallchain/artifact.hpp"
#include "fallchain/fedsim.hpp"
#include "fallchain/fingerprint.hpp"
#include "fallchain/locmodel.hpp"
#include "fallchain/mission.hpp"
#include "fallchain/nnkernel.hpp"
#include "fallchain/preproc.hpp"
#include "fallchain/signal_io.hpp"
#include "fallchain/visionstage.hpp"

namespace fc = fallchain;
using nlohmann::json;

namespace {

// ---- window-set files ------------------------------------------------------

json window_to_json(const fc::LabeledWindow& lw) {
    json j;
    j["label"] = lw.label;
    j["rows"] = lw.window.rows;
    j["source"] = lw.window.source_trial;
    j["start_index"] = lw.window.start_index;
    j["values"] = lw.window.values;
    return j;
}

fc::LabeledWindow window_from_json(const json& j) {
    fc::LabeledWindow lw;
    lw.label = j.at("label").get<int>();
    lw.window.rows = j.at("rows").get<std::size_t>();
    lw.window.source_trial = j.at("source").get<std::string>();
    lw.window.start_index = j.at("start_index").get<std::size_t>();
    lw.window.values = j.at("values").get<std::vector<double>>();
    if (lw.window.values.size() != lw.window.rows * fc::kNumChannels)
        throw fc::parse_error("window set: value count does not match rows");
    return lw;
}

void save_window_set(const std::vector<fc::LabeledWindow>& windows, const fc::PreprocConfig& cfg,
                     const std::string& path) {
    json j;
    j["kind"] = "window_set";
    j["artifact_version"] = fc::kArtifactVersion;
    j["preproc"] = fc::preproc_to_json(cfg);
    j["windows"] = json::array();
    for (const auto& lw : windows) j["windows"].push_back(window_to_json(lw));
    fc::save_json_file(j, path);
}

std::pair<std::vector<fc::LabeledWindow>, fc::PreprocConfig> load_window_set(const std::string& path) {
    const json j = fc::load_json_file(path);
    if (j.value("kind", "") != "window_set") throw fc::parse_error(path + ": expected a window_set file");
    if (j.at("artifact_version").get<int>() != fc::kArtifactVersion)
        throw fc::parse_error(path + ": unsupported version");
    std::vector<fc::LabeledWindow> out;
    for (const auto& w : j.at("windows")) out.push_back(window_from_json(w));
    return {out, fc::preproc_from_json(j.at("preproc"))};
}

// ---- feature csv (vision) --------------------------------------------------

void write_feature_csv(std::ostream& out,
                       const std::vector<std::array<double, fc::kSceneFeatureLen>>& rows,
                       const std::vector<int>& labels) {
    out << "label";
    for (std::size_t i = 0; i < fc::kSceneFeatureLen; ++i) out << ",f" << i;
    out << "\n";
    out.precision(17);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << labels[r];
        for (double v : rows[r]) out << ',' << v;
        out << "\n";
    }
}

void read_feature_csv(std::istream& in, std::vector<std::array<double, fc::kSceneFeatureLen>>& rows,
                      std::vector<int>& labels) {
    std::string line;
    if (!std::getline(in, line)) throw fc::parse_error("feature csv: empty file");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = fc::detail::split_csv_line(line);
        if (fields.size() != fc::kSceneFeatureLen + 1)
            throw fc::parse_error("feature csv line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(fc::kSceneFeatureLen + 1) + " fields");
        try {
            labels.push_back(std::stoi(fields[0]));
            std::array<double, fc::kSceneFeatureLen> row{};
            for (std::size_t i = 0; i < fc::kSceneFeatureLen; ++i) row[i] = std::stod(fields[i + 1]);
            rows.push_back(row);
        } catch (const std::exception&) {
            throw fc::parse_error("feature csv line " + std::to_string(lineno) + ": bad number");
        }
    }
}

// ---- small helpers ---------------------------------------------------------

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fc::io_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw fc::io_error("cannot open " + path + " for writing");
    return out;
}

// features for one fingerprint row under a trained localization model's view
std::vector<double> loc_features(const std::vector<double>& rssi, bool engineered, double floor_dbm) {
    const fc::FeatureRow row = fc::engineer_features(rssi, floor_dbm);
    return engineered ? row.engineered_features() : row.raw_features();
}

// "D01_SA01_R01" from a path like data/D01_SA01_R01.txt
fc::TrialMeta meta_from_path(const std::string& path) {
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    std::vector<std::string> parts;
    std::stringstream ss(stem);
    std::string part;
    while (std::getline(ss, part, '_')) parts.push_back(part);
    if (parts.size() < 3 || !fc::valid_activity_code(parts[0]))
        throw fc::parse_error(path + ": file name must look like ACT_SUBJECT_R## (e.g. D01_SA01_R01.txt)");
    fc::TrialMeta meta;
    meta.activity_code = parts[0];
    meta.subject_id = parts[1];
    try {
        meta.trial_index = std::stoi(parts[2].substr(parts[2].find_first_of("0123456789")));
    } catch (const std::exception&) {
        throw fc::parse_error(path + ": cannot read trial index from " + parts[2]);
    }
    return meta;
}

fc::FingerprintTable load_table(const std::string& path) {
    auto in = open_in(path);
    return fc::read_fingerprint_csv(in);
}

json summary_json(const fc::ScenarioResult& res) {
    json s;
    s["alerts"] = res.alerts.size();
    s["feedback_records"] = res.feedback.size();
    s["missed"] = res.missed;
    s["stage_failed"] = {res.stage_failed[0], res.stage_failed[1], res.stage_failed[2]};
    s["detect_agree"] = res.counts.detect_agree;
    s["detect_disagree"] = res.counts.detect_disagree;
    s["vision_agree"] = res.counts.vision_agree;
    s["vision_disagree"] = res.counts.vision_disagree;
    s["final_states"] = json::array();
    for (const auto& ev : res.events) s["final_states"].push_back(fc::to_string(ev.state));
    return s;
}

// ---- subcommand option bags ------------------------------------------------

struct PreprocFlags {
    fc::PreprocConfig cfg;
    bool no_ewma = false;
    bool no_savgol = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--resample-hz", cfg.resample_hz, "uniform resampling rate")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--window-len", cfg.window_len, "samples per window")->check(CLI::PositiveNumber);
        cmd->add_option("--step", cfg.step, "window stride in samples")->check(CLI::PositiveNumber);
        cmd->add_option("--alpha", cfg.ewma_alpha, "EWMA smoothing factor")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--trim-margin", cfg.trim_margin, "samples kept either side of a fall impact");
        cmd->add_flag("--no-ewma", no_ewma, "skip exponential smoothing");
        cmd->add_flag("--no-savgol", no_savgol, "skip Savitzky-Golay smoothing");
    }

    fc::PreprocConfig resolve() const {
        fc::PreprocConfig c = cfg;
        c.ewma_enabled = !no_ewma;
        c.savgol_enabled = !no_savgol;
        return c;
    }
};

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoul(tok));
        } catch (const std::exception&) {
            throw fc::invalid_argument_error(what + ": bad size list '" + s + "'");
        }
    }
    if (out.empty()) throw fc::invalid_argument_error(what + ": empty size list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw fc::invalid_argument_error(what + ": bad number list '" + s + "'");
        }
    }
    return out;
}

// synthetic labeled windows for one simulated wearer
std::vector<fc::LabeledWindow> synth_client_windows(std::uint64_t seed, std::size_t per_class,
                                                    const fc::PreprocConfig& cfg) {
    std::vector<fc::LabeledWindow> out;
    std::uint64_t s = seed;
    std::size_t falls = 0, adls = 0;
    while (falls < per_class) {
        for (const auto& w :
             fc::preprocess_trace(fc::synth_trace(fc::TraceKind::fall, ++s, 10.0, 50.0), 1, cfg)) {
            if (falls == per_class) break;
            out.push_back({w, 1});
            ++falls;
        }
    }
    while (adls < per_class) {
        for (const auto& w :
             fc::preprocess_trace(fc::synth_trace(fc::TraceKind::adl, ++s, 10.0, 50.0), 0, cfg)) {
            if (adls == per_class) break;
            out.push_back({w, 0});
            ++adls;
        }
    }
    return out;
}

// ---- subcommands -----------------------------------------------------------

struct IngestOpts {
    std::size_t synthetic = 0;
    double duration_s = 10.0;
    double rate_hz = 50.0;
    std::vector<std::string> trial_files;
    std::uint64_t seed = 1;
    std::string out;
    PreprocFlags pre;
};

int cmd_ingest(const IngestOpts& o) {
    const fc::PreprocConfig cfg = o.pre.resolve();
    std::vector<fc::LabeledWindow> windows;
    for (const auto& path : o.trial_files) {
        const fc::TrialMeta meta = meta_from_path(path);
        auto in = open_in(path);
        const fc::RawTrial trial = fc::parse_trial(in, meta);
        const int label = fc::label_activity(meta.activity_code);
        const auto samples = fc::to_samples(trial, o.rate_hz);
        for (const auto& w : fc::preprocess_trace(samples, label, cfg, meta.activity_code + "_" +
                                                                           meta.subject_id))
            windows.push_back({w, label});
    }
    for (std::size_t i = 0; i < o.synthetic; ++i) {
        const auto fall = fc::synth_trace(fc::TraceKind::fall, fc::derive_seed(o.seed, "ingest_fall", i),
                                          o.duration_s, o.rate_hz);
        for (const auto& w : fc::preprocess_trace(fall, 1, cfg, "synth_fall_" + std::to_string(i)))
            windows.push_back({w, 1});
        const auto adl = fc::synth_trace(fc::TraceKind::adl, fc::derive_seed(o.seed, "ingest_adl", i),
                                         o.duration_s, o.rate_hz);
        for (const auto& w : fc::preprocess_trace(adl, 0, cfg, "synth_adl_" + std::to_string(i)))
            windows.push_back({w, 0});
    }
    if (windows.empty()) throw fc::invalid_argument_error("ingest: no input produced any windows");
    save_window_set(windows, cfg, o.out);
    std::cout << "wrote " << windows.size() << " windows to " << o.out << std::endl;
    return 0;
}

struct TrainFedOpts {
    std::vector<std::string> data_files;  // one window_set per client
    std::size_t synthetic_clients = 0;
    std::size_t windows_per_class = 100;
    std::string hidden = "32,16,8";
    std::size_t rounds = 50;
    std::size_t epochs = 1;  // local epochs per round (or total epochs when central)
    double lr = 0.05;
    std::size_t batch = 32;
    std::size_t head_hidden = 16;
    std::size_t head_epochs = 50;
    double head_lr = 0.1;
    std::uint64_t seed = 1;
    std::string out;
    bool central = false;
};

int cmd_train_fed(const TrainFedOpts& o) {
    fc::PreprocConfig pre;
    std::vector<fc::ClientData> clients;
    std::vector<fc::LabeledWindow> labeled;

    for (std::size_t i = 0; i < o.data_files.size(); ++i) {
        auto [wins, cfg] = load_window_set(o.data_files[i]);
        if (i == 0) pre = cfg;
        fc::ClientData cd;
        cd.client_id = "file_" + std::to_string(i);
        for (const auto& lw : wins) {
            cd.windows.push_back(lw.window);
            labeled.push_back(lw);
        }
        clients.push_back(std::move(cd));
    }
    for (std::size_t c = 0; c < o.synthetic_clients; ++c) {
        fc::ClientData cd;
        cd.client_id = "synth_" + std::to_string(c);
        for (const auto& lw :
             synth_client_windows(fc::derive_seed(o.seed, "client", c), o.windows_per_class, pre)) {
            cd.windows.push_back(lw.window);
            labeled.push_back(lw);
        }
        clients.push_back(std::move(cd));
    }
    if (clients.empty())
        throw fc::invalid_argument_error("training needs --data files or --synthetic-clients");

    // freeze normalization bounds on the pooled training windows
    std::vector<fc::Window> pooled;
    for (const auto& cd : clients) pooled.insert(pooled.end(), cd.windows.begin(), cd.windows.end());
    const fc::NormBounds norm = fc::fit_normalizer(pooled);
    for (auto& cd : clients)
        for (auto& w : cd.windows) w = fc::apply_normalizer(w, norm);
    for (auto& lw : labeled) lw.window = fc::apply_normalizer(lw.window, norm);

    fc::FedConfig cfg;
    cfg.arch.hidden_sizes = parse_size_list(o.hidden, "--hidden");
    cfg.rounds = o.rounds;
    cfg.train.epochs = o.central ? o.rounds : o.epochs;
    cfg.train.learning_rate = o.lr;
    cfg.train.batch_size = o.batch;
    cfg.train.seed = fc::derive_seed(o.seed, "encoder_init");

    fc::FederatedResult fed;
    if (o.central) {
        std::vector<fc::Window> all;
        for (const auto& cd : clients) all.insert(all.end(), cd.windows.begin(), cd.windows.end());
        fed = fc::run_centralized(all, cfg);
    } else {
        fed = fc::run_federated(clients, cfg);
    }
    for (const auto& e : fed.log)
        std::cout << (o.central ? "epoch " : "round ") << e.round << " recon_loss "
                  << e.mean_recon_loss << std::endl;

    fc::ClassifierConfig head;
    head.head_hidden = o.head_hidden;
    fc::TrainConfig head_train;
    head_train.epochs = o.head_epochs;
    head_train.learning_rate = o.head_lr;
    head_train.seed = fc::derive_seed(o.seed, "head_init");
    const fc::ClassifierModel clf = fc::train_classifier(fed.model, labeled, head, head_train);

    fc::FallClassifierArtifact art;
    art.encoder.arch = cfg.arch;
    art.encoder.init_seed = cfg.train.seed;
    art.encoder.params = clf.encoder().get_params();
    art.encoder.preproc = pre;
    art.encoder.norm = norm;
    art.head = head;
    art.head_seed = head_train.seed;
    art.params = clf.get_params();
    fc::save_json_file(fc::classifier_artifact_to_json(art), o.out);
    std::cout << "wrote fall classifier to " << o.out << std::endl;
    return 0;
}

struct EvalFallOpts {
    std::string model;
    std::string data;
};

int cmd_eval_fall(const EvalFallOpts& o) {
    const auto art = fc::classifier_artifact_from_json(fc::load_json_file(o.model));
    const fc::ClassifierModel clf = fc::restore_classifier(art);
    auto [wins, pre] = load_window_set(o.data);
    (void)pre;
    for (auto& lw : wins) lw.window = fc::apply_normalizer(lw.window, art.encoder.norm);
    const fc::ClassificationMetrics m = fc::evaluate(clf, wins);
    json j;
    j["acc"] = m.acc;
    j["pr"] = m.pr;
    j["re"] = m.re;
    j["f1"] = m.f1;
    std::cout << j.dump(2) << std::endl;
    return 0;
}

struct BuildMapOpts {
    std::string pose, drift, rssi, out;
    double floor_dbm = -100.0;
    std::string map_pgm, map_sidecar, heatmap_prefix;
};

int cmd_build_map(const BuildMapOpts& o) {
    auto pin = open_in(o.pose);
    auto din = open_in(o.drift);
    auto rin = open_in(o.rssi);
    const auto poses = fc::correct_pose(fc::read_pose_csv(pin), fc::read_drift_csv(din));
    const fc::FingerprintTable table =
        fc::fill_missing(fc::build_table(poses, fc::read_rssi_csv(rin)), o.floor_dbm);
    auto out = open_out(o.out);
    fc::write_fingerprint_csv(table, out);
    std::cout << "wrote " << table.rows.size() << " fingerprints (" << table.anchor_macs.size()
              << " anchors) to " << o.out << std::endl;

    if (!o.heatmap_prefix.empty()) {
        if (o.map_pgm.empty() || o.map_sidecar.empty())
            throw fc::invalid_argument_error("heatmaps need --map and --sidecar");
        auto min = open_in(o.map_pgm);
        auto sin = open_in(o.map_sidecar);
        const fc::OccupancyRaster raster = fc::read_pgm(min, sin);
        for (const auto& mac : table.anchor_macs) {
            const fc::HeatRaster heat = fc::render_heatmap(table, raster, mac);
            std::string name = mac;
            for (auto& ch : name)
                if (ch == ':') ch = '-';
            auto hout = open_out(o.heatmap_prefix + name + ".csv");
            fc::write_heatmap_csv(heat, hout);
        }
        std::cout << "wrote " << table.anchor_macs.size() << " heatmaps" << std::endl;
    }
    return 0;
}

struct TrainLocOpts {
    std::string table;
    std::string model_kind = "random_forest";
    std::string features = "engineered";
    double floor_dbm = -100.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_train_loc(const TrainLocOpts& o) {
    if (o.features != "raw" && o.features != "engineered")
        throw fc::invalid_argument_error("--features must be raw or engineered");
    const fc::FingerprintTable table = load_table(o.table);
    if (table.rows.empty()) throw fc::invalid_argument_error(o.table + ": empty fingerprint table");

    fc::LocArtifact art;
    art.kind = o.model_kind;
    art.seed = fc::derive_seed(o.seed, "loc_" + o.model_kind);
    art.engineered = o.features == "engineered";
    art.floor_dbm = o.floor_dbm;
    for (const auto& row : table.rows) {
        art.features.push_back(loc_features(row.rssi, art.engineered, art.floor_dbm));
        art.targets.push_back({row.x_pos, row.y_pos});
    }
    (void)fc::restore_regressor(art);  // validates kind and data before saving
    fc::save_json_file(fc::loc_artifact_to_json(art), o.out);
    std::cout << "wrote " << o.model_kind << " localization model (" << art.features.size()
              << " reference points) to " << o.out << std::endl;
    return 0;
}

struct EvalLocOpts {
    std::string model;
    std::string table;
};

int cmd_eval_loc(const EvalLocOpts& o) {
    {
        std::ifstream probe(o.model);
        if (!probe) {
            std::cerr << "NotFitted: no trained localization model at " << o.model << std::endl;
            return 1;
        }
    }
    const fc::LocArtifact art = fc::loc_artifact_from_json(fc::load_json_file(o.model));
    const auto model = fc::restore_regressor(art);
    const fc::FingerprintTable table = load_table(o.table);
    std::vector<std::array<double, 2>> preds, truth;
    for (const auto& row : table.rows) {
        preds.push_back(model->predict(loc_features(row.rssi, art.engineered, art.floor_dbm)));
        truth.push_back({row.x_pos, row.y_pos});
    }
    const fc::LocMetrics m = fc::evaluate_loc(preds, truth);
    json j;
    j["mae"] = m.mae;
    j["mse"] = m.mse;
    j["mde"] = m.mde;
    std::cout << j.dump(2) << std::endl;
    return 0;
}

struct ExtractOpts {
    std::vector<std::string> detections;  // one file per frame
    std::string classes;
    int label = 0;
    std::string out;
};

int cmd_extract_features(const ExtractOpts& o) {
    const auto class_map = fc::read_class_map_file(o.classes);
    std::vector<std::array<double, fc::kSceneFeatureLen>> rows;
    std::vector<int> labels;
    for (const auto& path : o.detections) {
        auto in = open_in(path);
        rows.push_back(fc::extract_features(fc::read_detections(in, class_map)));
        labels.push_back(o.label);
    }
    auto out = open_out(o.out);
    write_feature_csv(out, rows, labels);
    std::cout << "wrote " << rows.size() << " feature rows to " << o.out << std::endl;
    return 0;
}

struct TrainVisionOpts {
    std::vector<std::string> data;  // feature csvs (labels included)
    std::string model_kind = "logistic";
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_train_vision(const TrainVisionOpts& o) {
    std::vector<std::array<double, fc::kSceneFeatureLen>> x;
    std::vector<int> y;
    for (const auto& path : o.data) {
        auto in = open_in(path);
        read_feature_csv(in, x, y);
    }
    fc::VisionArtifact art;
    art.kind = o.model_kind;
    art.seed = fc::derive_seed(o.seed, "vision_" + o.model_kind);
    if (o.model_kind == "logistic") {
        fc::LogisticFallClassifier clf;
        clf.fit(x, y);
        art.weights = clf.weights();
        art.bias = clf.bias();
    } else if (o.model_kind == "random_forest") {
        fc::ForestFallClassifier clf(50, fc::TreeConfig{}, art.seed);
        clf.fit(x, y);
        art.features = x;
        art.labels = y;
    } else {
        throw fc::invalid_argument_error("--model must be logistic or random_forest");
    }
    fc::save_json_file(fc::vision_artifact_to_json(art), o.out);
    std::cout << "wrote " << o.model_kind << " scene classifier to " << o.out << std::endl;
    return 0;
}

struct EvalVisionOpts {
    std::vector<std::string> frames;  // det_path:gt_path[:time_s]
    std::string classes;
};

int cmd_eval_vision(const EvalVisionOpts& o) {
    const auto class_map = fc::read_class_map_file(o.classes);
    std::vector<fc::Frame> frames;
    for (const auto& spec : o.frames) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(part);
        if (parts.size() < 2 || parts.size() > 3)
            throw fc::invalid_argument_error("--frame expects det_path:gt_path[:time_s], got " + spec);
        fc::Frame f;
        auto din = open_in(parts[0]);
        f.detections = fc::read_detections(din, class_map);
        auto gin = open_in(parts[1]);
        f.truths = fc::read_ground_truth(gin, class_map);
        if (parts.size() == 3) f.inference_time_s = std::stod(parts[2]);
        frames.push_back(std::move(f));
    }
    const fc::DetMetrics m = fc::eval_detection_set(frames);
    json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["map50"] = m.map50;
    j["mean_inference_time_s"] = m.mean_inference_time_s;
    std::cout << j.dump(2) << std::endl;
    return 0;
}

struct SimulateOpts {
    std::string scenario;
    std::string fall_model, loc_model, vision_model;
    std::string out;
    std::string summary;
    std::string emit_demo;
    std::uint64_t seed = 0;  // 0 = keep the scenario's own seed
};

fc::SimScenario demo_scenario() {
    fc::SimScenario sc;
    sc.map.width = 16;
    sc.map.height = 16;
    sc.map.resolution = 0.5;
    sc.map.cells.assign(256, fc::Cell::free);
    for (std::size_t x = 4; x < 12; ++x) sc.map.at(x, 8) = fc::Cell::occupied;
    sc.anchors = {{"aa:aa:aa:aa:aa:01", 0.0, 0.0},
                  {"aa:aa:aa:aa:aa:02", 8.0, 0.0},
                  {"aa:aa:aa:aa:aa:03", 0.0, 8.0},
                  {"aa:aa:aa:aa:aa:04", 8.0, 8.0}};
    sc.trajectory = {{0.0, 1.0, 1.0}, {10.0, 6.0, 6.0}};
    sc.event_kind = "fall";
    sc.event_tick = 5.0;
    sc.robot_x = 0.5;
    sc.robot_y = 0.5;
    sc.radio.sigma = 1.0;
    sc.seed = 12;
    return sc;
}

int cmd_simulate(const SimulateOpts& o) {
    if (!o.emit_demo.empty()) {
        fc::save_json_file(fc::scenario_to_json(demo_scenario()), o.emit_demo);
        std::cout << "wrote demo scenario to " << o.emit_demo << std::endl;
        return 0;
    }
    fc::SimScenario sc = fc::scenario_from_json(fc::load_json_file(o.scenario));
    if (o.seed != 0) sc.seed = o.seed;

    const auto fall_art = fc::classifier_artifact_from_json(fc::load_json_file(o.fall_model));
    const fc::ClassifierModel fall = fc::restore_classifier(fall_art);
    const fc::LocArtifact loc_art = fc::loc_artifact_from_json(fc::load_json_file(o.loc_model));
    const auto loc = fc::restore_regressor(loc_art);
    const fc::LogisticFallClassifier vision =
        fc::restore_logistic(fc::vision_artifact_from_json(fc::load_json_file(o.vision_model)));

    fc::StageArtifacts art;
    art.fall_model = &fall;
    art.preproc = &fall_art.encoder.preproc;
    art.norm = &fall_art.encoder.norm;
    art.loc_model = loc.get();
    art.vision_model = &vision;

    const fc::ScenarioResult res = fc::run_scenario(sc, art);
    if (!o.out.empty()) {
        auto out = open_out(o.out);
        for (const auto& line : res.log_lines) out << line << "\n";
    } else {
        for (const auto& line : res.log_lines) std::cout << line << "\n";
    }
    const json s = summary_json(res);
    if (!o.summary.empty())
        fc::save_json_file(s, o.summary);
    else
        std::cout << s.dump(2) << std::endl;
    return 0;
}

struct ReportOpts {
    std::string rates = "0.0081,0.05,0.0367";
    std::vector<std::string> summaries;
};

int cmd_report(const ReportOpts& o) {
    const auto r = parse_double_list(o.rates, "--rates");
    if (r.size() != 3)
        throw fc::invalid_argument_error("--rates expects detect,nav,vision failure rates");
    const fc::Reliability rel = fc::combined_reliability({r[0], r[1], r[2]});
    std::printf("stage failure rates: detect %.6g, navigation %.6g, vision %.6g\n", r[0], r[1], r[2]);
    std::printf("reliability, redundant model (a miss needs every stage to fail):\n");
    std::printf("  combined failure rate %.6g\n", rel.failure);
    std::printf("  accuracy %.5f%%\n", rel.accuracy_percent);
    std::printf("reliability, serial model (any stage failing loses the event):\n");
    std::printf("  combined failure rate %.6g\n", rel.serial_failure);
    std::printf("  accuracy %.5f%%\n", 100.0 * (1.0 - rel.serial_failure));
    for (const auto& path : o.summaries) {
        const json s = fc::load_json_file(path);
        std::printf("simulation %s:\n", path.c_str());
        std::printf("  alerts %zu, feedback %zu, missed %s\n", s.value("alerts", std::size_t{0}),
                    s.value("feedback_records", std::size_t{0}),
                    s.value("missed", false) ? "yes" : "no");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fall detection, localization, and inspection toolkit"};
    app.require_subcommand(1);
    // key=value file with one [subcommand] section per stage; precedence is
    // config file < FALLCHAIN_* environment < explicit flags
    app.set_config("--config", "", "configuration file ([subcommand] sections)");
    std::size_t jobs = 1;
    app.add_option("--jobs", jobs, "worker cap for stages that parallelize")
        ->check(CLI::PositiveNumber)
        ->envname("FALLCHAIN_JOBS");

    IngestOpts ing;
    auto* c_ing = app.add_subcommand("ingest", "turn sensor trials or synthetic traces into windows");
    c_ing->add_option("--trial", ing.trial_files, "trial file named ACT_SUBJECT_R##.txt");
    c_ing->add_option("--synthetic", ing.synthetic, "synthetic fall+ADL trace pairs to generate");
    c_ing->add_option("--duration", ing.duration_s, "synthetic trace length, seconds")
        ->check(CLI::PositiveNumber);
    c_ing->add_option("--rate", ing.rate_hz, "sensor sampling rate, Hz")->check(CLI::PositiveNumber);
    c_ing->add_option("--seed", ing.seed, "random seed")->envname("FALLCHAIN_SEED");
    c_ing->add_option("--out", ing.out, "output window-set file")->required();
    ing.pre.attach(c_ing);

    TrainFedOpts tf;
    auto* c_tf = app.add_subcommand("train-fed", "federated autoencoder + classifier head");
    auto* c_tc = app.add_subcommand("train-central", "centralized baseline training");
    for (auto* cmd : {c_tf, c_tc}) {
        cmd->add_option("--data", tf.data_files, "window-set file (one per client)");
        cmd->add_option("--synthetic-clients", tf.synthetic_clients, "generate this many clients");
        cmd->add_option("--windows-per-class", tf.windows_per_class, "windows per class per client");
        cmd->add_option("--hidden", tf.hidden, "encoder sizes, comma separated");
        cmd->add_option("--rounds", tf.rounds, "federated rounds (epochs when central)");
        cmd->add_option("--epochs", tf.epochs, "local epochs per round");
        cmd->add_option("--lr", tf.lr, "autoencoder learning rate")->check(CLI::PositiveNumber);
        cmd->add_option("--batch", tf.batch, "batch size, 0 = full batch");
        cmd->add_option("--head-hidden", tf.head_hidden, "classifier head width");
        cmd->add_option("--head-epochs", tf.head_epochs, "classifier head epochs");
        cmd->add_option("--head-lr", tf.head_lr, "classifier head learning rate");
        cmd->add_option("--seed", tf.seed, "random seed")->envname("FALLCHAIN_SEED");
        cmd->add_option("--out", tf.out, "output model file")->required();
    }

    EvalFallOpts ef;
    auto* c_ef = app.add_subcommand("eval-fall", "classification metrics on a window set");
    c_ef->add_option("--model", ef.model, "fall classifier file")->required();
    c_ef->add_option("--data", ef.data, "window-set file")->required();

    BuildMapOpts bm;
    auto* c_bm = app.add_subcommand("build-map", "fingerprint table from pose, drift, and rssi logs");
    c_bm->add_option("--pose", bm.pose, "odometry csv (t,x,y)")->required();
    c_bm->add_option("--drift", bm.drift, "drift-correction csv (t,dx,dy)")->required();
    c_bm->add_option("--rssi", bm.rssi, "rssi csv (t,mac,rssi)")->required();
    c_bm->add_option("--floor-dbm", bm.floor_dbm, "fill value for unheard anchors")
        ->envname("FALLCHAIN_FLOOR_DBM");
    c_bm->add_option("--out", bm.out, "output fingerprint csv")->required();
    c_bm->add_option("--map", bm.map_pgm, "occupancy raster (pgm) for heatmaps");
    c_bm->add_option("--sidecar", bm.map_sidecar, "raster metadata sidecar");
    c_bm->add_option("--heatmap-prefix", bm.heatmap_prefix, "write per-anchor heatmap csvs here");

    TrainLocOpts tl;
    auto* c_tl = app.add_subcommand("train-loc", "position regressor from a fingerprint table");
    c_tl->add_option("--table", tl.table, "fingerprint csv")->required();
    c_tl->add_option("--model", tl.model_kind, "knn | decision_tree | random_forest | mlp");
    c_tl->add_option("--features", tl.features, "raw | engineered")->envname("FALLCHAIN_FEATURES");
    c_tl->add_option("--floor-dbm", tl.floor_dbm, "visibility floor, dBm")
        ->envname("FALLCHAIN_FLOOR_DBM");
    c_tl->add_option("--seed", tl.seed, "random seed")->envname("FALLCHAIN_SEED");
    c_tl->add_option("--out", tl.out, "output model file")->required();

    EvalLocOpts el;
    auto* c_el = app.add_subcommand("eval-loc", "distance errors on a labeled fingerprint table");
    c_el->add_option("--model", el.model, "localization model file")->required();
    c_el->add_option("--table", el.table, "fingerprint csv with true positions")->required();

    ExtractOpts ex;
    auto* c_ex = app.add_subcommand("extract-features", "scene feature vectors from detection files");
    c_ex->add_option("--detections", ex.detections, "detection file, one per frame")->required();
    c_ex->add_option("--classes", ex.classes, "class-id map file")->required();
    c_ex->add_option("--label", ex.label, "label attached to every row");
    c_ex->add_option("--out", ex.out, "output feature csv")->required();

    TrainVisionOpts tv;
    auto* c_tv = app.add_subcommand("train-vision", "fall/no-fall scene classifier");
    c_tv->add_option("--data", tv.data, "feature csv (repeatable)")->required();
    c_tv->add_option("--model", tv.model_kind, "logistic | random_forest");
    c_tv->add_option("--seed", tv.seed, "random seed")->envname("FALLCHAIN_SEED");
    c_tv->add_option("--out", tv.out, "output model file")->required();

    EvalVisionOpts ev;
    auto* c_ev = app.add_subcommand("eval-vision", "detection metrics over frame pairs");
    c_ev->add_option("--frame", ev.frames, "det_path:gt_path[:time_s], repeatable")->required();
    c_ev->add_option("--classes", ev.classes, "class-id map file")->required();

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "run one scenario end to end");
    c_sim->add_option("--scenario", sim.scenario, "scenario json");
    c_sim->add_option("--fall-model", sim.fall_model, "fall classifier file");
    c_sim->add_option("--loc-model", sim.loc_model, "localization model file");
    c_sim->add_option("--vision-model", sim.vision_model, "scene classifier file (logistic)");
    c_sim->add_option("--out", sim.out, "event log output (json lines)");
    c_sim->add_option("--summary", sim.summary, "summary json output");
    c_sim->add_option("--seed", sim.seed, "override the scenario seed")->envname("FALLCHAIN_SEED");
    c_sim->add_option("--emit-demo", sim.emit_demo, "write a ready-made scenario file and exit");

    ReportOpts rep;
    auto* c_rep = app.add_subcommand("report", "reliability roll-up and simulation summaries");
    c_rep->add_option("--rates", rep.rates, "detect,nav,vision stage failure rates");
    c_rep->add_option("--summary", rep.summaries, "simulation summary json (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*c_ing) return cmd_ingest(ing);
        if (*c_tf) return cmd_train_fed(tf);
        if (*c_tc) {
            tf.central = true;
            return cmd_train_fed(tf);
        }
        if (*c_ef) return cmd_eval_fall(ef);
        if (*c_bm) return cmd_build_map(bm);
        if (*c_tl) return cmd_train_loc(tl);
        if (*c_el) return cmd_eval_loc(el);
        if (*c_ex) return cmd_extract_features(ex);
        if (*c_tv) return cmd_train_vision(tv);
        if (*c_ev) return cmd_eval_vision(ev);
        if (*c_sim) {
            if (sim.emit_demo.empty() &&
                (sim.scenario.empty() || sim.fall_model.empty() || sim.loc_model.empty() ||
                 sim.vision_model.empty()))
                throw fc::invalid_argument_error(
                    "simulate needs --scenario and all three stage models (or --emit-demo)");
            return cmd_simulate(sim);
        }
        if (*c_rep) return cmd_report(rep);
    } catch (const fc::invalid_argument_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const fc::parse_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const fc::not_fitted_error& e) {
        std::cerr << "NotFitted: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpgc/error.hpp"
#include "tpgc/gradcheck.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/io.hpp"
#include "tpgc/metrics.hpp"
#include "tpgc/model.hpp"
#include "tpgc/splits.hpp"
#include "tpgc/tasks.hpp"
#include "tpgc/train.hpp"

namespace tpgc {

using Json = nlohmann::json;

enum class TaskKind { node_class, link_pred, multi_graph };

inline std::string to_string(TaskKind t) {
    switch (t) {
        case TaskKind::link_pred: return "link_pred";
        case TaskKind::multi_graph: return "multi_graph";
        default: return "node_class";
    }
}

inline TaskKind parse_task_kind(const std::string& s) {
    if (s == "node_class") return TaskKind::node_class;
    if (s == "link_pred") return TaskKind::link_pred;
    if (s == "multi_graph") return TaskKind::multi_graph;
    throw InvalidArgument("unknown task '" + s + "' (expected node_class|link_pred|multi_graph)");
}

struct SbmSpec {
    std::vector<std::size_t> block_sizes{50, 50};
    double p_in = 0.2;
    double p_out = 0.02;
    std::uint64_t seed = 7;
    std::size_t views = 1;
};

struct ExperimentConfig {
    std::string name = "experiment";
    TaskKind task = TaskKind::node_class;
    ModelKind model = ModelKind::et_gcn;

    // exactly one data source
    std::string dataset_path;
    std::optional<SbmSpec> sbm;

    // node splits: a per-class count wins over a per-class fraction
    std::optional<std::size_t> train_per_class;
    double train_fraction = 0.01;
    double val_fraction = 0.5;
    // link splits
    double test_edge_fraction = 0.1;
    double val_edge_fraction = 0.05;
    std::uint64_t split_seed = 0;
    /// Draw a fresh split for every seed instead of one shared split.
    bool resplit_per_seed = false;

    EdgeFeatureKind edge_features = EdgeFeatureKind::concat;
    std::size_t reduce_dim = 8;
    EdgeWeights edge_weights = EdgeWeights::attention;
    ad::SignMode sign_mode = ad::SignMode::clamp;
    double epsilon = 0.2;
    std::vector<std::size_t> tpgc_hidden{8};
    std::vector<std::size_t> gc_hidden{32};
    std::size_t embed_dim = 32;  // link prediction output width

    double learning_rate = 0.01;
    std::size_t patience = 100;
    std::size_t max_epochs = 10000;

    std::vector<std::uint64_t> seeds{0};
    std::string output_dir;

    static ExperimentConfig defaults_for(TaskKind task) {
        ExperimentConfig c;
        c.task = task;
        c.name = to_string(task);
        if (task == TaskKind::link_pred) {
            c.gc_hidden = {64};
            c.embed_dim = 32;
            c.max_epochs = 200;
        } else if (task == TaskKind::multi_graph) {
            c.tpgc_hidden = {6};
            c.gc_hidden = {16};
            c.learning_rate = 0.005;
            c.edge_features = EdgeFeatureKind::stack_graphs;
            c.train_fraction = 0.1;
            c.val_fraction = 0.05;
            c.resplit_per_seed = true;
        }
        return c;
    }

    void validate() const {
        if (seeds.empty()) throw InvalidArgument("config: seeds must be nonempty");
        if (!(learning_rate > 0.0)) throw InvalidArgument("config: learning_rate must be positive");
        if (epsilon < 0.0) throw InvalidArgument("config: epsilon must be nonnegative");
        if (max_epochs == 0) throw InvalidArgument("config: max_epochs must be positive");
        if (reduce_dim == 0 || embed_dim == 0) throw InvalidArgument("config: layer widths must be positive");
        for (auto d : tpgc_hidden)
            if (d == 0) throw InvalidArgument("config: zero-width tpgc layer");
        for (auto d : gc_hidden)
            if (d == 0) throw InvalidArgument("config: zero-width gc layer");
        if (dataset_path.empty() == !sbm.has_value()) throw InvalidArgument("config: give exactly one of dataset.path or dataset.sbm");
        if (!dataset_path.empty() && !std::filesystem::is_directory(dataset_path))
            throw Error("missing_file", "config: dataset directory '" + dataset_path + "' does not exist");
        if (sbm) {
            if (sbm->block_sizes.size() < 2) throw InvalidArgument("config: sbm needs at least 2 blocks");
            if (sbm->views == 0) throw InvalidArgument("config: sbm.views must be >= 1");
        }
        if (task == TaskKind::multi_graph && edge_features != EdgeFeatureKind::stack_graphs)
            throw InvalidArgument("config: multi_graph requires edge_features = stack");
        if (task != TaskKind::multi_graph && edge_features == EdgeFeatureKind::stack_graphs)
            throw InvalidArgument("config: edge_features = stack is only valid for multi_graph");
        if (!train_per_class && !(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidArgument("config: train_fraction must lie in (0, 1)");
    }
};

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["name"] = c.name;
    j["task"] = to_string(c.task);
    j["model"] = to_string(c.model);
    if (c.sbm) {
        j["dataset"]["sbm"] = {{"block_sizes", c.sbm->block_sizes}, {"p_in", c.sbm->p_in}, {"p_out", c.sbm->p_out},
                               {"seed", c.sbm->seed}, {"views", c.sbm->views}};
    } else {
        j["dataset"]["path"] = c.dataset_path;
    }
    if (c.train_per_class) j["train_per_class"] = *c.train_per_class;
    else j["train_fraction"] = c.train_fraction;
    j["val_fraction"] = c.val_fraction;
    j["test_edge_fraction"] = c.test_edge_fraction;
    j["val_edge_fraction"] = c.val_edge_fraction;
    j["split_seed"] = c.split_seed;
    j["resplit_per_seed"] = c.resplit_per_seed;
    j["edge_features"] = to_string(c.edge_features);
    j["reduce_dim"] = c.reduce_dim;
    j["edge_weights"] = to_string(c.edge_weights);
    j["sign_mode"] = to_string(c.sign_mode);
    j["epsilon"] = c.epsilon;
    j["tpgc_hidden"] = c.tpgc_hidden;
    j["gc_hidden"] = c.gc_hidden;
    j["embed_dim"] = c.embed_dim;
    j["learning_rate"] = c.learning_rate;
    j["patience"] = c.patience;
    j["max_epochs"] = c.max_epochs;
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    return j;
}

/// Task defaults overridden by whatever keys `j` carries; unknown keys are rejected.
inline ExperimentConfig config_from_json(const Json& j) {
    static const std::set<std::string> known{
        "name", "task", "model", "dataset", "train_per_class", "train_fraction", "val_fraction", "test_edge_fraction",
        "val_edge_fraction", "split_seed", "resplit_per_seed", "edge_features", "reduce_dim", "edge_weights", "sign_mode",
        "epsilon", "tpgc_hidden", "gc_hidden", "embed_dim", "learning_rate", "patience", "max_epochs", "seeds", "output_dir"};
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    for (const auto& [k, _] : j.items())
        if (!known.count(k)) throw InvalidArgument("config: unknown key '" + k + "'");
    try {
        auto c = ExperimentConfig::defaults_for(parse_task_kind(j.value("task", std::string("node_class"))));
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("name", c.name);
        if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            if (d.contains("path")) c.dataset_path = d.at("path").get<std::string>();
            if (d.contains("sbm")) {
                const auto& s = d.at("sbm");
                SbmSpec spec;
                spec.block_sizes = s.value("block_sizes", spec.block_sizes);
                spec.p_in = s.value("p_in", spec.p_in);
                spec.p_out = s.value("p_out", spec.p_out);
                spec.seed = s.value("seed", spec.seed);
                spec.views = s.value("views", spec.views);
                c.sbm = spec;
            }
        }
        if (j.contains("train_per_class")) c.train_per_class = j.at("train_per_class").get<std::size_t>();
        get("train_fraction", c.train_fraction);
        get("val_fraction", c.val_fraction);
        get("test_edge_fraction", c.test_edge_fraction);
        get("val_edge_fraction", c.val_edge_fraction);
        get("split_seed", c.split_seed);
        get("resplit_per_seed", c.resplit_per_seed);
        if (j.contains("edge_features")) c.edge_features = parse_edge_feature_kind(j.at("edge_features").get<std::string>());
        get("reduce_dim", c.reduce_dim);
        if (j.contains("edge_weights")) c.edge_weights = parse_edge_weights(j.at("edge_weights").get<std::string>());
        if (j.contains("sign_mode")) c.sign_mode = parse_sign_mode(j.at("sign_mode").get<std::string>());
        get("epsilon", c.epsilon);
        get("tpgc_hidden", c.tpgc_hidden);
        get("gc_hidden", c.gc_hidden);
        get("embed_dim", c.embed_dim);
        get("learning_rate", c.learning_rate);
        get("patience", c.patience);
        get("max_epochs", c.max_epochs);
        get("seeds", c.seeds);
        get("output_dir", c.output_dir);
        c.validate();
        return c;
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("missing_file", "cannot open " + path.string());
    try {
        return config_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

/// 64-bit FNV-1a over the canonical JSON, ignoring the name and output directory.
inline std::string config_hash(const ExperimentConfig& c) {
    Json j = to_json(c);
    j.erase("name");
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Data and model preparation

struct PreparedData {
    GraphInput input;
    std::vector<int> labels;
    Splits splits;
    std::optional<LinkSplit> link;
    std::size_t num_views = 1;
    int num_classes = 0;
};

inline Splits make_node_splits(const ExperimentConfig& c, const std::vector<int>& labels, std::uint64_t split_seed) {
    const TrainSpec spec = c.train_per_class ? TrainSpec::per_class(*c.train_per_class) : TrainSpec::fraction_of_class(c.train_fraction);
    return split_nodes(labels, spec, c.val_fraction, split_seed);
}

/// Loads or generates the data for one seed and builds the split.
inline PreparedData prepare_data(const ExperimentConfig& c, std::uint64_t seed) {
    c.validate();
    const std::uint64_t split_seed = c.resplit_per_seed ? derive_seed(c.split_seed, seed) : c.split_seed;
    // a split file on disk is used as-is unless every seed asks for its own split
    auto use_file_splits = [&](const Splits& s) { return !c.resplit_per_seed && !s.train.empty(); };

    if (c.task == TaskKind::multi_graph) {
        MultiViewGraph mv = c.sbm ? sbm_views(c.sbm->block_sizes, c.sbm->views, c.sbm->p_in, c.sbm->p_out, c.sbm->seed)
                                  : io::load_multi_view_dataset(c.dataset_path);
        if (!use_file_splits(mv.splits)) mv.splits = make_node_splits(c, mv.labels, split_seed);
        PreparedData d{GraphInput::from_views(mv.views, mv.features), mv.labels, mv.splits, std::nullopt, mv.views.size(),
                       mv.num_classes()};
        return d;
    }

    LabeledGraph g = c.sbm ? sbm_generate(c.sbm->block_sizes, c.sbm->p_in, c.sbm->p_out, c.sbm->seed) : io::load_dataset(c.dataset_path);
    if (c.task == TaskKind::link_pred) {
        auto split = link_split(g.adjacency, c.test_edge_fraction, c.val_edge_fraction, split_seed);
        PreparedData d{GraphInput::from_graph(split.train, g.features), g.labels, {}, std::move(split), 1, g.num_classes()};
        return d;
    }
    if (!use_file_splits(g.splits)) g.splits = make_node_splits(c, g.labels, split_seed);
    PreparedData d{GraphInput::from_graph(g.adjacency, g.features), g.labels, g.splits, std::nullopt, 1, g.num_classes()};
    return d;
}

inline ModelConfig model_config(const ExperimentConfig& c, const PreparedData& d) {
    ModelConfig mc;
    mc.kind = c.model;
    mc.recipe = {c.edge_features, c.reduce_dim};
    mc.tpgc_dims = c.tpgc_hidden;
    mc.tpgc_dims.push_back(1);
    mc.gc_dims = c.gc_hidden;
    mc.epsilon = c.epsilon;
    mc.sign_mode = c.sign_mode;
    mc.gat_edge_weights = c.edge_weights;
    if (c.task == TaskKind::link_pred) {
        mc.gc_dims.push_back(c.embed_dim);
        return link_model_config(mc);
    }
    mc.gc_dims.push_back(static_cast<std::size_t>(std::max(d.num_classes, 1)));
    return mc;
}

inline EtGnnModel make_model(const ExperimentConfig& c, const PreparedData& d, std::uint64_t seed) {
    return EtGnnModel(model_config(c, d), d.input.features.cols(), d.num_views, seed);
}

inline TrainConfig train_config(const ExperimentConfig& c) { return {c.learning_rate, c.max_epochs, c.patience}; }

// ---------------------------------------------------------------------------
// Results

using MetricMap = std::map<std::string, double>;

struct SeedResult {
    std::uint64_t seed = 0;
    MetricMap metrics;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double best_val_loss = 0.0;
};

struct ResultRecord {
    std::string name;
    std::string config_hash;
    TaskKind task = TaskKind::node_class;
    ModelKind model = ModelKind::et_gcn;
    std::vector<SeedResult> runs;
    std::map<std::string, MeanStd> summary;  // over finite per-seed values
};

inline MetricMap evaluate_metrics(const ExperimentConfig& c, const EtGnnModel& model, const PreparedData& d) {
    MetricMap m;
    if (c.task == TaskKind::link_pred) {
        auto r = evaluate_link_predictor(model, d.input, *d.link);
        m = {{"test_auc", r.test.auc}, {"test_ap", r.test.ap}, {"val_auc", r.val.auc}, {"val_ap", r.val.ap}};
    } else {
        auto r = evaluate_node_classifier(model, d.input, d.labels, d.splits);
        m = {{"test_accuracy", r.test_accuracy}, {"val_accuracy", r.val_accuracy}, {"homophily", r.homophily_best}};
    }
    return m;
}

struct SeedRun {
    SeedResult result;
    TrainResult train;
};

inline SeedRun run_seed(const ExperimentConfig& c, std::uint64_t seed) {
    auto data = prepare_data(c, seed);
    auto model = make_model(c, data, seed);
    const auto tc = train_config(c);
    SeedRun out;
    out.result.seed = seed;
    if (c.task == TaskKind::link_pred) {
        auto r = train_link_predictor(model, data.input, *data.link, tc, seed);
        out.result.metrics = {{"test_auc", r.test.auc}, {"test_ap", r.test.ap}, {"val_auc", r.val.auc}, {"val_ap", r.val.ap}};
        out.train = std::move(r.train);
    } else {
        auto r = train_node_classifier(model, data.input, data.labels, data.splits, tc);
        out.result.metrics = {{"test_accuracy", r.test_accuracy},
                              {"val_accuracy", r.val_accuracy},
                              {"homophily_init", r.homophily_init},
                              {"homophily_best", r.homophily_best}};
        out.train = std::move(r.train);
    }
    out.result.best_epoch = out.train.best_epoch;
    out.result.epochs_run = out.train.history.size();
    out.result.best_val_loss = out.train.best.loss;
    return out;
}

inline std::map<std::string, MeanStd> summarize(const std::vector<SeedResult>& runs) {
    std::map<std::string, std::vector<double>> by_metric;
    for (const auto& r : runs)
        for (const auto& [k, v] : r.metrics)
            if (std::isfinite(v)) by_metric[k].push_back(v);
    std::map<std::string, MeanStd> out;
    for (const auto& [k, vs] : by_metric) out[k] = mean_std(vs);
    return out;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_or_nan(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

inline Json to_json(const ResultRecord& r) {
    Json j;
    j["name"] = r.name;
    j["config_hash"] = r.config_hash;
    j["task"] = to_string(r.task);
    j["model"] = to_string(r.model);
    j["runs"] = Json::array();
    for (const auto& s : r.runs) {
        Json m = Json::object();
        for (const auto& [k, v] : s.metrics) m[k] = finite_or_null(v);
        j["runs"].push_back({{"seed", s.seed}, {"metrics", m}, {"best_epoch", s.best_epoch}, {"epochs_run", s.epochs_run},
                             {"best_val_loss", finite_or_null(s.best_val_loss)}});
    }
    j["summary"] = Json::object();
    for (const auto& [k, ms] : r.summary) j["summary"][k] = {{"mean", ms.mean}, {"std", ms.std}};
    return j;
}

inline ResultRecord record_from_json(const Json& j) {
    try {
        ResultRecord r;
        r.name = j.at("name").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.task = parse_task_kind(j.at("task").get<std::string>());
        r.model = parse_model_kind(j.at("model").get<std::string>());
        for (const auto& s : j.at("runs")) {
            SeedResult sr;
            sr.seed = s.at("seed").get<std::uint64_t>();
            for (const auto& [k, v] : s.at("metrics").items()) sr.metrics[k] = number_or_nan(v);
            sr.best_epoch = s.at("best_epoch").get<std::size_t>();
            sr.epochs_run = s.at("epochs_run").get<std::size_t>();
            sr.best_val_loss = number_or_nan(s.at("best_val_loss"));
            r.runs.push_back(std::move(sr));
        }
        r.summary = summarize(r.runs);
        return r;
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("result record: ") + e.what());
    }
}

inline ResultRecord load_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("missing_file", "cannot open " + path.string());
    try {
        return record_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

inline void write_history_csv(const std::filesystem::path& path, const TrainResult& t) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out.precision(17);
    auto cell = [&](double v) -> std::ostream& {
        if (std::isfinite(v)) out << v;
        return out;
    };
    out << "epoch,train_loss,val_loss,val_metric,homophily\n";
    out << "0,,";
    cell(t.initial.loss) << ',';
    cell(t.initial.metric) << ',';
    cell(t.initial.homophily) << '\n';
    for (const auto& h : t.history) {
        out << h.epoch << ',';
        cell(h.train_loss) << ',';
        cell(h.val_loss) << ',';
        cell(h.val_metric) << ',';
        cell(h.homophily) << '\n';
    }
}

/// Trains every seed. With an output directory, writes result.json, the config,
/// one history CSV per seed and a checkpoint of the seed with the lowest
/// validation loss.
inline ResultRecord run_experiment(const ExperimentConfig& c) {
    c.validate();
    ResultRecord rec{c.name, config_hash(c), c.task, c.model, {}, {}};
    std::optional<SeedRun> best;
    const std::filesystem::path out = c.output_dir;
    for (auto seed : c.seeds) {
        SeedRun run;
        try {
            run = run_seed(c, seed);
        } catch (const Error& e) {
            throw Error(e.kind(), "experiment '" + c.name + "' seed " + std::to_string(seed) + ": " + e.what());
        }
        if (!out.empty()) write_history_csv(out / ("history_seed" + std::to_string(seed) + ".csv"), run.train);
        rec.runs.push_back(run.result);
        if (!best || run.result.best_val_loss < best->result.best_val_loss) best = std::move(run);
    }
    rec.summary = summarize(rec.runs);
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream(out / "config.json") << to_json(c).dump(2) << '\n';
        std::ofstream(out / "result.json") << to_json(rec).dump(2) << '\n';
        io::save_checkpoint(out / "checkpoint", best->train.best_params, best->result.seed, best->result.best_epoch);
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Reporting

/// "80.8±0.7" style: one decimal each.
inline std::string format_mean_std(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f±%.1f", mean, std);
    return buf;
}

/// Table of mean±std (in percent) per metric, one row per record, sorted by name.
inline std::string report(std::vector<ResultRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::set<std::string> metrics;
    for (const auto& r : records)
        for (const auto& [k, _] : r.summary) metrics.insert(k);
    std::ostringstream os;
    os << "| name | task | model | seeds |";
    for (const auto& m : metrics) os << ' ' << m << " |";
    os << "\n|---|---|---|---|";
    for (std::size_t i = 0; i < metrics.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& r : records) {
        os << "| " << r.name << " | " << to_string(r.task) << " | " << to_string(r.model) << " | " << r.runs.size() << " |";
        for (const auto& m : metrics) {
            auto it = r.summary.find(m);
            os << ' ' << (it == r.summary.end() ? std::string("-") : format_mean_std(100.0 * it->second.mean, 100.0 * it->second.std)) << " |";
        }
        os << '\n';
    }
    return os.str();
}

/// Same content as `report` as CSV; mean and std in separate columns.
inline std::string report_csv(std::vector<ResultRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::set<std::string> metrics;
    for (const auto& r : records)
        for (const auto& [k, _] : r.summary) metrics.insert(k);
    std::ostringstream os;
    os << "name,task,model,seeds";
    for (const auto& m : metrics) os << ',' << m << "_mean," << m << "_std";
    os << '\n';
    char buf[32];
    for (const auto& r : records) {
        os << r.name << ',' << to_string(r.task) << ',' << to_string(r.model) << ',' << r.runs.size();
        for (const auto& m : metrics) {
            auto it = r.summary.find(m);
            if (it == r.summary.end()) {
                os << ",,";
                continue;
            }
            std::snprintf(buf, sizeof buf, ",%.1f", 100.0 * it->second.mean);
            os << buf;
            std::snprintf(buf, sizeof buf, ",%.1f", 100.0 * it->second.std);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Reduced-size gradient check of a configured model

struct ModelGradCheck {
    GradCheckReport report;
    std::size_t nodes = 0;
    std::size_t attempts = 0;
};

/// Builds a two-block SBM of `nodes` nodes (or `views` of them), instantiates the
/// configured model on it and checks every parameter. Draws landing within
/// `min_kink_margin` of a ReLU/clamp kink are redrawn, up to `max_attempts`.
inline ModelGradCheck model_gradcheck(ExperimentConfig c, std::size_t nodes, std::uint64_t seed,
                                      const GradCheckOptions& opt = {}, double min_kink_margin = 1e-3,
                                      std::size_t max_attempts = 8) {
    if (nodes < 4) throw InvalidArgument("gradcheck: need at least 4 nodes");
    c.dataset_path.clear();
    c.sbm = SbmSpec{{nodes / 2, nodes - nodes / 2}, 0.5, 0.15, seed, std::max<std::size_t>(c.sbm ? c.sbm->views : 1, c.task == TaskKind::multi_graph ? 2 : 1)};
    c.train_per_class = std::size_t{2};
    c.val_fraction = 0.25;
    c.test_edge_fraction = 0.2;
    c.val_edge_fraction = 0.2;
    c.resplit_per_seed = false;
    ModelGradCheck out;
    out.nodes = nodes;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        c.sbm->seed = derive_seed(seed, attempt);
        c.split_seed = derive_seed(seed, 100 + attempt);
        auto data = prepare_data(c, seed);
        auto model = make_model(c, data, derive_seed(seed, 200 + attempt));
        ScalarFn fn;
        if (c.task == TaskKind::link_pred) {
            std::vector<NodePair> pairs = undirected_edges(data.link->train);
            const auto npos = pairs.size();
            pairs.insert(pairs.end(), data.link->test_neg.begin(), data.link->test_neg.end());
            std::vector<double> targets(npos, 1.0);
            targets.resize(pairs.size(), 0.0);
            fn = [&model, &data, pairs, targets](ad::Tape& t) {
                return ad::bce_with_logits(t, ad::pair_scores(t, model.forward(t, data.input).output, pairs), targets);
            };
        } else {
            fn = [&model, &data](ad::Tape& t) {
                return ad::cross_entropy_masked(t, model.forward(t, data.input).output, data.labels, data.splits.train);
            };
        }
        out.attempts = attempt + 1;
        out.report = check_gradients(model.params(), fn, opt);
        if (out.report.kink_margin >= min_kink_margin) break;
    }
    return out;
}

}  // namespace tpgc

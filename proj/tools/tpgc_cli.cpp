#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tpgc/tpgc.hpp"

namespace fs = std::filesystem;
using tpgc::Json;

namespace {

/// Flags that mirror ExperimentConfig fields; unset flags leave the config file
/// (or task defaults) alone.
struct ConfigFlags {
    std::string config_file;
    std::optional<std::string> name, task, model, dataset, edge_features, edge_weights, sign_mode, output_dir;
    std::optional<std::vector<std::size_t>> sbm_blocks, tpgc_hidden, gc_hidden;
    std::optional<double> p_in, p_out, train_fraction, val_fraction, test_edge_fraction, val_edge_fraction, epsilon, lr;
    std::optional<std::uint64_t> sbm_seed, split_seed;
    std::optional<std::size_t> views, train_per_class, reduce_dim, embed_dim, patience, max_epochs, seed_count;
    std::optional<std::vector<std::uint64_t>> seeds;
    bool resplit = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON experiment config");
        app->add_option("--name", name);
        app->add_option("--task", task, "node_class|link_pred|multi_graph");
        app->add_option("--model", model, "et_gcn|et_gat|gcn_only");
        app->add_option("--dataset", dataset, "dataset directory");
        app->add_option("--sbm-blocks", sbm_blocks, "use a generated SBM with these block sizes")->delimiter(',');
        app->add_option("--p-in", p_in);
        app->add_option("--p-out", p_out);
        app->add_option("--sbm-seed", sbm_seed);
        app->add_option("--views", views, "SBM views (multi_graph)");
        app->add_option("--train-per-class", train_per_class);
        app->add_option("--train-fraction", train_fraction);
        app->add_option("--val-fraction", val_fraction);
        app->add_option("--test-edge-fraction", test_edge_fraction);
        app->add_option("--val-edge-fraction", val_edge_fraction);
        app->add_option("--split-seed", split_seed);
        app->add_flag("--resplit-per-seed", resplit);
        app->add_option("--edge-features", edge_features, "concat|subtract|stack");
        app->add_option("--reduce-dim", reduce_dim);
        app->add_option("--edge-weights", edge_weights, "a_tilde|alpha|blend");
        app->add_option("--sign-mode", sign_mode, "clamp|abs");
        app->add_option("--epsilon", epsilon);
        app->add_option("--tpgc-hidden", tpgc_hidden)->delimiter(',');
        app->add_option("--gc-hidden", gc_hidden)->delimiter(',');
        app->add_option("--embed-dim", embed_dim);
        app->add_option("--lr", lr);
        app->add_option("--patience", patience);
        app->add_option("--max-epochs", max_epochs);
        app->add_option("--seeds", seeds)->delimiter(',');
        app->add_option("--seed-count", seed_count, "shorthand for seeds 0..k-1");
        app->add_option("--output-dir", output_dir);
    }

    tpgc::ExperimentConfig resolve() const {
        Json j = Json::object();
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw tpgc::Error("missing_file", "cannot open " + config_file);
            try {
                j = Json::parse(in);
            } catch (const Json::parse_error& e) {
                throw tpgc::ParseError(config_file, 0, e.what());
            }
        }
        auto set = [&](const char* key, const auto& opt) {
            if (opt) j[key] = *opt;
        };
        set("name", name);
        set("task", task);
        set("model", model);
        if (dataset) j["dataset"] = {{"path", *dataset}};
        if (sbm_blocks || p_in || p_out || sbm_seed || views) {
            if (dataset) throw tpgc::InvalidArgument("--dataset and SBM flags are mutually exclusive");
            Json& s = j["dataset"]["sbm"];
            if (!s.is_object()) s = Json::object();
            j["dataset"].erase("path");
            set_in(s, "block_sizes", sbm_blocks);
            set_in(s, "p_in", p_in);
            set_in(s, "p_out", p_out);
            set_in(s, "seed", sbm_seed);
            set_in(s, "views", views);
        }
        set("train_per_class", train_per_class);
        if (train_fraction) {
            j.erase("train_per_class");
            j["train_fraction"] = *train_fraction;
        }
        set("val_fraction", val_fraction);
        set("test_edge_fraction", test_edge_fraction);
        set("val_edge_fraction", val_edge_fraction);
        set("split_seed", split_seed);
        if (resplit) j["resplit_per_seed"] = true;
        set("edge_features", edge_features);
        set("reduce_dim", reduce_dim);
        set("edge_weights", edge_weights);
        set("sign_mode", sign_mode);
        set("epsilon", epsilon);
        set("tpgc_hidden", tpgc_hidden);
        set("gc_hidden", gc_hidden);
        set("embed_dim", embed_dim);
        set("learning_rate", lr);
        set("patience", patience);
        set("max_epochs", max_epochs);
        set("seeds", seeds);
        if (seed_count) {
            if (seeds) throw tpgc::InvalidArgument("--seeds and --seed-count are mutually exclusive");
            std::vector<std::uint64_t> s(*seed_count);
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
            j["seeds"] = s;
        }
        set("output_dir", output_dir);
        return tpgc::config_from_json(j);
    }

private:
    template <class T>
    static void set_in(Json& j, const char* key, const std::optional<T>& v) {
        if (v) j[key] = *v;
    }
};

Json metrics_json(const tpgc::MetricMap& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[k] = tpgc::finite_or_null(v);
    return j;
}

int cmd_train(const ConfigFlags& flags) {
    const auto cfg = flags.resolve();
    const auto rec = tpgc::run_experiment(cfg);
    std::cout << tpgc::to_json(rec).dump(2) << '\n';
    return 0;
}

int cmd_eval(const std::string& run_dir, const ConfigFlags& flags, const std::string& checkpoint_dir) {
    tpgc::ExperimentConfig cfg;
    fs::path ckpt = checkpoint_dir;
    if (!run_dir.empty()) {
        cfg = tpgc::load_config(fs::path(run_dir) / "config.json");
        if (ckpt.empty()) ckpt = fs::path(run_dir) / "checkpoint";
    } else {
        cfg = flags.resolve();
    }
    if (ckpt.empty()) throw tpgc::InvalidArgument("eval needs --run-dir or --checkpoint");
    const auto ck = tpgc::io::load_checkpoint(ckpt);
    const auto data = tpgc::prepare_data(cfg, ck.seed);
    auto model = tpgc::make_model(cfg, data, ck.seed);
    if (ck.params.size() != model.params().names().size())
        throw tpgc::DimensionError("checkpoint has " + std::to_string(ck.params.size()) + " parameters, model expects " +
                                   std::to_string(model.params().names().size()));
    model.params().restore(ck.params);
    Json out{{"seed", ck.seed}, {"epoch", ck.epoch}, {"metrics", metrics_json(tpgc::evaluate_metrics(cfg, model, data))}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_file, const std::string& format) {
    std::vector<tpgc::ResultRecord> records;
    for (const auto& in : inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "result.json";
        records.push_back(tpgc::load_record(p));
    }
    if (format != "md" && format != "csv") throw tpgc::InvalidArgument("--format must be md or csv");
    const auto table = format == "csv" ? tpgc::report_csv(records) : tpgc::report(records);
    if (out_file.empty()) {
        std::cout << table;
    } else {
        std::ofstream out(out_file);
        if (!out) throw tpgc::Error("io_error", "cannot write " + out_file);
        out << table;
    }
    return 0;
}

struct GenSbmFlags {
    std::vector<std::size_t> blocks{50, 50};
    double p_in = 0.2, p_out = 0.02;
    std::uint64_t seed = 7;
    std::size_t views = 1;
    std::optional<std::size_t> train_per_class;
    double train_fraction = 0.1;
    double val_fraction = 0.5;
    std::uint64_t split_seed = 0;
    std::string out;
};

int cmd_gen_sbm(const GenSbmFlags& f) {
    const auto spec = f.train_per_class ? tpgc::TrainSpec::per_class(*f.train_per_class) : tpgc::TrainSpec::fraction_of_class(f.train_fraction);
    Json summary{{"out", f.out}, {"views", f.views}};
    if (f.views > 1) {
        auto mv = tpgc::sbm_views(f.blocks, f.views, f.p_in, f.p_out, f.seed);
        mv.splits = tpgc::split_nodes(mv.labels, spec, f.val_fraction, f.split_seed);
        tpgc::io::save_multi_view_dataset(f.out, mv);
        summary["nodes"] = mv.features.rows();
    } else {
        auto g = tpgc::sbm_generate(f.blocks, f.p_in, f.p_out, f.seed);
        g.splits = tpgc::split_nodes(g.labels, spec, f.val_fraction, f.split_seed);
        tpgc::io::save_dataset(f.out, g);
        summary["nodes"] = g.n();
        summary["edges"] = g.adjacency.off_diagonal_count() / 2;
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_gradcheck(const ConfigFlags& flags, std::size_t nodes, std::uint64_t seed) {
    auto cfg = flags.resolve();
    const auto res = tpgc::model_gradcheck(cfg, nodes, seed);
    Json params = Json::array();
    for (const auto& w : res.report.worst) {
        params.push_back({{"param", w.param}, {"index", w.index}, {"analytic", w.analytic}, {"numeric", w.numeric},
                          {"abs_err", w.abs_err}, {"rel_err", w.rel_err}, {"pass", w.pass}});
    }
    Json out{{"nodes", res.nodes},
             {"attempts", res.attempts},
             {"checked", res.report.checked},
             {"failures", res.report.failures},
             {"max_abs_err", res.report.max_abs_err},
             {"kink_margin", tpgc::finite_or_null(res.report.kink_margin)},
             {"passed", res.report.passed()},
             {"worst_per_param", params}};
    std::cout << out.dump(2) << '\n';
    return res.report.passed() ? 0 : 1;
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << Json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge-tensor graph convolution: training and evaluation"};
    app.require_subcommand(1);

    ConfigFlags train_flags, eval_flags, gc_flags;
    auto* train = app.add_subcommand("train", "train every seed of an experiment and write its record");
    train_flags.attach(train);

    auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint without training");
    std::string run_dir, checkpoint_dir;
    eval->add_option("--run-dir", run_dir, "output directory of a previous train run");
    eval->add_option("--checkpoint", checkpoint_dir, "checkpoint directory (defaults to <run-dir>/checkpoint)");
    eval_flags.attach(eval);

    auto* rep = app.add_subcommand("report", "tabulate result records as mean±std");
    std::vector<std::string> inputs;
    std::string report_out;
    rep->add_option("inputs", inputs, "result.json files or run directories")->required();
    rep->add_option("--out", report_out, "write the table here instead of stdout");
    std::string report_format = "md";
    rep->add_option("--format", report_format, "md|csv");

    auto* gen = app.add_subcommand("gen-sbm", "write a stochastic block model dataset");
    GenSbmFlags gf;
    gen->add_option("--blocks", gf.blocks)->delimiter(',');
    gen->add_option("--p-in", gf.p_in);
    gen->add_option("--p-out", gf.p_out);
    gen->add_option("--seed", gf.seed);
    gen->add_option("--views", gf.views);
    gen->add_option("--train-per-class", gf.train_per_class);
    gen->add_option("--train-fraction", gf.train_fraction);
    gen->add_option("--val-fraction", gf.val_fraction);
    gen->add_option("--split-seed", gf.split_seed);
    gen->add_option("--out", gf.out)->required();

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of a configured model at reduced size");
    std::size_t gc_nodes = 12;
    std::uint64_t gc_seed = 0;
    gc_flags.attach(gc);
    gc->add_option("--nodes", gc_nodes, "graph size for the check");
    gc->add_option("--seed", gc_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 64;
    }

    try {
        // gradcheck needs no data source of its own
        if (gc->parsed() && !gc_flags.dataset && !gc_flags.sbm_blocks && gc_flags.config_file.empty()) gc_flags.sbm_blocks = {6, 6};
        if (train->parsed()) return cmd_train(train_flags);
        if (eval->parsed()) return cmd_eval(run_dir, eval_flags, checkpoint_dir);
        if (rep->parsed()) return cmd_report(inputs, report_out, report_format);
        if (gen->parsed()) return cmd_gen_sbm(gf);
        if (gc->parsed()) return cmd_gradcheck(gc_flags, gc_nodes, gc_seed);
    } catch (const tpgc::ParseError& e) {
        print_error(e.kind(), e.what());
        return 3;
    } catch (const tpgc::Error& e) {
        print_error(e.kind(), e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace tpgc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("tpgc_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

/// Runs `f` and returns the line number of the ParseError it throws (0 if none).
template <class F>
std::size_t parse_error_line(F&& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

ExperimentConfig tiny_config(TaskKind task = TaskKind::node_class) {
    auto c = ExperimentConfig::defaults_for(task);
    c.sbm = SbmSpec{{15, 15}, 0.3, 0.03, 5, task == TaskKind::multi_graph ? 2u : 1u};
    c.train_per_class = std::size_t{3};
    c.val_fraction = 0.3;
    c.max_epochs = 15;
    c.patience = 10;
    c.tpgc_hidden = {4};
    c.gc_hidden = {8};
    c.embed_dim = 8;
    c.reduce_dim = 4;
    return c;
}

}  // namespace

TEST(Io, TwoNodeFixture) {
    auto dir = scratch("two_node");
    write_file(dir / "features.txt", "1 0\n0 1\n");
    write_file(dir / "labels.txt", "0\n1\n");
    write_file(dir / "edges.tsv", "# comment\n0\t1\n");
    auto g = io::load_dataset(dir);
    EXPECT_EQ(g.n(), 2u);
    EXPECT_DOUBLE_EQ(g.adjacency.at(1, 0), 1.0);
    EXPECT_EQ(g.labels, (std::vector<int>{0, 1}));
    EXPECT_TRUE(g.splits.train.empty());
}

TEST(Io, ErrorsCarryLineNumbers) {
    auto dir = scratch("errors");
    write_file(dir / "e1.tsv", "0 1\n1 2\n");
    EXPECT_EQ(parse_error_line([&] { io::read_edge_list(dir / "e1.tsv", 2); }), 2u);  // index == n
    write_file(dir / "e2.tsv", "0 1\n\n1 0\n");
    EXPECT_EQ(parse_error_line([&] { io::read_edge_list(dir / "e2.tsv", 3); }), 3u);  // duplicate
    write_file(dir / "e3.tsv", "0 x\n");
    EXPECT_EQ(parse_error_line([&] { io::read_edge_list(dir / "e3.tsv", 3); }), 1u);
    write_file(dir / "e4.tsv", "0 1 -2\n");
    EXPECT_EQ(parse_error_line([&] { io::read_edge_list(dir / "e4.tsv", 3); }), 1u);
    write_file(dir / "l.txt", "0\n-2\n");
    EXPECT_EQ(parse_error_line([&] { io::read_labels(dir / "l.txt", 2); }), 2u);
    write_file(dir / "f.txt", "1 2\n3\n");
    EXPECT_EQ(parse_error_line([&] { io::read_features(dir / "f.txt"); }), 2u);
    write_file(dir / "s.txt", "#train\n0\n#bogus\n");
    EXPECT_EQ(parse_error_line([&] { io::read_splits(dir / "s.txt", 2); }), 3u);
    try {
        io::read_edge_list(dir / "e1.tsv", 2);
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("e1.tsv:2:"), std::string::npos);
    }
    EXPECT_THROW(io::read_features(dir / "missing.txt"), Error);
}

TEST(Io, SbmRoundTrip) {
    auto g = sbm_generate({12, 9}, 0.4, 0.05, 3);
    g.splits = split_nodes(g.labels, TrainSpec::per_class(2), 0.3, 1);
    auto dir = scratch("roundtrip");
    io::save_dataset(dir, g);
    auto back = io::load_dataset(dir);
    EXPECT_EQ(back.adjacency.entries(), g.adjacency.entries());
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.splits.train, g.splits.train);
    EXPECT_EQ(back.splits.test, g.splits.test);
    for (std::size_t k = 0; k < g.features.data().size(); ++k)
        EXPECT_NEAR(back.features.data()[k], g.features.data()[k], 1e-5);

    auto mv = sbm_views({6, 6}, 3, 0.5, 0.1, 2);
    io::save_multi_view_dataset(dir / "mv", mv);
    auto mvb = io::load_multi_view_dataset(dir / "mv");
    ASSERT_EQ(mvb.views.size(), 3u);
    for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(mvb.views[v].entries(), mv.views[v].entries());
}

TEST(Io, CheckpointRoundTripIsExact) {
    std::mt19937_64 rng(4);
    ParamTape::Snapshot snap{{"gc.0.weight", tpgc::testing::random_matrix(rng, 3, 4)}, {"theta", tpgc::testing::random_matrix(rng, 6, 1)}};
    auto dir = scratch("ckpt");
    io::save_checkpoint(dir, snap, 17, 42);
    auto c = io::load_checkpoint(dir);
    EXPECT_EQ(c.seed, 17u);
    EXPECT_EQ(c.epoch, 42u);
    EXPECT_EQ(c.params, snap);
    write_file(dir / "theta.txt", "6 1 6\n0 0 nan\n1 0 1\n2 0 1\n3 0 1\n4 0 1\n5 0 1\n");
    EXPECT_THROW(io::load_checkpoint(dir), Error);
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, JsonRoundTripAndDefaults) {
    auto c = tiny_config(TaskKind::link_pred);
    c.name = "lp";
    c.seeds = {1, 2, 3};
    auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));

    auto mg = config_from_json(nlohmann::json{{"task", "multi_graph"}, {"dataset", {{"sbm", {{"views", 2}}}}}});
    EXPECT_EQ(mg.tpgc_hidden, (std::vector<std::size_t>{6}));
    EXPECT_EQ(mg.gc_hidden, (std::vector<std::size_t>{16}));
    EXPECT_DOUBLE_EQ(mg.learning_rate, 0.005);
    EXPECT_DOUBLE_EQ(mg.train_fraction, 0.1);
    EXPECT_DOUBLE_EQ(mg.val_fraction, 0.05);
}

TEST(Config, HashTracksSemanticFieldsOnly) {
    auto c = tiny_config();
    const auto h = config_hash(c);
    EXPECT_EQ(h.size(), 16u);
    auto renamed = c;
    renamed.name = "other";
    renamed.output_dir = "/tmp/elsewhere";
    EXPECT_EQ(config_hash(renamed), h);
    auto changed = c;
    changed.epsilon = 0.0;
    EXPECT_NE(config_hash(changed), h);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(config_from_json(nlohmann::json{{"dataset", {{"sbm", nlohmann::json::object()}}}, {"lr", 0.1}}), InvalidArgument);
    EXPECT_THROW(config_from_json(nlohmann::json{{"task", "node_class"}}), InvalidArgument);  // no data source
    EXPECT_THROW(config_from_json(nlohmann::json{{"dataset", {{"sbm", nlohmann::json::object()}}}, {"epsilon", -1}}),
                 InvalidArgument);
    EXPECT_THROW(config_from_json(nlohmann::json{{"dataset", {{"path", "/nonexistent/dir"}}}}), Error);
    EXPECT_THROW(config_from_json(nlohmann::json{{"dataset", {{"sbm", nlohmann::json::object()}}}, {"seeds", "zero"}}),
                 InvalidArgument);
    auto dir = scratch("bad_json");
    write_file(dir / "c.json", "{ not json");
    EXPECT_THROW(load_config(dir / "c.json"), ParseError);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(Experiment, RunWritesArtifacts) {
    auto c = tiny_config();
    c.output_dir = scratch("run").string();
    auto rec = run_experiment(c);
    ASSERT_EQ(rec.runs.size(), 1u);
    for (const char* k : {"test_accuracy", "val_accuracy", "homophily_init", "homophily_best"})
        EXPECT_TRUE(rec.runs[0].metrics.count(k)) << k;
    const fs::path out = c.output_dir;
    for (const char* f : {"config.json", "result.json", "history_seed0.csv", "checkpoint/manifest.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    auto back = load_record(out / "result.json");
    EXPECT_EQ(back.config_hash, rec.config_hash);
    EXPECT_EQ(back.runs[0].metrics.at("test_accuracy"), rec.runs[0].metrics.at("test_accuracy"));
    auto ck = io::load_checkpoint(out / "checkpoint");
    EXPECT_EQ(ck.epoch, rec.runs[0].best_epoch);

    std::ifstream hist(out / "history_seed0.csv");
    std::string header;
    std::getline(hist, header);
    EXPECT_EQ(header, "epoch,train_loss,val_loss,val_metric,homophily");
}

TEST(Experiment, DeterministicPerSeed) {
    for (auto task : {TaskKind::node_class, TaskKind::link_pred, TaskKind::multi_graph}) {
        auto c = tiny_config(task);
        c.seeds = {0, 1};
        auto a = run_experiment(c);
        auto b = run_experiment(c);
        ASSERT_EQ(a.runs.size(), 2u);
        for (std::size_t s = 0; s < 2; ++s) {
            EXPECT_EQ(a.runs[s].best_val_loss, b.runs[s].best_val_loss) << to_string(task);
            EXPECT_EQ(a.runs[s].metrics.size(), b.runs[s].metrics.size());
        }
    }
}

TEST(Experiment, GcnOnlyHasNoEdgeParameters) {
    auto c = tiny_config();
    c.model = ModelKind::gcn_only;
    auto d = prepare_data(c, 0);
    auto model = make_model(c, d, 0);
    for (const auto& name : model.params().names()) {
        EXPECT_EQ(name.find("tpgc"), std::string::npos) << name;
        EXPECT_EQ(name.find("theta"), std::string::npos) << name;
    }
    auto rec = run_experiment(c);
    EXPECT_TRUE(std::isnan(rec.runs[0].metrics.at("homophily_best")));  // no learned graph
}

TEST(Experiment, ErrorsNameTheExperimentAndSeed) {
    auto c = tiny_config();
    c.name = "broken";
    c.train_per_class = std::size_t{40};  // more than a block holds
    c.seeds = {3};
    try {
        run_experiment(c);
        FAIL();
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("experiment 'broken' seed 3"), std::string::npos) << msg;
    }
}

TEST(Report, FormatsMeanStd) {
    EXPECT_EQ(format_mean_std(80.83, 0.71), "80.8±0.7");
    EXPECT_EQ(format_mean_std(100.0, 0.0), "100.0±0.0");
}

TEST(Report, RowsSortedByName) {
    ResultRecord a{"zeta", "h1", TaskKind::node_class, ModelKind::et_gcn, {{}}, {{"test_accuracy", {0.808, 0.007}}}};
    ResultRecord b{"alpha", "h2", TaskKind::node_class, ModelKind::et_gat, {{}, {}}, {{"test_accuracy", {0.5, 0.1}}}};
    auto one = report({a});
    EXPECT_NE(one.find("| zeta | node_class | et_gcn | 1 | 80.8±0.7 |"), std::string::npos) << one;
    auto two = report({a, b});
    EXPECT_LT(two.find("alpha"), two.find("zeta"));
    EXPECT_NE(report_csv({a, b}).find("alpha"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Inference

TEST(EtGnnForward, SingleNodeGraph) {
    ModelConfig cfg;
    cfg.gc_dims = {4, 3};
    EtGnnModel model(cfg, 2, 1, 1);
    auto in = GraphInput::from_graph(SparseAdjacency::from_entries(1, {}, true), DenseMatrix{{0.3, -0.2}});
    auto out = etgnn_forward(model, in);
    ASSERT_EQ(out.rows(), 1u);
    ASSERT_EQ(out.cols(), 3u);
    EXPECT_NEAR(out(0, 0) + out(0, 1) + out(0, 2), 1.0, 1e-12);
}

TEST(EtGnnForward, ZeroFinalLayerGivesUniformOutput) {
    auto g = sbm_generate({5, 5}, 0.5, 0.1, 2);
    for (auto kind : {ModelKind::et_gcn, ModelKind::et_gat, ModelKind::gcn_only}) {
        ModelConfig cfg;
        cfg.kind = kind;
        cfg.gc_dims = {6, 2};
        EtGnnModel model(cfg, g.features.cols(), 1, 4);
        auto& w = model.params().value("gc.1.weight");
        w = DenseMatrix(w.rows(), w.cols());
        auto out = etgnn_forward(model, GraphInput::from_graph(g.adjacency, g.features));
        for (double v : out.data()) EXPECT_NEAR(v, 0.5, 1e-15) << to_string(kind);
    }
}

TEST(EtGnnForward, GoldenRegression) {
    auto g = sbm_generate({5, 5}, 0.5, 0.1, 10);
    const fs::path golden = fs::path(TPGC_TEST_DATA_DIR) / "golden_etgnn_n10.txt";
    std::ostringstream got;
    got.precision(17);
    for (auto kind : {ModelKind::et_gcn, ModelKind::et_gat}) {
        ModelConfig cfg;
        cfg.kind = kind;
        cfg.gc_dims = {32, 2};
        EtGnnModel model(cfg, g.features.cols(), 1, 10);
        auto out = etgnn_forward(model, GraphInput::from_graph(g.adjacency, g.features));
        for (double v : out.data()) got << v << '\n';
    }
    if (std::getenv("TPGC_UPDATE_GOLDEN")) std::ofstream(golden) << got.str();
    std::ifstream in(golden);
    ASSERT_TRUE(in) << "missing " << golden;
    std::istringstream now(got.str());
    double want = 0, have = 0;
    std::size_t count = 0;
    while (in >> want) {
        ASSERT_TRUE(now >> have);
        EXPECT_NEAR(have, want, 1e-12) << "entry " << count;
        ++count;
    }
    EXPECT_EQ(count, 40u);
}

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpgc/dense.hpp"
#include "tpgc/edge_tensor.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"
#include "tpgc/optim.hpp"
#include "tpgc/tasks.hpp"

// Dataset directory layout:
//   features.txt   one whitespace-separated row per node (defines n)
//   labels.txt     one integer per node, -1 for unlabeled
//   edges.tsv      `i<TAB>j[<TAB>w]` per undirected edge, 0-based, w defaults to 1
//   edges_<v>.tsv  instead of edges.tsv for multi-view data (v = 0, 1, ...)
//   splits.txt     optional; node ids under `#train`, `#val`, `#test` headers

namespace tpgc::io {

namespace fs = std::filesystem;

namespace detail {

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("missing_file", "cannot open " + p.string());
    return in;
}

inline std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error("io_error", "cannot write " + p.string());
    out.precision(17);
    return out;
}

inline bool blank_or_comment(const std::string& line) {
    auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

inline long long parse_index(std::istringstream& ls, const std::string& file, std::size_t lineno) {
    std::string tok;
    if (!(ls >> tok)) throw ParseError(file, lineno, "missing node index");
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        throw ParseError(file, lineno, "not an integer: '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError(file, lineno, "not an integer: '" + tok + "'");
    return v;
}

}  // namespace detail

inline DenseMatrix read_features(const fs::path& path) {
    auto in = detail::open_in(path);
    std::vector<double> data;
    std::size_t cols = 0, rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank_or_comment(line)) continue;
        std::istringstream ls(line);
        std::size_t c = 0;
        double v;
        while (ls >> v) {
            data.push_back(v);
            ++c;
        }
        if (!ls.eof()) throw ParseError(path.string(), lineno, "non-numeric feature value");
        if (rows == 0) cols = c;
        else if (c != cols) throw ParseError(path.string(), lineno, "expected " + std::to_string(cols) + " features, got " + std::to_string(c));
        ++rows;
    }
    if (rows == 0 || cols == 0) throw ParseError(path.string(), lineno, "no feature rows");
    return DenseMatrix(rows, cols, std::move(data));
}

inline std::vector<int> read_labels(const fs::path& path, std::size_t n) {
    auto in = detail::open_in(path);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank_or_comment(line)) continue;
        std::istringstream ls(line);
        const long long v = detail::parse_index(ls, path.string(), lineno);
        if (v < kUnlabeled || v > 1'000'000) throw ParseError(path.string(), lineno, "label out of range: " + std::to_string(v));
        labels.push_back(static_cast<int>(v));
    }
    if (labels.size() != n) {
        throw ParseError(path.string(), lineno, "expected " + std::to_string(n) + " labels, got " + std::to_string(labels.size()));
    }
    return labels;
}

inline SparseAdjacency read_edge_list(const fs::path& path, std::size_t n) {
    auto in = detail::open_in(path);
    std::vector<Entry> edges;
    std::set<std::pair<Index, Index>> seen;
    std::string line;
    std::size_t lineno = 0;
    const std::string file = path.string();
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank_or_comment(line)) continue;
        std::istringstream ls(line);
        const long long i = detail::parse_index(ls, file, lineno);
        const long long j = detail::parse_index(ls, file, lineno);
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
            throw ParseError(file, lineno, "node index out of range [0, " + std::to_string(n) + ")");
        }
        double w = 1.0;
        if (!(ls >> w)) {
            if (!ls.eof()) throw ParseError(file, lineno, "malformed weight");
            w = 1.0;
        }
        if (!std::isfinite(w) || w < 0.0) throw ParseError(file, lineno, "weight must be finite and nonnegative");
        const std::pair<Index, Index> key{static_cast<Index>(std::min(i, j)), static_cast<Index>(std::max(i, j))};
        if (!seen.insert(key).second) throw ParseError(file, lineno, "duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        edges.push_back({static_cast<Index>(i), static_cast<Index>(j), w});
    }
    return SparseAdjacency::from_undirected(n, edges);
}

inline Splits read_splits(const fs::path& path, std::size_t n) {
    auto in = detail::open_in(path);
    Splits s;
    std::vector<Index>* current = nullptr;
    std::string line;
    std::size_t lineno = 0;
    const std::string file = path.string();
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') {
            std::string tag = line.substr(pos);
            tag.erase(tag.find_last_not_of(" \t\r") + 1);
            if (tag == "#train") current = &s.train;
            else if (tag == "#val") current = &s.val;
            else if (tag == "#test") current = &s.test;
            else throw ParseError(file, lineno, "unknown section '" + tag + "'");
            continue;
        }
        if (!current) throw ParseError(file, lineno, "node id before any section header");
        std::istringstream ls(line);
        const long long v = detail::parse_index(ls, file, lineno);
        if (v < 0 || static_cast<std::size_t>(v) >= n) throw ParseError(file, lineno, "node index out of range");
        current->push_back(static_cast<Index>(v));
    }
    return s;
}

/// Loads a single-graph dataset and validates every invariant.
inline LabeledGraph load_dataset(const fs::path& root) {
    auto features = read_features(root / "features.txt");
    const std::size_t n = features.rows();
    LabeledGraph g{read_edge_list(root / "edges.tsv", n), std::move(features), read_labels(root / "labels.txt", n), {}};
    if (fs::exists(root / "splits.txt")) g.splits = read_splits(root / "splits.txt", n);
    g.validate();
    return g;
}

inline MultiViewGraph load_multi_view_dataset(const fs::path& root) {
    MultiViewGraph mv;
    mv.features = read_features(root / "features.txt");
    const std::size_t n = mv.features.rows();
    mv.labels = read_labels(root / "labels.txt", n);
    for (std::size_t v = 0; fs::exists(root / ("edges_" + std::to_string(v) + ".tsv")); ++v)
        mv.views.push_back(read_edge_list(root / ("edges_" + std::to_string(v) + ".tsv"), n));
    if (mv.views.empty()) throw Error("missing_file", "no edges_<v>.tsv files in " + root.string());
    if (fs::exists(root / "splits.txt")) mv.splits = read_splits(root / "splits.txt", n);
    return mv;
}

inline void write_edge_list(const fs::path& path, const SparseAdjacency& a) {
    auto out = detail::open_out(path);
    for (const auto& e : a.entries()) {
        if (e.row > e.col) continue;
        out << e.row << '\t' << e.col;
        if (e.weight != 1.0) out << '\t' << e.weight;
        out << '\n';
    }
}

inline void write_features(const fs::path& path, const DenseMatrix& m) {
    auto out = detail::open_out(path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
        out << '\n';
    }
}

inline void write_labels(const fs::path& path, const std::vector<int>& labels) {
    auto out = detail::open_out(path);
    for (int l : labels) out << l << '\n';
}

inline void write_splits(const fs::path& path, const Splits& s) {
    auto out = detail::open_out(path);
    for (const auto& [tag, set] : {std::pair{"#train", &s.train}, std::pair{"#val", &s.val}, std::pair{"#test", &s.test}}) {
        out << tag << '\n';
        for (Index i : *set) out << i << '\n';
    }
}

inline void save_dataset(const fs::path& root, const LabeledGraph& g) {
    fs::create_directories(root);
    write_features(root / "features.txt", g.features);
    write_labels(root / "labels.txt", g.labels);
    write_edge_list(root / "edges.tsv", g.adjacency);
    write_splits(root / "splits.txt", g.splits);
}

inline void save_multi_view_dataset(const fs::path& root, const MultiViewGraph& mv) {
    fs::create_directories(root);
    write_features(root / "features.txt", mv.features);
    write_labels(root / "labels.txt", mv.labels);
    for (std::size_t v = 0; v < mv.views.size(); ++v) write_edge_list(root / ("edges_" + std::to_string(v) + ".tsv"), mv.views[v]);
    write_splits(root / "splits.txt", mv.splits);
}

// ---------------------------------------------------------------------------
// Checkpoints: each parameter matrix in snapshot text form (one slot `r 0`
// per row, p = column count) plus a JSON manifest.

inline void write_matrix_snapshot(std::ostream& os, const DenseMatrix& m) {
    os.precision(17);
    os << m.rows() << ' ' << m.cols() << ' ' << m.rows() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        os << r << " 0";
        for (double v : m.row(r)) os << ' ' << v;
        os << '\n';
    }
}

inline DenseMatrix read_matrix_snapshot(std::istream& is, const std::string& name) {
    auto d = read_snapshot_data(is, name);
    DenseMatrix m(d.n, d.p);
    if (d.slots.size() != d.n) throw ParseError(name, 0, "matrix snapshot must list every row once");
    for (std::size_t k = 0; k < d.slots.size(); ++k) {
        const auto r = d.slots[k].first;
        for (std::size_t c = 0; c < d.p; ++c) m(r, c) = d.values[k * d.p + c];
    }
    return m;
}

inline void save_checkpoint(const fs::path& dir, const ParamTape::Snapshot& params, std::uint64_t seed, std::size_t epoch) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["epoch"] = epoch;
    manifest["params"] = nlohmann::json::array();
    for (const auto& [name, m] : params) {
        const std::string file = name + ".txt";
        auto out = detail::open_out(dir / file);
        write_matrix_snapshot(out, m);
        manifest["params"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"file", file}});
    }
    detail::open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

struct Checkpoint {
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    ParamTape::Snapshot params;
};

inline Checkpoint load_checkpoint(const fs::path& dir) {
    auto in = detail::open_in(dir / "manifest.json");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "manifest.json").string(), 0, e.what());
    }
    Checkpoint c;
    c.seed = manifest.at("seed").get<std::uint64_t>();
    c.epoch = manifest.at("epoch").get<std::size_t>();
    for (const auto& p : manifest.at("params")) {
        const auto file = dir / p.at("file").get<std::string>();
        auto pin = detail::open_in(file);
        auto m = read_matrix_snapshot(pin, file.string());
        if (m.rows() != p.at("rows").get<std::size_t>() || m.cols() != p.at("cols").get<std::size_t>()) {
            throw ParseError(file.string(), 0, "shape disagrees with manifest");
        }
        if (!all_finite(m.data())) throw NumericError("checkpoint parameter '" + p.at("name").get<std::string>() + "' is not finite");
        c.params.emplace(p.at("name").get<std::string>(), std::move(m));
    }
    return c;
}

}  // namespace tpgc::io

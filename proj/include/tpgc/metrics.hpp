#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "tpgc/dense.hpp"
#include "tpgc/error.hpp"
#include "tpgc/graph.hpp"

namespace tpgc {

struct ScoredLabel {
    double score;
    int label;  // 0 or 1
};

struct RankingMetrics {
    double auc = 0.0;
    double ap = 0.0;
};

/// AUC from the rank statistic (ties share their midrank) and average
/// precision as Σ_thresholds (R_k − R_{k−1})·P_k, thresholds at each distinct score.
inline RankingMetrics auc_ap(std::vector<ScoredLabel> scores) {
    std::size_t pos = 0, neg = 0;
    for (const auto& s : scores) {
        if (s.label == 1) ++pos;
        else if (s.label == 0) ++neg;
        else throw InvalidArgument("auc_ap: labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0) throw InvalidArgument("auc_ap: both classes must be present");

    std::sort(scores.begin(), scores.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < scores.size();) {
        std::size_t j = i;
        while (j < scores.size() && scores[j].score == scores[i].score) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (scores[k].label == 1) rank_sum += midrank;
        i = j;
    }
    const double P = static_cast<double>(pos), N = static_cast<double>(neg);
    RankingMetrics m;
    m.auc = (rank_sum - P * (P + 1.0) / 2.0) / (P * N);

    // Walk from the highest score down, one threshold per distinct score.
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    for (std::size_t i = scores.size(); i > 0;) {
        std::size_t j = i;
        while (j > 0 && scores[j - 1].score == scores[i - 1].score) {
            --j;
            (scores[j].label == 1 ? tp : fp) += 1.0;
        }
        const double recall = tp / P;
        if (recall > prev_recall) m.ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
        i = j;
    }
    return m;
}

/// Fraction of masked rows whose argmax equals the label.
inline double accuracy(const DenseMatrix& predictions, const std::vector<int>& labels, const std::vector<Index>& mask) {
    if (mask.empty()) throw InvalidArgument("accuracy: empty mask");
    std::size_t correct = 0;
    for (Index i : mask) {
        auto row = predictions.row(i);
        const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        correct += best == labels.at(i);
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

/// Fraction of off-diagonal support pairs with both endpoints labeled whose labels agree.
inline double homophily(const SparseAdjacency& graph, const std::vector<int>& labels) {
    if (labels.size() != graph.n()) throw DimensionError("homophily: label count != n");
    std::size_t same = 0, total = 0;
    const auto& p = graph.support();
    for (std::size_t k = 0; k < graph.nnz(); ++k) {
        const auto i = p.row_of(k), j = p.col_of(k);
        if (i == j || labels[i] < 0 || labels[j] < 0) continue;
        ++total;
        same += labels[i] == labels[j];
    }
    if (total == 0) throw InvalidArgument("homophily: no off-diagonal edges between labeled nodes");
    return static_cast<double>(same) / static_cast<double>(total);
}

/// Weight-mass form: Σ w over same-label pairs / Σ w over all qualifying pairs.
/// Negative weights are not meaningful here and are rejected.
inline double weighted_homophily(const SparseAdjacency& graph, const std::vector<int>& labels) {
    if (labels.size() != graph.n()) throw DimensionError("weighted_homophily: label count != n");
    double same = 0.0, total = 0.0;
    const auto& p = graph.support();
    for (std::size_t k = 0; k < graph.nnz(); ++k) {
        const auto i = p.row_of(k), j = p.col_of(k);
        if (i == j || labels[i] < 0 || labels[j] < 0) continue;
        const double w = graph.values()[k];
        if (w < 0.0) throw InvalidArgument("weighted_homophily: negative weight");
        total += w;
        if (labels[i] == labels[j]) same += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("weighted_homophily: no off-diagonal weight between labeled nodes");
    return same / total;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population standard deviation (0 for a single value).
inline MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) throw InvalidArgument("mean_std: empty input");
    MeanStd r;
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size()));
    return r;
}

}  // namespace tpgc

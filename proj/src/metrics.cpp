#include "metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "errors.hpp"

namespace adaf2m2 {

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ShapeError("auc got " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
    const std::size_t m = scores.size();
    std::size_t pos = 0;
    for (const int y : labels) {
        if (y != 0 && y != 1) throw NumericError("auc labels must be 0 or 1, got " + std::to_string(y));
        pos += static_cast<std::size_t>(y);
    }
    const std::size_t neg = m - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average 1-based rank within each tied score group, summed over positives.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j < m && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::optional<double> uauc(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> user_keys) {
    if (scores.size() != labels.size() || scores.size() != user_keys.size())
        throw ShapeError("uauc needs equally sized scores, labels, and user keys");
    std::unordered_map<std::int32_t, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < scores.size(); ++i) by_user[user_keys[i]].push_back(i);

    // Deterministic iteration order (unordered_map order is not portable).
    std::vector<std::int32_t> keys;
    keys.reserve(by_user.size());
    for (const auto& [k, _] : by_user) keys.push_back(k);
    std::sort(keys.begin(), keys.end());

    double weighted = 0.0;
    double weight_total = 0.0;
    std::vector<double> s;
    std::vector<int> y;
    for (const std::int32_t k : keys) {
        const auto& idx = by_user[k];
        s.clear();
        y.clear();
        for (const std::size_t i : idx) {
            s.push_back(scores[i]);
            y.push_back(labels[i]);
        }
        const std::optional<double> a = auc(s, y);
        if (!a) continue; // single-class user: excluded entirely
        weighted += *a * static_cast<double>(idx.size());
        weight_total += static_cast<double>(idx.size());
    }
    if (weight_total == 0.0) return std::nullopt;
    return weighted / weight_total;
}

std::optional<double> rela_impr(std::optional<double> auc_new, std::optional<double> auc_base) {
    if (!auc_new || !auc_base || *auc_base <= 0.0) return std::nullopt;
    return (*auc_new / *auc_base - 1.0) * 100.0;
}

std::vector<BucketMetrics> bucket_report(std::span<const double> scores,
                                         std::span<const int> labels,
                                         std::span<const int> bucket_of,
                                         std::span<const std::string> bucket_labels) {
    if (scores.size() != labels.size() || scores.size() != bucket_of.size())
        throw ShapeError("bucket_report needs equally sized scores, labels, and bucket ids");
    const int n_buckets = static_cast<int>(bucket_labels.size());
    std::vector<std::vector<double>> s(static_cast<std::size_t>(n_buckets));
    std::vector<std::vector<int>> y(static_cast<std::size_t>(n_buckets));
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int b = bucket_of[i];
        if (b < 0 || b >= n_buckets) continue;
        s[b].push_back(scores[i]);
        y[b].push_back(labels[i]);
    }
    std::vector<BucketMetrics> out;
    out.reserve(bucket_labels.size());
    for (int b = 0; b < n_buckets; ++b) {
        BucketMetrics m;
        m.label = bucket_labels[b];
        m.count = s[b].size();
        m.auc = s[b].empty() ? std::nullopt : auc(s[b], y[b]);
        out.push_back(std::move(m));
    }
    return out;
}

std::string WeightHeatmap::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "group";
    for (const auto& c : col_labels) os << ',' << c;
    os << '\n';
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        os << row_labels[r];
        for (const double v : cells[r]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

HeatmapAccumulator::HeatmapAccumulator(std::vector<std::string> row_labels,
                                       std::vector<std::string> col_labels)
    : rows_(std::move(row_labels)), cols_(std::move(col_labels)) {
    sums_.assign(rows_.size(), std::vector<double>(cols_.size(), 0.0));
    counts_.assign(rows_.size(), 0);
}

void HeatmapAccumulator::add(int row, std::span<const double> weights) {
    if (row < 0 || row >= static_cast<int>(rows_.size()))
        throw ShapeError("heatmap row " + std::to_string(row) + " out of range [0, " +
                         std::to_string(rows_.size()) + ")");
    if (weights.size() != cols_.size())
        throw ShapeError("heatmap got " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(cols_.size()) + " features");
    for (std::size_t c = 0; c < weights.size(); ++c) sums_[row][c] += weights[c];
    ++counts_[row];
}

WeightHeatmap HeatmapAccumulator::finalize() const {
    WeightHeatmap out;
    out.col_labels = cols_;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (counts_[r] == 0) {
            out.skipped_rows.push_back(rows_[r]);
            continue;
        }
        out.row_labels.push_back(rows_[r]);
        out.group_sizes.push_back(counts_[r]);
        std::vector<double> row(cols_.size());
        for (std::size_t c = 0; c < cols_.size(); ++c)
            row[c] = sums_[r][c] / static_cast<double>(counts_[r]);
        out.cells.push_back(std::move(row));
    }
    return out;
}

} // namespace adaf2m2

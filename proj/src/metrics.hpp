#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaf2m2 {

// Probability that a random positive outranks a random negative, with ties
// credited 0.5, computed by rank summation in O(m log m). Single-class inputs
// have no defined value and return nullopt, never a number.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

// Mean of per-user AUCs weighted by each user's evaluated sample count. Users
// whose labels are single-class are excluded from numerator and denominator;
// nullopt when no user is eligible.
std::optional<double> uauc(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::int32_t> user_keys);

// Relative AUC improvement in percent: (auc_new / auc_base - 1) * 100.
// Undefined inputs or a non-positive base propagate as nullopt.
std::optional<double> rela_impr(std::optional<double> auc_new, std::optional<double> auc_base);

struct BucketMetrics {
    std::string label;
    std::size_t count = 0;
    std::optional<double> auc;
};

// Per-bucket AUC and sample counts. bucket_of[i] indexes bucket_labels (out
// of range marks unbucketed samples, which are dropped with a note in the
// caller's report). Bucket counts sum to the bucketed total; empty buckets
// are kept with count 0 and undefined AUC.
std::vector<BucketMetrics> bucket_report(std::span<const double> scores,
                                         std::span<const int> labels,
                                         std::span<const int> bucket_of,
                                         std::span<const std::string> bucket_labels);

struct WeightHeatmap {
    std::vector<std::string> row_labels;     // state groups with nonzero size
    std::vector<std::string> col_labels;     // feature names
    std::vector<std::vector<double>> cells;  // mean weight per (group, feature)
    std::vector<std::size_t> group_sizes;
    std::vector<std::string> skipped_rows;   // declared groups with no samples

    std::string to_csv() const;
};

// Streaming mean-weight accumulator: one add() per evaluated sample.
class HeatmapAccumulator {
public:
    HeatmapAccumulator(std::vector<std::string> row_labels, std::vector<std::string> col_labels);

    void add(int row, std::span<const double> weights);
    WeightHeatmap finalize() const; // empty groups are dropped and recorded

private:
    std::vector<std::string> rows_;
    std::vector<std::string> cols_;
    std::vector<std::vector<double>> sums_;
    std::vector<std::size_t> counts_;
};

} // namespace adaf2m2

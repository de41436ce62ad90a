#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "adapter.hpp"
#include "embedding.hpp"
#include "rng.hpp"
#include "schema.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

// Immutable columnar sample store. Scalar features hold one value per sample;
// sequence features hold ragged rows behind an offset table. Labels are
// strictly binary. User and item grouping keys are the raw values of each
// side's first designated state ID feature.
class Dataset {
public:
    explicit Dataset(FeatureSchema schema, std::string name = "data");

    const FeatureSchema& schema() const { return schema_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return labels_.size(); }
    bool has_timestamps() const { return has_timestamps_; }

    int label(std::size_t i) const { return labels_[i]; }
    std::int32_t user_key(std::size_t i) const { return user_keys_[i]; }
    std::int32_t item_key(std::size_t i) const { return item_keys_[i]; }
    std::int64_t timestamp(std::size_t i) const { return timestamps_[i]; }

    std::span<const int> labels() const { return labels_; }
    std::span<const std::int32_t> user_keys() const { return user_keys_; }
    std::span<const std::int32_t> item_keys() const { return item_keys_; }

    // Appends one sample; `values` must match schema arity. Timestamp < 0
    // means "not available" and clears has_timestamps for the whole set.
    void add_sample(FeatureValues values, int label, std::int64_t timestamp);

    // Copies sample `i` of `other` (schemas must match by fingerprint).
    void copy_sample_from(const Dataset& other, std::size_t i);

    // Seeded uniform partition with sizes within one sample of the exact
    // proportions. Ratios must be positive and sum to 1.
    std::array<Dataset, 3> split_random(double train, double val, double test,
                                        std::uint64_t seed) const;

    // Columnar text round-trip: a schema header line, a column header, then
    // one tab-separated line per sample (sequences comma-joined, "-" = empty).
    void save_tsv(const std::string& path) const;
    static Dataset load_tsv(const std::string& path);

    // Reusable per-sample view into the column store.
    class Cursor {
    public:
        explicit Cursor(const Dataset& ds) : ds_(&ds), slots_(ds.schema_.size()) {}
        FeatureValues at(std::size_t i);

    private:
        const Dataset* ds_;
        std::vector<std::span<const std::int32_t>> slots_;
    };

private:
    friend class Cursor;

    struct Column {
        bool is_sequence = false;
        std::vector<std::int32_t> values;
        std::vector<std::uint32_t> offsets; // sequences only; size = samples+1
    };

    FeatureSchema schema_;
    std::string name_;
    std::vector<Column> columns_;
    std::vector<int> labels_;
    std::vector<std::int32_t> user_keys_;
    std::vector<std::int32_t> item_keys_;
    std::vector<std::int64_t> timestamps_;
    bool has_timestamps_ = true;
    int user_key_feature_ = -1;
    int item_key_feature_ = -1;
};

// Per-entity activity and interaction-count aggregation over one training
// split. The static snapshot evaluates trailing windows at the split's last
// timestamp; *_at() evaluates them at an arbitrary reference time.
class StatsStore {
public:
    // Count kinds per side; both datasets record plain interaction events.
    int user_count_kinds() const { return 1; }
    int item_count_kinds() const { return 1; }

    bool has_timestamps() const { return has_timestamps_; }
    std::int64_t snapshot_time() const { return snapshot_ts_; }
    std::size_t user_count() const { return users_.size(); }
    std::size_t item_count() const { return items_.size(); }

    // Static snapshot; nullptr for entities never seen in training.
    const EntityStats* user(std::int32_t key) const;
    const EntityStats* item(std::int32_t key) const;

    // Trailing 7/30-day windows ending at `ref_ts`. Counts stay cumulative.
    std::optional<EntityStats> user_at(std::int32_t key, std::int64_t ref_ts) const;
    std::optional<EntityStats> item_at(std::int32_t key, std::int64_t ref_ts) const;

    friend StatsStore build_stats(const Dataset& train);

private:
    struct Entry {
        std::vector<std::int32_t> days; // sorted unique event days
        std::int64_t events = 0;
        EntityStats snapshot;
    };

    static EntityStats eval_at(const Entry& e, std::int64_t ref_ts, bool has_ts);

    std::unordered_map<std::int32_t, Entry> users_;
    std::unordered_map<std::int32_t, Entry> items_;
    std::int64_t snapshot_ts_ = 0;
    bool has_timestamps_ = false;
};

// Aggregates the training split only; building from train+val+test would leak
// evaluation-time information into the state signals. Missing timestamps fall
// back to total counts with unknown active days (a warning is returned via
// the has_timestamps flag).
StatsStore build_stats(const Dataset& train);

// Reads the standard three-file MovieLens-1M directory (ratings.dat,
// users.dat, movies.dat, `::`-delimited). Ratings of at least 4 become label
// 1, the rest 0. Features: user ID, gender, age group, occupation, movie ID,
// release year, and the genre list as a sequence.
Dataset load_movielens(const std::string& dir);

// Long-tail synthetic universe. User activity and item popularity follow
// Zipf laws; the true click probability is a squashed latent dot product;
// meta features are noisy quantized projections of the latents with the
// configured informativeness; designated cold users/items never appear in
// the training split.
struct SynthConfig {
    int users = 10000;
    int items = 5000;
    int samples = 200000;
    double user_zipf = 1.2;
    double item_zipf = 1.1;
    int latent_dim = 8;
    int meta_features = 2;       // per side
    double informativeness = 0.8;
    double label_noise = 0.1;
    double cold_user_frac = 0.1; // held out of training entirely
    double cold_item_frac = 0.1;
    double cold_boost = 0.3;     // eval-split probability of drawing from the cold pool

    void validate() const;
};

// The generating click model, kept for oracle evaluations.
struct SynthTruth {
    Matrix user_z;
    Matrix item_z;
    double scale = 1.0;
    std::vector<std::uint8_t> cold_user; // 1 = held out of training
    std::vector<std::uint8_t> cold_item;

    double prob(std::int32_t user, std::int32_t item) const;
};

struct SynthData {
    Dataset train;
    Dataset val;
    Dataset test;
    SynthTruth truth;
};

FeatureSchema synth_schema(const SynthConfig& cfg);
SynthData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

} // namespace adaf2m2

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "rng.hpp"
#include "schema.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

// Active-day one-hots use 8 buckets: 0, 1, 2, 3-4, 5-9, 10-19, 20-29, 30+.
inline constexpr int kActiveBuckets = 8;
// Interaction counts use log2 buckets 2^0..2^20+, so bucket(17) = 4.
inline constexpr int kCountBuckets = 21;

int active_day_bucket(int days);
int count_bucket(std::int64_t count);

// Per-entity interaction statistics, computed by the dataset layer from the
// training split. Negative values mean "unknown" and bucketize to all-zero.
struct EntityStats {
    int active_days_7 = -1;
    int active_days_30 = -1;
    std::vector<std::int64_t> counts; // one per configured count kind
};

enum class TowerSide { Both, User, Item };

// Shape of the state-signal vector. Count-kind totals come from the stats
// configuration; ID blocks come from the schema's designated state IDs.
struct SignalConfig {
    int user_count_kinds = 0;
    int item_count_kinds = 0;
    // When set, r_ID / r_norm read embedding values as constants instead of
    // differentiable parameter rows.
    bool stop_gradient = false;
};

// Width of [r_active, r_ID, r_norm, r_count] for one side selection.
int signal_width(const FeatureSchema& schema, const SignalConfig& cfg, int dim, TowerSide side);

// Assembles one sample's state signals on the tape, in the fixed block order
// [r_active, r_ID, r_norm, r_count]. Null stats yield all-zero activity and
// count buckets. `side` restricts every block to that tower's entities.
ValueId build_state_signals(Tape& tape, const FeatureSchema& schema, EmbeddingTables& tables,
                            FeatureValues values, const EntityStats* user_stats,
                            const EntityStats* item_stats, const SignalConfig& cfg, TowerSide side);

enum class AdapterActivation { Sigmoid, Softmax };

struct AdapterConfig {
    int hidden = 128;
    AdapterActivation activation = AdapterActivation::Sigmoid;
    bool stop_gradient = false;
};

// Weight vector handle whose reads are counted, letting tests assert that the
// masked auxiliary forwards never consume adaptive weights.
struct AdaptiveWeights {
    ValueId raw = kNoValue;
    int length = 0;
    mutable long reads = 0;

    ValueId get() const {
        ++reads;
        return raw;
    }
};

// The weight generator: hidden affine layer with ReLU, then an affine layer
// to one logit per feature, squashed to (0,1). The final layer is
// zero-initialized so training starts from uniform weights of 0.5.
class StateAdapter {
public:
    StateAdapter(const std::string& name, int in_width, int out_width, const AdapterConfig& cfg,
                 Rng& rng);

    int in_width() const { return in_width_; }
    int out_width() const { return out_width_; }

    AdaptiveWeights forward(Tape& tape, ValueId signals);
    std::vector<Parameter*> parameters();

private:
    int in_width_;
    int out_width_;
    AdapterActivation activation_;
    Parameter w1_, b1_, w2_, b2_;
};

// a_i = w_i * v_i for every feature in the set. Weight length must equal the
// set size; masked flags carry over unchanged.
EmbeddingSet apply_weights(Tape& tape, const AdaptiveWeights& weights, const EmbeddingSet& set);

// Per-tower variant: weight entry j scales set position positions[j]; other
// positions pass through untouched. Weight length must equal positions size.
EmbeddingSet apply_weights(Tape& tape, const AdaptiveWeights& weights, const EmbeddingSet& set,
                           std::span<const int> positions);

// Concatenation [v_1 ... v_n], the input of the self-weight baseline.
ValueId concat_embeddings(Tape& tape, const EmbeddingSet& set);

// Baseline that generates weights from the feature embeddings themselves
// instead of state signals; the adapter's in_width must be n*d.
AdaptiveWeights self_weight_baseline(Tape& tape, StateAdapter& adapter, const EmbeddingSet& set);

} // namespace adaf2m2

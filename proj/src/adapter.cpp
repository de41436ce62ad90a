#include "adapter.hpp"

#include <cmath>

#include "errors.hpp"

namespace adaf2m2 {

int active_day_bucket(int days) {
    if (days < 0) return -1;
    if (days <= 2) return days;
    if (days <= 4) return 3;
    if (days <= 9) return 4;
    if (days <= 19) return 5;
    if (days <= 29) return 6;
    return 7;
}

int count_bucket(std::int64_t count) {
    if (count <= 0) return -1; // zero interactions carry no bucket
    int b = 0;
    while (count >= 2 && b < kCountBuckets - 1) {
        count >>= 1;
        ++b;
    }
    return b;
}

namespace {

bool user_side_of(FeatureKind k) { return k != FeatureKind::Item; }

bool side_included(bool user_side, TowerSide side) {
    if (side == TowerSide::Both) return true;
    return user_side == (side == TowerSide::User);
}

void append_one_hot(std::vector<double>& out, int bucket, int width) {
    const std::size_t base = out.size();
    out.resize(base + width, 0.0);
    if (bucket >= 0 && bucket < width) out[base + bucket] = 1.0;
}

void append_activity(std::vector<double>& out, const EntityStats* stats) {
    append_one_hot(out, stats ? active_day_bucket(stats->active_days_7) : -1, kActiveBuckets);
    append_one_hot(out, stats ? active_day_bucket(stats->active_days_30) : -1, kActiveBuckets);
}

void append_counts(std::vector<double>& out, const EntityStats* stats, int kinds) {
    for (int k = 0; k < kinds; ++k) {
        std::int64_t c = -1;
        if (stats && k < static_cast<int>(stats->counts.size())) c = stats->counts[k];
        append_one_hot(out, count_bucket(c), kCountBuckets);
    }
}

std::vector<int> selected_state_ids(const FeatureSchema& schema, TowerSide side) {
    std::vector<int> out;
    for (const int i : schema.state_id_indices())
        if (side_included(user_side_of(schema.at(i).kind), side)) out.push_back(i);
    return out;
}

int active_sides(TowerSide side) { return side == TowerSide::Both ? 2 : 1; }

} // namespace

int signal_width(const FeatureSchema& schema, const SignalConfig& cfg, int dim, TowerSide side) {
    const int ids = static_cast<int>(selected_state_ids(schema, side).size());
    int count_kinds = 0;
    if (side != TowerSide::Item) count_kinds += cfg.user_count_kinds;
    if (side != TowerSide::User) count_kinds += cfg.item_count_kinds;
    return active_sides(side) * 2 * kActiveBuckets + ids * dim + ids * 4 +
           count_kinds * kCountBuckets;
}

ValueId build_state_signals(Tape& tape, const FeatureSchema& schema, EmbeddingTables& tables,
                            FeatureValues values, const EntityStats* user_stats,
                            const EntityStats* item_stats, const SignalConfig& cfg,
                            TowerSide side) {
    if (static_cast<int>(values.size()) != schema.size())
        throw ShapeError("build_state_signals got " + std::to_string(values.size()) +
                         " feature slots, schema has " + std::to_string(schema.size()));

    // r_active: one block per included side, user first.
    std::vector<double> active;
    if (side != TowerSide::Item) append_activity(active, user_stats);
    if (side != TowerSide::User) append_activity(active, item_stats);

    // r_ID and r_norm share one tape node per designated ID.
    std::vector<ValueId> id_nodes;
    for (const int i : selected_state_ids(schema, side)) {
        const FeatureSpec& f = schema.at(i);
        if (f.is_sequence || values[i].size() != 1)
            throw ShapeError("state ID feature '" + f.name + "' must be scalar with one value");
        std::int32_t raw = values[i][0];
        const int row = (raw < 0 || raw >= f.vocab) ? 0 : static_cast<int>(raw);
        if (cfg.stop_gradient) {
            id_nodes.push_back(tape.input(tables.table(i).value.row(row)));
        } else {
            id_nodes.push_back(tape.param_row(tables.table(i), row));
        }
    }

    // r_count: per included side, one block per count kind, user kinds first.
    std::vector<double> counts;
    if (side != TowerSide::Item) append_counts(counts, user_stats, cfg.user_count_kinds);
    if (side != TowerSide::User) append_counts(counts, item_stats, cfg.item_count_kinds);

    std::vector<ValueId> parts;
    parts.push_back(tape.input(active));
    for (const ValueId id : id_nodes) parts.push_back(id);
    for (const ValueId id : id_nodes) parts.push_back(tape.norm_features(id));
    if (!counts.empty()) parts.push_back(tape.input(counts));
    const ValueId out = tape.concat(parts);
    const int want = signal_width(schema, cfg, tables.dim(), side);
    if (tape.length(out) != want)
        throw ShapeError("state signal width " + std::to_string(tape.length(out)) +
                         " does not match layout width " + std::to_string(want));
    return out;
}

StateAdapter::StateAdapter(const std::string& name, int in_width, int out_width,
                           const AdapterConfig& cfg, Rng& rng)
    : in_width_(in_width),
      out_width_(out_width),
      activation_(cfg.activation),
      w1_(name + ".w1", cfg.hidden, in_width),
      b1_(name + ".b1", cfg.hidden, 1),
      w2_(name + ".w2", out_width, cfg.hidden),
      b2_(name + ".b2", out_width, 1) {
    if (in_width <= 0 || out_width <= 0 || cfg.hidden <= 0)
        throw ConfigError("adapter '" + name + "' needs positive widths, got in=" +
                          std::to_string(in_width) + " out=" + std::to_string(out_width) +
                          " hidden=" + std::to_string(cfg.hidden));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_width));
    double* d = w1_.value.data();
    for (std::size_t i = 0; i < w1_.value.size(); ++i) d[i] = rng.uniform(-bound, bound);
    // w2/b2 start at zero so initial weights are uniform (0.5 under sigmoid).
}

AdaptiveWeights StateAdapter::forward(Tape& tape, ValueId signals) {
    if (tape.length(signals) != in_width_)
        throw ShapeError("adapter '" + w1_.id + "' expects signal width " +
                         std::to_string(in_width_) + ", got " +
                         std::to_string(tape.length(signals)));
    const ValueId h = tape.relu(tape.affine(w1_, b1_, signals));
    const ValueId logits = tape.affine(w2_, b2_, h);
    AdaptiveWeights w;
    w.raw = activation_ == AdapterActivation::Sigmoid ? tape.sigmoid(logits) : tape.softmax(logits);
    w.length = out_width_;
    return w;
}

std::vector<Parameter*> StateAdapter::parameters() { return {&w1_, &b1_, &w2_, &b2_}; }

EmbeddingSet apply_weights(Tape& tape, const AdaptiveWeights& weights, const EmbeddingSet& set) {
    if (weights.length != set.size())
        throw ShapeError("apply_weights got " + std::to_string(weights.length) + " weights for " +
                         std::to_string(set.size()) + " features");
    const ValueId w = weights.get();
    EmbeddingSet out;
    out.vec.reserve(set.vec.size());
    out.masked = set.masked;
    for (int i = 0; i < set.size(); ++i) out.vec.push_back(tape.scale_entry(set.vec[i], w, i));
    return out;
}

EmbeddingSet apply_weights(Tape& tape, const AdaptiveWeights& weights, const EmbeddingSet& set,
                           std::span<const int> positions) {
    if (weights.length != static_cast<int>(positions.size()))
        throw ShapeError("apply_weights got " + std::to_string(weights.length) + " weights for " +
                         std::to_string(positions.size()) + " positions");
    const ValueId w = weights.get();
    EmbeddingSet out = set;
    for (int j = 0; j < static_cast<int>(positions.size()); ++j) {
        const int i = positions[j];
        if (i < 0 || i >= set.size())
            throw ShapeError("apply_weights position " + std::to_string(i) +
                             " out of range for set of " + std::to_string(set.size()));
        out.vec[i] = tape.scale_entry(set.vec[i], w, j);
    }
    return out;
}

ValueId concat_embeddings(Tape& tape, const EmbeddingSet& set) {
    if (set.vec.empty()) throw ShapeError("concat_embeddings: empty embedding set");
    return tape.concat(set.vec);
}

AdaptiveWeights self_weight_baseline(Tape& tape, StateAdapter& adapter, const EmbeddingSet& set) {
    return adapter.forward(tape, concat_embeddings(tape, set));
}

} // namespace adaf2m2

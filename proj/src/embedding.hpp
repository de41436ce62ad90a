#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rng.hpp"
#include "schema.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

// One sample's raw feature values in schema order. Scalar features carry one
// value; sequence features carry zero or more.
using FeatureValues = std::span<const std::span<const std::int32_t>>;

// The per-sample list [v_1 .. v_n] of feature embedding values on a tape,
// with a flag per feature telling whether the default mask row was
// substituted for the real lookup.
struct EmbeddingSet {
    std::vector<ValueId> vec;
    std::vector<std::uint8_t> masked;

    int size() const { return static_cast<int>(vec.size()); }
    bool any_masked() const;
};

// Owns, per feature, a V x d embedding table plus a dedicated trainable 1 x d
// default mask row. Mask rows are seeded-random at init and pairwise distinct.
class EmbeddingTables {
public:
    EmbeddingTables(const FeatureSchema& schema, int dim, Rng& rng);

    int dim() const { return dim_; }
    int feature_count() const { return static_cast<int>(tables_.size()); }

    Parameter& table(int feature_index);
    const Parameter& table(int feature_index) const;
    Parameter& mask_row_param(int feature_index);
    const Parameter& mask_row_param(int feature_index) const;

    // All trainable parameters in a stable order: tables, then mask rows.
    std::vector<Parameter*> parameters();

private:
    void check_index(int i) const;
    int dim_;
    std::vector<std::unique_ptr<Parameter>> tables_;
    std::vector<std::unique_ptr<Parameter>> mask_rows_;
};

// Transforms one sample's raw features into the embedding list of the
// prediction input. Scalar features take one table row; sequence features are
// mean-pooled over their element rows; an empty sequence falls back to that
// feature's mask row with its masked flag set. Values outside [0, V) map to
// the reserved index 0.
EmbeddingSet lookup(const FeatureSchema& schema, EmbeddingTables& tables, Tape& tape,
                    FeatureValues values);

// That feature's dedicated trainable mask row, as a tape value.
ValueId mask_row(EmbeddingTables& tables, Tape& tape, int feature_index);

// Norm transforms of the designated ID-feature embeddings for one sample:
// per ID, [||v||, log(1+||v||), sqrt(||v||), ||v||^2] concatenated in schema
// order. Non-differentiable convenience form; the adapter uses the tape twin.
std::vector<double> id_norm_features(const FeatureSchema& schema, const EmbeddingTables& tables,
                                     FeatureValues values);

} // namespace adaf2m2

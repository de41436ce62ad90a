#include "embedding.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "errors.hpp"

namespace adaf2m2 {

bool EmbeddingSet::any_masked() const {
    for (auto f : masked)
        if (f) return true;
    return false;
}

namespace {

void fill_uniform(Matrix& m, double lo, double hi, Rng& rng) {
    double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = rng.uniform(lo, hi);
}

bool rows_equal(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

EmbeddingTables::EmbeddingTables(const FeatureSchema& schema, int dim, Rng& rng) : dim_(dim) {
    if (dim <= 0) throw ConfigError("embedding dim must be positive, got " + std::to_string(dim));
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < schema.size(); ++i) {
        const FeatureSpec& f = schema.at(i);
        auto table = std::make_unique<Parameter>("emb." + f.name, f.vocab, dim);
        fill_uniform(table->value, -bound, bound, rng);
        tables_.push_back(std::move(table));
        auto mrow = std::make_unique<Parameter>("mask." + f.name, 1, dim);
        fill_uniform(mrow->value, -bound, bound, rng);
        mask_rows_.push_back(std::move(mrow));
    }
    // Mask rows must be pairwise distinct so that "masked" is never ambiguous
    // across features. Collisions are vanishingly unlikely; redraw if seen.
    for (std::size_t i = 0; i < mask_rows_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            while (rows_equal(mask_rows_[i]->value, mask_rows_[j]->value))
                fill_uniform(mask_rows_[i]->value, -bound, bound, rng);
        }
    }
}

void EmbeddingTables::check_index(int i) const {
    if (i < 0 || i >= static_cast<int>(tables_.size()))
        throw ShapeError("feature index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(tables_.size()) + ")");
}

Parameter& EmbeddingTables::table(int i) {
    check_index(i);
    return *tables_[i];
}

const Parameter& EmbeddingTables::table(int i) const {
    check_index(i);
    return *tables_[i];
}

Parameter& EmbeddingTables::mask_row_param(int i) {
    check_index(i);
    return *mask_rows_[i];
}

const Parameter& EmbeddingTables::mask_row_param(int i) const {
    check_index(i);
    return *mask_rows_[i];
}

std::vector<Parameter*> EmbeddingTables::parameters() {
    std::vector<Parameter*> out;
    out.reserve(tables_.size() + mask_rows_.size());
    for (auto& t : tables_) out.push_back(t.get());
    for (auto& m : mask_rows_) out.push_back(m.get());
    return out;
}

namespace {

int clamp_to_vocab(std::int32_t raw, int vocab) {
    // Reserved index 0 absorbs out-of-vocabulary and negative values.
    if (raw < 0 || raw >= vocab) return 0;
    return static_cast<int>(raw);
}

} // namespace

EmbeddingSet lookup(const FeatureSchema& schema, EmbeddingTables& tables, Tape& tape,
                    FeatureValues values) {
    if (static_cast<int>(values.size()) != schema.size())
        throw ShapeError("lookup got " + std::to_string(values.size()) + " feature slots, schema has " +
                         std::to_string(schema.size()));
    EmbeddingSet set;
    set.vec.reserve(values.size());
    set.masked.assign(values.size(), 0);
    for (int i = 0; i < schema.size(); ++i) {
        const FeatureSpec& f = schema.at(i);
        std::span<const std::int32_t> vals = values[i];
        if (f.is_sequence) {
            std::vector<int> rows;
            rows.reserve(vals.size());
            for (std::int32_t raw : vals) rows.push_back(clamp_to_vocab(raw, f.vocab));
            if (rows.empty()) {
                set.vec.push_back(tape.param_row(tables.mask_row_param(i), 0));
                set.masked[i] = 1;
            } else {
                set.vec.push_back(tape.param_rows_mean(tables.table(i), rows));
            }
        } else {
            if (vals.size() != 1)
                throw ShapeError("scalar feature '" + f.name + "' needs exactly one value, got " +
                                 std::to_string(vals.size()));
            set.vec.push_back(tape.param_row(tables.table(i), clamp_to_vocab(vals[0], f.vocab)));
        }
    }
    return set;
}

ValueId mask_row(EmbeddingTables& tables, Tape& tape, int feature_index) {
    return tape.param_row(tables.mask_row_param(feature_index), 0);
}

std::vector<double> id_norm_features(const FeatureSchema& schema, const EmbeddingTables& tables,
                                     FeatureValues values) {
    if (static_cast<int>(values.size()) != schema.size())
        throw ShapeError("id_norm_features got " + std::to_string(values.size()) +
                         " feature slots, schema has " + std::to_string(schema.size()));
    std::vector<double> out;
    for (int i : schema.state_id_indices()) {
        const FeatureSpec& f = schema.at(i);
        std::span<const std::int32_t> vals = values[i];
        if (f.is_sequence || vals.size() != 1)
            throw ShapeError("state ID feature '" + f.name + "' must be scalar with one value");
        const Matrix& tab = tables.table(i).value;
        double nf[4];
        Tape::norm_features_values(tab.row(clamp_to_vocab(vals[0], f.vocab)), nf);
        out.insert(out.end(), nf, nf + 4);
    }
    return out;
}

} // namespace adaf2m2

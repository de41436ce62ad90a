#include "models.hpp"

#include <cmath>

#include "errors.hpp"

namespace adaf2m2 {

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Fm: return "fm";
        case ModelKind::TwoTower: return "two_tower";
    }
    return "?";
}

ModelKind model_kind_from(const std::string& s) {
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "fm") return ModelKind::Fm;
    if (s == "two_tower") return ModelKind::TwoTower;
    throw ConfigError("unknown model kind '" + s + "' (expected mlp, fm, or two_tower)");
}

void ModelConfig::validate() const {
    if (hidden.empty()) throw ConfigError("model.hidden must not be empty");
    for (const int h : hidden)
        if (h < 1) throw ConfigError("model.hidden entries must be >= 1, got " + std::to_string(h));
    if (kind == ModelKind::Mlp && hidden.back() != 1)
        throw ConfigError("mlp head width must be 1, got " + std::to_string(hidden.back()));
    if (kind == ModelKind::TwoTower && latent < 1)
        throw ConfigError("model.latent must be >= 1, got " + std::to_string(latent));
}

namespace {

void init_uniform(Parameter& p, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    double* d = p.value.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) d[i] = rng.uniform(-bound, bound);
}

// Affine stack builder shared by the MLP and the towers.
void build_stack(const std::string& prefix, int in_width, std::span<const int> widths,
                 std::vector<std::unique_ptr<Parameter>>& weights,
                 std::vector<std::unique_ptr<Parameter>>& biases, Rng& rng) {
    int in = in_width;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const int out = widths[l];
        auto w = std::make_unique<Parameter>(prefix + ".w" + std::to_string(l), out, in);
        init_uniform(*w, in, rng);
        weights.push_back(std::move(w));
        biases.push_back(std::make_unique<Parameter>(prefix + ".b" + std::to_string(l), out, 1));
        in = out;
    }
}

// Towers reuse the hidden stack without its width-1 scalar head.
std::vector<int> tower_widths(const ModelConfig& cfg) {
    std::vector<int> w = cfg.hidden;
    if (!w.empty() && w.back() == 1) w.pop_back();
    w.push_back(cfg.latent);
    return w;
}

} // namespace

MlpModel::MlpModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg, Rng& rng)
    : in_width_(schema.size() * dim) {
    cfg.validate();
    build_stack("mlp", in_width_, cfg.hidden, weights_, biases_, rng);
}

std::vector<Parameter*> MlpModel::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(weights_[l].get());
        out.push_back(biases_[l].get());
    }
    return out;
}

ValueId MlpModel::do_predict(Tape& tape, const EmbeddingSet& set) {
    ValueId x = tape.concat(set.vec);
    if (tape.length(x) != in_width_)
        throw ShapeError("mlp expects input width " + std::to_string(in_width_) + ", got " +
                         std::to_string(tape.length(x)));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        x = tape.affine(*weights_[l], *biases_[l], x);
        if (l + 1 < weights_.size()) x = tape.relu(x);
    }
    return tape.sigmoid(x);
}

FmModel::FmModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg)
    : dim_(dim),
      n_features_(schema.size()),
      user_idx_(schema.indices_of_kind(FeatureKind::User)),
      item_idx_(schema.indices_of_kind(FeatureKind::Item)),
      context_idx_(schema.indices_of_kind(FeatureKind::Context)) {
    cfg.validate();
    if (cfg.fm_bias) bias_ = std::make_unique<Parameter>("fm.bias", 1, 1);
}

std::vector<Parameter*> FmModel::parameters() {
    if (bias_) return {bias_.get()};
    return {};
}

ValueId FmModel::do_predict(Tape& tape, const EmbeddingSet& set) {
    if (set.size() != n_features_)
        throw ShapeError("fm expects " + std::to_string(n_features_) + " features, got " +
                         std::to_string(set.size()));
    auto pool = [&](const std::vector<int>& idx) -> ValueId {
        if (idx.empty()) return tape.input(std::vector<double>(static_cast<std::size_t>(dim_), 0.0));
        if (idx.size() == 1) return set.vec[idx[0]];
        std::vector<ValueId> parts;
        parts.reserve(idx.size());
        for (const int i : idx) parts.push_back(set.vec[i]);
        return tape.sum(parts);
    };
    const ValueId u = pool(user_idx_);
    const ValueId t = pool(item_idx_);
    const ValueId c = pool(context_idx_);
    const std::vector<ValueId> pairs = {tape.dot(u, t), tape.dot(u, c), tape.dot(t, c)};
    ValueId score = tape.sum(pairs);
    if (bias_) score = tape.add(score, tape.param_row(*bias_, 0));
    return tape.sigmoid(score);
}

TwoTowerModel::TwoTowerModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg, Rng& rng)
    : n_features_(schema.size()),
      user_idx_(schema.tower_indices(true)),
      item_idx_(schema.tower_indices(false)) {
    cfg.validate();
    if (user_idx_.empty() || item_idx_.empty())
        throw ConfigError("two_tower needs at least one feature per tower, got " +
                          std::to_string(user_idx_.size()) + " user-side and " +
                          std::to_string(item_idx_.size()) + " item-side");
    const std::vector<int> widths = tower_widths(cfg);
    build_stack("tower.user", static_cast<int>(user_idx_.size()) * dim, widths,
                user_tower_.weights, user_tower_.biases, rng);
    build_stack("tower.item", static_cast<int>(item_idx_.size()) * dim, widths,
                item_tower_.weights, item_tower_.biases, rng);
}

std::vector<Parameter*> TwoTowerModel::parameters() {
    std::vector<Parameter*> out;
    for (Tower* t : {&user_tower_, &item_tower_}) {
        for (std::size_t l = 0; l < t->weights.size(); ++l) {
            out.push_back(t->weights[l].get());
            out.push_back(t->biases[l].get());
        }
    }
    return out;
}

ValueId TwoTowerModel::run_tower(Tape& tape, Tower& tower, const EmbeddingSet& set,
                                 std::span<const int> positions) {
    if (set.size() != n_features_)
        throw ShapeError("two_tower expects " + std::to_string(n_features_) + " features, got " +
                         std::to_string(set.size()));
    std::vector<ValueId> parts;
    parts.reserve(positions.size());
    for (const int i : positions) parts.push_back(set.vec[i]);
    ValueId x = tape.concat(parts);
    for (std::size_t l = 0; l < tower.weights.size(); ++l) {
        x = tape.affine(*tower.weights[l], *tower.biases[l], x);
        if (l + 1 < tower.weights.size()) x = tape.relu(x);
    }
    return x;
}

ValueId TwoTowerModel::user_vector(Tape& tape, const EmbeddingSet& set) {
    return run_tower(tape, user_tower_, set, user_idx_);
}

ValueId TwoTowerModel::item_vector(Tape& tape, const EmbeddingSet& set) {
    return run_tower(tape, item_tower_, set, item_idx_);
}

double TwoTowerModel::score_vectors(std::span<const double> u, std::span<const double> t) {
    if (u.size() != t.size())
        throw ShapeError("score_vectors: latent width mismatch " + std::to_string(u.size()) +
                         " vs " + std::to_string(t.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * t[i];
    return Tape::stable_sigmoid(acc);
}

ValueId TwoTowerModel::do_predict(Tape& tape, const EmbeddingSet& set) {
    const ValueId u = user_vector(tape, set);
    const ValueId t = item_vector(tape, set);
    return tape.sigmoid(tape.dot(u, t));
}

std::unique_ptr<BaseModel> make_model(const ModelConfig& cfg, const FeatureSchema& schema, int dim,
                                      Rng& rng) {
    cfg.validate();
    switch (cfg.kind) {
        case ModelKind::Mlp: return std::make_unique<MlpModel>(schema, dim, cfg, rng);
        case ModelKind::Fm: return std::make_unique<FmModel>(schema, dim, cfg);
        case ModelKind::TwoTower: return std::make_unique<TwoTowerModel>(schema, dim, cfg, rng);
    }
    throw ConfigError("unhandled model kind");
}

} // namespace adaf2m2

#include "mask.hpp"

#include <string>

#include "errors.hpp"

namespace adaf2m2 {

void MaskConfig::validate() const {
    if (k < 0) throw ConfigError("mask.k must be >= 0, got " + std::to_string(k));
    if (!(0.0 <= beta && beta <= gamma && gamma <= 1.0))
        throw ConfigError("mask bounds must satisfy 0 <= beta <= gamma <= 1, got beta=" +
                          std::to_string(beta) + " gamma=" + std::to_string(gamma));
}

std::vector<double> sample_probabilities(const MaskConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<double> ps(static_cast<std::size_t>(cfg.k));
    for (auto& p : ps) p = rng.uniform(cfg.beta, cfg.gamma);
    return ps;
}

EmbeddingSet apply_mask(const EmbeddingSet& set, EmbeddingTables& tables, Tape& tape, double p,
                        Rng& rng) {
    if (p < 0.0 || p > 1.0)
        throw ConfigError("mask probability must be in [0, 1], got " + std::to_string(p));
    EmbeddingSet out;
    out.vec.reserve(set.vec.size());
    out.masked.resize(set.vec.size());
    for (int i = 0; i < set.size(); ++i) {
        if (rng.bernoulli(p)) {
            out.vec.push_back(mask_row(tables, tape, i));
            out.masked[i] = 1;
        } else {
            out.vec.push_back(set.vec[i]);
            out.masked[i] = set.masked[i];
        }
    }
    return out;
}

ValueId auxiliary_loss(Tape& tape, std::span<const ValueId> masked_predictions, double label,
                       int expected_k) {
    if (static_cast<int>(masked_predictions.size()) != expected_k)
        throw ShapeError("auxiliary_loss got " + std::to_string(masked_predictions.size()) +
                         " predictions, config says k=" + std::to_string(expected_k));
    if (masked_predictions.empty()) return tape.scalar_input(0.0);
    std::vector<ValueId> terms;
    terms.reserve(masked_predictions.size());
    for (const ValueId p : masked_predictions) terms.push_back(tape.cross_entropy(p, label));
    if (terms.size() == 1) return terms[0];
    return tape.sum(terms);
}

} // namespace adaf2m2

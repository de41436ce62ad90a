#pragma once

#include <span>
#include <vector>

#include "embedding.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

// Controls the masked-variant augmentation. k is the number of augmented
// copies trained per sample; each copy masks features i.i.d. with a
// probability drawn uniformly from [beta, gamma].
struct MaskConfig {
    int k = 1;
    double beta = 0.1;
    double gamma = 0.5;

    void validate() const;
};

// k probabilities drawn uniformly from [beta, gamma].
std::vector<double> sample_probabilities(const MaskConfig& cfg, Rng& rng);

// Independently replaces each feature's embedding with that feature's
// trainable mask row with probability p. Unmasked entries keep the identical
// tape values; masked flags record the outcome.
EmbeddingSet apply_mask(const EmbeddingSet& set, EmbeddingTables& tables, Tape& tape, double p,
                        Rng& rng);

// Sum over the k masked-variant predictions of the cross-entropy against the
// sample's original label. Callers divide the batch total by batch size only;
// the inner sum over variants is not averaged.
ValueId auxiliary_loss(Tape& tape, std::span<const ValueId> masked_predictions, double label,
                       int expected_k);

} // namespace adaf2m2

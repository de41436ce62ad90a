#pragma once

#include <memory>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "rng.hpp"
#include "schema.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

enum class ModelKind { Mlp, Fm, TwoTower };

const char* to_string(ModelKind k);
ModelKind model_kind_from(const std::string& s);

struct ModelConfig {
    ModelKind kind = ModelKind::Fm;
    // Layer widths of the scalar-head MLP. Two-tower towers reuse this stack
    // with the trailing width-1 head entry dropped.
    std::vector<int> hidden = {512, 128, 1};
    // Shared tower output width in two-tower mode.
    int latent = 32;
    // Global score bias of the pooled factorization machine.
    bool fm_bias = true;

    void validate() const;
};

// The prediction function over one sample's embeddings. predict() is the one
// entry point and counts invocations, so the serving path can prove it runs
// exactly one forward per sample.
class BaseModel {
public:
    virtual ~BaseModel() = default;

    ValueId predict(Tape& tape, const EmbeddingSet& set) {
        ++forward_count_;
        return do_predict(tape, set);
    }

    long forward_count() const { return forward_count_; }
    void reset_forward_count() { forward_count_ = 0; }

    virtual std::vector<Parameter*> parameters() = 0;

protected:
    virtual ValueId do_predict(Tape& tape, const EmbeddingSet& set) = 0;

private:
    long forward_count_ = 0;
};

// Concatenates all feature embeddings and runs them through a ReLU MLP with a
// sigmoid head.
class MlpModel : public BaseModel {
public:
    MlpModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg, Rng& rng);
    std::vector<Parameter*> parameters() override;

protected:
    ValueId do_predict(Tape& tape, const EmbeddingSet& set) override;

private:
    int in_width_;
    std::vector<std::unique_ptr<Parameter>> weights_;
    std::vector<std::unique_ptr<Parameter>> biases_;
};

// Sum-pools the embeddings of each feature kind (user, item, context) into
// one vector per kind, scores by the sum of the three pairwise inner products
// plus an optional global bias, and squashes with a sigmoid. A kind with no
// features contributes a zero vector.
class FmModel : public BaseModel {
public:
    FmModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg);
    std::vector<Parameter*> parameters() override;

protected:
    ValueId do_predict(Tape& tape, const EmbeddingSet& set) override;

private:
    int dim_;
    int n_features_;
    std::vector<int> user_idx_, item_idx_, context_idx_;
    std::unique_ptr<Parameter> bias_; // null when disabled
};

// Encodes user-side features (including context) and item-side features with
// separate ReLU MLPs into a shared latent space; the prediction is the
// sigmoid of their inner product. Item vectors depend only on item features,
// which makes them cacheable for retrieval-style serving.
class TwoTowerModel : public BaseModel {
public:
    TwoTowerModel(const FeatureSchema& schema, int dim, const ModelConfig& cfg, Rng& rng);
    std::vector<Parameter*> parameters() override;

    // Tower outputs for one sample's full embedding set.
    ValueId user_vector(Tape& tape, const EmbeddingSet& set);
    ValueId item_vector(Tape& tape, const EmbeddingSet& set);
    // sigmoid(dot(u, t)) over precomputed tower outputs.
    static double score_vectors(std::span<const double> u, std::span<const double> t);

    std::span<const int> user_positions() const { return user_idx_; }
    std::span<const int> item_positions() const { return item_idx_; }

protected:
    ValueId do_predict(Tape& tape, const EmbeddingSet& set) override;

private:
    struct Tower {
        std::vector<std::unique_ptr<Parameter>> weights;
        std::vector<std::unique_ptr<Parameter>> biases;
    };

    ValueId run_tower(Tape& tape, Tower& tower, const EmbeddingSet& set,
                      std::span<const int> positions);

    int n_features_;
    std::vector<int> user_idx_, item_idx_;
    Tower user_tower_, item_tower_;
};

std::unique_ptr<BaseModel> make_model(const ModelConfig& cfg, const FeatureSchema& schema, int dim,
                                      Rng& rng);

} // namespace adaf2m2

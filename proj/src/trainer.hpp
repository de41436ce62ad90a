#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adapter.hpp"
#include "datasets.hpp"
#include "embedding.hpp"
#include "mask.hpp"
#include "models.hpp"
#include "schema.hpp"
#include "tensor.hpp"

namespace adaf2m2 {

// Which parts of the framework run on top of the base model. MaskOnly keeps
// the auxiliary forwards but never applies adaptive weights; AdapterOnly is
// the reverse.
enum class Ablation { BaseOnly, MaskOnly, AdapterOnly, Full };

const char* to_string(Ablation a);
Ablation ablation_from(const std::string& s);

struct BundleConfig {
    int dim = 16;
    ModelConfig model;
    AdapterConfig adapter;
    SignalConfig signals;
    Ablation ablation = Ablation::Full;
};

// Per-sample telemetry of the adaptive forward: which weight landed on which
// feature, and how many times weight vectors were consumed.
struct AdaptiveTrace {
    std::vector<std::pair<int, double>> feature_weights;
    long weight_reads = 0;
};

// One complete trainable system: embedding tables, base model, and the
// state-aware adapters the ablation calls for. Ranking models get a single
// adapter over all features; two-tower models get one adapter per tower fed
// only by that tower's state signals.
class ModelBundle {
public:
    ModelBundle(FeatureSchema schema, BundleConfig cfg, std::uint64_t seed);

    const FeatureSchema& schema() const { return schema_; }
    const BundleConfig& config() const { return cfg_; }
    int dim() const { return cfg_.dim; }
    bool two_tower() const { return cfg_.model.kind == ModelKind::TwoTower; }
    bool uses_adapter() const {
        return cfg_.ablation == Ablation::AdapterOnly || cfg_.ablation == Ablation::Full;
    }
    bool uses_mask() const {
        return cfg_.ablation == Ablation::MaskOnly || cfg_.ablation == Ablation::Full;
    }

    EmbeddingTables& tables() { return *tables_; }
    BaseModel& model() { return *model_; }
    // Both for ranking bundles, User/Item for two-tower; null when the
    // ablation disables the adapter or the side does not exist.
    StateAdapter* adapter(TowerSide side);

    // Stable flat order: embedding tables, mask rows, base model, adapters.
    std::vector<Parameter*> parameters();

    // The serving-path prediction: weights from state signals applied to the
    // embeddings (per ablation), then one counted model forward.
    ValueId adaptive_forward(Tape& tape, const EmbeddingSet& set, FeatureValues values,
                             const EntityStats* user_stats, const EntityStats* item_stats,
                             AdaptiveTrace* trace = nullptr);

private:
    FeatureSchema schema_;
    BundleConfig cfg_;
    std::unique_ptr<EmbeddingTables> tables_;
    std::unique_ptr<BaseModel> model_;
    std::unique_ptr<StateAdapter> both_adapter_;
    std::unique_ptr<StateAdapter> user_adapter_;
    std::unique_ptr<StateAdapter> item_adapter_;
};

struct TrainConfig {
    double alpha = 0.2;
    int batch = 256;
    double lr = 0.001;
    int epochs = 5;
    std::uint64_t seed = 0;
    MaskConfig mask;
    double grad_clip = 0.0;     // global L2 threshold; 0 disables
    bool temporal_stats = false; // evaluate state windows at each sample's timestamp
    bool shuffle = true;         // off = visit samples in dataset order every epoch

    void validate() const;
};

struct LossBreakdown {
    double main = 0.0;
    double aux = 0.0;
    double total = 0.0;
    // instrumentation: adaptive predictions per batch sample, and the number
    // of adaptive-weight consumptions observed (aux forwards add none)
    std::vector<double> predictions;
    long weight_reads = 0;
};

// Adam with bias correction over a fixed parameter list; moments are owned
// here and persist across steps.
class Adam {
public:
    explicit Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    void step(); // consumes the accumulated gradients
    long steps() const { return t_; }
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

struct EpochRecord {
    int epoch = 0;
    double mean_total = 0.0;
    std::optional<double> val_auc;
};

struct FitResult {
    int best_epoch = -1; // -1 when no epoch produced a defined validation AUC
    std::optional<double> best_val_auc;
    std::vector<EpochRecord> epochs;
};

// Runs the multi-forward training procedure on one bundle: per sample, the k
// masked auxiliary forwards (no adaptive weights), then the adaptive main
// forward, combined as total = main + alpha * aux, mean-reduced over the
// batch, one Adam update over all parameters.
class Trainer {
public:
    Trainer(ModelBundle& bundle, const StatsStore* stats, TrainConfig cfg);

    LossBreakdown train_step(const Dataset& data, std::span<const std::size_t> indices);

    // Forward-only batch loss with a fixed mask stream (bit-deterministic
    // across calls), for finite differencing; optionally accumulates
    // gradients without updating parameters.
    double batch_loss(const Dataset& data, std::span<const std::size_t> indices,
                      bool accumulate_grads);

    // Exactly one counted adaptive forward; no masking, no auxiliary work.
    double serve_predict(const Dataset& data, std::size_t i);
    std::vector<double> predict_all(const Dataset& data);

    // Seeded epoch loop: shuffle, batch steps, validation AUC per epoch,
    // parameters restored to the best-validation-AUC epoch on return. Writes
    // one structured record per step and per epoch to `log` when given.
    FitResult fit(const Dataset& train, const Dataset& val, std::ostream* log = nullptr);

    Adam& optimizer() { return adam_; }
    const TrainConfig& config() const { return cfg_; }

private:
    LossBreakdown run_batch(const Dataset& data, std::span<const std::size_t> indices, Rng& rng,
                            bool backward);

    ModelBundle* bundle_;
    const StatsStore* stats_;
    TrainConfig cfg_;
    std::vector<Parameter*> params_;
    Adam adam_;
    Rng mask_rng_;
};

} // namespace adaf2m2

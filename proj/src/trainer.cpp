#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "errors.hpp"
#include "metrics.hpp"

namespace adaf2m2 {

const char* to_string(Ablation a) {
    switch (a) {
        case Ablation::BaseOnly: return "base_only";
        case Ablation::MaskOnly: return "mask_only";
        case Ablation::AdapterOnly: return "adapter_only";
        case Ablation::Full: return "full";
    }
    return "?";
}

Ablation ablation_from(const std::string& s) {
    if (s == "base_only") return Ablation::BaseOnly;
    if (s == "mask_only") return Ablation::MaskOnly;
    if (s == "adapter_only") return Ablation::AdapterOnly;
    if (s == "full") return Ablation::Full;
    throw ConfigError("unknown ablation '" + s +
                      "' (expected base_only, mask_only, adapter_only, or full)");
}

// ---------------------------------------------------------------------------
// ModelBundle

ModelBundle::ModelBundle(FeatureSchema schema, BundleConfig cfg, std::uint64_t seed)
    : schema_(std::move(schema)), cfg_(std::move(cfg)) {
    if (cfg_.dim < 1) throw ConfigError("embedding dim must be >= 1");
    cfg_.model.validate();
    Rng table_rng(Rng::derive(seed, "init.tables"));
    tables_ = std::make_unique<EmbeddingTables>(schema_, cfg_.dim, table_rng);
    Rng model_rng(Rng::derive(seed, "init.model"));
    model_ = make_model(cfg_.model, schema_, cfg_.dim, model_rng);

    if (!uses_adapter()) return;
    if (two_tower()) {
        auto* tt = static_cast<TwoTowerModel*>(model_.get());
        Rng user_rng(Rng::derive(seed, "init.adapter.user"));
        user_adapter_ = std::make_unique<StateAdapter>(
            "adapter.user", signal_width(schema_, cfg_.signals, cfg_.dim, TowerSide::User),
            static_cast<int>(tt->user_positions().size()), cfg_.adapter, user_rng);
        Rng item_rng(Rng::derive(seed, "init.adapter.item"));
        item_adapter_ = std::make_unique<StateAdapter>(
            "adapter.item", signal_width(schema_, cfg_.signals, cfg_.dim, TowerSide::Item),
            static_cast<int>(tt->item_positions().size()), cfg_.adapter, item_rng);
    } else {
        Rng adapter_rng(Rng::derive(seed, "init.adapter"));
        both_adapter_ = std::make_unique<StateAdapter>(
            "adapter", signal_width(schema_, cfg_.signals, cfg_.dim, TowerSide::Both),
            schema_.size(), cfg_.adapter, adapter_rng);
    }
}

StateAdapter* ModelBundle::adapter(TowerSide side) {
    switch (side) {
        case TowerSide::Both: return both_adapter_.get();
        case TowerSide::User: return user_adapter_.get();
        case TowerSide::Item: return item_adapter_.get();
    }
    return nullptr;
}

std::vector<Parameter*> ModelBundle::parameters() {
    std::vector<Parameter*> out = tables_->parameters();
    for (Parameter* p : model_->parameters()) out.push_back(p);
    for (StateAdapter* a : {both_adapter_.get(), user_adapter_.get(), item_adapter_.get()})
        if (a)
            for (Parameter* p : a->parameters()) out.push_back(p);
    return out;
}

ValueId ModelBundle::adaptive_forward(Tape& tape, const EmbeddingSet& set, FeatureValues values,
                                      const EntityStats* user_stats,
                                      const EntityStats* item_stats, AdaptiveTrace* trace) {
    if (!uses_adapter()) return model_->predict(tape, set);

    auto record = [&](const AdaptiveWeights& w, std::span<const int> positions) {
        if (!trace) return;
        const std::span<const double> vals = tape.value(w.raw);
        for (std::size_t j = 0; j < positions.size(); ++j)
            trace->feature_weights.emplace_back(positions[j], vals[j]);
    };

    if (two_tower()) {
        auto* tt = static_cast<TwoTowerModel*>(model_.get());
        const ValueId user_sig = build_state_signals(tape, schema_, *tables_, values, user_stats,
                                                     item_stats, cfg_.signals, TowerSide::User);
        const AdaptiveWeights uw = user_adapter_->forward(tape, user_sig);
        const EmbeddingSet s1 = apply_weights(tape, uw, set, tt->user_positions());
        const ValueId item_sig = build_state_signals(tape, schema_, *tables_, values, user_stats,
                                                     item_stats, cfg_.signals, TowerSide::Item);
        const AdaptiveWeights iw = item_adapter_->forward(tape, item_sig);
        const EmbeddingSet s2 = apply_weights(tape, iw, s1, tt->item_positions());
        record(uw, tt->user_positions());
        record(iw, tt->item_positions());
        if (trace) trace->weight_reads += uw.reads + iw.reads;
        return model_->predict(tape, s2);
    }

    const ValueId sig = build_state_signals(tape, schema_, *tables_, values, user_stats,
                                            item_stats, cfg_.signals, TowerSide::Both);
    const AdaptiveWeights w = both_adapter_->forward(tape, sig);
    const EmbeddingSet s1 = apply_weights(tape, w, set);
    std::vector<int> all(static_cast<std::size_t>(set.size()));
    std::iota(all.begin(), all.end(), 0);
    record(w, all);
    if (trace) trace->weight_reads += w.reads;
    return model_->predict(tape, s1);
}

// ---------------------------------------------------------------------------
// TrainConfig / Adam

void TrainConfig::validate() const {
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0 (0 disables)");
    mask.validate();
}

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Parameter& p = *params_[k];
        if (!p.grad.same_shape(m_[k]))
            throw ShapeError("optimizer state shape drifted for '" + p.id + "'");
        double* w = p.value.data();
        const double* g = p.grad.data();
        double* m = m_[k].data();
        double* v = v_[k].data();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

// Stats for one sample, chosen between the static snapshot and the trailing
// windows at the sample's own timestamp.
std::pair<std::optional<EntityStats>, std::optional<EntityStats>> sample_stats(
    const StatsStore* store, bool temporal, const Dataset& data, std::size_t i) {
    std::pair<std::optional<EntityStats>, std::optional<EntityStats>> out;
    if (!store) return out;
    if (temporal && store->has_timestamps() && data.has_timestamps()) {
        out.first = store->user_at(data.user_key(i), data.timestamp(i));
        out.second = store->item_at(data.item_key(i), data.timestamp(i));
    } else {
        if (const EntityStats* u = store->user(data.user_key(i))) out.first = *u;
        if (const EntityStats* t = store->item(data.item_key(i))) out.second = *t;
    }
    return out;
}

} // namespace

Trainer::Trainer(ModelBundle& bundle, const StatsStore* stats, TrainConfig cfg)
    : bundle_(&bundle), stats_(stats), cfg_(std::move(cfg)), params_(bundle.parameters()),
      adam_(params_, cfg_.lr), mask_rng_(Rng::derive(cfg_.seed, "train.mask")) {
    cfg_.validate();
}

LossBreakdown Trainer::run_batch(const Dataset& data, std::span<const std::size_t> indices,
                                 Rng& rng, bool backward) {
    if (indices.empty()) throw ConfigError("batch must be nonempty");
    const double inv_b = 1.0 / static_cast<double>(indices.size());
    const bool masking = bundle_->uses_mask() && cfg_.mask.k > 0;
    LossBreakdown out;
    out.predictions.reserve(indices.size());
    Dataset::Cursor cur(data);
    Tape tape;

    // Algorithm order per sample: masked auxiliary forwards first (no
    // adaptive weights exist yet on the tape), then the adaptive main
    // forward, then one combined root.
    auto run_sample = [&](std::size_t i, bool check) {
        tape.clear();
        tape.set_check_finite(check);
        const FeatureValues values = cur.at(i);
        const auto [user_opt, item_opt] = sample_stats(stats_, cfg_.temporal_stats, data, i);
        const EmbeddingSet set = lookup(bundle_->schema(), bundle_->tables(), tape, values);
        const double label = data.label(i);

        ValueId aux = kNoValue;
        if (masking) {
            const std::vector<double> probs = sample_probabilities(cfg_.mask, rng);
            std::vector<ValueId> preds;
            preds.reserve(probs.size());
            for (const double p : probs) {
                const EmbeddingSet masked = apply_mask(set, bundle_->tables(), tape, p, rng);
                preds.push_back(bundle_->model().predict(tape, masked));
            }
            aux = auxiliary_loss(tape, preds, label, cfg_.mask.k);
        }

        AdaptiveTrace trace;
        const ValueId y_adapt = bundle_->adaptive_forward(
            tape, set, values, user_opt ? &*user_opt : nullptr,
            item_opt ? &*item_opt : nullptr, &trace);
        const ValueId main = tape.cross_entropy(y_adapt, label);
        const ValueId root =
            aux == kNoValue ? main : tape.add(main, tape.scale_const(aux, cfg_.alpha));

        struct {
            double main, aux, total, pred;
            long reads;
        } r{tape.value(main)[0], aux == kNoValue ? 0.0 : tape.value(aux)[0],
            tape.value(root)[0], tape.value(y_adapt)[0], trace.weight_reads};
        if (backward && std::isfinite(r.total)) tape.backward(root, inv_b);
        return r;
    };

    for (const std::size_t i : indices) {
        const Rng snapshot = rng;
        const auto r = run_sample(i, false);
        if (!std::isfinite(r.total)) {
            for (const Parameter* p : params_)
                if (!p->value.all_finite())
                    throw NumericError("non-finite loss: parameter '" + p->id +
                                       "' holds non-finite entries");
            // parameters are finite, so some op produced the bad value;
            // replay the same sample with per-op checking to name it
            rng = snapshot;
            run_sample(i, true);
            throw NumericError("non-finite loss with finite parameters and ops");
        }
        out.main += r.main * inv_b;
        out.aux += r.aux * inv_b;
        out.total += r.total * inv_b;
        out.predictions.push_back(r.pred);
        out.weight_reads += r.reads;
    }
    return out;
}

LossBreakdown Trainer::train_step(const Dataset& data, std::span<const std::size_t> indices) {
    for (Parameter* p : params_) p->zero_grad();
    LossBreakdown out = run_batch(data, indices, mask_rng_, true);
    if (cfg_.grad_clip > 0.0) {
        double sq = 0.0;
        for (const Parameter* p : params_)
            for (std::size_t j = 0; j < p->grad.size(); ++j) {
                const double g = p->grad.data()[j];
                sq += g * g;
            }
        const double norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) {
            const double scale = cfg_.grad_clip / norm;
            for (Parameter* p : params_)
                for (std::size_t j = 0; j < p->grad.size(); ++j) p->grad.data()[j] *= scale;
        }
    }
    adam_.step();
    return out;
}

double Trainer::batch_loss(const Dataset& data, std::span<const std::size_t> indices,
                           bool accumulate_grads) {
    // fresh stream per call so repeated evaluations draw identical masks
    Rng rng(Rng::derive(cfg_.seed, "loss.mask"));
    if (accumulate_grads)
        for (Parameter* p : params_) p->zero_grad();
    return run_batch(data, indices, rng, accumulate_grads).total;
}

double Trainer::serve_predict(const Dataset& data, std::size_t i) {
    Tape tape;
    Dataset::Cursor cur(data);
    const FeatureValues values = cur.at(i);
    const auto [user_opt, item_opt] = sample_stats(stats_, cfg_.temporal_stats, data, i);
    const EmbeddingSet set = lookup(bundle_->schema(), bundle_->tables(), tape, values);
    const long before = bundle_->model().forward_count();
    const ValueId y = bundle_->adaptive_forward(tape, set, values,
                                                user_opt ? &*user_opt : nullptr,
                                                item_opt ? &*item_opt : nullptr);
    if (bundle_->model().forward_count() != before + 1)
        throw NumericError("serving must run exactly one model forward");
    const double v = tape.value(y)[0];
    if (!std::isfinite(v)) throw NumericError("serving produced a non-finite prediction");
    return v;
}

std::vector<double> Trainer::predict_all(const Dataset& data) {
    std::vector<double> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.push_back(serve_predict(data, i));
    return out;
}

FitResult Trainer::fit(const Dataset& train, const Dataset& val, std::ostream* log) {
    if (train.size() == 0) throw ConfigError("training split is empty");
    if (cfg_.epochs < 1) throw ConfigError("fit needs epochs >= 1");

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    FitResult res;
    std::vector<Matrix> best;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        if (cfg_.shuffle) {
            Rng shuffle_rng(
                Rng::derive(cfg_.seed, "fit.shuffle", static_cast<std::uint64_t>(epoch)));
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
        }

        double total_sum = 0.0;
        int steps = 0;
        for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(cfg_.batch)) {
            const std::size_t len =
                std::min<std::size_t>(cfg_.batch, order.size() - off);
            const LossBreakdown lb =
                train_step(train, std::span<const std::size_t>(order.data() + off, len));
            total_sum += lb.total;
            ++steps;
            if (log) {
                *log << nlohmann::json{{"epoch", epoch}, {"step", steps}, {"main", lb.main},
                                       {"aux", lb.aux},  {"total", lb.total}}
                            .dump()
                     << '\n';
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_total = total_sum / static_cast<double>(steps);
        if (val.size() > 0) {
            const std::vector<double> scores = predict_all(val);
            rec.val_auc = auc(scores, val.labels());
        }
        res.epochs.push_back(rec);
        if (log) {
            nlohmann::json j{{"epoch", epoch}, {"mean_total", rec.mean_total}};
            j["val_auc"] = rec.val_auc ? nlohmann::json(*rec.val_auc) : nlohmann::json();
            *log << j.dump() << '\n';
        }
        if (rec.val_auc && (!res.best_val_auc || *rec.val_auc > *res.best_val_auc)) {
            res.best_epoch = epoch;
            res.best_val_auc = rec.val_auc;
            best.clear();
            for (const Parameter* p : params_) best.push_back(p->value);
        }
    }
    if (!best.empty())
        for (std::size_t k = 0; k < params_.size(); ++k) params_[k]->value = best[k];
    return res;
}

} // namespace adaf2m2

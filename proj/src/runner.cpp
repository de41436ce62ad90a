#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"
#include "trainer.hpp"

namespace adaf2m2 {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SplitData {
    Dataset train;
    Dataset val;
    Dataset test;
};

SplitData load_data(const RunConfig& rc) {
    if (rc.data.source == "synth") {
        SynthData s = generate_synthetic(rc.data.synth, rc.seed);
        return {std::move(s.train), std::move(s.val), std::move(s.test)};
    }
    if (rc.data.source == "movielens") {
        Dataset full = load_movielens(rc.data.movielens_dir);
        auto parts = full.split_random(rc.data.split[0], rc.data.split[1], rc.data.split[2],
                                       rc.seed);
        return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
    }
    Dataset train = Dataset::load_tsv(rc.data.train);
    Dataset val = Dataset::load_tsv(rc.data.val);
    Dataset test = Dataset::load_tsv(rc.data.test);
    if (val.schema().fingerprint() != train.schema().fingerprint() ||
        test.schema().fingerprint() != train.schema().fingerprint())
        throw ConfigError("data.train, data.val, and data.test must share one schema");
    return {std::move(train), std::move(val), std::move(test)};
}

const Dataset& pick_split(const SplitData& d, const std::string& name) {
    if (name == "train") return d.train;
    if (name == "val") return d.val;
    return d.test;
}

fs::path ensure_out(const RunConfig& rc) {
    const fs::path out(rc.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec)
        throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    os.flush();
    if (!os) throw IoError("write failed for " + path.string());
}

void write_resolved(const json& resolved, const fs::path& out) {
    write_text(out / "resolved_config", resolved.dump(2) + "\n");
}

std::string fmt(std::optional<double> v) {
    if (!v) return "n/a";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(6) << *v;
    return ss.str();
}

std::string fmt_pct(std::optional<double> v) {
    if (!v) return "n/a";
    std::ostringstream ss;
    ss << std::showpos << std::fixed << std::setprecision(4) << *v << "%";
    return ss.str();
}

json metric_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::string checkpoint_path(const RunConfig& rc, const fs::path& out) {
    return rc.eval.checkpoint.empty() ? (out / "checkpoint").string() : rc.eval.checkpoint;
}

// Group labels for activity bounds {3, 10}: new, 1-3, 4-10, 11+.
std::vector<std::string> group_labels(const std::vector<int>& bounds) {
    std::vector<std::string> labels{"new"};
    int lo = 1;
    for (int b : bounds) {
        labels.push_back(lo == b ? std::to_string(b) : std::to_string(lo) + "-" +
                                                           std::to_string(b));
        lo = b + 1;
    }
    labels.push_back(std::to_string(lo) + "+");
    return labels;
}

// Activity measure: 30-day active days when the data carries timestamps,
// interaction count otherwise. Entities without training history are "new".
int group_of(const EntityStats* st, const std::vector<int>& bounds, bool temporal) {
    if (!st) return 0;
    const std::int64_t measure =
        temporal ? st->active_days_30 : (st->counts.empty() ? 0 : st->counts[0]);
    for (std::size_t i = 0; i < bounds.size(); ++i)
        if (measure <= bounds[i]) return static_cast<int>(i) + 1;
    return static_cast<int>(bounds.size()) + 1;
}

void echo_buckets(std::ostream& echo, const std::string& title,
                  const std::vector<BucketMetrics>& rows) {
    std::size_t width = 5;
    for (const BucketMetrics& r : rows) width = std::max(width, r.label.size());
    echo << title << "\n";
    echo << "  " << std::left << std::setw(static_cast<int>(width) + 2) << "group"
         << std::right << std::setw(10) << "count" << std::setw(12) << "auc" << "\n";
    for (const BucketMetrics& r : rows)
        echo << "  " << std::left << std::setw(static_cast<int>(width) + 2) << r.label
             << std::right << std::setw(10) << r.count << std::setw(12) << fmt(r.auc) << "\n";
}

std::optional<double> opt_metric(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace

void run_train(const json& resolved, std::ostream& echo) {
    const RunConfig rc = runconfig_from(resolved);
    const fs::path out = ensure_out(rc);
    write_resolved(resolved, out);

    SplitData data = load_data(rc);
    echo << "data: " << data.train.size() << " train / " << data.val.size() << " val / "
         << data.test.size() << " test samples\n";

    const StatsStore stats = build_stats(data.train);
    ModelBundle bundle(data.train.schema(), rc.bundle_config(), rc.seed);
    echo << "model: " << to_string(rc.model.kind) << " / " << to_string(rc.ablation())
         << ", d=" << rc.dim << ", " << bundle.parameters().size() << " parameter tensors\n";

    Trainer trainer(bundle, &stats, rc.train_config());
    std::ofstream log(out / "train_log", std::ios::binary | std::ios::trunc);
    if (!log) throw IoError("cannot write " + (out / "train_log").string());
    const FitResult fit = trainer.fit(data.train, data.val, &log);
    log.flush();
    if (!log) throw IoError("write failed for " + (out / "train_log").string());

    const json extra = {
        {"command", "train"},
        {"epochs", fit.epochs.size()},
        {"best_epoch", fit.best_epoch},
        {"best_val_auc", metric_json(fit.best_val_auc)},
    };
    save_checkpoint((out / "checkpoint").string(), bundle, extra.dump());

    echo << "fit: " << fit.epochs.size() << " epochs, best epoch " << fit.best_epoch
         << ", val auc " << fmt(fit.best_val_auc) << "\n";
    echo << "wrote " << (out / "checkpoint").string() << "\n";
}

void run_eval(const json& resolved, std::ostream& echo) {
    const RunConfig rc = runconfig_from(resolved);
    const fs::path out = ensure_out(rc);
    write_resolved(resolved, out);

    SplitData data = load_data(rc);
    const Dataset& split = pick_split(data, rc.eval.split);
    const StatsStore stats = build_stats(data.train);

    ModelBundle bundle(split.schema(), rc.bundle_config(), rc.seed);
    const std::string ckpt = checkpoint_path(rc, out);
    load_checkpoint(ckpt, bundle);

    Trainer trainer(bundle, &stats, rc.train_config());
    const std::vector<double> scores = trainer.predict_all(split);
    const auto a = auc(scores, split.labels());
    const auto u = uauc(scores, split.labels(), split.user_keys());

    json report = {
        {"command", "eval"},     {"split", rc.eval.split}, {"samples", split.size()},
        {"auc", metric_json(a)}, {"uauc", metric_json(u)},
    };
    echo << "eval " << rc.eval.split << " (" << ckpt << "): " << split.size() << " samples\n";
    echo << "auc   " << fmt(a) << "\n";
    echo << "uauc  " << fmt(u) << "\n";

    if (!rc.eval.baseline.empty()) {
        std::ifstream bs(rc.eval.baseline);
        if (!bs) throw IoError("cannot open baseline report: " + rc.eval.baseline);
        json base;
        try {
            bs >> base;
        } catch (const json::exception& e) {
            throw IoError("baseline report is not valid JSON: " + std::string(e.what()));
        }
        const auto ra = rela_impr(a, opt_metric(base, "auc"));
        const auto ru = rela_impr(u, opt_metric(base, "uauc"));
        report["baseline"] = {
            {"auc", metric_json(opt_metric(base, "auc"))},
            {"uauc", metric_json(opt_metric(base, "uauc"))},
            {"rela_impr_auc_pct", metric_json(ra)},
            {"rela_impr_uauc_pct", metric_json(ru)},
        };
        echo << "rela_impr(auc)  " << fmt_pct(ra) << "\n";
        echo << "rela_impr(uauc) " << fmt_pct(ru) << "\n";
    }

    write_text(out / "report", report.dump(2) + "\n");
    echo << "wrote " << (out / "report").string() << "\n";
}

void run_analyze(const json& resolved, std::ostream& echo) {
    const RunConfig rc = runconfig_from(resolved);
    const fs::path out = ensure_out(rc);
    write_resolved(resolved, out);

    SplitData data = load_data(rc);
    const Dataset& split = pick_split(data, rc.analyze.split);
    const StatsStore stats = build_stats(data.train);
    const FeatureSchema& schema = split.schema();

    ModelBundle bundle(schema, rc.bundle_config(), rc.seed);
    load_checkpoint(checkpoint_path(rc, out), bundle);
    if (!bundle.uses_adapter()) {
        echo << "the checkpoint was trained without the state-aware adapter; "
                "there are no adaptive weights to analyze\n";
        return;
    }

    Trainer trainer(bundle, &stats, rc.train_config());
    const std::vector<double> scores = trainer.predict_all(split);

    const auto user_labels = group_labels(rc.analyze.user_bounds);
    const auto item_labels = group_labels(rc.analyze.item_bounds);
    std::vector<std::string> feature_names;
    for (const FeatureSpec& f : schema.features()) feature_names.push_back(f.name);

    HeatmapAccumulator user_acc(user_labels, feature_names);
    HeatmapAccumulator item_acc(item_labels, feature_names);
    std::vector<int> user_group(split.size()), item_group(split.size());

    Tape tape;
    Dataset::Cursor cur(split);
    std::vector<double> weights(feature_names.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        tape.clear();
        const FeatureValues values = cur.at(i);
        const EntityStats* us = stats.user(split.user_key(i));
        const EntityStats* is = stats.item(split.item_key(i));
        EmbeddingSet set = lookup(schema, bundle.tables(), tape, values);
        AdaptiveTrace trace;
        bundle.adaptive_forward(tape, set, values, us, is, &trace);

        std::fill(weights.begin(), weights.end(), std::nan(""));
        for (const auto& [feature, w] : trace.feature_weights)
            weights[static_cast<std::size_t>(feature)] = w;
        for (double w : weights)
            if (!std::isfinite(w))
                throw NumericError("adaptive trace did not cover every feature");

        user_group[i] = group_of(us, rc.analyze.user_bounds, stats.has_timestamps());
        item_group[i] = group_of(is, rc.analyze.item_bounds, stats.has_timestamps());
        user_acc.add(user_group[i], weights);
        item_acc.add(item_group[i], weights);
    }

    write_text(out / "heatmap_user.csv", user_acc.finalize().to_csv());
    write_text(out / "heatmap_item.csv", item_acc.finalize().to_csv());

    echo_buckets(echo, "user-state buckets (" + rc.analyze.split + "):",
                 bucket_report(scores, split.labels(), user_group, user_labels));
    echo_buckets(echo, "item-state buckets (" + rc.analyze.split + "):",
                 bucket_report(scores, split.labels(), item_group, item_labels));
    echo << "wrote " << (out / "heatmap_user.csv").string() << "\n";
    echo << "wrote " << (out / "heatmap_item.csv").string() << "\n";
}

bool run_gradcheck(const json& resolved, std::ostream& echo, double tolerance,
                   bool corrupt_hook) {
    const RunConfig rc = runconfig_from(resolved);
    const fs::path out = ensure_out(rc);
    write_resolved(resolved, out);

    // Small generated batch, independent of the configured dataset.
    const FeatureSchema schema({
        {"user_id", FeatureKind::User, FeatureClass::IdBased, 24, false, true},
        {"u_meta", FeatureKind::User, FeatureClass::Meta, 8, false, false},
        {"item_id", FeatureKind::Item, FeatureClass::IdBased, 18, false, true},
        {"i_meta", FeatureKind::Item, FeatureClass::Meta, 8, false, false},
    });
    Dataset data(schema, "gradcheck");
    Rng rng(Rng::derive(rc.seed, "gradcheck.data"));
    for (int i = 0; i < 10; ++i) {
        const std::int32_t vals[4] = {
            1 + static_cast<std::int32_t>(rng.uniform_int(23)),
            1 + static_cast<std::int32_t>(rng.uniform_int(7)),
            1 + static_cast<std::int32_t>(rng.uniform_int(17)),
            1 + static_cast<std::int32_t>(rng.uniform_int(7))};
        const std::span<const std::int32_t> slots[4] = {
            {&vals[0], 1}, {&vals[1], 1}, {&vals[2], 1}, {&vals[3], 1}};
        data.add_sample(slots, rng.bernoulli(0.5) ? 1 : 0,
                        86400 * static_cast<std::int64_t>(rng.uniform_int(30)));
    }
    const StatsStore stats = build_stats(data);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    bool all_ok = true;
    bool first_cell = true;
    for (ModelKind kind : {ModelKind::Mlp, ModelKind::Fm, ModelKind::TwoTower}) {
        for (Ablation ab :
             {Ablation::BaseOnly, Ablation::MaskOnly, Ablation::AdapterOnly, Ablation::Full}) {
            BundleConfig bc;
            bc.dim = 4;
            bc.model.kind = kind;
            bc.model.hidden = {6, 1};
            bc.model.latent = 3;
            bc.adapter = rc.adapter;
            bc.adapter.hidden = 8;
            bc.signals = {1, 1, rc.adapter.stop_gradient};
            bc.ablation = ab;
            ModelBundle bundle(schema, bc, rc.seed);

            TrainConfig tc;
            tc.alpha = 0.2;
            tc.batch = static_cast<int>(data.size());
            tc.lr = 0.01;
            tc.epochs = 1;
            tc.seed = rc.seed;
            tc.mask.k = 2;
            Trainer trainer(bundle, &stats, tc);

            const auto params = bundle.parameters();
            const bool corrupt = corrupt_hook && first_cell;
            const auto loss = [&] { return trainer.batch_loss(data, idx, false); };
            const auto grads = [&] {
                trainer.batch_loss(data, idx, true);
                if (corrupt) params[0]->grad.at(0, 0) += 0.05;
            };
            const FdReport rep = finite_difference_check(loss, grads, params);

            const bool ok = rep.max_rel_error < tolerance;
            all_ok = all_ok && ok;
            echo << (ok ? "pass" : "FAIL") << "  " << std::left << std::setw(22)
                 << (std::string(to_string(kind)) + "/" + to_string(ab)) << std::right
                 << "  max rel err " << std::scientific << std::setprecision(3)
                 << rep.max_rel_error << "  (" << rep.worst_param << "[" << rep.worst_coord
                 << "], " << rep.coords_checked << " coords)\n";
            first_cell = false;
        }
    }
    echo << (all_ok ? "gradient check passed" : "gradient check FAILED") << "\n";
    return all_ok;
}

void run_gen_synth(const json& resolved, std::ostream& echo) {
    const RunConfig rc = runconfig_from(resolved);
    if (rc.data.source != "synth")
        throw ConfigError("gen-synth requires data.source=synth, got " + rc.data.source);
    const fs::path out = ensure_out(rc);
    write_resolved(resolved, out);

    SynthData s = generate_synthetic(rc.data.synth, rc.seed);
    s.train.save_tsv((out / "train.tsv").string());
    s.val.save_tsv((out / "val.tsv").string());
    s.test.save_tsv((out / "test.tsv").string());

    const auto pool = [](const std::vector<std::uint8_t>& cold) {
        return std::count(cold.begin(), cold.end(), std::uint8_t{1});
    };
    echo << "generated " << s.train.size() << " train / " << s.val.size() << " val / "
         << s.test.size() << " test samples\n";
    echo << "cold pool: " << pool(s.truth.cold_user) << " users, " << pool(s.truth.cold_item)
         << " items\n";
    echo << "wrote " << (out / "train.tsv").string() << ", " << (out / "val.tsv").string()
         << ", " << (out / "test.tsv").string() << "\n";
}

} // namespace adaf2m2

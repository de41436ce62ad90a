#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"

using namespace adaf2m2;
using nlohmann::json;

namespace {

RunConfig with_overrides(std::vector<std::string> sets) {
    json cfg = config_defaults();
    for (const auto& s : sets) apply_override(cfg, s);
    return runconfig_from(cfg);
}

} // namespace

TEST_CASE("defaults materialize into a valid run") {
    const RunConfig rc = runconfig_from(config_defaults());
    CHECK(rc.seed == 0);
    CHECK(rc.dim == 16);
    CHECK(rc.data.source == "synth");
    CHECK(rc.model.kind == ModelKind::Fm);
    CHECK(rc.model.hidden == std::vector<int>{512, 128, 1});
    CHECK(rc.model.latent == 32);
    CHECK(rc.mask.k == 1);
    CHECK(rc.mask.beta == doctest::Approx(0.1));
    CHECK(rc.mask.gamma == doctest::Approx(0.5));
    CHECK(rc.adapter_enabled);
    CHECK(rc.adapter.hidden == 128);
    CHECK(rc.adapter.activation == AdapterActivation::Sigmoid);
    CHECK_FALSE(rc.adapter.stop_gradient);
    CHECK(rc.alpha == doctest::Approx(0.2));
    CHECK(rc.batch == 256);
    CHECK(rc.lr == doctest::Approx(0.001));
    CHECK(rc.epochs == 5);
    CHECK(rc.ablation() == Ablation::Full);
}

TEST_CASE("the ablation is spelled through the switches") {
    CHECK(with_overrides({}).ablation() == Ablation::Full);
    CHECK(with_overrides({"mask.k=0"}).ablation() == Ablation::AdapterOnly);
    CHECK(with_overrides({"adapter.enabled=false"}).ablation() == Ablation::MaskOnly);
    CHECK(with_overrides({"mask.k=0", "adapter.enabled=false"}).ablation() ==
          Ablation::BaseOnly);
}

TEST_CASE("overrides parse by the type of the addressed key") {
    const RunConfig rc = with_overrides({
        "train.lr=0.02",
        "train.batch=64",
        "model.kind=two_tower",
        "model.hidden=[8,1]",
        "adapter.activation_out=softmax",
        "seed=18446744073709551615",
        "train.temporal_stats=true",
    });
    CHECK(rc.lr == doctest::Approx(0.02));
    CHECK(rc.batch == 64);
    CHECK(rc.model.kind == ModelKind::TwoTower);
    CHECK(rc.model.hidden == std::vector<int>{8, 1});
    CHECK(rc.adapter.activation == AdapterActivation::Softmax);
    CHECK(rc.seed == 18446744073709551615ull);
    CHECK(rc.temporal_stats);
}

TEST_CASE("unknown keys are named in full") {
    json cfg = config_defaults();
    CHECK_THROWS_WITH_AS(apply_override(cfg, "mask.kk=2"), doctest::Contains("mask.kk"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(merge_config(cfg, R"({"trainx": {}})"), doctest::Contains("trainx"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(merge_config(cfg, R"({"mask": {"delta": 1.0}})"),
                         doctest::Contains("mask.delta"), ConfigError);
}

TEST_CASE("bad values are rejected with their key path") {
    json cfg = config_defaults();
    CHECK_THROWS_WITH_AS(apply_override(cfg, "train.lr=abc"), doctest::Contains("train.lr"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "train.batch=1.5"),
                         doctest::Contains("train.batch"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "adapter.enabled=maybe"),
                         doctest::Contains("adapter.enabled"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "mask=3"), doctest::Contains("section"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "no_equals_sign"), doctest::Contains("key.path"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(merge_config(cfg, R"({"mask": {"k": "three"}})"),
                         doctest::Contains("mask.k"), ConfigError);
    CHECK_THROWS_WITH_AS(merge_config(cfg, "not json at all"), doctest::Contains("valid JSON"),
                         ConfigError);
}

TEST_CASE("semantic validation names the key") {
    CHECK_THROWS_WITH_AS(with_overrides({"data.source=ftp"}), doctest::Contains("data.source"),
                         ConfigError);
    CHECK_THROWS_AS(with_overrides({"data.source=movielens"}), ConfigError);
    CHECK_THROWS_AS(with_overrides({"data.source=tsv"}), ConfigError);
    CHECK_THROWS_WITH_AS(with_overrides({"eval.split=dev"}), doctest::Contains("eval.split"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(with_overrides({"analyze.user_bounds=[5,2]"}),
                         doctest::Contains("analyze.user_bounds"), ConfigError);
    CHECK_THROWS_AS(with_overrides({"mask.beta=0.7"}), ConfigError);
    CHECK_THROWS_AS(with_overrides({"train.epochs=-1"}), ConfigError);
    CHECK_THROWS_AS(with_overrides({"dim=0"}), ConfigError);
}

TEST_CASE("file merge then overrides, in that order") {
    const std::string path = "/tmp/cfg_precedence.json";
    std::ofstream(path) << R"({"train": {"lr": 0.01, "epochs": 2}, "model": {"kind": "mlp"}})";
    const std::vector<std::string> sets = {"train.lr=0.05"};
    const json cfg = resolve_config(path, sets);
    std::remove(path.c_str());

    const RunConfig rc = runconfig_from(cfg);
    CHECK(rc.lr == doctest::Approx(0.05)); // override wins over file
    CHECK(rc.epochs == 2);                 // file wins over default
    CHECK(rc.model.kind == ModelKind::Mlp);
    CHECK(rc.batch == 256); // untouched default
}

TEST_CASE("a resolved dump re-fed as a config file reproduces the tree") {
    json cfg = config_defaults();
    apply_override(cfg, "train.lr=0.02");
    apply_override(cfg, "model.hidden=[32,1]");
    apply_override(cfg, "seed=99");

    json again = config_defaults();
    merge_config(again, cfg.dump(2));
    CHECK(again == cfg);
}

TEST_CASE("missing config file is an IoError") {
    const std::vector<std::string> none;
    CHECK_THROWS_AS(resolve_config("/tmp/definitely_missing_config.json", none), IoError);
}

TEST_CASE("bundle and trainer views carry the resolved switches") {
    const RunConfig rc = with_overrides(
        {"adapter.stop_gradient=true", "dim=8", "mask.k=3", "seed=42", "train.grad_clip=5.0"});

    const BundleConfig b = rc.bundle_config();
    CHECK(b.dim == 8);
    CHECK(b.ablation == Ablation::Full);
    CHECK(b.adapter.stop_gradient);
    CHECK(b.signals.stop_gradient);
    CHECK(b.signals.user_count_kinds == 1);
    CHECK(b.signals.item_count_kinds == 1);

    const TrainConfig t = rc.train_config();
    CHECK(t.seed == 42);
    CHECK(t.mask.k == 3);
    CHECK(t.grad_clip == doctest::Approx(5.0));
}

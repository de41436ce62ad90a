#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "trainer.hpp"

using namespace adaf2m2;

namespace {

FeatureSchema mini_schema() {
    return FeatureSchema({
        {"user_id", FeatureKind::User, FeatureClass::IdBased, 20, false, true},
        {"u_meta", FeatureKind::User, FeatureClass::Meta, 8, false, false},
        {"item_id", FeatureKind::Item, FeatureClass::IdBased, 15, false, true},
        {"i_meta", FeatureKind::Item, FeatureClass::Meta, 8, false, false},
    });
}

BundleConfig mini_cfg(ModelKind kind, Ablation ablation) {
    BundleConfig cfg;
    cfg.dim = 4;
    cfg.model.kind = kind;
    cfg.model.hidden = {6, 1};
    cfg.model.latent = 3;
    cfg.signals.user_count_kinds = 1;
    cfg.signals.item_count_kinds = 1;
    cfg.ablation = ablation;
    return cfg;
}

bool params_identical(ModelBundle& a, ModelBundle& b) {
    auto pa = a.parameters();
    auto pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i]->id != pb[i]->id) return false;
        if (!pa[i]->value.same_shape(pb[i]->value)) return false;
        if (std::memcmp(pa[i]->value.data(), pb[i]->value.data(),
                        pa[i]->value.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(std::string("/tmp/") + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("save/load round trip is bit-exact") {
    TempFile f("ckpt_roundtrip.bin");
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::Mlp, Ablation::Full), 7);
    // make sure awkward values survive: a sum with a rounding tail, an
    // explicit negative zero, and a denormal
    auto params = src.parameters();
    params[0]->value.at(1, 0) = 0.1 + 0.2;
    params[0]->value.at(1, 1) = -0.0;
    params[0]->value.at(1, 2) = 5e-324;
    save_checkpoint(f.path, src, R"({"best_epoch":2,"note":"x"})");

    ModelBundle dst(mini_schema(), mini_cfg(ModelKind::Mlp, Ablation::Full), 999);
    REQUIRE_FALSE(params_identical(src, dst));
    const std::string extra = load_checkpoint(f.path, dst);
    CHECK(params_identical(src, dst));

    const auto j = nlohmann::json::parse(extra);
    CHECK(j.at("best_epoch").get<int>() == 2);
    CHECK(j.at("note").get<std::string>() == "x");
}

TEST_CASE("identical saves produce identical bytes") {
    TempFile f1("ckpt_bytes1.bin");
    TempFile f2("ckpt_bytes2.bin");
    ModelBundle a(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 11);
    ModelBundle b(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 11);
    save_checkpoint(f1.path, a);
    save_checkpoint(f2.path, b);
    CHECK(slurp(f1.path) == slurp(f2.path));
}

TEST_CASE("info reports header and parameter directory") {
    TempFile f("ckpt_info.bin");
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::TwoTower, Ablation::AdapterOnly), 3);
    save_checkpoint(f.path, src);

    const CheckpointInfo info = read_checkpoint_info(f.path);
    CHECK(info.schema_fingerprint == src.schema().fingerprint());
    CHECK(info.model_kind == ModelKind::TwoTower);
    CHECK(info.ablation == Ablation::AdapterOnly);
    CHECK(info.dim == 4);
    CHECK(info.extra == "{}");

    const auto params = src.parameters();
    REQUIRE(info.param_ids.size() == params.size());
    for (std::size_t i = 0; i < params.size(); ++i) CHECK(info.param_ids[i] == params[i]->id);
}

TEST_CASE("layout disagreements are rejected before loading") {
    TempFile f("ckpt_mismatch.bin");
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 5);
    save_checkpoint(f.path, src);

    SUBCASE("different schema") {
        FeatureSchema other({
            {"user_id", FeatureKind::User, FeatureClass::IdBased, 20, false, true},
            {"item_id", FeatureKind::Item, FeatureClass::IdBased, 15, false, true},
        });
        ModelBundle dst(other, mini_cfg(ModelKind::Fm, Ablation::Full), 5);
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst),
                             doctest::Contains("schema fingerprint"), IoError);
    }
    SUBCASE("different model kind") {
        ModelBundle dst(mini_schema(), mini_cfg(ModelKind::Mlp, Ablation::Full), 5);
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("model kind"),
                             IoError);
    }
    SUBCASE("different ablation") {
        ModelBundle dst(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::BaseOnly), 5);
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("ablation"), IoError);
    }
    SUBCASE("different embedding width") {
        auto cfg = mini_cfg(ModelKind::Fm, Ablation::Full);
        cfg.dim = 8;
        ModelBundle dst(mini_schema(), cfg, 5);
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("embedding width"),
                             IoError);
    }
}

TEST_CASE("rejection leaves the destination untouched") {
    TempFile f("ckpt_untouched.bin");
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 5);
    save_checkpoint(f.path, src);

    ModelBundle dst(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::BaseOnly), 9);
    ModelBundle twin(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::BaseOnly), 9);
    CHECK_THROWS_AS(load_checkpoint(f.path, dst), IoError);
    CHECK(params_identical(dst, twin));
}

TEST_CASE("damaged files are named, not loaded") {
    TempFile f("ckpt_damage.bin");
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 5);
    save_checkpoint(f.path, src);
    const std::string good = slurp(f.path);
    ModelBundle dst(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 6);

    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_checkpoint("/tmp/ckpt_does_not_exist.bin", dst),
                             doctest::Contains("cannot open"), IoError);
    }
    SUBCASE("wrong magic") {
        std::string bad = good;
        bad[0] = 'X';
        std::ofstream(f.path, std::ios::binary).write(bad.data(), static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("not a checkpoint"),
                             IoError);
    }
    SUBCASE("truncated") {
        std::ofstream(f.path, std::ios::binary)
            .write(good.data(), static_cast<std::streamsize>(good.size() - 9));
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("truncated"), IoError);
    }
    SUBCASE("trailing bytes") {
        std::string bad = good + "junk";
        std::ofstream(f.path, std::ios::binary).write(bad.data(), static_cast<std::streamsize>(bad.size()));
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path, dst), doctest::Contains("trailing"), IoError);
    }
}

TEST_CASE("extra payload must be JSON") {
    ModelBundle src(mini_schema(), mini_cfg(ModelKind::Fm, Ablation::Full), 5);
    CHECK_THROWS_AS(save_checkpoint("/tmp/ckpt_bad_extra.bin", src, "not json"), ConfigError);
}

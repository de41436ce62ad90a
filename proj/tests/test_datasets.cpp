#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "datasets.hpp"
#include "errors.hpp"
#include "metrics.hpp"

using namespace adaf2m2;

namespace {

FeatureSchema tiny_schema() {
    return FeatureSchema({
        {"user_id", FeatureKind::User, FeatureClass::IdBased, 100, false, true},
        {"item_id", FeatureKind::Item, FeatureClass::IdBased, 100, false, true},
        {"tags", FeatureKind::Item, FeatureClass::IdBased, 50, true, false},
    });
}

void add_row(Dataset& ds, std::int32_t user, std::int32_t item,
             std::vector<std::int32_t> tags, int label, std::int64_t ts) {
    const std::int32_t scalars[2] = {user, item};
    const std::span<const std::int32_t> slots[3] = {{&scalars[0], 1}, {&scalars[1], 1}, tags};
    ds.add_sample(slots, label, ts);
}

// Order-insensitive sample signature for set comparisons.
using RowSig = std::tuple<std::int32_t, std::int32_t, std::vector<std::int32_t>, int, std::int64_t>;

std::multiset<RowSig> signature(const Dataset& ds) {
    std::multiset<RowSig> out;
    Dataset::Cursor cur(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const FeatureValues v = cur.at(i);
        out.insert({ds.user_key(i), ds.item_key(i),
                    std::vector<std::int32_t>(v[2].begin(), v[2].end()), ds.label(i),
                    ds.timestamp(i)});
    }
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string tsv_text(const Dataset& ds, const std::string& tag) {
    const std::string path = std::string("/tmp/ds_") + tag + ".tsv";
    ds.save_tsv(path);
    std::string text = slurp(path);
    std::remove(path.c_str());
    return text;
}

} // namespace

TEST_CASE("dataset stores samples columnar and hands back identical views") {
    Dataset ds(tiny_schema(), "t");
    add_row(ds, 7, 3, {1, 2, 3}, 1, 1000);
    add_row(ds, 8, 4, {}, 0, 2000);
    add_row(ds, 7, 5, {9}, 1, 500);

    CHECK(ds.size() == 3);
    CHECK(ds.has_timestamps());
    CHECK(ds.label(0) == 1);
    CHECK(ds.label(1) == 0);
    CHECK(ds.user_key(0) == 7);
    CHECK(ds.user_key(2) == 7);
    CHECK(ds.item_key(1) == 4);
    CHECK(ds.timestamp(2) == 500);

    Dataset::Cursor cur(ds);
    const FeatureValues v0 = cur.at(0);
    CHECK(v0[0][0] == 7);
    CHECK(v0[2].size() == 3);
    CHECK(v0[2][1] == 2);
    const FeatureValues v1 = cur.at(1);
    CHECK(v1[2].empty());
    CHECK_THROWS_AS(cur.at(3), ShapeError);
}

TEST_CASE("add_sample rejects wrong arity and non-binary labels") {
    Dataset ds(tiny_schema());
    const std::int32_t a = 1;
    const std::int32_t pair[2] = {1, 2};
    const std::span<const std::int32_t> too_few[2] = {{&a, 1}, {&a, 1}};
    CHECK_THROWS_AS(ds.add_sample(too_few, 1, 0), ShapeError);

    const std::span<const std::int32_t> wide_scalar[3] = {{pair, 2}, {&a, 1}, {}};
    CHECK_THROWS_AS(ds.add_sample(wide_scalar, 1, 0), ShapeError);

    const std::span<const std::int32_t> ok[3] = {{&a, 1}, {&a, 1}, {}};
    CHECK_THROWS_AS(ds.add_sample(ok, 2, 0), NumericError);
    ds.add_sample(ok, 1, 0);
    CHECK(ds.size() == 1);
}

TEST_CASE("negative timestamps mark the whole set as unstamped") {
    Dataset ds(tiny_schema());
    add_row(ds, 1, 1, {}, 0, 100);
    CHECK(ds.has_timestamps());
    add_row(ds, 1, 2, {}, 0, -1);
    CHECK_FALSE(ds.has_timestamps());
}

TEST_CASE("split_random lands exact proportions for a divisible count") {
    Dataset ds(tiny_schema());
    for (int i = 0; i < 10; ++i) add_row(ds, i, i, {}, i % 2, i);
    const auto parts = ds.split_random(0.6, 0.2, 0.2, 42);
    CHECK(parts[0].size() == 6);
    CHECK(parts[1].size() == 2);
    CHECK(parts[2].size() == 2);
}

TEST_CASE("split_random is a seeded disjoint partition within one of exact sizes") {
    Dataset ds(tiny_schema());
    for (int i = 0; i < 997; ++i) add_row(ds, i, 2 * i + 1, {i % 50}, i % 2, i * 10);
    const auto parts = ds.split_random(0.6, 0.2, 0.2, 7);

    CHECK(parts[0].size() + parts[1].size() + parts[2].size() == 997);
    CHECK(std::abs(static_cast<double>(parts[0].size()) - 0.6 * 997) <= 1.0);
    CHECK(std::abs(static_cast<double>(parts[1].size()) - 0.2 * 997) <= 1.0);
    CHECK(std::abs(static_cast<double>(parts[2].size()) - 0.2 * 997) <= 1.0);

    // the three parts reassemble the original multiset exactly
    std::multiset<RowSig> unioned;
    for (const Dataset& p : parts)
        for (const RowSig& r : signature(p)) unioned.insert(r);
    CHECK(unioned == signature(ds));

    const auto again = ds.split_random(0.6, 0.2, 0.2, 7);
    CHECK(tsv_text(again[0], "a") == tsv_text(parts[0], "b"));

    const auto other = ds.split_random(0.6, 0.2, 0.2, 8);
    CHECK(tsv_text(other[0], "c") != tsv_text(parts[0], "d"));
}

TEST_CASE("split_random validates ratios") {
    Dataset ds(tiny_schema());
    add_row(ds, 1, 1, {}, 0, 0);
    CHECK_THROWS_AS(ds.split_random(0.6, 0.2, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(ds.split_random(0.0, 0.5, 0.5, 1), ConfigError);
}

TEST_CASE("tsv round-trip reproduces every sample and the schema") {
    Dataset ds(tiny_schema(), "rt");
    add_row(ds, 7, 3, {1, 2, 3}, 1, 1000);
    add_row(ds, 8, 4, {}, 0, 2000);
    add_row(ds, 9, 5, {42}, 1, -1);

    const std::string path = "/tmp/roundtrip_test.tsv";
    ds.save_tsv(path);
    const Dataset back = Dataset::load_tsv(path);
    std::remove(path.c_str());

    CHECK(back.schema().fingerprint() == ds.schema().fingerprint());
    CHECK(signature(back) == signature(ds));
    CHECK_FALSE(back.has_timestamps());
}

TEST_CASE("stats windows count distinct event days ending at the reference day") {
    Dataset train(tiny_schema());
    const std::int64_t day = 86400;
    // user 5: events on days 93, 94, 94 (duplicate day), 100
    add_row(train, 5, 1, {}, 1, 93 * day + 5);
    add_row(train, 5, 2, {}, 0, 94 * day);
    add_row(train, 5, 3, {}, 1, 94 * day + 80000);
    add_row(train, 5, 4, {}, 0, 100 * day + 7);
    // user 6: one old event
    add_row(train, 6, 1, {}, 1, 10 * day);

    const StatsStore stats = build_stats(train);
    CHECK(stats.has_timestamps());
    CHECK(stats.snapshot_time() == 100 * day + 7);
    CHECK(stats.user_count() == 2);

    const EntityStats* u5 = stats.user(5);
    REQUIRE(u5 != nullptr);
    // 7-day window at day 100 covers days 94..100: {94, 100}
    CHECK(u5->active_days_7 == 2);
    // 30-day window covers days 71..100: {93, 94, 100}
    CHECK(u5->active_days_30 == 3);
    REQUIRE(u5->counts.size() == 1);
    CHECK(u5->counts[0] == 4);

    const EntityStats* u6 = stats.user(6);
    REQUIRE(u6 != nullptr);
    CHECK(u6->active_days_7 == 0);
    CHECK(u6->active_days_30 == 0);
    CHECK(u6->counts[0] == 1);

    CHECK(stats.user(99) == nullptr);

    SUBCASE("temporal lookups move the window, counts stay cumulative") {
        const auto at94 = stats.user_at(5, 94 * day + 100);
        REQUIRE(at94.has_value());
        CHECK(at94->active_days_7 == 2);  // days 88..94: {93, 94}
        CHECK(at94->active_days_30 == 2);
        CHECK(at94->counts[0] == 4);

        const auto before = stats.user_at(5, 0);
        REQUIRE(before.has_value());
        CHECK(before->active_days_7 == 0);

        CHECK_FALSE(stats.user_at(99, 94 * day).has_value());
    }

    SUBCASE("item side aggregates by item key") {
        const EntityStats* i1 = stats.item(1);
        REQUIRE(i1 != nullptr);
        CHECK(i1->counts[0] == 2);
        CHECK(stats.item_count() == 4);
    }
}

TEST_CASE("stats without timestamps keep counts but mark activity unknown") {
    Dataset train(tiny_schema());
    add_row(train, 5, 1, {}, 1, -1);
    add_row(train, 5, 2, {}, 0, -1);
    const StatsStore stats = build_stats(train);
    CHECK_FALSE(stats.has_timestamps());
    const EntityStats* u5 = stats.user(5);
    REQUIRE(u5 != nullptr);
    CHECK(u5->active_days_7 == -1);
    CHECK(u5->active_days_30 == -1);
    CHECK(u5->counts[0] == 2);
}

TEST_CASE("stats built from the training split know nothing about eval entities") {
    Dataset train(tiny_schema());
    Dataset val(tiny_schema());
    add_row(train, 1, 1, {}, 1, 100);
    add_row(val, 2, 2, {}, 1, 200);
    const StatsStore stats = build_stats(train);
    CHECK(stats.user(1) != nullptr);
    CHECK(stats.user(2) == nullptr);
    CHECK(stats.item(2) == nullptr);
}

TEST_CASE("movielens parser maps the raw files onto the schema") {
    const std::string dir = "/tmp/ml_fixture";
    REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);
    std::ofstream(dir + "/users.dat")
        << "1::F::1::10::48067\n"
        << "2::M::56::16::70072\n";
    std::ofstream(dir + "/movies.dat")
        << "1::Toy Story (1995)::Animation|Children's|Comedy\n"
        << "2::Jumanji (1995)::Adventure|Children's|Fantasy\n"
        << "3::Oddity (Unknown)::Weirdness\n";
    std::ofstream(dir + "/ratings.dat")
        << "1::1::5::978300760\n"
        << "1::2::3::978302109\n"
        << "2::3::4::978301968\n";

    const Dataset ds = load_movielens(dir);
    REQUIRE(ds.size() == 3);
    CHECK(ds.schema().size() == 7);
    CHECK(ds.has_timestamps());

    Dataset::Cursor cur(ds);
    const FeatureValues s0 = cur.at(0);
    CHECK(s0[0][0] == 1);   // user id
    CHECK(s0[1][0] == 1);   // gender F
    CHECK(s0[2][0] == 1);   // age 1
    CHECK(s0[3][0] == 11);  // occupation 10
    CHECK(s0[4][0] == 1);   // movie id
    CHECK(s0[5][0] == 196); // 1995 relative to the 1800 base
    REQUIRE(s0[6].size() == 3);
    CHECK(s0[6][0] == 3);   // Animation
    CHECK(s0[6][1] == 4);   // Children's
    CHECK(s0[6][2] == 5);   // Comedy
    CHECK(ds.label(0) == 1);

    CHECK(ds.label(1) == 0); // rating 3 is below the click threshold

    const FeatureValues s2 = cur.at(2);
    CHECK(s2[1][0] == 2);   // gender M
    CHECK(s2[2][0] == 7);   // age 56
    CHECK(s2[5][0] == 0);   // unparseable year
    REQUIRE(s2[6].size() == 1);
    CHECK(s2[6][0] == 0);   // unknown genre keeps the reserved index
    CHECK(ds.label(2) == 1);

    SUBCASE("a rating for a movie missing from movies.dat is a hard error") {
        std::ofstream(dir + "/ratings.dat", std::ios::app) << "1::999::4::978300000\n";
        CHECK_THROWS_AS(load_movielens(dir), IoError);
    }
}

TEST_CASE("synthetic schema places ids and meta features on their sides") {
    SynthConfig cfg;
    cfg.users = 50;
    cfg.items = 30;
    cfg.meta_features = 2;
    const FeatureSchema schema = synth_schema(cfg);
    REQUIRE(schema.size() == 6);
    CHECK(schema.at(0).name == "user_id");
    CHECK(schema.at(0).state_id);
    CHECK(schema.at(0).vocab == 51);
    CHECK(schema.at(1).kind == FeatureKind::User);
    CHECK(schema.at(1).fclass == FeatureClass::Meta);
    CHECK(schema.at(1).vocab == 17);
    CHECK(schema.at(3).name == "item_id");
    CHECK(schema.at(3).vocab == 31);
    CHECK(schema.at(5).kind == FeatureKind::Item);
}

TEST_CASE("synthetic config validation rejects out-of-range knobs") {
    SynthConfig cfg;
    cfg.label_noise = 0.6;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.informativeness = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.cold_user_frac = 0.95;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.users = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

namespace {

SynthConfig small_cfg() {
    SynthConfig cfg;
    cfg.users = 200;
    cfg.items = 100;
    cfg.samples = 6000;
    cfg.latent_dim = 6;
    cfg.meta_features = 2;
    return cfg;
}

} // namespace

TEST_CASE("synthetic generation is deterministic per seed") {
    const SynthConfig cfg = small_cfg();
    const SynthData a = generate_synthetic(cfg, 11);
    const SynthData b = generate_synthetic(cfg, 11);
    CHECK(tsv_text(a.train, "sa") == tsv_text(b.train, "sb"));
    CHECK(tsv_text(a.val, "sc") == tsv_text(b.val, "sd"));
    CHECK(tsv_text(a.test, "se") == tsv_text(b.test, "sf"));

    const SynthData c = generate_synthetic(cfg, 12);
    CHECK(tsv_text(a.train, "sg") != tsv_text(c.train, "sh"));
}

TEST_CASE("synthetic splits follow the 60/20/20 layout") {
    const SynthData d = generate_synthetic(small_cfg(), 3);
    CHECK(d.train.size() == 3600);
    CHECK(d.val.size() == 1200);
    CHECK(d.test.size() == 1200);
    CHECK(d.train.has_timestamps());
}

TEST_CASE("cold entities never reach the training split but do reach eval") {
    const SynthConfig cfg = small_cfg();
    const SynthData d = generate_synthetic(cfg, 5);

    bool saw_cold_eval_user = false;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
        CHECK(d.truth.cold_user[d.train.user_key(i)] == 0);
        CHECK(d.truth.cold_item[d.train.item_key(i)] == 0);
    }
    for (const Dataset* part : {&d.val, &d.test})
        for (std::size_t i = 0; i < part->size(); ++i)
            saw_cold_eval_user |= d.truth.cold_user[part->user_key(i)] == 1;
    CHECK(saw_cold_eval_user);

    // cold flags cover the configured tail fraction
    std::size_t cold_users = 0;
    for (const std::uint8_t c : d.truth.cold_user) cold_users += c;
    CHECK(cold_users == 20);
}

TEST_CASE("popularity follows a long tail: the top ranks dominate training") {
    const SynthConfig cfg = small_cfg();
    const SynthData d = generate_synthetic(cfg, 9);
    std::map<std::int32_t, std::size_t> freq;
    for (std::size_t i = 0; i < d.train.size(); ++i) ++freq[d.train.user_key(i)];

    // ids are rank order, so the head is ids 1..10 (top 5% of 200)
    std::size_t head = 0;
    for (std::int32_t u = 1; u <= 10; ++u) head += freq.count(u) ? freq[u] : 0;
    CHECK(static_cast<double>(head) / static_cast<double>(d.train.size()) >= 0.5);
}

TEST_CASE("the generating click model separates labels well") {
    const SynthConfig cfg = small_cfg();
    const SynthData d = generate_synthetic(cfg, 21);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < d.test.size(); ++i) {
        scores.push_back(d.truth.prob(d.test.user_key(i), d.test.item_key(i)));
        labels.push_back(d.test.label(i));
    }
    CHECK(auc(scores, labels).value() >= 0.75);
}

TEST_CASE("informativeness only moves the meta columns") {
    SynthConfig sharp = small_cfg();
    sharp.informativeness = 1.0;
    SynthConfig blind = small_cfg();
    blind.informativeness = 0.0;
    const SynthData a = generate_synthetic(sharp, 13);
    const SynthData b = generate_synthetic(blind, 13);

    REQUIRE(a.train.size() == b.train.size());
    bool meta_differs = false;
    Dataset::Cursor ca(a.train);
    Dataset::Cursor cb(b.train);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train.user_key(i) == b.train.user_key(i));
        CHECK(a.train.item_key(i) == b.train.item_key(i));
        CHECK(a.train.label(i) == b.train.label(i));
        const FeatureValues va = ca.at(i);
        const FeatureValues vb = cb.at(i);
        meta_differs |= va[1][0] != vb[1][0] || va[2][0] != vb[2][0];
    }
    CHECK(meta_differs);
}

TEST_CASE("training stats over synthetic data see the head user on many days") {
    const SynthData d = generate_synthetic(small_cfg(), 17);
    const StatsStore stats = build_stats(d.train);
    CHECK(stats.has_timestamps());
    const EntityStats* head = stats.user(1);
    REQUIRE(head != nullptr);
    CHECK(head->active_days_30 >= 10);
    CHECK(head->counts[0] >= 100);
}

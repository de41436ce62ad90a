#include "config.hpp"

#include <charconv>
#include <fstream>
#include <string_view>

#include "errors.hpp"

namespace adaf2m2 {
namespace {

using nlohmann::json;

const char* category_name(const json& v) {
    if (v.is_object()) return "object";
    if (v.is_array()) return "array";
    if (v.is_string()) return "string";
    if (v.is_boolean()) return "bool";
    if (v.is_number()) return "number";
    return "null";
}

bool same_category(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return std::string_view(category_name(a)) == category_name(b);
}

void merge_into(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object())
        throw ConfigError("config must be a JSON object at " +
                          (prefix.empty() ? std::string("the top level") : prefix));
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key: " + path);
        json& slot = base[it.key()];
        if (slot.is_object()) {
            merge_into(slot, it.value(), path);
            continue;
        }
        if (!same_category(slot, it.value()))
            throw ConfigError("config key " + path + " expects " + category_name(slot) +
                              ", got " + category_name(it.value()));
        slot = it.value();
    }
}

// Walks a dotted path; every step must exist in the tree of known keys.
json& walk(json& root, const std::string& path) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key =
            path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty() || !node->is_object() || !node->contains(key))
            throw ConfigError("unknown config key: " + path);
        node = &(*node)[key];
        if (dot == std::string::npos) return *node;
        start = dot + 1;
    }
}

const json& walk(const json& root, const std::string& path) {
    return walk(const_cast<json&>(root), path);
}

template <typename T>
T parse_full(const std::string& text, const std::string& path, const char* expects) {
    T v{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("config key " + path + " expects " + expects + ", got '" + text + "'");
    return v;
}

json parse_typed(const json& slot, const std::string& text, const std::string& path) {
    if (slot.is_boolean()) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError("config key " + path + " expects a bool, got '" + text + "'");
    }
    if (slot.is_number_unsigned())
        return parse_full<std::uint64_t>(text, path, "a non-negative integer");
    if (slot.is_number_integer()) return parse_full<std::int64_t>(text, path, "an integer");
    if (slot.is_number_float()) return parse_full<double>(text, path, "a number");
    if (slot.is_string()) return text;
    if (slot.is_array()) {
        json v = json::parse(text, nullptr, false);
        if (v.is_discarded() || !v.is_array())
            throw ConfigError("config key " + path + " expects a JSON array, got '" + text + "'");
        return v;
    }
    throw ConfigError("config key " + path + " cannot be assigned");
}

bool is_integer(const json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

int get_int(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!is_integer(v)) throw ConfigError("config key " + path + " expects an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError("config key " + path + " expects a non-negative integer");
}

double get_num(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!v.is_number()) throw ConfigError("config key " + path + " expects a number");
    return v.get<double>();
}

bool get_bool(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!v.is_boolean()) throw ConfigError("config key " + path + " expects a bool");
    return v.get<bool>();
}

std::string get_str(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!v.is_string()) throw ConfigError("config key " + path + " expects a string");
    return v.get<std::string>();
}

std::vector<double> get_nums(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!v.is_array()) throw ConfigError("config key " + path + " expects a number array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) throw ConfigError("config key " + path + " expects a number array");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> get_ints(const json& root, const std::string& path) {
    const json& v = walk(root, path);
    if (!v.is_array()) throw ConfigError("config key " + path + " expects an integer array");
    std::vector<int> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!is_integer(e)) throw ConfigError("config key " + path + " expects an integer array");
        out.push_back(e.get<int>());
    }
    return out;
}

void check_one_of(const std::string& value, std::initializer_list<const char*> allowed,
                  const std::string& path) {
    for (const char* a : allowed)
        if (value == a) return;
    std::string msg = "config key " + path + " must be one of {";
    bool first = true;
    for (const char* a : allowed) {
        if (!first) msg += ", ";
        msg += a;
        first = false;
    }
    throw ConfigError(msg + "}, got '" + value + "'");
}

void check_bounds(const std::vector<int>& bounds, const std::string& path) {
    int prev = 0;
    for (int b : bounds) {
        if (b <= prev)
            throw ConfigError("config key " + path +
                              " must be strictly increasing positive integers");
        prev = b;
    }
}

} // namespace

json config_defaults() {
    const SynthConfig synth;
    const ModelConfig model;
    const MaskConfig mask;
    const AdapterConfig adapter;
    const TrainConfig train;
    return json{
        {"seed", std::uint64_t{0}},
        {"out", "run"},
        {"dim", 16},
        {"data",
         json{
             {"source", "synth"},
             {"movielens_dir", ""},
             {"train", ""},
             {"val", ""},
             {"test", ""},
             {"split", json::array({0.8, 0.1, 0.1})},
             {"synth",
              json{
                  {"users", synth.users},
                  {"items", synth.items},
                  {"samples", synth.samples},
                  {"user_zipf", synth.user_zipf},
                  {"item_zipf", synth.item_zipf},
                  {"latent_dim", synth.latent_dim},
                  {"meta_features", synth.meta_features},
                  {"informativeness", synth.informativeness},
                  {"label_noise", synth.label_noise},
                  {"cold_user_frac", synth.cold_user_frac},
                  {"cold_item_frac", synth.cold_item_frac},
                  {"cold_boost", synth.cold_boost},
              }},
         }},
        {"model",
         json{
             {"kind", to_string(model.kind)},
             {"hidden", model.hidden},
             {"latent", model.latent},
             {"fm_bias", model.fm_bias},
         }},
        {"mask", json{{"k", mask.k}, {"beta", mask.beta}, {"gamma", mask.gamma}}},
        {"adapter",
         json{
             {"enabled", true},
             {"hidden", adapter.hidden},
             {"activation_out", "sigmoid"},
             {"stop_gradient", adapter.stop_gradient},
         }},
        {"train",
         json{
             {"alpha", train.alpha},
             {"batch", train.batch},
             {"lr", train.lr},
             {"epochs", train.epochs},
             {"grad_clip", train.grad_clip},
             {"temporal_stats", train.temporal_stats},
             {"shuffle", train.shuffle},
         }},
        {"eval", json{{"split", "test"}, {"baseline", ""}, {"checkpoint", ""}}},
        {"analyze",
         json{
             {"split", "test"},
             {"user_bounds", json::array({3, 10})},
             {"item_bounds", json::array({3, 10})},
         }},
    };
}

void merge_config(json& base, const std::string& file_text) {
    json patch;
    try {
        patch = json::parse(file_text);
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    merge_into(base, patch, "");
}

void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json& slot = walk(cfg, path);
    if (slot.is_object())
        throw ConfigError("config key " + path + " is a section, not a value");
    slot = parse_typed(slot, value, path);
}

Ablation RunConfig::ablation() const {
    const bool masked = mask.k > 0;
    if (masked && adapter_enabled) return Ablation::Full;
    if (masked) return Ablation::MaskOnly;
    if (adapter_enabled) return Ablation::AdapterOnly;
    return Ablation::BaseOnly;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.alpha = alpha;
    t.batch = batch;
    t.lr = lr;
    t.epochs = epochs;
    t.seed = seed;
    t.mask = mask;
    t.grad_clip = grad_clip;
    t.temporal_stats = temporal_stats;
    t.shuffle = shuffle;
    return t;
}

BundleConfig RunConfig::bundle_config() const {
    BundleConfig b;
    b.dim = dim;
    b.model = model;
    b.adapter = adapter;
    b.signals.user_count_kinds = 1;
    b.signals.item_count_kinds = 1;
    b.signals.stop_gradient = adapter.stop_gradient;
    b.ablation = ablation();
    return b;
}

RunConfig runconfig_from(const json& cfg) {
    RunConfig rc;
    rc.seed = get_u64(cfg, "seed");
    rc.out = get_str(cfg, "out");
    rc.dim = get_int(cfg, "dim");
    if (rc.dim < 1) throw ConfigError("config key dim must be >= 1");

    rc.data.source = get_str(cfg, "data.source");
    check_one_of(rc.data.source, {"synth", "movielens", "tsv"}, "data.source");
    rc.data.movielens_dir = get_str(cfg, "data.movielens_dir");
    rc.data.train = get_str(cfg, "data.train");
    rc.data.val = get_str(cfg, "data.val");
    rc.data.test = get_str(cfg, "data.test");
    if (rc.data.source == "movielens" && rc.data.movielens_dir.empty())
        throw ConfigError("config key data.movielens_dir is required when data.source=movielens");
    if (rc.data.source == "tsv" &&
        (rc.data.train.empty() || rc.data.val.empty() || rc.data.test.empty()))
        throw ConfigError(
            "config keys data.train, data.val, data.test are required when data.source=tsv");
    rc.data.split = get_nums(cfg, "data.split");
    if (rc.data.split.size() != 3)
        throw ConfigError("config key data.split expects [train, val, test] ratios");
    for (double r : rc.data.split)
        if (r <= 0.0) throw ConfigError("config key data.split entries must be > 0");

    rc.data.synth.users = get_int(cfg, "data.synth.users");
    rc.data.synth.items = get_int(cfg, "data.synth.items");
    rc.data.synth.samples = get_int(cfg, "data.synth.samples");
    rc.data.synth.user_zipf = get_num(cfg, "data.synth.user_zipf");
    rc.data.synth.item_zipf = get_num(cfg, "data.synth.item_zipf");
    rc.data.synth.latent_dim = get_int(cfg, "data.synth.latent_dim");
    rc.data.synth.meta_features = get_int(cfg, "data.synth.meta_features");
    rc.data.synth.informativeness = get_num(cfg, "data.synth.informativeness");
    rc.data.synth.label_noise = get_num(cfg, "data.synth.label_noise");
    rc.data.synth.cold_user_frac = get_num(cfg, "data.synth.cold_user_frac");
    rc.data.synth.cold_item_frac = get_num(cfg, "data.synth.cold_item_frac");
    rc.data.synth.cold_boost = get_num(cfg, "data.synth.cold_boost");
    if (rc.data.source == "synth") rc.data.synth.validate();

    rc.model.kind = model_kind_from(get_str(cfg, "model.kind"));
    rc.model.hidden = get_ints(cfg, "model.hidden");
    rc.model.latent = get_int(cfg, "model.latent");
    rc.model.fm_bias = get_bool(cfg, "model.fm_bias");
    rc.model.validate();

    rc.mask.k = get_int(cfg, "mask.k");
    rc.mask.beta = get_num(cfg, "mask.beta");
    rc.mask.gamma = get_num(cfg, "mask.gamma");
    rc.mask.validate();

    rc.adapter_enabled = get_bool(cfg, "adapter.enabled");
    rc.adapter.hidden = get_int(cfg, "adapter.hidden");
    if (rc.adapter.hidden < 1) throw ConfigError("config key adapter.hidden must be >= 1");
    const std::string act = get_str(cfg, "adapter.activation_out");
    check_one_of(act, {"sigmoid", "softmax"}, "adapter.activation_out");
    rc.adapter.activation =
        act == "softmax" ? AdapterActivation::Softmax : AdapterActivation::Sigmoid;
    rc.adapter.stop_gradient = get_bool(cfg, "adapter.stop_gradient");

    rc.alpha = get_num(cfg, "train.alpha");
    rc.batch = get_int(cfg, "train.batch");
    rc.lr = get_num(cfg, "train.lr");
    rc.epochs = get_int(cfg, "train.epochs");
    rc.grad_clip = get_num(cfg, "train.grad_clip");
    rc.temporal_stats = get_bool(cfg, "train.temporal_stats");
    rc.shuffle = get_bool(cfg, "train.shuffle");
    rc.train_config().validate();

    rc.eval.split = get_str(cfg, "eval.split");
    check_one_of(rc.eval.split, {"train", "val", "test"}, "eval.split");
    rc.eval.baseline = get_str(cfg, "eval.baseline");
    rc.eval.checkpoint = get_str(cfg, "eval.checkpoint");

    rc.analyze.split = get_str(cfg, "analyze.split");
    check_one_of(rc.analyze.split, {"train", "val", "test"}, "analyze.split");
    rc.analyze.user_bounds = get_ints(cfg, "analyze.user_bounds");
    rc.analyze.item_bounds = get_ints(cfg, "analyze.item_bounds");
    check_bounds(rc.analyze.user_bounds, "analyze.user_bounds");
    check_bounds(rc.analyze.item_bounds, "analyze.item_bounds");
    return rc;
}

json resolve_config(const std::string& config_path, std::span<const std::string> overrides) {
    json cfg = config_defaults();
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw IoError("cannot open config file: " + config_path);
        const std::string text{std::istreambuf_iterator<char>(is),
                               std::istreambuf_iterator<char>()};
        merge_config(cfg, text);
    }
    for (const std::string& a : overrides) apply_override(cfg, a);
    return cfg;
}

} // namespace adaf2m2

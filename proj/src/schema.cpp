#include "schema.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace adaf2m2 {

const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::User: return "user";
        case FeatureKind::Item: return "item";
        case FeatureKind::Context: return "context";
    }
    return "?";
}

const char* to_string(FeatureClass c) {
    return c == FeatureClass::IdBased ? "id" : "meta";
}

FeatureKind feature_kind_from(const std::string& s) {
    if (s == "user") return FeatureKind::User;
    if (s == "item") return FeatureKind::Item;
    if (s == "context") return FeatureKind::Context;
    throw ConfigError("unknown feature kind '" + s + "' (expected user|item|context)");
}

FeatureClass feature_class_from(const std::string& s) {
    if (s == "id" || s == "id_based") return FeatureClass::IdBased;
    if (s == "meta") return FeatureClass::Meta;
    throw ConfigError("unknown feature class '" + s + "' (expected id|meta)");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
    std::unordered_set<std::string> names;
    for (const FeatureSpec& f : features_) {
        if (f.name.empty()) throw ConfigError("schema: feature with empty name");
        if (!names.insert(f.name).second) throw ConfigError("schema: duplicate feature name '" + f.name + "'");
        if (f.vocab < 1) throw ConfigError("schema: feature '" + f.name + "' has vocab " + std::to_string(f.vocab) + " (must be >= 1)");
        if (f.fclass == FeatureClass::IdBased && f.vocab <= 1)
            throw ConfigError("schema: id feature '" + f.name + "' needs vocab > 1");
        if (f.is_sequence && f.fclass != FeatureClass::IdBased)
            throw ConfigError("schema: sequence feature '" + f.name + "' must be id-based");
    }
}

const FeatureSpec& FeatureSchema::at(int i) const {
    if (i < 0 || i >= size())
        throw Error("schema: feature index " + std::to_string(i) + " out of range [0," + std::to_string(size()) + ")");
    return features_[static_cast<std::size_t>(i)];
}

int FeatureSchema::index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (features_[static_cast<std::size_t>(i)].name == name) return i;
    return -1;
}

std::vector<int> FeatureSchema::indices_of_kind(FeatureKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (features_[static_cast<std::size_t>(i)].kind == kind) out.push_back(i);
    return out;
}

std::vector<int> FeatureSchema::state_id_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (features_[static_cast<std::size_t>(i)].state_id) out.push_back(i);
    return out;
}

std::vector<int> FeatureSchema::tower_indices(bool user_side) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        const FeatureKind k = features_[static_cast<std::size_t>(i)].kind;
        const bool user_owned = k == FeatureKind::User || k == FeatureKind::Context;
        if (user_owned == user_side) out.push_back(i);
    }
    return out;
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("schema: invalid JSON: ") + e.what());
    }
    if (!j.contains("features") || !j["features"].is_array())
        throw ConfigError("schema: missing 'features' array");
    std::vector<FeatureSpec> specs;
    for (const auto& f : j["features"]) {
        FeatureSpec s;
        s.name = f.at("name").get<std::string>();
        s.kind = feature_kind_from(f.at("kind").get<std::string>());
        s.fclass = feature_class_from(f.at("class").get<std::string>());
        s.vocab = f.at("vocab").get<int>();
        s.is_sequence = f.value("sequence", false);
        s.state_id = f.value("state_id", false);
        specs.push_back(std::move(s));
    }
    return FeatureSchema(std::move(specs));
}

FeatureSchema FeatureSchema::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("schema: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string FeatureSchema::to_json_text(int indent) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const FeatureSpec& f : features_) {
        arr.push_back({{"name", f.name},
                       {"kind", to_string(f.kind)},
                       {"class", to_string(f.fclass)},
                       {"vocab", f.vocab},
                       {"sequence", f.is_sequence},
                       {"state_id", f.state_id}});
    }
    return nlohmann::json{{"features", arr}}.dump(indent);
}

std::string FeatureSchema::fingerprint() const {
    std::ostringstream ss;
    for (const FeatureSpec& f : features_)
        ss << f.name << ':' << to_string(f.kind) << ':' << to_string(f.fclass) << ':' << f.vocab
           << ':' << (f.is_sequence ? 's' : '-') << (f.state_id ? 'i' : '-') << ';';
    return ss.str();
}

} // namespace adaf2m2

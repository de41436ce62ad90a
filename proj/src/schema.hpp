#pragma once

#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace adaf2m2 {

enum class FeatureKind { User, Item, Context };
enum class FeatureClass { IdBased, Meta };

const char* to_string(FeatureKind k);
const char* to_string(FeatureClass c);
FeatureKind feature_kind_from(const std::string& s);
FeatureClass feature_class_from(const std::string& s);

// One raw feature as declared in the schema file. `vocab` counts the reserved
// out-of-vocabulary index 0, so valid values are [0, vocab).
struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::User;
    FeatureClass fclass = FeatureClass::Meta;
    int vocab = 1;
    bool is_sequence = false;
    // Marks the feature as one of the designated ID features (user/item/
    // artist ID) whose embeddings feed the state signals.
    bool state_id = false;
};

// Ordered, immutable description of every raw feature. The position of a
// feature in this list is its index everywhere else in the system.
class FeatureSchema {
public:
    explicit FeatureSchema(std::vector<FeatureSpec> features);

    int size() const { return static_cast<int>(features_.size()); }
    const FeatureSpec& at(int i) const;
    std::span<const FeatureSpec> features() const { return features_; }
    int index_of(const std::string& name) const; // -1 if absent

    std::vector<int> indices_of_kind(FeatureKind kind) const;
    std::vector<int> state_id_indices() const;
    // Features owned by one tower: user tower also carries context features.
    std::vector<int> tower_indices(bool user_side) const;

    static FeatureSchema from_json_text(const std::string& text);
    static FeatureSchema from_file(const std::string& path);
    std::string to_json_text(int indent = 2) const; // indent < 0 means one line

    // Stable fingerprint of (names, kinds, classes, vocabs, flags) used to
    // detect checkpoint/dataset mismatches.
    std::string fingerprint() const;

private:
    std::vector<FeatureSpec> features_;
};

} // namespace adaf2m2

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adapter.hpp"
#include "datasets.hpp"
#include "mask.hpp"
#include "models.hpp"
#include "trainer.hpp"

namespace adaf2m2 {

// Every run is driven by one JSON tree: defaults, overlaid by an optional
// config file, overlaid by dotted-key overrides. The fully merged tree is
// what gets dumped next to the run's outputs, and feeding that dump back in
// reproduces the run.

// The complete tree of known keys with their default values. File keys and
// overrides must address keys that exist here; anything else is a
// ConfigError naming the unknown path.
nlohmann::json config_defaults();

// Overlays `file_text` (parsed as JSON) onto `base`, recursing into objects.
// Arrays and scalars replace wholesale; a type-category change or an unknown
// key path is a ConfigError.
void merge_config(nlohmann::json& base, const std::string& file_text);

// Applies one "dotted.path=value" assignment. The value is parsed according
// to the type of the addressed default: bool, integer, number, string, or a
// JSON array literal.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// Typed view of the merged tree.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "run";
    int dim = 16;

    struct Data {
        std::string source = "synth"; // synth | movielens | tsv
        std::string movielens_dir;
        std::string train, val, test;          // tsv paths
        std::vector<double> split{0.8, 0.1, 0.1}; // movielens train/val/test ratio
        SynthConfig synth;
    } data;

    ModelConfig model;
    MaskConfig mask;
    bool adapter_enabled = true;
    AdapterConfig adapter;

    double alpha = 0.2;
    int batch = 256;
    double lr = 0.001;
    int epochs = 5;
    double grad_clip = 0.0;
    bool temporal_stats = false;
    bool shuffle = true;

    struct Eval {
        std::string split = "test";
        std::string baseline;   // report file for RelaImpr lines; empty = off
        std::string checkpoint; // empty = <out>/checkpoint
    } eval;

    struct Analyze {
        std::string split = "test";
        std::vector<int> user_bounds{3, 10}; // 30-day active-day group edges
        std::vector<int> item_bounds{3, 10};
    } analyze;

    // The ablation is spelled through the switches themselves: k = 0 turns
    // the masked forwards off, adapter.enabled = false the adaptive weights.
    Ablation ablation() const;
    TrainConfig train_config() const;
    BundleConfig bundle_config() const;
};

// Materializes and validates the typed view. Errors name the key path.
RunConfig runconfig_from(const nlohmann::json& cfg);

// Convenience pipeline: defaults, optional file, overrides, in that order.
nlohmann::json resolve_config(const std::string& config_path,
                              std::span<const std::string> overrides);

} // namespace adaf2m2

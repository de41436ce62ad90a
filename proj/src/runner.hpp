#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "config.hpp"

namespace adaf2m2 {

// One entry point per command. Each takes the fully resolved config tree,
// writes its artifacts under the configured out directory with fixed names
// (checkpoint, train_log, report, resolved_config, heatmap_user.csv,
// heatmap_item.csv), and echoes human-readable result lines to `echo`.

// Fits a bundle on the configured dataset; writes checkpoint, train_log,
// and resolved_config.
void run_train(const nlohmann::json& resolved, std::ostream& echo);

// Serve-path scoring of the configured split against a checkpoint; writes
// report (JSON) and resolved_config, echoes one line per metric. A baseline
// report file adds relative-improvement lines.
void run_eval(const nlohmann::json& resolved, std::ostream& echo);

// Mean adaptive weight per state group and feature, plus state-bucketed
// metric tables; writes heatmap_user.csv, heatmap_item.csv, resolved_config.
// A checkpoint without an adapter gets an explicit message and no heatmaps.
void run_analyze(const nlohmann::json& resolved, std::ostream& echo);

// Finite-difference verification of the training gradients over every model
// kind and ablation on a small generated batch; one echoed line per cell.
// Returns false when any cell's max relative error reaches `tolerance`. The
// corrupt hook injects a wrong gradient into the first cell, as a negative
// control for the checker itself.
bool run_gradcheck(const nlohmann::json& resolved, std::ostream& echo, double tolerance = 1e-4,
                   bool corrupt_hook = false);

// Generates the configured synthetic dataset; writes train.tsv, val.tsv,
// test.tsv, and resolved_config.
void run_gen_synth(const nlohmann::json& resolved, std::ostream& echo);

} // namespace adaf2m2

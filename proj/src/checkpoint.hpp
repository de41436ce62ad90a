#pragma once

#include <string>
#include <vector>

#include "trainer.hpp"

namespace adaf2m2 {

// On-disk snapshot of every trainable parameter, keyed by stable parameter
// id, behind a header that binds the blob to the schema and bundle layout
// that produced it. Doubles are stored as raw 64-bit words, so a save/load
// round trip is bit-exact on the same platform.

struct CheckpointInfo {
    std::string schema_fingerprint;
    ModelKind model_kind = ModelKind::Fm;
    Ablation ablation = Ablation::Full;
    int dim = 0;
    std::string extra;                  // caller payload, canonical JSON
    std::vector<std::string> param_ids; // stored order
};

// extra_json must parse as JSON; it travels with the parameters and comes
// back from load_checkpoint (canonically re-serialized).
void save_checkpoint(const std::string& path, ModelBundle& bundle,
                     const std::string& extra_json = "{}");

// Restores parameter values into a bundle built with the same schema and
// layout; returns the extra payload stored at save time. Any disagreement
// between file and bundle (fingerprint, model kind, ablation, dim, parameter
// set or shapes) is an IoError before any parameter is touched.
std::string load_checkpoint(const std::string& path, ModelBundle& bundle);

// Header plus parameter directory, without loading the data blobs.
CheckpointInfo read_checkpoint_info(const std::string& path);

} // namespace adaf2m2

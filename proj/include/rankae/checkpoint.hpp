#pragma once

#include <string>

#include "rankae/model.hpp"

namespace rankae {

/// Checkpoint file layout, all integers little-endian:
///
///   bytes 0..3   magic "RKAE"
///   u32          format version (currently 1)
///   u64          config length in bytes
///   ...          config text (the canonical ModelConfig key=value block)
///   then, for each parameter array in the fixed ModelParams order
///   (embedding, attn_f1, attn_f2, feature_w, feature_b, enc1_w, enc1_b,
///    enc2_w, enc2_b, dec1_w, dec1_b, dec2_w, dec2_b):
///   u32          name length
///   ...          name bytes
///   u64          element count
///   ...          count * f32 raw values
///
/// Loading verifies magic, version, names, element counts against the
/// embedded config, and that no bytes trail the last array. Errors name
/// the byte offset where reading failed.
void save_checkpoint(const std::string& path, const ModelParams<float>& params);
ModelParams<float> load_checkpoint(const std::string& path);

}  // namespace rankae

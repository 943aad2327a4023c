#pragma once

#include <cstdint>

#include "rankae/dataset.hpp"

namespace rankae {

enum class NoiseMode { missing, flip };

struct NoiseSpec {
  NoiseMode mode = NoiseMode::missing;
  double rate = 0.0;  // in [0,1]
  std::uint64_t seed = 0;
};

struct NoiseStats {
  long removed = 0;  // positive labels deleted
  long added = 0;    // labels turned on (flip mode only)
};

/// Deletes each positive label independently with probability `rate`.
/// Features are untouched; the result is deterministic per seed (each
/// instance draws from its own derived stream).
Dataset inject_missing(const Dataset& d, const NoiseSpec& spec,
                       NoiseStats* stats = nullptr);

/// Flips every label bit (all L per instance) independently with
/// probability `rate`. Warns on stderr when rate * L is more than five
/// times the average label cardinality, since the noise then swamps the
/// signal; intended for small label spaces.
Dataset inject_flip(const Dataset& d, const NoiseSpec& spec,
                    NoiseStats* stats = nullptr);

Dataset inject_noise(const Dataset& d, const NoiseSpec& spec,
                     NoiseStats* stats = nullptr);

}  // namespace rankae

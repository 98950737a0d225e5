#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hte {

using Rng = std::mt19937_64;

// All randomness flows from one master seed. A stream is identified by a
// component label plus an index (tree number, replicate number, ...), so a
// given unit of work draws the same numbers whatever thread runs it.
//
//   seed(stream) = mix(mix(master ^ fnv1a(label)) + index)
//
// Nested components derive again from the derived seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

Rng make_stream(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

}  // namespace hte

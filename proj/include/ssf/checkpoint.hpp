#pragma once

// Model checkpoint I/O: a JSON config blob plus named raw little-endian
// double parameter arrays, and a 16-byte parameter digest that streams embed
// so a decoder can refuse to run with mismatched weights.

#include <array>
#include <string>

#include "json.hpp"
#include "ssf/module.hpp"

namespace ssf {

// Two independent 64-bit FNV-1a passes over the serialized parameters.
std::array<uint8_t, 16> param_digest(const Module& m);

void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const Module& m);

// Reads config without touching any parameters.
nlohmann::json peek_checkpoint_config(const std::string& path);

// Loads parameters into an already-constructed module; throws if the stored
// parameter names or sizes do not match exactly.
nlohmann::json load_checkpoint(const std::string& path, Module& m);

}  // namespace ssf

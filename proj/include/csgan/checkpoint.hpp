#pragma once

#include <string>

#include "csgan/optim.hpp"

namespace csgan {

// Binary checkpoint: magic "CSGAN001", little-endian throughout.
//   u64 entry count
//   per entry: u32 name length, name bytes, u8 dtype (0 = f64),
//              u8 rank, u64 dims..., u64 byte offset of payload
//   raw tensor payloads in table order
void save_checkpoint(const ParamStore& params, const std::string& path);

// Loads into a fresh store (names and shapes come from the file).
ParamStore load_checkpoint(const std::string& path);

// Loads values into an existing store; every name must exist with a
// matching shape and the file must not contain extras.
void load_checkpoint_into(ParamStore& params, const std::string& path);

}  // namespace csgan

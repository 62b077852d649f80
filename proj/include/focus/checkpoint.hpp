#pragma once

#include <filesystem>
#include <iosfwd>

#include "focus/model.hpp"

namespace focus::model {

/// Checkpoint layout: magic "FCK1", u32 LE header length, JSON header
/// (config, seed, feature layout, label mode, normalization, tensor shapes),
/// then every parameter tensor in declaration order as float32 LE.
void write_checkpoint(const ModelState& state, std::ostream& out);
void write_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState read_checkpoint(std::istream& in);
ModelState read_checkpoint(const std::filesystem::path& path);

/// Rounds parameters to float32, i.e. what a checkpoint reader sees.
ModelState quantize_parameters(ModelState state);

}  // namespace focus::model

// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Parameter bundle layout (all integers and floats little-endian):
//   char[8]  "FELABPRM"
//   u32      format version
//   u32      byte length of the spec echo, then the spec as JSON text
//   u32      tensor count (4)
//   per tensor: u16 name length, name, u8 dtype (0 = f64, 1 = complex f64),
//               u32 rank, u64 dims[rank], payload

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "felab/equalizer.hpp"

namespace felab {

inline constexpr std::uint32_t kBundleVersion = 1;

struct ParamBundle {
  EqualizerSpec spec;
  EqualizerParams params;
};

void write_bundle(const std::filesystem::path& path, const EqualizerSpec& spec, const EqualizerParams& params);
ParamBundle read_bundle(const std::filesystem::path& path);

std::string fiber_to_json(const FiberParams& fiber);
FiberParams fiber_from_json(std::string_view text, const FiberParams& defaults = {});

/// JSON text of every spec field; from_json starts from `defaults` and
/// overrides the fields present.
std::string spec_to_json(const EqualizerSpec& spec);
EqualizerSpec spec_from_json(std::string_view text, const EqualizerSpec& defaults = {});

}  // namespace felab

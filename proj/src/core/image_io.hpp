#pragma once

#include <string>
#include <string_view>

#include "core/geometry.hpp"

namespace spatialref {

// Depth files are either 16-bit single-channel PNG holding millimeters
// (0 = invalid) or a raw stream: uint32 LE width, uint32 LE height, then
// width*height little-endian float32 meters (non-positive or non-finite =
// invalid). The reader dispatches on the PNG signature.
DepthMap read_depth(const std::string& path);
void write_depth_png16(const std::string& path, const DepthMap& depth);
void write_depth_raw(const std::string& path, const DepthMap& depth);

// Masks are bilevel PNG; any grayscale bit depth is accepted, nonzero = on.
Mask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& mask);

std::string read_file(const std::string& path);
// Writes via a temp file in the same directory, then renames into place.
void atomic_write_file(const std::string& path, std::string_view content);

}  // namespace spatialref

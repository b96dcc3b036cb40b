#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "arapdepth/config.hpp"
#include "arapdepth/geometry.hpp"
#include "arapdepth/raster.hpp"

namespace arapdepth {

/// Reads binary PGM/PPM (P5/P6) or PNG, 8- or 16-bit, 1 or 3 channels.
/// Values are scaled to [0, 1] by the maximum sample value.
Image read_image(const std::string& path);

/// Writes PGM/PPM or PNG depending on the extension (.pgm/.ppm/.pnm/.png).
/// Samples are rounded to the given bit depth (8 or 16); 16-bit round trips
/// are lossless.
void write_image(const std::string& path, const Image& image, int bit_depth = 16);

/// Middlebury .flo: float 202021.25, int32 width, int32 height, then
/// interleaved (u, v) float32 in row-major order, little endian.
/// Components with magnitude > 1e9 mark a pixel invalid.
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

/// Raw single-channel float map from a PFM ("Pf") file. Rows are stored
/// bottom-up; a negative scale means little endian. Non-positive and
/// non-finite values are marked invalid but their bits are kept.
DepthMap read_pfm(const std::string& path);
/// Writes little-endian PFM. Invalid pixels are written as stored.
void write_pfm(const std::string& path, const DepthMap& map);

/// Depth file in the given convention, returned as range along the rays of K.
DepthMap read_depth(const std::string& path, const CameraIntrinsics& K,
                    DepthConvention convention);
/// Writes range depth converted into the given convention.
void write_depth(const std::string& path, const DepthMap& range_depth,
                 const CameraIntrinsics& K, DepthConvention convention);

DepthMap range_to_zdepth_map(const DepthMap& range_depth, const CameraIntrinsics& K);
DepthMap zdepth_to_range_map(const DepthMap& z_depth, const CameraIntrinsics& K);

/// Whitespace-separated "fx fy cx cy [skew]".
CameraIntrinsics parse_intrinsics(const std::string& text);
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);

/// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Full precision (%.17g), "nan"/"inf"/"-inf" for non-finite cells,
/// newline-terminated.
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// Non-empty, non-comment lines of a list file (e.g. one path per line).
/// Relative entries are resolved against the list file's directory.
std::vector<std::string> read_path_list(const std::string& path);

}  // namespace arapdepth

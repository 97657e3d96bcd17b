#ifndef DEPTHTK_IO_HPP
#define DEPTHTK_IO_HPP

#include "depthtk/types.hpp"

#include <string>
#include <vector>

namespace depthtk::io {

// ---------------------------------------------------------------------------
// Portable Float Map. "Pf" is single channel, "PF" is 3-channel; a negative
// scale field marks little-endian payloads. Rows are stored bottom-up.
// Depth maps round-trip losslessly: invalid entries are written as NaN and
// NaN / non-positive entries read back as invalid.
// ---------------------------------------------------------------------------

void write_pfm(const std::string& path, const DepthMap& depth);
void write_pfm(const std::string& path, const ImageGrid& image);

DepthMap read_pfm_depth(const std::string& path);
ImageGrid read_pfm_image(const std::string& path);

// ---------------------------------------------------------------------------
// 16-bit single-channel PNG depth, KITTI-style: depth = raw / scale_divisor,
// raw 0 marks missing. Read support for external predictions plus a writer
// for fixtures.
// ---------------------------------------------------------------------------

DepthMap read_depth_png16(const std::string& path, double scale_divisor = 256.0);
void write_depth_png16(const std::string& path, const DepthMap& depth,
                       double scale_divisor = 256.0);

// ---------------------------------------------------------------------------
// Poses: one pose per line, 12 reals forming a row-major 3x4 [R|t],
// camera-to-world. Rotations further than 1e-3 from orthonormal are
// rejected; accepted ones are projected back onto SO(3).
// ---------------------------------------------------------------------------

std::vector<Pose> read_poses(const std::string& path);
void write_poses(const std::string& path, const std::vector<Pose>& poses);

/// Intrinsics file: a single line "fx fy cx cy".
Intrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Intrinsics& k);

/// 8-bit binary PGM, values clamped from [0, 1].
void write_pgm(const std::string& path, const GridF& values);

// ---------------------------------------------------------------------------
// Sequence manifest: versioned line-oriented text, one frame per line, all
// paths relative to the manifest's directory.
//
//   depthtk-manifest v1
//   intrinsics intrinsics.txt
//   poses poses.txt
//   resolution 640 192
//   frame 0 image_0000.pfm pred_0000.pfm gt_0000.pfm 0
// ---------------------------------------------------------------------------

struct ManifestFrame {
  int index = 0;
  std::string image;
  std::string pred_depth;
  std::string gt_depth;
  int pose_line = 0;
};

struct Manifest {
  std::string intrinsics_path;
  std::string poses_path;
  int width = 0;
  int height = 0;
  std::vector<ManifestFrame> frames;
};

Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);

/// Parse the manifest, load every referenced file, and validate resolutions,
/// pose indices, and type invariants. Throws EmptyDomainError for a manifest
/// without frames and IoError / FormatError naming the offending frame.
FrameSequence load_manifest(const std::string& path);

}  // namespace depthtk::io

#endif  // DEPTHTK_IO_HPP

#ifndef DEPTHTK_FUSION_HPP
#define DEPTHTK_FUSION_HPP

#include "depthtk/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace depthtk::fusion {

struct PointCloud {
  std::vector<Point3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;

  std::size_t size() const { return points.size(); }
};

/// Back-project every stride-th valid predicted-depth pixel of every frame
/// and express it in the reference frame. `poses` supplies camera-to-world
/// transforms for all frames (ground truth or externally provided). The
/// point count equals the number of sampled valid pixels exactly.
PointCloud fuse_pointcloud(const FrameSequence& seq, int ref_index, const std::vector<Pose>& poses,
                           int stride = 1);

/// ASCII PLY with "x y z red green blue" vertices; numbers are shortest
/// round-trip decimal.
void write_ply(const PointCloud& cloud, const std::string& path);

}  // namespace depthtk::fusion

#endif  // DEPTHTK_FUSION_HPP

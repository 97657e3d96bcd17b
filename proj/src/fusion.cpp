#include "depthtk/fusion.hpp"

#include "depthtk/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace depthtk::fusion {

PointCloud fuse_pointcloud(const FrameSequence& seq, int ref_index, const std::vector<Pose>& poses,
                           int stride) {
  if (seq.empty()) throw InvalidInputError("fuse_pointcloud: empty sequence");
  if (ref_index < 0 || ref_index >= static_cast<int>(seq.size())) {
    throw InvalidInputError("fuse_pointcloud: reference index out of range");
  }
  if (poses.size() != seq.size()) {
    throw InvalidInputError("fuse_pointcloud: need one pose per frame, got " +
                            std::to_string(poses.size()) + " for " + std::to_string(seq.size()) +
                            " frames");
  }
  if (stride < 1) throw InvalidInputError("fuse_pointcloud: stride must be >= 1");

  const Pose world_to_ref = poses[static_cast<std::size_t>(ref_index)].inverse();
  PointCloud cloud;
  for (std::size_t f = 0; f < seq.size(); ++f) {
    const FrameSample& frame = seq[f];
    const Pose frame_to_ref = world_to_ref * poses[f];
    for (int y = 0; y < frame.pred_depth.height(); y += stride) {
      for (int x = 0; x < frame.pred_depth.width(); x += stride) {
        if (!frame.pred_depth.valid(y, x)) continue;
        const Point3 p =
            geom::backproject(frame.intrinsics, x, y, frame.pred_depth.values(y, x));
        cloud.points.push_back(frame_to_ref * p);
        std::array<std::uint8_t, 3> color{255, 255, 255};
        for (int c = 0; c < std::min(3, frame.image.channel_count()); ++c) {
          const double v =
              std::clamp(static_cast<double>(frame.image.channels[static_cast<std::size_t>(c)](y, x)),
                         0.0, 1.0);
          color[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
        if (frame.image.channel_count() == 1) {
          color[1] = color[2] = color[0];
        }
        cloud.colors.push_back(color);
      }
    }
  }
  return cloud;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::string& path) {
  if (cloud.colors.size() != cloud.points.size()) {
    throw InvalidInputError("write_ply: point and color counts differ");
  }
  for (const Point3& p : cloud.points) {
    if (!p.allFinite()) throw InvalidInputError("write_ply: non-finite point");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    const auto& c = cloud.colors[i];
    out << shortest(p.x()) << ' ' << shortest(p.y()) << ' ' << shortest(p.z()) << ' '
        << static_cast<int>(c[0]) << ' ' << static_cast<int>(c[1]) << ' '
        << static_cast<int>(c[2]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace depthtk::fusion

#ifndef DEPTHTK_SYNTH_HPP
#define DEPTHTK_SYNTH_HPP

#include "depthtk/types.hpp"

#include <cstdint>
#include <vector>

namespace depthtk::synth {

// ---------------------------------------------------------------------------
// Scene description
// ---------------------------------------------------------------------------

struct Plane {
  Point3 point{0.0, 0.0, 5.0};
  Point3 normal{0.0, 0.0, -1.0};
  int texture_id = 0;
  double albedo_lo = 0.0;  // texture values map into [albedo_lo, albedo_hi]
  double albedo_hi = 1.0;
};

struct Box {
  Point3 min_corner{-0.5, -0.5, 4.0};
  Point3 max_corner{0.5, 0.5, 5.0};
  int texture_id = 1;
  double albedo_lo = 0.0;
  double albedo_hi = 1.0;
};

/// Deterministic scene of textured planes and axis-aligned boxes. The
/// background is realized as a world plane at z = background_depth so that
/// every surface is view-independent and multi-view consistent.
struct SceneSpec {
  std::vector<Plane> planes;
  std::vector<Box> boxes;
  double background_depth = 50.0;
  int background_texture_id = 7;
  std::uint64_t texture_seed = 0;
};

struct TrajectorySpec {
  enum class Kind { static_cam, translate_x, translate_z, arc };
  Kind kind = Kind::static_cam;
  int frame_count = 3;
  double step = 0.0;  // meters per frame, or radians per frame for arc
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Analytic per-pixel depth of the nearest ray-primitive intersection, in
/// double precision. Always dense.
GridD render_depth_grid(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                        int width, int height);

/// render_depth_grid narrowed to the single-precision DepthMap storage.
DepthMap render_depth(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                      int width, int height);

/// Lambertian procedural texture evaluated in surface coordinates, so the
/// same surface point renders the same color from every pose.
ImageGrid render_image(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                       int width, int height);

std::vector<Pose> make_trajectory(const TrajectorySpec& spec);

/// Analytic occlusion ground truth: target pixels whose 3D point is blocked
/// from the source camera center by other scene geometry.
MaskMap occlusion_mask(const SceneSpec& scene, const Pose& tgt_cam_to_world,
                       const Pose& src_cam_to_world, const Intrinsics& k, int width, int height);

/// Distance from a world-space point to the nearest scene surface.
double scene_distance(const SceneSpec& scene, const Point3& world_point);

// ---------------------------------------------------------------------------
// Fixture utilities
// ---------------------------------------------------------------------------

/// Paste a fixed screen-space noise patch. Applying the same call to every
/// frame of a sequence produces content that co-moves with the camera.
void overlay_patch(ImageGrid& image, int x0, int y0, int patch_width, int patch_height,
                   std::uint64_t seed);

/// Multiplicative uniform noise: values *= (1 + amplitude * U[-1, 1]).
void add_depth_noise(DepthMap& depth, double amplitude, std::uint64_t seed);

/// Snap every valid entry to a multiple of `step`. Steps that are powers of
/// two make subsequent scalings by small factors exact in float storage.
void quantize_depth(DepthMap& depth, double step);

/// KITTI-like pinhole: fx = fy = 0.58 * width, principal point centered.
Intrinsics default_intrinsics(int width, int height);

// Canned scenes shared by tests and the CLI.
SceneSpec plane_scene();      // fronto-parallel plane at 5 m
SceneSpec tilted_scene();     // tilted plane plus one box
SceneSpec box_world_scene();  // ground + back plane + two boxes, depths < 16 m
SceneSpec occlusion_scene();  // large near box occluding a far plane

/// Render a full sequence with predictions initialized to ground truth.
FrameSequence render_sequence(const SceneSpec& scene, const std::vector<Pose>& trajectory,
                              const Intrinsics& k, int width, int height);

}  // namespace depthtk::synth

#endif  // DEPTHTK_SYNTH_HPP

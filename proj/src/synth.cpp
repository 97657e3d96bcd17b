#include "depthtk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace depthtk::synth {

namespace {

constexpr double kRayEps = 1e-9;

// --- deterministic value noise -------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t h = seed;
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix) * 0x9ddfea08eb382d69ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL);
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // [0, 1)
}

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice_value(ix, iy, seed);
  const double v01 = lattice_value(ix + 1, iy, seed);
  const double v10 = lattice_value(ix, iy + 1, seed);
  const double v11 = lattice_value(ix + 1, iy + 1, seed);
  const double top = v00 + (v01 - v00) * tx;
  const double bot = v10 + (v11 - v10) * tx;
  return top + (bot - top) * ty;
}

// Base frequency 0.35 cycles/m keeps the texture smooth enough that bilinear
// resampling error stays well under the photometric tolerances.
double octave_noise(double x, double y, std::uint64_t seed) {
  const double f0 = 0.35;
  double acc = value_noise(x * f0, y * f0, seed);
  acc += 0.5 * value_noise(x * f0 * 2.0, y * f0 * 2.0, splitmix64(seed + 1));
  acc += 0.25 * value_noise(x * f0 * 4.0, y * f0 * 4.0, splitmix64(seed + 2));
  return acc / 1.75;
}

// --- ray casting -----------------------------------------------------------

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  bool found = false;
  int texture_id = 0;
  double albedo_lo = 0.0;
  double albedo_hi = 1.0;
  // Surface parameterization of the hit point, used for texturing.
  double su = 0.0;
  double sv = 0.0;
};

struct PlanePrim {
  Point3 point;
  Point3 unit_normal;
  Point3 tangent_u;
  Point3 tangent_v;
  int texture_id = 0;
  double albedo_lo = 0.0;
  double albedo_hi = 1.0;
};

std::vector<PlanePrim> scene_planes(const SceneSpec& scene) {
  std::vector<PlanePrim> out;
  out.reserve(scene.planes.size() + 1);
  auto push = [&out](const Point3& p, const Point3& n, int tex, double lo, double hi) {
    PlanePrim prim;
    prim.point = p;
    prim.unit_normal = n.normalized();
    const Point3 helper = std::abs(prim.unit_normal.y()) > 0.9 ? Point3(1, 0, 0) : Point3(0, 1, 0);
    prim.tangent_u = prim.unit_normal.cross(helper).normalized();
    prim.tangent_v = prim.unit_normal.cross(prim.tangent_u);
    prim.texture_id = tex;
    prim.albedo_lo = lo;
    prim.albedo_hi = hi;
    out.push_back(prim);
  };
  for (const Plane& pl : scene.planes) {
    push(pl.point, pl.normal, pl.texture_id, pl.albedo_lo, pl.albedo_hi);
  }
  push(Point3(0, 0, scene.background_depth), Point3(0, 0, -1), scene.background_texture_id, 0.0,
       1.0);
  return out;
}

bool intersect_plane(const PlanePrim& plane, const Point3& origin, const Point3& dir, double t_min,
                     double t_max, Hit& hit) {
  const double denom = dir.dot(plane.unit_normal);
  if (std::abs(denom) < 1e-12) return false;
  const double t = (plane.point - origin).dot(plane.unit_normal) / denom;
  if (t <= t_min || t >= t_max || t >= hit.t) return false;
  const Point3 p = origin + t * dir;
  hit.t = t;
  hit.found = true;
  hit.texture_id = plane.texture_id;
  hit.albedo_lo = plane.albedo_lo;
  hit.albedo_hi = plane.albedo_hi;
  hit.su = (p - plane.point).dot(plane.tangent_u);
  hit.sv = (p - plane.point).dot(plane.tangent_v);
  return true;
}

bool intersect_box(const Box& box, const Point3& origin, const Point3& dir, double t_min,
                   double t_max, Hit& hit) {
  double t0 = t_min;
  double t1 = t_max;
  int entry_axis = -1;
  for (int a = 0; a < 3; ++a) {
    const double d = dir[a];
    if (std::abs(d) < 1e-15) {
      if (origin[a] < box.min_corner[a] || origin[a] > box.max_corner[a]) return false;
      continue;
    }
    double near = (box.min_corner[a] - origin[a]) / d;
    double far = (box.max_corner[a] - origin[a]) / d;
    if (near > far) std::swap(near, far);
    if (near > t0) {
      t0 = near;
      entry_axis = a;
    }
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  if (entry_axis < 0 || t0 <= t_min || t0 >= hit.t) return false;
  const Point3 p = origin + t0 * dir;
  hit.t = t0;
  hit.found = true;
  hit.texture_id = box.texture_id;
  hit.albedo_lo = box.albedo_lo;
  hit.albedo_hi = box.albedo_hi;
  // Texture the entered face in the two world coordinates spanning it.
  const int a1 = (entry_axis + 1) % 3;
  const int a2 = (entry_axis + 2) % 3;
  hit.su = p[a1];
  hit.sv = p[a2];
  return true;
}

Hit first_hit(const SceneSpec& scene, const std::vector<PlanePrim>& planes, const Point3& origin,
              const Point3& dir, double t_min, double t_max) {
  Hit hit;
  for (const PlanePrim& pl : planes) intersect_plane(pl, origin, dir, t_min, t_max, hit);
  for (const Box& bx : scene.boxes) intersect_box(bx, origin, dir, t_min, t_max, hit);
  return hit;
}

inline std::uint64_t texture_channel_seed(const SceneSpec& scene, int texture_id, int channel) {
  return splitmix64(scene.texture_seed ^ splitmix64(static_cast<std::uint64_t>(texture_id) * 1315423911ULL +
                                                    static_cast<std::uint64_t>(channel)));
}

}  // namespace

GridD render_depth_grid(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                        int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidInputError("render: resolution must be positive");
  const std::vector<PlanePrim> planes = scene_planes(scene);
  GridD out(height, width);
  const Point3 origin = cam_to_world.translation;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // dir = R * K^-1 (u, v, 1); with the ray's camera z equal to 1 the ray
      // parameter is the camera-frame depth directly.
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 dir = cam_to_world.rotation * ray;
      const Hit hit =
          first_hit(scene, planes, origin, dir, kRayEps, std::numeric_limits<double>::infinity());
      out(y, x) = hit.found ? hit.t : scene.background_depth;
    }
  }
  return out;
}

DepthMap render_depth(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                      int width, int height) {
  DepthMap d;
  d.values = render_depth_grid(scene, cam_to_world, k, width, height).cast<float>();
  d.valid = MaskMap::Constant(height, width, true);
  return d;
}

ImageGrid render_image(const SceneSpec& scene, const Pose& cam_to_world, const Intrinsics& k,
                       int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidInputError("render: resolution must be positive");
  const std::vector<PlanePrim> planes = scene_planes(scene);
  ImageGrid img = ImageGrid::zeros(height, width, 3);
  const Point3 origin = cam_to_world.translation;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 dir = cam_to_world.rotation * ray;
      Hit hit = first_hit(scene, planes, origin, dir, kRayEps, std::numeric_limits<double>::infinity());
      if (!hit.found) {
        hit.texture_id = scene.background_texture_id;
        hit.su = hit.sv = 0.0;
        hit.albedo_lo = 0.0;
        hit.albedo_hi = 1.0;
      }
      for (int c = 0; c < 3; ++c) {
        const double v =
            octave_noise(hit.su, hit.sv, texture_channel_seed(scene, hit.texture_id, c));
        const double shaded = hit.albedo_lo + v * (hit.albedo_hi - hit.albedo_lo);
        img.channels[static_cast<std::size_t>(c)](y, x) =
            static_cast<float>(std::clamp(shaded, 0.0, 1.0));
      }
    }
  }
  return img;
}

std::vector<Pose> make_trajectory(const TrajectorySpec& spec) {
  if (spec.frame_count < 1) throw InvalidInputError("trajectory: frame count must be >= 1");
  if (!std::isfinite(spec.step)) throw InvalidInputError("trajectory: step must be finite");
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(spec.frame_count));
  // Arc orbits this pivot on the optical axis; yaw is a right-handed rotation
  // about +y (which points down), so positive steps swing the view left.
  const Point3 pivot(0.0, 0.0, 10.0);
  for (int i = 0; i < spec.frame_count; ++i) {
    Pose p;
    switch (spec.kind) {
      case TrajectorySpec::Kind::static_cam:
        break;
      case TrajectorySpec::Kind::translate_x:
        p.translation = Point3(spec.step * i, 0.0, 0.0);
        break;
      case TrajectorySpec::Kind::translate_z:
        p.translation = Point3(0.0, 0.0, spec.step * i);
        break;
      case TrajectorySpec::Kind::arc: {
        const double a = spec.step * i;
        Eigen::Matrix3d r;
        r << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
        p.rotation = r;
        p.translation = pivot - r * pivot;
        break;
      }
    }
    out.push_back(p);
  }
  return out;
}

MaskMap occlusion_mask(const SceneSpec& scene, const Pose& tgt_cam_to_world,
                       const Pose& src_cam_to_world, const Intrinsics& k, int width, int height) {
  const std::vector<PlanePrim> planes = scene_planes(scene);
  const GridD depth = render_depth_grid(scene, tgt_cam_to_world, k, width, height);
  MaskMap occluded = MaskMap::Constant(height, width, false);
  const Point3 tgt_origin = tgt_cam_to_world.translation;
  const Point3 src_origin = src_cam_to_world.translation;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 world_point = tgt_origin + depth(y, x) * (tgt_cam_to_world.rotation * ray);
      // Parameterize the segment source-center -> point on [0, 1]; any hit
      // strictly before the point blocks the line of sight.
      const Point3 dir = world_point - src_origin;
      const Hit hit = first_hit(scene, planes, src_origin, dir, kRayEps, 1.0 - 1e-6);
      occluded(y, x) = hit.found;
    }
  }
  return occluded;
}

double scene_distance(const SceneSpec& scene, const Point3& world_point) {
  double best = std::abs(world_point.z() - scene.background_depth);
  for (const Plane& pl : scene.planes) {
    best = std::min(best, std::abs((world_point - pl.point).dot(pl.normal.normalized())));
  }
  for (const Box& bx : scene.boxes) {
    const Point3 center = 0.5 * (bx.min_corner + bx.max_corner);
    const Point3 half = 0.5 * (bx.max_corner - bx.min_corner);
    const Point3 q = (world_point - center).cwiseAbs() - half;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    best = std::min(best, std::abs(outside + inside));
  }
  return best;
}

void overlay_patch(ImageGrid& image, int x0, int y0, int patch_width, int patch_height,
                   std::uint64_t seed) {
  const int x1 = std::min(image.width(), x0 + patch_width);
  const int y1 = std::min(image.height(), y0 + patch_height);
  for (int c = 0; c < image.channel_count(); ++c) {
    const std::uint64_t cseed = splitmix64(seed + static_cast<std::uint64_t>(c) * 977ULL);
    for (int y = std::max(0, y0); y < y1; ++y) {
      for (int x = std::max(0, x0); x < x1; ++x) {
        const double v = octave_noise((x - x0) * 0.11, (y - y0) * 0.11, cseed);
        image.channels[static_cast<std::size_t>(c)](y, x) =
            static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
}

void add_depth_noise(DepthMap& depth, double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0 || amplitude >= 1.0) {
    throw InvalidInputError("add_depth_noise: amplitude must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (Eigen::Index r = 0; r < depth.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth.values.cols(); ++c) {
      const double factor = 1.0 + amplitude * uni(rng);
      if (depth.valid(r, c)) {
        depth.values(r, c) = static_cast<float>(depth.values(r, c) * factor);
      }
    }
  }
}

void quantize_depth(DepthMap& depth, double step) {
  if (!(step > 0.0)) throw InvalidInputError("quantize_depth: step must be positive");
  for (Eigen::Index r = 0; r < depth.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < depth.values.cols(); ++c) {
      if (depth.valid(r, c)) {
        const double q = std::round(static_cast<double>(depth.values(r, c)) / step) * step;
        depth.values(r, c) = static_cast<float>(std::max(q, step));
      }
    }
  }
}

Intrinsics default_intrinsics(int width, int height) {
  Intrinsics k;
  k.fx = 0.58 * width;
  k.fy = 0.58 * width;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  return k;
}

SceneSpec plane_scene() {
  SceneSpec s;
  s.planes.push_back(Plane{Point3(0, 0, 5), Point3(0, 0, -1), 0});
  s.background_depth = 50.0;
  return s;
}

SceneSpec tilted_scene() {
  SceneSpec s;
  s.planes.push_back(Plane{Point3(0, 0, 6), Point3(0.4, 0, -1), 2});
  s.boxes.push_back(Box{Point3(-1.2, -0.8, 3.4), Point3(-0.2, 0.2, 4.2), 3});
  s.background_depth = 50.0;
  return s;
}

SceneSpec box_world_scene() {
  SceneSpec s;
  s.planes.push_back(Plane{Point3(0, 1.2, 0), Point3(0, -1, 0), 4});   // ground
  s.planes.push_back(Plane{Point3(0, 0, 10), Point3(0, 0, -1), 5});   // back wall
  s.boxes.push_back(Box{Point3(-1.5, 0.2, 5.0), Point3(-0.5, 1.2, 6.0), 1});
  s.boxes.push_back(Box{Point3(0.6, -0.3, 7.0), Point3(1.6, 1.2, 8.0), 6});
  s.background_depth = 12.0;
  return s;
}

SceneSpec occlusion_scene() {
  // A row of full-height dark pillars in front of a bright far wall: each
  // pillar casts an occlusion shadow, so a moderate sideways baseline hides
  // a large share of the wall, and the disjoint albedo ranges keep occluded
  // round-trip errors well above resampling noise.
  SceneSpec s;
  Plane wall{Point3(0, 0, 12), Point3(0, 0, -1), 2};
  wall.albedo_lo = 0.58;
  wall.albedo_hi = 1.0;
  s.planes.push_back(wall);
  int tex = 10;
  for (const double cx : {-2.2, -0.9, 0.4, 1.7}) {
    Box pillar{Point3(cx - 0.175, -2.0, 3.2), Point3(cx + 0.175, 2.0, 4.0), tex++};
    pillar.albedo_lo = 0.0;
    pillar.albedo_hi = 0.42;
    s.boxes.push_back(pillar);
  }
  s.background_depth = 50.0;
  return s;
}

FrameSequence render_sequence(const SceneSpec& scene, const std::vector<Pose>& trajectory,
                              const Intrinsics& k, int width, int height) {
  FrameSequence seq;
  seq.reserve(trajectory.size());
  for (const Pose& pose : trajectory) {
    FrameSample frame;
    frame.image = render_image(scene, pose, k, width, height);
    frame.gt_depth = render_depth(scene, pose, k, width, height);
    frame.pred_depth = frame.gt_depth;
    frame.gt_pose = pose;
    frame.intrinsics = k;
    seq.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace depthtk::synth

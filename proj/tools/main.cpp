// depthtk: synthetic-scene rendering, warping, the masked loss suite,
// attention inspection, temporal-consistency evaluation, and point-cloud
// fusion behind one deterministic command line.

#include "depthtk/attention.hpp"
#include "depthtk/fusion.hpp"
#include "depthtk/geometry.hpp"
#include "depthtk/gradcheck.hpp"
#include "depthtk/io.hpp"
#include "depthtk/losses.hpp"
#include "depthtk/synth.hpp"
#include "depthtk/tcm.hpp"
#include "depthtk/types.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace depthtk;

// Line-oriented key=value records; every subcommand starts with the schema
// version so reports stay grep-able in scripts.
class Report {
 public:
  explicit Report(const std::string& command) {
    add("schema", "depthtk.report.v1");
    add("command", command);
  }
  void add(const std::string& key, const std::string& value) { lines_.push_back(key + "=" + value); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add_metric(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    add(key, std::string(buf));
  }
  void add_exp(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6e", value);
    add(key, std::string(buf));
  }
  void print() const {
    for (const std::string& l : lines_) std::cout << l << '\n';
  }

 private:
  std::vector<std::string> lines_;
};

synth::SceneSpec scene_by_name(const std::string& name) {
  if (name == "plane") return synth::plane_scene();
  if (name == "tilted") return synth::tilted_scene();
  if (name == "boxworld") return synth::box_world_scene();
  if (name == "occlusion") return synth::occlusion_scene();
  throw InvalidInputError("unknown scene '" + name + "'");
}

synth::TrajectorySpec::Kind trajectory_by_name(const std::string& name) {
  using Kind = synth::TrajectorySpec::Kind;
  if (name == "static") return Kind::static_cam;
  if (name == "translate-x") return Kind::translate_x;
  if (name == "translate-z") return Kind::translate_z;
  if (name == "arc") return Kind::arc;
  throw InvalidInputError("unknown trajectory '" + name + "'");
}

std::string frame_name(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, index, ext);
  return buf;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::string scene = "boxworld";
  std::string traj = "translate-x";
  int frames = 3;
  double step = 0.1;
  int width = 640;
  int height = 192;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double quantize = 0.0;
};

int run_synth(const SynthArgs& args) {
  synth::SceneSpec scene = scene_by_name(args.scene);
  scene.texture_seed = args.seed;
  synth::TrajectorySpec traj;
  traj.kind = trajectory_by_name(args.traj);
  traj.frame_count = args.frames;
  traj.step = args.step;
  traj.seed = args.seed;
  const Intrinsics k = synth::default_intrinsics(args.width, args.height);
  const std::vector<Pose> poses = synth::make_trajectory(traj);

  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path dir(args.out_dir);
  io::Manifest manifest;
  manifest.intrinsics_path = "intrinsics.txt";
  manifest.poses_path = "poses.txt";
  manifest.width = args.width;
  manifest.height = args.height;

  io::write_intrinsics((dir / manifest.intrinsics_path).string(), k);
  io::write_poses((dir / manifest.poses_path).string(), poses);
  for (int i = 0; i < args.frames; ++i) {
    const Pose& pose = poses[static_cast<std::size_t>(i)];
    const ImageGrid image = synth::render_image(scene, pose, k, args.width, args.height);
    const DepthMap gt = synth::render_depth(scene, pose, k, args.width, args.height);
    DepthMap pred = gt;
    if (args.noise > 0.0) {
      synth::add_depth_noise(pred, args.noise, args.seed + static_cast<std::uint64_t>(i) + 1);
    }
    if (args.quantize > 0.0) {
      synth::quantize_depth(pred, args.quantize);
    }
    io::ManifestFrame f;
    f.index = i;
    f.image = frame_name("image", i, "pfm");
    f.pred_depth = frame_name("pred", i, "pfm");
    f.gt_depth = frame_name("gt", i, "pfm");
    f.pose_line = i;
    io::write_pfm((dir / f.image).string(), image);
    io::write_pfm((dir / f.pred_depth).string(), pred);
    io::write_pfm((dir / f.gt_depth).string(), gt);
    manifest.frames.push_back(f);
  }
  io::write_manifest((dir / "manifest.txt").string(), manifest);

  Report report("synth");
  report.add("scene", args.scene);
  report.add("trajectory", args.traj);
  report.add("frames", args.frames);
  report.add("width", args.width);
  report.add("height", args.height);
  report.add("seed", std::to_string(args.seed));
  report.add_metric("noise", args.noise);
  report.add("manifest", (dir / "manifest.txt").string());
  report.print();
  return 0;
}

// --- warp -------------------------------------------------------------------

struct WarpArgs {
  std::string manifest;
  int target = 1;
  int source = 0;
  std::string out_dir;
};

int run_warp(const WarpArgs& args) {
  const FrameSequence seq = io::load_manifest(args.manifest);
  const int n = static_cast<int>(seq.size());
  if (args.target < 0 || args.target >= n || args.source < 0 || args.source >= n) {
    throw InvalidInputError("warp: frame index out of range for a sequence of " +
                            std::to_string(n) + " frames");
  }
  const FrameSample& tgt = seq[static_cast<std::size_t>(args.target)];
  const FrameSample& src = seq[static_cast<std::size_t>(args.source)];
  const Pose tgt_to_src = src.gt_pose.inverse() * tgt.gt_pose;
  const geom::WarpResult warped =
      geom::warp_backward(src.image, tgt.gt_depth, tgt_to_src, tgt.intrinsics);

  double mae = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < tgt.image.height(); ++y) {
    for (int x = 0; x < tgt.image.width(); ++x) {
      if (!warped.valid(y, x)) continue;
      for (int c = 0; c < tgt.image.channel_count(); ++c) {
        mae += std::abs(
            static_cast<double>(warped.image.channels[static_cast<std::size_t>(c)](y, x)) -
            tgt.image.channels[static_cast<std::size_t>(c)](y, x));
        ++count;
      }
    }
  }
  mae = count > 0 ? mae / static_cast<double>(count) : 0.0;

  Report report("warp");
  report.add("target", args.target);
  report.add("source", args.source);
  report.add_metric("valid_fraction", static_cast<double>(warped.valid.count()) /
                                          static_cast<double>(warped.valid.size()));
  report.add_exp("mae_valid", mae);
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    const std::filesystem::path dir(args.out_dir);
    io::write_pfm((dir / "warped.pfm").string(), warped.image);
    GridF valid_gray = warped.valid.cast<float>();
    io::write_pgm((dir / "valid.pgm").string(), valid_gray);
    report.add("out", args.out_dir);
  }
  report.print();
  return 0;
}

// --- losses -----------------------------------------------------------------

struct LossesArgs {
  std::string manifest;
  int target = 1;
  double alpha = 0.85;
  int ssim_window = 3;
  double lambda_s = 1e-3;
  double lambda_geo = 0.1;
  double lambda_m = 1.0;
  double cycle_percentile = 0.7;
  double motion_threshold = 0.6;
  std::string teacher_depth;  // defaults to the target's GT depth
  std::string ref_depth;      // defaults to the target's prediction
  std::string dump_dir;
};

int run_losses(const LossesArgs& args) {
  const FrameSequence seq = io::load_manifest(args.manifest);
  const int n = static_cast<int>(seq.size());
  if (args.target < 1 || args.target >= n - 1) {
    throw InvalidInputError("losses: target must be interior (have both neighbors), got " +
                            std::to_string(args.target) + " of " + std::to_string(n));
  }
  loss::PhotometricConfig cfg;
  cfg.alpha = args.alpha;
  cfg.ssim_window = args.ssim_window;
  cfg.validate();
  loss::LossWeights weights{args.lambda_s, args.lambda_geo, args.lambda_m};

  const FrameSample& tgt = seq[static_cast<std::size_t>(args.target)];
  const Intrinsics& k = tgt.intrinsics;
  const std::vector<int> source_ids{args.target - 1, args.target + 1};

  std::vector<ImageGrid> warped_images, source_images;
  std::vector<MaskMap> warped_valid;
  for (int sid : source_ids) {
    const FrameSample& src = seq[static_cast<std::size_t>(sid)];
    const Pose tgt_to_src = src.gt_pose.inverse() * tgt.gt_pose;
    geom::WarpResult w = geom::warp_backward(src.image, tgt.pred_depth, tgt_to_src, k);
    warped_images.push_back(std::move(w.image));
    warped_valid.push_back(std::move(w.valid));
    source_images.push_back(src.image);
  }

  // Round trip through the later source for the cycle mask.
  const FrameSample& cyc = seq[static_cast<std::size_t>(args.target + 1)];
  const Pose tgt_to_cyc = cyc.gt_pose.inverse() * tgt.gt_pose;
  const Pose cyc_to_tgt = tgt_to_cyc.inverse();
  const geom::WarpResult to_src = geom::warp_backward(tgt.image, cyc.pred_depth, cyc_to_tgt, k);
  const geom::WarpResult roundtrip =
      geom::warp_backward(to_src.image, tgt.pred_depth, tgt_to_cyc, k);
  const MaskMap m_cycle =
      loss::cycle_mask(tgt.image, roundtrip.image, roundtrip.valid, cfg, args.cycle_percentile);

  DepthMap teacher = args.teacher_depth.empty() ? tgt.gt_depth
                                                : io::read_pfm_depth(args.teacher_depth);
  const MaskMap m_motion = loss::motion_mask(tgt.pred_depth, teacher, args.motion_threshold);
  const MaskMap m_auto = loss::auto_mask(tgt.image, source_images, warped_images, warped_valid, cfg);

  loss::LossComponents parts;
  const loss::LossResult photo =
      loss::photometric_loss(tgt.image, warped_images, warped_valid, m_motion, m_auto, cfg);
  parts.photometric = photo.scalar;
  const loss::LossResult smooth = loss::smoothness_loss(tgt.pred_depth, tgt.image);
  parts.smoothness = smooth.scalar;
  const loss::LossResult motion = loss::motion_loss(tgt.pred_depth, teacher, m_motion);
  parts.motion = motion.scalar;

  double geo_acc = 0.0;
  std::vector<loss::LossResult> geo_results;
  for (int sid : source_ids) {
    const FrameSample& src = seq[static_cast<std::size_t>(sid)];
    const Pose tgt_to_src = src.gt_pose.inverse() * tgt.gt_pose;
    const geom::DepthPair pair =
        geom::depth_consistency_pair(tgt.pred_depth, src.pred_depth, tgt_to_src, k);
    geo_results.push_back(loss::geometric_loss(pair, m_motion, m_auto, m_cycle));
    geo_acc += geo_results.back().scalar;
  }
  parts.geometric = geo_acc / static_cast<double>(source_ids.size());

  DepthMap ref = args.ref_depth.empty() ? tgt.pred_depth : io::read_pfm_depth(args.ref_depth);
  const loss::LossResult reference = loss::reference_loss(tgt.pred_depth, ref);
  parts.reference = reference.scalar;

  auto coverage = [](const MaskMap& m) {
    return static_cast<double>(m.count()) / static_cast<double>(m.size());
  };

  Report report("losses");
  report.add("target", args.target);
  report.add_exp("photometric.scalar", parts.photometric);
  report.add_metric("photometric.coverage", coverage(photo.mask));
  report.add_exp("smoothness.scalar", parts.smoothness);
  report.add_metric("smoothness.coverage", coverage(smooth.mask));
  report.add_exp("geometric.scalar", parts.geometric);
  report.add_metric("geometric.coverage", coverage(geo_results[0].mask));
  report.add_exp("motion.scalar", parts.motion);
  report.add_metric("motion.coverage", coverage(motion.mask));
  report.add_exp("reference.scalar", parts.reference);
  report.add_metric("reference.coverage", coverage(reference.mask));
  report.add_metric("mask.cycle_coverage", coverage(m_cycle));
  report.add_metric("mask.motion_coverage", coverage(m_motion));
  report.add_metric("mask.auto_coverage", coverage(m_auto));
  report.add_exp("total", loss::total_loss(parts, weights));
  if (!args.dump_dir.empty()) {
    std::filesystem::create_directories(args.dump_dir);
    const std::filesystem::path dir(args.dump_dir);
    auto dump = [&dir](const char* name, const GridF& map) {
      ImageGrid img;
      img.channels.push_back(map);
      io::write_pfm((dir / (std::string(name) + ".pfm")).string(), img);
    };
    dump("photometric", photo.map);
    dump("smoothness", smooth.map);
    dump("geometric_next", geo_results[1].map);
    dump("motion", motion.map);
    report.add("dump", args.dump_dir);
  }
  report.print();
  return 0;
}

// --- attn -------------------------------------------------------------------

struct AttnArgs {
  std::string manifest;
  int frame = 1;
  double sigma = 1.0;
  double radius = 0.0;  // 0 = full attention
  int factor = 8;
  std::vector<std::string> queries;  // "u,v" at coarse resolution
  bool temporal = true;
  std::string out_dir;
};

int run_attn(const AttnArgs& args) {
  const FrameSequence seq = io::load_manifest(args.manifest);
  const int n = static_cast<int>(seq.size());
  if (args.frame < 0 || args.frame >= n) {
    throw InvalidInputError("attn: frame index out of range");
  }
  const bool with_temporal = args.temporal && args.frame > 0 && args.frame < n - 1;

  attn::SpatialAttentionConfig cfg;
  cfg.sigma = args.sigma;
  if (args.radius > 0.0) cfg.radius = args.radius;
  cfg.validate();

  // Bottleneck-resolution inputs: area-downsampled depth and image features.
  const FrameSample& frame = seq[static_cast<std::size_t>(args.frame)];
  Intrinsics coarse_k = frame.intrinsics;
  coarse_k.fx /= args.factor;
  coarse_k.fy /= args.factor;
  coarse_k.cx /= args.factor;
  coarse_k.cy /= args.factor;
  const DepthMap coarse = geom::downsample_mean(frame.pred_depth, args.factor);
  const int cw = coarse.width();
  const int ch = coarse.height();

  std::vector<std::pair<int, int>> queries;
  for (const std::string& q : args.queries) {
    int u = 0, v = 0;
    if (std::sscanf(q.c_str(), "%d,%d", &u, &v) != 2 || u < 0 || v < 0 || u >= cw || v >= ch) {
      throw InvalidInputError("attn: bad query '" + q + "' for coarse resolution " +
                              std::to_string(cw) + "x" + std::to_string(ch));
    }
    queries.emplace_back(u, v);
  }
  if (queries.empty()) queries.emplace_back(cw / 2, ch / 2);

  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path dir(args.out_dir);

  const attn::AttentionMatrix spatial = attn::spatial_attention(coarse, coarse_k, cfg);
  Report report("attn");
  report.add("frame", args.frame);
  report.add_metric("sigma", args.sigma);
  report.add("coarse_width", cw);
  report.add("coarse_height", ch);
  report.add("positions", spatial.n_query());

  auto row_to_pgm = [&](const Eigen::VectorXd& row, const std::string& name) {
    GridF img(ch, cw);
    const double peak = row.maxCoeff();
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        const double v = row(static_cast<Eigen::Index>(y) * cw + x);
        img(y, x) = static_cast<float>(peak > 0.0 ? v / peak : 0.0);
      }
    }
    io::write_pgm((dir / name).string(), img);
    report.add("wrote", name);
  };

  for (const auto& [qu, qv] : queries) {
    const Eigen::Index idx = static_cast<Eigen::Index>(qv) * cw + qu;
    char name[96];
    std::snprintf(name, sizeof(name), "spatial_u%d_v%d.pgm", qu, qv);
    row_to_pgm(spatial.weights.row(idx), name);
  }

  if (with_temporal) {
    std::array<FeatureMap, 3> triplet_features;
    std::array<DepthMap, 3> triplet_depths;
    for (int off = -1; off <= 1; ++off) {
      const FrameSample& f = seq[static_cast<std::size_t>(args.frame + off)];
      triplet_features[static_cast<std::size_t>(off + 1)] =
          FeatureMap::from_image(geom::downsample_mean(f.image, args.factor));
      triplet_depths[static_cast<std::size_t>(off + 1)] =
          geom::downsample_mean(f.pred_depth, args.factor);
    }
    std::array<FeatureMap, 3> spatially_aggregated;
    for (int i = 0; i < 3; ++i) {
      const attn::AttentionMatrix sa =
          attn::spatial_attention(triplet_depths[static_cast<std::size_t>(i)], coarse_k, cfg);
      spatially_aggregated[static_cast<std::size_t>(i)] =
          attn::apply_attention(sa, triplet_features[static_cast<std::size_t>(i)]);
    }
    const std::vector<FeatureMap> keys{spatially_aggregated[0], spatially_aggregated[2]};
    const attn::AttentionMatrix temporal = attn::temporal_attention(spatially_aggregated[1], keys);
    const int positions = cw * ch;
    for (const auto& [qu, qv] : queries) {
      const Eigen::Index idx = static_cast<Eigen::Index>(qv) * cw + qu;
      for (int key_frame = 0; key_frame < 2; ++key_frame) {
        const Eigen::VectorXd part =
            temporal.weights.row(idx).segment(key_frame * positions, positions);
        char name[96];
        std::snprintf(name, sizeof(name), "temporal_u%d_v%d_key%d.pgm", qu, qv,
                      key_frame == 0 ? args.frame - 1 : args.frame + 1);
        row_to_pgm(part, name);
      }
    }
  }
  report.print();
  return 0;
}

// --- tcm --------------------------------------------------------------------

struct TcmArgs {
  std::string manifest;
  int frames = 3;
  double outlier_fraction = 0.2;
  int stride = 1;
  bool table = false;
};

int run_tcm(const TcmArgs& args) {
  const FrameSequence seq = io::load_manifest(args.manifest);
  const tcm::TcmReport r =
      tcm::tcm_over_sequence(seq, args.frames, args.outlier_fraction, args.stride);
  Report report("tcm");
  report.add("frames", r.k);
  report.add_metric("abs_err", r.abs_err);
  report.add_metric("sq_err", r.sq_err);
  report.add_metric("rmse", r.rmse);
  report.add("tracks", r.n_tracks);
  report.add_metric("outlier_fraction", r.outlier_fraction);
  report.add("stride", args.stride);
  report.print();
  if (args.table) {
    std::printf("\n  k   |  Abs Err |   Sq Err |     RMSE\n");
    std::printf("  ----+----------+----------+---------\n");
    std::printf("  %-3d | %8.4f | %8.4f | %8.4f\n", r.k, r.abs_err, r.sq_err, r.rmse);
  }
  return 0;
}

// --- fuse -------------------------------------------------------------------

struct FuseArgs {
  std::string manifest;
  int ref = -1;  // default: middle frame
  int stride = 1;
  std::string poses_file;  // optional override of the manifest poses
  std::string out = "cloud.ply";
};

int run_fuse(const FuseArgs& args) {
  const FrameSequence seq = io::load_manifest(args.manifest);
  const int ref = args.ref >= 0 ? args.ref : static_cast<int>(seq.size()) / 2;
  std::vector<Pose> poses;
  if (args.poses_file.empty()) {
    for (const FrameSample& f : seq) poses.push_back(f.gt_pose);
  } else {
    poses = io::read_poses(args.poses_file);
    if (poses.size() != seq.size()) {
      throw InvalidInputError("fuse: pose file has " + std::to_string(poses.size()) +
                              " poses for " + std::to_string(seq.size()) + " frames");
    }
  }
  const fusion::PointCloud cloud = fusion::fuse_pointcloud(seq, ref, poses, args.stride);
  fusion::write_ply(cloud, args.out);
  Report report("fuse");
  report.add("ref", ref);
  report.add("stride", args.stride);
  report.add("points", cloud.size());
  report.add("out", args.out);
  report.print();
  return 0;
}

// --- gradcheck ---------------------------------------------------------------

struct GradcheckArgs {
  std::string loss = "geometric";
  int size = 8;
  std::uint64_t seed = 7;
  double step = 1e-3;
  double tol = 1e-4;
};

int run_gradcheck(const GradcheckArgs& args) {
  const loss::LossKind kind = loss::loss_kind_from_name(args.loss);
  const gradcheck::Report r = gradcheck::run(kind, args.size, args.seed, args.step);
  Report report("gradcheck");
  report.add("loss", loss::loss_kind_name(kind));
  report.add("size", r.size);
  report.add("seed", std::to_string(r.seed));
  report.add_exp("max_rel_err", r.max_rel_err);
  report.add("pixels_checked", r.pixels_checked);
  report.add("pixels_excluded", r.pixels_excluded);
  report.add("pass", r.max_rel_err < args.tol ? "true" : "false");
  report.print();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthtk: geometric depth-consistency toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* cmd_synth =
      app.add_subcommand("synth", "render a synthetic sequence to a manifest directory");
  cmd_synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  cmd_synth->add_option("--scene", synth_args.scene, "plane|tilted|boxworld|occlusion");
  cmd_synth->add_option("--traj", synth_args.traj, "static|translate-x|translate-z|arc");
  cmd_synth->add_option("--frames", synth_args.frames, "frame count")->check(CLI::PositiveNumber);
  cmd_synth->add_option("--step", synth_args.step, "meters (or radians for arc) per frame");
  cmd_synth->add_option("--width", synth_args.width)->check(CLI::PositiveNumber);
  cmd_synth->add_option("--height", synth_args.height)->check(CLI::PositiveNumber);
  cmd_synth->add_option("--seed", synth_args.seed, "texture / noise seed");
  cmd_synth->add_option("--noise", synth_args.noise, "multiplicative prediction noise amplitude");
  cmd_synth->add_option("--quantize", synth_args.quantize, "snap predictions to this step (meters)");

  WarpArgs warp_args;
  auto* cmd_warp = app.add_subcommand("warp", "backward-warp a source frame into a target view");
  cmd_warp->add_option("--manifest", warp_args.manifest)->required();
  cmd_warp->add_option("--target", warp_args.target)->required();
  cmd_warp->add_option("--source", warp_args.source)->required();
  cmd_warp->add_option("--out", warp_args.out_dir, "directory for warped.pfm / valid.pgm");

  LossesArgs losses_args;
  auto* cmd_losses = app.add_subcommand("losses", "evaluate the masked loss suite on a triplet");
  cmd_losses->add_option("--manifest", losses_args.manifest)->required();
  cmd_losses->add_option("--target", losses_args.target, "interior target frame index");
  cmd_losses->add_option("--alpha", losses_args.alpha, "SSIM/L1 mix")->check(CLI::Range(0.0, 1.0));
  cmd_losses->add_option("--ssim-window", losses_args.ssim_window);
  cmd_losses->add_option("--lambda-s", losses_args.lambda_s);
  cmd_losses->add_option("--lambda-geo", losses_args.lambda_geo);
  cmd_losses->add_option("--lambda-m", losses_args.lambda_m);
  cmd_losses->add_option("--cycle-percentile", losses_args.cycle_percentile);
  cmd_losses->add_option("--motion-threshold", losses_args.motion_threshold);
  cmd_losses->add_option("--teacher-depth", losses_args.teacher_depth,
                         "teacher depth PFM (default: target GT depth)");
  cmd_losses->add_option("--ref-depth", losses_args.ref_depth,
                         "reference decoder depth PFM (default: target prediction)");
  cmd_losses->add_option("--dump-maps", losses_args.dump_dir, "write per-pixel maps here");

  AttnArgs attn_args;
  auto* cmd_attn = app.add_subcommand("attn", "dump attention rows as PGM heatmaps");
  cmd_attn->add_option("--manifest", attn_args.manifest)->required();
  cmd_attn->add_option("--frame", attn_args.frame);
  cmd_attn->add_option("--sigma", attn_args.sigma, "spatial length scale in meters");
  cmd_attn->add_option("--radius", attn_args.radius, "ball-query radius in pixels (0 = full)");
  cmd_attn->add_option("--factor", attn_args.factor, "bottleneck downsampling factor")
      ->check(CLI::PositiveNumber);
  cmd_attn->add_option("--query", attn_args.queries, "coarse-resolution query 'u,v' (repeatable)");
  cmd_attn->add_flag("--temporal,!--no-temporal", attn_args.temporal,
                     "also dump temporal attention vs the neighbor frames");
  cmd_attn->add_option("--out", attn_args.out_dir)->required();

  TcmArgs tcm_args;
  auto* cmd_tcm = app.add_subcommand("tcm", "temporal consistency metric over sliding windows");
  cmd_tcm->add_option("--manifest", tcm_args.manifest)->required();
  cmd_tcm->add_option("--frames", tcm_args.frames, "window length k")->check(CLI::PositiveNumber);
  cmd_tcm->add_option("--outlier-fraction", tcm_args.outlier_fraction)
      ->check(CLI::Range(0.0, 0.999));
  cmd_tcm->add_option("--stride", tcm_args.stride)->check(CLI::PositiveNumber);
  cmd_tcm->add_flag("--table", tcm_args.table, "also print a human-readable table");

  FuseArgs fuse_args;
  auto* cmd_fuse = app.add_subcommand("fuse", "fuse predictions into a colored PLY point cloud");
  cmd_fuse->add_option("--manifest", fuse_args.manifest)->required();
  cmd_fuse->add_option("--ref", fuse_args.ref, "reference frame (default middle)");
  cmd_fuse->add_option("--stride", fuse_args.stride)->check(CLI::PositiveNumber);
  cmd_fuse->add_option("--poses", fuse_args.poses_file, "override poses (default: manifest GT)");
  cmd_fuse->add_option("--out", fuse_args.out, "output PLY path");

  GradcheckArgs grad_args;
  auto* cmd_grad = app.add_subcommand("gradcheck", "finite-difference check of analytic gradients");
  cmd_grad->add_option("--loss", grad_args.loss,
                       "geometric|photometric-l1|smoothness|motion|reference");
  cmd_grad->add_option("--size", grad_args.size, "side length of the random maps")
      ->check(CLI::PositiveNumber);
  cmd_grad->add_option("--seed", grad_args.seed);
  cmd_grad->add_option("--step", grad_args.step, "relative finite-difference step");
  cmd_grad->add_option("--tol", grad_args.tol, "pass threshold on max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << "run with --help for the full flag list\n";
    return 1;
  }

  try {
    if (cmd_synth->parsed()) return run_synth(synth_args);
    if (cmd_warp->parsed()) return run_warp(warp_args);
    if (cmd_losses->parsed()) return run_losses(losses_args);
    if (cmd_attn->parsed()) return run_attn(attn_args);
    if (cmd_tcm->parsed()) return run_tcm(tcm_args);
    if (cmd_fuse->parsed()) return run_fuse(fuse_args);
    if (cmd_grad->parsed()) return run_gradcheck(grad_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

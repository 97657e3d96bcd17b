#ifndef DEPTHTK_TYPES_HPP
#define DEPTHTK_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthtk {

/// Dense row-major raster grid. Bulk pixel data is stored in single
/// precision; camera and pose math runs in double.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GridF = Grid<float>;
using GridD = Grid<double>;
using MaskMap = Grid<bool>;

/// 3D point in camera or world coordinates, meters.
using Point3 = Eigen::Vector3d;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes: usage errors are
// handled by the argument parser, everything below exits with code 2.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller passed values violating an operation's preconditions.
struct InvalidInputError : Error {
  using Error::Error;
};

/// A 3D point with z <= 0 cannot be projected.
struct BehindCameraError : InvalidInputError {
  using InvalidInputError::InvalidInputError;
};

/// An operation that reduces over a set of pixels/tracks got an empty set.
struct EmptyDomainError : Error {
  using Error::Error;
};

/// A file does not conform to its format; message carries byte offset or
/// line number.
struct FormatError : Error {
  using Error::Error;
};

/// Filesystem-level failure (missing file, short read, failed write).
struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Camera model
// ---------------------------------------------------------------------------

/// Pinhole intrinsics in pixels. Pixel centers sit at integer coordinates,
/// (u, v) = (column, row).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
        !std::isfinite(cx) || !std::isfinite(cy)) {
      throw InvalidInputError("intrinsics: focal lengths must be positive and all entries finite");
    }
  }
};

/// Rigid SE(3) transform. Coordinates are right-handed with x right,
/// y down, z forward. A pose named a_to_b maps points expressed in frame a
/// into frame b: p_b = R * p_a + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }

  Point3 operator*(const Point3& p) const { return rotation * p + translation; }

  /// Composition: (a * b) applies b first, then a.
  Pose operator*(const Pose& rhs) const {
    return Pose{rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  /// Max-norm deviation of R^T R from identity plus |det(R) - 1|.
  double orthonormality_error() const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    const double off = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return off + std::abs(rotation.determinant() - 1.0);
  }

  bool is_rigid(double tol = 1e-6) const {
    return translation.allFinite() && rotation.allFinite() && orthonormality_error() <= tol;
  }
};

// ---------------------------------------------------------------------------
// Raster domain types
// ---------------------------------------------------------------------------

/// H x W grid of strictly positive depths in meters plus a validity mask.
/// Invalid entries are excluded from every statistic computed downstream.
struct DepthMap {
  GridF values;
  MaskMap valid;

  DepthMap() = default;
  DepthMap(int height, int width)
      : values(GridF::Zero(height, width)), valid(MaskMap::Constant(height, width, false)) {}

  static DepthMap constant(int height, int width, float depth) {
    DepthMap d(height, width);
    d.values.setConstant(depth);
    d.valid.setConstant(true);
    return d;
  }

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
  bool fully_valid() const { return valid.all(); }

  void validate() const {
    if (values.rows() != valid.rows() || values.cols() != valid.cols()) {
      throw InvalidInputError("depth map: values and validity mask differ in shape");
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      for (Eigen::Index c = 0; c < values.cols(); ++c) {
        if (valid(r, c) && !(std::isfinite(values(r, c)) && values(r, c) > 0.0f)) {
          throw InvalidInputError("depth map: valid entries must be finite and positive");
        }
      }
    }
  }
};

/// H x W x C image with values in [0, 1], stored as one plane per channel.
struct ImageGrid {
  std::vector<GridF> channels;

  static ImageGrid zeros(int height, int width, int channel_count) {
    ImageGrid img;
    img.channels.assign(static_cast<std::size_t>(channel_count), GridF::Zero(height, width));
    return img;
  }

  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int channel_count() const { return static_cast<int>(channels.size()); }

  bool same_shape(const ImageGrid& other) const {
    return width() == other.width() && height() == other.height() &&
           channel_count() == other.channel_count();
  }
};

/// H x W grid of D-dimensional feature vectors, flattened row-major to a
/// (H*W) x D matrix so attention products are plain matrix algebra.
struct FeatureMap {
  int width = 0;
  int height = 0;
  Eigen::MatrixXf values;  // (height*width) x dim

  int dim() const { return static_cast<int>(values.cols()); }
  int positions() const { return static_cast<int>(values.rows()); }

  static FeatureMap from_image(const ImageGrid& img) {
    FeatureMap f;
    f.width = img.width();
    f.height = img.height();
    f.values.resize(static_cast<Eigen::Index>(f.width) * f.height, img.channel_count());
    for (int c = 0; c < img.channel_count(); ++c) {
      for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
          f.values(static_cast<Eigen::Index>(y) * f.width + x, c) = img.channels[c](y, x);
        }
      }
    }
    return f;
  }
};

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

/// One frame of an evaluation sequence. gt_pose maps camera coordinates to
/// world coordinates.
struct FrameSample {
  ImageGrid image;
  DepthMap pred_depth;
  DepthMap gt_depth;
  Pose gt_pose;
  Intrinsics intrinsics;
};

using FrameSequence = std::vector<FrameSample>;

}  // namespace depthtk

#endif  // DEPTHTK_TYPES_HPP

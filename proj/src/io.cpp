#include "depthtk/io.hpp"

#include <Eigen/SVD>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace depthtk::io {

namespace {

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

// Minimal tokenizer over a byte buffer that tracks offsets for error
// reporting. PFM headers are whitespace-delimited tokens followed by exactly
// one whitespace byte before the binary payload.
struct ByteCursor {
  const std::string& bytes;
  std::size_t pos = 0;
  const std::string& path;

  std::string token() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos >= bytes.size()) {
      throw FormatError(path + ": unexpected end of header at byte " + std::to_string(pos));
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  }

  void skip_one_whitespace() {
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(path + ": missing delimiter after header at byte " + std::to_string(pos));
    }
    ++pos;
  }
};

int parse_int(const std::string& tok, const std::string& path, std::size_t offset) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path + ": invalid integer '" + tok + "' near byte " + std::to_string(offset));
  }
}

double parse_double(const std::string& tok, const std::string& path, std::size_t offset) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path + ": invalid number '" + tok + "' near byte " + std::to_string(offset));
  }
}

struct PfmPayload {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> samples;  // top-down row order, channels interleaved
};

PfmPayload read_pfm_payload(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  ByteCursor cur{bytes, 0, path};
  const std::string magic = cur.token();
  PfmPayload out;
  if (magic == "Pf") {
    out.channels = 1;
  } else if (magic == "PF") {
    out.channels = 3;
  } else {
    throw FormatError(path + ": not a PFM file (magic '" + magic + "' at byte 0)");
  }
  std::size_t off = cur.pos;
  out.width = parse_int(cur.token(), path, off);
  off = cur.pos;
  out.height = parse_int(cur.token(), path, off);
  if (out.width <= 0 || out.height <= 0) {
    throw FormatError(path + ": non-positive dimensions in header");
  }
  off = cur.pos;
  const double scale = parse_double(cur.token(), path, off);
  if (scale == 0.0) throw FormatError(path + ": zero scale field");
  cur.skip_one_whitespace();
  const bool little_endian = scale < 0.0;

  const std::size_t count =
      static_cast<std::size_t>(out.width) * out.height * static_cast<std::size_t>(out.channels);
  const std::size_t need = count * 4;
  if (bytes.size() - cur.pos < need) {
    throw FormatError(path + ": truncated payload, expected " + std::to_string(need) +
                      " bytes at byte " + std::to_string(cur.pos) + ", have " +
                      std::to_string(bytes.size() - cur.pos));
  }
  out.samples.resize(count);
  const unsigned char* src = reinterpret_cast<const unsigned char*>(bytes.data() + cur.pos);
  // PFM rows run bottom-up in the file; flip to top-down while copying.
  const std::size_t row_samples = static_cast<std::size_t>(out.width) * out.channels;
  for (int y = 0; y < out.height; ++y) {
    const std::size_t file_row = static_cast<std::size_t>(out.height - 1 - y);
    for (std::size_t i = 0; i < row_samples; ++i) {
      const unsigned char* b = src + (file_row * row_samples + i) * 4;
      std::uint32_t bits;
      if (little_endian) {
        bits = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
      } else {
        bits = static_cast<std::uint32_t>(b[3]) | static_cast<std::uint32_t>(b[2]) << 8 |
               static_cast<std::uint32_t>(b[1]) << 16 | static_cast<std::uint32_t>(b[0]) << 24;
      }
      float f;
      std::memcpy(&f, &bits, 4);
      out.samples[static_cast<std::size_t>(y) * row_samples + i] = f;
    }
  }
  return out;
}

void write_pfm_payload(const std::string& path, int width, int height, int channels,
                       const std::vector<float>& samples) {
  std::string bytes;
  char header[64];
  std::snprintf(header, sizeof(header), "%s\n%d %d\n-1.0\n", channels == 1 ? "Pf" : "PF", width,
                height);
  bytes.assign(header);
  const std::size_t row_samples = static_cast<std::size_t>(width) * channels;
  bytes.reserve(bytes.size() + samples.size() * 4);
  for (int y = height - 1; y >= 0; --y) {
    const char* row = reinterpret_cast<const char*>(samples.data() + static_cast<std::size_t>(y) * row_samples);
    bytes.append(row, row_samples * 4);  // host is little-endian, matching scale -1
  }
  write_file_bytes(path, bytes);
}

}  // namespace

void write_pfm(const std::string& path, const DepthMap& depth) {
  const int w = depth.width();
  const int h = depth.height();
  std::vector<float> samples(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      samples[static_cast<std::size_t>(y) * w + x] =
          depth.valid(y, x) ? depth.values(y, x) : std::numeric_limits<float>::quiet_NaN();
    }
  }
  write_pfm_payload(path, w, h, 1, samples);
}

void write_pfm(const std::string& path, const ImageGrid& image) {
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channel_count();
  if (ch != 1 && ch != 3) {
    throw InvalidInputError("write_pfm: images must have 1 or 3 channels");
  }
  std::vector<float> samples(static_cast<std::size_t>(w) * h * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        samples[(static_cast<std::size_t>(y) * w + x) * ch + c] =
            image.channels[static_cast<std::size_t>(c)](y, x);
      }
    }
  }
  write_pfm_payload(path, w, h, ch, samples);
}

DepthMap read_pfm_depth(const std::string& path) {
  const PfmPayload p = read_pfm_payload(path);
  if (p.channels != 1) {
    throw FormatError(path + ": expected single-channel 'Pf' for depth, found 'PF'");
  }
  DepthMap d(p.height, p.width);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const float v = p.samples[static_cast<std::size_t>(y) * p.width + x];
      if (std::isfinite(v) && v > 0.0f) {
        d.values(y, x) = v;
        d.valid(y, x) = true;
      }
    }
  }
  return d;
}

ImageGrid read_pfm_image(const std::string& path) {
  const PfmPayload p = read_pfm_payload(path);
  ImageGrid img = ImageGrid::zeros(p.height, p.width, p.channels);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      for (int c = 0; c < p.channels; ++c) {
        const float v = p.samples[(static_cast<std::size_t>(y) * p.width + x) * p.channels + c];
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
          throw FormatError(path + ": image sample outside [0, 1] at pixel (" + std::to_string(x) +
                            ", " + std::to_string(y) + ")");
        }
        img.channels[static_cast<std::size_t>(c)](y, x) = v;
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// PNG16
// ---------------------------------------------------------------------------

namespace {

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
         static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

DepthMap read_depth_png16(const std::string& path, double scale_divisor) {
  if (!(scale_divisor > 0.0)) {
    throw InvalidInputError("read_depth_png16: scale divisor must be positive");
  }
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) {
    throw FormatError(path + ": not a PNG file");
  }
  std::size_t pos = 8;
  int width = 0, height = 0;
  bool have_header = false;
  std::string compressed;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = be32(reinterpret_cast<const unsigned char*>(bytes.data() + pos));
    const std::string type = bytes.substr(pos + 4, 4);
    if (pos + 12 + len > bytes.size()) {
      throw FormatError(path + ": truncated chunk '" + type + "' at byte " + std::to_string(pos));
    }
    const char* payload = bytes.data() + pos + 8;
    if (type == "IHDR") {
      if (len != 13) throw FormatError(path + ": bad IHDR length");
      width = static_cast<int>(be32(reinterpret_cast<const unsigned char*>(payload)));
      height = static_cast<int>(be32(reinterpret_cast<const unsigned char*>(payload + 4)));
      const int bit_depth = static_cast<unsigned char>(payload[8]);
      const int color_type = static_cast<unsigned char>(payload[9]);
      const int interlace = static_cast<unsigned char>(payload[12]);
      if (bit_depth != 16 || color_type != 0) {
        throw FormatError(path + ": expected 16-bit single-channel PNG, got bit depth " +
                          std::to_string(bit_depth) + " color type " + std::to_string(color_type));
      }
      if (interlace != 0) throw FormatError(path + ": interlaced PNG not supported");
      have_header = true;
    } else if (type == "IDAT") {
      compressed.append(payload, len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (!have_header) throw FormatError(path + ": missing IHDR chunk");
  if (width <= 0 || height <= 0) throw FormatError(path + ": bad dimensions");
  if (compressed.empty()) throw FormatError(path + ": missing IDAT data");

  const std::size_t stride = static_cast<std::size_t>(width) * 2;
  const std::size_t raw_size = (stride + 1) * static_cast<std::size_t>(height);
  std::vector<unsigned char> raw(raw_size);
  uLongf dest_len = raw_size;
  const int zrc = uncompress(raw.data(), &dest_len,
                             reinterpret_cast<const Bytef*>(compressed.data()),
                             static_cast<uLong>(compressed.size()));
  if (zrc != Z_OK || dest_len != raw_size) {
    throw FormatError(path + ": IDAT decompression failed");
  }

  DepthMap d(height, width);
  std::vector<unsigned char> prev(stride, 0);
  std::vector<unsigned char> line(stride, 0);
  for (int y = 0; y < height; ++y) {
    const unsigned char* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    const int filter = src[0];
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = src[1 + i];
      const int a = i >= 2 ? line[i - 2] : 0;
      const int b = prev[i];
      const int c = i >= 2 ? prev[i - 2] : 0;
      int v = 0;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default: throw FormatError(path + ": unknown PNG filter " + std::to_string(filter));
      }
      line[i] = static_cast<unsigned char>(v & 0xff);
    }
    for (int x = 0; x < width; ++x) {
      const std::uint32_t raw_val =
          static_cast<std::uint32_t>(line[2 * static_cast<std::size_t>(x)]) << 8 |
          line[2 * static_cast<std::size_t>(x) + 1];
      if (raw_val > 0) {
        d.values(y, x) = static_cast<float>(raw_val / scale_divisor);
        d.valid(y, x) = true;
      }
    }
    std::swap(prev, line);
  }
  return d;
}

void write_depth_png16(const std::string& path, const DepthMap& depth, double scale_divisor) {
  if (!(scale_divisor > 0.0)) {
    throw InvalidInputError("write_depth_png16: scale divisor must be positive");
  }
  const int w = depth.width();
  const int h = depth.height();
  const std::size_t stride = static_cast<std::size_t>(w) * 2;
  std::string raw;
  raw.reserve((stride + 1) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    raw.push_back('\0');  // filter 0
    for (int x = 0; x < w; ++x) {
      std::uint32_t v = 0;
      if (depth.valid(y, x)) {
        const double scaled = std::round(depth.values(y, x) * scale_divisor);
        v = static_cast<std::uint32_t>(std::clamp(scaled, 1.0, 65535.0));
      }
      raw.push_back(static_cast<char>((v >> 8) & 0xff));
      raw.push_back(static_cast<char>(v & 0xff));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw IoError("write_depth_png16: compression failed for '" + path + "'");
  }
  compressed.resize(bound);

  std::string out(reinterpret_cast<const char*>(kPngSignature), 8);
  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(w));
  put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(16);  // bit depth
  ihdr.push_back(0);   // grayscale
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", "");
  write_file_bytes(path, out);
}

// ---------------------------------------------------------------------------
// Poses and intrinsics
// ---------------------------------------------------------------------------

std::vector<Pose> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<Pose> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) continue;  // tolerate blank lines
    if (vals.size() != 12) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": expected 12 values, got " +
                        std::to_string(vals.size()));
    }
    Pose p;
    p.rotation << vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9], vals[10];
    p.translation << vals[3], vals[7], vals[11];
    if (p.orthonormality_error() > 1e-3) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": rotation is not orthonormal");
    }
    // Project onto SO(3) so downstream pose invariants hold exactly.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(p.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    p.rotation = u * svd.matrixV().transpose();
    out.push_back(p);
  }
  return out;
}

void write_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[64];
  for (const Pose& p : poses) {
    std::string line;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        const double v = c < 3 ? p.rotation(r, c) : p.translation(r);
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        if (!line.empty()) line += ' ';
        line += buf;
      }
    }
    out << line << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Intrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (vals.size() != 4) {
    throw FormatError(path + ": expected 4 values 'fx fy cx cy', got " +
                      std::to_string(vals.size()));
  }
  Intrinsics k{vals[0], vals[1], vals[2], vals[3]};
  try {
    k.validate();
  } catch (const InvalidInputError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return k;
}

void write_intrinsics(const std::string& path, const Intrinsics& k) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", k.fx, k.fy, k.cx, k.cy);
  out << buf;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_pgm(const std::string& path, const GridF& values) {
  std::string bytes;
  char header[64];
  std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", static_cast<int>(values.cols()),
                static_cast<int>(values.rows()));
  bytes.assign(header);
  for (Eigen::Index y = 0; y < values.rows(); ++y) {
    for (Eigen::Index x = 0; x < values.cols(); ++x) {
      const double v = std::clamp(static_cast<double>(values(y, x)), 0.0, 1.0);
      bytes.push_back(static_cast<char>(std::lround(v * 255.0)));
    }
  }
  write_file_bytes(path, bytes);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  Manifest m;
  std::string line;
  int line_no = 0;
  bool have_intrinsics = false, have_poses = false, have_resolution = false;
  int last_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "depthtk-manifest v1") {
        throw FormatError(path + ": line 1: expected header 'depthtk-manifest v1'");
      }
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto fail = [&](const std::string& why) -> FormatError {
      return FormatError(path + ": line " + std::to_string(line_no) + ": " + why);
    };
    if (tag == "intrinsics") {
      if (!(ls >> m.intrinsics_path) || m.intrinsics_path.empty()) throw fail("missing path");
      have_intrinsics = true;
    } else if (tag == "poses") {
      if (!(ls >> m.poses_path)) throw fail("missing path");
      have_poses = true;
    } else if (tag == "resolution") {
      if (!(ls >> m.width >> m.height) || m.width <= 0 || m.height <= 0) {
        throw fail("expected positive 'resolution <width> <height>'");
      }
      have_resolution = true;
    } else if (tag == "frame") {
      ManifestFrame f;
      if (!(ls >> f.index >> f.image >> f.pred_depth >> f.gt_depth >> f.pose_line)) {
        throw fail("expected 'frame <index> <image> <pred> <gt> <pose_line>'");
      }
      std::string extra;
      if (ls >> extra) throw fail("trailing tokens after frame record");
      if (f.index <= last_index) throw fail("frame indices must be strictly increasing");
      last_index = f.index;
      m.frames.push_back(std::move(f));
    } else {
      throw fail("unknown directive '" + tag + "'");
    }
  }
  if (!have_intrinsics) throw FormatError(path + ": missing 'intrinsics' directive");
  if (!have_poses) throw FormatError(path + ": missing 'poses' directive");
  if (!have_resolution) throw FormatError(path + ": missing 'resolution' directive");
  return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "depthtk-manifest v1\n";
  out << "intrinsics " << manifest.intrinsics_path << '\n';
  out << "poses " << manifest.poses_path << '\n';
  out << "resolution " << manifest.width << ' ' << manifest.height << '\n';
  for (const ManifestFrame& f : manifest.frames) {
    out << "frame " << f.index << ' ' << f.image << ' ' << f.pred_depth << ' ' << f.gt_depth << ' '
        << f.pose_line << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

DepthMap load_depth_any(const std::string& path) {
  if (has_suffix(path, ".png")) return read_depth_png16(path);
  return read_pfm_depth(path);
}

}  // namespace

FrameSequence load_manifest(const std::string& path) {
  const Manifest m = read_manifest(path);
  if (m.frames.empty()) {
    throw EmptyDomainError(path + ": manifest lists no frames (empty sequence)");
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&base](const std::string& rel) { return (base / rel).string(); };
  auto require_exists = [&](const std::string& file, int frame_index, const char* what) {
    if (!std::filesystem::exists(file)) {
      throw IoError(path + ": frame " + std::to_string(frame_index) + ": missing " + what + " '" +
                    file + "'");
    }
  };

  const Intrinsics k = read_intrinsics(resolve(m.intrinsics_path));
  const std::vector<Pose> poses = read_poses(resolve(m.poses_path));

  FrameSequence seq;
  seq.reserve(m.frames.size());
  for (const ManifestFrame& f : m.frames) {
    FrameSample frame;
    const std::string image_path = resolve(f.image);
    const std::string pred_path = resolve(f.pred_depth);
    const std::string gt_path = resolve(f.gt_depth);
    require_exists(image_path, f.index, "image file");
    require_exists(pred_path, f.index, "predicted depth file");
    require_exists(gt_path, f.index, "ground-truth depth file");
    frame.image = read_pfm_image(image_path);
    frame.pred_depth = load_depth_any(pred_path);
    frame.gt_depth = load_depth_any(gt_path);
    if (f.pose_line < 0 || f.pose_line >= static_cast<int>(poses.size())) {
      throw FormatError(path + ": frame " + std::to_string(f.index) + ": pose line " +
                        std::to_string(f.pose_line) + " out of range (file has " +
                        std::to_string(poses.size()) + " poses)");
    }
    frame.gt_pose = poses[static_cast<std::size_t>(f.pose_line)];
    frame.intrinsics = k;
    auto check_shape = [&](int w, int h, const char* what) {
      if (w != m.width || h != m.height) {
        throw FormatError(path + ": frame " + std::to_string(f.index) + ": " + what +
                          " resolution " + std::to_string(w) + "x" + std::to_string(h) +
                          " does not match manifest " + std::to_string(m.width) + "x" +
                          std::to_string(m.height));
      }
    };
    check_shape(frame.image.width(), frame.image.height(), "image");
    check_shape(frame.pred_depth.width(), frame.pred_depth.height(), "predicted depth");
    check_shape(frame.gt_depth.width(), frame.gt_depth.height(), "ground-truth depth");
    frame.pred_depth.validate();
    frame.gt_depth.validate();
    seq.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace depthtk::io

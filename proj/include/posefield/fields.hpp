#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include "posefield/core.hpp"

namespace posefield {

/// Dense per-channel grid plane, row-major so (row, col) matches the file
/// layout byte-for-byte.
template <typename Scalar>
using PlaneT =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<float>;

inline constexpr float kBMin = 1e-3f;      // field-cell units
inline constexpr float kSigmaMin = 1e-3f;  // field-cell units

/// Maps the field grid onto the image: cell (i, j) is centered on image
/// coordinate (i*stride, j*stride).
struct FieldGeometry {
  int stride = 8;  // image px per field cell
  int grid_w = 0;  // cells
  int grid_h = 0;

  static FieldGeometry for_scene(int width, int height, int stride = 8);

  double to_field(double image_coord) const { return image_coord / stride; }
  double to_image(double field_coord) const { return field_coord * stride; }

  bool operator==(const FieldGeometry&) const = default;
};

namespace pif {
enum Channel { kC = 0, kDx, kDy, kB, kSigma };
inline constexpr int kChannels = 5;
}  // namespace pif

namespace paf {
enum Channel { kC = 0, kDx1, kDy1, kB1, kDx2, kDy2, kB2 };
inline constexpr int kChannels = 7;
}  // namespace paf

/// Part intensity field: one {c, dx, dy, b, sigma} plane set per keypoint
/// type. Offsets are relative to the cell origin, in field-cell units.
struct PifField {
  FieldGeometry geometry;
  int num_types = 0;
  std::vector<Plane> planes;  // num_types * pif::kChannels

  Plane& plane(int type, int channel) {
    return planes[type * pif::kChannels + channel];
  }
  const Plane& plane(int type, int channel) const {
    return planes[type * pif::kChannels + channel];
  }
};

/// Part association field: one {c, dx1, dy1, b1, dx2, dy2, b2} plane set
/// per connection.
struct PafField {
  FieldGeometry geometry;
  int num_types = 0;
  std::vector<Plane> planes;  // num_types * paf::kChannels

  Plane& plane(int type, int channel) {
    return planes[type * paf::kChannels + channel];
  }
  const Plane& plane(int type, int channel) const {
    return planes[type * paf::kChannels + channel];
  }
};

/// Zero-confidence fields sized for the skeleton (17x5 and 19x7 channel
/// sets); b and sigma planes start at their lower bounds.
std::pair<PifField, PafField> new_fields(const FieldGeometry& geometry,
                                         const SkeletonSpec& skeleton);

enum class FieldIoErrc {
  malformed_header,
  dimension_mismatch,
  truncated_payload,
};

class FieldIoError : public std::runtime_error {
 public:
  FieldIoError(FieldIoErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  FieldIoErrc code() const { return code_; }

 private:
  FieldIoErrc code_;
};

class GeometryMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian `.fields` container; read(write(x)) is bit-exact on all
/// float payloads. Layout documented in docs/fields-format.md.
void write_fields(const std::filesystem::path& path, const PifField& pif,
                  const PafField& paf);
std::pair<PifField, PafField> read_fields(const std::filesystem::path& path);

/// True when confidences are in [0,1], b/sigma respect their lower bounds
/// wherever confidence is positive, and every value is finite.
bool fields_valid(const PifField& pif);
bool fields_valid(const PafField& paf);

}  // namespace posefield

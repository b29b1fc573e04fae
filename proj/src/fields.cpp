#include "posefield/fields.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace posefield {

static_assert(std::endian::native == std::endian::little,
              "the .fields format is little-endian and this implementation "
              "writes planes with bulk I/O");

FieldGeometry FieldGeometry::for_scene(int width, int height, int stride) {
  if (width <= 0 || height <= 0 || stride < 1) {
    throw ValidationError("field geometry requires positive extent and stride");
  }
  FieldGeometry g;
  g.stride = stride;
  g.grid_w = (width + stride - 1) / stride;
  g.grid_h = (height + stride - 1) / stride;
  return g;
}

static std::vector<Plane> make_planes(int num_types, int channels,
                                      const FieldGeometry& g) {
  std::vector<Plane> planes;
  planes.reserve(static_cast<size_t>(num_types) * channels);
  for (int t = 0; t < num_types; ++t) {
    for (int ch = 0; ch < channels; ++ch) {
      Plane p(g.grid_h, g.grid_w);
      p.setZero();
      planes.push_back(std::move(p));
    }
  }
  return planes;
}

std::pair<PifField, PafField> new_fields(const FieldGeometry& geometry,
                                         const SkeletonSpec& skeleton) {
  if (geometry.grid_w <= 0 || geometry.grid_h <= 0) {
    throw ValidationError("field grid dimensions must be positive");
  }
  PifField pif;
  pif.geometry = geometry;
  pif.num_types = static_cast<int>(skeleton.keypoint_names.size());
  pif.planes = make_planes(pif.num_types, pif::kChannels, geometry);
  for (int t = 0; t < pif.num_types; ++t) {
    pif.plane(t, pif::kB).setConstant(kBMin);
    pif.plane(t, pif::kSigma).setConstant(kSigmaMin);
  }

  PafField paf;
  paf.geometry = geometry;
  paf.num_types = static_cast<int>(skeleton.connections.size());
  paf.planes = make_planes(paf.num_types, paf::kChannels, geometry);
  for (int t = 0; t < paf.num_types; ++t) {
    paf.plane(t, paf::kB1).setConstant(kBMin);
    paf.plane(t, paf::kB2).setConstant(kBMin);
  }
  return {std::move(pif), std::move(paf)};
}

namespace {

constexpr char kMagic[4] = {'P', 'F', 'L', 'D'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_plane_group(std::ostream& os, const std::vector<Plane>& planes) {
  for (const Plane& p : planes) {
    os.write(reinterpret_cast<const char*>(p.data()),
             static_cast<std::streamsize>(sizeof(float) * p.size()));
  }
}

}  // namespace

void write_fields(const std::filesystem::path& path, const PifField& pif,
                  const PafField& paf) {
  if (pif.geometry != paf.geometry) {
    throw FieldIoError(FieldIoErrc::dimension_mismatch,
                       "pif/paf geometry mismatch");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  os.write(kMagic, sizeof(kMagic));
  const std::uint8_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), 1);
  const std::uint8_t pad[3] = {0, 0, 0};
  os.write(reinterpret_cast<const char*>(pad), 3);
  put_u32(os, static_cast<std::uint32_t>(pif.geometry.stride));
  put_u32(os, static_cast<std::uint32_t>(pif.geometry.grid_w));
  put_u32(os, static_cast<std::uint32_t>(pif.geometry.grid_h));
  put_u32(os, static_cast<std::uint32_t>(pif.num_types));
  put_u32(os, pif::kChannels);
  put_u32(os, static_cast<std::uint32_t>(paf.num_types));
  put_u32(os, paf::kChannels);
  write_plane_group(os, pif.planes);
  write_plane_group(os, paf.planes);
  if (!os) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::pair<PifField, PafField> read_fields(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }

  char magic[4] = {};
  std::uint8_t version = 0;
  char pad[3] = {};
  is.read(magic, sizeof(magic));
  is.read(reinterpret_cast<char*>(&version), 1);
  is.read(pad, sizeof(pad));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 ||
      version != kVersion) {
    throw FieldIoError(FieldIoErrc::malformed_header,
                       "bad magic or version in " + path.string());
  }

  FieldGeometry g;
  g.stride = static_cast<int>(get_u32(is));
  g.grid_w = static_cast<int>(get_u32(is));
  g.grid_h = static_cast<int>(get_u32(is));
  const auto pif_types = get_u32(is);
  const auto pif_channels = get_u32(is);
  const auto paf_types = get_u32(is);
  const auto paf_channels = get_u32(is);
  if (!is) {
    throw FieldIoError(FieldIoErrc::malformed_header,
                       "header truncated in " + path.string());
  }
  if (g.stride < 1 || g.grid_w <= 0 || g.grid_h <= 0 || pif_types == 0 ||
      paf_types == 0 || pif_channels != pif::kChannels ||
      paf_channels != paf::kChannels) {
    throw FieldIoError(FieldIoErrc::dimension_mismatch,
                       "inconsistent dimensions in " + path.string());
  }

  auto read_group = [&](int num_types, int channels) {
    std::vector<Plane> planes;
    planes.reserve(static_cast<size_t>(num_types) * channels);
    for (int t = 0; t < num_types; ++t) {
      for (int ch = 0; ch < channels; ++ch) {
        Plane p(g.grid_h, g.grid_w);
        is.read(reinterpret_cast<char*>(p.data()),
                static_cast<std::streamsize>(sizeof(float) * p.size()));
        if (is.gcount() !=
            static_cast<std::streamsize>(sizeof(float) * p.size())) {
          throw FieldIoError(FieldIoErrc::truncated_payload,
                             "payload shorter than header promises in " +
                                 path.string());
        }
        planes.push_back(std::move(p));
      }
    }
    return planes;
  };

  PifField pif;
  pif.geometry = g;
  pif.num_types = static_cast<int>(pif_types);
  pif.planes = read_group(pif.num_types, pif::kChannels);

  PafField paf;
  paf.geometry = g;
  paf.num_types = static_cast<int>(paf_types);
  paf.planes = read_group(paf.num_types, paf::kChannels);

  return {std::move(pif), std::move(paf)};
}

namespace {

bool plane_finite(const Plane& p) { return p.isFinite().all(); }

}  // namespace

bool fields_valid(const PifField& pif) {
  for (int t = 0; t < pif.num_types; ++t) {
    const Plane& c = pif.plane(t, pif::kC);
    if (!plane_finite(c) || (c < 0.f).any() || (c > 1.f).any()) return false;
    for (int ch = 1; ch < pif::kChannels; ++ch) {
      if (!plane_finite(pif.plane(t, ch))) return false;
    }
    const Plane& b = pif.plane(t, pif::kB);
    const Plane& s = pif.plane(t, pif::kSigma);
    if (((c > 0.f) && (b < kBMin)).any()) return false;
    if (((c > 0.f) && (s < kSigmaMin)).any()) return false;
  }
  return true;
}

bool fields_valid(const PafField& paf) {
  for (int t = 0; t < paf.num_types; ++t) {
    const Plane& c = paf.plane(t, paf::kC);
    if (!plane_finite(c) || (c < 0.f).any() || (c > 1.f).any()) return false;
    for (int ch = 1; ch < paf::kChannels; ++ch) {
      if (!plane_finite(paf.plane(t, ch))) return false;
    }
    if (((c > 0.f) && (paf.plane(t, paf::kB1) < kBMin)).any()) return false;
    if (((c > 0.f) && (paf.plane(t, paf::kB2) < kBMin)).any()) return false;
  }
  return true;
}

}  // namespace posefield

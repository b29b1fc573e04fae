#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "posefield/encoder.hpp"
#include "posefield/fusion.hpp"
#include "posefield/rng.hpp"

using namespace posefield;

namespace {

PifField blank_pif(int grid_w = 20, int grid_h = 20, int stride = 8) {
  const auto skeleton = build_coco_skeleton();
  FieldGeometry g;
  g.stride = stride;
  g.grid_w = grid_w;
  g.grid_h = grid_h;
  return new_fields(g, skeleton).first;
}

// c at cell (j, i) pointing at (i+dx, j+dy) with the given sigma, all in
// field units.
void set_cell(PifField& pif, int type, int j, int i, float c, float dx,
              float dy, float sigma) {
  pif.plane(type, pif::kC)(j, i) = c;
  pif.plane(type, pif::kDx)(j, i) = dx;
  pif.plane(type, pif::kDy)(j, i) = dy;
  pif.plane(type, pif::kSigma)(j, i) = sigma;
}

}  // namespace

TEST_CASE("single contribution peaks at 1 and decays to exp(-1/2) at sigma") {
  PifField pif = blank_pif();
  // target (64, 80) sits on the raster; sigma 4 px
  set_cell(pif, 3, 10, 8, 1.0f, 0.0f, 0.0f, 0.5f);
  const HighResMap map = fuse(pif);

  CHECK(map.query(3, 64.0, 80.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(map.query(3, 68.0, 80.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  CHECK(map.query(3, 64.0, 84.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("coincident half-confidence contributions sum to 1") {
  PifField pif = blank_pif();
  set_cell(pif, 0, 10, 8, 0.5f, 0.0f, 0.0f, 0.5f);
  set_cell(pif, 0, 10, 9, 0.5f, -1.0f, 0.0f, 0.5f);  // same target (64, 80)
  const HighResMap map = fuse(pif);
  CHECK(map.query(0, 64.0, 80.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("contributions below the cutoff are ignored") {
  PifField pif = blank_pif();
  set_cell(pif, 0, 10, 8, 0.05f, 0.0f, 0.0f, 0.5f);
  const HighResMap map = fuse(pif);
  CHECK(map.query(0, 64.0, 80.0) == 0.0);
}

TEST_CASE("query interpolates bilinearly and handles bounds") {
  HighResMap map(40, 40, 2, 1);
  map.plane(0)(5, 5) = 0.2f;
  map.plane(0)(5, 6) = 0.6f;

  CHECK(map.query(0, 10.0, 10.0) == doctest::Approx(0.2));
  CHECK(map.query(0, 12.0, 10.0) == doctest::Approx(0.6));
  CHECK(map.query(0, 11.0, 10.0) == doctest::Approx(0.4));  // midpoint
  CHECK(map.query(0, -1.0, 10.0) == 0.0);
  CHECK(map.query(0, 10.0, 40.0) == 0.0);
  CHECK(map.query(0, 400.0, 10.0) == 0.0);
}

TEST_CASE("fusing an all-zero field yields the all-zero map") {
  const PifField pif = blank_pif();
  const HighResMap map = fuse(pif);
  for (int t = 0; t < map.num_types(); ++t) {
    CHECK((map.plane(t) == 0.f).all());
  }
}

TEST_CASE("raising any confidence never decreases the fused map") {
  CounterRng rng(77);
  PifField pif = blank_pif();
  for (int n = 0; n < 30; ++n) {
    set_cell(pif, 0, rng.uniform_int(20), rng.uniform_int(20),
             static_cast<float>(rng.uniform(0.2, 0.9)),
             static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(-1, 1)),
             static_cast<float>(rng.uniform(0.3, 1.5)));
  }
  const HighResMap before = fuse(pif);
  pif.plane(0, pif::kC)(7, 7) =
      std::min(1.0f, pif.plane(0, pif::kC)(7, 7) + 0.3f);
  const HighResMap after = fuse(pif);
  CHECK((after.plane(0) >= before.plane(0) - 1e-6f).all());
}

TEST_CASE("argmax lands within half a raster cell of a lone target") {
  PifField pif = blank_pif();
  // generic off-raster target: (i+dx)*stride = (8 + 0.3103)*8 = 66.4824
  set_cell(pif, 0, 10, 8, 1.0f, 0.3103f, 0.2241f, 0.75f);
  const double tx = (8 + 0.3103) * 8.0;
  const double ty = (10 + 0.2241) * 8.0;
  const HighResMap map = fuse(pif);

  double best = -1;
  int bu = 0, bv = 0;
  for (int v = 0; v < map.raster_h(); ++v) {
    for (int u = 0; u < map.raster_w(); ++u) {
      if (map.plane(0)(v, u) > best) {
        best = map.plane(0)(v, u);
        bu = u;
        bv = v;
      }
    }
  }
  CHECK(std::abs(bu * 2.0 - tx) <= 1.0 + 1e-9);
  CHECK(std::abs(bv * 2.0 - ty) <= 1.0 + 1e-9);
}

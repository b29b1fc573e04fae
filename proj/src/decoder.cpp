#include "posefield/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace posefield {

int DecodedPose::present_count() const {
  int n = 0;
  for (const auto& j : joints) {
    if (j.present) ++n;
  }
  return n;
}

void DecodedPose::recompute_score() {
  // absent joints contribute zero, so incomplete poses rank below full ones
  double sum = 0.0;
  bool any = false;
  for (const auto& j : joints) {
    if (j.present) {
      sum += j.confidence;
      any = true;
    }
  }
  score = any ? sum / joints.size() : 0.0;
}

namespace {

// Plateaus resolve to their first cell in scan order: strict comparison
// against already-scanned neighbors, >= against the rest.
bool is_local_max(const Plane& p, int v, int u) {
  const float val = p(v, u);
  for (int dv = -1; dv <= 1; ++dv) {
    for (int du = -1; du <= 1; ++du) {
      if (dv == 0 && du == 0) continue;
      const int nv = v + dv;
      const int nu = u + du;
      if (nv < 0 || nv >= p.rows() || nu < 0 || nu >= p.cols()) continue;
      const float nval = p(nv, nu);
      const bool scanned_before = dv < 0 || (dv == 0 && du < 0);
      if (scanned_before ? (nval >= val) : (nval > val)) return false;
    }
  }
  return true;
}

double quadratic_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

namespace {

bool has_vector_support(const PifField& pif, int type, double x, double y,
                        double min_confidence) {
  const FieldGeometry& g = pif.geometry;
  const double fx = g.to_field(x);
  const double fy = g.to_field(y);
  const int i_lo = std::max(0, static_cast<int>(std::floor(fx)) - 4);
  const int i_hi = std::min(g.grid_w - 1, static_cast<int>(std::ceil(fx)) + 4);
  const int j_lo = std::max(0, static_cast<int>(std::floor(fy)) - 4);
  const int j_hi = std::min(g.grid_h - 1, static_cast<int>(std::ceil(fy)) + 4);
  const Plane& c = pif.plane(type, pif::kC);
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      if (c(j, i) < min_confidence) continue;
      const double tx =
          g.to_image(i + static_cast<double>(pif.plane(type, pif::kDx)(j, i)));
      const double ty =
          g.to_image(j + static_cast<double>(pif.plane(type, pif::kDy)(j, i)));
      const double sigma_px =
          std::max<double>(kSigmaMin, pif.plane(type, pif::kSigma)(j, i)) *
          g.stride;
      const double radius = std::max(2.0, sigma_px);
      if (std::hypot(tx - x, ty - y) <= radius) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Seed> seed_candidates(const HighResMap& highres,
                                  double seed_threshold,
                                  const PifField* support,
                                  double min_support_confidence) {
  std::vector<Seed> seeds;
  const double hr = highres.hr_stride();
  for (int t = 0; t < highres.num_types(); ++t) {
    const Plane& p = highres.plane(t);
    for (int v = 0; v < p.rows(); ++v) {
      for (int u = 0; u < p.cols(); ++u) {
        if (p(v, u) < seed_threshold) continue;
        if (!is_local_max(p, v, u)) continue;
        double du = 0.0, dv = 0.0;
        if (u > 0 && u < p.cols() - 1) {
          du = quadratic_offset(p(v, u - 1), p(v, u), p(v, u + 1));
        }
        if (v > 0 && v < p.rows() - 1) {
          dv = quadratic_offset(p(v - 1, u), p(v, u), p(v + 1, u));
        }
        const double x = (u + du) * hr;
        const double y = (v + dv) * hr;
        if (support &&
            !has_vector_support(*support, t, x, y, min_support_confidence)) {
          continue;
        }
        seeds.push_back(Seed{t, x, y, p(v, u)});
      }
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    return a.confidence > b.confidence;
  });
  return seeds;
}

double score_association(const AssociationCell& cell, double from_x,
                         double from_y, const HighResMap& highres,
                         int target_type, const DecoderConfig& config,
                         double stride_px) {
  const double dx = from_x - cell.x1;
  const double dy = from_y - cell.y1;
  const double dist = std::sqrt(dx * dx + dy * dy);
  double b = config.use_b_in_decoder ? cell.b1 : stride_px;
  b = std::max<double>(b, kBMin * stride_px);
  const double f2 = highres.query(target_type, cell.x2, cell.y2);
  return cell.c * std::exp(-dist / b) * f2;
}

namespace {

AssociationCell reconstruct_cell(const PafField& paf, int connection, int i,
                                 int j, bool swap_vectors) {
  const FieldGeometry& g = paf.geometry;
  AssociationCell cell;
  cell.c = paf.plane(connection, paf::kC)(j, i);
  const double x1 = g.to_image(i + static_cast<double>(
                                       paf.plane(connection, paf::kDx1)(j, i)));
  const double y1 = g.to_image(j + static_cast<double>(
                                       paf.plane(connection, paf::kDy1)(j, i)));
  const double b1 = paf.plane(connection, paf::kB1)(j, i) * g.stride;
  const double x2 = g.to_image(i + static_cast<double>(
                                       paf.plane(connection, paf::kDx2)(j, i)));
  const double y2 = g.to_image(j + static_cast<double>(
                                       paf.plane(connection, paf::kDy2)(j, i)));
  const double b2 = paf.plane(connection, paf::kB2)(j, i) * g.stride;
  if (!swap_vectors) {
    cell.x1 = x1; cell.y1 = y1; cell.b1 = b1;
    cell.x2 = x2; cell.y2 = y2; cell.b2 = b2;
  } else {
    cell.x1 = x2; cell.y1 = y2; cell.b1 = b2;
    cell.x2 = x1; cell.y2 = y1; cell.b2 = b1;
  }
  return cell;
}

}  // namespace

std::optional<AssociationProposal> best_association(
    const PafField& paf, int connection, double from_x, double from_y,
    const HighResMap& highres, int target_type, const DecoderConfig& config) {
  const FieldGeometry& g = paf.geometry;
  const double fx = g.to_field(from_x);
  const double fy = g.to_field(from_y);
  const double half = config.assoc_window / 2.0;
  const int i_lo = std::max(0, static_cast<int>(std::ceil(fx - half)));
  const int i_hi = std::min(g.grid_w - 1, static_cast<int>(std::floor(fx + half)));
  const int j_lo = std::max(0, static_cast<int>(std::ceil(fy - half)));
  const int j_hi = std::min(g.grid_h - 1, static_cast<int>(std::floor(fy + half)));

  const Plane& ac = paf.plane(connection, paf::kC);
  std::optional<AssociationProposal> best;
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      if (!(ac(j, i) > 0.f)) continue;
      // Either stored vector may be the near end; anchor on whichever is
      // closer to the query point.
      const AssociationCell fwd = reconstruct_cell(paf, connection, i, j, false);
      const double d_fwd = std::hypot(from_x - fwd.x1, from_y - fwd.y1);
      const double d_bwd = std::hypot(from_x - fwd.x2, from_y - fwd.y2);
      const AssociationCell cell =
          d_bwd < d_fwd ? reconstruct_cell(paf, connection, i, j, true) : fwd;
      const double s = score_association(cell, from_x, from_y, highres,
                                         target_type, config, g.stride);
      if (s <= 0.0) continue;
      if (!best || s > best->score) {
        best = AssociationProposal{s, cell.x2, cell.y2};
      }
    }
  }
  return best;
}

bool reverse_match(const PafField& paf, int connection, double source_x,
                   double source_y, int source_type, double proposed_x,
                   double proposed_y, const HighResMap& highres,
                   const DecoderConfig& config) {
  const auto rev = best_association(paf, connection, proposed_x, proposed_y,
                                    highres, source_type, config);
  if (!rev) return false;
  const double tol = config.reverse_match_tolerance * paf.geometry.stride;
  return std::hypot(rev->target_x - source_x, rev->target_y - source_y) <= tol;
}

namespace {

struct Move {
  double score = 0.0;
  int connection = 0;
  int source_type = 0;
  int target_type = 0;
  double tx = 0.0, ty = 0.0;
  bool reverse_checked = false;
};

struct MoveLess {
  bool operator()(const Move& a, const Move& b) const {
    if (a.score != b.score) return a.score < b.score;  // max-heap on score
    if (a.connection != b.connection) return a.connection > b.connection;
    if (a.target_type != b.target_type) return a.target_type > b.target_type;
    if (a.ty != b.ty) return a.ty > b.ty;
    return a.tx > b.tx;
  }
};

constexpr double kRequeueFloor = 1e-8;

}  // namespace

DecodedPose grow_pose(const Seed& seed, const PafField& paf,
                      const HighResMap& highres, const SkeletonSpec& skeleton,
                      const DecoderConfig& config,
                      std::vector<Placement>* placements, int pose_index,
                      double* association_total) {
  DecodedPose pose;
  std::priority_queue<Move, std::vector<Move>, MoveLess> frontier;

  auto place = [&](int type, double x, double y, double move_score) {
    DecodedJoint& joint = pose.joints[type];
    joint.x = x;
    joint.y = y;
    // the fused surface is an unnormalized sum, so cap the reported
    // confidence at 1
    joint.confidence = std::min(1.0, highres.query(type, x, y));
    joint.present = true;
    if (placements) {
      placements->push_back(Placement{pose_index, type, x, y, move_score});
    }
    if (association_total) *association_total += move_score;
    // frontier expansion: connections from this joint to unplaced types
    for (int ci = 0; ci < static_cast<int>(skeleton.connections.size()); ++ci) {
      const auto [a, b] = skeleton.connections[ci];
      int other = -1;
      if (a == type) other = b;
      else if (b == type) other = a;
      if (other < 0 || pose.joints[other].present) continue;
      const auto prop =
          best_association(paf, ci, x, y, highres, other, config);
      if (prop) {
        frontier.push(Move{prop->score, ci, type, other, prop->target_x,
                           prop->target_y});
      }
    }
  };

  place(seed.type, seed.x, seed.y, 0.0);

  while (!frontier.empty()) {
    Move move = frontier.top();
    frontier.pop();
    if (pose.joints[move.target_type].present) continue;
    const DecodedJoint& src = pose.joints[move.source_type];
    // soft rejection: a failed reverse match halves the priority once and
    // the move re-queues already checked, so competitors get a chance first
    if (!move.reverse_checked &&
        !reverse_match(paf, move.connection, src.x, src.y, move.source_type,
                       move.tx, move.ty, highres, config)) {
      move.score *= 0.5;
      move.reverse_checked = true;
      if (move.score >= kRequeueFloor) frontier.push(move);
      continue;
    }
    place(move.target_type, move.tx, move.ty, move.score);
  }

  // joints below the keypoint threshold are left absent
  for (auto& joint : pose.joints) {
    if (joint.present && joint.confidence < config.keypoint_threshold) {
      joint = DecodedJoint{};
    }
  }
  pose.recompute_score();
  return pose;
}

double scale_at(const PifField& pif, int type, double x, double y) {
  const FieldGeometry& g = pif.geometry;
  const double fx = g.to_field(x);
  const double fy = g.to_field(y);
  const int ci = std::clamp(static_cast<int>(std::lround(fx)), 0, g.grid_w - 1);
  const int cj = std::clamp(static_cast<int>(std::lround(fy)), 0, g.grid_h - 1);

  // prefer the nearest cell that actually carries a prediction; background
  // cells only hold the sigma floor
  const Plane& conf = pif.plane(type, pif::kC);
  const Plane& sigma = pif.plane(type, pif::kSigma);
  double best_d2 = -1.0;
  double best_sigma = sigma(cj, ci);
  for (int j = std::max(0, cj - 3); j <= std::min(g.grid_h - 1, cj + 3); ++j) {
    for (int i = std::max(0, ci - 3); i <= std::min(g.grid_w - 1, ci + 3);
         ++i) {
      if (!(conf(j, i) > 0.f)) continue;
      const double d2 = (fx - i) * (fx - i) + (fy - j) * (fy - j);
      if (best_d2 < 0.0 || d2 < best_d2) {
        best_d2 = d2;
        best_sigma = sigma(j, i);
      }
    }
  }
  return best_sigma;
}

namespace {

double suppression_radius(const PifField& pif, int type, double x, double y,
                          const DecoderConfig& config) {
  const double sigma_px = scale_at(pif, type, x, y) * pif.geometry.stride;
  return std::max(config.nms_scale_factor * sigma_px, config.nms_min_radius);
}

bool score_order(const DecodedPose& a, const DecodedPose& b) {
  return a.score > b.score;
}

}  // namespace

std::vector<DecodedPose> nms_keypoints(std::vector<DecodedPose> poses,
                                       const PifField& pif_scales,
                                       const DecoderConfig& config) {
  std::stable_sort(poses.begin(), poses.end(), score_order);

  struct Occupied {
    double x, y, radius;
  };
  std::array<std::vector<Occupied>, kNumKeypoints> occupancy;

  for (auto& pose : poses) {
    for (int t = 0; t < kNumKeypoints; ++t) {
      DecodedJoint& joint = pose.joints[t];
      if (!joint.present) continue;
      bool suppressed = false;
      for (const Occupied& occ : occupancy[t]) {
        if (std::hypot(joint.x - occ.x, joint.y - occ.y) <= occ.radius) {
          suppressed = true;
          break;
        }
      }
      if (suppressed) {
        joint = DecodedJoint{};
      } else {
        occupancy[t].push_back(Occupied{
            joint.x, joint.y,
            suppression_radius(pif_scales, t, joint.x, joint.y, config)});
      }
    }
    pose.recompute_score();
  }

  poses.erase(std::remove_if(poses.begin(), poses.end(),
                             [](const DecodedPose& p) {
                               return p.present_count() == 0;
                             }),
              poses.end());
  std::stable_sort(poses.begin(), poses.end(), score_order);
  return poses;
}

std::vector<DecodedPose> decode(const PifField& pif, const PafField& paf,
                                const SkeletonSpec& skeleton,
                                const DecoderConfig& config,
                                DecodeStats* stats) {
  if (pif.geometry != paf.geometry) {
    throw GeometryMismatchError("pif/paf geometry mismatch in decode");
  }

  const HighResMap highres = fuse(pif, config.fusion);
  const std::vector<Seed> seeds = seed_candidates(
      highres, config.seed_threshold, &pif, config.fusion.min_confidence);

  if (stats) {
    stats->seeds_total = static_cast<int>(seeds.size());
    for (int t = 0; t < pif.num_types; ++t) {
      stats->pif_cells_active +=
          (pif.plane(t, pif::kC) >= static_cast<float>(config.fusion.min_confidence))
              .count();
    }
    for (int t = 0; t < paf.num_types; ++t) {
      stats->paf_cells_active += (paf.plane(t, paf::kC) > 0.f).count();
    }
  }

  std::array<std::vector<std::pair<double, double>>, kNumKeypoints> placed;
  std::vector<DecodedPose> poses;

  for (const Seed& seed : seeds) {
    bool claimed = false;
    for (const auto& [px, py] : placed[seed.type]) {
      const double radius =
          suppression_radius(pif, seed.type, px, py, config);
      if (std::hypot(seed.x - px, seed.y - py) <= radius) {
        claimed = true;
        break;
      }
    }
    if (claimed) {
      if (stats) ++stats->seeds_claimed;
      continue;
    }
    DecodedPose pose = grow_pose(
        seed, paf, highres, skeleton, config,
        stats ? &stats->placements : nullptr, static_cast<int>(poses.size()),
        stats ? &stats->association_total : nullptr);
    if (pose.present_count() == 0) continue;
    for (int t = 0; t < kNumKeypoints; ++t) {
      if (pose.joints[t].present) {
        placed[t].emplace_back(pose.joints[t].x, pose.joints[t].y);
      }
    }
    poses.push_back(std::move(pose));
  }

  poses = nms_keypoints(std::move(poses), pif, config);
  if (static_cast<int>(poses.size()) > config.max_poses) {
    poses.resize(config.max_poses);
  }
  return poses;
}

}  // namespace posefield

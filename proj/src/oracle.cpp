#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "posefield/decoder.hpp"

namespace posefield {

namespace {

struct Candidate {
  int type;
  double x, y;
};

// Best association anchored near (fx, fy) whose proposal lands on the given
// candidate position. This ties edge weights to concrete field evidence: a
// pair of candidates is connectable only if some cell proposes that exact
// landing.
double directional_score(const PafField& paf, int connection, double fx,
                         double fy, const HighResMap& highres, int target_type,
                         double land_x, double land_y, double landing_tol,
                         const DecoderConfig& config) {
  const FieldGeometry& g = paf.geometry;
  const double cfx = g.to_field(fx);
  const double cfy = g.to_field(fy);
  const double half = config.assoc_window / 2.0;
  const int i_lo = std::max(0, static_cast<int>(std::ceil(cfx - half)));
  const int i_hi =
      std::min(g.grid_w - 1, static_cast<int>(std::floor(cfx + half)));
  const int j_lo = std::max(0, static_cast<int>(std::ceil(cfy - half)));
  const int j_hi =
      std::min(g.grid_h - 1, static_cast<int>(std::floor(cfy + half)));

  const Plane& ac = paf.plane(connection, paf::kC);
  double best = 0.0;
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      if (!(ac(j, i) > 0.f)) continue;
      for (int swap = 0; swap < 2; ++swap) {
        AssociationCell cell;
        const double x1 = g.to_image(
            i + static_cast<double>(paf.plane(connection, paf::kDx1)(j, i)));
        const double y1 = g.to_image(
            j + static_cast<double>(paf.plane(connection, paf::kDy1)(j, i)));
        const double b1 = paf.plane(connection, paf::kB1)(j, i) * g.stride;
        const double x2 = g.to_image(
            i + static_cast<double>(paf.plane(connection, paf::kDx2)(j, i)));
        const double y2 = g.to_image(
            j + static_cast<double>(paf.plane(connection, paf::kDy2)(j, i)));
        const double b2 = paf.plane(connection, paf::kB2)(j, i) * g.stride;
        cell.c = ac(j, i);
        if (swap == 0) {
          cell.x1 = x1; cell.y1 = y1; cell.b1 = b1;
          cell.x2 = x2; cell.y2 = y2; cell.b2 = b2;
        } else {
          cell.x1 = x2; cell.y1 = y2; cell.b1 = b2;
          cell.x2 = x1; cell.y2 = y1; cell.b2 = b1;
        }
        if (std::hypot(cell.x2 - land_x, cell.y2 - land_y) > landing_tol) {
          continue;
        }
        const double s = score_association(cell, fx, fy, highres, target_type,
                                           config, g.stride);
        best = std::max(best, s);
      }
    }
  }
  return best;
}

struct Plan {
  std::uint64_t mask = 0;             // global candidate indices in use
  double score = 0.0;                 // max spanning tree total
  std::vector<std::pair<int, int>> members;  // (type, global candidate idx)
};

}  // namespace

std::vector<DecodedPose> brute_force_decode(const PifField& pif,
                                            const PafField& paf,
                                            const SkeletonSpec& skeleton,
                                            const DecoderConfig& config,
                                            const OracleLimits& limits,
                                            double* total_score) {
  if (pif.geometry != paf.geometry) {
    throw GeometryMismatchError("pif/paf geometry mismatch in oracle");
  }

  const HighResMap highres = fuse(pif, config.fusion);
  const std::vector<Seed> seeds = seed_candidates(
      highres, config.seed_threshold, &pif, config.fusion.min_confidence);

  std::array<int, kNumKeypoints> seeds_per_type{};
  for (const Seed& s : seeds) ++seeds_per_type[s.type];
  for (int t = 0; t < kNumKeypoints; ++t) {
    if (seeds_per_type[t] > limits.max_seeds_per_type) {
      throw OracleLimitError("too many seeds for keypoint type " +
                             std::to_string(t));
    }
  }

  // The candidate space is every joint the greedy decoder actually placed
  // plus every seed; this contains every greedy outcome by construction.
  DecodeStats stats;
  (void)decode(pif, paf, skeleton, config, &stats);

  std::vector<Candidate> cands;
  std::array<std::vector<int>, kNumKeypoints> by_type;
  for (const Placement& p : stats.placements) {
    by_type[p.type].push_back(static_cast<int>(cands.size()));
    cands.push_back(Candidate{p.type, p.x, p.y});
  }
  for (const Seed& s : seeds) {
    bool duplicate = false;
    for (int idx : by_type[s.type]) {
      if (std::hypot(cands[idx].x - s.x, cands[idx].y - s.y) <=
          limits.merge_tolerance) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      by_type[s.type].push_back(static_cast<int>(cands.size()));
      cands.push_back(Candidate{s.type, s.x, s.y});
    }
  }

  std::vector<int> active_types;
  for (int t = 0; t < kNumKeypoints; ++t) {
    if (!by_type[t].empty()) active_types.push_back(t);
  }
  if (static_cast<int>(active_types.size()) > limits.max_active_types) {
    throw OracleLimitError("instance has " +
                           std::to_string(active_types.size()) +
                           " active keypoint types");
  }
  if (cands.size() > 63) {
    throw OracleLimitError("candidate set too large for enumeration");
  }
  if (cands.empty()) {
    if (total_score) *total_score = 0.0;
    return {};
  }

  // Pairwise edge weights along skeleton connections between active types.
  struct Edge {
    int type_a, type_b;
    std::vector<std::vector<double>> w;  // [ia][ib] over by_type lists
  };
  std::vector<Edge> edges;
  for (int ci = 0; ci < static_cast<int>(skeleton.connections.size()); ++ci) {
    const auto [a, b] = skeleton.connections[ci];
    if (by_type[a].empty() || by_type[b].empty()) continue;
    Edge e;
    e.type_a = a;
    e.type_b = b;
    e.w.assign(by_type[a].size(),
               std::vector<double>(by_type[b].size(), 0.0));
    for (size_t ia = 0; ia < by_type[a].size(); ++ia) {
      for (size_t ib = 0; ib < by_type[b].size(); ++ib) {
        const Candidate& ca = cands[by_type[a][ia]];
        const Candidate& cb = cands[by_type[b][ib]];
        const double fwd = directional_score(
            paf, ci, ca.x, ca.y, highres, b, cb.x, cb.y,
            limits.landing_tolerance, config);
        const double bwd = directional_score(
            paf, ci, cb.x, cb.y, highres, a, ca.x, ca.y,
            limits.landing_tolerance, config);
        e.w[ia][ib] = std::max(fwd, bwd);
      }
    }
    edges.push_back(std::move(e));
  }

  long nodes = 0;
  auto step = [&]() {
    if (++nodes > limits.max_nodes) {
      throw OracleLimitError("enumeration exceeded the node budget");
    }
  };

  // Enumerate all single-pose plans: one candidate or none per active type,
  // scored by the max spanning tree over positive edges; disconnected
  // selections are invalid.
  const int n_types = static_cast<int>(active_types.size());
  std::vector<int> choice(n_types, -1);  // index into by_type[type], -1 absent
  std::vector<Plan> plans;

  auto evaluate_plan = [&]() {
    std::vector<int> present;  // positions in active_types
    for (int k = 0; k < n_types; ++k) {
      if (choice[k] >= 0) present.push_back(k);
    }
    if (present.size() < 2) return;

    auto choice_of_type = [&](int type) -> int {
      for (int k = 0; k < n_types; ++k) {
        if (active_types[k] == type) return choice[k];
      }
      return -1;
    };

    // collect the positive edges among the selection
    struct Pick {
      int ka, kb;
      double w;
    };
    std::vector<Pick> picks;
    for (const Edge& e : edges) {
      const int ia = choice_of_type(e.type_a);
      const int ib = choice_of_type(e.type_b);
      if (ia < 0 || ib < 0) continue;
      if (e.w[ia][ib] > 0.0) {
        int ka = -1, kb = -1;
        for (int k = 0; k < n_types; ++k) {
          if (active_types[k] == e.type_a) ka = k;
          if (active_types[k] == e.type_b) kb = k;
        }
        picks.push_back(Pick{ka, kb, e.w[ia][ib]});
      }
    }

    // max spanning tree by Prim from the first present node
    std::vector<char> in_tree(n_types, 0);
    in_tree[present[0]] = 1;
    double score = 0.0;
    for (size_t added = 1; added < present.size(); ++added) {
      double best_w = -1.0;
      int best_node = -1;
      for (const Pick& p : picks) {
        if (in_tree[p.ka] == in_tree[p.kb]) continue;
        if (p.w > best_w) {
          best_w = p.w;
          best_node = in_tree[p.ka] ? p.kb : p.ka;
        }
      }
      if (best_node < 0) return;  // disconnected
      in_tree[best_node] = 1;
      score += best_w;
    }
    if (score <= 0.0) return;

    Plan plan;
    plan.score = score;
    for (int k = 0; k < n_types; ++k) {
      if (choice[k] < 0) continue;
      const int global = by_type[active_types[k]][choice[k]];
      plan.mask |= (1ULL << global);
      plan.members.emplace_back(active_types[k], global);
    }
    plans.push_back(std::move(plan));
  };

  auto enumerate = [&](auto&& self, int k) -> void {
    step();
    if (k == n_types) {
      evaluate_plan();
      return;
    }
    const int type = active_types[k];
    choice[k] = -1;
    self(self, k + 1);
    for (size_t c = 0; c < by_type[type].size(); ++c) {
      choice[k] = static_cast<int>(c);
      self(self, k + 1);
    }
    choice[k] = -1;
  };
  enumerate(enumerate, 0);

  // Plans never span two connected components of the candidate graph, so
  // the packing decomposes: pick the best disjoint plan set per component
  // and sum.
  std::vector<int> parent(cands.size());
  for (size_t i = 0; i < cands.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](auto&& self, int a) -> int {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Edge& e : edges) {
    for (size_t ia = 0; ia < by_type[e.type_a].size(); ++ia) {
      for (size_t ib = 0; ib < by_type[e.type_b].size(); ++ib) {
        if (e.w[ia][ib] > 0.0) {
          parent[find(find, by_type[e.type_a][ia])] =
              find(find, by_type[e.type_b][ib]);
        }
      }
    }
  }
  std::vector<std::vector<int>> component_plans(cands.size());
  for (size_t pi = 0; pi < plans.size(); ++pi) {
    component_plans[find(find, plans[pi].members.front().second)].push_back(
        static_cast<int>(pi));
  }

  double best_total = 0.0;
  std::vector<int> best_set;
  for (auto& plan_ids : component_plans) {
    if (plan_ids.empty()) continue;
    std::sort(plan_ids.begin(), plan_ids.end(), [&](int a, int b) {
      return plans[a].score > plans[b].score;
    });
    std::vector<double> suffix(plan_ids.size() + 1, 0.0);
    for (int i = static_cast<int>(plan_ids.size()) - 1; i >= 0; --i) {
      suffix[i] = suffix[i + 1] + plans[plan_ids[i]].score;
    }

    double comp_best = 0.0;
    std::vector<int> comp_set, current;
    auto pack = [&](auto&& self, size_t idx, std::uint64_t used,
                    double score) -> void {
      step();
      if (score > comp_best) {
        comp_best = score;
        comp_set = current;
      }
      if (idx >= plan_ids.size() || score + suffix[idx] <= comp_best) return;
      if ((plans[plan_ids[idx]].mask & used) == 0) {
        current.push_back(plan_ids[idx]);
        self(self, idx + 1, used | plans[plan_ids[idx]].mask,
             score + plans[plan_ids[idx]].score);
        current.pop_back();
      }
      self(self, idx + 1, used, score);
    };
    pack(pack, 0, 0, 0.0);
    best_total += comp_best;
    best_set.insert(best_set.end(), comp_set.begin(), comp_set.end());
  }

  std::vector<DecodedPose> out;
  for (int idx : best_set) {
    DecodedPose pose;
    for (const auto& [type, global] : plans[idx].members) {
      DecodedJoint& joint = pose.joints[type];
      joint.x = cands[global].x;
      joint.y = cands[global].y;
      joint.confidence = std::min(1.0, highres.query(type, joint.x, joint.y));
      joint.present = true;
    }
    pose.recompute_score();
    out.push_back(std::move(pose));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const DecodedPose& a, const DecodedPose& b) {
                     return a.score > b.score;
                   });
  if (total_score) *total_score = best_total;
  return out;
}

}  // namespace posefield

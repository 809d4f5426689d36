#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "brepmatch/matching.hpp"
#include "brepmatch/rng.hpp"
#include "brepmatch/synth/model.hpp"

namespace brepmatch::synth {

enum class EditKind { HolePunch, BossExtrude, Chamfer, FilletLike, FaceMove, FaceScale };

inline std::string_view edit_kind_name(EditKind k) {
  switch (k) {
    case EditKind::HolePunch: return "hole_punch";
    case EditKind::BossExtrude: return "boss_extrude";
    case EditKind::Chamfer: return "chamfer";
    case EditKind::FilletLike: return "fillet_like";
    case EditKind::FaceMove: return "face_move";
    case EditKind::FaceScale: return "face_scale";
  }
  return "?";
}

// Entity bookkeeping of one edit. Entities are tracked by persistent name, so
// every surviving entity maps to exactly one pre-edit entity.
struct TrackedEdit {
  EditKind kind = EditKind::FaceMove;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::pair<EntityRef, EntityRef>> identity;  // (post, pre), sorted by post
  std::vector<EntityRef> created;                         // post-edit refs
  std::vector<EntityRef> destroyed;                       // pre-edit refs
};

struct EditResult {
  SynthModel model;
  TrackedEdit edit;
};

inline TrackedEdit track(const SynthModel& pre, const SynthModel& post, EditKind kind, nlohmann::json params) {
  TrackedEdit t;
  t.kind = kind;
  t.parameters = std::move(params);
  for (Kind k : kAllKinds) {
    const auto& a = pre.names(k);
    const auto& b = post.names(k);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (auto i = pre.find(k, b[j])) t.identity.push_back({{k, j}, {k, *i}});
      else t.created.push_back({k, j});
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!post.find(k, a[i])) t.destroyed.push_back({k, i});
  }
  return t;
}

// Ground truth between two models of one edit chain: entities with equal
// persistent names, in ascending original order.
inline Matching name_matching(const SynthModel& orig, const SynthModel& var) {
  Matching m;
  for (Kind k : kAllKinds) {
    const auto& a = orig.names(k);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (auto j = var.find(k, a[i])) m.add({k, i}, {k, *j}, Provenance::GroundTruth);
  }
  return m;
}

namespace gen_detail {

inline double face_area(const SynthModel& m, const std::string& name) {
  auto i = m.find(Kind::Face, name);
  return i ? m.graph.faces[*i].geom.measure : 0.0;
}

inline int pick_root_face(const SynthModel& m, Rng& rng) {
  std::vector<double> w;
  for (int f = 0; f < 6; ++f) w.push_back(face_area(m, root_face_name(f)));
  return static_cast<int>(rng.weighted(w));
}

inline double extent(const Block& b, int axis) { return b.hi[axis] - b.lo[axis]; }

inline double feature_height(const Block& b, Rng& rng) {
  const double mean = (extent(b, 0) + extent(b, 1) + extent(b, 2)) / 3.0;
  return rng.uniform(0.1, 0.4) * mean;
}

inline RectBoss random_rect_boss(const ModelSpec& s, int host, Rng& rng) {
  const Block& b = s.block;
  RectBoss r;
  r.id = s.next_id;
  r.host = host;
  for (int ax : {u_axis(host), v_axis(host)}) {
    const double w = extent(b, ax);
    const double size = rng.uniform(0.15, 0.5) * w;
    const double start = rng.uniform(b.lo[ax] + 0.05 * w, b.hi[ax] - 0.05 * w - size);
    r.lo[ax] = start;
    r.hi[ax] = start + size;
  }
  r.height = feature_height(b, rng);
  return r;
}

inline CylBoss random_cyl_boss(const ModelSpec& s, int host, Rng& rng) {
  const Block& b = s.block;
  const int u = u_axis(host), v = v_axis(host);
  const double wmin = std::min(extent(b, u), extent(b, v));
  CylBoss c;
  c.id = s.next_id;
  c.host = host;
  c.radius = rng.uniform(0.08, 0.25) * wmin;
  c.cu = rng.uniform(b.lo[u] + c.radius, b.hi[u] - c.radius);
  c.cv = rng.uniform(b.lo[v] + c.radius, b.hi[v] - c.radius);
  c.height = feature_height(b, rng);
  return c;
}

inline Hole random_hole(const ModelSpec& s, int host, Rng& rng) {
  const Block& b = s.block;
  const int u = u_axis(host), v = v_axis(host);
  const double wmin = std::min(extent(b, u), extent(b, v));
  Hole h;
  h.id = s.next_id;
  h.host = host;
  h.radius = rng.uniform(0.05, 0.2) * wmin;
  h.cu = rng.uniform(b.lo[u] + h.radius, b.hi[u] - h.radius);
  h.cv = rng.uniform(b.lo[v] + h.radius, b.hi[v] - h.radius);
  h.through = rng.coin();
  h.depth = rng.uniform(0.2, 0.7) * extent(b, face_axis(host));
  return h;
}

struct BoxRef {
  int box;
  Vec3 lo, hi;
  int bottom;  // excluded face, -1 for the block
};

inline std::vector<BoxRef> bevel_boxes(const ModelSpec& s) {
  std::vector<BoxRef> out{{0, s.block.lo, s.block.hi, -1}};
  for (const auto& r : s.rect_bosses) {
    const auto [lo, hi] = rect_boss_box(s.block, r);
    out.push_back({r.id, lo, hi, r.host ^ 1});
  }
  return out;
}

inline std::optional<Bevel> random_bevel(const ModelSpec& s, BevelStyle style, Rng& rng) {
  struct Cand {
    BoxRef box;
    int fa, fb;
    double length;
  };
  std::vector<Cand> cands;
  std::vector<double> w;
  for (const auto& box : bevel_boxes(s)) {
    for (int fa = 0; fa < 6; ++fa)
      for (int fb = fa + 1; fb < 6; ++fb) {
        if (!valid_box_edge(fa, fb) || fa == box.bottom || fb == box.bottom) continue;
        bool clash = false;
        for (const auto& bv : s.bevels)
          if (bv.box == box.box && box_edges_share_corner(fa, fb, bv.fa, bv.fb)) clash = true;
        if (clash) continue;
        const int axis = 3 - face_axis(fa) - face_axis(fb);
        const double len = box.hi[axis] - box.lo[axis];
        cands.push_back({box, fa, fb, len});
        w.push_back(len * (box.box == 0 ? 1.0 : 0.5));
      }
  }
  if (cands.empty()) return std::nullopt;
  const Cand& c = cands[rng.weighted(w)];
  Bevel bv;
  bv.id = s.next_id;
  bv.box = c.box.box;
  bv.fa = c.fa;
  bv.fb = c.fb;
  bv.style = style;
  const double room = std::min(c.box.hi[face_axis(c.fa)] - c.box.lo[face_axis(c.fa)],
                               c.box.hi[face_axis(c.fb)] - c.box.lo[face_axis(c.fb)]);
  bv.size = rng.uniform(0.05, 0.2) * room;
  return bv;
}

}  // namespace gen_detail

// Block with 0-3 rectangular or cylindrical bosses.
inline SynthModel generate_base_model(std::uint64_t seed, const std::string& model_id = "base") {
  Rng rng(mix_seed(seed, 0xB10C));
  ModelSpec s;
  for (int k = 0; k < 3; ++k) {
    const double e = rng.uniform(20.0, 100.0);
    s.block.lo[k] = rng.uniform(-50.0, 50.0);
    s.block.hi[k] = s.block.lo[k] + e;
  }
  SynthModel m = emit(s, model_id);
  const int n_features = rng.integer(0, 3);
  for (int f = 0; f < n_features; ++f) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      ModelSpec t = m.spec;
      const int host = gen_detail::pick_root_face(m, rng);
      if (rng.coin()) t.rect_bosses.push_back(gen_detail::random_rect_boss(t, host, rng));
      else t.cyl_bosses.push_back(gen_detail::random_cyl_boss(t, host, rng));
      ++t.next_id;
      try {
        m = emit(t, model_id);
        break;
      } catch (const RejectedEdit&) {
      }
    }
  }
  return m;
}

inline EditResult finish_edit(const SynthModel& pre, ModelSpec spec, EditKind kind, nlohmann::json params) {
  SynthModel post = emit(spec, pre.graph.model_id);
  TrackedEdit t = track(pre, post, kind, std::move(params));
  return {std::move(post), std::move(t)};
}

inline EditResult apply_hole(const SynthModel& m, Hole h) {
  ModelSpec s = m.spec;
  h.id = s.next_id++;
  s.holes.push_back(h);
  return finish_edit(m, std::move(s), EditKind::HolePunch,
                    {{"host", root_face_name(h.host)}, {"radius", h.radius}, {"through", h.through}, {"depth", h.depth}});
}

inline EditResult apply_rect_boss(const SynthModel& m, RectBoss r) {
  ModelSpec s = m.spec;
  r.id = s.next_id++;
  s.rect_bosses.push_back(r);
  return finish_edit(m, std::move(s), EditKind::BossExtrude,
                     {{"host", root_face_name(r.host)}, {"shape", "rect"}, {"height", r.height}});
}

inline EditResult apply_cyl_boss(const SynthModel& m, CylBoss c) {
  ModelSpec s = m.spec;
  c.id = s.next_id++;
  s.cyl_bosses.push_back(c);
  return finish_edit(m, std::move(s), EditKind::BossExtrude,
                     {{"host", root_face_name(c.host)}, {"shape", "circle"}, {"radius", c.radius}, {"height", c.height}});
}

inline EditResult apply_bevel(const SynthModel& m, Bevel b) {
  ModelSpec s = m.spec;
  b.id = s.next_id++;
  s.bevels.push_back(b);
  const EditKind kind = b.style == BevelStyle::Chamfer ? EditKind::Chamfer : EditKind::FilletLike;
  return finish_edit(m, std::move(s), kind, {{"box", b.box}, {"fa", b.fa}, {"fb", b.fb}, {"size", b.size}});
}

// Translates a planar face along its outward normal by `distance`. Movable
// faces: block faces, rectangular boss sides and tops, cylinder boss tops and
// blind-hole bottoms.
inline EditResult apply_face_move(const SynthModel& m, const std::string& face, double distance) {
  ModelSpec s = m.spec;
  bool found = false;
  for (int f = 0; f < 6 && !found; ++f)
    if (root_face_name(f) == face) {
      if (f % 2) s.block.hi[face_axis(f)] += distance;
      else s.block.lo[face_axis(f)] -= distance;
      found = true;
    }
  for (auto& r : s.rect_bosses)
    for (int g = 0; g < 6 && !found; ++g) {
      if (g == (r.host ^ 1) || rect_boss_face_name(r, g) != face) continue;
      if (g == r.host) r.height += distance;
      else if (g % 2) r.hi[face_axis(g)] += distance;
      else r.lo[face_axis(g)] -= distance;
      found = true;
    }
  for (auto& c : s.cyl_bosses)
    if (!found && "C" + std::to_string(c.id) + "top" == face) {
      c.height += distance;
      found = true;
    }
  for (auto& h : s.holes)
    if (!found && !h.through && "H" + std::to_string(h.id) + "bot" == face) {
      h.depth -= distance;
      found = true;
    }
  if (!found) throw RejectedEdit("face '" + face + "' cannot be moved");
  return finish_edit(m, std::move(s), EditKind::FaceMove, {{"face", face}, {"distance", distance}});
}

// Scales the radius of cylinder boss "C<id>" or hole "H<id>".
inline EditResult apply_face_scale(const SynthModel& m, const std::string& feature, double factor) {
  if (!(factor > 0.0)) throw RejectedEdit("scale factor must be positive");
  ModelSpec s = m.spec;
  bool found = false;
  for (auto& c : s.cyl_bosses)
    if ("C" + std::to_string(c.id) == feature) {
      c.radius *= factor;
      found = true;
    }
  for (auto& h : s.holes)
    if ("H" + std::to_string(h.id) == feature) {
      h.radius *= factor;
      found = true;
    }
  if (!found) throw RejectedEdit("no cylindrical feature '" + feature + "'");
  return finish_edit(m, std::move(s), EditKind::FaceScale, {{"feature", feature}, {"factor", factor}});
}

// One random constructive edit; host faces are drawn with probability
// proportional to area, bevelled edges proportional to length. Throws
// NoEligibleTarget when no valid placement is found.
inline EditResult apply_constructive(const SynthModel& m, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xC0175));
  const std::size_t choice = rng.weighted({0.3, 0.3, 0.2, 0.2});
  for (int attempt = 0; attempt < 25; ++attempt) {
    try {
      switch (choice) {
        case 0: return apply_hole(m, gen_detail::random_hole(m.spec, gen_detail::pick_root_face(m, rng), rng));
        case 1: {
          const int host = gen_detail::pick_root_face(m, rng);
          if (rng.coin()) return apply_rect_boss(m, gen_detail::random_rect_boss(m.spec, host, rng));
          return apply_cyl_boss(m, gen_detail::random_cyl_boss(m.spec, host, rng));
        }
        default: {
          auto bv = gen_detail::random_bevel(m.spec, choice == 2 ? BevelStyle::Chamfer : BevelStyle::FilletLike, rng);
          if (!bv) throw NoEligibleTarget("no edge left to bevel");
          return apply_bevel(m, *bv);
        }
      }
    } catch (const RejectedEdit&) {
    }
  }
  throw NoEligibleTarget("no valid placement found");
}

inline std::vector<std::string> movable_faces(const SynthModel& m) {
  std::vector<std::string> out;
  for (int f = 0; f < 6; ++f) out.push_back(root_face_name(f));
  for (const auto& r : m.spec.rect_bosses)
    for (int g = 0; g < 6; ++g)
      if (g != (r.host ^ 1)) out.push_back(rect_boss_face_name(r, g));
  for (const auto& c : m.spec.cyl_bosses) out.push_back("C" + std::to_string(c.id) + "top");
  for (const auto& h : m.spec.holes)
    if (!h.through) out.push_back("H" + std::to_string(h.id) + "bot");
  return out;
}

// One random deformation: a face move by 5-40% of the model extent along the
// face normal, or (when cylindrical features exist, 30%) a radius scale.
// Throws RejectedEdit when the result is invalid.
inline EditResult apply_deformation(const SynthModel& m, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xDEF0));
  std::vector<std::string> cyl;
  for (const auto& c : m.spec.cyl_bosses) cyl.push_back("C" + std::to_string(c.id));
  for (const auto& h : m.spec.holes) cyl.push_back("H" + std::to_string(h.id));
  if (!cyl.empty() && rng.coin(0.3)) {
    const std::string& f = cyl[rng.index(cyl.size())];
    double factor = rng.uniform(0.6, 1.3);
    if (std::abs(factor - 1.0) < 0.1) factor = factor < 1.0 ? 0.9 : 1.1;
    return apply_face_scale(m, f, factor);
  }
  const auto faces = movable_faces(m);
  std::vector<double> w;
  for (const auto& f : faces) w.push_back(gen_detail::face_area(m, f));
  const std::string& face = faces[rng.weighted(w)];
  const auto& g = m.graph.faces[*m.find(Kind::Face, face)].geom;
  const Vec3 n = param_vec(g.params, 3);
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(n[k]) > std::abs(n[axis])) axis = k;
  const double ext = m.graph.bbox_max[axis] - m.graph.bbox_min[axis];
  const double dist = rng.uniform(0.05, 0.4) * ext * (rng.coin() ? 1.0 : -1.0);
  return apply_face_move(m, face, dist);
}

}  // namespace brepmatch::synth

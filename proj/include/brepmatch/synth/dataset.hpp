#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "brepmatch/brep_io.hpp"
#include "brepmatch/match_io.hpp"
#include "brepmatch/rng.hpp"
#include "brepmatch/synth/edits.hpp"

namespace brepmatch {

enum class Mix { Complete, DeformOnly, ConstructOnly };

inline Mix mix_from_name(std::string_view s) {
  if (s == "complete") return Mix::Complete;
  if (s == "deform" || s == "deformations_only") return Mix::DeformOnly;
  if (s == "construct" || s == "constructive_only") return Mix::ConstructOnly;
  throw ValidationError("unknown mix '" + std::string(s) + "'");
}

// One (original, variant, ground truth) triple.
struct PairSample {
  std::string orig_id;
  std::string upd_id;
  std::shared_ptr<const BRepGraph> orig;
  std::shared_ptr<const BRepGraph> upd;
  Matching truth;
};

struct Split {
  std::vector<std::string> train, val, test;
};

struct Dataset {
  std::vector<PairSample> samples;
  Split split;

  std::vector<const PairSample*> subset(const std::vector<std::string>& ids) const {
    std::vector<const PairSample*> out;
    for (const auto& s : samples)
      if (std::find(ids.begin(), ids.end(), s.orig_id) != ids.end()) out.push_back(&s);
    return out;
  }
};


inline std::string model_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%04zu", i);
  return buf;
}

// Split by original model, 80/10/10 (val and test get round(n/10) each).
inline Split split_models(std::vector<std::string> ids, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5011));
  rng.shuffle(ids);
  const std::size_t tenth = static_cast<std::size_t>(std::lround(static_cast<double>(ids.size()) / 10.0));
  Split s;
  s.val.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(tenth));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(tenth), ids.begin() + static_cast<std::ptrdiff_t>(2 * tenth));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(2 * tenth), ids.end());
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

// Applies `n_def` deformations then `n_con` constructive edits; each edit
// gets up to 20 seeds before it is skipped. Returns the number applied.
inline int apply_edit_chain(synth::SynthModel& m, int n_def, int n_con, std::uint64_t seed) {
  int applied = 0;
  for (int op = 0; op < n_def + n_con; ++op) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(op) * 64 + static_cast<std::uint64_t>(attempt));
      try {
        m = (op < n_def ? synth::apply_deformation(m, s) : synth::apply_constructive(m, s)).model;
        ++applied;
        break;
      } catch (const RejectedEdit&) {
      } catch (const NoEligibleTarget&) {
      }
    }
  }
  return applied;
}

// Generates n_models originals with up to `variants` tracked variants each.
// Everything derives from `seed`.
inline Dataset generate_dataset(std::size_t n_models, int variants, Mix mix, std::uint64_t seed) {
  if (n_models < 10) throw ValidationError("at least 10 models are required");
  if (variants < 1) throw ValidationError("at least one variant per model is required");
  Dataset ds;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n_models; ++i) {
    const std::string id = model_name(i);
    ids.push_back(id);
    const std::uint64_t mseed = mix_seed(seed, i);
    const synth::SynthModel base = synth::generate_base_model(mseed, id);
    auto orig = std::make_shared<const BRepGraph>(base.graph);
    int kept = 0;
    for (int k = 0; k < variants; ++k) {
      const std::uint64_t vseed = mix_seed(mseed, 1000 + static_cast<std::uint64_t>(k));
      Rng rng(vseed);
      int n_def = 0, n_con = 0;
      switch (mix) {
        case Mix::DeformOnly: n_def = rng.integer(1, 2); break;
        case Mix::ConstructOnly: n_con = rng.integer(1, 3); break;
        case Mix::Complete:
          n_def = rng.integer(0, 2);
          n_con = rng.integer(0, 3);
          if (n_def + n_con == 0) n_con = 1;
          break;
      }
      synth::SynthModel var = base;
      if (apply_edit_chain(var, n_def, n_con, rng.fork()) == 0) continue;
      const std::string vid = id + "_" + std::to_string(kept++);
      var.graph.model_id = vid;
      PairSample s;
      s.orig_id = id;
      s.upd_id = vid;
      s.orig = orig;
      s.truth = synth::name_matching(base, var);
      s.upd = std::make_shared<const BRepGraph>(std::move(var.graph));
      ds.samples.push_back(std::move(s));
    }
  }
  ds.split = split_models(ids, seed);
  return ds;
}

inline json split_to_json(const Split& s) { return {{"train", s.train}, {"val", s.val}, {"test", s.test}}; }

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << text;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"originals", "variants", "matches"}) fs::create_directories(dir / sub);
  std::string last;
  for (const auto& s : ds.samples) {
    if (s.orig_id != last) {
      write_text(dir / "originals" / (s.orig_id + ".json"), serialize_brep(*s.orig));
      last = s.orig_id;
    }
    write_text(dir / "variants" / (s.upd_id + ".json"), serialize_brep(*s.upd));
    MatchRecord r{s.orig_id, s.upd_id, std::nullopt, s.truth, {}};
    write_text(dir / "matches" / (s.upd_id + ".json"), match_record_to_json(r).dump() + "\n");
  }
  write_text(dir / "split.json", split_to_json(ds.split).dump() + "\n");
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream sin(dir / "split.json");
  if (!sin) throw ValidationError("missing split.json in " + dir.string());
  json sj;
  try {
    sj = json::parse(sin);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("split.json: ") + e.what());
  }
  Dataset ds;
  try {
    ds.split.train = sj.at("train").get<std::vector<std::string>>();
    ds.split.val = sj.at("val").get<std::vector<std::string>>();
    ds.split.test = sj.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("split.json: ") + e.what());
  }
  std::vector<fs::path> matches;
  for (const auto& e : fs::directory_iterator(dir / "matches")) matches.push_back(e.path());
  std::sort(matches.begin(), matches.end());
  std::map<std::string, std::shared_ptr<const BRepGraph>> originals;
  for (const auto& p : matches) {
    MatchRecord r = load_match_record(p.string());
    auto& orig = originals[r.orig_model];
    if (!orig) orig = std::make_shared<const BRepGraph>(load_brep_file((dir / "originals" / (r.orig_model + ".json")).string()));
    PairSample s;
    s.orig_id = r.orig_model;
    s.upd_id = r.upd_model;
    s.orig = orig;
    s.upd = std::make_shared<const BRepGraph>(load_brep_file((dir / "variants" / (r.upd_model + ".json")).string()));
    s.truth = std::move(r.matching);
    const auto bad = check_matching(s.truth, *s.orig, *s.upd);
    if (!bad.empty()) throw ValidationError(p.string() + ": " + bad.front());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace brepmatch

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "brepmatch/harness.hpp"
#include "brepmatch/train.hpp"

namespace bm = brepmatch;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw bm::ValidationError("bad threshold '" + item + "'");
    }
  }
  if (out.empty()) throw bm::ValidationError("no thresholds given");
  return out;
}

std::vector<const bm::PairSample*> split_samples(const bm::Dataset& ds, const std::string& split) {
  if (split == "train") return ds.subset(ds.split.train);
  if (split == "val") return ds.subset(ds.split.val);
  if (split == "test") return ds.subset(ds.split.test);
  if (split == "all") {
    std::vector<const bm::PairSample*> out;
    for (const auto& s : ds.samples) out.push_back(&s);
    return out;
  }
  throw bm::ValidationError("unknown split '" + split + "'");
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  bm::write_text(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity correspondence between two versions of a boundary-representation model"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset with tracked ground truth");
  std::string gen_out, gen_mix = "complete";
  std::size_t gen_models = 300;
  int gen_variants = 3;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--models", gen_models, "Number of original models");
  gen->add_option("--variants", gen_variants, "Variants per model");
  gen->add_option("--mix", gen_mix, "complete | deform | construct");
  gen->add_option("--seed", gen_seed, "Seed");

  // train
  auto* tr = app.add_subcommand("train", "Train the learned scorer");
  std::string tr_data, tr_out;
  bm::TrainConfig cfg;
  std::size_t tr_cap = 0;
  bool tr_quiet = false;
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--epochs", cfg.epochs, "Epochs");
  tr->add_option("--w", cfg.w, "Negative-example loss weight");
  tr->add_option("--seed", cfg.seed, "Seed");
  tr->add_option("--lr", cfg.learning_rate, "Learning rate");
  tr->add_option("--batch", cfg.batch_size, "Samples per update");
  tr->add_option("--negative-cap", tr_cap, "Cap on candidates per sample (0: none)");
  tr->add_flag("--quiet", tr_quiet, "No per-epoch log");

  // match
  auto* mt = app.add_subcommand("match", "Match two models");
  std::string mt_orig, mt_upd, mt_model, mt_out, mt_baseline;
  bm::MatchOptions mopt;
  mt->add_option("--orig", mt_orig, "Original model JSON")->required();
  mt->add_option("--upd", mt_upd, "Updated model JSON")->required();
  mt->add_option("--model", mt_model, "Checkpoint (omit for the bootstrap only)");
  mt->add_option("--threshold", mopt.threshold, "Stopping threshold");
  mt->add_option("--out", mt_out, "Output match JSON (default: stdout)");
  mt->add_option("--baseline", mt_baseline, "exact | overlap | adjprop")->check(CLI::IsMember({"exact", "overlap", "adjprop"}));
  mt->add_flag("--overlap-prior", mopt.overlap_prior, "Bootstrap with overlap matches as well");
  mt->add_option("--pairs-per-rescore", mopt.pairs_per_rescore, "Pairs added per rescoring pass");

  // eval
  auto* ev = app.add_subcommand("eval", "Categorize a predicted matching against ground truth");
  std::string ev_pred, ev_truth, ev_upd, ev_out;
  ev->add_option("--pred", ev_pred, "Predicted match JSON")->required();
  ev->add_option("--truth", ev_truth, "Ground-truth match JSON")->required();
  ev->add_option("--upd", ev_upd, "Updated model JSON")->required();
  ev->add_option("--out", ev_out, "Report JSON (default: stdout)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Evaluate over a list of thresholds");
  std::string sw_data, sw_model, sw_thresholds = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", sw_split = "test", sw_csv, sw_json;
  sw->add_option("--data", sw_data, "Dataset directory")->required();
  sw->add_option("--model", sw_model, "Checkpoint")->required();
  sw->add_option("--thresholds", sw_thresholds, "Ascending comma-separated thresholds");
  sw->add_option("--split", sw_split, "train | val | test | all");
  sw->add_option("--csv", sw_csv, "CSV output (default: stdout)");
  sw->add_option("--json", sw_json, "JSON output");

  // compare
  auto* cmp = app.add_subcommand("compare", "Tabulate the baselines and the learned matcher");
  std::string cmp_data, cmp_model, cmp_split = "test", cmp_csv;
  double cmp_threshold = bm::kDefaultThreshold;
  cmp->add_option("--data", cmp_data, "Dataset directory")->required();
  cmp->add_option("--model", cmp_model, "Checkpoint (omit to compare baselines only)");
  cmp->add_option("--split", cmp_split, "train | val | test | all");
  cmp->add_option("--threshold", cmp_threshold, "Stopping threshold of the learned matcher");
  cmp->add_option("--csv", cmp_csv, "CSV output (default: stdout)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  std::string gc_model, gc_data;
  double gc_eps = 1e-5;
  std::size_t gc_samples = 5;
  std::uint64_t gc_seed = 0;
  gc->add_option("--model", gc_model, "Checkpoint")->required();
  gc->add_option("--data", gc_data, "Dataset directory")->required();
  gc->add_option("--epsilon", gc_eps, "Finite-difference step");
  gc->add_option("--samples", gc_samples, "Number of small samples to check");
  gc->add_option("--seed", gc_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      const auto ds = bm::generate_dataset(gen_models, gen_variants, bm::mix_from_name(gen_mix), gen_seed);
      bm::save_dataset(ds, gen_out);
      std::cout << "wrote " << ds.samples.size() << " pairs (" << ds.split.train.size() << '/' << ds.split.val.size() << '/'
                << ds.split.test.size() << " models) to " << gen_out << "\n";
    } else if (*tr) {
      if (tr_cap > 0) cfg.negative_cap = tr_cap;
      const auto ds = bm::load_dataset(tr_data);
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = bm::train(ds.subset(ds.split.train), ds.subset(ds.split.val), cfg, [&](const bm::EpochStats& s) {
        if (tr_quiet) return;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "epoch %4d  train %.6f  val %.6f  %.0fs\n", s.epoch, s.train_loss, s.val_loss, secs);
      });
      bm::save_params(res.params, tr_out);
      std::cout << "best epoch " << res.best_epoch << " validation loss " << res.best_val_loss << "\n";
    } else if (*mt) {
      const bm::BRepGraph bo = bm::load_brep_file(mt_orig);
      const bm::BRepGraph bu = bm::load_brep_file(mt_upd);
      bm::check_shared_frame(bo, bu);
      bm::MatchRecord rec{bo.model_id, bu.model_id, mopt.threshold, {}, {}};
      if (!mt_baseline.empty()) {
        const bm::Method m = mt_baseline == "exact" ? bm::Method::Coincidence
                             : mt_baseline == "overlap" ? bm::Method::Overlap
                                                        : bm::Method::Propagation;
        rec.threshold.reset();
        rec.matching = bm::run_method(m, bo, bu, nullptr, mopt);
      } else {
        std::optional<bm::ModelParams> params;
        if (!mt_model.empty()) params = bm::load_params(mt_model);
        auto r = bm::match(bo, bu, params ? &*params : nullptr, mopt);
        rec.matching = std::move(r.matching);
        rec.trace = std::move(r.trace);
      }
      write_or_print(mt_out, bm::match_record_to_json(rec).dump(2) + "\n");
    } else if (*ev) {
      const auto pred = bm::load_match_record(ev_pred);
      const auto truth = bm::load_match_record(ev_truth);
      const auto bu = bm::load_brep_file(ev_upd);
      write_or_print(ev_out, bm::report_to_json(bm::evaluate(pred, truth, bu)).dump(2) + "\n");
    } else if (*sw) {
      const auto ds = bm::load_dataset(sw_data);
      const auto params = bm::load_params(sw_model);
      const auto rows = bm::sweep(split_samples(ds, sw_split), params, parse_thresholds(sw_thresholds));
      write_or_print(sw_csv, bm::sweep_to_csv(rows));
      if (!sw_json.empty()) bm::write_text(sw_json, bm::sweep_to_json(rows).dump(2) + "\n");
    } else if (*cmp) {
      const auto ds = bm::load_dataset(cmp_data);
      std::optional<bm::ModelParams> params;
      if (!cmp_model.empty()) params = bm::load_params(cmp_model);
      bm::MatchOptions o;
      o.threshold = cmp_threshold;
      const auto table = bm::compare_baselines(split_samples(ds, cmp_split), params ? &*params : nullptr, o);
      write_or_print(cmp_csv, bm::baselines_to_csv(table));
    } else if (*gc) {
      const auto params = bm::load_params(gc_model);
      const auto ds = bm::load_dataset(gc_data);
      double worst = 0.0;
      std::size_t checked = 0;
      for (const auto& s : ds.samples) {
        if (checked == gc_samples) break;
        auto primary = [](const bm::BRepGraph& b) { return b.faces.size() + b.edges.size() + b.vertices.size(); };
        if (primary(*s.orig) > 30 || primary(*s.upd) > 30) continue;
        const double e = bm::grad_check(params, s, gc_eps, bm::mix_seed(gc_seed, checked));
        std::cout << s.upd_id << " max relative error " << e << "\n";
        worst = std::max(worst, e);
        ++checked;
      }
      if (checked == 0) throw bm::ValidationError("no sample with at most 30 entities per side");
      std::cout << "worst " << worst << "\n";
      if (!(worst < 1e-4)) return kExitNumeric;
    }
  } catch (const bm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.category() == bm::Error::Category::Numeric ? kExitNumeric : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/text_io.hpp"

#ifndef CHROMAEEG_VERSION
#define CHROMAEEG_VERSION "dev"
#endif

namespace chromaeeg::experiment {

namespace {

using io::format_double;

const CellResult* find_cell(const ExperimentResult& r, const CellKey& key) {
  for (const auto& c : r.cells) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

std::vector<models::Family> report_families(const ExperimentConfig& cfg) {
  std::vector<models::Family> out;
  for (auto f : models::kReportOrder) {
    if (std::find(cfg.families.begin(), cfg.families.end(), f) != cfg.families.end()) out.push_back(f);
  }
  return out;
}

bool has_regime(const ExperimentConfig& cfg, Regime r) {
  return std::find(cfg.regimes.begin(), cfg.regimes.end(), r) != cfg.regimes.end();
}

nlohmann::json key_json(const CellKey& k) {
  return {{"window_ms", k.window_ms},
          {"feature_set", feature_set_tag(k.feature_set)},
          {"regime", regime_tag(k.regime)},
          {"family", models::family_tag(k.family)}};
}

nlohmann::json config_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json fs = json::array(), regimes = json::array(), families = json::array(), grid = json::object();
  for (auto f : c.feature_sets) fs.push_back(feature_set_tag(f));
  for (auto r : c.regimes) regimes.push_back(regime_tag(r));
  for (auto f : c.families) {
    families.push_back(models::family_tag(f));
    json points = json::array();
    for (const auto& p : c.grid.points(f, c.seed)) points.push_back(p.describe());
    grid[std::string(models::family_tag(f))] = points;
  }
  const auto& ae = c.autoencoder;
  return {{"windows_ms", c.windows_ms},
          {"feature_sets", fs},
          {"regimes", regimes},
          {"families", families},
          {"seed", c.seed},
          {"folds", c.folds},
          {"group_by_trial", c.group_by_trial},
          {"tune", c.tune},
          {"tune_folds", c.tune_folds},
          {"grid", grid},
          {"subset_size", c.subset_size},
          {"selection_folds", c.selection_folds},
          {"selection_wrapper", c.selection_wrapper == SelectionWrapper::Logistic ? "lr" : "same"},
          {"autoencoder",
           {{"hidden", ae.hidden},
            {"latent", ae.latent},
            {"epochs", ae.epochs},
            {"learning_rate", ae.learning_rate},
            {"batch_size", ae.batch_size},
            {"polish_fraction", ae.polish_fraction}}}};
}

}  // namespace

std::string format_cell(const eval::MeanStd& v) {
  return io::format_fixed(v.mean, 3) + " (" + io::format_fixed(v.std, 3) + ")";
}

BestCell best_cell(const ExperimentResult& r) {
  if (r.cells.empty()) throw Error(ErrorKind::EmptyReport, "no successful cells to report");
  BestCell best{r.cells.front().key, r.cells.front().average[0].mean};
  for (const auto& c : r.cells) {
    if (c.average[0].mean > best.accuracy) best = {c.key, c.average[0].mean};
  }
  return best;
}

std::string render_table(const ExperimentResult& r, int window_ms, Metric metric, FeatureSet fs) {
  const auto families = report_families(r.config);
  const auto m = static_cast<std::size_t>(metric);
  std::string out = "metric_row";
  for (auto f : families) out += "," + std::string(models::family_tag(f));
  out += "\n";
  auto row = [&](std::string_view name, Regime regime, bool best) {
    out += name;
    for (auto f : families) {
      const CellResult* c = find_cell(r, {window_ms, fs, regime, f});
      out += ",";
      out += c ? format_cell(best ? c->best[m] : c->average[m]) : "NA";
    }
    out += "\n";
  };
  if (has_regime(r.config, Regime::Intra)) {
    row("avg_subject", Regime::Intra, false);
    row("best_subject", Regime::Intra, true);
  }
  if (has_regime(r.config, Regime::Inter)) row("inter_subject", Regime::Inter, false);
  return out;
}

std::string render_summary(const ExperimentResult& r) {
  const BestCell best = best_cell(r);
  std::ostringstream os;
  os << "cells: " << r.cells.size() << "\n";
  os << "failed cells: " << r.failures.size() << "\n";
  os << "best: family=" << models::family_tag(best.key.family) << " feature_set=" << feature_set_tag(best.key.feature_set)
     << " window_ms=" << best.key.window_ms << " regime=" << regime_tag(best.key.regime)
     << " accuracy=" << io::format_fixed(best.accuracy, 3) << "\n";
  for (Regime regime : r.config.regimes) {
    const CellResult* top = nullptr;
    for (const auto& c : r.cells) {
      if (c.key.regime == regime && (!top || c.average[0].mean > top->average[0].mean)) top = &c;
    }
    if (!top) continue;
    os << "best " << regime_tag(regime) << ": family=" << models::family_tag(top->key.family)
       << " feature_set=" << feature_set_tag(top->key.feature_set) << " window_ms=" << top->key.window_ms
       << " accuracy=" << format_cell(top->average[0]) << " auc=" << format_cell(top->average[1])
       << " mcc=" << format_cell(top->average[2]) << "\n";
  }
  for (const auto& f : r.failures) {
    os << "failed: window_ms=" << f.key.window_ms << " feature_set=" << feature_set_tag(f.key.feature_set)
       << " regime=" << regime_tag(f.key.regime) << " family=" << models::family_tag(f.key.family) << " (" << f.kind
       << ") " << f.message << "\n";
  }
  return os.str();
}

void write_report(const ExperimentResult& r, const std::filesystem::path& dir) {
  using nlohmann::json;
  // Failures are flushed first so that they survive an empty report.
  json failures = json::array();
  for (const auto& f : r.failures) {
    json j = key_json(f.key);
    j["kind"] = f.kind;
    j["message"] = f.message;
    failures.push_back(j);
  }
  io::write_file(dir / "failures.json", failures.dump(2) + "\n");
  if (r.cells.empty()) throw Error(ErrorKind::EmptyReport, "no successful cells to report");

  // Long form, one line per (cell, row, metric).
  std::string cells = "window_ms,feature_set,regime,family,row,metric,mean,std,subject,folds\n";
  for (const auto& c : r.cells) {
    const std::string prefix = std::to_string(c.key.window_ms) + "," + std::string(feature_set_tag(c.key.feature_set)) +
                               "," + std::string(regime_tag(c.key.regime)) + "," +
                               std::string(models::family_tag(c.key.family)) + ",";
    for (Metric metric : kMetrics) {
      const auto m = static_cast<std::size_t>(metric);
      const std::string tail = "," + std::to_string(c.fold_count) + "\n";
      if (c.key.regime == Regime::Intra) {
        cells += prefix + "avg_subject," + std::string(metric_tag(metric)) + "," + format_double(c.average[m].mean) +
                 "," + format_double(c.average[m].std) + ",," + std::to_string(c.fold_count) + "\n";
        cells += prefix + "best_subject," + std::string(metric_tag(metric)) + "," + format_double(c.best[m].mean) +
                 "," + format_double(c.best[m].std) + "," + std::to_string(c.best_subject[m]) + tail;
      } else {
        cells += prefix + "inter_subject," + std::string(metric_tag(metric)) + "," + format_double(c.average[m].mean) +
                 "," + format_double(c.average[m].std) + ",," + std::to_string(c.fold_count) + "\n";
      }
    }
  }
  io::write_file(dir / "cells.csv", cells);

  for (int w : r.config.windows_ms) {
    const auto wdir = dir / ("w" + std::to_string(w));
    for (FeatureSet fs : r.config.feature_sets) {
      for (Metric metric : kMetrics) {
        io::write_file(wdir / ("table_" + std::string(metric_tag(metric)) + "_" + std::string(feature_set_tag(fs)) + ".csv"),
                       render_table(r, w, metric, fs));
      }
    }
  }

  std::string sweep = "regime,feature_set,family,window_ms,accuracy_mean,accuracy_std,auc_mean,auc_std,mcc_mean,mcc_std\n";
  for (Regime regime : r.config.regimes) {
    for (FeatureSet fs : r.config.feature_sets) {
      for (auto f : report_families(r.config)) {
        for (int w : r.config.windows_ms) {
          const CellResult* c = find_cell(r, {w, fs, regime, f});
          sweep += std::string(regime_tag(regime)) + "," + std::string(feature_set_tag(fs)) + "," +
                   std::string(models::family_tag(f)) + "," + std::to_string(w);
          for (std::size_t m = 0; m < 3; ++m) {
            sweep += c ? "," + format_double(c->average[m].mean) + "," + format_double(c->average[m].std) : ",NA,NA";
          }
          sweep += "\n";
        }
      }
    }
  }
  io::write_file(dir / "window_sweep.csv", sweep);

  // ROC curves of the best intra-subject cell, one file per (subject, class).
  const CellResult* roc_cell = nullptr;
  for (const auto& c : r.cells) {
    if (c.key.regime == Regime::Intra && (!roc_cell || c.average[0].mean > roc_cell->average[0].mean)) roc_cell = &c;
  }
  if (roc_cell) {
    for (const auto& [subject, oof] : roc_cell->out_of_fold) {
      const auto& [ys, scores] = oof;
      for (int k = 0; k < models::kDefaultClassCount; ++k) {
        std::vector<double> s;
        std::vector<int> pos;
        for (std::size_t i = 0; i < ys.size(); ++i) {
          s.push_back(scores(i, static_cast<std::size_t>(k)));
          pos.push_back(ys[i] == k ? 1 : 0);
        }
        std::string text = "threshold,fpr,tpr\n";
        if (std::find(pos.begin(), pos.end(), 1) != pos.end() && std::find(pos.begin(), pos.end(), 0) != pos.end()) {
          for (const auto& p : eval::roc_curve(s, pos)) {
            text += (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "," +
                    format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
          }
        }
        io::write_file(dir / "roc" /
                           ("subject_" + std::to_string(subject) + "_class_" +
                            std::string(color_name(static_cast<Color>(k))) + ".csv"),
                       text);
      }
    }
  }

  io::write_file(dir / "summary.txt", render_summary(r));

  json manifest;
  manifest["tool"] = "chromaeeg";
  manifest["version"] = CHROMAEEG_VERSION;
  manifest["feature_manifest"] = std::string(features::kFeatureManifestVersion);
  manifest["config"] = config_json(r.config);
  manifest["cells"] = r.cells.size();
  manifest["failed_cells"] = r.failures.size();
  if (roc_cell) manifest["roc_cell"] = key_json(roc_cell->key);
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ExperimentResult parse_cells_csv(std::string_view text) {
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::trim(lines[0]) != "window_ms,feature_set,regime,family,row,metric,mean,std,subject,folds") {
    throw Error(ErrorKind::MissingColumn, "not a cells.csv file");
  }
  ExperimentResult r;
  r.config.windows_ms.clear();
  r.config.feature_sets.clear();
  r.config.regimes.clear();
  r.config.families.clear();
  auto remember = [](auto& list, auto v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  std::map<CellKey, CellResult> cells;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto f = io::split_csv(lines[i]);
    if (f.size() != 10) throw Error(ErrorKind::MalformedRow, "cells.csv line " + std::to_string(i + 1) + " has the wrong width");
    const auto w = io::parse_int(f[0]);
    const auto mean = io::parse_double(f[6]);
    const auto sd = io::parse_double(f[7]);
    const auto folds = io::parse_int(f[9]);
    if (!w || !mean || !sd || !folds) throw Error(ErrorKind::MalformedRow, "bad number in cells.csv line " + std::to_string(i + 1));
    CellKey key{static_cast<int>(*w), parse_feature_set(io::trim(f[1])), parse_regime(io::trim(f[2])),
                models::parse_family(io::trim(f[3]))};
    remember(r.config.windows_ms, key.window_ms);
    remember(r.config.feature_sets, key.feature_set);
    remember(r.config.regimes, key.regime);
    remember(r.config.families, key.family);
    std::size_t m = 0;
    const auto metric = io::trim(f[5]);
    while (m < 3 && metric_tag(kMetrics[m]) != metric) ++m;
    if (m == 3) throw Error(ErrorKind::MalformedRow, "unknown metric in cells.csv line " + std::to_string(i + 1));
    auto& cell = cells[key];
    cell.key = key;
    cell.fold_count = static_cast<std::size_t>(*folds);
    const auto row = io::trim(f[4]);
    if (row == "best_subject") {
      cell.best[m] = {*mean, *sd};
      cell.best_subject[m] = static_cast<int>(io::parse_int(f[8]).value_or(-1));
    } else {
      cell.average[m] = {*mean, *sd};
    }
  }
  std::sort(r.config.windows_ms.begin(), r.config.windows_ms.end());
  // Canonical cell order: window, feature set, regime, family as first seen.
  for (int w : r.config.windows_ms) {
    for (auto fs : r.config.feature_sets) {
      for (auto regime : r.config.regimes) {
        for (auto fam : r.config.families) {
          const auto it = cells.find({w, fs, regime, fam});
          if (it != cells.end()) r.cells.push_back(it->second);
        }
      }
    }
  }
  return r;
}

}  // namespace chromaeeg::experiment

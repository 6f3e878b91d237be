#include "chromaeeg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "chromaeeg/error.hpp"
#include "chromaeeg/rng.hpp"

namespace chromaeeg::experiment {

std::string_view regime_tag(Regime r) { return r == Regime::Intra ? "intra" : "inter"; }

std::string_view feature_set_tag(FeatureSet f) {
  switch (f) {
    case FeatureSet::All: return "all";
    case FeatureSet::Forward10: return "forward10";
    case FeatureSet::Ae10: return "ae10";
  }
  return "?";
}

std::string_view metric_tag(Metric m) {
  switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::Auc: return "auc";
    case Metric::Mcc: return "mcc";
  }
  return "?";
}

Regime parse_regime(std::string_view s) {
  for (Regime r : kRegimes) {
    if (regime_tag(r) == s) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown regime '" + std::string(s) + "'");
}

FeatureSet parse_feature_set(std::string_view s) {
  for (FeatureSet f : kFeatureSets) {
    if (feature_set_tag(f) == s) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown feature set '" + std::string(s) + "'");
}

namespace {

constexpr int kClasses = models::kDefaultClassCount;

// One train/test split of one window's matrix. Reductions are computed once per
// unit and shared by every family.
struct Unit {
  int window_ms = 0;
  Regime regime = Regime::Intra;
  int subject = 0;  // intra: the subject; inter: the held-out subject
  std::size_t fold = 0;
  std::vector<std::size_t> train, test;
  std::uint64_t seed = 0;
  // Set when the subject's folds could not be built; every cell using it fails.
  std::string split_kind, split_message;
};

struct Outcome {
  bool ok = false;
  std::string kind, message;
  Triple metrics{};
  std::vector<int> y;
  Matrix scores;
  std::string spec;
};

std::vector<int> gather(std::span<const int> v, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::vector<Unit> plan_units(const Dataset& data, const ExperimentConfig& cfg) {
  std::vector<Unit> units;
  for (int w : cfg.windows_ms) {
    const auto it = data.find(w);
    if (it == data.end()) throw Error(ErrorKind::InsufficientData, "no features for window " + std::to_string(w) + " ms");
    const auto& fm = it->second;
    for (Regime regime : cfg.regimes) {
      if (regime == Regime::Intra) {
        const std::set<int> subjects(fm.subjects.begin(), fm.subjects.end());
        for (int s : subjects) {
          std::vector<std::size_t> rows;
          for (std::size_t i = 0; i < fm.rows(); ++i) {
            if (fm.subjects[i] == s) rows.push_back(i);
          }
          const auto y = gather(fm.labels, rows);
          std::vector<eval::Split> splits;
          try {
            if (cfg.group_by_trial) {
              splits = eval::group_splits(gather(fm.trials, rows));
            } else {
              splits = eval::kfold_splits(y, cfg.folds, derive_seed(cfg.seed, {static_cast<std::uint64_t>(s), 17}));
            }
          } catch (const Error& e) {
            Unit u;
            u.window_ms = w;
            u.regime = regime;
            u.subject = s;
            u.split_kind = std::string(to_string(e.kind()));
            u.split_message = e.what();
            units.push_back(std::move(u));
            continue;
          }
          for (std::size_t f = 0; f < splits.size(); ++f) {
            Unit u;
            u.window_ms = w;
            u.regime = regime;
            u.subject = s;
            u.fold = f;
            for (std::size_t i : splits[f].train) u.train.push_back(rows[i]);
            for (std::size_t i : splits[f].test) u.test.push_back(rows[i]);
            u.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(w), 0, static_cast<std::uint64_t>(s), f});
            units.push_back(std::move(u));
          }
        }
      } else {
        for (auto& split : eval::loso_split(fm.subjects)) {
          Unit u;
          u.window_ms = w;
          u.regime = regime;
          u.subject = split.held_out;
          u.train = std::move(split.train);
          u.test = std::move(split.test);
          u.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(w), 1, static_cast<std::uint64_t>(split.held_out)});
          units.push_back(std::move(u));
        }
      }
    }
  }
  return units;
}

models::ModelSpec base_spec(const ExperimentConfig& cfg, models::Family f) {
  return cfg.grid.points(f, cfg.seed).front();
}

Outcome failed(const std::exception& e) {
  Outcome o;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    o.kind = std::string(to_string(err->kind()));
  } else {
    o.kind = "Exception";
  }
  o.message = e.what();
  return o;
}

Outcome evaluate(const ExperimentConfig& cfg, models::Family family, const Matrix& xtr, std::span<const int> ytr,
                 const Matrix& xte, std::span<const int> yte, std::uint64_t seed) {
  models::ModelSpec spec = base_spec(cfg, family);
  if (cfg.tune) spec = models::grid_search(family, cfg.grid, xtr, ytr, cfg.tune_folds, seed, kClasses).best;
  spec.seed = seed;
  const auto model = models::fit(spec, xtr, ytr, kClasses);
  Outcome o;
  o.scores = models::predict_scores(model, xte);
  const auto pred = models::argmax_rows(o.scores);
  // SVM areas come from the raw decision values.
  const Matrix auc_scores =
      family == models::Family::SVM ? models::svm_decision_values(std::get<models::SvmModel>(model.state), xte) : o.scores;
  o.metrics[static_cast<int>(Metric::Accuracy)] = eval::accuracy(yte, pred);
  o.metrics[static_cast<int>(Metric::Auc)] = eval::multiclass_auc(auc_scores, yte);
  o.metrics[static_cast<int>(Metric::Mcc)] = eval::mcc(eval::ConfusionMatrix::from_labels(yte, pred, kClasses));
  o.y.assign(yte.begin(), yte.end());
  o.spec = spec.describe();
  o.ok = true;
  return o;
}

// outcomes[fs][family]
using UnitOutcomes = std::vector<std::vector<Outcome>>;

UnitOutcomes run_unit(const Dataset& data, const ExperimentConfig& cfg, const Unit& u) {
  UnitOutcomes out(cfg.feature_sets.size(), std::vector<Outcome>(cfg.families.size()));
  if (!u.split_kind.empty()) {
    for (auto& row : out) {
      for (auto& o : row) {
        o.kind = u.split_kind;
        o.message = u.split_message;
      }
    }
    return out;
  }
  const auto& fm = data.at(u.window_ms);
  const Matrix raw_tr = fm.values.select_rows(u.train);
  const Matrix raw_te = fm.values.select_rows(u.test);
  const auto ytr = gather(fm.labels, u.train);
  const auto yte = gather(fm.labels, u.test);
  const auto zs = features::ZScore::fit(raw_tr);
  const Matrix xtr = zs.apply(raw_tr);
  const Matrix xte = zs.apply(raw_te);

  for (std::size_t fi = 0; fi < cfg.feature_sets.size(); ++fi) {
    const FeatureSet fs = cfg.feature_sets[fi];
    const std::uint64_t fs_seed = derive_seed(u.seed, {fi});
    Matrix a, b;
    try {
      if (fs == FeatureSet::All) {
        a = xtr;
        b = xte;
      } else if (fs == FeatureSet::Forward10 && cfg.selection_wrapper == SelectionWrapper::Logistic) {
        const auto subset = reduce::forward_select(xtr, ytr, fm.names, reduce::default_wrapper(fs_seed),
                                                   cfg.subset_size, cfg.selection_folds, fs_seed, kClasses);
        a = subset.apply(xtr);
        b = subset.apply(xte);
      } else if (fs == FeatureSet::Ae10) {
        auto ae_cfg = cfg.autoencoder;
        ae_cfg.seed = fs_seed;
        const auto ae = reduce::autoencoder_train(xtr, ae_cfg);
        a = reduce::autoencoder_encode(ae, xtr);
        b = reduce::autoencoder_encode(ae, xte);
      }
    } catch (const std::exception& e) {
      for (auto& o : out[fi]) o = failed(e);
      continue;
    }
    for (std::size_t mi = 0; mi < cfg.families.size(); ++mi) {
      const auto family = cfg.families[mi];
      const std::uint64_t model_seed = derive_seed(fs_seed, {static_cast<std::uint64_t>(family)});
      try {
        if (fs == FeatureSet::Forward10 && cfg.selection_wrapper == SelectionWrapper::SameFamily) {
          auto wrapper = base_spec(cfg, family);
          wrapper.seed = model_seed;
          const auto subset = reduce::forward_select(xtr, ytr, fm.names, wrapper, cfg.subset_size,
                                                     cfg.selection_folds, fs_seed, kClasses);
          out[fi][mi] = evaluate(cfg, family, subset.apply(xtr), ytr, subset.apply(xte), yte, model_seed);
        } else {
          out[fi][mi] = evaluate(cfg, family, a, ytr, b, yte, model_seed);
        }
      } catch (const std::exception& e) {
        out[fi][mi] = failed(e);
      }
    }
  }
  return out;
}

void summarize(CellResult& cell) {
  if (cell.key.regime == Regime::Intra) {
    for (auto& s : cell.subjects) {
      for (int m = 0; m < 3; ++m) {
        std::vector<double> v;
        for (const auto& f : s.folds) v.push_back(f[static_cast<std::size_t>(m)]);
        s.summary[static_cast<std::size_t>(m)] = eval::mean_std(v);
      }
    }
    for (std::size_t m = 0; m < 3; ++m) {
      double mean = 0.0, std = 0.0;
      std::size_t best = 0;
      for (std::size_t i = 0; i < cell.subjects.size(); ++i) {
        mean += cell.subjects[i].summary[m].mean;
        std += cell.subjects[i].summary[m].std;
        if (cell.subjects[i].summary[m].mean > cell.subjects[best].summary[m].mean) best = i;
      }
      const auto n = static_cast<double>(cell.subjects.size());
      cell.average[m] = {mean / n, std / n};
      cell.best[m] = cell.subjects[best].summary[m];
      cell.best_subject[m] = cell.subjects[best].subject;
    }
  } else {
    for (auto& s : cell.subjects) {
      for (std::size_t m = 0; m < 3; ++m) s.summary[m] = {s.folds.front()[m], 0.0};
    }
    for (std::size_t m = 0; m < 3; ++m) {
      std::vector<double> v;
      for (const auto& s : cell.subjects) v.push_back(s.folds.front()[m]);
      cell.average[m] = eval::mean_std(v);
      cell.best_subject[m] = -1;
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config) {
  if (config.windows_ms.empty() || config.feature_sets.empty() || config.regimes.empty() || config.families.empty()) {
    throw Error(ErrorKind::InvalidArgument, "experiment grid is empty");
  }
  for (int w : config.windows_ms) {
    features::WindowConfig{w}.validate();
  }
  const auto units = plan_units(data, config);
  std::vector<UnitOutcomes> results(units.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size()) return;
      try {
        results[i] = run_unit(data, config, units[i]);
      } catch (...) {
        // Anything escaping run_unit is unexpected (e.g. allocation failure).
        const std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(units.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  // Single-threaded assembly in canonical cell order.
  ExperimentResult result;
  result.config = config;
  for (int w : config.windows_ms) {
    for (std::size_t fi = 0; fi < config.feature_sets.size(); ++fi) {
      for (Regime regime : config.regimes) {
        for (std::size_t mi = 0; mi < config.families.size(); ++mi) {
          CellResult cell;
          cell.key = {w, config.feature_sets[fi], regime, config.families[mi]};
          const Outcome* failure = nullptr;
          for (std::size_t ui = 0; ui < units.size(); ++ui) {
            const auto& u = units[ui];
            if (u.window_ms != w || u.regime != regime) continue;
            const Outcome& o = results[ui][fi][mi];
            if (!o.ok) {
              if (!failure) failure = &o;
              continue;
            }
            if (cell.subjects.empty() || cell.subjects.back().subject != u.subject) {
              cell.subjects.push_back({u.subject, {}, {}});
            }
            cell.subjects.back().folds.push_back(o.metrics);
            cell.specs.push_back(o.spec);
            ++cell.fold_count;
            if (regime == Regime::Intra) {
              auto& [ys, scores] = cell.out_of_fold[u.subject];
              ys.insert(ys.end(), o.y.begin(), o.y.end());
              for (std::size_t r = 0; r < o.scores.rows(); ++r) scores.append_row(o.scores.row(r));
            }
          }
          if (failure) {
            result.failures.push_back({cell.key, failure->kind, failure->message});
            continue;
          }
          summarize(cell);
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

}  // namespace chromaeeg::experiment

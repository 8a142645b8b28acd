// veridict: deception-analysis toolkit CLI.
//
// Every command is a pure function of (flags, config file, seed): rerunning
// with identical inputs produces byte-identical output files. Exit codes:
// 0 success, 1 usage error, 2 data validation or consistency failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "veridict/classifiers.hpp"
#include "veridict/data.hpp"
#include "veridict/evaluation.hpp"
#include "veridict/features.hpp"
#include "veridict/gaze.hpp"
#include "veridict/metrics.hpp"
#include "veridict/rde.hpp"
#include "veridict/relevance.hpp"
#include "veridict/rng.hpp"
#include "veridict/rotation.hpp"
#include "veridict/sequence.hpp"
#include "veridict/splits.hpp"
#include "veridict/textio.hpp"
#include "veridict/types.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace veridict;

namespace {

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Shared option bundles

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

struct SchemaOpts {
  std::string aus = "AU06,AU10,AU12,AU14,AU17";
  bool no_valence_arousal = false;
};

void add_schema_opts(CLI::App* c, SchemaOpts& o) {
  c->add_option("--aus", o.aus, "Comma list of AU intensity columns")->capture_default_str();
  c->add_flag("--no-valence-arousal", o.no_valence_arousal,
              "Exclude valence/arousal from extracted features");
}

FeatureSchema make_schema(const SchemaOpts& o) {
  FeatureSchema s;
  s.au_names = split_list(o.aus);
  if (s.au_names.empty()) throw UsageError("--aus must name at least one column");
  s.include_valence_arousal = !o.no_valence_arousal;
  return s;
}

StatSet make_stats(const std::string& s) {
  try {
    return s == "all" ? StatSet::all() : StatSet::parse(s);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

void check_modalities(const std::string& m) {
  if (m == "all" || m.empty()) return;
  bool any = false;
  for (const auto& tok : split_list(m)) {
    any = true;
    if (tok != "gaze" && tok != "pose" && tok != "au" && tok != "emotion" && tok != "manual")
      throw UsageError("unknown modality '" + tok + "' (gaze, pose, au, emotion, manual, all)");
  }
  if (!any) throw UsageError("empty modality filter");
}

struct ClfOpts {
  std::string clf = "svm";
  SvmParams svm;
  RfParams rf;
  SeqTrainConfig seq;
  std::size_t seq_len = 200;
};

void add_clf_opts(CLI::App* c, ClfOpts& o, bool with_sequence) {
  std::string kinds = with_sequence ? "trivial|svm|rf|sequence" : "trivial|svm|rf";
  c->add_option("--clf", o.clf, "Classifier: " + kinds)->capture_default_str();
  c->add_option("--svm-c", o.svm.c, "SVM inverse regularization strength")->capture_default_str();
  c->add_option("--svm-epochs", o.svm.epochs, "SVM training epochs")->capture_default_str();
  c->add_option("--svm-lr0", o.svm.lr0, "SVM initial learning rate")->capture_default_str();
  c->add_option("--trees", o.rf.n_trees, "Forest size")->capture_default_str();
  c->add_option("--max-depth", o.rf.max_depth, "Tree depth limit, 0 = unlimited")
      ->capture_default_str();
  c->add_option("--mtry", o.rf.mtry, "Features tried per split, 0 = ceil(sqrt(d))")
      ->capture_default_str();
  c->add_option("--min-leaf", o.rf.min_leaf, "Minimum samples per leaf")->capture_default_str();
  c->add_flag_callback(
      "--no-bootstrap", [&o] { o.rf.bootstrap = false; },
      "Grow every tree on the full training set");
  if (with_sequence) {
    c->add_option("--hidden", o.seq.hidden, "Recurrent hidden units per direction")
        ->capture_default_str();
    c->add_option("--seq-epochs", o.seq.epochs, "Recurrent training epochs")
        ->capture_default_str();
    c->add_option("--seq-lr", o.seq.lr, "Recurrent learning rate")->capture_default_str();
    c->add_option("--momentum", o.seq.momentum, "Gradient momentum")->capture_default_str();
    c->add_option("--seq-len", o.seq_len, "Resampled sequence length")->capture_default_str();
  }
}

ClassifierSpec make_clf_spec(const ClfOpts& o, const std::string& loss) {
  ClassifierSpec spec;
  spec.kind = parse_classifier(o.clf);
  spec.svm = o.svm;
  spec.rf = o.rf;
  spec.seq = o.seq;
  spec.seq.loss = parse_seq_loss(loss);
  spec.seq_len = o.seq_len;
  return spec;
}

struct SelOpts {
  double select = 1.0;
  std::string rank_clf = "svm";
  int rank_repeats = 10;
  double pca = 0.0;
};

void add_sel_opts(CLI::App* c, SelOpts& o) {
  c->add_option("--select", o.select, "Keep the top fraction of ranked features, (0, 1]")
      ->capture_default_str();
  c->add_option("--rank-clf", o.rank_clf, "Classifier used for ranking: svm|rf")
      ->capture_default_str();
  c->add_option("--rank-repeats", o.rank_repeats, "Permutation repeats per feature")
      ->capture_default_str();
  c->add_option("--pca", o.pca, "Variance fraction to retain via PCA instead of ranking, (0, 1]")
      ->capture_default_str();
}

SelectionSpec make_sel_spec(const SelOpts& o, int threads) {
  if (!(o.select > 0.0 && o.select <= 1.0)) throw UsageError("--select must lie in (0, 1]");
  if (o.pca != 0.0 && !(o.pca > 0.0 && o.pca <= 1.0))
    throw UsageError("--pca must lie in (0, 1]");
  if (o.pca != 0.0 && o.select != 1.0)
    throw UsageError("--select and --pca are mutually exclusive");
  SelectionSpec sel;
  sel.fraction = o.select;
  sel.ranking_clf = parse_classifier(o.rank_clf);
  if (sel.ranking_clf != ClassifierKind::svm && sel.ranking_clf != ClassifierKind::rf)
    throw UsageError("--rank-clf must be svm or rf");
  sel.importance_repeats = o.rank_repeats;
  sel.pca_threshold = o.pca;
  sel.n_threads = threads;
  return sel;
}

void add_seed_opt(CLI::App* c, std::uint64_t& seed) {
  c->add_option("--seed", seed, "RNG seed (env VERIDICT_SEED is the fallback)")
      ->envname("VERIDICT_SEED")
      ->capture_default_str();
}

Dataset load_with_notes(const std::string& dir, const FeatureSchema& schema) {
  std::vector<std::string> notes;
  Dataset ds = load_dataset(dir, schema, &notes);
  for (const auto& n : notes) std::cerr << "note: " << n << "\n";
  return ds;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << text;
}

void write_run_manifest(const fs::path& dir, const std::string& command,
                        const ordered_json& config) {
  ordered_json j;
  j["tool"] = "veridict";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  write_text(dir / "run_manifest.json", j.dump(2) + "\n");
}

std::string pct(double v) {
  // Display-only rounding; output files keep full round-trip precision.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g%%", v * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string out;
  SynthConfig cfg;
  SchemaOpts schema;
  std::uint64_t seed = 0;
};

void run_synth(const SynthOpts& o) {
  FeatureSchema schema = make_schema(o.schema);
  Dataset ds = generate_synthetic(o.cfg, o.seed, schema);
  save_dataset(ds, o.out, schema);
  ordered_json cfg;
  cfg["out"] = o.out;
  cfg["dataset_id"] = o.cfg.dataset_id;
  cfg["n_samples"] = o.cfg.n_samples;
  cfg["frames_per_sample"] = o.cfg.frames_per_sample;
  cfg["truth_fraction"] = o.cfg.truth_fraction;
  cfg["effect_mu_deg"] = o.cfg.effect_mu_deg;
  cfg["fps"] = o.cfg.fps;
  cfg["aus"] = o.schema.aus;
  cfg["include_valence_arousal"] = schema.include_valence_arousal;
  cfg["seed"] = o.seed;
  write_run_manifest(o.out, "synth", cfg);
  std::cout << "wrote " << ds.samples.size() << " samples to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// featstats

struct FeatstatsOpts {
  std::string data, out;
  std::string stats = "all";
  std::string modalities = "all";
  SchemaOpts schema;
};

void run_featstats(const FeatstatsOpts& o) {
  check_modalities(o.modalities);
  StatSet stats = make_stats(o.stats);
  FeatureSchema schema = make_schema(o.schema);
  Dataset ds = load_with_notes(o.data, schema);
  FeatureMatrix fm = build_feature_matrix(ds, stats, schema).filter_modalities(o.modalities);
  write_feature_matrix_csv(fm, o.out);
  std::cout << "wrote " << fm.n_rows << " rows x " << fm.n_cols << " features to " << o.out
            << "\n";
}

// ---------------------------------------------------------------------------
// rank

struct RankOpts {
  std::string data, out, top_out;
  std::string clf = "svm";
  int repeats = 10;
  double holdout = 0.3;
  double select = 1.0;
  std::string stats = "all";
  std::string modalities = "all";
  SchemaOpts schema;
  std::uint64_t seed = 0;
  int threads = 1;
};

void run_rank(const RankOpts& o) {
  check_modalities(o.modalities);
  StatSet stats = make_stats(o.stats);
  FeatureSchema schema = make_schema(o.schema);
  Dataset ds = load_with_notes(o.data, schema);
  FeatureMatrix fm = build_feature_matrix(ds, stats, schema).filter_modalities(o.modalities);

  ImportanceConfig cfg;
  cfg.clf = parse_classifier(o.clf);
  if (cfg.clf != ClassifierKind::svm && cfg.clf != ClassifierKind::rf)
    throw UsageError("--clf must be svm or rf for ranking");
  cfg.n_repeats = o.repeats;
  cfg.holdout_fraction = o.holdout;
  cfg.n_threads = o.threads;
  FeatureRanking ranking = permutation_importance(fm, cfg, o.seed);
  write_ranking_csv(ranking, o.out);
  if (!o.top_out.empty()) {
    std::string text;
    for (const auto& name : select_top_fraction(ranking, o.select)) text += name + "\n";
    write_text(o.top_out, text);
  }
  std::cout << "ranked " << ranking.entries.size() << " features; top: "
            << ranking.entries.front().name << " ("
            << format_double(ranking.entries.front().importance) << ")\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data, out_dir;
  ClfOpts clf;
  SelOpts sel;
  std::string loss = "mae";
  double val_frac = 0.3;
  std::string stats = "all";
  std::string modalities = "all";
  SchemaOpts schema;
  std::uint64_t seed = 0;
  int threads = 1;
};

ordered_json train_config_json(const TrainOpts& o) {
  ordered_json cfg;
  cfg["data"] = o.data;
  cfg["clf"] = o.clf.clf;
  cfg["stats"] = o.stats;
  cfg["modalities"] = o.modalities;
  cfg["aus"] = o.schema.aus;
  cfg["include_valence_arousal"] = !o.schema.no_valence_arousal;
  cfg["select"] = o.sel.select;
  cfg["seed"] = o.seed;
  if (o.clf.clf == "svm") {
    cfg["svm"] = {{"c", o.clf.svm.c}, {"epochs", o.clf.svm.epochs}, {"lr0", o.clf.svm.lr0}};
  } else if (o.clf.clf == "rf") {
    cfg["rf"] = {{"trees", o.clf.rf.n_trees},
                 {"max_depth", o.clf.rf.max_depth},
                 {"mtry", o.clf.rf.mtry},
                 {"min_leaf", o.clf.rf.min_leaf},
                 {"bootstrap", o.clf.rf.bootstrap}};
  } else if (o.clf.clf == "sequence") {
    cfg["sequence"] = {{"hidden", o.clf.seq.hidden}, {"epochs", o.clf.seq.epochs},
                       {"lr", o.clf.seq.lr},         {"momentum", o.clf.seq.momentum},
                       {"seq_len", o.clf.seq_len},   {"loss", o.loss},
                       {"val_frac", o.val_frac}};
  }
  return cfg;
}

void train_sequence_models(const TrainOpts& o, const Dataset& ds, const FeatureSchema& schema) {
  std::vector<std::string> losses =
      o.loss == "all" ? std::vector<std::string>{"mae", "bce", "mse"}
                      : std::vector<std::string>{o.loss};

  std::vector<Label> labels;
  for (const auto& s : ds.samples) labels.push_back(s.label);
  std::vector<Sample> train_samples, val_samples;
  if (o.val_frac > 0.0) {
    if (!(o.val_frac < 1.0)) throw UsageError("--val-frac must lie in [0, 1)");
    Rng rng(derive_seed(o.seed, 0x56414CULL));
    auto [train_rows, val_rows] = random_split(labels, 1.0 - o.val_frac, true, rng);
    for (std::size_t r : train_rows) train_samples.push_back(ds.samples[r]);
    for (std::size_t r : val_rows) val_samples.push_back(ds.samples[r]);
  } else {
    train_samples = ds.samples;
  }

  SequenceScaler scaler = fit_sequence_scaler(train_samples, o.clf.seq_len, schema);
  SequenceBatch train_b = make_batch(train_samples, o.clf.seq_len, schema, &scaler);
  SequenceBatch val_b = make_batch(val_samples, o.clf.seq_len, schema, &scaler);

  bool multi = losses.size() > 1;
  for (const auto& loss_name : losses) {
    SeqTrainConfig cfg = o.clf.seq;
    cfg.loss = parse_seq_loss(loss_name);
    cfg.seed = o.seed;  // shared init across losses: curves differ by loss alone
    SeqTrainResult res = train_sequence(train_b, val_b, cfg);

    SequenceModel model;
    model.net = res.net;
    model.scaler = scaler;
    model.seq_len = o.clf.seq_len;
    model.loss = cfg.loss;
    model.schema = schema;
    std::string stem = multi ? std::string("model_") + loss_name : std::string("model");
    std::string curve = multi ? std::string("curve_") + loss_name : std::string("curve");
    save_sequence_model(model, fs::path(o.out_dir) / (stem + ".json"));
    write_curve_csv(res.curve, fs::path(o.out_dir) / (curve + ".csv"));
    const SeqEpochStats& last = res.curve.back();
    std::cout << loss_name << ": train loss " << format_double(last.train_loss);
    if (val_b.n > 0)
      std::cout << ", val accuracy " << pct(last.val_accuracy) << ", val ccc "
                << format_double(last.val_ccc);
    std::cout << "\n";
  }
}

void run_train(const TrainOpts& o) {
  check_modalities(o.modalities);
  FeatureSchema schema = make_schema(o.schema);
  fs::create_directories(o.out_dir);
  Dataset ds = load_with_notes(o.data, schema);

  if (parse_classifier(o.clf.clf) == ClassifierKind::sequence) {
    train_sequence_models(o, ds, schema);
  } else {
    if (o.loss != "mae") throw UsageError("--loss applies to the sequence classifier only");
    StatSet stats = make_stats(o.stats);
    FeatureMatrix fm = build_feature_matrix(ds, stats, schema).filter_modalities(o.modalities);
    ClassifierSpec clf = make_clf_spec(o.clf, "mae");
    clf.rf.n_threads = o.threads;
    SelectionSpec sel = make_sel_spec(o.sel, o.threads);
    if (sel.pca_threshold != 0.0)
      throw UsageError("--pca models cannot be saved; use --select for a portable model");
    std::vector<std::size_t> rows(fm.n_rows);
    std::iota(rows.begin(), rows.end(), 0);
    FittedPipeline pipe = fit_pipeline(fm, rows, clf, sel, o.seed);
    TrainedModel model = pipeline_to_model(pipe);
    save_model(model, fs::path(o.out_dir) / "model.json");
    std::cout << "trained " << o.clf.clf << " on " << fm.n_rows << " samples, "
              << model.feature_names.size() << " features\n";
  }
  write_run_manifest(o.out_dir, "train", train_config_json(o));
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string data, manual_table, out_dir;
  ClfOpts clf;
  SelOpts sel;
  std::string loss = "mae";
  std::string protocol = "repeated-random";
  int repeats = 50;
  double train_frac = 0.7;
  bool no_stratify = false;
  std::string fractions;
  std::string stats = "all";
  std::string modalities = "all";
  SchemaOpts schema;
  std::uint64_t seed = 0;
  int threads = 1;
};

ordered_json evaluate_config_json(const EvaluateOpts& o) {
  ordered_json cfg;
  if (!o.data.empty()) cfg["data"] = o.data;
  if (!o.manual_table.empty()) cfg["manual_table"] = o.manual_table;
  cfg["clf"] = o.clf.clf;
  cfg["protocol"] = o.protocol;
  cfg["repeats"] = o.repeats;
  cfg["train_frac"] = o.train_frac;
  cfg["stratified"] = !o.no_stratify;
  cfg["select"] = o.sel.select;
  cfg["rank_clf"] = o.sel.rank_clf;
  cfg["rank_repeats"] = o.sel.rank_repeats;
  cfg["pca"] = o.sel.pca;
  if (!o.fractions.empty()) cfg["fractions"] = o.fractions;
  cfg["stats"] = o.stats;
  cfg["modalities"] = o.modalities;
  cfg["aus"] = o.schema.aus;
  cfg["include_valence_arousal"] = !o.schema.no_valence_arousal;
  cfg["seed"] = o.seed;
  return cfg;
}

void print_report(const EvalReport& rep) {
  std::cout << rep.classifier << " / " << rep.protocol << ": accuracy mean "
            << pct(rep.accuracy.mean) << ", median " << pct(rep.accuracy.median) << ", std "
            << pct(rep.accuracy.stddev) << "; F1 mean " << format_double(rep.f1.mean)
            << "; MCC mean " << format_double(rep.mcc.mean);
  if (!std::isnan(rep.pooled_auc)) std::cout << "; pooled AUC " << format_double(rep.pooled_auc);
  if (rep.n_redraws > 0) std::cout << "; " << rep.n_redraws << " splits redrawn";
  std::cout << "\n";
}

void run_evaluate(const EvaluateOpts& o) {
  check_modalities(o.modalities);
  FeatureSchema schema = make_schema(o.schema);
  if (o.data.empty() == o.manual_table.empty())
    throw UsageError("give exactly one of --data or --manual-table");

  SplitPlan plan;
  plan.kind = parse_split_kind(o.protocol);
  if (plan.kind == SplitKind::cross_dataset)
    throw UsageError("use the crosseval command for the cross-dataset protocol");
  plan.train_fraction = o.train_frac;
  plan.n_repeats = o.repeats;
  plan.seed = o.seed;
  plan.stratified = !o.no_stratify;
  plan.n_threads = o.threads;

  ClassifierSpec clf = make_clf_spec(o.clf, o.loss);
  SelectionSpec sel = make_sel_spec(o.sel, 1);

  std::vector<double> fractions;
  for (const auto& tok : split_list(o.fractions)) {
    double f = parse_double_or_throw(tok, "--fractions");
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("--fractions values must lie in (0, 1]");
    fractions.push_back(f);
  }
  if (!fractions.empty() && sel.pca_threshold != 0.0)
    throw UsageError("--fractions and --pca are mutually exclusive");

  if (!o.out_dir.empty()) fs::create_directories(o.out_dir);

  auto run_once = [&](const SelectionSpec& s) {
    if (clf.kind == ClassifierKind::sequence) {
      if (o.data.empty()) throw UsageError("the sequence classifier needs --data");
      Dataset ds = load_with_notes(o.data, schema);
      return run_protocol(ds, make_stats(o.stats), schema, plan, clf, s);
    }
    FeatureMatrix fm;
    if (!o.data.empty()) {
      Dataset ds = load_with_notes(o.data, schema);
      fm = build_feature_matrix(ds, make_stats(o.stats), schema);
    } else {
      fm = to_feature_matrix(load_manual_table(o.manual_table));
    }
    return run_protocol(fm.filter_modalities(o.modalities), plan, clf, s);
  };

  if (!fractions.empty()) {
    std::string csv = "fraction,accuracy_mean,accuracy_median,accuracy_std,f1_mean,mcc_mean,"
                      "auc_mean,ccc_mean\n";
    for (double f : fractions) {
      SelectionSpec s = sel;
      s.fraction = f;
      EvalReport rep = run_once(s);
      csv += format_double(f) + "," + format_double(rep.accuracy.mean) + "," +
             format_double(rep.accuracy.median) + "," + format_double(rep.accuracy.stddev) + "," +
             format_double(rep.f1.mean) + "," + format_double(rep.mcc.mean) + "," +
             format_double(rep.auc.mean) + "," + format_double(rep.ccc.mean) + "\n";
      std::cout << "fraction " << format_double(f) << ": ";
      print_report(rep);
    }
    if (!o.out_dir.empty()) {
      write_text(fs::path(o.out_dir) / "selection_sweep.csv", csv);
      write_run_manifest(o.out_dir, "evaluate", evaluate_config_json(o));
    }
    return;
  }

  EvalReport rep = run_once(sel);
  print_report(rep);
  if (!o.out_dir.empty()) {
    write_text(fs::path(o.out_dir) / "report.json", report_to_json(rep).dump(2) + "\n");
    if (!rep.roc.empty()) write_roc_csv(rep.roc, fs::path(o.out_dir) / "roc.csv");
    write_run_manifest(o.out_dir, "evaluate", evaluate_config_json(o));
  }
}

// ---------------------------------------------------------------------------
// crosseval

struct CrossevalOpts {
  std::string train_data, test_data, out_dir;
  ClfOpts clf;
  SelOpts sel;
  std::string loss = "mae";
  std::string stats = "all";
  std::string modalities = "all";
  SchemaOpts schema;
  std::uint64_t seed = 0;
  int threads = 1;
};

void run_crosseval(const CrossevalOpts& o) {
  check_modalities(o.modalities);
  FeatureSchema schema = make_schema(o.schema);
  ClassifierSpec clf = make_clf_spec(o.clf, o.loss);
  clf.rf.n_threads = o.threads;
  SelectionSpec sel = make_sel_spec(o.sel, o.threads);

  Dataset train_ds = load_with_notes(o.train_data, schema);
  Dataset test_ds = load_with_notes(o.test_data, schema);

  EvalReport rep;
  if (clf.kind == ClassifierKind::sequence) {
    rep = run_cross_dataset(train_ds, test_ds, make_stats(o.stats), schema, clf, sel, o.seed);
  } else {
    StatSet stats = make_stats(o.stats);
    FeatureMatrix train_fm =
        build_feature_matrix(train_ds, stats, schema).filter_modalities(o.modalities);
    FeatureMatrix test_fm =
        build_feature_matrix(test_ds, stats, schema).filter_modalities(o.modalities);
    rep = run_cross_dataset(train_fm, test_fm, clf, sel, o.seed);
  }
  print_report(rep);
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    write_text(fs::path(o.out_dir) / "report.json", report_to_json(rep).dump(2) + "\n");
    if (!rep.roc.empty()) write_roc_csv(rep.roc, fs::path(o.out_dir) / "roc.csv");
    ordered_json cfg;
    cfg["train_data"] = o.train_data;
    cfg["test_data"] = o.test_data;
    cfg["clf"] = o.clf.clf;
    cfg["select"] = o.sel.select;
    cfg["pca"] = o.sel.pca;
    cfg["stats"] = o.stats;
    cfg["modalities"] = o.modalities;
    cfg["aus"] = o.schema.aus;
    cfg["include_valence_arousal"] = !o.schema.no_valence_arousal;
    cfg["seed"] = o.seed;
    write_run_manifest(o.out_dir, "crosseval", cfg);
  }
}

// ---------------------------------------------------------------------------
// roc

struct RocOpts {
  std::string data, model, out;
  std::string stats = "all";
  SchemaOpts schema;
};

void run_roc(const RocOpts& o) {
  FeatureSchema schema = make_schema(o.schema);
  Dataset ds = load_with_notes(o.data, schema);

  std::ifstream in(o.model);
  if (!in) throw ValidationError("cannot open " + o.model);
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, true);
  std::string format = doc.value("format", "");

  std::vector<double> scores;
  if (format == "veridict-sequence-model") {
    SequenceModel model = load_sequence_model(o.model);
    scores = sequence_scores(model, ds.samples);
  } else {
    TrainedModel model = load_model(o.model);
    FeatureMatrix fm = build_feature_matrix(ds, make_stats(o.stats), schema);
    scores = predict_score(model, fm);
  }
  std::vector<Label> labels;
  for (const auto& s : ds.samples) labels.push_back(s.label);
  RocResult roc = roc_auc(scores, labels);
  write_roc_csv(roc.points, o.out);
  std::cout << "auc " << format_double(roc.auc) << " over " << labels.size() << " samples\n";
}

// ---------------------------------------------------------------------------
// rde

struct RdeLedgerOpts {
  std::string input, matrix_out;
};

void run_rde_ledger(const RdeLedgerOpts& o) {
  std::vector<DiceRecord> records = load_dice_records(o.input);
  RdeLedger led = build_ledger(records);
  std::cout << "subjects " << led.total() << ": truthful " << led.truthful << ", overclaimed "
            << led.overclaimed << ", underclaimed " << led.underclaimed << ", no-roll "
            << led.no_roll << " (" << led.no_roll_paid() << " with paying claims)\n";
  std::cout << "honest fraction " << pct(led.honest_fraction()) << "\n";

  BlindEstimate est = estimate_lie_rate_blind(claim_histogram(records));
  std::cout << "claims-only view: excess mass " << format_double(est.excess_mass)
            << " (binomial se per face " << format_double(est.se[0]) << ")\n";
  for (int f = 0; f < 6; ++f)
    std::cout << "  face " << (f + 1) << ": freq "
              << format_double(est.freq[static_cast<std::size_t>(f)]) << ", excess "
              << format_double(est.excess[static_cast<std::size_t>(f)]) << "\n";

  if (!o.matrix_out.empty()) {
    std::string csv = "actual,claim1,claim2,claim3,claim4,claim5,claim6\n";
    for (int a = 0; a <= 6; ++a) {
      csv += std::to_string(a);
      for (int c = 0; c < 6; ++c)
        csv += "," + std::to_string(led.matrix[static_cast<std::size_t>(a)]
                                              [static_cast<std::size_t>(c)]);
      csv += "\n";
    }
    write_text(o.matrix_out, csv);
  }
}

struct RdeSimOpts {
  std::size_t rolls = 100;
  std::size_t sims = 50;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
};

void run_rde_simulate(const RdeSimOpts& o) {
  DeviationResult res = deviation_from_ideal(o.rolls, o.sims, o.seed, o.threads);
  std::cout << "deviation from ideal: " << format_double(res.mean) << " +/- "
            << format_double(res.stddev) << " % (rolls " << o.rolls << ", sims " << o.sims
            << ")\n";
  if (!o.out.empty()) {
    std::string csv = "sim,deviation_pct\n";
    for (std::size_t s = 0; s < res.per_sim.size(); ++s)
      csv += std::to_string(s) + "," + format_double(res.per_sim[s]) + "\n";
    write_text(o.out, csv);
  }
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateOpts {
  std::string input, x, y;
};

void run_correlate(const CorrelateOpts& o) {
  std::ifstream in(o.input);
  if (!in) throw ValidationError("cannot open " + o.input);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(o.input + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ValidationError(o.input + ": no column '" + name + "'");
  };
  std::size_t cx = col(o.x), cy = col(o.y);

  std::vector<double> xs, ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError(o.input + ":" + std::to_string(line_no) + ": ragged row");
    std::string where = o.input + ":" + std::to_string(line_no);
    xs.push_back(parse_double_or_throw(cells[cx], where));
    ys.push_back(parse_double_or_throw(cells[cy], where));
  }
  LinearFit fit = correlate(xs, ys);
  std::cout << "n " << xs.size() << ": r " << format_double(fit.r) << ", slope "
            << format_double(fit.slope) << ", intercept " << format_double(fit.intercept)
            << "\n";
}

// ---------------------------------------------------------------------------
// self-tests

Mat3 axis_angle(const Vec3& axis, double theta) {
  // Rodrigues rotation: an oracle independent of the Euler composition path.
  double n = axis.norm();
  Vec3 u{axis.x / n, axis.y / n, axis.z / n};
  double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = c + u.x * u.x * t;
  r(0, 1) = u.x * u.y * t - u.z * s;
  r(0, 2) = u.x * u.z * t + u.y * s;
  r(1, 0) = u.y * u.x * t + u.z * s;
  r(1, 1) = c + u.y * u.y * t;
  r(1, 2) = u.y * u.z * t - u.x * s;
  r(2, 0) = u.z * u.x * t - u.y * s;
  r(2, 1) = u.z * u.y * t + u.x * s;
  r(2, 2) = c + u.z * u.z * t;
  return r;
}

bool run_rotmath_check(std::size_t n, std::size_t pairs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x524F54ULL));
  double max_ortho = 0.0, max_det = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    SixD rep;
    rep.a1 = {rng.normal(), rng.normal(), rng.normal()};
    rep.a2 = {rng.normal(), rng.normal(), rng.normal()};
    Rotation r = sixd_to_rotation(rep);
    Mat3 g = r.m * r.m.transposed();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        max_ortho = std::max(max_ortho, std::abs(g(a, b) - (a == b ? 1.0 : 0.0)));
    max_det = std::max(max_det, std::abs(r.m.det() - 1.0));
  }

  double max_geo = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    SixD rep;
    rep.a1 = {rng.normal(), rng.normal(), rng.normal()};
    rep.a2 = {rng.normal(), rng.normal(), rng.normal()};
    Rotation r1 = sixd_to_rotation(rep);
    Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    double theta = rng.uniform(1e-3, 3.14);
    Rotation r2 = Rotation::from_matrix(r1.m * axis_angle(axis, theta));
    max_geo = std::max(max_geo, std::abs(geodesic_distance(r1, r2) - theta));
  }

  double max_euler = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    EulerYPR e{rng.uniform(-179.0, 179.0), rng.uniform(-85.0, 85.0), rng.uniform(-179.0, 179.0)};
    EulerYPR back = rotation_to_euler(euler_to_rotation(e));
    max_euler = std::max({max_euler, std::abs(wrap_angle_deg(back.yaw_deg - e.yaw_deg)),
                          std::abs(back.pitch_deg - e.pitch_deg),
                          std::abs(wrap_angle_deg(back.roll_deg - e.roll_deg))});
  }

  bool ok = max_ortho <= 1e-9 && max_det <= 1e-9 && max_geo <= 1e-9 && max_euler <= 1e-6;
  std::cout << "rotmath: orthonormality " << format_double(max_ortho) << ", det "
            << format_double(max_det) << ", geodesic-vs-axis-angle " << format_double(max_geo)
            << ", euler round trip " << format_double(max_euler) << " deg -> "
            << (ok ? "ok" : "FAIL") << "\n";
  return ok;
}

bool run_gaze_selfcheck(std::size_t cases, std::uint64_t seed) {
  BinGrid grid = BinGrid::standard();

  bool exact_ok = true;
  for (int k = 0; k < grid.n_bins; ++k) {
    BinDistribution one_hot;
    one_hot.probs.assign(static_cast<std::size_t>(grid.n_bins), 0.0);
    one_hot.probs[static_cast<std::size_t>(k)] = 1.0;
    if (expected_angle(one_hot, grid) != grid.center(k)) exact_ok = false;
  }
  BinDistribution uniform;
  uniform.probs.assign(static_cast<std::size_t>(grid.n_bins),
                       1.0 / static_cast<double>(grid.n_bins));
  if (expected_angle(uniform, grid) != 0.0) exact_ok = false;

  Rng rng(derive_seed(seed, 0x47415AULL));
  double max_rel = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    std::vector<double> logits(static_cast<std::size_t>(grid.n_bins));
    for (double& v : logits) v = rng.normal();
    double target = rng.uniform(grid.lo() + 1.0, grid.hi() - 1.0);
    GazeLoss loss = combined_gaze_loss(logits, target, grid, 1.0);
    const double h = 1e-6;
    for (std::size_t j = 0; j < logits.size(); ++j) {
      std::vector<double> hi = logits, lo = logits;
      hi[j] += h;
      lo[j] -= h;
      double num = (combined_gaze_loss(hi, target, grid, 1.0).value -
                    combined_gaze_loss(lo, target, grid, 1.0).value) /
                   (2.0 * h);
      double rel = std::abs(num - loss.grad[j]) / std::max(1.0, std::abs(num));
      max_rel = std::max(max_rel, rel);
    }
  }

  bool ok = exact_ok && max_rel < 1e-6;
  std::cout << "gaze: expectation identities " << (exact_ok ? "exact" : "FAIL")
            << ", gradient vs finite differences rel err " << format_double(max_rel) << " -> "
            << (ok ? "ok" : "FAIL") << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veridict: feature, classifier, and honesty-experiment toolkit"};
  app.set_config("--config", "", "Read options from an INI file ([subcommand] sections)");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("veridict ") + kVersion);

  SynthOpts synth;
  CLI::App* c_synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  c_synth->add_option("--out", synth.out, "Output dataset directory")->required();
  c_synth->add_option("--n", synth.cfg.n_samples, "Number of samples")->capture_default_str();
  c_synth->add_option("--frames", synth.cfg.frames_per_sample, "Nominal frames per sample")
      ->capture_default_str();
  c_synth->add_option("--truth-frac", synth.cfg.truth_fraction, "Fraction of truth labels")
      ->capture_default_str();
  c_synth->add_option("--mu", synth.cfg.effect_mu_deg, "Deceptive head-yaw shift, degrees")
      ->capture_default_str();
  c_synth->add_option("--fps", synth.cfg.fps, "Frame rate")->capture_default_str();
  c_synth->add_option("--dataset-id", synth.cfg.dataset_id, "Dataset identifier")
      ->capture_default_str();
  add_schema_opts(c_synth, synth.schema);
  add_seed_opt(c_synth, synth.seed);
  c_synth->callback([&] { run_synth(synth); });

  FeatstatsOpts featstats;
  CLI::App* c_feat = app.add_subcommand("featstats", "Extract per-sample statistical features");
  c_feat->add_option("--data", featstats.data, "Dataset directory")->required();
  c_feat->add_option("--out", featstats.out, "Output CSV")->required();
  c_feat->add_option("--stats", featstats.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  c_feat->add_option("--modalities", featstats.modalities,
                     "Column filter: gaze,pose,au,emotion or 'all'")
      ->capture_default_str();
  add_schema_opts(c_feat, featstats.schema);
  c_feat->callback([&] { run_featstats(featstats); });

  RankOpts rank;
  CLI::App* c_rank = app.add_subcommand("rank", "Permutation-importance feature ranking");
  c_rank->add_option("--data", rank.data, "Dataset directory")->required();
  c_rank->add_option("--out", rank.out, "Ranking CSV")->required();
  c_rank->add_option("--top-out", rank.top_out, "Write the selected top feature names here");
  c_rank->add_option("--select", rank.select, "Fraction for --top-out, (0, 1]")
      ->capture_default_str();
  c_rank->add_option("--clf", rank.clf, "Ranking classifier: svm|rf")->capture_default_str();
  c_rank->add_option("--repeats", rank.repeats, "Permutation repeats per feature")
      ->capture_default_str();
  c_rank->add_option("--holdout", rank.holdout, "Held-out fraction for importance scoring")
      ->capture_default_str();
  c_rank->add_option("--stats", rank.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  c_rank->add_option("--modalities", rank.modalities, "Column filter")->capture_default_str();
  c_rank->add_option("--threads", rank.threads, "Worker threads")->capture_default_str();
  add_schema_opts(c_rank, rank.schema);
  add_seed_opt(c_rank, rank.seed);
  c_rank->callback([&] { run_rank(rank); });

  TrainOpts train;
  CLI::App* c_train = app.add_subcommand("train", "Fit a classifier and save the model");
  c_train->add_option("--data", train.data, "Dataset directory")->required();
  c_train->add_option("--out-dir", train.out_dir, "Output directory")->required();
  add_clf_opts(c_train, train.clf, true);
  add_sel_opts(c_train, train.sel);
  c_train->add_option("--loss", train.loss, "Sequence loss: mae|bce|mse|all")
      ->capture_default_str();
  c_train->add_option("--val-frac", train.val_frac,
                      "Held-out fraction for sequence training curves (0 = none)")
      ->capture_default_str();
  c_train->add_option("--stats", train.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  c_train->add_option("--modalities", train.modalities, "Column filter")->capture_default_str();
  c_train->add_option("--threads", train.threads, "Worker threads")->capture_default_str();
  add_schema_opts(c_train, train.schema);
  add_seed_opt(c_train, train.seed);
  c_train->callback([&] { run_train(train); });

  EvaluateOpts evaluate;
  CLI::App* c_eval = app.add_subcommand("evaluate", "Run an evaluation protocol");
  c_eval->add_option("--data", evaluate.data, "Dataset directory");
  c_eval->add_option("--manual-table", evaluate.manual_table,
                     "Hand-annotated feature CSV instead of a dataset directory");
  c_eval->add_option("--out-dir", evaluate.out_dir, "Output directory (report, ROC, manifest)");
  add_clf_opts(c_eval, evaluate.clf, true);
  add_sel_opts(c_eval, evaluate.sel);
  c_eval->add_option("--loss", evaluate.loss, "Sequence loss: mae|bce|mse")
      ->capture_default_str();
  c_eval->add_option("--protocol", evaluate.protocol,
                     "repeated-random|leave-one-out|resubstitution")
      ->capture_default_str();
  c_eval->add_option("--repeats", evaluate.repeats, "Split repeats (repeated-random)")
      ->capture_default_str();
  c_eval->add_option("--train-frac", evaluate.train_frac, "Training fraction per split")
      ->capture_default_str();
  c_eval->add_flag("--no-stratify", evaluate.no_stratify, "Draw splits without stratification");
  c_eval->add_option("--fractions", evaluate.fractions,
                     "Comma list of selection fractions to sweep");
  c_eval->add_option("--stats", evaluate.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  c_eval->add_option("--modalities", evaluate.modalities, "Column filter")
      ->capture_default_str();
  c_eval->add_option("--threads", evaluate.threads, "Parallel repeats")->capture_default_str();
  add_schema_opts(c_eval, evaluate.schema);
  add_seed_opt(c_eval, evaluate.seed);
  c_eval->callback([&] { run_evaluate(evaluate); });

  CrossevalOpts crosseval;
  CLI::App* c_cross = app.add_subcommand("crosseval", "Train on one dataset, test on another");
  c_cross->add_option("--train-data", crosseval.train_data, "Training dataset directory")
      ->required();
  c_cross->add_option("--test-data", crosseval.test_data, "Test dataset directory")->required();
  c_cross->add_option("--out-dir", crosseval.out_dir, "Output directory");
  add_clf_opts(c_cross, crosseval.clf, true);
  add_sel_opts(c_cross, crosseval.sel);
  c_cross->add_option("--loss", crosseval.loss, "Sequence loss: mae|bce|mse")
      ->capture_default_str();
  c_cross->add_option("--stats", crosseval.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  c_cross->add_option("--modalities", crosseval.modalities, "Column filter")
      ->capture_default_str();
  c_cross->add_option("--threads", crosseval.threads, "Worker threads")->capture_default_str();
  add_schema_opts(c_cross, crosseval.schema);
  add_seed_opt(c_cross, crosseval.seed);
  c_cross->callback([&] { run_crosseval(crosseval); });

  RocOpts roc;
  CLI::App* c_roc = app.add_subcommand("roc", "Score a dataset with a saved model, write ROC");
  c_roc->add_option("--data", roc.data, "Dataset directory")->required();
  c_roc->add_option("--model", roc.model, "Model JSON from the train command")->required();
  c_roc->add_option("--out", roc.out, "ROC CSV (fpr,tpr,threshold)")->required();
  c_roc->add_option("--stats", roc.stats, "Comma list of statistics or 'all'")
      ->capture_default_str();
  add_schema_opts(c_roc, roc.schema);
  c_roc->callback([&] { run_roc(roc); });

  CLI::App* c_rde = app.add_subcommand("rde", "Rolling-dice experiment analytics");
  c_rde->require_subcommand(1);
  RdeLedgerOpts rde_ledger;
  CLI::App* c_ledger = c_rde->add_subcommand("ledger", "Tally claims against actual rolls");
  c_ledger->add_option("--input", rde_ledger.input, "CSV subject_id,actual,claimed")->required();
  c_ledger->add_option("--matrix-out", rde_ledger.matrix_out,
                       "Write the actual x claimed matrix CSV here");
  c_ledger->callback([&] { run_rde_ledger(rde_ledger); });
  RdeSimOpts rde_sim;
  CLI::App* c_sim = c_rde->add_subcommand("simulate", "Monte Carlo deviation from the fair die");
  c_sim->add_option("--rolls", rde_sim.rolls, "Rolls per simulation")->capture_default_str();
  c_sim->add_option("--sims", rde_sim.sims, "Number of simulations")->capture_default_str();
  c_sim->add_option("--out", rde_sim.out, "Per-simulation CSV");
  c_sim->add_option("--threads", rde_sim.threads, "Worker threads")->capture_default_str();
  add_seed_opt(c_sim, rde_sim.seed);
  c_sim->callback([&] { run_rde_simulate(rde_sim); });

  CorrelateOpts correlate_opts;
  CLI::App* c_corr =
      app.add_subcommand("correlate", "Pearson r and least-squares line of two CSV columns");
  c_corr->add_option("--input", correlate_opts.input, "CSV file with a header row")->required();
  c_corr->add_option("--x", correlate_opts.x, "X column name")->required();
  c_corr->add_option("--y", correlate_opts.y, "Y column name")->required();
  c_corr->callback([&] { run_correlate(correlate_opts); });

  struct {
    std::size_t n = 10000, pairs = 1000;
    std::uint64_t seed = 1;
  } rot;
  CLI::App* c_rot = app.add_subcommand("rotmath", "Rotation math utilities");
  c_rot->require_subcommand(1);
  CLI::App* c_rotchk = c_rot->add_subcommand("check", "Property self-test of the rotation stack");
  c_rotchk->add_option("--n", rot.n, "Random 6D inputs")->capture_default_str();
  c_rotchk->add_option("--pairs", rot.pairs, "Geodesic oracle pairs")->capture_default_str();
  add_seed_opt(c_rotchk, rot.seed);
  c_rotchk->callback([&] {
    if (!run_rotmath_check(rot.n, rot.pairs, rot.seed))
      throw ValidationError("rotmath self-test failed");
  });

  struct {
    std::size_t cases = 100;
    std::uint64_t seed = 1;
  } gaze_opts;
  CLI::App* c_gaze = app.add_subcommand("gaze", "Gaze decode utilities");
  c_gaze->require_subcommand(1);
  CLI::App* c_gazechk =
      c_gaze->add_subcommand("selfcheck", "Identity and gradient self-test of the gaze decode");
  c_gazechk->add_option("--cases", gaze_opts.cases, "Random gradient-check cases")
      ->capture_default_str();
  add_seed_opt(c_gazechk, gaze_opts.seed);
  c_gazechk->callback([&] {
    if (!run_gaze_selfcheck(gaze_opts.cases, gaze_opts.seed))
      throw ValidationError("gaze self-test failed");
  });

  struct {
    std::uint64_t seed = 1;
  } self;
  CLI::App* c_self = app.add_subcommand("selfcheck", "Run all module self-tests");
  add_seed_opt(c_self, self.seed);
  c_self->callback([&] {
    bool ok = run_rotmath_check(10000, 1000, self.seed);
    ok = run_gaze_selfcheck(100, self.seed) && ok;
    if (!ok) throw ValidationError("self-test failed");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include "cli.hpp"

#include "stelle/concepts.hpp"
#include "stelle/explain.hpp"
#include "stelle/io.hpp"
#include "stelle/metrics.hpp"
#include "stelle/parallel.hpp"
#include "stelle/robustness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace stelle {

using nlohmann::json;

namespace {

/// Component seeds derive from the root seed by fixed offsets.
constexpr std::uint64_t kSelectionSeedOffset = 1;
constexpr std::uint64_t kTrainSeedOffset = 2;
constexpr std::uint64_t kMu0SeedOffset = 3;

double round6(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

/// Display form: thresholds cut to 6 significant digits.
Formula display(const Formula& f) {
  switch (f.op()) {
    case Op::True:
      return f;
    case Op::Atom: {
      Atom a = f.atom();
      a.threshold = round6(a.threshold);
      return Formula::atom(a);
    }
    default:
      break;
  }
  if (f.arity() == 1) return f.with_child(display(f.lhs()));
  return f.with_children(display(f.lhs()), display(f.rhs()));
}

std::string show(const Formula& f) { return to_string(display(f)); }

json num(double x) { return round6(x); }

json variables_json(const Formula& f) {
  const auto vs = variable_set(f);
  return std::vector<int>(vs.begin(), vs.end());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

struct LoadedData {
  Dataset raw;
  Dataset data;  // preprocessed
};

/// Dataset transformed with a model's preprocessing and relabelled with its class map.
LoadedData load_for_model(const std::string& path, const SavedModel& m) {
  LoadedData ld;
  ld.raw = load_dataset(path);
  if (ld.raw.channel_names != m.preprocess.channel_names)
    throw std::runtime_error("dataset '" + path + "' channels do not match the model's training channels");
  remap_labels(ld.raw, m.class_names);
  ld.data = apply_preprocess(ld.raw, m.preprocess);
  if (ld.data.length() != m.state.length)
    throw std::runtime_error("dataset '" + path + "' has length " + std::to_string(ld.data.length()) +
                             ", the model expects " + std::to_string(m.state.length));
  return ld;
}

int class_index(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw std::runtime_error("unknown class '" + name + "'");
}

ExplainConfig explain_config(const std::optional<int>& budget, double cum, double slack, double coverage, int ig_steps) {
  ExplainConfig cfg;
  cfg.budget = budget;
  cfg.cumulative = cum;
  cfg.simplification_slack = slack;
  cfg.coverage = coverage;
  cfg.ig_steps = ig_steps;
  cfg.validate();
  return cfg;
}

json explain_config_json(const ExplainConfig& c) {
  return {{"budget", c.budget ? json(*c.budget) : json(nullptr)},
          {"cumulative", c.cumulative},
          {"simplification_slack", c.simplification_slack},
          {"coverage", c.coverage},
          {"ig_steps", c.ig_steps}};
}

void log_config(std::ostream& err, const std::string& command, const json& cfg) {
  json j = cfg;
  j["command"] = command;
  j["threads"] = thread_count();
  err << "config " << j.dump() << '\n';
}

std::vector<LocalExplanation> explain_all(const ModelState& s, std::span<const Trajectory> taus,
                                          std::span<const int> targets, const ExplainConfig& cfg) {
  std::vector<LocalExplanation> out(taus.size());
  parallel_for(taus.size(), [&](std::size_t i) { out[i] = explain_local(s, taus[i], targets[i], cfg); });
  return out;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-based interpretable classification of multivariate time series"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // gen-concepts
  auto* gen = app.add_subcommand("gen-concepts", "Generate a diverse concept set from training data");
  std::string gen_data, gen_out;
  ConceptGenConfig gcfg;
  gen->add_option("--data", gen_data, "Training CSV")->required();
  gen->add_option("--out", gen_out, "Concept file to write")->required();
  gen->add_option("--per-var", gcfg.selection.per_variable_count, "Concepts per channel")->capture_default_str();
  gen->add_option("--min-total", gcfg.selection.min_total, "Minimum total concepts")->capture_default_str();
  gen->add_option("--sim-threshold", gcfg.selection.similarity_threshold, "Cosine similarity cut-off")
      ->capture_default_str();
  gen->add_option("--max-nodes", gcfg.templates.max_nodes, "Largest template size")->capture_default_str();
  gen->add_option("--seed", seed, "Root seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Fit a model");
  std::string tr_data, tr_concepts, tr_out, tr_metrics, tr_mode = "kernel";
  ModelConfig mcfg;
  TrainConfig tcfg;
  train->add_option("--data", tr_data, "Training CSV")->required();
  train->add_option("--concepts", tr_concepts, "Concept file")->required();
  train->add_option("--out", tr_out, "Model file to write")->required();
  train->add_option("--metrics-out", tr_metrics, "Training history JSON");
  train->add_option("--mode", tr_mode, "Embedding: kernel or robustness")
      ->check(CLI::IsMember({"kernel", "robustness"}))
      ->capture_default_str();
  train->add_option("--hidden", mcfg.hidden_dims, "Hidden layer widths")->capture_default_str();
  train->add_option("--dropout", mcfg.dropout)->capture_default_str();
  train->add_option("--mc", mcfg.kernel.mc_trajectories, "Monte-Carlo sample size")->capture_default_str();
  train->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
  train->add_option("--lr", tcfg.lr)->capture_default_str();
  train->add_option("--patience", tcfg.patience)->capture_default_str();
  train->add_option("--val-fraction", tcfg.val_fraction)->capture_default_str();
  train->add_option("--seed", seed, "Root seed")->capture_default_str();

  // predict
  auto* pred = app.add_subcommand("predict", "Classify trajectories");
  std::string pr_model, pr_data;
  pred->add_option("--model", pr_model)->required();
  pred->add_option("--data", pr_data)->required();

  // explanation options shared by the explain and evaluate commands
  std::optional<int> budget;
  double cum = 0.8, slack = 0.0, coverage = 0.0;
  int ig_steps = 64;
  std::string ex_model, ex_data, ex_sidecar, ex_class;
  auto add_local_opts = [&](CLI::App* c) {
    auto* b = c->add_option("--budget", budget, "Fixed number of concepts");
    c->add_option("--cum", cum, "Cumulative relevance cut-off")->capture_default_str()->excludes(b);
    c->add_option("--slack", slack, "Simplification slack")->capture_default_str();
    c->add_option("--ig-steps", ig_steps)->capture_default_str();
  };

  auto* exl = app.add_subcommand("explain-local", "Explain individual predictions");
  exl->add_option("--model", ex_model)->required();
  exl->add_option("--data", ex_data)->required();
  exl->add_option("--class", ex_class, "Explain this class instead of the prediction");
  exl->add_option("--sidecar", ex_sidecar, "Machine-readable output");
  add_local_opts(exl);

  auto* exg = app.add_subcommand("explain-global", "Explain classes");
  exg->add_option("--model", ex_model)->required();
  exg->add_option("--train-data", ex_data)->required();
  exg->add_option("--class", ex_class, "Only this class");
  exg->add_option("--coverage", coverage, "Set-cover coverage; 0 selects separability search")->capture_default_str();
  exg->add_option("--sidecar", ex_sidecar, "Machine-readable output");
  add_local_opts(exg);

  auto* ev = app.add_subcommand("evaluate", "Accuracy, separability and readability report");
  std::string ev_train;
  ev->add_option("--model", ex_model)->required();
  ev->add_option("--data", ex_data)->required();
  ev->add_option("--train-data", ev_train, "Training CSV for global explanations (default: the model's reference set)");
  ev->add_option("--coverage", coverage)->capture_default_str();
  ev->add_option("--report", ex_sidecar, "Machine-readable report");
  add_local_opts(ev);

  auto* syn = app.add_subcommand("make-synthetic", "Write the pulse benchmark");
  std::string syn_train, syn_test;
  SyntheticConfig scfg;
  int test_per_class = 50;
  syn->add_option("--out-train", syn_train)->required();
  syn->add_option("--out-test", syn_test)->required();
  syn->add_option("--per-class", scfg.per_class)->capture_default_str();
  syn->add_option("--test-per-class", test_per_class)->capture_default_str();
  syn->add_option("--seed", seed)->capture_default_str();
  syn->add_flag("--decoy", scfg.decoy, "Give class 0 an off-window pulse");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    if (*gen) {
      gcfg.selection.seed = seed + kSelectionSeedOffset;
      log_config(err, "gen-concepts",
                 {{"data", gen_data},
                  {"out", gen_out},
                  {"seed", seed},
                  {"selection_seed", gcfg.selection.seed},
                  {"per_var", gcfg.selection.per_variable_count},
                  {"min_total", gcfg.selection.min_total},
                  {"sim_threshold", gcfg.selection.similarity_threshold},
                  {"max_nodes", gcfg.templates.max_nodes}});
      const Dataset raw = load_dataset(gen_data);
      const PreprocessStats ps = fit_preprocess(raw);
      for (const auto& w : ps.warnings) err << "warning: " << w << '\n';
      const Dataset ds = apply_preprocess(raw, ps);
      const SelectionResult res = generate_concepts(ds.trajectories, gcfg);
      if (res.exhausted) err << "warning: candidate stream exhausted before the target count\n";
      save_concepts(gen_out, res.concepts);
      out << "concepts " << res.concepts.size() << " candidates_seen " << res.candidates_seen << " seconds "
          << format_number(elapsed()) << '\n';
      return 0;
    }

    if (*train) {
      mcfg.mode = tr_mode == "kernel" ? EmbeddingMode::Kernel : EmbeddingMode::Robustness;
      tcfg.seed = seed + kTrainSeedOffset;
      mcfg.kernel.mu0.seed = seed + kMu0SeedOffset;
      log_config(err, "train",
                 {{"data", tr_data},
                  {"concepts", tr_concepts},
                  {"out", tr_out},
                  {"seed", seed},
                  {"train_seed", tcfg.seed},
                  {"mu0_seed", mcfg.kernel.mu0.seed},
                  {"mode", tr_mode},
                  {"hidden", mcfg.hidden_dims},
                  {"dropout", mcfg.dropout},
                  {"mc_trajectories", mcfg.kernel.mc_trajectories},
                  {"temperature", mcfg.temperature},
                  {"epsilon", mcfg.epsilon},
                  {"eps_G", mcfg.eps_G},
                  {"lambda_T", mcfg.lambda_T},
                  {"lambda_eps", mcfg.lambda_eps},
                  {"epochs", tcfg.epochs},
                  {"batch_size", tcfg.batch_size},
                  {"lr", tcfg.lr},
                  {"patience", tcfg.patience},
                  {"val_fraction", tcfg.val_fraction},
                  {"clip_norm", tcfg.clip_norm},
                  {"lr_multiplier_aux", tcfg.lr_multiplier_aux}});
      const Dataset raw = load_dataset(tr_data);
      if (raw.classes() < 2) throw std::runtime_error("training data needs at least two classes");
      SavedModel m;
      m.preprocess = fit_preprocess(raw);
      for (const auto& w : m.preprocess.warnings) err << "warning: " << w << '\n';
      m.class_names = raw.class_names;
      const Dataset ds = apply_preprocess(raw, m.preprocess);
      ConceptSet concepts = load_concepts(tr_concepts);
      for (const auto& f : concepts.formulas)
        for (int v : variable_set(f))
          if (v >= ds.channels())
            throw std::runtime_error("concept '" + to_string(f) + "' uses x" + std::to_string(v) + " but the data has " +
                                     std::to_string(ds.channels()) + " channels after preprocessing");
      FitResult fr = fit(concepts, ds.trajectories, mcfg, tcfg);
      m.state = std::move(fr.state);
      save_model(tr_out, m);
      int correct = 0;
      for (const auto& t : ds.trajectories) correct += predict(m.state, t).label == *t.label;
      const double acc = static_cast<double>(correct) / static_cast<double>(ds.trajectories.size());
      out << "epochs " << fr.history.size() << " best_epoch " << fr.best_epoch << " train_accuracy "
          << format_number(acc) << " T " << format_number(m.state.T) << " epsilon "
          << format_number(m.state.epsilon()) << " seconds " << format_number(elapsed()) << '\n';
      if (!tr_metrics.empty()) {
        json hist = json::array();
        for (const auto& r : fr.history)
          hist.push_back({{"epoch", r.epoch},
                          {"train_loss", num(r.train_loss)},
                          {"val_loss", num(r.val_loss)},
                          {"val_accuracy", num(r.val_accuracy)}});
        write_json(tr_metrics, {{"history", hist},
                                {"best_epoch", fr.best_epoch},
                                {"train_accuracy", num(acc)},
                                {"T", num(m.state.T)},
                                {"epsilon", num(m.state.epsilon())}});
      }
      return 0;
    }

    if (*pred) {
      log_config(err, "predict", {{"model", pr_model}, {"data", pr_data}});
      const SavedModel m = load_model(pr_model);
      const LoadedData ld = load_for_model(pr_data, m);
      out << "id,predicted";
      for (const auto& c : m.class_names) out << ",p_" << c;
      out << '\n';
      int labelled = 0, correct = 0;
      for (const auto& t : ld.data.trajectories) {
        const Prediction p = predict(m.state, t);
        out << t.id << ',' << m.class_names[static_cast<std::size_t>(p.label)];
        for (Eigen::Index k = 0; k < p.probabilities.size(); ++k) out << ',' << format_number(p.probabilities[k]);
        out << '\n';
        if (t.label) {
          ++labelled;
          correct += *t.label == p.label;
        }
      }
      if (labelled) err << "accuracy " << format_number(static_cast<double>(correct) / labelled) << '\n';
      return 0;
    }

    if (*exl) {
      const ExplainConfig cfg = explain_config(budget, cum, slack, 0.0, ig_steps);
      log_config(err, "explain-local",
                 {{"model", ex_model}, {"data", ex_data}, {"class", ex_class}, {"explain", explain_config_json(cfg)}});
      const SavedModel m = load_model(ex_model);
      const LoadedData ld = load_for_model(ex_data, m);
      const auto& taus = ld.data.trajectories;
      std::vector<int> targets;
      std::vector<Prediction> preds;
      for (const auto& t : taus) {
        preds.push_back(predict(m.state, t));
        targets.push_back(ex_class.empty() ? preds.back().label : class_index(m.class_names, ex_class));
      }
      const auto expls = explain_all(m.state, taus, targets, cfg);
      json side = json::array();
      for (std::size_t i = 0; i < taus.size(); ++i) {
        const auto& ex = expls[i];
        const double sep = local_separability(ex.postprocessed, taus[i], ex.target_class, m.state.reference);
        out << taus[i].id << '\t' << m.class_names[static_cast<std::size_t>(ex.target_class)] << '\t'
            << show(ex.postprocessed) << '\n';
        json sel = json::array();
        for (const auto& s : ex.selected)
          sel.push_back({{"concept", s.index},
                         {"formula", show(s.formula)},
                         {"relevance", num(s.relevance)},
                         {"nodes", s.formula.node_count()},
                         {"variables", variables_json(s.formula)}});
        side.push_back({{"id", taus[i].id},
                        {"class", m.class_names[static_cast<std::size_t>(ex.target_class)]},
                        {"predicted", m.class_names[static_cast<std::size_t>(preds[i].label)]},
                        {"formula", show(ex.postprocessed)},
                        {"formula_exact", to_string(ex.postprocessed)},
                        {"nodes", ex.postprocessed.node_count()},
                        {"nodes_before_simplification", ex.conjunction.node_count()},
                        {"variables", variables_json(ex.postprocessed)},
                        {"robustness", num(robustness(ex.postprocessed, taus[i]))},
                        {"local_separability", num(sep)},
                        {"degenerate", ex.degenerate},
                        {"selected", sel}});
      }
      if (!ex_sidecar.empty()) write_json(ex_sidecar, side);
      return 0;
    }

    if (*exg) {
      const ExplainConfig cfg = explain_config(budget, cum, slack, coverage, ig_steps);
      log_config(err, "explain-global",
                 {{"model", ex_model}, {"train_data", ex_data}, {"class", ex_class}, {"explain", explain_config_json(cfg)}});
      const SavedModel m = load_model(ex_model);
      const LoadedData ld = load_for_model(ex_data, m);
      std::vector<int> classes;
      if (ex_class.empty())
        for (int k = 0; k < m.state.K; ++k) classes.push_back(k);
      else
        classes.push_back(class_index(m.class_names, ex_class));
      json side = json::array();
      for (int k : classes) {
        const GlobalExplanation g = explain_global(m.state, ld.data.trajectories, k, cfg);
        if (g.empty_cover) err << "warning: class " << m.class_names[static_cast<std::size_t>(k)] << " has an empty cover\n";
        const Confusion c = class_confusion(g.postprocessed, k, ld.data.trajectories);
        const double sep = c.total() ? 100.0 * (c.tp + c.tn) / c.total() : 0.0;
        out << m.class_names[static_cast<std::size_t>(k)] << '\t' << show(g.postprocessed) << '\n';
        json disj = json::array();
        for (const auto& d : g.disjuncts) {
          const Confusion dc = class_confusion(d, k, ld.data.trajectories);
          disj.push_back({{"formula", show(d)},
                          {"nodes", d.node_count()},
                          {"variables", variables_json(d)},
                          {"separability", num(dc.total() ? 100.0 * (dc.tp + dc.tn) / dc.total() : 0.0)}});
        }
        side.push_back({{"class", m.class_names[static_cast<std::size_t>(k)]},
                        {"formula", show(g.postprocessed)},
                        {"formula_exact", to_string(g.postprocessed)},
                        {"nodes", g.postprocessed.node_count()},
                        {"nodes_before_simplification", g.disjunction.node_count()},
                        {"variables", variables_json(g.postprocessed)},
                        {"separability", num(sep)},
                        {"candidates", g.candidates.size()},
                        {"uncovered", g.uncovered},
                        {"empty_cover", g.empty_cover},
                        {"disjuncts", disj}});
      }
      if (!ex_sidecar.empty()) write_json(ex_sidecar, side);
      return 0;
    }

    if (*ev) {
      const ExplainConfig cfg = explain_config(budget, cum, slack, coverage, ig_steps);
      log_config(err, "evaluate",
                 {{"model", ex_model}, {"data", ex_data}, {"train_data", ev_train}, {"explain", explain_config_json(cfg)}});
      const SavedModel m = load_model(ex_model);
      const ModelState& s = m.state;
      const LoadedData ld = load_for_model(ex_data, m);
      const auto& taus = ld.data.trajectories;
      for (const auto& t : taus)
        if (!t.label) throw std::runtime_error("evaluate needs labelled data; trajectory '" + t.id + "' has no label");
      std::vector<Trajectory> train_set = s.reference;
      if (!ev_train.empty()) train_set = load_for_model(ev_train, m).data.trajectories;

      std::vector<int> predicted, truth;
      for (const auto& t : taus) {
        predicted.push_back(predict(s, t).label);
        truth.push_back(*t.label);
      }
      const auto expl_pred = explain_all(s, taus, predicted, cfg);
      std::vector<double> sep_ok, sep_pred, sep_true;
      std::vector<Trajectory> wrong_taus;
      std::vector<int> wrong_truth;
      std::vector<Trajectory> correct_set, wrong_set;
      std::vector<Formula> forms;
      std::vector<std::string> tags;
      int correct = 0;
      for (std::size_t i = 0; i < taus.size(); ++i) {
        const double sp = local_separability(expl_pred[i].postprocessed, taus[i], predicted[i], train_set);
        forms.push_back(expl_pred[i].conjunction);
        tags.push_back("local pre");
        forms.push_back(expl_pred[i].postprocessed);
        tags.push_back("local post");
        if (predicted[i] == truth[i]) {
          ++correct;
          sep_ok.push_back(sp);
          correct_set.push_back(taus[i]);
        } else {
          sep_pred.push_back(sp);
          wrong_taus.push_back(taus[i]);
          wrong_truth.push_back(truth[i]);
          wrong_set.push_back(taus[i]);
        }
      }
      const auto expl_true = explain_all(s, wrong_taus, wrong_truth, cfg);
      for (std::size_t i = 0; i < wrong_taus.size(); ++i)
        sep_true.push_back(local_separability(expl_true[i].postprocessed, wrong_taus[i], wrong_truth[i], train_set));

      SeparabilityReport rep;
      rep.local_correct = mean_std(sep_ok);
      rep.local_misclassified_predicted = mean_std(sep_pred);
      rep.local_misclassified_true = mean_std(sep_true);
      std::map<int, Formula> globals;
      json gj = json::array();
      for (int k = 0; k < s.K; ++k) {
        const GlobalExplanation g = explain_global(s, train_set, k, cfg);
        globals[k] = g.postprocessed;
        forms.push_back(g.disjunction);
        tags.push_back("global pre");
        forms.push_back(g.postprocessed);
        tags.push_back("global post");
        gj.push_back({{"class", m.class_names[static_cast<std::size_t>(k)]},
                      {"formula", show(g.postprocessed)},
                      {"empty_cover", g.empty_cover}});
      }
      rep.global_all = global_separability(globals, taus);
      rep.global_correct = global_separability(globals, correct_set);
      rep.global_misclassified = global_separability(globals, wrong_set);
      const PRF prf = global_prf(globals, taus);
      const ReadabilityReport rr = readability(forms, tags);
      const double acc = static_cast<double>(correct) / static_cast<double>(taus.size());

      out << "accuracy " << format_number(acc) << "\n\n";
      out << separability_table(rep) << '\n';
      out << "global explanation classifier: recall " << format_number(prf.recall) << " specificity "
          << format_number(prf.specificity) << " precision " << format_number(prf.precision)
          << (prf.precision_degenerate ? " (some class predicts nothing)" : "") << "\n\n";
      out << readability_table(rr);
      for (const auto& g : gj) out << "global " << g["class"].get<std::string>() << '\t' << g["formula"].get<std::string>() << '\n';

      if (!ex_sidecar.empty()) {
        const auto ms = [](const MeanStd& x) { return json{{"mean", num(x.mean)}, {"std", num(x.std)}, {"n", x.n}}; };
        const auto gs = [&](const GlobalSeparability& g) {
          json per = json::object();
          if (g.total == 0) return json{{"per_class", per}, {"micro", nullptr}};
          for (const auto& [k, v] : g.per_class) per[m.class_names[static_cast<std::size_t>(k)]] = num(v);
          return json{{"per_class", per}, {"micro", num(g.micro)}};
        };
        json rj = json::object();
        for (const auto& [tag, row] : rr.rows) rj[tag] = {{"nodes", ms(row.nodes)}, {"variables", ms(row.variables)}};
        write_json(ex_sidecar, {{"accuracy", num(acc)},
                                {"local_separability",
                                 {{"correct", ms(rep.local_correct)},
                                  {"misclassified_predicted", ms(rep.local_misclassified_predicted)},
                                  {"misclassified_true", ms(rep.local_misclassified_true)}}},
                                {"global_separability",
                                 {{"all", gs(rep.global_all)},
                                  {"correct", gs(rep.global_correct)},
                                  {"misclassified", gs(rep.global_misclassified)}}},
                                {"global_prf",
                                 {{"recall", num(prf.recall)},
                                  {"specificity", num(prf.specificity)},
                                  {"precision", num(prf.precision)},
                                  {"precision_degenerate", prf.precision_degenerate}}},
                                {"readability", rj},
                                {"global_explanations", gj}});
      }
      return 0;
    }

    if (*syn) {
      log_config(err, "make-synthetic",
                 {{"out_train", syn_train}, {"out_test", syn_test}, {"per_class", scfg.per_class},
                  {"test_per_class", test_per_class}, {"decoy", scfg.decoy}, {"seed", seed}});
      scfg.seed = seed;
      save_dataset(syn_train, make_synthetic(scfg));
      SyntheticConfig tc = scfg;
      tc.per_class = test_per_class;
      tc.seed = seed + 1;
      Dataset test = make_synthetic(tc);
      for (auto& t : test.trajectories) t.id = "t" + t.id.substr(1);
      save_dataset(syn_test, test);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace stelle

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dyadnet/cli_io.hpp"
#include "dyadnet/error.hpp"

using namespace dyadnet;

namespace {

// Flag values; unset optionals fall back to the config file, then to defaults.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  std::optional<double> level, t, bandwidth, m_floor;
  std::optional<int> m_tilde, sign, grid_points;
  std::optional<std::string> kernel, out;
  bool drop_isolated = false, heteroskedastic = false;
  std::optional<bool> standardize;
  std::vector<double> levels;

  std::string edges, covariates, nodes, special;
  std::vector<std::string> discrete, equality;
  std::optional<int> node_count;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override it");
  app->add_option("--seed", f.seed, "base seed for every random draw");
  app->add_option("--B", f.draws, "Gaussian draws for critical values and intervals");
  app->add_option("--level", f.level, "significance level nu");
  app->add_option("--bandwidth", f.bandwidth, "skip bandwidth selection");
  app->add_option("--m-floor", f.m_floor, "density floor");
  app->add_option("--kernel", f.kernel, "bw2 or bw4");
  app->add_option("--grid-points", f.grid_points, "bandwidth grid size");
  app->add_option("--sign", f.sign, "special regressor sign, +1 or -1 (default: detect)");
  app->add_option("--out", f.out, "output directory");
  app->add_flag("--drop-isolated", f.drop_isolated, "remove nodes with zero in- or out-degree");
  app->add_flag("--standardize,!--no-standardize", f.standardize,
                "standardize continuous pairwise covariates (default: on for data files, off for simulations)");
  app->add_flag("--heteroskedastic", f.heteroskedastic, "sandwich covariances");
}

void add_input_flags(CLI::App* app, Flags& f) {
  app->add_option("--edges", f.edges, "edge list with header i,j,a");
  app->add_option("--covariates", f.covariates, "pairwise covariates with header i,j,<names>");
  app->add_option("--nodes", f.nodes, "node attributes with header i,<names> (absolute differences)");
  app->add_option("--special-regressor", f.special, "covariate used as the special regressor");
  app->add_option("--discrete", f.discrete, "discrete pairwise columns");
  app->add_option("--equality", f.equality, "node attributes compared by equality");
  app->add_option("--node-count", f.node_count, "number of nodes when some are absent from the files");
}

struct Setup {
  RunConfig run;
  InputSchema schema;
};

Setup resolve(const Flags& f, bool real_data) {
  Setup s;
  s.run.standardize = real_data;
  if (!f.config.empty()) {
    const json j = read_json(f.config);
    s.run = run_config_from_json(j, s.run);
    if (j.contains("input")) s.schema = schema_from_json(j.at("input"));
  }
  RunConfig& r = s.run;
  if (f.seed) r.seed = *f.seed;
  if (f.draws) r.draws = *f.draws;
  if (f.level) r.level = *f.level;
  if (f.t) r.t = *f.t;
  if (f.m_tilde) r.m_tilde = *f.m_tilde;
  if (f.bandwidth) r.bandwidth = *f.bandwidth;
  if (f.m_floor) r.m_floor = *f.m_floor;
  if (f.kernel) r.kernel = parse_kernel(*f.kernel);
  if (f.grid_points) r.grid.points = *f.grid_points;
  if (f.sign) r.sign = *f.sign;
  if (f.out) r.output_dir = *f.out;
  r.drop_isolated = r.drop_isolated || f.drop_isolated;
  if (f.standardize) r.standardize = *f.standardize;
  r.heteroskedastic = r.heteroskedastic || f.heteroskedastic;
  if (!f.levels.empty()) r.levels = f.levels;
  r.validate();

  InputSchema& in = s.schema;
  if (!f.edges.empty()) in.edges = f.edges;
  if (!f.covariates.empty()) in.covariates = f.covariates;
  if (!f.nodes.empty()) in.nodes = f.nodes;
  if (!f.special.empty()) in.special_regressor = f.special;
  if (!f.discrete.empty()) in.discrete = f.discrete;
  if (f.node_count) in.node_count = *f.node_count;
  if (!f.equality.empty()) {
    // Every other node attribute becomes an absolute difference.
    const CsvTable t = read_csv(in.nodes);
    in.rules.clear();
    for (const std::string& h : t.header)
      if (h != "i") {
        const bool eq = std::find(f.equality.begin(), f.equality.end(), h) != f.equality.end();
        in.rules.push_back({h, eq ? Constructor::Equality : Constructor::AbsDiff});
      }
    for (const std::string& e : f.equality)
      if (t.column(e) < 0) throw Error(ErrorCode::UnknownColumn, "attribute '" + e + "' not found");
  }
  return s;
}

std::string out_path(const RunConfig& r, const std::string& name) {
  return (std::filesystem::path(r.output_dir) / name).string();
}

ModelFit load_and_fit(const Setup& s) { return fit(load_network(s.schema), s.run.fit_options()); }

void write_estimates(const RunConfig& r, const ModelFit& f) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < f.n(); ++i)
    rows.push_back({double(f.kept_nodes[i] + 1), f.alpha[i], f.beta[i]});
  write_csv(out_path(r, "degree_estimates.csv"), {"node", "alpha", "beta"}, rows);
}

std::vector<int> one_based_to_local(const ModelFit& f, const std::vector<int>& ids) {
  std::vector<int> out;
  for (int id : ids) {
    auto it = std::find(f.kept_nodes.begin(), f.kept_nodes.end(), id - 1);
    if (it == f.kept_nodes.end()) throw Error(ErrorCode::NodeOutOfRange, "node " + std::to_string(id) + " not in the fitted network");
    out.push_back(static_cast<int>(it - f.kept_nodes.begin()));
  }
  return out;
}

void emit(const std::string& path, const json& j) {
  write_json(path, j);
  std::cout << j.dump(2) << "\n";
}

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numerical: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric directed network formation: estimation and inference"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "draw a network from a simulation design");
  std::string schedule = "consistency", noise = "normal";
  double knob = 0, noise_var = 1;
  int sim_n = 50;
  simulate->add_option("--schedule", schedule, "consistency, sparse, support, heterogeneity or weighted");
  simulate->add_option("--n", sim_n, "number of nodes");
  simulate->add_option("--knob", knob, "rho1, rho2, rho3, or the weighted degree value");
  simulate->add_option("--noise", noise, "normal, logistic, mnorm1, mnorm2 or uniform-hetero");
  simulate->add_option("--noise-var", noise_var,
                       "variance of normal noise; logistic scale is half its sd (default: the design's, 1 or 0.25)");

  auto* fit_cmd = app.add_subcommand("fit", "fit the binary model");
  auto* sparse_cmd = app.add_subcommand("test-sparse", "max test of alpha = 0 or beta = 0");
  auto* support_cmd = app.add_subcommand("recover-support", "threshold the degree estimates");
  auto* hetero_cmd = app.add_subcommand("test-heterogeneity", "max test of equal degree parameters");
  auto* ci_cmd = app.add_subcommand("ci", "confidence intervals");
  auto* bw_cmd = app.add_subcommand("select-bandwidth", "bandwidth grid search");
  auto* gof_cmd = app.add_subcommand("gof", "observed against fitted degrees");
  auto* mc_cmd = app.add_subcommand("montecarlo", "Monte-Carlo study");
  auto* weighted_cmd = app.add_subcommand("fit-weighted", "fit the weighted model");

  for (CLI::App* c : {simulate, fit_cmd, sparse_cmd, support_cmd, hetero_cmd, ci_cmd, bw_cmd, gof_cmd, mc_cmd,
                      weighted_cmd})
    add_run_flags(c, f);
  for (CLI::App* c : {fit_cmd, sparse_cmd, support_cmd, hetero_cmd, ci_cmd, bw_cmd, gof_cmd, weighted_cmd})
    add_input_flags(c, f);

  std::string which = "alpha";
  std::vector<int> group;
  bool full_family = false;
  for (CLI::App* c : {sparse_cmd, support_cmd, hetero_cmd}) c->add_option("--which", which, "alpha or beta");
  support_cmd->add_option("--threshold-t", f.t, "threshold constant t");
  hetero_cmd->add_option("--m-tilde", f.m_tilde, "number of relabelings");
  hetero_cmd->add_option("--group", group, "1-based node ids (default: every node)");
  hetero_cmd->add_flag("--all-pairs", full_family, "use every pair in the group");

  std::string param = "alpha", method = "resampled";
  std::vector<int> index;
  std::vector<int> diff;
  ci_cmd->add_option("--param", param, "alpha, beta or eta");
  ci_cmd->add_option("--index", index, "1-based node ids or eta positions");
  ci_cmd->add_option("--diff", diff, "two node ids: interval for param_i - param_j")->expected(2);
  ci_cmd->add_option("--method", method, "resampled or exact");

  std::string study = "consistency";
  int mc_reps = 100, mc_n = 50;
  double mc_knob = 0, mc_noise_var = 1;
  std::string mc_noise = "normal";
  std::vector<int> mc_m_tilde{0};
  std::vector<double> mc_t{2};
  bool oracle = false;
  mc_cmd->add_option("--study", study, "consistency, sparse, support, heterogeneity or weighted");
  mc_cmd->add_option("--reps", mc_reps, "replications");
  mc_cmd->add_option("--n", mc_n, "number of nodes");
  mc_cmd->add_option("--knob", mc_knob, "rho1, rho2 or rho3");
  mc_cmd->add_option("--noise", mc_noise, "normal, logistic, mnorm1, mnorm2 or uniform-hetero");
  mc_cmd->add_option("--noise-var", mc_noise_var,
                     "variance of normal noise; logistic scale is half its sd (default: the design's, 1 or 0.25)");
  mc_cmd->add_option("--m-tilde", mc_m_tilde, "relabeling counts for the heterogeneity study");
  mc_cmd->add_option("--threshold-t", mc_t, "thresholds for the support study");
  mc_cmd->add_flag("--oracle-density", oracle, "use the true conditional density");

  weighted_cmd->add_option("--weighted-levels", f.levels, "level values pi_0 < ... < pi_{R-1}");
  std::string omega_method = "degree";
  weighted_cmd->add_option("--omega-interval", omega_method, "degree or sandwich");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const Setup s = resolve(f, !simulate->parsed() && !mc_cmd->parsed());
    const RunConfig& r = s.run;
    std::filesystem::create_directories(r.output_dir);

    if (simulate->parsed()) {
      const ScheduleKind kind = parse_schedule(schedule);
      const double sd = simulate->count("--noise-var") ? std::sqrt(noise_var) : design_noise_sd(kind);
      DgpSpec spec;
      if (kind == ScheduleKind::Weighted) {
        spec = DgpSpec::weighted_default(sim_n, parse_noise(noise, sd), r.seed);
        if (simulate->count("--knob")) spec.knob = knob;
      } else {
        spec.n = sim_n;
        spec.noise = parse_noise(noise, sd);
        spec.schedule = kind;
        spec.knob = knob;
        spec.seed = r.seed;
      }
      const SimulatedNetwork sim = generate_network(spec);
      write_network(sim.net, out_path(r, "edges.csv"), out_path(r, "covariates.csv"));
      json j = to_json(sim.truth);
      j["n"] = spec.n;
      j["schedule"] = to_string(kind);
      j["noise"] = spec.noise.name();
      j["seed"] = r.seed;
      j["special_regressor"] = sim.net.x1_name;
      emit(out_path(r, "truth.json"), j);
    } else if (fit_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      write_estimates(r, mf);
      emit(out_path(r, "fit.json"), to_json(mf));
    } else if (sparse_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      emit(out_path(r, "test_sparse.json"), to_json(test_sparse(mf, r.covariance(), parse_which(which), r.level)));
    } else if (support_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      const std::vector<int> sh = recover_support(mf, r.t, parse_which(which), r.covariance().mode);
      std::vector<int> ids;
      for (int i : sh) ids.push_back(mf.kept_nodes[i] + 1);
      emit(out_path(r, "support.json"), json{{"which", which}, {"t", r.t}, {"support", ids}});
    } else if (hetero_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      const Which w = parse_which(which);
      std::vector<int> g;
      if (group.empty()) {
        for (int i = 0; i < (w == Which::Alpha ? mf.n() : mf.n() - 1); ++i) g.push_back(i);
      } else {
        g = one_based_to_local(mf, group);
      }
      const TestReport rep = full_family ? test_heterogeneity_full(mf, r.covariance(), g, r.level, w)
                                         : test_heterogeneity(mf, r.covariance(), g, r.m_tilde, r.level, w);
      emit(out_path(r, "test_heterogeneity.json"), to_json(rep));
    } else if (ci_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      const CiMethod m = method == "exact" ? CiMethod::ExactNormal : CiMethod::Resampled;
      if (method != "exact" && method != "resampled") throw Error(ErrorCode::InvalidArgument, "method must be resampled or exact");
      ContrastSpec spec;
      spec.block = param == "eta" ? ContrastBlock::Eta : ContrastBlock::Theta;
      if (param != "alpha" && param != "beta" && param != "eta")
        throw Error(ErrorCode::InvalidArgument, "param must be alpha, beta or eta");
      auto column = [&](int id) {
        if (param == "eta") {
          if (id < 1 || id > mf.eta.size()) throw Error(ErrorCode::IndexOutOfRange, "eta position");
          return id - 1;
        }
        const int local = one_based_to_local(mf, {id})[0];
        if (param == "alpha") return local;
        const int col = mf.gram->indexing().beta_column(local);
        if (col < 0) throw Error(ErrorCode::InvalidArgument, "the last beta is fixed at 0");
        return col;
      };
      json out = json::array();
      std::vector<std::string> labels;
      for (int id : index) {
        spec.rows.push_back(ContrastRow{{{column(id), 1.0}}});
        labels.push_back(param + "_" + std::to_string(id));
      }
      if (!diff.empty()) {
        spec.rows.push_back(ContrastRow{{{column(diff[0]), 1.0}, {column(diff[1]), -1.0}}});
        labels.push_back(param + "_" + std::to_string(diff[0]) + "-" + param + "_" + std::to_string(diff[1]));
      }
      if (spec.rows.empty()) throw Error(ErrorCode::InvalidArgument, "give --index or --diff");
      const std::vector<Interval> ivs = ci_batch(mf, r.covariance(), spec, r.level, m);
      for (std::size_t k = 0; k < ivs.size(); ++k) {
        json j = to_json(ivs[k]);
        j["target"] = labels[k];
        out.push_back(j);
      }
      emit(out_path(r, "ci.json"), json{{"level", r.level}, {"method", method}, {"intervals", out}});
    } else if (bw_cmd->parsed()) {
      DirectedNetwork net = load_network(s.schema);
      const FitOptions o = r.fit_options();
      PreparedNetwork p = prepare_network(net, o, true, 0.0);
      FitOptions sel = o;
      sel.bandwidth.reset();
      const DensityStage d = estimate_density(*p.net, p.net->a, sel);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < d.selection->grid.size(); ++k)
        rows.push_back({d.selection->grid[k], d.selection->loss[k]});
      write_csv(out_path(r, "bandwidth_loss.csv"), {"h", "loss"}, rows);
      emit(out_path(r, "bandwidth.json"), to_json(*d.selection));
    } else if (gof_cmd->parsed()) {
      const ModelFit mf = load_and_fit(s);
      const GofReport g = gof_degrees(mf);
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < mf.n(); ++i)
        rows.push_back({double(mf.kept_nodes[i] + 1), g.out_observed[i], g.out_fitted[i], g.in_observed[i],
                        g.in_fitted[i]});
      write_csv(out_path(r, "gof_degrees.csv"), {"node", "out_observed", "out_fitted", "in_observed", "in_fitted"},
                rows);
      emit(out_path(r, "gof.json"), to_json(g));
    } else if (mc_cmd->parsed()) {
      StudyConfig c;
      c.kind = parse_study(study);
      ScheduleKind kind = ScheduleKind::Weighted;
      switch (c.kind) {
        case StudyKind::Consistency: kind = ScheduleKind::Consistency; break;
        case StudyKind::Sparse: kind = ScheduleKind::Sparse; break;
        case StudyKind::Support: kind = ScheduleKind::Support; break;
        case StudyKind::Heterogeneity: kind = ScheduleKind::Heterogeneity; break;
        case StudyKind::Weighted: break;
      }
      const double sd = mc_cmd->count("--noise-var") ? std::sqrt(mc_noise_var) : design_noise_sd(kind);
      if (c.kind == StudyKind::Weighted) {
        c.dgp = DgpSpec::weighted_default(mc_n, parse_noise(mc_noise, sd), r.seed);
      } else {
        c.dgp.n = mc_n;
        c.dgp.noise = parse_noise(mc_noise, sd);
        c.dgp.knob = mc_knob;
        c.dgp.schedule = kind;
      }
      c.reps = mc_reps;
      c.master_seed = r.seed;
      c.fit = r.fit_options();
      if (!c.fit.sign) c.fit.sign = 1;
      c.fit.keep_isolated = !c.fit.drop_isolated;
      c.cov = r.covariance();
      c.level = r.level;
      c.m_tilde = mc_m_tilde;
      c.thresholds = mc_t;
      c.oracle_density = oracle;
      const McReport rep = run_mc(c);
      std::vector<std::vector<double>> rows;
      for (const TargetSummary& t : rep.targets) rows.push_back({t.truth, t.bias, t.sd, t.cp, double(t.count)});
      std::string csv = "target,truth,bias,sd,cp,count\n";
      for (std::size_t k = 0; k < rows.size(); ++k) {
        csv += rep.targets[k].name;
        for (double v : rows[k]) csv += "," + format_number(v);
        csv += "\n";
      }
      write_text_atomic(out_path(r, "mc_targets.csv"), csv);
      emit(out_path(r, "mc_report.json"), to_json(rep));
    } else if (weighted_cmd->parsed()) {
      if (r.levels.size() < 2) throw Error(ErrorCode::InvalidArgument, "give --weighted-levels (at least two)");
      const WeightedModelFit wf = fit_weighted(load_network(s.schema), r.levels, r.fit_options());
      const OmegaInterval om = omega_method == "sandwich" ? OmegaInterval::Sandwich : OmegaInterval::Degree;
      if (omega_method != "sandwich" && omega_method != "degree")
        throw Error(ErrorCode::InvalidArgument, "omega interval must be degree or sandwich");
      const WeightedIntervals wi = weighted_inference(wf, r.covariance(), r.level, om);
      json j = to_json(wf);
      auto list = [](const std::vector<Interval>& v) {
        json a = json::array();
        for (const Interval& iv : v) a.push_back(to_json(iv));
        return a;
      };
      j["intervals"] = {{"level", r.level}, {"alpha", list(wi.alpha)}, {"beta", list(wi.beta)},
                        {"omega", list(wi.omega)}, {"eta", list(wi.eta)}};
      emit(out_path(r, "fit_weighted.json"), j);
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}

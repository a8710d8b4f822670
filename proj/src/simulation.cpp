#include "dyadnet/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "dyadnet/error.hpp"

namespace dyadnet {

namespace {
constexpr std::uint64_t kDgpStream = 0x5151;
constexpr std::uint64_t kReplicationStream = 0x7a7a;
}  // namespace

NoiseSpec NoiseSpec::normal(double variance) {
  NoiseSpec s;
  s.kind = NoiseKind::Normal;
  s.variance = variance;
  return s;
}

NoiseSpec NoiseSpec::logistic(double scale) {
  NoiseSpec s;
  s.kind = NoiseKind::Logistic;
  s.scale = scale;
  return s;
}

NoiseSpec NoiseSpec::mixture(std::vector<double> w, std::vector<double> mu, std::vector<double> var) {
  NoiseSpec s;
  s.kind = NoiseKind::Mixture;
  s.weights = std::move(w);
  s.means = std::move(mu);
  s.variances = std::move(var);
  return s;
}

NoiseSpec NoiseSpec::mnorm1() { return mixture({0.75, 0.25}, {-0.3, 0.9}, {0.91, 0.19}); }
NoiseSpec NoiseSpec::mnorm2() { return mixture({0.75, 0.25}, {-0.3, 0.9}, {0.5, 0.5}); }

NoiseSpec NoiseSpec::uniform_hetero() {
  NoiseSpec s;
  s.kind = NoiseKind::UniformHetero;
  return s;
}

NoiseSpec NoiseSpec::constant(double v) {
  NoiseSpec s;
  s.kind = NoiseKind::Constant;
  s.value = v;
  return s;
}

void NoiseSpec::validate() const {
  switch (kind) {
    case NoiseKind::Normal:
      if (!(variance >= 0)) throw Error(ErrorCode::InvalidArgument, "normal variance");
      break;
    case NoiseKind::Logistic:
      if (!(scale > 0)) throw Error(ErrorCode::InvalidArgument, "logistic scale");
      break;
    case NoiseKind::Mixture: {
      if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
        throw Error(ErrorCode::InvalidArgument, "mixture component lists differ in length");
      double total = 0;
      for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] >= 0) || !(variances[k] >= 0))
          throw Error(ErrorCode::InvalidArgument, "mixture weight or variance negative");
        total += weights[k];
      }
      if (std::abs(total - 1) > 1e-12) throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
      break;
    }
    case NoiseKind::UniformHetero:
      break;
    case NoiseKind::Constant:
      if (std::isnan(value)) throw Error(ErrorCode::InvalidArgument, "constant noise is NaN");
      break;
  }
}

std::string NoiseSpec::name() const {
  switch (kind) {
    case NoiseKind::Normal: return "normal(0," + std::to_string(variance) + ")";
    case NoiseKind::Logistic: return "logistic(0," + std::to_string(scale) + ")";
    case NoiseKind::Mixture: return "mixture";
    case NoiseKind::UniformHetero: return "uniform-heteroskedastic";
    case NoiseKind::Constant: return "constant";
  }
  return "unknown";
}

VectorXd draw_noise(const NoiseSpec& spec, const MatrixXd* z, Eigen::Index count, std::mt19937_64& eng) {
  spec.validate();
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  VectorXd out(count);
  switch (spec.kind) {
    case NoiseKind::Normal: {
      const double sd = std::sqrt(spec.variance);
      for (Eigen::Index r = 0; r < count; ++r) out[r] = sd * nd(eng);
      break;
    }
    case NoiseKind::Logistic:
      for (Eigen::Index r = 0; r < count; ++r) {
        double u;
        do u = ud(eng);
        while (u <= 0.0);
        out[r] = spec.scale * std::log(u / (1 - u));
      }
      break;
    case NoiseKind::Mixture:
      for (Eigen::Index r = 0; r < count; ++r) {
        const double u = ud(eng);
        std::size_t k = 0;
        double acc = spec.weights[0];
        while (u >= acc && k + 1 < spec.weights.size()) acc += spec.weights[++k];
        out[r] = spec.means[k] + std::sqrt(spec.variances[k]) * nd(eng);
      }
      break;
    case NoiseKind::UniformHetero:
      if (!z || z->rows() != count || z->cols() < 2)
        throw Error(ErrorCode::InvalidArgument, "heteroskedastic noise needs two covariate columns");
      for (Eigen::Index r = 0; r < count; ++r) {
        const double half = (*z)(r, 0) * (*z)(r, 1) > 0 ? 0.5 : 1.0;
        out[r] = (2 * ud(eng) - 1) * half;
      }
      break;
    case NoiseKind::Constant:
      out.setConstant(spec.value);
      break;
  }
  return out;
}

double design_noise_sd(ScheduleKind kind) {
  return kind == ScheduleKind::Consistency || kind == ScheduleKind::Weighted ? 1.0 : 0.5;
}

Schedule param_schedule(ScheduleKind kind, int n, double knob) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "n < 3");
  Schedule s;
  s.alpha = VectorXd::Zero(n);
  s.beta = VectorXd::Zero(n);
  const double dn = n;
  switch (kind) {
    case ScheduleKind::Consistency: {
      const double ln = std::log(dn);
      for (int i = 1; i <= n; ++i) s.alpha[i - 1] = -0.25 * ln + (i - 1) * (0.25 * ln + knob * ln) / (dn - 1);
      break;
    }
    case ScheduleKind::Sparse: {
      const int top = static_cast<int>(std::floor(knob * dn + 1e-9));
      for (int i = 1; i <= std::min(top, n); ++i) s.alpha[i - 1] = -2.0 * i / dn;
      break;
    }
    case ScheduleKind::Support: {
      const int d = n / 15;
      std::vector<double> pattern{-1, 2, -2, 1.5, -3};
      for (int k = 0; k < d; ++k) pattern.push_back(-1.5);
      for (std::size_t k = 0; k < pattern.size() && static_cast<int>(k) < n; ++k) s.alpha[k] = pattern[k];
      for (std::size_t k = 0; k < pattern.size() && static_cast<int>(k) + 5 < n - 1; ++k)
        s.beta[k + 5] = pattern[k];
      return s;
    }
    case ScheduleKind::Heterogeneity:
      for (int i = 1; i <= n; ++i) s.alpha[i - 1] = -knob * i / dn;
      break;
    case ScheduleKind::Weighted:
      for (int i = 0; i + 1 < n; ++i) s.alpha[i] = s.beta[i] = knob;
      return s;
  }
  for (int i = 0; i + 1 < n; ++i) s.beta[i] = s.alpha[i];
  return s;
}

DgpSpec DgpSpec::weighted_default(int n, NoiseSpec noise, std::uint64_t seed) {
  DgpSpec s;
  s.n = n;
  s.noise = std::move(noise);
  s.schedule = ScheduleKind::Weighted;
  s.knob = -0.3;
  s.levels = {0, 1, 2, 3, 4, 5, 6};
  for (int l = 1; l <= 6; ++l) s.omega.push_back(0.25 * (l - 1));
  s.seed = seed;
  return s;
}

double true_density(double x1, double z1, double z2, const DgpSpec& spec) {
  const double d = x1 - (spec.b[0] * z1 + spec.b[1] * z2);
  return std::exp(-0.5 * d * d) / std::sqrt(2 * M_PI);
}

SimulatedNetwork generate_network(const DgpSpec& spec) {
  const bool weighted = spec.schedule == ScheduleKind::Weighted;
  if (weighted && (spec.levels.size() < 2 || spec.omega.size() + 1 != spec.levels.size()))
    throw Error(ErrorCode::InvalidArgument, "weighted design needs R levels and R-1 thresholds");
  if (!(std::abs(spec.z_correlation) < 1)) throw Error(ErrorCode::InvalidArgument, "covariate correlation");
  const PairIndexing idx(spec.n);
  const Eigen::Index N = idx.rows();
  std::mt19937_64 eng = draw_engine(spec.seed, kDgpStream, 0);
  std::normal_distribution<double> nd;
  SimulatedNetwork sim;
  DirectedNetwork& net = sim.net;
  net.n = spec.n;
  for (int i = 1; i <= spec.n; ++i) net.labels.push_back(std::to_string(i));
  net.z.resize(N, 2);
  net.x1.resize(N);
  net.a.resize(N);
  net.z_names = {"z1", "z2"};
  net.discrete = {false, false};
  const double rho = spec.z_correlation, rc = std::sqrt(1 - rho * rho);
  for (Eigen::Index r = 0; r < N; ++r) {
    const double g1 = nd(eng), g2 = nd(eng);
    net.z(r, 0) = g1;
    net.z(r, 1) = rho * g1 + rc * g2;
  }
  for (Eigen::Index r = 0; r < N; ++r)
    net.x1[r] = spec.b[0] * net.z(r, 0) + spec.b[1] * net.z(r, 1) + nd(eng);
  const VectorXd eps = draw_noise(spec.noise, &net.z, N, eng);

  const Schedule sch = param_schedule(spec.schedule, spec.n, spec.knob);
  sim.truth.alpha = sch.alpha;
  sim.truth.beta = sch.beta;
  sim.truth.eta = spec.eta;
  sim.truth.density.resize(N);
  if (weighted) {
    sim.truth.omega = Eigen::Map<const VectorXd>(spec.omega.data(), spec.omega.size());
    sim.truth.levels = spec.levels;
  }
  for (Eigen::Index r = 0; r < N; ++r) {
    const auto [i, j] = idx.pair_of(r);
    const double index = sch.alpha[i] + sch.beta[j] + net.x1[r] + net.z.row(r).dot(spec.eta) - eps[r];
    sim.truth.density[r] = true_density(net.x1[r], net.z(r, 0), net.z(r, 1), spec);
    if (weighted) {
      std::size_t passed = 0;
      for (double w : spec.omega) passed += index > w ? 1 : 0;
      net.a[r] = spec.levels[passed];
    } else {
      net.a[r] = index > 0 ? 1.0 : 0.0;
    }
  }
  return sim;
}

std::uint64_t replication_seed(std::uint64_t master, int r) {
  std::mt19937_64 eng = draw_engine(master, kReplicationStream, static_cast<std::uint64_t>(r));
  return eng();
}

const char* to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::Consistency: return "consistency";
    case StudyKind::Sparse: return "sparse";
    case StudyKind::Support: return "support";
    case StudyKind::Heterogeneity: return "heterogeneity";
    case StudyKind::Weighted: return "weighted";
  }
  return "unknown";
}

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Consistency: return "consistency";
    case ScheduleKind::Sparse: return "sparse";
    case ScheduleKind::Support: return "support";
    case ScheduleKind::Heterogeneity: return "heterogeneity";
    case ScheduleKind::Weighted: return "weighted";
  }
  return "unknown";
}

namespace {

struct TargetDef {
  std::string name;
  ContrastBlock block;
  ContrastRow row;
  double truth;
};

// Per-replication outcome; empty vectors when the replication failed.
struct RepOutcome {
  bool ok = false;
  std::string error;
  double bandwidth = 0;
  double density = 0;
  std::vector<double> estimate;
  std::vector<int> covered;
  std::vector<int> rejected;
  std::vector<double> sim, fp, fn;
  std::vector<int> exact;
};

int one_based(int n, double frac) { return std::max(1, std::min(n, static_cast<int>(std::floor(frac * n)))); }

std::vector<TargetDef> degree_targets(int n, const VectorXd& alpha, bool include_last) {
  std::vector<TargetDef> t;
  auto single = [&](const std::string& name, int i1) {
    t.push_back({name, ContrastBlock::Theta, ContrastRow{{{i1 - 1, 1.0}}}, alpha[i1 - 1]});
  };
  auto diff = [&](const std::string& name, int i1, int j1) {
    t.push_back({name, ContrastBlock::Theta, ContrastRow{{{i1 - 1, 1.0}, {j1 - 1, -1.0}}},
                 alpha[i1 - 1] - alpha[j1 - 1]});
  };
  const int half = one_based(n, 0.5), fifth = one_based(n, 0.2), four = one_based(n, 0.8);
  single("alpha_1", 1);
  single("alpha_n/2", half);
  if (include_last) single("alpha_n", n);
  diff("alpha_n/5-alpha_4n/5", fifth, four);
  diff("alpha_n/2-alpha_n/2+1", half, std::min(half + 1, n));
  return t;
}

}  // namespace

McReport run_mc(const StudyConfig& config) {
  if (config.reps < 1) throw Error(ErrorCode::InvalidArgument, "replication count must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const int n = config.dgp.n;
  const Schedule truth_sched = param_schedule(config.dgp.schedule, n, config.dgp.knob);
  const bool homo = config.cov.mode == CovarianceMode::Homoskedastic;

  // Target and test layout shared by all replications.
  std::vector<TargetDef> targets;
  std::vector<ContrastFamily> families;
  std::vector<std::string> family_names;
  std::vector<NullDistribution> nulls;
  switch (config.kind) {
    case StudyKind::Consistency:
      targets = degree_targets(n, truth_sched.alpha, true);
      for (int c = 0; c < 2; ++c)
        targets.push_back({"eta_" + std::to_string(c + 1), ContrastBlock::Eta, ContrastRow{{{c, 1.0}}},
                           config.dgp.eta[c]});
      break;
    case StudyKind::Weighted: {
      // Alpha in the weighted layout is relative to alpha_n = 0.
      targets = degree_targets(n, truth_sched.alpha, false);
      for (int c = 0; c < 2; ++c)
        targets.push_back({"eta_" + std::to_string(c + 1), ContrastBlock::Eta, ContrastRow{{{c, 1.0}}},
                           config.dgp.eta[c]});
      for (std::size_t l = 0; l < config.dgp.omega.size(); ++l)
        targets.push_back({"omega_" + std::to_string(l + 1), ContrastBlock::Eta, ContrastRow{},
                           config.dgp.omega[l]});
      break;
    }
    case StudyKind::Sparse:
      families = {sparse_family(n, Which::Alpha), sparse_family(n, Which::Beta)};
      family_names = {"T_alpha_S", "T_beta_S"};
      break;
    case StudyKind::Heterogeneity: {
      std::vector<int> ga(n), gb(n - 1);
      std::iota(ga.begin(), ga.end(), 0);
      std::iota(gb.begin(), gb.end(), 0);
      for (int mt : config.m_tilde) {
        families.push_back(heterogeneity_family(n, ga, mt, Which::Alpha, config.cov.seed));
        family_names.push_back("T_alpha_D(" + std::to_string(mt) + ")");
        families.push_back(heterogeneity_family(n, gb, mt, Which::Beta, config.cov.seed));
        family_names.push_back("T_beta_D(" + std::to_string(mt) + ")");
      }
      break;
    }
    case StudyKind::Support:
      break;
  }
  if (homo && config.reuse_null)
    for (const ContrastFamily& fam : families) nulls.push_back(homoskedastic_null(n, config.cov, fam));

  // The oracle density still needs a bandwidth for the Q residual smoother.
  auto q_bandwidth = [&](const DirectedNetwork& net, const VectorXd& edges) {
    if (config.fit.bandwidth) return *config.fit.bandwidth;
    return estimate_density(net, edges, config.fit).bandwidth;
  };

  std::vector<RepOutcome> outcomes(config.reps);
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < config.reps; ++r) {
    RepOutcome& out = outcomes[r];
    try {
      DgpSpec spec = config.dgp;
      spec.seed = replication_seed(config.master_seed, r);
      const SimulatedNetwork sim = generate_network(spec);
      out.density = sim.net.a.mean();
      if (config.kind == StudyKind::Weighted) {
        out.density = (sim.net.a.array() > spec.levels.front()).cast<double>().mean();
        const WeightedModelFit wf =
            config.oracle_density
                ? fit_weighted_given_density(sim.net, spec.levels, sim.truth.density, 1,
                                             q_bandwidth(sim.net, (sim.net.a.array() > spec.levels.front()).cast<double>()),
                                             config.fit)
                : fit_weighted(sim.net, spec.levels, config.fit);
        out.bandwidth = wf.bandwidth;
        const WeightedIntervals wi = weighted_inference(wf, config.cov, config.level, config.omega_interval, config.xi_meat);
        for (const TargetDef& t : targets) {
          Interval iv;
          if (t.name.rfind("omega_", 0) == 0) {
            iv = wi.omega[std::stoi(t.name.substr(6)) - 1];
          } else if (t.block == ContrastBlock::Eta) {
            iv = wi.eta[t.row.terms[0].first];
          } else if (t.row.terms.size() == 1) {
            iv = wi.alpha[t.row.terms[0].first];
          } else {
            // Differences: center from the estimates, width from a dedicated draw set.
            const int a = t.row.terms[0].first, b = t.row.terms[1].first;
            std::vector<double> draws(config.cov.draws);
            const PairIndexing idx = wf.data->indexing();
            const VectorXd w = VectorXd::Constant(idx.rows(), std::sqrt(wf.sigma_weps2));
            for (int d = 0; d < config.cov.draws; ++d) {
              const VectorXd g = sample_theta_draw(idx, w, config.cov.seed, streams::kWeightedTheta, d);
              draws[d] = std::abs(g[a] - g[b]);
            }
            std::sort(draws.begin(), draws.end());
            iv.estimate = wf.alpha[a] - wf.alpha[b];
            iv.half_width = empirical_quantile(draws, 1 - config.level) / std::sqrt(static_cast<double>(n - 1));
            iv.lower = iv.estimate - iv.half_width;
            iv.upper = iv.estimate + iv.half_width;
          }
          out.estimate.push_back(iv.estimate);
          out.covered.push_back(iv.lower <= t.truth && t.truth <= iv.upper);
        }
        out.ok = true;
        continue;
      }
      const ModelFit mf = config.oracle_density
                              ? fit_given_density(sim.net, sim.truth.density, 1, q_bandwidth(sim.net, sim.net.a), config.fit)
                              : fit(sim.net, config.fit);
      out.bandwidth = mf.bandwidth;
      switch (config.kind) {
        case StudyKind::Consistency: {
          ContrastSpec theta_spec, eta_spec;
          theta_spec.block = ContrastBlock::Theta;
          eta_spec.block = ContrastBlock::Eta;
          for (const TargetDef& t : targets) (t.block == ContrastBlock::Theta ? theta_spec : eta_spec).rows.push_back(t.row);
          const std::vector<Interval> ti = ci_batch(mf, config.cov, theta_spec, config.level, config.ci_method);
          const std::vector<Interval> ei = ci_batch(mf, config.cov, eta_spec, config.level, config.ci_method);
          std::size_t a = 0, e = 0;
          for (const TargetDef& t : targets) {
            const Interval& iv = t.block == ContrastBlock::Theta ? ti[a++] : ei[e++];
            out.estimate.push_back(iv.estimate);
            out.covered.push_back(iv.lower <= t.truth && t.truth <= iv.upper);
          }
          break;
        }
        case StudyKind::Sparse:
        case StudyKind::Heterogeneity:
          for (std::size_t k = 0; k < families.size(); ++k) {
            const TestReport rep = max_test(mf, config.cov, families[k], config.level,
                                            nulls.empty() ? nullptr : &nulls[k]);
            out.rejected.push_back(rep.reject);
          }
          break;
        case StudyKind::Support: {
          std::vector<int> s0a, s0b;
          for (int i = 0; i < n; ++i)
            if (truth_sched.alpha[i] != 0) s0a.push_back(i);
          for (int i = 0; i + 1 < n; ++i)
            if (truth_sched.beta[i] != 0) s0b.push_back(i);
          for (double t : config.thresholds)
            for (int w = 0; w < 2; ++w) {
              const std::vector<int>& s0 = w == 0 ? s0a : s0b;
              const std::vector<int> sh = recover_support(mf, t, w == 0 ? Which::Alpha : Which::Beta, config.cov.mode);
              const std::set<int> a(sh.begin(), sh.end()), b(s0.begin(), s0.end());
              int common = 0;
              for (int v : a) common += static_cast<int>(b.count(v));
              out.sim.push_back(similarity(sh, s0));
              out.fp.push_back(static_cast<double>(a.size()) - common);
              out.fn.push_back(static_cast<double>(b.size()) - common);
              out.exact.push_back(a == b);
            }
          break;
        }
        case StudyKind::Weighted:
          break;
      }
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.error = e.what();
    }
  }

  McReport rep;
  rep.kind = config.kind;
  rep.reps = config.reps;
  int ok = 0;
  for (int r = 0; r < config.reps; ++r) {
    if (!outcomes[r].ok) {
      ++rep.failures;
      rep.failure_messages.push_back("replication " + std::to_string(r) + ": " + outcomes[r].error);
      continue;
    }
    ++ok;
    rep.mean_bandwidth += outcomes[r].bandwidth;
    rep.mean_density += outcomes[r].density;
  }
  if (ok > 0) {
    rep.mean_bandwidth /= ok;
    rep.mean_density /= ok;
  }
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0;
    sd = 0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
    }
  };
  for (std::size_t k = 0; k < targets.size(); ++k) {
    std::vector<double> est;
    int cover = 0;
    for (const RepOutcome& o : outcomes)
      if (o.ok) {
        est.push_back(o.estimate[k]);
        cover += o.covered[k];
      }
    TargetSummary s;
    s.name = targets[k].name;
    s.truth = targets[k].truth;
    s.count = static_cast<int>(est.size());
    double mean;
    mean_sd(est, mean, s.sd);
    s.bias = est.empty() ? 0 : mean - s.truth;
    s.cp = est.empty() ? 0 : 100.0 * cover / static_cast<double>(est.size());
    rep.targets.push_back(s);
  }
  for (std::size_t k = 0; k < families.size(); ++k) {
    RateSummary s;
    s.name = family_names[k];
    int rej = 0;
    for (const RepOutcome& o : outcomes)
      if (o.ok) {
        rej += o.rejected[k];
        ++s.count;
      }
    s.rate = s.count ? static_cast<double>(rej) / s.count : 0;
    rep.rates.push_back(s);
  }
  if (config.kind == StudyKind::Support) {
    std::size_t slot = 0;
    for (double t : config.thresholds)
      for (int w = 0; w < 2; ++w, ++slot) {
        SupportSummary s;
        s.name = w == 0 ? "alpha" : "beta";
        s.t = t;
        std::vector<double> sims;
        double fp = 0, fn = 0, exact = 0;
        for (const RepOutcome& o : outcomes)
          if (o.ok) {
            sims.push_back(o.sim[slot]);
            fp += o.fp[slot];
            fn += o.fn[slot];
            exact += o.exact[slot];
          }
        s.count = static_cast<int>(sims.size());
        mean_sd(sims, s.mean_similarity, s.sd_similarity);
        if (s.count) {
          s.mean_fp = fp / s.count;
          s.mean_fn = fn / s.count;
          s.exact_rate = exact / s.count;
        }
        rep.support.push_back(s);
      }
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace dyadnet

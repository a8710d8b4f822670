#include "dyadnet/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dyadnet/error.hpp"

namespace dyadnet {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line); }

double parse_double(const std::string& s, const std::string& source, int line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, where(source, line) + ": not a finite number: '" + s + "'");
  return v;
}

int parse_id(const std::string& s, const std::string& source, int line) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw Error(ErrorCode::ParseError, where(source, line) + ": not an integer node id: '" + s + "'");
  if (v < 1 || v > 1000000)
    throw Error(ErrorCode::NodeOutOfRange, where(source, line) + ": node id " + s + " outside 1..1000000");
  return static_cast<int>(v);
}

int require_column(const CsvTable& t, const std::string& name, const std::string& source) {
  const int c = t.column(name);
  if (c < 0) throw Error(ErrorCode::UnknownColumn, source + ": missing column '" + name + "'");
  return c;
}

struct PairRows {
  std::map<std::pair<int, int>, std::size_t> row_of;
  int max_id = 0;
};

// Reads (i, j) from every row, rejecting self loops and duplicates.
PairRows index_pairs(const CsvTable& t, const std::string& source) {
  const int ci = require_column(t, "i", source), cj = require_column(t, "j", source);
  PairRows out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = parse_id(t.rows[r][ci], source, t.lines[r]);
    const int j = parse_id(t.rows[r][cj], source, t.lines[r]);
    if (i == j) throw Error(ErrorCode::SelfLoop, where(source, t.lines[r]) + ": pair (" + std::to_string(i) + "," + std::to_string(i) + ")");
    if (!out.row_of.emplace(std::make_pair(i, j), r).second)
      throw Error(ErrorCode::DuplicatePair,
                  where(source, t.lines[r]) + ": pair (" + std::to_string(i) + "," + std::to_string(j) + ") repeated");
    out.max_id = std::max({out.max_id, i, j});
  }
  return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string tl = trim(line);
    if (tl.empty() || tl[0] == '#') continue;
    std::vector<std::string> cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      std::set<std::string> seen;
      for (const std::string& h : t.header)
        if (h.empty() || !seen.insert(h).second)
          throw Error(ErrorCode::ParseError, where(source, lineno) + ": empty or repeated header name");
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::ParseError, where(source, lineno) + ": expected " + std::to_string(t.header.size()) +
                                             " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw Error(ErrorCode::ParseError, source + ": no header line");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

DirectedNetwork load_network(const InputSchema& schema) {
  if (schema.edges.empty()) throw Error(ErrorCode::InvalidArgument, "no edge file given");
  if (schema.covariates.empty() == schema.nodes.empty())
    throw Error(ErrorCode::InvalidArgument, "give exactly one of a pairwise covariate file or a node attribute file");
  if (schema.special_regressor.empty()) throw Error(ErrorCode::InvalidArgument, "no special regressor named");

  const CsvTable edges = read_csv(schema.edges);
  const PairRows edge_pairs = index_pairs(edges, schema.edges);
  const int ca = require_column(edges, "a", schema.edges);

  // Covariate columns in file order, then the node count.
  std::vector<std::string> names;
  std::vector<bool> discrete;
  CsvTable cov;
  PairRows cov_pairs;
  std::map<int, std::size_t> node_row;
  int max_id = edge_pairs.max_id;
  if (!schema.covariates.empty()) {
    cov = read_csv(schema.covariates);
    cov_pairs = index_pairs(cov, schema.covariates);
    for (const std::string& h : cov.header)
      if (h != "i" && h != "j") names.push_back(h);
    for (const std::string& d : schema.discrete)
      if (cov.column(d) < 0 || d == "i" || d == "j")
        throw Error(ErrorCode::UnknownColumn, schema.covariates + ": discrete column '" + d + "' not found");
    for (const std::string& nm : names)
      discrete.push_back(std::find(schema.discrete.begin(), schema.discrete.end(), nm) != schema.discrete.end());
    max_id = std::max(max_id, cov_pairs.max_id);
  } else {
    cov = read_csv(schema.nodes);
    const int ci = require_column(cov, "i", schema.nodes);
    for (std::size_t r = 0; r < cov.rows.size(); ++r) {
      const int id = parse_id(cov.rows[r][ci], schema.nodes, cov.lines[r]);
      if (!node_row.emplace(id, r).second)
        throw Error(ErrorCode::DuplicatePair, where(schema.nodes, cov.lines[r]) + ": node " + std::to_string(id) + " repeated");
      max_id = std::max(max_id, id);
    }
    std::vector<AttributeRule> rules = schema.rules;
    if (rules.empty())
      for (const std::string& h : cov.header)
        if (h != "i") rules.push_back({h, Constructor::AbsDiff});
    for (const AttributeRule& rule : rules) {
      if (cov.column(rule.name) < 0 || rule.name == "i")
        throw Error(ErrorCode::UnknownColumn, schema.nodes + ": attribute '" + rule.name + "' not found");
      names.push_back(rule.name);
      discrete.push_back(rule.ctor == Constructor::Equality);
    }
  }
  const int n = schema.node_count.value_or(max_id);
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "network needs at least 3 nodes");
  if (max_id > n)
    throw Error(ErrorCode::NodeOutOfRange, "node id " + std::to_string(max_id) + " exceeds the node count " + std::to_string(n));

  auto special = std::find(names.begin(), names.end(), schema.special_regressor);
  if (special == names.end())
    throw Error(ErrorCode::UnknownColumn, "special regressor '" + schema.special_regressor + "' is not a covariate");
  const std::size_t sx = static_cast<std::size_t>(special - names.begin());
  if (discrete[sx]) throw Error(ErrorCode::InvalidArgument, "the special regressor must be continuous");

  DirectedNetwork net;
  net.n = n;
  for (int i = 1; i <= n; ++i) net.labels.push_back(std::to_string(i));
  const PairIndexing idx(n);
  const Eigen::Index N = idx.rows();
  const std::size_t p = names.size() - 1;
  net.a = VectorXd::Zero(N);
  net.x1.resize(N);
  net.z.resize(N, static_cast<Eigen::Index>(p));
  net.x1_name = schema.special_regressor;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (c != sx) {
      net.z_names.push_back(names[c]);
      net.discrete.push_back(discrete[c]);
    }

  for (const auto& [key, r] : edge_pairs.row_of)
    net.a[idx.row_of(key.first - 1, key.second - 1)] = parse_double(edges.rows[r][ca], schema.edges, edges.lines[r]);

  auto put = [&](Eigen::Index row, std::size_t c, double v) {
    if (c == sx)
      net.x1[row] = v;
    else
      net.z(row, static_cast<Eigen::Index>(c < sx ? c : c - 1)) = v;
  };

  if (!schema.covariates.empty()) {
    std::vector<int> cols;
    for (const std::string& nm : names) cols.push_back(cov.column(nm));
    for (Eigen::Index row = 0; row < N; ++row) {
      const auto [i, j] = idx.pair_of(row);
      auto it = cov_pairs.row_of.find({i + 1, j + 1});
      if (it == cov_pairs.row_of.end())
        throw Error(ErrorCode::MissingPair, schema.covariates + ": no covariate row for pair (" +
                                                std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      for (std::size_t c = 0; c < names.size(); ++c)
        put(row, c, parse_double(cov.rows[it->second][cols[c]], schema.covariates, cov.lines[it->second]));
    }
  } else {
    for (int id = 1; id <= n; ++id)
      if (!node_row.count(id))
        throw Error(ErrorCode::MissingPair, schema.nodes + ": no attribute row for node " + std::to_string(id));
    for (std::size_t c = 0; c < names.size(); ++c) {
      const int col = cov.column(names[c]);
      if (discrete[c]) {
        for (Eigen::Index row = 0; row < N; ++row) {
          const auto [i, j] = idx.pair_of(row);
          put(row, c, cov.rows[node_row[i + 1]][col] == cov.rows[node_row[j + 1]][col] ? 1.0 : 0.0);
        }
        continue;
      }
      std::vector<double> w(n);
      for (int id = 1; id <= n; ++id) {
        const std::size_t r = node_row[id];
        w[id - 1] = parse_double(cov.rows[r][col], schema.nodes, cov.lines[r]);
      }
      if (schema.standardize_attributes) {
        double mean = 0, ss = 0;
        for (double v : w) mean += v;
        mean /= n;
        for (double v : w) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1));
        if (!(sd > 0)) throw Error(ErrorCode::InvalidArgument, "attribute '" + names[c] + "' is constant");
        for (double& v : w) v = (v - mean) / sd;
      }
      for (Eigen::Index row = 0; row < N; ++row) {
        const auto [i, j] = idx.pair_of(row);
        put(row, c, std::abs(w[i] - w[j]));
      }
    }
  }
  net.validate(false);
  return net;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_json(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (std::size_t c = 0; c < header.size(); ++c) s += (c ? "," : "") + header[c];
  s += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) s += (c ? "," : "") + format_number(row[c]);
    s += "\n";
  }
  write_text_atomic(path, s);
}

void write_network(const DirectedNetwork& net, const std::string& edges_path, const std::string& covariates_path) {
  const PairIndexing idx = net.indexing();
  std::vector<std::vector<double>> edges, cov;
  for (Eigen::Index r = 0; r < idx.rows(); ++r) {
    const auto [i, j] = idx.pair_of(r);
    if (net.a[r] != 0) edges.push_back({double(i + 1), double(j + 1), net.a[r]});
    std::vector<double> row{double(i + 1), double(j + 1), net.x1[r]};
    for (Eigen::Index c = 0; c < net.z.cols(); ++c) row.push_back(net.z(r, c));
    cov.push_back(std::move(row));
  }
  write_csv(edges_path, {"i", "j", "a"}, edges);
  std::vector<std::string> header{"i", "j", net.x1_name};
  for (const std::string& nm : net.z_names) header.push_back(nm);
  write_csv(covariates_path, header, cov);
}

GofReport gof_degrees(const ModelFit& fit) {
  const DirectedNetwork& net = *fit.data;
  const PairIndexing idx = net.indexing();
  const int n = net.n;
  GofReport g;
  g.out_observed = g.out_fitted = g.in_observed = g.in_fitted = VectorXd::Zero(n);
  const VectorXd zeta = net.z * fit.eta;
  for (Eigen::Index r = 0; r < idx.rows(); ++r) {
    const auto [i, j] = idx.pair_of(r);
    const double fitted = fit.alpha[i] + fit.beta[j] + fit.sign * net.x1[r] + zeta[r] > 0 ? 1.0 : 0.0;
    g.out_observed[i] += net.a[r];
    g.in_observed[j] += net.a[r];
    g.out_fitted[i] += fitted;
    g.in_fitted[j] += fitted;
  }
  const double scale = 1.0 / (n - 1);
  g.out_observed *= scale;
  g.in_observed *= scale;
  g.out_fitted *= scale;
  g.in_fitted *= scale;
  g.l2_out = (g.out_observed - g.out_fitted).norm();
  g.l2_in = (g.in_observed - g.in_fitted).norm();
  return g;
}

void RunConfig::validate() const {
  if (!(level > 0 && level < 1)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  if (draws < 1) throw Error(ErrorCode::InvalidArgument, "B must be at least 1");
  if (!(t > 0)) throw Error(ErrorCode::InvalidArgument, "threshold t must be positive");
  if (m_tilde < 0) throw Error(ErrorCode::InvalidArgument, "m-tilde must be nonnegative");
  if (!(m_floor > 0)) throw Error(ErrorCode::InvalidArgument, "m-floor must be positive");
  if (bandwidth && !(*bandwidth > 0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (sign && *sign != 1 && *sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.sign = sign;
  o.bandwidth = bandwidth;
  o.grid = grid;
  o.kernel = kernel;
  o.m_floor = m_floor;
  o.drop_isolated = drop_isolated;
  o.standardize = standardize;
  return o;
}

CovarianceModel RunConfig::covariance() const {
  CovarianceModel c;
  c.mode = heteroskedastic ? CovarianceMode::Heteroskedastic : CovarianceMode::Homoskedastic;
  c.draws = draws;
  c.seed = seed;
  return c;
}

KernelFamily parse_kernel(const std::string& name) {
  if (name == "bw2") return KernelFamily::Biweight2;
  if (name == "bw4") return KernelFamily::Biweight4;
  throw Error(ErrorCode::InvalidArgument, "kernel must be bw2 or bw4, got '" + name + "'");
}

NoiseSpec parse_noise(const std::string& name, double sd) {
  if (!(sd > 0)) throw Error(ErrorCode::InvalidArgument, "noise scale must be positive");
  if (name == "normal") return NoiseSpec::normal(sd * sd);
  if (name == "logistic") return NoiseSpec::logistic(0.5 * sd);
  if (name == "mnorm1") return NoiseSpec::mnorm1();
  if (name == "mnorm2") return NoiseSpec::mnorm2();
  if (name == "uniform-hetero") return NoiseSpec::uniform_hetero();
  throw Error(ErrorCode::InvalidArgument, "unknown noise '" + name + "'");
}

ScheduleKind parse_schedule(const std::string& name) {
  for (ScheduleKind k : {ScheduleKind::Consistency, ScheduleKind::Sparse, ScheduleKind::Support,
                         ScheduleKind::Heterogeneity, ScheduleKind::Weighted})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown schedule '" + name + "'");
}

StudyKind parse_study(const std::string& name) {
  for (StudyKind k : {StudyKind::Consistency, StudyKind::Sparse, StudyKind::Support, StudyKind::Heterogeneity,
                      StudyKind::Weighted})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown study '" + name + "'");
}

Which parse_which(const std::string& name) {
  if (name == "alpha") return Which::Alpha;
  if (name == "beta") return Which::Beta;
  throw Error(ErrorCode::InvalidArgument, "which must be alpha or beta, got '" + name + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, what + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw Error(ErrorCode::InvalidArgument, what + ": unknown key '" + it.key() + "'");
}

}  // namespace

RunConfig run_config_from_json(const json& j, RunConfig c) {
  reject_unknown(j, {"seed", "B", "level", "m_tilde", "t", "bandwidth", "m_floor", "kernel", "grid", "output_dir",
                     "heteroskedastic", "drop_isolated", "standardize", "sign", "weighted_levels", "input"},
                 "config");
  try {
    take(j, "seed", c.seed);
    take(j, "B", c.draws);
    take(j, "level", c.level);
    take(j, "m_tilde", c.m_tilde);
    take(j, "t", c.t);
    if (j.contains("bandwidth") && !j.at("bandwidth").is_null()) c.bandwidth = j.at("bandwidth").get<double>();
    take(j, "m_floor", c.m_floor);
    if (j.contains("kernel")) c.kernel = parse_kernel(j.at("kernel").get<std::string>());
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown(g, {"points", "c_min", "c_max"}, "config grid");
      take(g, "points", c.grid.points);
      take(g, "c_min", c.grid.c_min);
      take(g, "c_max", c.grid.c_max);
    }
    take(j, "output_dir", c.output_dir);
    take(j, "heteroskedastic", c.heteroskedastic);
    take(j, "drop_isolated", c.drop_isolated);
    take(j, "standardize", c.standardize);
    if (j.contains("sign") && !j.at("sign").is_null()) c.sign = j.at("sign").get<int>();
    take(j, "weighted_levels", c.levels);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return c;
}

InputSchema schema_from_json(const json& j, InputSchema s) {
  reject_unknown(j, {"edges", "covariates", "nodes", "special_regressor", "discrete", "constructors", "node_count",
                     "standardize_attributes"},
                 "config input");
  try {
    take(j, "edges", s.edges);
    take(j, "covariates", s.covariates);
    take(j, "nodes", s.nodes);
    take(j, "special_regressor", s.special_regressor);
    take(j, "discrete", s.discrete);
    if (j.contains("node_count")) s.node_count = j.at("node_count").get<int>();
    take(j, "standardize_attributes", s.standardize_attributes);
    if (j.contains("constructors")) {
      s.rules.clear();
      for (const json& r : j.at("constructors")) {
        const std::string kind = r.at("kind").get<std::string>();
        AttributeRule rule;
        rule.name = r.at("name").get<std::string>();
        if (kind == "absdiff")
          rule.ctor = Constructor::AbsDiff;
        else if (kind == "equality")
          rule.ctor = Constructor::Equality;
        else
          throw Error(ErrorCode::InvalidArgument, "constructor kind must be absdiff or equality");
        s.rules.push_back(rule);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config input: ") + e.what());
  }
  return s;
}

namespace {

json vec(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json to_json(const ModelFit& f) {
  json j;
  j["n"] = f.n();
  j["pairs"] = f.pairs();
  j["kept_nodes"] = f.kept_nodes;
  j["node_labels"] = f.data->labels;
  j["alpha"] = vec(f.alpha);
  j["beta"] = vec(f.beta);
  j["eta"] = vec(f.eta);
  j["eta_names"] = f.data->z_names;
  j["sign"] = f.sign;
  j["sign_tau"] = f.sign_tau;
  j["bandwidth"] = f.bandwidth;
  j["sigma_eps2"] = f.sigma_eps2;
  j["sigma_q2"] = f.sigma_q2;
  j["c4_min_eigenvalue"] = f.c4;
  return j;
}

json to_json(const WeightedModelFit& f) {
  json j;
  j["n"] = f.n();
  j["kept_nodes"] = f.kept_nodes;
  j["levels"] = f.levels;
  j["alpha"] = vec(f.alpha);
  j["beta"] = vec(f.beta);
  j["eta"] = vec(f.eta);
  j["omega"] = vec(f.omega);
  j["sign"] = f.sign;
  j["bandwidth"] = f.bandwidth;
  j["sigma_weps2"] = f.sigma_weps2;
  j["sigma_wq2"] = vec(f.sigma_wq2);
  return j;
}

json to_json(const TestReport& r) {
  return json{{"statistic", r.statistic}, {"critical_value", r.critical_value}, {"p_value", r.p_value},
              {"reject", r.reject},       {"B", r.draws},                       {"seed", r.seed},
              {"m_tilde", r.m_tilde},     {"level", r.level},                   {"contrast", r.contrast}};
}

json to_json(const Interval& iv) {
  return json{{"estimate", iv.estimate}, {"lower", iv.lower}, {"upper", iv.upper}, {"half_width", iv.half_width}};
}

json to_json(const BandwidthSelection& s) {
  json loss = json::array();
  for (double l : s.loss) loss.push_back(std::isfinite(l) ? json(l) : json(nullptr));
  return json{{"bandwidth", s.bandwidth}, {"index", s.index}, {"grid", s.grid}, {"loss", loss}};
}

json to_json(const GofReport& g) {
  return json{{"l2_out", g.l2_out}, {"l2_in", g.l2_in}};
}

json to_json(const McReport& r) {
  json j;
  j["study"] = to_string(r.kind);
  j["reps"] = r.reps;
  j["failures"] = r.failures;
  j["failure_messages"] = r.failure_messages;
  j["mean_bandwidth"] = r.mean_bandwidth;
  j["mean_edge_density"] = r.mean_density;
  j["wall_seconds"] = r.wall_seconds;
  j["targets"] = json::array();
  for (const TargetSummary& t : r.targets)
    j["targets"].push_back(
        {{"name", t.name}, {"truth", t.truth}, {"bias", t.bias}, {"sd", t.sd}, {"cp", t.cp}, {"count", t.count}});
  j["rates"] = json::array();
  for (const RateSummary& s : r.rates) j["rates"].push_back({{"name", s.name}, {"rate", s.rate}, {"count", s.count}});
  j["support"] = json::array();
  for (const SupportSummary& s : r.support)
    j["support"].push_back({{"which", s.name},
                            {"t", s.t},
                            {"mean_similarity", s.mean_similarity},
                            {"sd_similarity", s.sd_similarity},
                            {"mean_fp", s.mean_fp},
                            {"mean_fn", s.mean_fn},
                            {"exact_rate", s.exact_rate},
                            {"count", s.count}});
  return j;
}

json to_json(const Truth& t) {
  json j{{"alpha", vec(t.alpha)}, {"beta", vec(t.beta)}, {"eta", vec(t.eta)}};
  if (t.omega.size() > 0) {
    j["omega"] = vec(t.omega);
    j["levels"] = t.levels;
  }
  return j;
}

}  // namespace dyadnet

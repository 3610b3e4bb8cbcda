#include "wavebound/theorem.hpp"

#include "wavebound/format.hpp"
#include "wavebound/risk.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace wavebound {

namespace {

// Welford accumulator; trials are folded in a fixed order.
struct RunningStat
{
  Index n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x)
  {
    ++n;
    double const delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double std_error() const
  {
    if (n < 2) {
      return 0.0;
    }
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

} // namespace

void LinearGaussianPopulation::validate() const
{
  if (truth.rows() < 1 || truth.cols() < 1) {
    throw ConfigError("population map must be non-empty");
  }
  if (horizon < 1 || features < 1 || horizon * features != truth.rows()) {
    throw ConfigError("population has " + std::to_string(truth.rows()) + " outputs, expected M*K = " +
                      std::to_string(horizon * features));
  }
  if (input_std.size() != truth.cols() || noise_std.size() != truth.rows()) {
    throw ConfigError("population std vectors do not match the map shape");
  }
  if (!truth.allFinite() || !input_std.allFinite() || !noise_std.allFinite()) {
    throw ConfigError("population parameters must be finite");
  }
  if ((input_std.array() <= 0.0).any() || (noise_std.array() <= 0.0).any()) {
    throw ConfigError("degenerate population: every input and noise standard deviation must be positive");
  }
}

void OracleInstance::validate() const
{
  population.validate();
  auto const P = population.elements();
  auto const D = population.input_dim();
  if (g.rows() != P || g.cols() != D || g_star.rows() != P || g_star.cols() != D) {
    throw ConfigError("predictors must be " + shape_string(P, D));
  }
  if (!g.allFinite() || !g_star.allFinite()) {
    throw ConfigError("predictors must be finite");
  }
  if (!(epsilon >= 0.0)) {
    throw ConfigError("epsilon must be >= 0");
  }
  if (sample_size < 1 || trials < 1) {
    throw ConfigError("sample_size and trials must be >= 1");
  }
  if (!(margin_alpha > 0.0) || std::isinf(margin_alpha)) {
    throw ConfigError("margin_alpha must be positive and finite");
  }
  if (jensen_batch < 1) {
    throw ConfigError("jensen_batch must be >= 1");
  }
}

OracleInstance make_diagonal_instance(Index horizon, Index features, std::vector<double> const &truth_coefs,
                                      double input_std, double noise_std, double delta, double star_offset)
{
  Index const P = horizon * features;
  if (P < 1) {
    throw ConfigError("instance needs at least one output element");
  }
  if (truth_coefs.empty()) {
    throw ConfigError("instance needs at least one truth coefficient");
  }
  OracleInstance inst;
  auto &pop = inst.population;
  pop.horizon = horizon;
  pop.features = features;
  pop.truth = MatrixXd::Zero(P, P);
  for (Index e = 0; e < P; ++e) {
    pop.truth(e, e) = truth_coefs[static_cast<std::size_t>(e) % truth_coefs.size()];
  }
  pop.input_std = VectorXd::Constant(P, input_std);
  pop.noise_std = VectorXd::Constant(P, noise_std);
  inst.g = pop.truth;
  inst.g.diagonal().array() += delta;
  inst.g_star = pop.truth;
  inst.g_star.diagonal().array() += star_offset;
  return inst;
}

MatrixXd true_risk(LinearGaussianPopulation const &pop, MatrixXd const &weights)
{
  pop.validate();
  if (weights.rows() != pop.elements() || weights.cols() != pop.input_dim()) {
    throw ConfigError("predictor must be " + shape_string(pop.elements(), pop.input_dim()));
  }
  MatrixXd const bias = weights - pop.truth;
  VectorXd const var_in = pop.input_std.array().square();
  VectorXd const risk = bias.array().square().matrix() * var_in + pop.noise_std.array().square().matrix();
  MatrixXd out(pop.horizon, pop.features);
  for (Index j = 0; j < pop.horizon; ++j) {
    for (Index k = 0; k < pop.features; ++k) {
      out(j, k) = risk(j * pop.features + k);
    }
  }
  return out;
}

OracleReport run_estimator_experiment(OracleInstance const &inst)
{
  inst.validate();
  auto const &pop = inst.population;
  Index const P = pop.elements();
  Index const D = pop.input_dim();
  Index const N = inst.sample_size;
  double const eps = inst.epsilon;
  double const a = inst.margin_alpha;

  MatrixXd const risk_mat = true_risk(pop, inst.g);
  VectorXd risk(P);
  for (Index j = 0; j < pop.horizon; ++j) {
    for (Index k = 0; k < pop.features; ++k) {
      risk(j * pop.features + k) = risk_mat(j, k);
    }
  }
  double const risk_sum = risk.sum();

  std::vector<std::vector<std::size_t>> partition;
  for (Index start = 0; start < N; start += inst.jensen_batch) {
    std::vector<std::size_t> idx;
    for (Index i = start; i < std::min(N, start + inst.jensen_batch); ++i) {
      idx.push_back(static_cast<std::size_t>(i));
    }
    partition.push_back(std::move(idx));
  }

  RunningStat plain_sq, wave_sq, diff, bound, excess;
  Index cond_b_ok = 0;
  Index margin_ok = 0;
  double active = 0.0;
  OracleReport rep;

  Rng root(inst.seed);
  MatrixXd U(D, N);
  MatrixXd noise(P, N);
  for (Index trial = 0; trial < inst.trials; ++trial) {
    Rng rng = root.split();
    for (Index i = 0; i < N; ++i) {
      for (Index d = 0; d < D; ++d) {
        U(d, i) = pop.input_std(d) * rng.normal();
      }
      for (Index e = 0; e < P; ++e) {
        noise(e, i) = pop.noise_std(e) * rng.normal();
      }
    }
    MatrixXd const Y = pop.truth * U + noise;
    MatrixXd const sq_g = (inst.g * U - Y).array().square();
    MatrixXd const sq_s = (inst.g_star * U - Y).array().square();
    VectorXd const r_g = sq_g.rowwise().mean();
    VectorXd const r_s = sq_s.rowwise().mean();

    double plain = 0.0;
    double wave = 0.0;
    double bound_t = 0.0;
    bool b_ok = true;
    bool m_ok = true;
    Index in_j = 0;
    for (Index e = 0; e < P; ++e) {
      double const lower = r_s(e) - eps;
      plain += r_g(e);
      wave += bounded(r_g(e), lower);
      if (r_g(e) < lower) {
        ++in_j;
        b_ok = b_ok && (r_s(e) < risk(e) + eps);
        m_ok = m_ok && (a < risk(e) - r_s(e) + eps);
      }
      if (a < r_s(e) - r_g(e) - eps) {
        bound_t += 4.0 * a * a;
      }
    }
    double const dp = (plain - risk_sum) * (plain - risk_sum);
    double const dw = (wave - risk_sum) * (wave - risk_sum);
    plain_sq.add(dp);
    wave_sq.add(dw);
    diff.add(dp - dw);
    bound.add(bound_t);
    excess.add(dp - dw - bound_t);
    cond_b_ok += b_ok ? 1 : 0;
    margin_ok += m_ok ? 1 : 0;
    active += static_cast<double>(in_j) / static_cast<double>(P);

    auto const audit = jensen_audit_errors(sq_g, sq_s, partition, pop.horizon, pop.features, eps, risk_sum / static_cast<double>(P));
    rep.jensen_violations += audit.violations;
    rep.jensen_checks += audit.checks;
  }

  auto const T = static_cast<double>(inst.trials);
  auto const P2 = static_cast<double>(P) * static_cast<double>(P);
  rep.trials = inst.trials;
  rep.elements = P;
  rep.true_risk_sum = risk_sum;
  rep.mse_plain = plain_sq.mean;
  rep.mse_wave = wave_sq.mean;
  rep.se_plain = plain_sq.std_error();
  rep.se_wave = wave_sq.std_error();
  rep.reduction = diff.mean;
  rep.reduction_se = diff.std_error();
  rep.theorem_bound = bound.mean;
  rep.bound_se = bound.std_error();
  rep.excess_se = excess.std_error();
  rep.mse_plain_mean_form = rep.mse_plain / P2;
  rep.mse_wave_mean_form = rep.mse_wave / P2;
  rep.condition_b_rate = static_cast<double>(cond_b_ok) / T;
  rep.condition_b_violation_rate = 1.0 - rep.condition_b_rate;
  rep.margin_condition_rate = static_cast<double>(margin_ok) / T;
  rep.active_rate = active / T;
  return rep;
}

std::string report_json(OracleReport const &r, OracleInstance const &inst)
{
  nlohmann::ordered_json j;
  j["trials"] = r.trials;
  j["elements"] = r.elements;
  j["sample_size"] = inst.sample_size;
  j["epsilon"] = inst.epsilon;
  j["margin_alpha"] = inst.margin_alpha;
  j["seed"] = inst.seed;
  j["true_risk_sum"] = r.true_risk_sum;
  j["mse_plain"] = r.mse_plain;
  j["mse_wave"] = r.mse_wave;
  j["se_plain"] = r.se_plain;
  j["se_wave"] = r.se_wave;
  j["reduction"] = r.reduction;
  j["reduction_se"] = r.reduction_se;
  j["theorem_bound"] = r.theorem_bound;
  j["bound_se"] = r.bound_se;
  j["excess_se"] = r.excess_se;
  j["mse_plain_mean_form"] = r.mse_plain_mean_form;
  j["mse_wave_mean_form"] = r.mse_wave_mean_form;
  j["condition_b_rate"] = r.condition_b_rate;
  j["condition_b_violation_rate"] = r.condition_b_violation_rate;
  j["margin_condition_rate"] = r.margin_condition_rate;
  j["active_rate"] = r.active_rate;
  j["jensen_violations"] = r.jensen_violations;
  j["jensen_checks"] = r.jensen_checks;
  j["direction_holds_3se"] = r.direction_holds();
  j["bound_holds_3se"] = r.bound_holds();
  return j.dump(2) + "\n";
}

std::string report_table(OracleReport const &r)
{
  std::ostringstream out;
  auto row = [&](std::string const &name, std::string const &value) {
    out << std::left << std::setw(28) << name << value << '\n';
  };
  row("trials", std::to_string(r.trials));
  row("elements", std::to_string(r.elements));
  row("MSE plain", format_double(r.mse_plain) + " +- " + format_double(r.se_plain));
  row("MSE wave", format_double(r.mse_wave) + " +- " + format_double(r.se_wave));
  row("reduction", format_double(r.reduction) + " +- " + format_double(r.reduction_se));
  row("bound 4a^2 sum Pr", format_double(r.theorem_bound) + " +- " + format_double(r.bound_se));
  row("condition (b) rate", format_double(r.condition_b_rate));
  row("margin condition rate", format_double(r.margin_condition_rate));
  row("active element rate", format_double(r.active_rate));
  row("jensen violations", std::to_string(r.jensen_violations) + " / " + std::to_string(r.jensen_checks));
  row("direction (3 SE)", r.direction_holds() ? "holds" : "fails");
  row("bound (3 SE)", r.bound_holds() ? "holds" : "fails");
  return out.str();
}

JensenAudit jensen_audit_errors(MatrixXd const &sq_g, MatrixXd const &sq_star,
                                std::vector<std::vector<std::size_t>> const &partition, Index horizon,
                                Index features, double epsilon, double flood_level, double tolerance)
{
  if (sq_g.rows() != sq_star.rows() || sq_g.cols() != sq_star.cols() || sq_g.rows() != horizon * features) {
    throw ConfigError("squared-error matrices do not match M*K x N");
  }
  Index const N = sq_g.cols();
  std::vector<char> seen(static_cast<std::size_t>(N), 0);
  std::size_t covered = 0;
  for (auto const &b : partition) {
    if (b.empty()) {
      throw ConfigError("partition contains an empty batch");
    }
    for (auto i : b) {
      if (i >= static_cast<std::size_t>(N) || seen[i]) {
        throw ConfigError("partition is not a partition of the sample indices");
      }
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != static_cast<std::size_t>(N)) {
    throw ConfigError("partition does not cover every sample");
  }

  Index const P = sq_g.rows();
  VectorXd const pooled_g = sq_g.rowwise().mean();
  VectorXd const pooled_s = sq_star.rowwise().mean();
  VectorXd wave_upper = VectorXd::Zero(P);
  VectorXd const_upper = VectorXd::Zero(P);
  double flood_upper = 0.0;
  for (auto const &b : partition) {
    double const w = static_cast<double>(b.size()) / static_cast<double>(N);
    VectorXd rg = VectorXd::Zero(P);
    VectorXd rs = VectorXd::Zero(P);
    for (auto i : b) {
      rg += sq_g.col(static_cast<Index>(i));
      rs += sq_star.col(static_cast<Index>(i));
    }
    rg /= static_cast<double>(b.size());
    rs /= static_cast<double>(b.size());
    for (Index e = 0; e < P; ++e) {
      wave_upper(e) += w * bounded(rg(e), rs(e) - epsilon);
      const_upper(e) += w * bounded(rg(e), flood_level);
    }
    flood_upper += w * bounded(rg.mean(), flood_level);
  }

  JensenAudit audit;
  auto check = [&](double pooled, double upper) {
    ++audit.checks;
    double const slack = upper - pooled;
    audit.worst_slack = std::min(audit.worst_slack, slack);
    if (slack < -tolerance) {
      ++audit.violations;
    }
  };
  for (Index e = 0; e < P; ++e) {
    check(bounded(pooled_g(e), pooled_s(e) - epsilon), wave_upper(e));
    check(bounded(pooled_g(e), flood_level), const_upper(e));
  }
  check(bounded(pooled_g.mean(), flood_level), flood_upper);
  return audit;
}

JensenAudit jensen_audit(FlatWindows const &windows, std::vector<std::vector<std::size_t>> const &partition,
                         Params const &g, Params const &g_star, double epsilon, double flood_level, double tolerance)
{
  if (windows.empty()) {
    throw ConfigError("jensen audit needs a non-empty window set");
  }
  MatrixXd const sq_g = (forward<double>(g, windows.inputs) - windows.targets).array().square();
  MatrixXd const sq_s = (forward<double>(g_star, windows.inputs) - windows.targets).array().square();
  return jensen_audit_errors(sq_g, sq_s, partition, windows.output_len, windows.features, epsilon, flood_level,
                             tolerance);
}

JensenAudit jensen_audit(FlatWindows const &windows, std::size_t batch_size, std::uint64_t seed, Params const &g,
                         Params const &g_star, double epsilon, double flood_level, double tolerance)
{
  auto const partition = batches(static_cast<std::size_t>(windows.count()), batch_size, seed, true);
  return jensen_audit(windows, partition, g, g_star, epsilon, flood_level, tolerance);
}

} // namespace wavebound

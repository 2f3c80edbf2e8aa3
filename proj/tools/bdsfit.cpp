// Command-line front end: ingestion, fitting, simulation, probability and
// moment queries, model comparison, report emission.
//
// Exit codes: 0 success, 2 validation failure, 3 numeric failure,
// 4 non-convergence (flagged result still written).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "bds/baselines.hpp"
#include "bds/em.hpp"
#include "bds/sim.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace bds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNoConverge = 4;

struct IngestArgs {
  std::string genotypes, reduced, covariates;
};

void add_ingest_options(CLI::App* cmd, IngestArgs& args) {
  auto* g = cmd->add_option("--genotypes", args.genotypes,
                            "genotype CSV (patient_id,time,site_id)");
  auto* r = cmd->add_option("--reduced", args.reduced,
                            "reduced CSV (patient_id,t_start,t_end,a,b,c_new)");
  g->excludes(r);
  cmd->add_option("--covariates", args.covariates, "covariates CSV (patient_id,z1,...)");
}

PanelDataset load_dataset(const IngestArgs& args) {
  if (args.genotypes.empty() && args.reduced.empty())
    throw ValidationError("provide --genotypes or --reduced");
  std::optional<CovariateTable> cov;
  if (!args.covariates.empty()) cov = read_covariates_csv(args.covariates);
  const CovariateTable* cp = cov ? &*cov : nullptr;
  if (!args.genotypes.empty())
    return validate_dataset(read_genotype_csv(args.genotypes), cp);
  return validate_dataset(read_reduced_csv(args.reduced), cp);
}

RateTriple parse_rates(const std::string& text) {
  RateTriple r;
  std::stringstream ss(text);
  std::string tok;
  double v[3];
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, tok, ',')) throw ValidationError("--rates needs lambda,nu,mu");
    v[i] = std::stod(tok);
  }
  r = {v[0], v[1], v[2]};
  r.check_valid();
  return r;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  Eigen::VectorXd out(static_cast<long>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<long>(i)] = v[i];
  return out;
}

std::string fmtg(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["method"] = fit.method;
  j["model"] = fit.spec.text;
  j["converged"] = fit.converged;
  j["floored"] = fit.floored;
  j["boundary"] = fit.boundary;
  j["loglik"] = fit.loglik;
  j["k"] = fit.k;
  j["n_units"] = fit.n_units;
  j["bic"] = fit.bic_value;
  j["n_iterations"] = fit.n_iterations;
  j["se_note"] = fit.se_note;
  json coefs = json::array();
  for (const auto& c : fit.coef) {
    json jc;
    jc["name"] = c.name;
    jc["estimate"] = c.est;
    if (c.se_ok) {
      jc["se"] = c.se;
      jc["ci95_lo"] = c.lo;
      jc["ci95_hi"] = c.hi;
      jc["rate_scale"] = {{"estimate", std::exp(c.est)},
                          {"ci95_lo", std::exp(c.lo)},
                          {"ci95_hi", std::exp(c.hi)}};
    }
    coefs.push_back(jc);
  }
  j["coefficients"] = coefs;
  return j;
}

void write_trace_csv(const std::string& path, const FitResult& fit) {
  std::ofstream out(path);
  out << "iter,loglik,delta,seconds\n";
  for (const auto& row : fit.trace)
    out << row.iter << ',' << fmtg(row.loglik) << ',' << fmtg(row.delta) << ','
        << fmtg(row.seconds) << '\n';
}

void write_summary(const std::string& path, const FitResult& fit) {
  std::ofstream out(path);
  out << "method: " << fit.method << "\nmodel: " << fit.spec.text
      << "\nconverged: " << (fit.converged ? "yes" : "no")
      << "\nloglik: " << fit.loglik << "\nBIC: " << fit.bic_value << " (k=" << fit.k
      << ", n=" << fit.n_units << ")\niterations: " << fit.n_iterations << "\n";
  if (fit.floored) out << "warning: some rates were driven to the floor\n";
  if (fit.boundary) out << "warning: estimate near the zero-rate boundary\n";
  if (!fit.se_note.empty() && fit.se_note != "ok") out << "se: " << fit.se_note << "\n";
  out << "\ncoefficient         estimate        se          95% CI (log scale)      rate scale\n";
  for (const auto& c : fit.coef) {
    char buf[200];
    if (c.se_ok)
      std::snprintf(buf, sizeof buf, "%-18s %11.5f %9.5f   [%9.5f, %9.5f]   %.6g [%.6g, %.6g]",
                    c.name.c_str(), c.est, c.se, c.lo, c.hi, std::exp(c.est),
                    std::exp(c.lo), std::exp(c.hi));
    else
      std::snprintf(buf, sizeof buf, "%-18s %11.5f        (no SE)", c.name.c_str(), c.est);
    out << buf << '\n';
  }
}

FitResult fm_to_fitresult(const FmFit& fm, const PanelDataset& data) {
  FitResult fit;
  fit.method = "fm";
  fit.spec = ModelSpec::intercept_only();
  fit.k = 3;
  fit.n_units = static_cast<double>(data.n_intervals());
  fit.loglik = fm.loglik;
  fit.bic_value = bic(fm.loglik, fit.k, fit.n_units);
  fit.converged = fm.converged;
  fit.floored = fm.floored;
  fit.n_iterations = 1;
  const double est[3] = {std::log(fm.rates.lambda), std::log(fm.rates.nu),
                         std::log(fm.rates.mu)};
  static const char* names[3] = {"lambda:1", "nu:1", "mu:1"};
  for (int i = 0; i < 3; ++i) {
    CoefStats c;
    c.name = names[i];
    c.est = est[i];
    if (fm.se_ok) {
      c.se = fm.se_log[i];
      c.lo = c.est - 1.959963984540054 * c.se;
      c.hi = c.est + 1.959963984540054 * c.se;
      c.se_ok = true;
    }
    fit.coef.push_back(c);
  }
  RegressionCoefficients beta;
  beta.beta_lambda = Eigen::VectorXd::Constant(1, est[0]);
  beta.beta_nu = Eigen::VectorXd::Constant(1, est[1]);
  beta.beta_mu = Eigen::VectorXd::Constant(1, est[2]);
  fit.beta = beta;
  return fit;
}

struct FitArgs {
  IngestArgs ingest;
  std::string model;
  std::string method = "em";
  int grid = 0;
  double tol = 1e-6;
  int max_iter = 500;
  bool no_accelerate = false;
  bool allow_alias = false;
  int threads = 0;
  double n_units = 0;
  std::string beta0_text;
  std::string out_dir = ".";
};

EmOptions make_em_options(const FitArgs& a) {
  EmOptions opt;
  opt.tol = a.tol;
  opt.max_iter = a.max_iter;
  opt.accelerate = !a.no_accelerate;
  opt.spectral.n_grid = a.grid;
  opt.spectral.allow_alias = a.allow_alias;
  opt.n_threads = a.threads;
  return opt;
}

int run_fit(const FitArgs& a) {
  const PanelDataset data = load_dataset(a.ingest);
  const ModelSpec spec = a.model.empty()
                             ? ModelSpec::intercept_only()
                             : ModelSpec::parse(a.model, data.covariate_names);
  const Design design = Design::from(data, spec);
  EmOptions opt = make_em_options(a);

  FitResult fit;
  if (a.method == "em") {
    std::optional<RegressionCoefficients> beta0;
    if (!a.beta0_text.empty()) beta0 = unflatten(spec, parse_vector(a.beta0_text));
    fit = fit_em(data, design, beta0, opt);
  } else if (a.method == "direct") {
    RegressionCoefficients beta0 = a.beta0_text.empty()
                                       ? moment_start(data, design)
                                       : unflatten(spec, parse_vector(a.beta0_text));
    fit = fit_direct(data, design, beta0, DirectOptions{a.tol, 2000, 0.2}, opt);
  } else if (a.method == "fm") {
    fit = fm_to_fitresult(fit_fm(data), data);
  } else {
    throw ValidationError("unknown --method '" + a.method + "' (em, fm, or direct)");
  }
  if (a.n_units > 0) {
    fit.n_units = a.n_units;
    fit.bic_value = bic(fit.loglik, fit.k, fit.n_units);
  }

  fs::create_directories(a.out_dir);
  std::ofstream(fs::path(a.out_dir) / "fit.json") << fit_to_json(fit).dump(2) << '\n';
  write_trace_csv((fs::path(a.out_dir) / "trace.csv").string(), fit);
  write_summary((fs::path(a.out_dir) / "summary.txt").string(), fit);
  std::cout << "loglik " << fit.loglik << "  BIC " << fit.bic_value
            << (fit.converged ? "" : "  [not converged]") << '\n';
  return fit.converged ? kExitOk : kExitNoConverge;
}

struct CompareArgs {
  IngestArgs ingest;
  std::vector<std::string> models;
  int grid = 0;
  double tol = 1e-6;
  int threads = 0;
  double n_units = 0;
  std::string out_dir = ".";
};

int run_compare(const CompareArgs& a) {
  if (a.models.size() < 2) throw ValidationError("compare needs at least two --model specs");
  const PanelDataset data = load_dataset(a.ingest);

  struct Row {
    std::string name, model;
    int k = 0;
    double loglik = 0, bic = 0;
    bool ok = false, converged = false;
    std::string error;
  };
  std::vector<Row> rows;
  for (const auto& entry : a.models) {
    Row row;
    const auto eq = entry.find('=');
    row.name = eq == std::string::npos ? entry : entry.substr(0, eq);
    row.model = eq == std::string::npos ? entry : entry.substr(eq + 1);
    try {
      const ModelSpec spec = ModelSpec::parse(row.model, data.covariate_names);
      const Design design = Design::from(data, spec);
      FitArgs fa;
      fa.grid = a.grid;
      fa.tol = a.tol;
      fa.threads = a.threads;
      EmOptions opt = make_em_options(fa);
      opt.with_se = false;
      FitResult fit = fit_em(data, design, std::nullopt, opt);
      row.k = fit.k;
      row.loglik = fit.loglik;
      row.bic = a.n_units > 0 ? bic(fit.loglik, fit.k, a.n_units) : fit.bic_value;
      row.converged = fit.converged;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (x.ok != y.ok) return x.ok;
    return x.bic < y.bic;
  });

  fs::create_directories(a.out_dir);
  {
    std::ofstream csv(fs::path(a.out_dir) / "compare.csv");
    csv << "name,model,k,loglik,bic,converged,error\n";
    for (const auto& r : rows)
      csv << r.name << ',' << r.model << ',' << r.k << ','
          << (r.ok ? fmtg(r.loglik) : "") << ',' << (r.ok ? fmtg(r.bic) : "") << ','
          << (r.converged ? "yes" : "no") << ',' << r.error << '\n';
  }
  std::ostringstream txt;
  txt << "model comparison (sorted by BIC)\n";
  for (const auto& r : rows) {
    char buf[256];
    if (r.ok)
      std::snprintf(buf, sizeof buf, "%-24s k=%-3d loglik=%-12.4f BIC=%-10.2f %s",
                    r.name.c_str(), r.k, r.loglik, r.bic,
                    r.converged ? "" : "[not converged]");
    else
      std::snprintf(buf, sizeof buf, "%-24s FAILED: %s", r.name.c_str(), r.error.c_str());
    txt << buf << '\n';
  }
  std::ofstream(fs::path(a.out_dir) / "compare.txt") << txt.str();
  std::cout << txt.str();
  const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return r.ok; });
  return any_ok ? kExitOk : kExitNumeric;
}

struct MatrixArgs {
  long a = 10;
  double t = 1.0;
  std::string rates_text;
  int grid = 0;
  std::string oracle = "none";
  long reps = 2000;
  std::uint64_t seed = 20240501;
  bool allow_alias = false;
  std::string out;
  int threads = 0;
};

SpectralOptions matrix_spectral(const MatrixArgs& a) {
  SpectralOptions opt;
  opt.n_grid = a.grid > 0 ? a.grid : choose_grid_size(a.a);
  opt.allow_alias = a.allow_alias;
  return opt;
}

int run_probs(const MatrixArgs& a) {
  const RateTriple rates = parse_rates(a.rates_text);
  const SpectralOptions opt = matrix_spectral(a);
  const TransitionMatrix tm = invert_probabilities(a.a, a.t, rates, opt);

  std::optional<McTransition> mc;
  std::optional<TransitionMatrix> unif;
  if (a.oracle == "mc")
    mc = mc_transition(a.a, a.t, rates, a.reps, a.seed, opt.n_grid, 10000, a.threads);
  else if (a.oracle == "unif")
    unif = uniformization_probs(a.a, a.t, rates, opt.n_grid);
  else if (a.oracle != "none")
    throw ValidationError("--oracle must be none, mc, or unif");

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "l,m,value";
  if (mc) *os << ",mc_p,mc_lo,mc_hi";
  if (unif) *os << ",unif_p";
  *os << '\n';
  for (long l = 0; l < tm.n; ++l)
    for (long m = 0; m < tm.n; ++m) {
      *os << l << ',' << m << ',' << fmtg(tm.at(l, m));
      if (mc) {
        const McCell& c = mc->at(l, m);
        *os << ',' << fmtg(c.p) << ',' << fmtg(c.lo) << ',' << fmtg(c.hi);
      }
      if (unif)
        *os << ',' << fmtg(l < unif->n && m < unif->n ? unif->at(l, m) : 0.0);
      *os << '\n';
    }
  return kExitOk;
}

int run_moments(const MatrixArgs& a) {
  const RateTriple rates = parse_rates(a.rates_text);
  const SpectralOptions opt = matrix_spectral(a);
  const MomentMatrices mm = invert_moments(a.a, a.t, rates, opt);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "l,m,m_plus,m_shift,m_minus,m_star\n";
  for (long l = 0; l < mm.n; ++l)
    for (long m = 0; m < mm.n; ++m)
      *os << l << ',' << m << ',' << fmtg(mm.plus(l, m)) << ',' << fmtg(mm.shift(l, m))
          << ',' << fmtg(mm.minus(l, m)) << ',' << fmtg(mm.star(l, m)) << '\n';

  if (a.oracle == "mc") {
    const McStats st =
        mc_unconditioned_stats(a.a, a.t, rates, a.reps, a.seed, 10000, a.threads);
    double sums[4] = {0, 0, 0, 0};
    for (double x : mm.m_plus) sums[0] += x;
    for (double x : mm.m_shift) sums[1] += x;
    for (double x : mm.m_minus) sums[2] += x;
    for (double x : mm.m_star) sums[3] += x;
    const double means[4] = {st.births, st.shifts, st.deaths, st.ptime};
    const double ses[4] = {st.se_births, st.se_shifts, st.se_deaths, st.se_ptime};
    static const char* names[4] = {"births", "shifts", "deaths", "particle_time"};
    std::cout << "stat,moment_sum,mc_mean,mc_lo,mc_hi\n";
    for (int i = 0; i < 4; ++i)
      std::cout << names[i] << ',' << fmtg(sums[i]) << ',' << fmtg(means[i]) << ','
                << fmtg(means[i] - 1.96 * ses[i]) << ',' << fmtg(means[i] + 1.96 * ses[i])
                << '\n';
  } else if (a.oracle != "none") {
    throw ValidationError("--oracle must be none or mc for moments");
  }
  return kExitOk;
}

struct SimArgs {
  std::string mode = "interval";
  int patients = 1;
  int intervals_min = 1, intervals_max = 1;
  double dt = 1.0;
  long init_min = 1, init_max = 15;
  std::string rates_text;
  std::string beta_lambda, beta_nu, beta_mu, boxes_text;
  long genome_size = 10000;
  std::uint64_t seed = 20240501;
  std::string out_dir = ".";
};

std::vector<CovariateBox> parse_boxes(const std::string& text) {
  std::vector<CovariateBox> boxes;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw ValidationError("--boxes format is lo:hi;lo:hi;...");
    boxes.push_back({std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
  }
  return boxes;
}

void write_events_csv(const std::string& path, const PanelDataset& data,
                      const std::vector<Trajectory>& logs) {
  std::ofstream out(path);
  out << "patient_id,time,event,site_from,site_to\n";
  for (std::size_t p = 0; p < logs.size(); ++p)
    for (const auto& e : logs[p].events) {
      out << data.patients[p].id << ',' << fmtg(e.time) << ',' << event_name(e.type) << ',';
      if (e.site_from >= 0) out << 's' << e.site_from;
      out << ',';
      if (e.site_to >= 0) out << 's' << e.site_to;
      out << '\n';
    }
}

int run_simulate(const SimArgs& a) {
  PanelRecipe recipe;
  recipe.n_patients = a.patients;
  recipe.min_intervals = a.intervals_min;
  recipe.max_intervals = a.intervals_max;
  recipe.dt = a.dt;
  recipe.init_min = a.init_min;
  recipe.init_max = a.init_max;
  recipe.genome_size = a.genome_size;
  if (!a.rates_text.empty()) {
    recipe.rates = parse_rates(a.rates_text);
  } else {
    if (a.beta_lambda.empty() || a.beta_nu.empty() || a.beta_mu.empty() ||
        a.boxes_text.empty())
      throw ValidationError(
          "covariate simulation needs --beta-lambda/--beta-nu/--beta-mu and --boxes");
    recipe.boxes = parse_boxes(a.boxes_text);
    recipe.beta.beta_lambda = parse_vector(a.beta_lambda);
    recipe.beta.beta_nu = parse_vector(a.beta_nu);
    recipe.beta.beta_mu = parse_vector(a.beta_mu);
    const long want = 1 + static_cast<long>(recipe.boxes.size());
    if (recipe.beta.beta_lambda.size() != want || recipe.beta.beta_nu.size() != want ||
        recipe.beta.beta_mu.size() != want)
      throw ValidationError(
          "beta vectors must have length 1 + number of boxes (intercept first)");
  }

  fs::create_directories(a.out_dir);
  if (a.mode == "interval") {
    const PanelDataset data = simulate_panel(recipe, a.seed);
    write_reduced_csv((fs::path(a.out_dir) / "reduced.csv").string(), data);
    if (!recipe.boxes.empty())
      write_covariates_csv((fs::path(a.out_dir) / "covariates.csv").string(), data);
  } else if (a.mode == "trajectory") {
    const SimulatedTrajectories sim = simulate_trajectories(recipe, a.seed);
    for (const auto& p : sim.data.patients)
      for (const auto& g : p.genotypes)
        if (g.size() == 0)
          std::cerr << "warning: patient " << p.id
                    << " has an empty genotype observation; the long-form CSV cannot "
                       "represent it\n";
    write_genotype_csv((fs::path(a.out_dir) / "genotypes.csv").string(), sim.data);
    write_events_csv((fs::path(a.out_dir) / "events.csv").string(), sim.data, sim.logs);
    if (!recipe.boxes.empty())
      write_covariates_csv((fs::path(a.out_dir) / "covariates.csv").string(), sim.data);
  } else {
    throw ValidationError("--mode must be interval or trajectory");
  }
  std::cout << "seed: " << a.seed << '\n';
  return kExitOk;
}

int run_validate(const IngestArgs& a) {
  const PanelDataset data = load_dataset(a);
  const FmCounts c = fm_counts(data);
  std::cout << "patients: " << data.patients.size() << '\n'
            << "observations: " << data.n_observations() << '\n'
            << "intervals: " << data.n_intervals() << '\n'
            << "intervals with change: " << data.n_changed_intervals() << '\n'
            << "max per-type count: " << data.max_count() << '\n'
            << "suggested grid: " << choose_grid_size(data.max_count()) << '\n'
            << "one-event classification: none=" << c.n_none << " birth=" << c.n_birth
            << " shift=" << c.n_shift << " death=" << c.n_death
            << " complex(dropped by FM)=" << c.dropped << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birth-death-shift process fitting via two-type branching approximation"};
  app.require_subcommand(1);
  app.set_config("--config");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a model to panel data");
  add_ingest_options(fit, fit_args.ingest);
  fit->add_option("--model", fit_args.model, "e.g. \"lambda~1+EI, nu~1, mu~1+EI\"");
  fit->add_option("--method", fit_args.method, "em | fm | direct")->capture_default_str();
  fit->add_option("--grid", fit_args.grid, "FFT grid size (0 = from data)");
  fit->add_option("--tol", fit_args.tol, "relative loglik tolerance")->capture_default_str();
  fit->add_option("--max-iter", fit_args.max_iter)->capture_default_str();
  fit->add_flag("--no-accelerate", fit_args.no_accelerate, "disable the no-change fast path");
  fit->add_flag("--allow-alias", fit_args.allow_alias);
  fit->add_option("--threads", fit_args.threads);
  fit->add_option("--n-units", fit_args.n_units, "BIC sample-size override");
  fit->add_option("--beta0", fit_args.beta0_text, "flattened starting coefficients");
  fit->add_option("--out", fit_args.out_dir)->capture_default_str();

  CompareArgs cmp_args;
  auto* cmp = app.add_subcommand("compare", "fit several models, emit a BIC table");
  add_ingest_options(cmp, cmp_args.ingest);
  cmp->add_option("--model", cmp_args.models, "NAME=SPEC (repeatable)")->required();
  cmp->add_option("--grid", cmp_args.grid);
  cmp->add_option("--tol", cmp_args.tol)->capture_default_str();
  cmp->add_option("--threads", cmp_args.threads);
  cmp->add_option("--n-units", cmp_args.n_units);
  cmp->add_option("--out", cmp_args.out_dir)->capture_default_str();

  MatrixArgs probs_args;
  auto* probs = app.add_subcommand("probs", "transition probability matrix");
  probs->add_option("-a,--start", probs_args.a, "initial count")->required();
  probs->add_option("-t,--time", probs_args.t)->required();
  probs->add_option("--rates", probs_args.rates_text, "lambda,nu,mu")->required();
  probs->add_option("--grid", probs_args.grid);
  probs->add_option("--oracle", probs_args.oracle, "none | mc | unif")->capture_default_str();
  probs->add_option("--reps", probs_args.reps)->capture_default_str();
  probs->add_option("--seed", probs_args.seed)->capture_default_str();
  probs->add_flag("--allow-alias", probs_args.allow_alias);
  probs->add_option("--threads", probs_args.threads);
  probs->add_option("--out", probs_args.out, "CSV path (default stdout)");

  MatrixArgs mom_args;
  auto* moments = app.add_subcommand("moments", "restricted moment matrices");
  moments->add_option("-a,--start", mom_args.a)->required();
  moments->add_option("-t,--time", mom_args.t)->required();
  moments->add_option("--rates", mom_args.rates_text)->required();
  moments->add_option("--grid", mom_args.grid);
  moments->add_option("--oracle", mom_args.oracle, "none | mc (sums vs MC means)")
      ->capture_default_str();
  moments->add_option("--reps", mom_args.reps)->capture_default_str();
  moments->add_option("--seed", mom_args.seed)->capture_default_str();
  moments->add_flag("--allow-alias", mom_args.allow_alias);
  moments->add_option("--threads", mom_args.threads);
  moments->add_option("--out", mom_args.out);

  SimArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "simulate panel datasets");
  sim->add_option("--mode", sim_args.mode, "interval | trajectory")->capture_default_str();
  sim->add_option("--patients", sim_args.patients)->capture_default_str();
  sim->add_option("--intervals-min", sim_args.intervals_min)->capture_default_str();
  sim->add_option("--intervals-max", sim_args.intervals_max)->capture_default_str();
  sim->add_option("--dt", sim_args.dt)->capture_default_str();
  sim->add_option("--init-min", sim_args.init_min)->capture_default_str();
  sim->add_option("--init-max", sim_args.init_max)->capture_default_str();
  sim->add_option("--rates", sim_args.rates_text, "global lambda,nu,mu");
  sim->add_option("--beta-lambda", sim_args.beta_lambda);
  sim->add_option("--beta-nu", sim_args.beta_nu);
  sim->add_option("--beta-mu", sim_args.beta_mu);
  sim->add_option("--boxes", sim_args.boxes_text, "covariate boxes lo:hi;lo:hi;...");
  sim->add_option("--genome-size", sim_args.genome_size)->capture_default_str();
  sim->add_option("--seed", sim_args.seed)->capture_default_str();
  sim->add_option("--out", sim_args.out_dir)->capture_default_str();

  IngestArgs val_args;
  auto* val = app.add_subcommand("validate", "validate an ingest and print counts");
  add_ingest_options(val, val_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return run_fit(fit_args);
    if (cmp->parsed()) return run_compare(cmp_args);
    if (probs->parsed()) return run_probs(probs_args);
    if (moments->parsed()) return run_moments(mom_args);
    if (sim->parsed()) return run_simulate(sim_args);
    if (val->parsed()) return run_validate(val_args);
  } catch (const ValidationError& e) {
    json err{{"error", "validation"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    json err{{"error", "numeric"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    json err{{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

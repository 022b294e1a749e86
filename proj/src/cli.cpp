#include "sdwb/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "sdwb/bootstrap.hpp"
#include "sdwb/experiments.hpp"
#include "sdwb/fields.hpp"
#include "sdwb/inference.hpp"
#include "sdwb/io.hpp"
#include "sdwb/kernels.hpp"
#include "sdwb/rng.hpp"

namespace sdwb {

namespace {

namespace fs = std::filesystem;

int env_threads() {
  const char* v = std::getenv("SDWB_THREADS");
  if (!v || !*v) return 0;
  return std::atoi(v);
}

// Paths inside a config file resolve relative to the config's directory.
std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text_file(out_path, content);
}

std::string require_string(const json& p, const char* key) {
  if (!p.contains(key) || !p[key].is_string() || p[key].get<std::string>().empty())
    throw std::invalid_argument(std::string("missing required parameter '") +
                                key + "'");
  return p[key].get<std::string>();
}

FieldModel model_from_params(const json& p, std::uint64_t seed) {
  const std::string dgp = p.value("dgp", "matern");
  const int dim_p = p.value("p", 10);
  const double nu = p.value("nu", 1.5);
  const double range = p.value("range", 1.0 / std::sqrt(3.0));
  const double sigma2 = p.value("sigma2", 1.0);

  FieldModel model;
  if (dgp == "matern") {
    model.model = GaussianMaternModel{dim_p, MaternSpec{nu, range, sigma2}};
  } else if (dgp == "cpcar") {
    CompoundPoissonModel m;
    m.p = dim_p;
    m.intensity = p.value("intensity", 1.0);
    m.kernel = ExpKernelSum{{{1.0, p.value("rate", 3.0)}}};
    m.jump = JumpDist{JumpDist::Kind::StandardNormal, dim_p, 1.0};
    model.model = m;
  } else if (dgp == "factor") {
    FactorModel m;
    m.p = dim_p;
    m.k = p.value("factors", 5);
    m.factor_matern = MaternSpec{nu, range, sigma2};
    m.noise_sd = p.value("noise_sd", 1.0);
    model.model = m;
    return with_drawn_loading(model, seed);
  } else {
    throw std::invalid_argument("unknown dgp '" + dgp +
                                "' (expected matern, cpcar or factor)");
  }
  return model;
}

SdwbConfig sdwb_config_from_params(const json& p, double default_b,
                                   int default_B) {
  SdwbConfig cfg;
  cfg.taper.kind = taper_kind_from_name(p.value("kernel", std::string("bartlett")));
  cfg.bandwidth_bn = p.value("b", default_b);
  cfg.replicates_B = p.value("B", default_B);
  cfg.seed = p.value("seed", 1ULL);
  cfg.variance_floor = p.value("floor", 1e-12);
  cfg.validate();
  return cfg;
}

int exec_simulate(const json& p, const std::string& base_dir) {
  const int n = p.value("n", 100);
  const double lambda = p.value("lambda", 25.0);
  const std::uint64_t seed = p.value("seed", 1ULL);
  const std::string out = resolve_path(require_string(p, "out"), base_dir);
  const std::string sites_out =
      resolve_path(p.value("sites_out", std::string()), base_dir);

  SamplingDesign design;
  design.lambda_n = lambda;
  design.d = 2;
  design.region = Rect::unit_cube(2);
  design.kappa_inv = lambda * lambda / n;

  const FieldModel model = model_from_params(p, seed);
  const SiteSet sites = generate_sites(design, n, derive_seed(seed, "sites"));
  const FieldSample y = simulate(model, sites, derive_seed(seed, "field"));
  write_field_csv(out, y);
  if (!sites_out.empty()) write_sites_csv(sites_out, sites);
  return 0;
}

int exec_ci(const json& p, const std::string& base_dir) {
  const std::string in = resolve_path(require_string(p, "in"), base_dir);
  const std::string sites_path =
      resolve_path(require_string(p, "sites"), base_dir);
  const double lambda = p.value("lambda", 25.0);
  const double tau = p.value("tau", 0.05);
  const std::string out = resolve_path(p.value("out", std::string()), base_dir);

  const SiteSet sites = read_sites_csv(sites_path, lambda);
  const Eigen::MatrixXd values = read_field_csv(in);
  if (values.rows() != sites.size())
    throw std::runtime_error("field and sites files disagree on n");
  const FieldSample y{sites, values};
  const double lambda_d = std::pow(lambda, sites.dim());
  const SdwbConfig cfg = sdwb_config_from_params(p, 5.0, 1000);
  emit(joint_ci_csv(joint_ci(y, cfg, lambda_d, tau)), out);
  return 0;
}

int exec_changepoint(const json& p, const std::string& base_dir) {
  const std::string in = resolve_path(require_string(p, "in"), base_dir);
  const double lambda = p.value("lambda", 15.0);
  const double tau = p.value("tau", 0.01);
  const std::string out = resolve_path(p.value("out", std::string()), base_dir);

  std::optional<std::pair<double, double>> window;
  if (p.contains("tmin") && p.contains("tmax"))
    window = std::make_pair(p["tmin"].get<double>(), p["tmax"].get<double>());

  const SpatioTemporalPanel panel = ingest_panel(
      in, window, transform_from_name(p.value("transform", std::string("none"))));
  for (const std::string& id : panel.dropped)
    std::cerr << "dropped station (incomplete window): " << id << "\n";

  const FieldSample field = panel_to_field(panel, lambda);
  const FieldSample diffs = stack_adjacent_differences(field);
  const SdwbConfig cfg = sdwb_config_from_params(p, 4.0, 1500);
  const StepdownResult result =
      stepdown_changepoint(diffs, cfg, lambda * lambda, tau,
                           StepdownOptions{p.value("reuse_draws", false)});
  emit(stepdown_to_json(result).dump(2) + "\n", out);
  return 0;
}

int exec_coverage_study(const json& p, const std::string& base_dir, int threads) {
  const std::string config =
      resolve_path(p.at("config").get<std::string>(), base_dir);
  const std::string out = resolve_path(require_string(p, "out"), base_dir);
  const StudyConfig cfg = study_from_json(json::parse(read_text_file(config)));
  write_text_file(out, coverage_table_csv(coverage_study(cfg, threads)));
  write_text_file(out + ".manifest.json", study_to_json(cfg).dump(2) + "\n");
  return 0;
}

int exec_fwer_study(const json& p, const std::string& base_dir, int threads) {
  const std::string config =
      resolve_path(p.at("config").get<std::string>(), base_dir);
  const std::string out = resolve_path(require_string(p, "out"), base_dir);
  const double tau = p.value("tau", 0.05);
  const StudyConfig cfg = study_from_json(json::parse(read_text_file(config)));
  write_text_file(out, fwer_table_csv(fwer_study(cfg, tau, threads)));
  write_text_file(out + ".manifest.json", study_to_json(cfg).dump(2) + "\n");
  return 0;
}

int exec_psd_check(const json& p, const std::string& base_dir) {
  const double lambda = p.value("lambda", 15.0);
  const std::string sites_path =
      resolve_path(p.value("sites", std::string()), base_dir);
  SiteSet sites;
  if (!sites_path.empty()) {
    sites = read_sites_csv(sites_path, lambda);
  } else {
    SamplingDesign design;
    design.lambda_n = lambda;
    design.d = 2;
    design.region = Rect::unit_cube(2);
    sites = generate_sites(design, p.value("n", 200),
                           derive_seed(p.value("seed", 1ULL), "sites"));
  }
  TaperKernel taper{taper_kind_from_name(p.value("kernel", std::string("bartlett")))};
  std::cout << format_double(psd_check(taper, sites, p.value("b", 5.0))) << "\n";
  return 0;
}

int exec_limit_cov(const json& p, const std::string& base_dir) {
  const std::string config =
      resolve_path(require_string(p, "config"), base_dir);
  const std::string out = resolve_path(p.value("out", std::string()), base_dir);
  const json j = json::parse(read_text_file(config));
  const FieldModel model =
      with_drawn_loading(model_from_json(j.at("model")), j.value("seed", 1ULL));
  const SamplingDesign design = design_from_json(j.at("design"));
  const Eigen::VectorXd limit = limit_cov_oracle(model, design);
  std::ostringstream csv;
  csv << "j,limit_variance\n";
  for (Eigen::Index i = 0; i < limit.size(); ++i)
    csv << (i + 1) << "," << format_double(limit[i]) << "\n";
  emit(csv.str(), out);
  return 0;
}

int execute(const RunConfig& rc, const std::string& base_dir, int threads) {
  if (rc.command == "simulate") return exec_simulate(rc.params, base_dir);
  if (rc.command == "ci") return exec_ci(rc.params, base_dir);
  if (rc.command == "changepoint") return exec_changepoint(rc.params, base_dir);
  if (rc.command == "coverage-study")
    return exec_coverage_study(rc.params, base_dir, threads);
  if (rc.command == "fwer-study")
    return exec_fwer_study(rc.params, base_dir, threads);
  if (rc.command == "psd-check") return exec_psd_check(rc.params, base_dir);
  if (rc.command == "limit-cov") return exec_limit_cov(rc.params, base_dir);
  throw std::invalid_argument("unknown command: " + rc.command);
}

// Collects explicitly passed CLI options into the flat run-config record,
// so the record mirrors the invocation and omitted keys fall back to the
// execution defaults.
class ParamBuilder {
 public:
  explicit ParamBuilder(CLI::App* cmd) : cmd_(cmd) {}

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& key,
                   T default_value, const std::string& help) {
    auto holder = std::make_shared<T>(std::move(default_value));
    CLI::Option* opt = cmd_->add_option(flag, *holder, help);
    captures_.push_back([opt, key, holder](json& out) {
      if (opt->count() > 0) out[key] = *holder;
    });
    return opt;
  }

  CLI::Option* add_flag(const std::string& flag, const std::string& key,
                        const std::string& help) {
    auto holder = std::make_shared<bool>(false);
    CLI::Option* opt = cmd_->add_flag(flag, *holder, help);
    captures_.push_back([opt, key, holder](json& out) {
      if (opt->count() > 0) out[key] = *holder;
    });
    return opt;
  }

  json collect() const {
    json out = json::object();
    for (const auto& capture : captures_) capture(out);
    return out;
  }

 private:
  CLI::App* cmd_;
  std::vector<std::function<void(json&)>> captures_;
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"spatially dependent wild bootstrap toolkit"};
  app.require_subcommand(1);

  int threads = env_threads();
  app.add_option("--threads", threads, "worker threads (0 = auto)");

  struct Command {
    CLI::App* cmd = nullptr;
    std::unique_ptr<ParamBuilder> params;
    std::string name;
    std::string config_path;
  };
  std::vector<std::unique_ptr<Command>> commands;

  auto make_command = [&](const std::string& name, const std::string& help) {
    auto c = std::make_unique<Command>();
    c->cmd = app.add_subcommand(name, help);
    c->cmd->fallthrough();
    c->params = std::make_unique<ParamBuilder>(c->cmd);
    c->name = name;
    c->cmd->add_option("--run-config", c->config_path,
                       "flat JSON run config replacing the flags");
    commands.push_back(std::move(c));
    return commands.back()->params.get();
  };

  {
    ParamBuilder* c = make_command("simulate", "simulate a random field at random sites");
    c->add("--dgp", "dgp", std::string("matern"), "matern | cpcar | factor");
    c->add("--n", "n", 100, "number of sites");
    c->add("--p", "p", 10, "measurement dimension");
    c->add("--lambda", "lambda", 25.0, "region scale lambda_n");
    c->add("--seed", "seed", std::uint64_t{1}, "RNG seed");
    c->add("--out", "out", std::string(), "field CSV output");
    c->add("--sites-out", "sites_out", std::string(), "sites CSV output");
    c->add("--nu", "nu", 1.5, "Matern smoothness");
    c->add("--range", "range", 1.0 / std::sqrt(3.0), "Matern range");
    c->add("--sigma2", "sigma2", 1.0, "Matern marginal variance");
    c->add("--intensity", "intensity", 1.0, "Poisson intensity (cpcar)");
    c->add("--rate", "rate", 3.0, "kernel decay rate (cpcar)");
    c->add("--factors", "factors", 5, "number of factors (factor)");
    c->add("--noise-sd", "noise_sd", 1.0, "noise sd (factor)");
  }
  {
    ParamBuilder* c = make_command("ci", "joint confidence intervals for the mean vector");
    c->add("--in", "in", std::string(), "field CSV (wide form)");
    c->add("--sites", "sites", std::string(), "sites CSV");
    c->add("--lambda", "lambda", 25.0, "region scale lambda_n");
    c->add("--kernel", "kernel", std::string("bartlett"), "bartlett | parzen");
    c->add("--b", "b", 5.0, "bandwidth");
    c->add("--B", "B", 1000, "bootstrap replicates");
    c->add("--tau", "tau", 0.05, "nominal miscoverage");
    c->add("--seed", "seed", std::uint64_t{1}, "RNG seed");
    c->add("--floor", "floor", 1e-12, "variance floor");
    c->add("--out", "out", std::string(), "output CSV (stdout when omitted)");
  }
  {
    ParamBuilder* c = make_command(
        "changepoint", "stepdown change-point test on a spatio-temporal panel");
    c->add("--in", "in", std::string(), "panel CSV (station_id,x,y,t,value)");
    c->add("--transform", "transform", std::string("none"), "none | log1p");
    c->add("--tmin", "tmin", 0.0, "window start");
    c->add("--tmax", "tmax", 0.0, "window end");
    c->add("--lambda", "lambda", 15.0, "region scale (reporting)");
    c->add("--kernel", "kernel", std::string("bartlett"), "bartlett | parzen");
    c->add("--b", "b", 4.0, "bandwidth");
    c->add("--B", "B", 1500, "bootstrap replicates");
    c->add("--tau", "tau", 0.01, "significance level");
    c->add("--seed", "seed", std::uint64_t{1}, "RNG seed");
    c->add("--floor", "floor", 1e-12, "variance floor");
    c->add_flag("--reuse-draws", "reuse_draws", "reuse step-1 draws across steps");
    c->add("--out", "out", std::string(), "output JSON (stdout when omitted)");
  }
  {
    ParamBuilder* c = make_command(
        "coverage-study", "Monte Carlo coverage of joint confidence intervals");
    c->add("--config", "config", std::string(), "study config JSON");
    c->add("--out", "out", std::string(), "coverage table CSV");
  }
  {
    ParamBuilder* c =
        make_command("fwer-study", "familywise error rate of the stepdown test");
    c->add("--config", "config", std::string(), "study config JSON");
    c->add("--tau", "tau", 0.05, "significance level");
    c->add("--out", "out", std::string(), "FWER table CSV");
  }
  {
    ParamBuilder* c = make_command(
        "psd-check", "minimum eigenvalue of the taper Gram matrix");
    c->add("--sites", "sites", std::string(), "sites CSV (generated when omitted)");
    c->add("--n", "n", 200, "number of generated sites");
    c->add("--lambda", "lambda", 15.0, "region scale lambda_n");
    c->add("--seed", "seed", std::uint64_t{1}, "RNG seed");
    c->add("--kernel", "kernel", std::string("bartlett"), "bartlett | parzen");
    c->add("--b", "b", 5.0, "bandwidth");
  }
  {
    ParamBuilder* c = make_command(
        "limit-cov", "limit covariance diagonal for a model/design");
    c->add("--config", "config", std::string(), "JSON with model and design");
    c->add("--out", "out", std::string(), "output CSV (stdout when omitted)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& c : commands) {
      if (!c->cmd->parsed()) continue;
      if (!c->config_path.empty()) {
        const RunConfig rc =
            run_config_from_json(json::parse(read_text_file(c->config_path)));
        if (rc.command != c->name)
          throw std::invalid_argument("run config is for command '" + rc.command +
                                      "', not '" + c->name + "'");
        const std::string base_dir =
            fs::path(c->config_path).parent_path().string();
        return execute(rc, base_dir, threads);
      }
      return execute(RunConfig{c->name, c->params->collect()}, "", threads);
    }
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sdwb");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sdwb

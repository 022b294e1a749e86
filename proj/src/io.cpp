#include "sdwb/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdwb {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "' in " + context);
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_sites_csv(const std::string& path, const SiteSet& s) {
  std::ostringstream out;
  out << "site_id";
  for (int k = 0; k < s.dim(); ++k) out << ",x" << (k + 1);
  out << "\n";
  for (int i = 0; i < s.size(); ++i) {
    out << (i + 1);
    for (int k = 0; k < s.dim(); ++k)
      out << "," << format_double(s.sites(i, k));
    out << "\n";
  }
  write_text_file(path, out.str());
}

SiteSet read_sites_csv(const std::string& path, double lambda_n) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty sites file: " + path);
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "site_id")
    throw std::runtime_error("bad sites header in " + path);
  const int d = static_cast<int>(header.size()) - 1;

  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (static_cast<int>(fields.size()) != d + 1)
      throw std::runtime_error("bad sites row at line " + std::to_string(li + 1));
    std::vector<double> row(d);
    for (int k = 0; k < d; ++k)
      row[k] = parse_double(fields[k + 1], path + " line " + std::to_string(li + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no sites in " + path);

  Eigen::MatrixXd sites(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < d; ++k) sites(i, k) = rows[i][k];
  return SiteSet{std::move(sites), lambda_n};
}

void write_field_csv(const std::string& path, const FieldSample& y) {
  std::ostringstream out;
  out << "site_id";
  for (int j = 0; j < y.p(); ++j) out << "," << (j + 1);
  out << "\n";
  for (int i = 0; i < y.n(); ++i) {
    out << (i + 1);
    for (int j = 0; j < y.p(); ++j)
      out << "," << format_double(y.values(i, j));
    out << "\n";
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXd read_field_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty field file: " + path);
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "site_id")
    throw std::runtime_error("bad field header in " + path);
  const int p = static_cast<int>(header.size()) - 1;

  std::vector<std::vector<double>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (static_cast<int>(fields.size()) != p + 1)
      throw std::runtime_error("bad field row at line " + std::to_string(li + 1));
    std::vector<double> row(p);
    for (int j = 0; j < p; ++j)
      row[j] = parse_double(fields[j + 1], path + " line " + std::to_string(li + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no rows in " + path);

  Eigen::MatrixXd values(rows.size(), p);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < p; ++j) values(i, j) = rows[i][j];
  return values;
}

void write_field_csv_long(const std::string& path, const FieldSample& y) {
  std::ostringstream out;
  out << "site_id,j,value\n";
  for (int i = 0; i < y.n(); ++i)
    for (int j = 0; j < y.p(); ++j)
      out << (i + 1) << "," << (j + 1) << ","
          << format_double(y.values(i, j)) << "\n";
  write_text_file(path, out.str());
}

void write_draws_csv(const std::string& path, const BootstrapDraws& draws) {
  std::ostringstream out;
  out << "stat\n";
  for (Eigen::Index b = 0; b < draws.stats.size(); ++b)
    out << format_double(draws.stats[b]) << "\n";
  write_text_file(path, out.str());
}

std::string joint_ci_csv(const JointCI& ci) {
  std::ostringstream out;
  out << "j,lower,estimate,upper\n";
  for (Eigen::Index j = 0; j < ci.estimate.size(); ++j)
    out << (j + 1) << "," << format_double(ci.lower[j]) << ","
        << format_double(ci.estimate[j]) << "," << format_double(ci.upper[j])
        << "\n";
  return out.str();
}

json stepdown_to_json(const StepdownResult& r) {
  json steps = json::array();
  for (const StepdownStep& s : r.steps) {
    json active = json::array();
    for (int j : s.active) active.push_back(j + 1);
    json rejected = json::array();
    for (int j : s.rejected) rejected.push_back(j + 1);
    steps.push_back({{"active", active},
                     {"q_hat", s.q_hat},
                     {"rejected", rejected}});
  }
  json rejected = json::array();
  for (int j : r.rejected) rejected.push_back(j + 1);
  json segments = json::array();
  for (const auto& [start, end] : r.segments)
    segments.push_back(json::array({start, end}));
  return json{{"steps", steps}, {"rejected", rejected}, {"segments", segments}};
}

std::string coverage_table_csv(const CoverageTable& table) {
  std::ostringstream out;
  out << "dgp,n,p,lambda_n,b,level,coverage,mc_se,replications\n";
  for (const CoverageRow& r : table)
    out << r.dgp << "," << r.n << "," << r.p << ","
        << format_double(r.lambda_n) << "," << format_double(r.b) << ","
        << format_double(r.level) << "," << format_double(r.coverage) << ","
        << format_double(r.mc_se) << "," << r.replications << "\n";
  return out.str();
}

std::string fwer_table_csv(const std::vector<FwerRow>& rows) {
  std::ostringstream out;
  out << "b,tau,fwer,mc_se,replications\n";
  for (const FwerRow& r : rows)
    out << format_double(r.b) << "," << format_double(r.tau) << ","
        << format_double(r.fwer) << "," << format_double(r.mc_se) << ","
        << r.replications << "\n";
  return out.str();
}

std::string power_table_csv(const std::vector<PowerRow>& rows) {
  std::ostringstream out;
  out << "b,tau,shift,shift_time_index,detection_rate,spurious_rate,"
         "localization,replications\n";
  for (const PowerRow& r : rows)
    out << format_double(r.b) << "," << format_double(r.tau) << ","
        << format_double(r.shift) << "," << r.shift_time_index << ","
        << format_double(r.detection_rate) << ","
        << format_double(r.spurious_rate) << ","
        << format_double(r.localization) << "," << r.replications << "\n";
  return out.str();
}

std::string variance_table_csv(const std::vector<VarianceRow>& rows) {
  std::ostringstream out;
  out << "b,coordinate,mean_sigma_hat,oracle,rel_deviation,replications\n";
  for (const VarianceRow& r : rows)
    out << format_double(r.b) << "," << (r.coordinate + 1) << ","
        << format_double(r.mean_sigma_hat) << "," << format_double(r.oracle)
        << "," << format_double(r.rel_deviation) << "," << r.replications
        << "\n";
  return out.str();
}

Transform transform_from_name(const std::string& name) {
  if (name == "none") return Transform::None;
  if (name == "log1p") return Transform::Log1p;
  throw std::invalid_argument("unknown transform: " + name);
}

std::string transform_name(Transform t) {
  return t == Transform::None ? "none" : "log1p";
}

SpatioTemporalPanel ingest_panel(const std::string& path,
                                 std::optional<std::pair<double, double>> window,
                                 Transform transform) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty panel file: " + path);
  const auto header = split_csv_line(lines[0]);
  if (header != std::vector<std::string>{"station_id", "x", "y", "t", "value"})
    throw std::runtime_error(
        "bad panel header in " + path +
        " (expected station_id,x,y,t,value long form)");

  struct Record {
    double t;
    double value;
    std::size_t line;
  };
  std::vector<std::string> order;               // station ids by first appearance
  std::map<std::string, Eigen::Vector2d> coords;
  std::map<std::string, std::vector<Record>> records;
  std::set<double> time_set;
  std::vector<std::size_t> negative_rows;

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    const std::string where = path + " line " + std::to_string(li + 1);
    if (fields.size() != 5 || fields[0].empty())
      throw std::runtime_error("malformed panel row at " + where);
    const double x = parse_double(fields[1], where);
    const double y = parse_double(fields[2], where);
    const double t = parse_double(fields[3], where);
    const double value = parse_double(fields[4], where);
    if (window && (t < window->first || t > window->second)) continue;

    const auto [it, inserted] =
        coords.emplace(fields[0], Eigen::Vector2d(x, y));
    if (inserted)
      order.push_back(fields[0]);
    else if (it->second != Eigen::Vector2d(x, y))
      throw std::runtime_error("inconsistent coordinates for station " +
                               fields[0] + " at " + where);
    if (transform == Transform::Log1p && value < 0.0)
      negative_rows.push_back(li + 1);
    records[fields[0]].push_back({t, value, li + 1});
    time_set.insert(t);
  }

  if (!negative_rows.empty()) {
    std::ostringstream msg;
    msg << "log1p transform requires nonnegative values; negative at rows";
    for (std::size_t r : negative_rows) msg << " " << r;
    throw std::runtime_error(msg.str());
  }
  if (time_set.empty())
    throw std::runtime_error("no observations in the selected window");

  const std::vector<double> times(time_set.begin(), time_set.end());

  SpatioTemporalPanel panel;
  panel.times = times;
  std::vector<std::vector<double>> kept_rows;
  for (const std::string& id : order) {
    std::map<double, double> by_time;
    bool duplicate = false;
    for (const Record& rec : records[id]) {
      if (!by_time.emplace(rec.t, rec.value).second) duplicate = true;
    }
    bool complete = !duplicate;
    std::vector<double> row;
    row.reserve(times.size());
    for (double t : times) {
      const auto it = by_time.find(t);
      if (it == by_time.end()) {
        complete = false;
        break;
      }
      row.push_back(it->second);
    }
    if (!complete) {
      panel.dropped.push_back(id);
      continue;
    }
    panel.stations.push_back({id, coords[id]});
    kept_rows.push_back(std::move(row));
  }

  if (panel.stations.empty())
    throw std::runtime_error("no station covers the full time window");

  panel.values.resize(kept_rows.size(), times.size());
  for (std::size_t i = 0; i < kept_rows.size(); ++i)
    for (std::size_t j = 0; j < times.size(); ++j)
      panel.values(i, j) = transform == Transform::Log1p
                               ? std::log1p(kept_rows[i][j])
                               : kept_rows[i][j];
  return panel;
}

FieldSample panel_to_field(const SpatioTemporalPanel& panel, double lambda_n) {
  Eigen::MatrixXd sites(panel.stations.size(), 2);
  for (std::size_t i = 0; i < panel.stations.size(); ++i)
    sites.row(i) = panel.stations[i].coords.transpose();
  return FieldSample{SiteSet{std::move(sites), lambda_n}, panel.values};
}

// ---- JSON specs -------------------------------------------------------------

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(i, j) = rows[i][j].get<double>();
  return m;
}

json matern_to_json(const MaternSpec& spec) {
  return json{{"nu", spec.nu}, {"range", spec.a_scale}, {"sigma2", spec.sigma2}};
}

MaternSpec matern_from_json(const json& j) {
  MaternSpec spec;
  spec.nu = j.at("nu").get<double>();
  spec.a_scale = j.at("range").get<double>();
  spec.sigma2 = j.at("sigma2").get<double>();
  return spec;
}

}  // namespace

json design_to_json(const SamplingDesign& design) {
  json j{{"lambda_n", design.lambda_n},
         {"d", design.d},
         {"kappa_inv", design.kappa_inv},
         {"region",
          {{"lo", vector_to_json(design.region.lo)},
           {"hi", vector_to_json(design.region.hi)}}}};
  if (design.density.kind == Density::Kind::Uniform) {
    j["density"] = {{"kind", "uniform"}};
  } else {
    j["density"] = {{"kind", "piecewise_constant"},
                    {"grid", design.density.grid},
                    {"weights", vector_to_json(design.density.weights)}};
  }
  return j;
}

SamplingDesign design_from_json(const json& j) {
  SamplingDesign design;
  design.lambda_n = j.at("lambda_n").get<double>();
  design.d = j.value("d", 2);
  design.kappa_inv = j.value("kappa_inv", 0.0);
  if (j.contains("region")) {
    design.region.lo = vector_from_json(j["region"].at("lo"));
    design.region.hi = vector_from_json(j["region"].at("hi"));
  } else {
    design.region = Rect::unit_cube(design.d);
  }
  if (j.contains("density") && j["density"].at("kind") == "piecewise_constant") {
    design.density = Density::piecewise_constant(
        j["density"].at("grid").get<std::vector<int>>(),
        vector_from_json(j["density"].at("weights")));
  } else {
    design.density = Density::uniform();
  }
  return design;
}

json model_to_json(const FieldModel& model) {
  json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMaternModel>) {
          json out = matern_to_json(m.matern);
          out["kind"] = "gaussian_matern";
          out["p"] = m.p;
          return out;
        } else if constexpr (std::is_same_v<T, CompoundPoissonModel>) {
          json kernel;
          if (const auto* exp_sum = std::get_if<ExpKernelSum>(&m.kernel)) {
            json terms = json::array();
            for (const auto& t : exp_sum->terms)
              terms.push_back({{"coef", t.coef}, {"rate", t.rate}});
            kernel = {{"kind", "exp_sum"}, {"terms", terms}};
          } else {
            kernel = matern_to_json(std::get<MaternSpec>(m.kernel));
            kernel["kind"] = "matern";
          }
          json jump;
          if (m.jump.kind == JumpDist::Kind::StandardNormal)
            jump = {{"kind", "std_normal"}};
          else
            jump = {{"kind", "bounded_uniform"}, {"half_width", m.jump.half_width}};
          return json{{"kind", "compound_poisson"},
                      {"p", m.p},
                      {"intensity", m.intensity},
                      {"kernel", kernel},
                      {"jump", jump},
                      {"truncation_scale", m.truncation_scale}};
        } else {
          json out{{"kind", "factor"},
                   {"p", m.p},
                   {"k", m.k},
                   {"factor", matern_to_json(m.factor_matern)},
                   {"noise_sd", m.noise_sd}};
          if (m.loading.size() > 0) out["loading"] = matrix_to_json(m.loading);
          return out;
        }
      },
      model.model);
  if (model.mean_shift) j["mean_shift"] = vector_to_json(*model.mean_shift);
  return j;
}

FieldModel model_from_json(const json& j) {
  FieldModel model;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian_matern") {
    GaussianMaternModel m;
    m.p = j.at("p").get<int>();
    m.matern = matern_from_json(j);
    model.model = m;
  } else if (kind == "compound_poisson") {
    CompoundPoissonModel m;
    m.p = j.at("p").get<int>();
    m.intensity = j.at("intensity").get<double>();
    const json& kernel = j.at("kernel");
    if (kernel.at("kind") == "exp_sum") {
      ExpKernelSum g;
      for (const auto& t : kernel.at("terms"))
        g.terms.push_back({t.at("coef").get<double>(), t.at("rate").get<double>()});
      m.kernel = g;
    } else {
      m.kernel = matern_from_json(kernel);
    }
    const json& jump = j.at("jump");
    m.jump.p = m.p;
    if (jump.at("kind") == "std_normal") {
      m.jump.kind = JumpDist::Kind::StandardNormal;
    } else {
      m.jump.kind = JumpDist::Kind::BoundedUniform;
      m.jump.half_width = jump.at("half_width").get<double>();
    }
    m.truncation_scale = j.value("truncation_scale", 0.0);
    model.model = m;
  } else if (kind == "factor") {
    FactorModel m;
    m.p = j.at("p").get<int>();
    m.k = j.at("k").get<int>();
    m.factor_matern = matern_from_json(j.at("factor"));
    m.noise_sd = j.value("noise_sd", 0.0);
    if (j.contains("loading")) m.loading = matrix_from_json(j["loading"]);
    model.model = m;
  } else {
    throw std::invalid_argument("unknown model kind: " + kind);
  }
  if (j.contains("mean_shift"))
    model.mean_shift = vector_from_json(j["mean_shift"]);
  return model;
}

json study_to_json(const StudyConfig& cfg) {
  return json{{"name", cfg.name},
              {"model", model_to_json(cfg.dgp)},
              {"design", design_to_json(cfg.design)},
              {"n", cfg.n},
              {"p", cfg.p},
              {"taper", taper_kind_name(cfg.taper.kind)},
              {"bandwidths", cfg.bandwidths},
              {"replications", cfg.replications},
              {"bootstrap_B", cfg.bootstrap_B},
              {"levels", cfg.levels},
              {"seed", cfg.base_seed},
              {"variance_floor", cfg.variance_floor},
              {"allow_large", cfg.allow_large}};
}

StudyConfig study_from_json(const json& j) {
  StudyConfig cfg;
  cfg.name = j.value("name", "study");
  cfg.dgp = model_from_json(j.at("model"));
  cfg.design = design_from_json(j.at("design"));
  cfg.n = j.at("n").get<int>();
  cfg.p = j.value("p", cfg.dgp.p());
  cfg.taper.kind = taper_kind_from_name(j.value("taper", "bartlett"));
  cfg.bandwidths = j.at("bandwidths").get<std::vector<double>>();
  cfg.replications = j.at("replications").get<int>();
  cfg.bootstrap_B = j.at("bootstrap_B").get<int>();
  if (j.contains("levels")) cfg.levels = j["levels"].get<std::vector<double>>();
  cfg.base_seed = j.value("seed", 1ULL);
  cfg.variance_floor = j.value("variance_floor", 1e-12);
  cfg.allow_large = j.value("allow_large", false);
  // Factor loadings are drawn once per configuration and frozen.
  cfg.dgp = with_drawn_loading(cfg.dgp, cfg.base_seed);
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j = cfg.params;
  j["command"] = cfg.command;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.command = j.at("command").get<std::string>();
  cfg.params = j;
  cfg.params.erase("command");
  return cfg;
}

}  // namespace sdwb

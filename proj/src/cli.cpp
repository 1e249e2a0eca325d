#include "seaspde/cli.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "seaspde/io.hpp"
#include "seaspde/riskroute.hpp"

namespace seaspde {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CliConfig {
  FitConfig fit;
  int mesh_coarsen = 1;
  double expected_range_deg = 5.0;
  double extension_width_deg = 0.0;  // 0 = 2 * expected_range_deg
  std::uint64_t hash = 0;

  double extension() const {
    return extension_width_deg > 0 ? extension_width_deg
                                   : 2.0 * expected_range_deg;
  }
};

CliConfig load_config(const std::string& path) {
  CliConfig c;
  if (path.empty()) return c;
  std::string text = read_file(path);
  c.hash = fnv1a(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  auto get = [&](const char* key, auto def) {
    using T = decltype(def);
    return j.contains(key) ? j[key].get<T>() : def;
  };
  c.fit.k = get("k", c.fit.k);
  c.fit.m_rational = get("m_rational", c.fit.m_rational);
  c.fit.alpha_init = get("alpha_init", c.fit.alpha_init);
  c.fit.nugget_init = get("nugget_init", c.fit.nugget_init);
  c.fit.max_iter = get("max_iter", c.fit.max_iter);
  c.fit.grad_tol = get("grad_tol", c.fit.grad_tol);
  c.fit.fd_step = get("fd_step", c.fit.fd_step);
  c.fit.shift_radius_cells = get("shift_radius_cells", c.fit.shift_radius_cells);
  c.fit.rho_method = get("rho_method", c.fit.rho_method);
  c.fit.shifted_gamma = get("shifted_gamma", c.fit.shifted_gamma);
  c.mesh_coarsen = get("mesh_coarsen", c.mesh_coarsen);
  c.expected_range_deg = get("expected_range_deg", c.expected_range_deg);
  c.extension_width_deg = get("extension_width_deg", c.extension_width_deg);
  if (c.fit.rho_method != "pointwise" && c.fit.rho_method != "fullml")
    throw ConfigError("config: rho_method must be 'pointwise' or 'fullml'");
  return c;
}

// Coarsened lattice points (always keeping the outermost rows/columns) used
// as mesh generators.
std::vector<Eigen::Vector2d> mesh_grid(const GriddedSeries& s, int coarsen) {
  std::vector<int> ix, iy;
  for (int i = 0; i < s.nx(); i += std::max(1, coarsen)) ix.push_back(i);
  if (ix.back() != s.nx() - 1) ix.push_back(s.nx() - 1);
  for (int i = 0; i < s.ny(); i += std::max(1, coarsen)) iy.push_back(i);
  if (iy.back() != s.ny() - 1) iy.push_back(s.ny() - 1);
  std::vector<Eigen::Vector2d> pts;
  for (int y : iy)
    for (int x : ix) pts.emplace_back(s.lons[x], s.lats[y]);
  return pts;
}

void write_report(const std::string& path, const std::string& name,
                  const FitReport& r) {
  std::ofstream f(path, std::ios::app);
  f.precision(17);
  f << "[" << name << "]\n";
  f << "final_nll " << r.final_nll << "\n";
  f << "iterations " << r.iterations << "\n";
  f << "converged " << (r.converged ? 1 : 0) << "\n";
  f << "gradient_norm " << r.gradient_norm << "\n";
  f << "parameters";
  for (int i = 0; i < r.parameters.size(); ++i) f << " " << r.parameters[i];
  f << "\n";
}

int cmd_ingest(const std::string& input, const std::string& output,
               double thin_hours, std::uint64_t hash) {
  GriddedSeries s = read_series_csv(input);
  GriddedSeries t = thin_series(s, thin_hours);
  std::ostringstream hdr;
  hdr << "config_hash=" << std::hex << hash << std::dec
      << " thin_hours=" << thin_hours;
  write_series_csv(t, output, hdr.str());
  std::cout << "ingest: " << t.times_hours.size() << " records on "
            << t.nx() << "x" << t.ny() << " lattice -> " << output << "\n";
  return 0;
}

int cmd_split(const std::string& input, const std::string& train_out,
              const std::string& test_out, std::uint64_t hash) {
  GriddedSeries s = read_series_csv(input);
  auto [train, test] = split_alternate_days(s);
  std::ostringstream hdr;
  hdr << "config_hash=" << std::hex << hash << std::dec;
  write_series_csv(train, train_out, hdr.str() + " part=train");
  write_series_csv(test, test_out, hdr.str() + " part=test");
  std::cout << "split: " << train.times_hours.size() << " train / "
            << test.times_hours.size() << " test records\n";
  return 0;
}

int cmd_fit(const std::string& train_path, const CliConfig& cfg,
            const std::string& model_out, const std::string& mesh_out,
            const std::string& report_out, std::uint64_t seed) {
  GriddedSeries series = read_series_csv(train_path);
  Dataset data = to_dataset(series);

  auto grid = mesh_grid(series, cfg.mesh_coarsen);
  Mesh mesh = build_lonlat_mesh(grid, cfg.extension());
  save_mesh(mesh, mesh_out);

  StandardizedField fx = standardize(data.log_hs);
  StandardizedField fy = standardize(data.log_t);

  FitConfig fc = cfg.fit;
  fc.seed = seed;
  MarginalFit mx = fit_marginal(mesh, data.locations, fx, fc);
  MarginalFit my = fit_marginal(mesh, data.locations, fy, fc);

  std::ofstream(report_out) << "# seaspde fit report\n";
  write_report(report_out, "marginal_x", mx.report);
  write_report(report_out, "marginal_y", my.report);

  RhoFit rf;
  if (fc.rho_method == "fullml") {
    rf = fit_rho_fullml(mesh, data.locations, mx.spec, my.spec, fx.z, fy.z,
                        fc);
  } else {
    CrossCorrStats stats =
        sample_crosscorr_stats(data, fc.shifted_gamma
                                         ? fc.shift_radius_cells
                                         : 0);
    Eigen::VectorXd ghat =
        fc.shifted_gamma ? stats.gamma_shifted : stats.gamma_hat;
    rf = fit_rho_pointwise(mesh, data.locations, mx.spec, my.spec, ghat,
                           stats.counts, fc);
  }
  write_report(report_out, "rho_" + fc.rho_method, rf.report);

  ModelFile mf;
  mf.k = fc.k;
  mf.m_rational = fc.m_rational;
  mf.spec_x = mx.spec;
  mf.spec_y = my.spec;
  mf.rho = rf.rho;
  mf.mesh_path = mesh_out;
  mf.locations = data.locations;
  mf.grid_nx = data.grid_nx;
  mf.grid_ny = data.grid_ny;
  mf.config_hash = cfg.hash;
  mf.seed = seed;
  save_model(mf, model_out);
  std::cout << "fit: alpha_x=" << mx.spec.alpha << " alpha_y=" << my.spec.alpha
            << " -> " << model_out << "\n";
  return 0;
}

BivariateModel model_from_file(const ModelFile& mf,
                               std::shared_ptr<const Mesh>& mesh_out) {
  Mesh mesh = load_mesh(mf.mesh_path);
  mesh_out = std::make_shared<const Mesh>(std::move(mesh));
  return build(mesh_out, mf.spec_x, mf.spec_y, mf.rho, mf.locations,
               mf.m_rational);
}

int cmd_simulate(const std::string& model_path, int n, std::uint64_t seed,
                 const std::string& output) {
  ModelFile mf = load_model(model_path);
  std::shared_ptr<const Mesh> mesh;
  BivariateModel model = model_from_file(mf, mesh);
  BivarSamples s = sample(model, n, seed);
  std::ofstream f(output);
  if (!f) throw DataError("cannot open output " + output);
  f.precision(17);
  f << "# config_hash=" << std::hex << mf.config_hash << std::dec
    << " seed=" << seed << "\n";
  f << "realization,lon,lat,hs,t1\n";
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXd zx = model.A_active * s.x.col(c);
    Eigen::VectorXd zy = model.A_active * s.y.col(c);
    Eigen::VectorXd hs =
        destandardize(zx, mf.spec_x.mean_field, mf.spec_x.var_field);
    Eigen::VectorXd t1 =
        destandardize(zy, mf.spec_y.mean_field, mf.spec_y.var_field);
    for (size_t j = 0; j < mf.locations.size(); ++j)
      f << c << "," << mf.locations[j].x() << "," << mf.locations[j].y()
        << "," << hs[j] << "," << t1[j] << "\n";
  }
  std::cout << "simulate: " << n << " realizations -> " << output << "\n";
  return 0;
}

struct RiskSetup {
  ModelFile mf;
  std::shared_ptr<const Mesh> mesh;
  BivariateModel model;
  Route route;
  std::vector<int> wp_loc;          // nearest model location per waypoint
  std::vector<double> fixed_dirs;   // from file; empty = gradient fallback
  Eigen::VectorXd gamma;            // for the conditional-mean baseline
  std::string mode;                 // bivariate | proxy | conditional-mean
  std::string engine;               // fatigue | broaching
  FatigueConfig fatigue;
  BroachingConfig broaching;
};

// Hs/T1 at the model locations for one realization seed.
void realize_fields(const RiskSetup& rs, std::uint64_t seed,
                    Eigen::VectorXd* hs, Eigen::VectorXd* t1) {
  BivarSamples s = sample(rs.model, 1, seed, Exec::serial);
  Eigen::VectorXd zx = rs.model.A_active * s.x.col(0);
  *hs = destandardize(zx, rs.mf.spec_x.mean_field, rs.mf.spec_x.var_field);
  if (rs.mode == "bivariate") {
    Eigen::VectorXd zy = rs.model.A_active * s.y.col(0);
    *t1 = destandardize(zy, rs.mf.spec_y.mean_field, rs.mf.spec_y.var_field);
    return;
  }
  t1->resize(hs->size());
  for (int j = 0; j < hs->size(); ++j) {
    if (rs.mode == "proxy") {
      double tz = baseline_T(BaselineT::proxy, (*hs)[j], 0, 0, 1, 0, 1);
      (*t1)[j] = convert_period(tz, PeriodKind::Tz, PeriodKind::T1);
    } else {
      (*t1)[j] = baseline_T(BaselineT::conditional_mean, (*hs)[j],
                            rs.gamma[j], rs.mf.spec_x.mean_field[j],
                            rs.mf.spec_x.var_field[j],
                            rs.mf.spec_y.mean_field[j],
                            rs.mf.spec_y.var_field[j]);
    }
  }
}

double route_stat_from_fields(const RiskSetup& rs, const Eigen::VectorXd& hs,
                              const Eigen::VectorXd& t1) {
  const size_t n = rs.route.waypoints.size();
  std::vector<double> whs(n), wt1(n), wdir(n);
  std::vector<double> grad_dirs;
  if (rs.fixed_dirs.empty()) {
    std::vector<double> hs_vec(hs.data(), hs.data() + hs.size());
    grad_dirs = directions_from_gradient(rs.mf.locations, rs.mf.grid_nx,
                                         rs.mf.grid_ny, hs_vec,
                                         rs.route.waypoints);
  }
  for (size_t i = 0; i < n; ++i) {
    whs[i] = hs[rs.wp_loc[i]];
    wt1[i] = t1[rs.wp_loc[i]];
    wdir[i] = rs.fixed_dirs.empty() ? grad_dirs[i] : rs.fixed_dirs[i];
  }
  if (rs.engine == "fatigue")
    return accumulate_damage(rs.route, whs, wt1, wdir, rs.fatigue);
  return route_capsize_intensity(rs.route, whs, wt1, wdir, rs.broaching);
}

int cmd_risk(const std::string& model_path, const std::string& route_path,
             const std::string& dirs_path, const std::string& test_path,
             const std::string& engine, const std::string& mode, bool reverse,
             int n_realizations, int n_repeats, int route_points,
             double speed, const std::string& from_str,
             const std::string& to_str, std::uint64_t seed,
             const std::string& out_prefix, std::uint64_t hash) {
  RiskSetup rs;
  rs.engine = engine;
  rs.mode = mode;
  rs.mf = load_model(model_path);
  rs.model = model_from_file(rs.mf, rs.mesh);
  if (mode == "conditional-mean") rs.gamma = pointwise_crosscorr(rs.model).gamma;

  if (!route_path.empty()) {
    rs.route = make_route_from_waypoints(read_lonlat_csv(route_path), speed,
                                         true);
  } else {
    auto parse_pt = [](const std::string& s) {
      auto c = s.find(',');
      if (c == std::string::npos)
        throw ConfigError("expected 'lon,lat' but got '" + s + "'");
      return Eigen::Vector2d(std::stod(s.substr(0, c)),
                             std::stod(s.substr(c + 1)));
    };
    rs.route = make_great_circle_route(parse_pt(from_str), parse_pt(to_str),
                                       route_points, speed);
  }
  if (reverse) rs.route = reverse_route(rs.route);
  for (const auto& wp : rs.route.waypoints)
    rs.wp_loc.push_back(nearest_point(rs.mf.locations, wp));
  if (!dirs_path.empty()) {
    DirectionField df = read_direction_csv(dirs_path);
    for (const auto& wp : rs.route.waypoints)
      rs.fixed_dirs.push_back(df.theta_rad[nearest_point(df.points, wp)]);
  } else if (rs.mf.grid_nx * rs.mf.grid_ny !=
             static_cast<int>(rs.mf.locations.size())) {
    throw DataError(
        "gradient wave directions need a complete lattice; supply --dirs");
  }

  auto stat_for_seed = [&](std::uint64_t s) {
    Eigen::VectorXd hs, t1;
    realize_fields(rs, s, &hs, &t1);
    return route_stat_from_fields(rs, hs, t1);
  };
  CdfEnvelope env =
      monte_carlo_cdf(stat_for_seed, n_realizations, n_repeats, seed);

  std::ofstream fs(out_prefix + "_stats.csv");
  fs.precision(17);
  fs << "# config_hash=" << std::hex << hash << std::dec << " seed=" << seed
     << " engine=" << engine << " mode=" << mode << "\n";
  fs << "repeat,index,value\n";
  for (size_t k = 0; k < env.sorted_stats.size(); ++k)
    for (size_t r = 0; r < env.sorted_stats[k].size(); ++r)
      fs << k << "," << r << "," << env.sorted_stats[k][r] << "\n";

  std::vector<double> data_stats;
  if (!test_path.empty()) {
    GriddedSeries test = read_series_csv(test_path);
    Dataset td = to_dataset(test);
    // Data must live on the model's location set for a like-for-like lookup.
    if (td.locations.size() != rs.mf.locations.size())
      throw DataError("test series locations differ from the model's");
    for (int t = 0; t < td.n_replicates(); ++t) {
      Eigen::VectorXd hs = td.log_hs.row(t).array().exp();
      Eigen::VectorXd t1 = td.log_t.row(t).array().exp();
      data_stats.push_back(route_stat_from_fields(rs, hs, t1));
    }
  }

  std::ofstream fe(out_prefix + "_envelope.csv");
  fe.precision(17);
  fe << "# config_hash=" << std::hex << hash << std::dec << " seed=" << seed
     << " engine=" << engine << " mode=" << mode << "\n";
  fe << "grid,lo,hi" << (data_stats.empty() ? "" : ",data_cdf") << "\n";
  std::vector<double> sorted_data = data_stats;
  std::sort(sorted_data.begin(), sorted_data.end());
  for (int g = 0; g < env.grid.size(); ++g) {
    fe << env.grid[g] << "," << env.lo[g] << "," << env.hi[g];
    if (!sorted_data.empty()) {
      double f = static_cast<double>(
                     std::upper_bound(sorted_data.begin(), sorted_data.end(),
                                      env.grid[g]) -
                     sorted_data.begin()) /
                 sorted_data.size();
      fe << "," << f;
    }
    fe << "\n";
  }
  if (!data_stats.empty())
    std::cout << "risk: data CDF coverage within envelopes = "
              << cdf_coverage(env, data_stats) << "\n";
  std::cout << "risk: wrote " << out_prefix << "_stats.csv and "
            << out_prefix << "_envelope.csv\n";
  return 0;
}

int cmd_crosscorr(const std::string& input, int radius,
                  const std::string& output, std::uint64_t hash) {
  GriddedSeries s = read_series_csv(input);
  Dataset d = to_dataset(s);
  CrossCorrStats st = sample_crosscorr_stats(d, radius);
  std::ofstream f(output);
  f.precision(17);
  f << "# config_hash=" << std::hex << hash << std::dec
    << " radius=" << radius << "\n";
  f << "lon,lat,gamma_hat,gamma_shifted,shift_dx,shift_dy,valid\n";
  for (int j = 0; j < d.n_locations(); ++j)
    f << d.locations[j].x() << "," << d.locations[j].y() << ","
      << st.gamma_hat[j] << "," << st.gamma_shifted[j] << ","
      << st.shifts[j].x() << "," << st.shifts[j].y() << ","
      << static_cast<int>(st.valid[j]) << "\n";
  std::cout << "crosscorr: " << d.n_locations() << " locations -> " << output
            << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Bivariate spatial sea-state model and route risk engines"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 1;
  int threads = 0;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");

  auto* ingest = app.add_subcommand("ingest", "normalize a raw series file");
  std::string in_path, out_path;
  double thin_hours = 24.0;
  ingest->add_option("--input", in_path)->required();
  ingest->add_option("--output", out_path)->required();
  ingest->add_option("--thin-hours", thin_hours);

  auto* split = app.add_subcommand("split", "alternating-day train/test split");
  std::string train_out, test_out;
  split->add_option("--input", in_path)->required();
  split->add_option("--train", train_out)->required();
  split->add_option("--test", test_out)->required();

  auto* fit = app.add_subcommand("fit", "stepwise maximum likelihood fit");
  std::string model_out = "model.txt", mesh_out = "mesh.txt",
              report_out = "fit_report.txt";
  fit->add_option("--train", in_path)->required();
  fit->add_option("--model-out", model_out);
  fit->add_option("--mesh-out", mesh_out);
  fit->add_option("--report-out", report_out);

  auto* simulate = app.add_subcommand("simulate", "draw model realizations");
  std::string model_path;
  int n_realizations = 10;
  simulate->add_option("--model", model_path)->required();
  simulate->add_option("--n", n_realizations);
  simulate->add_option("--output", out_path)->required();

  auto* risk = app.add_subcommand("risk", "route risk CDFs and envelopes");
  std::string route_path, dirs_path, test_path, engine = "fatigue",
              mode = "bivariate", out_prefix = "risk",
              from_str = "-70,41", to_str = "-9,49";
  bool reverse = false;
  int n_repeats = 20, route_points = 100;
  double speed = 10.0;
  risk->add_option("--model", model_path)->required();
  risk->add_option("--route", route_path, "waypoint CSV (lon,lat)");
  risk->add_option("--dirs", dirs_path, "wave direction CSV (lon,lat,deg)");
  risk->add_option("--test", test_path, "held-out series for the data CDF");
  risk->add_option("--engine", engine)
      ->check(CLI::IsMember({"fatigue", "broaching"}));
  risk->add_option("--mode", mode)
      ->check(CLI::IsMember({"bivariate", "proxy", "conditional-mean"}));
  risk->add_flag("--reverse", reverse, "traverse the route backwards");
  risk->add_option("--n-realizations", n_realizations);
  risk->add_option("--n-repeats", n_repeats);
  risk->add_option("--route-points", route_points);
  risk->add_option("--speed", speed, "ship speed [m/s]");
  risk->add_option("--from", from_str, "default route start 'lon,lat'");
  risk->add_option("--to", to_str, "default route end 'lon,lat'");
  risk->add_option("--out-prefix", out_prefix);

  auto* crosscorr = app.add_subcommand("crosscorr", "sample cross-correlations");
  int radius = 5;
  crosscorr->add_option("--input", in_path)->required();
  crosscorr->add_option("--radius", radius);
  crosscorr->add_option("--output", out_path)->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    CliConfig cfg = load_config(config_path);
    if (ingest->parsed())
      return cmd_ingest(in_path, out_path, thin_hours, cfg.hash);
    if (split->parsed()) return cmd_split(in_path, train_out, test_out, cfg.hash);
    if (fit->parsed())
      return cmd_fit(in_path, cfg, model_out, mesh_out, report_out, seed);
    if (simulate->parsed())
      return cmd_simulate(model_path, n_realizations, seed, out_path);
    if (risk->parsed())
      return cmd_risk(model_path, route_path, dirs_path, test_path, engine,
                      mode, reverse, n_realizations, n_repeats, route_points,
                      speed, from_str, to_str, seed, out_prefix, cfg.hash);
    if (crosscorr->parsed())
      return cmd_crosscorr(in_path, radius, out_path, cfg.hash);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 4;
}

}  // namespace seaspde

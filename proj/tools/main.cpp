#include <CLI11.hpp>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsk/errors.hpp"
#include "nsk/harness.hpp"
#include "nsk/kernel_hom.hpp"
#include "nsk/kernel_inhom.hpp"
#include "nsk/path.hpp"
#include "nsk/resnet.hpp"
#include "nsk/stats.hpp"
#include "nsk/vphi.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_doubles(csv)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

nsk::KernelParams make_params(const std::string& sigmas, const std::string& activation) {
  const auto v = parse_doubles(sigmas);
  if (v.size() != 3) throw nsk::input_error("--params expects sigma_a,sigma_A,sigma_b");
  nsk::KernelParams p;
  p.sigma_a = v[0];
  p.sigma_A = v[1];
  p.sigma_b = v[2];
  p.act = nsk::parse_activation(activation);
  p.validate();
  return p;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Every output file opens with the tool version, a hash of the resolved
// configuration, and the seed, so a run can be reproduced byte for byte.
struct RunHeader {
  std::string resolved;
  std::uint64_t seed = 0;

  void write(std::FILE* f) const {
    std::fprintf(f, "# nsk %s seed=%" PRIu64 " config=%016" PRIx64 "\n", kVersion, seed,
                 fnv1a(resolved));
  }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw nsk::input_error("cannot open output file: " + path);
  return FilePtr(f);
}

void write_surface_csv(const std::string& path, const RunHeader& header,
                       const nsk::KernelSurface& surf) {
  FilePtr f = open_out(path);
  header.write(f.get());
  std::fprintf(f.get(), "s,t,value\n");
  for (Eigen::Index i = 0; i < surf.values.rows(); ++i)
    for (Eigen::Index j = 0; j < surf.values.cols(); ++j)
      std::fprintf(f.get(), "%.17g,%.17g,%.17g\n", surf.s_grid.points[i], surf.t_grid.points[j],
                   surf.values(i, j));
}

void write_json(const std::string& path, const RunHeader& header, nlohmann::json body) {
  body["tool"] = std::string("nsk ") + kVersion;
  body["seed"] = header.seed;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(header.resolved));
  body["config"] = buf;
  FilePtr f = open_out(path);
  const std::string text = body.dump(2);
  std::fwrite(text.data(), 1, text.size(), f.get());
  std::fputc('\n', f.get());
}

struct Options {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string resolved;  // canonical resolved-option string for the header

  RunHeader header() const { return RunHeader{resolved, seed}; }
};

// --- subcommand bodies -----------------------------------------------------

int run_vphi(const Options& opt, const std::string& activation, const std::string& sigma,
             int quad_nodes) {
  const auto v = parse_doubles(sigma);
  if (v.size() != 3) throw nsk::input_error("--sigma expects v11,v12,v22");
  const nsk::Psd2 s{v[0], v[1], v[2]};
  const nsk::Activation act = nsk::parse_activation(activation);
  std::printf("closed_form %.17g\n", nsk::v_phi(act, s));
  std::printf("quadrature %.17g\n", nsk::v_phi_quadrature(act, s, quad_nodes));
  (void)opt;
  return 0;
}

int run_kernel_inhom(const Options& opt, const std::string& xfile, const std::string& yfile,
                     const nsk::KernelParams& params, int steps, const std::string& method,
                     const std::string& trajectory_out) {
  const auto x = nsk::ingest_csv_file(xfile);
  const auto y = nsk::ingest_csv_file(yfile.empty() ? xfile : yfile);
  const auto traj = nsk::solve_ode(x, y, params, steps, nsk::parse_ode_method(method));
  std::printf("kappa %.17g\n", traj.final().k_xy);
  if (!trajectory_out.empty()) {
    FilePtr f = open_out(trajectory_out);
    opt.header().write(f.get());
    std::fprintf(f.get(), "t,k_xx,k_xy,k_yy\n");
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g\n", traj.times[i], traj.values[i].k_xx,
                   traj.values[i].k_xy, traj.values[i].k_yy);
  }
  return 0;
}

int run_kernel_hom(const Options& opt, const std::string& xfile, const std::string& yfile,
                   const nsk::KernelParams& params, int grid, const std::string& out, bool sig) {
  const auto x = nsk::ingest_csv_file(xfile);
  const auto y = nsk::ingest_csv_file(yfile.empty() ? xfile : yfile);
  const nsk::Partition D = nsk::Partition::uniform(grid);
  const nsk::KernelSurface surf = sig ? nsk::sig_kernel_surface(x, y, D, D)
                                      : nsk::discrete_surface(x, y, D, D, params);
  std::printf("corner %.17g\n", surf.corner());
  if (!out.empty()) write_surface_csv(out, opt.header(), surf);
  return 0;
}

int run_kernel_oracle(const std::string& xfile, const std::string& yfile, int level, double s,
                      double t) {
  const auto x = nsk::ingest_csv_file(xfile);
  const auto y = nsk::ingest_csv_file(yfile.empty() ? xfile : yfile);
  const auto res = nsk::sig_series_oracle(x, y, s, t, level);
  std::printf("value %.17g\n", res.value);
  std::printf("tail_bound %.17g\n", res.tail_bound);
  if (res.tail_warning) std::printf("warning truncation level too small; tail bound exceeds 1\n");
  return 0;
}

int run_gram(const Options& opt, const std::string& family, const std::string& path_list,
             const nsk::KernelParams& params, int steps, int grid, const std::string& out) {
  std::vector<nsk::PiecewiseLinearPath> paths;
  for (const auto& f : split_list(path_list)) paths.push_back(nsk::ingest_csv_file(f));
  Eigen::MatrixXd g;
  if (family == "inhom")
    g = nsk::gram(paths, params, steps);
  else if (family == "hom")
    g = nsk::gram_hom(paths, params, grid);
  else
    throw nsk::input_error("--family must be inhom or hom");
  FilePtr f = open_out(out);
  opt.header().write(f.get());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      std::fprintf(f.get(), j + 1 == g.cols() ? "%.17g" : "%.17g,", g(i, j));
    std::fputc('\n', f.get());
  }
  return 0;
}

void write_path_csv(const std::string& out, const Options& opt,
                    const nsk::PiecewiseLinearPath& path) {
  FilePtr f = open_out(out);
  opt.header().write(f.get());
  for (int i = 0; i < path.num_knots(); ++i) {
    std::fprintf(f.get(), "%.17g", path.times()[i]);
    for (int j = 0; j < path.dim(); ++j) std::fprintf(f.get(), ",%.17g", path.values()(i, j));
    std::fputc('\n', f.get());
  }
}

int run_paths_synth(const Options& opt, const std::string& kind, int dim, int samples,
                    const std::string& direction, const std::string& out) {
  Eigen::VectorXd dir;
  if (!direction.empty()) {
    const auto v = parse_doubles(direction);
    dir = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  write_path_csv(out, opt, nsk::synth_path(nsk::parse_synth_kind(kind), dim, samples, opt.seed, dir));
  return 0;
}

int run_paths_ingest(const Options& opt, const std::string& in, const std::string& out) {
  write_path_csv(out, opt, nsk::ingest_csv_file(in));
  return 0;
}

int run_simulate(const Options& opt, const std::string& mode, int width, int depth,
                 const std::string& path_list, const nsk::KernelParams& params, int realizations,
                 const std::string& out) {
  std::vector<nsk::PiecewiseLinearPath> paths;
  for (const auto& f : split_list(path_list)) paths.push_back(nsk::ingest_csv_file(f));
  nsk::SimConfig config;
  config.width = width;
  config.partition = nsk::Partition::uniform(depth);
  config.mode = mode == "inhom" ? nsk::WeightMode::Inhomogeneous : nsk::WeightMode::Homogeneous;
  if (mode != "hom" && mode != "inhom") throw nsk::input_error("--mode must be hom or inhom");
  config.params = params;
  config.seed = opt.seed;
  const auto ens = nsk::mc_ensemble(config, paths, realizations, opt.threads);
  FilePtr f = open_out(out);
  opt.header().write(f.get());
  std::fprintf(f.get(), "realization,path_i,path_j,inner_product,readout_i\n");
  const int n = static_cast<int>(paths.size());
  for (int r = 0; r < realizations; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        std::fprintf(f.get(), "%d,%d,%d,%.17g,%.17g\n", r, i, j, ens.inner_products[r](i, j),
                     ens.readouts(r, i));
  return 0;
}

int run_converge_width(const Options& opt, const std::string& widths_csv, int depth,
                       int realizations, const std::string& out, const std::string& summary) {
  const auto res =
      nsk::width_convergence(opt.seed, parse_ints(widths_csv), depth, realizations, opt.threads);
  FilePtr f = open_out(out);
  opt.header().write(f.get());
  std::fprintf(f.get(), "N,mse,stderr\n");
  for (std::size_t i = 0; i < res.widths.size(); ++i)
    std::fprintf(f.get(), "%d,%.17g,%.17g\n", res.widths[i], res.mse[i], res.std_error[i]);
  nlohmann::json body{{"slope", res.fit.slope},
                      {"intercept", res.fit.intercept},
                      {"r_squared", res.fit.r_squared},
                      {"kernel_target", res.kernel_target},
                      {"pass", res.fit.slope > -1.3 && res.fit.slope < -0.7}};
  if (!summary.empty()) write_json(summary, opt.header(), body);
  std::printf("slope %.6f r2 %.6f\n", res.fit.slope, res.fit.r_squared);
  return 0;
}

int run_converge_depth(const Options& opt, const std::string& depths_csv, int reference,
                       int width, int realizations, const std::string& out,
                       const std::string& summary) {
  const auto res = nsk::depth_convergence(opt.seed, parse_ints(depths_csv), reference, width,
                                          realizations, opt.threads);
  FilePtr f = open_out(out);
  opt.header().write(f.get());
  std::fprintf(f.get(), "M,w1\n");
  for (std::size_t i = 0; i < res.depths.size(); ++i)
    std::fprintf(f.get(), "%d,%.17g\n", res.depths[i], res.w1[i]);
  nlohmann::json body{{"slope", res.fit.slope},
                      {"r_squared", res.fit.r_squared},
                      {"pass", res.fit.slope > -0.8 && res.fit.slope < -0.3}};
  if (!summary.empty()) write_json(summary, opt.header(), body);
  std::printf("slope %.6f r2 %.6f\n", res.fit.slope, res.fit.r_squared);
  return 0;
}

int run_gaussianity(const Options& opt, const std::string& widths_csv, int net_depth,
                    int kernel_depth, int realizations, const nsk::KernelParams& params,
                    const std::string& out_prefix) {
  const auto res = nsk::gaussianity_sweep(opt.seed, parse_ints(widths_csv), net_depth,
                                          kernel_depth, realizations, params, opt.threads);
  nlohmann::json widths_json = nlohmann::json::array();
  for (std::size_t k = 0; k < res.widths.size(); ++k) {
    const auto pts = nsk::qq_points(res.readouts[k], res.variance);
    const std::string qq_file = out_prefix + "_qq_N" + std::to_string(res.widths[k]) + ".csv";
    FilePtr f = open_out(qq_file);
    opt.header().write(f.get());
    std::fprintf(f.get(), "theoretical_quantile,empirical_quantile\n");
    for (const auto& [tq, eq] : pts) std::fprintf(f.get(), "%.17g,%.17g\n", tq, eq);
    widths_json.push_back({{"N", res.widths[k]},
                           {"ks_stat", res.ks_stat[k]},
                           {"pass", static_cast<bool>(res.ks_pass[k])}});
    std::printf("N=%d ks=%.6f %s\n", res.widths[k], res.ks_stat[k],
                res.ks_pass[k] ? "pass" : "fail");
  }
  write_json(out_prefix + "_summary.json", opt.header(),
             nlohmann::json{{"variance", res.variance},
                            {"critical_01", res.critical_01},
                            {"widths", widths_json}});
  return 0;
}

int run_reproduce(const Options& opt, const std::string& figure, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  if (figure == "fig-mse") {
    return run_converge_width(opt, "50,100,200,400,800", 200, 250, outdir + "/fig_mse.csv",
                              outdir + "/fig_mse.json");
  }
  if (figure == "fig-qq") {
    nsk::KernelParams params = make_params("0.5,1,1.2", "relu");
    return run_gaussianity(opt, "10,100,500", 100, 1000, 250, params, outdir + "/fig");
  }
  throw CLI::ValidationError("reproduce: unknown figure " + figure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural signature kernels: kernel solvers, controlled ResNet simulator, "
               "convergence diagnostics"};
  app.set_config("--config", "", "flat key=value config file; flags override file values");
  app.require_subcommand(1);
  app.fallthrough();  // accept --seed/--threads after the subcommand name

  Options opt;
  if (const char* env_seed = std::getenv("NSK_SEED")) opt.seed = std::strtoull(env_seed, nullptr, 10);
  app.add_option("--seed", opt.seed, "root seed for all randomness (default: env NSK_SEED or 0)");
  app.add_option("--threads", opt.threads, "worker cap; never changes results")
      ->check(CLI::PositiveNumber);

  std::string activation = "id", sigma, params_csv = "1,1,0";
  std::string xfile, yfile, out, method = "rk4", mode = "hom", kind = "line", direction;
  std::string path_list, family = "inhom", in_file, figure, outdir = ".", summary;
  std::string widths_csv = "50,100,200,400,800", depths_csv = "32,64,128,256,512,1024";
  int quad_nodes = 200, steps = 1000, grid = 512, level = 12, dim = 1, samples = 100;
  int width = 100, depth = 100, realizations = 250, reference = 16384;
  int net_depth = 100, kernel_depth = 1000;
  double s_eval = 1.0, t_eval = 1.0;

  auto* vphi_cmd = app.add_subcommand("vphi", "evaluate V_phi closed form and quadrature");
  vphi_cmd->add_option("--activation", activation)->required();
  vphi_cmd->add_option("--sigma", sigma, "v11,v12,v22")->required();
  vphi_cmd->add_option("--quadrature", quad_nodes, "quadrature nodes");

  auto* kernel_cmd = app.add_subcommand("kernel", "kernel solvers");
  kernel_cmd->require_subcommand(1);
  auto* inhom_cmd = kernel_cmd->add_subcommand("inhom", "inhomogeneous kernel ODE");
  inhom_cmd->add_option("--x", xfile)->required();
  inhom_cmd->add_option("--y", yfile);
  inhom_cmd->add_option("--params", params_csv, "sigma_a,sigma_A,sigma_b");
  inhom_cmd->add_option("--activation", activation);
  inhom_cmd->add_option("--steps", steps);
  inhom_cmd->add_option("--method", method, "euler|rk4");
  inhom_cmd->add_option("--trajectory", out, "trajectory CSV output");
  auto* hom_cmd = kernel_cmd->add_subcommand("hom", "homogeneous kernel surface");
  hom_cmd->add_option("--x", xfile)->required();
  hom_cmd->add_option("--y", yfile);
  hom_cmd->add_option("--params", params_csv);
  hom_cmd->add_option("--activation", activation);
  hom_cmd->add_option("--grid", grid);
  hom_cmd->add_option("--out", out, "surface CSV output");
  auto* sig_cmd = kernel_cmd->add_subcommand("sig", "signature kernel surface");
  sig_cmd->add_option("--x", xfile)->required();
  sig_cmd->add_option("--y", yfile);
  sig_cmd->add_option("--grid", grid);
  sig_cmd->add_option("--out", out);
  auto* oracle_cmd = kernel_cmd->add_subcommand("oracle", "truncated signature series");
  oracle_cmd->add_option("--x", xfile)->required();
  oracle_cmd->add_option("--y", yfile);
  oracle_cmd->add_option("--level", level);
  oracle_cmd->add_option("--s", s_eval);
  oracle_cmd->add_option("--t", t_eval);

  auto* gram_cmd = app.add_subcommand("gram", "Gram matrix over a path set");
  gram_cmd->add_option("--family", family, "inhom|hom");
  gram_cmd->add_option("--paths", path_list, "comma-separated CSV files")->required();
  gram_cmd->add_option("--params", params_csv);
  gram_cmd->add_option("--activation", activation);
  gram_cmd->add_option("--steps", steps);
  gram_cmd->add_option("--grid", grid);
  gram_cmd->add_option("--out", out)->required();

  auto* paths_cmd = app.add_subcommand("paths", "path synthesis and ingestion");
  paths_cmd->require_subcommand(1);
  auto* synth_cmd = paths_cmd->add_subcommand("synth", "synthetic benchmark paths");
  synth_cmd->add_option("--kind", kind, "line|paper_2d|cos_exp|gp_rbf");
  synth_cmd->add_option("--dim", dim);
  synth_cmd->add_option("--samples", samples);
  synth_cmd->add_option("--direction", direction, "line direction, comma-separated");
  synth_cmd->add_option("--out", out)->required();
  auto* ingest_cmd = paths_cmd->add_subcommand("ingest", "normalize a raw CSV path");
  ingest_cmd->add_option("--in", in_file)->required();
  ingest_cmd->add_option("--out", out)->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo controlled ResNet ensembles");
  sim_cmd->add_option("--mode", mode, "hom|inhom");
  sim_cmd->add_option("--width", width)->required();
  sim_cmd->add_option("--depth", depth)->required();
  sim_cmd->add_option("--paths", path_list)->required();
  sim_cmd->add_option("--params", params_csv);
  sim_cmd->add_option("--activation", activation);
  sim_cmd->add_option("--realizations", realizations);
  sim_cmd->add_option("--out", out)->required();

  auto* cw_cmd = app.add_subcommand("converge-width", "MSE vs width sweep");
  cw_cmd->add_option("--widths", widths_csv);
  cw_cmd->add_option("--depth", depth);
  cw_cmd->add_option("--realizations", realizations);
  cw_cmd->add_option("--out", out)->required();
  cw_cmd->add_option("--summary", summary, "JSON summary output");

  auto* cd_cmd = app.add_subcommand("converge-depth", "W1 vs depth sweep");
  cd_cmd->add_option("--depths", depths_csv);
  cd_cmd->add_option("--reference", reference);
  cd_cmd->add_option("--width", width);
  cd_cmd->add_option("--realizations", realizations);
  cd_cmd->add_option("--out", out)->required();
  cd_cmd->add_option("--summary", summary);

  auto* gauss_cmd = app.add_subcommand("gaussianity", "KS/QQ diagnostics vs width");
  gauss_cmd->add_option("--widths", widths_csv);
  gauss_cmd->add_option("--net-depth", net_depth);
  gauss_cmd->add_option("--kernel-depth", kernel_depth);
  gauss_cmd->add_option("--realizations", realizations);
  gauss_cmd->add_option("--params", params_csv);
  gauss_cmd->add_option("--activation", activation);
  gauss_cmd->add_option("--out-prefix", out)->required();

  auto* rep_cmd = app.add_subcommand("reproduce", "rebuild the benchmark experiments");
  rep_cmd->add_option("figure", figure, "fig-mse|fig-qq")->required();
  rep_cmd->add_option("--outdir", outdir);

  CLI11_PARSE(app, argc, argv);

  // Canonical resolved-option string for the reproducibility header.
  // --threads is excluded: it never changes results, so outputs must be
  // byte-identical across thread counts.
  {
    std::stringstream rs;
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--threads") {
        ++i;
        continue;
      }
      if (arg.rfind("--threads=", 0) == 0) continue;
      rs << arg << '\x1f';
    }
    rs << "seed=" << opt.seed;
    opt.resolved = rs.str();
  }

  try {
    if (*vphi_cmd) return run_vphi(opt, activation, sigma, quad_nodes);
    if (*inhom_cmd)
      return run_kernel_inhom(opt, xfile, yfile, make_params(params_csv, activation), steps,
                              method, out);
    if (*hom_cmd)
      return run_kernel_hom(opt, xfile, yfile, make_params(params_csv, activation), grid, out,
                            false);
    if (*sig_cmd)
      return run_kernel_hom(opt, xfile, yfile, nsk::KernelParams{}, grid, out, true);
    if (*oracle_cmd) return run_kernel_oracle(xfile, yfile, level, s_eval, t_eval);
    if (*gram_cmd)
      return run_gram(opt, family, path_list, make_params(params_csv, activation), steps, grid,
                      out);
    if (*synth_cmd) return run_paths_synth(opt, kind, dim, samples, direction, out);
    if (*ingest_cmd) return run_paths_ingest(opt, in_file, out);
    if (*sim_cmd)
      return run_simulate(opt, mode, width, depth, path_list,
                          make_params(params_csv, activation), realizations, out);
    if (*cw_cmd) return run_converge_width(opt, widths_csv, depth, realizations, out, summary);
    if (*cd_cmd)
      return run_converge_depth(opt, depths_csv, reference, width, realizations, out, summary);
    if (*gauss_cmd)
      return run_gaussianity(opt, widths_csv, net_depth, kernel_depth, realizations,
                             make_params(params_csv, activation), out);
    if (*rep_cmd) return run_reproduce(opt, figure, outdir);
  } catch (const nsk::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const nsk::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

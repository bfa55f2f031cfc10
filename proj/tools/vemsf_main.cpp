#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vemsf/experiments.hpp"
#include "vemsf/mesh.hpp"

namespace {

int threads_from_env() {
  const char* env = std::getenv("VEMSF_THREADS");
  if (env == nullptr) return 1;
  return std::max(1, std::atoi(env));
}

// JSON config file with the same keys as the flags; flags given on the
// command line win over file values.
void apply_config_file(const std::string& path, const CLI::App& run,
                       vemsf::ExperimentConfig& cfg, bool& alpha_set) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  nlohmann::json j;
  in >> j;

  auto cli_given = [&run](const std::string& flag) {
    return run.count(flag) > 0;
  };
  if (j.contains("experiment") && !cli_given("--experiment"))
    cfg.experiment = j["experiment"].get<std::string>();
  if (j.contains("method") && !cli_given("--method"))
    cfg.methods = j["method"].get<std::vector<std::string>>();
  if (j.contains("k") && !cli_given("--k"))
    cfg.ks = j["k"].get<std::vector<int>>();
  if (j.contains("mesh") && !cli_given("--mesh"))
    cfg.mesh = j["mesh"].get<std::string>();
  if (j.contains("levels") && !cli_given("--levels"))
    cfg.levels = j["levels"].get<int>();
  if (j.contains("alpha") && !cli_given("--alpha")) {
    cfg.alpha = j["alpha"].get<double>();
    alpha_set = true;
  }
  if (j.contains("out") && !cli_given("--out"))
    cfg.out_dir = j["out"].get<std::string>();
  if (j.contains("threads") && !cli_given("--threads"))
    cfg.threads = j["threads"].get<int>();
  if (j.contains("quad-exactness") && !cli_given("--quad-exactness"))
    cfg.quad_exactness = j["quad-exactness"].get<int>();
  if (j.contains("zero-threshold") && !cli_given("--zero-threshold"))
    cfg.zero_threshold = j["zero-threshold"].get<double>();
  if (j.contains("dof-cap") && !cli_given("--dof-cap"))
    cfg.dof_cap = j["dof-cap"].get<std::int64_t>();
  if (j.contains("seed") && !cli_given("--seed"))
    cfg.seed = j["seed"].get<unsigned>();
}

void print_record(const vemsf::RunRecord& r) {
  std::cout << "[" << r.method << " k=" << r.k << " " << r.mesh << "]"
            << " h=" << r.h << " dofs=" << r.dofs;
  if (r.err_l2) std::cout << " err_l2=" << *r.err_l2;
  if (r.err_grad) std::cout << " err_grad=" << *r.err_grad;
  if (r.order_l2) std::cout << " order_l2=" << *r.order_l2;
  if (r.order_grad) std::cout << " order_grad=" << *r.order_grad;
  if (r.n_zero) std::cout << " n_zero=" << *r.n_zero;
  if (r.cond) std::cout << " cond=" << *r.cond;
  if (r.seconds) std::cout << " seconds=" << *r.seconds;
  std::cout << "\n";
}

int run_command(const CLI::App& run, vemsf::ExperimentConfig cfg,
                const std::string& config_path, bool alpha_given,
                double alpha_value) {
  bool alpha_set = false;
  if (alpha_given) {
    cfg.alpha = alpha_value;
    alpha_set = true;
  }
  if (!config_path.empty()) apply_config_file(config_path, run, cfg, alpha_set);
  if (cfg.experiment.empty())
    throw CLI::ValidationError("--experiment (or a config file providing it) is required");
  if (cfg.out_dir.empty()) cfg.out_dir = "out";

  cfg.on_record = print_record;
  std::cout << "experiment " << cfg.experiment << " (threads=" << cfg.threads
            << ")\n";
  const vemsf::ExperimentReport rep = vemsf::run_experiment(cfg);

  for (const vemsf::OrderFit& f : rep.fits)
    std::cout << "fit [" << f.method << " k=" << f.k << " " << f.mesh
              << "] order_l2=" << f.fit_l2 << " order_grad=" << f.fit_grad << "\n";

  for (const std::string& p : vemsf::write_report(rep, cfg.out_dir))
    std::cout << "wrote " << p << "\n";
  return 0;
}

int mesh_command(const std::string& family, const vemsf::MeshParams& params,
                 const std::string& out_path) {
  const vemsf::PolygonalMesh mesh = vemsf::generate_mesh(family, params);
  vemsf::save_mesh_json(mesh, out_path);
  std::cout << "wrote " << out_path << " (" << mesh.vertices.size() << " vertices, "
            << mesh.cells.size() << " cells, " << mesh.edges.size()
            << " edges, h=" << mesh.max_diameter() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual element experiments on polygonal meshes"};
  app.require_subcommand(1);

  vemsf::ExperimentConfig cfg;
  cfg.threads = threads_from_env();
  std::string config_path;
  double alpha_value = 0.0;

  CLI::App* run = app.add_subcommand("run", "run an experiment, write CSV + JSON reports");
  run->add_option("--config", config_path,
                  "JSON config file (same keys as the flags; flags win)");
  run->add_option("--experiment", cfg.experiment,
                  "convergence | local-spectrum | collapsing-hexagons | "
                  "patch-test | timing");
  run->add_option("--method", cfg.methods,
                  "SFNCVEM, SFCVEM, NCVEM, CVEM (default: all four)")
      ->delimiter(',');
  run->add_option("--k", cfg.ks, "polynomial degrees (default per experiment)")
      ->delimiter(',');
  run->add_option("--mesh", cfg.mesh,
                  "generator family or mesh JSON path (default per experiment)");
  run->add_option("--levels", cfg.levels,
                  "refinement levels / collapse indices (default per experiment)");
  CLI::Option* alpha_opt = run->add_option(
      "--alpha", alpha_value, "reaction coefficient (default per experiment)");
  run->add_option("--out", cfg.out_dir, "output directory (default: out)");
  run->add_option("--threads", cfg.threads,
                  "assembly threads (default: VEMSF_THREADS or 1)");
  run->add_option("--quad-exactness", cfg.quad_exactness,
                  "quadrature exactness degree (default: 2k+4)");
  run->add_option("--zero-threshold", cfg.zero_threshold,
                  "relative eigenvalue zero threshold for spectra "
                  "(default: 1e-8; collapsing-hexagons: 1e-13)");
  run->add_option("--dof-cap", cfg.dof_cap, "refuse runs above this DoF count");
  run->add_option("--seed", cfg.seed, "polygonal mesh generator seed");

  std::string mesh_family;
  std::string mesh_out = "mesh.json";
  vemsf::MeshParams mesh_params;
  CLI::App* mesh = app.add_subcommand("mesh", "generate a mesh, save it as JSON");
  mesh->add_option("--family", mesh_family,
                   "uniform-quads | anisotropic-quads | convex-poly | "
                   "nonconvex-poly | hexagon-Hi | quasi-regular-hexagon | "
                   "square-hanging-nodes")
      ->required();
  mesh->add_option("--n", mesh_params.n, "grid subdivisions");
  mesh->add_option("--hx", mesh_params.hx, "anisotropic spacing in x");
  mesh->add_option("--hy", mesh_params.hy, "anisotropic spacing in y");
  mesh->add_option("--index", mesh_params.index, "hexagon-Hi flattening index");
  mesh->add_option("--seed", mesh_params.seed, "generator seed");
  mesh->add_option("--out", mesh_out, "output path (default: mesh.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_command(*run, cfg, config_path, alpha_opt->count() > 0,
                         alpha_value);
    if (mesh->parsed()) return mesh_command(mesh_family, mesh_params, mesh_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

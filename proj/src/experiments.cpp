#include "vemsf/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vemsf {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

double resolve_alpha(const ExperimentConfig& c, double fallback) {
  return c.alpha ? *c.alpha : fallback;
}

void ensure_feasible(std::int64_t n_dofs, std::int64_t cap) {
  if (n_dofs > cap)
    throw std::runtime_error("refusing run: estimated " + std::to_string(n_dofs) +
                             " DoFs exceeds cap " + std::to_string(cap));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Problem {
  std::function<double(const Vec2&)> u;
  std::function<Vec2(const Vec2&)> grad;
  std::function<double(const Vec2&)> f;
  std::function<double(const Vec2&)> dirichlet;  // empty: homogeneous
};

// -laplace(u) + alpha u = f with u = sin(pi x) sin(pi y), zero on the boundary
Problem manufactured_problem(double alpha) {
  constexpr double pi = std::numbers::pi;
  Problem p;
  p.u = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  p.grad = [](const Vec2& x) {
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  p.f = [alpha](const Vec2& x) {
    return (2.0 * pi * pi + alpha) * std::sin(pi * x.x()) * std::sin(pi * x.y());
  };
  return p;
}

// u = 1 + x + y is harmonic, so f = alpha * u keeps it the exact solution
Problem linear_patch_problem(double alpha) {
  Problem p;
  p.u = [](const Vec2& x) { return 1.0 + x.x() + x.y(); };
  p.grad = [](const Vec2&) { return Vec2(1.0, 1.0); };
  p.f = [alpha](const Vec2& x) { return alpha * (1.0 + x.x() + x.y()); };
  p.dirichlet = p.u;
  return p;
}

AssemblyOptions make_options(const ExperimentConfig& c, BasisKind kind,
                             const Problem& p) {
  AssemblyOptions o;
  o.kind = kind;
  o.threads = c.threads;
  o.quad_exactness = c.quad_exactness;
  o.dirichlet = p.dirichlet;
  return o;
}

void push_record(ExperimentReport& rep, const ExperimentConfig& c, RunRecord rec) {
  rep.records.push_back(std::move(rec));
  if (c.on_record) c.on_record(rep.records.back());
}

// least-squares slope of log(e) against log(h)
double ls_slope(const std::vector<double>& h, const std::vector<double>& e) {
  const int n = static_cast<int>(h.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(h[i]);
    my += std::log(e[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double dx = std::log(h[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e[i]) - my);
  }
  return sxy / sxx;
}

void run_convergence(const ExperimentConfig& c, ExperimentReport& rep) {
  if (c.levels < 2)
    throw std::invalid_argument("convergence needs at least 2 refinement levels");
  const std::string family = c.mesh.empty() ? "convex-poly" : c.mesh;
  if (ends_with(family, ".json"))
    throw std::invalid_argument(
        "convergence needs a generator family (a fixed mesh cannot be refined)");
  const double alpha = resolve_alpha(c, 2.0);
  rep.alpha = alpha;
  const Problem prob = manufactured_problem(alpha);
  const AssemblyOptions opts = make_options(c, BasisKind::ScaledMonomial, prob);

  std::vector<PolygonalMesh> meshes;
  std::vector<std::string> labels;
  for (int l = 0; l < c.levels; ++l) {
    MeshParams mp;
    mp.n = 4 << l;
    mp.hx = mp.hy = 1.0 / mp.n;
    mp.seed = c.seed;
    meshes.push_back(generate_mesh(family, mp));
    labels.push_back(family + "(n=" + std::to_string(mp.n) + ")");
  }

  for (const std::string& m : c.methods) {
    const MethodId id = parse_method(m);
    for (int k : c.ks) {
      std::vector<double> hs, el2, egr;
      for (int l = 0; l < c.levels; ++l) {
        const PolygonalMesh& mesh = meshes[l];
        ensure_feasible(make_dof_map(mesh, id.family, k).n_dofs, c.dof_cap);
        SparseSystem sys =
            assemble_global(mesh, id.family, k, id.kind, alpha, prob.f, opts);
        SolveInfo sol = solve_system(sys);
        ErrorNorms err =
            compute_errors(mesh, id.family, k, sol.x, prob.u, prob.grad, opts);

        RunRecord r;
        r.method = m;
        r.mesh = labels[l];
        r.k = k;
        r.h = mesh.max_diameter();
        r.dofs = sys.map.n_dofs;
        r.index = l;
        r.quad_exactness = effective_exactness(k, opts);
        r.err_l2 = err.l2;
        r.err_grad = err.grad;
        if (l > 0) {
          const double dh = std::log(hs.back() / r.h);
          r.order_l2 = std::log(el2.back() / err.l2) / dh;
          r.order_grad = std::log(egr.back() / err.grad) / dh;
        }
        hs.push_back(r.h);
        el2.push_back(err.l2);
        egr.push_back(err.grad);
        push_record(rep, c, std::move(r));
      }
      rep.fits.push_back({m, family, k, ls_slope(hs, el2), ls_slope(hs, egr)});
    }
  }
}

struct NamedMesh {
  PolygonalMesh mesh;
  std::string label;
};

std::vector<NamedMesh> spectrum_meshes(const ExperimentConfig& c) {
  std::vector<NamedMesh> out;
  if (c.mesh.empty() || c.mesh == "default") {
    MeshParams mp;
    mp.index = 0;
    out.push_back({generate_mesh("hexagon-Hi", mp), "regular-hexagon"});
    out.push_back({generate_mesh("quasi-regular-hexagon", mp), "quasi-regular-hexagon"});
    out.push_back({generate_mesh("square-hanging-nodes", mp), "hanging-node-square"});
  } else if (ends_with(c.mesh, ".json")) {
    out.push_back({load_mesh_json(c.mesh), c.mesh});
  } else {
    MeshParams mp;
    mp.n = std::max(1, c.levels);
    mp.seed = c.seed;
    out.push_back({generate_mesh(c.mesh, mp), c.mesh});
  }
  return out;
}

RunRecord local_spectrum_record(const PolygonalMesh& mesh, int cell,
                                const MethodId& id, int k, BasisKind kind,
                                const ExperimentConfig& c) {
  const ElementContext ctx = make_context(mesh, cell);
  const MacroMode mode = id.family == Family::NC ? MacroMode::NC : MacroMode::C;
  const int qe = c.quad_exactness < 0 ? 2 * k + 4 : c.quad_exactness;
  const ElementOperators ops(ctx, id.family, k, mode, kind, qe);
  const auto zero_f = [](const Vec2&) { return 0.0; };
  const LocalMatrices lm = id.kind == MethodKind::SF
                               ? local_matrices_sf(ops, 0.0, zero_f)
                               : local_matrices_standard(ops, 0.0, zero_f);
  const SpectrumStats st = spectrum_stats(lm.A, c.zero_threshold.value());

  RunRecord r;
  r.k = k;
  r.h = ctx.geo.diameter;
  r.dofs = ops.layout().n_dofs;
  r.quad_exactness = qe;
  r.lam_max = st.lam_max;
  r.lam_min_nz = st.lam_min_nz;
  r.n_zero = st.n_zero;
  r.cond = st.cond;
  return r;
}

// pure stiffness (alpha = 0) spectra of single elements
void run_local_spectrum(const ExperimentConfig& c, ExperimentReport& rep) {
  rep.alpha = 0.0;
  const std::vector<NamedMesh> meshes = spectrum_meshes(c);
  for (const std::string& m : c.methods) {
    const MethodId id = parse_method(m);
    for (int k : c.ks)
      for (const NamedMesh& nm : meshes) {
        RunRecord r =
            local_spectrum_record(nm.mesh, 0, id, k, BasisKind::ScaledMonomial, c);
        r.method = m;
        r.mesh = nm.label;
        push_record(rep, c, std::move(r));
      }
  }
}

// flattening hexagons H_i; interior DoFs in the orthonormal cell basis, the
// only convention whose moments stay scaled sanely as the element collapses
void run_collapsing_hexagons(const ExperimentConfig& c, ExperimentReport& rep) {
  rep.alpha = 0.0;
  rep.basis = "orthonormal";
  for (const std::string& m : c.methods) {
    const MethodId id = parse_method(m);
    for (int k : c.ks)
      for (int i = 0; i < c.levels; ++i) {
        MeshParams mp;
        mp.index = i;
        const PolygonalMesh mesh = generate_mesh("hexagon-Hi", mp);
        RunRecord r = local_spectrum_record(mesh, 0, id, k, BasisKind::Orthonormal, c);
        r.method = m;
        r.mesh = "H" + std::to_string(i);
        r.index = i;
        push_record(rep, c, std::move(r));
      }
  }
}

void run_patch_case(const ExperimentConfig& c, ExperimentReport& rep,
                    const Problem& prob, double alpha, const PolygonalMesh& mesh,
                    const std::string& label, int index) {
  const AssemblyOptions opts = make_options(c, BasisKind::ScaledMonomial, prob);
  for (const std::string& m : c.methods) {
    const MethodId id = parse_method(m);
    for (int k : c.ks) {
      ensure_feasible(make_dof_map(mesh, id.family, k).n_dofs, c.dof_cap);
      SparseSystem sys =
          assemble_global(mesh, id.family, k, id.kind, alpha, prob.f, opts);
      SolveInfo sol = solve_system(sys);
      ErrorNorms err =
          compute_errors(mesh, id.family, k, sol.x, prob.u, prob.grad, opts);

      RunRecord r;
      r.method = m;
      r.mesh = label;
      r.k = k;
      r.h = mesh.max_diameter();
      r.dofs = sys.map.n_dofs;
      r.index = index;
      r.quad_exactness = effective_exactness(k, opts);
      r.err_l2 = err.l2;
      r.err_grad = err.grad;
      push_record(rep, c, std::move(r));
    }
  }
}

// u = 1 + x + y with nonhomogeneous Dirichlet data; three mesh regimes:
// a fixed polygonal mesh, shrinking polygonal meshes, anisotropic grids
void run_patch_test(const ExperimentConfig& c, ExperimentReport& rep) {
  const double alpha = resolve_alpha(c, 0.0);
  rep.alpha = alpha;
  const Problem prob = linear_patch_problem(alpha);

  if (ends_with(c.mesh, ".json")) {
    run_patch_case(c, rep, prob, alpha, load_mesh_json(c.mesh), c.mesh, 0);
    return;
  }

  MeshParams mp;
  mp.seed = c.seed;
  mp.n = 5;
  run_patch_case(c, rep, prob, alpha, generate_mesh("convex-poly", mp),
                 "case1:convex-poly(n=5)", 0);

  const int shrink_levels = c.levels > 0 ? c.levels : 5;
  for (int i = 1; i <= shrink_levels; ++i) {
    mp.n = 1 << i;
    run_patch_case(c, rep, prob, alpha, generate_mesh("convex-poly", mp),
                   "case2:convex-poly(n=" + std::to_string(mp.n) + ")", i);
  }

  const int aniso_levels = c.levels > 0 ? c.levels : 8;
  for (int i = 1; i <= aniso_levels; ++i) {
    MeshParams amp;
    amp.hx = 0.2;
    amp.hy = std::pow(2.0, -i);
    run_patch_case(c, rep, prob, alpha, generate_mesh("anisotropic-quads", amp),
                   "case3:anisotropic-quads(hy=2^-" + std::to_string(i) + ")", i);
  }
}

// assembly wall time only (the solve is method-independent)
void run_timing(const ExperimentConfig& c, ExperimentReport& rep) {
  const double alpha = resolve_alpha(c, 2.0);
  rep.alpha = alpha;
  rep.timing_in_csv = true;
  const std::string family = c.mesh.empty() ? "convex-poly" : c.mesh;
  const Problem prob = manufactured_problem(alpha);
  const AssemblyOptions opts = make_options(c, BasisKind::ScaledMonomial, prob);

  for (int l = 0; l < c.levels; ++l) {
    MeshParams mp;
    mp.n = 5 << l;
    mp.hx = mp.hy = 1.0 / mp.n;
    mp.seed = c.seed;
    const PolygonalMesh mesh = ends_with(family, ".json") ? load_mesh_json(family)
                                                          : generate_mesh(family, mp);
    const std::string label = ends_with(family, ".json")
                                  ? family
                                  : family + "(n=" + std::to_string(mp.n) + ")";
    for (int k : c.ks) {
      const std::size_t group_begin = rep.records.size();
      for (const std::string& m : c.methods) {
        const MethodId id = parse_method(m);
        ensure_feasible(make_dof_map(mesh, id.family, k).n_dofs, c.dof_cap);
        const auto t0 = std::chrono::steady_clock::now();
        SparseSystem sys =
            assemble_global(mesh, id.family, k, id.kind, alpha, prob.f, opts);
        const std::chrono::duration<double> dt =
            std::chrono::steady_clock::now() - t0;

        RunRecord r;
        r.method = m;
        r.mesh = label;
        r.k = k;
        r.h = mesh.max_diameter();
        r.dofs = sys.map.n_dofs;
        r.index = l;
        r.quad_exactness = effective_exactness(k, opts);
        r.seconds = dt.count();
        push_record(rep, c, std::move(r));
      }
      double fastest = std::numeric_limits<double>::infinity();
      for (std::size_t i = group_begin; i < rep.records.size(); ++i)
        fastest = std::min(fastest, *rep.records[i].seconds);
      for (std::size_t i = group_begin; i < rep.records.size(); ++i)
        rep.records[i].ratio = *rep.records[i].seconds / fastest;
    }
  }
}

json record_to_json(const RunRecord& r) {
  json j;
  j["method"] = r.method;
  j["mesh"] = r.mesh;
  j["k"] = r.k;
  j["h"] = r.h;
  j["dofs"] = r.dofs;
  j["index"] = r.index;
  j["quad_exactness"] = r.quad_exactness;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("err_l2", r.err_l2);
  put("err_grad", r.err_grad);
  put("order_l2", r.order_l2);
  put("order_grad", r.order_grad);
  put("lam_max", r.lam_max);
  put("lam_min_nz", r.lam_min_nz);
  put("cond", r.cond);
  put("seconds", r.seconds);
  put("ratio", r.ratio);
  if (r.n_zero) j["n_zero"] = *r.n_zero;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.method = j.at("method").get<std::string>();
  r.mesh = j.at("mesh").get<std::string>();
  r.k = j.at("k").get<int>();
  r.h = j.at("h").get<double>();
  r.dofs = j.at("dofs").get<int>();
  r.index = j.at("index").get<int>();
  r.quad_exactness = j.at("quad_exactness").get<int>();
  auto get = [&j](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<double>();
  };
  r.err_l2 = get("err_l2");
  r.err_grad = get("err_grad");
  r.order_l2 = get("order_l2");
  r.order_grad = get("order_grad");
  r.lam_max = get("lam_max");
  r.lam_min_nz = get("lam_min_nz");
  r.cond = get("cond");
  r.seconds = get("seconds");
  r.ratio = get("ratio");
  if (j.contains("n_zero")) r.n_zero = j.at("n_zero").get<int>();
  return r;
}

}  // namespace

MethodId parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (s == "SFNCVEM") return {Family::NC, MethodKind::SF};
  if (s == "SFCVEM") return {Family::C, MethodKind::SF};
  if (s == "NCVEM") return {Family::NC, MethodKind::Standard};
  if (s == "CVEM") return {Family::C, MethodKind::Standard};
  throw std::invalid_argument("unknown method: " + name +
                              " (expected SFNCVEM, SFCVEM, NCVEM or CVEM)");
}

std::string method_name(const MethodId& id) {
  const bool nc = id.family == Family::NC;
  return id.kind == MethodKind::SF ? (nc ? "SFNCVEM" : "SFCVEM")
                                   : (nc ? "NCVEM" : "CVEM");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (c.methods.empty()) c.methods = {"SFNCVEM", "SFCVEM", "NCVEM", "CVEM"};
  for (const std::string& m : c.methods) parse_method(m);
  for (int k : c.ks)
    if (k < 1) throw std::invalid_argument("k must be >= 1");

  // Per-experiment kernel cutoff: the collapsing sweep needs a tighter one —
  // its kernel/physical eigenvalue gap stays > 1e2 even at extreme collapse,
  // while a 1e-8 cut would swallow physical eigenvalues once cond > 1e8.
  if (!c.zero_threshold)
    c.zero_threshold = c.experiment == "collapsing-hexagons" ? 1e-13 : 1e-8;

  ExperimentReport rep;
  rep.experiment = c.experiment;
  rep.quad_exactness = c.quad_exactness;
  rep.zero_threshold = *c.zero_threshold;
  rep.threads = c.threads;
  rep.basis = "scaled-monomial";

  if (c.experiment == "convergence") {
    if (c.ks.empty()) c.ks = {1, 2, 3};
    if (c.levels <= 0) c.levels = 4;
    run_convergence(c, rep);
  } else if (c.experiment == "local-spectrum") {
    if (c.ks.empty()) c.ks = {3};
    run_local_spectrum(c, rep);
  } else if (c.experiment == "collapsing-hexagons") {
    if (c.ks.empty()) c.ks = {8};
    if (c.levels <= 0) c.levels = 13;
    run_collapsing_hexagons(c, rep);
  } else if (c.experiment == "patch-test") {
    if (c.ks.empty()) c.ks = {3};
    run_patch_test(c, rep);
  } else if (c.experiment == "timing") {
    if (c.ks.empty()) c.ks = {2, 4};
    if (c.levels <= 0) c.levels = 1;
    run_timing(c, rep);
  } else {
    throw std::invalid_argument(
        "unknown experiment: " + c.experiment +
        " (expected convergence, local-spectrum, collapsing-hexagons, "
        "patch-test or timing)");
  }
  return rep;
}

std::string csv_string(const ExperimentReport& report) {
  std::string out =
      "method,k,h,dofs,err_l2,err_grad,order_l2,order_grad,"
      "lam_max,lam_min_nz,n_zero,cond,seconds\n";
  for (const RunRecord& r : report.records) {
    out += r.method + ',' + std::to_string(r.k) + ',' + fmt(r.h) + ',' +
           std::to_string(r.dofs) + ',' + fmt_opt(r.err_l2) + ',' +
           fmt_opt(r.err_grad) + ',' + fmt_opt(r.order_l2) + ',' +
           fmt_opt(r.order_grad) + ',' + fmt_opt(r.lam_max) + ',' +
           fmt_opt(r.lam_min_nz) + ',' +
           (r.n_zero ? std::to_string(*r.n_zero) : std::string()) + ',' +
           fmt_opt(r.cond) + ',' +
           (report.timing_in_csv ? fmt_opt(r.seconds) : std::string()) + '\n';
  }
  return out;
}

void write_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << csv_string(report);
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

std::string json_string(const ExperimentReport& report) {
  json j;
  j["experiment"] = report.experiment;
  j["environment"] = {
      {"quad_exactness", report.quad_exactness},
      {"zero_threshold", report.zero_threshold},
      {"threads", report.threads},
      {"alpha", report.alpha},
      {"basis", report.basis},
      {"version", report.version},
  };
  j["timing_in_csv"] = report.timing_in_csv;
  j["records"] = json::array();
  for (const RunRecord& r : report.records) j["records"].push_back(record_to_json(r));
  j["order_fits"] = json::array();
  for (const OrderFit& f : report.fits)
    j["order_fits"].push_back({{"method", f.method},
                               {"mesh", f.mesh},
                               {"k", f.k},
                               {"fit_l2", f.fit_l2},
                               {"fit_grad", f.fit_grad}});
  return j.dump(2) + "\n";
}

void write_json(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << json_string(report);
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

ExperimentReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentReport rep;
  rep.experiment = j.at("experiment").get<std::string>();
  const json& env = j.at("environment");
  rep.quad_exactness = env.at("quad_exactness").get<int>();
  rep.zero_threshold = env.at("zero_threshold").get<double>();
  rep.threads = env.at("threads").get<int>();
  rep.alpha = env.at("alpha").get<double>();
  rep.basis = env.at("basis").get<std::string>();
  rep.version = env.at("version").get<std::string>();
  rep.timing_in_csv = j.at("timing_in_csv").get<bool>();
  for (const json& rj : j.at("records")) rep.records.push_back(record_from_json(rj));
  for (const json& fj : j.at("order_fits"))
    rep.fits.push_back({fj.at("method").get<std::string>(),
                        fj.at("mesh").get<std::string>(), fj.at("k").get<int>(),
                        fj.at("fit_l2").get<double>(),
                        fj.at("fit_grad").get<double>()});
  return rep;
}

std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir + ": " + ec.message());
  const std::string base = (fs::path(out_dir) / report.experiment).string();
  write_csv(report, base + ".csv");
  write_json(report, base + ".json");
  return {base + ".csv", base + ".json"};
}

}  // namespace vemsf

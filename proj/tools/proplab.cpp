// proplab command line front end: flows, symbol checks, transport curves,
// model positivity, Minkowski kernels, Dirac suite, wavefront probes, and the
// one-shot acceptance suite.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "proplab/config.hpp"
#include "proplab/dirac.hpp"
#include "proplab/model_space.hpp"
#include "proplab/qft.hpp"
#include "proplab/report.hpp"
#include "proplab/suite.hpp"
#include "proplab/transport.hpp"
#include "proplab/version.hpp"
#include "proplab/wf_probe.hpp"

namespace {

using namespace proplab;

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  return f;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
}

// ---------------------------------------------------------------------------

int cmd_flow(const std::string& chart_name, int dim, const std::string& x0_text,
             const std::string& xi_text, double smax, int samples, const std::string& out_path) {
  geom::MetricChart chart = cfg::make_named_chart(chart_name, dim);
  std::vector<double> xi_v = parse_csv_doubles(xi_text);
  const int n = chart.dim();
  if (static_cast<int>(xi_v.size()) != n) {
    std::cerr << "xi needs " << n << " components\n";
    return 2;
  }
  geom::Vec x(n), xi(n);
  x.setZero();
  if (!x0_text.empty()) {
    std::vector<double> x0_v = parse_csv_doubles(x0_text);
    if (static_cast<int>(x0_v.size()) != n) {
      std::cerr << "x0 needs " << n << " components\n";
      return 2;
    }
    for (int i = 0; i < n; ++i) x[i] = x0_v[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < n; ++i) xi[i] = xi_v[static_cast<std::size_t>(i)];

  geom::PhasePoint pt(x, xi);
  geom::Bicharacteristic curve =
      geom::flow_bicharacteristic(chart, pt, geom::uniform_params(smax, samples));

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  (*os) << "s";
  for (int i = 0; i < n; ++i) (*os) << ",x" << i;
  for (int i = 0; i < n; ++i) (*os) << ",xi" << i;
  (*os) << ",p_drift\n";
  double p0 = geom::principal_value(chart, pt);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    (*os) << report::format_double(curve.s[k]);
    for (int i = 0; i < n; ++i) (*os) << "," << report::format_double(curve.x[k][i]);
    for (int i = 0; i < n; ++i) (*os) << "," << report::format_double(curve.xi[k][i]);
    geom::PhasePoint q;
    q.x = curve.x[k];
    q.xi = curve.xi[k];
    (*os) << "," << report::format_double(std::abs(geom::principal_value(chart, q) - p0)) << "\n";
  }
  if (curve.exited_chart)
    std::cerr << "note: trajectory left the chart at s = " << curve.s_exit << "\n";
  return 0;
}

int cmd_symbols_check(const std::string& config_path, std::uint64_t seed) {
  cfg::Config config = cfg::load_config_file(config_path);
  std::vector<suite::IdentityRow> rows =
      suite::run_identity_corpus(seed, config.dim, config.rank, 20);
  bool all = true;
  std::printf("%-12s %-8s %-14s %s\n", "identity", "corpus", "max residual", "verdict");
  for (const auto& r : rows) {
    std::printf("%-12s %-8d %-14.3e %s\n", sym::to_string(r.kind), r.corpus, r.max_residual,
                r.pass ? "pass" : "FAIL");
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

int cmd_transport(const std::string& chart_name, int dim, const std::string& config_path,
                  const std::string& xi_text, double smax, int samples,
                  const std::string& out_path) {
  geom::MetricChart chart = cfg::make_named_chart(chart_name, dim);
  int rank = 1;
  sym::BundleConnection conn;
  if (!config_path.empty()) {
    cfg::Config config = cfg::load_config_file(config_path);
    rank = config.rank;
    if (!config.connection.empty()) {
      conn.dim = config.dim;
      conn.rank = config.rank;
      for (const auto& gm : config.connection)
        conn.gamma.push_back(sym::CExprMat::from_real(gm));
    }
  }
  if (conn.gamma.empty()) {
    conn.dim = chart.dim();
    conn.rank = rank;
    conn.gamma.assign(static_cast<std::size_t>(chart.dim()), sym::CExprMat(rank, rank));
  }

  std::vector<double> xi_v = parse_csv_doubles(xi_text);
  const int n = chart.dim();
  if (static_cast<int>(xi_v.size()) != n) {
    std::cerr << "xi needs " << n << " components\n";
    return 2;
  }
  geom::Vec x = geom::Vec::Zero(n), xi(n);
  for (int i = 0; i < n; ++i) xi[i] = xi_v[static_cast<std::size_t>(i)];
  geom::PhasePoint pt(x, xi);

  int count = samples | 1;
  geom::Bicharacteristic curve =
      geom::flow_bicharacteristic(chart, pt, geom::uniform_params(smax, count));
  transport::CurveSamples cs = transport::CurveSamples::from_bicharacteristic(chart, curve);
  std::vector<transport::Mat> frames =
      transport::transport_frame(conn, cs, transport::Mat::Identity(rank, rank));

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  (*os) << "s";
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) (*os) << ",re_v" << i << j << ",im_v" << i << j;
  (*os) << "\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    (*os) << report::format_double(cs.s[2 * k]);
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < rank; ++j)
        (*os) << "," << report::format_double(frames[k](i, j).real()) << ","
              << report::format_double(frames[k](i, j).imag());
    (*os) << "\n";
  }
  return 0;
}

int cmd_model_positivity(int count, std::uint64_t seed) {
  double min_pos = 1e300, min_fey = 1e300, worst_bil = 0.0;
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::substream(seed, 500 + static_cast<std::uint64_t>(i));
    model::GridSection u = model::random_section(rng, {64, 64}, {0.12, 0.12}, 1, 4, false);
    double pos = model::positivity_form(u);
    double scale = std::max(pos, 1e-30);
    min_pos = std::min(min_pos, pos / scale);
    worst_bil = std::max(worst_bil,
                         std::abs(model::positivity_bilinear(u) - model::Cplx{pos, 0.0}) / scale);
    min_fey = std::min(min_fey, model::model_feynman_positivity(u) / scale);
  }
  bool pass = min_pos >= -1e-14 && worst_bil <= 1e-12 && min_fey >= -1e-10;
  std::printf("sections: %d\nmin positivity_form (normalized): %.3e\n", count, min_pos);
  std::printf("max bilinear deviation: %.3e\nmin feynman split value: %.3e\n", worst_bil, min_fey);
  std::printf("%s\n", pass ? "pass" : "FAIL");
  return pass ? 0 : 1;
}

void write_kernel_csv(const qft::KernelField& k, std::ostream& os) {
  os << "t,x,re,im\n";
  for (int it = 0; it < k.grid.nt; ++it)
    for (int ix = 0; ix < k.grid.nx; ++ix)
      os << report::format_double(k.grid.t_of(it)) << ","
         << report::format_double(k.grid.x_of(ix)) << ","
         << report::format_double(k.at(it, ix).real()) << ","
         << report::format_double(k.at(it, ix).imag()) << "\n";
}

qft::KernelField read_kernel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel csv: " + path);
  std::string header;
  std::getline(in, header);
  std::vector<double> ts, xs;
  std::vector<qft::Cplx> vals;
  double t, x, re, im;
  char comma;
  while (in >> t >> comma >> x >> comma >> re >> comma >> im) {
    ts.push_back(t);
    xs.push_back(x);
    vals.emplace_back(re, im);
  }
  if (vals.empty()) throw std::runtime_error("kernel csv holds no samples");
  // infer the grid: rows are emitted t-major with x fastest
  std::size_t nx = 1;
  while (nx < xs.size() && xs[nx] > xs[nx - 1]) ++nx;
  std::size_t nt = vals.size() / nx;
  qft::KernelField k;
  k.grid.nx = static_cast<int>(nx);
  k.grid.nt = static_cast<int>(nt);
  k.grid.L = -xs[0];
  k.grid.T = -ts[0];
  k.v = vals;
  return k;
}

int cmd_qft(const std::string& sub, double m, double eps, std::uint64_t seed, int count,
            const std::string& out_dir) {
  qft::SpacetimeGrid grid;
  ensure_dir(out_dir.empty() ? "." : out_dir);
  auto path = [&](const std::string& name) {
    return (out_dir.empty() ? std::string(".") : out_dir) + "/" + name;
  };

  if (sub == "green-ret" || sub == "green-adv") {
    qft::KernelKind kind = sub == "green-ret" ? qft::KernelKind::Ret : qft::KernelKind::Adv;
    qft::KernelField k = qft::kg_green(kind, m, grid);
    auto f = open_out(path(sub + ".csv"));
    write_kernel_csv(k, f);
    std::cout << "wrote " << path(sub + ".csv") << "\n";
    return 0;
  }
  if (sub == "feynman") {
    qft::KernelField k = qft::kg_feynman_extrapolated(m, eps, grid);
    auto f = open_out(path("feynman.csv"));
    write_kernel_csv(k, f);
    std::cout << "wrote " << path("feynman.csv") << "\n";
    return 0;
  }
  if (sub == "wightman") {
    qft::KernelField k = qft::kg_wightman(m, grid, qft::window_from_source(grid, 16.0));
    auto f = open_out(path("wightman.csv"));
    write_kernel_csv(k, f);
    std::cout << "wrote " << path("wightman.csv") << "\n";
    return 0;
  }
  if (sub == "gram") {
    std::vector<double> window = qft::window_from_source(grid, 16.0);
    qft::KernelField omega = qft::kg_wightman(m, grid, window);
    qft::TestFunctionSet tests = qft::make_test_functions(grid, count, seed);
    qft::GramResult gram = qft::gram_positivity(omega, tests);
    double bisol = qft::bisolution_residual(omega, m);
    bool pass = gram.min_eigenvalue >= -1e-6 * gram.spectral_radius;
    std::ostringstream js;
    js << "{\n  \"bisolution_residual\": " << report::format_double(bisol)
       << ",\n  \"min_eig\": " << report::format_double(gram.min_eigenvalue)
       << ",\n  \"pass\": " << (pass ? "true" : "false")
       << ",\n  \"spectral_radius\": " << report::format_double(gram.spectral_radius)
       << "\n}\n";
    std::cout << js.str();
    auto f = open_out(path("gram.json"));
    f << js.str();
    return pass ? 0 : 1;
  }
  std::cerr << "unknown qft subcommand: " << sub << "\n";
  return 2;
}

int cmd_dirac_clifford(int n) {
  dirac::CliffordRep rep = dirac::build_clifford(n);
  double defect = dirac::clifford_defect(rep);
  std::printf("{\n  \"defect\": %s,\n  \"n\": %d,\n  \"pass\": %s,\n  \"rank\": %d\n}\n",
              report::format_double(defect).c_str(), n, defect == 0.0 ? "true" : "false", rep.N);
  return defect == 0.0 ? 0 : 1;
}

int cmd_dirac_beta(const std::string& n_text) {
  std::vector<double> comps = parse_csv_doubles(n_text);
  int n = static_cast<int>(comps.size());
  dirac::CliffordRep rep = dirac::build_clifford(n);
  Eigen::VectorXd N(n);
  for (int i = 0; i < n; ++i) N[i] = comps[static_cast<std::size_t>(i)];
  dirac::BetaForm b = dirac::beta_form(rep, N);
  std::ostringstream eig;
  eig << "[";
  for (int i = 0; i < b.eigenvalues.size(); ++i)
    eig << (i ? ", " : "") << report::format_double(b.eigenvalues[i]);
  eig << "]";
  std::printf("{\n  \"eigenvalues\": %s,\n  \"indefinite\": %s,\n  \"positive_definite\": %s\n}\n",
              eig.str().c_str(), b.indefinite ? "true" : "false",
              b.positive_definite ? "true" : "false");
  return 0;
}

int cmd_dirac_suite(std::uint64_t seed) {
  qft::SpacetimeGrid grid;
  grid.T = 18.0;
  grid.L = 10.0;
  grid.nt = 1024;
  grid.nx = 512;
  dirac::CliffordRep rep = dirac::build_clifford(2);
  dirac::SpinorTestSet tests = dirac::make_spinor_tests(grid, 2, 20, seed);
  dirac::DiracSuiteReport r = dirac::dirac_positivity_suite(rep, grid, tests);
  bool pass = r.q_imag_rel <= 1e-8 &&
              r.gram_omega_min >= -1e-6 * std::max(r.gram_omega_radius, 1e-300) &&
              r.dsplit_residual <= 1e-3;
  std::ostringstream js;
  js << "{\n";
  js << "  \"dsplit_residual\": " << report::format_double(r.dsplit_residual) << ",\n";
  js << "  \"euclid_control_imag\": " << report::format_double(r.euclid_imag_rel) << ",\n";
  js << "  \"gram_S_min\": " << report::format_double(r.gram_S_min) << ",\n";
  js << "  \"gram_omega_min\": " << report::format_double(r.gram_omega_min) << ",\n";
  js << "  \"gram_omega_radius\": " << report::format_double(r.gram_omega_radius) << ",\n";
  js << "  \"pass\": " << (pass ? "true" : "false") << ",\n";
  js << "  \"q_imag_rel\": " << report::format_double(r.q_imag_rel) << ",\n";
  js << "  \"sigma_S\": [" << report::format_double(r.sigma_S.real()) << ", "
     << report::format_double(r.sigma_S.imag()) << "],\n";
  js << "  \"sigma_omega\": [" << report::format_double(r.sigma_omega.real()) << ", "
     << report::format_double(r.sigma_omega.imag()) << "],\n";
  js << "  \"split_completeness\": " << report::format_double(r.split_completeness) << "\n";
  js << "}\n";
  std::cout << js.str();
  return pass ? 0 : 1;
}

int cmd_probe(const std::string& input, const std::string& point_text, double sigma,
              const std::string& out_path) {
  qft::KernelField field = read_kernel_csv(input);
  std::vector<double> pt = parse_csv_doubles(point_text);
  if (pt.size() != 2) {
    std::cerr << "--point needs t,x\n";
    return 2;
  }
  wf::ProbeOptions opt;
  opt.sigma_cells = sigma;
  wf::DecayProfile prof = wf::decay_exponents(field, pt[0], pt[1], opt);
  wf::SingularSet sing = wf::singular_directions(prof);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    os = &file;
  }
  (*os) << "theta,alpha,r2,flagged\n";
  for (std::size_t j = 0; j < prof.theta.size(); ++j) {
    bool flagged =
        std::find(sing.directions.begin(), sing.directions.end(), static_cast<int>(j)) !=
        sing.directions.end();
    (*os) << report::format_double(prof.theta[j]) << "," << report::format_double(prof.alpha[j])
          << "," << report::format_double(prof.r2[j]) << "," << (flagged ? 1 : 0) << "\n";
  }
  return 0;
}

int cmd_suite(std::uint64_t seed, const std::string& out_dir, bool quick) {
  ensure_dir(out_dir);
  suite::SuiteOptions opt;
  opt.seed = seed;
  opt.quick = quick;
  opt.config_hash = cfg::fnv1a("builtin-acceptance");
  std::vector<report::Timing> timings;
  report::RunReport rep = suite::run_acceptance(opt, &std::cout, &timings);
  report::emit_report(rep, out_dir + "/report.json");
  report::emit_timings(timings, out_dir + "/timings.json");
  std::cout << (rep.overall_pass() ? "overall: PASS" : "overall: FAIL") << "\n";
  return rep.overall_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(proplab::kToolVersion) +
               " - microlocal propagator laboratory (desk scale)"};
  app.require_subcommand(1);

  // flow
  auto* flow = app.add_subcommand("flow", "integrate a bicharacteristic, emit CSV");
  std::string chart = "minkowski", x0_text, xi_text = "1,1";
  int dim = 2, samples = 201;
  double smax = 10.0;
  std::string out_path;
  flow->add_option("--chart", chart, "minkowski or frw:a=<expr>");
  flow->add_option("--dim", dim, "chart dimension for minkowski (2..4)");
  flow->add_option("--x0", x0_text, "base point, comma separated");
  flow->add_option("--xi", xi_text, "covector, comma separated")->required();
  flow->add_option("--smax", smax, "flow parameter range [0, smax]");
  flow->add_option("--samples", samples, "number of samples");
  flow->add_option("--out", out_path, "output CSV (stdout if omitted)");

  // symbols check
  auto* symbols = app.add_subcommand("symbols", "symbol calculus checks");
  auto* sym_check = symbols->add_subcommand("check", "verify the symbol identities");
  std::string config_path;
  std::uint64_t seed = 42;
  sym_check->add_option("--config", config_path, "JSON config")->required();
  sym_check->add_option("--seed", seed, "corpus seed");

  // transport
  auto* tr = app.add_subcommand("transport", "parallel transport along a flow, emit CSV");
  std::string tr_chart = "minkowski", tr_config, tr_xi = "1,1", tr_out;
  double tr_smax = 2.0;
  int tr_samples = 513, tr_dim = 2;
  tr->add_option("--chart", tr_chart, "minkowski or frw:a=<expr>");
  tr->add_option("--dim", tr_dim, "chart dimension for minkowski");
  tr->add_option("--config", tr_config, "JSON config supplying the connection");
  tr->add_option("--xi", tr_xi, "seed covector")->required();
  tr->add_option("--smax", tr_smax, "flow range");
  tr->add_option("--samples", tr_samples, "sample count (made odd)");
  tr->add_option("--out", tr_out, "output CSV");

  // model
  auto* modelcmd = app.add_subcommand("model", "model-operator kernels");
  auto* model_pos = modelcmd->add_subcommand("positivity", "positivity sweep");
  int model_n = 10000;
  std::uint64_t model_seed = 42;
  model_pos->add_option("--n", model_n, "number of random sections");
  model_pos->add_option("--seed", model_seed, "RNG seed");

  // qft
  auto* qftcmd = app.add_subcommand("qft", "Minkowski Klein-Gordon kernels");
  std::string qft_kind = "ret", qft_out;
  double qft_m = 1.0, qft_eps = 0.05;
  std::uint64_t qft_seed = 42;
  int qft_count = 20;
  auto* qft_green = qftcmd->add_subcommand("green", "retarded/advanced kernel CSV");
  qft_green->add_option("--kind", qft_kind, "ret or adv");
  qft_green->add_option("--m", qft_m, "mass");
  qft_green->add_option("--out", qft_out, "output directory");
  auto* qft_fey = qftcmd->add_subcommand("feynman", "Feynman kernel CSV");
  qft_fey->add_option("--m", qft_m, "mass");
  qft_fey->add_option("--eps", qft_eps, "i-epsilon parameter");
  qft_fey->add_option("--out", qft_out, "output directory");
  auto* qft_wig = qftcmd->add_subcommand("wightman", "Wightman kernel CSV");
  qft_wig->add_option("--m", qft_m, "mass");
  qft_wig->add_option("--out", qft_out, "output directory");
  auto* qft_gram = qftcmd->add_subcommand("gram", "Gram positivity verdict JSON");
  qft_gram->add_option("--m", qft_m, "mass");
  qft_gram->add_option("--seed", qft_seed, "test-function seed");
  qft_gram->add_option("--count", qft_count, "test-function count");
  qft_gram->add_option("--out", qft_out, "output directory");

  // dirac
  auto* diraccmd = app.add_subcommand("dirac", "Dirac-type operator checks");
  int dirac_n = 2;
  std::string dirac_N = "1,0";
  std::uint64_t dirac_seed = 42;
  auto* dirac_cliff = diraccmd->add_subcommand("clifford", "Clifford relation check");
  dirac_cliff->add_option("--n", dirac_n, "spacetime dimension (2 or 4)");
  auto* dirac_beta = diraccmd->add_subcommand("beta", "beta-form verdict for a vector");
  dirac_beta->add_option("--N", dirac_N, "tangent vector components")->required();
  auto* dirac_suite = diraccmd->add_subcommand("suite", "positivity suite JSON");
  dirac_suite->add_option("--seed", dirac_seed, "test seed");

  // probe
  auto* probe = app.add_subcommand("probe", "wavefront probes");
  auto* probe_wf = probe->add_subcommand("wf", "windowed-Fourier decay exponents");
  std::string probe_in, probe_point = "0,0", probe_out;
  double probe_sigma = 8.0;
  probe_wf->add_option("--input", probe_in, "kernel CSV")->required();
  probe_wf->add_option("--point", probe_point, "probe point t,x")->required();
  probe_wf->add_option("--sigma", probe_sigma, "window width in cells");
  probe_wf->add_option("--out", probe_out, "output CSV");

  // suite
  auto* suitecmd = app.add_subcommand("suite", "acceptance suite");
  auto* suite_acc = suitecmd->add_subcommand("acceptance", "run every acceptance criterion");
  std::uint64_t suite_seed = 42;
  std::string suite_out = "report";
  bool suite_quick = false;
  suite_acc->add_option("--seed", suite_seed, "run seed");
  suite_acc->add_option("--out", suite_out, "report directory");
  suite_acc->add_flag("--quick", suite_quick, "reduced corpora (wiring check, not the gate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2
  }

  try {
    if (flow->parsed()) return cmd_flow(chart, dim, x0_text, xi_text, smax, samples, out_path);
    if (sym_check->parsed()) return cmd_symbols_check(config_path, seed);
    if (tr->parsed())
      return cmd_transport(tr_chart, tr_dim, tr_config, tr_xi, tr_smax, tr_samples, tr_out);
    if (model_pos->parsed()) return cmd_model_positivity(model_n, model_seed);
    if (qft_green->parsed())
      return cmd_qft(qft_kind == "adv" ? "green-adv" : "green-ret", qft_m, qft_eps, qft_seed,
                     qft_count, qft_out);
    if (qft_fey->parsed()) return cmd_qft("feynman", qft_m, qft_eps, qft_seed, qft_count, qft_out);
    if (qft_wig->parsed())
      return cmd_qft("wightman", qft_m, qft_eps, qft_seed, qft_count, qft_out);
    if (qft_gram->parsed()) return cmd_qft("gram", qft_m, qft_eps, qft_seed, qft_count, qft_out);
    if (dirac_cliff->parsed()) return cmd_dirac_clifford(dirac_n);
    if (dirac_beta->parsed()) return cmd_dirac_beta(dirac_N);
    if (dirac_suite->parsed()) return cmd_dirac_suite(dirac_seed);
    if (probe_wf->parsed()) return cmd_probe(probe_in, probe_point, probe_sigma, probe_out);
    if (suite_acc->parsed()) return cmd_suite(suite_seed, suite_out, suite_quick);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}

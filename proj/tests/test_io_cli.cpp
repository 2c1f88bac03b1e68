#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "autoconv/cli.hpp"
#include "autoconv/datagen.hpp"
#include "autoconv/io.hpp"
#include "oracles.hpp"

using namespace autoconv;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("autoconv_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("autoconv");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string without_wall_seconds(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("wall_seconds=", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("complex signal files round-trip bitwise") {
  const fs::path dir = temp_dir("sig");
  detail::GaussianSampler gauss(61);
  const ComplexSignal f = oracles::random_signal(y_grid(33), gauss);
  save_complex_signal_csv(dir / "f.csv", f);
  const ComplexSignal g = load_complex_signal_csv(dir / "f.csv");
  REQUIRE(g.grid.count == f.grid.count);
  REQUIRE(g.grid.domain_length == 2.0);
  for (std::size_t i = 0; i < f.values.size(); ++i) REQUIRE(g.values[i] == f.values[i]);
}

TEST_CASE("real signal files round-trip bitwise") {
  const fs::path dir = temp_dir("rsig");
  detail::GaussianSampler gauss(62);
  const RealSignal f = oracles::random_real_signal(x_grid(57), gauss);
  save_real_signal_csv(dir / "a.csv", f);
  const RealSignal g = load_real_signal_csv(dir / "a.csv");
  REQUIRE(g.grid.domain_length == 1.0);
  for (std::size_t i = 0; i < f.values.size(); ++i) REQUIRE(g.values[i] == f.values[i]);
}

TEST_CASE("kernel files round-trip bitwise") {
  const fs::path dir = temp_dir("kern");
  const KernelGrid k = make_kernel(KernelKind::GaussPhase, {}, 21);
  save_kernel(dir, k);
  const KernelGrid l = load_kernel(dir);
  REQUIRE(l.grid_count == k.grid_count);
  for (std::size_t i = 0; i < k.values.size(); ++i) REQUIRE(l.values[i] == k.values[i]);
}

TEST_CASE("asymmetric kernel files are symmetrized on load") {
  const fs::path dir = temp_dir("asym");
  const std::size_t n = 9;
  KernelGrid raw(n);
  const double h = 1.0 / static_cast<double>(n - 1);
  for (std::size_t m = 0; m < raw.rows(); ++m) {
    for (std::size_t kk = 0; kk < raw.cols(); ++kk) {
      if (raw.in_support(m, kk)) raw.at(m, kk) = cx(static_cast<double>(kk) * h, 0.0);
    }
  }
  save_kernel(dir, raw);
  const KernelGrid loaded = load_kernel(dir);
  for (std::size_t m = 0; m < loaded.rows(); ++m) {
    for (std::size_t kk = 0; kk < loaded.cols(); ++kk) {
      if (loaded.in_support(m, kk)) {
        REQUIRE(loaded.at(m, kk) == loaded.at(m, m - kk));
        REQUIRE(std::abs(loaded.at(m, kk).real() - 0.5 * static_cast<double>(m) * h) <= 1e-15);
      } else {
        REQUIRE(loaded.at(m, kk) == cx(0.0, 0.0));
      }
    }
  }
}

TEST_CASE("design files round-trip bitwise") {
  const fs::path dir = temp_dir("design");
  detail::GaussianSampler gauss(63);
  std::vector<double> u(7), v(7), w(7);
  for (std::size_t j = 0; j < 7; ++j) {
    u[j] = gauss.next();
    v[j] = gauss.next();
    w[j] = 1.0 + std::abs(gauss.next());
  }
  const NurbsDesign d(u, v, w, open_uniform_knots(7, 2));
  save_design(dir / "design.csv", d);
  const NurbsDesign l = load_design(dir / "design.csv");
  REQUIRE(l.count() == 7);
  REQUIRE(l.knots.degree == 2);
  for (std::size_t j = 0; j < 7; ++j) {
    REQUIRE(l.u[j] == d.u[j]);
    REQUIRE(l.v[j] == d.v[j]);
    REQUIRE(l.w[j] == d.w[j]);
  }
}

TEST_CASE("empty config yields the documented defaults") {
  const RunConfig cfg = parse_config("");
  REQUIRE(cfg.mode == DataMode::PhaseOnly);
  REQUIRE(cfg.n == 150);
  REQUIRE(cfg.p == 2);
  REQUIRE(cfg.grid_nodes == 1000);
  REQUIRE(cfg.alpha == 1e-6);
  REQUIRE(cfg.beta0 == 100.0);
  REQUIRE(cfg.q == 0.25);
  REQUIRE(cfg.beta_P == 1.0);
  REQUIRE(cfg.beta_w == 1.0);
  REQUIRE(cfg.w0 == 10.0);
  REQUIRE(cfg.eps == 1e-10);
  REQUIRE(cfg.maxit == 10000);
  REQUIRE(cfg.tol_scale == 2000.0);
  REQUIRE(cfg.tol_floor == 1e-9);
}

TEST_CASE("config serialization round-trips") {
  RunConfig cfg;
  cfg.mode = DataMode::FullData;
  cfg.kernel_dir = "some/kernel";
  cfg.amp_file = "amp.csv";
  cfg.data_file = "y.csv";
  cfg.n = 31;
  cfg.alpha = 3.25e-7;
  cfg.q = 0.17;
  cfg.seed = 987654321;
  const RunConfig back = parse_config(serialize_config(cfg));
  REQUIRE(back.mode == cfg.mode);
  REQUIRE(back.kernel_dir == cfg.kernel_dir);
  REQUIRE(back.amp_file == cfg.amp_file);
  REQUIRE(back.data_file == cfg.data_file);
  REQUIRE(back.n == cfg.n);
  REQUIRE(back.alpha == cfg.alpha);
  REQUIRE(back.q == cfg.q);
  REQUIRE(back.seed == cfg.seed);
  REQUIRE(serialize_config(back) == serialize_config(cfg));
}

TEST_CASE("config overrides and rejections") {
  const RunConfig cfg = parse_config("alpha = 5e-6\n# comment\nmode = full\n");
  REQUIRE(cfg.alpha == 5e-6);
  REQUIRE(cfg.mode == DataMode::FullData);
  REQUIRE(cfg.beta0 == 100.0);  // untouched default

  REQUIRE_THROWS_WITH(parse_config("q = 1.5\n"), Catch::Matchers::ContainsSubstring("line 1") &&
                                                     Catch::Matchers::ContainsSubstring("'q'"));
  REQUIRE_THROWS_WITH(parse_config("\nwobble = 3\n"),
                      Catch::Matchers::ContainsSubstring("line 2") &&
                          Catch::Matchers::ContainsSubstring("unknown key 'wobble'"));
  REQUIRE_THROWS_AS(parse_config("alpha\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("alpha = -1\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("alpha = abc\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("n = 3\np = 4\n"), ConfigError);
}

TEST_CASE("cli usage errors") {
  REQUIRE(cli({}) == 1);
  REQUIRE(cli({"no-such-command"}) == 1);
  REQUIRE(cli({"--help"}) == 0);
  REQUIRE(cli({"solve"}) == 1);  // missing required --config
}

TEST_CASE("cli end-to-end on a tiny problem") {
  const fs::path dir = temp_dir("e2e");
  const std::string kdir = (dir / "kernel").string();
  const std::string ddir = (dir / "data").string();
  const std::string odir = (dir / "out").string();

  REQUIRE(cli({"gen-kernel", "--kind", "gaussphase", "--N", "48", "--out", kdir}) == 0);
  REQUIRE(fs::exists(fs::path(kdir) / "kernel_re.csv"));
  REQUIRE(fs::exists(fs::path(kdir) / "kernel_im.csv"));
  REQUIRE(fs::exists(fs::path(kdir) / "kernel.meta"));
  REQUIRE(fs::exists(fs::path(kdir) / "provenance.meta"));

  REQUIRE(cli({"gen-data", "--kernel", kdir, "--target", "gausschirp", "--noise", "0.01",
               "--seed", "11", "--out", ddir}) == 0);
  for (const char* name :
       {"target_x.csv", "truth_y.csv", "data_y.csv", "amp_x.csv", "phase_y.csv",
        "provenance.meta"}) {
    REQUIRE(fs::exists(fs::path(ddir) / name));
  }

  const fs::path cfg_path = dir / "run.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "mode = phase\n"
        << "kernel_dir = " << kdir << "\n"
        << "amp_file = " << ddir << "/amp_x.csv\n"
        << "phase_file = " << ddir << "/phase_y.csv\n"
        << "data_file = " << ddir << "/data_y.csv\n"
        << "n = 8\np = 2\nN = 48\nmaxit = 150\nbeta_min = 1e-3\n"
        << "out_dir = " << odir << "\n";
  }

  REQUIRE(cli({"solve", "--config", cfg_path.string()}) == 0);
  for (const char* name : {"recon_x.csv", "recon_y.csv", "design.csv", "design.meta",
                           "metrics.csv", "report.meta", "config.echo"}) {
    REQUIRE(fs::exists(fs::path(odir) / name));
  }
  REQUIRE_NOTHROW(parse_config(slurp(fs::path(odir) / "config.echo")));

  SECTION("reconstruction columns are internally consistent") {
    // The amp column equals the modulus of (re, im) to full precision.
    std::ifstream in(fs::path(odir) / "recon_x.csv");
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "t,re,im,amp,phase");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      const auto cols = detail::split(line, ',');
      REQUIRE(cols.size() == 5);
      const double re = detail::parse_double(cols[1], "re");
      const double im = detail::parse_double(cols[2], "im");
      const double amp = detail::parse_double(cols[3], "amp");
      REQUIRE(std::abs(amp - std::abs(cx(re, im))) <= 1e-15 * (1.0 + amp));
      ++rows;
    }
    REQUIRE(rows == 48);
  }

  SECTION("metrics last row agrees with report.meta on the best step") {
    const std::string report = slurp(fs::path(odir) / "report.meta");
    // metrics.csv holds every continuation step; report.meta points at the best.
    const NurbsDesign d = load_design(fs::path(odir) / "design.csv");
    REQUIRE(cli({"metrics", "--config", cfg_path.string(), "--design",
                 (fs::path(odir) / "design.csv").string()}) == 0);
    REQUIRE(report.find("beta_star=") != std::string::npos);
    REQUIRE(report.find("e2=") != std::string::npos);
  }

  SECTION("solves are bitwise reproducible") {
    const std::string odir2 = (dir / "out2").string();
    REQUIRE(cli({"solve", "--config", cfg_path.string(), "--out", odir2}) == 0);
    for (const char* name : {"recon_x.csv", "recon_y.csv", "design.csv", "metrics.csv"}) {
      REQUIRE(slurp(fs::path(odir) / name) == slurp(fs::path(odir2) / name));
    }
    REQUIRE(without_wall_seconds(slurp(fs::path(odir) / "report.meta")) ==
            without_wall_seconds(slurp(fs::path(odir2) / "report.meta")));
  }

  SECTION("recomputed metrics match the exported report") {
    const RunConfig cfg = load_config(cfg_path);
    const FitProblem prob = cli_detail::load_problem(cfg);
    const NurbsDesign d = load_design(fs::path(odir) / "design.csv");
    const ErrorSplit e = combined_error(d, prob);
    const std::string report = slurp(fs::path(odir) / "report.meta");
    REQUIRE(report.find("d=" + detail::fmt17(e.d)) != std::string::npos);
    REQUIRE(report.find("r=" + detail::fmt17(e.r)) != std::string::npos);
    REQUIRE(report.find("e2=" + detail::fmt17(e.e2)) != std::string::npos);
  }
}

TEST_CASE("cli probe command writes the decay table") {
  const fs::path dir = temp_dir("probe");
  const std::string out = (dir / "decay.csv").string();
  REQUIRE(cli({"probe-illposed", "--N", "700", "--orders", "2", "4", "8", "--out", out}) == 0);
  std::ifstream in(out);
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "n,perturbation_norm,image_distance");
  std::vector<double> dists;
  while (std::getline(in, line)) {
    const auto cols = detail::split(line, ',');
    REQUIRE(cols.size() == 3);
    dists.push_back(detail::parse_double(cols[2], "dist"));
  }
  REQUIRE(dists.size() == 3);
  REQUIRE(dists[1] < dists[0]);
  REQUIRE(dists[2] < dists[1]);
}

TEST_CASE("cli check command passes on defaults") {
  REQUIRE(cli({"check", "--all", "--N", "80"}) == 0);
}

TEST_CASE("results are bitwise independent of the thread cap") {
  // The thread cap is read once per process, so exercise it via subprocesses.
  const fs::path dir = temp_dir("threads");
  const auto run = [&](const char* threads, const fs::path& out) {
    const std::string cmd = std::string("AUTOCONV_THREADS=") + threads + " " + AUTOCONV_CLI_PATH +
                            " probe-illposed --N 600 --orders 2 4 --out " + out.string() +
                            " > /dev/null";
    return std::system(cmd.c_str());
  };
  REQUIRE(run("1", dir / "serial.csv") == 0);
  REQUIRE(run("4", dir / "parallel.csv") == 0);
  REQUIRE(slurp(dir / "serial.csv") == slurp(dir / "parallel.csv"));
}

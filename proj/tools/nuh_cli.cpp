#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nuh/runner.hpp"

namespace {

nuh::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream is(path);
  if (!is) throw nuh::Error(nuh::ErrorKind::InvalidInput, "--config: cannot read " + path);
  std::ostringstream text;
  text << is.rdbuf();
  return nuh::parse_config(text.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certificates and numerical evidence for sheared torus endomorphisms"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string configPath, outPath, grid, matrix;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<double> t, r;
  bool fixedClock = false, permissive = false;
  app.add_option("--config", configPath, "INI configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--depth", depth, "preimage tree depth n");
  app.add_option("--grid", grid, "spatial grid and direction count, WxHxD");
  app.add_option("--out", outPath, "write the JSON report here instead of stdout");
  app.add_option("--matrix", matrix, "E as e11,e12,e21,e22 (overrides the config)");
  app.add_option("-t", t, "horizontal shear strength");
  app.add_option("-r", r, "vertical shear strength");
  app.add_flag("--fixed-clock", fixedClock, "stamp reports with a fixed time");
  app.add_flag("--permissive-partition", permissive, "accept partitions meeting the size bounds with equality");

  const std::pair<const char*, const char*> verbs[] = {
      {"certify", "closed-form positivity verdict"},
      {"verify", "invariant suites, grid minimum of J_i and Lyapunov runs"},
      {"scan", "certificate over a grid of shear strengths"},
      {"census", "cone census of preimage trees"},
      {"lyapunov", "forward Lyapunov exponents from seeded starts"},
      {"validate-profile", "check the shear profiles against their conditions"},
      {"normalize", "coordinate change to the normalized lattice form"}};
  for (const auto& [verb, what] : verbs) app.add_subcommand(verb, what);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nuh::kExitInvalid;
  }
  const std::string verb = app.get_subcommands().front()->get_name();

  nuh::RunResult res;
  try {
    auto cfg = load_config(configPath);
    if (!matrix.empty()) {
      auto withMatrix = nuh::parse_config("[map]\nmatrix = " + matrix + "\n");
      cfg.matrix = withMatrix.matrix;
      cfg.matrixSet = true;
    }
    if (seed) cfg.seed = *seed;
    if (depth) {
      if (*depth < 1) throw nuh::Error(nuh::ErrorKind::InvalidInput, "--depth: must be >= 1");
      cfg.depth = *depth;
    }
    if (!grid.empty()) cfg.grid = nuh::parse_grid(grid);
    if (t) cfg.t = *t;
    if (r) cfg.r = *r;
    if (!outPath.empty()) cfg.reportPath = outPath;
    cfg.fixedClock = cfg.fixedClock || fixedClock;
    cfg.permissive = cfg.permissive || permissive;
    res = nuh::run_verb(verb, cfg);
    if (!cfg.reportPath.empty()) {
      std::ofstream os(cfg.reportPath);
      if (!os) throw nuh::Error(nuh::ErrorKind::InvalidInput, "--out: cannot write " + cfg.reportPath);
      os << res.report.dump(2) << '\n';
    } else {
      std::cout << res.report.dump(2) << '\n';
    }
  } catch (const nuh::Error& e) {
    std::cerr << e.what() << '\n';
    return nuh::exit_code_for(e.kind());
  }
  std::cerr << verb << ": " << res.summary << '\n';
  return res.exitCode;
}

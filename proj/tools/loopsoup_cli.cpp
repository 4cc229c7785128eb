// Command-line runner: each subcommand loads (or synthesizes) an experiment
// configuration, runs the named pipeline, and writes the run record plus any
// artifacts atomically into the output directory.
//
// Exit codes: 0 run passed, 1 a gating comparison failed, 2 usage or config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bls/harness/config.hpp"
#include "bls/harness/runner.hpp"
#include "bls/harness/runrecord.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  double budget_scale = 1.0;
  int threads = 1;
  std::vector<std::string> plots;
  std::string verify_mode = "quick";
};

void attach_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "experiment configuration (JSON)");
  sub->add_option("--seed", o.seed, "override the config seed");
  sub->add_option("--out", o.out, "output directory (default: config out_dir, then $BLS_OUT_DIR, then .)");
  sub->add_option("--threads", o.threads, "worker threads (this build pins the pool to 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--budget-scale", o.budget_scale, "multiply all sample budgets")
      ->check(CLI::PositiveNumber);
  sub->add_option("--emit-plot", o.plots, "write plot CSV for a stored series (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bls::harness;

  CLI::App app{"Brownian loop soup: simulation, correlation estimators, exact CFT values,\n"
               "block decompositions, and percolation cross-checks"};
  app.require_subcommand(1);
  Options opt;

  attach_common(app.add_subcommand("simulate", "sample soup realizations and summarize"), opt);
  attach_common(app.add_subcommand("estimate", "build an alpha table at the config points"), opt);
  attach_common(app.add_subcommand("exact", "closed-form constants and the mixed four-point"), opt);
  attach_common(app.add_subcommand("blocks", "expand the four-point into conformal blocks"), opt);
  attach_common(app.add_subcommand("perc", "triangular-lattice three-arm probabilities"), opt);
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("mode", opt.verify_mode, "quick (deterministic) or full (includes MC)")
      ->check(CLI::IsMember({"quick", "full"}));
  attach_common(verify, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    ExperimentConfig cfg;
    if (!opt.config.empty()) {
      cfg = load_config(opt.config, command);
      if (cfg.command != command)
        throw ConfigError("config names command '" + cfg.command + "' but the subcommand is '" +
                          command + "'");
    } else if (command == "exact" || command == "blocks" || command == "verify") {
      cfg.command = command;
    } else {
      throw ConfigError("--config is required for '" + command + "'");
    }
    if (sub->count("--seed")) cfg.seed = opt.seed;
    if (opt.budget_scale != 1.0) cfg.budget_scale *= opt.budget_scale;
    if (command == "verify" && verify->count("mode")) cfg.verify_mode = opt.verify_mode;
    if (opt.threads > 1)
      std::fprintf(stderr, "note: worker pool pinned to 1 thread in this build\n");

    std::string out_dir = opt.out;
    if (out_dir.empty()) out_dir = cfg.out_dir;
    if (out_dir.empty()) {
      const char* env = std::getenv("BLS_OUT_DIR");
      out_dir = env && *env ? env : ".";
    }
    std::filesystem::create_directories(out_dir);

    const RunRecord rec = run_experiment(cfg);
    const std::string record_path = out_dir + "/" + default_record_filename(rec);
    write_atomic(record_path, to_json(rec));
    for (const auto& [name, payload] : rec.artifacts)
      write_atomic(out_dir + "/" + rec.config_hash + "_" + name, payload);
    for (const auto& series : opt.plots)
      write_atomic(out_dir + "/" + rec.config_hash + "_plot_" + series + ".csv",
                   emit_plot_data(rec, series));

    if (command == "verify") {
      const auto it = rec.artifacts.find("verify_report.txt");
      if (it != rec.artifacts.end()) std::fputs(it->second.c_str(), stdout);
    }
    std::printf("record %s (%zu quantities, %zu comparisons) -> %s\n",
                rec.pass ? "PASS" : "FAIL", rec.quantities.size(), rec.comparisons.size(),
                record_path.c_str());
    return rec.pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

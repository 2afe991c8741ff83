#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "vpgen/config.hpp"
#include "vpgen/experiment.hpp"
#include "vpgen/version.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  int threads = 1;
  std::uint64_t seed = 0;
  bool has_seed = false;
  // scale-check convenience flags (a config file is optional there)
  std::string family = "power-of-log";
  double p = 2.0;
  double exponent = 0.5;
  double a = 0.1;
  int variant = 1;
};

void add_common(CLI::App* sub, Args& args) {
  sub->add_option("--config", args.config, "experiment config (JSON)");
  sub->add_option("--out", args.out, "output directory");
  sub->add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.has_seed = true; });
}

std::string resolve_out(const Args& args, const std::string& cfg_out,
                        const std::string& fallback) {
  std::string out = cfg_out.empty() ? fallback : cfg_out;
  if (!args.out.empty()) out = args.out;
  if (const char* env = std::getenv("VPGEN_OUT")) {
    if (env[0] != '\0') out = env;
  }
  return out;
}

void print_result(const vpgen::ExperimentResult& result) {
  if (!result.note.empty()) std::printf("%s\n", result.note.c_str());
  for (const std::string& name : result.artifacts)
    std::printf("wrote %s/%s\n", result.out_dir.c_str(), name.c_str());
  for (const std::string& f : result.failures)
    std::printf("failure: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial Vlasov-Poisson regularization experiments"};
  app.set_version_flag("--version", std::string(vpgen::kVersion));
  app.require_subcommand(1);

  Args args;
  const char* kinds[] = {"run",   "sweep",         "stability",
                         "limit", "poisson-check", "scale-check"};
  for (const char* kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind);
    add_common(sub, args);
    if (std::string(kind) == "scale-check") {
      sub->add_option("--family", args.family,
                      "power-of-log | iterated-log | power-law");
      sub->add_option("--p", args.p, "class parameter p");
      sub->add_option("--exponent", args.exponent, "iterated-log exponent");
      sub->add_option("--a", args.a, "power-law exponent");
      sub->add_option("--variant", args.variant, "membership variant (1 or 2)")
          ->check(CLI::Range(1, 2));
    }
  }
  add_common(app.add_subcommand("report", "rebuild summary.csv in --out"),
             args);

  CLI11_PARSE(app, argc, argv);

  try {
    std::string kind = app.get_subcommands().front()->get_name();

    if (kind == "report") {
      std::string dir = resolve_out(args, "", "");
      if (dir.empty())
        throw std::invalid_argument("report: needs --out (or VPGEN_OUT)");
      print_result(vpgen::run_report(dir));
      return 0;
    }

    vpgen::ExperimentConfig cfg;
    if (!args.config.empty()) {
      cfg = vpgen::load_config(args.config);
      if (cfg.experiment != kind)
        throw std::invalid_argument("config: experiment kind \"" +
                                    cfg.experiment +
                                    "\" does not match subcommand \"" + kind +
                                    "\"");
    } else if (kind == "scale-check") {
      cfg.experiment = "scale-check";
      cfg.scale_family = args.family;
      cfg.scale_p = args.p;
      cfg.scale_exponent = args.exponent;
      cfg.scale_a = args.a;
      cfg.scale_variant = args.variant;
      if (cfg.scale_family != "power-of-log" &&
          cfg.scale_family != "iterated-log" &&
          cfg.scale_family != "power-law")
        throw std::invalid_argument(
            "config: \"--family\" must be power-of-log, iterated-log or "
            "power-law");
      if (cfg.scale_variant != 1 && cfg.scale_variant != 2)
        throw std::invalid_argument("config: \"--variant\" must be 1 or 2");
    } else {
      throw std::invalid_argument("config: missing required --config");
    }
    if (args.has_seed) cfg.seed = args.seed;

    std::string out = resolve_out(args, cfg.out, "vpgen_out_" + kind);
    print_result(vpgen::run_experiment(cfg, out, args.threads));
    return 0;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}

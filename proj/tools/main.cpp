#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tipcast/error.hpp"
#include "tipcast/io.hpp"

namespace {

using Command = int (*)(const tipcast::io::RunConfig&, const tipcast::io::CommandContext&);

struct Options {
  std::string config;
  std::vector<std::string> sets;
  int jobs = 1;
  bool fast = false;
};

int run(Command cmd, const Options& opts) {
  std::string text;
  {
    std::ifstream in(opts.config);
    if (!in) {
      std::cerr << "error: cannot read config file " << opts.config << '\n';
      return 1;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  tipcast::io::RunConfig cfg;
  try {
    cfg = tipcast::io::parse_config(tipcast::io::apply_overrides(text, opts.sets));
  } catch (const tipcast::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  tipcast::io::CommandContext ctx;
  ctx.jobs = opts.jobs;
  ctx.fast = opts.fast;
  ctx.out = &std::cout;
  ctx.log = &std::cerr;
  return cmd(cfg, ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classification of rate-induced transitions in scalar nonautonomous ODEs"};
  app.require_subcommand(1);
  Options opts;

  const std::pair<const char*, const char*> descriptions[] = {
      {"classify", "classify one transition equation"},
      {"bisect", "locate a critical parameter value or a tipping pair"},
      {"sweep", "classify along a parameter grid"},
      {"trace", "write the special solutions and limit solutions as tables"},
      {"limits", "hyperbolic solutions of the past and future limit equations"},
      {"repro", "regenerate the reference bifurcation tables"}};
  const Command commands[] = {tipcast::io::cmd_classify, tipcast::io::cmd_bisect,
                              tipcast::io::cmd_sweep,    tipcast::io::cmd_trace,
                              tipcast::io::cmd_limits,   tipcast::io::cmd_repro};

  Command chosen = nullptr;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(descriptions[i].first, descriptions[i].second);
    sub->add_option("--config", opts.config, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--set", opts.sets, "override a config entry, e.g. params.d=20")
        ->take_all()
        ->allow_extra_args();
    sub->add_option("--jobs", opts.jobs, "worker threads for sweep, pair scans and repro")
        ->check(CLI::Range(1, 1024));
    sub->add_flag("--fast", opts.fast, "horizon 2e3 and bisection tolerance 1e-4");
    sub->callback([&chosen, cmd = commands[i]] { chosen = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(chosen, opts);
}

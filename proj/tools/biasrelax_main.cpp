#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "biasrelax/config.hpp"
#include "biasrelax/errors.hpp"
#include "biasrelax/report.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw biasrelax::ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw biasrelax::ConfigError("cannot write to '" + path + "'");
  }
  out << content;
}

struct Overrides {
  std::int64_t seed = -1;
  std::int64_t draws = -1;
  int threads = -1;
  std::string draws_csv;
};

void apply_overrides(biasrelax::RunConfig& config, const Overrides& o) {
  if (o.seed >= 0) config.sampling.seed = static_cast<std::uint64_t>(o.seed);
  if (o.draws >= 0) {
    if (o.draws == 0) throw biasrelax::ConfigError("--draws must be >= 1");
    config.sampling.draws = o.draws;
  }
  if (o.threads >= 0) {
    if (o.threads == 0) throw biasrelax::ConfigError("--threads must be >= 1");
    config.sampling.threads = o.threads;
  }
  if (!o.draws_csv.empty()) config.output.draws_csv_path = o.draws_csv;
}

void emit(const biasrelax::AnalysisReport& report, const biasrelax::RunConfig& config) {
  const std::string json_text = biasrelax::dump_json(biasrelax::report_to_json(report));
  if (!config.output.report_path.empty()) {
    write_file(config.output.report_path, json_text);
    std::cout << biasrelax::render_text(report);
  } else {
    std::cout << json_text;
  }
  if (!config.output.draws_csv_path.empty() && report.draw_set) {
    write_file(config.output.draws_csv_path, biasrelax::draws_to_csv(*report.draw_set));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plausible-bias analysis of 2x2 count tables: penalized likelihood, "
               "posterior sampling, and ignorance summaries"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON configuration file")->required();
    cmd->add_option("--seed", overrides.seed, "override sampling.seed");
    cmd->add_option("--draws", overrides.draws, "override sampling.draws");
    cmd->add_option("--threads", overrides.threads, "override sampling.threads");
    cmd->add_option("--draws-csv", overrides.draws_csv, "write draws CSV to this path");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run the configured analysis");
  add_common(cmd_run);
  CLI::App* cmd_prior = app.add_subcommand("prior-check", "gauge the configured priors");
  add_common(cmd_prior);
  CLI::App* cmd_schema = app.add_subcommand("schema", "print the config schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_schema->parsed()) {
      std::cout << biasrelax::kConfigSchemaJson;
      return 0;
    }
    biasrelax::RunConfig config = biasrelax::parse_config(read_file(config_path));
    apply_overrides(config, overrides);
    if (cmd_prior->parsed()) {
      const biasrelax::AnalysisReport report = biasrelax::prior_check(config);
      emit(report, config);
      return 0;
    }
    const biasrelax::AnalysisReport report = biasrelax::run(config);
    emit(report, config);
    return 0;
  } catch (const biasrelax::Error& e) {
    std::cerr << "error[" << static_cast<int>(e.category()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::overflow_error& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return static_cast<int>(biasrelax::ErrorCategory::Data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

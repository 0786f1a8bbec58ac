#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "biasrelax/config.hpp"
#include "biasrelax/errors.hpp"
#include "biasrelax/report.hpp"
#include "support/schema_check.hpp"

using namespace biasrelax;
using nlohmann::json;

namespace {

std::string sids_config_text(int draws = 20000) {
  std::ostringstream os;
  os << R"({
  "analysis": "misclassification",
  "table": {
    "axes": ["X", "Y"],
    "cells": [
      {"X": 1, "Y": 1, "n": 173}, {"X": 0, "Y": 1, "n": 602},
      {"X": 1, "Y": 0, "n": 134}, {"X": 0, "Y": 0, "n": 663}
    ]
  },
  "priors": {
    "T":   {"dist": "normal", "mean": -2.1972245773362196, "variance": 0.16},
    "TX":  {"dist": "normal", "mean": 2.6026896854443837, "variance": 0.25},
    "TY":  {"dist": "normal", "mean": 0.0, "variance": 0.5},
    "TXY": {"dist": "normal", "mean": 0.0, "variance": 0.125}
  },
  "sampling": {"draws": )"
     << draws << R"(, "seed": 4242},
  "output": {"levels": [0.025, 0.5, 0.975]}
})";
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string source_path(const std::string& rel) {
  return std::string(BIASRELAX_SOURCE_DIR) + "/" + rel;
}

struct CommandResult {
  int exit_code = 0;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string command = std::string(BIASRELAX_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  std::array<char, 4096> buffer;
  while (std::size_t got = fread(buffer.data(), 1, buffer.size(), pipe)) {
    result.output.append(buffer.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string temp_dir() {
  char tmpl[] = "/tmp/biasrelax_test_XXXXXX";
  const char* dir = mkdtemp(tmpl);
  REQUIRE(dir != nullptr);
  return dir;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("the SIDS config is valid") {
    const RunConfig c = parse_config(sids_config_text());
    CHECK(c.analysis == "misclassification");
    REQUIRE(c.table.has_value());
    CHECK(c.table->total() == doctest::Approx(1572.0));
    CHECK(c.priors.size() == 4);
    CHECK(c.sampling.draws == 20000);
    CHECK(c.sampling.seed == 4242);
    CHECK(c.output.levels == std::vector<double>{0.025, 0.5, 0.975});
  }
  SUBCASE("priors on design coefficients are rejected") {
    std::string text = sids_config_text();
    text.replace(text.find("\"TXY\""), 5, "\"Y\"");
    CHECK_THROWS_WITH_AS(parse_config(text),
                         doctest::Contains("case-control design"), ConfigError);
  }
  SUBCASE("an empty prior map with a conventional analysis is valid") {
    const RunConfig c = parse_config(R"({
      "analysis": "conventional",
      "table": {"axes": ["X","Y"], "cells": [
        {"X":1,"Y":1,"n":10},{"X":0,"Y":1,"n":10},
        {"X":1,"Y":0,"n":10},{"X":0,"Y":0,"n":10}]}
    })");
    CHECK(c.priors.empty());
  }
  SUBCASE("zero draws are rejected") {
    CHECK_THROWS_AS(parse_config(sids_config_text(0)), ConfigError);
  }
  SUBCASE("unknown keys are rejected with a path") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"analysis":"prior-check","spurious":1})"),
                         doctest::Contains("$.spurious"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"analysis":"prior-check","sampling":{"chunks":1}})"),
        doctest::Contains("$.sampling.chunks"), ConfigError);
  }
  SUBCASE("malformed JSON is a config error") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
  }
  SUBCASE("missing table for a data analysis") {
    CHECK_THROWS_AS(parse_config(R"({"analysis":"conventional"})"), ConfigError);
  }
  SUBCASE("unsorted levels are rejected") {
    std::string text = sids_config_text();
    const auto pos = text.find("[0.025, 0.5, 0.975]");
    text.replace(pos, 19, "[0.5, 0.025, 0.975]");
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
}

TEST_CASE("config round trip and digest") {
  const RunConfig c = parse_config(sids_config_text());
  const std::string canon = dump_json(config_to_json(c));
  const RunConfig c2 = parse_config(canon);
  CHECK(config_to_json(c) == config_to_json(c2));
  CHECK(config_digest(c) == config_digest(c2));
  CHECK(config_digest(c).size() == 16);

  RunConfig changed = c;
  changed.sampling.seed = 4243;
  CHECK(config_digest(changed) != config_digest(c));
}

TEST_CASE("prior check") {
  SUBCASE("table 3 gauges") {
    RunConfig c = parse_config(sids_config_text());
    c.analysis = "prior-check";
    const AnalysisReport report = prior_check(c);
    REQUIRE(report.priors.size() == 4);
    std::map<std::string, const PriorEcho*> by_name;
    for (const auto& p : report.priors) by_name[p.coefficient] = &p;
    CHECK(*by_name.at("T")->effective_n == doctest::Approx(25.0));
    CHECK(*by_name.at("TX")->effective_n == doctest::Approx(16.0));
    CHECK(*by_name.at("TY")->effective_n == doctest::Approx(8.0));
    CHECK(*by_name.at("TXY")->effective_n == doctest::Approx(32.0));
    CHECK(by_name.at("TY")->lo95 == doctest::Approx(0.25).epsilon(0.005));
    CHECK(by_name.at("TY")->hi95 == doctest::Approx(4.0).epsilon(0.005));
    CHECK(by_name.at("T")->scale == "expit");
    CHECK_FALSE(by_name.at("TY")->warning.has_value());
  }
  SUBCASE("a vague prior carries a warning") {
    RunConfig c;
    c.analysis = "prior-check";
    c.priors["TY"] = PriorSpec::normal(0.0, 100.0);
    const AnalysisReport report = prior_check(c);
    REQUIRE(report.priors.size() == 1);
    CHECK(report.priors[0].warning.has_value());
  }
  SUBCASE("flat-only panels are an error") {
    RunConfig c;
    c.analysis = "prior-check";
    c.priors["TY"] = PriorSpec::flat();
    CHECK_THROWS_AS(prior_check(c), ConfigError);
  }
}

TEST_CASE("run dispatch produces a valid, deterministic report") {
  const RunConfig c = parse_config(sids_config_text());
  const AnalysisReport report = run(c);
  CHECK(report.kind == "misclassification");
  CHECK(report.provenance.config_digest == config_digest(c));
  CHECK(report.provenance.draws == 20000);

  const json j = report_to_json(report);
  std::string error;
  const json schema = json::parse(read_file(source_path("share/report.schema.json")));
  const bool valid = schema_check::validate(schema, j, &error);
  INFO(error);
  CHECK(valid);

  const AnalysisReport again = run(c);
  CHECK(dump_json(report_to_json(again)) == dump_json(report_to_json(report)));
}

TEST_CASE("report JSON schema validation covers every analysis kind") {
  const json schema = json::parse(read_file(source_path("share/report.schema.json")));
  auto check_valid = [&](const std::string& text) {
    const AnalysisReport report = run(parse_config(text));
    std::string error;
    const bool valid = schema_check::validate(schema, report_to_json(report), &error);
    INFO(error);
    CHECK(valid);
  };
  check_valid(read_file(source_path("share/examples/conventional.json")));
  check_valid(read_file(source_path("share/examples/prior_check.json")));
  check_valid(read_file(source_path("share/examples/selection_density.json")));
}

TEST_CASE("17-digit float serialization round-trips exactly") {
  json j;
  j["values"] = {0.1, 1.0 / 3.0, 1.2345678901234567e-300, 173.0, -2.1972245773362196};
  const std::string text = dump_json(j);
  const json back = json::parse(text);
  for (std::size_t i = 0; i < j["values"].size(); ++i) {
    CHECK(back["values"][i].get<double>() == j["values"][i].get<double>());
  }
}

TEST_CASE("CLI end to end") {
  const std::string dir = temp_dir();

  SUBCASE("run writes a byte-stable report and a draws CSV") {
    std::string text = sids_config_text(8000);
    const std::string report_path = dir + "/report.json";
    const std::string csv_path = dir + "/draws.csv";
    text.replace(text.find("\"levels\": [0.025, 0.5, 0.975]"),
                 std::string("\"levels\": [0.025, 0.5, 0.975]").size(),
                 "\"levels\": [0.025, 0.5, 0.975], \"report_path\": \"" + report_path +
                     "\", \"draws_csv_path\": \"" + csv_path + "\"");
    write_file(dir + "/config.json", text);

    const auto first = run_cli("run " + dir + "/config.json");
    INFO(first.output);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("analysis: misclassification") != std::string::npos);

    const std::string report_text = read_file(report_path);
    const json report = json::parse(report_text);
    CHECK(report.at("conventional").at("estimate").get<double>() ==
          doctest::Approx(1.42).epsilon(0.005));
    CHECK(report.at("semi_bayes").at("or").at("estimate").get<double>() ==
          doctest::Approx(1.41).epsilon(0.005));
    CHECK(report.at("penalized").at("or").at("estimate").get<double>() ==
          doctest::Approx(1.19).epsilon(0.01));

    const std::string csv = read_file(csv_path);
    CHECK(csv.rfind("draw_index,target,T,TX,TY,TXY\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8001);

    const auto second = run_cli("run " + dir + "/config.json");
    CHECK(second.exit_code == 0);
    CHECK(read_file(report_path) == report_text);
  }

  SUBCASE("seed override changes the digest and the draws") {
    write_file(dir + "/config.json", sids_config_text(4000));
    const auto a = run_cli("run " + dir + "/config.json --seed 1");
    const auto b = run_cli("run " + dir + "/config.json --seed 2");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(a.output != b.output);
  }

  SUBCASE("schema subcommand prints the shipped schema") {
    const auto r = run_cli("schema");
    CHECK(r.exit_code == 0);
    CHECK(r.output == read_file(source_path("share/config.schema.json")));
  }

  SUBCASE("prior-check subcommand") {
    write_file(dir + "/priors.json", read_file(source_path("share/examples/prior_check.json")));
    const auto r = run_cli("prior-check " + dir + "/priors.json");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"analysis\": \"prior-check\"") != std::string::npos);
  }

  SUBCASE("exit codes by error category") {
    write_file(dir + "/bad.json", "{nope");
    CHECK(run_cli("run " + dir + "/bad.json").exit_code == 2);

    write_file(dir + "/zero.json", R"({
      "analysis": "conventional",
      "table": {"axes": ["X","Y"], "cells": [
        {"X":1,"Y":1,"n":0},{"X":0,"Y":1,"n":10},
        {"X":1,"Y":0,"n":10},{"X":0,"Y":0,"n":10}]}
    })");
    CHECK(run_cli("run " + dir + "/zero.json").exit_code == 3);

    std::string frac = sids_config_text(2000);
    frac.replace(frac.find("\"n\": 173"), 8, "\"n\": 173.25");
    frac.replace(frac.find("\"seed\": 4242"), 12,
                 "\"seed\": 4242, \"identified_mode\": \"bootstrap\"");
    write_file(dir + "/frac.json", frac);
    CHECK(run_cli("run " + dir + "/frac.json").exit_code == 5);

    CHECK(run_cli("run " + dir + "/does_not_exist.json").exit_code == 2);

    std::string capped = sids_config_text(2000);
    capped.insert(capped.rfind('}'), R"(, "fit": {"max_iter": 1})");
    write_file(dir + "/capped.json", capped);
    CHECK(run_cli("run " + dir + "/capped.json").exit_code == 4);
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "kmt/cli.hpp"
#include "kmt/errors.hpp"
#include "kmt/report.hpp"

using namespace kmt;
using namespace kmt::report;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kmtc-test-" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

int run(std::vector<std::string> args) { return cli::run_command(args); }

std::string digest_of(const fs::path& p) { return sha256_hex(read_file(p)); }

}  // namespace

TEST_CASE("lemma report survives a JSON round trip") {
  lemmas::LemmaReport r;
  r.id = "tail-domination";
  r.params = {{"m_max", 7}};
  r.checks = 12;
  r.violations.push_back({"part2", 2, 1, 2, "1/4", ">=", "93/256"});
  r.below_threshold = r.violations;
  r.threshold = 3;
  r.pass = false;
  r.worst_margin = -0.1;
  r.rows = {{1, true, 0.25, 1}, {2, false, -0.1, 3}};
  r.values = {{"ratio", 1.0 / 3}, {"big", std::numeric_limits<double>::infinity()}};
  const auto back = lemma_from_json(Json::parse(dump(to_json(r))));
  CHECK(back == r);
  const auto real = lemmas::check_tail_domination(20);
  CHECK(lemma_from_json(Json::parse(dump(to_json(real)))) == real);
}

TEST_CASE("numbers: 17 digits, non-finite values as strings") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  CHECK(number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(number(std::nan("")) == "nan");
  CHECK(std::isinf(number_from(Json("inf"))));
  CHECK(number_from(number(2.5)) == 2.5);
  CHECK(parse_format("csv") == Format::Csv);
  CHECK_THROWS_AS(parse_format("xml"), InvalidParameter);
}

TEST_CASE("empty results give a header-only table") {
  CHECK(to_csv(lemma_summary_table({})) == "m,lemma,pass,worst_margin\n");
  CHECK(to_csv(violation_table({})).find('\n') == to_csv(violation_table({})).size() - 1);
  Table t{{"a", "b"}, {{1L, std::string("x,y")}, {2.5, std::string("q\"r")}}};
  CHECK(to_csv(t) == "a,b\n1,\"x,y\"\n2.5,\"q\"\"r\"\n");
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.command = "stein";
  m.args = {"stein", "--n-max", "4"};
  m.params = Json{{"n_max", 4}};
  m.seed = 9;
  m.started = "2026-01-01T00:00:00Z";
  m.finished = "2026-01-01T00:00:01Z";
  m.outputs = {{"stein.json", sha256_hex("x"), 1}};
  const auto back = manifest_from_json(Json::parse(dump(to_json(m))));
  CHECK(back.command == m.command);
  CHECK(back.args == m.args);
  CHECK(back.params == m.params);
  CHECK(back.seed == 9);
  CHECK(back.version == std::string(kToolVersion));
  REQUIRE(back.outputs.size() == 1);
  CHECK(back.outputs[0].sha256 == m.outputs[0].sha256);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run({"verify-lemmas", "--m-max", "1", "--out-dir", dir.string()}) == 0);
  const auto j = Json::parse(read_file(dir / "verify-lemmas.json"));
  CHECK(j["pass"] == true);
  for (const auto& r : j["reports"]) CHECK(r["violations"].empty());
  CHECK(run({"couple", "--theorem", "1.5", "--theta", "0.3", "--out-dir", dir.string()}) == 2);
  CHECK(run({"no-such-command"}) == 2);
  CHECK(run({}) == 2);
  CHECK(run({"stein", "--bogus-flag"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"stein", "--n-max", "3", "--out-dir", "/proc/kmtc-unwritable"}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("CSV and JSON of the same run agree") {
  const auto dj = scratch("json"), dc = scratch("csv");
  const std::vector<std::string> common{"verify-lemmas", "--m-max", "6", "--n-max", "8", "--grid", "50"};
  auto a = common, b = common;
  a.insert(a.end(), {"--out-dir", dj.string()});
  b.insert(b.end(), {"--format", "csv", "--out-dir", dc.string()});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  const auto j = Json::parse(read_file(dj / "verify-lemmas.json"));
  const auto rows = parse_csv(read_file(dc / "verify-lemmas.csv"));
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"m", "lemma", "pass", "worst_margin"});
  long matched = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    for (const auto& rep : j["reports"]) {
      if (rep["id"] != row[1]) continue;
      for (const auto& sr : rep["rows"])
        if (sr["param"].get<long>() == std::stol(row[0])) {
          CHECK((sr["pass"].get<bool>() ? "1" : "0") == row[2]);
          CHECK(number_from(sr["worst_margin"]) == std::stod(row[3]));
          ++matched;
        }
    }
  }
  CHECK(matched == static_cast<long>(rows.size()) - 1);
  fs::remove_all(dj);
  fs::remove_all(dc);
}

TEST_CASE("repeat runs and replay reproduce digests") {
  const auto d1 = scratch("rep1"), d2 = scratch("rep2");
  const std::vector<std::string> args{"embed-ep", "--n", "256", "--reps", "10", "--seed", "7"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out-dir", d1.string()});
  b.insert(b.end(), {"--out-dir", d2.string(), "--jobs", "1"});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  const auto m1 = manifest_from_json(Json::parse(read_file(d1 / "embed-ep.manifest.json")));
  const auto m2 = manifest_from_json(Json::parse(read_file(d2 / "embed-ep.manifest.json")));
  REQUIRE(m1.outputs.size() == m2.outputs.size());
  REQUIRE_FALSE(m1.outputs.empty());
  for (std::size_t i = 0; i < m1.outputs.size(); ++i) {
    CHECK(m1.outputs[i].sha256 == m2.outputs[i].sha256);
    CHECK(digest_of(d1 / m1.outputs[i].name) == m1.outputs[i].sha256);
  }
  CHECK(run({"report", "--manifest", (d1 / "embed-ep.manifest.json").string()}) == 0);
  CHECK(run({"report", "--replay", (d1 / "embed-ep.manifest.json").string(), "--out-dir", (d1 / "replay").string()}) == 0);
  write_file(d1 / m1.outputs[0].name, "tampered\n");
  CHECK(run({"report", "--manifest", (d1 / "embed-ep.manifest.json").string()}) == 1);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("config file supplies defaults that flags override") {
  const auto d = scratch("config");
  fs::create_directories(d);
  write_file(d / "run.conf", "# comment\nm-max = 2\ngrid = 20\n");
  REQUIRE(run({"verify-lemmas", "--config", (d / "run.conf").string(), "--out-dir", d.string()}) == 0);
  auto m = manifest_from_json(Json::parse(read_file(d / "verify-lemmas.manifest.json")));
  CHECK(m.params["m-max"] == "2");
  REQUIRE(run({"verify-lemmas", "--config", (d / "run.conf").string(), "--m-max", "3", "--out-dir", d.string()}) == 0);
  m = manifest_from_json(Json::parse(read_file(d / "verify-lemmas.manifest.json")));
  CHECK(m.params["m-max"] == "3");
  fs::remove_all(d);
}

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "cloudrank/service.hpp"
#include "synthetic.hpp"

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into a separate file so stdout stays parseable.
Run Cli(const std::string& args, std::string* err = nullptr) {
  const fs::path err_file = fs::temp_directory_path() / "cloudrank_cli_stderr.txt";
  const std::string cmd = std::string(CLOUDRANK_CLI_PATH) + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (err) *err = testsupport::ReadText(err_file.string());
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cloudrank_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir() const { return "--data-dir " + path.string(); }
};

std::string Fixture(const char* name) { return testsupport::FixturePath(name); }

void Populate(const TempDir& d) {
  REQUIRE(Cli(d.dir() + " ingest-catalog " + Fixture("sample_catalog.json")).code == 0);
  REQUIRE(Cli(d.dir() + " qos import " + Fixture("sample_qos.csv")).code == 0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("ingest then rank") {
    TempDir d;
    const Run ingest = Cli(d.dir() + " ingest-catalog " + Fixture("sample_catalog.json"));
    CHECK(ingest.code == 0);
    CHECK(Json::parse(ingest.out)["version"] == 1);
    CHECK(Cli(d.dir() + " qos import " + Fixture("sample_qos.csv")).code == 0);

    const Run table = Cli(d.dir() + " rank --request " + Fixture("table8.json") + " --top 5");
    CHECK(table.code == 0);
    CHECK(table.out.find("ratio") != std::string::npos);

    const Run csv = Cli(d.dir() + " rank --request " + Fixture("table8.json") + " --top 5 --format csv");
    REQUIRE(csv.code == 0);
    std::vector<double> ratios;
    std::istringstream lines(csv.out);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) ratios.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    CHECK(ratios.size() == 5);
    CHECK(std::is_sorted(ratios.begin(), ratios.end()));
  }

  TEST_CASE("json output equals the API response") {
    TempDir d;
    Populate(d);
    const Run run = Cli(d.dir() + " rank --request " + Fixture("table8.json") + " --top 100 --format json");
    REQUIRE(run.code == 0);
    Json cli = Json::parse(run.out);

    cloudrank::ServiceConfig config;
    config.admin_token = "t";
    cloudrank::Service service(config);
    service.catalog().Import(testsupport::ReadText(Fixture("sample_catalog.json")));
    service.qos().MergeCsv(testsupport::ReadText(Fixture("sample_qos.csv")));
    Json api = Json::parse(service
                               .Handle({"POST", "/api/rank", {{"limit", "100"}}, {{"content-type", "application/json"}},
                                        testsupport::ReadText(Fixture("table8.json"))})
                               .body);
    api.erase("generated_at");
    cli.erase("generated_at");
    CHECK(cli == api);
  }

  TEST_CASE("exit codes") {
    TempDir d;
    std::string err;
    const Run bad = Cli(d.dir() + " ingest-catalog " + Fixture("bad_catalog.json"), &err);
    CHECK(bad.code == 3);
    const Json e = Json::parse(err);
    CHECK(e["error"] == "validation");
    CHECK(e["message"].get<std::string>().find("storage[1]") != std::string::npos);

    CHECK(Cli(d.dir() + " ingest-catalog /nonexistent/catalog.json").code == 4);
    CHECK(Cli(d.dir() + " rank --request " + Fixture("table8.json") + " --by speed").code == 2);
    CHECK(Cli(d.dir() + " frobnicate").code == 2);
    CHECK(Cli("--config /nonexistent/cloudrank.toml qos averages").code == 2);

    Populate(d);
    const fs::path request = d.path / "bad_request.json";
    Json bad_request = Json::parse(testsupport::ReadText(Fixture("table8.json")));
    bad_request["benefit_weights"]["download"] = 0.5;
    std::ofstream(request) << bad_request.dump();
    CHECK(Cli(d.dir() + " rank --request " + request.string()).code == 3);

    const fs::path rows = d.path / "rows.csv";
    std::ofstream(rows) << cloudrank::kSampleCsvHeader << "\na,b,compute,c,100,1,2,3\na,b,compute,c,x,1,2,3\n";
    CHECK(Cli(d.dir() + " qos import " + rows.string()).code == 3);
  }

  TEST_CASE("empty data directory warns and succeeds") {
    TempDir d;
    std::string err;
    const Run r = Cli(d.dir() + " rank --request " + Fixture("table8.json"), &err);
    CHECK(r.code == 0);
    CHECK(err.find("catalog") != std::string::npos);
  }

  TEST_CASE("averages listing") {
    TempDir d;
    Populate(d);
    const Run r = Cli(d.dir() + " qos averages --client-location perth");
    CHECK(r.code == 0);
    CHECK(r.out.find("perth") != std::string::npos);
  }
}

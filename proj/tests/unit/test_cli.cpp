#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pmmf/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = PMMF_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "pmmf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = pmmf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pmmf_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) { return json::parse(pmmf::read_text(p)); }

}  // namespace

TEST_CASE("decode the mod-4 example") {
  const fs::path out = scratch("decode");
  const Result r = run({"decode", "--model", kData + "/models/mod4.json", "--obs", kData + "/mod4_obs.csv", "--out",
                        out.string(), "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out == "12223301\n");
  CHECK(pmmf::read_text(out / "path.txt") == "12223301\n");
  const json m = read_json(out / "manifest.json");
  CHECK(m["subcommand"] == "decode");
  CHECK(m["seed"] == 1);
  CHECK(m["outputs"].contains("path.txt"));
  CHECK(m["inputs"].size() == 2);
}

TEST_CASE("segment the mod-4 example") {
  const fs::path out = scratch("segment");
  const Result r = run({"segment", "--model", kData + "/models/mod4.json", "--obs", kData + "/mod4_obs.csv", "--out",
                        out.string()});
  CHECK(r.code == 0);
  const json j = read_json(out / "segmentation.json");
  CHECK(j["normalized_error"] == 0.0);
  CHECK(j["path"] == json({1, 2, 2, 2, 3, 3, 0, 1}));
  CHECK(read_json(out / "manifest.json")["seed"].is_number_unsigned());
}

TEST_CASE("check exits 2 when no certificate exists") {
  const fs::path out = scratch("check_mod4");
  const Result r =
      run({"check", "--model", kData + "/models/mod4.json", "--method", "enumerate", "--r-max", "6", "--out", out.string()});
  CHECK(r.code == 2);
  const json j = read_json(out / "check.json");
  CHECK(j["certificate"].is_null());
  CHECK_FALSE(j["failures"].empty());
}

TEST_CASE("check certifies the four-state chain") {
  const fs::path out = scratch("check_four");
  const Result r = run({"check", "--model", kData + "/models/fourstate.json", "--method", "enumerate", "--out", out.string()});
  CHECK(r.code == 0);
  const json c = read_json(out / "check.json")["certificate"];
  CHECK(c["r"] == 3);
  CHECK(c["n0"].get<double>() == doctest::Approx(8.0));
  CHECK(c["rho"].get<double>() == doctest::Approx(63.0 / 64.0));
}

TEST_CASE("usage errors exit 64") {
  CHECK(run({"decode", "--bogus"}).code == 64);
  CHECK(run({}).code == 64);
  CHECK(run({"check", "--model", kData + "/models/mod4.json", "--method", "magic", "--out", scratch("usage").string()})
            .code == 64);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("the same seed gives identical outputs") {
  const fs::path a = scratch("seed_a");
  const fs::path b = scratch("seed_b");
  for (const auto& dir : {a, b}) {
    CHECK(run({"simulate", "--model", kData + "/models/cluster_hmm.json", "--n", "50", "--seed", "7", "--out", dir.string()})
              .code == 0);
  }
  CHECK(read_json(a / "manifest.json")["outputs"] == read_json(b / "manifest.json")["outputs"]);
  CHECK(pmmf::read_text(a / "trajectory.csv") == pmmf::read_text(b / "trajectory.csv"));
}

TEST_CASE("smooth writes a block and the log-likelihood") {
  const fs::path out = scratch("smooth");
  const Result r = run({"smooth", "--model", kData + "/models/mod4.json", "--obs", kData + "/mod4_obs.csv", "--t", "3",
                        "--m", "2", "--out", out.string()});
  CHECK(r.code == 0);
  const json j = read_json(out / "block.json");
  CHECK(j["probs"].size() == 16);
  double sum = 0.0;
  for (const auto& p : j["probs"]) sum += p.get<double>();
  CHECK(sum == doctest::Approx(1.0));
  CHECK(read_json(out / "loglik.json")["log_likelihood"].get<double>() < 0.0);
}

TEST_CASE("zero likelihood exits 3") {
  const fs::path dir = scratch("zero");
  pmmf::write_text(dir / "frozen.json", R"({"kind":"hmm","trans":[[1,0],[0,1]],"init":[1,0],
    "emissions":[{"kind":"categorical","weights":[1,0]},{"kind":"categorical","weights":[0,1]}]})");
  pmmf::write_text(dir / "obs.csv", "0\n1\n");
  const Result r =
      run({"smooth", "--model", (dir / "frozen.json").string(), "--obs", (dir / "obs.csv").string(), "--out", (dir / "out").string()});
  CHECK(r.code == 3);
  CHECK(read_json(dir / "out" / "error.json")["time"] == 2);
}

TEST_CASE("estimate-r needs a certificate unless --no-bound") {
  const fs::path out = scratch("estr");
  CHECK(run({"estimate-r", "--model", kData + "/models/mod4.json", "--n", "200", "--out", out.string()}).code == 2);
  const Result r = run({"estimate-r", "--model", kData + "/models/mod4.json", "--n", "200", "--method", "anchored",
                        "--window", "0:5", "--no-bound", "--out", out.string()});
  CHECK(r.code == 0);
  const json j = read_json(out / "r.json");
  CHECK(j["R_hat"] == 0.0);
}

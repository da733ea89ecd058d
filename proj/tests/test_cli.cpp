#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <expat.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/pipeline.hpp"
#include "demand/plot.hpp"
#include "demand/synth.hpp"

namespace fs = std::filesystem;
using namespace demand;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("demand_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_fixture(const fs::path& dir, std::uint64_t seed = 1, int per = 4, int days = 60) {
  const auto data = generate(default_archetypes(), SynthOptions{per, days, 0.1, seed});
  std::ostringstream csv;
  write_readings_csv(csv, data.readings, 1);
  write_text_file(dir / "readings.csv", csv.str(), "test", "fixture");
  return dir / "readings.csv";
}

struct Run {
  int code = -1;
  std::string output;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(CLUSTER_DEMAND_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool well_formed_xml(const std::string& text, std::string& error) {
  XML_Parser parser = XML_ParserCreate(nullptr);
  const bool ok = XML_Parse(parser, text.data(), static_cast<int>(text.size()), 1) == XML_STATUS_OK;
  if (!ok) error = XML_ErrorString(XML_GetErrorCode(parser));
  XML_ParserFree(parser);
  return ok;
}

std::string slurp(const fs::path& p) { return read_text_file(p, "test", "read"); }

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(R"(
input = "data/readings.csv"
out = "/tmp/run"
seed = 7
resolution = 2
reducer = "fa"
dim = "auto"
clusterer = "sc"
k = 5
knn = 4
gap_b = 12
p = [1, 2, 3]
reps = 40
framework = "all"
threads = 2
plots = false
plot_households = ["H001", "H002"]
)",
                              "/base");
  CHECK(c.input == fs::path("/base/data/readings.csv"));
  CHECK(c.out == fs::path("/tmp/run"));
  CHECK(c.seed == 7);
  CHECK(c.resolution == 2);
  CHECK(c.reducer == ReducerKind::fa);
  CHECK(!c.dim.has_value());
  CHECK(c.clusterer == ClusterMethod::sc);
  CHECK(c.k == 5);
  CHECK(c.knn == 4);
  CHECK(c.gap_b == 12);
  CHECK(c.p == std::vector<int>{1, 2, 3});
  CHECK(c.reps == 40);
  CHECK(c.all_frameworks);
  CHECK(c.threads == 2);
  CHECK(!c.plots);
  CHECK(c.plot_households.size() == 2);

  CHECK(parse_config("p = 3\n").p == std::vector<int>{3});
  CHECK_THROWS_AS(parse_config("colour = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("reducer = \"svd\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("k = [\n"), ConfigError);

  PipelineConfig bad;
  bad.resolution = 5;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = {};
  bad.gap_b = 3;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("pipeline writes every artifact and honours overrides") {
  const fs::path dir = fresh_dir("pipeline");
  const auto input = write_fixture(dir);
  PipelineConfig c;
  c.input = input;
  c.out = dir / "out";
  c.dim = 7;
  c.k = 7;
  c.reps = 5;
  c.plot_households = {"H001"};
  const auto result = run_pipeline(c);
  REQUIRE(result.frameworks.size() == 1);
  for (const char* f : {"profiles.csv", "exclusions.csv", "comparison.csv"}) CHECK(fs::exists(c.out / f));
  const fs::path fw = c.out / "pca_kmc";
  for (const char* f : {"reducer.json", "elbow.csv", "reduced.csv", "model.json", "validation.json", "validation.csv",
                        "summary.json"})
    CHECK(fs::exists(fw / f));
  CHECK(!fs::exists(fw / "gap.csv"));
  const auto summary = nlohmann::json::parse(slurp(fw / "summary.json"));
  CHECK(summary["d_prime"] == 7);
  CHECK(summary["k"] == 7);
  CHECK(summary["dim_source"] == "override");
  CHECK(summary["k_source"] == "override");

  int clusters = 0;
  for (const auto& e : fs::directory_iterator(fw / "plots")) {
    const auto name = e.path().filename().string();
    if (name.rfind("cluster_", 0) == 0 && e.path().extension() == ".svg") ++clusters;
    if (e.path().extension() == ".svg") {
      std::string err;
      CHECK_MESSAGE(well_formed_xml(slurp(e.path()), err), name << ": " << err);
      auto csv = e.path();
      csv.replace_extension(".csv");
      if (name != "gap.svg") CHECK_MESSAGE(fs::exists(csv), name);
    }
  }
  CHECK(clusters == 7);
  CHECK(fs::exists(fw / "plots" / "boxplot_H001.svg"));
  CHECK(fs::exists(fw / "plots" / "elbow.svg"));
}

TEST_CASE("plots from artifacts, missing artifacts and empty household lists") {
  const fs::path dir = fresh_dir("plots");
  const auto input = write_fixture(dir, 2);
  PipelineConfig c;
  c.input = input;
  c.out = dir / "out";
  c.reps = 3;
  c.gap_b = 10;
  c.plots = false;
  run_pipeline(c);
  const fs::path fw = c.out / "pca_kmc";
  const auto written = plot_artifacts(fw, c.out / "profiles.csv", nullptr, {});
  CHECK(!written.empty());
  for (const auto& p : written) CHECK(p.filename().string().rfind("boxplot_", 0) != 0);
  CHECK(fs::exists(fw / "plots" / "gap.svg"));
  std::string err;
  CHECK(well_formed_xml(slurp(fw / "plots" / "gap.svg"), err));

  fs::remove(fw / "model.json");
  try {
    plot_artifacts(fw, c.out / "profiles.csv", nullptr, {});
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("model.json") != std::string::npos);
  }
}

TEST_CASE("SVG escaping keeps documents well formed") {
  const std::vector<Series> s{{"a<b & \"c\"", {0, 1, 2}, {1, 3, 2}}};
  const auto svg = line_chart_svg({"T & <t>", "x", "y"}, s);
  std::string err;
  CHECK_MESSAGE(well_formed_xml(svg, err), err);
  const std::vector<double> xs{1, 2, 3}, ys{-1, 0.5, 2};
  CHECK(well_formed_xml(bar_chart_svg({"gap", "k", "gap"}, xs, ys), err));
  Eigen::MatrixXd days(5, 3);
  days << 1, 2, 3, 2, 3, 4, 3, 4, 5, 4, 5, 6, 100, 6, 7;
  const auto boxes = slot_box_stats(days);
  CHECK(boxes[0].median == 3.0);
  CHECK(boxes[0].q1 == 2.0);
  CHECK(boxes[0].q3 == 4.0);
  CHECK(boxes[0].high == 4.0);  // 100 lies beyond 1.5 IQR
  CHECK(well_formed_xml(box_plot_svg({"b", "slot", "kWh"}, boxes, {}), err));
}

TEST_CASE("pipeline artifacts are byte-identical across runs") {
  const fs::path dir = fresh_dir("determinism");
  const auto input = write_fixture(dir, 3);
  std::vector<std::string> docs;
  for (unsigned threads : {1u, 1u, 3u}) {
    PipelineConfig c;
    c.input = input;
    c.out = dir / ("out" + std::to_string(docs.size()));
    c.all_frameworks = true;
    c.reps = 10;
    c.gap_b = 10;
    c.threads = threads;
    c.plots = false;
    run_pipeline(c);
    std::string all;
    for (const auto& e : fs::recursive_directory_iterator(c.out))
      if (e.is_regular_file()) all += fs::relative(e.path(), c.out).string() + "\n" + slurp(e.path());
    docs.push_back(all);
  }
  CHECK(docs[0] == docs[1]);
  CHECK(docs[0] == docs[2]);
  CHECK(slurp(dir / "out0" / "comparison.csv").find("FA+SC") != std::string::npos);
}

TEST_CASE("command line subcommands and exit codes") {
  const fs::path dir = fresh_dir("binary");
  const std::string d = dir.string();

  auto r = cli("synth --out " + d + "/synth --households-per-archetype 3 --days 40 --seed 4");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "synth" / "labels.csv"));
  const std::string input = d + "/synth/readings.csv";

  CHECK(cli("ingest --input " + input + " --out " + d + "/ing").code == 0);
  CHECK(fs::exists(dir / "ing" / "exclusions.csv"));
  CHECK(cli("preprocess --input " + input + " --out " + d + "/pre").code == 0);
  CHECK(cli("reduce --input " + d + "/pre/profiles.csv --out " + d + "/red --reducer fa --dim auto").code == 0);
  CHECK(fs::exists(dir / "red" / "reducer.json"));
  CHECK(cli("cluster --input " + d + "/red/reduced.csv --out " + d + "/clu --clusterer kmc --k auto --gap-b 10").code == 0);
  CHECK(fs::exists(dir / "clu" / "gap.csv"));
  r = cli("validate --input " + input + " --reducer-json " + d + "/red/reducer.json --model-json " + d +
          "/clu/model.json --p 1,2 --reps 5 --out " + d + "/val");
  CHECK(r.code == 0);
  CHECK(r.output.find("p=1 %matches=100") != std::string::npos);

  std::ofstream(dir / "run.toml") << "input = \"synth/readings.csv\"\nout = \"cfg_out\"\nreps = 4\ngap_b = 10\n"
                                     "k = 3\nplots = false\n";
  r = cli("pipeline --config " + d + "/run.toml --k 4 --dim 2");
  CHECK(r.code == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "cfg_out" / "pca_kmc" / "summary.json"));
  CHECK(summary["k"] == 4);
  CHECK(summary["d_prime"] == 2);
  CHECK(cli("plot --out " + d + "/cfg_out/pca_kmc --input " + input + " --households H001").code == 0);
  CHECK(fs::exists(dir / "cfg_out" / "pca_kmc" / "plots" / "boxplot_H001.svg"));

  r = cli("ingest --input " + d + "/nope.csv --out " + d + "/x");
  CHECK(r.code == 1);
  CHECK(r.output.find("ingest::") != std::string::npos);
  CHECK(cli("pipeline --input " + input + " --reducer svd").code == 3);
  CHECK(cli("pipeline --input " + input + " --resolution 5").code == 3);
  CHECK(cli("pipeline --input " + input + " --dim seven").code == 3);
  CHECK(cli("bogus").code == 3);

  // Four tight groups with a 1-NN graph cannot form two connected clusters.
  std::ofstream(dir / "tight.csv") << "household_id,c1\na,0\nb,0.01\nc,5\nd,5.01\ne,10\nf,10.01\ng,15\nh,15.01\n";
  r = cli("cluster --input " + d + "/tight.csv --out " + d + "/sc --clusterer sc --k 2 --knn 1");
  CHECK(r.code == 2);
  CHECK(r.output.find("cluster::spectral") != std::string::npos);
}

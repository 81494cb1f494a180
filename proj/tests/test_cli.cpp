#include <fstream>
#include <sstream>

#include "swei/cli.hpp"
#include "swei/core_io.hpp"
#include "test_util.hpp"

using namespace swei;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run swei_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "swei");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_ext(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes plots and labels deterministically") {
  test::TempDir tmp("cli_synth");
  const auto d = (tmp.path() / "d").string();
  auto r = swei_cli({"synth", "--groups", "3", "--per-group", "10", "--seed", "7", "--out", d});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(count_ext(d, ".swst") == 30);
  const auto labels = read_labels(fs::path(d) / "labels.csv");
  CHECK(labels.size() == 30);
  const auto first = slurp(fs::path(d) / "g000_000000.swst");
  const auto csv = slurp(fs::path(d) / "labels.csv");

  r = swei_cli({"synth", "--groups", "3", "--per-group", "10", "--seed", "7", "--out", d});
  CHECK(r.code == 2);
  r = swei_cli({"synth", "--groups", "3", "--per-group", "10", "--seed", "7", "--out", d, "--force"});
  REQUIRE(r.code == 0);
  CHECK(slurp(fs::path(d) / "g000_000000.swst") == first);
  CHECK(slurp(fs::path(d) / "labels.csv") == csv);

  r = swei_cli({"synth", "--groups", "1", "--per-group", "10", "--seed", "7", "--out",
                (tmp.path() / "e").string()});
  CHECK(r.code == 2);
  CHECK(swei_cli({"synth", "--groups", "3"}).code == 2);
  CHECK(swei_cli({"nonsense"}).code == 2);
  CHECK(swei_cli({"--help"}).code == 0);
}

TEST_CASE("train, infer, calibrate and estimate") {
  test::TempDir tmp("cli_pipeline");
  const auto d = (tmp.path() / "d").string();
  const auto m = (tmp.path() / "m").string();
  REQUIRE(swei_cli({"synth", "--groups", "3", "--per-group", "10", "--seed", "3", "--out", d}).code == 0);

  auto r = swei_cli({"train", "--data", d, "--seed", "1", "--epochs", "0", "--out", m});
  CHECK(r.code == 2);
  r = swei_cli({"train", "--data", d, "--epochs", "1", "--out", m});
  CHECK(r.code == 2);

  r = swei_cli({"train", "--data", d, "--seed", "1", "--epochs", "1", "--batch", "8",
                "--channels", "2", "--loo", "--out", m});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (int g = 0; g < 3; ++g) {
    CHECK(fs::exists(fs::path(m) / ("model_loo_" + std::to_string(g) + ".swnw")));
    CHECK(fs::exists(fs::path(m) / ("loss_trace_loo_" + std::to_string(g) + ".csv")));
  }
  CHECK(lines(slurp(fs::path(m) / "predictions_loo.csv")).size() == 31);

  const auto pred = (tmp.path() / "pred.csv").string();
  r = swei_cli({"infer", "--ensemble", m, "--in", d, "--labels", (fs::path(d) / "labels.csv").string(),
                "--out", pred});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = lines(slurp(pred));
  REQUIRE(rows.size() == 31);
  CHECK(rows[0] == "path,m_mps,sigma,truth_mps,group_id");
  const auto cells = split_csv_line(rows[1]);
  REQUIRE(cells.size() == 5);
  CHECK(std::stod(cells[1]) > 0.0);
  CHECK(std::stod(cells[3]) > 0.0);
  CHECK(cells[4] == "0");

  r = swei_cli({"infer", "--model", (fs::path(m) / "model_loo_0.swnw").string(), "--in",
                (fs::path(d) / "g000_000000.swst").string(), "--json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"rel_unc\"") != std::string::npos);
  CHECK(r.out.find("\"abs_unc_mps\"") != std::string::npos);

  r = swei_cli({"infer", "--in", d});
  CHECK(r.code == 2);
  r = swei_cli({"infer", "--ensemble", m, "--in", d, "--velocity"});
  CHECK(r.code == 3);
  r = swei_cli({"infer", "--ensemble", m, "--in", d, "--interp-t", "0.1"});
  CHECK(r.code == 2);

  r = swei_cli({"calibrate", "--pred", pred, "--bins", "40"});
  CHECK(r.code == 3);
  CHECK(r.err.find("TooFewSamples") != std::string::npos);
  r = swei_cli({"calibrate", "--pred", pred, "--bins", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean_abs_pct_dev,") != std::string::npos);

  r = swei_cli({"estimate", "--method", "mixed", "--in", d});
  CHECK(r.code == 2);
  r = swei_cli({"estimate", "--method", "radon", "--in", d});
  REQUIRE(r.code == 0);
  CHECK(lines(r.out).size() == 31);
  r = swei_cli({"estimate", "--method", "mixed", "--seed", "5", "--in", d});
  CHECK(r.code == 0);
  CHECK(swei_cli({"estimate", "--method", "mixed", "--seed", "5", "--in", d}).out == r.out);

  r = swei_cli({"label", "--data", d, "--method", "mixed"});
  CHECK(r.code == 2);
  r = swei_cli({"label", "--data", d, "--method", "xcorr"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_labels(fs::path(d) / "labels_xcorr.csv").size() == 30);
}

}  // TEST_SUITE

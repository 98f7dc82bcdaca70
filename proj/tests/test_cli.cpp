#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path cli_binary() {
  return fs::canonical("/proc/self/exe").parent_path() / "kronml";
}

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = cli_binary().string() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& file) {
  std::ifstream f(file, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("chartab builds, caches and validates") {
  TempDir dir("kronml_cli_chartab");
  auto res = run_cli("--out-dir " + dir.path.string() + " chartab --n 6");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("p(6)=11") != std::string::npos);
  CHECK(fs::exists(dir.path / "chartab_6.csv"));

  // Cached load succeeds and prints the same checksum.
  auto again = run_cli("--out-dir " + dir.path.string() + " chartab --n 6");
  CHECK(again.exit_code == 0);
  CHECK(again.output == res.output);

  // A corrupted cache must exit 2.
  {
    auto body = slurp(dir.path / "chartab_6.csv");
    const auto pos = body.rfind('1');
    body[pos] = '2';
    std::ofstream f(dir.path / "chartab_6.csv", std::ios::trunc | std::ios::binary);
    f << body;
  }
  auto broken = run_cli("--out-dir " + dir.path.string() + " chartab --n 6");
  CHECK(broken.exit_code == 2);
}

TEST_CASE("chartab range guard is a usage error") {
  auto res = run_cli("chartab --n 25");
  CHECK(res.exit_code == 1);
}

TEST_CASE("unknown flags are rejected") {
  auto res = run_cli("chartab --n 6 --bogus 1");
  CHECK(res.exit_code == 1);
}

TEST_CASE("gen prints class counts and is byte-reproducible") {
  TempDir dir("kronml_cli_gen");
  auto res = run_cli("--out-dir " + dir.path.string() + " gen --n 5 --encoding 1");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("rows=") != std::string::npos);
  CHECK(res.output.find("zeros=") != std::string::npos);
  CHECK(res.output.find("ones=") != std::string::npos);
  const auto file = dir.path / "dataset_n5_v1.csv";
  REQUIRE(fs::exists(file));
  const auto first = slurp(file);
  fs::remove(file);
  run_cli("--out-dir " + dir.path.string() + " gen --n 5 --encoding 1");
  CHECK(slurp(file) == first);
}

TEST_CASE("gen at n=2 encoding 3 matches the hand enumeration") {
  TempDir dir("kronml_cli_gen2");
  auto res = run_cli("--out-dir " + dir.path.string() + " gen --n 2 --encoding 3");
  CHECK(res.exit_code == 0);
  const auto body = slurp(dir.path / "dataset_n2_v3.csv");
  CHECK(body.rfind("n=2,a=3,rows=5", 0) == 0);  // 5 triples pass the depth filter
  // Each row: 36 feature columns plus the label.
  const auto first_row = body.substr(body.find('\n') + 1);
  const auto line = first_row.substr(0, first_row.find('\n'));
  CHECK(std::count(line.begin(), line.end(), ',') == 36);
}

TEST_CASE("train and eval round trip for nearn") {
  TempDir dir("kronml_cli_nearn");
  auto train = run_cli("--out-dir " + dir.path.string() + " train --model nearn --n 5 --k 3");
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(dir.path / "model_nearn_n5.txt"));
  CHECK(fs::exists(dir.path / "split_nearn_n5.txt"));
  auto eval = run_cli("--out-dir " + dir.path.string() + " eval --model nearn --n 5");
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("accuracy=") != std::string::npos);
  CHECK(fs::exists(dir.path / "report_nearn_n5.json"));
  CHECK(fs::exists(dir.path / "report_nearn_n5.svg"));
  CHECK(fs::exists(dir.path / "report_nearn_n5.timings.json"));
}

TEST_CASE("cnn train prints the parameter count") {
  TempDir dir("kronml_cli_cnn");
  auto res = run_cli("--out-dir " + dir.path.string() +
                     " train --model cnn2 --n 6 --epochs 1 --batch-size 32");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("parameters=546") != std::string::npos);
}

TEST_CASE("encoding mismatch between --data and model is a usage error") {
  TempDir dir("kronml_cli_mismatch");
  run_cli("--out-dir " + dir.path.string() + " gen --n 6 --encoding 3");
  auto res = run_cli("--out-dir " + dir.path.string() + " train --model cnn2 --n 6 --data " +
                     (dir.path / "dataset_n6_v3.csv").string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("usage error") != std::string::npos);
  // No partial model or split files left behind.
  CHECK_FALSE(fs::exists(dir.path / "model_cnn2_n6.txt"));
  CHECK_FALSE(fs::exists(dir.path / "split_cnn2_n6.txt"));
}

TEST_CASE("verify fast level at a small bound") {
  auto res = run_cli("verify --level fast --n 5");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("[PASS] characters.orthogonality") != std::string::npos);
  CHECK(res.output.find("[PASS] kronecker.depth_contrapositive") != std::string::npos);
  CHECK(res.output.find("[FAIL]") == std::string::npos);
}

TEST_CASE("json reports are byte-identical across reruns") {
  TempDir dir("kronml_cli_repr");
  const std::string train_eval = "--out-dir " + dir.path.string() +
                                 " --seed 777 train --model lgbm --n 5 --iterations 20";
  run_cli(train_eval);
  run_cli("--out-dir " + dir.path.string() + " --seed 777 eval --model lgbm --n 5");
  const auto first = slurp(dir.path / "report_lgbm_n5.json");
  REQUIRE_FALSE(first.empty());
  run_cli(train_eval);
  run_cli("--out-dir " + dir.path.string() + " --seed 777 eval --model lgbm --n 5");
  CHECK(slurp(dir.path / "report_lgbm_n5.json") == first);
}

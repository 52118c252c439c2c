// Smoke test of the installed CLI binary (exercises the full shared-library
// path the way a user would).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return AGCNET_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "agcnet_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli: help and failure exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("") != 0);                      // missing subcommand
  CHECK(run("synth") != 0);                 // missing --out
  CHECK(run("train --data /nope --out /tmp/agcnet_cli_nope") != 0);
  CHECK(run("eval --checkpoint /nope.ckpt --data /nope --out /tmp/agcnet_cli_nope") != 0);
}

TEST_CASE("cli: synth, train, eval, gradcheck, ttest pipeline") {
  const auto data_dir = fresh_dir("data");
  const auto run_a = fresh_dir("run_a");
  const auto run_b = fresh_dir("run_b");

  const std::string overrides =
      "--set K=2 --set L=1 --set C_enc=5 --set d_h=5 --set S=3 --set r=2 "
      "--set H=6 --set P=2 --set batch=32 --set epochs=1 "
      "--set synth_nodes=6 --set synth_steps=150";

  CHECK(run("synth --out " + data_dir.string() + " " + overrides + " --seed 3") == 0);
  CHECK(fs::exists(data_dir / "signals.csv"));

  // unknown config keys are rejected
  CHECK(run("synth --out " + data_dir.string() + " --set nonsense=1") != 0);

  CHECK(run("train --data " + data_dir.string() + " --out " + run_a.string() + " " + overrides +
            " --seed 3") == 0);
  CHECK(run("train --data " + data_dir.string() + " --out " + run_b.string() + " " + overrides +
            " --seed 4") == 0);
  CHECK(fs::exists(run_a / "best.ckpt"));

  const auto eval_dir = fresh_dir("eval");
  CHECK(run("eval --checkpoint " + (run_a / "best.ckpt").string() + " --data " +
            data_dir.string() + " --out " + eval_dir.string()) == 0);
  CHECK(fs::exists(eval_dir / "report.txt"));

  CHECK(run("gradcheck") == 0);
  CHECK(run("gradcheck --corrupt head.weight") == 2);  // documented failure exit code

  CHECK(run("ttest --group-a " + run_a.string() + " " + run_b.string() + " --group-b " +
            run_a.string() + " " + run_b.string()) == 0);
  CHECK(run("ttest --group-a " + run_a.string() + " --group-b " + run_b.string()) != 0);
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dgzsl_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(DGZSL_CLI_PATH) + " " + args + " > " +
                          (kWork / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    std::ofstream(kWork / "synth.cfg") << "seen = 4\nunseen = 3\nattribute_dim = 4\n"
                                          "feature_dim = 8\nsamples_per_class = 15\n";
    std::ofstream(kWork / "train.cfg") << "latent_dim = 4\nhidden = 12\nepochs = 3\n"
                                          "transductive_epochs = 2\nfewshot_epochs = 2\n"
                                          "batch_size = 16\n";
    std::ofstream(kWork / "bad.cfg") << "epochs = 3\nunknown_key = 1\n";
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitNonZero) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_NE(run("train --data " + p("nowhere") + " --out " + p("r")), 0);
}

TEST_F(Cli, EndToEnd) {
  ASSERT_EQ(run("synth --config " + p("synth.cfg") + " --seed 3 --out " + p("data")), 0);
  EXPECT_TRUE(fs::exists(kWork / "data" / "features.bin"));

  ASSERT_EQ(run("train --config " + p("train.cfg") + " --data " + p("data") + " --out " +
                p("ind")),
            0);
  for (const char* f : {"config.cfg", "metrics.jsonl", "checkpoint.bin", "summary.json"})
    EXPECT_TRUE(fs::exists(kWork / "ind" / f)) << f;

  EXPECT_EQ(run("train --config " + p("train.cfg") + " --data " + p("data") + " --out " +
                p("trans") + " --regime transductive --recon-only-unlabeled --seed 4"),
            0);
  std::ifstream cfg(kWork / "trans" / "config.cfg");
  const std::string text((std::istreambuf_iterator<char>(cfg)), {});
  EXPECT_NE(text.find("recon_only_unlabeled = true"), std::string::npos);
  EXPECT_NE(text.find("seed = 4"), std::string::npos);

  EXPECT_EQ(run("fewshot --config " + p("train.cfg") + " --data " + p("data") + " --out " +
                p("few") + " --k 3 --checkpoint " + p("ind/checkpoint.bin")),
            0);

  EXPECT_EQ(run("eval --checkpoint " + p("ind/checkpoint.bin") + " --data " + p("data") +
                " --out " + p("eval.json")),
            0);
  std::ifstream report(kWork / "eval.json");
  const auto j = nlohmann::json::parse(report);
  EXPECT_EQ(j["total"].get<int>(), 45);
  EXPECT_NE(run("eval --checkpoint " + p("ind/checkpoint.bin") + " --data " + p("data") +
                " --candidates nobody"),
            0);

  EXPECT_EQ(run("export --checkpoint " + p("ind/checkpoint.bin") + " --data " + p("data") +
                " --out " + p("emb")),
            0);
  EXPECT_TRUE(fs::exists(kWork / "emb" / "latent.bin"));
  EXPECT_TRUE(fs::exists(kWork / "emb" / "recon.bin"));
}

TEST_F(Cli, BadConfigAndDataExitNonZero) {
  ASSERT_EQ(run("synth --config " + p("synth.cfg") + " --out " + p("data2")), 0);
  EXPECT_NE(run("train --config " + p("bad.cfg") + " --data " + p("data2") + " --out " +
                p("bad")),
            0);
  std::ofstream(kWork / "data2" / "features.bin", std::ios::trunc).close();
  EXPECT_NE(run("train --config " + p("train.cfg") + " --data " + p("data2") + " --out " +
                p("bad2")),
            0);
}

TEST_F(Cli, GradCheckPasses) { EXPECT_EQ(run("gradcheck --seed 2"), 0); }

#include "trimstokes/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace trimstokes;

namespace {

const char* patch_config = R"({
  "subcommand": "solve",
  "geometry": {"preset": "square", "fitted": "dirichlet_strong"},
  "case": "patch",
  "element": {"kind": "TH", "k": 1},
  "params": {"mu": 1.0, "gamma": 10.0},
  "mesh": [4, 4]
})";

std::string error_of(const std::string& text, const std::string& sub)
{
    try {
        parse_config(text, sub);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Cli, ParsesPatchConfigWithDefaults)
{
    const ExperimentConfig cfg = parse_config(patch_config, "solve");
    ASSERT_EQ(cfg.kinds.size(), 1u);
    EXPECT_EQ(cfg.kinds[0], ElementKind::TH);
    EXPECT_EQ(cfg.penalty(), 10.0);
    EXPECT_EQ(cfg.m, 0);
    EXPECT_FALSE(cfg.defaults.empty());
}

TEST(Cli, RejectsUnknownKeys)
{
    std::string text = patch_config;
    text.replace(text.find("\"mu\""), 4, "\"nu\"");
    EXPECT_NE(error_of(text, "solve"), "");
    EXPECT_NE(error_of(patch_config, "infsup"), "");
}

TEST(Cli, MalformedJsonReportsOffset)
{
    const std::string msg = error_of("{\"subcommand\": \"solve\",, }", "solve");
    EXPECT_NE(msg.find("byte"), std::string::npos) << msg;
}

TEST(Cli, RejectsOutOfRangeValues)
{
    std::string text = patch_config;
    text.replace(text.find("\"gamma\": 10.0"), 13, "\"gamma\": -1.0");
    EXPECT_NE(error_of(text, "solve"), "");
}

TEST(Cli, PatchRunWritesArtifacts)
{
    const std::string out = ::testing::TempDir() + "trimstokes_cli_patch";
    std::filesystem::remove_all(out);
    RunOptions ro;
    ro.out_dir = out;
    std::ostringstream log;
    EXPECT_EQ(run_experiment(parse_config(patch_config, "solve"), ro, log), 0);
    std::ifstream errors(out + "/errors.csv");
    ASSERT_TRUE(errors.good());
    std::string header;
    std::string row;
    std::getline(errors, header);
    std::getline(errors, row);
    EXPECT_EQ(header, "e1h,e0h,ediv");
    EXPECT_LE(std::stod(row.substr(0, row.find(','))), 1e-9);
    EXPECT_TRUE(std::filesystem::exists(out + "/metadata.json"));
    std::filesystem::remove_all(out);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ssoprobe/config.hpp"

namespace ssoprobe::cli {
namespace {

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config(nlohmann::json::parse(R"({
    "idp": "0.0.0.0:9000",
    "targets": [{"preset": "drupal"}, {"url": "http://sp.example/app"}],
    "profile_dir": "profiles",
    "verbosity": "debug"
  })"));
  EXPECT_EQ(c.idp_bind, "0.0.0.0:9000");
  ASSERT_EQ(c.targets.size(), 2u);
  EXPECT_TRUE(c.targets[0].is_preset());
  EXPECT_EQ(c.targets[1].url, "http://sp.example/app");
  EXPECT_EQ(c.profile_dir, "profiles");
  EXPECT_EQ(c.report_dir, ToolConfig{}.report_dir);
  EXPECT_EQ(c.verbosity, Verbosity::debug);
}

TEST(Config, Rejects) {
  auto bad = [](const char* text) { return parse_config(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"colour": 1})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"idp": "nohost"})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"idp": "h:70000"})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"targets": [{}]})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"targets": [{"preset": "drupal", "url": "http://x/"}]})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"targets": [{"preset": "wordpress"}]})"), std::invalid_argument);
  EXPECT_THROW(bad(R"({"verbosity": "loud"})"), std::invalid_argument);
  EXPECT_THROW(bad(R"([])"), std::invalid_argument);
}

TEST(Config, FileWithCommentsAndEnv) {
  const auto path = std::filesystem::temp_directory_path() / "ssoprobe_cfg_test.json";
  std::ofstream(path) << "// lab box\n{\"report_dir\": \"out\"}\n";
  EXPECT_EQ(load_config_file(path.string()).report_dir, "out");

  ::setenv(kConfigEnv, path.c_str(), 1);
  EXPECT_EQ(config_path(std::nullopt), path.string());
  EXPECT_EQ(config_path(std::string("explicit.json")), "explicit.json");
  ::unsetenv(kConfigEnv);
  EXPECT_EQ(config_path(std::nullopt), std::nullopt);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config_file(path.string()), std::invalid_argument);
}

TEST(Config, TargetSlug) {
  EXPECT_EQ(target_from_string("cf-openid").slug(), "cf-openid");
  EXPECT_EQ(target_from_string("http://127.0.0.1:8080/app/").slug(), "http_127.0.0.1_8080_app");
  EXPECT_THROW(target_from_string("ftp://x"), std::invalid_argument);
}

TEST(Config, HostPort) {
  EXPECT_EQ(split_host_port("127.0.0.1:0"), (std::pair<std::string, int>{"127.0.0.1", 0}));
  EXPECT_EQ(split_host_port("[::1]:80").first, "[::1]");
  EXPECT_THROW(split_host_port(":80"), std::invalid_argument);
  EXPECT_THROW(split_host_port("h:8x"), std::invalid_argument);
}

}  // namespace
}  // namespace ssoprobe::cli

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ftb/config.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = FTB_CLI_PATH;
const std::string kConfigs = FTB_CONFIG_DIR;
const std::string kGolden = FTB_GOLDEN_DIR;

int run_cli(const std::string& args) {
  std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string* diff = nullptr) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    if (!fs::exists(b / name)) {
      if (diff) *diff = name + " missing";
      return false;
    }
    if (slurp(a / name) != slurp(b / name)) {
      if (diff) *diff = name + " differs";
      return false;
    }
  }
  return true;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "ftb_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("equilibrium runs are byte-identical across reruns and thread counts") {
    fs::path a = fresh_dir("eq_a"), b = fresh_dir("eq_b"), c = fresh_dir("eq_c");
    std::string cfg = kConfigs + "/default.cfg";
    REQUIRE(run_cli("equilibrium --config " + cfg + " --out " + a.string() + " --threads 1") == 0);
    REQUIRE(run_cli("equilibrium --config " + cfg + " --out " + b.string() + " --threads 1") == 0);
    REQUIRE(run_cli("equilibrium --config " + cfg + " --out " + c.string() + " --threads 4") == 0);
    std::string diff;
    CHECK_MESSAGE(dirs_identical(a, b, &diff), diff);
    CHECK_MESSAGE(dirs_identical(a, c, &diff), diff);
  }

  TEST_CASE("equilibrium outputs match the committed golden run") {
    fs::path out = fresh_dir("eq_golden");
    std::string cfg = kConfigs + "/default.cfg";
    REQUIRE(run_cli("equilibrium --config " + cfg + " --out " + out.string()) == 0);
    fs::path golden = fs::path(kGolden) / "default";
    REQUIRE_MESSAGE(fs::exists(golden), "golden directory missing");
    std::string diff;
    CHECK_MESSAGE(dirs_identical(golden, out, &diff), diff);
  }

  TEST_CASE("symmetric scenario pools every type from the bottom") {
    fs::path out = fresh_dir("sym");
    REQUIRE(run_cli("equilibrium --config " + kConfigs + "/symmetric.cfg --out " + out.string()) ==
            0);
    auto cutoffs = slurp(out / "allocation_cutoffs.csv");
    CHECK(cutoffs.find("cutoff_low_type,5\n") != std::string::npos);
  }

  TEST_CASE("uniform market scenario reproduces the closed-form cutoffs") {
    fs::path out = fresh_dir("uniform2");
    REQUIRE(run_cli("equilibrium --config " + kConfigs + "/uniform2.cfg --out " + out.string()) ==
            0);
    auto cutoffs = slurp(out / "allocation_cutoffs.csv");
    CHECK(cutoffs.find("cutoff_low_type,0.1000000000") != std::string::npos);
    CHECK(cutoffs.find("cutoff_high_type,0.9000000000") != std::string::npos);
  }

  TEST_CASE("malformed configs exit with the validation code") {
    fs::path dir = fresh_dir("bad");
    fs::path bad = dir / "bad.cfg";
    {
      std::ofstream out(bad);
      out << R"({"economy": {"income": {"kind": "uniform", "lo": 5.0, "hi": 15.0},
                 "utility": {"kind": "log"}, "rate": -2.0,
                 "school_tech": {"kind": "log1p", "alpha": 0.3},
                 "school_weight": 0.08, "outside": {"pdv": -3.0},
                 "districts": [{"id": "A", "housing": {"kind": "uniform", "lo": 0.0, "hi": 1.0}},
                               {"id": "B", "housing": {"kind": "uniform", "lo": 0.0, "hi": 1.0}}]}})";
    }
    CHECK(run_cli("equilibrium --config " + bad.string() + " --out " + dir.string()) == 2);

    fs::path unknown = dir / "unknown.cfg";
    {
      std::ofstream out(unknown);
      out << R"({"economy": {"surprise": 1, "income": {"kind": "uniform", "lo": 5.0, "hi": 15.0},
                 "utility": {"kind": "log"}, "rate": 0.05,
                 "school_tech": {"kind": "log1p", "alpha": 0.3},
                 "school_weight": 0.08, "outside": {"pdv": -3.0},
                 "districts": [{"id": "A", "housing": {"kind": "uniform", "lo": 0.0, "hi": 1.0}},
                               {"id": "B", "housing": {"kind": "uniform", "lo": 0.0, "hi": 1.0}}]}})";
    }
    CHECK(run_cli("equilibrium --config " + unknown.string() + " --out " + dir.string()) == 2);
    CHECK(run_cli("equilibrium --config " + dir.string() + "/absent.cfg --out " + dir.string()) ==
          4);
  }

  TEST_CASE("panel simulation is deterministic and estimable") {
    fs::path a = fresh_dir("rdd_a"), b = fresh_dir("rdd_b");
    std::string cfg = kConfigs + "/rdd.cfg";
    REQUIRE(run_cli("rdd simulate --config " + cfg + " --out " + a.string()) == 0);
    REQUIRE(run_cli("rdd simulate --config " + cfg + " --out " + b.string()) == 0);
    std::string diff;
    CHECK_MESSAGE(dirs_identical(a, b, &diff), diff);

    fs::path est = fresh_dir("rdd_est");
    REQUIRE(run_cli("rdd estimate --config " + cfg + " --out " + est.string() + " --panel " +
                    (a / "panel.csv").string()) == 0);
    CHECK(fs::exists(est / "estimates.csv"));
    CHECK(fs::exists(est / "binned_scatter.csv"));
    // estimating twice from the same panel is also byte-stable
    fs::path est2 = fresh_dir("rdd_est2");
    REQUIRE(run_cli("rdd estimate --config " + cfg + " --out " + est2.string() + " --panel " +
                    (a / "panel.csv").string()) == 0);
    CHECK_MESSAGE(dirs_identical(est, est2, &diff), diff);
  }

  TEST_CASE("seed override changes the panel") {
    fs::path a = fresh_dir("rdd_s1"), b = fresh_dir("rdd_s2");
    std::string cfg = kConfigs + "/rdd.cfg";
    REQUIRE(run_cli("rdd simulate --config " + cfg + " --out " + a.string()) == 0);
    REQUIRE(run_cli("rdd simulate --config " + cfg + " --out " + b.string() + " --seed 999") == 0);
    CHECK(slurp(a / "panel.csv") != slurp(b / "panel.csv"));
  }

  TEST_CASE("config normalization is stable under round trips") {
    for (const char* name : {"default.cfg", "symmetric.cfg", "uniform2.cfg", "districts3.cfg",
                             "renters.cfg", "homog.cfg", "rdd.cfg"}) {
      std::string text = slurp(fs::path(kConfigs) / name);
      std::string once = ftb::normalize_config_text(text);
      std::string twice = ftb::normalize_config_text(once);
      CHECK(once == twice);
    }
  }
}

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "tvode/tvode.h"

namespace fs = std::filesystem;

namespace {

class Scratch {
 public:
  explicit Scratch(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("tvode_capi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSpec =
    R"({"seed":9,"noise_sd":0.01,"classes":[)"
    R"({"label":"MI","count":6,"leads":["ii","v2"],"b0":36,"phase_random":true,"amplitude_jitter":0.2},)"
    R"({"label":"HC","count":6,"leads":["ii","v2"],"b0":144,"phase_random":true,"amplitude_jitter":0.2}]})";

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strlen(tvode_version()) > 0);
  CHECK(std::string(tvode_status_name(TVODE_OK)) == "Ok");
  CHECK(std::string(tvode_status_name(TVODE_INVALID_CONFIG)) == "InvalidConfig");
  CHECK(std::string(tvode_status_name(TVODE_EMPTY_OUTPUT)) == "EmptyOutput");
  CHECK(std::string(tvode_status_name(TVODE_INTERNAL)) == "Internal");
  CHECK(std::string(tvode_status_name(static_cast<tvode_status>(57))) == "Internal");
}

TEST_CASE("configuration handle") {
  tvode_config* cfg = nullptr;
  REQUIRE(tvode_config_new(&cfg) == TVODE_OK);
  CHECK(tvode_config_set(cfg, "cv.k", "5") == TVODE_OK);
  CHECK(std::string(tvode_last_error()).empty());

  CHECK(tvode_config_set(cfg, "bogus", "1") == TVODE_INVALID_CONFIG);
  CHECK(std::string(tvode_last_error()).find("bogus") != std::string::npos);
  // A failed set leaves the configuration unchanged.
  CHECK(tvode_config_set(cfg, "svm.C", "1,x") == TVODE_INVALID_CONFIG);

  size_t needed = 0;
  CHECK(tvode_config_text(cfg, nullptr, 0, &needed) == TVODE_OK);
  REQUIRE(needed > 1);
  std::vector<char> buf(needed);
  CHECK(tvode_config_text(cfg, buf.data(), buf.size(), nullptr) == TVODE_OK);
  const std::string text(buf.data());
  CHECK(text.size() + 1 == needed);
  CHECK(text.find("cv.k=5\n") != std::string::npos);
  CHECK(text.find("svm.C=10\n") != std::string::npos);

  char small[8];
  CHECK(tvode_config_text(cfg, small, sizeof small, nullptr) == TVODE_OK);
  CHECK(std::strlen(small) == 7);

  CHECK(tvode_config_set(nullptr, "cv.k", "5") == TVODE_INVALID_ARGUMENT);
  CHECK(tvode_config_set(cfg, nullptr, "5") == TVODE_INVALID_ARGUMENT);
  CHECK(tvode_config_new(nullptr) == TVODE_INVALID_ARGUMENT);
  tvode_config_free(cfg);
  tvode_config_free(nullptr);

  Scratch dir("cfg");
  write(dir / "a.cfg", "estimator.window=0.1\n");
  tvode_config* loaded = nullptr;
  REQUIRE(tvode_config_load((dir / "a.cfg").c_str(), &loaded) == TVODE_OK);
  tvode_config_free(loaded);
  CHECK(tvode_config_load((dir / "none.cfg").c_str(), &loaded) == TVODE_IO_ERROR);
  write(dir / "b.cfg", "nope=1\n");
  CHECK(tvode_config_load((dir / "b.cfg").c_str(), &loaded) == TVODE_INVALID_CONFIG);
}

TEST_CASE("record handle over a synthesized corpus") {
  Scratch dir("rec");
  write(dir / "spec.json", kSpec);
  REQUIRE(tvode_synth((dir / "spec.json").c_str(), (dir / "data").c_str()) == TVODE_OK);

  tvode_record* rec = nullptr;
  REQUIRE(tvode_record_load((dir / "data/MI_000").c_str(), "MI", 0.0, &rec) == TVODE_OK);
  CHECK(tvode_record_fs(rec) == 1000.0);
  CHECK(tvode_record_lead_count(rec) == 2);
  CHECK(tvode_record_sample_count(rec) == 2001);
  CHECK(std::string(tvode_record_lead_name(rec, 1)) == "v2");
  CHECK(tvode_record_lead_samples(rec, 0) != nullptr);
  CHECK(tvode_record_lead_name(rec, 2) == nullptr);
  CHECK(tvode_record_lead_samples(rec, 2) == nullptr);
  tvode_record_free(rec);

  CHECK(tvode_record_lead_count(nullptr) == 0);
  CHECK(tvode_record_load((dir / "data/none").c_str(), nullptr, 0.0, &rec) == TVODE_IO_ERROR);
  CHECK(std::string(tvode_last_error()).size() > 0);
  write(dir / "bad.csv", "ii\n1\nx\n");
  CHECK(tvode_record_load((dir / "bad.csv").c_str(), nullptr, 500.0, &rec) == TVODE_NON_NUMERIC_CELL);
}

TEST_CASE("model train, predict, save and load") {
  const double rows[] = {0.0, 0.1, 0.2, 0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 5.0, 5.1, 5.2};
  const char* labels[] = {"HC", "HC", "HC", "MI", "MI", "MI"};
  tvode_config* cfg = nullptr;
  REQUIRE(tvode_config_new(&cfg) == TVODE_OK);
  REQUIRE(tvode_config_set(cfg, "svm.kernel", "linear") == TVODE_OK);

  tvode_model* model = nullptr;
  REQUIRE(tvode_model_train(rows, 6, 2, labels, cfg, &model) == TVODE_OK);
  CHECK(tvode_model_feature_count(model) == 2);
  char label[16];
  double decision = 0.0;
  const double hc[] = {0.1, 0.1}, mi[] = {5.1, 5.1};
  REQUIRE(tvode_model_predict(model, hc, 2, label, sizeof label, &decision) == TVODE_OK);
  CHECK(std::string(label) == "HC");
  REQUIRE(tvode_model_predict(model, mi, 2, label, sizeof label, nullptr) == TVODE_OK);
  CHECK(std::string(label) == "MI");
  CHECK(tvode_model_predict(model, mi, 3, label, sizeof label, nullptr) == TVODE_DIMENSION_MISMATCH);

  Scratch dir("model");
  REQUIRE(tvode_model_save(model, (dir / "m.json").c_str()) == TVODE_OK);
  tvode_model* back = nullptr;
  REQUIRE(tvode_model_load((dir / "m.json").c_str(), &back) == TVODE_OK);
  double d2 = 0.0;
  REQUIRE(tvode_model_predict(back, hc, 2, label, sizeof label, &d2) == TVODE_OK);
  CHECK(d2 == decision);
  tvode_model_free(back);
  tvode_model_free(model);

  write(dir / "junk.json", "{}");
  CHECK(tvode_model_load((dir / "junk.json").c_str(), &back) == TVODE_MODEL_FORMAT);

  const char* same[] = {"HC", "HC", "HC", "HC", "HC", "HC"};
  CHECK(tvode_model_train(rows, 6, 2, same, nullptr, &model) == TVODE_SINGLE_CLASS);
  CHECK(tvode_model_train(rows, 0, 2, labels, nullptr, &model) == TVODE_TOO_FEW_ROWS);
  CHECK(tvode_model_train(nullptr, 6, 2, labels, nullptr, &model) == TVODE_INVALID_ARGUMENT);
  tvode_config_free(cfg);
}

TEST_CASE("workflow commands") {
  Scratch dir("flow");
  write(dir / "spec.json", kSpec);
  REQUIRE(tvode_synth((dir / "spec.json").c_str(), (dir / "data").c_str()) == TVODE_OK);

  tvode_config* cfg = nullptr;
  REQUIRE(tvode_config_new(&cfg) == TVODE_OK);
  REQUIRE(tvode_config_set(cfg, "leads", "all") == TVODE_OK);
  REQUIRE(tvode_config_set(cfg, "cv.k", "3") == TVODE_OK);
  REQUIRE(tvode_featurize((dir / "data/manifest.csv").c_str(), cfg, (dir / "feat").c_str(), nullptr) == TVODE_OK);
  CHECK(read(dir / "feat/features.csv").rfind("record_id,label,lead,", 0) == 0);

  REQUIRE(tvode_evaluate((dir / "feat/features.csv").c_str(), cfg, "binary", nullptr, (dir / "rep").c_str(),
                         nullptr) == TVODE_OK);
  const auto report = read(dir / "rep/report.csv");
  CHECK(report.find("\nII,") != std::string::npos);
  CHECK(report.find("\nV2,") != std::string::npos);
  CHECK(report.find("II, V2 combined") != std::string::npos);

  CHECK(tvode_evaluate((dir / "feat/features.csv").c_str(), cfg, "ternary", nullptr, (dir / "rep").c_str(),
                       nullptr) == TVODE_INVALID_ARGUMENT);
  CHECK(tvode_evaluate((dir / "feat/features.csv").c_str(), cfg, nullptr, "v9", (dir / "rep").c_str(), nullptr) ==
        TVODE_UNKNOWN_LEAD_SET);

  double rmse = -1.0;
  REQUIRE(tvode_compare_spline((dir / "data/HC_000").c_str(), "ii", nullptr, (dir / "cmp").c_str(), &rmse,
                               nullptr) == TVODE_OK);
  CHECK(rmse >= 0.0);
  CHECK(read(dir / "cmp/compare.csv").rfind("t,y,x_ode_recon,x_spline\n", 0) == 0);

  REQUIRE(tvode_config_set(cfg, "leads", "v6") == TVODE_OK);
  CHECK(tvode_featurize((dir / "data/manifest.csv").c_str(), cfg, (dir / "none").c_str(), nullptr) ==
        TVODE_EMPTY_OUTPUT);
  tvode_config_free(cfg);

  CHECK(tvode_fetch("ftp://example.invalid/x", nullptr, (dir / "x").c_str()) == TVODE_INVALID_ARGUMENT);
  CHECK(tvode_synth((dir / "missing.json").c_str(), (dir / "o").c_str()) == TVODE_IO_ERROR);
}

TEST_CASE("the last error is per thread") {
  tvode_config* cfg = nullptr;
  REQUIRE(tvode_config_new(&cfg) == TVODE_OK);
  CHECK(tvode_config_set(cfg, "bogus", "1") == TVODE_INVALID_CONFIG);
  std::string other = "unset";
  std::thread([&] { other = tvode_last_error(); }).join();
  CHECK(other.empty());
  CHECK(std::string(tvode_last_error()).find("bogus") != std::string::npos);
  tvode_config_free(cfg);
}

#include "support/doctest.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fgb/cli/commands.hpp"
#include "fgb/cli/config.hpp"
#include "fgb/clf/metrics.hpp"
#include "fgb/csv.hpp"
#include "fgb/error.hpp"
#include "support/temp_dir.hpp"

using namespace fgb;
using namespace fgb::cli;
using fgb::testing::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome fgb_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto path = dir / "run.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

json toy_config() {
    return json::parse(R"({
      "pipeline": {"preprocess": false, "test_per_class": 8, "toy": {"count": 60, "size": 32, "seed": 3}},
      "gan": {"variants": ["DCGAN"], "image_size": 32, "width": 8, "latent_dim": 16,
              "train": {"epochs": 1, "batch_size": 16}},
      "classifier": {"spec": {"pretrained": false, "epochs": 1, "input_size": 32, "width": 0.125, "batch_size": 16},
                     "mixing": {"synth_source": "gan:DCGAN"},
                     "p_grid": [0, 1], "seeds": [1, 2], "archs": ["RESNET18", "SQUEEZENET"]},
      "fid": {"native_dim": 16, "native_input": 32}
    })");
}

// FGB_OUT pointed at a scratch directory for the test's lifetime.
struct OutRoot {
    TempDir dir{"fgb-cli"};
    OutRoot() { ::setenv("FGB_OUT", dir.path().c_str(), 1); }
    ~OutRoot() { ::unsetenv("FGB_OUT"); }
    fs::path run_dir(const fs::path& config) const { return dir.path() / RunConfig::load(config).hash(); }
};

}  // namespace

TEST_CASE("config: unknown keys and mistyped values are rejected by name") {
    const auto err = [](const json& j) {
        try {
            RunConfig::from_json(j);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ConfigError);
            return std::string(e.what());
        }
        FAIL("expected ConfigError");
        return std::string();
    };
    CHECK(err(json{{"gan", {{"train", {{"lrr", 1}}}}}}).find("'gan.train.lrr'") != std::string::npos);
    CHECK(err(json{{"stlye", json::object()}}).find("'stlye'") != std::string::npos);
    CHECK(err(json{{"classifier", {{"seeds", "1"}}}}).find("'classifier.seeds'") != std::string::npos);
    CHECK(err(json{{"pipeline", {{"datasets", {{{"kind", "TOY"}, {"root", "x"}, {"oops", 1}}}}}}})
              .find("'pipeline.datasets[0].oops'") != std::string::npos);
    CHECK(err(json{{"gan", {{"variants", {"DCGAN", "NOPE"}}}}}).find("'gan'") != std::string::npos);
    CHECK(err(json{{"classifier", {{"p_grid", {0.5, 1.5}}}}}).find("p_grid") != std::string::npos);
    CHECK(err(json::array()).find("object") != std::string::npos);
}

TEST_CASE("config: defaults, overrides, round trip and hash") {
    const auto defaults = RunConfig::from_json(json::object());
    CHECK(defaults.classifier.spec.lr == 1e-4);
    CHECK(defaults.classifier.spec.momentum == 0.9);
    CHECK(defaults.style.config.batch_size == 12);

    json j = toy_config();
    apply_override(j, "gan.train.epochs=3");
    apply_override(j, "study.host=0.0.0.0");
    apply_override(j, "fid.set_a=/data/a");
    const auto c = RunConfig::from_json(j);
    CHECK(c.gan.train.epochs == 3);
    CHECK(c.study.host == "0.0.0.0");
    CHECK(c.fid.set_a == "/data/a");
    CHECK_THROWS_AS(apply_override(j, "novalue"), Error);

    const auto back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.hash() == c.hash());
    CHECK(c.hash().size() == 16);
    CHECK(c.hash() != RunConfig::from_json(toy_config()).hash());

    // Published FNV-1a 64 test vectors.
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("cli: exit codes") {
    TempDir dir;
    OutRoot root;
    CHECK(fgb_run({}).code == kExitConfig);
    CHECK(fgb_run({"bogus"}).code == kExitConfig);
    CHECK(fgb_run({"prep", (dir / "missing.json").string()}).code == kExitConfig);
    const auto cfg = write_config(dir.path(), toy_config());
    const auto bad = fgb_run({"prep", cfg.string(), "--set", "pipeline.tset_per_class=3"});
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("pipeline.tset_per_class") != std::string::npos);
    const auto runtime = fgb_run({"gen", cfg.string(), "--set", "gen.checkpoint=" + (dir / "none.pt").string()});
    CHECK(runtime.code == kExitRuntime);
    CHECK(runtime.err.find("ModelLoadError") != std::string::npos);
    CHECK(fgb_run({"train-gan", cfg.string()}).code == kExitRuntime);  // no manifest yet
}

TEST_CASE("cli: prep is deterministic and restartable") {
    TempDir dir;
    OutRoot root;
    const auto cfg = write_config(dir.path(), toy_config());
    const auto out = root.run_dir(cfg) / "prep";

    REQUIRE(fgb_run({"prep", cfg.string()}).code == kExitOk);
    const auto first = slurp(out / "manifest.csv");
    CHECK_FALSE(first.empty());
    CHECK(fs::exists(out / "DONE"));
    CHECK(RunConfig::from_json(json::parse(slurp(out / "config.json"))).to_json() ==
          RunConfig::load(cfg).to_json());

    const auto again = fgb_run({"prep", cfg.string()});
    CHECK(again.code == kExitOk);
    CHECK(again.out.find("up to date") != std::string::npos);

    const auto forced = fgb_run({"prep", cfg.string(), "--force"});
    CHECK(forced.code == kExitOk);
    CHECK(forced.out.find("up to date") == std::string::npos);
    CHECK(fnv1a(slurp(out / "manifest.csv")) == fnv1a(first));
}

TEST_CASE("cli: fid of a directory against itself") {
    TempDir dir;
    OutRoot root;
    auto j = toy_config();
    REQUIRE(fgb_run({"prep", write_config(dir.path(), j).string()}).code == kExitOk);
    const auto toy = root.run_dir(dir / "run.json") / "prep" / "toy";
    j["fid"]["set_a"] = toy.string();
    j["fid"]["set_b"] = toy.string();
    const auto cfg = write_config(dir.path(), j);
    const auto r = fgb_run({"fid", cfg.string()});
    REQUIRE(r.code == kExitOk);
    const auto result = json::parse(slurp(root.run_dir(cfg) / "fid" / "fid.json"));
    CHECK(result.at("value").get<double>() < 1e-3);
}

TEST_CASE("cli: sweep over {0,1} writes 2 x seeds rows per architecture") {
    TempDir dir;
    OutRoot root;
    const auto cfg = write_config(dir.path(), toy_config());
    REQUIRE(fgb_run({"prep", cfg.string()}).code == kExitOk);
    REQUIRE(fgb_run({"train-gan", cfg.string()}).code == kExitOk);
    const auto r = fgb_run({"sweep", cfg.string()});
    REQUIRE(r.code == kExitOk);
    const auto table = csv::read(root.run_dir(cfg) / "sweep" / "sweep.csv");
    CHECK((table.header == csv::Row{"arch", "p", "seed", "acc", "sensitivity", "specificity"}));
    CHECK(table.rows.size() == 8);
    std::map<std::string, int> per_arch;
    for (const auto& row : table.rows) ++per_arch[row[0]];
    CHECK(per_arch["RESNET18"] == 4);
    CHECK(per_arch["SQUEEZENET"] == 4);
    CHECK(csv::read(root.run_dir(cfg) / "sweep" / "best.csv").rows.size() == 2);
}

TEST_CASE("cli: report renders result tables from stored results") {
    TempDir dir;
    OutRoot root;
    std::ofstream(dir / "fid_style.json") << json{{"value", 166.17}}.dump();
    std::ofstream(dir / "fid_ebgan.json") << json{{"value", 380.18}}.dump();
    std::ofstream(dir / "resnet.json") << json(clf::ClassifierMetrics::from_confusion({{{90, 15}, {21, 84}}})).dump();
    // Reader study report: 4 of 10 synthetic and 7 of 10 real images recognized.
    std::ofstream(dir / "reader.json") << json{{"kind", "TURING_AMD"}, {"acc", 0.55}, {"sensitivity", 0.4},
                                               {"specificity", 0.7}}.dump();
    std::ofstream(dir / "paired.json") << json{
        {"human", {{"kind", "DIAGNOSIS"}, {"acc", 0.75}, {"sensitivity", 1.0}, {"specificity", 0.5}}},
        {"model", {{"kind", "DIAGNOSIS"}, {"acc", 0.85}, {"sensitivity", 0.9}, {"specificity", 0.8}}}}.dump();
    json j = {{"report",
               {{"fid", {{{"name", "StyleGAN2-ADA"}, {"path", (dir / "fid_style.json").string()}},
                         {{"name", "EBGAN"}, {"path", (dir / "fid_ebgan.json").string()}}}},
                {"classifiers", {{{"name", "ResNet18"}, {"path", (dir / "resnet.json").string()}}}},
                {"studies", {{{"name", "clinician2"}, {"path", (dir / "reader.json").string()}},
                             {{"name", "clinician2"}, {"path", (dir / "paired.json").string()}}}}}}};
    const auto cfg = write_config(dir.path(), j);
    REQUIRE(fgb_run({"report", cfg.string()}).code == kExitOk);
    const auto out = root.run_dir(cfg) / "report";

    const auto t1 = csv::read(out / "fid.csv");
    CHECK((t1.rows == std::vector<csv::Row>{{"StyleGAN2-ADA", "166.17"}, {"EBGAN", "380.18"}}));
    const auto t4 = csv::read(out / "classifier.csv");
    CHECK((t4.rows[0] == csv::Row{"ResNet18", "AMD", "0.81", "0.86", "0.83", "0.83"}));
    const auto t2 = csv::read(out / "turing.csv");
    CHECK((t2.rows == std::vector<csv::Row>{{"clinician2", "TURING_AMD", "0.55", "0.40", "0.70"}}));
    const auto t5 = csv::read(out / "comparison.csv");
    REQUIRE(t5.rows.size() == 2);
    CHECK((t5.rows[1] == csv::Row{"clinician2/model", "DIAGNOSIS", "0.85", "0.90", "0.80"}));
}

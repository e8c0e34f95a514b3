#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecd/io.hpp"

namespace fs = std::filesystem;
using ecd::json;

namespace {

const std::string kBin = ECD_EVAL_BIN;
const std::string kFix = ECD_FIXTURES;

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ecd_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const auto dir = fs::temp_directory_path() / "ecd_cli_io";
    fs::create_directories(dir);
    const auto out = dir / ("out" + std::to_string(counter));
    const auto err = dir / ("err" + std::to_string(counter++));
    const std::string cmd = env + " " + kBin + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string example_args() {
    const auto d = kFix + "/worked_example/";
    return d + "context.txt " + d + "generated.txt --context-annotations " + d +
           "context.annotations.jsonl --generated-annotations " + d + "generated.annotations.jsonl";
}

std::string cli(const std::string& name) { return kFix + "/cli/" + name; }

}  // namespace

TEST_CASE("score: identical files") {
    const auto r = run("score " + cli("sentences/a.txt") + " " + cli("sentences/a.txt"));
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("total").get<double>() == 0.0);
}

TEST_CASE("score: worked example fixture") {
    const auto r = run("score " + example_args() + " --window 2 --sigma 0.5");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("total").get<double>() == 5.5);
    CHECK(j.at("me_penalty").get<double>() == 2.25);
    CHECK(j.at("ae_penalty").get<double>() == 2.25);
}

TEST_CASE("score: error exits") {
    CHECK(run("score nope.txt also_nope.txt").code == 2);
    const auto none = run("score " + kFix + "/worked_example/context.txt " + cli("sentences/b.txt"));
    CHECK(none.code == 3);
    CHECK(none.err.find("no common entities") != std::string::npos);
    CHECK(run("score " + example_args() + " --sigma-mode fixed").code == 2);
    CHECK(run("score " + example_args() + " --window 0").code == 2);
}

TEST_CASE("help and unknown flags") {
    CHECK(run("--help").code == 0);
    for (const char* sub : {"score", "batch-score", "profile", "build-context", "corrupt", "pairs", "train-toy", "alpha",
                            "drift"}) {
        CHECK_MESSAGE(run(std::string(sub) + " --help").code == 0, sub);
        CHECK_MESSAGE(run(std::string(sub) + " --no-such-flag").code == 2, sub);
    }
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("config file, flag precedence and environment fallback") {
    const auto dir = scratch("config");
    ecd::write_text_file(dir / "run.toml", "window = 2\nsigma = 0.5\n");
    const auto from_file = run("--config " + (dir / "run.toml").string() + " score " + example_args());
    REQUIRE(from_file.code == 0);
    CHECK(json::parse(from_file.out).at("total").get<double>() == 5.5);

    const auto overridden = run("--config " + (dir / "run.toml").string() + " score " + example_args() + " --sigma 1");
    REQUIRE(overridden.code == 0);
    CHECK(json::parse(overridden.out).at("total").get<double>() == 1.0 + 4.5 + 4.5);

    const auto from_env = run("score " + example_args(), "ECD_EVAL_CONFIG=" + (dir / "run.toml").string());
    REQUIRE(from_env.code == 0);
    CHECK(json::parse(from_env.out).at("total").get<double>() == 5.5);

    CHECK(run("--config " + (dir / "missing.toml").string() + " score " + example_args()).code == 2);
}

TEST_CASE("every output directory holds the resolved config") {
    const auto dir = scratch("snapshot");
    const auto r = run("score " + example_args() + " --window 2 --sigma 0.5 --out " + dir.string());
    REQUIRE(r.code == 0);
    const auto snap = slurp(dir / "run_config.toml");
    CHECK(snap.find("window=2") != std::string::npos);
    CHECK(snap.find("sigma=0.5") != std::string::npos);
    CHECK(snap.find("score.context=") != std::string::npos);
    CHECK(snap.find("profile.") == std::string::npos);
    CHECK(json::parse(slurp(dir / "breakdown.json")).at("total").get<double>() == 5.5);
}

TEST_CASE("batch-score") {
    const auto dir = scratch("batch");
    const auto r = run("batch-score " + cli("manifest.jsonl") + " --corpus " + cli("corpus.jsonl") +
                       " --jobs 4 --out " + dir.string());
    REQUIRE(r.code == 0);
    std::istringstream lines(slurp(dir / "scores.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const auto j = json::parse(line);
        CHECK(j.at("context").get<std::string>() == "ctx" + std::to_string(++n));
        CHECK(j.at("breakdown").at("total").get<double>() >= 0.0);
    }
    CHECK(n == 6);
    CHECK(fs::exists(dir / "run_config.toml"));
    CHECK(run("batch-score " + cli("manifest.jsonl") + " --corpus " + cli("nope.jsonl")).code == 2);
}

TEST_CASE("profile") {
    const auto dir = scratch("profile");
    const auto r = run("profile " + cli("manifest.jsonl") + " --corpus " + cli("corpus.jsonl") + " --out " + dir.string());
    REQUIRE(r.code == 0);
    for (const char* f : {"profile.csv", "profile.svg", "peaks.json", "run_config.toml"}) CHECK(fs::exists(dir / f));
    const auto peaks = json::parse(slurp(dir / "peaks.json"));
    CHECK(peaks.at("green_peak").get<double>() > 0.0);
    CHECK(peaks.at("blue_peak").get<double>() < 0.0);
    CHECK(slurp(dir / "profile.svg").find("<svg") != std::string::npos);

    const auto self = run("profile " + cli("self_manifest.jsonl") + " --corpus " + cli("corpus.jsonl") + " --out " +
                          dir.string());
    CHECK(self.code == 4);
    const auto self_bw = run("profile " + cli("self_manifest.jsonl") + " --corpus " + cli("corpus.jsonl") +
                             " --bandwidth 0.1 --out " + dir.string());
    REQUIRE(self_bw.code == 0);
    const auto sp = json::parse(slurp(dir / "peaks.json"));
    CHECK(std::abs(sp.at("green_peak").get<double>()) <= 0.1);
    CHECK(std::abs(sp.at("blue_peak").get<double>()) <= 0.1);

    CHECK(run("profile " + cli("empty_manifest.jsonl") + " --corpus " + cli("corpus.jsonl") + " --out " + dir.string())
              .code == 2);
    CHECK(run("profile " + cli("manifest.jsonl") + " --corpus " + cli("corpus.jsonl")).code == 2);  // no --out
}

TEST_CASE("build-context") {
    const auto dir = scratch("context");
    const auto r = run("build-context " + cli("sentences") + " --query \"interest rates and inflation\" --out " +
                       dir.string());
    REQUIRE(r.code == 0);
    const auto side = json::parse(slurp(dir / "context.json"));
    CHECK(side.at("candidate_count").get<int>() == 10);
    CHECK(side.at("sentences").size() == 3);
    CHECK(slurp(dir / "context.txt").find("interest rates") != std::string::npos);
    CHECK(run("build-context " + cli("sentences") + " --query q --fraction 0").code == 2);
    CHECK(run("build-context " + cli("nowhere") + " --query q").code == 2);
}

TEST_CASE("corrupt") {
    const auto dir = scratch("corrupt");
    const auto d = kFix + "/worked_example/";
    const auto r = run("corrupt " + d + "context.txt --annotations " + d +
                       "context.annotations.jsonl --replace india=Peru --sigma 1 --window 2 --out " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "corrupted.txt").find("Peru voted early") != std::string::npos);
    const auto rep = json::parse(slurp(dir / "corruption.json"));
    CHECK(rep.at("ecd").at("total").get<double>() > 0.0);
    CHECK(run("corrupt " + d + "context.txt --annotations " + d + "context.annotations.jsonl --replace chile=Peru").code ==
          3);
    CHECK(run("corrupt " + d + "context.txt --replace nonsense").code == 2);
}

TEST_CASE("pairs and train-toy") {
    const auto dir = scratch("pairs");
    const auto r = run("pairs " + cli("prompts.jsonl") + " --zero-common sentinel --sigma 0.5 --out " + dir.string());
    REQUIRE(r.code == 0);
    std::istringstream lines(slurp(dir / "pairs.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const auto j = json::parse(line);
        CHECK(j.at("ecd_chosen").get<double>() < j.at("ecd_rejected").get<double>());
        ++n;
    }
    CHECK(n == 3);
    CHECK(json::parse(slurp(dir / "skipped.json")).size() == 1);

    const auto t = run("train-toy " + cli("prompts.jsonl") + " --zero-common sentinel --sigma 0.5 --epochs 4 --out " +
                       dir.string());
    REQUIRE(t.code == 0);
    const auto csv = slurp(dir / "metrics.csv");
    CHECK(csv.rfind("epoch,loss,mean_argmax_ecd\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(json::parse(slurp(dir / "policy.json")).at("weights").size() == 3);
    CHECK(run("train-toy " + cli("prompts.jsonl") + " --zero-common sentinel --epochs 0").code == 2);
}

TEST_CASE("alpha and drift") {
    const auto dir = scratch("alpha");
    const auto a = run("alpha " + cli("layers/manifest.json") + " --jobs 2 --out " + dir.string());
    REQUIRE(a.code == 0);
    const auto stats = json::parse(slurp(dir / "stats.json"));
    CHECK(stats.at("per_layer").size() == 3);

    auto shifted = stats;
    shifted["weighted_alpha"] = stats.at("weighted_alpha").get<double>() * 1.5;
    ecd::write_text_file(dir / "after.json", shifted.dump());
    const auto fail = run("drift " + (dir / "stats.json").string() + " " + (dir / "after.json").string());
    REQUIRE(fail.code == 0);
    CHECK_FALSE(json::parse(fail.out).at("pass").get<bool>());
    const auto same = run("drift " + (dir / "stats.json").string() + " " + (dir / "stats.json").string());
    CHECK(json::parse(same.out).at("pass").get<bool>());

    ecd::write_text_file(dir / "garbage.json", "{not json");
    CHECK(run("drift " + (dir / "stats.json").string() + " " + (dir / "garbage.json").string()).code == 2);
    CHECK(run("alpha " + cli("nothing.json")).code == 2);
}

TEST_CASE("batch-score handles a 200-pair manifest quickly") {
    const auto dir = scratch("large");
    const std::vector<std::string> names{"Alpha", "Beta Corp", "Gamma", "Delta Ray", "Epsilon", "Zeta"};
    std::string corpus, manifest;
    for (int i = 0; i < 200; ++i) {
        const auto& a = names[static_cast<std::size_t>(i) % names.size()];
        const auto& b = names[static_cast<std::size_t>(i + 1) % names.size()];
        const auto& c = names[static_cast<std::size_t>(i + 2) % names.size()];
        corpus += json{{"id", "c" + std::to_string(i)}, {"text", "we saw " + a + " meet " + b + " in the hall today."}}.dump() + "\n";
        corpus += json{{"id", "g" + std::to_string(i)}, {"text", "later " + a + " told " + c + " about the hall."}}.dump() + "\n";
        manifest += json{{"context", "c" + std::to_string(i)}, {"generated", "g" + std::to_string(i)}, {"scenario", "web_context"}}.dump() + "\n";
    }
    ecd::write_text_file(dir / "corpus.jsonl", corpus);
    ecd::write_text_file(dir / "manifest.jsonl", manifest);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run("batch-score " + (dir / "manifest.jsonl").string() + " --corpus " + (dir / "corpus.jsonl").string() +
                       " --jobs 4 --out " + (dir / "out").string());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(r.code == 0);
    const auto scores = slurp(dir / "out" / "scores.jsonl");
    CHECK(std::count(scores.begin(), scores.end(), '\n') == 200);
    CHECK(secs < 10.0);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "foldsimplex/cli.hpp"

using namespace foldsimplex;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string data_dir = FOLDSIMPLEX_DATA_DIR;
const std::string arctic = data_dir + "/arctic_lake.csv";
const std::string sigma1 = data_dir + "/sigma1.csv";

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "foldsimplex");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("foldsimplex-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

bool snake_case_keys(const json& j) {
    static const std::regex pattern("^[a-z][a-z0-9_]*$");
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (!std::regex_match(key, pattern) || !snake_case_keys(value)) {
                return false;
            }
        }
    } else if (j.is_array()) {
        for (const auto& value : j) {
            if (!snake_case_keys(value)) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

TEST_CASE("fit reports alpha, parameters, means and profile") {
    const Run r = run({"fit", arctic, "--normalize"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["alpha"].get<double>() == doctest::Approx(0.362).epsilon(0.01 / 0.362));
    CHECK(j["frechet_mean"].size() == 3);
    CHECK(j["profile"].size() > 41);
    CHECK(j["sigma"].size() == 2);
    CHECK(j["converged"].get<bool>());
    CHECK(snake_case_keys(j));
    CHECK(j["manifest"]["library_version"] == library_version);
    CHECK(j["manifest"]["input_digest"][0]["sha256"] == file_sha256(arctic));

    const json dropped = json::parse(run({"fit", arctic, "--normalize", "--drop-rows", "7,14"}).out);
    CHECK(dropped["alpha"].get<double>() == doctest::Approx(0.443).epsilon(0.01 / 0.443));
    CHECK(dropped["n"] == 37);

    const json logistic = json::parse(run({"fit", arctic, "--normalize", "--alpha", "0"}).out);
    CHECK(logistic["alpha"] == 0.0);
    CHECK(logistic["p"] == 1.0);
    CHECK(logistic["log_likelihood"] == logistic["log_likelihood_alpha0"]);

    const json pca = json::parse(run({"fit", arctic, "--normalize", "--pca", "1"}).out);
    CHECK(pca["pca"]["curves"][0]["points"].size() == 61);
}

TEST_CASE("input errors map to distinct exit codes") {
    TempDir tmp;
    write(tmp.file("zero.csv"), "a,b,c\n0.5,0.5,0\n");
    Run r = run({"fit", tmp.file("zero.csv")});
    CHECK(r.code == exit_code(ErrorKind::zero_component));
    CHECK(r.err.find("not supported") != std::string::npos);

    r = run({"fit", arctic});
    CHECK(r.code == exit_code(ErrorKind::parse));
    CHECK(r.err.find("--normalize") != std::string::npos);

    write(tmp.file("bad.csv"), "a,b\n0.5,0.5\n0.5,abc\n");
    r = run({"fit", tmp.file("bad.csv")});
    CHECK(r.code == exit_code(ErrorKind::parse));
    CHECK(r.err.find("line 3, column 2") != std::string::npos);

    CHECK(run({"fit", tmp.file("missing.csv")}).code == exit_code(ErrorKind::io));
    CHECK(run({"fit", arctic, "--normalize", "--drop-rows", "99"}).code == exit_code(ErrorKind::invalid_argument));
    CHECK(run({"fit", "--bogus"}).code == exit_usage);
    CHECK(run({}).code == exit_usage);

    write(tmp.file("notspd.csv"), "1,2\n2,1\n");
    CHECK(run({"sample", "--alpha", "0.5", "--mu", "0,0", "--sigma", tmp.file("notspd.csv")}).code ==
          exit_code(ErrorKind::not_positive_definite));

    std::vector<int> codes;
    for (int k = 0; k <= static_cast<int>(ErrorKind::io); ++k) {
        codes.push_back(exit_code(static_cast<ErrorKind>(k)));
    }
    std::sort(codes.begin(), codes.end());
    CHECK(std::unique(codes.begin(), codes.end()) == codes.end());
    CHECK(codes.front() > exit_usage);
}

TEST_CASE("sample writes reproducible files and a manifest") {
    TempDir tmp;
    const std::vector<std::string> base{"sample", "--alpha", "0.5", "--mu", "0.561,0.547", "--sigma", sigma1,
                                        "-n", "50", "--seed", "9"};
    auto args = base;
    args.insert(args.end(), {"-o", tmp.file("a.csv")});
    REQUIRE(run(args).code == 0);
    args = base;
    args.insert(args.end(), {"-o", tmp.file("b.csv")});
    REQUIRE(run(args).code == 0);
    CHECK(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));
    CHECK(std::count(std::istreambuf_iterator<char>(std::ifstream(tmp.file("a.csv")).rdbuf()), {}, '\n') == 51);

    const json manifest = json::parse(slurp(tmp.file("a.csv.manifest.json")));
    CHECK(manifest["command"] == "sample");
    CHECK(manifest["seed"] == 9);
    CHECK(manifest["parameters"]["n"] == "50");
    CHECK(snake_case_keys(manifest["parameters"]));

    // The recorded arguments reproduce the file.
    std::vector<std::string> again = manifest["arguments"].get<std::vector<std::string>>();
    for (auto& a : again) {
        if (a == tmp.file("a.csv")) {
            a = tmp.file("c.csv");
        }
    }
    REQUIRE(run(again).code == 0);
    CHECK(slurp(tmp.file("c.csv")) == slurp(tmp.file("a.csv")));

    for (const auto& entry : fs::directory_iterator(tmp.path)) {
        CHECK(entry.path().string().find(".tmp.") == std::string::npos);
    }

    const Run empty = run({"sample", "--alpha", "0.5", "--mu", "0.561,0.547", "--sigma", sigma1, "-n", "0"});
    CHECK(empty.code == 0);
    CHECK(empty.out == "x1,x2,x3\n");
}

TEST_CASE("sampled data refit recovers alpha") {
    TempDir tmp;
    write(tmp.file("sigma.csv"),
          "0.298,-0.916,0.004,-0.010\n-0.916,3.046,0.000,0.014\n0.004,0.000,0.074,-0.094\n"
          "-0.010,0.014,-0.094,0.122\n");
    REQUIRE(run({"sample", "--alpha", "0.5", "--mu", "-0.566,-0.979,-0.648,-0.651", "--sigma", tmp.file("sigma.csv"),
                 "-n", "20000", "--seed", "3", "-o", tmp.file("draws.csv")})
                .code == 0);
    const json fit = json::parse(run({"fit", tmp.file("draws.csv")}).out);
    CHECK(fit["alpha"].get<double>() == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("outside, contour, test, ci and study commands") {
    TempDir tmp;
    const json outside = json::parse(
        run({"outside", "--alpha", "1", "--mu", "0.561,0.547", "--sigma", sigma1, "--draws", "1000000"}).out);
    CHECK(outside["total"].get<double>() == doctest::Approx(0.15).epsilon(0.01 / 0.15));
    CHECK(outside["per_component"].size() == 3);

    REQUIRE(run({"contour", "--alpha", "1", "--mu", "0.561,0.547", "--sigma", sigma1, "--resolution", "50", "-o",
                 tmp.file("grid.csv")})
                .code == 0);
    const std::string grid = slurp(tmp.file("grid.csv"));
    CHECK(std::count(grid.begin(), grid.end(), '\n') == 1 + 51 * 52 / 2);
    const json summary = json::parse(slurp(tmp.file("grid.csv.manifest.json")))["summary"];
    CHECK(summary["modes"] == 1);

    const json test = json::parse(run({"test", arctic, "--normalize", "--B", "19"}).out);
    const double k = test["p_value"].get<double>() * 20.0;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
    CHECK(test["alpha_boot"].size() == 19);

    const json ci = json::parse(run({"ci", arctic, "--normalize", "--B", "199", "--seed", "4"}).out);
    CHECK(ci["lower"].get<double>() < ci["alpha_hat"].get<double>());
    CHECK(ci["upper"].get<double>() > ci["alpha_hat"].get<double>());
    const json curv = json::parse(run({"ci", arctic, "--normalize", "--method", "curvature"}).out);
    CHECK(curv["se"].get<double>() > 0.0);

    write(tmp.file("base.csv"), "0.5,0.25\n0.25,0.35\n");
    const Run study = run({"study", "--alphas", "1", "--kappas", "1", "--ns", "100,200", "--reps", "3", "--mu",
                           "0.561,0.547", "--sigma", tmp.file("base.csv"), "--truth-draws", "20000", "-o",
                           tmp.file("study.csv")});
    REQUIRE(study.code == 0);
    const std::string csv = slurp(tmp.file("study.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(run({"study"}).code == exit_code(ErrorKind::invalid_argument));
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

std::string work_dir() {
    static const auto dir = fs::temp_directory_path() / "ice_cli_tests";
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunResult run_cli(const std::string& args) {
    static int call = 0;
    const std::string capture = work_dir() + "/capture_" + std::to_string(call++) + ".txt";
    const std::string cmd = std::string(ICE_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = slurp(capture);
    return result;
}

std::string blob_csv() {
    const auto path = work_dir() + "/blobs.csv";
    std::ofstream out(path);
    out << "x,y,cls\n";
    for (int i = 0; i < 10; ++i) out << i << "," << i % 3 << ",a\n";
    for (int i = 0; i < 10; ++i) out << 100 + i << "," << i % 3 << ",b\n";
    return path;
}

std::string perfect_bases() {
    const auto path = work_dir() + "/perfect_bases.csv";
    std::ofstream out(path);
    out << "#ice-ensemble c=2 n=20\n";
    for (int i = 0; i < 10; ++i) out << "0,0\n";
    for (int i = 0; i < 10; ++i) out << "1,1\n";
    return path;
}

} // namespace

TEST_CASE("gen-bases is byte-deterministic and writes its sidecar") {
    const auto data = blob_csv();
    const auto out_a = work_dir() + "/bases_a.csv";
    const auto out_b = work_dir() + "/bases_b.csv";
    const std::string flags = "gen-bases --data " + data +
                              " --label-col cls --seed 42 --out ";
    REQUIRE(run_cli(flags + out_a).exit_code == 0);
    REQUIRE(run_cli(flags + out_b).exit_code == 0);
    CHECK(slurp(out_a) == slurp(out_b));
    CHECK(slurp(out_a).rfind("#ice-ensemble c=30 n=20", 0) == 0);

    const auto sidecar = nlohmann::json::parse(slurp(out_a + ".meta.json"));
    CHECK(sidecar.at("c") == 30);
    CHECK(sidecar.at("k_min") == 2); // two classes in the label column
    CHECK(sidecar.at("k_max") == 6);
    REQUIRE(sidecar.at("runs").size() == 30);
    for (const auto& run : sidecar.at("runs")) {
        CHECK(run.at("k").get<int>() >= 2);
        CHECK(run.at("k").get<int>() <= 6);
    }
}

TEST_CASE("build prints the shape, persists the document, and is reproducible") {
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto tree_a = work_dir() + "/tree_a.json";
    const auto tree_b = work_dir() + "/tree_b.json";
    const auto dot = work_dir() + "/tree.dot";

    const auto result = run_cli("build --data " + data + " --label-col cls --bases " +
                                bases + " --out " + tree_a + " --dot " + dot);
    REQUIRE(result.exit_code == 0);
    CHECK(result.output.find("leaves: 2") != std::string::npos);
    CHECK(result.output.find("max_depth: 1") != std::string::npos);
    CHECK(result.output.find("avg_depth: 1.00") != std::string::npos);
    CHECK(slurp(dot).find("digraph") != std::string::npos);

    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --out " + tree_b)
                .exit_code == 0);
    CHECK(slurp(tree_a) == slurp(tree_b));

    // worker count must not leak into the result
    const auto tree_threads = work_dir() + "/tree_threads.json";
    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --threads 3 --out " + tree_threads)
                .exit_code == 0);
    CHECK(slurp(tree_a) == slurp(tree_threads));

    const auto doc = nlohmann::json::parse(slurp(tree_a));
    CHECK(doc.at("build").at("leaves") == 2);
    CHECK(doc.at("build").at("early_stop") == false);
}

TEST_CASE("build with k 1 and early stop still succeed") {
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto one = run_cli("build --data " + data + " --label-col cls --bases " + bases +
                             " -k 1");
    REQUIRE(one.exit_code == 0);
    CHECK(one.output.find("leaves: 1") != std::string::npos);

    // k larger than achievable under the >=5 guard: warn, exit 0
    const auto many = run_cli("build --data " + data + " --label-col cls --bases " + bases +
                              " -k 8");
    REQUIRE(many.exit_code == 0);
    CHECK(many.output.find("warning: early stop") != std::string::npos);
}

TEST_CASE("eval reports perfect metrics on the separable toy") {
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto tree = work_dir() + "/tree_eval.json";
    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --out " + tree)
                .exit_code == 0);
    const auto result = run_cli("eval --data " + data + " --label-col cls --tree " + tree);
    REQUIRE(result.exit_code == 0);
    CHECK(result.output.find("purity      1.0000") != std::string::npos);
    CHECK(result.output.find("f1          1.0000") != std::string::npos);
    CHECK(result.output.find("nmi         1.0000") != std::string::npos);
    // machine-readable line parses back
    const auto json_start = result.output.find("{\"purity\"");
    REQUIRE(json_start != std::string::npos);
    const auto parsed = nlohmann::json::parse(result.output.substr(json_start));
    CHECK(parsed.at("purity") == 1.0);
    CHECK(parsed.at("leaves") == 2);
}

TEST_CASE("experiment emits rows plus a summary and respects repeats") {
    const auto data = blob_csv();
    const auto result = run_cli("experiment --data " + data +
                                " --label-col cls -c 5 --repeats 3 --seed 7");
    REQUIRE(result.exit_code == 0);
    CHECK(result.output.find("run,seed,leaves,purity,f1,nmi,max_depth,avg_depth,note") !=
          std::string::npos);
    CHECK(result.output.find("\n0,") != std::string::npos);
    CHECK(result.output.find("\n2,") != std::string::npos);
    CHECK(result.output.find("summary over 3 runs") != std::string::npos);
    CHECK(result.output.find("purity:") != std::string::npos);

    // a single repeat reports zero spread
    const auto single = run_cli("experiment --data " + data +
                                " --label-col cls -c 5 --repeats 1 --seed 7");
    REQUIRE(single.exit_code == 0);
    const auto pm = single.output.find("purity:");
    REQUIRE(pm != std::string::npos);
    CHECK(single.output.substr(pm, 40).find("0.0000") != std::string::npos);
}

TEST_CASE("render re-emits documents in all formats") {
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto tree = work_dir() + "/tree_render.json";
    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --out " + tree)
                .exit_code == 0);
    const auto dot = run_cli("render --tree " + tree + " --format dot");
    REQUIRE(dot.exit_code == 0);
    CHECK(dot.output.find("digraph ice_tree") != std::string::npos);
    const auto text = run_cli("render --tree " + tree + " --format text");
    REQUIRE(text.exit_code == 0);
    CHECK(text.output.find("leaf cluster=") != std::string::npos);
    const auto json = run_cli("render --tree " + tree + " --format json");
    REQUIRE(json.exit_code == 0);
    CHECK(nlohmann::json::parse(json.output).at("format") == "ice-tree");
}

TEST_CASE("standardized trees evaluate only against standardized features") {
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto tree = work_dir() + "/tree_std.json";
    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --standardize --out " + tree)
                .exit_code == 0);
    // plain eval sees the original features: fingerprint mismatch
    CHECK(run_cli("eval --data " + data + " --label-col cls --tree " + tree).exit_code == 2);
    const auto matched =
        run_cli("eval --data " + data + " --label-col cls --standardize --tree " + tree);
    CHECK(matched.exit_code == 0);
    CHECK(matched.output.find("purity      1.0000") != std::string::npos);
}

TEST_CASE("input problems exit with code 2, never a crash") {
    CHECK(run_cli("build --data /nonexistent.csv --bases /nope.csv -k 2").exit_code == 2);
    CHECK(run_cli("gen-bases --data /nonexistent.csv --seed 1 --out /tmp/x.csv").exit_code == 2);

    // fingerprint mismatch: tree built on one dataset, evaluated on another
    const auto data = blob_csv();
    const auto bases = perfect_bases();
    const auto tree = work_dir() + "/tree_mismatch.json";
    REQUIRE(run_cli("build --data " + data + " --label-col cls --bases " + bases +
                    " --out " + tree)
                .exit_code == 0);
    const auto other = work_dir() + "/other.csv";
    {
        std::ofstream out(other);
        out << "x,y,cls\n";
        for (int i = 0; i < 20; ++i) out << i << "," << i << ",a\n";
    }
    const auto result = run_cli("eval --data " + other + " --label-col cls --tree " + tree);
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("fingerprint") != std::string::npos);

    // gen-bases without labels and without an explicit range
    const auto nolabel = work_dir() + "/nolabel.csv";
    {
        std::ofstream out(nolabel);
        out << "x\n";
        for (int i = 0; i < 12; ++i) out << i << "\n";
    }
    const auto no_k = run_cli("gen-bases --data " + nolabel + " --seed 1 --out /tmp/nk.csv");
    CHECK(no_k.exit_code == 2);
}

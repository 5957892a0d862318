#include "doctest.h"
#include "oocdr/io.hpp"
#include "oocdr/keyvalue.hpp"
#include "oocdr/pipeline.hpp"
#include "oocdr/plot.hpp"
#include "test_support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace oocdr;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const test::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string(OOCDR_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::map<std::string, std::string> parse_lines(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::string slurp_bin(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("cli: generate is deterministic") {
    test::TempDir dir("cli");
    const std::string flags = "generate blobs --n 10000 --dim 16 --clusters 4 --seed 7 --out ";
    REQUIRE(cli(dir, flags + (dir / "a.mat").string()).code == 0);
    REQUIRE(cli(dir, flags + (dir / "b.mat").string()).code == 0);
    CHECK(slurp_bin(dir / "a.mat") == slurp_bin(dir / "b.mat"));
    const auto h = read_header(dir / "a.mat");
    CHECK(h.rows == 10000);
    CHECK(h.dims == 16);
    CHECK(h.has_labels);
}

TEST_CASE("cli: project, evaluate and plot") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string(), proj = (dir / "p.mat").string();
    REQUIRE(cli(dir, "generate blobs --n 10000 --dim 16 --seed 7 --out " + data).code == 0);

    auto r = cli(dir, "project --method pca --ref-size 1024 --batch-size 4096 --seed 3 --data " + data + " --out " + proj);
    REQUIRE(r.code == 0);
    auto kv = parse_lines(r.out);
    CHECK(kv.at("rows") == "10000");
    CHECK(kv.at("batches") == "3");
    CHECK(kv.count("fit_seconds") == 1);
    CHECK(kv.count("mean_batch_seconds") == 1);
    CHECK(kv.count("total_seconds") == 1);
    CHECK(read_header(proj).rows == 10000);
    CHECK(read_run_metadata(proj).n_ref == 1024);

    r = cli(dir, "evaluate --metrics knn,trust --k 100 --projection " + proj + " --data " + data);
    REQUIRE(r.code == 0);
    kv = parse_lines(r.out);
    const double knn = parse_double(kv.at("knn"), "knn"), trust = parse_double(kv.at("trust"), "trust");
    CHECK((knn >= 0 && knn <= 1));
    CHECK((trust >= 0 && trust <= 1));
    CHECK(kv.count("stress") == 0);

    const auto csv = dir / "m.csv";
    for (const char* scope : {"reference", "oos"})
        REQUIRE(cli(dir, std::string("evaluate --metrics stress,knn --k 10 --scope ") + scope + " --csv " +
                             csv.string() + " --projection " + proj + " --data " + data)
                    .code == 0);
    std::ifstream in(csv);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header == "scope,n,k,block,stress,knn");
    CHECK(row1.rfind("reference,1024,10,", 0) == 0);
    CHECK(row2.rfind("oos,8976,10,", 0) == 0);

    const auto heat = dir / "h.ppm";
    r = cli(dir, "plot heatmap --grid 64x64 --log --projection " + proj + " --out " + heat.string());
    REQUIRE(r.code == 0);
    kv = parse_lines(r.out);
    CHECK(kv.at("points") == "10000");
    CHECK(std::stoull(kv.at("max_count")) >= 1);
    CHECK(read_ppm(heat).width == 512);

    const auto sc = dir / "s.ppm";
    CHECK(cli(dir, "plot scatter --projection " + proj + " --labels-from " + data + " --out " + sc.string()).code == 0);
    CHECK(read_ppm(sc).height == 800);
    CHECK(cli(dir, "plot scatter --projection " + proj + " --labels-from " + proj + " --out " + sc.string()).code == 0);
}

TEST_CASE("cli: project then evaluate works for every method") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string(), proj = (dir / "p.mat").string();
    REQUIRE(cli(dir, "generate blobs --n 600 --dim 8 --seed 1 --out " + data).code == 0);
    for (const char* m : {"pca", "mds", "tsne"}) {
        CAPTURE(m);
        const auto r = cli(dir, std::string("project --method ") + m +
                                    " --ref-size 200 --batch-size 150 --iterations 100 --perplexity 10 --oos-iters 10"
                                    " --data " + data + " --out " + proj + " --save-model " + (dir / "model").string());
        REQUIRE(r.code == 0);
        CHECK(std::filesystem::exists(dir / "model.model"));
        CHECK(cli(dir, "evaluate --k 10 --projection " + proj + " --data " + data).code == 0);
    }
}

TEST_CASE("cli: threads do not change the output") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string();
    REQUIRE(cli(dir, "generate blobs --n 800 --dim 8 --seed 2 --out " + data).code == 0);
    for (const char* m : {"mds", "tsne"}) {
        const std::string base = std::string("project --method ") + m +
                                 " --ref-size 150 --batch-size 100 --iterations 60 --perplexity 10 --data " + data;
        REQUIRE(cli(dir, base + " --threads 1 --out " + (dir / "t1.mat").string()).code == 0);
        REQUIRE(cli(dir, base + " --threads 4 --out " + (dir / "t4.mat").string()).code == 0);
        CHECK(slurp_bin(dir / "t1.mat") == slurp_bin(dir / "t4.mat"));
    }
}

TEST_CASE("cli: exit codes") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string();
    REQUIRE(cli(dir, "generate blobs --n 70000 --dim 4 --seed 1 --out " + data).code == 0);

    auto r = cli(dir, "project --ref-size 70001 --data " + data + " --out " + (dir / "p.mat").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("reference size") != std::string::npos);

    r = cli(dir, "project --method mds --ref-size 65536 --data " + data + " --out " + (dir / "p.mat").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("capacity") != std::string::npos);

    CHECK(cli(dir, "project --ref-size 10 --data " + (dir / "missing.mat").string() + " --out x.mat").code == 4);
    CHECK(cli(dir, "project --method umap --ref-size 10 --data " + data + " --out x.mat").code == 2);
    CHECK(cli(dir, "plot heatmap --grid 64 --projection " + data + " --out x.ppm").code == 2);
    CHECK(cli(dir, "").code == 2);
}

TEST_CASE("cli: bench writes a CSV that reads back losslessly") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string();
    const auto csv = dir / "bench.csv";
    REQUIRE(cli(dir, "generate blobs --n 20000 --dim 64 --seed 3 --out " + data).code == 0);
    const auto r = cli(dir, "bench --method pca --ref-sizes 256,1024,4096 --data " + data + " --out " + csv.string());
    REQUIRE(r.code == 0);
    const auto samples = read_timing_csv(csv);
    REQUIRE(samples.size() == 3);
    CHECK(samples[0].n_ref == 256);
    CHECK(samples[2].batch_sizes[0] == 20000 - 4096);
    // Fit time grows with the reference size; coarse check across the 16x range.
    CHECK(samples[2].fit_seconds >= samples[0].fit_seconds);
    const auto copy = dir / "copy.csv";
    write_timing_csv(copy, samples);
    CHECK(slurp_bin(copy) == slurp_bin(csv));
    CHECK(parse_lines(r.out).count("per_point_r_squared") == 1);

    CHECK(cli(dir, "bench --ref-sizes 256 --data " + data + " --out " + csv.string()).code == 2);
}

TEST_CASE("cli: bench MDS per-point time grows with the reference size") {
    test::TempDir dir("cli");
    const auto data = (dir / "d.mat").string();
    const auto csv = dir / "bench.csv";
    REQUIRE(cli(dir, "generate blobs --n 4500 --dim 16 --seed 4 --out " + data).code == 0);
    REQUIRE(cli(dir, "bench --method mds --iterations 20 --ref-sizes 128,512,2048 --threads 1 --data " + data +
                         " --out " + csv.string())
                .code == 0);
    const auto s = read_timing_csv(csv);
    auto per_point = [](const TimingSample& t) { return t.batch_seconds[0] / static_cast<double>(t.batch_sizes[0]); };
    CHECK(per_point(s[1]) > per_point(s[0]));
    CHECK(per_point(s[2]) > per_point(s[1]));
}

TEST_CASE("cli: csv import") {
    test::TempDir dir("cli");
    {
        std::ofstream out(dir / "in.csv");
        out << "a,b,label\n1,2,0\n3,4,1\n5,6.5,1\n";
    }
    REQUIRE(cli(dir, "import-csv --labels last --in " + (dir / "in.csv").string() + " --out " + (dir / "o.mat").string())
                .code == 0);
    const auto m = read_matrix(dir / "o.mat");
    CHECK(m.rows() == 3);
    CHECK(m.dims() == 2);
    CHECK(m.data(2, 1) == 6.5);
    CHECK(*m.labels == Labels{0, 1, 1});
}

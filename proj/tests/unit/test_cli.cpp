#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"

using namespace advhash;
using namespace advhash::testing;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / "advhash_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

void put_be32(std::string& b, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<char>(v >> s));
}

// IDX pair of n 8x8 images whose class is the brightest of four quadrants,
// so a tiny model has something to learn.
void write_idx(const std::string& stem, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::string img, lbl;
    put_be32(img, 2051);
    put_be32(img, static_cast<std::uint32_t>(n));
    put_be32(img, 8);
    put_be32(img, 8);
    put_be32(lbl, 2049);
    put_be32(lbl, static_cast<std::uint32_t>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const int cls = static_cast<int>(rng.below(4));
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const int quadrant = (y / 4) * 2 + x / 4;
                const auto base = quadrant == cls ? 150 : 20;
                img.push_back(static_cast<char>(base + rng.below(100)));
            }
        lbl.push_back(static_cast<char>(cls));
    }
    std::ofstream((work_dir() / (stem + "-images")).string(), std::ios::binary) << img;
    std::ofstream((work_dir() / (stem + "-labels")).string(), std::ios::binary) << lbl;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

const std::string& arch_file() {
    static const std::string p = [] {
        std::ofstream(path("tiny.arch")) << "name tiny\ninput 1 8 8\nconv 4 kernel=3 act=relu\npool 2\nfc 16 act=relu\nfc 10\n";
        write_idx("train", 64, 1);
        write_idx("test", 32, 2);
        return path("tiny.arch");
    }();
    return p;
}

std::string data_flags(bool train) {
    std::string s = " --test-images " + path("test-images") + " --test-labels " + path("test-labels");
    if (train) s += " --train-images " + path("train-images") + " --train-labels " + path("train-labels");
    return s;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + ADVHASH_CLI_PATH + " " + args + " > " +
                            path("last.log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) { return read_text_file(p); }

std::string train_args(const std::string& out, const std::string& extra = "") {
    const std::string lr = extra.find("--lr") == std::string::npos ? " --lr 0.1" : "";
    return "train --arch " + arch_file() + data_flags(true) + " --epochs 2 --batch-size 8" + lr + " --out " + out +
           " " + extra;
}

// Data rows of a CSV written by the tool (manifest comment and header skipped).
std::vector<std::vector<std::string>> csv_rows(const std::string& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        rows.push_back(f);
    }
    return rows;
}

const std::string& trained_checkpoint() {
    static const std::string p = [] {
        const std::string out = path("model.ckpt");
        REQUIRE(run(train_args(out, "--rate 1/4 --seed 3")) == 0);
        return out;
    }();
    return p;
}

}  // namespace

TEST_CASE("cli: exit codes") {
    arch_file();
    CHECK(run("") == 2);
    CHECK(run("train --no-such-flag") == 2);
    CHECK(run("train --arch " + arch_file() + " --out " + path("x.ckpt")) == 2);
    CHECK(run("train --arch nope" + data_flags(true)) == 2);
    CHECK(run("compress --arch " + arch_file() + data_flags(true) + " --rate 2/1 --out " + path("x.ckpt")) == 2);
    CHECK(run("train --arch " + arch_file() + " --train-images " + path("test-labels") + " --train-labels " +
              path("test-labels") + data_flags(false) + " --out " + path("x.ckpt")) == 3);
    CHECK(run(train_args(path("div.ckpt"), "--lr 1e300")) == 4);
    CHECK_FALSE(fs::exists(path("div.ckpt")));
    CHECK(run("info --checkpoint " + path("test-images")) == 3);
    CHECK(run("attack --checkpoint " + path("missing.ckpt") + data_flags(false)) == 3);
    CHECK(run("attack --checkpoint " + trained_checkpoint() + data_flags(false) +
              " --eps-start 0.5 --eps-max 0.1 --samples 4 --out " + path("bad")) == 2);
    CHECK_FALSE(fs::exists(path("bad.csv")));
    CHECK(run("attack --checkpoint " + trained_checkpoint() + data_flags(false) + " --samples 33") == 2);
    CHECK(run("defend --checkpoint " + trained_checkpoint() + data_flags(false) + " --layers 1 --samples 4") == 2);
}

TEST_CASE("cli: --lr 0 leaves the untrained network") {
    const std::string out = path("lr0.ckpt");
    REQUIRE(run(train_args(out, "--lr 0 --seed 5")) == 0);
    const Network net = load_checkpoint(out);
    const Network init = Network::initialize(load_architecture(arch_file()), 5);
    const Dataset test = load_mnist(path("test-images"), path("test-labels"));
    const auto probe = test.images;
    CHECK(net.logits(probe) == init.logits(probe));
    const auto manifest = nlohmann::json::parse(slurp(path("lr0.manifest.json")));
    CHECK(manifest["results"]["test_accuracy"].get<double>() == evaluate(init, test).accuracy);
    CHECK(slurp(path("lr0.loss.csv")).rfind("# manifest=lr0.manifest.json\n", 0) == 0);
}

TEST_CASE("cli: fixed seeds give byte-identical checkpoints and reports") {
    REQUIRE(run(train_args(path("s7a.ckpt"), "--seed 7")) == 0);
    REQUIRE(run(train_args(path("s7b.ckpt"), "--seed 7")) == 0);
    REQUIRE(run(train_args(path("s7c.ckpt")), "ADVHASH_SEED=7") == 0);
    CHECK(read_file_bytes(path("s7a.ckpt")) == read_file_bytes(path("s7b.ckpt")));
    CHECK(read_file_bytes(path("s7a.ckpt")) == read_file_bytes(path("s7c.ckpt")));
    REQUIRE(run(train_args(path("s8.ckpt"), "--seed 8")) == 0);
    CHECK(read_file_bytes(path("s7a.ckpt")) != read_file_bytes(path("s8.ckpt")));

    const std::string attack = "attack --checkpoint " + trained_checkpoint() + data_flags(false) + " --samples 16 ";
    REQUIRE(run(attack + "--out " + path("ra")) == 0);
    const std::string first_csv = slurp(path("ra.csv")), first_json = slurp(path("ra.json"));
    REQUIRE(run(attack + "--out " + path("ra")) == 0);
    CHECK(slurp(path("ra.csv")) == first_csv);
    CHECK(slurp(path("ra.json")) == first_json);
    const auto ja = nlohmann::json::parse(first_json);
    const auto man = nlohmann::json::parse(slurp(path("ra.manifest.json")));
    CHECK(man["command"] == "attack");
    CHECK(man["outputs"].size() == 2);
    CHECK(man.contains("wall_clock_seconds"));
    CHECK(ja["manifest"] == "ra.manifest.json");
}

TEST_CASE("cli: --eps-max 0 gives no successes and epsilon 0 everywhere") {
    REQUIRE(run("attack --checkpoint " + trained_checkpoint() + data_flags(false) + " --samples 10 --eps-max 0 --out " +
                path("e0")) == 0);
    const auto rows = csv_rows(path("e0.csv"));
    REQUIRE(rows.size() == 10);
    for (const auto& r : rows) {
        CHECK(r[1] == "hfgsm");
        CHECK(r[2] == "0");
        CHECK(r[5] == "0");
    }
}

TEST_CASE("cli: fgsm curve is non-decreasing and jsma runs") {
    REQUIRE(run("attack --checkpoint " + trained_checkpoint() + data_flags(false) + " --samples 20 --out " +
                path("curve")) == 0);
    const auto j = nlohmann::json::parse(slurp(path("curve.json")));
    double prev = -1;
    for (const auto& p : j["curve"]) {
        CHECK(p["success_rate"].get<double>() >= prev);
        prev = p["success_rate"].get<double>();
    }
    REQUIRE(run("attack --checkpoint " + trained_checkpoint() + data_flags(false) +
                " --method jsma --budget-max 6 --samples 5 --out " + path("js")) == 0);
    for (const auto& r : csv_rows(path("js.csv"))) CHECK(std::stoul(r[2]) <= 6);
}

TEST_CASE("cli: defend with tau 0 matches the undefended attack") {
    const std::string common = " --checkpoint " + trained_checkpoint() + data_flags(false) + " --samples 12 --seed 4";
    REQUIRE(run("attack" + common + " --out " + path("und")) == 0);
    REQUIRE(run("defend" + common + " --tau 0,0.05 --out " + path("def.csv") + " --save-defended " + path("defended")) ==
            0);
    const auto j = nlohmann::json::parse(slurp(path("und.json")));
    const auto rows = csv_rows(path("def.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[0][0]) == 0.0);
    CHECK(std::stod(rows[0][2]) == j["success_rate"].get<double>());
    CHECK(rows[0][3] == "hfgsm");
    CHECK(rows[0][4] == "model");
    CHECK(fs::exists(path("defended/model_tau0.05.ckpt")));
    CHECK(read_file_bytes(path("defended/model_tau0.ckpt")) != read_file_bytes(path("defended/model_tau0.05.ckpt")));
}

TEST_CASE("cli: analyze outputs are deterministic") {
    const std::string ck = trained_checkpoint();
    REQUIRE(run("analyze --what weights --checkpoint " + ck + " --out " + path("wa")) == 0);
    CHECK(fs::exists(path("wa_model_weights.csv")));
    REQUIRE(run("analyze --what weights --checkpoint " + ck + " --out " + path("wb")) == 0);
    const auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
    CHECK(body(slurp(path("wa_model_weights.csv"))) == body(slurp(path("wb_model_weights.csv"))));
    CHECK(csv_rows(path("wa_model_weights.csv")).size() == 101);

    const std::string grad = "analyze --what gradients --checkpoint " + ck + data_flags(false) + " --samples 8 --out ";
    REQUIRE(run(grad + path("ga")) == 0);
    REQUIRE(run(grad + path("gb")) == 0);
    CHECK(body(slurp(path("ga_model_gradients.csv"))) == body(slurp(path("gb_model_gradients.csv"))));

    REQUIRE(run("attack --checkpoint " + ck + data_flags(false) + " --samples 8 --out " + path("cv")) == 0);
    REQUIRE(run("analyze --what curves --report " + path("cv") + " --out " + path("cur")) == 0);
    const auto rows = csv_rows(path("cur_curves.csv"));
    REQUIRE(rows.size() == 5);
    const auto j = nlohmann::json::parse(slurp(path("cv.json")));
    CHECK(std::stod(rows.back()[3]) == j["success_rate"].get<double>());
    // The summary file name works as well as the prefix.
    REQUIRE(run("analyze --what curves --report " + path("cv.json") + " --out " + path("cur2")) == 0);
    CHECK(body(slurp(path("cur2_curves.csv"))) == body(slurp(path("cur_curves.csv"))));
    CHECK(run("analyze --what gradients" + data_flags(false)) == 2);
}

TEST_CASE("cli: info prints the architecture") {
    REQUIRE(run("info --checkpoint " + trained_checkpoint()) == 0);
    const std::string log = slurp(path("last.log"));
    CHECK(log.find("name tiny") != std::string::npos);
    CHECK(log.find("hash=1/4") != std::string::npos);
}

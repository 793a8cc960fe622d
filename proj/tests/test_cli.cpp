#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flipline/cli/config.hpp"
#include "flipline/cli/run.hpp"
#include "flipline/errors.hpp"

using namespace flipline;
using namespace flipline::cli;
namespace fs = std::filesystem;

namespace {

const char* kLandscape = R"({"command":"landscape","params":{"mu":0.2,"alpha_d":0.1,"lambda":0.05,"kappa":0.01}})";

ErrorKind kind_of(const std::string& text, const std::string& hint = "") {
    try {
        parse_config(text, hint);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::DomainError;
}

std::string message_of(const std::string& text, const std::string& hint = "") {
    try {
        parse_config(text, hint);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("flipline-test-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Runs the installed binary; returns the exit status.
int run_binary(const std::string& args, const fs::path& log_dir, const std::string& env = "") {
    const char* bin = std::getenv("FLIPLINE_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = env + " '" + std::string(bin) + "' " + args + " > '" + (log_dir / "stdout").string() +
                            "' 2> '" + (log_dir / "stderr").string() + "'";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("configuration examples") {
    const auto c = parse_config(kLandscape);
    CHECK(c.command == "landscape");
    CHECK(c.params.mu == 0.2);
    CHECK(c.params.alpha_d == 0.1);
    CHECK(c.params.lambda == 0.05);
    CHECK(c.params.kappa == 0.01);

    const std::string missing = R"({"command":"landscape","params":{"mu":0.2,"alpha_d":0.1}})";
    CHECK(kind_of(missing) == ErrorKind::ValidationError);
    CHECK(message_of(missing).find("lambda") != std::string::npos);

    const auto s = parse_config(
        R"({"command":"sweep","params":{"mu":0.2,"lambda":0.05},"sweep":{"parameter":"alpha_d","start":0,"stop":0.9,"count":50}})");
    REQUIRE(s.sweep.has_value());
    const auto v = s.sweep->values();
    REQUIRE(v.size() == 50);
    CHECK(v.front() == 0.0);
    CHECK(v.back() == doctest::Approx(0.9).epsilon(1e-15));
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
}

TEST_CASE("configuration errors") {
    SUBCASE("syntax errors carry a position") {
        const std::string bad = "{\"command\": \"landscape\",\n  \"params\": {\"mu\": 0.2,, }}";
        CHECK(kind_of(bad) == ErrorKind::ParseError);
        CHECK(message_of(bad).find("line 2") != std::string::npos);
    }
    SUBCASE("wrong types name the field") {
        const std::string bad = R"({"command":"landscape","params":{"mu":"big","alpha_d":0.1,"lambda":0.05}})";
        CHECK(kind_of(bad) == ErrorKind::ParseError);
        CHECK(message_of(bad).find("mu") != std::string::npos);
    }
    SUBCASE("unknown keys and every violation are listed") {
        const std::string bad =
            R"({"command":"landscape","colour":"red","params":{"mu":0.2,"alpha_d":0.1,"lambda":-1,"spin":1}})";
        CHECK(kind_of(bad) == ErrorKind::ValidationError);
        const auto m = message_of(bad);
        CHECK(m.find("colour") != std::string::npos);
        CHECK(m.find("spin") != std::string::npos);
        CHECK(m.find("lambda") != std::string::npos);
    }
    SUBCASE("sweep contracts") {
        const std::string base = R"({"command":"sweep","params":{"mu":0.2,"lambda":0.05},"sweep":)";
        CHECK(kind_of(base + R"({"parameter":"alpha_d","start":0,"stop":0.9,"count":1}})") == ErrorKind::ValidationError);
        CHECK(kind_of(base + R"({"parameter":"alpha_d","start":0.3,"stop":0.3,"count":5}})") == ErrorKind::ValidationError);
        CHECK(kind_of(base + R"({"parameter":"omega","start":0,"stop":0.9,"count":5}})") == ErrorKind::ValidationError);
        CHECK(kind_of(base + R"({"parameter":"alpha_d","start":0,"stop":0.9,"count":5,"spacing":"cubic"}})") ==
              ErrorKind::ValidationError);
    }
    SUBCASE("command line and file must agree") {
        CHECK(kind_of(kLandscape, "orbits") == ErrorKind::ValidationError);
        CHECK(kind_of(R"({"params":{"mu":0.2}})", "") == ErrorKind::ValidationError);
        CHECK(kind_of(kLandscape, "teleport") == ErrorKind::ValidationError);
    }
}

TEST_CASE("config hash is canonical") {
    const auto a = parse_config(kLandscape);
    const auto b = parse_config(
        "{ \"params\" : {\"kappa\":0.01, \"lambda\":0.05, \"alpha_d\":0.1, \"mu\":0.2},\n \"command\":\"landscape\", "
        "\"output_dir\": \"elsewhere\" }");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    Overrides ov;
    ov.mu = 0.3;
    CHECK(config_hash(parse_config(kLandscape, "", ov)) != config_hash(a));
    CHECK(parse_config(kLandscape, "", ov).params.mu == 0.3);
}

TEST_CASE("landscape table") {
    const auto c = parse_config(kLandscape);
    const auto files = run(c);
    REQUIRE(files.size() == 1);
    const auto& csv = files[0].contents;
    const std::string hash = config_hash(c);
    CHECK(files[0].name == "landscape-" + hash + ".csv");
    CHECK(csv.rfind("# config_hash=" + hash, 0) == 0);
    std::istringstream is(csv);
    std::string comment, header, row;
    std::getline(is, comment);
    std::getline(is, header);
    std::getline(is, row);
    std::vector<std::string> cols, vals;
    {
        std::istringstream h(header), r(row);
        for (std::string x; std::getline(h, x, ',');) cols.push_back(x);
        for (std::string x; std::getline(r, x, ',');) vals.push_back(x);
    }
    REQUIRE(cols.size() == vals.size());
    const auto it = std::find(cols.begin(), cols.end(), "g_c");
    REQUIRE(it != cols.end());
    CHECK(std::stod(vals[it - cols.begin()]) == doctest::Approx(-0.1575).epsilon(1e-14));
}

TEST_CASE("CSV writer") {
    ResultTable t;
    t.columns = {"x", "diag"};
    t.diagnostic = {1};
    t.rows = {{0.1, std::nan("")}};
    const auto csv = to_csv(t, "0123456789abcdef");
    CHECK(csv.find("0.10000000000000001,nan") != std::string::npos);
    t.rows = {{std::nan(""), 1.0}};
    CHECK_THROWS_AS(to_csv(t, "0123456789abcdef"), Error);
    t.rows = {{1.0}};
    CHECK_THROWS_AS(to_csv(t, "0123456789abcdef"), Error);
}

TEST_CASE("figures render every curve") {
    struct Want {
        const char* id;
        std::size_t curves;
    };
    for (const Want& w : {Want{"fig5", 2}, Want{"fig6", 6}, Want{"fig7", 3}}) {
        const auto c = parse_config(std::string(R"({"command":"figure","figure_id":")") + w.id + R"("})");
        const auto files = run(c);
        REQUIRE(files.size() == 2);
        const auto& svg = files[1].contents;
        CHECK(files[1].name == std::string(w.id) + "-" + config_hash(c) + ".svg");
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("</svg>") != std::string::npos);
        CHECK(svg.find("<metadata>config_hash=" + config_hash(c) + "</metadata>") != std::string::npos);
        std::size_t n = 0;
        for (auto pos = svg.find("class=\"curve\""); pos != std::string::npos; pos = svg.find("class=\"curve\"", pos + 1))
            ++n;
        CHECK(n == w.curves);
        CHECK(svg.find("<polyline") != std::string::npos);
    }
}

TEST_CASE("binary: hash round trip and byte-reproducible output") {
    TempDir tmp("hash");
    const fs::path cfg = tmp.path / "fig5.json";
    std::ofstream(cfg) << R"({"command":"figure","figure_id":"fig5","grid":{"count":60}})";
    const std::string hash = config_hash(parse_config(slurp(cfg), "figure"));
    for (const char* sub : {"a", "b"}) {
        const fs::path out = tmp.path / sub;
        REQUIRE(run_binary("figure --config '" + cfg.string() + "' --out '" + out.string() + "'", tmp.path) == 0);
    }
    const auto fa = files_in(tmp.path / "a"), fb = files_in(tmp.path / "b");
    REQUIRE(fa.size() == 3);
    REQUIRE(fb.size() == 3);
    for (std::size_t i = 0; i < fa.size(); ++i) {
        CHECK(fa[i].filename() == fb[i].filename());
        CHECK(fa[i].filename().string().find(hash) != std::string::npos);
        const std::string body = slurp(fa[i]);
        CHECK(body.find(hash) != std::string::npos);
        if (fa[i].extension() != ".json") CHECK(body == slurp(fb[i]));
    }
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "a" / ("figure-" + hash + ".manifest.json")));
    CHECK(manifest["config_hash"] == hash);
    CHECK(manifest["files"].size() == 2);
    CHECK(manifest.contains("timestamp"));
}

TEST_CASE("binary: sweep output does not depend on the worker count") {
    TempDir tmp("threads");
    const fs::path cfg = tmp.path / "sweep.json";
    std::ofstream(cfg) << R"({"command":"sweep","params":{"mu":0.4,"lambda":0.05},)"
                          R"("sweep":{"parameter":"alpha_d","start":0.0,"stop":0.9,"count":12}})";
    const std::string hash = config_hash(parse_config(slurp(cfg), "sweep"));
    const std::string name = "sweep-" + hash + ".csv";
    REQUIRE(run_binary("sweep --config '" + cfg.string() + "' --out '" + (tmp.path / "one").string() + "'", tmp.path,
                       "FLIPLINE_THREADS=1") == 0);
    REQUIRE(run_binary("sweep --config '" + cfg.string() + "' --out '" + (tmp.path / "four").string() + "'", tmp.path,
                       "FLIPLINE_THREADS=4") == 0);
    const std::string one = slurp(tmp.path / "one" / name), four = slurp(tmp.path / "four" / name);
    CHECK(!one.empty());
    CHECK(one == four);
    // Header, column row and one row per sweep point.
    CHECK(std::count(one.begin(), one.end(), '\n') == 14);
}

TEST_CASE("binary: failures leave a JSON record and no files") {
    TempDir tmp("fail");
    const fs::path out = tmp.path / "out";
    // alpha_d beyond the bifurcation amplitude: the activation command needs two wells.
    const int rc = run_binary("activation --mu 0.2 --alpha-d 0.8 --lambda 0.05 --out '" + out.string() + "'", tmp.path);
    CHECK(rc == 1);
    const auto rec = nlohmann::json::parse(slurp(tmp.path / "stderr"));
    CHECK(rec["error"] == "SingleWellRegime");
    CHECK(rec["command"] == "activation");
    CHECK(files_in(out).empty());

    CHECK(run_binary("landscape --mu 0.2 --alpha-d 0.1", tmp.path) == 1);
    CHECK(nlohmann::json::parse(slurp(tmp.path / "stderr"))["error"] == "ValidationError");
    CHECK(run_binary("landscape --bogus", tmp.path) == 2);
    CHECK(nlohmann::json::parse(slurp(tmp.path / "stderr"))["error"] == "ParseError");

    // A write that fails midway removes what was already written.
    const auto cfg = parse_config(kLandscape, "", {{}, {}, {}, {}, out.string()});
    fs::create_directories(out / ("landscape-" + config_hash(cfg) + ".manifest.json"));
    CHECK_THROWS(write_outputs(cfg, run(cfg)));
    const auto left = files_in(out);
    REQUIRE(left.size() == 1);
    CHECK(fs::is_directory(left[0]));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(BRATTELI_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string data(const std::string& name) { return std::string(BRATTELI_DATA_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch() {
    fs::path dir = fs::temp_directory_path() / ("bratteli_cli_" + std::to_string(getpid()));
    fs::create_directories(dir);
    return dir;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("geodesics") {
    Run a = run("geodesics " + data("car_asymmetric.json"));
    CHECK(a.code == 0);
    CHECK(contains(a.out, "ground-state profile: C at every level; certification: Exact"));
    CHECK(contains(a.out, "1 extreme ground state"));

    Run b = run("geodesics " + data("car_two_columns.json"));
    CHECK(contains(b.out, "C^2 at every level"));
    CHECK(contains(b.out, "2 extreme ground states"));
    Run n = run("geodesics --neg " + data("car_two_columns.json"));
    CHECK(contains(n.out, "C^2"));
    Run c = run("geodesics " + data("chain.json"));
    CHECK(contains(c.out, "C at every level"));

    fs::path dot = scratch() / "g.dot";
    CHECK(run("geodesics --dot " + dot.string() + " " + data("car_two_columns.json")).code == 0);
    CHECK(contains(slurp(dot), "digraph"));
}

TEST_CASE("validation errors exit 2") {
    fs::path dir = scratch();
    std::ofstream(dir / "broken.json") << R"({"levels": [["v0"], ["a"]], "arrows": []})";
    CHECK(run("geodesics " + (dir / "broken.json").string()).code == 2);
    CHECK(run("geodesics /no/such/file.json").code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("kms on the two-column diagram") {
    Run r = run("kms " + data("car_two_columns.json") + " --beta -2,1,0.5 --seeds 5");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "converged: yes"));
    CHECK(contains(r.out, "0.5"));
    fs::path csv = scratch() / "k.csv";
    CHECK(run("kms " + data("car_two_columns.json") + " --beta 1 --csv " + csv.string()).code == 0);
    CHECK(slurp(csv).rfind("beta,level,vertex,value,residual", 0) == 0);
}

TEST_CASE("kms-infinity verdicts") {
    Run g = run("kms-infinity " + data("car_growing_cross.json"));
    CHECK(g.code == 0);
    CHECK(contains(g.out, "criterion holds"));
    Run b = run("kms-infinity " + data("car_two_columns.json"));
    CHECK(contains(b.out, "criterion fails"));
    CHECK(contains(b.out, "barycenter"));
    Run z = run("kms-infinity " + data("zero_potential.json"));
    CHECK(contains(z.out, "criterion holds"));
}

TEST_CASE("construct exit codes and certificates") {
    fs::path dir = scratch();
    fs::path cert = dir / "cert.json";
    Run gc = run("construct ground-ceiling --plus " + data("two_columns.json") + " --minus " +
                 data("three_columns.json") + " --depth 8 --out " + cert.string());
    CHECK(gc.code == 0);
    CHECK(contains(gc.out, "certificate: verified"));
    auto doc = nlohmann::json::parse(slurp(cert));
    CHECK(doc["all_pass"] == true);
    CHECK(doc.contains("inputs"));

    Run bad = run("construct uhf-embed --base " + data("car_two_columns.json") + " --uhf 2,3 --finite --depth 6");
    CHECK(bad.code == 4);
    Run rigid = run("construct rigid-kms --base " + data("car_two_columns.json") + " --depth 3");
    CHECK(rigid.code == 4);
    Run ok = run("construct rigid-kms --base " + data("car_two_columns.json") + " --depth 3 --cuts-every 2");
    CHECK(ok.code == 0);
}

TEST_CASE("state and check") {
    fs::path dir = scratch();
    std::string f = data("car_two_columns.json");
    fs::path gibbs = dir / "gibbs.json", ground = dir / "ground.json", rnd = dir / "random.json";
    CHECK(run("state gibbs " + f + " --level 2 --beta 1 --out " + gibbs.string()).code == 0);
    CHECK(run("state ground " + f + " --level 2 --out " + ground.string()).code == 0);
    CHECK(run("state random " + f + " --level 2 --seed 3 --out " + rnd.string()).code == 0);

    fs::path rep = dir / "report.json";
    Run g = run("--json " + rep.string() + " check " + f + " --level 2 --state " + gibbs.string() + " --beta 1");
    CHECK(g.code == 0);
    double v = nlohmann::json::parse(slurp(rep))["results"]["kms"]["max_violation"];
    CHECK(v <= 1e-12);

    Run gr = run("check " + f + " --level 2 --state " + ground.string() + " --ground");
    CHECK(contains(gr.out, "mass on G_2 1"));
    CHECK_FALSE(contains(gr.out, "not a ground state"));

    Run r = run("--json " + rep.string() + " check " + f + " --level 2 --state " + rnd.string() + " --beta 5");
    double rv = nlohmann::json::parse(slurp(rep))["results"]["kms"]["max_violation"];
    CHECK(rv > 1e-3);
    CHECK(contains(r.out, "witness"));

    CHECK(run("check " + f + " --level 3 --state " + gibbs.string() + " --beta 1").code == 2);
}

TEST_CASE("repeated runs are byte-identical") {
    fs::path dir = scratch();
    std::string f = data("car_two_columns.json");
    for (const std::string& args :
         {"geodesics " + f, "kms " + f + " --beta 1,2", "kms-infinity " + data("car_growing_cross.json"),
          "construct main --f " + f + " --plus " + data("two_columns.json") + " --minus " +
              data("three_columns.json") + " --depth 5 --cuts-every 2",
          "state random " + f + " --level 2 --seed 9"}) {
        fs::path j1 = dir / "a.json", j2 = dir / "b.json";
        Run a = run("--json " + j1.string() + " " + args);
        Run b = run("--json " + j2.string() + " " + args);
        CHECK(a.code == b.code);
        CHECK(a.out == b.out);
        CHECK(slurp(j1) == slurp(j2));
    }
}

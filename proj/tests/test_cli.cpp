// End-to-end tests of the dnnaf binary: exit codes, printed text, and emitted
// files. Each case spawns the real executable (path injected via
// DNNAF_CLI_PATH) through the shell and captures stdout+stderr combined.

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string output; // stdout and stderr, interleaved
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(DNNAF_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
    const int status = pclose(pipe);
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    r.code = WEXITSTATUS(status);
    return r;
}

// Scratch directory per test case, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("dnnaf_cli_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE_MESSAGE(f.good(), "missing file: " << p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::string& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    REQUIRE(f.good());
    f << text;
}

std::size_t line_count(const std::string& s) {
    return std::size_t(std::count(s.begin(), s.end(), '\n'));
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Extracts the number following `key` in `text` (e.g. key = "eta_max = ").
double number_after(const std::string& text, const std::string& key) {
    const auto pos = text.find(key);
    REQUIRE_MESSAGE(pos != std::string::npos, "'" << key << "' not found in: " << text);
    return std::stod(text.substr(pos + key.size()));
}

} // namespace

TEST_CASE("noise-gen writes the requested rows and is byte-deterministic") {
    TempDir d("noisegen");
    const auto a = d.file("a.csv");
    const auto r = run_cli("noise-gen --preset uniform --n 100 --seed 7 --out " + a);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "wrote 100 samples"));
    const std::string body = slurp(a);
    CHECK(first_line(body) == "# model=uniform[-2,2] seed=7 n=100");
    CHECK(line_count(body) == 102); // comment + header + 100 rows

    const auto b = d.file("b.csv");
    CHECK(run_cli("noise-gen --preset uniform --n 100 --seed 7 --out " + b).code == 0);
    CHECK(slurp(b) == body);

    // Explicit descriptors work too (quoted: brackets are shell globs).
    const auto c = d.file("c.csv");
    CHECK(run_cli("noise-gen --noise 'rayleigh[8]' --n 50 --seed 1 --out " + c).code == 0);
    CHECK(contains(first_line(slurp(c)), "model=rayleigh[8]"));
}

TEST_CASE("noise-gen rejects bad invocations with the usage code") {
    TempDir d("noisegen_bad");
    const auto out = " --out " + d.file("x.csv");
    CHECK(run_cli("noise-gen --preset uniform --n 0" + out).code == 2);
    const auto none = run_cli("noise-gen --n 10" + out);
    CHECK(none.code == 2);
    CHECK(contains(none.output, "--preset or --noise"));
    CHECK(run_cli("noise-gen --preset uniform --noise 'rayleigh[8]' --n 10" + out).code == 2);
    CHECK(run_cli("noise-gen --preset triangle --n 10" + out).code == 2);
    CHECK(run_cli("noise-gen --noise 'triangular[1,2]' --n 10" + out).code == 2);
}

TEST_CASE("unknown subcommands and flags are usage errors; --help succeeds") {
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("noise-gen --bogus 3").code == 2);
    CHECK(run_cli("").code == 2); // a subcommand is required

    const auto help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(contains(help.output, "noise-gen"));
    CHECK(contains(help.output, "fig4"));
    CHECK(run_cli("theory --help").code == 0);
}

TEST_CASE("kde-fit builds the dataset CSV deterministically across threads") {
    TempDir d("kdefit");
    const auto s = d.file("s.csv");
    REQUIRE(run_cli("noise-gen --preset uniform --n 200 --seed 3 --out " + s).code == 0);

    const auto ds = d.file("d.csv");
    const auto r = run_cli("kde-fit --in " + s + " --out " + ds);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "bandwidth "));
    CHECK(contains(r.output, "200 pairs"));
    const std::string body = slurp(ds);
    CHECK(contains(first_line(body), "model=uniform[-2,2]"));
    CHECK(contains(first_line(body), " n=200 "));
    CHECK(line_count(body) == 202);

    const auto ds1 = d.file("d1.csv");
    const auto ds4 = d.file("d4.csv");
    CHECK(run_cli("--threads 1 kde-fit --in " + s + " --out " + ds1).code == 0);
    CHECK(run_cli("--threads 4 kde-fit --in " + s + " --out " + ds4).code == 0);
    CHECK(slurp(ds1) == body);
    CHECK(slurp(ds4) == body);

    // An explicit bandwidth is honored and echoed.
    const auto r2 = run_cli("kde-fit --in " + s + " --bandwidth 0.5 --out " + d.file("db.csv"));
    CHECK(r2.code == 0);
    CHECK(contains(r2.output, "bandwidth 0.5"));
}

TEST_CASE("kde-fit degenerate or missing inputs exit with data/io codes") {
    TempDir d("kdefit_bad");
    const auto one = d.file("one.csv");
    REQUIRE(run_cli("noise-gen --preset impulse --n 1 --seed 1 --out " + one).code == 0);
    CHECK(run_cli("kde-fit --in " + one + " --out " + d.file("x.csv")).code == 6);

    const auto flat = d.file("flat.csv");
    spit(flat, "# model=custom seed=0 n=3\nindex,value\n0,5\n1,5\n2,5\n");
    CHECK(run_cli("kde-fit --in " + flat + " --out " + d.file("y.csv")).code == 6);

    CHECK(run_cli("kde-fit --in " + d.file("absent.csv") + " --out " + d.file("z.csv")).code == 5);

    const auto garbage = d.file("garbage.csv");
    spit(garbage, "not,a,noise\nfile\n");
    CHECK(run_cli("kde-fit --in " + garbage + " --out " + d.file("w.csv")).code == 6);
}

TEST_CASE("train reports holdout R2 and writes a reproducible model") {
    TempDir d("train");
    const auto s = d.file("s.csv");
    const auto ds = d.file("d.csv");
    REQUIRE(run_cli("noise-gen --preset impulse --n 400 --seed 5 --out " + s).code == 0);
    REQUIRE(run_cli("kde-fit --in " + s + " --out " + ds).code == 0);

    const auto m1 = d.file("m1.model");
    const auto r = run_cli("train --in " + ds + " --epochs 20 --out " + m1);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "final holdout R2 = "));
    const double r2 = number_after(r.output, "final holdout R2 = ");
    CHECK(r2 <= 1.0);
    CHECK(r2 > -5.0);

    const auto m2 = d.file("m2.model");
    CHECK(run_cli("train --in " + ds + " --epochs 20 --out " + m2).code == 0);
    CHECK(slurp(m2) == slurp(m1));

    CHECK(run_cli("train --in " + ds + " --epochs 0 --out " + d.file("x.model")).code == 2);
    CHECK(run_cli("train --in " + d.file("absent.csv") + " --out " + d.file("y.model")).code == 5);

    // A grossly oversized learning rate diverges: divergence exit code + epoch.
    const auto div = run_cli("train --in " + ds + " --lr 1e6 --epochs 5 --out " +
                             d.file("z.model"));
    CHECK(div.code == 4);
    CHECK(contains(div.output, "epoch"));
}

TEST_CASE("theory prints the step-size bound and writes one row per eta") {
    TempDir d("theory");
    const auto out = d.file("th.csv");
    const std::string base =
        "theory --preset impulse --etas 0.0001,0.0002 --n-mc 20000 --seed 3 --out ";
    const auto r = run_cli(base + out);
    CHECK(r.code == 0);
    const double eta_max = number_after(r.output, "eta_max = ");
    CHECK(eta_max > 0.005);
    CHECK(eta_max < 0.015);
    CHECK(contains(r.output, "predicted steady-state MSD"));

    const std::string body = slurp(out);
    CHECK(first_line(body) ==
          "model,source,eta,M,sigma_u_sq,predicted_msd,predicted_msd_db,eta_max");
    CHECK(line_count(body) == 3);
    CHECK(contains(body, "analytic-oracle"));

    const auto out2 = d.file("th2.csv");
    CHECK(run_cli(base + out2).code == 0);
    CHECK(slurp(out2) == body);
    const auto out3 = d.file("th3.csv");
    CHECK(run_cli("--threads 3 " + base + out3).code == 0);
    CHECK(slurp(out3) == body);
}

TEST_CASE("theory reports the skewed environment as unstable") {
    TempDir d("theory_skewed");
    const auto r = run_cli("theory --preset skewed --n-mc 20000 --seed 3 --out " +
                           d.file("th.csv"));
    CHECK(r.code == 4);
    CHECK(contains(r.output, "withheld"));
    CHECK(contains(r.output, "instability"));
}

TEST_CASE("theory flag validation: sources, etas, n-mc") {
    TempDir d("theory_bad");
    const auto out = " --out " + d.file("th.csv");
    CHECK(run_cli("theory --preset impulse --source kde" + out).code == 3);
    CHECK(run_cli("theory --preset impulse --source gradnet" + out).code == 3);
    CHECK(run_cli("theory --preset impulse --source bogus" + out).code == 2);
    CHECK(run_cli("theory --preset impulse --etas 0.1,abc" + out).code == 2);
    CHECK(run_cli("theory --preset impulse --n-mc 10" + out).code == 2);
}

TEST_CASE("theory kde and gradnet sources run end to end") {
    TempDir d("theory_src");
    const auto s = d.file("s.csv");
    REQUIRE(run_cli("noise-gen --preset impulse --n 500 --seed 2 --out " + s).code == 0);

    const auto kde = run_cli("theory --preset impulse --source kde --samples " + s +
                             " --etas 0.0001 --n-mc 2000 --seed 4 --out " + d.file("k.csv"));
    CHECK(kde.code == 0);
    CHECK(contains(kde.output, "eta_max = "));
    CHECK(contains(slurp(d.file("k.csv")), ",kde,"));

    const auto ds = d.file("d.csv");
    const auto m = d.file("m.model");
    REQUIRE(run_cli("kde-fit --in " + s + " --out " + ds).code == 0);
    REQUIRE(run_cli("train --in " + ds + " --out " + m).code == 0);
    const auto net = run_cli("theory --preset impulse --source gradnet --model " + m +
                             " --etas 0.00001 --n-mc 2000 --seed 4 --out " + d.file("g.csv"));
    CHECK(net.code == 0);
    CHECK(contains(slurp(d.file("g.csv")), ",gradnet,"));
}

TEST_CASE("run executes a config file and honors --dump-trial") {
    TempDir d("run");
    const auto cfg = d.file("exp.cfg");
    spit(cfg,
         "preset = uniform\n"
         "M = 5\n"
         "sigma_u = 1\n"
         "iterations = 300\n"
         "trials = 4\n"
         "master_seed = 9\n"
         "algorithm = lms eta=0.01\n"
         "algorithm = lmf eta=0.002 label=quartic\n");

    const auto out1 = (d.path / "out1").string();
    const auto r = run_cli("run --config " + cfg + " --out " + out1);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "curves written to"));
    CHECK(contains(r.output, "lms: "));
    CHECK(contains(r.output, "quartic: "));
    const std::string curves = slurp(out1 + "/curves.csv");
    CHECK(contains(curves, "iteration,lms,quartic"));
    CHECK(fs::exists(out1 + "/curves.gp"));

    // Same seed via override: byte-identical curves.
    const auto out2 = (d.path / "out2").string();
    CHECK(run_cli("run --config " + cfg + " --seed 9 --out " + out2).code == 0);
    CHECK(slurp(out2 + "/curves.csv") == curves);

    // Trajectory dumps: one per algorithm, 2 header lines + one row per iteration.
    const auto out3 = (d.path / "out3").string();
    CHECK(run_cli("run --config " + cfg + " --dump-trial 1 --out " + out3).code == 0);
    const std::string t_lms = slurp(out3 + "/trial1_lms.csv");
    const std::string t_lmf = slurp(out3 + "/trial1_quartic.csv");
    CHECK(contains(first_line(t_lms), "algorithm=lms diverged="));
    CHECK(line_count(t_lms) == 302);
    CHECK(line_count(t_lmf) == 302);

    CHECK(run_cli("run --config " + cfg + " --dump-trial 99 --out " +
                  (d.path / "out4").string())
              .code == 2);
    CHECK(run_cli("run --config " + cfg + " --dump-trial -2 --out " +
                  (d.path / "out5").string())
              .code == 2);
}

TEST_CASE("run config errors use the configuration exit code") {
    TempDir d("run_bad");
    const auto out = " --out " + (d.path / "o").string();

    const auto no_model = d.file("no_model.cfg");
    spit(no_model, "preset = uniform\nalgorithm = dnnaf eta=0.01\n");
    const auto r = run_cli("run --config " + no_model + out);
    CHECK(r.code == 3);
    CHECK(contains(r.output, "model="));

    const auto unknown = d.file("unknown.cfg");
    spit(unknown, "preset = uniform\nfrequency = 3\nalgorithm = lms eta=0.01\n");
    CHECK(run_cli("run --config " + unknown + out).code == 3);

    const auto ghost_model = d.file("ghost.cfg");
    spit(ghost_model,
         "preset = uniform\nalgorithm = dnnaf eta=0.01 model=" + d.file("ghost.model") + "\n");
    CHECK(run_cli("run --config " + ghost_model + out).code == 3);

    CHECK(run_cli("run --config " + d.file("absent.cfg") + out).code == 5);
}

TEST_CASE("compare runs tuned baselines and validates its flags") {
    TempDir d("compare");
    const auto c1 = (d.path / "c1").string();
    const std::string base =
        "compare --preset uniform --algorithms lms,lmf --trials 3 --iterations 200 --seed 5";
    const auto r = run_cli(base + " --out " + c1);
    CHECK(r.code == 0);
    const std::string body = slurp(c1 + "/compare_uniform.csv");
    CHECK(contains(body, "iteration,lms,lmf"));

    // Byte-identical regardless of worker-thread count.
    const auto c2 = (d.path / "c2").string();
    CHECK(run_cli("--threads 1 " + base + " --out " + c2).code == 0);
    CHECK(slurp(c2 + "/compare_uniform.csv") == body);

    const auto bogus = run_cli("compare --preset uniform --algorithms lms,bogus --out " +
                               (d.path / "c3").string());
    CHECK(bogus.code == 2);
    CHECK(contains(bogus.output, "valid: lms, lmf, mcc, mee, dnnaf"));

    CHECK(run_cli("compare --preset uniform --algorithms lms,lmf --etas 0.01 --out " +
                  (d.path / "c4").string())
              .code == 2);
    CHECK(run_cli("compare --preset uniform --algorithms '' --out " + (d.path / "c5").string())
              .code == 2);
}

TEST_CASE("fig2 emits the derivative-fit table for one preset") {
    TempDir d("fig2");
    const auto out = (d.path / "f2").string();
    const auto r = run_cli("fig2 --preset uniform --n 300 --seed 2 --out " + out);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "holdout R2"));

    const std::string body = slurp(out + "/fig2_uniform.csv");
    CHECK(contains(first_line(body), "model=uniform[-2,2] n=300 h="));
    const auto second = body.substr(body.find('\n') + 1);
    CHECK(first_line(second) == "v,kde_derivative,net_derivative");
    CHECK(line_count(body) == 403); // 2 header lines + 401 grid points
    CHECK(fs::exists(out + "/uniform.model"));

    CHECK(run_cli("fig2 --preset bogus --out " + (d.path / "f2b").string()).code == 2);
}

TEST_CASE("fig3 writes curves plus a theory overlay that matches the theory CSV") {
    TempDir d("fig3");
    const auto out = (d.path / "f3").string();
    const std::string base = "fig3 --preset impulse --etas 0.0002 --iterations 400 --trials 2 "
                             "--seed 6 --n-mc 1000";
    const auto r = run_cli(base + " --out " + out);
    CHECK(r.code == 0);

    const std::string theory = slurp(out + "/fig3_impulse_theory.csv");
    CHECK(line_count(theory) == 3); // header + analytic row + gradnet row
    CHECK(contains(theory, "analytic-oracle"));
    CHECK(contains(theory, "gradnet"));

    // The overlay line in the curves header carries the same printed value
    // as the theory CSV row.
    const std::string curves = slurp(out + "/fig3_impulse.csv");
    std::stringstream ss(theory);
    std::string line;
    std::getline(ss, line); // column header
    REQUIRE(std::getline(ss, line));
    // Quote-aware split: the model cell is a descriptor with embedded commas.
    const auto cells = [&] {
        std::vector<std::string> v;
        std::string cur;
        bool quoted = false;
        for (std::size_t k = 0; k < line.size(); ++k) {
            const char c = line[k];
            if (quoted) {
                if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') cur += line[k++];
                else if (c == '"') quoted = false;
                else cur += c;
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                v.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        v.push_back(cur);
        return v;
    }();
    REQUIRE(cells.size() == 8);
    CHECK(contains(curves, "theory " + cells[1] + " eta=" + cells[2] +
                               " predicted_msd_db=" + cells[6]));

    // The cached model makes a re-run byte-identical.
    const auto r2 = run_cli(base + " --out " + out);
    CHECK(r2.code == 0);
    CHECK(!contains(r2.output, "trained impulse model"));
    CHECK(slurp(out + "/fig3_impulse.csv") == curves);
}

TEST_CASE("fig4 emits one curve file per environment") {
    TempDir d("fig4");
    const auto out = (d.path / "f4").string();
    const auto r = run_cli("fig4 --trials 2 --seed 3 --out " + out);
    CHECK(r.code == 0);
    for (const std::string preset : {"impulse", "uniform", "skewed", "multipeak"}) {
        CAPTURE(preset);
        CHECK(contains(r.output, "== " + preset + " =="));
        const std::string body = slurp(out + "/fig4_" + preset + ".csv");
        CHECK(contains(body, "iteration,dnnaf,lms,lmf,mcc,mee"));
        CHECK(fs::exists(out + "/" + preset + ".model"));
    }
}

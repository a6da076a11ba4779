#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
    return std::string(NMLCOMP_DATA_DIR) + "/" + name;
}

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    const std::string out_path = "cli_capture.txt";
    std::string cmd = std::string(NMLCOMP_CLI_PATH) + " " + args + " > " + out_path +
                      " 2> /dev/null";
    int status = std::system(cmd.c_str());
    CliRun run;
    if (status != -1 && WIFEXITED(status)) run.code = WEXITSTATUS(status);
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    run.out = ss.str();
    return run;
}

json parse_out(const CliRun& run) { return json::parse(run.out); }

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

}  // namespace

TEST_CASE("comp reports the simple complexity of a point estimator") {
    auto run = run_cli("--problem " + data_path("prob_c.json") + " comp --mode simple");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["variant"] == "simple");
    CHECK(doc["method"] == "exact");
    CHECK(doc["states"] == 4);
    CHECK(doc["log_shtarkov"].get<double>() ==
          doctest::Approx(0.11988931700920692592).epsilon(1e-12));
    CHECK(doc["comp"].get<double>() == doctest::Approx(0.11988931700920692592).epsilon(1e-12));
}

TEST_CASE("comp emits the maximal complexity with its per-rank maximizer") {
    auto run = run_cli("--problem " + data_path("prob_a.json") + " comp --mode max");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["comp"].get<double>() == doctest::Approx(0.27262136203799612997).epsilon(1e-12));
    REQUIRE(doc.contains("maximizer"));
    CHECK(doc["maximizer"] == json::array({0, 1, 1, 1}));
}

TEST_CASE("comp applies penalty luckiness from a file") {
    auto run = run_cli("--problem " + data_path("prob_a.json") +
                       " comp --mode luckiness --estimator penalized:" +
                       data_path("penalty_a.json") + " --luckiness penalty:" +
                       data_path("penalty_a.json"));
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["log_shtarkov"].get<double>() ==
          doctest::Approx(0.00024810886280705108251).epsilon(1e-9));
    CHECK(doc["comp"].get<double>() == doctest::Approx(0.33799621772561410217).epsilon(1e-10));
}

TEST_CASE("comp handles the posterior form with a prior ratio weight") {
    auto run = run_cli("--problem " + data_path("prob_b.json") +
                       " comp --mode generalized --estimator bayes --luckiness prior-ratio");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["log_shtarkov"].get<double>() ==
          doctest::Approx(-0.00074353145336273736176).epsilon(1e-9));
    CHECK(doc["log_shtarkov"].get<double>() <= 1e-10);
}

TEST_CASE("comp full evaluates one sample") {
    auto run = run_cli("--problem " + data_path("prob_b.json") +
                       " comp --mode full --estimator bayes --luckiness prior-ratio "
                       "--sample 0,1");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["variant"] == "full");
    CHECK(doc["sample"] == json::array({0, 1}));
    // Posterior KL to the prior, plus log S, plus the posterior-expected
    // cumulative excess on this sample.
    CHECK(doc["comp_full"].get<double>() ==
          doctest::Approx(0.0012484392342684131971 - 0.00074353145336273736176 +
                          0.04750208125210600139)
              .epsilon(1e-9));

    auto bare = run_cli("--problem " + data_path("prob_b.json") + " comp --mode full");
    CHECK(bare.code == 3);
}

TEST_CASE("comp prints csv when asked") {
    auto run = run_cli("--problem " + data_path("prob_c.json") + " --out csv comp");
    REQUIRE(run.code == 0);
    CHECK(first_line(run.out) == "variant,method,log_shtarkov,comp,comp_full,std_error,states");
    CHECK(run.out.find("\nsimple,exact,0.11988931700920") != std::string::npos);
}

TEST_CASE("select runs the two-part code on one sample") {
    std::string base = "--problem " + data_path("prob_nested.json") + " select --partition " +
                       data_path("partition_nested.json") + " --prior " +
                       data_path("prior_uniform2.json");

    auto run = run_cli(base + " --sample 1,1");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["predictor"] == 2);
    CHECK(doc["block"] == 1);
    CHECK(doc["eta"].get<double>() == doctest::Approx(1.0));
    REQUIRE(doc["comp_bounds"].size() == 2);
    CHECK(doc["comp_bounds"][0].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(doc["comp_bounds"][1].get<double>() ==
          doctest::Approx(0.13074890163340959582).epsilon(1e-11));

    auto low = run_cli(base + " --sample 0,0");
    REQUIRE(low.code == 0);
    auto low_doc = parse_out(low);
    CHECK(low_doc["predictor"] == 0);
    CHECK(low_doc["block"] == 0);

    auto from_file = run_cli(base + " --sample 1,1 --bounds " + data_path("bounds_nested.json"));
    REQUIRE(from_file.code == 0);
    CHECK(parse_out(from_file)["predictor"] == 2);
}

TEST_CASE("verify certifies the exact moment identity") {
    auto run = run_cli("--problem " + data_path("prob_a.json") + " verify --check theorem1");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    REQUIRE(doc.size() == 1);
    CHECK(doc[0]["name"] == "theorem1-identity");
    CHECK(doc[0]["pass"] == true);
}

TEST_CASE("verify all runs the whole statement battery") {
    auto run = run_cli("--problem " + data_path("prob_a.json") + " verify --check all");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    // theorem1 + esi + three bernstein fits + vcentral + 3 * 7 kl-renyi + riskbound.
    CHECK(doc.size() == 28);
    for (const auto& res : doc) CHECK(res["pass"] == true);
}

TEST_CASE("verify filters to one statement family") {
    auto run = run_cli("--problem " + data_path("prob_a.json") + " verify --check klrenyi");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc.size() == 21);
    for (const auto& res : doc) {
        CHECK(res["name"] == "kl-renyi");
        CHECK(res["pass"] == true);
    }
}

TEST_CASE("verify covers the chain of covering arguments") {
    std::string base = "--problem " + data_path("prob_nested.json") + " verify ";

    auto oht = run_cli(base + "--check oht --epsilon 0.6");
    REQUIRE(oht.code == 0);
    auto oht_doc = parse_out(oht);
    REQUIRE(oht_doc.size() == 2);
    CHECK(oht_doc[0]["details"].contains("cells"));

    auto sym = run_cli(base + "--check symmetrization --cell 0,1");
    CHECK(sym.code == 0);

    auto oh = run_cli(base + "--check opperhaussler --cell 0,1");
    CHECK(oh.code == 0);

    auto tal = run_cli(base + "--check talagrand --cell 0,1");
    CHECK(tal.code == 0);

    auto haussler = run_cli(base + "--check haussler --epsilon 0.3 --budget 200");
    REQUIRE(haussler.code == 0);
    auto h_doc = parse_out(haussler);
    CHECK(h_doc[0]["name"] == "extended-haussler");

    auto missing = run_cli(base + "--check oht");
    CHECK(missing.code == 3);
}

TEST_CASE("verify respects the sigma lemma preconditions") {
    auto run = run_cli("--problem " + data_path("prob_supervised.json") + " verify --check sigma");
    REQUIRE(run.code == 0);
    CHECK(parse_out(run)[0]["pass"] == true);
}

TEST_CASE("verify prints csv rows") {
    auto run = run_cli("--problem " + data_path("prob_a.json") +
                       " --out csv verify --check theorem1");
    REQUIRE(run.code == 0);
    CHECK(first_line(run.out) == "name,lhs,rhs,slack,tolerance,pass");
    CHECK(run.out.find("theorem1-identity,") != std::string::npos);
    CHECK(run.out.find(",true") != std::string::npos);
}

TEST_CASE("equalizer exits zero only when the spread is flat") {
    auto run = run_cli("--problem " + data_path("prob_c.json") + " equalizer");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["pass"] == true);
    CHECK(doc["constant"].get<double>() ==
          doctest::Approx(0.11988931700920692592).epsilon(1e-11));

    auto randomized = run_cli("--problem " + data_path("prob_c.json") +
                              " equalizer --estimator bayes");
    CHECK(randomized.code == 3);
}

TEST_CASE("equalizer checks the hindsight form for penalized rules") {
    auto run = run_cli("--problem " + data_path("prob_log.json") +
                       " equalizer --estimator penalized:" + data_path("penalty_log.json") +
                       " --luckiness penalty:" + data_path("penalty_log.json") + " --gamma " +
                       data_path("penalty_log.json"));
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["pass"] == true);
    CHECK(doc["hindsight_pass"] == true);
    CHECK(doc["constant"].get<double>() ==
          doctest::Approx(0.046609957080412245289).epsilon(1e-10));
}

TEST_CASE("rates reports a degenerate fit for the oracle rule") {
    auto run = run_cli("--seed 3 rates --family random --rate-estimator fstar --ns 1,2,3,4");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["degenerate"] == true);
    CHECK(doc["pass"] == true);

    auto csv = run_cli("--seed 3 --out csv rates --family random --rate-estimator fstar "
                       "--ns 1,2,3,4");
    REQUIRE(csv.code == 0);
    CHECK(first_line(csv.out) == "n,estimator,mean_excess,std_error,trials,eta,bound");

    auto bad = run_cli("rates --family random --rate-estimator fstar --ns 5");
    CHECK(bad.code == 3);
}

TEST_CASE("mdl compares two-part selection with block ERM") {
    auto run = run_cli("--seed 4 mdl --block-sizes 1,2 --ns 2,3 --outcomes 2");
    REQUIRE(run.code == 0);
    auto doc = parse_out(run);
    CHECK(doc["pass"] == true);
    CHECK(doc["kstar"] == 0);
    CHECK(doc["points"].size() == 2);

    auto csv = run_cli("--seed 4 --out csv mdl --block-sizes 1,2 --ns 2,3 --outcomes 2");
    REQUIRE(csv.code == 0);
    CHECK(first_line(csv.out) == "n,estimator,mean_excess,overhead,bound_slack_min,bound_pass");
    CHECK(csv.out.find(",erm-full,") != std::string::npos);
}

TEST_CASE("bad inputs exit with the input error code") {
    auto missing = run_cli("--problem no_such_file.json comp");
    CHECK(missing.code == 3);

    std::ofstream bad("cli_bad_problem.json");
    bad << "{\"outcomes\": [\"a\"], \"p\": [1.0]}";
    bad.close();
    auto malformed = run_cli("--problem cli_bad_problem.json comp");
    CHECK(malformed.code == 3);

    auto usage = run_cli("--problem " + data_path("prob_a.json") + " select --sample 0,0");
    CHECK(usage.code != 0);

    auto no_sub = run_cli("--problem " + data_path("prob_a.json"));
    CHECK(no_sub.code != 0);
}

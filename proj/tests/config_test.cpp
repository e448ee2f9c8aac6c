#include "lockstep/config.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace lockstep;

TEST_SUITE("config") {
    TEST_CASE("worker lists") {
        CHECK(parse_worker_list("4") == std::vector<std::size_t>{4});
        CHECK(parse_worker_list("1,2,4") == std::vector<std::size_t>{1, 2, 4});
        CHECK(parse_worker_list("1..4") == std::vector<std::size_t>{1, 2, 3, 4});
        CHECK(format_worker_list({1, 2, 8}) == "1,2,8");
        CHECK_THROWS_WITH_AS(parse_worker_list("0"), doctest::Contains("workers must be"), ConfigError);
        CHECK_THROWS_AS(parse_worker_list("1,0"), ConfigError);
        CHECK_THROWS_AS(parse_worker_list("4..2"), ConfigError);
        CHECK_THROWS_AS(parse_worker_list("x"), ConfigError);
        CHECK_THROWS_AS(parse_worker_list(""), ConfigError);
    }

    TEST_CASE("serialize and parse round-trip") {
        RunConfig c;
        c.model = "datacenter";
        c.model_params = {{"nodes", "64"}, {"leaves", "8"}};
        c.cycles = 12345;
        c.workers = {1, 2, 4};
        c.backend = Backend::spinlock;
        c.partition = PartitionPolicy::random;
        c.partition_seed = 77;
        c.seed = 99;
        c.pin = true;
        c.spin = 500;
        c.stats_path = "s.csv";
        c.trace_path = "t.csv.gz";
        c.json_path = "r.json";
        c.instrumentation = Instrumentation::phases;
        c.check_serial = true;
        CHECK(parse_config_string(serialize(c)) == c);
        CHECK(parse_config_string(serialize(RunConfig{})) == RunConfig{});
    }

    TEST_CASE("comments, overrides and the model prefix") {
        const RunConfig c = parse_config_string("# comment\n\ncycles = 10\ncycles=20\nmodel.packets=5\nspin=auto\n");
        CHECK(c.cycles == 20);
        CHECK(c.model_params.at("packets") == "5");
        CHECK_FALSE(c.spin.has_value());
    }

    TEST_CASE("errors name the offending setting") {
        CHECK_THROWS_WITH_AS(parse_config_string("bogus=1\n"), doctest::Contains("bogus"), ConfigError);
        CHECK_THROWS_AS(parse_config_string("cycles\n"), ConfigError);
        CHECK_THROWS_AS(parse_config_string("cycles=-1\n"), ConfigError);
        CHECK_THROWS_AS(parse_config_string("backend=futex\n"), ConfigError);
        CHECK_THROWS_AS(parse_config_string("workers=0\n"), ConfigError);
        CHECK_THROWS_AS(parse_config_string("instrumentation=lots\n"), ConfigError);
    }

    TEST_CASE("files") {
        const auto path = std::filesystem::temp_directory_path() / "lockstep_config_test.cfg";
        RunConfig c;
        c.model = "pipeline";
        c.workers = {2};
        save_config(c, path.string());
        CHECK(load_config(path.string()) == c);
        std::filesystem::remove(path);
        CHECK_THROWS_AS(load_config("/nonexistent/dir/x.cfg"), ConfigError);
    }

    TEST_CASE("instrumentation maps onto executor options") {
        RunConfig c;
        c.instrumentation = Instrumentation::none;
        RunOptions o = run_options(c);
        CHECK_FALSE(o.timing);
        CHECK_FALSE(o.trace);
        c.instrumentation = Instrumentation::phases;
        c.backend = Backend::mutex;
        c.spin = 3;
        o = run_options(c);
        CHECK(o.timing);
        CHECK(o.trace);
        CHECK(o.phase_log);
        CHECK(o.backend == Backend::mutex);
        REQUIRE(o.spin.has_value());
        CHECK(o.spin->spins_before_yield == 3);
    }
}

#include "doctest.h"

#include "adapod/config.hpp"
#include "adapod/error.hpp"

#include <string>

using namespace adapod;

namespace {

std::string config_error(const std::string & text, const std::string & command = "bench-cd")
{
    try
    {
        validate_config(parse_config(text, command, false, "run.cfg"));
    }
    catch (const ConfigError & e)
    {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("empty config gives the defaults")
{
    const RunConfig cd = parse_config("", "bench-cd");
    CHECK(cd.experiment.problem == ProblemKind::convection_diffusion);
    CHECK(cd.experiment.nu == 0.01);
    CHECK(cd.experiment.n_params == 33);
    CHECK_NOTHROW(validate_config(cd));

    const RunConfig b = parse_config("# only a comment\n\n", "bench-burgers");
    CHECK(b.experiment.problem == ProblemKind::burgers);
    CHECK(b.experiment.nu == 0.001);
    CHECK(b.experiment.levels() == 241);

    const RunConfig q = parse_config("", "bench-burgers", true);
    CHECK(q.experiment.levels() == 61);
    CHECK(q.experiment.tau == 0.02);
}

TEST_CASE("config overrides")
{
    const RunConfig b = parse_config("tau = 0.02   # larger step\nmus = 0.25, 1\nstrategy = pairs\n", "bench-burgers");
    CHECK(b.experiment.tau == 0.02);
    CHECK(b.experiment.levels() == 61);
    CHECK(b.experiment.mus == std::vector<double>{0.25, 1.0});
    CHECK(b.experiment.strategy == GramianStrategy::pairwise);

    const RunConfig c = parse_config("problem = burgers\nquick = true\nR = 4\nout = /tmp/x\nthreads = 3\n", "snapshots");
    CHECK(c.experiment.problem == ProblemKind::burgers);
    CHECK(c.quick);
    CHECK(c.experiment.levels() == 61);
    CHECK(c.rom_dim == 4);
    CHECK(c.experiment.threads == 3);
    CHECK(c.snapshots_file() == "/tmp/x/snapshots.txt");
    CHECK(c.rom_file() == "/tmp/x/rom.txt");
    CHECK(parse_config("", "pod").basis_file() == "basis.txt");

    const RunConfig r = parse_config("r_values = 1, 2, 8\nsweep = 2, 0.5\nstatic = yes\n", "snapshots");
    CHECK(r.experiment.r_values == std::vector<std::size_t>{1, 2, 8});
    CHECK(r.experiment.sweep_factors == std::vector<double>{2.0, 0.5});
    CHECK(r.experiment.static_mode);
}

TEST_CASE("config errors carry line numbers")
{
    const std::string nu = config_error("params = 9\nnu = -1\n");
    CHECK(nu.find("run.cfg:2") != std::string::npos);
    CHECK(nu.find("nu") != std::string::npos);

    CHECK(config_error("\nspeed = 3\n").find("run.cfg:2: unknown key 'speed'") != std::string::npos);
    CHECK(config_error("nu = fast\n").find("run.cfg:1") != std::string::npos);
    CHECK(config_error("nu 0.1\n").find("key = value") != std::string::npos);
    CHECK(config_error("nu =\n").find("missing value") != std::string::npos);
    CHECK(config_error("nu = 0.1\nnu = 0.2\n").find("duplicate") != std::string::npos);
    CHECK(config_error("problem = burgers\n").find("conflicts") != std::string::npos);
    CHECK(config_error("params = 1\n").find("run.cfg:1: params") != std::string::npos);
    CHECK(config_error("tau = 0.007\n", "bench-burgers").find("tau") != std::string::npos);
    CHECK(config_error("r_values = 1,,2\n").find("empty item") != std::string::npos);
    CHECK(config_error("threads = 0\n").find("threads") != std::string::npos);
    CHECK(config_error("theta = 1.5\n").find("run.cfg:1: theta") != std::string::npos);
}

TEST_CASE("formatted settings parse back")
{
    for (const auto & [problem, command] : {std::pair{ProblemKind::convection_diffusion, "snapshots"},
                                            std::pair{ProblemKind::burgers, "snapshots"}})
    {
        ExperimentConfig e = experiment_defaults(problem, false);
        e.nu = 0.1 / 3.0;
        e.r_values = {2, 3};
        const RunConfig back = parse_config(format_experiment(e), command);
        CHECK(format_experiment(back.experiment) == format_experiment(e));
        CHECK(back.experiment.nu == e.nu);
        CHECK(back.experiment.problem == problem);
    }
    CHECK(config_keys_help().find("reference_factor") != std::string::npos);
}

#include <doctest.h>

#include "qbrain/config.hpp"
#include "qbrain/errors.hpp"

using namespace qbrain;

TEST_CASE("config text") {
    RunConfig c;
    apply_config_text("# comment\nepochs = 12\n\nlr_max=1e-3  # trailing\nvoxels=64\nedges=0-1;2-3\nseed=9\n"
                      "phase_shifting=false\n",
                      c);
    CHECK(c.train.epochs == 12);
    CHECK(c.train.lr_max == 1e-3);
    CHECK(c.synth.voxels == 64);
    CHECK(c.synth.edges.size() == 2);
    CHECK(c.train.seed == 9);
    CHECK(c.synth.seed == 9);
    CHECK_FALSE(c.train.flags.phase_shifting);
    CHECK(c.train.batch_size == 32);  // untouched keys keep their defaults

    CHECK_THROWS_AS(apply_config_text("learning_rate=1\n", c), ConfigError);
    CHECK_THROWS_AS(apply_config_text("epochs=-1\n", c), ConfigError);
    CHECK_THROWS_AS(apply_config_text("epochs\n", c), ConfigError);
    CHECK_THROWS_AS(apply_config_text("tau=abc\n", c), ConfigError);
    CHECK_THROWS_AS(apply_config_text("edges=0:1\n", c), ConfigError);
    CHECK_THROWS_AS(apply_config_file("/nonexistent/qbrain.cfg", c), IoError);
}

TEST_CASE("train config echo round trips") {
    TrainConfig t;
    t.lr_max = 1.0 / 3.0;
    t.epochs = 7;
    t.flags.voxel_controlling = false;
    t.threads = 8;
    const std::string echo = train_config_echo(t);
    CHECK(echo.find("threads") == std::string::npos);
    const TrainConfig back = train_config_from_echo(echo);
    CHECK(back.lr_max == t.lr_max);
    CHECK(back.epochs == 7);
    CHECK(back.flags == t.flags);
    CHECK(train_config_echo(back) == echo);
}

TEST_CASE("edge lists") {
    const auto e = parse_edges("0-1; 3-2");
    CHECK(e == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 1}, {3, 2}});
    CHECK(format_edges(e) == "0-1;3-2");
}

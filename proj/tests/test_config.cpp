#include <sstream>

#include <gtest/gtest.h>

#include "gpsr/config.hpp"

using namespace gpsr;

TEST(Config, ParsesKeysAndComments) {
    std::istringstream in(
        "# a run\n"
        "seed = 42\n"
        "gp.population_size = 50   # trailing comment\n"
        "gp.parsimony = size_penalty\n"
        "gp.parsimony_alpha = 0.02\n"
        "gp.linear_scaling = false\n"
        "budget.max_depth = 3\n"
        "vocab.unary = sin, exp\n"
        "vocab.fixed = one, half:0.5\n"
        "consts.delta = 0.01\n"
        "data.target = bivariate\n"
        "data.domain = -1:1, 0:2\n"
        "\n");
    RunConfig cfg;
    cfg.parse(in);
    cfg.resolve();
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.gp.seed, 42u);
    EXPECT_EQ(cfg.gp.population_size, 50u);
    EXPECT_EQ(cfg.gp.parsimony, Parsimony::SizePenalty);
    EXPECT_EQ(cfg.gp.parsimony_alpha, 0.02);
    EXPECT_FALSE(cfg.gp.linear_scaling);
    EXPECT_EQ(cfg.budget.max_depth, 3u);
    EXPECT_EQ(cfg.bound.delta, 0.01);
    const auto v = cfg.vocabulary();
    EXPECT_EQ(v->m1(), 2u);
    EXPECT_EQ(v->m2(), 4u);
    EXPECT_EQ(v->variables(), 2u);
    ASSERT_EQ(v->fixed_constants().size(), 2u);
    EXPECT_EQ(v->fixed_constants()[1].value, 0.5);
    EXPECT_EQ(cfg.dataset().dims(), 2u);
}

TEST(Config, EchoRoundTrips) {
    RunConfig cfg;
    cfg.set("seed", "7");
    cfg.set("data.noise_sigma", "0.1");
    cfg.set("budget.radius", "2.5");
    cfg.resolve();
    const std::string echo = cfg.echo();
    std::istringstream in(echo);
    RunConfig back;
    back.parse(in);
    back.resolve();
    EXPECT_EQ(back.echo(), echo);
}

TEST(Config, DefaultsUseTheFullOperatorSet) {
    RunConfig cfg;
    cfg.resolve();
    EXPECT_EQ(cfg.vocabulary()->m1(), 6u);
    EXPECT_EQ(cfg.vocabulary()->m2(), 4u);
}

TEST(Config, ErrorsNameTheKey) {
    RunConfig cfg;
    try {
        cfg.set("gp.popsize", "3");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "gp.popsize");
    }
    try {
        cfg.set("gp.crossover_rate", "abc");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "gp.crossover_rate");
    }
    EXPECT_THROW(cfg.set("vocab.unary", "tan"), ConfigError);
    EXPECT_THROW(cfg.set("gp.parsimony", "strong"), ConfigError);
    std::istringstream bad("seed 3\n");
    EXPECT_THROW(cfg.parse(bad), ConfigError);
    RunConfig inconsistent;
    inconsistent.set("gp.mutation_rate", "0.5");
    try {
        inconsistent.resolve();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "gp.mutation_rate");
    }
    RunConfig wrong_dims;
    wrong_dims.set("data.domain", "0:1,0:1");
    EXPECT_THROW(wrong_dims.resolve(), ConfigError);
    RunConfig huge;
    huge.set("data.m", "2000000");
    EXPECT_THROW(huge.resolve(), GuardViolation);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <optloop/alignment.hpp>

using namespace optloop;

namespace {

// Independent high-precision oracles in long double.
long double logistic_ld(long double x) { return 1.0L / (1.0L + expl(-x)); }

long double sum_ld(const std::vector<double>& xs) {
    long double s = 0.0L;
    for (double v : xs) s += (long double)v;
    return s;
}

ScoredCompletion mk(std::vector<double> policy, std::vector<double> ref, bool desirable) {
    return ScoredCompletion{std::move(policy), std::move(ref), desirable};
}

std::vector<ScoredCompletion> random_batch(std::mt19937& rng, int n, int max_len = 6) {
    std::uniform_real_distribution<> lp(-3.0, -0.01);
    std::vector<ScoredCompletion> batch;
    for (int i = 0; i < n; ++i) {
        int len = 1 + static_cast<int>(rng() % max_len);
        std::vector<double> pol(len), ref(len);
        for (int j = 0; j < len; ++j) {
            pol[j] = lp(rng);
            ref[j] = lp(rng);
        }
        batch.push_back(mk(std::move(pol), std::move(ref), (rng() & 1) != 0));
    }
    return batch;
}

}  // namespace

TEST_CASE("sft_nll is the negated token log-prob sum") {
    CHECK(sft_nll(std::vector<double>{-0.1, -0.2, -0.3}) ==
          Catch::Approx(0.6).margin(1e-12));
    CHECK(sft_nll(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(sft_nll(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(sft_nll(std::vector<double>{-0.1, 0.2}), std::invalid_argument);

    std::mt19937 rng(1);
    std::uniform_real_distribution<> lp(-5.0, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        int len = 1 + static_cast<int>(rng() % 40);
        std::vector<double> xs(len);
        for (auto& v : xs) v = lp(rng);
        long double oracle = -sum_ld(xs);
        CHECK(sft_nll(xs) == Catch::Approx((double)oracle).margin(1e-12));
        CHECK(sft_nll(xs) >= 0.0);
    }
}

TEST_CASE("kto_reward is the scaled sequence-level log-ratio") {
    KtoParams p;
    SECTION("identical sequences give zero reward") {
        auto c = mk({-0.3, -0.7}, {-0.3, -0.7}, true);
        CHECK(kto_reward(c, p) == 0.0);
    }
    SECTION("beta = 0 annihilates any ratio") {
        KtoParams zero;
        zero.beta = 0.0;
        auto c = mk({-0.1}, {-5.0}, false);
        CHECK(kto_reward(c, zero) == 0.0);
    }
    SECTION("beta 0.1 with log-ratio 2 gives 0.2") {
        auto c = mk({-1.0, -1.0}, {-2.0, -2.0}, true);
        CHECK(kto_reward(c, p) == Catch::Approx(0.2).margin(1e-12));
    }
    SECTION("invariants rejected") {
        CHECK_THROWS_AS(kto_reward(mk({}, {}, true), p), std::invalid_argument);
        CHECK_THROWS_AS(kto_reward(mk({-1}, {-1, -2}, true), p), std::invalid_argument);
        CHECK_THROWS_AS(kto_reward(mk({0.5}, {-1}, true), p), std::invalid_argument);
    }
}

TEST_CASE("kto_value against the high-precision logistic") {
    KtoParams p;
    SECTION("r = z_ref gives exactly one half for either label") {
        auto c = mk({-1.0}, {-1.0}, true);
        CHECK(kto_value(c, 0.0, p) == Catch::Approx(0.5).margin(1e-12));
        c.desirable = false;
        CHECK(kto_value(c, 0.0, p) == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("r - z_ref = 0.2 desirable") {
        auto c = mk({-1.0, -1.0}, {-2.0, -2.0}, true);  // r = 0.2
        long double want = logistic_ld(0.2L);
        CHECK((double)want == Catch::Approx(0.549834).margin(1e-6));
        CHECK(kto_value(c, 0.0, p) == Catch::Approx((double)want).margin(1e-6));
    }
    SECTION("flipping the label maps v to 1 - v") {
        auto c = mk({-1.0, -1.0}, {-2.0, -2.0}, false);
        CHECK(kto_value(c, 0.0, p) == Catch::Approx(0.450166).margin(1e-6));
    }
}

TEST_CASE("label antisymmetry over random records") {
    std::mt19937 rng(2);
    KtoParams p;
    for (int trial = 0; trial < 1000; ++trial) {
        auto batch = random_batch(rng, 1);
        double z = std::uniform_real_distribution<>(0.0, 0.5)(rng);
        double v1 = kto_value(batch[0], z, p);
        batch[0].desirable = !batch[0].desirable;
        double v2 = kto_value(batch[0], z, p);
        CHECK(v1 + v2 == Catch::Approx(1.0).margin(1e-12));
        CHECK(v1 > 0.0);
        CHECK(v1 < 1.0);
    }
}

TEST_CASE("kto_value is monotone in the policy/reference log-ratio") {
    KtoParams p;
    double prev_d = -1.0, prev_u = 2.0;
    for (int step = 0; step < 60; ++step) {
        double ratio = -3.0 + 0.1 * step;
        // One-token sequences: policy - ref = ratio.
        auto c = mk({-1.0}, {-1.0 - ratio}, true);
        if (-1.0 - ratio > 0.0) continue;  // keep the reference a log-prob
        double vd = kto_value(c, 0.1, p);
        c.desirable = false;
        double vu = kto_value(c, 0.1, p);
        if (prev_d >= 0.0) {
            CHECK(vd > prev_d);  // strictly increasing for desirable
            CHECK(vu < prev_u);  // strictly decreasing for undesirable
        }
        prev_d = vd;
        prev_u = vu;
    }
}

TEST_CASE("kto_reference_point estimates and clamps") {
    KtoParams p;
    SECTION("all-equal policy and reference gives zero") {
        std::vector<ScoredCompletion> batch = {mk({-1, -2}, {-1, -2}, true),
                                               mk({-0.5}, {-0.5}, false)};
        CHECK(kto_reference_point(batch, p) == 0.0);
    }
    SECTION("beta = 0 gives zero") {
        KtoParams zero;
        zero.beta = 0.0;
        std::vector<ScoredCompletion> batch = {mk({-1}, {-9}, true)};
        CHECK(kto_reference_point(batch, zero) == 0.0);
    }
    SECTION("negative mean log-ratio clamps to zero") {
        std::vector<ScoredCompletion> batch = {mk({-6.0}, {-1.0}, true)};  // ratio -5
        CHECK(kto_reference_point(batch, p) == 0.0);
    }
    SECTION("positive mean log-ratio scales by beta") {
        std::vector<ScoredCompletion> batch = {mk({-1.0}, {-3.0}, true),
                                               mk({-1.0}, {-1.0}, false)};
        CHECK(kto_reference_point(batch, p) == Catch::Approx(0.1).margin(1e-12));
    }
    SECTION("empty batch throws") {
        CHECK_THROWS_AS(kto_reference_point({}, p), std::invalid_argument);
    }
}

TEST_CASE("kto_loss closed-form cases") {
    KtoParams p;
    SECTION("every value one half with unit weights gives one half") {
        std::vector<ScoredCompletion> batch = {mk({-1, -2}, {-1, -2}, true),
                                               mk({-0.5}, {-0.5}, false)};
        CHECK(kto_loss(batch, p) == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("a saturated desirable term vanishes") {
        std::vector<ScoredCompletion> batch = {mk({-0.001}, {-500.0}, true)};
        double z = 0.0;
        CHECK(kto_loss_with_reference(batch, z, p) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("weights scale per label") {
        KtoParams weighted;
        weighted.lambda_d = 2.0;
        weighted.lambda_u = 4.0;
        std::vector<ScoredCompletion> batch = {mk({-1}, {-1}, true), mk({-1}, {-1}, false)};
        // Both values are 0.5 at z_ref = 0.
        CHECK(kto_loss(batch, weighted) == Catch::Approx((2.0 * 0.5 + 4.0 * 0.5) / 2));
    }
    SECTION("mixed batch of four matches per-term high-precision recomputation") {
        std::mt19937 rng(3);
        auto batch = random_batch(rng, 4);
        KtoParams params;
        params.lambda_d = 1.25;
        params.lambda_u = 0.75;
        double z = kto_reference_point(batch, params);
        long double oracle = 0.0L;
        for (const auto& c : batch) {
            long double r = (long double)params.beta *
                            (sum_ld(c.policy_logprobs) - sum_ld(c.ref_logprobs));
            long double x = c.desirable ? r - (long double)z : (long double)z - r;
            long double w = c.desirable ? params.lambda_d : params.lambda_u;
            oracle += w * (1.0L - logistic_ld(x));
        }
        oracle /= 4.0L;
        CHECK(kto_loss(batch, params) == Catch::Approx((double)oracle).margin(1e-12));
    }
    SECTION("loss stays inside (0, max lambda) for moderate inputs") {
        std::mt19937 rng(4);
        KtoParams params;
        params.lambda_d = 1.5;
        params.lambda_u = 0.5;
        for (int trial = 0; trial < 300; ++trial) {
            auto batch = random_batch(rng, 1 + static_cast<int>(rng() % 5));
            double loss = kto_loss(batch, params);
            CHECK(loss > 0.0);
            CHECK(loss < std::max(params.lambda_d, params.lambda_u));
        }
    }
}

TEST_CASE("numeric gradient matches the analytic sigma form (z_ref detached)") {
    std::mt19937 rng(5);
    KtoParams p;
    p.lambda_d = 1.3;
    p.lambda_u = 0.7;
    const double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        auto batch = random_batch(rng, 2 + static_cast<int>(rng() % 4));
        double z = kto_reference_point(batch, p);
        size_t k = rng() % batch.size();
        size_t j = rng() % batch[k].policy_logprobs.size();
        double analytic = kto_loss_grad_policy(batch, z, p, k);

        auto plus = batch;
        plus[k].policy_logprobs[j] += h;
        auto minus = batch;
        minus[k].policy_logprobs[j] -= h;
        // Central differences with the reference point held fixed.
        double numeric =
            (kto_loss_with_reference(plus, z, p) - kto_loss_with_reference(minus, z, p)) /
            (2 * h);
        CHECK(analytic == Catch::Approx(numeric).margin(1e-6));
    }
}

TEST_CASE("parameter invariants are enforced") {
    std::vector<ScoredCompletion> batch = {mk({-1}, {-1}, true)};
    KtoParams bad;
    bad.beta = -0.1;
    CHECK_THROWS_AS(kto_loss(batch, bad), std::invalid_argument);
    bad.beta = 0.1;
    bad.lambda_d = 0.0;
    CHECK_THROWS_AS(kto_loss(batch, bad), std::invalid_argument);
}

TEST_CASE("preference records load from JSONL") {
    std::string path = "./pref_test.jsonl";
    {
        std::ofstream f(path);
        f << R"({"id": "a", "policy_logprobs": [-0.1], "ref_logprobs": [-0.2], "desirable": true})"
          << "\n";
        f << R"({"policy_logprobs": [-0.5, -0.5], "ref_logprobs": [-0.5, -0.5], "desirable": false})"
          << "\n";
    }
    auto records = load_preference_records(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "a");
    CHECK(records[0].completion.desirable);
    CHECK(records[1].id == "2");  // line number fallback
    std::remove(path.c_str());
}

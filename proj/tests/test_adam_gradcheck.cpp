#include <catch_amalgamated.hpp>

#include "loadcast/adam.hpp"
#include "loadcast/gradcheck.hpp"
#include "loadcast/tape.hpp"

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace loadcast;
using testutil::random_tensor;

TEST_CASE("zero gradient leaves parameters unchanged", "[adam-gradcheck]") {
    Tensor p(3, 2, 1.5);
    std::vector<Tensor*> params = {&p};
    AdamState st = AdamState::for_params(params);
    std::vector<Tensor> grads = {Tensor(3, 2, 0.0)};
    adam_step(st, params, grads, 0.1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == 1.5);
}

TEST_CASE("first Adam step matches the closed form", "[adam-gradcheck]") {
    // p = 1, g = 1, lr = 0.1: m_hat = v_hat = 1, so p <- 1 - 0.1/(1 + eps)
    Tensor p(1, 1, 1.0);
    std::vector<Tensor*> params = {&p};
    AdamState st = AdamState::for_params(params);
    std::vector<Tensor> grads = {Tensor(1, 1, 1.0)};
    adam_step(st, params, grads, 0.1);

    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double m_hat = (1.0 - beta1) * 1.0 / (1.0 - beta1);
    const double v_hat = (1.0 - beta2) * 1.0 / (1.0 - beta2);
    const double expected = 1.0 - 0.1 * m_hat / (std::sqrt(v_hat) + eps);
    CHECK(p[0] == Catch::Approx(expected).epsilon(1e-15));
    CHECK(p[0] == Catch::Approx(0.9).margin(1e-8));
}

TEST_CASE("identical seeds give bit-identical update trajectories", "[adam-gradcheck]") {
    auto run = [] {
        std::mt19937_64 rng(99);
        Tensor p = random_tensor(4, 4, rng);
        std::vector<Tensor*> params = {&p};
        AdamState st = AdamState::for_params(params);
        for (int step = 0; step < 25; ++step) {
            std::vector<Tensor> grads = {random_tensor(4, 4, rng)};
            adam_step(st, params, grads, 0.01);
        }
        return p;
    };
    Tensor a = run();
    Tensor b = run();
    CHECK(a == b);
}

TEST_CASE("non-finite gradients are rejected", "[adam-gradcheck]") {
    Tensor p(1, 1, 1.0);
    std::vector<Tensor*> params = {&p};
    AdamState st = AdamState::for_params(params);
    std::vector<Tensor> grads = {Tensor(1, 1, std::numeric_limits<double>::quiet_NaN())};
    CHECK_THROWS_AS(adam_step(st, params, grads, 0.1), NumericError);
}

TEST_CASE("global-norm clipping rescales exactly to the cap", "[adam-gradcheck]") {
    std::vector<Tensor> grads = {Tensor(1, 1, 3.0), Tensor(1, 1, 4.0)}; // norm 5
    clip_global_norm(grads, 1.0);
    CHECK(grads[0][0] == Catch::Approx(0.6));
    CHECK(grads[1][0] == Catch::Approx(0.8));
    std::vector<Tensor> small = {Tensor(1, 1, 0.1)};
    clip_global_norm(small, 1.0);
    CHECK(small[0][0] == 0.1); // under the cap: untouched
}

TEST_CASE("finite differences confirm the gradient of a linear map", "[adam-gradcheck]") {
    std::mt19937_64 rng(5);
    Tensor w = random_tensor(3, 4, rng);
    Tensor x = random_tensor(4, 2, rng);
    Tensor y = random_tensor(3, 2, rng, 5.0, 6.0); // keep residuals far from zero

    auto eval = [&] {
        Tape t;
        Var wv = t.param(w);
        return t.value(t.mean_abs_error(t.affine(wv, t.constant(x)), t.constant(y)))[0];
    };
    Tape t;
    Var wv = t.param(w);
    Var loss = t.mean_abs_error(t.affine(wv, t.constant(x)), t.constant(y));
    t.backward(loss);
    std::vector<Tensor> analytic = {t.grad(wv)};
    std::vector<Tensor*> params = {&w};
    // linear in W: the difference quotient is exact for any h that stays on
    // one side of the residual kinks, so a larger h avoids cancellation noise
    CHECK(check_gradients(params, analytic, eval, 1e-3) <= 1e-10);
}

TEST_CASE("a corrupted gradient is flagged by the checker", "[adam-gradcheck]") {
    std::mt19937_64 rng(6);
    Tensor w = random_tensor(2, 3, rng);
    Tensor x = random_tensor(3, 2, rng);
    Tensor y = random_tensor(2, 2, rng, 5.0, 6.0);

    auto eval = [&] {
        Tape t;
        Var wv = t.param(w);
        return t.value(t.mean_abs_error(t.affine(wv, t.constant(x)), t.constant(y)))[0];
    };
    Tape t;
    Var wv = t.param(w);
    Var loss = t.mean_abs_error(t.affine(wv, t.constant(x)), t.constant(y));
    t.backward(loss);
    std::vector<Tensor> corrupted = {t.grad(wv)};
    for (std::size_t i = 0; i < corrupted[0].size(); ++i) corrupted[0][i] *= 1.10;
    std::vector<Tensor*> params = {&w};
    CHECK(check_gradients(params, corrupted, eval, 1e-5) >= 0.09);
}

TEST_CASE("h must be positive", "[adam-gradcheck]") {
    Tensor w(1, 1, 1.0);
    std::vector<Tensor*> params = {&w};
    std::vector<Tensor> g = {Tensor(1, 1, 1.0)};
    CHECK_THROWS_AS(check_gradients(params, g, [] { return 0.0; }, 0.0), Error);
}

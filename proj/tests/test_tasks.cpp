#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "metamem/tasks.hpp"

using namespace metamem;

TEST_CASE("sinewave task grid") {
    TaskSet ts = gen_sinewave_tasks();
    CHECK(ts.n() == 25);
    std::set<std::pair<double, double>> seen;
    for (const Task& t : ts.tasks) {
        const auto& sw = std::get<SinewaveBackend>(t.backend);
        seen.insert({sw.amplitude, sw.phase});
        CHECK(sw.amplitude >= 1.0);
        CHECK(sw.amplitude <= 5.0);
    }
    CHECK(seen.size() == 25);
    // closed-form target values
    const auto& t1 = std::get<SinewaveBackend>(ts.task(5).backend);  // A=1, phi=pi
    CHECK(t1.amplitude == 1.0);
    CHECK(t1.amplitude * std::sin(t1.phase + 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    const auto& t2 = std::get<SinewaveBackend>(ts.task(11).backend);  // A=3, phi=pi/5
    CHECK(t2.amplitude == 3.0);
    CHECK(3.0 * std::sin(std::numbers::pi / 5.0) == doctest::Approx(1.76336).epsilon(1e-4));
}

TEST_CASE("unseen sinewave distribution") {
    RngStream rng(3);
    double mean_a = 0.0;
    for (int k = 0; k < 10000; ++k) {
        Task t = gen_unseen_sinewave(rng);
        const auto& sw = std::get<SinewaveBackend>(t.backend);
        CHECK(sw.amplitude >= 1.0);
        CHECK(sw.amplitude <= 5.0);
        CHECK(sw.phase >= std::numbers::pi / 5.0);
        CHECK(sw.phase <= std::numbers::pi);
        mean_a += sw.amplitude;
    }
    CHECK(mean_a / 10000.0 == doctest::Approx(3.0).epsilon(0.017));
}

TEST_CASE("sample_batch sinewave basics") {
    TaskSet ts = gen_sinewave_tasks();
    RngStream r1 = RngStream(9).substream("b", 0);
    Batch one = sample_batch(ts.task(1), 1, r1);
    CHECK(one.size() == 1);
    CHECK(one.inputs[0][0] >= -5.0);
    CHECK(one.inputs[0][0] <= 5.0);
    const auto& sw = std::get<SinewaveBackend>(ts.task(1).backend);
    CHECK(one.targets[0][0] ==
          doctest::Approx(sw.amplitude * std::sin(sw.phase + one.inputs[0][0])));

    RngStream ra = RngStream(9).substream("b", 1);
    RngStream rb = RngStream(9).substream("b", 1);
    Batch b1 = sample_batch(ts.task(2), 10, ra);
    Batch b2 = sample_batch(ts.task(2), 10, rb);
    CHECK(b1.inputs == b2.inputs);
    CHECK(b1.targets == b2.targets);

    RngStream rc = RngStream(9).substream("b", 2);
    CHECK_THROWS_AS(sample_batch(ts.task(1), 0, rc), std::invalid_argument);
}

TEST_CASE("sampled x has zero mean") {
    TaskSet ts = gen_sinewave_tasks();
    RngStream r = RngStream(13).substream("b", 0);
    Batch b = sample_batch(ts.task(1), 100000, r);
    double mean = 0.0;
    for (const auto& x : b.inputs) mean += x[0];
    mean /= static_cast<double>(b.size());
    CHECK(std::abs(mean) < 0.03);
}

TEST_CASE("sinewave tasks are noise-free") {
    TaskSet ts = gen_sinewave_tasks();
    RngStream ra = RngStream(1).substream("a", 0);
    Batch b = sample_batch(ts.task(7), 5, ra);
    const auto& sw = std::get<SinewaveBackend>(ts.task(7).backend);
    for (std::size_t k = 0; k < b.size(); ++k)
        CHECK(b.targets[k][0] == sw.amplitude * std::sin(sw.phase + b.inputs[k][0]));
}

TEST_CASE("quadratic stochastic_grad is exact without noise") {
    TaskSet ts = gen_quad_tasks(4, 3, 5.0, RngStream(21));
    RngStream r = RngStream(2).substream("b", 0);
    Batch b = sample_batch(ts.task(2), 3, r);
    ParamVector w(std::vector<double>{0.5, -0.2, 1.0});
    ParamVector g = stochastic_grad(ts, ts.task(2), w, b);
    ParamVector exact = ts.task(2).quadratic().model.grad(w);
    CHECK((g - exact).norm() == 0.0);
}

TEST_CASE("gradient of a batch union is the mean of sub-batch gradients") {
    TaskSet ts = gen_sinewave_tasks();
    RngStream r = RngStream(31).substream("b", 0);
    Batch b1 = sample_batch(ts.task(4), 4, r);
    Batch b2 = sample_batch(ts.task(4), 4, r);
    Batch both;
    both.inputs = b1.inputs;
    both.targets = b1.targets;
    both.inputs.insert(both.inputs.end(), b2.inputs.begin(), b2.inputs.end());
    both.targets.insert(both.targets.end(), b2.targets.begin(), b2.targets.end());
    ParamVector w = ts.arch->init_params(RngStream(31).substream("init", 0));
    ParamVector g1 = stochastic_grad(ts, ts.task(4), w, b1);
    ParamVector g2 = stochastic_grad(ts, ts.task(4), w, b2);
    ParamVector g = stochastic_grad(ts, ts.task(4), w, both);
    ParamVector mean = 0.5 * (g1 + g2);
    CHECK((g - mean).norm() < 1e-12);
}

TEST_CASE("stochastic_grad unbiasedness against a large-batch reference") {
    TaskSet ts = gen_sinewave_tasks();
    ParamVector w = ts.arch->init_params(RngStream(41).substream("init", 0));
    RngStream big = RngStream(41).substream("big", 0);
    Batch big_batch = sample_batch(ts.task(9), 100000, big);
    ParamVector ref = stochastic_grad(ts, ts.task(9), w, big_batch);

    // average 10^4 independent K=1 gradients; per-coordinate deviation within
    // 4 standard errors estimated from the same draws
    const int reps = 10000;
    ParamVector mean(w.size());
    ParamVector m2(w.size());
    RngStream root = RngStream(41).substream("small", 0);
    for (int k = 0; k < reps; ++k) {
        RngStream r = root.substream("draw", k);
        Batch b = sample_batch(ts.task(9), 1, r);
        ParamVector g = stochastic_grad(ts, ts.task(9), w, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            mean[i] += g[i];
            m2[i] += g[i] * g[i];
        }
    }
    int violations = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double m = mean[i] / reps;
        double var = m2[i] / reps - m * m;
        double se = std::sqrt(std::max(var, 1e-30) / reps);
        if (std::abs(m - ref[i]) > 4.0 * se + 1e-9) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("quadratic hvp independent of w (rho = 0 regime)") {
    TaskSet ts = gen_quad_tasks(3, 4, 6.0, RngStream(51));
    RngStream r = RngStream(52).substream("b", 0);
    Batch b = sample_batch(ts.task(1), 2, r);
    ParamVector v(std::vector<double>{1.0, -2.0, 0.5, 0.0});
    ParamVector w1(4, 0.0), w2(4, 3.0);
    ParamVector h1 = stochastic_hvp(ts, ts.task(1), w1, v, b);
    ParamVector h2 = stochastic_hvp(ts, ts.task(1), w2, v, b);
    CHECK((h1 - h2).norm() == 0.0);
    CHECK(stochastic_hvp(ts, ts.task(1), w1, ParamVector(4), b).norm() == 0.0);
}

TEST_CASE("mlp batch hvp is hvp_fd of the batch gradient") {
    TaskSet ts = gen_sinewave_tasks();
    ParamVector w = ts.arch->init_params(RngStream(61).substream("init", 0));
    RngStream r = RngStream(61).substream("b", 0);
    Batch b = sample_batch(ts.task(12), 6, r);
    ParamVector v(w.size());
    RngStream vr = RngStream(61).substream("v", 0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vr.normal();
    ParamVector h = stochastic_hvp(ts, ts.task(12), w, v, b);
    auto grad_fn = [&](const ParamVector& ww) {
        return ts.arch->loss_grad(ww, b.inputs, b.targets).second;
    };
    ParamVector ref = hvp_fd(grad_fn, w, v, default_hvp_eps(w));
    CHECK((h - ref).norm() < 1e-10);
}

TEST_CASE("gen_quad_tasks basics") {
    CHECK_THROWS_AS(gen_quad_tasks(2, 2, 0.5, RngStream(1)), std::invalid_argument);
    TaskSet ts = gen_quad_tasks(8, 4, 7.0, RngStream(71));
    CHECK(ts.n() == 8);
    for (const Task& t : ts.tasks) {
        CHECK(ts.L >= t.quadratic().model.max_eigenvalue() - 1e-9);
        ParamVector wstar = t.quadratic().model.minimizer();
        CHECK(t.quadratic().model.grad(wstar).norm() < 1e-10);
    }
    // tasks have distinct optima
    ParamVector w1 = ts.task(1).quadratic().model.minimizer();
    ParamVector w2 = ts.task(2).quadratic().model.minimizer();
    CHECK((w1 - w2).norm() > 1e-6);
}

TEST_CASE("blob client partition scheme") {
    TaskSet ts = gen_blob_clients(2, 3, 2, 4, RngStream(81));
    const auto& c1 = std::get<BlobBackend>(ts.task(1).backend);
    const auto& c2 = std::get<BlobBackend>(ts.task(2).backend);
    CHECK(c1.inputs.size() == 4);  // balanced: a samples of the single first class
    CHECK(c2.inputs.size() == 10); // skewed: a/2 + 2a
    int c2_class1 = 0, c2_class2 = 0;
    for (const auto& y : c2.targets) {
        if (y[0] == 1.0) ++c2_class1;
        if (y[1] == 1.0) ++c2_class2;
    }
    CHECK(c2_class1 == 2);
    CHECK(c2_class2 == 8);

    TaskSet big = gen_blob_clients(8, 4, 6, 8, RngStream(82));
    std::vector<int> class_counts(6, 0);
    for (const Task& t : big.tasks) {
        const auto& bk = std::get<BlobBackend>(t.backend);
        std::size_t expected = t.id <= 4 ? 8u * 3u : 4u + 16u;
        CHECK(bk.inputs.size() == expected);
        for (const auto& y : bk.targets)
            for (int c = 0; c < 6; ++c)
                if (y[static_cast<std::size_t>(c)] == 1.0) ++class_counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < 6; ++c) CHECK(class_counts[static_cast<std::size_t>(c)] >= 1);
}

TEST_CASE("taskset manifest is line oriented and reproducible") {
    TaskSet ts = gen_quad_tasks(3, 2, 4.0, RngStream(91));
    std::string m1 = taskset_manifest(ts);
    TaskSet ts2 = gen_quad_tasks(3, 2, 4.0, RngStream(91));
    CHECK(m1 == taskset_manifest(ts2));
    CHECK(std::count(m1.begin(), m1.end(), '\n') == 3);
}

#include <cmath>

#include "doctest.h"
#include "retina/model.hpp"
#include "retina/training.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace retina;

namespace {

double sum_of(std::span<const float> w) {
    double s = 0.0;
    for (float v : w) s += v;
    return s;
}

}  // namespace

TEST_CASE("parameter budget is 108") {
    const RetinaModel m = init_model();
    CHECK(m.parameter_count() == 108);
    CHECK(m.stage_g.parameter_count() == 30);
    CHECK(m.stage_f.parameter_count() == 78);
    CHECK(flatten(m.stage_g, m.stage_f).size() == 108);
    for (const auto& k : m.stage_g.kernels) CHECK(k.size() == 3);
    for (const auto& k : m.stage_f.kernels) CHECK(k.size() == 5);
}

TEST_CASE("init_model") {
    const RetinaModel m = init_model();
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(sum_of(m.stage_g.kernels[c].weights()) - 1.0) <= 1e-7);
        CHECK(std::abs(sum_of(m.stage_f.kernels[c].weights())) <= 1e-6);
        CHECK(m.stage_g.biases[c] == 0.0f);
        CHECK(m.stage_f.biases[c] == 0.0f);
    }
    CHECK(init_model() == init_model());
    CHECK(init_model({7, 1.0, 0.5, 1.0}).init_seed == 7);
    CHECK_THROWS_AS(init_model({42, 0.0, 0.5, 1.0}), InvalidParameterError);
    CHECK_THROWS_AS(init_model({42, 1.0, -0.5, 1.0}), InvalidParameterError);
}

TEST_CASE("parameter names cover every index") {
    CHECK(parameter_name(0) == "stage_g.kernel[0](0,0)");
    CHECK(parameter_name(27) == "stage_g.bias[0]");
    CHECK(parameter_name(30) == "stage_f.kernel[0](0,0)");
    CHECK(parameter_name(107) == "stage_f.bias[2]");
    CHECK(parameter_group(31) == "stage_f.kernel[0]");
    CHECK_THROWS(parameter_name(108));
}

TEST_CASE("forward of a zero image with zero biases is zero") {
    const Image out = infer(init_model(), Image(6, 7, 3));
    for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("zeroed model is the identity") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image img = test::random_image(5 + seed, 9, 3, seed);
        CHECK(infer(zero_model(), img) == img);
        CHECK(infer(zero_model(Padding::Zero), img) == img);
    }
}

TEST_CASE("forward matches hand-composed convolutions") {
    const RetinaModel m = init_model();
    const Image img = test::random_image(8, 8, 3, 21);
    const ForwardResult<float> fwd = forward(m, img);
    for (std::size_t c = 0; c < 3; ++c) {
        Plane in(8, 8, 1);
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x) in.at(y, x) = img.at(y, x, c);
        const ImageD h = test::naive_conv(in, m.stage_g.kernels[c], Padding::Replicate);
        Plane b(8, 8, 1);
        for (std::size_t i = 0; i < 64; ++i) b.data()[i] = static_cast<float>(in.data()[i] + h.data()[i]);
        const ImageD fb = test::naive_conv(b, m.stage_f.kernels[c], Padding::Replicate);
        for (std::size_t y = 0; y < 8; ++y) {
            for (std::size_t x = 0; x < 8; ++x) {
                const double v = in.at(y, x) + fb.at(y, x);
                CHECK(std::abs(fwd.output.at(y, x, c) - v) <= 1e-6);
                CHECK(std::abs(fwd.tape.h[c].at(y, x) - h.at(y, x)) <= 1e-6);
            }
        }
    }
    CHECK_THROWS_AS(forward(m, Image(4, 4, 1)), InvalidInputError);
}

TEST_CASE("channels never mix") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RetinaModel m = init_model();
        std::vector<float> p = flatten(m.stage_g, m.stage_f);
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> n(0.0f, 0.2f);
        for (float& v : p) v += n(rng);
        unflatten<float>(p, m.stage_g, m.stage_f);

        const Image img = test::random_image(9, 7, 3, seed);
        Image perturbed = img;
        for (std::size_t y = 0; y < 9; ++y)
            for (std::size_t x = 0; x < 7; ++x) perturbed.at(y, x, 0) += 0.3f;
        const Image a = infer(m, img);
        const Image b = infer(m, perturbed);
        bool ch0_changed = false;
        for (std::size_t y = 0; y < 9; ++y) {
            for (std::size_t x = 0; x < 7; ++x) {
                ch0_changed |= a.at(y, x, 0) != b.at(y, x, 0);
                CHECK(a.at(y, x, 1) == b.at(y, x, 1));
                CHECK(a.at(y, x, 2) == b.at(y, x, 2));
            }
        }
        CHECK(ch0_changed);
    }
}

TEST_CASE("with zero biases the network is linear in its input") {
    const RetinaModelD m = init_model().cast<double>();
    const ImageD x = test::random_image<double>(8, 8, 3, 3);
    const ImageD y = test::random_image<double>(8, 8, 3, 4);
    ImageD mix(8, 8, 3);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = 2.5 * x.data()[i] - 0.75 * y.data()[i];
    const ImageD fx = infer(m, x);
    const ImageD fy = infer(m, y);
    const ImageD fm = infer(m, mix);
    for (std::size_t i = 0; i < fm.size(); ++i) {
        CHECK(fm.data()[i] == doctest::Approx(2.5 * fx.data()[i] - 0.75 * fy.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("backward: zero upstream gives zero gradients") {
    const RetinaModel m = init_model();
    const auto fwd = forward(m, test::random_image(6, 6, 3, 1));
    const ModelGrads<float> g = backward(m, fwd.tape, Image(6, 6, 3));
    for (float v : flatten(g.stage_g, g.stage_f)) CHECK(v == 0.0f);
    CHECK_THROWS_AS(backward(m, fwd.tape, Image(5, 6, 3)), InvalidInputError);
}

TEST_CASE("backward: bias gradients are channel sums of the stage-output gradient") {
    const RetinaModelD m = make_gradcheck_draw(5).model;
    const ImageD img = test::random_image<double>(7, 5, 3, 8);
    const ImageD up = test::random_image<double>(7, 5, 3, 9, -1.0, 1.0);
    const auto fwd = forward(m, img);
    const ModelGrads<double> g = backward(m, fwd.tape, up);
    const auto up_planes = split_channels(up);
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (double v : up_planes[c].data()) s += v;
        CHECK(g.stage_f.biases[c] == doctest::Approx(s).epsilon(1e-12));
        // gradient reaching h equals the conv adjoint of upstream through f
        const auto gb = conv2d_backward(fwd.tape.b[c], m.stage_f.kernels[c], up_planes[c], m.padding).input;
        double sb = 0.0;
        for (double v : gb.data()) sb += v;
        CHECK(g.stage_g.biases[c] == doctest::Approx(sb).epsilon(1e-12));
    }
}

TEST_CASE("backward matches finite differences over 20 random draws") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GradCheckDraw d = make_gradcheck_draw(1000 + seed);
        const GradCheckReport r = grad_check(d.model, d.image, d.target, {1e-4, false});
        CHECK(r.parameters.size() == 108);
        CHECK(r.max_relative_error < 1e-5);
    }
}

TEST_CASE("bc_recursive") {
    const VariantConfig cfg{1.0, 0.0, BcVariant::Recursive};
    const Plane i(1, 1, 1, {0.5f});
    const Plane h(1, 1, 1, {0.5f});
    CHECK(bc_recursive(i, h, cfg).at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-7));

    const Plane dark(1, 1, 1, {0.2f});
    const Plane zero(1, 1, 1, {0.0f});
    CHECK(bc_recursive(dark, zero, {0.01, 0.0, BcVariant::Recursive}).at(0, 0) == doctest::Approx(20.0).epsilon(1e-6));

    Plane hz(2, 3, 1, {0.f, 0.f, 0.f, 0.f, -1.0f, 0.f});
    try {
        bc_recursive(Plane(2, 3, 1), hz, cfg);
        FAIL("expected division by zero");
    } catch (const DivisionByZeroError& e) {
        CHECK(e.row() == 1);
        CHECK(e.col() == 1);
    }
    CHECK_THROWS_AS(bc_recursive(i, h, {0.0, 0.0, BcVariant::Recursive}), InvalidParameterError);

    const Plane p = test::random_image(6, 6, 1, 4);
    const Plane q = test::random_image(6, 6, 1, 5);
    const Plane got = bc_recursive(p, q, {0.3, 0.0, BcVariant::Recursive});
    for (std::size_t n = 0; n < 36; ++n) {
        const double want = static_cast<double>(p.data()[n]) / (0.3 + static_cast<double>(q.data()[n]));
        CHECK(std::abs(got.data()[n] - want) <= 1e-7 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("bc_fir") {
    const Plane p = test::random_image(5, 5, 1, 1);
    const Plane h = test::random_image(5, 5, 1, 2);
    CHECK(bc_fir(p, h, {1.0, 0.0, BcVariant::Fir}) == p);
    CHECK(bc_fir(Plane(1, 1, 1, {0.5f}), Plane(1, 1, 1, {0.4f}), {1.0, 2.0, BcVariant::Fir}).at(0, 0) ==
          doctest::Approx(0.9).epsilon(1e-7));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coef(0.0, 2.0);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const double a = coef(rng), b = coef(rng);
        const Plane out = bc_fir(test::random_image(6, 6, 1, seed), test::random_image(6, 6, 1, seed + 40),
                                 {a, b, BcVariant::Fir});
        for (float v : out.data()) {
            CHECK(v >= 0.0f);
            CHECK(v <= a + b + 1e-6);
        }
    }
    CHECK_THROWS_AS(bc_fir(p, Plane(4, 5, 1), {}), InvalidInputError);
}

TEST_CASE("residual path is bounded while the divisive path is not") {
    const RetinaModel m = init_model();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Image dark = test::random_image(12, 12, 3, seed, 0.0, 0.05);
        dark.at(3 + seed % 6, 5, seed % 3) = 0.2f;  // isolated highlight over a dark surround
        const auto fwd = forward(m, dark);
        for (std::size_t c = 0; c < 3; ++c) {
            for (float v : fwd.tape.h[c].data()) {
                CHECK(v >= -1e-7f);
                CHECK(v <= 1.0f + 1e-6f);
            }
            for (float v : fwd.tape.b[c].data()) {
                CHECK(v >= -1e-7f);
                CHECK(v <= 2.0f + 1e-6f);
            }
        }
        const Image rec = modulate_bipolar(dark, 1.0, {0.01, 0.0, BcVariant::Recursive});
        CHECK(*std::max_element(rec.data().begin(), rec.data().end()) > 2.0f);
    }
}

TEST_CASE("modulate_bipolar residual equals the forward tape's b") {
    const Image img = test::random_image(10, 13, 3, 77);
    const auto fwd = forward(init_model(), img);
    const Image b = modulate_bipolar(img, 1.0, {1.0, 1.0, BcVariant::Residual});
    CHECK(b == merge_channels(fwd.tape.b));
}

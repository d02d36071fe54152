#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "rfadex/data.hpp"
#include "rfadex/error.hpp"
#include "rfadex/model.hpp"
#include "rfadex/rng.hpp"

using namespace rfadex;

namespace {

template <typename T>
std::vector<T> random_input(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<T> x(n);
    for (auto& v : x) v = static_cast<T>(rng.normal());
    return x;
}

// Plain-loop forward pass, written from the documented parameter layout:
// conv weights are [out][in_channel * width + k], dense weights [out][in], biases follow.
std::vector<double> oracle_forward(const ModelF64& m, const std::vector<double>& x) {
    std::vector<double> a = x;
    for (std::size_t li = 0; li < m.arch.layers.size(); ++li) {
        const auto& l = m.arch.layers[li];
        const auto& p = m.params[li];
        std::vector<double> y(static_cast<std::size_t>(l.out_size()));
        switch (l.kind) {
            case LayerKind::deinterleave:
                for (int t = 0; t < l.out_length; ++t) {
                    y[t] = a[2 * t];
                    y[l.out_length + t] = a[2 * t + 1];
                }
                break;
            case LayerKind::relu:
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] > 0 ? a[i] : 0.0;
                break;
            case LayerKind::conv1d:
                for (int o = 0; o < l.out_channels; ++o)
                    for (int t = 0; t < l.out_length; ++t) {
                        double s = p[l.weight_count() + o];
                        for (int c = 0; c < l.in_channels; ++c)
                            for (int k = 0; k < l.width; ++k)
                                s += p[(o * l.in_channels + c) * l.width + k] * a[c * l.in_length + t * l.stride + k];
                        y[o * l.out_length + t] = s;
                    }
                break;
            case LayerKind::dense:
                for (int o = 0; o < l.out_channels; ++o) {
                    double s = p[l.weight_count() + o];
                    for (int i = 0; i < l.in_size(); ++i) s += p[o * l.in_size() + i] * a[i];
                    y[o] = s;
                }
                break;
        }
        a = std::move(y);
    }
    return a;
}

double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

Architecture small_architecture(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t samples = 8 + rng.below(25);
    ArchitectureBuilder b(samples);
    b.conv(2 + static_cast<int>(rng.below(4)), 2 + static_cast<int>(rng.below(4)), 1 + static_cast<int>(rng.below(2)))
        .relu();
    if (rng.below(2)) b.conv(2 + static_cast<int>(rng.below(3)), 2, 1).relu();
    b.dense(3 + static_cast<int>(rng.below(6))).relu().dense(2 + static_cast<int>(rng.below(4)));
    return b.build();
}

}  // namespace

TEST_CASE("default architecture parameter count") {
    const auto arch = default_cnn_architecture(4);
    const std::size_t conv1 = 16 * 2 * 8 + 16;
    const std::size_t len1 = (1024 - 8) / 2 + 1;
    const std::size_t conv2 = 32 * 16 * 8 + 32;
    const std::size_t len2 = (len1 - 8) / 2 + 1;
    const std::size_t dense1 = 64 * 32 * len2 + 64;
    const std::size_t dense2 = 4 * 64 + 4;
    CHECK(len1 == 509);
    CHECK(len2 == 251);
    CHECK(arch.parameter_count() == conv1 + conv2 + dense1 + dense2);
    CHECK(arch.parameter_count() == 518772);
    CHECK(arch.input_size() == 2048);
    CHECK(arch.class_count() == 4);
    CHECK(default_cnn_architecture(3).class_count() == 3);
    CHECK_THROWS_AS(default_cnn_architecture(1), InvalidArgument);
    CHECK_THROWS_AS(ArchitectureBuilder(4).conv(2, 5, 1), InvalidArgument);
    CHECK_THROWS_AS(ArchitectureBuilder(4).conv(2, 2, 1).build(), InvalidArgument);
}

TEST_CASE("init_model") {
    const auto a = init_model("default_cnn", 42);
    const auto b = init_model("default_cnn", 42);
    CHECK(a == b);
    CHECK_FALSE(a == init_model("default_cnn", 43));
    CHECK_THROWS_AS(init_model("resnet", 1), InvalidArgument);
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        CHECK(a.params[i].size() == a.arch.layers[i].param_count());
        const double bound = 1.0 / std::sqrt(static_cast<double>(a.arch.layers[i].fan_in()));
        for (float v : a.params[i]) CHECK(std::abs(v) <= bound);
    }
    const std::vector<float> zero(kInputLength, 0.0f);
    const auto logits = forward<float>(a, zero);
    CHECK(logits.size() == 4);
    for (float z : logits) CHECK(std::isfinite(z));
}

TEST_CASE("forward matches a loop oracle on toy nets") {
    const std::vector<Architecture> archs{
        ArchitectureBuilder(2).conv(3, 2, 1).relu().dense(2).build(),
        ArchitectureBuilder(2).conv(3, 1, 1).relu().dense(4).relu().dense(3).build(),
        ArchitectureBuilder(9).conv(4, 3, 2).relu().conv(2, 2, 1).relu().dense(3).build(),
    };
    std::uint64_t seed = 1;
    for (const auto& arch : archs) {
        const auto m = init_model<double>(arch, seed);
        for (int trial = 0; trial < 5; ++trial) {
            const auto x = random_input<double>(static_cast<std::size_t>(arch.input_size()), seed * 100 + trial);
            const auto got = forward<double>(m, x);
            const auto want = oracle_forward(m, x);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6);
            const auto mf = m.cast<float>();
            const auto gf = forward<float>(mf, std::vector<float>(x.begin(), x.end()));
            for (std::size_t i = 0; i < gf.size(); ++i) CHECK(std::abs(gf[i] - want[i]) < 1e-4);
        }
        ++seed;
    }

    SUBCASE("hand-computed 4-input net") {
        ModelF64 m;
        m.arch = ArchitectureBuilder(2).conv(1, 1, 1).relu().dense(2).build();
        // conv: w = [1, -1] over (I, Q), bias 0.5; dense: [[1, 2], [-1, 0]], bias [0, 1]
        m.params = {{}, {1.0, -1.0, 0.5}, {}, {1.0, 2.0, -1.0, 0.0, 0.0, 1.0}};
        const std::vector<double> x{3.0, 1.0, -2.0, 4.0};  // I=[3,-2], Q=[1,4]
        // conv -> [3-1+0.5, -2-4+0.5] = [2.5, -5.5] -> relu [2.5, 0]
        const auto z = forward<double>(m, x);
        CHECK(z[0] == doctest::Approx(2.5));
        CHECK(z[1] == doctest::Approx(-1.5));
    }
}

TEST_CASE("batch forward equals per-record forward") {
    const auto m = init_model("default_cnn", 5);
    Matrix<float> batch(kInputLength, 4);
    const auto x0 = random_input<float>(kInputLength, 1), x1 = random_input<float>(kInputLength, 2);
    batch.col(0) = Eigen::Map<const Eigen::VectorXf>(x0.data(), kInputLength);
    batch.col(1) = Eigen::Map<const Eigen::VectorXf>(x1.data(), kInputLength);
    batch.col(2) = batch.col(0);
    batch.col(3) = batch.col(1);
    const auto out = forward_batch<float>(m, batch);
    const auto z0 = forward<float>(m, x0), z1 = forward<float>(m, x1);
    for (int c = 0; c < 4; ++c) {
        CHECK(out(c, 0) == z0[c]);
        CHECK(out(c, 1) == z1[c]);
        CHECK(out(c, 2) == out(c, 0));
        CHECK(out(c, 3) == out(c, 1));
    }
    const auto one = forward_batch<float>(m, batch.leftCols(1));
    for (int c = 0; c < 4; ++c) CHECK(one(c, 0) == z0[c]);

    CHECK_THROWS_AS(forward<float>(m, std::vector<float>(2047)), InvalidArgument);
    CHECK_THROWS_AS(forward_batch<float>(m, Matrix<float>(10, 2)), InvalidArgument);
    CHECK_THROWS_AS(forward_batch<float>(m, Matrix<float>(kInputLength, 0)), InvalidArgument);
}

TEST_CASE("softmax") {
    const auto u = softmax<double>(std::vector<double>{0, 0, 0});
    for (double p : u) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto s = softmax<double>(std::vector<double>{1000, 0, 0});
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] < 1e-300);
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> z(5);
        for (auto& v : z) v = rng.normal() * 10;
        auto shifted = z;
        const double c = rng.uniform(-500, 500);
        for (auto& v : shifted) v += c;
        const auto p = softmax<double>(z), q = softmax<double>(shifted);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::abs(p[i] - q[i]) < 1e-9);
            CHECK(p[i] >= 0.0);
            CHECK(p[i] <= 1.0);
            sum += p[i];
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("loss") {
    ModelF64 m = init_model<double>(ArchitectureBuilder(4).conv(2, 2, 1).relu().dense(4).build(), 3);
    const auto x = random_input<double>(8, 6);

    SUBCASE("uniform prediction gives ln 4") {
        auto zero = m;
        for (auto& v : zero.params.back()) v = 0.0;
        for (int y = 0; y < 4; ++y) CHECK(loss<double>(zero, x, y) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("perfect prediction gives zero") {
        auto sure = m;
        auto& last = sure.params.back();
        std::fill(last.begin(), last.end(), 0.0);
        last[last.size() - 4 + 2] = 1e4;
        CHECK(loss<double>(sure, x, 2) == doctest::Approx(0.0));
        CHECK(loss<double>(sure, x, 2) >= 0.0);
    }
    SUBCASE("composed manually") {
        const auto p = softmax<double>(forward<double>(m, x));
        for (int y = 0; y < 4; ++y) CHECK(loss<double>(m, x, y) == doctest::Approx(-std::log(p[y])).epsilon(1e-12));
    }
    CHECK_THROWS_AS(loss<double>(m, x, 4), InvalidArgument);
    CHECK_THROWS_AS(loss<double>(m, x, -1), InvalidArgument);
    CHECK_THROWS_AS(input_gradient<double>(m, x, 7), InvalidArgument);
    CHECK_THROWS_AS(predict<double>(m, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("input gradient matches central differences") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto arch = small_architecture(s);
        const auto m = init_model<double>(arch, 1000 + s);
        const auto x = random_input<double>(static_cast<std::size_t>(arch.input_size()), 2000 + s);
        const int label = static_cast<int>(s % static_cast<std::uint64_t>(arch.class_count()));
        const auto g = input_gradient<double>(m, x, label);
        REQUIRE(g.size() == x.size());
        Rng pick(3000 + s);
        const double h = 1e-6;
        for (int k = 0; k < 32; ++k) {
            const auto i = pick.below(x.size());
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (loss<double>(m, xp, label) - loss<double>(m, xm, label)) / (2 * h);
            CHECK(rel_error(g[i], fd) <= 1e-3);
        }
    }
}

TEST_CASE("parameter gradient matches central differences") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto arch = small_architecture(50 + s);
        auto m = init_model<double>(arch, 4000 + s);
        const auto x = random_input<double>(static_cast<std::size_t>(arch.input_size()), 5000 + s);
        const int label = 0;
        const auto g = parameter_gradient<double>(m, x, label);
        REQUIRE(g.size() == m.params.size());
        Rng pick(6000 + s);
        const double h = 1e-6;
        for (std::size_t layer = 0; layer < m.params.size(); ++layer) {
            REQUIRE(g[layer].size() == m.params[layer].size());
            for (int k = 0; k < 8 && !m.params[layer].empty(); ++k) {
                const auto i = pick.below(m.params[layer].size());
                const double orig = m.params[layer][i];
                m.params[layer][i] = orig + h;
                const double lp = loss<double>(m, x, label);
                m.params[layer][i] = orig - h;
                const double lm = loss<double>(m, x, label);
                m.params[layer][i] = orig;
                CHECK(rel_error(g[layer][i], (lp - lm) / (2 * h)) <= 1e-3);
            }
        }
    }
}

TEST_CASE("input gradient edge cases") {
    const auto arch = small_architecture(7);
    auto m = init_model<double>(arch, 8);
    const auto x = random_input<double>(static_cast<std::size_t>(arch.input_size()), 9);

    auto zeroed = m;
    std::fill(zeroed.params.back().begin(), zeroed.params.back().end(), 0.0);
    for (double v : input_gradient<double>(zeroed, x, 1)) CHECK(v == 0.0);

    const auto g = input_gradient<double>(m, x, 1);
    const auto g3 = input_gradient<double>(m, x, 1, 3.5);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g3[i] - 3.5 * g[i]) <= 1e-9 * std::max(1.0, std::abs(g3[i])));

    const auto mf = init_model("default_cnn", 3);
    const auto xf = random_input<float>(kInputLength, 3);
    const auto gf = input_gradient<float>(mf, xf, 2);
    CHECK(gf.size() == kInputLength);
    for (float v : gf) CHECK(std::isfinite(v));
    const auto gd = input_gradient<double>(mf.cast<double>(), std::vector<double>(xf.begin(), xf.end()), 2);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gf.size(); ++i) {
        num += (gf[i] - gd[i]) * (gf[i] - gd[i]);
        den += gd[i] * gd[i];
    }
    CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("predict is the argmax") {
    const auto m = init_model("default_cnn", 12);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto x = random_input<float>(kInputLength, s);
        const auto z = forward<float>(m, x);
        CHECK(predict<float>(m, x) == static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()));
    }
}

TEST_CASE("checkpoint round trip and errors") {
    const auto m = init_model("default_cnn", 77);
    const auto bytes = encode_checkpoint(m);
    CHECK(bytes.size() == 4 + 2 + 2 + 4 + m.params.size() * 8 + m.arch.parameter_count() * 4);
    CHECK(bytes[0] == 'R');
    CHECK(bytes[3] == 'D');
    CHECK(decode_checkpoint(bytes) == m);

    const auto m3 = init_model("default_cnn", 77, 3);
    const auto back3 = decode_checkpoint(encode_checkpoint(m3));
    CHECK(back3 == m3);
    CHECK(back3.class_count() == 3);

    const auto path = std::filesystem::temp_directory_path() / "rfadex_test_model.rfmd";
    write_checkpoint(m, path);
    CHECK(read_checkpoint(path) == m);
    std::filesystem::remove(path);

    auto code_of = [](std::vector<std::uint8_t> b) {
        try {
            (void)decode_checkpoint(b);
        } catch (const FormatError& e) {
            return e.code();
        }
        return FormatErrc::io;
    };
    auto bad = bytes;
    bad[1] = 'X';
    CHECK(code_of(bad) == FormatErrc::bad_magic);
    bad = bytes;
    bad[4] = 9;
    CHECK(code_of(bad) == FormatErrc::unsupported_version);
    bad = bytes;
    bad[6] = 3;
    CHECK(code_of(bad) == FormatErrc::architecture_mismatch);
    CHECK(code_of(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 10)) == FormatErrc::truncated);
    CHECK(code_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 9)) == FormatErrc::truncated);

    // Corrupt the first blob length: the decoder must not accept a shape the default CNN lacks.
    bad = bytes;
    bad[12] = 1;
    bad[13] = 0;
    CHECK(code_of(bad) != FormatErrc::io);

    CHECK_THROWS_AS(read_checkpoint("/nonexistent/dir/x.rfmd"), FormatError);
    CHECK_THROWS_AS(encode_checkpoint(init_model<float>(ArchitectureBuilder(4).conv(2, 2, 1).dense(2).build(), 1)),
                    InvalidArgument);
}

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "rfadex/attack.hpp"
#include "rfadex/detect.hpp"
#include "rfadex/error.hpp"
#include "rfadex/rng.hpp"
#include "rfadex/training.hpp"

using namespace rfadex;

namespace {

// Exhaustive sup |F_a - F_b| over every pooled point with right-continuous ECDFs.
double brute_force_d(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    double best = 0.0;
    for (double x : pooled) {
        const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [x](double v) { return v <= x; })) /
                          static_cast<double>(a.size());
        const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [x](double v) { return v <= x; })) /
                          static_cast<double>(b.size());
        best = std::max(best, std::abs(fa - fb));
    }
    return best;
}

double series_pvalue(double d, double n, double m) {
    const double ne = n * m / (n + m);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) s += (j % 2 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    return std::clamp(2.0 * s, 0.0, 1.0);
}

Dataset small_dataset(std::size_t per_class, std::uint64_t seed) {
    Dataset ds;
    for (auto c : kAllModClasses)
        for (std::size_t i = 0; i < per_class; ++i)
            ds.records.push_back(to_record(generate_frame(c, 18.0, {}, derive_seed(seed, {code(c), i}))));
    return ds;
}

const Model& toy_model() {
    static const Model m = [] {
        TrainConfig cfg;
        cfg.epochs = 6;
        cfg.batch_size = 32;
        cfg.seed = 4;
        return train(init_model("default_cnn", 3), small_dataset(60, 1), cfg).model;
    }();
    return m;
}

StatSample sample_of(std::vector<double> v, Source s = Source::legitimate, int c = 0) {
    StatSample out;
    out.values = std::move(v);
    out.source = s;
    out.class_label = c;
    return out;
}

}  // namespace

TEST_CASE("papr") {
    const std::vector<ComplexSample> constant{{1, 0}, {0, 1}, {-0.6, 0.8}, {0, -1}};
    CHECK(papr(constant) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<ComplexSample> two{{1, 0}, {3, 0}};
    CHECK(papr(two) == doctest::Approx(1.8).epsilon(1e-15));
    CHECK_THROWS_AS(papr(std::vector<ComplexSample>(8)), DomainError);
    CHECK_THROWS_AS(papr(std::vector<ComplexSample>{}), DomainError);

    const auto f = generate_frame(ModClass::qam16, 16.0, {}, 5);
    CHECK(papr(f.samples) >= 1.0);
    for (double g : {1e-3, 0.5, 7.3, 1e4}) CHECK(std::abs(papr(apply_gain(f, g).samples) - papr(f.samples)) < 1e-9);
    const auto v = interleave_iq(f);
    CHECK(papr_interleaved(v) == doctest::Approx(papr(deinterleave_iq(v))).epsilon(1e-15));
}

TEST_CASE("softmax entropy") {
    CHECK(softmax_entropy(std::vector<double>{0, 1, 0}) == 0.0);
    CHECK(softmax_entropy(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(softmax_entropy(std::vector<double>{0.5, 0.5, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(softmax_entropy(std::vector<double>(4, 0.25)) - std::log(4.0)) < 1e-9);
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> p(4);
        for (auto& v : p) v = rng.uniform();
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= s;
        const double h = softmax_entropy(p);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(4.0) + 1e-12);
    }
}

TEST_CASE("ks statistic") {
    const std::vector<double> a{1, 2, 3}, b{1.5, 2.5};
    const auto r = ks_two_sample(a, b);
    CHECK(r.d_statistic == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r.n == 3);
    CHECK(r.m == 2);

    const auto same = ks_two_sample(a, a);
    CHECK(same.d_statistic == 0.0);
    CHECK(same.p_value == 1.0);

    const std::vector<double> low{1, 2, 3}, high{4, 5};
    CHECK(ks_two_sample(low, high).d_statistic == 1.0);

    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, b), InvalidArgument);
    CHECK_THROWS_AS(ks_two_sample(a, std::vector<double>{}), InvalidArgument);

    SUBCASE("brute force on small samples with ties") {
        Rng rng(11);
        for (int t = 0; t < 1000; ++t) {
            const std::size_t n = 1 + rng.below(11);
            const std::size_t m = 1 + rng.below(12 - n);
            std::vector<double> x(n), y(m);
            for (auto& v : x) v = static_cast<double>(rng.below(6));
            for (auto& v : y) v = static_cast<double>(rng.below(6));
            const auto res = ks_two_sample(x, y);
            CHECK(std::abs(res.d_statistic - brute_force_d(x, y)) < 1e-12);
            CHECK(res.p_value >= 0.0);
            CHECK(res.p_value <= 1.0);
            const auto swapped = ks_two_sample(y, x);
            CHECK(swapped.d_statistic == res.d_statistic);
            CHECK(swapped.p_value == res.p_value);
        }
    }
    SUBCASE("invariant under the dB map") {
        Rng rng(12);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> x(40), y(55);
            for (auto& v : x) v = 1.0 + rng.uniform() * 4.0;
            for (auto& v : y) v = 1.0 + rng.uniform() * 5.0;
            auto xd = x, yd = y;
            for (auto& v : xd) v = 10.0 * std::log10(v);
            for (auto& v : yd) v = 10.0 * std::log10(v);
            const auto lin = ks_two_sample(x, y), db = ks_two_sample(xd, yd);
            CHECK(lin.d_statistic == db.d_statistic);
            CHECK(lin.p_value == db.p_value);
        }
    }
}

TEST_CASE("ks p-value") {
    CHECK(ks_pvalue(0.0, 10, 10) == 1.0);
    CHECK(ks_pvalue(1.0, 200, 200) < 1e-12);
    CHECK(std::abs(ks_pvalue(0.2, 50, 50) - series_pvalue(0.2, 50, 50)) < 1e-9);
    for (double d = 0.0; d <= 1.0; d += 0.01)
        for (std::size_t n : {1u, 5u, 50u, 1000u}) {
            const double p = ks_pvalue(d, n, n + 3);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            if (d >= 0.05) CHECK(std::abs(p - series_pvalue(d, n, n + 3.0)) < 1e-9);
        }
    double prev = 1.0;
    for (double d = 0.0; d <= 1.0; d += 0.02) {
        const double p = ks_pvalue(d, 60, 80);
        CHECK(p <= prev + 1e-15);
        prev = p;
    }
    CHECK_THROWS_AS(ks_pvalue(1.5, 10, 10), InvalidArgument);
    CHECK_THROWS_AS(ks_pvalue(0.5, 0, 10), InvalidArgument);
}

TEST_CASE("grouping by predicted class") {
    auto m = init_model("default_cnn", 8);
    auto& last = m.params.back();
    std::fill(last.begin(), last.end(), 0.0f);
    last[last.size() - 4 + 2] = 5.0f;  // bias towards class 2
    const auto ds = small_dataset(5, 3);
    for (auto kind : {StatKind::papr, StatKind::entropy}) {
        const auto g = build_stat_samples(ds, m, kind, Source::adversarial);
        REQUIRE(g.groups.size() == 4);
        CHECK(g.empty_classes() == std::vector<int>{0, 1, 3});
        REQUIRE(g.groups[2].has_value());
        CHECK(g.groups[2]->values.size() == ds.size());
        CHECK(g.groups[2]->class_label == 2);
        CHECK(g.groups[2]->source == Source::adversarial);
        CHECK(g.groups[2]->kind == kind);
        CHECK(g.total() == ds.size());
    }
    const auto& trained = toy_model();
    const auto e = build_stat_samples(ds, trained, StatKind::entropy, Source::legitimate);
    const auto p = build_stat_samples(ds, trained, StatKind::papr, Source::legitimate);
    CHECK(e.total() == ds.size());
    const auto eval = evaluate(trained, ds);
    std::array<std::vector<double>, 4> want_papr, want_entropy;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        want_papr[eval.predicted[i]].push_back(papr_interleaved(ds.records[i].values));
        want_entropy[eval.predicted[i]].push_back(softmax_entropy(eval.softmax[i]));
    }
    for (int c = 0; c < 4; ++c) {
        if (want_papr[c].empty()) {
            CHECK_FALSE(p.groups[c].has_value());
            continue;
        }
        CHECK(p.groups[c]->values == want_papr[c]);
        CHECK(e.groups[c]->values == want_entropy[c]);
        for (double h : e.groups[c]->values) {
            CHECK(h >= 0.0);
            CHECK(h <= std::log(4.0) + 1e-12);
        }
    }
}

TEST_CASE("three instance experiment") {
    Rng rng(21);
    std::vector<double> legit(500), adex(300);
    for (auto& v : legit) v = rng.normal();
    for (auto& v : adex) v = rng.normal() + 1.0;
    const auto L = sample_of(legit), A = sample_of(adex, Source::adversarial);

    const auto r = run_three_instance_experiment(L, A, 200, 9);
    CHECK(r.subset_size == 200);
    CHECK(r.instances[0].instance == Instance::full);
    CHECK(r.instances[1].instance == Instance::subset);
    CHECK(r.instances[2].instance == Instance::control);
    CHECK(r.at(Instance::full).n == 500);
    CHECK(r.at(Instance::full).m == 300);
    CHECK(r.at(Instance::full).d_statistic == ks_two_sample(legit, adex).d_statistic);
    CHECK(r.at(Instance::subset).n == 200);
    CHECK(r.at(Instance::subset).m == 200);
    CHECK(r.at(Instance::control).n == 200);
    CHECK(r.at(Instance::full).p_value < 1e-3);
    CHECK(r.at(Instance::subset).p_value < 1e-3);

    const auto again = run_three_instance_experiment(L, A, 200, 9);
    CHECK(again.at(Instance::subset).d_statistic == r.at(Instance::subset).d_statistic);
    CHECK(again.at(Instance::control).d_statistic == r.at(Instance::control).d_statistic);

    const auto self = run_three_instance_experiment(L, L, 100, 3);
    CHECK(self.at(Instance::full).d_statistic == 0.0);
    CHECK(self.at(Instance::full).p_value == 1.0);

    CHECK_THROWS_AS(run_three_instance_experiment(L, A, 301, 1), InvalidArgument);
    CHECK_THROWS_AS(run_three_instance_experiment(L, A, 251, 1), InvalidArgument);
    CHECK_THROWS_AS(run_three_instance_experiment(L, A, 0, 1), InvalidArgument);
    CHECK_NOTHROW(run_three_instance_experiment(L, A, 250, 1));

    SUBCASE("control draws are disjoint") {
        // With distinct values, a disjoint pair of draws pools to 2 * subset distinct values.
        std::vector<double> idx(40);
        std::iota(idx.begin(), idx.end(), 0.0);
        const auto rep = run_three_instance_experiment(sample_of(idx), sample_of(idx, Source::adversarial), 20, 5);
        CHECK(rep.at(Instance::control).n == 20);
        CHECK(rep.at(Instance::control).m == 20);
    }
}

TEST_CASE("report and csv") {
    auto m = init_model("default_cnn", 8);
    auto& last = m.params.back();
    std::fill(last.begin(), last.end(), 0.0f);
    last[last.size() - 4 + 1] = 5.0f;
    const auto ds = small_dataset(30, 4);
    const auto adv = attack_dataset(m, ds, AttackConfig{});
    const auto gl = build_stat_samples(ds, m, StatKind::papr, Source::legitimate);
    const auto ga = build_stat_samples(adv, m, StatKind::papr, Source::adversarial);
    const auto rep = run_report(gl, ga, 50, 1);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].class_label == 1);
    CHECK(rep.notices.size() == 3);

    const auto csv = ks_csv(rep);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "stat_kind,class,instance,subset_size,n,m,D,p_value");
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.rfind("papr,", 0) == 0);
        ++rows;
    }
    CHECK(rows == 3);
    CHECK(ks_csv(KSReport{}) == "stat_kind,class,instance,subset_size,n,m,D,p_value\n");
}

TEST_CASE("calibration and point screening") {
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    GroupedStats g;
    g.kind = StatKind::papr;
    g.groups.resize(4);
    g.groups[0] = sample_of(v);
    const Calibration cal(g, 0.01);
    CHECK(cal.has_class(0));
    CHECK_FALSE(cal.has_class(1));
    CHECK(cal.band(0).first == 6.0);
    CHECK(cal.band(0).second == 995.0);
    CHECK_THROWS_AS(cal.band(1), DomainError);
    std::size_t outside = 0;
    for (double x : v) outside += (x < cal.band(0).first || x > cal.band(0).second) ? 1 : 0;
    CHECK(static_cast<double>(outside) / v.size() <= 0.01);
    CHECK(Calibration(g, 0.0).band(0) == std::make_pair(1.0, 1000.0));
    CHECK_THROWS_AS(Calibration(g, -0.1), InvalidArgument);
    CHECK_THROWS_AS(Calibration(g, 1.0), InvalidArgument);

    const auto& model = toy_model();
    const auto held = small_dataset(60, 77);
    for (auto kind : {StatKind::papr, StatKind::entropy}) {
        const Calibration c(build_stat_samples(held, model, kind, Source::legitimate), 0.01);
        std::size_t suspect = 0, total = 0;
        for (const auto& r : held.records) {
            const auto pc = detect_point(model, r.values, c);
            CHECK(pc.predicted == predict<float>(model, r.values));
            if (!c.has_class(pc.predicted)) continue;
            suspect += pc.verdict == Verdict::suspect;
            ++total;
        }
        CHECK(static_cast<double>(suspect) / total <= 0.01 + 1e-12);
    }

    // A PAPR far beyond anything seen in calibration is flagged.
    const Calibration pc(build_stat_samples(held, model, StatKind::papr, Source::legitimate), 0.01);
    auto spike = held.records[0].values;
    const int pred = predict<float>(model, spike);
    REQUIRE(pc.has_class(pred));
    spike[0] = 1e3f;
    const auto check = detect_point(model, spike, pc);
    if (check.predicted == pred) CHECK(check.verdict == Verdict::suspect);
    CHECK(check.statistic > 10 * pc.band(pred).second);

    GroupedStats missing;
    missing.kind = StatKind::papr;
    missing.groups.resize(4);
    CHECK_THROWS_AS(detect_point(model, spike, Calibration(missing, 0.01)), DomainError);
}

TEST_CASE("suspect rate rises under attack") {
    const auto& model = toy_model();
    const auto calib = small_dataset(60, 500);
    const auto test = small_dataset(40, 600);
    const auto adv = attack_dataset(model, test, AttackConfig{});
    for (auto kind : {StatKind::papr, StatKind::entropy}) {
        const Calibration c(build_stat_samples(calib, model, kind, Source::legitimate), 0.01);
        auto rate = [&](const Dataset& ds) {
            std::size_t s = 0;
            for (const auto& r : ds.records) {
                if (!c.has_class(predict<float>(model, r.values))) {
                    ++s;
                    continue;
                }
                s += detect_point(model, r.values, c).verdict == Verdict::suspect;
            }
            return static_cast<double>(s) / ds.size();
        };
        CHECK(rate(adv) > rate(test));
    }
}

#include "rfadex/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfadex/error.hpp"
#include "rfadex/parallel.hpp"
#include "rfadex/rng.hpp"

namespace rfadex {

const char* to_string(StatKind k) { return k == StatKind::papr ? "papr" : "entropy"; }
const char* to_string(Source s) { return s == Source::legitimate ? "legitimate" : "adversarial"; }
const char* to_string(Instance i) {
    switch (i) {
        case Instance::full: return "full";
        case Instance::subset: return "subset";
        case Instance::control: return "control";
    }
    return "?";
}

double papr(std::span<const ComplexSample> samples) {
    if (samples.empty()) throw DomainError("PAPR of an empty frame is undefined");
    double peak = 0.0;
    double total = 0.0;
    for (const auto& s : samples) {
        const double p = std::norm(s);
        peak = std::max(peak, p);
        total += p;
    }
    if (total <= 0.0) throw DomainError("PAPR of an all-zero frame is undefined");
    return peak / (total / static_cast<double>(samples.size()));
}

double papr_interleaved(std::span<const float> values) {
    if (values.size() % 2 != 0) throw InvalidArgument("interleaved vector has odd length");
    return papr(deinterleave_iq(values, values.size() / 2));
}

double softmax_entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return std::max(0.0, h);
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("KS statistic must lie in [0, 1]");
    if (n == 0 || m == 0) throw InvalidArgument("KS sample sizes must be positive");
    const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
    const double root = std::sqrt(ne);
    const double lambda = (root + 0.12 + 0.11 / root) * d;
    const double a2 = -2.0 * lambda * lambda;
    double sum = 0.0;
    double sign = 2.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = sign * std::exp(a2 * j * j);
        sum += term;
        if (std::abs(term) < 1e-12) return std::clamp(sum, 0.0, 1.0);
        sign = -sign;
    }
    // The series only fails to converge as lambda -> 0, where the tail probability is 1.
    return 1.0;
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("KS test needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    // Step both ECDFs past every copy of the next pooled value before comparing.
    while (i < x.size() || j < y.size()) {
        double v;
        if (j >= y.size() || (i < x.size() && x[i] <= y[j]))
            v = x[i];
        else
            v = y[j];
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return KSResult{d, ks_pvalue(d, x.size(), y.size()), x.size(), y.size()};
}

std::vector<int> GroupedStats::empty_classes() const {
    std::vector<int> out;
    for (std::size_t c = 0; c < groups.size(); ++c)
        if (!groups[c]) out.push_back(static_cast<int>(c));
    return out;
}

std::size_t GroupedStats::total() const {
    std::size_t n = 0;
    for (const auto& g : groups)
        if (g) n += g->values.size();
    return n;
}

double record_statistic(StatKind kind, std::span<const float> values, std::span<const double> probabilities) {
    return kind == StatKind::papr ? papr_interleaved(values) : softmax_entropy(probabilities);
}

GroupedStats build_stat_samples(const Dataset& records, const Model& model, StatKind kind, Source source) {
    if (records.empty()) throw InvalidArgument("no records to build statistics from");
    const auto classes = static_cast<std::size_t>(model.class_count());
    std::vector<double> stat(records.size());
    std::vector<int> predicted(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        const auto& v = records.records[i].values;
        const auto z = forward<float>(model, v);
        const auto p = softmax<float>(z);
        predicted[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        stat[i] = record_statistic(kind, v, p);
    });

    GroupedStats out;
    out.kind = kind;
    out.source = source;
    out.groups.resize(classes);
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& g = out.groups[static_cast<std::size_t>(predicted[i])];
        if (!g) g = StatSample{{}, source, predicted[i], kind};
        g->values.push_back(stat[i]);
    }
    return out;
}

namespace {

std::vector<double> draw(const std::vector<double>& pool, std::size_t count, Rng& rng) {
    std::vector<double> copy = pool;
    // Partial Fisher-Yates: the first `count` slots become a uniform draw without replacement.
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(copy.size() - i));
        std::swap(copy[i], copy[j]);
    }
    copy.resize(count);
    return copy;
}

}  // namespace

ClassReport run_three_instance_experiment(const StatSample& legit, const StatSample& adex, std::size_t subset_size,
                                          std::uint64_t seed) {
    if (legit.kind != adex.kind) throw InvalidArgument("legit and adversarial samples use different statistics");
    if (legit.class_label != adex.class_label) throw InvalidArgument("legit and adversarial samples differ in class");
    if (legit.values.empty() || adex.values.empty()) throw InvalidArgument("empty statistic sample");
    if (subset_size == 0) throw InvalidArgument("subset size must be positive");
    if (subset_size > adex.values.size() || 2 * subset_size > legit.values.size())
        throw InvalidArgument("subset size " + std::to_string(subset_size) + " too large for class " +
                              std::to_string(legit.class_label) + " (legit " + std::to_string(legit.values.size()) +
                              ", adversarial " + std::to_string(adex.values.size()) + ")");

    const auto salt = static_cast<std::uint64_t>(legit.class_label) * 4 + static_cast<std::uint64_t>(legit.kind);
    ClassReport r;
    r.kind = legit.kind;
    r.class_label = legit.class_label;
    r.subset_size = subset_size;

    r.instances[0] = {Instance::full, ks_two_sample(legit.values, adex.values)};

    Rng subset_rng(derive_seed(seed, {salt, 1}));
    const auto a = draw(legit.values, subset_size, subset_rng);
    const auto b = draw(adex.values, subset_size, subset_rng);
    r.instances[1] = {Instance::subset, ks_two_sample(a, b)};

    Rng control_rng(derive_seed(seed, {salt, 2}));
    const auto both = draw(legit.values, 2 * subset_size, control_rng);
    const std::span<const double> all(both);
    r.instances[2] = {Instance::control, ks_two_sample(all.first(subset_size), all.subspan(subset_size))};
    return r;
}

KSReport run_report(const GroupedStats& legit, const GroupedStats& adex, std::size_t subset_size, std::uint64_t seed) {
    if (legit.kind != adex.kind) throw InvalidArgument("statistic kinds differ");
    KSReport report;
    const std::size_t classes = std::max(legit.groups.size(), adex.groups.size());
    for (std::size_t c = 0; c < classes; ++c) {
        const bool has_legit = c < legit.groups.size() && legit.groups[c];
        const bool has_adex = c < adex.groups.size() && adex.groups[c];
        if (!has_legit || !has_adex) {
            std::ostringstream os;
            os << to_string(legit.kind) << ": class " << c << " skipped, no "
               << (has_legit ? "adversarial" : "legitimate") << " records predicted in it";
            report.notices.push_back(os.str());
            continue;
        }
        report.rows.push_back(run_three_instance_experiment(*legit.groups[c], *adex.groups[c], subset_size, seed));
    }
    return report;
}

std::string ks_csv(const KSReport& report) {
    std::ostringstream os;
    os.precision(10);
    os << "stat_kind,class,instance,subset_size,n,m,D,p_value\n";
    for (const auto& row : report.rows) {
        const auto cls = mod_class_from_code(row.class_label);
        for (const auto& inst : row.instances) {
            os << to_string(row.kind) << ',' << (cls ? std::string(name(*cls)) : std::to_string(row.class_label))
               << ',' << to_string(inst.instance) << ',' << row.subset_size << ',' << inst.ks.n << ',' << inst.ks.m
               << ',' << inst.ks.d_statistic << ',' << inst.ks.p_value << '\n';
        }
    }
    return os.str();
}

void write_ks_csv(const KSReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot write " + path.string());
    out << ks_csv(report);
}

Calibration::Calibration(const GroupedStats& legit, double alpha) : kind_(legit.kind), alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in [0, 1)");
    bands_.resize(legit.groups.size());
    for (std::size_t c = 0; c < legit.groups.size(); ++c) {
        if (!legit.groups[c]) continue;
        auto v = legit.groups[c]->values;
        std::sort(v.begin(), v.end());
        const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(v.size()) * alpha / 2.0));
        bands_[c] = std::make_pair(v[cut], v[v.size() - 1 - cut]);
    }
}

bool Calibration::has_class(int c) const {
    return c >= 0 && static_cast<std::size_t>(c) < bands_.size() && bands_[static_cast<std::size_t>(c)].has_value();
}

std::pair<double, double> Calibration::band(int c) const {
    if (!has_class(c)) throw DomainError("no calibration data for class " + std::to_string(c));
    return *bands_[static_cast<std::size_t>(c)];
}

PointCheck detect_point(const Model& model, std::span<const float> x, const Calibration& calibration) {
    const auto z = forward<float>(model, x);
    const auto p = softmax<float>(z);
    PointCheck out;
    out.predicted = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    out.statistic = record_statistic(calibration.kind(), x, p);
    const auto [lo, hi] = calibration.band(out.predicted);
    out.verdict = out.statistic < lo || out.statistic > hi ? Verdict::suspect : Verdict::clean;
    return out;
}

}  // namespace rfadex

#pragma once

// Distribution-shift detectors for adversarial inputs.
//
// Two per-record statistics are compared between legitimate and attacked data
// with a two-sample Kolmogorov-Smirnov test:
//   PAPR     max |c_n|^2 / mean |c_n|^2 of the de-interleaved waveform;
//            invariant to scalar channel gain.
//   ENTROPY  -sum p_i ln p_i of the classifier's softmax output.
// Records are grouped by the model's predicted class.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfadex/data.hpp"
#include "rfadex/model.hpp"

namespace rfadex {

enum class StatKind : std::uint8_t { papr, entropy };
enum class Source : std::uint8_t { legitimate, adversarial };
enum class Instance : std::uint8_t { full, subset, control };

const char* to_string(StatKind k);
const char* to_string(Source s);
const char* to_string(Instance i);

double papr(std::span<const ComplexSample> samples);
// PAPR of an interleaved I/Q vector.
double papr_interleaved(std::span<const float> values);

double softmax_entropy(std::span<const double> p);

struct KSResult {
    double d_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t m = 0;
};

// Asymptotic Kolmogorov p-value with the small-sample correction
// lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) d, ne = n m / (n + m).
double ks_pvalue(double d, std::size_t n, std::size_t m);
// sup_x |F_a(x) - F_b(x)| over the pooled points plus its p-value.
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct StatSample {
    std::vector<double> values;
    Source source = Source::legitimate;
    int class_label = 0;  // predicted class of the grouped records
    StatKind kind = StatKind::papr;
};

struct GroupedStats {
    StatKind kind = StatKind::papr;
    Source source = Source::legitimate;
    std::vector<std::optional<StatSample>> groups;  // index = predicted class; nullopt when empty

    std::vector<int> empty_classes() const;
    std::size_t total() const;
};

double record_statistic(StatKind kind, std::span<const float> values, std::span<const double> probabilities);

GroupedStats build_stat_samples(const Dataset& records, const Model& model, StatKind kind, Source source);

struct InstanceResult {
    Instance instance = Instance::full;
    KSResult ks;
};

struct ClassReport {
    StatKind kind = StatKind::papr;
    int class_label = 0;
    std::size_t subset_size = 0;
    std::array<InstanceResult, 3> instances;  // full, subset, control

    const KSResult& at(Instance i) const { return instances[static_cast<std::size_t>(i)].ks; }
};

// full: all legit vs all adex. subset: subset_size draws from each.
// control: two disjoint subset_size draws from legit. Needs
// subset_size <= |adex| and 2 * subset_size <= |legit|.
ClassReport run_three_instance_experiment(const StatSample& legit, const StatSample& adex, std::size_t subset_size,
                                          std::uint64_t seed);

struct KSReport {
    std::vector<ClassReport> rows;
    std::vector<std::string> notices;  // classes skipped for lack of members
};

// Every class present in both groupings, for one subset size.
KSReport run_report(const GroupedStats& legit, const GroupedStats& adex, std::size_t subset_size, std::uint64_t seed);

// Header "stat_kind,class,instance,subset_size,n,m,D,p_value".
void write_ks_csv(const KSReport& report, const std::filesystem::path& path);
std::string ks_csv(const KSReport& report);

// Central [alpha/2, 1 - alpha/2] band of the legitimate statistic per class.
class Calibration {
public:
    Calibration(const GroupedStats& legit, double alpha = 0.01);

    StatKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    bool has_class(int c) const;
    // Band edges are order statistics at floor(n alpha / 2) from each end, so at
    // most a fraction alpha of the calibration sample lies outside.
    std::pair<double, double> band(int c) const;

private:
    StatKind kind_;
    double alpha_;
    std::vector<std::optional<std::pair<double, double>>> bands_;
};

enum class Verdict : std::uint8_t { clean, suspect };

struct PointCheck {
    Verdict verdict = Verdict::clean;
    int predicted = 0;
    double statistic = 0.0;
};

PointCheck detect_point(const Model& model, std::span<const float> x, const Calibration& calibration);

}  // namespace rfadex

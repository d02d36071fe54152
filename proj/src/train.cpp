#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "rfadex/error.hpp"
#include "rfadex/parallel.hpp"
#include "rfadex/rng.hpp"
#include "rfadex/training.hpp"

namespace rfadex {

namespace {

constexpr std::size_t kChunk = 32;

// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
public:
    Adam(const Model& m, double lr) : lr_(lr) {
        for (const auto& blob : m.params) {
            first_.emplace_back(blob.size(), 0.0f);
            second_.emplace_back(blob.size(), 0.0f);
        }
    }

    void step(Model& m, const std::vector<std::vector<float>>& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, t_);
        const double c2 = 1.0 - std::pow(kBeta2, t_);
        const auto alpha = static_cast<float>(lr_ * std::sqrt(c2) / c1);
        const auto eps_hat = static_cast<float>(kEps * std::sqrt(c2));
        for (std::size_t l = 0; l < m.params.size(); ++l) {
            auto& p = m.params[l];
            auto& v1 = first_[l];
            auto& v2 = second_[l];
            const auto& g = grads[l];
            for (std::size_t i = 0; i < p.size(); ++i) {
                v1[i] = kBeta1f * v1[i] + (1.0f - kBeta1f) * g[i];
                v2[i] = kBeta2f * v2[i] + (1.0f - kBeta2f) * g[i] * g[i];
                p[i] -= alpha * v1[i] / (std::sqrt(v2[i]) + eps_hat);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    static constexpr float kBeta1f = 0.9f;
    static constexpr float kBeta2f = 0.999f;

    double lr_;
    int t_ = 0;
    std::vector<std::vector<float>> first_;
    std::vector<std::vector<float>> second_;
};

struct ChunkResult {
    std::vector<std::vector<float>> grads;
    double loss = 0.0;
    std::size_t correct = 0;
};

void zero_like(std::vector<std::vector<float>>& grads, const Model& m) {
    grads.resize(m.params.size());
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(m.params[i].size(), 0.0f);
}

// Sum of per-record losses and parameter gradients over one chunk.
void run_chunk(const Model& m, const std::vector<const std::vector<float>*>& inputs, const std::vector<int>& labels,
               ChunkResult& out) {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    Matrix<float> x(m.input_size(), n);
    for (Eigen::Index b = 0; b < n; ++b)
        std::copy(inputs[b]->begin(), inputs[b]->end(), x.col(b).data());

    detail::Tape<float> tape;
    detail::forward_pass(m, x, tape);
    const auto& z = tape.activations.back();
    Matrix<float> dz(z.rows(), n);
    out.loss = 0.0;
    out.correct = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto p = softmax<float>(std::span<const float>(z.col(b).data(), static_cast<std::size_t>(z.rows())));
        const auto label = static_cast<std::size_t>(labels[static_cast<std::size_t>(b)]);
        out.loss += -std::log(std::max(p[label], 1e-300));
        const auto top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        if (top == label) ++out.correct;
        for (std::size_t c = 0; c < p.size(); ++c)
            dz(static_cast<Eigen::Index>(c), b) = static_cast<float>(p[c] - (c == label ? 1.0 : 0.0));
    }
    zero_like(out.grads, m);
    detail::backward_pass<float>(m, tape, dz, &out.grads, nullptr);
}

TrainResult train_impl(Model m, const Dataset& train_ds, const TrainConfig& cfg, const Dataset* test_ds,
                       const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_ds.empty()) throw InvalidArgument("cannot train on an empty dataset");
    check_labels(m, train_ds);
    if (test_ds) check_labels(m, *test_ds);

    const std::size_t n = train_ds.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    Adam opt(m, cfg.learning_rate);
    TrainResult result;

    std::vector<std::size_t> order(n);
    std::vector<std::vector<float>> adversarial(batch);
    std::vector<std::vector<float>> total;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch)}));
        shuffle(std::span<std::size_t>(order), rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            std::vector<const std::vector<float>*> inputs(count);
            std::vector<int> labels(count);
            for (std::size_t k = 0; k < count; ++k) {
                const auto& rec = train_ds.records[order[start + k]];
                inputs[k] = &rec.values;
                labels[k] = code(rec.label);
            }
            if (cfg.adversarial) {
                const auto replace = static_cast<std::size_t>(
                    std::floor(cfg.adversarial->fraction * static_cast<double>(count) + 1e-9));
                parallel_for(replace, [&](std::size_t k) {
                    adversarial[k] = perturb(m, *inputs[k], labels[k], cfg.adversarial->attack);
                });
                for (std::size_t k = 0; k < replace; ++k) inputs[k] = &adversarial[k];
            }

            const std::size_t chunks = (count + kChunk - 1) / kChunk;
            std::vector<ChunkResult> parts(chunks);
            parallel_for(chunks, [&](std::size_t c) {
                const std::size_t lo = c * kChunk;
                const std::size_t hi = std::min(count, lo + kChunk);
                std::vector<const std::vector<float>*> in(inputs.begin() + static_cast<std::ptrdiff_t>(lo),
                                                          inputs.begin() + static_cast<std::ptrdiff_t>(hi));
                std::vector<int> lab(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                                     labels.begin() + static_cast<std::ptrdiff_t>(hi));
                run_chunk(m, in, lab, parts[c]);
            });

            total = std::move(parts[0].grads);
            for (std::size_t c = 1; c < chunks; ++c)
                for (std::size_t l = 0; l < total.size(); ++l)
                    for (std::size_t i = 0; i < total[l].size(); ++i) total[l][i] += parts[c].grads[l][i];
            const float inv = 1.0f / static_cast<float>(count);
            for (auto& blob : total)
                for (auto& g : blob) g *= inv;
            for (const auto& part : parts) {
                loss_sum += part.loss;
                correct += part.correct;
            }
            opt.step(m, total);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(n);
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        if (test_ds && !test_ds->empty()) stats.test_accuracy = evaluate(m, *test_ds).accuracy;
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats, m);
    }
    result.model = std::move(m);
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be > 0");
    if (adversarial) {
        adversarial->attack.validate();
        if (!(adversarial->fraction >= 0.0 && adversarial->fraction <= 1.0))
            throw InvalidArgument("adversarial fraction must lie in [0, 1]");
    }
}

void check_labels(const Model& m, const Dataset& ds) {
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (code(ds.records[i].label) >= m.class_count())
            throw DomainError("record " + std::to_string(i) + " has label " +
                              std::string(name(ds.records[i].label)) + " but the model has " +
                              std::to_string(m.class_count()) + " classes");
}

TrainResult train(Model m, const Dataset& train_ds, const TrainConfig& cfg, const Dataset* test_ds,
                  const EpochCallback& on_epoch) {
    return train_impl(std::move(m), train_ds, cfg, test_ds, on_epoch);
}

TrainResult adversarial_train(Model m, const Dataset& train_ds, const AttackConfig& attack, TrainConfig cfg,
                              double fraction, const Dataset* test_ds, const EpochCallback& on_epoch) {
    cfg.adversarial = AdversarialMix{attack, fraction};
    return train_impl(std::move(m), train_ds, cfg, test_ds, on_epoch);
}

Evaluation evaluate(const Model& m, const Dataset& ds) {
    check_labels(m, ds);
    const auto classes = static_cast<std::size_t>(m.class_count());
    Evaluation ev;
    ev.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    ev.softmax.resize(ds.size());
    ev.predicted.resize(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        const auto z = forward<float>(m, ds.records[i].values);
        ev.softmax[i] = softmax<float>(z);
        ev.predicted[i] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto truth = static_cast<std::size_t>(code(ds.records[i].label));
        ++ev.confusion[truth][static_cast<std::size_t>(ev.predicted[i])];
        if (static_cast<std::size_t>(ev.predicted[i]) == truth) ++correct;
    }
    ev.accuracy = ds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(ds.size());
    return ev;
}

double adversarial_accuracy(const Model& m, const Dataset& ds, const AttackConfig& attack) {
    return evaluate(m, attack_dataset(m, ds, attack)).accuracy;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot write " + path.string());
    out << "epoch,loss,train_acc,test_acc\n";
    out.precision(10);
    for (const auto& h : history) {
        out << h.epoch << ',' << h.loss << ',' << h.train_accuracy << ',';
        if (h.test_accuracy) out << *h.test_accuracy;
        out << '\n';
    }
}

}  // namespace rfadex

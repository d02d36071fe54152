#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "rfadex/attack.hpp"
#include "rfadex/data.hpp"
#include "rfadex/model.hpp"

namespace rfadex {

struct AdversarialMix {
    AttackConfig attack;
    // Share of each minibatch replaced by fresh adversarial examples.
    double fraction = 0.5;
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::optional<AdversarialMix> adversarial;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&, const Model&)>;

// Minibatch Adam on mean cross-entropy. Epoch e shuffles with a stream derived
// from (seed, e), so a run of N epochs is a prefix of any longer run.
// Gradients are reduced over fixed 32-record chunks in order, so results do not
// depend on RFADEX_THREADS.
TrainResult train(Model m, const Dataset& train_ds, const TrainConfig& cfg, const Dataset* test_ds = nullptr,
                  const EpochCallback& on_epoch = {});

// Retrains with the first floor(fraction * batch) records of every shuffled
// minibatch replaced by attacks against the current parameters (true labels
// kept). fraction = 0 reproduces train() exactly.
TrainResult adversarial_train(Model m, const Dataset& train_ds, const AttackConfig& attack, TrainConfig cfg,
                              double fraction = 0.5, const Dataset* test_ds = nullptr,
                              const EpochCallback& on_epoch = {});

struct Evaluation {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<std::vector<double>> softmax;         // per record
    std::vector<int> predicted;
};

Evaluation evaluate(const Model& m, const Dataset& ds);

// Accuracy on attacked copies of ds.
double adversarial_accuracy(const Model& m, const Dataset& ds, const AttackConfig& attack);

// Header "epoch,loss,train_acc,test_acc"; test_acc empty when not measured.
void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path);

// Throws DomainError when a record label is outside the model's classes.
void check_labels(const Model& m, const Dataset& ds);

}  // namespace rfadex

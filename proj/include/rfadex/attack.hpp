#pragma once

// Gradient-sign adversarial examples.
//
// An adversarial example x_hat = x + r is any small perturbation r (here
// bounded in l-infinity norm by epsilon) that changes the model's decision.
// FGSM takes one epsilon-sized step along sign(grad_x J); BIM repeats smaller
// steps and projects back onto the epsilon-ball around the original input.
// Inputs are unbounded reals, so no box clipping is applied.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfadex/data.hpp"
#include "rfadex/model.hpp"

namespace rfadex {

enum class AttackKind : std::uint8_t { fgsm, bim };

struct AttackConfig {
    AttackKind kind = AttackKind::fgsm;
    double epsilon = 0.1;
    int steps = 1;           // BIM only
    double step_size = 0.0;  // BIM only; must be > 0 for BIM
    // Targeted mode descends the loss of this class; untargeted ascends the true label's loss.
    std::optional<int> target;

    void validate() const;
    // e.g. "fgsm eps=0.1 untargeted"
    std::string describe() const;
};

// Smallest/largest float within [centre - eps, centre + eps] evaluated in double.
float ball_lower(float centre, double eps);
float ball_upper(float centre, double eps);

// x + step * sign(grad), kept inside the |step| ball around x; sign(0) = 0.
std::vector<float> gradient_sign_step(std::span<const float> x, std::span<const float> grad, double step);

std::vector<float> fgsm(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg);
std::vector<float> bim(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg);
// Dispatches on cfg.kind.
std::vector<float> perturb(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg);

// One adversarial record per input record, labels and SNR preserved.
Dataset attack_dataset(const Model& m, const Dataset& ds, const AttackConfig& cfg);

// max_i |a_i - b_i| in double precision.
double linf_distance(std::span<const float> a, std::span<const float> b);

}  // namespace rfadex

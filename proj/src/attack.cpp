#include "rfadex/attack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfadex/error.hpp"
#include "rfadex/parallel.hpp"

namespace rfadex {

namespace {

double sign(float g) { return g > 0.0f ? 1.0 : (g < 0.0f ? -1.0 : 0.0); }

int attack_label(const AttackConfig& cfg, int label) { return cfg.target ? *cfg.target : label; }

// Loss ascent for untargeted attacks, descent towards the target otherwise.
double direction(const AttackConfig& cfg) { return cfg.target ? -1.0 : 1.0; }

}  // namespace

void AttackConfig::validate() const {
    if (!std::isfinite(epsilon) || epsilon < 0.0) throw InvalidArgument("epsilon must be finite and >= 0");
    if (kind == AttackKind::bim) {
        if (steps < 1) throw InvalidArgument("BIM needs steps >= 1");
        if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("BIM needs step_size > 0");
    }
    if (target && *target < 0) throw InvalidArgument("target class must be non-negative");
}

std::string AttackConfig::describe() const {
    std::ostringstream os;
    os << (kind == AttackKind::fgsm ? "fgsm" : "bim") << " eps=" << epsilon;
    if (kind == AttackKind::bim) os << " steps=" << steps << " step_size=" << step_size;
    if (target)
        os << " targeted=" << *target;
    else
        os << " untargeted";
    return os.str();
}

float ball_lower(float centre, double eps) {
    const double lo = static_cast<double>(centre) - eps;
    float f = static_cast<float>(lo);
    if (static_cast<double>(f) < lo) f = std::nextafter(f, centre);
    return f;
}

float ball_upper(float centre, double eps) {
    const double hi = static_cast<double>(centre) + eps;
    float f = static_cast<float>(hi);
    if (static_cast<double>(f) > hi) f = std::nextafter(f, centre);
    return f;
}

std::vector<float> gradient_sign_step(std::span<const float> x, std::span<const float> grad, double step) {
    if (x.size() != grad.size()) throw InvalidArgument("gradient and input sizes differ");
    const double radius = std::abs(step);
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto v = static_cast<float>(static_cast<double>(x[i]) + step * sign(grad[i]));
        out[i] = std::clamp(v, ball_lower(x[i], radius), ball_upper(x[i], radius));
    }
    return out;
}

std::vector<float> fgsm(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg) {
    cfg.validate();
    if (cfg.kind != AttackKind::fgsm) throw InvalidArgument("fgsm called with a non-FGSM config");
    if (cfg.epsilon == 0.0) return std::vector<float>(x.begin(), x.end());
    const auto grad = input_gradient<float>(m, x, attack_label(cfg, label));
    return gradient_sign_step(x, grad, direction(cfg) * cfg.epsilon);
}

std::vector<float> bim(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg) {
    cfg.validate();
    if (cfg.kind != AttackKind::bim) throw InvalidArgument("bim called with a non-BIM config");
    std::vector<float> cur(x.begin(), x.end());
    if (cfg.epsilon == 0.0) return cur;
    const int grad_label = attack_label(cfg, label);
    const double step = direction(cfg) * cfg.step_size;
    for (int s = 0; s < cfg.steps; ++s) {
        const auto grad = input_gradient<float>(m, cur, grad_label);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const auto v = static_cast<float>(static_cast<double>(cur[i]) + step * sign(grad[i]));
            cur[i] = std::clamp(v, ball_lower(x[i], cfg.epsilon), ball_upper(x[i], cfg.epsilon));
        }
    }
    return cur;
}

std::vector<float> perturb(const Model& m, std::span<const float> x, int label, const AttackConfig& cfg) {
    return cfg.kind == AttackKind::fgsm ? fgsm(m, x, label, cfg) : bim(m, x, label, cfg);
}

Dataset attack_dataset(const Model& m, const Dataset& ds, const AttackConfig& cfg) {
    cfg.validate();
    if (cfg.target && *cfg.target >= m.class_count()) throw InvalidArgument("target class outside the model");
    Dataset out;
    out.provenance = cfg.describe();
    if (!ds.provenance.empty()) out.provenance += " | source: " + ds.provenance;
    out.records.resize(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) {
        const auto& rec = ds.records[i];
        out.records[i] = Record{perturb(m, rec.values, code(rec.label), cfg), rec.label, rec.snr_db};
    });
    return out;
}

double linf_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw InvalidArgument("linf_distance: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return worst;
}

}  // namespace rfadex

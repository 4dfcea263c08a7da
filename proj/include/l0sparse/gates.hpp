#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "l0sparse/rng.hpp"

namespace l0sparse {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Shared hard-concrete configuration: temperature beta, stretch interval
// (gamma, zeta) with gamma < 0 < 1 < zeta, and the penalty weight lambda.
struct GateConfig {
    double beta = 2.0 / 3.0;
    double gamma = -0.1;
    double zeta = 1.1;
    double lambda = 1.0;

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("GateConfig: beta must be > 0");
        if (!(gamma < 0.0)) throw std::invalid_argument("GateConfig: gamma must be < 0");
        if (!(zeta > 1.0)) throw std::invalid_argument("GateConfig: zeta must be > 1");
        if (!(lambda >= 0.0)) throw std::invalid_argument("GateConfig: lambda must be >= 0");
    }

    double stretch() const { return zeta - gamma; }
};

// Learnable per-gate location parameters log(alpha).
struct GateVector {
    std::vector<double> log_alpha;

    std::size_t size() const { return log_alpha.size(); }

    bool all_finite() const {
        for (double v : log_alpha)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// log_alpha drawn around the logit of (1 - droprate), matching the reference
// initialization of the sparse layers.
inline GateVector init_gates(std::size_t n, Rng& rng, double droprate_init = 0.5) {
    GateVector g;
    g.log_alpha.resize(n);
    double mean = std::log(1.0 - droprate_init) - std::log(droprate_init);
    for (std::size_t i = 0; i < n; ++i) g.log_alpha[i] = rng.normal(mean, 0.01);
    return g;
}

namespace detail {
inline std::uint64_t next_gate_sample_tag() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

// Pre-rectification smooth samples kept for pathwise gradients. The tag ties
// the cache to the forward pass that produced it.
struct GateSampleCache {
    std::vector<double> d;
    std::uint64_t tag = 0;
};

struct GateSample {
    std::vector<double> z;
    GateSampleCache cache;
};

// One stochastic gate vector: d = sigmoid((logit(u) + log_alpha) / beta),
// z = hardsig(d * (zeta - gamma) + gamma).
inline GateSample sample_gates(const GateVector& gates, const GateConfig& cfg,
                               std::span<const double> noise) {
    cfg.validate();
    if (noise.size() != gates.size())
        throw std::invalid_argument("sample_gates: noise length != gate count");
    GateSample out;
    out.z.resize(gates.size());
    out.cache.d.resize(gates.size());
    out.cache.tag = detail::next_gate_sample_tag();
    const double s = cfg.stretch();
    for (std::size_t j = 0; j < gates.size(); ++j) {
        const double u = noise[j];
        if (!(u > 0.0 && u < 1.0))
            throw std::invalid_argument("sample_gates: noise must lie strictly in (0,1)");
        const double d = sigmoid((logit(u) + gates.log_alpha[j]) / cfg.beta);
        const double d_bar = d * s + cfg.gamma;
        out.cache.d[j] = d;
        out.z[j] = std::min(1.0, std::max(0.0, d_bar));
    }
    return out;
}

// Test-time gates: z = hardsig(sigmoid(log_alpha) * (zeta - gamma) + gamma).
inline std::vector<double> deterministic_gates(const GateVector& gates, const GateConfig& cfg) {
    cfg.validate();
    std::vector<double> z(gates.size());
    const double s = cfg.stretch();
    for (std::size_t j = 0; j < gates.size(); ++j)
        z[j] = std::min(1.0, std::max(0.0, sigmoid(gates.log_alpha[j]) * s + cfg.gamma));
    return z;
}

// CDF of the binary concrete: Q(t) = sigmoid(beta * logit(t) - log_alpha).
// With stretched = true the argument is a point in (gamma, zeta) and is mapped
// back to (0,1) first.
inline double gate_cdf(double t, double log_alpha, const GateConfig& cfg, bool stretched = false) {
    cfg.validate();
    if (stretched) {
        if (!(t > cfg.gamma && t < cfg.zeta))
            throw std::invalid_argument("gate_cdf: stretched point outside (gamma, zeta)");
        t = (t - cfg.gamma) / cfg.stretch();
    } else {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("gate_cdf: point outside (0,1)");
    }
    return sigmoid(cfg.beta * logit(t) - log_alpha);
}

// Density of the binary concrete on (0,1); equals dQ/dt.
inline double gate_pdf(double t, double log_alpha, const GateConfig& cfg) {
    cfg.validate();
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("gate_pdf: point outside (0,1)");
    const double q = sigmoid(cfg.beta * logit(t) - log_alpha);
    return cfg.beta * q * (1.0 - q) / (t * (1.0 - t));
}

// P(z != 0) per gate: sigmoid(log_alpha - beta * log(-gamma/zeta)).
inline std::vector<double> prob_active(const GateVector& gates, const GateConfig& cfg) {
    cfg.validate();
    const double shift = cfg.beta * std::log(-cfg.gamma / cfg.zeta);
    std::vector<double> p(gates.size());
    for (std::size_t j = 0; j < gates.size(); ++j)
        p[j] = sigmoid(gates.log_alpha[j] - shift);
    return p;
}

struct GatePenalty {
    double value = 0.0;              // sum of per-gate activation probabilities
    std::vector<double> grad;        // d value / d log_alpha_j = p_j (1 - p_j)
};

inline GatePenalty penalty_and_grad(const GateVector& gates, const GateConfig& cfg) {
    GatePenalty out;
    out.grad.resize(gates.size());
    const std::vector<double> p = prob_active(gates, cfg);
    for (std::size_t j = 0; j < gates.size(); ++j) {
        out.value += p[j];
        out.grad[j] = p[j] * (1.0 - p[j]);
    }
    if (!std::isfinite(out.value))
        throw std::runtime_error("penalty_and_grad: non-finite penalty");
    return out;
}

// dz/dlog_alpha for the sample that produced `cache`; zero where the
// hard-sigmoid clipped. expected_tag guards against pairing the gradient with
// a cache from a different forward pass.
inline std::vector<double> pathwise_gate_grad(const GateSampleCache& cache, const GateConfig& cfg,
                                              std::uint64_t expected_tag) {
    cfg.validate();
    if (cache.tag != expected_tag)
        throw std::logic_error("pathwise_gate_grad: cache does not belong to this step");
    std::vector<double> g(cache.d.size());
    const double s = cfg.stretch();
    for (std::size_t j = 0; j < cache.d.size(); ++j) {
        const double d = cache.d[j];
        const double d_bar = d * s + cfg.gamma;
        g[j] = (d_bar > 0.0 && d_bar < 1.0) ? s * d * (1.0 - d) / cfg.beta : 0.0;
    }
    return g;
}

}  // namespace l0sparse

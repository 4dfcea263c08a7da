#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "l0sparse/features.hpp"
#include "l0sparse/layers.hpp"
#include "l0sparse/matrix.hpp"
#include "l0sparse/rng.hpp"

namespace l0sparse {

enum class ModelKind { fcnn, sparse_fcnn, l0_sindy };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::fcnn: return "fcnn";
        case ModelKind::sparse_fcnn: return "sparse-fcnn";
        case ModelKind::l0_sindy: return "l0-sindy";
    }
    return "?";
}

struct ModelSpec {
    ModelKind kind = ModelKind::fcnn;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    std::size_t h_dim = 256;
    std::optional<LibrarySpec> library;  // l0_sindy only
    GateConfig gates{};
    GateGranularity granularity = GateGranularity::per_input_row;
    double droprate_init = 0.5;

    void validate() const {
        if (input_dim == 0 || output_dim == 0)
            throw std::invalid_argument("ModelSpec: dims must be positive");
        if (kind != ModelKind::l0_sindy && h_dim == 0)
            throw std::invalid_argument("ModelSpec: h_dim must be positive");
        if ((kind == ModelKind::l0_sindy) != library.has_value())
            throw std::invalid_argument("ModelSpec: library present iff kind is l0-sindy");
        if (kind != ModelKind::fcnn) {
            gates.validate();
            if (!(droprate_init > 0.0 && droprate_init < 1.0))
                throw std::invalid_argument("ModelSpec: droprate_init must lie in (0,1)");
        }
        if (library) library->validate();
    }
};

struct SparsityCounts {
    std::size_t total_gates = 0;
    std::size_t active_gates = 0;
    std::size_t active_parameters = 0;
    std::size_t total_parameters = 0;
};

// One additive term of an extracted closed-form equation; coefficient is the
// full-precision effective value weight * gate.
struct EquationTerm {
    std::size_t feature = 0;
    double coefficient = 0.0;
};

struct Equation {
    std::vector<EquationTerm> terms;
    std::string text;
};

// Fresh uniform noise for every gated layer, in layer order.
struct GateNoise {
    std::vector<std::vector<double>> per_layer;
};

namespace detail {

inline std::string format_coefficient(double c) {
    char buf[64];
    const double a = std::fabs(c);
    if (a >= 1e-4 && a < 1e6)
        std::snprintf(buf, sizeof(buf), "%.4f", c);
    else
        std::snprintf(buf, sizeof(buf), "%.4e", c);
    return buf;
}

}  // namespace detail

// The three model families: a 3-layer ELU network, its L0-gated twin, and a
// single gated linear layer over dictionary features.
class Model {
    using Layer = std::variant<DenseLayer, L0DenseLayer, EluLayer>;

public:
    Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
        spec_.validate();
        Rng rng(seed);
        switch (spec_.kind) {
            case ModelKind::fcnn:
                layers_.emplace_back(DenseLayer(spec_.input_dim, spec_.h_dim, true, rng));
                layers_.emplace_back(EluLayer());
                layers_.emplace_back(DenseLayer(spec_.h_dim, spec_.h_dim, true, rng));
                layers_.emplace_back(EluLayer());
                layers_.emplace_back(DenseLayer(spec_.h_dim, spec_.output_dim, true, rng));
                break;
            case ModelKind::sparse_fcnn:
                layers_.emplace_back(L0DenseLayer(spec_.input_dim, spec_.h_dim, true, spec_.gates,
                                                  spec_.granularity, rng, spec_.droprate_init));
                layers_.emplace_back(EluLayer());
                layers_.emplace_back(L0DenseLayer(spec_.h_dim, spec_.h_dim, true, spec_.gates,
                                                  spec_.granularity, rng, spec_.droprate_init));
                layers_.emplace_back(EluLayer());
                layers_.emplace_back(L0DenseLayer(spec_.h_dim, spec_.output_dim, true, spec_.gates,
                                                  spec_.granularity, rng, spec_.droprate_init));
                break;
            case ModelKind::l0_sindy:
                feature_map_ = library_dim_and_names(*spec_.library, spec_.input_dim);
                layers_.emplace_back(L0DenseLayer(feature_map_.n_features, spec_.output_dim,
                                                  false, spec_.gates, spec_.granularity, rng,
                                                  spec_.droprate_init));
                break;
        }
    }

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    const FeatureMap& feature_map() const { return feature_map_; }

    std::size_t gated_layer_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers_)
            if (std::holds_alternative<L0DenseLayer>(l)) ++n;
        return n;
    }

    GateNoise draw_gate_noise(Rng& rng) const {
        GateNoise noise;
        for (const Layer& l : layers_)
            if (const auto* gated = std::get_if<L0DenseLayer>(&l)) {
                std::vector<double> u(gated->gate_count());
                for (double& v : u) v = rng.uniform_open();
                noise.per_layer.push_back(std::move(u));
            }
        return noise;
    }

    // Concatenates [obs, act] and runs the stack. Sparse kinds need gate
    // noise in train mode.
    Matrix forward(const Matrix& obs, const Matrix& act, Mode mode,
                   const GateNoise* noise = nullptr) {
        detail::require_shape(obs.rows() == act.rows(), "forward: obs/act batch sizes");
        detail::require_shape(obs.cols() + act.cols() == spec_.input_dim,
                              "forward: obs_dim + act_dim != input_dim");
        return forward_inputs(hconcat(obs, act), mode, noise);
    }

    Matrix forward_inputs(const Matrix& x, Mode mode, const GateNoise* noise = nullptr) {
        detail::require_shape(x.cols() == spec_.input_dim, "forward: input width");
        Matrix h = spec_.kind == ModelKind::l0_sindy ? transform(*spec_.library, x) : x;
        std::size_t gate_slot = 0;
        for (Layer& l : layers_) {
            if (auto* dense = std::get_if<DenseLayer>(&l)) {
                h = dense->forward(h, mode);
            } else if (auto* gated = std::get_if<L0DenseLayer>(&l)) {
                if (mode == Mode::train) {
                    if (noise == nullptr || gate_slot >= noise->per_layer.size())
                        throw std::invalid_argument("forward: train mode needs gate noise");
                    h = gated->forward(h, mode, noise->per_layer[gate_slot++]);
                } else {
                    h = gated->forward(h, mode);
                }
            } else {
                h = std::get<EluLayer>(l).forward(h, mode);
            }
        }
        return h;
    }

    // Reverse sweep; gradients accumulate into the layers' buffers.
    void backward(const Matrix& d_out) {
        Matrix g = d_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            if (auto* dense = std::get_if<DenseLayer>(&*it))
                g = dense->backward(g);
            else if (auto* gated = std::get_if<L0DenseLayer>(&*it))
                g = gated->backward(g);
            else
                g = std::get<EluLayer>(*it).backward(g);
        }
    }

    void zero_grad() {
        for (Layer& l : layers_) {
            if (auto* dense = std::get_if<DenseLayer>(&l))
                dense->zero_grad();
            else if (auto* gated = std::get_if<L0DenseLayer>(&l))
                gated->zero_grad();
        }
    }

    std::vector<ParamView> parameters() {
        std::vector<ParamView> out;
        std::size_t idx = 0;
        for (Layer& l : layers_) {
            const std::string prefix = "layer" + std::to_string(idx);
            if (auto* dense = std::get_if<DenseLayer>(&l))
                dense->collect_params(prefix, out);
            else if (auto* gated = std::get_if<L0DenseLayer>(&l))
                gated->collect_params(prefix, out);
            ++idx;
        }
        return out;
    }

    // L0 regularizer of the model: the activation-probability sum of the
    // input gated layer, mirroring the reference training loops that
    // regularize the first sparse layer. Zero for ungated models.
    double penalty() const {
        for (const Layer& l : layers_)
            if (const auto* gated = std::get_if<L0DenseLayer>(&l)) return gated->penalty().value;
        return 0.0;
    }

    void accumulate_penalty_grad(double lambda) {
        for (Layer& l : layers_)
            if (auto* gated = std::get_if<L0DenseLayer>(&l)) {
                gated->accumulate_penalty_grad(lambda);
                return;
            }
    }

    SparsityCounts sparsity_counts() const {
        if (spec_.kind == ModelKind::fcnn)
            throw std::invalid_argument("sparsity_counts: model has no gates");
        SparsityCounts counts;
        for (const Layer& l : layers_) {
            if (const auto* gated = std::get_if<L0DenseLayer>(&l)) {
                const std::vector<double> z = gated->test_gates();
                counts.total_gates += z.size();
                const std::size_t out_dim = gated->out_dim();
                std::size_t active = 0;
                for (double v : z)
                    if (v > 0.0) ++active;
                counts.active_gates += active;
                if (gated->granularity() == GateGranularity::per_input_row)
                    counts.active_parameters += active * out_dim;
                else
                    counts.active_parameters += active;
                counts.total_parameters += gated->weights().size();
                if (gated->has_bias()) {
                    counts.active_parameters += gated->bias().size();
                    counts.total_parameters += gated->bias().size();
                }
            }
        }
        return counts;
    }

    // Closed-form readout of the dictionary model: one equation per output,
    // terms in feature order, coefficients weight * deterministic gate.
    std::vector<Equation> extract_equations(double print_threshold = 1e-8) const {
        if (spec_.kind != ModelKind::l0_sindy)
            throw std::invalid_argument("extract_equations: only l0-sindy models have equations");
        const L0DenseLayer& layer = std::get<L0DenseLayer>(layers_.front());
        const std::vector<double> z = layer.test_gates();
        const Matrix& w = layer.weights();
        std::vector<Equation> equations(spec_.output_dim);
        for (std::size_t o = 0; o < spec_.output_dim; ++o) {
            Equation& eq = equations[o];
            for (std::size_t f = 0; f < feature_map_.n_features; ++f) {
                const double gate = layer.granularity() == GateGranularity::per_input_row
                                        ? z[f]
                                        : z[o * feature_map_.n_features + f];
                const double coef = w(o, f) * gate;
                if (std::fabs(coef) > print_threshold) eq.terms.push_back({f, coef});
            }
            if (eq.terms.empty()) {
                eq.text = "0";
                continue;
            }
            for (std::size_t t = 0; t < eq.terms.size(); ++t) {
                const double c = eq.terms[t].coefficient;
                if (t == 0)
                    eq.text += detail::format_coefficient(c);
                else
                    eq.text += (c < 0.0 ? " - " : " + ") + detail::format_coefficient(std::fabs(c));
                eq.text += "*" + feature_map_.names[eq.terms[t].feature];
            }
        }
        return equations;
    }

    // Re-evaluates an extracted equation on one raw input row.
    double evaluate_equation(const Equation& eq, const Matrix& x_row) const {
        if (spec_.kind != ModelKind::l0_sindy)
            throw std::invalid_argument("evaluate_equation: only l0-sindy models have equations");
        const Matrix phi = transform(*spec_.library, x_row);
        double acc = 0.0;
        for (const EquationTerm& term : eq.terms) acc += term.coefficient * phi(0, term.feature);
        return acc;
    }

    // Direct access for tests and checkpointing.
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

private:
    ModelSpec spec_;
    std::uint64_t seed_ = 0;
    FeatureMap feature_map_;
    std::vector<Layer> layers_;
};

inline Model build_model(const ModelSpec& spec, std::uint64_t seed) { return Model(spec, seed); }

}  // namespace l0sparse

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "l0sparse/gates.hpp"
#include "l0sparse/matrix.hpp"
#include "l0sparse/rng.hpp"

namespace l0sparse {

enum class Mode { train, infer };

enum class GateGranularity { per_input_row, per_element };

enum class ParamKind { weight, bias, gate };

// Mutable view over one parameter block and its gradient accumulator.
struct ParamView {
    std::string name;
    ParamKind kind = ParamKind::weight;
    std::span<double> value;
    std::span<double> grad;
};

struct MseResult {
    double loss = 0.0;
    Matrix d_pred;
};

// Mean over all entries of (pred - target)^2; gradient 2(pred - target)/count.
inline MseResult mse_loss(const Matrix& pred, const Matrix& target) {
    detail::require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(),
                          "mse_loss operands");
    MseResult out;
    out.d_pred = Matrix(pred.rows(), pred.cols());
    const double count = static_cast<double>(pred.size());
    const double* p = pred.data();
    const double* t = target.data();
    double* g = out.d_pred.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = p[i] - t[i];
        acc += diff * diff;
        g[i] = 2.0 * diff / count;
    }
    out.loss = acc / count;
    return out;
}

inline void uniform_fan_in_init(Matrix& w, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (double& v : w.span()) v = rng.uniform(-bound, bound);
}

// Fully-connected layer, Y = X W^T + b, with analytic backward. forward()
// caches its input; backward() accumulates dW/db and returns dX.
class DenseLayer {
public:
    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, bool bias, Rng& rng)
        : W_(out, in), dW_(out, in), has_bias_(bias) {
        uniform_fan_in_init(W_, rng);
        if (bias) {
            b_.assign(out, 0.0);
            db_.assign(out, 0.0);
        }
    }

    std::size_t in_dim() const { return W_.cols(); }
    std::size_t out_dim() const { return W_.rows(); }

    Matrix forward(const Matrix& x, Mode mode) {
        detail::require_shape(x.cols() == in_dim(), "DenseLayer input");
        if (mode == Mode::train) x_cache_ = x;
        Matrix y = matmul_bt(x, W_);
        if (has_bias_)
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double* row = y.row(i);
                for (std::size_t j = 0; j < y.cols(); ++j) row[j] += b_[j];
            }
        return y;
    }

    Matrix backward(const Matrix& dy) {
        if (x_cache_.empty()) throw std::logic_error("DenseLayer::backward before train forward");
        detail::require_shape(dy.rows() == x_cache_.rows() && dy.cols() == out_dim(),
                              "DenseLayer backward dY");
        const Matrix dW = matmul_at(dy, x_cache_);
        for (std::size_t i = 0; i < dW.size(); ++i) dW_.data()[i] += dW.data()[i];
        if (has_bias_)
            for (std::size_t i = 0; i < dy.rows(); ++i) {
                const double* row = dy.row(i);
                for (std::size_t j = 0; j < dy.cols(); ++j) db_[j] += row[j];
            }
        return matmul(dy, W_);
    }

    void zero_grad() {
        dW_.fill(0.0);
        std::fill(db_.begin(), db_.end(), 0.0);
    }

    void collect_params(const std::string& prefix, std::vector<ParamView>& out) {
        out.push_back({prefix + ".W", ParamKind::weight, W_.span(), dW_.span()});
        if (has_bias_) out.push_back({prefix + ".b", ParamKind::bias, b_, db_});
    }

    Matrix& weights() { return W_; }
    const Matrix& weights() const { return W_; }
    std::vector<double>& bias() { return b_; }
    const std::vector<double>& bias() const { return b_; }
    bool has_bias() const { return has_bias_; }

private:
    Matrix W_, dW_;
    std::vector<double> b_, db_;
    bool has_bias_ = true;
    Matrix x_cache_;
};

// Dense layer whose weight columns (or individual entries) are multiplied by
// hard-concrete gates. Train mode samples one gate vector per minibatch;
// infer mode uses the deterministic gates.
class L0DenseLayer {
public:
    L0DenseLayer() = default;
    L0DenseLayer(std::size_t in, std::size_t out, bool bias, const GateConfig& cfg,
                 GateGranularity granularity, Rng& rng, double droprate_init = 0.5)
        : W_(out, in), dW_(out, in), has_bias_(bias), cfg_(cfg), granularity_(granularity) {
        cfg_.validate();
        uniform_fan_in_init(W_, rng);
        if (bias) {
            b_.assign(out, 0.0);
            db_.assign(out, 0.0);
        }
        const std::size_t n = gate_count();
        gates_ = init_gates(n, rng, droprate_init);
        dlog_alpha_.assign(n, 0.0);
    }

    std::size_t in_dim() const { return W_.cols(); }
    std::size_t out_dim() const { return W_.rows(); }
    std::size_t gate_count() const {
        return granularity_ == GateGranularity::per_input_row ? in_dim() : W_.size();
    }

    // Train mode requires one uniform noise value per gate.
    Matrix forward(const Matrix& x, Mode mode, std::span<const double> noise = {}) {
        detail::require_shape(x.cols() == in_dim(), "L0DenseLayer input");
        if (mode == Mode::train) {
            if (noise.size() != gate_count())
                throw std::invalid_argument("L0DenseLayer: train mode needs one noise per gate");
            GateSample s = sample_gates(gates_, cfg_, noise);
            z_cache_ = std::move(s.z);
            gate_cache_ = std::move(s.cache);
            forward_tag_ = gate_cache_.tag;
            x_cache_ = x;
            trained_forward_ = true;
        } else {
            z_cache_ = deterministic_gates(gates_, cfg_);
            trained_forward_ = false;
        }
        Matrix y = matmul_bt(x, masked_weights(z_cache_));
        if (has_bias_)
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double* row = y.row(i);
                for (std::size_t j = 0; j < y.cols(); ++j) row[j] += b_[j];
            }
        return y;
    }

    Matrix backward(const Matrix& dy) {
        if (!trained_forward_)
            throw std::logic_error("L0DenseLayer::backward requires a preceding train-mode forward");
        detail::require_shape(dy.rows() == x_cache_.rows() && dy.cols() == out_dim(),
                              "L0DenseLayer backward dY");
        const Matrix masked = masked_weights(z_cache_);
        const Matrix dW_eff = matmul_at(dy, x_cache_);  // out x in
        const std::vector<double> dz_dla = pathwise_gate_grad(gate_cache_, cfg_, forward_tag_);

        if (granularity_ == GateGranularity::per_input_row) {
            for (std::size_t o = 0; o < out_dim(); ++o) {
                const double* geff = dW_eff.row(o);
                const double* w = W_.row(o);
                double* gw = dW_.row(o);
                for (std::size_t i = 0; i < in_dim(); ++i) {
                    gw[i] += geff[i] * z_cache_[i];
                    dlog_alpha_[i] += geff[i] * w[i] * dz_dla[i];
                }
            }
        } else {
            for (std::size_t k = 0; k < W_.size(); ++k) {
                dW_.data()[k] += dW_eff.data()[k] * z_cache_[k];
                dlog_alpha_[k] += dW_eff.data()[k] * W_.data()[k] * dz_dla[k];
            }
        }
        if (has_bias_)
            for (std::size_t i = 0; i < dy.rows(); ++i) {
                const double* row = dy.row(i);
                for (std::size_t j = 0; j < dy.cols(); ++j) db_[j] += row[j];
            }
        return matmul(dy, masked);
    }

    void zero_grad() {
        dW_.fill(0.0);
        std::fill(db_.begin(), db_.end(), 0.0);
        std::fill(dlog_alpha_.begin(), dlog_alpha_.end(), 0.0);
    }

    void collect_params(const std::string& prefix, std::vector<ParamView>& out) {
        out.push_back({prefix + ".W", ParamKind::weight, W_.span(), dW_.span()});
        if (has_bias_) out.push_back({prefix + ".b", ParamKind::bias, b_, db_});
        out.push_back({prefix + ".log_alpha", ParamKind::gate, gates_.log_alpha, dlog_alpha_});
    }

    GatePenalty penalty() const { return penalty_and_grad(gates_, cfg_); }

    // Adds lambda * d(penalty)/d(log_alpha) into the gate gradient buffer.
    void accumulate_penalty_grad(double lambda) {
        const GatePenalty p = penalty();
        for (std::size_t j = 0; j < dlog_alpha_.size(); ++j)
            dlog_alpha_[j] += lambda * p.grad[j];
    }

    std::vector<double> test_gates() const { return deterministic_gates(gates_, cfg_); }

    Matrix& weights() { return W_; }
    const Matrix& weights() const { return W_; }
    std::vector<double>& bias() { return b_; }
    const std::vector<double>& bias() const { return b_; }
    bool has_bias() const { return has_bias_; }
    GateVector& gates() { return gates_; }
    const GateVector& gates() const { return gates_; }
    const GateConfig& config() const { return cfg_; }
    GateGranularity granularity() const { return granularity_; }

private:
    Matrix masked_weights(const std::vector<double>& z) const {
        Matrix m = W_;
        if (granularity_ == GateGranularity::per_input_row) {
            for (std::size_t o = 0; o < out_dim(); ++o) {
                double* row = m.row(o);
                for (std::size_t i = 0; i < in_dim(); ++i) row[i] *= z[i];
            }
        } else {
            for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] *= z[k];
        }
        return m;
    }

    Matrix W_, dW_;
    std::vector<double> b_, db_;
    bool has_bias_ = false;
    GateConfig cfg_{};
    GateGranularity granularity_ = GateGranularity::per_input_row;
    GateVector gates_;
    std::vector<double> dlog_alpha_;

    Matrix x_cache_;
    std::vector<double> z_cache_;
    GateSampleCache gate_cache_;
    std::uint64_t forward_tag_ = 0;
    bool trained_forward_ = false;
};

// ELU with alpha = 1.
class EluLayer {
public:
    Matrix forward(const Matrix& x, Mode mode) {
        if (mode == Mode::train) x_cache_ = x;
        Matrix y(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x.data()[i];
            y.data()[i] = v > 0.0 ? v : std::expm1(v);
        }
        return y;
    }

    Matrix backward(const Matrix& dy) {
        if (x_cache_.empty()) throw std::logic_error("EluLayer::backward before train forward");
        detail::require_shape(dy.rows() == x_cache_.rows() && dy.cols() == x_cache_.cols(),
                              "EluLayer backward dY");
        Matrix dx(dy.rows(), dy.cols());
        for (std::size_t i = 0; i < dy.size(); ++i) {
            const double v = x_cache_.data()[i];
            dx.data()[i] = dy.data()[i] * (v > 0.0 ? 1.0 : std::exp(v));
        }
        return dx;
    }

private:
    Matrix x_cache_;
};

}  // namespace l0sparse

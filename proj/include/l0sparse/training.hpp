#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "l0sparse/models.hpp"
#include "l0sparse/replay_buffer.hpp"
#include "l0sparse/rng.hpp"

#include <json.hpp>

namespace l0sparse {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TrainTarget { transition, reward };

inline const char* to_string(TrainTarget t) {
    return t == TrainTarget::transition ? "transition" : "reward";
}

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t epochs = 500;
    std::size_t iterations_per_epoch = 0;  // 0 -> ceil(count / batch_size)
    double lambda = 1.0;
    std::size_t mc_samples = 1;  // gate samples per minibatch
    std::uint64_t seed = 0;
    TrainTarget target = TrainTarget::transition;
    double weight_decay = 0.0;  // L2 on weight blocks only
    bool record_iterations = false;

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate");
        if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size");
        if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs");
        if (mc_samples == 0) throw std::invalid_argument("TrainConfig: mc_samples");
        if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda");
    }
};

// Bias-corrected Adam over a fixed set of parameter blocks.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    explicit Adam(const std::vector<ParamView>& params) {
        slots_.reserve(params.size());
        for (const ParamView& p : params)
            slots_.push_back({std::vector<double>(p.value.size(), 0.0),
                              std::vector<double>(p.value.size(), 0.0)});
    }

    std::uint64_t step_count() const { return step_; }

    void step(std::vector<ParamView>& params, double lr) {
        if (params.size() != slots_.size())
            throw std::invalid_argument("Adam::step: parameter block count changed");
        ++step_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
        for (std::size_t b = 0; b < params.size(); ++b) {
            ParamView& p = params[b];
            Slot& s = slots_[b];
            if (p.value.size() != s.m.size())
                throw std::invalid_argument("Adam::step: parameter block size changed");
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad[i];
                if (!std::isfinite(g))
                    throw NumericalError("adam: non-finite gradient in block " + p.name +
                                         " at index " + std::to_string(i));
                s.m[i] = kBeta1 * s.m[i] + (1.0 - kBeta1) * g;
                s.v[i] = kBeta2 * s.v[i] + (1.0 - kBeta2) * g * g;
                const double m_hat = s.m[i] / bc1;
                const double v_hat = s.v[i] / bc2;
                p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
            }
        }
    }

private:
    struct Slot {
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    std::uint64_t step_ = 0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double penalty = 0.0;
    std::size_t active_gates = 0;
    double seconds = 0.0;
};

struct Metrics {
    std::vector<EpochMetrics> epochs;
    // Filled when TrainConfig::record_iterations is set.
    std::vector<double> iter_loss, iter_mse, iter_penalty;
};

struct TrainResult {
    Metrics metrics;
    bool aborted = false;
    std::string diagnostic;
    std::size_t epochs_completed = 0;
};

// Generic supervised pairs; the replay-buffer entry points below reduce to
// this form.
struct Dataset {
    Matrix inputs;
    Matrix targets;

    std::size_t count() const { return inputs.rows(); }
};

inline Matrix target_matrix(const ReplayBuffer& buffer, TrainTarget target) {
    return target == TrainTarget::transition ? buffer.next_obs_matrix() : buffer.reward_matrix();
}

inline Dataset make_dataset(const ReplayBuffer& buffer, TrainTarget target) {
    if (buffer.empty()) throw std::invalid_argument("make_dataset: empty buffer");
    Dataset ds;
    ds.inputs = hconcat(buffer.obs_matrix(), buffer.act_matrix());
    ds.targets = target_matrix(buffer, target);
    return ds;
}

namespace detail {

inline Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = m.row(idx[i]);
        double* dst = out.row(i);
        for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c];
    }
    return out;
}

inline Matrix rows_slice(const Matrix& m, std::size_t r0, std::size_t r1) {
    Matrix out(r1 - r0, m.cols());
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r - r0, c) = m(r, c);
    return out;
}

}  // namespace detail

// Full-dataset MSE with deterministic gates, in one chunked pass.
inline double evaluate_dataset(Model& model, const Dataset& ds) {
    if (ds.count() == 0) throw std::invalid_argument("evaluate_dataset: empty dataset");
    if (model.spec().output_dim != ds.targets.cols())
        throw std::invalid_argument("evaluate_dataset: model output dim does not match targets");
    constexpr std::size_t kChunk = 8192;
    double acc = 0.0;
    for (std::size_t r0 = 0; r0 < ds.count(); r0 += kChunk) {
        const std::size_t r1 = std::min(ds.count(), r0 + kChunk);
        Matrix pred = model.forward_inputs(detail::rows_slice(ds.inputs, r0, r1), Mode::infer);
        for (std::size_t r = r0; r < r1; ++r) {
            const double* want = ds.targets.row(r);
            const double* got = pred.row(r - r0);
            for (std::size_t c = 0; c < ds.targets.cols(); ++c) {
                const double d = got[c] - want[c];
                acc += d * d;
            }
        }
    }
    return acc / static_cast<double>(ds.count() * ds.targets.cols());
}

inline double evaluate(Model& model, const ReplayBuffer& buffer, TrainTarget target) {
    return evaluate_dataset(model, make_dataset(buffer, target));
}

// Minibatch Adam on mse + lambda * L0 penalty (lambda moot for ungated
// models). Gates are sampled during updates and deterministic for the
// per-epoch metrics. On a non-finite loss or gradient the model is rolled
// back to the last completed epoch and the result is flagged aborted.
inline TrainResult fit(Model& model, const Dataset& train, const Dataset& test,
                       const TrainConfig& cfg) {
    cfg.validate();
    if (train.count() == 0 || test.count() == 0)
        throw std::invalid_argument("fit: empty dataset");
    if (model.spec().input_dim != train.inputs.cols())
        throw std::invalid_argument("fit: model input dim does not match dataset");
    if (model.spec().output_dim != train.targets.cols())
        throw std::invalid_argument("fit: model output dim does not match targets");

    const std::size_t iters = cfg.iterations_per_epoch > 0
                                  ? cfg.iterations_per_epoch
                                  : (train.count() + cfg.batch_size - 1) / cfg.batch_size;
    const bool gated = model.gated_layer_count() > 0;

    Rng rng(cfg.seed);
    std::vector<ParamView> params = model.parameters();
    Adam adam(params);

    auto snapshot_params = [&] {
        std::vector<std::vector<double>> snap;
        snap.reserve(params.size());
        for (const ParamView& p : params) snap.emplace_back(p.value.begin(), p.value.end());
        return snap;
    };
    auto restore_params = [&](const std::vector<std::vector<double>>& snap) {
        for (std::size_t b = 0; b < params.size(); ++b)
            std::copy(snap[b].begin(), snap[b].end(), params[b].value.begin());
    };
    std::vector<std::vector<double>> last_good = snapshot_params();

    std::vector<std::size_t> idx(cfg.batch_size);
    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t it = 0; it < iters; ++it) {
            for (std::size_t& i : idx) i = rng.index(train.count());
            const Matrix batch_x = detail::take_rows(train.inputs, idx);
            const Matrix batch_y = detail::take_rows(train.targets, idx);
            model.zero_grad();

            double mse_avg = 0.0;
            const double inv_l = 1.0 / static_cast<double>(cfg.mc_samples);
            for (std::size_t l = 0; l < cfg.mc_samples; ++l) {
                GateNoise noise = model.draw_gate_noise(rng);
                Matrix pred = model.forward_inputs(batch_x, Mode::train, gated ? &noise : nullptr);
                MseResult mse = mse_loss(pred, batch_y);
                mse_avg += inv_l * mse.loss;
                if (cfg.mc_samples > 1)
                    for (double& g : mse.d_pred.span()) g *= inv_l;
                model.backward(mse.d_pred);
            }
            const double penalty = gated ? model.penalty() : 0.0;
            const double loss = mse_avg + cfg.lambda * penalty;
            if (cfg.record_iterations) {
                result.metrics.iter_loss.push_back(loss);
                result.metrics.iter_mse.push_back(mse_avg);
                result.metrics.iter_penalty.push_back(penalty);
            }
            if (!std::isfinite(loss)) {
                restore_params(last_good);
                result.aborted = true;
                result.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) +
                                    " iteration " + std::to_string(it);
                result.epochs_completed = epoch;
                return result;
            }
            if (gated && cfg.lambda > 0.0) model.accumulate_penalty_grad(cfg.lambda);
            if (cfg.weight_decay > 0.0)
                for (ParamView& p : params)
                    if (p.kind == ParamKind::weight)
                        for (std::size_t i = 0; i < p.value.size(); ++i)
                            p.grad[i] += cfg.weight_decay * p.value[i];
            try {
                adam.step(params, cfg.learning_rate);
            } catch (const NumericalError& e) {
                restore_params(last_good);
                result.aborted = true;
                result.diagnostic = e.what();
                result.epochs_completed = epoch;
                return result;
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train_mse = evaluate_dataset(model, train);
        em.test_mse = evaluate_dataset(model, test);
        em.penalty = gated ? model.penalty() : 0.0;
        em.active_gates = gated ? model.sparsity_counts().active_gates : 0;
        em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.metrics.epochs.push_back(em);
        result.epochs_completed = epoch + 1;
        last_good = snapshot_params();
    }
    return result;
}

// Training loop over replay-buffer transitions, per the chosen target.
inline TrainResult train_model(Model& model, const ReplayBuffer& train_buffer,
                               const ReplayBuffer& test_buffer, const TrainConfig& cfg) {
    const std::size_t expected_out = cfg.target == TrainTarget::transition ? kObsDim : 1;
    if (model.spec().output_dim != expected_out)
        throw std::invalid_argument("train_model: model output dim does not match target");
    return fit(model, make_dataset(train_buffer, cfg.target), make_dataset(test_buffer, cfg.target),
               cfg);
}

inline void write_metrics_csv(const Metrics& metrics, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error(path + ": cannot open for writing");
    os << "epoch,train_mse,test_mse,penalty,active_gates,seconds\n";
    char buf[160];
    for (const EpochMetrics& em : metrics.epochs) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%zu,%.6f\n", em.epoch, em.train_mse,
                      em.test_mse, em.penalty, em.active_gates, em.seconds);
        os << buf;
    }
    if (!os.good()) throw std::runtime_error(path + ": write failed");
}

inline void write_train_summary(const Model& model, const TrainConfig& cfg,
                                const TrainResult& result, const std::string& path) {
    nlohmann::json j;
    j["model"] = to_string(model.spec().kind);
    j["target"] = to_string(cfg.target);
    j["lambda"] = cfg.lambda;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["seed"] = cfg.seed;
    j["aborted"] = result.aborted;
    if (result.aborted) j["diagnostic"] = result.diagnostic;
    j["epochs_completed"] = result.epochs_completed;
    if (!result.metrics.epochs.empty()) {
        const EpochMetrics& last = result.metrics.epochs.back();
        double total_seconds = 0.0;
        for (const EpochMetrics& em : result.metrics.epochs) total_seconds += em.seconds;
        j["final"] = {{"train_mse", last.train_mse},
                      {"test_mse", last.test_mse},
                      {"penalty", last.penalty},
                      {"active_gates", last.active_gates}};
        j["total_seconds"] = total_seconds;
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error(path + ": cannot open for writing");
    os << j.dump(2) << "\n";
}

}  // namespace l0sparse

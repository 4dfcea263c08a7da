#pragma once

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "l0sparse/replay_buffer.hpp"
#include "l0sparse/rng.hpp"

namespace l0sparse {

// Classic torque-limited inverted pendulum. Constants are pinned to the
// reference environment: m = l = 1, g = 9.81, dt = 0.05, |torque| <= 2,
// |theta_dot| <= 8, reward weights 0.1 and 0.001.
namespace pendulum {

inline constexpr double kGravity = 9.81;
inline constexpr double kMass = 1.0;
inline constexpr double kLength = 1.0;
inline constexpr double kDt = 0.05;
inline constexpr double kMaxTorque = 2.0;
inline constexpr double kMaxSpeed = 8.0;

}  // namespace pendulum

struct PendulumState {
    double theta = 0.0;
    double theta_dot = 0.0;
};

inline double wrap_angle(double x) {
    double w = std::fmod(x + M_PI, 2.0 * M_PI);
    if (w < 0.0) w += 2.0 * M_PI;
    return w - M_PI;
}

inline std::array<double, kObsDim> observe(const PendulumState& s) {
    return {std::cos(s.theta), std::sin(s.theta), s.theta_dot};
}

struct StepResult {
    PendulumState next;
    std::array<double, kObsDim> obs_next;
    double reward = 0.0;
};

// Explicit-Euler step. The reward is computed from the pre-step state, per
// the reference convention.
inline StepResult step(const PendulumState& state, double action) {
    using namespace pendulum;
    if (!std::isfinite(state.theta) || !std::isfinite(state.theta_dot))
        throw std::invalid_argument("pendulum step: non-finite state");
    const double a = std::min(kMaxTorque, std::max(-kMaxTorque, action));
    const double th = state.theta;
    const double thdot = state.theta_dot;

    const double angle = wrap_angle(th);
    const double reward = -(angle * angle + 0.1 * thdot * thdot + 0.001 * a * a);

    double new_thdot =
        thdot + (3.0 * kGravity / (2.0 * kLength) * std::sin(th) + 3.0 / (kMass * kLength * kLength) * a) * kDt;
    new_thdot = std::min(kMaxSpeed, std::max(-kMaxSpeed, new_thdot));
    const double new_th = th + new_thdot * kDt;

    StepResult out;
    out.next = {new_th, new_thdot};
    out.obs_next = observe(out.next);
    out.reward = reward;
    return out;
}

inline PendulumState reset(Rng& rng) {
    PendulumState s;
    s.theta = rng.uniform(-M_PI, M_PI);
    s.theta_dot = rng.uniform(-1.0, 1.0);
    return s;
}

namespace detail {

// One episode of the uniform random policy; records land at a fixed slot
// range so parallel collection stays deterministic.
inline void collect_episode(ReplayBuffer& buffer, std::size_t episode, std::size_t steps,
                            std::uint64_t seed) {
    Rng rng = Rng::stream(seed, episode);
    PendulumState state = reset(rng);
    std::array<double, kObsDim> obs = observe(state);
    const std::size_t base = episode * (steps + 1);
    for (std::size_t t = 0; t <= steps; ++t) {
        TransitionRecord rec;
        rec.obs = obs;
        rec.act = rng.uniform(-pendulum::kMaxTorque, pendulum::kMaxTorque);
        const StepResult r = step(state, rec.act);
        rec.reward = r.reward;
        rec.next_obs = r.obs_next;
        rec.done = (t == steps);  // truncation only; the task has no terminal failure
        buffer.store_at(base + t, rec);
        state = r.next;
        obs = r.obs_next;
    }
}

}  // namespace detail

// Random-policy dataset: episodes * (steps + 1) records, reproducible from
// the seed alone regardless of the number of worker threads.
inline ReplayBuffer collect_dataset(std::size_t episodes, std::size_t steps_per_episode,
                                    std::uint64_t seed, std::size_t jobs = 1) {
    if (episodes == 0) throw std::invalid_argument("collect_dataset: episodes must be positive");
    ReplayBuffer buffer(episodes * (steps_per_episode + 1));
    if (jobs <= 1) {
        for (std::size_t e = 0; e < episodes; ++e)
            detail::collect_episode(buffer, e, steps_per_episode, seed);
    } else {
        std::vector<std::thread> workers;
        const std::size_t n = std::min(jobs, episodes);
        for (std::size_t w = 0; w < n; ++w)
            workers.emplace_back([&, w] {
                for (std::size_t e = w; e < episodes; e += n)
                    detail::collect_episode(buffer, e, steps_per_episode, seed);
            });
        for (std::thread& t : workers) t.join();
    }
    buffer.set_count(buffer.capacity());
    return buffer;
}

}  // namespace l0sparse

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "l0sparse/matrix.hpp"
#include "l0sparse/rng.hpp"

namespace l0sparse {

inline constexpr std::size_t kObsDim = 3;
inline constexpr std::size_t kActDim = 1;

struct TransitionRecord {
    std::array<double, kObsDim> obs{};
    double act = 0.0;
    double reward = 0.0;
    std::array<double, kObsDim> next_obs{};
    bool done = false;
};

struct Batch {
    Matrix obs;       // batch x 3
    Matrix act;       // batch x 1
    Matrix reward;    // batch x 1
    Matrix next_obs;  // batch x 3
    std::vector<std::uint8_t> done;
};

// Fixed-capacity columnar store of transitions; inserting past capacity
// overwrites the oldest record (ring).
class ReplayBuffer {
public:
    ReplayBuffer() = default;
    explicit ReplayBuffer(std::size_t capacity)
        : capacity_(capacity),
          obs_(capacity * kObsDim),
          act_(capacity),
          reward_(capacity),
          next_obs_(capacity * kObsDim),
          done_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t count() const { return count_; }
    bool empty() const { return count_ == 0; }

    void store(const TransitionRecord& rec) { write(head_code(), rec); }

    // Direct placement used by parallel collection. Does not touch count;
    // callers writing disjoint slots from several threads call set_count once
    // after joining.
    void store_at(std::size_t slot, const TransitionRecord& rec) {
        if (slot >= capacity_) throw std::out_of_range("ReplayBuffer::store_at slot");
        write(slot, rec);
    }

    void set_count(std::size_t n) {
        if (n > capacity_) throw std::out_of_range("ReplayBuffer::set_count");
        count_ = n;
        head_ = n % capacity_;
    }

    TransitionRecord record(std::size_t i) const {
        if (i >= count_) throw std::out_of_range("ReplayBuffer::record index");
        TransitionRecord rec;
        for (std::size_t k = 0; k < kObsDim; ++k) {
            rec.obs[k] = obs_[i * kObsDim + k];
            rec.next_obs[k] = next_obs_[i * kObsDim + k];
        }
        rec.act = act_[i];
        rec.reward = reward_[i];
        rec.done = done_[i] != 0;
        return rec;
    }

    Batch sample_batch(std::size_t batch_size, Rng& rng) const {
        if (count_ == 0) throw std::invalid_argument("sample_batch: empty buffer");
        Batch b;
        b.obs = Matrix(batch_size, kObsDim);
        b.act = Matrix(batch_size, kActDim);
        b.reward = Matrix(batch_size, 1);
        b.next_obs = Matrix(batch_size, kObsDim);
        b.done.resize(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const std::size_t idx = rng.index(count_);
            for (std::size_t k = 0; k < kObsDim; ++k) {
                b.obs(i, k) = obs_[idx * kObsDim + k];
                b.next_obs(i, k) = next_obs_[idx * kObsDim + k];
            }
            b.act(i, 0) = act_[idx];
            b.reward(i, 0) = reward_[idx];
            b.done[i] = done_[idx];
        }
        return b;
    }

    // Whole-buffer views as matrices (for full-pass evaluation).
    Matrix obs_matrix() const { return column_block(obs_, kObsDim); }
    Matrix act_matrix() const { return column_block(act_, kActDim); }
    Matrix reward_matrix() const { return column_block(reward_, 1); }
    Matrix next_obs_matrix() const { return column_block(next_obs_, kObsDim); }

    // Raw column access for serialization.
    const std::vector<double>& obs_raw() const { return obs_; }
    const std::vector<double>& act_raw() const { return act_; }
    const std::vector<double>& reward_raw() const { return reward_; }
    const std::vector<double>& next_obs_raw() const { return next_obs_; }
    const std::vector<std::uint8_t>& done_raw() const { return done_; }

private:
    std::size_t head_code() {
        const std::size_t slot = head_;
        head_ = (head_ + 1) % capacity_;
        if (count_ < capacity_) ++count_;
        return slot;
    }

    void write(std::size_t slot, const TransitionRecord& rec) {
        for (std::size_t k = 0; k < kObsDim; ++k) {
            obs_[slot * kObsDim + k] = rec.obs[k];
            next_obs_[slot * kObsDim + k] = rec.next_obs[k];
        }
        act_[slot] = rec.act;
        reward_[slot] = rec.reward;
        done_[slot] = rec.done ? 1 : 0;
    }

    Matrix column_block(const std::vector<double>& col, std::size_t width) const {
        Matrix m(count_, width);
        for (std::size_t i = 0; i < count_ * width; ++i) m.data()[i] = col[i];
        return m;
    }

    std::size_t capacity_ = 0;
    std::size_t count_ = 0;
    std::size_t head_ = 0;
    std::vector<double> obs_, act_, reward_, next_obs_;
    std::vector<std::uint8_t> done_;
};

}  // namespace l0sparse

#pragma once

// Bit-parallel combinational simulator: lane j of every word carries pattern
// (first + j) of the loaded block.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "corebist/circuit.hpp"

namespace corebist::detail {

inline constexpr std::size_t kLanes = 64;

class PackedSimulator {
public:
    explicit PackedSimulator(const Netlist& netlist);

    // Good-machine simulation of patterns[first, first + count), count <= 64.
    void load(std::span<const Bits> patterns, std::size_t first, std::size_t count);

    std::uint64_t valid_mask() const { return valid_; }
    std::uint64_t good(NetId net) const { return good_[net.index]; }
    std::uint64_t good_observation(std::size_t obs) const {
        return good_[obs_net_[obs]];
    }
    std::size_t observation_count() const { return obs_net_.size(); }

    // Lanes where the faulty machine differs at any observation point.
    std::uint64_t detect(const Force& force) {
        auto ignore = [](std::uint32_t, std::uint64_t) {};
        return run(force, ignore);
    }

    // Same, reporting each differing observation point with its diff word.
    template <class OnDiff>
    std::uint64_t detect(const Force& force, OnDiff&& on_diff) {
        return run(force, on_diff);
    }

private:
    std::uint64_t eval(std::uint32_t pos, int forced_pin, std::uint64_t forced) const;
    std::uint64_t value(std::uint32_t net) const {
        return stamp_[net] == epoch_ ? faulty_[net] : good_[net];
    }

    template <class OnDiff>
    std::uint64_t run(const Force& force, OnDiff& on_diff);

    void mark(std::uint32_t net, std::uint64_t word, std::uint64_t& detected, auto& on_diff) {
        faulty_[net] = word;
        stamp_[net] = epoch_;
        const std::int32_t obs = obs_of_net_[net];
        if (obs >= 0) {
            const std::uint64_t diff = (word ^ good_[net]) & valid_;
            if (diff) {
                detected |= diff;
                on_diff(static_cast<std::uint32_t>(obs), diff);
            }
        }
        for (std::uint32_t pos : consumers_[net]) schedule(pos);
    }

    void schedule(std::uint32_t pos) {
        if (queued_[pos] != epoch_) {
            queued_[pos] = epoch_;
            queue_.push(pos);
        }
    }

    const Netlist& netlist_;
    // Gates flattened in topological order.
    std::vector<GateKind> kind_;
    std::vector<std::uint32_t> out_;
    std::vector<std::uint32_t> in_begin_;
    std::vector<std::uint32_t> in_nets_;
    std::vector<std::vector<std::uint32_t>> consumers_;  // per net: gate positions
    std::vector<std::int32_t> obs_of_net_;
    std::vector<std::uint32_t> obs_net_;

    std::vector<std::uint64_t> good_;
    std::vector<std::uint64_t> faulty_;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint32_t> queued_;
    std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> queue_;
    std::uint32_t epoch_ = 0;
    std::uint64_t valid_ = 0;
};

template <class OnDiff>
std::uint64_t PackedSimulator::run(const Force& force, OnDiff& on_diff) {
    if (++epoch_ == 0) {  // wrapped: clear stamps
        std::fill(stamp_.begin(), stamp_.end(), 0);
        std::fill(queued_.begin(), queued_.end(), 0);
        epoch_ = 1;
    }
    const std::uint64_t forced = force.value ? ~std::uint64_t{0} : 0;
    std::uint64_t detected = 0;
    switch (force.site) {
        case Force::Site::Net: {
            const std::uint32_t net = force.net.index;
            if (((good_[net] ^ forced) & valid_) == 0) return 0;
            mark(net, forced, detected, on_diff);
            break;
        }
        case Force::Site::GatePin: {
            const std::uint32_t pos = netlist_.topo_position(force.index);
            const std::uint64_t word = eval(pos, static_cast<int>(force.pin), forced);
            if (((word ^ good_[out_[pos]]) & valid_) == 0) return 0;
            mark(out_[pos], word, detected, on_diff);
            break;
        }
        case Force::Site::OutputPort: {
            const std::uint64_t diff = (good_[force.net.index] ^ forced) & valid_;
            if (diff) on_diff(force.index, diff);
            return diff;
        }
        case Force::Site::FlopPin:
            return 0;
    }
    while (!queue_.empty()) {
        const std::uint32_t pos = queue_.top();
        queue_.pop();
        const std::uint64_t word = eval(pos, -1, 0);
        if (((word ^ good_[out_[pos]]) & valid_) != 0) mark(out_[pos], word, detected, on_diff);
    }
    return detected;
}

}  // namespace corebist::detail

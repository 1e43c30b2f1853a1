#include "packed_sim.hpp"

namespace corebist::detail {

PackedSimulator::PackedSimulator(const Netlist& netlist) : netlist_(netlist) {
    if (!netlist.is_combinational())
        throw Error("bit-parallel simulation requires a combinational netlist");
    const std::size_t nets = netlist.net_count();
    const auto& order = netlist.topo_order();
    kind_.reserve(order.size());
    out_.reserve(order.size());
    in_begin_.reserve(order.size() + 1);
    consumers_.assign(nets, {});
    for (std::uint32_t pos = 0; pos < order.size(); ++pos) {
        const Gate& g = netlist.gates()[order[pos]];
        kind_.push_back(g.kind);
        out_.push_back(g.output.index);
        in_begin_.push_back(static_cast<std::uint32_t>(in_nets_.size()));
        for (NetId in : g.inputs) {
            in_nets_.push_back(in.index);
            auto& c = consumers_[in.index];
            if (c.empty() || c.back() != pos) c.push_back(pos);
        }
    }
    in_begin_.push_back(static_cast<std::uint32_t>(in_nets_.size()));

    obs_of_net_.assign(nets, -1);
    for (std::size_t o = 0; o < netlist.observation_points().size(); ++o) {
        const NetId net = netlist.observation_points()[o].net;
        obs_of_net_[net.index] = static_cast<std::int32_t>(o);
        obs_net_.push_back(net.index);
    }
    good_.assign(nets, 0);
    faulty_.assign(nets, 0);
    stamp_.assign(nets, 0);
    queued_.assign(order.size(), 0);
}

std::uint64_t PackedSimulator::eval(std::uint32_t pos, int forced_pin, std::uint64_t forced) const {
    const std::uint32_t begin = in_begin_[pos];
    const std::uint32_t end = in_begin_[pos + 1];
    auto input = [&](std::uint32_t k) {
        return static_cast<int>(k - begin) == forced_pin ? forced : value(in_nets_[k]);
    };
    std::uint64_t acc = input(begin);
    switch (kind_[pos]) {
        case GateKind::Buf: return acc;
        case GateKind::Not: return ~acc;
        case GateKind::And:
        case GateKind::Nand:
            for (std::uint32_t k = begin + 1; k < end; ++k) acc &= input(k);
            return kind_[pos] == GateKind::And ? acc : ~acc;
        case GateKind::Or:
        case GateKind::Nor:
            for (std::uint32_t k = begin + 1; k < end; ++k) acc |= input(k);
            return kind_[pos] == GateKind::Or ? acc : ~acc;
        case GateKind::Xor:
        case GateKind::Xnor:
            for (std::uint32_t k = begin + 1; k < end; ++k) acc ^= input(k);
            return kind_[pos] == GateKind::Xor ? acc : ~acc;
    }
    return acc;
}

void PackedSimulator::load(std::span<const Bits> patterns, std::size_t first, std::size_t count) {
    if (count == 0 || count > kLanes || first + count > patterns.size())
        throw Error("invalid pattern block");
    const auto& pis = netlist_.primary_inputs();
    valid_ = count == kLanes ? ~std::uint64_t{0} : ((std::uint64_t{1} << count) - 1);
    for (std::size_t i = 0; i < pis.size(); ++i) {
        std::uint64_t word = 0;
        for (std::size_t j = 0; j < count; ++j) {
            const Bits& p = patterns[first + j];
            if (p.size() != pis.size())
                throw Error("pattern " + std::to_string(first + j) + " has " +
                            std::to_string(p.size()) + " bits, netlist has " +
                            std::to_string(pis.size()) + " primary inputs");
            if (p[i]) word |= std::uint64_t{1} << j;
        }
        good_[pis[i].index] = word;
    }
    // Good machine: faulty_ is never stamped in this epoch, value() reads good_.
    ++epoch_;
    if (epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        std::fill(queued_.begin(), queued_.end(), 0);
        epoch_ = 1;
    }
    for (std::uint32_t pos = 0; pos < kind_.size(); ++pos) good_[out_[pos]] = eval(pos, -1, 0);
}

}  // namespace corebist::detail

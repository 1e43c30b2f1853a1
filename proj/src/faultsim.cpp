#include "corebist/faultsim.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "packed_sim.hpp"
#include "parallel.hpp"

namespace corebist {

std::string_view to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::SA0: return "SA0";
        case FaultKind::SA1: return "SA1";
        case FaultKind::STR: return "STR";
        case FaultKind::STF: return "STF";
    }
    return "?";
}

Force to_force(const FaultDescriptor& fault) {
    Force f;
    f.site = fault.site.terminal;
    f.net = fault.site.net;
    f.index = fault.site.index;
    f.pin = fault.site.pin;
    f.value = fault.kind == FaultKind::SA1 || fault.kind == FaultKind::STF;
    return f;
}

std::string describe(const Netlist& netlist, const FaultDescriptor& fault) {
    std::string where = netlist.net_name(fault.site.net);
    switch (fault.site.terminal) {
        case Force::Site::Net: break;
        case Force::Site::GatePin:
            where += "->" + netlist.net_name(netlist.gates()[fault.site.index].output) + "." +
                     std::to_string(fault.site.pin);
            break;
        case Force::Site::FlopPin:
            where += "->DFF:" + netlist.net_name(netlist.flops()[fault.site.index].q);
            break;
        case Force::Site::OutputPort: where += "->OUTPUT"; break;
    }
    return where + " " + std::string(to_string(fault.kind));
}

std::size_t FaultUniverse::count(FaultKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        faults.begin(), faults.end(), [&](const FaultDescriptor& f) { return f.kind == kind; }));
}

std::size_t FaultUniverse::class_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < faults.size(); ++i) n += is_representative(i);
    return n;
}

std::vector<std::uint32_t> FaultUniverse::representatives() const {
    std::vector<std::uint32_t> reps;
    for (std::size_t i = 0; i < faults.size(); ++i)
        if (is_representative(i)) reps.push_back(static_cast<std::uint32_t>(i));
    return reps;
}

FaultUniverse enumerate_faults(const Netlist& netlist, FaultKinds kinds) {
    FaultUniverse u;
    auto add = [&](FaultSite site, FaultKind kind) {
        u.faults.push_back({site, kind, static_cast<std::uint32_t>(u.faults.size())});
    };
    for (std::uint32_t n = 0; n < netlist.net_count(); ++n) {
        const NetId net{n};
        if (kinds.stuck_at) {
            const FaultSite stem{Force::Site::Net, net, 0, 0};
            add(stem, FaultKind::SA0);
            add(stem, FaultKind::SA1);
            const auto& sinks = netlist.sinks(net);
            if (sinks.size() > 1) {
                for (const Sink& s : sinks) {
                    FaultSite branch{Force::Site::GatePin, net, s.index, s.pin};
                    if (s.kind == SinkKind::FlopPin) branch.terminal = Force::Site::FlopPin;
                    if (s.kind == SinkKind::OutputPort) branch.terminal = Force::Site::OutputPort;
                    add(branch, FaultKind::SA0);
                    add(branch, FaultKind::SA1);
                }
            }
        }
        if (kinds.transition) {
            const FaultSite stem{Force::Site::Net, net, 0, 0};
            add(stem, FaultKind::STR);
            add(stem, FaultKind::STF);
        }
    }
    return u;
}

FaultUniverse collapse(FaultUniverse universe, const Netlist& netlist) {
    const std::size_t n = universe.faults.size();
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0U);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](std::int64_t a, std::int64_t b) {
        if (a < 0 || b < 0) return;
        auto ra = find(static_cast<std::uint32_t>(a));
        auto rb = find(static_cast<std::uint32_t>(b));
        if (ra == rb) return;
        if (ra < rb) std::swap(ra, rb);
        parent[ra] = rb;  // lowest index stays representative
    };

    // Stuck-at fault indices per stem and per gate pin.
    std::vector<std::array<std::int64_t, 2>> stem(netlist.net_count(), {-1, -1});
    std::unordered_map<std::uint64_t, std::array<std::int64_t, 2>> pin;
    for (std::size_t i = 0; i < n; ++i) {
        const FaultDescriptor& f = universe.faults[i];
        if (!is_stuck_at(f.kind)) continue;
        const int v = f.kind == FaultKind::SA1 ? 1 : 0;
        if (f.site.terminal == Force::Site::Net) {
            stem[f.site.net.index][v] = static_cast<std::int64_t>(i);
        } else if (f.site.terminal == Force::Site::GatePin) {
            auto& slot = pin.try_emplace((std::uint64_t{f.site.index} << 32) | f.site.pin,
                                         std::array<std::int64_t, 2>{-1, -1})
                             .first->second;
            slot[v] = static_cast<std::int64_t>(i);
        }
    }
    auto input_fault = [&](std::uint32_t gate, std::uint32_t p, int v) -> std::int64_t {
        const NetId net = netlist.gates()[gate].inputs[p];
        if (netlist.sinks(net).size() > 1) {
            auto it = pin.find((std::uint64_t{gate} << 32) | p);
            return it == pin.end() ? -1 : it->second[v];
        }
        return stem[net.index][v];
    };

    for (std::uint32_t g = 0; g < netlist.gates().size(); ++g) {
        const Gate& gate = netlist.gates()[g];
        const auto& out = stem[gate.output.index];
        const auto arity = static_cast<std::uint32_t>(gate.inputs.size());
        switch (gate.kind) {
            case GateKind::And:
                for (std::uint32_t p = 0; p < arity; ++p) unite(input_fault(g, p, 0), out[0]);
                break;
            case GateKind::Nand:
                for (std::uint32_t p = 0; p < arity; ++p) unite(input_fault(g, p, 0), out[1]);
                break;
            case GateKind::Or:
                for (std::uint32_t p = 0; p < arity; ++p) unite(input_fault(g, p, 1), out[1]);
                break;
            case GateKind::Nor:
                for (std::uint32_t p = 0; p < arity; ++p) unite(input_fault(g, p, 1), out[0]);
                break;
            case GateKind::Not:
                unite(input_fault(g, 0, 0), out[1]);
                unite(input_fault(g, 0, 1), out[0]);
                break;
            case GateKind::Buf:
                unite(input_fault(g, 0, 0), out[0]);
                unite(input_fault(g, 0, 1), out[1]);
                break;
            case GateKind::Xor:
            case GateKind::Xnor: break;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        universe.faults[i].class_id = find(static_cast<std::uint32_t>(i));
    return universe;
}

namespace {

using Detections = std::vector<std::optional<std::uint32_t>>;

void require_patterns(std::span<const Bits> patterns, const Netlist& netlist) {
    if (patterns.empty()) throw Error("no patterns");
    for (std::size_t p = 0; p < patterns.size(); ++p)
        if (patterns[p].size() != netlist.primary_inputs().size())
            throw Error("pattern " + std::to_string(p) + " has " + std::to_string(patterns[p].size()) +
                        " bits, netlist has " + std::to_string(netlist.primary_inputs().size()) +
                        " primary inputs");
}

std::vector<std::uint32_t> reps_of(const FaultUniverse& u, bool stuck_at) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < u.faults.size(); ++i)
        if (u.is_representative(i) && is_stuck_at(u.faults[i].kind) == stuck_at) out.push_back(i);
    return out;
}

void require_kind(const FaultUniverse& u, bool stuck_at, const char* who) {
    for (const FaultDescriptor& f : u.faults)
        if (is_stuck_at(f.kind) != stuck_at)
            throw Error(std::string(who) + " does not handle " + std::string(to_string(f.kind)) +
                        " faults");
}

bool differs(const std::vector<Logic>& a, const std::vector<Logic>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != Logic::X && b[i] != Logic::X && a[i] != b[i]) return true;
    return false;
}

void serial_saf(const Netlist& netlist, const FaultUniverse& u, std::span<const Bits> patterns,
                const std::vector<std::uint32_t>& faults, unsigned workers, Detections& out) {
    std::vector<std::vector<Logic>> good;
    good.reserve(patterns.size());
    LogicState state = reset_state(netlist);
    for (const Bits& p : patterns) {
        state = evaluate(netlist, state, p);
        good.push_back(observe(netlist, state));
    }
    detail::parallel_for(faults.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const Force force = to_force(u.faults[faults[k]]);
            LogicState s = reset_state(netlist);
            for (std::size_t p = 0; p < patterns.size(); ++p) {
                s = evaluate(netlist, s, patterns[p], &force);
                if (differs(observe(netlist, s, &force), good[p])) {
                    out[faults[k]] = static_cast<std::uint32_t>(p);
                    break;
                }
            }
        }
    });
}

void packed_saf(const Netlist& netlist, const FaultUniverse& u, std::span<const Bits> patterns,
                const std::vector<std::uint32_t>& faults, unsigned workers, Detections& out) {
    detail::parallel_for(faults.size(), workers, [&](std::size_t begin, std::size_t end) {
        detail::PackedSimulator sim(netlist);
        std::vector<std::uint32_t> remaining(faults.begin() + begin, faults.begin() + end);
        for (std::size_t first = 0; first < patterns.size() && !remaining.empty();
             first += detail::kLanes) {
            sim.load(patterns, first, std::min(detail::kLanes, patterns.size() - first));
            std::size_t keep = 0;
            for (std::uint32_t f : remaining) {
                const std::uint64_t hit = sim.detect(to_force(u.faults[f]));
                if (hit)
                    out[f] = static_cast<std::uint32_t>(first + std::countr_zero(hit));
                else
                    remaining[keep++] = f;
            }
            remaining.resize(keep);
        }
    });
}

bool launches(FaultKind kind, Logic before, Logic after) {
    if (kind == FaultKind::STR) return before == Logic::Zero && after == Logic::One;
    return before == Logic::One && after == Logic::Zero;
}

void serial_tdf(const Netlist& netlist, const FaultUniverse& u, std::span<const Bits> patterns,
                const std::vector<std::uint32_t>& faults, unsigned workers, Detections& out) {
    // Good machine: the state entering each cycle, its settled values and
    // observations.
    std::vector<LogicState> before;
    std::vector<std::vector<Logic>> values, good;
    LogicState state = reset_state(netlist);
    for (const Bits& p : patterns) {
        before.push_back(state);
        state = evaluate(netlist, state, p);
        values.push_back(state.values);
        good.push_back(observe(netlist, state));
    }
    detail::parallel_for(faults.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const FaultDescriptor& f = u.faults[faults[k]];
            const Force force = to_force(f);
            const std::uint32_t net = f.site.net.index;
            for (std::size_t p = 1; p < patterns.size(); ++p) {
                if (!launches(f.kind, values[p - 1][net], values[p][net])) continue;
                const LogicState s = evaluate(netlist, before[p], patterns[p], &force);
                if (differs(observe(netlist, s, &force), good[p])) {
                    out[faults[k]] = static_cast<std::uint32_t>(p);
                    break;
                }
            }
        }
    });
}

void packed_tdf(const Netlist& netlist, const FaultUniverse& u, std::span<const Bits> patterns,
                const std::vector<std::uint32_t>& faults, unsigned workers, Detections& out) {
    detail::parallel_for(faults.size(), workers, [&](std::size_t begin, std::size_t end) {
        detail::PackedSimulator sim(netlist);
        std::vector<std::uint64_t> last(netlist.net_count(), 0);
        std::vector<std::uint32_t> remaining(faults.begin() + begin, faults.begin() + end);
        for (std::size_t first = 0; first < patterns.size() && !remaining.empty();
             first += detail::kLanes) {
            const std::size_t count = std::min(detail::kLanes, patterns.size() - first);
            sim.load(patterns, first, count);
            // Lane 0 of the first block has no launch pattern.
            const std::uint64_t launchable = sim.valid_mask() & (first == 0 ? ~std::uint64_t{1} : ~0ULL);
            std::size_t keep = 0;
            for (std::uint32_t f : remaining) {
                const FaultDescriptor& fault = u.faults[f];
                const std::uint64_t cur = sim.good(fault.site.net);
                const std::uint64_t prev = (cur << 1) | last[fault.site.net.index];
                std::uint64_t launch = fault.kind == FaultKind::STR ? (~prev & cur) : (prev & ~cur);
                launch &= launchable;
                const std::uint64_t hit = launch ? sim.detect(to_force(fault)) & launch : 0;
                if (hit)
                    out[f] = static_cast<std::uint32_t>(first + std::countr_zero(hit));
                else
                    remaining[keep++] = f;
            }
            remaining.resize(keep);
            for (std::uint32_t n = 0; n < netlist.net_count(); ++n)
                last[n] = (sim.good(NetId{n}) >> (count - 1)) & 1U;
        }
    });
}

CoverageReport finish(const Netlist& netlist, const FaultUniverse& u, std::size_t pattern_count,
                      Detections detections) {
    CoverageReport r;
    r.pattern_count = pattern_count;
    for (std::size_t i = 0; i < u.faults.size(); ++i)
        if (!u.is_representative(i)) detections[i] = detections[u.faults[i].class_id];
    r.first_detection = std::move(detections);
    for (const Block& b : netlist.blocks()) r.block_names.push_back(b.name);
    r.blocks.assign(netlist.blocks().size(), {});
    r.fault_block.assign(u.faults.size(), -1);
    for (std::size_t i = 0; i < u.faults.size(); ++i) {
        const bool hit = r.first_detection[i].has_value();
        ++r.total.faults;
        r.total.detected += hit;
        if (auto b = netlist.block_of(u.faults[i].site.net)) {
            r.fault_block[i] = static_cast<std::int32_t>(*b);
            ++r.blocks[*b].faults;
            r.blocks[*b].detected += hit;
        }
    }
    return r;
}

}  // namespace

CoverageReport serial_fault_sim(const Netlist& netlist, const FaultUniverse& universe,
                                std::span<const Bits> patterns, const SimOptions& options) {
    require_patterns(patterns, netlist);
    require_kind(universe, true, "stuck-at fault simulation");
    Detections det(universe.size());
    serial_saf(netlist, universe, patterns, reps_of(universe, true), options.workers, det);
    return finish(netlist, universe, patterns.size(), std::move(det));
}

CoverageReport parallel_fault_sim(const Netlist& netlist, const FaultUniverse& universe,
                                  std::span<const Bits> patterns, const SimOptions& options) {
    require_patterns(patterns, netlist);
    require_kind(universe, true, "stuck-at fault simulation");
    if (!netlist.is_combinational())
        throw Error("bit-parallel fault simulation rejects sequential netlist '" + netlist.name() +
                    "'; use the serial path");
    Detections det(universe.size());
    packed_saf(netlist, universe, patterns, reps_of(universe, true), options.workers, det);
    return finish(netlist, universe, patterns.size(), std::move(det));
}

CoverageReport tdf_sim(const Netlist& netlist, const FaultUniverse& universe,
                       std::span<const Bits> patterns, const SimOptions& options) {
    require_patterns(patterns, netlist);
    if (patterns.size() < 2) throw Error("transition fault simulation needs at least 2 patterns");
    require_kind(universe, false, "transition fault simulation");
    Detections det(universe.size());
    const auto reps = reps_of(universe, false);
    if (netlist.is_combinational() && !options.serial)
        packed_tdf(netlist, universe, patterns, reps, options.workers, det);
    else
        serial_tdf(netlist, universe, patterns, reps, options.workers, det);
    return finish(netlist, universe, patterns.size(), std::move(det));
}

CoverageReport simulate_faults(const Netlist& netlist, const FaultUniverse& universe,
                               std::span<const Bits> patterns, const SimOptions& options) {
    require_patterns(patterns, netlist);
    Detections det(universe.size());
    const auto saf = reps_of(universe, true);
    const auto tdf = reps_of(universe, false);
    const bool packed = netlist.is_combinational() && !options.serial;
    if (!saf.empty()) {
        if (packed)
            packed_saf(netlist, universe, patterns, saf, options.workers, det);
        else
            serial_saf(netlist, universe, patterns, saf, options.workers, det);
    }
    if (!tdf.empty() && patterns.size() >= 2) {
        if (packed)
            packed_tdf(netlist, universe, patterns, tdf, options.workers, det);
        else
            serial_tdf(netlist, universe, patterns, tdf, options.workers, det);
    }
    return finish(netlist, universe, patterns.size(), std::move(det));
}

std::vector<CoverageRow> coverage(const CoverageReport& report, const FaultUniverse& universe) {
    if (universe.faults.empty()) throw Error("empty fault universe: coverage is undefined");
    if (report.first_detection.size() != universe.size() ||
        report.fault_block.size() != universe.size())
        throw Error("coverage report does not match the fault universe");
    std::vector<CoverageRow> rows;
    for (const bool stuck_at : {true, false}) {
        std::vector<CoverageTally> blocks(report.block_names.size());
        CoverageTally total;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            if (is_stuck_at(universe.faults[i].kind) != stuck_at) continue;
            const bool hit = report.detected(i);
            ++total.faults;
            total.detected += hit;
            if (report.fault_block[i] >= 0) {
                ++blocks[static_cast<std::size_t>(report.fault_block[i])].faults;
                blocks[static_cast<std::size_t>(report.fault_block[i])].detected += hit;
            }
        }
        if (total.faults == 0) continue;
        const std::string group = stuck_at ? "SAF" : "TDF";
        for (std::size_t b = 0; b < blocks.size(); ++b)
            rows.push_back({group, report.block_names[b], blocks[b]});
        rows.push_back({group, "total", total});
    }
    return rows;
}

}  // namespace corebist

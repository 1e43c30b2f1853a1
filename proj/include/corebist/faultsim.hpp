#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corebist/circuit.hpp"

namespace corebist {

enum class FaultKind : std::uint8_t { SA0, SA1, STR, STF };

std::string_view to_string(FaultKind kind);
inline bool is_stuck_at(FaultKind k) { return k == FaultKind::SA0 || k == FaultKind::SA1; }

struct FaultKinds {
    bool stuck_at = true;
    bool transition = false;
};

// A fault location. Stems (Site::Net) sit on the driver output of a net;
// branch terminals (gate pin, flop pin, output port) exist only on nets with
// more than one sink, since a single-sink branch is the stem itself.
struct FaultSite {
    Force::Site terminal = Force::Site::Net;
    NetId net;
    std::uint32_t index = 0;
    std::uint32_t pin = 0;
    friend bool operator==(const FaultSite&, const FaultSite&) = default;
};

struct FaultDescriptor {
    FaultSite site;
    FaultKind kind = FaultKind::SA0;
    std::uint32_t class_id = 0;  // index of the collapsed-class representative
};

// Stuck-at injection for a fault (STR behaves as SA0 and STF as SA1 in the
// capture cycle).
Force to_force(const FaultDescriptor& fault);

std::string describe(const Netlist& netlist, const FaultDescriptor& fault);

struct FaultUniverse {
    std::vector<FaultDescriptor> faults;

    std::size_t size() const { return faults.size(); }
    std::size_t count(FaultKind kind) const;
    bool is_representative(std::size_t i) const { return faults[i].class_id == i; }
    std::size_t class_count() const;
    std::vector<std::uint32_t> representatives() const;
};

// SA0/SA1 on every terminal and/or STR/STF on every net, in a fixed order:
// nets ascending, stem before branches, kinds in enum order.
FaultUniverse enumerate_faults(const Netlist& netlist, FaultKinds kinds);

// Gate-local structural equivalence collapsing of the stuck-at faults.
// Transition faults keep singleton classes.
FaultUniverse collapse(FaultUniverse universe, const Netlist& netlist);

using PatternSet = std::vector<Bits>;  // full primary-input vectors, PI order

struct CoverageTally {
    std::size_t faults = 0;
    std::size_t detected = 0;
    double coverage() const {
        return faults == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(faults);
    }
};

struct CoverageReport {
    std::size_t pattern_count = 0;
    std::vector<std::optional<std::uint32_t>> first_detection;  // per fault
    std::vector<std::int32_t> fault_block;                      // per fault, -1 if none
    std::vector<std::string> block_names;
    std::vector<CoverageTally> blocks;
    CoverageTally total;

    bool detected(std::size_t fault) const { return first_detection[fault].has_value(); }
};

struct SimOptions {
    unsigned workers = 1;
    bool serial = false;  // scalar path even where bit-parallel applies
};

// Oracle path: each representative fault is replayed over the whole sequence
// with the scalar evaluator, stopping at the first observed difference.
// Handles sequential netlists. Stuck-at faults only.
CoverageReport serial_fault_sim(const Netlist& netlist, const FaultUniverse& universe,
                                std::span<const Bits> patterns, const SimOptions& options = {});

// 64 patterns per machine word, event-driven fault propagation. Combinational
// netlists and stuck-at faults only.
CoverageReport parallel_fault_sim(const Netlist& netlist, const FaultUniverse& universe,
                                  std::span<const Bits> patterns, const SimOptions& options = {});

// Launch-on-capture over consecutive pattern pairs. Transition faults only.
// The first-detection index is the capture pattern.
CoverageReport tdf_sim(const Netlist& netlist, const FaultUniverse& universe,
                       std::span<const Bits> patterns, const SimOptions& options = {});

// Picks the parallel path when it applies, serial otherwise; simulates
// stuck-at and transition faults of a mixed universe.
CoverageReport simulate_faults(const Netlist& netlist, const FaultUniverse& universe,
                               std::span<const Bits> patterns, const SimOptions& options = {});

struct CoverageRow {
    std::string group;  // "SAF" or "TDF"
    std::string block;  // block name or "total"
    CoverageTally tally;
};

// Per-kind, per-block summary. Throws on an empty universe.
std::vector<CoverageRow> coverage(const CoverageReport& report, const FaultUniverse& universe);

}  // namespace corebist

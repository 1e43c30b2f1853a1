#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corebist/circuit.hpp"
#include "corebist/compactor.hpp"
#include "corebist/faultsim.hpp"
#include "corebist/tpg.hpp"

namespace corebist {

struct AlfsrConfig {
    Polynomial polynomial = default_alfsr_polynomial();
    std::uint64_t seed = 0x5A5A5;
};

struct MisrAssignment {
    std::string block;
    Polynomial polynomial;
    XorCascade cascade;
};

// Full engine configuration. bindings[i] and misrs[i] describe the block
// with output-select code i.
struct BistPlan {
    static constexpr int kSchemaVersion = 1;
    static constexpr std::size_t kMaxBlocks = 4;  // 2-bit output select

    AlfsrConfig alfsr;
    unsigned counter_width = 12;
    std::uint64_t pattern_count = 4096;
    std::vector<PortBinding> bindings;
    std::vector<MisrAssignment> misrs;
    std::optional<std::vector<Signature>> golden;

    std::uint64_t max_patterns() const { return std::uint64_t{1} << counter_width; }
};

struct PlanDefaults {
    std::uint64_t pattern_count = 4096;
    unsigned counter_width = 12;
    unsigned misr_width = 16;
};

// One unconstrained binding per block (modular replication) and one MISR per
// block of width min(misr_width, block output width), at least 2.
BistPlan default_plan(const Netlist& netlist, const PlanDefaults& defaults = {});

// Throws Error describing the first mismatch between plan and netlist.
void validate_plan(const BistPlan& plan, const Netlist& netlist);

nlohmann::json plan_to_json(const BistPlan& plan);
BistPlan plan_from_json(const nlohmann::json& json);
BistPlan load_plan(const std::string& path);
void save_plan(const BistPlan& plan, const std::string& path);

// Primary-input vectors for cycles [0, count): bound block inputs from the
// bindings, unbound inputs held at 0.
std::vector<Bits> generate_patterns(const Netlist& netlist, const BistPlan& plan,
                                    std::uint64_t count);

// Maps a concatenated block-input word (binding order, block 0 in the low
// bits) onto a primary-input vector.
Bits pattern_from_block_inputs(const Netlist& netlist, const BistPlan& plan, const Bits& word);
std::size_t block_input_width(const Netlist& netlist, const BistPlan& plan);

enum class Phase : std::uint8_t { Idle, Loading, Running, Done };
std::string_view to_string(Phase phase);

struct ControlUnitState {
    std::uint64_t pattern_counter = 0;
    std::uint64_t pattern_count = 0;
    bool test_enable = false;
    unsigned output_select = 0;
    Phase phase = Phase::Idle;
};

// Cycle-accurate engine: Control Unit, Pattern Generator and Result
// Collector around one netlist. One pattern is applied and the block outputs
// of the same cycle are compacted per clock.
class BistSession {
public:
    BistSession(const Netlist& netlist, BistPlan plan,
                std::optional<FaultDescriptor> injected = std::nullopt);

    void reset();
    void set_count(std::uint64_t count);
    // Runs the remaining cycles of the test.
    void start();
    // Advances up to `cycles` clocks, entering Running if needed.
    void step(std::uint64_t cycles = 1);
    void select(unsigned code);

    const ControlUnitState& control() const { return cu_; }
    const BistPlan& plan() const { return plan_; }
    const Netlist& netlist() const { return *netlist_; }
    const AlfsrState& alfsr() const { return alfsr_; }
    std::vector<Signature> signatures() const;
    Signature selected_signature() const;

private:
    void clock();

    const Netlist* netlist_;
    BistPlan plan_;
    std::optional<Force> force_;
    ControlUnitState cu_;
    AlfsrState alfsr_;
    std::vector<MisrState> misrs_;
    LogicState state_;
};

struct BistResult {
    std::vector<Signature> signatures;
    std::optional<std::vector<bool>> pass;  // per block, only with a golden
    std::uint64_t patterns_applied = 0;

    bool all_pass() const;
};

// Signatures of a fault-free run, also stored in plan.golden.
std::vector<Signature> compute_golden(const Netlist& netlist, BistPlan& plan);

BistResult run_selftest(const Netlist& netlist, const BistPlan& plan,
                        const std::optional<FaultDescriptor>& injected = std::nullopt,
                        bool require_golden = false);

struct MisrDetection {
    std::size_t detected_pre = 0;   // detected at block outputs before compaction
    std::size_t detected_misr = 0;  // signature mismatch
    std::vector<std::uint32_t> aliased;
    std::vector<std::uint32_t> per_block_pre;
    std::vector<std::uint32_t> per_block_misr;
    double rate() const {
        return detected_pre == 0 ? 1.0
                                 : static_cast<double>(detected_misr) / static_cast<double>(detected_pre);
    }
};

// Faulty signatures for every stuck-at fault in `universe`, in order. Uses
// the bit-parallel engine for combinational netlists.
std::vector<std::vector<std::uint64_t>> faulty_signatures(const Netlist& netlist,
                                                          const BistPlan& plan,
                                                          const FaultUniverse& universe,
                                                          const SimOptions& options = {});

// For each fault detected before compaction, checks whether its signatures
// differ from the golden ones. Aliased faults are re-verified with
// run_selftest.
MisrDetection misr_detection_rate(const Netlist& netlist, const BistPlan& plan,
                                  const FaultUniverse& universe, const SimOptions& options = {});

}  // namespace corebist

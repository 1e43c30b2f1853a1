#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corebist/bist.hpp"
#include "corebist/circuit.hpp"

namespace corebist {

// 1149.1 TAP controller states.
enum class TapState : std::uint8_t {
    TestLogicReset,
    RunTestIdle,
    SelectDrScan,
    CaptureDr,
    ShiftDr,
    Exit1Dr,
    PauseDr,
    Exit2Dr,
    UpdateDr,
    SelectIrScan,
    CaptureIr,
    ShiftIr,
    Exit1Ir,
    PauseIr,
    Exit2Ir,
    UpdateIr,
};

inline constexpr std::size_t kTapStateCount = 16;

std::string_view to_string(TapState state);
TapState tap_next(TapState state, bool tms);

// Wrapper instruction register codes (3 bits).
enum class WirCode : std::uint8_t { Bypass = 0, WbrSel = 1, WcdrSel = 2, WdrSel = 3 };

inline constexpr std::size_t kWirWidth = 3;
inline constexpr std::uint8_t kWirCapture = 0b001;
inline constexpr std::size_t kWcdrWidth = 16;
inline constexpr std::size_t kWdrWidth = 18;

// WCDR layout: command in bits [3:0], operand in bits [15:4].
enum class WcdrCommand : std::uint8_t {
    Reset = 1,
    SetCount = 2,  // pattern count = operand + 1
    Start = 3,     // engine then applies one pattern per TCK
    Select = 4,    // operand [1:0] MISR, [3:2] 16-bit slice
    ReadStatus = 5,
};

std::uint16_t encode_command(WcdrCommand command, std::uint16_t operand = 0);

// WDR bits [17:16].
enum class WrapperStatus : std::uint8_t { Idle = 0, Running = 1, Done = 2, Error = 3 };
std::string_view to_string(WrapperStatus status);

// TAP, wrapper registers and BIST engine of one wrapped core, clocked one TCK
// at a time.
class CoreWrapper {
public:
    CoreWrapper(const Netlist& netlist, BistPlan plan,
                std::optional<FaultDescriptor> injected = std::nullopt);

    // One TCK period. Returns TDO: the bit shifted out in Shift-DR/IR, X
    // (high impedance) otherwise.
    Logic tick(bool tms, bool tdi);

    TapState tap_state() const { return tap_; }
    WirCode instruction() const { return static_cast<WirCode>(wir_); }
    std::uint8_t wir() const { return wir_; }
    WrapperStatus status() const;
    const BistSession& session() const { return session_; }
    unsigned slice() const { return slice_; }

    // Current content of the 18-bit data register as it would be captured.
    std::uint32_t wdr_value() const;
    // Primary-input values latched by the boundary register.
    const Bits& wbr_inputs() const { return wbr_inputs_; }
    std::size_t wbr_length() const;

private:
    void capture_dr();
    void update_dr();
    void execute(std::uint16_t wcdr);

    const Netlist* netlist_;
    BistSession session_;
    TapState tap_ = TapState::TestLogicReset;
    std::uint8_t wir_ = 0;
    Bits ir_shift_;
    Bits dr_shift_;
    Bits wbr_inputs_;
    unsigned slice_ = 0;
    bool error_ = false;
};

// Expected TDO per step: '0', '1', 'x' (high impedance) or '-' (don't care).
struct TraceStep {
    bool tms = false;
    bool tdi = false;
    char tdo = '-';
    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

// Text form: one "tck tms tdi tdo" line per step, tck counting from 0; '#'
// starts a comment.
struct SerialTrace {
    std::vector<TraceStep> steps;

    static SerialTrace parse(std::string_view text);
    static SerialTrace load(const std::string& path);
    std::string to_string() const;
};

struct TraceMismatch {
    std::size_t tck;
    char expected;
    char actual;
};

struct TraceResult {
    SerialTrace observed;  // input steps with the produced TDO filled in
    std::vector<TraceMismatch> mismatches;
    bool ok() const { return mismatches.empty(); }
};

TraceResult drive_trace(CoreWrapper& wrapper, const SerialTrace& trace);

// Assembles serial sequences. Every operation starts and ends in
// Run-Test/Idle, except reset() which ends there after passing through
// Test-Logic-Reset.
class TraceBuilder {
public:
    TraceBuilder& reset();
    TraceBuilder& idle(std::size_t cycles = 1);
    TraceBuilder& write_ir(WirCode code);
    // Shifts `width` bits of `value` LSB first; TDO is left as don't care.
    TraceBuilder& write_dr(std::uint64_t value, std::size_t width);
    // Shifts zeros and records the positions of the bits read; expected TDO
    // is taken from `expected` when given.
    TraceBuilder& read_dr(std::size_t width, std::optional<std::uint64_t> expected = std::nullopt);
    TraceBuilder& command(WcdrCommand command, std::uint16_t operand = 0);

    const SerialTrace& trace() const { return trace_; }
    // Start step of each read_dr, in call order.
    const std::vector<std::pair<std::size_t, std::size_t>>& reads() const { return reads_; }

    // Value of read `index` from an observed trace.
    std::uint64_t read_value(const SerialTrace& observed, std::size_t index) const;

private:
    void step(bool tms, bool tdi = false, char tdo = '-');
    void shift(std::uint64_t value, std::size_t width, std::optional<std::uint64_t> expected);

    SerialTrace trace_;
    std::vector<std::pair<std::size_t, std::size_t>> reads_;
};

}  // namespace corebist

#include "corebist/access.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace corebist {

namespace {

constexpr std::array<std::string_view, kTapStateCount> kTapNames = {
    "Test-Logic-Reset", "Run-Test/Idle", "Select-DR-Scan", "Capture-DR",
    "Shift-DR",         "Exit1-DR",      "Pause-DR",       "Exit2-DR",
    "Update-DR",        "Select-IR-Scan", "Capture-IR",    "Shift-IR",
    "Exit1-IR",         "Pause-IR",      "Exit2-IR",       "Update-IR",
};

// next[state][tms]
constexpr TapState kNext[kTapStateCount][2] = {
    {TapState::RunTestIdle, TapState::TestLogicReset},
    {TapState::RunTestIdle, TapState::SelectDrScan},
    {TapState::CaptureDr, TapState::SelectIrScan},
    {TapState::ShiftDr, TapState::Exit1Dr},
    {TapState::ShiftDr, TapState::Exit1Dr},
    {TapState::PauseDr, TapState::UpdateDr},
    {TapState::PauseDr, TapState::Exit2Dr},
    {TapState::ShiftDr, TapState::UpdateDr},
    {TapState::RunTestIdle, TapState::SelectDrScan},
    {TapState::CaptureIr, TapState::TestLogicReset},
    {TapState::ShiftIr, TapState::Exit1Ir},
    {TapState::ShiftIr, TapState::Exit1Ir},
    {TapState::PauseIr, TapState::UpdateIr},
    {TapState::PauseIr, TapState::Exit2Ir},
    {TapState::ShiftIr, TapState::UpdateIr},
    {TapState::RunTestIdle, TapState::SelectDrScan},
};

// Shift one bit in at the top, returning the bit leaving at bit 0.
bool shift_register(Bits& reg, bool tdi) {
    if (reg.empty()) return tdi;
    const bool out = reg.front();
    reg.erase(reg.begin());
    reg.push_back(tdi);
    return out;
}

char logic_char(Logic v) {
    switch (v) {
        case Logic::Zero: return '0';
        case Logic::One: return '1';
        case Logic::X: return 'x';
    }
    return 'x';
}

}  // namespace

std::string_view to_string(TapState state) { return kTapNames[static_cast<std::size_t>(state)]; }

TapState tap_next(TapState state, bool tms) { return kNext[static_cast<std::size_t>(state)][tms]; }

std::uint16_t encode_command(WcdrCommand command, std::uint16_t operand) {
    if (operand > 0xFFF) throw Error("WCDR operand " + std::to_string(operand) + " exceeds 12 bits");
    return static_cast<std::uint16_t>((operand << 4) | static_cast<std::uint16_t>(command));
}

std::string_view to_string(WrapperStatus status) {
    switch (status) {
        case WrapperStatus::Idle: return "idle";
        case WrapperStatus::Running: return "running";
        case WrapperStatus::Done: return "done";
        case WrapperStatus::Error: return "error";
    }
    return "?";
}

CoreWrapper::CoreWrapper(const Netlist& netlist, BistPlan plan, std::optional<FaultDescriptor> injected)
    : netlist_(&netlist),
      session_(netlist, std::move(plan), std::move(injected)),
      wbr_inputs_(netlist.primary_inputs().size(), 0) {
    if (session_.plan().counter_width > 12)
        throw Error("SET_COUNT carries 12 bits; counter width " +
                    std::to_string(session_.plan().counter_width) + " is not reachable over the wrapper");
}

WrapperStatus CoreWrapper::status() const {
    if (error_) return WrapperStatus::Error;
    switch (session_.control().phase) {
        case Phase::Idle:
        case Phase::Loading: return WrapperStatus::Idle;
        case Phase::Running: return WrapperStatus::Running;
        case Phase::Done: return WrapperStatus::Done;
    }
    return WrapperStatus::Error;
}

std::uint32_t CoreWrapper::wdr_value() const {
    const Signature sig = session_.selected_signature();
    const auto slice = static_cast<std::uint32_t>((sig.value >> (16 * slice_)) & 0xFFFF);
    return slice | (static_cast<std::uint32_t>(status()) << 16);
}

std::size_t CoreWrapper::wbr_length() const {
    return netlist_->primary_inputs().size() + netlist_->primary_outputs().size();
}

void CoreWrapper::capture_dr() {
    switch (instruction()) {
        case WirCode::WbrSel: {
            dr_shift_ = wbr_inputs_;
            const LogicState s = evaluate(*netlist_, reset_state(*netlist_), wbr_inputs_);
            const auto obs = observe(*netlist_, s);
            for (std::size_t i = 0; i < netlist_->primary_outputs().size(); ++i)
                dr_shift_.push_back(obs[i] == Logic::One);
            break;
        }
        case WirCode::WcdrSel: dr_shift_.assign(kWcdrWidth, 0); break;
        case WirCode::WdrSel: dr_shift_ = bits_from_word(wdr_value(), kWdrWidth); break;
        default: dr_shift_.assign(1, 0); break;
    }
}

void CoreWrapper::update_dr() {
    switch (instruction()) {
        case WirCode::WbrSel:
            std::copy_n(dr_shift_.begin(), wbr_inputs_.size(), wbr_inputs_.begin());
            break;
        case WirCode::WcdrSel: execute(static_cast<std::uint16_t>(bits_to_word(dr_shift_))); break;
        default: break;
    }
}

void CoreWrapper::execute(std::uint16_t wcdr) {
    const unsigned command = wcdr & 0xF;
    const unsigned operand = wcdr >> 4;
    if (command == static_cast<unsigned>(WcdrCommand::Reset)) {
        session_.reset();
        slice_ = 0;
        error_ = false;
        return;
    }
    if (error_) return;  // sticky until RESET
    try {
        switch (static_cast<WcdrCommand>(command)) {
            case WcdrCommand::SetCount: session_.set_count(operand + 1); break;
            case WcdrCommand::Start:
                if (session_.control().phase == Phase::Done) throw Error("test already completed");
                session_.step(0);  // enter Running; tick() applies the patterns
                break;
            case WcdrCommand::Select: {
                const unsigned sel = operand & 3;
                const unsigned slice = (operand >> 2) & 3;
                const auto& misrs = session_.plan().misrs;
                if (sel >= misrs.size() || 16 * slice >= misrs[sel].polynomial.degree())
                    throw Error("select out of range");
                session_.select(sel);
                slice_ = slice;
                break;
            }
            case WcdrCommand::ReadStatus: break;
            default: error_ = true; break;
        }
    } catch (const Error&) {
        error_ = true;
    }
}

Logic CoreWrapper::tick(bool tms, bool tdi) {
    // The engine shares TCK: one pattern per period once started.
    if (session_.control().phase == Phase::Running) session_.step(1);
    Logic tdo = Logic::X;
    switch (tap_) {
        case TapState::CaptureIr: ir_shift_ = bits_from_word(kWirCapture, kWirWidth); break;
        case TapState::ShiftIr: tdo = shift_register(ir_shift_, tdi) ? Logic::One : Logic::Zero; break;
        case TapState::CaptureDr: capture_dr(); break;
        case TapState::ShiftDr: tdo = shift_register(dr_shift_, tdi) ? Logic::One : Logic::Zero; break;
        default: break;
    }
    tap_ = tap_next(tap_, tms);
    switch (tap_) {
        case TapState::TestLogicReset: wir_ = static_cast<std::uint8_t>(WirCode::Bypass); break;
        case TapState::UpdateIr: wir_ = static_cast<std::uint8_t>(bits_to_word(ir_shift_)); break;
        case TapState::UpdateDr: update_dr(); break;
        default: break;
    }
    return tdo;
}

// ---------------------------------------------------------------------------
// Traces

SerialTrace SerialTrace::parse(std::string_view text) {
    SerialTrace trace;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string line(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream in(line);
        std::string tck, tms, tdi, tdo;
        if (!(in >> tck)) continue;
        if (!(in >> tms >> tdi)) throw ParseError("expected 'tck tms tdi [tdo]'", line_no, 1);
        if (!(in >> tdo)) tdo = "-";
        std::string extra;
        if (in >> extra) throw ParseError("trailing field '" + extra + "'", line_no, 1);
        std::size_t index = 0;
        const auto [p, ec] = std::from_chars(tck.data(), tck.data() + tck.size(), index);
        if (ec != std::errc{} || p != tck.data() + tck.size() || index != trace.steps.size())
            throw ParseError("tck must count up from 0, got '" + tck + "'", line_no, 1);
        auto bit = [&](const std::string& f, const char* what) {
            if (f != "0" && f != "1")
                throw ParseError(std::string(what) + " must be 0 or 1, got '" + f + "'", line_no, 1);
            return f == "1";
        };
        TraceStep step{bit(tms, "tms"), bit(tdi, "tdi"), '-'};
        if (tdo.size() != 1 || std::string_view("01x-").find(tdo[0]) == std::string_view::npos)
            throw ParseError("tdo must be 0, 1, x or -, got '" + tdo + "'", line_no, 1);
        step.tdo = tdo[0];
        trace.steps.push_back(step);
    }
    return trace;
}

SerialTrace SerialTrace::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open trace '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string SerialTrace::to_string() const {
    std::string out = "# tck tms tdi tdo\n";
    for (std::size_t i = 0; i < steps.size(); ++i) {
        out += std::to_string(i);
        out += ' ';
        out += steps[i].tms ? '1' : '0';
        out += ' ';
        out += steps[i].tdi ? '1' : '0';
        out += ' ';
        out += steps[i].tdo;
        out += '\n';
    }
    return out;
}

TraceResult drive_trace(CoreWrapper& wrapper, const SerialTrace& trace) {
    TraceResult result;
    result.observed.steps.reserve(trace.steps.size());
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const TraceStep& s = trace.steps[i];
        const char got = logic_char(wrapper.tick(s.tms, s.tdi));
        result.observed.steps.push_back({s.tms, s.tdi, got});
        if (s.tdo != '-' && s.tdo != got) result.mismatches.push_back({i, s.tdo, got});
    }
    return result;
}

void TraceBuilder::step(bool tms, bool tdi, char tdo) { trace_.steps.push_back({tms, tdi, tdo}); }

TraceBuilder& TraceBuilder::reset() {
    for (int i = 0; i < 5; ++i) step(true);
    step(false);
    return *this;
}

TraceBuilder& TraceBuilder::idle(std::size_t cycles) {
    for (std::size_t i = 0; i < cycles; ++i) step(false);
    return *this;
}

void TraceBuilder::shift(std::uint64_t value, std::size_t width, std::optional<std::uint64_t> expected) {
    for (std::size_t i = 0; i < width; ++i) {
        const char tdo = expected ? (((*expected >> i) & 1) ? '1' : '0') : '-';
        step(i + 1 == width, ((value >> i) & 1) != 0, tdo);
    }
    step(true);   // Exit1 -> Update
    step(false);  // Update -> Idle
}

TraceBuilder& TraceBuilder::write_ir(WirCode code) {
    step(true);
    step(true);
    step(false);
    step(false);
    shift(static_cast<std::uint64_t>(code), kWirWidth, std::nullopt);
    return *this;
}

TraceBuilder& TraceBuilder::write_dr(std::uint64_t value, std::size_t width) {
    if (width == 0 || width > 64) throw Error("DR shift width must be 1..64");
    step(true);
    step(false);
    step(false);
    shift(value, width, std::nullopt);
    return *this;
}

TraceBuilder& TraceBuilder::read_dr(std::size_t width, std::optional<std::uint64_t> expected) {
    if (width == 0 || width > 64) throw Error("DR shift width must be 1..64");
    step(true);
    step(false);
    step(false);
    reads_.emplace_back(trace_.steps.size(), width);
    shift(0, width, expected);
    return *this;
}

TraceBuilder& TraceBuilder::command(WcdrCommand command, std::uint16_t operand) {
    return write_dr(encode_command(command, operand), kWcdrWidth);
}

std::uint64_t TraceBuilder::read_value(const SerialTrace& observed, std::size_t index) const {
    const auto [start, width] = reads_.at(index);
    if (observed.steps.size() < start + width) throw Error("observed trace is too short");
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < width; ++i) {
        const char c = observed.steps[start + i].tdo;
        if (c != '0' && c != '1') throw Error("read bit " + std::to_string(i) + " is not driven");
        if (c == '1') value |= std::uint64_t{1} << i;
    }
    return value;
}

}  // namespace corebist

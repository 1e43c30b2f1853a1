#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corebist/common.hpp"

namespace corebist {

struct NetId {
    std::uint32_t index = 0;
    friend auto operator<=>(NetId, NetId) = default;
};

enum class Logic : std::uint8_t { Zero, One, X };

inline Logic to_logic(bool v) { return v ? Logic::One : Logic::Zero; }
char to_char(Logic v);

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

std::string_view to_string(GateKind kind);
// Case-insensitive; accepts BUFF as an alias of BUF. Returns nullopt for
// anything else (DFF is not a gate kind).
std::optional<GateKind> gate_kind_from_string(std::string_view text);

struct Gate {
    GateKind kind = GateKind::Buf;
    std::vector<NetId> inputs;
    NetId output;
};

struct Flop {
    NetId d;
    NetId q;
    Logic init = Logic::Zero;
};

// A module under test: ordered, LSB-first port bit lists.
struct Block {
    std::string name;
    std::vector<NetId> inputs;
    std::vector<NetId> outputs;
};

enum class DriverKind : std::uint8_t { None, PrimaryInput, Gate, Flop };

struct Driver {
    DriverKind kind = DriverKind::None;
    std::uint32_t index = 0;  // PI position, gate index or flop index
};

enum class SinkKind : std::uint8_t { GatePin, FlopPin, OutputPort };

struct Sink {
    SinkKind kind = SinkKind::GatePin;
    std::uint32_t index = 0;  // gate, flop or primary-output position
    std::uint32_t pin = 0;    // gate input pin; 0 otherwise
};

// A point where the response is observed. POs come first, then block output
// nets that are not primary outputs.
struct ObservationPoint {
    NetId net;
    std::optional<std::uint32_t> output_index;
};

// Raw netlist contents, before validation.
struct NetlistData {
    std::string name;
    std::vector<std::string> net_names;
    std::vector<Gate> gates;
    std::vector<NetId> primary_inputs;
    std::vector<NetId> primary_outputs;
    std::vector<Flop> flops;
    std::vector<Block> blocks;
};

// Structural problem found while building a netlist. `net` names the net the
// problem was detected on, when there is one.
class NetlistError : public Error {
public:
    NetlistError(const std::string& what, std::optional<NetId> net = std::nullopt)
        : Error(what), net_(net) {}
    std::optional<NetId> net() const { return net_; }

private:
    std::optional<NetId> net_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          message_(message),
          line_(line),
          column_(column) {}
    const std::string& message() const { return message_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::string message_;
    std::size_t line_;
    std::size_t column_;
};

// Immutable gate-level circuit. Construction validates single drivers,
// declared fan-ins, duplicate-free ports and an acyclic combinational part.
class Netlist {
public:
    static Netlist build(NetlistData data);

    const std::string& name() const { return data_.name; }
    std::size_t net_count() const { return data_.net_names.size(); }
    const std::string& net_name(NetId id) const { return data_.net_names.at(id.index); }
    std::optional<NetId> find_net(std::string_view name) const;

    const std::vector<Gate>& gates() const { return data_.gates; }
    const std::vector<NetId>& primary_inputs() const { return data_.primary_inputs; }
    const std::vector<NetId>& primary_outputs() const { return data_.primary_outputs; }
    const std::vector<Flop>& flops() const { return data_.flops; }
    const std::vector<Block>& declared_blocks() const { return data_.blocks; }

    // Declared blocks, or a single block spanning all PIs/POs named after
    // the netlist when none were declared.
    const std::vector<Block>& blocks() const { return blocks_; }
    std::optional<std::size_t> find_block(std::string_view name) const;

    bool is_combinational() const { return data_.flops.empty(); }

    const Driver& driver(NetId id) const { return drivers_[id.index]; }
    const std::vector<Sink>& sinks(NetId id) const { return sinks_[id.index]; }

    // Gate indices in evaluation order, and the inverse map.
    const std::vector<std::uint32_t>& topo_order() const { return topo_order_; }
    std::uint32_t topo_position(std::uint32_t gate) const { return topo_position_[gate]; }

    const std::vector<ObservationPoint>& observation_points() const { return observation_points_; }

    // Index into observation_points() for each block output bit.
    const std::vector<std::vector<std::uint32_t>>& block_observations() const {
        return block_observations_;
    }

    // Block owning a net: the first block whose input ports or output fan-in
    // cone contains it. nullopt when no block reaches the net.
    std::optional<std::size_t> block_of(NetId id) const { return block_of_[id.index]; }

private:
    explicit Netlist(NetlistData data) : data_(std::move(data)) {}
    void validate_and_index();

    NetlistData data_;
    std::unordered_map<std::string, NetId> by_name_;
    std::vector<Block> blocks_;
    std::vector<Driver> drivers_;
    std::vector<std::vector<Sink>> sinks_;
    std::vector<std::uint32_t> topo_order_;
    std::vector<std::uint32_t> topo_position_;
    std::vector<ObservationPoint> observation_points_;
    std::vector<std::vector<std::uint32_t>> block_observations_;
    std::vector<std::optional<std::size_t>> block_of_;
};

// Bench-style text: INPUT(a) / OUTPUT(y) / y = KIND(a, b) / q = DFF(d),
// '#' comments and '#@block NAME in: a,b out: y' pragmas.
Netlist parse_netlist(std::string_view text, std::string name = "netlist");
Netlist load_netlist(const std::string& path);
std::string write_netlist(const Netlist& netlist);

// Forces one circuit location to a constant during evaluation.
struct Force {
    enum class Site : std::uint8_t { Net, GatePin, FlopPin, OutputPort };
    Site site = Site::Net;
    NetId net;               // affected net (for pins: the net feeding the pin)
    std::uint32_t index = 0; // gate / flop / primary-output position
    std::uint32_t pin = 0;   // gate input pin
    bool value = false;
};

struct LogicState {
    std::vector<Logic> values;  // settled net values of the last evaluation
    std::vector<Logic> flops;   // flop contents for the next evaluation
};

// Every net X, flops at their declared init value.
LogicState reset_state(const Netlist& netlist);

Logic eval_gate(GateKind kind, std::span<const Logic> inputs);

// One clock cycle: settle combinational logic for `inputs` (PI order) and the
// current flop contents, then clock every flop once.
LogicState evaluate(const Netlist& netlist, const LogicState& state, const Bits& inputs,
                    const Force* force = nullptr);

// Values at observation_points() for an evaluated state.
std::vector<Logic> observe(const Netlist& netlist, const LogicState& state,
                           const Force* force = nullptr);

struct ToggleReport {
    double fraction = 0.0;
    std::size_t toggled_nets = 0;
    std::vector<std::uint64_t> counts;  // per net, X->value settles excluded
};

ToggleReport toggle_activity(const Netlist& netlist, std::span<const Bits> patterns);

}  // namespace corebist

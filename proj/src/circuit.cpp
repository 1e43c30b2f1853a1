#include "corebist/circuit.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace corebist {

char to_char(Logic v) {
    switch (v) {
        case Logic::Zero: return '0';
        case Logic::One: return '1';
        case Logic::X: break;
    }
    return 'X';
}

std::string_view to_string(GateKind kind) {
    switch (kind) {
        case GateKind::And: return "AND";
        case GateKind::Nand: return "NAND";
        case GateKind::Or: return "OR";
        case GateKind::Nor: return "NOR";
        case GateKind::Xor: return "XOR";
        case GateKind::Xnor: return "XNOR";
        case GateKind::Not: return "NOT";
        case GateKind::Buf: return "BUF";
    }
    return "?";
}

std::optional<GateKind> gate_kind_from_string(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "AND") return GateKind::And;
    if (upper == "NAND") return GateKind::Nand;
    if (upper == "OR") return GateKind::Or;
    if (upper == "NOR") return GateKind::Nor;
    if (upper == "XOR") return GateKind::Xor;
    if (upper == "XNOR") return GateKind::Xnor;
    if (upper == "NOT" || upper == "INV") return GateKind::Not;
    if (upper == "BUF" || upper == "BUFF") return GateKind::Buf;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Netlist construction

Netlist Netlist::build(NetlistData data) {
    Netlist netlist(std::move(data));
    netlist.validate_and_index();
    return netlist;
}

std::optional<NetId> Netlist::find_net(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Netlist::find_block(std::string_view name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name) return i;
    return std::nullopt;
}

void Netlist::validate_and_index() {
    const std::size_t n = data_.net_names.size();
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!by_name_.emplace(data_.net_names[i], NetId{i}).second)
            throw NetlistError("duplicate net name '" + data_.net_names[i] + "'", NetId{i});
    }
    auto check = [&](NetId id, const char* where) {
        if (id.index >= n)
            throw NetlistError(std::string("reference to undeclared net in ") + where);
    };

    drivers_.assign(n, Driver{});
    sinks_.assign(n, {});
    auto drive = [&](NetId id, Driver d) {
        if (drivers_[id.index].kind != DriverKind::None)
            throw NetlistError("multiply-driven net '" + net_name(id) + "'", id);
        drivers_[id.index] = d;
    };

    for (std::uint32_t i = 0; i < data_.primary_inputs.size(); ++i) {
        check(data_.primary_inputs[i], "INPUT");
        drive(data_.primary_inputs[i], {DriverKind::PrimaryInput, i});
    }
    for (std::uint32_t g = 0; g < data_.gates.size(); ++g) {
        const Gate& gate = data_.gates[g];
        check(gate.output, "gate output");
        const bool unary = gate.kind == GateKind::Not || gate.kind == GateKind::Buf;
        if (gate.inputs.empty() || (unary && gate.inputs.size() != 1))
            throw NetlistError(std::string("wrong number of inputs for ") +
                                   std::string(to_string(gate.kind)) + " driving '" +
                                   net_name(gate.output) + "'",
                               gate.output);
        for (std::uint32_t p = 0; p < gate.inputs.size(); ++p) {
            check(gate.inputs[p], "gate input");
            sinks_[gate.inputs[p].index].push_back({SinkKind::GatePin, g, p});
        }
        drive(gate.output, {DriverKind::Gate, g});
    }
    for (std::uint32_t f = 0; f < data_.flops.size(); ++f) {
        check(data_.flops[f].d, "DFF input");
        check(data_.flops[f].q, "DFF output");
        if (data_.flops[f].init == Logic::X)
            throw NetlistError("flop init value must be 0 or 1", data_.flops[f].q);
        sinks_[data_.flops[f].d.index].push_back({SinkKind::FlopPin, f, 0});
        drive(data_.flops[f].q, {DriverKind::Flop, f});
    }
    for (std::uint32_t o = 0; o < data_.primary_outputs.size(); ++o) {
        check(data_.primary_outputs[o], "OUTPUT");
        sinks_[data_.primary_outputs[o].index].push_back({SinkKind::OutputPort, o, 0});
    }
    for (std::uint32_t i = 0; i < n; ++i)
        if (drivers_[i].kind == DriverKind::None)
            throw NetlistError("undriven net '" + data_.net_names[i] + "'", NetId{i});

    auto no_duplicates = [&](const std::vector<NetId>& nets, const std::string& what) {
        std::vector<std::uint32_t> ids;
        for (NetId id : nets) ids.push_back(id.index);
        std::sort(ids.begin(), ids.end());
        auto dup = std::adjacent_find(ids.begin(), ids.end());
        if (dup != ids.end())
            throw NetlistError("duplicate net '" + data_.net_names[*dup] + "' in " + what,
                               NetId{*dup});
    };
    no_duplicates(data_.primary_inputs, "INPUT list");
    no_duplicates(data_.primary_outputs, "OUTPUT list");

    // Kahn's algorithm over gates; flop outputs and PIs are sources.
    const std::size_t gate_count = data_.gates.size();
    std::vector<std::uint32_t> pending(gate_count, 0);
    for (std::uint32_t g = 0; g < gate_count; ++g)
        for (NetId in : data_.gates[g].inputs)
            if (drivers_[in.index].kind == DriverKind::Gate) ++pending[g];
    std::vector<std::uint32_t> ready;
    for (std::uint32_t g = 0; g < gate_count; ++g)
        if (pending[g] == 0) ready.push_back(g);
    topo_order_.clear();
    topo_order_.reserve(gate_count);
    for (std::size_t head = 0; head < ready.size(); ++head) {
        const std::uint32_t g = ready[head];
        topo_order_.push_back(g);
        for (const Sink& s : sinks_[data_.gates[g].output.index])
            if (s.kind == SinkKind::GatePin && --pending[s.index] == 0) ready.push_back(s.index);
    }
    if (topo_order_.size() != gate_count) {
        // Walk backwards through unresolved gates until one repeats: that gate
        // sits on a cycle.
        std::uint32_t g = 0;
        while (pending[g] == 0) ++g;
        std::vector<char> seen(gate_count, 0);
        while (!seen[g]) {
            seen[g] = 1;
            for (NetId in : data_.gates[g].inputs) {
                const Driver& d = drivers_[in.index];
                if (d.kind == DriverKind::Gate && pending[d.index] != 0) {
                    g = d.index;
                    break;
                }
            }
        }
        const NetId net = data_.gates[g].output;
        throw NetlistError("combinational loop through net '" + net_name(net) + "'", net);
    }
    topo_position_.assign(gate_count, 0);
    for (std::uint32_t pos = 0; pos < gate_count; ++pos) topo_position_[topo_order_[pos]] = pos;

    // Blocks.
    blocks_ = data_.blocks;
    if (blocks_.empty()) blocks_.push_back({data_.name, data_.primary_inputs, data_.primary_outputs});
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (std::size_t c = 0; c < b; ++c)
            if (blocks_[c].name == blocks_[b].name)
                throw NetlistError("duplicate block name '" + blocks_[b].name + "'");
        for (NetId id : blocks_[b].inputs) check(id, "block port");
        for (NetId id : blocks_[b].outputs) check(id, "block port");
        no_duplicates(blocks_[b].inputs, "input port of block '" + blocks_[b].name + "'");
        no_duplicates(blocks_[b].outputs, "output port of block '" + blocks_[b].name + "'");
    }

    observation_points_.clear();
    std::vector<std::int64_t> obs_of_net(n, -1);
    for (std::uint32_t o = 0; o < data_.primary_outputs.size(); ++o) {
        obs_of_net[data_.primary_outputs[o].index] = static_cast<std::int64_t>(o);
        observation_points_.push_back({data_.primary_outputs[o], o});
    }
    block_observations_.assign(blocks_.size(), {});
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (NetId id : blocks_[b].outputs) {
            if (obs_of_net[id.index] < 0) {
                obs_of_net[id.index] = static_cast<std::int64_t>(observation_points_.size());
                observation_points_.push_back({id, std::nullopt});
            }
            block_observations_[b].push_back(static_cast<std::uint32_t>(obs_of_net[id.index]));
        }
    }

    block_of_.assign(n, std::nullopt);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        std::vector<NetId> stack;
        for (NetId id : blocks_[b].inputs)
            if (!block_of_[id.index]) block_of_[id.index] = b;
        for (NetId id : blocks_[b].outputs) stack.push_back(id);
        while (!stack.empty()) {
            const NetId id = stack.back();
            stack.pop_back();
            if (block_of_[id.index]) continue;
            block_of_[id.index] = b;
            const Driver& d = drivers_[id.index];
            if (d.kind == DriverKind::Gate) {
                for (NetId in : data_.gates[d.index].inputs) stack.push_back(in);
            } else if (d.kind == DriverKind::Flop) {
                stack.push_back(data_.flops[d.index].d);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Bench parser

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Position {
    std::size_t line = 0;
    std::size_t column = 0;
};

class Cursor {
public:
    Cursor(std::string_view text, std::size_t line, std::size_t base_column)
        : text_(text), line_(line), base_(base_column) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }
    Position here() const { return {line_, base_ + pos_ + 1}; }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, line_, base_ + pos_ + 1);
    }

    std::string_view identifier(const char* what) {
        skip_space();
        if (pos_ >= text_.size() || !is_ident_start(text_[pos_]))
            fail(std::string("expected ") + what);
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    bool accept_word(std::string_view word) {
        skip_space();
        if (text_.substr(pos_, word.size()) == word) {
            pos_ += word.size();
            return true;
        }
        return false;
    }

private:
    std::string_view text_;
    std::size_t line_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

class BenchParser {
public:
    explicit BenchParser(std::string name) { data_.name = std::move(name); }

    Netlist parse(std::string_view text) {
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            parse_line(line, ++line_no);
            if (end == text.size()) break;
            start = end + 1;
        }
        if (data_.net_names.empty()) throw ParseError("empty netlist", 1, 1);

        // Undriven / multiply-driven checks with source positions.
        for (std::uint32_t i = 0; i < data_.net_names.size(); ++i) {
            if (drive_count_[i] == 0) {
                const Position p = first_use_[i];
                throw ParseError("undriven net '" + data_.net_names[i] + "'", p.line, p.column);
            }
        }
        try {
            return Netlist::build(std::move(data_));
        } catch (const NetlistError& e) {
            Position p{1, 1};
            if (e.net()) p = definition_[e.net()->index];
            throw ParseError(e.what(), p.line, p.column);
        }
    }

private:
    NetId use(std::string_view name, Position at) {
        auto it = ids_.find(std::string(name));
        if (it != ids_.end()) return it->second;
        const NetId id{static_cast<std::uint32_t>(data_.net_names.size())};
        data_.net_names.emplace_back(name);
        ids_.emplace(std::string(name), id);
        first_use_.push_back(at);
        definition_.push_back(at);
        drive_count_.push_back(0);
        return id;
    }

    void define(NetId id, Position at) {
        if (drive_count_[id.index]++ > 0)
            throw ParseError("multiply-driven net '" + data_.net_names[id.index] + "'", at.line,
                             at.column);
        definition_[id.index] = at;
    }

    void parse_line(std::string_view line, std::size_t line_no) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos) return;
        if (line.substr(first, 2) == "#@") {
            parse_pragma(line.substr(first + 2), line_no, first + 2);
            return;
        }
        if (line[first] == '#') return;
        const auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);

        Cursor cur(line, line_no, 0);
        const Position head_pos = (cur.skip_space(), cur.here());
        const std::string_view head = cur.identifier("identifier");
        const std::string keyword = upper(head);
        if ((keyword == "INPUT" || keyword == "OUTPUT") && cur.accept('(')) {
            const Position at = (cur.skip_space(), cur.here());
            const std::string_view name = cur.identifier("net name");
            cur.expect(')');
            if (!cur.at_end()) cur.fail("unexpected text after declaration");
            const NetId id = use(name, at);
            auto& list = keyword == "INPUT" ? data_.primary_inputs : data_.primary_outputs;
            if (std::find(list.begin(), list.end(), id) != list.end())
                throw ParseError("duplicate " + keyword + " declaration of '" + std::string(name) + "'",
                                 at.line, at.column);
            list.push_back(id);
            if (keyword == "INPUT") define(id, at);
            return;
        }

        const NetId out = use(head, head_pos);
        cur.expect('=');
        const Position kind_pos = (cur.skip_space(), cur.here());
        const std::string_view kind_text = cur.identifier("gate kind");
        cur.expect('(');
        std::vector<NetId> args;
        if (!cur.accept(')')) {
            do {
                const Position at = (cur.skip_space(), cur.here());
                args.push_back(use(cur.identifier("net name"), at));
            } while (cur.accept(','));
            cur.expect(')');
        }
        if (!cur.at_end()) cur.fail("unexpected text after gate");

        define(out, head_pos);
        if (upper(kind_text) == "DFF") {
            if (args.size() != 1)
                throw ParseError("DFF takes exactly one input", kind_pos.line, kind_pos.column);
            data_.flops.push_back({args[0], out, Logic::Zero});
            return;
        }
        const auto kind = gate_kind_from_string(kind_text);
        if (!kind)
            throw ParseError("unknown gate kind '" + std::string(kind_text) + "'", kind_pos.line,
                             kind_pos.column);
        const bool unary = *kind == GateKind::Not || *kind == GateKind::Buf;
        if (args.empty() || (unary && args.size() != 1))
            throw ParseError("wrong number of inputs for " + std::string(to_string(*kind)),
                             kind_pos.line, kind_pos.column);
        data_.gates.push_back({*kind, std::move(args), out});
    }

    void parse_pragma(std::string_view body, std::size_t line_no, std::size_t base) {
        Cursor cur(body, line_no, base);
        const std::string_view directive = cur.identifier("pragma name");
        if (directive != "block") cur.fail("unknown pragma '" + std::string(directive) + "'");
        Block block;
        block.name = std::string(cur.identifier("block name"));
        auto port = [&](std::string_view label, std::vector<NetId>& nets) {
            if (!cur.accept_word(label)) cur.fail("expected '" + std::string(label) + "'");
            cur.expect(':');
            do {
                const Position at = (cur.skip_space(), cur.here());
                const std::string_view name = cur.identifier("net name");
                auto it = ids_.find(std::string(name));
                // Blocks may be declared before the nets they reference.
                nets.push_back(it != ids_.end() ? it->second : use(name, at));
            } while (cur.accept(','));
        };
        port("in", block.inputs);
        port("out", block.outputs);
        if (!cur.at_end()) cur.fail("unexpected text after block pragma");
        data_.blocks.push_back(std::move(block));
    }

    NetlistData data_;
    std::unordered_map<std::string, NetId> ids_;
    std::vector<Position> first_use_;
    std::vector<Position> definition_;
    std::vector<int> drive_count_;
};

}  // namespace

Netlist parse_netlist(std::string_view text, std::string name) {
    return BenchParser(std::move(name)).parse(text);
}

Netlist load_netlist(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open netlist '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_netlist(buf.str(), std::filesystem::path(path).stem().string());
}

std::string write_netlist(const Netlist& netlist) {
    std::ostringstream out;
    out << "# " << netlist.name() << "\n";
    for (NetId id : netlist.primary_inputs()) out << "INPUT(" << netlist.net_name(id) << ")\n";
    for (NetId id : netlist.primary_outputs()) out << "OUTPUT(" << netlist.net_name(id) << ")\n";
    auto join = [&](const std::vector<NetId>& nets) {
        std::string s;
        for (std::size_t i = 0; i < nets.size(); ++i) {
            if (i) s += ",";
            s += netlist.net_name(nets[i]);
        }
        return s;
    };
    for (const Block& b : netlist.declared_blocks())
        out << "#@block " << b.name << " in: " << join(b.inputs) << " out: " << join(b.outputs)
            << "\n";
    for (const Flop& f : netlist.flops())
        out << netlist.net_name(f.q) << " = DFF(" << netlist.net_name(f.d) << ")\n";
    for (const Gate& g : netlist.gates())
        out << netlist.net_name(g.output) << " = " << to_string(g.kind) << "(" << join(g.inputs)
            << ")\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Three-valued evaluation

Logic eval_gate(GateKind kind, std::span<const Logic> inputs) {
    auto invert = [](Logic v) {
        return v == Logic::X ? Logic::X : (v == Logic::One ? Logic::Zero : Logic::One);
    };
    switch (kind) {
        case GateKind::Buf: return inputs[0];
        case GateKind::Not: return invert(inputs[0]);
        case GateKind::And:
        case GateKind::Nand: {
            Logic r = Logic::One;
            for (Logic v : inputs) {
                if (v == Logic::Zero) {
                    r = Logic::Zero;
                    break;
                }
                if (v == Logic::X) r = Logic::X;
            }
            return kind == GateKind::And ? r : invert(r);
        }
        case GateKind::Or:
        case GateKind::Nor: {
            Logic r = Logic::Zero;
            for (Logic v : inputs) {
                if (v == Logic::One) {
                    r = Logic::One;
                    break;
                }
                if (v == Logic::X) r = Logic::X;
            }
            return kind == GateKind::Or ? r : invert(r);
        }
        case GateKind::Xor:
        case GateKind::Xnor: {
            bool parity = kind == GateKind::Xnor;
            for (Logic v : inputs) {
                if (v == Logic::X) return Logic::X;
                parity ^= v == Logic::One;
            }
            return to_logic(parity);
        }
    }
    return Logic::X;
}

LogicState reset_state(const Netlist& netlist) {
    LogicState state;
    state.values.assign(netlist.net_count(), Logic::X);
    state.flops.reserve(netlist.flops().size());
    for (const Flop& f : netlist.flops()) state.flops.push_back(f.init);
    return state;
}

LogicState evaluate(const Netlist& netlist, const LogicState& state, const Bits& inputs,
                    const Force* force) {
    const auto& pis = netlist.primary_inputs();
    if (inputs.size() < pis.size())
        throw Error("unassigned primary input '" + netlist.net_name(pis[inputs.size()]) + "'");
    if (inputs.size() > pis.size()) throw Error("more input values than primary inputs");
    if (state.flops.size() != netlist.flops().size()) throw Error("state does not match netlist");

    const bool net_force = force && force->site == Force::Site::Net;
    const Logic forced = force ? to_logic(force->value) : Logic::X;

    LogicState next;
    next.values.assign(netlist.net_count(), Logic::X);
    auto assign = [&](NetId id, Logic v) {
        next.values[id.index] = (net_force && force->net == id) ? forced : v;
    };
    for (std::size_t i = 0; i < pis.size(); ++i) assign(pis[i], to_logic(inputs[i] != 0));
    for (std::size_t f = 0; f < netlist.flops().size(); ++f)
        assign(netlist.flops()[f].q, state.flops[f]);

    std::vector<Logic> scratch;
    for (std::uint32_t g : netlist.topo_order()) {
        const Gate& gate = netlist.gates()[g];
        scratch.clear();
        for (NetId in : gate.inputs) scratch.push_back(next.values[in.index]);
        if (force && force->site == Force::Site::GatePin && force->index == g)
            scratch[force->pin] = forced;
        assign(gate.output, eval_gate(gate.kind, scratch));
    }

    next.flops.resize(netlist.flops().size());
    for (std::size_t f = 0; f < netlist.flops().size(); ++f) {
        Logic d = next.values[netlist.flops()[f].d.index];
        if (force && force->site == Force::Site::FlopPin && force->index == f) d = forced;
        next.flops[f] = d;
    }
    return next;
}

std::vector<Logic> observe(const Netlist& netlist, const LogicState& state, const Force* force) {
    std::vector<Logic> out;
    out.reserve(netlist.observation_points().size());
    for (const ObservationPoint& p : netlist.observation_points()) {
        if (force && force->site == Force::Site::OutputPort && p.output_index == force->index)
            out.push_back(to_logic(force->value));
        else
            out.push_back(state.values[p.net.index]);
    }
    return out;
}

ToggleReport toggle_activity(const Netlist& netlist, std::span<const Bits> patterns) {
    if (patterns.size() < 2) throw Error("toggle activity needs at least 2 patterns");
    ToggleReport report;
    report.counts.assign(netlist.net_count(), 0);
    LogicState state = reset_state(netlist);
    std::vector<Logic> previous;
    for (const Bits& p : patterns) {
        state = evaluate(netlist, state, p);
        if (!previous.empty()) {
            for (std::size_t i = 0; i < previous.size(); ++i) {
                const Logic a = previous[i];
                const Logic b = state.values[i];
                if (a != Logic::X && b != Logic::X && a != b) ++report.counts[i];
            }
        }
        previous = state.values;
    }
    for (std::uint64_t c : report.counts)
        if (c > 0) ++report.toggled_nets;
    report.fraction = netlist.net_count() == 0
                          ? 0.0
                          : static_cast<double>(report.toggled_nets) /
                                static_cast<double>(netlist.net_count());
    return report;
}

}  // namespace corebist

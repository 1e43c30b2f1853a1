#include "corebist/bist.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

#include "packed_sim.hpp"
#include "parallel.hpp"

namespace corebist {

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Idle: return "idle";
        case Phase::Loading: return "loading";
        case Phase::Running: return "running";
        case Phase::Done: return "done";
    }
    return "?";
}

BistPlan default_plan(const Netlist& netlist, const PlanDefaults& defaults) {
    BistPlan plan;
    plan.counter_width = defaults.counter_width;
    plan.pattern_count = defaults.pattern_count;
    const unsigned degree = plan.alfsr.polynomial.degree();
    for (const Block& b : netlist.blocks()) {
        plan.bindings.push_back(modular_binding(b.name, b.inputs.size(), degree));
        const auto width = static_cast<unsigned>(
            std::clamp<std::size_t>(std::min<std::size_t>(defaults.misr_width, b.outputs.size()), 2,
                                    64));
        plan.misrs.push_back({b.name, default_polynomial(width), {b.outputs.size(), width}});
    }
    validate_plan(plan, netlist);
    return plan;
}

void validate_plan(const BistPlan& plan, const Netlist& netlist) {
    if (plan.counter_width == 0 || plan.counter_width > 32)
        throw Error("counter width must be 1..32");
    if (plan.pattern_count == 0) throw Error("pattern_count must be at least 1");
    if (plan.pattern_count > plan.max_patterns())
        throw Error("pattern_count " + std::to_string(plan.pattern_count) + " exceeds the " +
                    std::to_string(plan.counter_width) + "-bit pattern counter");
    seed(plan.alfsr.polynomial, plan.alfsr.seed);

    if (plan.bindings.size() != netlist.blocks().size())
        throw Error("plan binds " + std::to_string(plan.bindings.size()) + " blocks, netlist has " +
                    std::to_string(netlist.blocks().size()));
    if (plan.bindings.size() > BistPlan::kMaxBlocks)
        throw Error("at most 4 blocks can be addressed by the 2-bit output select");
    std::vector<int> bound(netlist.blocks().size(), 0);
    std::vector<int> pi_used(netlist.net_count(), 0);
    for (const PortBinding& binding : plan.bindings) {
        const auto b = netlist.find_block(binding.block);
        if (!b) throw Error("plan binds unknown block '" + binding.block + "'");
        if (bound[*b]++) throw Error("block '" + binding.block + "' bound twice");
        const Block& block = netlist.blocks()[*b];
        validate_binding(binding, block.inputs.size(), plan.alfsr.polynomial.degree());
        for (NetId id : block.inputs) {
            if (netlist.driver(id).kind != DriverKind::PrimaryInput)
                throw Error("input '" + netlist.net_name(id) + "' of block '" + block.name +
                            "' is not a primary input");
            if (pi_used[id.index]++)
                throw Error("primary input '" + netlist.net_name(id) + "' driven by two bindings");
        }
    }
    if (plan.misrs.size() != plan.bindings.size())
        throw Error("plan needs exactly one MISR per bound block");
    for (std::size_t i = 0; i < plan.misrs.size(); ++i) {
        const MisrAssignment& m = plan.misrs[i];
        if (m.block != plan.bindings[i].block)
            throw Error("MISR " + std::to_string(i) + " assigned to '" + m.block +
                        "' but select code " + std::to_string(i) + " is block '" +
                        plan.bindings[i].block + "'");
        const Block& block = netlist.blocks()[*netlist.find_block(m.block)];
        if (m.cascade.in_width != block.outputs.size())
            throw Error("cascade input width of '" + m.block + "' does not match its output port");
        if (m.cascade.out_width != m.polynomial.degree())
            throw Error("cascade output width of '" + m.block + "' does not match the MISR degree");
    }
    if (plan.golden) {
        if (plan.golden->size() != plan.misrs.size())
            throw Error("golden signature count does not match the MISR count");
        for (std::size_t i = 0; i < plan.misrs.size(); ++i) {
            const Signature& g = (*plan.golden)[i];
            if (g.block != plan.misrs[i].block || !(g.polynomial == plan.misrs[i].polynomial))
                throw Error("golden signature " + std::to_string(i) + " does not match MISR '" +
                            plan.misrs[i].block + "'");
        }
    }
}

namespace {

using nlohmann::json;

json signature_to_json(const Signature& s) {
    return {{"block", s.block},
            {"poly", s.polynomial.to_string()},
            {"value", s.hex()},
            {"pattern_count", s.pattern_count}};
}

std::uint64_t json_uint(const json& j, const char* key) {
    const json& v = j.at(key);
    if (v.is_string()) return parse_uint(v.get<std::string>());
    return v.get<std::uint64_t>();
}

// cg_bits[j] = block bit fed by constraint bit j.
std::vector<std::uint32_t> constraint_positions(const PortBinding& b) {
    std::size_t width = 0;
    for (const BitSource& s : b.sources)
        if (s.kind == SourceKind::Constraint) ++width;
    std::vector<std::uint32_t> pos(width, 0);
    for (std::uint32_t i = 0; i < b.sources.size(); ++i)
        if (b.sources[i].kind == SourceKind::Constraint && b.sources[i].index < width)
            pos[b.sources[i].index] = i;
    return pos;
}

}  // namespace

nlohmann::json plan_to_json(const BistPlan& plan) {
    json j;
    j["schema_version"] = BistPlan::kSchemaVersion;
    j["alfsr"] = {{"poly", plan.alfsr.polynomial.to_string()},
                  {"seed", to_hex(plan.alfsr.seed, plan.alfsr.polynomial.degree())},
                  {"configuration", "fibonacci"}};
    j["counter_width"] = plan.counter_width;
    j["pattern_count"] = plan.pattern_count;
    json cgs = json::array();
    std::vector<std::string> seen;
    for (const PortBinding& b : plan.bindings) {
        if (!b.cg || std::find(seen.begin(), seen.end(), b.cg->name) != seen.end()) continue;
        seen.push_back(b.cg->name);
        json schedule = json::array();
        for (const ScheduleEntry& e : b.cg->program.schedule)
            schedule.push_back({{"value", bits_to_string(e.value)}, {"hold", e.hold}});
        cgs.push_back({{"name", b.cg->name},
                       {"width", b.cg->program.port_width},
                       {"cyclic", b.cg->program.cyclic},
                       {"schedule", schedule}});
    }
    j["cgs"] = cgs;
    json bindings = json::array();
    const unsigned degree = plan.alfsr.polynomial.degree();
    for (const PortBinding& b : plan.bindings) {
        json jb = {{"block", b.block}, {"width", b.sources.size()}};
        const auto cg_bits = constraint_positions(b);
        if (b.cg) {
            jb["cg"] = b.cg->name;
            jb["cg_bits"] = cg_bits;
        }
        if (b == modular_binding(b.block, b.sources.size(), degree, b.cg, cg_bits)) {
            jb["alfsr_map"] = "modular";
        } else {
            json map = json::array();
            for (const BitSource& s : b.sources) {
                if (s.kind == SourceKind::Alfsr)
                    map.push_back(s.index);
                else
                    map.push_back(nullptr);
            }
            jb["alfsr_map"] = map;
        }
        bindings.push_back(jb);
    }
    j["bindings"] = bindings;
    json misrs = json::array();
    for (const MisrAssignment& m : plan.misrs)
        misrs.push_back({{"block", m.block},
                         {"poly", m.polynomial.to_string()},
                         {"fold", "modular"},
                         {"in_width", m.cascade.in_width}});
    j["misrs"] = misrs;
    if (plan.golden) {
        json golden = json::array();
        for (const Signature& s : *plan.golden) golden.push_back(signature_to_json(s));
        j["golden"] = golden;
    }
    return j;
}

BistPlan plan_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != BistPlan::kSchemaVersion)
            throw Error("unsupported plan schema_version " + std::to_string(version));
        BistPlan plan;
        const json& a = j.at("alfsr");
        plan.alfsr.polynomial = Polynomial::parse(a.at("poly").get<std::string>());
        plan.alfsr.seed = json_uint(a, "seed");
        if (a.contains("configuration") && a["configuration"] != "fibonacci")
            throw Error("only the fibonacci ALFSR configuration is supported");
        plan.counter_width = j.at("counter_width").get<unsigned>();
        plan.pattern_count = json_uint(j, "pattern_count");

        std::vector<NamedConstraint> cgs;
        for (const json& c : j.value("cgs", json::array())) {
            NamedConstraint nc;
            nc.name = c.at("name").get<std::string>();
            nc.program.port_width = c.at("width").get<std::size_t>();
            nc.program.cyclic = c.value("cyclic", false);
            for (const json& e : c.at("schedule"))
                nc.program.schedule.push_back(
                    {bits_from_string(e.at("value").get<std::string>()), json_uint(e, "hold")});
            nc.program.validate();
            for (const NamedConstraint& other : cgs)
                if (other.name == nc.name) throw Error("duplicate constraint generator '" + nc.name + "'");
            cgs.push_back(std::move(nc));
        }
        const unsigned degree = plan.alfsr.polynomial.degree();
        for (const json& jb : j.at("bindings")) {
            const std::string block = jb.at("block").get<std::string>();
            std::optional<NamedConstraint> cg;
            std::vector<std::uint32_t> cg_bits;
            if (jb.contains("cg")) {
                const std::string name = jb["cg"].get<std::string>();
                auto it = std::find_if(cgs.begin(), cgs.end(),
                                       [&](const NamedConstraint& c) { return c.name == name; });
                if (it == cgs.end()) throw Error("binding of '" + block + "' names unknown generator '" + name + "'");
                cg = *it;
                cg_bits = jb.at("cg_bits").get<std::vector<std::uint32_t>>();
            }
            const std::size_t width = jb.at("width").get<std::size_t>();
            const json& map = jb.at("alfsr_map");
            if (map.is_string()) {
                if (map != "modular") throw Error("unknown alfsr_map '" + map.get<std::string>() + "'");
                plan.bindings.push_back(modular_binding(block, width, degree, cg, cg_bits));
                continue;
            }
            if (map.size() != width)
                throw Error("alfsr_map of '" + block + "' has " + std::to_string(map.size()) +
                            " entries, width is " + std::to_string(width));
            // Explicit maps: integers are ALFSR bits, null marks a constraint bit,
            // placed by cg_bits.
            PortBinding b;
            b.block = block;
            b.cg = cg;
            std::size_t slots = 0;
            for (const json& s : map) {
                if (s.is_null()) {
                    ++slots;
                    b.sources.push_back({SourceKind::Constraint, 0});
                } else {
                    b.sources.push_back({SourceKind::Alfsr, s.get<std::uint32_t>()});
                }
            }
            if (slots != cg_bits.size())
                throw Error("binding of '" + block + "' has " + std::to_string(slots) +
                            " constraint slots but " + std::to_string(cg_bits.size()) + " cg_bits");
            for (std::uint32_t k = 0; k < cg_bits.size(); ++k) {
                if (cg_bits[k] >= width || b.sources[cg_bits[k]].kind != SourceKind::Constraint)
                    throw Error("cg_bits of '" + block + "' do not match the null slots of alfsr_map");
                b.sources[cg_bits[k]].index = k;
            }
            plan.bindings.push_back(std::move(b));
        }
        for (const json& m : j.at("misrs")) {
            MisrAssignment ma;
            ma.block = m.at("block").get<std::string>();
            ma.polynomial = Polynomial::parse(m.at("poly").get<std::string>());
            if (m.value("fold", std::string("modular")) != "modular")
                throw Error("only the modular XOR fold is supported");
            ma.cascade = {m.at("in_width").get<std::size_t>(), ma.polynomial.degree()};
            plan.misrs.push_back(std::move(ma));
        }
        if (j.contains("golden")) {
            std::vector<Signature> golden;
            for (const json& g : j["golden"])
                golden.push_back({g.at("block").get<std::string>(),
                                  Polynomial::parse(g.at("poly").get<std::string>()),
                                  json_uint(g, "value"), json_uint(g, "pattern_count")});
            plan.golden = std::move(golden);
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed plan: ") + e.what());
    }
}

BistPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open plan '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("plan '" + path + "': " + e.what());
    }
    return plan_from_json(j);
}

void save_plan(const BistPlan& plan, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write plan '" + path + "'");
    out << plan_to_json(plan).dump(2) << '\n';
}

namespace {

// Primary-input position of each bound block input bit.
std::vector<std::vector<std::size_t>> input_positions(const Netlist& netlist, const BistPlan& plan) {
    std::vector<std::int64_t> pi_pos(netlist.net_count(), -1);
    for (std::size_t i = 0; i < netlist.primary_inputs().size(); ++i)
        pi_pos[netlist.primary_inputs()[i].index] = static_cast<std::int64_t>(i);
    std::vector<std::vector<std::size_t>> out;
    for (const PortBinding& binding : plan.bindings) {
        const Block& block = netlist.blocks()[*netlist.find_block(binding.block)];
        auto& positions = out.emplace_back();
        for (NetId id : block.inputs) positions.push_back(static_cast<std::size_t>(pi_pos[id.index]));
    }
    return out;
}

// For each observation point, the (MISR, folded bit) pairs it feeds.
std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> observation_targets(
    const Netlist& netlist, const BistPlan& plan) {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> targets(
        netlist.observation_points().size());
    for (std::uint32_t m = 0; m < plan.misrs.size(); ++m) {
        const std::size_t b = *netlist.find_block(plan.misrs[m].block);
        const auto& obs = netlist.block_observations()[b];
        const std::size_t width = plan.misrs[m].cascade.out_width;
        for (std::size_t i = 0; i < obs.size(); ++i)
            targets[obs[i]].emplace_back(m, static_cast<std::uint32_t>(i % width));
    }
    return targets;
}

}  // namespace

std::size_t block_input_width(const Netlist& netlist, const BistPlan& plan) {
    std::size_t width = 0;
    for (const PortBinding& binding : plan.bindings)
        width += netlist.blocks()[*netlist.find_block(binding.block)].inputs.size();
    return width;
}

Bits pattern_from_block_inputs(const Netlist& netlist, const BistPlan& plan, const Bits& word) {
    const auto positions = input_positions(netlist, plan);
    if (word.size() != block_input_width(netlist, plan))
        throw Error("pattern width " + std::to_string(word.size()) + " does not match the " +
                    std::to_string(block_input_width(netlist, plan)) + " block input bits");
    Bits pattern(netlist.primary_inputs().size(), 0);
    std::size_t k = 0;
    for (const auto& block : positions)
        for (std::size_t pos : block) pattern[pos] = word[k++];
    return pattern;
}

std::vector<Bits> generate_patterns(const Netlist& netlist, const BistPlan& plan,
                                    std::uint64_t count) {
    validate_plan(plan, netlist);
    const auto positions = input_positions(netlist, plan);
    std::vector<Bits> patterns;
    patterns.reserve(count);
    AlfsrState alfsr = seed(plan.alfsr.polynomial, plan.alfsr.seed);
    for (std::uint64_t cycle = 0; cycle < count; ++cycle) {
        Bits pattern(netlist.primary_inputs().size(), 0);
        for (std::size_t b = 0; b < plan.bindings.size(); ++b) {
            const Bits block_in = assemble_pattern(plan.bindings[b], alfsr, cycle);
            for (std::size_t i = 0; i < block_in.size(); ++i) pattern[positions[b][i]] = block_in[i];
        }
        patterns.push_back(std::move(pattern));
        alfsr = alfsr_step(alfsr);
    }
    return patterns;
}

// ---------------------------------------------------------------------------
// Session

BistSession::BistSession(const Netlist& netlist, BistPlan plan, std::optional<FaultDescriptor> injected)
    : netlist_(&netlist), plan_(std::move(plan)), alfsr_{plan_.alfsr.polynomial, plan_.alfsr.seed} {
    validate_plan(plan_, netlist);
    if (injected) {
        if (!is_stuck_at(injected->kind))
            throw Error("only stuck-at faults can be injected into a self-test session");
        force_ = to_force(*injected);
    }
    reset();
}

void BistSession::reset() {
    cu_ = ControlUnitState{};
    cu_.pattern_count = plan_.pattern_count;
    alfsr_ = seed(plan_.alfsr.polynomial, plan_.alfsr.seed);
    misrs_.clear();
    for (const MisrAssignment& m : plan_.misrs) misrs_.push_back(make_misr(m.polynomial));
    state_ = reset_state(*netlist_);
}

void BistSession::set_count(std::uint64_t count) {
    if (cu_.phase == Phase::Running || cu_.phase == Phase::Done)
        throw Error("pattern count can only be loaded before the test starts");
    if (count == 0 || count > plan_.max_patterns())
        throw Error("pattern count " + std::to_string(count) + " outside 1.." +
                    std::to_string(plan_.max_patterns()));
    cu_.pattern_count = count;
    cu_.phase = Phase::Loading;
}

void BistSession::start() {
    if (cu_.phase == Phase::Done) throw Error("test already completed; reset first");
    step(cu_.pattern_count - cu_.pattern_counter);
}

void BistSession::step(std::uint64_t cycles) {
    if (cu_.phase == Phase::Done) return;
    if (cu_.phase != Phase::Running) {
        cu_.phase = Phase::Running;
        cu_.test_enable = true;
    }
    for (std::uint64_t i = 0; i < cycles && cu_.phase == Phase::Running; ++i) clock();
}

void BistSession::select(unsigned code) {
    if (code >= misrs_.size())
        throw Error("output select code " + std::to_string(code) + " out of range (" +
                    std::to_string(misrs_.size()) + " MISRs)");
    cu_.output_select = code;
}

void BistSession::clock() {
    const Netlist& netlist = *netlist_;
    Bits pattern(netlist.primary_inputs().size(), 0);
    std::vector<std::int64_t> pi_pos(netlist.net_count(), -1);
    for (std::size_t i = 0; i < netlist.primary_inputs().size(); ++i)
        pi_pos[netlist.primary_inputs()[i].index] = static_cast<std::int64_t>(i);
    for (const PortBinding& binding : plan_.bindings) {
        const Block& block = netlist.blocks()[*netlist.find_block(binding.block)];
        const Bits in = assemble_pattern(binding, alfsr_, cu_.pattern_counter);
        for (std::size_t i = 0; i < in.size(); ++i)
            pattern[static_cast<std::size_t>(pi_pos[block.inputs[i].index])] = in[i];
    }
    const Force* force = force_ ? &*force_ : nullptr;
    state_ = evaluate(netlist, state_, pattern, force);
    const std::vector<Logic> obs = observe(netlist, state_, force);
    for (std::size_t m = 0; m < plan_.misrs.size(); ++m) {
        const std::size_t b = *netlist.find_block(plan_.misrs[m].block);
        Bits word;
        for (std::uint32_t o : netlist.block_observations()[b]) word.push_back(obs[o] == Logic::One);
        misrs_[m] = misr_absorb(misrs_[m], plan_.misrs[m].cascade.fold(word));
    }
    alfsr_ = alfsr_step(alfsr_);
    if (++cu_.pattern_counter == cu_.pattern_count) {
        cu_.phase = Phase::Done;
        cu_.test_enable = false;
    }
}

std::vector<Signature> BistSession::signatures() const {
    std::vector<Signature> out;
    for (std::size_t m = 0; m < misrs_.size(); ++m)
        out.push_back({plan_.misrs[m].block, misrs_[m].polynomial, misrs_[m].reg, cu_.pattern_counter});
    return out;
}

Signature BistSession::selected_signature() const {
    const auto sigs = signatures();
    return select_output(sigs, cu_.output_select);
}

bool BistResult::all_pass() const {
    return pass && std::all_of(pass->begin(), pass->end(), [](bool p) { return p; });
}

std::vector<Signature> compute_golden(const Netlist& netlist, BistPlan& plan) {
    plan.golden.reset();
    BistSession session(netlist, plan);
    session.start();
    plan.golden = session.signatures();
    return *plan.golden;
}

BistResult run_selftest(const Netlist& netlist, const BistPlan& plan,
                        const std::optional<FaultDescriptor>& injected, bool require_golden) {
    if (require_golden && !plan.golden) throw Error("plan has no golden signatures");
    BistSession session(netlist, plan, injected);
    session.start();
    BistResult result;
    result.signatures = session.signatures();
    result.patterns_applied = session.control().pattern_counter;
    if (plan.golden) {
        std::vector<bool> pass;
        for (std::size_t i = 0; i < result.signatures.size(); ++i)
            pass.push_back(result.signatures[i] == (*plan.golden)[i]);
        result.pass = std::move(pass);
    }
    return result;
}

std::vector<std::vector<std::uint64_t>> faulty_signatures(const Netlist& netlist, const BistPlan& plan,
                                                          const FaultUniverse& universe,
                                                          const SimOptions& options) {
    validate_plan(plan, netlist);
    for (const FaultDescriptor& f : universe.faults)
        if (!is_stuck_at(f.kind)) throw Error("faulty signatures need a stuck-at universe");
    std::vector<std::vector<std::uint64_t>> result(universe.size());
    const auto reps = universe.representatives();

    if (!netlist.is_combinational() || options.serial) {
        detail::parallel_for(reps.size(), options.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                BistSession s(netlist, plan, universe.faults[reps[k]]);
                s.start();
                for (const Signature& sig : s.signatures()) result[reps[k]].push_back(sig.value);
            }
        });
    } else {
        BistPlan clean = plan;
        clean.golden.reset();
        const auto golden = run_selftest(netlist, clean).signatures;
        const auto patterns = generate_patterns(netlist, plan, plan.pattern_count);
        const auto targets = observation_targets(netlist, plan);
        const std::size_t misr_count = plan.misrs.size();
        const std::size_t blocks = (patterns.size() + detail::kLanes - 1) / detail::kLanes;

        detail::parallel_for(reps.size(), options.workers, [&](std::size_t begin, std::size_t end) {
            detail::PackedSimulator sim(netlist);
            // error[m][lane] for the current 64-pattern block; MISR state of
            // the error stream from zero (the compactor is linear).
            std::vector<std::vector<std::uint64_t>> error_regs(end - begin,
                                                               std::vector<std::uint64_t>(misr_count, 0));
            std::vector<std::uint64_t> lane_errors(misr_count * detail::kLanes);
            for (std::size_t blk = 0; blk < blocks; ++blk) {
                const std::size_t first = blk * detail::kLanes;
                const std::size_t count = std::min(detail::kLanes, patterns.size() - first);
                sim.load(patterns, first, count);
                for (std::size_t k = begin; k < end; ++k) {
                    std::fill(lane_errors.begin(), lane_errors.end(), 0);
                    bool any = false;
                    sim.detect(to_force(universe.faults[reps[k]]),
                               [&](std::uint32_t obs, std::uint64_t diff) {
                                   for (auto [m, bit] : targets[obs]) {
                                       for (std::uint64_t d = diff; d; d &= d - 1)
                                           lane_errors[m * detail::kLanes + std::countr_zero(d)] ^=
                                               std::uint64_t{1} << bit;
                                       any = true;
                                   }
                               });
                    auto& regs = error_regs[k - begin];
                    for (std::size_t m = 0; m < misr_count; ++m) {
                        std::uint64_t reg = regs[m];
                        const Polynomial& poly = plan.misrs[m].polynomial;
                        for (std::size_t lane = 0; lane < count; ++lane) {
                            const std::uint64_t e = any ? lane_errors[m * detail::kLanes + lane] : 0;
                            if (reg == 0 && e == 0) continue;
                            reg = lfsr_transition(poly, reg) ^ e;
                        }
                        regs[m] = reg;
                    }
                }
            }
            for (std::size_t k = begin; k < end; ++k)
                for (std::size_t m = 0; m < misr_count; ++m)
                    result[reps[k]].push_back(golden[m].value ^ error_regs[k - begin][m]);
        });
    }
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (!universe.is_representative(i)) result[i] = result[universe.faults[i].class_id];
    return result;
}

MisrDetection misr_detection_rate(const Netlist& netlist, const BistPlan& plan,
                                  const FaultUniverse& universe, const SimOptions& options) {
    if (!plan.golden) throw Error("MISR detection rate needs golden signatures");
    FaultUniverse saf;
    std::vector<std::uint32_t> original;
    std::vector<std::int64_t> remap(universe.size(), -1);
    for (std::uint32_t i = 0; i < universe.size(); ++i) {
        if (!is_stuck_at(universe.faults[i].kind)) continue;
        remap[i] = static_cast<std::int64_t>(saf.faults.size());
        saf.faults.push_back(universe.faults[i]);
        original.push_back(i);
    }
    if (saf.faults.empty()) throw Error("empty fault universe: detection rate is undefined");
    for (FaultDescriptor& f : saf.faults) {
        const std::int64_t rep = remap[f.class_id];
        if (rep < 0) throw Error("collapsed class representative is not a stuck-at fault");
        f.class_id = static_cast<std::uint32_t>(rep);
    }

    const auto patterns = generate_patterns(netlist, plan, plan.pattern_count);
    const CoverageReport pre = simulate_faults(netlist, saf, patterns, options);
    const auto sigs = faulty_signatures(netlist, plan, saf, options);

    MisrDetection out;
    out.per_block_pre.assign(netlist.blocks().size(), 0);
    out.per_block_misr.assign(netlist.blocks().size(), 0);
    for (std::size_t i = 0; i < saf.size(); ++i) {
        if (!pre.detected(i)) continue;
        ++out.detected_pre;
        bool mismatch = false;
        for (std::size_t m = 0; m < sigs[i].size(); ++m) mismatch |= sigs[i][m] != (*plan.golden)[m].value;
        const std::int32_t b = pre.fault_block[i];
        if (b >= 0) ++out.per_block_pre[static_cast<std::size_t>(b)];
        if (mismatch) {
            ++out.detected_misr;
            if (b >= 0) ++out.per_block_misr[static_cast<std::size_t>(b)];
        } else {
            out.aliased.push_back(original[i]);
        }
    }
    for (std::uint32_t f : out.aliased) {
        const BistResult r = run_selftest(netlist, plan, universe.faults[f], true);
        if (!r.all_pass())
            throw RuntimeError("aliasing verification failed for " +
                               describe(netlist, universe.faults[f]));
    }
    return out;
}

}  // namespace corebist


#include "corebist/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "corebist/access.hpp"
#include "corebist/diagnosis.hpp"
#include "corebist/faultsim.hpp"

namespace corebist {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Pattern files

namespace {

std::vector<std::size_t> bound_pi_positions(const Netlist& netlist, const BistPlan& plan) {
    std::vector<std::int64_t> pi_pos(netlist.net_count(), -1);
    for (std::size_t i = 0; i < netlist.primary_inputs().size(); ++i)
        pi_pos[netlist.primary_inputs()[i].index] = static_cast<std::int64_t>(i);
    std::vector<std::size_t> out;
    for (const PortBinding& b : plan.bindings)
        for (NetId id : netlist.blocks()[*netlist.find_block(b.block)].inputs)
            out.push_back(static_cast<std::size_t>(pi_pos[id.index]));
    return out;
}

}  // namespace

std::vector<Bits> parse_pattern_file(std::string_view text, const Netlist& netlist, const BistPlan& plan) {
    const std::size_t width = block_input_width(netlist, plan);
    std::vector<Bits> patterns;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
        if (line.empty()) continue;
        Bits word;
        try {
            word = bits_from_string(line);
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no, 1);
        }
        if (word.size() != width)
            throw ParseError("pattern has " + std::to_string(word.size()) + " bits, block inputs need " +
                                 std::to_string(width),
                             line_no, 1);
        patterns.push_back(pattern_from_block_inputs(netlist, plan, word));
    }
    if (patterns.empty()) throw Error("pattern file holds no vectors");
    return patterns;
}

std::vector<Bits> load_pattern_file(const std::string& path, const Netlist& netlist, const BistPlan& plan) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open pattern file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_pattern_file(ss.str(), netlist, plan);
    } catch (const ParseError& e) {
        throw Error(path + ":" + e.what());
    }
}

std::string write_pattern_file(std::span<const Bits> patterns, const Netlist& netlist, const BistPlan& plan) {
    const auto positions = bound_pi_positions(netlist, plan);
    std::string out;
    for (const Bits& p : patterns) {
        Bits word;
        for (std::size_t pos : positions) word.push_back(p.at(pos));
        out += bits_to_string(word);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text rendering

namespace {

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string pct(const json& tally) {
    if (tally.is_null() || tally.at("faults").get<std::size_t>() == 0) return "     -";
    return fmt("%6.2f", 100.0 * tally.at("coverage").get<double>());
}

std::string render_header(const json& r) {
    std::string out = "corebist " + r.at("command").get<std::string>() + " report (schema " +
                      std::to_string(r.at("schema_version").get<int>()) + ")\n";
    out += "netlist: " + r.at("netlist").get<std::string>() + "\n";
    if (r.contains("alfsr"))
        out += "alfsr:   " + r["alfsr"]["poly"].get<std::string>() + ", seed " +
               r["alfsr"]["seed"].get<std::string>() + "\n";
    if (r.contains("pattern_count"))
        out += "patterns: " + std::to_string(r["pattern_count"].get<std::uint64_t>()) + "\n";
    return out;
}

std::string render_coverage_table(const json& rows, const std::vector<std::string>& columns) {
    std::string out = fmt("\n%-16s", "block");
    for (const std::string& c : columns) out += fmt(" %14s", (c + " SAF%").c_str()) + fmt(" %14s", (c + " TDF%").c_str());
    out += "\n";
    for (const json& row : rows) {
        out += fmt("%-16s", row.at("block").get<std::string>().c_str());
        for (const std::string& c : columns) {
            const json& col = row.at(c);
            out += fmt(" %14s", pct(col.value("saf", json())).c_str());
            out += fmt(" %14s", pct(col.value("tdf", json())).c_str());
        }
        out += "\n";
    }
    return out;
}

std::string render_classes(const json& r) {
    std::string out = "\ngranularity: " + r.at("granularity").get<std::string>() + "\n";
    out += fmt("%-16s %8s %8s %8s %9s %10s\n", "block", "faults", "classes", "max", "mean", "mean+undet");
    auto line = [&](const std::string& name, const json& s) {
        out += fmt("%-16s %8zu %8zu %8zu %9.3f %10.3f\n", name.c_str(), s.at("faults").get<std::size_t>(),
                   s.at("classes").get<std::size_t>(), s.at("max_size").get<std::size_t>(),
                   s.at("mean_size").get<double>(), s.at("mean_size_with_undetected").get<double>());
    };
    for (const json& b : r.at("blocks")) line(b.at("block").get<std::string>(), b);
    line("total", r.at("total"));
    out += "undetected: " + std::to_string(r.at("undetected").get<std::size_t>()) + "\n";
    return out;
}

}  // namespace

std::string render_report(const json& r) {
    const std::string command = r.at("command").get<std::string>();
    std::string out = render_header(r);
    if (command == "lint") {
        const json& s = r.at("summary");
        out += fmt("nets %zu, gates %zu, flops %zu, inputs %zu, outputs %zu\n", s.at("nets").get<std::size_t>(),
                   s.at("gates").get<std::size_t>(), s.at("flops").get<std::size_t>(),
                   s.at("inputs").get<std::size_t>(), s.at("outputs").get<std::size_t>());
        for (const json& b : r.at("blocks"))
            out += fmt("block %-16s in %4zu out %4zu\n", b.at("name").get<std::string>().c_str(),
                       b.at("inputs").get<std::size_t>(), b.at("outputs").get<std::size_t>());
    } else if (command == "bist") {
        out += render_coverage_table(r.at("blocks"), {"bist"});
        out += render_coverage_table(json::array({r.at("total")}), {"bist"});
        out += fmt("\n%-16s %6s %-20s %-6s %12s %10s %8s\n", "block", "select", "signature", "pass", "pre-MISR",
                   "post-MISR", "aliased");
        for (const json& b : r.at("blocks")) {
            const json& m = b.at("misr");
            out += fmt("%-16s %6u %-20s %-6s %12zu %10zu %8zu\n", b.at("block").get<std::string>().c_str(),
                       b.at("select").get<unsigned>(), b.at("signature").get<std::string>().c_str(),
                       b.at("pass").get<bool>() ? "yes" : "NO", m.at("detected_pre").get<std::size_t>(),
                       m.at("detected_misr").get<std::size_t>(), m.at("aliased").get<std::size_t>());
        }
        out += "golden: " + r.at("golden_source").get<std::string>() + "\n";
    } else if (command == "faultsim") {
        out += render_coverage_table(r.at("blocks"), {"patterns"});
        out += render_coverage_table(json::array({r.at("total")}), {"patterns"});
    } else if (command == "import") {
        out += render_coverage_table(r.at("blocks"), {"bist", "external"});
        out += render_coverage_table(json::array({r.at("total")}), {"bist", "external"});
    } else if (command == "diagnose") {
        out += render_classes(r.at("classes"));
        if (r.contains("refined")) {
            out += "\nafter " + std::to_string(r["refined"]["pattern_count"].get<std::uint64_t>()) + " patterns:";
            out += render_classes(r["refined"]["classes"]);
            out += "split classes: " + std::to_string(r["refined"]["split_classes"].get<std::size_t>()) + "\n";
        }
    } else if (command == "tap") {
        out += fmt("steps %zu, mismatches %zu\n", r.at("steps").get<std::size_t>(),
                   r.at("mismatches").get<std::size_t>());
        if (r.contains("first_divergence"))
            out += "first divergence at tck " + std::to_string(r["first_divergence"].get<std::size_t>()) + "\n";
        out += "final TAP state: " + r.at("tap_state").get<std::string>() + ", status " +
               r.at("status").get<std::string>() + "\n";
    } else {
        throw Error("unknown report command '" + command + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Common {
    std::string netlist;
    std::string plan;
    std::string pattern_file;
    std::optional<std::uint64_t> patterns;
    std::optional<std::string> seed;
    unsigned workers = 1;
    std::string out_dir;
    std::string format = "text";
};

unsigned default_workers() {
    if (const char* env = std::getenv("COREBIST_WORKERS")) {
        try {
            const auto n = parse_uint(env);
            if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
        } catch (const Error&) {
        }
        throw Error(std::string("COREBIST_WORKERS must be 1..256, got '") + env + "'");
    }
    return 1;
}

std::string file_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

json header(const std::string& command, const Netlist& netlist) {
    return {{"schema_version", kReportSchemaVersion}, {"command", command}, {"netlist", netlist.name()}};
}

void add_plan_header(json& r, const BistPlan& plan) {
    r["alfsr"] = {{"poly", plan.alfsr.polynomial.to_string()},
                  {"seed", to_hex(plan.alfsr.seed, plan.alfsr.polynomial.degree())}};
    r["pattern_count"] = plan.pattern_count;
}

json tally_json(const CoverageTally& t) {
    return {{"faults", t.faults}, {"detected", t.detected}, {"coverage", t.coverage()}};
}

// {block -> {"saf": tally, "tdf": tally}} including "total".
std::map<std::string, json> coverage_columns(const CoverageReport& report, const FaultUniverse& universe) {
    std::map<std::string, json> out;
    for (const CoverageRow& row : coverage(report, universe)) {
        if (row.tally.faults == 0) continue;
        out[row.block][row.group == "SAF" ? "saf" : "tdf"] = tally_json(row.tally);
    }
    return out;
}

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    Netlist netlist() const {
        try {
            return load_netlist(c.netlist);
        } catch (const ParseError& e) {
            throw Error(c.netlist + ":" + e.what());
        }
    }

    BistPlan plan(const Netlist& netlist, bool* golden_from_file = nullptr) const {
        BistPlan p = c.plan.empty() ? default_plan(netlist) : load_plan(c.plan);
        bool golden_ok = p.golden.has_value();
        if (c.seed) {
            p.alfsr.seed = parse_uint(*c.seed);
            golden_ok = false;
        }
        if (c.patterns) {
            if (*c.patterns != p.pattern_count) golden_ok = false;
            p.pattern_count = *c.patterns;
        }
        if (!golden_ok) p.golden.reset();
        validate_plan(p, netlist);
        if (golden_from_file) *golden_from_file = golden_ok;
        return p;
    }

    std::vector<Bits> patterns(const Netlist& netlist, const BistPlan& plan, json& r) const {
        if (!c.pattern_file.empty()) {
            auto p = load_pattern_file(c.pattern_file, netlist, plan);
            if (c.patterns) {
                if (*c.patterns > p.size())
                    throw Error("--patterns " + std::to_string(*c.patterns) + " exceeds the " +
                                std::to_string(p.size()) + " vectors of '" + c.pattern_file + "'");
                p.resize(*c.patterns);
            }
            r["pattern_source"] = file_name(c.pattern_file);
            r["pattern_count"] = p.size();
            return p;
        }
        add_plan_header(r, plan);
        r["pattern_source"] = "alfsr";
        return generate_patterns(netlist, plan, plan.pattern_count);
    }

    SimOptions sim() const { return {c.workers, false}; }

    int emit(const std::string& name, const json& report, int code = kExitOk) {
        const std::string text = render_report(report);
        if (!c.out_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(c.out_dir, ec);
            if (ec) throw RuntimeError("cannot create '" + c.out_dir + "': " + ec.message());
            write(c.out_dir + "/" + name + ".json", report.dump(2) + "\n");
            write(c.out_dir + "/" + name + ".txt", text);
        }
        if (c.format == "json")
            out_ << report.dump(2) << '\n';
        else
            out_ << text;
        return code;
    }

    static void write(const std::string& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw RuntimeError("cannot write '" + path + "'");
        f << text;
    }

    int lint() {
        const Netlist n = netlist();
        json r = header("lint", n);
        r["summary"] = {{"nets", n.net_count()},
                        {"gates", n.gates().size()},
                        {"flops", n.flops().size()},
                        {"inputs", n.primary_inputs().size()},
                        {"outputs", n.primary_outputs().size()}};
        json blocks = json::array();
        for (const Block& b : n.blocks())
            blocks.push_back({{"name", b.name}, {"inputs", b.inputs.size()}, {"outputs", b.outputs.size()}});
        r["blocks"] = blocks;
        if (!c.plan.empty()) {
            validate_plan(load_plan(c.plan), n);
            r["plan"] = "valid";
        }
        return emit("lint", r);
    }

    int bist() {
        const Netlist n = netlist();
        bool golden_from_file = false;
        BistPlan p = plan(n, &golden_from_file);
        if (!p.golden) compute_golden(n, p);
        json r = header("bist", n);
        add_plan_header(r, p);
        r["counter_width"] = p.counter_width;
        r["golden_source"] = golden_from_file ? "plan" : "computed";

        const BistResult result = run_selftest(n, p, std::nullopt, true);
        const auto patterns = generate_patterns(n, p, p.pattern_count);
        const FaultUniverse universe = collapse(enumerate_faults(n, {true, true}), n);
        const CoverageReport report = simulate_faults(n, universe, patterns, sim());
        auto cols = coverage_columns(report, universe);

        FaultUniverse saf = collapse(enumerate_faults(n, {true, false}), n);
        const MisrDetection misr = misr_detection_rate(n, p, saf, sim());

        json blocks = json::array();
        for (std::size_t i = 0; i < p.bindings.size(); ++i) {
            const std::string& name = p.bindings[i].block;
            const std::size_t b = *n.find_block(name);
            const Block& block = n.blocks()[b];
            json row = {{"block", name},
                        {"select", i},
                        {"inputs", block.inputs.size()},
                        {"outputs", block.outputs.size()},
                        {"situation", std::string(1, static_cast<char>(classify_situation(
                                                         p.bindings[i], p.alfsr.polynomial.degree())))},
                        {"misr_poly", p.misrs[i].polynomial.to_string()},
                        {"signature", result.signatures[i].hex()},
                        {"pass", static_cast<bool>((*result.pass)[i])},
                        {"bist", cols.count(n.blocks()[b].name) ? cols[n.blocks()[b].name] : json::object()},
                        {"misr",
                         {{"detected_pre", misr.per_block_pre[b]}, {"detected_misr", misr.per_block_misr[b]},
                          {"aliased", misr.per_block_pre[b] - misr.per_block_misr[b]}}}};
            blocks.push_back(row);
        }
        r["blocks"] = blocks;
        r["total"] = {{"block", "total"}, {"bist", cols["total"]}};
        json aliased = json::array();
        for (std::uint32_t f : misr.aliased) aliased.push_back(describe(n, saf.faults[f]));
        r["misr"] = {{"detected_pre", misr.detected_pre},
                     {"detected_misr", misr.detected_misr},
                     {"rate", misr.rate()},
                     {"aliased", aliased}};
        r["fault_universe"] = {{"saf", universe.count(FaultKind::SA0) + universe.count(FaultKind::SA1)},
                               {"tdf", universe.count(FaultKind::STR) + universe.count(FaultKind::STF)},
                               {"classes", universe.class_count()}};
        if (!save_golden_.empty()) save_plan(p, save_golden_);
        return emit("bist", r, result.all_pass() ? kExitOk : kExitValidation);
    }

    int faultsim() {
        const Netlist n = netlist();
        const BistPlan p = plan(n);
        json r = header("faultsim", n);
        const auto patterns = this->patterns(n, p, r);
        const FaultKinds kinds{kinds_ != "tdf", kinds_ != "saf"};
        const FaultUniverse universe = collapse(enumerate_faults(n, kinds), n);
        SimOptions options = sim();
        options.serial = serial_;
        const CoverageReport report = simulate_faults(n, universe, patterns, options);
        auto cols = coverage_columns(report, universe);
        json blocks = json::array();
        for (const Block& b : n.blocks())
            blocks.push_back({{"block", b.name}, {"patterns", cols.count(b.name) ? cols[b.name] : json::object()}});
        r["blocks"] = blocks;
        r["total"] = {{"block", "total"}, {"patterns", cols["total"]}};
        if (list_undetected_) {
            json undetected = json::array();
            for (std::size_t i = 0; i < universe.size(); ++i)
                if (!report.detected(i)) undetected.push_back(describe(n, universe.faults[i]));
            r["undetected"] = undetected;
        }
        return emit("faultsim", r);
    }

    int import_patterns() {
        const Netlist n = netlist();
        if (c.pattern_file.empty()) throw Error("import needs --pattern-file");
        const BistPlan p = plan(n);
        const auto external = load_pattern_file(c.pattern_file, n, p);
        const auto alfsr = generate_patterns(n, p, p.pattern_count);
        const FaultUniverse universe = collapse(enumerate_faults(n, {true, true}), n);
        auto bist_cols = coverage_columns(simulate_faults(n, universe, alfsr, sim()), universe);
        auto ext_cols = coverage_columns(simulate_faults(n, universe, external, sim()), universe);
        json r = header("import", n);
        add_plan_header(r, p);
        r["pattern_source"] = file_name(c.pattern_file);
        r["external_pattern_count"] = external.size();
        json blocks = json::array();
        for (const Block& b : n.blocks())
            blocks.push_back({{"block", b.name},
                              {"bist", bist_cols.count(b.name) ? bist_cols[b.name] : json::object()},
                              {"external", ext_cols.count(b.name) ? ext_cols[b.name] : json::object()}});
        r["blocks"] = blocks;
        r["total"] = {{"block", "total"}, {"bist", bist_cols["total"]}, {"external", ext_cols["total"]}};
        return emit("import", r);
    }

    int diagnose() {
        const Netlist n = netlist();
        const BistPlan p = plan(n);
        json r = header("diagnose", n);
        const FaultUniverse universe = collapse(enumerate_faults(n, {true, false}), n);
        const Granularity g = parse_granularity(granularity_);
        DiagnosticMatrix matrix;
        std::vector<Bits> patterns;
        if (g == Granularity::Signature) {
            if (!c.pattern_file.empty()) throw Error("signature granularity needs the plan's generated patterns");
            add_plan_header(r, p);
            r["pattern_source"] = "alfsr";
            matrix = build_matrix(n, universe, p, g, sim());
        } else {
            patterns = this->patterns(n, p, r);
            matrix = build_matrix(n, universe, patterns, sim());
        }
        const ClassReport classes = classify(matrix);
        r["classes"] = class_report_json(classes, universe, n);
        if (refine_ && g == Granularity::Pattern) {
            // Doubles the sequence: the next pattern_count ALFSR vectors, or the file repeated.
            std::vector<Bits> extra;
            if (c.pattern_file.empty()) {
                auto all = generate_patterns(n, p, 2 * patterns.size());
                extra.assign(all.begin() + static_cast<std::ptrdiff_t>(patterns.size()), all.end());
            } else {
                extra = patterns;
            }
            const RefineReport refined = refine(matrix, build_matrix(n, universe, extra, sim()));
            r["refined"] = {{"pattern_count", 2 * patterns.size()},
                            {"classes", class_report_json(refined.after, universe, n)},
                            {"split_classes", refined.split_classes}};
        }
        if (!matrix_path_.empty()) {
            json meta = {{"source", r.value("pattern_source", "alfsr")}, {"count", matrix.pattern_count}};
            if (r.contains("alfsr")) meta["alfsr"] = r["alfsr"];
            export_matrix(matrix, universe, n, meta, matrix_path_);
        }
        return emit("diagnose", r);
    }

    int tap() {
        const Netlist n = netlist();
        BistPlan p = plan(n);
        if (!p.golden) compute_golden(n, p);
        SerialTrace trace;
        if (script_) {
            trace = session_script(p);
        } else {
            if (trace_path_.empty()) throw Error("tap needs --trace or --script");
            trace = SerialTrace::load(trace_path_);
        }
        CoreWrapper wrapper(n, p);
        TraceResult result = drive_trace(wrapper, trace);
        std::vector<TraceMismatch> mismatches = result.mismatches;
        if (!expect_.empty()) {
            const SerialTrace expected = SerialTrace::load(expect_);
            if (expected.steps.size() != result.observed.steps.size())
                mismatches.push_back({std::min(expected.steps.size(), result.observed.steps.size()), '?', '?'});
            for (std::size_t i = 0; i < std::min(expected.steps.size(), result.observed.steps.size()); ++i) {
                const char e = expected.steps[i].tdo;
                if (e != '-' && e != result.observed.steps[i].tdo)
                    mismatches.push_back({i, e, result.observed.steps[i].tdo});
            }
            std::sort(mismatches.begin(), mismatches.end(),
                      [](const TraceMismatch& a, const TraceMismatch& b) { return a.tck < b.tck; });
        }
        json r = header("tap", n);
        add_plan_header(r, p);
        r["steps"] = trace.steps.size();
        r["mismatches"] = mismatches.size();
        if (!mismatches.empty()) {
            r["first_divergence"] = mismatches.front().tck;
            err_ << "TDO mismatch at tck " << mismatches.front().tck << ": expected '" << mismatches.front().expected
                 << "', got '" << mismatches.front().actual << "'\n";
        }
        r["tap_state"] = to_string(wrapper.tap_state());
        r["status"] = to_string(wrapper.status());
        if (!tdo_path_.empty()) write(tdo_path_, result.observed.to_string());
        return emit("tap", r, mismatches.empty() ? kExitOk : kExitValidation);
    }

    int report() {
        std::ifstream in(report_path_);
        if (!in) throw RuntimeError("cannot open report '" + report_path_ + "'");
        json r;
        try {
            in >> r;
        } catch (const json::exception& e) {
            throw Error("report '" + report_path_ + "': " + e.what());
        }
        if (r.value("schema_version", 0) != kReportSchemaVersion)
            throw Error("report schema_version does not match " + std::to_string(kReportSchemaVersion));
        if (c.format == "json")
            out_ << r.dump(2) << '\n';
        else
            out_ << render_report(r);
        return kExitOk;
    }

    // Reset, count, start, poll, then select and read every MISR.
    static SerialTrace session_script(const BistPlan& plan) {
        TraceBuilder b;
        b.reset().write_ir(WirCode::WcdrSel).command(WcdrCommand::Reset);
        b.command(WcdrCommand::SetCount, static_cast<std::uint16_t>(plan.pattern_count - 1));
        b.command(WcdrCommand::Start).command(WcdrCommand::ReadStatus);
        // one poll while running, then again after the last pattern
        b.write_ir(WirCode::WdrSel).read_dr(kWdrWidth).idle(plan.pattern_count).read_dr(kWdrWidth);
        for (std::size_t m = 0; m < plan.misrs.size(); ++m) {
            const unsigned slices = (plan.misrs[m].polynomial.degree() + 15) / 16;
            for (unsigned s = 0; s < slices; ++s) {
                b.write_ir(WirCode::WcdrSel).command(WcdrCommand::Select, static_cast<std::uint16_t>(m | (s << 2)));
                b.write_ir(WirCode::WdrSel).read_dr(kWdrWidth);
            }
        }
        b.idle(2);
        return b.trace();
    }

    Common c;
    std::string kinds_ = "all";
    bool serial_ = false;
    bool list_undetected_ = false;
    std::string granularity_ = "pattern";
    bool refine_ = false;
    std::string matrix_path_;
    std::string trace_path_;
    std::string expect_;
    std::string tdo_path_;
    bool script_ = false;
    std::string report_path_;
    std::string save_golden_;

private:
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Runner run(out, err);
    CLI::App app{"BIST engine modelling, fault simulation and diagnosis for gate-level cores", "corebist"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "corebist 1.0.0");

    try {
        run.c.workers = default_workers();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    auto common = [&](CLI::App* sub, bool with_patterns) {
        sub->add_option("netlist", run.c.netlist, "Bench netlist")->required()->check(CLI::ExistingFile);
        sub->add_option("--plan", run.c.plan, "BIST plan (JSON); default plan when omitted")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", run.c.seed, "ALFSR seed override (hex or decimal)");
        sub->add_option("--workers", run.c.workers, "Worker threads (default: COREBIST_WORKERS or 1)")
            ->check(CLI::Range(1, 256));
        sub->add_option("--out", run.c.out_dir, "Directory for <command>.json and <command>.txt");
        sub->add_option("--format", run.c.format, "Console output")->check(CLI::IsMember({"text", "json"}));
        sub->add_option("--patterns", run.c.patterns, "Pattern count override")->check(CLI::Range(1, 1 << 30));
        if (with_patterns)
            sub->add_option("--pattern-file", run.c.pattern_file, "External pattern file")
                ->check(CLI::ExistingFile);
    };

    CLI::App* lint = app.add_subcommand("lint", "Parse and validate a netlist (and plan)");
    common(lint, false);
    CLI::App* bist = app.add_subcommand("bist", "Golden signatures, self-test, coverage and MISR loss");
    common(bist, false);
    bist->add_option("--save-plan", run.save_golden_, "Write the plan with golden signatures");
    CLI::App* faultsim = app.add_subcommand("faultsim", "Fault coverage of generated or imported patterns");
    common(faultsim, true);
    faultsim->add_option("--kinds", run.kinds_, "Fault kinds")->check(CLI::IsMember({"saf", "tdf", "all"}));
    faultsim->add_flag("--serial", run.serial_, "Scalar simulator");
    faultsim->add_flag("--list-undetected", run.list_undetected_, "List undetected faults");
    CLI::App* import = app.add_subcommand("import", "Compare an external pattern set with the BIST sequence");
    common(import, true);
    CLI::App* tap = app.add_subcommand("tap", "Replay a serial TAP trace through the wrapper");
    common(tap, false);
    tap->add_option("--trace", run.trace_path_, "Input trace")->check(CLI::ExistingFile);
    tap->add_flag("--script", run.script_, "Use the standard session script instead of --trace");
    tap->add_option("--expect", run.expect_, "Expected TDO trace")->check(CLI::ExistingFile);
    tap->add_option("--tdo", run.tdo_path_, "Write the observed trace");
    CLI::App* diagnose = app.add_subcommand("diagnose", "Equivalent fault classes from the diagnostic matrix");
    common(diagnose, true);
    diagnose->add_option("--granularity", run.granularity_, "Syndrome granularity")
        ->check(CLI::IsMember({"pattern", "signature"}));
    diagnose->add_flag("--refine", run.refine_, "Also report classes after doubling the pattern count");
    diagnose->add_option("--matrix", run.matrix_path_, "Export the packed diagnostic matrix");
    CLI::App* report = app.add_subcommand("report", "Render a JSON report as text");
    report->add_option("file", run.report_path_, "Report JSON")->required();
    report->add_option("--format", run.c.format, "Output")->check(CLI::IsMember({"text", "json"}));

    std::vector<const char*> argv{"corebist"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (lint->parsed()) return run.lint();
        if (bist->parsed()) return run.bist();
        if (faultsim->parsed()) return run.faultsim();
        if (import->parsed()) return run.import_patterns();
        if (tap->parsed()) return run.tap();
        if (diagnose->parsed()) return run.diagnose();
        if (report->parsed()) return run.report();
    } catch (const RuntimeError& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace corebist

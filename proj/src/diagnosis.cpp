#include "corebist/diagnosis.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "packed_sim.hpp"
#include "parallel.hpp"

namespace corebist {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Order-independent digest contribution of one failing (pattern, observation).
void absorb(std::array<std::uint64_t, 2>& d, std::uint64_t pattern, std::uint32_t obs) {
    const std::uint64_t key = (pattern << 24) ^ obs;
    d[0] += splitmix64(key);
    d[1] += splitmix64(key ^ 0xD6E8FEB86659FD93ULL);
}

void append_le(std::string& out, std::uint64_t w) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((w >> (8 * i)) & 0xFF));
}

std::uint64_t read_le(const char* p) {
    std::uint64_t w = 0;
    for (int i = 0; i < 8; ++i) w |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return w;
}

DiagnosticMatrix blank(const Netlist& netlist, const FaultUniverse& universe, Granularity g) {
    for (const FaultDescriptor& f : universe.faults)
        if (!is_stuck_at(f.kind))
            throw Error("diagnosis handles stuck-at faults only, got " + std::string(to_string(f.kind)));
    if (universe.faults.empty()) throw Error("empty fault universe");
    DiagnosticMatrix m;
    m.granularity = g;
    m.fault_count = universe.size();
    for (const Block& b : netlist.blocks()) m.block_names.push_back(b.name);
    for (const FaultDescriptor& f : universe.faults) {
        const auto b = netlist.block_of(f.site.net);
        m.fault_block.push_back(b ? static_cast<std::int32_t>(*b) : -1);
    }
    return m;
}

void copy_class_rows(DiagnosticMatrix& m, const FaultUniverse& u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        const std::size_t rep = u.faults[i].class_id;
        if (rep == i) continue;
        if (m.granularity == Granularity::Pattern) {
            std::copy_n(m.detection.begin() + static_cast<std::ptrdiff_t>(rep * m.words_per_row),
                        m.words_per_row,
                        m.detection.begin() + static_cast<std::ptrdiff_t>(i * m.words_per_row));
            m.digest[i] = m.digest[rep];
        } else {
            std::copy_n(m.signatures.begin() + static_cast<std::ptrdiff_t>(rep * m.misr_count), m.misr_count,
                        m.signatures.begin() + static_cast<std::ptrdiff_t>(i * m.misr_count));
        }
    }
}

}  // namespace

std::string_view to_string(Granularity g) { return g == Granularity::Pattern ? "pattern" : "signature"; }

Granularity parse_granularity(std::string_view text) {
    if (text == "pattern") return Granularity::Pattern;
    if (text == "signature") return Granularity::Signature;
    throw Error("granularity must be 'pattern' or 'signature', got '" + std::string(text) + "'");
}

bool DiagnosticMatrix::detected(std::size_t fault) const {
    if (granularity == Granularity::Pattern) {
        for (std::size_t w = 0; w < words_per_row; ++w)
            if (detection[fault * words_per_row + w]) return true;
        return false;
    }
    for (std::size_t m = 0; m < misr_count; ++m)
        if (signatures[fault * misr_count + m] != golden[m]) return true;
    return false;
}

bool DiagnosticMatrix::detected_by(std::size_t fault, std::size_t pattern) const {
    if (granularity != Granularity::Pattern) throw Error("per-pattern detection needs pattern granularity");
    return (detection[fault * words_per_row + pattern / 64] >> (pattern % 64)) & 1U;
}

std::string DiagnosticMatrix::row_bytes(std::size_t fault) const {
    std::string out;
    if (granularity == Granularity::Pattern) {
        for (std::size_t w = 0; w < words_per_row; ++w) append_le(out, detection[fault * words_per_row + w]);
        append_le(out, digest[fault][0]);
        append_le(out, digest[fault][1]);
    } else {
        for (std::size_t m = 0; m < misr_count; ++m) append_le(out, signatures[fault * misr_count + m]);
    }
    return out;
}

DiagnosticMatrix build_matrix(const Netlist& netlist, const FaultUniverse& universe,
                              std::span<const Bits> patterns, const SimOptions& options) {
    if (patterns.empty()) throw Error("no patterns");
    for (const Bits& p : patterns)
        if (p.size() != netlist.primary_inputs().size())
            throw Error("pattern width does not match the primary inputs");
    DiagnosticMatrix m = blank(netlist, universe, Granularity::Pattern);
    m.pattern_count = patterns.size();
    m.words_per_row = (patterns.size() + 63) / 64;
    m.detection.assign(m.fault_count * m.words_per_row, 0);
    m.digest.assign(m.fault_count, {0, 0});
    const auto reps = universe.representatives();

    if (netlist.is_combinational() && !options.serial) {
        detail::parallel_for(reps.size(), options.workers, [&](std::size_t begin, std::size_t end) {
            detail::PackedSimulator sim(netlist);
            for (std::size_t first = 0; first < patterns.size(); first += detail::kLanes) {
                sim.load(patterns, first, std::min(detail::kLanes, patterns.size() - first));
                for (std::size_t k = begin; k < end; ++k) {
                    const std::uint32_t f = reps[k];
                    auto& digest = m.digest[f];
                    const std::uint64_t hit = sim.detect(
                        to_force(universe.faults[f]), [&](std::uint32_t obs, std::uint64_t diff) {
                            for (; diff; diff &= diff - 1)
                                absorb(digest, first + static_cast<std::uint64_t>(std::countr_zero(diff)), obs);
                        });
                    m.detection[f * m.words_per_row + first / 64] = hit;
                }
            }
        });
    } else {
        std::vector<std::vector<Logic>> good;
        LogicState state = reset_state(netlist);
        for (const Bits& p : patterns) {
            state = evaluate(netlist, state, p);
            good.push_back(observe(netlist, state));
        }
        detail::parallel_for(reps.size(), options.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                const std::uint32_t f = reps[k];
                const Force force = to_force(universe.faults[f]);
                LogicState s = reset_state(netlist);
                for (std::size_t p = 0; p < patterns.size(); ++p) {
                    s = evaluate(netlist, s, patterns[p], &force);
                    const auto obs = observe(netlist, s, &force);
                    bool hit = false;
                    for (std::uint32_t o = 0; o < obs.size(); ++o) {
                        if (obs[o] == Logic::X || good[p][o] == Logic::X || obs[o] == good[p][o]) continue;
                        absorb(m.digest[f], p, o);
                        hit = true;
                    }
                    if (hit) m.detection[f * m.words_per_row + p / 64] |= std::uint64_t{1} << (p % 64);
                }
            }
        });
    }
    copy_class_rows(m, universe);
    return m;
}

DiagnosticMatrix build_matrix(const Netlist& netlist, const FaultUniverse& universe, const BistPlan& plan,
                              Granularity granularity, const SimOptions& options) {
    if (granularity == Granularity::Pattern)
        return build_matrix(netlist, universe, generate_patterns(netlist, plan, plan.pattern_count), options);
    DiagnosticMatrix m = blank(netlist, universe, Granularity::Signature);
    m.pattern_count = plan.pattern_count;
    m.misr_count = plan.misrs.size();
    BistPlan clean = plan;
    clean.golden.reset();
    for (const Signature& s : run_selftest(netlist, clean).signatures) m.golden.push_back(s.value);
    const auto sigs = faulty_signatures(netlist, plan, universe, options);
    for (const auto& row : sigs) m.signatures.insert(m.signatures.end(), row.begin(), row.end());
    return m;
}

// ---------------------------------------------------------------------------
// Classes

namespace {

ClassStats stats_of(const std::vector<std::size_t>& class_sizes, std::size_t undetected) {
    ClassStats s;
    s.classes = class_sizes.size();
    for (std::size_t size : class_sizes) {
        s.detected += size;
        s.max_size = std::max(s.max_size, size);
    }
    s.faults = s.detected + undetected;
    s.mean_size = s.classes ? static_cast<double>(s.detected) / static_cast<double>(s.classes) : 0.0;
    const std::size_t all = s.classes + (undetected ? 1 : 0);
    s.mean_size_with_undetected = all ? static_cast<double>(s.faults) / static_cast<double>(all) : 0.0;
    return s;
}

ClassReport classify_keys(Granularity g, const std::vector<std::string>& keys, const std::vector<bool>& detected,
                          const std::vector<std::int32_t>& fault_block, const std::vector<std::string>& block_names) {
    ClassReport r;
    r.granularity = g;
    r.block_names = block_names;
    std::unordered_map<std::string, std::uint32_t> index;
    r.class_of.assign(keys.size(), 0);
    for (std::uint32_t i = 0; i < keys.size(); ++i) {
        if (!detected[i]) {
            r.undetected.push_back(i);
            continue;
        }
        auto [it, inserted] = index.try_emplace(keys[i], static_cast<std::uint32_t>(r.classes.size()));
        if (inserted) r.classes.emplace_back();
        r.classes[it->second].push_back(i);
        r.class_of[i] = it->second;
    }
    const auto undetected_id = static_cast<std::uint32_t>(r.classes.size());
    for (std::uint32_t i : r.undetected) r.class_of[i] = undetected_id;

    std::vector<std::size_t> sizes;
    for (const auto& c : r.classes) sizes.push_back(c.size());
    r.total = stats_of(sizes, r.undetected.size());

    // Per block: the global classes restricted to the block's faults.
    for (std::size_t b = 0; b < block_names.size(); ++b) {
        std::unordered_map<std::uint32_t, std::size_t> count;
        std::vector<std::uint32_t> order;
        std::size_t undetected = 0;
        for (std::uint32_t i = 0; i < keys.size(); ++i) {
            if (fault_block[i] != static_cast<std::int32_t>(b)) continue;
            if (!detected[i]) {
                ++undetected;
                continue;
            }
            if (count[r.class_of[i]]++ == 0) order.push_back(r.class_of[i]);
        }
        std::vector<std::size_t> block_sizes;
        for (std::uint32_t c : order) block_sizes.push_back(count[c]);
        r.blocks.push_back(stats_of(block_sizes, undetected));
    }
    return r;
}

}  // namespace

ClassReport classify(const DiagnosticMatrix& matrix) {
    std::vector<std::string> keys;
    std::vector<bool> detected;
    for (std::size_t i = 0; i < matrix.fault_count; ++i) {
        keys.push_back(matrix.row_bytes(i));
        detected.push_back(matrix.detected(i));
    }
    return classify_keys(matrix.granularity, keys, detected, matrix.fault_block, matrix.block_names);
}

RefineReport refine(const DiagnosticMatrix& base, const DiagnosticMatrix& extra) {
    if (base.granularity != extra.granularity)
        throw Error("cannot refine a " + std::string(to_string(base.granularity)) + "-level matrix with " +
                    std::string(to_string(extra.granularity)) + "-level observations");
    if (base.fault_count != extra.fault_count) throw Error("matrices cover different fault universes");
    RefineReport r;
    r.before = classify(base);
    std::vector<std::string> keys;
    std::vector<bool> detected;
    for (std::size_t i = 0; i < base.fault_count; ++i) {
        keys.push_back(base.row_bytes(i) + extra.row_bytes(i));
        detected.push_back(base.detected(i) || extra.detected(i));
    }
    r.after = classify_keys(base.granularity, keys, detected, base.fault_block, base.block_names);
    for (const auto& cls : r.before.classes) {
        const std::uint32_t first = r.after.class_of[cls.front()];
        for (std::uint32_t f : cls)
            if (r.after.class_of[f] != first) {
                ++r.split_classes;
                break;
            }
    }
    return r;
}

nlohmann::json class_stats_json(const ClassStats& s) {
    return {{"faults", s.faults},
            {"detected", s.detected},
            {"classes", s.classes},
            {"max_size", s.max_size},
            {"mean_size", s.mean_size},
            {"mean_size_with_undetected", s.mean_size_with_undetected}};
}

nlohmann::json class_report_json(const ClassReport& report, const FaultUniverse& universe,
                                 const Netlist& netlist) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t b = 0; b < report.blocks.size(); ++b) {
        auto row = class_stats_json(report.blocks[b]);
        row["block"] = report.block_names[b];
        blocks.push_back(row);
    }
    nlohmann::json largest = nlohmann::json::array();
    if (!report.classes.empty()) {
        const auto it = std::max_element(report.classes.begin(), report.classes.end(),
                                         [](const auto& a, const auto& b) { return a.size() < b.size(); });
        for (std::uint32_t f : *it) largest.push_back(describe(netlist, universe.faults[f]));
    }
    return {{"granularity", to_string(report.granularity)},
            {"total", class_stats_json(report.total)},
            {"blocks", blocks},
            {"undetected", report.undetected.size()},
            {"largest_class", largest}};
}

// ---------------------------------------------------------------------------
// Export

void export_matrix(const DiagnosticMatrix& matrix, const FaultUniverse& universe, const Netlist& netlist,
                   const nlohmann::json& pattern_meta, std::ostream& out) {
    nlohmann::json faults = nlohmann::json::array();
    for (std::size_t i = 0; i < universe.size(); ++i)
        faults.push_back({{"index", i},
                          {"fault", describe(netlist, universe.faults[i])},
                          {"class_id", universe.faults[i].class_id},
                          {"block", matrix.fault_block[i] >= 0
                                        ? nlohmann::json(matrix.block_names[static_cast<std::size_t>(matrix.fault_block[i])])
                                        : nlohmann::json(nullptr)}});
    nlohmann::json header = {{"schema_version", 1},
                             {"granularity", to_string(matrix.granularity)},
                             {"fault_count", matrix.fault_count},
                             {"pattern_count", matrix.pattern_count},
                             {"columns", matrix.columns()},
                             {"words_per_row", matrix.granularity == Granularity::Pattern
                                                   ? matrix.words_per_row + 2
                                                   : matrix.misr_count},
                             {"golden", matrix.golden},
                             {"blocks", matrix.block_names},
                             {"patterns", pattern_meta},
                             {"faults", faults}};
    const std::string text = header.dump();
    out.write("CBDM", 4);
    std::string len;
    for (int i = 0; i < 4; ++i) len.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xFF));
    out.write(len.data(), 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (std::size_t i = 0; i < matrix.fault_count; ++i) {
        const std::string row = matrix.row_bytes(i);
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

void export_matrix(const DiagnosticMatrix& matrix, const FaultUniverse& universe, const Netlist& netlist,
                   const nlohmann::json& pattern_meta, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write matrix '" + path + "'");
    export_matrix(matrix, universe, netlist, pattern_meta, out);
}

DiagnosticMatrix import_matrix(std::istream& in, nlohmann::json* header_out) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "CBDM", 4) != 0) throw Error("not a diagnostic matrix file");
    std::size_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::size_t>(static_cast<unsigned char>(magic[4 + i])) << (8 * i);
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw Error("truncated matrix header");
    const nlohmann::json header = nlohmann::json::parse(text);
    DiagnosticMatrix m;
    m.granularity = parse_granularity(header.at("granularity").get<std::string>());
    m.fault_count = header.at("fault_count").get<std::size_t>();
    m.pattern_count = header.at("pattern_count").get<std::size_t>();
    const std::size_t words = header.at("words_per_row").get<std::size_t>();
    m.golden = header.at("golden").get<std::vector<std::uint64_t>>();
    m.block_names = header.at("blocks").get<std::vector<std::string>>();
    std::string row(words * 8, '\0');
    if (m.granularity == Granularity::Pattern) m.words_per_row = words - 2;
    else m.misr_count = words;
    for (const auto& f : header.at("faults")) {
        std::int32_t block = -1;
        if (!f.at("block").is_null()) {
            const auto it = std::find(m.block_names.begin(), m.block_names.end(), f["block"].get<std::string>());
            if (it == m.block_names.end()) throw Error("matrix header names an unknown block");
            block = static_cast<std::int32_t>(it - m.block_names.begin());
        }
        m.fault_block.push_back(block);
    }
    for (std::size_t i = 0; i < m.fault_count; ++i) {
        if (!in.read(row.data(), static_cast<std::streamsize>(row.size()))) throw Error("truncated matrix rows");
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint64_t v = read_le(row.data() + 8 * w);
            if (m.granularity == Granularity::Signature) m.signatures.push_back(v);
            else if (w < m.words_per_row) m.detection.push_back(v);
            else if (w == m.words_per_row) m.digest.push_back({v, 0});
            else m.digest.back()[1] = v;
        }
    }
    if (header_out) *header_out = header;
    return m;
}

}  // namespace corebist

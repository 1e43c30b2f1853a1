#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corebist/bist.hpp"
#include "corebist/faultsim.hpp"

namespace corebist {

enum class Granularity : std::uint8_t { Pattern, Signature };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

// One syndrome row per fault, in universe order.
//
// Pattern granularity: a detection bit per pattern, plus a 128-bit digest of
// the exact failing (pattern, observation point) set, so two faults share a
// row only if they fail the same outputs on the same patterns.
// Signature granularity: the final signature of every MISR.
struct DiagnosticMatrix {
    Granularity granularity = Granularity::Pattern;
    std::size_t fault_count = 0;
    std::size_t pattern_count = 0;
    std::size_t words_per_row = 0;              // pattern granularity
    std::vector<std::uint64_t> detection;       // fault_count * words_per_row
    std::vector<std::array<std::uint64_t, 2>> digest;
    std::size_t misr_count = 0;                 // signature granularity
    std::vector<std::uint64_t> signatures;      // fault_count * misr_count
    std::vector<std::uint64_t> golden;
    std::vector<std::int32_t> fault_block;      // -1 if outside every block
    std::vector<std::string> block_names;

    std::size_t columns() const {
        return granularity == Granularity::Pattern ? pattern_count : misr_count;
    }
    bool detected(std::size_t fault) const;
    bool detected_by(std::size_t fault, std::size_t pattern) const;
    // Canonical little-endian serialization of a row.
    std::string row_bytes(std::size_t fault) const;
};

DiagnosticMatrix build_matrix(const Netlist& netlist, const FaultUniverse& universe,
                              std::span<const Bits> patterns, const SimOptions& options = {});

// Signature granularity needs the compaction plan; pattern granularity uses
// the plan's generated sequence.
DiagnosticMatrix build_matrix(const Netlist& netlist, const FaultUniverse& universe,
                              const BistPlan& plan, Granularity granularity,
                              const SimOptions& options = {});

struct ClassStats {
    std::size_t faults = 0;
    std::size_t detected = 0;
    std::size_t classes = 0;  // detected classes
    std::size_t max_size = 0;
    double mean_size = 0.0;   // detected faults / detected classes
    double mean_size_with_undetected = 0.0;
};

struct ClassReport {
    Granularity granularity = Granularity::Pattern;
    std::vector<std::vector<std::uint32_t>> classes;  // detected, numbered by first member
    std::vector<std::uint32_t> undetected;
    std::vector<std::uint32_t> class_of;  // per fault; undetected get classes.size()
    ClassStats total;
    std::vector<std::string> block_names;
    std::vector<ClassStats> blocks;
};

ClassReport classify(const DiagnosticMatrix& matrix);

struct RefineReport {
    ClassReport before;
    ClassReport after;
    std::size_t split_classes = 0;  // classes of `before` that split
};

// Classes of `base` refined by the extra observations in `extra` (more
// patterns, or another structure over the same universe).
RefineReport refine(const DiagnosticMatrix& base, const DiagnosticMatrix& extra);

nlohmann::json class_stats_json(const ClassStats& stats);
nlohmann::json class_report_json(const ClassReport& report, const FaultUniverse& universe,
                                 const Netlist& netlist);

// "CBDM" magic, u32 header length, JSON header (fault dictionary, pattern
// metadata), then the rows as little-endian 64-bit words.
void export_matrix(const DiagnosticMatrix& matrix, const FaultUniverse& universe,
                   const Netlist& netlist, const nlohmann::json& pattern_meta, std::ostream& out);
void export_matrix(const DiagnosticMatrix& matrix, const FaultUniverse& universe,
                   const Netlist& netlist, const nlohmann::json& pattern_meta,
                   const std::string& path);
// Reads a matrix written by export_matrix (header returned in `header`).
DiagnosticMatrix import_matrix(std::istream& in, nlohmann::json* header = nullptr);

}  // namespace corebist

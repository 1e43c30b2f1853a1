#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "corebist/bist.hpp"
#include "corebist/circuit.hpp"

namespace corebist {

inline constexpr int kReportSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

// Pattern file: one vector per line, MSB-left, width = sum of the bound
// block input widths (binding order, block 0 rightmost); '#' comments.
std::vector<Bits> parse_pattern_file(std::string_view text, const Netlist& netlist, const BistPlan& plan);
std::vector<Bits> load_pattern_file(const std::string& path, const Netlist& netlist, const BistPlan& plan);
std::string write_pattern_file(std::span<const Bits> patterns, const Netlist& netlist, const BistPlan& plan);

// Human-readable rendering of any report produced by the CLI.
std::string render_report(const nlohmann::json& report);

// Entry point behind the corebist executable. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corebist

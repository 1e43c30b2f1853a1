#pragma once

#include <fstream>
#include <sstream>
#include <string>

#ifndef COREBIST_FIXTURES
#error "COREBIST_FIXTURES must point at tests/fixtures"
#endif

inline std::string fixture(const std::string& name) { return std::string(COREBIST_FIXTURES) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

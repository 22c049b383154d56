#pragma once

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace conformq::testing
{

inline std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string golden_path(const std::string &name)
{
    return std::string(CONFORMQ_GOLDEN_DIR) + "/" + name;
}

// Value of the first line starting with `prefix`, without the prefix.
inline std::string line_after(const std::string &text, const std::string &prefix)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) {
            return line.substr(prefix.size());
        }
    }
    return {};
}

// Canonical form of a displayed LaTeX formula: no display delimiters, whitespace or final
// period, and the commuting scalar products written as \lambda m and m\gamma_{n}.
inline std::string normalize_display(std::string s)
{
    s = std::regex_replace(s, std::regex(R"(\$\$)"), "");
    s = std::regex_replace(s, std::regex(R"(\s+)"), "");
    if (!s.empty() && s.back() == '.') {
        s.pop_back();
    }
    s = std::regex_replace(s, std::regex(R"(m\\lambda)"), "\\lambdam");
    s = std::regex_replace(s, std::regex(R"((\\gamma_\{\d+\})m)"), "m$1");
    return s;
}

} // namespace conformq::testing

#pragma once

#include <string>
#include <vector>

#include "phskew/linalg.hpp"
#include "phskew/spectral.hpp"

namespace phskew {

/// Shortest round-trip text for a double ("%.17g").
std::string fmt(double v);
std::string fmt(const Vec& v);  // comma separated
std::string fmt(const std::vector<double>& v);

/// Tab separated report made of titled sections, each a header row plus data rows.
class Report {
public:
    void section(const std::string& title, std::vector<std::string> columns);
    void row(std::vector<std::string> cells);
    /// Two-column key/value row in the current section.
    void kv(const std::string& key, const std::string& value) { row({key, value}); }
    void kv(const std::string& key, double value) { row({key, fmt(value)}); }
    void inequalities(const std::string& title, const InequalityReport& r);

    std::string render() const;

private:
    struct Section {
        std::string title;
        std::vector<std::string> columns;
        std::vector<std::vector<std::string>> rows;
    };
    std::vector<Section> sections_;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& data);

} // namespace phskew

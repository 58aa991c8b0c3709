#include "phskew/report.hpp"

#include <cstdint>
#include <cstdio>

#include "phskew/error.hpp"

namespace phskew {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const Vec& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt(v(i));
    }
    return s;
}

std::string fmt(const std::vector<double>& v)
{
    return fmt(Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

void Report::section(const std::string& title, std::vector<std::string> columns)
{
    sections_.push_back(Section{title, std::move(columns), {}});
}

void Report::row(std::vector<std::string> cells)
{
    if (sections_.empty()) throw Error(Errc::InvalidArgument, "report row before any section");
    for (std::string& c : cells)
        for (char& ch : c)
            if (ch == '\t' || ch == '\n') ch = ' ';
    sections_.back().rows.push_back(std::move(cells));
}

void Report::inequalities(const std::string& title, const InequalityReport& r)
{
    section(title, {"name", "lhs", "rhs", "margin", "verdict"});
    for (const InequalityRow& q : r.rows) row({q.name, fmt(q.lhs), fmt(q.rhs), fmt(q.margin), q.holds ? "holds" : "fails"});
}

std::string Report::render() const
{
    std::string out;
    for (const Section& s : sections_) {
        out += "## " + s.title + "\n";
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += '\t';
                out += cells[i];
            }
            out += '\n';
        };
        line(s.columns);
        for (const auto& r : s.rows) line(r);
        out += '\n';
    }
    return out;
}

std::string fnv1a_hex(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace phskew

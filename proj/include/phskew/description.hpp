#pragma once

#include <optional>
#include <string>

#include "phskew/deformation.hpp"
#include "phskew/ifs.hpp"
#include "phskew/skew.hpp"

namespace phskew {

inline constexpr const char* kSkewSchema = "phskew-skew/1";
inline constexpr const char* kIfsSchema = "phskew-ifs/1";

struct SkewDescription {
    SkewProduct product;
    std::optional<InfinitesimalDeformation> deformation;
    std::string normalized;  // canonical YAML echo
};

/// Parses a skew-product file. `base_dir` resolves a relative base matrix path.
SkewDescription parse_skew_description(const std::string& text, const std::string& base_dir = ".");
SkewDescription read_skew_description(const std::string& path);

struct IfsDescription {
    IFSSpec spec;
    std::string normalized;
};

IfsDescription parse_ifs_description(const std::string& text);
IfsDescription read_ifs_description(const std::string& path);

/// Reads a whole file, throwing Io on failure.
std::string read_text_file(const std::string& path);

} // namespace phskew

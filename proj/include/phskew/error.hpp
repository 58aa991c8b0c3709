#pragma once

#include <stdexcept>
#include <string>

namespace phskew {

enum class Errc {
    NonUnimodular,
    NotAnosov,
    NotAnosovBase,
    CentralAllUnit,
    MissingSplitting,
    InconsistentRates,
    RankDeficient,
    DimMismatch,
    Singular,
    OutOfLocalChart,
    RadiusTooLarge,
    SigmaTooLarge,
    NotOnUnstableLeaf,
    NotOnStableLeaf,
    NoConvergence,
    ConstructionFailed,
    InconclusiveResolution,
    OverlappingSupports,
    FlowStepRejected,
    DegenerateFit,
    GridTooFine,
    InvalidArgument,
    ParseError,
    Io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

} // namespace phskew

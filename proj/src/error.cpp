#include "phskew/error.hpp"

namespace phskew {

const char* errc_name(Errc c)
{
    switch (c) {
    case Errc::NonUnimodular: return "NonUnimodular";
    case Errc::NotAnosov: return "NotAnosov";
    case Errc::NotAnosovBase: return "NotAnosovBase";
    case Errc::CentralAllUnit: return "CentralAllUnit";
    case Errc::MissingSplitting: return "MissingSplitting";
    case Errc::InconsistentRates: return "InconsistentRates";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::Singular: return "Singular";
    case Errc::OutOfLocalChart: return "OutOfLocalChart";
    case Errc::RadiusTooLarge: return "RadiusTooLarge";
    case Errc::SigmaTooLarge: return "SigmaTooLarge";
    case Errc::NotOnUnstableLeaf: return "NotOnUnstableLeaf";
    case Errc::NotOnStableLeaf: return "NotOnStableLeaf";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ConstructionFailed: return "ConstructionFailed";
    case Errc::InconclusiveResolution: return "InconclusiveResolution";
    case Errc::OverlappingSupports: return "OverlappingSupports";
    case Errc::FlowStepRejected: return "FlowStepRejected";
    case Errc::DegenerateFit: return "DegenerateFit";
    case Errc::GridTooFine: return "GridTooFine";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what)
{
}

} // namespace phskew

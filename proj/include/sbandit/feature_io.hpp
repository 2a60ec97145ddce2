#pragma once

#include <filesystem>
#include <iosfwd>

#include "sbandit/design.hpp"

namespace sbandit {

// Plain-text feature matrix: a header line "d K" followed by K lines of d
// whitespace-separated decimals, one arm per line. Blank lines and lines
// starting with '#' are ignored.

FeatureSet parse_features(std::istream& in, NormAudit audit = NormAudit::Warn);
FeatureSet read_features(const std::filesystem::path& path,
                         NormAudit audit = NormAudit::Warn);
void write_features(std::ostream& out, const FeatureSet& features);

/// %.17g formatting; round-trips doubles exactly.
std::string format_double(double value);

}  // namespace sbandit

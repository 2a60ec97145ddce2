#include "sbandit/feature_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sbandit/errors.hpp"

namespace sbandit {
namespace {

bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw IoError("feature file line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

FeatureSet parse_features(std::istream& in, NormAudit audit) {
  std::string line;
  int line_no = 0;
  if (!next_content_line(in, line, line_no)) throw IoError("feature file is empty");

  long d = 0;
  long k = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> d >> k) || (header >> extra)) fail(line_no, "expected header \"d K\"");
    if (d <= 0 || k <= 0) fail(line_no, "d and K must be positive");
  }

  Matrix x(d, k);
  for (long i = 0; i < k; ++i) {
    if (!next_content_line(in, line, line_no)) {
      throw IoError("feature file ends after " + std::to_string(i) + " of " +
                    std::to_string(k) + " arms");
    }
    std::istringstream row(line);
    for (long j = 0; j < d; ++j) {
      double v = 0.0;
      if (!(row >> v)) fail(line_no, "expected " + std::to_string(d) + " values");
      x(j, i) = v;
    }
    std::string extra;
    if (row >> extra) fail(line_no, "more than " + std::to_string(d) + " values");
  }
  if (next_content_line(in, line, line_no)) fail(line_no, "unexpected trailing content");
  return FeatureSet(std::move(x), audit);
}

FeatureSet read_features(const std::filesystem::path& path, NormAudit audit) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file " + path.string());
  return parse_features(in, audit);
}

void write_features(std::ostream& out, const FeatureSet& features) {
  out << features.dim() << ' ' << features.num_arms() << '\n';
  for (Eigen::Index i = 0; i < features.num_arms(); ++i) {
    for (Eigen::Index j = 0; j < features.dim(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(features.matrix()(j, i));
    }
    out << '\n';
  }
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace sbandit

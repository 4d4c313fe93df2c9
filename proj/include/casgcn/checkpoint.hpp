// Versioned text checkpoint for named parameter sets.
//
// Layout:
//   casgcn-ckpt-v1
//   kind <model-kind-tag>
//   param <name> <rows> <cols>
//   <cols values per line, one line per row, shortest round-trip decimals>
//   ...
#pragma once

#include "casgcn/tape.hpp"

#include <iosfwd>
#include <string>

namespace casgcn::ad {

struct Checkpoint {
  std::string kind;
  ParamStore params;
};

void write_checkpoint(std::ostream& out, const std::string& kind, const ParamStore& params);
void write_checkpoint(const std::string& path, const std::string& kind,
                      const ParamStore& params);

Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace casgcn::ad

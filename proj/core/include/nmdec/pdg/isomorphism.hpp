#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nmdec/pdg/pdg.hpp"

namespace nmdec::pdg {

enum class MatchMode {
  kStructural,  // constants and variable names may differ
  kExact,       // constants equal, variables map to the same names
};

struct IsoOptions {
  MatchMode mode = MatchMode::kStructural;
  size_t budget = 2'000'000;  // search steps before giving up
};

class IsoTimeout : public std::runtime_error {
 public:
  explicit IsoTimeout(size_t budget);
};

// map[i] is the node of b matched to node i of a. Preserves node kinds, op
// labels, self-loop flags and both edge relations including ports.
struct Isomorphism {
  std::vector<int> map;
};

// Among structural matches, candidates with equal constants and variable
// names are tried first.
std::optional<Isomorphism> find_isomorphism(const Pdg& a, const Pdg& b, const IsoOptions& opts = {});

bool verify_isomorphism(const Pdg& a, const Pdg& b, const Isomorphism& iso, MatchMode mode);

}  // namespace nmdec::pdg

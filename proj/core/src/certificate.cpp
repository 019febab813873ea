#include "pmmf/certificate.hpp"

#include <algorithm>
#include <sstream>

namespace pmmf {

YPlusSet YPlusSet::from_pairs(std::size_t r, std::vector<std::pair<StateIndex, StateIndex>> pairs) {
  YPlusSet y;
  y.r = r;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (const auto& [i, j] : pairs) {
    y.proj1.push_back(i);
    y.proj2.push_back(j);
  }
  for (auto* v : {&y.proj1, &y.proj2}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  y.pairs = std::move(pairs);
  return y;
}

YPlusSet YPlusSet::product(std::size_t r, const std::vector<StateIndex>& rows, const std::vector<StateIndex>& cols) {
  std::vector<std::pair<StateIndex, StateIndex>> pairs;
  for (auto i : rows) {
    for (auto j : cols) pairs.emplace_back(i, j);
  }
  return from_pairs(r, std::move(pairs));
}

bool YPlusSet::contains(StateIndex i, StateIndex j) const {
  return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(i, j));
}

bool YPlusSet::in_proj1(StateIndex i) const { return std::binary_search(proj1.begin(), proj1.end(), i); }

bool YPlusSet::in_proj2(StateIndex j) const { return std::binary_search(proj2.begin(), proj2.end(), j); }

std::string YPlusSet::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (k) os << ',';
    os << '(' << pairs[k].first << ',' << pairs[k].second << ')';
  }
  os << '}';
  return os.str();
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::enumerated:
      return "enumerated";
    case Provenance::cluster_lemma:
      return "cluster_lemma";
    case Provenance::lmsm_lemma:
      return "lmsm_lemma";
    case Provenance::user_asserted:
      return "user_asserted";
  }
  return "unknown";
}

}  // namespace pmmf

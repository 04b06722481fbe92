#pragma once

#include <string>
#include <vector>

namespace modlag {

// Record of every O(h^{k+1}) discard made along a derivation.
struct TruncationLog {
  std::vector<std::string> entries;
  void note(std::string step, int kept_order) {
    entries.push_back(std::move(step) + ": kept through h^" + std::to_string(kept_order) + ", discarded O(h^" +
                      std::to_string(kept_order + 1) + ")");
  }
};

}  // namespace modlag

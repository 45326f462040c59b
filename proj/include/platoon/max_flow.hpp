#pragma once

#include <vector>

namespace platoon {

/// Integer-capacity flow network solved by shortest augmenting paths (BFS).
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes);

  void add_arc(int from, int to, int capacity);

  /// Max s-t flow; stops early once `limit` units are pushed. Resets any
  /// flow left from a previous call.
  int max_flow(int source, int sink, int limit);

 private:
  struct Arc {
    int to;
    int rev;
    int cap;
    int base;
  };

  std::vector<std::vector<Arc>> arcs_;
};

}  // namespace platoon

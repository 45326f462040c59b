#include "platoon/max_flow.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace platoon {

FlowNetwork::FlowNetwork(int nodes) : arcs_(static_cast<std::size_t>(nodes)) {}

void FlowNetwork::add_arc(int from, int to, int capacity) {
  auto& out = arcs_[static_cast<std::size_t>(from)];
  auto& in = arcs_[static_cast<std::size_t>(to)];
  out.push_back({to, static_cast<int>(in.size()), capacity, capacity});
  in.push_back({from, static_cast<int>(out.size()) - 1, 0, 0});
}

int FlowNetwork::max_flow(int source, int sink, int limit) {
  for (auto& list : arcs_)
    for (auto& a : list) a.cap = a.base;
  if (source == sink) return 0;

  const auto n = arcs_.size();
  std::vector<int> prev_node(n);
  std::vector<int> prev_arc(n);
  int flow = 0;
  while (flow < limit) {
    std::fill(prev_node.begin(), prev_node.end(), -1);
    prev_node[static_cast<std::size_t>(source)] = source;
    std::deque<int> queue{source};
    while (!queue.empty() && prev_node[static_cast<std::size_t>(sink)] < 0) {
      int u = queue.front();
      queue.pop_front();
      const auto& list = arcs_[static_cast<std::size_t>(u)];
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& a = list[i];
        if (a.cap > 0 && prev_node[static_cast<std::size_t>(a.to)] < 0) {
          prev_node[static_cast<std::size_t>(a.to)] = u;
          prev_arc[static_cast<std::size_t>(a.to)] = static_cast<int>(i);
          queue.push_back(a.to);
        }
      }
    }
    if (prev_node[static_cast<std::size_t>(sink)] < 0) break;

    int push = std::numeric_limits<int>::max();
    for (int v = sink; v != source; v = prev_node[static_cast<std::size_t>(v)]) {
      const auto& a = arcs_[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                           [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
      push = std::min(push, a.cap);
    }
    push = std::min(push, limit - flow);
    for (int v = sink; v != source; v = prev_node[static_cast<std::size_t>(v)]) {
      auto& a = arcs_[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                     [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
      a.cap -= push;
      arcs_[static_cast<std::size_t>(v)][static_cast<std::size_t>(a.rev)].cap += push;
    }
    flow += push;
  }
  return flow;
}

}  // namespace platoon

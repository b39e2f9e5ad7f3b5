#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace imgtopic::detail {

// Dinic max-flow with double capacities. Small graphs only (the CRF
// expansion subproblems have one node per mapped word).
class MaxFlow {
public:
    explicit MaxFlow(int nodes) : head_(static_cast<std::size_t>(nodes), -1) {}

    void add_edge(int from, int to, double capacity) {
        push_edge(from, to, capacity);
        push_edge(to, from, 0.0);
    }

    double run(int source, int sink) {
        double total = 0.0;
        while (bfs(source, sink)) {
            iter_ = head_;
            double f;
            while ((f = dfs(source, sink, kInf)) > kEps) total += f;
        }
        source_ = source;
        return total;
    }

    // After run(): true iff the node is on the source side of the min cut.
    bool reachable_from_source(int node) const {
        std::vector<char> seen(head_.size(), 0);
        std::queue<int> q;
        q.push(source_);
        seen[static_cast<std::size_t>(source_)] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int e = head_[static_cast<std::size_t>(u)]; e != -1; e = edges_[e].next) {
                if (edges_[e].capacity > kEps && !seen[static_cast<std::size_t>(edges_[e].to)]) {
                    seen[static_cast<std::size_t>(edges_[e].to)] = 1;
                    q.push(edges_[e].to);
                }
            }
        }
        return seen[static_cast<std::size_t>(node)] != 0;
    }

private:
    static constexpr double kEps = 1e-12;
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    struct Edge {
        int to;
        int next;
        double capacity;
    };

    void push_edge(int from, int to, double capacity) {
        edges_.push_back({to, head_[static_cast<std::size_t>(from)], capacity});
        head_[static_cast<std::size_t>(from)] = static_cast<int>(edges_.size()) - 1;
    }

    bool bfs(int source, int sink) {
        level_.assign(head_.size(), -1);
        std::queue<int> q;
        q.push(source);
        level_[static_cast<std::size_t>(source)] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int e = head_[static_cast<std::size_t>(u)]; e != -1; e = edges_[e].next) {
                int v = edges_[e].to;
                if (edges_[e].capacity > kEps && level_[static_cast<std::size_t>(v)] < 0) {
                    level_[static_cast<std::size_t>(v)] = level_[static_cast<std::size_t>(u)] + 1;
                    q.push(v);
                }
            }
        }
        return level_[static_cast<std::size_t>(sink)] >= 0;
    }

    double dfs(int u, int sink, double limit) {
        if (u == sink) return limit;
        for (int& e = iter_[static_cast<std::size_t>(u)]; e != -1; e = edges_[e].next) {
            int v = edges_[e].to;
            if (edges_[e].capacity > kEps &&
                level_[static_cast<std::size_t>(v)] == level_[static_cast<std::size_t>(u)] + 1) {
                double pushed = dfs(v, sink, std::min(limit, edges_[e].capacity));
                if (pushed > kEps) {
                    edges_[e].capacity -= pushed;
                    edges_[e ^ 1].capacity += pushed;
                    return pushed;
                }
            }
        }
        return 0.0;
    }

    std::vector<Edge> edges_;
    std::vector<int> head_;
    std::vector<int> level_;
    std::vector<int> iter_;
    int source_ = 0;
};

}  // namespace imgtopic::detail

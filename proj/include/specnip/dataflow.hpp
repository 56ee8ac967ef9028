#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace specnip {

template <class T>
concept Lattice = std::equality_comparable<T> && requires(const T& a, const T& b) {
    { a.join(b) } -> std::same_as<T>;
    { a.leq(b) } -> std::convertible_to<bool>;
};

enum class Direction { forward, backward };

// Edges are control-flow edges (from, to). Forward problems require f(to) >= T_from(f(from));
// backward problems require f(from) >= T_to(f(to)). Init nodes additionally get f >= init.
template <Lattice T>
struct FlowProblem {
    std::size_t nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    Direction direction = Direction::forward;
    std::function<T(std::size_t, const T&)> transfer;
    T bottom;
    T init;
    std::vector<std::size_t> init_nodes;
    std::size_t height = 1;
};

template <Lattice T>
struct FlowSolution {
    std::vector<T> values;
    std::size_t iterations = 0;
    const T& operator[](std::size_t n) const { return values[n]; }
};

class SolverError : public std::runtime_error {
public:
    SolverError(std::size_t node, const std::string& msg) : std::runtime_error(msg), node_(node) {}
    std::size_t node() const { return node_; }

private:
    std::size_t node_;
};

namespace detail {

// (source of the fact, node constrained by it), in constraint direction.
template <Lattice T>
std::vector<std::pair<std::size_t, std::size_t>> flow_edges(const FlowProblem<T>& prob) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (auto [u, v] : prob.edges)
        out.push_back(prob.direction == Direction::forward ? std::pair{u, v} : std::pair{v, u});
    return out;
}

}  // namespace detail

template <Lattice T>
FlowSolution<T> solve(const FlowProblem<T>& prob) {
    FlowSolution<T> sol;
    sol.values.assign(prob.nodes, prob.bottom);
    for (auto n : prob.init_nodes) sol.values[n] = sol.values[n].join(prob.init);
    std::vector<std::vector<std::size_t>> deps(prob.nodes);
    for (auto [from, to] : detail::flow_edges(prob)) deps[from].push_back(to);
    for (auto& d : deps) std::sort(d.begin(), d.end());

    std::deque<std::size_t> work;
    std::vector<bool> queued(prob.nodes, true);
    for (std::size_t n = 0; n < prob.nodes; ++n) work.push_back(n);
    const std::size_t cap = prob.nodes * (prob.height + 1) * 4;
    while (!work.empty()) {
        const std::size_t n = work.front();
        work.pop_front();
        queued[n] = false;
        if (++sol.iterations > cap)
            throw SolverError(n, "iteration cap exceeded at node " + std::to_string(n) +
                                     "; transfer is not monotone?");
        const T out = prob.transfer(n, sol.values[n]);
        for (auto d : deps[n]) {
            T joined = sol.values[d].join(out);
            if (joined == sol.values[d]) continue;
            sol.values[d] = std::move(joined);
            if (!queued[d]) {
                queued[d] = true;
                work.push_back(d);
            }
        }
    }
    return sol;
}

// Post-hoc check of every inequality of the problem.
template <Lattice T>
bool satisfies(const FlowProblem<T>& prob, const FlowSolution<T>& sol) {
    for (auto n : prob.init_nodes)
        if (!prob.init.leq(sol.values[n])) return false;
    for (auto [from, to] : detail::flow_edges(prob))
        if (!prob.transfer(from, sol.values[from]).leq(sol.values[to])) return false;
    return true;
}

// Indices of constraints (node, bound) with f(node) not below bound.
template <Lattice T>
std::vector<std::size_t> check_constraints(const FlowSolution<T>& sol,
                                           const std::vector<std::pair<std::size_t, T>>& cs) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cs.size(); ++k)
        if (!sol.values[cs[k].first].leq(cs[k].second)) out.push_back(k);
    return out;
}

}  // namespace specnip

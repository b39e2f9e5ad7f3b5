#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "imgtopic/detail/maxflow.hpp"
#include "imgtopic/embedding.hpp"
#include "imgtopic/error.hpp"

namespace imgtopic {

// Closed output vocabulary. Entries are distinct and all embeddable.
struct Dictionary {
    std::vector<std::string> words;

    std::size_t size() const { return words.size(); }

    static Dictionary from_words(std::span<const std::string> input, const EmbeddingTable& table,
                                 std::size_t* dropped_oov = nullptr) {
        Dictionary dict;
        std::unordered_set<std::string_view> seen;
        std::size_t dropped = 0;
        for (const auto& w : input) {
            if (!table.contains(w)) {
                ++dropped;
                continue;
            }
            if (seen.count(w)) continue;
            dict.words.push_back(w);
            seen.insert(dict.words.back());
        }
        if (dropped_oov) *dropped_oov = dropped;
        if (dict.words.empty()) throw EmptyResultError("dictionary has no embeddable words");
        return dict;
    }

    // Plain text, one word per line.
    static Dictionary load(const std::string& path, const EmbeddingTable& table,
                           std::size_t* dropped_oov = nullptr) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open dictionary: " + path);
        std::vector<std::string> words;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) words.push_back(line);
        }
        return from_words(words, table, dropped_oov);
    }
};

// Fully connected labeling problem over L input words and M dictionary
// labels. unary(p, i) = 1 - sim(input_p, label_i); pairwise(a, b) =
// 1 - sim(label_a, label_b); both live in [0, 2]. lambda defaults to 1/L.
struct CrfProblem {
    std::vector<std::string> input_words;
    std::vector<std::string> labels;
    std::vector<double> unary;     // L x M, row-major
    std::vector<double> pairwise;  // M x M, symmetric, zero diagonal
    double lambda = 0.0;

    std::size_t node_count() const { return input_words.size(); }
    std::size_t label_count() const { return labels.size(); }

    double psi(std::size_t p, std::size_t label) const {
        return unary[p * labels.size() + label];
    }
    double v(std::size_t a, std::size_t b) const { return pairwise[a * labels.size() + b]; }
};

struct Labeling {
    std::vector<int> assignment;  // length L, entries in [0, M)
    double energy = 0.0;
};

enum class CrfSolver { icm, alpha_expansion, exhaustive };

inline CrfProblem build_problem(std::span<const std::string> input_words,
                                const Dictionary& dictionary, const EmbeddingTable& table,
                                std::size_t* dropped_oov = nullptr) {
    if (dictionary.words.empty()) throw ContractError("build_problem: empty dictionary");
    CrfProblem problem;
    problem.labels = dictionary.words;
    std::size_t dropped = 0;
    for (const auto& w : input_words) {
        if (table.contains(w))
            problem.input_words.push_back(w);
        else
            ++dropped;
    }
    if (dropped_oov) *dropped_oov = dropped;
    const std::size_t l = problem.input_words.size();
    const std::size_t m = problem.labels.size();
    if (l == 0) throw EmptyResultError("build_problem: no embeddable input words");

    problem.unary.resize(l * m);
    for (std::size_t p = 0; p < l; ++p) {
        auto wv = table.vector(problem.input_words[p]);
        for (std::size_t i = 0; i < m; ++i)
            problem.unary[p * m + i] =
                1.0 - EmbeddingTable::similarity(wv, table.vector(problem.labels[i]));
    }
    problem.pairwise.assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const double d = 1.0 - EmbeddingTable::similarity(table.vector(problem.labels[a]),
                                                              table.vector(problem.labels[b]));
            problem.pairwise[a * m + b] = d;
            problem.pairwise[b * m + a] = d;
        }
    }
    problem.lambda = 1.0 / static_cast<double>(l);
    return problem;
}

// Full energy: sum of unaries plus the pairwise sum over ordered pairs
// p != q, each term weighted by lambda.
inline double energy(const CrfProblem& problem, std::span<const int> assignment) {
    const std::size_t l = problem.node_count();
    const std::size_t m = problem.label_count();
    if (assignment.size() != l) throw ContractError("energy: assignment length mismatch");
    for (int y : assignment)
        if (y < 0 || static_cast<std::size_t>(y) >= m)
            throw ContractError("energy: label index out of range");
    double e = 0.0;
    for (std::size_t p = 0; p < l; ++p) e += problem.psi(p, static_cast<std::size_t>(assignment[p]));
    double pair = 0.0;
    for (std::size_t p = 0; p < l; ++p) {
        for (std::size_t q = 0; q < l; ++q) {
            if (p == q) continue;
            pair += problem.v(static_cast<std::size_t>(assignment[p]),
                              static_cast<std::size_t>(assignment[q]));
        }
    }
    return e + problem.lambda * pair;
}

// Per-node argmin of the unary term; ties keep the earliest label.
inline std::vector<int> baseline_assignment(const CrfProblem& problem) {
    const std::size_t m = problem.label_count();
    std::vector<int> assignment(problem.node_count());
    for (std::size_t p = 0; p < problem.node_count(); ++p) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (problem.psi(p, i) < problem.psi(p, best)) best = i;
        assignment[p] = static_cast<int>(best);
    }
    return assignment;
}

// Independent nearest-dictionary-word mapping; the lambda = 0 optimum.
inline Labeling baseline_map(const CrfProblem& problem) {
    Labeling labeling;
    labeling.assignment = baseline_assignment(problem);
    labeling.energy = energy(problem, labeling.assignment);
    return labeling;
}

inline Labeling baseline_map(std::span<const std::string> input_words,
                             const Dictionary& dictionary, const EmbeddingTable& table,
                             std::size_t* dropped_oov = nullptr) {
    return baseline_map(build_problem(input_words, dictionary, table, dropped_oov));
}

namespace detail {

// Cost of the ordered pair (p, q) plus (q, p) under labels a, b.
inline double pair_cost(const CrfProblem& problem, std::size_t a, std::size_t b) {
    return 2.0 * problem.lambda * problem.v(a, b);
}

inline double icm_local_cost(const CrfProblem& problem, std::span<const int> assignment,
                             std::size_t p, std::size_t label) {
    double c = problem.psi(p, label);
    for (std::size_t q = 0; q < assignment.size(); ++q) {
        if (q == p) continue;
        c += pair_cost(problem, label, static_cast<std::size_t>(assignment[q]));
    }
    return c;
}

inline Labeling solve_icm(const CrfProblem& problem) {
    std::vector<int> assignment = baseline_assignment(problem);
    const std::size_t m = problem.label_count();
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t p = 0; p < assignment.size(); ++p) {
            const double current =
                icm_local_cost(problem, assignment, p, static_cast<std::size_t>(assignment[p]));
            std::size_t best = static_cast<std::size_t>(assignment[p]);
            double best_cost = current;
            for (std::size_t i = 0; i < m; ++i) {
                const double c = icm_local_cost(problem, assignment, p, i);
                if (c < best_cost) {
                    best_cost = c;
                    best = i;
                }
            }
            if (best != static_cast<std::size_t>(assignment[p])) {
                assignment[p] = static_cast<int>(best);
                changed = true;
            }
        }
    }
    return {assignment, energy(problem, assignment)};
}

// One expansion move: every node may keep its label or switch to `alpha`.
// The binary subproblem is solved as a min cut; non-submodular pair terms
// are truncated first, so the move is accepted only if the true energy
// strictly decreases. Returns true when the assignment changed.
inline bool expansion_move(const CrfProblem& problem, std::vector<int>& assignment,
                           double& current_energy, std::size_t alpha) {
    std::vector<std::size_t> movable;
    for (std::size_t p = 0; p < assignment.size(); ++p)
        if (static_cast<std::size_t>(assignment[p]) != alpha) movable.push_back(p);
    if (movable.empty()) return false;

    const int n = static_cast<int>(movable.size());
    std::vector<double> cost_keep(movable.size());    // theta_p(0)
    std::vector<double> cost_switch(movable.size());  // theta_p(1)
    for (std::size_t i = 0; i < movable.size(); ++i) {
        const std::size_t p = movable[i];
        cost_keep[i] = problem.psi(p, static_cast<std::size_t>(assignment[p]));
        cost_switch[i] = problem.psi(p, alpha);
    }
    // Pairs against nodes already labeled alpha collapse into unaries.
    const std::size_t fixed = assignment.size() - movable.size();
    if (fixed > 0) {
        for (std::size_t i = 0; i < movable.size(); ++i) {
            const auto y_p = static_cast<std::size_t>(assignment[movable[i]]);
            cost_keep[i] += static_cast<double>(fixed) * pair_cost(problem, y_p, alpha);
        }
    }

    MaxFlow flow(n + 2);
    const int source = n;
    const int sink = n + 1;
    for (std::size_t i = 0; i < movable.size(); ++i) {
        for (std::size_t j = i + 1; j < movable.size(); ++j) {
            const auto y_p = static_cast<std::size_t>(assignment[movable[i]]);
            const auto y_q = static_cast<std::size_t>(assignment[movable[j]]);
            const double a = pair_cost(problem, y_p, y_q);
            const double b = pair_cost(problem, y_p, alpha);
            const double c = pair_cost(problem, alpha, y_q);
            const double a_trunc = std::min(a, b + c);  // restore submodularity
            cost_switch[i] += c - a_trunc;
            cost_switch[j] += -c;
            const double cap = b + c - a_trunc;
            if (cap > 0.0) flow.add_edge(static_cast<int>(i), static_cast<int>(j), cap);
        }
    }
    for (std::size_t i = 0; i < movable.size(); ++i) {
        const double shift = std::min(cost_keep[i], cost_switch[i]);
        flow.add_edge(source, static_cast<int>(i), cost_switch[i] - shift);
        flow.add_edge(static_cast<int>(i), sink, cost_keep[i] - shift);
    }
    flow.run(source, sink);

    std::vector<int> proposal = assignment;
    bool any = false;
    for (std::size_t i = 0; i < movable.size(); ++i) {
        if (!flow.reachable_from_source(static_cast<int>(i))) {
            proposal[movable[i]] = static_cast<int>(alpha);
            any = true;
        }
    }
    if (!any) return false;
    const double proposed = energy(problem, proposal);
    if (proposed < current_energy) {
        assignment = std::move(proposal);
        current_energy = proposed;
        return true;
    }
    return false;
}

inline Labeling solve_alpha_expansion(const CrfProblem& problem) {
    std::vector<int> assignment = baseline_assignment(problem);
    double current = energy(problem, assignment);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t alpha = 0; alpha < problem.label_count(); ++alpha) {
            if (expansion_move(problem, assignment, current, alpha)) improved = true;
        }
    }
    return {assignment, current};
}

inline Labeling solve_exhaustive(const CrfProblem& problem) {
    const std::size_t l = problem.node_count();
    const std::size_t m = problem.label_count();
    double states = 1.0;
    for (std::size_t p = 0; p < l; ++p) states *= static_cast<double>(m);
    if (states > 1e6)
        throw ContractError("exhaustive solver refused: M^L = " + std::to_string(states) +
                            " exceeds 1e6");

    std::vector<int> assignment(l, 0);
    std::vector<int> best = assignment;
    double best_energy = energy(problem, assignment);
    while (true) {
        // next assignment in lexicographic order, last index fastest
        std::size_t p = l;
        while (p > 0) {
            --p;
            if (static_cast<std::size_t>(++assignment[p]) < m) break;
            assignment[p] = 0;
            if (p == 0) return {best, best_energy};
        }
        const double e = energy(problem, assignment);
        if (e < best_energy) {
            best_energy = e;
            best = assignment;
        }
    }
}

}  // namespace detail

// Minimizes the labeling energy. `exhaustive` is the global optimum and
// refuses problems with more than 1e6 states; the move-making solvers are
// heuristics whose result never exceeds the baseline energy.
inline Labeling crf_map(const CrfProblem& problem, CrfSolver solver = CrfSolver::icm) {
    if (problem.node_count() == 0) throw ContractError("crf_map: empty problem");
    switch (solver) {
        case CrfSolver::icm:
            return detail::solve_icm(problem);
        case CrfSolver::alpha_expansion:
            return detail::solve_alpha_expansion(problem);
        case CrfSolver::exhaustive:
            return detail::solve_exhaustive(problem);
    }
    throw ContractError("crf_map: unknown solver");
}

// Mapped words in the rank order of their sources, first occurrence kept.
inline std::vector<std::string> finalize(std::span<const std::string> input_words,
                                         const Labeling& labeling, const Dictionary& dictionary) {
    if (labeling.assignment.size() != input_words.size())
        throw ContractError("finalize: labeling does not match input words");
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (std::size_t p = 0; p < input_words.size(); ++p) {
        const auto& target = dictionary.words.at(static_cast<std::size_t>(labeling.assignment[p]));
        if (seen.insert(target).second) out.push_back(target);
    }
    return out;
}

// Row of the mapping report emitted next to mapped topic words.
struct MapEntry {
    std::string source;
    std::string target;
    double unary = 0.0;
    bool kept = false;  // false when deduplication removed the target
};

inline std::vector<MapEntry> mapping_report(const CrfProblem& problem, const Labeling& labeling) {
    std::vector<MapEntry> entries;
    std::unordered_set<std::string> seen;
    for (std::size_t p = 0; p < problem.node_count(); ++p) {
        const auto label = static_cast<std::size_t>(labeling.assignment[p]);
        MapEntry e;
        e.source = problem.input_words[p];
        e.target = problem.labels[label];
        e.unary = problem.psi(p, label);
        e.kept = seen.insert(e.target).second;
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace imgtopic

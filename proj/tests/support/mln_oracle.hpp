#pragma once

// Monolithic brute-force reference for MLN marginals: every query grounding is a free atom,
// every formula grounding is evaluated on every joint truth assignment. No evidence folding,
// no components.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semloft/mln.hpp"

namespace oracle {

using semloft::mln::Evidence;
using semloft::mln::Expr;
using semloft::mln::GroundAtom;
using semloft::mln::KnowledgeBase;
using semloft::mln::PredicateKind;

inline std::vector<std::string> constant_names(int n)
{
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i)
        out.push_back("C" + std::to_string(i));
    return out;
}

struct Fact {
    int predicate;
    std::vector<int> args;
};

inline Evidence make_evidence(const KnowledgeBase& kb, int constants, const std::vector<Fact>& facts)
{
    Evidence ev(kb, constants);
    for (const Fact& f : facts)
        ev.set(f.predicate, f.args);
    return ev;
}

/// Flattened grounding: post-order nodes; leaves are constants or free-atom bits.
struct Node {
    Expr::Op op;
    int atom = -1;       ///< free atom bit, -1 for a constant leaf
    bool value = false;  ///< constant leaf value
};

inline void flatten(const Expr& e, const std::vector<int>& binding, const std::vector<std::string>& vars,
                    const std::vector<std::string>& names, const KnowledgeBase& kb, const Evidence& ev,
                    const std::map<GroundAtom, int>& bits, std::vector<Node>& out)
{
    if (e.op == Expr::Op::Atom) {
        std::vector<int> args;
        for (const auto& t : e.args) {
            if (t.variable)
                args.push_back(binding[std::find(vars.begin(), vars.end(), t.name) - vars.begin()]);
            else
                args.push_back(int(std::find(names.begin(), names.end(), t.name) - names.begin()));
        }
        if (kb.predicates[e.predicate].kind == PredicateKind::Evidence)
            out.push_back({Expr::Op::Atom, -1, ev.value(e.predicate, args)});
        else
            out.push_back({Expr::Op::Atom, bits.at({e.predicate, args}), false});
        return;
    }
    for (const Expr& c : e.children)
        flatten(c, binding, vars, names, kb, ev, bits, out);
    out.push_back({e.op});
}

inline bool eval(const std::vector<Node>& nodes, std::uint32_t state)
{
    bool stack[64];
    int top = 0;
    for (const Node& n : nodes) {
        switch (n.op) {
        case Expr::Op::Atom: stack[top++] = n.atom < 0 ? n.value : ((state >> n.atom) & 1u); break;
        case Expr::Op::Not: stack[top - 1] = !stack[top - 1]; break;
        case Expr::Op::And: --top; stack[top - 1] = stack[top - 1] && stack[top]; break;
        case Expr::Op::Or: --top; stack[top - 1] = stack[top - 1] || stack[top]; break;
        case Expr::Op::Implies: --top; stack[top - 1] = !stack[top - 1] || stack[top]; break;
        }
    }
    return stack[0];
}

/// Marginal of every query grounding, or nullopt when no assignment satisfies the hard rules.
inline std::optional<std::map<GroundAtom, double>> brute_force_marginals(const KnowledgeBase& kb, int constants,
                                                                         const Evidence& ev)
{
    const auto names = constant_names(constants);
    std::vector<GroundAtom> atoms;
    std::map<GroundAtom, int> bits;
    for (int p = 0; p < int(kb.predicates.size()); ++p) {
        if (kb.predicates[p].kind != PredicateKind::Query)
            continue;
        const int arity = kb.predicates[p].arity;
        int combos = 1;
        for (int i = 0; i < arity; ++i)
            combos *= constants;
        for (int c = 0; c < combos; ++c) {
            std::vector<int> args(arity);
            for (int i = arity - 1, v = c; i >= 0; --i, v /= constants)
                args[i] = v % constants;
            bits[{p, args}] = int(atoms.size());
            atoms.push_back({p, args});
        }
    }
    struct Grounding {
        double weight;
        bool hard;
        std::vector<Node> nodes;
    };
    std::vector<Grounding> groundings;
    for (const auto& f : kb.formulas) {
        const int v = int(f.variables.size());
        int combos = 1;
        for (int i = 0; i < v; ++i)
            combos *= constants;
        for (int c = 0; c < combos; ++c) {
            std::vector<int> binding(v);
            for (int i = v - 1, r = c; i >= 0; --i, r /= constants)
                binding[i] = r % constants;
            Grounding g{f.weight, f.hard(), {}};
            flatten(f.clause, binding, f.variables, names, kb, ev, bits, g.nodes);
            groundings.push_back(std::move(g));
        }
    }
    const std::uint32_t states = 1u << atoms.size();
    std::vector<double> logw(states, -INFINITY);
    double top = -INFINITY;
    for (std::uint32_t s = 0; s < states; ++s) {
        double lw = 0.0;
        bool ok = true;
        for (const Grounding& g : groundings) {
            const bool sat = eval(g.nodes, s);
            if (g.hard) {
                if (!sat) {
                    ok = false;
                    break;
                }
            } else if (sat) {
                lw += g.weight;
            }
        }
        if (ok) {
            logw[s] = lw;
            top = std::max(top, lw);
        }
    }
    if (top == -INFINITY)
        return std::nullopt;
    double z = 0.0;
    std::vector<double> mass(atoms.size(), 0.0);
    for (std::uint32_t s = 0; s < states; ++s) {
        if (logw[s] == -INFINITY)
            continue;
        const double w = std::exp(logw[s] - top);
        z += w;
        for (std::size_t a = 0; a < atoms.size(); ++a)
            if ((s >> a) & 1u)
                mass[a] += w;
    }
    std::map<GroundAtom, double> out;
    for (std::size_t a = 0; a < atoms.size(); ++a)
        out[atoms[a]] = mass[a] / z;
    return out;
}

/// Random knowledge base over 2-3 constants with at most 16 query groundings.
struct RandomKb {
    KnowledgeBase kb;
    int constants = 2;
    std::vector<Fact> facts;
    std::vector<std::string> lines;  ///< formula text, for diagnostics
};

inline RandomKb random_kb(std::mt19937_64& rng)
{
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
    RandomKb r;
    r.constants = uniform(2, 3);
    const int n = r.constants;
    const int evidence_preds = uniform(1, 2);
    for (int i = 0; i < evidence_preds; ++i)
        r.kb.declare("E" + std::to_string(i), uniform(1, 2), PredicateKind::Evidence);
    int budget = 16;
    const int query_preds = uniform(1, 3);
    for (int i = 0; i < query_preds; ++i) {
        int arity = uniform(1, 2);
        int size = arity == 1 ? n : n * n;
        if (size > budget) {
            arity = 1;
            size = n;
        }
        if (size > budget)
            break;
        budget -= size;
        r.kb.declare("Q" + std::to_string(i), arity, PredicateKind::Query);
    }
    const char* vars[] = {"x", "y", "z"};
    const auto names = constant_names(n);
    std::function<std::string(int)> clause = [&](int depth) -> std::string {
        if (depth == 0 || chance(0.35)) {
            const int p = uniform(0, int(r.kb.predicates.size()) - 1);
            std::string s = r.kb.predicates[p].name + "(";
            for (int a = 0; a < r.kb.predicates[p].arity; ++a) {
                if (a)
                    s += ",";
                s += chance(0.15) ? names[uniform(0, n - 1)] : vars[uniform(0, 2)];
            }
            return s + ")";
        }
        switch (uniform(0, 3)) {
        case 0: return "!" + clause(depth - 1);
        case 1: return "(" + clause(depth - 1) + " ^ " + clause(depth - 1) + ")";
        case 2: return "(" + clause(depth - 1) + " || " + clause(depth - 1) + ")";
        default: return "(" + clause(depth - 1) + " -> " + clause(depth - 1) + ")";
        }
    };
    const int formulas = uniform(2, 5);
    for (int f = 0; f < formulas; ++f) {
        const bool hard = chance(0.25);
        const double w = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
        std::string text = clause(3);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", w);
        const std::string line = (hard ? std::string("inf") : std::string(buf)) + " | " + text;
        r.lines.push_back(line);
        r.kb.add_formula(line);
    }
    for (int p = 0; p < int(r.kb.predicates.size()); ++p) {
        if (r.kb.predicates[p].kind != PredicateKind::Evidence)
            continue;
        for (int a = 0; a < n; ++a) {
            if (r.kb.predicates[p].arity == 1) {
                if (chance(0.5))
                    r.facts.push_back({p, {a}});
                continue;
            }
            for (int b = 0; b < n; ++b)
                if (chance(0.5))
                    r.facts.push_back({p, {a, b}});
        }
    }
    return r;
}

}  // namespace oracle

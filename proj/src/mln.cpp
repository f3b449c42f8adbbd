#include "semloft/mln.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "semloft/error.hpp"

namespace semloft::mln {

namespace {

[[noreturn]] void parse_fail(std::string_view text, std::size_t pos, const std::string& what)
{
    throw Error(ErrorKind::Format,
                "formula parse error at offset " + std::to_string(pos) + ": " + what + " in '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

enum class Tok { Ident, LParen, RParen, Comma, Not, And, Or, Implies, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s)
{
    std::vector<Token> out;
    std::size_t i = 0;
    auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        const std::size_t at = i;
        if (std::isalnum(c) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
                ++i;
            out.push_back({Tok::Ident, std::string(s.substr(at, i - at)), at});
        } else if (c == '(') {
            out.push_back({Tok::LParen, "(", at});
            ++i;
        } else if (c == ')') {
            out.push_back({Tok::RParen, ")", at});
            ++i;
        } else if (c == ',') {
            out.push_back({Tok::Comma, ",", at});
            ++i;
        } else if (c == '!' || c == '~') {
            out.push_back({Tok::Not, "!", at});
            ++i;
        } else if (starts("¬")) {
            out.push_back({Tok::Not, "!", at});
            i += std::string_view("¬").size();
        } else if (c == '^' || c == '&') {
            out.push_back({Tok::And, "^", at});
            i += (starts("&&") ? 2 : 1);
        } else if (starts("∧")) {
            out.push_back({Tok::And, "^", at});
            i += std::string_view("∧").size();
        } else if (starts("||")) {
            out.push_back({Tok::Or, "||", at});
            i += 2;
        } else if (starts("∨")) {
            out.push_back({Tok::Or, "||", at});
            i += std::string_view("∨").size();
        } else if (starts("->") || starts("=>")) {
            out.push_back({Tok::Implies, "->", at});
            i += 2;
        } else if (starts("→")) {
            out.push_back({Tok::Implies, "->", at});
            i += std::string_view("→").size();
        } else {
            parse_fail(s, at, "unexpected character");
        }
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

class Parser {
public:
    Parser(std::string_view text, const KnowledgeBase& kb) : text_(text), kb_(kb), toks_(tokenize(text)) {}

    Expr parse()
    {
        Expr e = implication();
        if (peek().kind != Tok::End)
            parse_fail(text_, peek().pos, "trailing input");
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    void expect(Tok kind, const char* what)
    {
        if (peek().kind != kind)
            parse_fail(text_, peek().pos, std::string("expected ") + what);
        ++pos_;
    }

    static Expr binary(Expr::Op op, Expr a, Expr b)
    {
        Expr e;
        e.op = op;
        e.children.push_back(std::move(a));
        e.children.push_back(std::move(b));
        return e;
    }

    Expr implication()
    {
        Expr lhs = disjunction();
        if (peek().kind == Tok::Implies) {
            ++pos_;
            return binary(Expr::Op::Implies, std::move(lhs), implication());
        }
        return lhs;
    }

    Expr disjunction()
    {
        Expr lhs = conjunction();
        while (peek().kind == Tok::Or) {
            ++pos_;
            lhs = binary(Expr::Op::Or, std::move(lhs), conjunction());
        }
        return lhs;
    }

    Expr conjunction()
    {
        Expr lhs = unary();
        while (peek().kind == Tok::And) {
            ++pos_;
            lhs = binary(Expr::Op::And, std::move(lhs), unary());
        }
        return lhs;
    }

    Expr unary()
    {
        if (peek().kind == Tok::Not) {
            ++pos_;
            Expr e;
            e.op = Expr::Op::Not;
            e.children.push_back(unary());
            return e;
        }
        if (peek().kind == Tok::LParen) {
            ++pos_;
            Expr e = implication();
            expect(Tok::RParen, "')'");
            return e;
        }
        return atom();
    }

    Expr atom()
    {
        const Token& name = next();
        if (name.kind != Tok::Ident)
            parse_fail(text_, name.pos, "expected predicate name");
        const int pred = kb_.predicate_index(name.text);
        if (pred < 0)
            parse_fail(text_, name.pos, "unknown predicate '" + name.text + "'");
        Expr e;
        e.op = Expr::Op::Atom;
        e.predicate = pred;
        expect(Tok::LParen, "'('");
        for (;;) {
            const Token& arg = next();
            if (arg.kind != Tok::Ident)
                parse_fail(text_, arg.pos, "expected argument");
            const bool var = std::islower(static_cast<unsigned char>(arg.text.front())) != 0;
            e.args.push_back({var, arg.text});
            if (peek().kind == Tok::Comma) {
                ++pos_;
                continue;
            }
            expect(Tok::RParen, "')'");
            break;
        }
        if (int(e.args.size()) != kb_.predicates[pred].arity)
            parse_fail(text_, name.pos, "arity mismatch for '" + name.text + "'");
        return e;
    }

    std::string_view text_;
    const KnowledgeBase& kb_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

void collect_variables(const Expr& e, std::vector<std::string>& vars)
{
    if (e.op == Expr::Op::Atom) {
        for (const Term& t : e.args)
            if (t.variable && std::find(vars.begin(), vars.end(), t.name) == vars.end())
                vars.push_back(t.name);
        return;
    }
    for (const Expr& c : e.children)
        collect_variables(c, vars);
}

double parse_weight(std::string_view w, std::string_view line)
{
    w = trim(w);
    if (w == "inf" || w == "+inf" || w == "∞")
        return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = w.data();
    const char* last = w.data() + w.size();
    if (!w.empty() && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        parse_fail(line, 0, "invalid weight '" + std::string(w) + "'");
    return v;
}

}  // namespace

int KnowledgeBase::predicate_index(std::string_view name) const
{
    for (std::size_t i = 0; i < predicates.size(); ++i)
        if (predicates[i].name == name)
            return int(i);
    return -1;
}

int KnowledgeBase::declare(const std::string& name, int arity, PredicateKind kind)
{
    if (predicate_index(name) >= 0)
        throw Error(ErrorKind::Format, "predicate '" + name + "' declared twice");
    if (arity < 1 || arity > 4)
        throw Error(ErrorKind::Format, "predicate '" + name + "' has unsupported arity");
    predicates.push_back({name, arity, kind});
    return int(predicates.size()) - 1;
}

void KnowledgeBase::add_formula(std::string_view line)
{
    const std::size_t bar = line.find('|');
    if (bar == std::string_view::npos || line.substr(bar, 2) == "||")
        parse_fail(line, 0, "expected 'weight | clause'");
    Formula f;
    f.weight = parse_weight(line.substr(0, bar), line);
    f.clause = parse_clause(trim(line.substr(bar + 1)), *this);
    collect_variables(f.clause, f.variables);
    formulas.push_back(std::move(f));
}

Expr parse_clause(std::string_view text, const KnowledgeBase& kb)
{
    return Parser(text, kb).parse();
}

KnowledgeBase parse_kb(std::string_view text, const KnowledgeBase& base)
{
    KnowledgeBase kb;
    kb.predicates = base.predicates;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        start = end + 1;
        if (line.empty())
            continue;
        const bool evidence = line.starts_with("evidence ");
        const bool query = line.starts_with("query ");
        if (evidence || query) {
            std::string_view decl = trim(line.substr(evidence ? 9 : 6));
            const auto open = decl.find('(');
            const auto close = decl.rfind(')');
            if (open == std::string_view::npos || close == std::string_view::npos || close < open)
                parse_fail(line, 0, "malformed predicate declaration");
            const std::string name(trim(decl.substr(0, open)));
            std::string_view args = decl.substr(open + 1, close - open - 1);
            const int arity = int(std::count(args.begin(), args.end(), ',')) + 1;
            kb.declare(name, arity, evidence ? PredicateKind::Evidence : PredicateKind::Query);
            continue;
        }
        kb.add_formula(line);
    }
    return kb;
}

KnowledgeBase same_length_predicates()
{
    KnowledgeBase kb;
    kb.declare("Room", 1, PredicateKind::Evidence);
    kb.declare("Corr", 1, PredicateKind::Evidence);
    kb.declare("Hall", 1, PredicateKind::Evidence);
    kb.declare("Adj", 2, PredicateKind::Evidence);
    kb.declare("Irr", 2, PredicateKind::Evidence);
    kb.declare("SaLe", 2, PredicateKind::Query);
    return kb;
}

KnowledgeBase kb_same_length(const KbWeights& w)
{
    KnowledgeBase kb = same_length_predicates();
    kb.add_formula("inf | Irr(p,q) -> Irr(q,p)");
    kb.add_formula("inf | Adj(p,q) -> Adj(q,p)");
    kb.add_formula("inf | SaLe(p,q) -> SaLe(q,p)");
    kb.add_formula("inf | Irr(p,q) -> !Adj(p,q)");
    kb.add_formula(std::to_string(w.w5) + " | Room(p) ^ Room(q) ^ Adj(p,q) -> SaLe(p,q)");
    kb.add_formula(std::to_string(w.w6) + " | Room(p) ^ Hall(q) ^ Adj(p,q) -> !SaLe(p,q)");
    kb.add_formula(std::to_string(w.w7) + " | Room(p) ^ Corr(q) ^ Adj(p,q) -> !SaLe(p,q)");
    kb.add_formula(std::to_string(w.w8) + " | Irr(q,p) -> !SaLe(p,q)");
    // to_string rounds to 6 decimals; keep the exact weights.
    kb.formulas[4].weight = w.w5;
    kb.formulas[5].weight = w.w6;
    kb.formulas[6].weight = w.w7;
    kb.formulas[7].weight = w.w8;
    return kb;
}

Evidence::Evidence(const KnowledgeBase& kb, int constants) : kb_(&kb), constants_(constants)
{
    truth_.resize(kb.predicates.size());
    for (std::size_t p = 0; p < kb.predicates.size(); ++p) {
        if (kb.predicates[p].kind != PredicateKind::Evidence)
            continue;
        std::size_t n = 1;
        for (int a = 0; a < kb.predicates[p].arity; ++a)
            n *= std::size_t(constants);
        truth_[p].assign(n, 0);
    }
}

std::size_t Evidence::offset(int predicate, const std::vector<int>& args) const
{
    if (predicate < 0 || predicate >= int(truth_.size()) || kb_->predicates[predicate].kind != PredicateKind::Evidence)
        throw Error(ErrorKind::Format, "evidence refers to a non-evidence predicate");
    if (int(args.size()) != kb_->predicates[predicate].arity)
        throw Error(ErrorKind::Format, "evidence arity mismatch for '" + kb_->predicates[predicate].name + "'");
    std::size_t off = 0;
    for (int a : args) {
        if (a < 0 || a >= constants_)
            throw Error(ErrorKind::Format, "evidence constant out of range");
        off = off * std::size_t(constants_) + std::size_t(a);
    }
    return off;
}

void Evidence::set(int predicate, const std::vector<int>& args, bool value)
{
    truth_[predicate][offset(predicate, args)] = value ? 1 : 0;
}

void Evidence::set(std::string_view predicate, const std::vector<int>& args, bool value)
{
    const int p = kb_->predicate_index(predicate);
    if (p < 0)
        throw Error(ErrorKind::Format, "unknown predicate '" + std::string(predicate) + "'");
    set(p, args, value);
}

bool Evidence::value(int predicate, const std::vector<int>& args) const
{
    return truth_[predicate][offset(predicate, args)] != 0;
}

bool GroundFormula::evaluate(const std::vector<std::uint8_t>& truth) const
{
    // Nodes are stored in post-order, so children precede parents.
    std::array<std::uint8_t, 64> local{};
    std::vector<std::uint8_t> heap;
    std::uint8_t* vals = local.data();
    if (nodes.size() > local.size()) {
        heap.resize(nodes.size());
        vals = heap.data();
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const GroundNode& n = nodes[i];
        switch (n.op) {
        case Expr::Op::Atom: vals[i] = truth[n.atom]; break;
        case Expr::Op::Not: vals[i] = !vals[n.left]; break;
        case Expr::Op::And: vals[i] = vals[n.left] && vals[n.right]; break;
        case Expr::Op::Or: vals[i] = vals[n.left] || vals[n.right]; break;
        case Expr::Op::Implies: vals[i] = !vals[n.left] || vals[n.right]; break;
        }
    }
    return vals[nodes.size() - 1] != 0;
}

int GroundNetwork::atom_index(const GroundAtom& atom) const
{
    if (atom.predicate < 0 || atom.predicate >= int(predicate_offset.size()) || predicate_offset[atom.predicate] < 0)
        return -1;
    int off = 0;
    for (int a : atom.args) {
        if (a < 0 || a >= constants)
            return -1;
        off = off * constants + a;
    }
    return predicate_offset[atom.predicate] + off;
}

namespace {

// Folding result: a constant, or a node index in the output formula.
struct Folded {
    int node = -1;  ///< -1 means constant
    bool value = false;
};

class Grounder {
public:
    Grounder(const KnowledgeBase& kb, const GroundNetwork& net, const Evidence& ev,
             const std::vector<std::string>& constants)
        : kb_(kb), net_(net), ev_(ev), constants_(constants) {}

    Folded fold(const Expr& e, const std::vector<std::string>& vars, const std::vector<int>& binding,
                std::vector<GroundNode>& nodes)
    {
        switch (e.op) {
        case Expr::Op::Atom: {
            GroundAtom ga{e.predicate, {}};
            for (const Term& t : e.args) {
                if (t.variable) {
                    const auto it = std::find(vars.begin(), vars.end(), t.name);
                    ga.args.push_back(binding[std::size_t(it - vars.begin())]);
                } else {
                    const auto it = std::find(constants_.begin(), constants_.end(), t.name);
                    if (it == constants_.end())
                        throw Error(ErrorKind::Format, "formula constant '" + t.name + "' is not in the domain");
                    ga.args.push_back(int(it - constants_.begin()));
                }
            }
            if (kb_.predicates[e.predicate].kind == PredicateKind::Evidence)
                return {-1, ev_.value(e.predicate, ga.args)};
            nodes.push_back({Expr::Op::Atom, net_.atom_index(ga), -1, -1});
            return {int(nodes.size()) - 1, false};
        }
        case Expr::Op::Not: {
            Folded c = fold(e.children[0], vars, binding, nodes);
            if (c.node < 0)
                return {-1, !c.value};
            nodes.push_back({Expr::Op::Not, -1, c.node, -1});
            return {int(nodes.size()) - 1, false};
        }
        default: break;
        }
        Folded a = fold(e.children[0], vars, binding, nodes);
        Folded b = fold(e.children[1], vars, binding, nodes);
        const Expr::Op op = e.op;
        auto negate = [&](Folded f) {
            nodes.push_back({Expr::Op::Not, -1, f.node, -1});
            return Folded{int(nodes.size()) - 1, false};
        };
        if (a.node < 0 && b.node < 0) {
            bool v = false;
            if (op == Expr::Op::And)
                v = a.value && b.value;
            else if (op == Expr::Op::Or)
                v = a.value || b.value;
            else
                v = !a.value || b.value;
            return {-1, v};
        }
        if (a.node < 0) {
            if (op == Expr::Op::And)
                return a.value ? b : Folded{-1, false};
            if (op == Expr::Op::Or)
                return a.value ? Folded{-1, true} : b;
            return a.value ? b : Folded{-1, true};
        }
        if (b.node < 0) {
            if (op == Expr::Op::And)
                return b.value ? a : Folded{-1, false};
            if (op == Expr::Op::Or)
                return b.value ? Folded{-1, true} : a;
            return b.value ? Folded{-1, true} : negate(a);
        }
        nodes.push_back({op, -1, a.node, b.node});
        return {int(nodes.size()) - 1, false};
    }

private:
    const KnowledgeBase& kb_;
    const GroundNetwork& net_;
    const Evidence& ev_;
    const std::vector<std::string>& constants_;
};

// Drops nodes unreachable from the root, keeping post-order.
void compact(std::vector<GroundNode>& nodes, int root)
{
    std::vector<int> keep(nodes.size(), 0);
    std::vector<int> stack{root};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        if (keep[i])
            continue;
        keep[i] = 1;
        if (nodes[i].left >= 0)
            stack.push_back(nodes[i].left);
        if (nodes[i].right >= 0)
            stack.push_back(nodes[i].right);
    }
    std::vector<int> remap(nodes.size(), -1);
    std::vector<GroundNode> out;
    for (int i = 0; i <= root; ++i) {
        if (!keep[i])
            continue;
        GroundNode n = nodes[i];
        if (n.left >= 0)
            n.left = remap[n.left];
        if (n.right >= 0)
            n.right = remap[n.right];
        remap[i] = int(out.size());
        out.push_back(n);
    }
    nodes = std::move(out);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

GroundNetwork ground(const KnowledgeBase& kb, const std::vector<std::string>& constants, const Evidence& evidence)
{
    const int n = int(constants.size());
    if (evidence.constants() != n)
        throw Error(ErrorKind::Format, "evidence and constant set disagree on the domain size");
    GroundNetwork net;
    net.constants = n;
    net.predicate_offset.assign(kb.predicates.size(), -1);
    for (std::size_t p = 0; p < kb.predicates.size(); ++p) {
        if (kb.predicates[p].kind != PredicateKind::Query)
            continue;
        net.predicate_offset[p] = int(net.atoms.size());
        const int arity = kb.predicates[p].arity;
        std::vector<int> args(arity, 0);
        if (n == 0)
            continue;
        for (;;) {
            net.atoms.push_back({int(p), args});
            int k = arity - 1;
            while (k >= 0 && ++args[k] == n)
                args[k--] = 0;
            if (k < 0)
                break;
        }
    }

    Grounder g(kb, net, evidence, constants);
    for (std::size_t fi = 0; fi < kb.formulas.size(); ++fi) {
        const Formula& f = kb.formulas[fi];
        const int k = int(f.variables.size());
        if (k > 0 && n == 0)
            continue;
        std::vector<int> binding(k, 0);
        for (;;) {
            GroundFormula gf;
            gf.weight = f.weight;
            gf.formula = int(fi);
            const Folded root = g.fold(f.clause, f.variables, binding, gf.nodes);
            if (root.node < 0) {
                if (f.hard() && !root.value)
                    throw Error(ErrorKind::InconsistentEvidence,
                                "evidence violates hard formula " + std::to_string(fi + 1));
            } else {
                compact(gf.nodes, root.node);
                for (const GroundNode& node : gf.nodes)
                    if (node.op == Expr::Op::Atom)
                        gf.atoms.push_back(node.atom);
                std::sort(gf.atoms.begin(), gf.atoms.end());
                gf.atoms.erase(std::unique(gf.atoms.begin(), gf.atoms.end()), gf.atoms.end());
                net.formulas.push_back(std::move(gf));
            }
            int j = k - 1;
            while (j >= 0 && ++binding[j] == n)
                binding[j--] = 0;
            if (j < 0)
                break;
        }
    }

    const int atoms = int(net.atoms.size());
    UnionFind uf(atoms);
    for (const GroundFormula& gf : net.formulas)
        for (std::size_t i = 1; i < gf.atoms.size(); ++i)
            uf.unite(gf.atoms[0], gf.atoms[i]);
    std::vector<int> comp_of_root(atoms, -1);
    for (int a = 0; a < atoms; ++a) {
        const int r = uf.find(a);
        if (comp_of_root[r] < 0) {
            comp_of_root[r] = int(net.components.size());
            net.components.emplace_back();
        }
        net.components[comp_of_root[r]].atoms.push_back(a);
    }
    for (std::size_t fi = 0; fi < net.formulas.size(); ++fi)
        net.components[comp_of_root[uf.find(net.formulas[fi].atoms[0])]].formulas.push_back(int(fi));
    return net;
}

double QueryResult::probability(const GroundNetwork& net, const GroundAtom& atom) const
{
    const int i = net.atom_index(atom);
    if (i < 0)
        throw Error(ErrorKind::Format, "atom is not a query grounding");
    return marginals[i];
}

QueryResult infer_exact(const GroundNetwork& net, int max_enum_atoms)
{
    QueryResult result;
    result.marginals.assign(net.atoms.size(), 0.5);
    std::vector<std::uint8_t> truth(net.atoms.size(), 0);
    for (std::size_t ci = 0; ci < net.components.size(); ++ci) {
        const Component& comp = net.components[ci];
        const int k = int(comp.atoms.size());
        if (k > max_enum_atoms)
            throw Error(ErrorKind::Capacity, "component " + std::to_string(ci) + " has " + std::to_string(k) +
                                                 " free atoms (limit " + std::to_string(max_enum_atoms) + ")");
        const std::uint64_t states = std::uint64_t(1) << k;
        std::vector<double> logw(states, -std::numeric_limits<double>::infinity());
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint64_t s = 0; s < states; ++s) {
            for (int i = 0; i < k; ++i)
                truth[comp.atoms[i]] = (s >> i) & 1U;
            double w = 0.0;
            bool allowed = true;
            for (int fi : comp.formulas) {
                const GroundFormula& gf = net.formulas[fi];
                const bool sat = gf.evaluate(truth);
                if (gf.hard()) {
                    if (!sat) {
                        allowed = false;
                        break;
                    }
                } else if (sat) {
                    w += gf.weight;
                }
            }
            if (allowed) {
                logw[s] = w;
                best = std::max(best, w);
            }
        }
        if (best == -std::numeric_limits<double>::infinity())
            throw Error(ErrorKind::InconsistentEvidence,
                        "component " + std::to_string(ci) + " has no state satisfying its hard formulas");
        double z = 0.0;
        std::vector<double> on(k, 0.0);
        for (std::uint64_t s = 0; s < states; ++s) {
            if (logw[s] == -std::numeric_limits<double>::infinity())
                continue;
            const double p = std::exp(logw[s] - best);
            z += p;
            for (int i = 0; i < k; ++i)
                if ((s >> i) & 1U)
                    on[i] += p;
        }
        for (int i = 0; i < k; ++i) {
            result.marginals[comp.atoms[i]] = on[i] / z;
            truth[comp.atoms[i]] = 0;
        }
        result.log_partition += best + std::log(z);
    }
    return result;
}

}  // namespace semloft::mln

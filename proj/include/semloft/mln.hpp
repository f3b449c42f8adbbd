#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace semloft::mln {

enum class PredicateKind : std::uint8_t { Evidence, Query };

struct PredicateDecl {
    std::string name;
    int arity = 1;
    PredicateKind kind = PredicateKind::Evidence;
};

/// Atom argument: a variable (lowercase initial) or a named constant.
struct Term {
    bool variable = true;
    std::string name;
};

struct Expr {
    enum class Op : std::uint8_t { Atom, Not, And, Or, Implies };

    Op op = Op::Atom;
    int predicate = -1;           ///< Atom only
    std::vector<Term> args;       ///< Atom only
    std::vector<Expr> children;   ///< Not: 1, binary ops: 2
};

struct Formula {
    double weight = 0.0;  ///< +infinity marks a hard formula
    Expr clause;
    std::vector<std::string> variables;  ///< in order of first appearance

    bool hard() const { return weight == std::numeric_limits<double>::infinity(); }
};

struct KnowledgeBase {
    std::vector<PredicateDecl> predicates;
    std::vector<Formula> formulas;

    /// -1 if unknown.
    int predicate_index(std::string_view name) const;
    /// Adds a predicate; throws Format on a duplicate name or an arity outside [1, 4].
    int declare(const std::string& name, int arity, PredicateKind kind);
    /// Parses `weight | clause` and appends it; weight `inf` marks a hard formula.
    void add_formula(std::string_view line);
};

/// Parses a clause over the knowledge base's predicates. Operators: `!`/`~`/`¬` (not),
/// `^`/`&`/`∧` (and), `||`/`∨` (or), `->`/`=>`/`→` (implies, right-associative).
Expr parse_clause(std::string_view text, const KnowledgeBase& kb);

/// Parses a knowledge-base file: `evidence Name(x,y)` / `query Name(x)` declaration lines and
/// `weight | clause` formula lines; `#` starts a comment. Predicates already in `base` are
/// available without declaration.
KnowledgeBase parse_kb(std::string_view text, const KnowledgeBase& base);

struct KbWeights {
    double w5 = 2.0;
    double w6 = 2.0;
    double w7 = 2.0;
    double w8 = 2.0;
};

/// Declarations Room/Corr/Hall (unary evidence), Adj/Irr (binary evidence), SaLe (binary query).
KnowledgeBase same_length_predicates();

/// The eight same-length formulas: four hard rules followed by four soft ones.
KnowledgeBase kb_same_length(const KbWeights& weights = {});

/// Closed-world truth assignment over evidence ground atoms; unset atoms are false.
class Evidence {
public:
    Evidence(const KnowledgeBase& kb, int constants);

    void set(int predicate, const std::vector<int>& args, bool value = true);
    void set(std::string_view predicate, const std::vector<int>& args, bool value = true);
    bool value(int predicate, const std::vector<int>& args) const;

    int constants() const { return constants_; }

private:
    std::size_t offset(int predicate, const std::vector<int>& args) const;

    const KnowledgeBase* kb_;
    int constants_;
    std::vector<std::vector<std::uint8_t>> truth_;
};

struct GroundAtom {
    int predicate = 0;
    std::vector<int> args;

    friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

/// Ground clause after evidence folding; leaves reference free atoms by index.
struct GroundNode {
    Expr::Op op = Expr::Op::Atom;
    int atom = -1;
    int left = -1;
    int right = -1;
};

struct GroundFormula {
    double weight = 0.0;
    int formula = 0;  ///< index into the knowledge base
    std::vector<GroundNode> nodes;  ///< root is the last node
    std::vector<int> atoms;  ///< distinct free atoms referenced, ascending

    bool hard() const { return weight == std::numeric_limits<double>::infinity(); }
    bool evaluate(const std::vector<std::uint8_t>& truth) const;
};

struct Component {
    std::vector<int> atoms;     ///< ascending
    std::vector<int> formulas;  ///< indices into GroundNetwork::formulas
};

struct GroundNetwork {
    int constants = 0;
    std::vector<GroundAtom> atoms;  ///< every grounding of every query predicate
    std::vector<GroundFormula> formulas;
    std::vector<Component> components;  ///< ordered by smallest atom index

    /// -1 if the atom is not a query grounding.
    int atom_index(const GroundAtom& atom) const;

    // Offsets of each query predicate's block inside `atoms`.
    std::vector<int> predicate_offset;
};

/// One ground formula per variable binding. Formulas decided by the evidence alone are
/// dropped; a hard formula decided false raises InconsistentEvidence.
GroundNetwork ground(const KnowledgeBase& kb, const std::vector<std::string>& constants, const Evidence& evidence);

struct QueryResult {
    std::vector<double> marginals;  ///< parallel to GroundNetwork::atoms
    double log_partition = 0.0;     ///< sum over components

    double probability(const GroundNetwork& net, const GroundAtom& atom) const;
};

/// Exact per-component enumeration. Throws Capacity for a component above `max_enum_atoms`
/// free atoms and InconsistentEvidence if a component has no state satisfying its hard rules.
QueryResult infer_exact(const GroundNetwork& network, int max_enum_atoms = 20);

}  // namespace semloft::mln

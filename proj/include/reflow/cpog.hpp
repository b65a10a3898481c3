#pragma once

#include "reflow/bdd.hpp"
#include "reflow/errors.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reflow::cpog {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Algebraic expression denoting a family of acyclic graphs of actions.
class Expr {
public:
    enum class Kind { Empty, Action, Parallel, Sequence, Cond };

    static ExprPtr empty();
    static ExprPtr action(std::string name);
    static ExprPtr par(ExprPtr lhs, ExprPtr rhs);
    static ExprPtr seq(ExprPtr lhs, ExprPtr rhs);
    static ExprPtr cond(bdd::Bdd guard, ExprPtr body);

    Kind kind;
    std::string name;   // Action
    bdd::Bdd guard;     // Cond
    ExprPtr lhs, rhs;   // Parallel/Sequence; Cond body in lhs

    std::set<std::string> actions() const;

protected:
    Expr() = default;
};

/// Which vertex controls each branching variable. At most one controlling
/// vertex per variable.
class ControlMap {
public:
    void set(const std::string& variable, const std::string& action);
    std::optional<std::string> controller_of(const std::string& variable) const;
    std::vector<std::string> variables_of(const std::string& action) const;
    /// The single variable controlled by `action`; errors unless exactly one.
    std::string unique_variable_of(const std::string& action) const;
    const std::map<std::string, std::string>& entries() const { return var_to_action_; }

private:
    std::map<std::string, std::string> var_to_action_;
};

/// Branching shorthand: a -yes-> p is a -> [a_OK]p, a -no-> p is a -> [!a_OK]p,
/// where a_OK is the variable controlled by a.
ExprPtr yes_arrow(const bdd::Context& ctx, const ControlMap& ctrl,
                  const std::string& action, ExprPtr then);
ExprPtr no_arrow(const bdd::Context& ctx, const ControlMap& ctrl,
                 const std::string& action, ExprPtr then);

/// Vertex/arc condition table. Conditions equivalent to 0 are never stored,
/// and every stored arc condition implies both endpoint conditions.
struct CanonicalForm {
    std::map<std::string, bdd::Bdd> vertices;
    std::map<std::pair<std::string, std::string>, bdd::Bdd> arcs;

    bdd::Bdd vertex(const std::string& a, const bdd::Context& ctx) const;
    bdd::Bdd arc(const std::string& a, const std::string& b, const bdd::Context& ctx) const;

    /// Deterministic listing: vertices sorted by name, then arcs sorted by
    /// (source, target), one item per line.
    std::string to_listing() const;
};

CanonicalForm canonicalize(const ExprPtr& e, const bdd::Context& ctx);
CanonicalForm transitive_close(const CanonicalForm& cf, const bdd::Context& ctx);
CanonicalForm transitive_reduce(const CanonicalForm& cf, const bdd::Context& ctx);

bool equivalent(const ExprPtr& p, const ExprPtr& q, const bdd::Context& ctx);

/// First difference between two expressions' canonical forms, for reporting:
/// either a vertex name or an arc pair, with both conditions rendered.
struct Difference {
    std::string where;
    std::string left;
    std::string right;
};
std::optional<Difference> first_difference(const ExprPtr& p, const ExprPtr& q,
                                           const bdd::Context& ctx);

/// Expression DSL:
///   eps | IDENT | p + q | p -> q | [cond] p | a -yes-> p | a -no-> p
/// with (`+` loosest, then arrows, then `->`, `[cond]` tightest) and
/// identifiers resolving to earlier `let` bindings before the alphabet.
ExprPtr parse_expr(std::string_view text, const bdd::Context& ctx, const ControlMap& ctrl,
                   const std::set<std::string>& alphabet,
                   const std::map<std::string, ExprPtr>& bindings);

} // namespace reflow::cpog

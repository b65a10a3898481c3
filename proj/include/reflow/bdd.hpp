#pragma once

#include "reflow/errors.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reflow::bdd {

/// Total assignment of truth values to (a subset of) the variable universe.
using Assignment = std::map<std::string, bool>;

class Context;

/// A Boolean condition in canonical (reduced ordered BDD) form.
///
/// Values are immutable and cheap to copy; two conditions over the same
/// Context denote the same Boolean function iff they compare equal.
class Bdd {
public:
    Bdd() : ctx_(nullptr), id_(0) {}

    bool is_false() const { return id_ == 0; }
    bool is_true() const { return id_ == 1; }
    bool is_const() const { return id_ <= 1; }

    Bdd operator&(const Bdd& o) const;
    Bdd operator|(const Bdd& o) const;
    Bdd operator!() const;
    Bdd operator^(const Bdd& o) const;
    Bdd implies(const Bdd& o) const { return (!*this) | o; }

    /// Cofactor: substitute a constant for one variable.
    Bdd restrict_var(const std::string& name, bool value) const;

    bool operator==(const Bdd& o) const { return ctx_ == o.ctx_ && id_ == o.id_; }
    bool operator!=(const Bdd& o) const { return !(*this == o); }
    bool operator<(const Bdd& o) const { return id_ < o.id_; }

    /// Truth value under a total assignment; throws NameError when a
    /// variable of the condition is unassigned.
    bool eval(const Assignment& a) const;

    /// Variables the canonical form actually depends on, in context order.
    std::vector<std::string> support() const;

    /// Deterministic textual rendering as a disjunction of cubes.
    std::string to_string() const;

    const Context* context() const { return ctx_; }
    std::uint32_t raw_id() const { return id_; }

private:
    friend class Context;
    Bdd(const Context* ctx, std::uint32_t id) : ctx_(ctx), id_(id) {}

    const Context* ctx_;
    std::uint32_t id_;
};

inline bool equiv(const Bdd& a, const Bdd& b) { return a == b; }
inline bool is_false(const Bdd& e) { return e.is_false(); }
inline bool is_tautology(const Bdd& e) { return e.is_true(); }

/// Analysis context: a declared variable universe with a fixed global
/// (lexicographic) order, plus the node store for conditions over it.
///
/// Construction is not thread safe; the Bdd values it hands out are
/// immutable and may be shared freely once built.
class Context {
public:
    explicit Context(std::vector<std::string> variables);

    const std::vector<std::string>& variables() const { return vars_; }
    bool has_variable(const std::string& name) const;

    Bdd constant(bool v) const { return Bdd(this, v ? 1u : 0u); }
    Bdd var(const std::string& name) const;

    /// Condition DSL: `1`, `0`, identifiers, `!e`, `e & e`, `e | e`, parens.
    Bdd parse(std::string_view text) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    friend class Bdd;

    struct Node {
        std::uint32_t var;
        std::uint32_t lo;
        std::uint32_t hi;
    };

    std::uint32_t mk(std::uint32_t var, std::uint32_t lo, std::uint32_t hi) const;
    std::uint32_t apply_and(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t apply_or(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t apply_xor(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t apply_not(std::uint32_t a) const;
    std::uint32_t apply_restrict(std::uint32_t a, std::uint32_t var, bool value) const;

    std::vector<std::string> vars_;
    std::map<std::string, std::uint32_t> var_index_;

    mutable std::vector<Node> nodes_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> unique_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> and_cache_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> or_cache_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> xor_cache_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> not_cache_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> restrict_cache_;
};

} // namespace reflow::bdd

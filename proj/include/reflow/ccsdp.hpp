#pragma once

#include "reflow/errors.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reflow::ccsdp {

using TermId = std::uint32_t;
using StateId = std::uint32_t;

/// Transition label. Creation and deletion labels are represented
/// symbolically by the (normalized) denominator they match; two such labels
/// correspond when their denominators are strongly of-bisimilar.
struct Label {
    enum class Kind { Input, Output, Tau, Create, Delete };
    Kind kind = Kind::Tau;
    std::string name;  // Input/Output port name
    StateId denom = 0; // Create/Delete denominator state

    bool operator==(const Label& o) const {
        return kind == o.kind && name == o.name && denom == o.denom;
    }
    bool operator<(const Label& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (name != o.name) return name < o.name;
        return denom < o.denom;
    }
};

struct Step {
    Label label;
    StateId target;
};

struct WeakWitness {
    /// A visible sequence one side can weakly perform and the other cannot;
    /// side 0 = left performs it, 1 = right.
    std::vector<std::string> sequence;
    int side = 0;
};

struct WeakVerdict {
    bool bisimilar = false;
    /// On failure: all distinguishing sequences found at the shallowest
    /// depth, searched first over the systems' free ports (those with no
    /// internal communication partner), then over all visible ports.
    std::vector<WeakWitness> witnesses;

    const WeakWitness* primary() const { return witnesses.empty() ? nullptr : &witnesses[0]; }
};

struct Bounds {
    std::size_t max_states = 20000;
    std::size_t max_trace_depth = 8;
    std::size_t max_denom_depth = 16;
};

/// A process system: definitions, hash-consed terms, and the analyses over
/// them. All term and state ids are owned by one System instance.
class System {
public:
    System();

    // --- term construction -------------------------------------------------
    TermId nil() const { return 0; }
    TermId prefix(Label::Kind kind, const std::string& name, TermId cont);
    TermId tau_prefix(TermId cont) { return prefix(Label::Kind::Tau, "", cont); }
    /// Merges the guarded branches of the operands; operands must be sums.
    TermId sum(const std::vector<TermId>& operands);
    TermId par(const std::vector<TermId>& parts);
    TermId fraction(TermId num, TermId den);
    TermId constant(const std::string& name, const std::vector<std::string>& args = {});

    void define(const std::string& name, const std::vector<std::string>& params, TermId body);
    bool defined(const std::string& name) const;
    /// Declares the process-name headers so bodies may reference them
    /// before their own definition is parsed.
    void declare(const std::string& name);

    void set_order_ids(std::vector<std::string> ids);
    const std::vector<std::string>& order_ids() const;

    /// Process DSL: 0, a.P, 'a.P, tau.P, P + Q, P | Q, [N / D],
    /// Name or Name<a,b>, sum o in O { ... }.
    TermId parse(std::string_view text);

    // --- semantics ---------------------------------------------------------
    StateId state_of(TermId t);
    const std::vector<TermId>& components(StateId s) const;

    /// All transitions of a state per the calculus; deletion-labelled
    /// transitions are enumerated only when include_deletes is set.
    std::vector<Step> transitions(StateId s, bool include_deletes = false);

    /// States reachable by internal steps alone (including s itself).
    const std::vector<StateId>& tau_closure(StateId s);

    bool is_positive(TermId t);

    /// Maximum depth of fractional recursion over the term and all of its
    /// successors; throws BoundError when the successor space exceeds the
    /// bound and Error when the depth is not well defined.
    unsigned sfdrdepth(TermId t);
    unsigned fdrdepth(TermId t);

    bool strong_of_bisim(TermId a, TermId b);
    bool strong_of_bisim_states(StateId a, StateId b);

    WeakVerdict weak_obs_bisim(TermId a, TermId b);
    WeakVerdict weak_obs_bisim_states(StateId a, StateId b);

    /// Whether the term can weakly perform the visible sequence (entries are
    /// port names, with a leading apostrophe for outputs).
    bool weakly_performs(TermId t, const std::vector<std::string>& sequence);

    // --- rendering ----------------------------------------------------------
    std::string term_to_string(TermId t) const;
    std::string state_to_string(StateId s) const;
    std::string label_to_string(const Label& l) const;

    Bounds bounds;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

} // namespace reflow::ccsdp

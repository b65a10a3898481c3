#pragma once

#include "reflow/cpog.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace reflow::cpog {

/// A state of a CPOG run: the set of fired actions plus the current
/// variable assignment. Encoded as bitmasks over the orderings below.
struct LtsState {
    std::uint32_t history = 0;
    std::uint32_t psi = 0;

    bool operator==(const LtsState& o) const { return history == o.history && psi == o.psi; }
    bool operator<(const LtsState& o) const {
        return history != o.history ? history < o.history : psi < o.psi;
    }
};

struct LtsTransition {
    std::uint32_t from;
    std::vector<std::uint32_t> label; // sorted vertex indices; singleton unless set-steps
    std::uint32_t to;
};

struct Lts {
    std::vector<std::string> vertex_names; // index order for history bits
    std::vector<std::string> var_names;    // index order for psi bits
    std::vector<LtsState> states;          // index 0 is the initial state
    std::vector<LtsTransition> transitions;
    std::vector<std::uint32_t> deadlocked; // states with enabled-condition vertices, none fireable

    bool contains_state(const std::set<std::string>& history, const bdd::Assignment& psi) const;
    std::string state_to_string(std::uint32_t id) const;
    std::string to_text() const;
    std::string to_dot() const;
};

struct LtsBounds {
    std::size_t max_vertices = 16;
    std::size_t max_states = 1u << 20;
};

/// Active predecessors of `v` that must have fired before it.
std::set<std::string> preset(const std::string& v, const bdd::Assignment& psi,
                             const CanonicalForm& cf, const bdd::Context& ctx);

/// All single-action successors of a state given as (history, assignment).
std::vector<std::pair<std::string, std::pair<std::set<std::string>, bdd::Assignment>>>
step_single(const std::set<std::string>& history, const bdd::Assignment& psi,
            const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx);

/// All targets of firing the whole set W simultaneously (empty when W is
/// not enabled). Multiple targets arise when W controls variables.
std::vector<std::pair<std::set<std::string>, bdd::Assignment>>
step_set(const std::set<std::string>& history, const bdd::Assignment& psi,
         const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx,
         const std::set<std::string>& w);

/// Full reachable LTS from ({}, all-zero). With true_concurrency, labels
/// range over every simultaneously enabled action set.
Lts reachable(const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx,
              bool true_concurrency = false, const LtsBounds& bounds = {});

} // namespace reflow::cpog

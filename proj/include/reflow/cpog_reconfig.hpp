#pragma once

#include "reflow/cpog.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reflow::cpog {

/// A set of actions that have occurred.
using History = std::set<std::string>;

/// Reconfiguration setup: action r flips the flag variable, guarding the
/// switch from one configuration to the other:
///   combined = r + [!flag] from_cfg + [flag] to_cfg
struct ReconfigSpec {
    std::string action;
    std::string flag;
    ExprPtr from_cfg;
    ExprPtr to_cfg;
    ExprPtr combined;
};

ReconfigSpec make_reconfig_spec(const bdd::Context& ctx, ControlMap& ctrl,
                                const std::string& action, const std::string& flag,
                                ExprPtr from_cfg, ExprPtr to_cfg);

struct ReconfigBounds {
    std::size_t max_actions = 16;
};

/// Condition under which all actions of H could have occurred without
/// violating S: the conjunction of the member conditions with the negated
/// conditions of every dependency from a non-member into a member, over the
/// transitively closed canonical form of S.
bdd::Bdd consistency(const History& h, const ExprPtr& s, const bdd::Context& ctx);
bdd::Bdd consistency(const History& h, const CanonicalForm& closed_cf, const bdd::Context& ctx);

bool compatible(const History& h, const ExprPtr& s1, const ExprPtr& s2,
                const bdd::Context& ctx);

/// Histories over the combined alphabet (minus r) that stay consistent when
/// r is added, with the flag variable pinned to r's membership.
std::set<History> safe_histories(const ReconfigSpec& spec, const bdd::Context& ctx,
                                 const ReconfigBounds& bounds = {});

/// Condition under which H can occur and the switch can still fire: the
/// conjunction of the history's consistency before the switch action and
/// with it added, the flag pinned to the action's membership each time.
bdd::Bdd reconfiguration_condition(const ReconfigSpec& spec, const History& h,
                                   const bdd::Context& ctx);

struct GuidelineResult {
    bool holds = false;
    std::optional<History> counterexample;
};

/// Checks that every consistent history avoiding the forbidden actions is a
/// safe reconfiguration history.
GuidelineResult check_forbidden_guideline(const ReconfigSpec& spec,
                                          const std::set<std::string>& forbidden,
                                          const bdd::Context& ctx,
                                          const ReconfigBounds& bounds = {});

/// Enforces the guideline structurally: combined + r -> (f1 + f2 + ...).
ExprPtr make_safe(const ReconfigSpec& spec, const std::set<std::string>& forbidden);

/// All histories with a satisfiable consistency condition, smallest first.
std::vector<History> enumerate_consistent(const ExprPtr& s, const bdd::Context& ctx,
                                          const ReconfigBounds& bounds = {});

} // namespace reflow::cpog

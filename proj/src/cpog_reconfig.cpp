#include "reflow/cpog_reconfig.hpp"

#include <algorithm>

namespace reflow::cpog {

ReconfigSpec make_reconfig_spec(const bdd::Context& ctx, ControlMap& ctrl,
                                const std::string& action, const std::string& flag,
                                ExprPtr from_cfg, ExprPtr to_cfg) {
    ctrl.set(flag, action);
    bdd::Bdd f = ctx.var(flag);
    ExprPtr combined = Expr::par(
        Expr::par(Expr::action(action), Expr::cond(!f, from_cfg)),
        Expr::cond(f, to_cfg));
    return ReconfigSpec{action, flag, std::move(from_cfg), std::move(to_cfg), combined};
}

bdd::Bdd consistency(const History& h, const CanonicalForm& closed_cf,
                     const bdd::Context& ctx) {
    bdd::Bdd c = ctx.constant(true);
    for (const auto& a : h)
        c = c & closed_cf.vertex(a, ctx);
    for (const auto& [ab, f] : closed_cf.arcs) {
        if (!h.count(ab.first) && h.count(ab.second))
            c = c & !f;
    }
    return c;
}

bdd::Bdd consistency(const History& h, const ExprPtr& s, const bdd::Context& ctx) {
    return consistency(h, transitive_close(canonicalize(s, ctx), ctx), ctx);
}

bool compatible(const History& h, const ExprPtr& s1, const ExprPtr& s2,
                const bdd::Context& ctx) {
    return !(consistency(h, s1, ctx) & consistency(h, s2, ctx)).is_false();
}

namespace {

std::vector<std::string> spec_alphabet(const ReconfigSpec& spec, const bdd::Context& ctx,
                                       const ReconfigBounds& bounds) {
    CanonicalForm cf = canonicalize(spec.combined, ctx);
    std::vector<std::string> actions;
    for (const auto& [a, f] : cf.vertices)
        if (a != spec.action)
            actions.push_back(a);
    if (actions.size() + 1 > bounds.max_actions)
        throw BoundError("alphabet of " + std::to_string(actions.size() + 1) +
                         " actions exceeds the history enumeration bound");
    return actions;
}

History subset_of(std::uint32_t bits, const std::vector<std::string>& actions) {
    History h;
    for (std::size_t i = 0; i < actions.size(); ++i)
        if ((bits >> i) & 1u)
            h.insert(actions[i]);
    return h;
}

/// Consistency of a history in the presence of the reconfiguration flag:
/// the flag is 0 before r has occurred and 1 afterwards.
bdd::Bdd flagged_consistency(const History& h, const ReconfigSpec& spec,
                             const CanonicalForm& closed_cf, const bdd::Context& ctx) {
    return consistency(h, closed_cf, ctx).restrict_var(spec.flag, h.count(spec.action) != 0);
}

} // namespace

bdd::Bdd reconfiguration_condition(const ReconfigSpec& spec, const History& h,
                                   const bdd::Context& ctx) {
    CanonicalForm closed = transitive_close(canonicalize(spec.combined, ctx), ctx);
    History after = h;
    after.insert(spec.action);
    return flagged_consistency(h, spec, closed, ctx) &
           flagged_consistency(after, spec, closed, ctx);
}

std::set<History> safe_histories(const ReconfigSpec& spec, const bdd::Context& ctx,
                                 const ReconfigBounds& bounds) {
    auto actions = spec_alphabet(spec, ctx, bounds);
    CanonicalForm closed = transitive_close(canonicalize(spec.combined, ctx), ctx);
    std::set<History> out;
    for (std::uint32_t bits = 0; bits < (1u << actions.size()); ++bits) {
        History h = subset_of(bits, actions);
        bdd::Bdd before = flagged_consistency(h, spec, closed, ctx);
        if (before.is_false())
            continue;
        History after = h;
        after.insert(spec.action);
        bdd::Bdd with_r = flagged_consistency(after, spec, closed, ctx);
        if (!(before & with_r).is_false())
            out.insert(std::move(h));
    }
    return out;
}

GuidelineResult check_forbidden_guideline(const ReconfigSpec& spec,
                                          const std::set<std::string>& forbidden,
                                          const bdd::Context& ctx,
                                          const ReconfigBounds& bounds) {
    auto actions = spec_alphabet(spec, ctx, bounds);
    CanonicalForm closed = transitive_close(canonicalize(spec.combined, ctx), ctx);
    std::set<History> safe = safe_histories(spec, ctx, bounds);

    // Smallest histories first so a reported counterexample is minimal.
    std::vector<History> candidates;
    for (std::uint32_t bits = 0; bits < (1u << actions.size()); ++bits)
        candidates.push_back(subset_of(bits, actions));
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const History& a, const History& b) { return a.size() < b.size(); });

    for (const auto& h : candidates) {
        bool disjoint = std::none_of(h.begin(), h.end(),
                                     [&](const std::string& a) { return forbidden.count(a); });
        if (!disjoint)
            continue;
        if (flagged_consistency(h, spec, closed, ctx).is_false())
            continue;
        if (!safe.count(h))
            return GuidelineResult{false, h};
    }
    return GuidelineResult{true, std::nullopt};
}

ExprPtr make_safe(const ReconfigSpec& spec, const std::set<std::string>& forbidden) {
    if (forbidden.empty())
        return spec.combined;
    ExprPtr sum = Expr::empty();
    bool first = true;
    for (const auto& a : forbidden) {
        ExprPtr act = Expr::action(a);
        sum = first ? act : Expr::par(sum, act);
        first = false;
    }
    return Expr::par(spec.combined, Expr::seq(Expr::action(spec.action), sum));
}

std::vector<History> enumerate_consistent(const ExprPtr& s, const bdd::Context& ctx,
                                          const ReconfigBounds& bounds) {
    CanonicalForm cf = canonicalize(s, ctx);
    std::vector<std::string> actions;
    for (const auto& [a, f] : cf.vertices)
        actions.push_back(a);
    if (actions.size() > bounds.max_actions)
        throw BoundError("alphabet of " + std::to_string(actions.size()) +
                         " actions exceeds the history enumeration bound");
    CanonicalForm closed = transitive_close(cf, ctx);
    std::vector<History> out;
    for (std::uint32_t bits = 0; bits < (1u << actions.size()); ++bits) {
        History h = subset_of(bits, actions);
        if (!consistency(h, closed, ctx).is_false())
            out.push_back(std::move(h));
    }
    std::stable_sort(out.begin(), out.end(), [](const History& a, const History& b) {
        if (a.size() != b.size())
            return a.size() < b.size();
        return a < b;
    });
    return out;
}

} // namespace reflow::cpog

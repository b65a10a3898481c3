#include "reflow/cpog_lts.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>

using namespace reflow;
using cpog::Expr;
using cpog::ExprPtr;
using testutil::Rng;

namespace {

struct EarlyLate {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    ExprPtr graph;

    /// a -> b -> (c when x, d when !x), with x set by the given controller.
    EarlyLate(const std::string& controller) {
        ctrl.set("x", controller);
        graph = Expr::seq(
            Expr::seq(Expr::action("a"), Expr::action("b")),
            Expr::par(Expr::cond(ctx.var("x"), Expr::action("c")),
                      Expr::cond(!ctx.var("x"), Expr::action("d"))));
    }

    cpog::Lts lts(bool true_conc = false) const {
        return cpog::reachable(cpog::canonicalize(graph, ctx), ctrl, ctx, true_conc);
    }
};

std::vector<std::string> labels_from(const cpog::Lts& lts, std::uint32_t state) {
    std::vector<std::string> out;
    for (const auto& t : lts.transitions)
        if (t.from == state)
            for (auto v : t.label)
                out.push_back(lts.vertex_names[v]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

TEST_CASE("presets select active predecessors") {
    bdd::Context ctx{{"x1", "x2", "y", "r_done"}};
    cpog::ControlMap ctrl;
    ctrl.set("x1", "InventoryCheck");
    ctrl.set("y", "CreditCheck");
    std::set<std::string> alphabet{"Start",  "OrderReceipt", "InventoryCheck", "CreditCheck",
                                   "Reject", "Shipping",     "Billing",        "Archiving",
                                   "Confirmation", "End"};
    auto c1 = cpog::parse_expr(
        "Start -> OrderReceipt -> ("
        " InventoryCheck -no-> Reject -> End"
        " + InventoryCheck -yes-> ("
        "   CreditCheck -no-> Reject -> End"
        "   + CreditCheck -yes-> Shipping -> Billing -> Archiving -> Confirmation -> End))",
        ctx, ctrl, alphabet, {});
    auto cf = cpog::transitive_reduce(cpog::canonicalize(c1, ctx), ctx);

    bdd::Assignment zero{{"x1", false}, {"x2", false}, {"y", false}, {"r_done", false}};
    CHECK(cpog::preset("OrderReceipt", zero, cf, ctx) == std::set<std::string>{"Start"});
    CHECK(cpog::preset("Start", zero, cf, ctx).empty());
    CHECK(cpog::preset("Reject", zero, cf, ctx) == std::set<std::string>{"InventoryCheck"});
    bdd::Assignment ok = zero;
    ok["x1"] = true;
    CHECK(cpog::preset("Reject", ok, cf, ctx) == std::set<std::string>{"CreditCheck"});
    CHECK_THROWS_AS(cpog::preset("Nope", zero, cf, ctx), NameError);
}

TEST_CASE("early choice branches at the first action") {
    EarlyLate early("a");
    auto lts = early.lts();
    // two successors for the initial action, one per variable value
    int initial_a = 0;
    for (const auto& t : lts.transitions)
        if (t.from == 0)
            ++initial_a;
    CHECK(initial_a == 2);
    CHECK(labels_from(lts, 0) == std::vector<std::string>{"a"});
    CHECK(lts.deadlocked.empty());
    // every run terminates with three actions fired
    for (const auto& s : lts.states) {
        int fired = 0;
        for (std::size_t i = 0; i < lts.vertex_names.size(); ++i)
            fired += (s.history >> i) & 1;
        CHECK(fired <= 3);
    }
}

TEST_CASE("late choice defers branching and is not isomorphic to early choice") {
    EarlyLate early("a");
    EarlyLate late("b");
    auto le = early.lts();
    auto ll = late.lts();
    // late choice: a single successor from the initial state
    int initial = 0;
    for (const auto& t : ll.transitions)
        if (t.from == 0)
            ++initial;
    CHECK(initial == 1);
    // the two transition systems differ in shape
    CHECK(le.states.size() != ll.states.size());
}

TEST_CASE("set-steps fire simultaneously enabled actions at once") {
    // a -> b -> (c + d when x, d when !x), choice made by b
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    ctrl.set("x", "b");
    auto mixed = Expr::seq(
        Expr::seq(Expr::action("a"), Expr::action("b")),
        Expr::par(Expr::cond(ctx.var("x"), Expr::par(Expr::action("c"), Expr::action("d"))),
                  Expr::cond(!ctx.var("x"), Expr::action("d"))));
    auto cf = cpog::canonicalize(mixed, ctx);
    auto lts = cpog::reachable(cf, ctrl, ctx, true);

    bool saw_cd = false;
    for (const auto& t : lts.transitions) {
        std::vector<std::string> names;
        for (auto v : t.label)
            names.push_back(lts.vertex_names[v]);
        std::sort(names.begin(), names.end());
        if (names == std::vector<std::string>{"c", "d"})
            saw_cd = true;
    }
    CHECK(saw_cd);

    // singleton sets reduce exactly to the single-action rule
    auto s1 = cpog::step_single({"a"}, {{"x", true}}, cf, ctrl, ctx);
    auto s2 = cpog::step_set({"a"}, {{"x", true}}, cf, ctrl, ctx, {"b"});
    REQUIRE(s1.size() == s2.size());
    for (const auto& [label, st] : s1) {
        CHECK(label == "b");
        CHECK(std::find(s2.begin(), s2.end(), st) != s2.end());
    }
    // a non-enabled set yields nothing
    CHECK(cpog::step_set({}, {{"x", false}}, cf, ctrl, ctx, {"c"}).empty());
}

TEST_CASE("set-step soundness: every linearization reaches the same state") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    Rng rng(0x5e75);
    // random forests of up to 5 actions with unconditional arcs
    const std::vector<std::string> names{"a", "b", "c", "d", "e"};
    for (int round = 0; round < 60; ++round) {
        cpog::CanonicalForm cf;
        for (const auto& n : names)
            cf.vertices.emplace(n, ctx.constant(true));
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j)
                if (rng.below(4) == 0)
                    cf.arcs.emplace(std::make_pair(names[i], names[j]), ctx.constant(true));

        auto single = cpog::reachable(cf, ctrl, ctx, false);
        // take any state with >= 2 enabled actions and try set steps of size <= 3
        for (std::uint32_t sid = 0; sid < single.states.size(); ++sid) {
            std::set<std::string> hist;
            for (std::size_t i = 0; i < single.vertex_names.size(); ++i)
                if ((single.states[sid].history >> i) & 1u)
                    hist.insert(single.vertex_names[i]);
            auto en = labels_from(single, sid);
            if (en.size() < 2)
                continue;
            // every enabled set of size up to 3, against all linearizations
            std::vector<std::set<std::string>> sets;
            for (std::size_t i = 0; i < en.size(); ++i)
                for (std::size_t j = i + 1; j < en.size(); ++j) {
                    sets.push_back({en[i], en[j]});
                    for (std::size_t k = j + 1; k < en.size(); ++k)
                        sets.push_back({en[i], en[j], en[k]});
                }
            for (const auto& w : sets) {
                auto res = cpog::step_set(hist, {{"x", false}}, cf, ctrl, ctx, w);
                REQUIRE(res.size() == 1);
                std::function<void(const std::set<std::string>&, const std::set<std::string>&)>
                    walk = [&](const std::set<std::string>& done,
                               const std::set<std::string>& rest) {
                        if (rest.empty())
                            return;
                        for (auto first : rest) {
                            std::set<std::string> mid = done;
                            auto fired = cpog::step_set(mid, {{"x", false}}, cf, ctrl, ctx,
                                                        {first});
                            REQUIRE(fired.size() == 1);
                            std::set<std::string> rest2 = rest;
                            rest2.erase(first);
                            if (rest2.empty()) {
                                REQUIRE(fired[0] == res[0]);
                            } else {
                                walk(fired[0].first, rest2);
                            }
                        }
                    };
                walk(hist, w);
            }
        }
    }
}

TEST_CASE("billing and shipping fire as one set-step in the target configuration") {
    bdd::Context ctx{{"x1", "x2", "y"}};
    cpog::ControlMap ctrl;
    ctrl.set("x1", "InventoryCheck");
    ctrl.set("x2", "SupplierCheck");
    ctrl.set("y", "CreditCheck");
    std::set<std::string> alphabet{"Start",  "OrderReceipt", "InventoryCheck",
                                   "CreditCheck", "SupplierCheck", "Reject",
                                   "Shipping", "Billing", "Archiving", "End"};
    std::map<std::string, ExprPtr> defs;
    defs["cc"] = cpog::parse_expr(
        "CreditCheck -no-> Reject -> End"
        " + CreditCheck -yes-> (Billing + Shipping) -> Archiving -> End",
        ctx, ctrl, alphabet, defs);
    auto c2 = cpog::parse_expr("Start -> OrderReceipt -> ("
                               " InventoryCheck -yes-> cc"
                               " + InventoryCheck -no-> ("
                               "   SupplierCheck -yes-> cc"
                               "   + SupplierCheck -no-> Reject -> End))",
                               ctx, ctrl, alphabet, defs);
    auto cf = cpog::transitive_reduce(cpog::canonicalize(c2, ctx), ctx);
    std::set<std::string> hist{"Start", "OrderReceipt", "InventoryCheck", "CreditCheck"};
    bdd::Assignment psi{{"x1", true}, {"x2", false}, {"y", true}};
    auto res = cpog::step_set(hist, psi, cf, ctrl, ctx, {"Billing", "Shipping"});
    REQUIRE(res.size() == 1);
    CHECK(res[0].first.count("Billing") == 1);
    CHECK(res[0].first.count("Shipping") == 1);
}

TEST_CASE("reconfigurable pair reaches the inconsistent state unless serialized") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    ctrl.set("x", "r");
    auto P = Expr::seq(Expr::action("a"), Expr::par(Expr::action("b"), Expr::action("c")));
    auto Q = Expr::seq(Expr::seq(Expr::action("a"), Expr::action("b")), Expr::action("c"));
    auto S = Expr::par(Expr::par(Expr::action("r"), Expr::cond(!ctx.var("x"), P)),
                       Expr::cond(ctx.var("x"), Q));

    auto lts = cpog::reachable(cpog::canonicalize(S, ctx), ctrl, ctx);
    CHECK(lts.contains_state({"a", "c", "r"}, {{"x", true}}));

    // the switch action fires concurrently with the computation
    CHECK(lts.contains_state({"r"}, {{"x", true}}));
    CHECK(lts.contains_state({"a", "r"}, {{"x", false}}));

    // the specific interfering edge: firing the switch from ({a,c}, 0)
    // can set the variable
    bool edge = false;
    for (const auto& t : lts.transitions) {
        if (t.label.size() != 1 || lts.vertex_names[t.label[0]] != "r")
            continue;
        const auto& from = lts.states[t.from];
        const auto& to = lts.states[t.to];
        std::set<std::string> h;
        for (std::size_t i = 0; i < lts.vertex_names.size(); ++i)
            if ((from.history >> i) & 1u)
                h.insert(lts.vertex_names[i]);
        if (h == std::set<std::string>{"a", "c"} && from.psi == 0 && to.psi != 0)
            edge = true;
    }
    CHECK(edge);
}

TEST_CASE("empty graph family yields the single-state system") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    auto lts = cpog::reachable(cpog::canonicalize(Expr::empty(), ctx), ctrl, ctx);
    CHECK(lts.states.size() == 1);
    CHECK(lts.transitions.empty());
    CHECK(lts.deadlocked.empty());
}

TEST_CASE("self-dependencies lock the remaining actions") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    auto p = Expr::action("p");
    auto q = Expr::action("q");
    auto r = Expr::action("r");
    auto s = Expr::action("s");
    auto top = Expr::par(Expr::seq(p, q), Expr::seq(p, s));
    auto bottom = Expr::par(Expr::seq(q, r), Expr::seq(s, r));
    auto lts = cpog::reachable(cpog::canonicalize(Expr::seq(top, bottom), ctx), ctrl, ctx);

    // only p can ever occur; the successor state is deadlocked
    CHECK(lts.states.size() == 2);
    REQUIRE(lts.transitions.size() == 1);
    CHECK(lts.vertex_names[lts.transitions[0].label[0]] == "p");
    REQUIRE(lts.deadlocked.size() == 1);
    CHECK(lts.deadlocked[0] == lts.transitions[0].to);
}

TEST_CASE("histories grow monotonically so every run terminates") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    ctrl.set("x", "a");
    Rng rng(0x5e76);
    for (int round = 0; round < 40; ++round) {
        // random small families over four actions
        const std::vector<std::string> names{"a", "b", "c", "d"};
        cpog::CanonicalForm cf;
        for (const auto& n : names)
            if (rng.below(5) != 0)
                cf.vertices.emplace(n, rng.flip() ? ctx.constant(true)
                                                  : (rng.flip() ? ctx.var("x") : !ctx.var("x")));
        for (const auto& [a, fa] : cf.vertices)
            for (const auto& [b, fb] : cf.vertices)
                if (a < b && rng.below(3) == 0 && !(fa & fb).is_false())
                    cf.arcs.emplace(std::make_pair(a, b), fa & fb);
        auto lts = cpog::reachable(cf, ctrl, ctx);
        for (const auto& t : lts.transitions) {
            const auto& from = lts.states[t.from];
            const auto& to = lts.states[t.to];
            REQUIRE((from.history & to.history) == from.history);
            REQUIRE(from.history != to.history);
            // frame condition: untouched variables keep their values
            std::uint32_t changed = from.psi ^ to.psi;
            for (std::size_t i = 0; i < lts.var_names.size(); ++i) {
                if (!((changed >> i) & 1u))
                    continue;
                auto controller = ctrl.controller_of(lts.var_names[i]);
                REQUIRE(controller.has_value());
                bool fired = false;
                for (auto v : t.label)
                    fired |= lts.vertex_names[v] == *controller;
                REQUIRE(fired);
            }
        }
    }
}

TEST_CASE("state-space bounds are enforced") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    cpog::CanonicalForm cf;
    for (int i = 0; i < 20; ++i)
        cf.vertices.emplace("a" + std::to_string(i), ctx.constant(true));
    CHECK_THROWS_AS(cpog::reachable(cf, ctrl, ctx), BoundError);
}

TEST_CASE("deterministic export") {
    bdd::Context ctx{{"x"}};
    cpog::ControlMap ctrl;
    auto e = Expr::seq(Expr::action("a"), Expr::par(Expr::action("b"), Expr::action("c")));
    auto lts1 = cpog::reachable(cpog::canonicalize(e, ctx), ctrl, ctx);
    auto lts2 = cpog::reachable(cpog::canonicalize(e, ctx), ctrl, ctx);
    CHECK(lts1.to_text() == lts2.to_text());
    CHECK(lts1.to_dot().find("digraph") == 0);
}

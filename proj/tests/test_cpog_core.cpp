#include "reflow/cpog.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace reflow;
using cpog::Expr;
using cpog::ExprPtr;
using testutil::Rng;

namespace {

struct Fixture {
    bdd::Context ctx{{"x1", "x2", "y", "r_done"}};
    std::set<std::string> alphabet{"Start",       "OrderReceipt", "InventoryCheck",
                                   "CreditCheck", "SupplierCheck", "Reject",
                                   "Shipping",    "Billing",       "Archiving",
                                   "Confirmation", "End",          "r"};
    cpog::ControlMap ctrl;
    std::map<std::string, ExprPtr> defs;

    Fixture() {
        ctrl.set("x1", "InventoryCheck");
        ctrl.set("x2", "SupplierCheck");
        ctrl.set("y", "CreditCheck");
        ctrl.set("r_done", "r");
    }

    ExprPtr parse(const std::string& text) {
        return cpog::parse_expr(text, ctx, ctrl, alphabet, defs);
    }

    ExprPtr c1() {
        return parse("Start -> OrderReceipt -> ("
                     " InventoryCheck -no-> Reject -> End"
                     " + InventoryCheck -yes-> ("
                     "   CreditCheck -no-> Reject -> End"
                     "   + CreditCheck -yes-> Shipping -> Billing -> Archiving ->"
                     "       Confirmation -> End))");
    }

    ExprPtr c2() {
        defs["cc"] = parse("CreditCheck -no-> Reject -> End"
                           " + CreditCheck -yes-> (Billing + Shipping) -> Archiving -> End");
        return parse("Start -> OrderReceipt -> ("
                     " InventoryCheck -yes-> cc"
                     " + InventoryCheck -no-> ("
                     "   SupplierCheck -yes-> cc"
                     "   + SupplierCheck -no-> Reject -> End))");
    }
};

/// Random expression over a small alphabet and guard set.
ExprPtr random_expr(Rng& rng, const bdd::Context& ctx, int depth) {
    static const std::vector<std::string> actions{"a", "b", "c", "d"};
    if (depth == 0 || rng.below(4) == 0) {
        if (rng.below(8) == 0)
            return Expr::empty();
        return Expr::action(actions[rng.below(actions.size())]);
    }
    switch (rng.below(4)) {
    case 0: return Expr::par(random_expr(rng, ctx, depth - 1), random_expr(rng, ctx, depth - 1));
    case 1: return Expr::seq(random_expr(rng, ctx, depth - 1), random_expr(rng, ctx, depth - 1));
    default: {
        bdd::Bdd g = ctx.var(rng.flip() ? "u" : "v");
        if (rng.flip())
            g = !g;
        return Expr::cond(g, random_expr(rng, ctx, depth - 1));
    }
    }
}

} // namespace

TEST_CASE("branching shorthands expand to guarded sequences") {
    Fixture fx;
    auto& ctx = fx.ctx;

    auto ya = cpog::yes_arrow(ctx, fx.ctrl, "InventoryCheck", Expr::empty());
    CHECK(cpog::equivalent(ya, Expr::action("InventoryCheck"), ctx));

    auto na = cpog::no_arrow(ctx, fx.ctrl, "InventoryCheck", Expr::action("Reject"));
    auto cf = cpog::canonicalize(na, ctx);
    CHECK(cf.vertices.at("InventoryCheck").is_true());
    CHECK(cf.vertices.at("Reject") == !ctx.var("x1"));
    CHECK(cf.arc("InventoryCheck", "Reject", ctx) == !ctx.var("x1"));

    auto branches =
        fx.parse("InventoryCheck -yes-> CreditCheck + InventoryCheck -no-> Reject -> End");
    auto bf = cpog::canonicalize(branches, ctx);
    CHECK(bf.vertices.at("CreditCheck") == ctx.var("x1"));
    CHECK(bf.vertices.at("Reject") == !ctx.var("x1"));
}

TEST_CASE("canonical form of the initial configuration matches the expected table") {
    Fixture fx;
    auto& ctx = fx.ctx;
    bdd::Bdd x = ctx.var("x1"), y = ctx.var("y");
    auto cf = cpog::transitive_reduce(cpog::canonicalize(fx.c1(), ctx), ctx);

    REQUIRE(cf.vertices.size() == 10);
    CHECK(cf.vertices.at("Start").is_true());
    CHECK(cf.vertices.at("OrderReceipt").is_true());
    CHECK(cf.vertices.at("InventoryCheck").is_true());
    CHECK(cf.vertices.at("End").is_true());
    CHECK(cf.vertices.at("CreditCheck") == x);
    CHECK(cf.vertices.at("Reject") == (!x | !y));
    CHECK(cf.vertices.at("Billing") == (x & y));
    CHECK(cf.vertices.at("Shipping") == (x & y));
    CHECK(cf.vertices.at("Archiving") == (x & y));
    CHECK(cf.vertices.at("Confirmation") == (x & y));

    REQUIRE(cf.arcs.size() == 11);
    CHECK(cf.arc("Start", "OrderReceipt", ctx).is_true());
    CHECK(cf.arc("OrderReceipt", "InventoryCheck", ctx).is_true());
    CHECK(cf.arc("InventoryCheck", "CreditCheck", ctx) == x);
    CHECK(cf.arc("InventoryCheck", "Reject", ctx) == !x);
    CHECK(cf.arc("CreditCheck", "Reject", ctx) == (x & !y));
    CHECK(cf.arc("Reject", "End", ctx) == (!x | !y));
    CHECK(cf.arc("CreditCheck", "Shipping", ctx) == (x & y));
    CHECK(cf.arc("Shipping", "Billing", ctx) == (x & y));
    CHECK(cf.arc("Billing", "Archiving", ctx) == (x & y));
    CHECK(cf.arc("Archiving", "Confirmation", ctx) == (x & y));
    CHECK(cf.arc("Confirmation", "End", ctx) == (x & y));
}

TEST_CASE("canonical form of the target configuration matches the expected table") {
    Fixture fx;
    auto& ctx = fx.ctx;
    bdd::Bdd x1 = ctx.var("x1"), x2 = ctx.var("x2"), y = ctx.var("y");
    auto cf = cpog::transitive_reduce(cpog::canonicalize(fx.c2(), ctx), ctx);

    REQUIRE(cf.vertices.size() == 10);
    REQUIRE(cf.arcs.size() == 13);
    CHECK(cf.vertices.at("SupplierCheck") == !x1);
    CHECK(cf.vertices.at("CreditCheck") == (x1 | x2));
    CHECK(cf.vertices.at("Reject") == ((!x1 & !x2) | !y));
    CHECK(cf.vertices.at("Billing") == ((x1 | x2) & y));
    CHECK(cf.vertices.at("Shipping") == ((x1 | x2) & y));
    CHECK(cf.vertices.at("Archiving") == ((x1 | x2) & y));
    CHECK(cf.vertices.count("Confirmation") == 0); // condition 0, vertex absent

    CHECK(cf.arc("InventoryCheck", "SupplierCheck", ctx) == !x1);
    CHECK(cf.arc("InventoryCheck", "CreditCheck", ctx) == x1);
    CHECK(cf.arc("SupplierCheck", "CreditCheck", ctx) == (!x1 & x2));
    CHECK(cf.arc("SupplierCheck", "Reject", ctx) == (!x1 & !x2));
    CHECK(cf.arc("CreditCheck", "Reject", ctx) == ((x1 | x2) & !y));
    CHECK(cf.arc("CreditCheck", "Billing", ctx) == ((x1 | x2) & y));
    CHECK(cf.arc("CreditCheck", "Shipping", ctx) == ((x1 | x2) & y));
    CHECK(cf.arc("Billing", "Archiving", ctx) == ((x1 | x2) & y));
    CHECK(cf.arc("Shipping", "Archiving", ctx) == ((x1 | x2) & y));

    auto closed = cpog::transitive_close(cpog::canonicalize(fx.c2(), ctx), ctx);
    CHECK(closed.arc("Billing", "Shipping", ctx).is_false());
    CHECK(closed.arc("Shipping", "Billing", ctx).is_false());
}

TEST_CASE("nested guards equal conjoined guards") {
    Fixture fx;
    auto& ctx = fx.ctx;
    bdd::Bdd x = ctx.var("x1"), y = ctx.var("y");
    auto billing = Expr::action("Billing");
    CHECK(cpog::equivalent(Expr::cond(x & y, billing),
                           Expr::cond(x, Expr::cond(y, billing)), ctx));
}

TEST_CASE("transitive reduction and closure") {
    Fixture fx;
    auto& ctx = fx.ctx;
    auto p = Expr::action("Start");
    auto q = Expr::action("OrderReceipt");
    auto r = Expr::action("InventoryCheck");
    auto chain = Expr::seq(Expr::seq(p, q), r);
    auto cf = cpog::canonicalize(chain, ctx);
    CHECK(cf.arcs.size() == 3); // includes the redundant two-step arc
    auto red = cpog::transitive_reduce(cf, ctx);
    CHECK(red.arcs.size() == 2);
    CHECK(red.arcs.count({"Start", "InventoryCheck"}) == 0);

    auto flat = cpog::canonicalize(Expr::par(p, q), ctx);
    auto flat_red = cpog::transitive_reduce(flat, ctx);
    CHECK(flat_red.arcs.empty());
    CHECK(flat_red.vertices == flat.vertices);

    auto c1 = fx.c1();
    auto full = cpog::transitive_close(cpog::canonicalize(c1, ctx), ctx);
    auto again = cpog::transitive_close(
        cpog::transitive_reduce(cpog::canonicalize(c1, ctx), ctx), ctx);
    for (const auto& [ab, f] : full.arcs)
        CHECK(again.arc(ab.first, ab.second, ctx) == f);
    for (const auto& [ab, f] : again.arcs)
        CHECK(full.arc(ab.first, ab.second, ctx) == f);
}

TEST_CASE("compositions with shared vertices produce self-dependencies") {
    bdd::Context ctx({"u", "v"});
    auto p = Expr::action("p");
    auto q = Expr::action("q");
    auto r = Expr::action("r");
    auto s = Expr::action("s");

    auto seq1 = cpog::canonicalize(Expr::seq(Expr::par(p, q), r), ctx);
    CHECK(seq1.arcs.size() == 2);
    CHECK(seq1.arcs.count({"p", "p"}) == 0);

    auto top = Expr::par(Expr::seq(p, q), Expr::seq(p, s));
    auto bottom = Expr::par(Expr::seq(q, r), Expr::seq(s, r));
    auto comp = cpog::canonicalize(Expr::seq(top, bottom), ctx);
    CHECK(comp.arc("q", "q", ctx).is_true());
    CHECK(comp.arc("s", "s", ctx).is_true());

    auto self = cpog::canonicalize(Expr::seq(p, p), ctx);
    CHECK(self.arc("p", "p", ctx).is_true());
}

TEST_CASE("operator identities hold on random expressions") {
    bdd::Context ctx({"u", "v"});
    Rng rng(0xc061);
    auto eq = [&](const ExprPtr& a, const ExprPtr& b) {
        return cpog::equivalent(a, b, ctx);
    };
    auto eps = Expr::empty();
    bdd::Bdd u = ctx.var("u"), v = ctx.var("v");
    for (int round = 0; round < 1000; ++round) {
        ExprPtr p = random_expr(rng, ctx, 3);
        ExprPtr q = random_expr(rng, ctx, 3);
        ExprPtr r = random_expr(rng, ctx, 3);

        REQUIRE(eq(Expr::par(p, q), Expr::par(q, p)));
        REQUIRE(eq(Expr::par(p, Expr::par(q, r)), Expr::par(Expr::par(p, q), r)));
        REQUIRE(eq(Expr::par(p, eps), p));

        REQUIRE(eq(Expr::seq(p, Expr::seq(q, r)), Expr::seq(Expr::seq(p, q), r)));
        REQUIRE(eq(Expr::seq(p, eps), p));
        REQUIRE(eq(Expr::seq(eps, p), p));
        REQUIRE(eq(Expr::seq(p, Expr::par(q, r)),
                   Expr::par(Expr::seq(p, q), Expr::seq(p, r))));
        REQUIRE(eq(Expr::seq(Expr::par(p, q), r),
                   Expr::par(Expr::seq(p, r), Expr::seq(q, r))));
        REQUIRE(eq(Expr::seq(Expr::seq(p, q), r),
                   Expr::par(Expr::par(Expr::seq(p, q), Expr::seq(p, r)), Expr::seq(q, r))));

        REQUIRE(eq(Expr::cond(u & v, p), Expr::cond(u, Expr::cond(v, p))));
        REQUIRE(eq(Expr::cond(u | v, p), Expr::par(Expr::cond(u, p), Expr::cond(v, p))));
        REQUIRE(eq(Expr::cond(u, Expr::par(p, q)),
                   Expr::par(Expr::cond(u, p), Expr::cond(u, q))));
        REQUIRE(eq(Expr::cond(u, Expr::seq(p, q)),
                   Expr::seq(Expr::cond(u, p), Expr::cond(u, q))));
        REQUIRE(eq(Expr::cond(ctx.constant(true), p), p));
        REQUIRE(eq(Expr::cond(ctx.constant(false), p), eps));
    }
}

TEST_CASE("equivalence is a congruence for composition contexts") {
    bdd::Context ctx({"u", "v"});
    Rng rng(0xc062);
    for (int round = 0; round < 300; ++round) {
        ExprPtr p = random_expr(rng, ctx, 3);
        ExprPtr q = Expr::par(p, Expr::empty());
        if (rng.flip())
            q = Expr::cond(ctx.constant(true), q);
        ExprPtr c = random_expr(rng, ctx, 2);
        REQUIRE(cpog::equivalent(p, q, ctx));
        switch (rng.below(4)) {
        case 0:
            REQUIRE(cpog::equivalent(Expr::par(p, c), Expr::par(q, c), ctx));
            break;
        case 1:
            REQUIRE(cpog::equivalent(Expr::seq(p, c), Expr::seq(q, c), ctx));
            break;
        case 2:
            REQUIRE(cpog::equivalent(Expr::seq(c, p), Expr::seq(c, q), ctx));
            break;
        default:
            REQUIRE(cpog::equivalent(Expr::cond(ctx.var("u"), p),
                                     Expr::cond(ctx.var("u"), q), ctx));
        }
    }
}

TEST_CASE("asymmetric dependencies are not equivalent") {
    bdd::Context ctx({"u"});
    auto a = Expr::action("a");
    auto b = Expr::action("b");
    CHECK_FALSE(cpog::equivalent(Expr::seq(a, b), Expr::seq(b, a), ctx));
    auto diff = cpog::first_difference(Expr::seq(a, b), Expr::seq(b, a), ctx);
    REQUIRE(diff.has_value());
    CHECK(diff->where == "arc a -> b");
}

TEST_CASE("reduction and closure preserve equivalence, including on cycles") {
    bdd::Context ctx({"u", "v"});
    Rng rng(0xc065);
    for (int round = 0; round < 200; ++round) {
        auto cf = cpog::canonicalize(random_expr(rng, ctx, 4), ctx);
        auto red = cpog::transitive_reduce(cf, ctx);
        auto closed = cpog::transitive_close(cf, ctx);
        auto reclosed = cpog::transitive_close(red, ctx);
        REQUIRE(red.vertices == cf.vertices);
        for (const auto& [ab, f] : closed.arcs)
            REQUIRE(reclosed.arc(ab.first, ab.second, ctx) == f);
        for (const auto& [ab, f] : reclosed.arcs)
            REQUIRE(closed.arc(ab.first, ab.second, ctx) == f);
    }

    // a three-way cyclic dependency must not be erased
    auto a = Expr::action("a");
    auto b = Expr::action("b");
    auto c = Expr::action("c");
    auto cycle = Expr::par(Expr::par(Expr::seq(a, b), Expr::seq(b, c)), Expr::seq(c, a));
    auto cycle_cf = cpog::canonicalize(cycle, ctx);
    auto red = cpog::transitive_reduce(cycle_cf, ctx);
    CHECK_FALSE(red.arcs.empty());
    auto reclosed = cpog::transitive_close(red, ctx);
    CHECK(reclosed.arc("a", "a", ctx).is_true());
    for (const auto& [ab, f] : cpog::transitive_close(cycle_cf, ctx).arcs)
        CHECK(reclosed.arc(ab.first, ab.second, ctx) == f);
}

TEST_CASE("reduce-close-reduce is idempotent on reduced forms") {
    bdd::Context ctx({"u", "v"});
    Rng rng(0xc063);
    for (int round = 0; round < 200; ++round) {
        auto cf = cpog::canonicalize(random_expr(rng, ctx, 4), ctx);
        auto red = cpog::transitive_reduce(cf, ctx);
        auto red2 = cpog::transitive_reduce(cpog::transitive_close(red, ctx), ctx);
        REQUIRE(red.vertices == red2.vertices);
        for (const auto& [ab, f] : red.arcs)
            REQUIRE(red2.arc(ab.first, ab.second, ctx) == f);
        for (const auto& [ab, f] : red2.arcs)
            REQUIRE(red.arc(ab.first, ab.second, ctx) == f);
    }
}

TEST_CASE("canonical form invariants") {
    bdd::Context ctx({"u", "v"});
    Rng rng(0xc064);
    for (int round = 0; round < 300; ++round) {
        auto cf = cpog::canonicalize(random_expr(rng, ctx, 4), ctx);
        for (const auto& [a, f] : cf.vertices)
            REQUIRE_FALSE(f.is_false());
        for (const auto& [ab, f] : cf.arcs) {
            REQUIRE_FALSE(f.is_false());
            REQUIRE(bdd::is_tautology(
                f.implies(cf.vertex(ab.first, ctx) & cf.vertex(ab.second, ctx))));
        }
    }
}

TEST_CASE("expression parser rejects malformed input") {
    Fixture fx;
    CHECK_THROWS_AS(fx.parse("Start ->"), ParseError);
    CHECK_THROWS_AS(fx.parse("NotAnAction"), NameError);
    CHECK_THROWS_AS(fx.parse("(Start"), ParseError);
    CHECK(cpog::equivalent(fx.parse("eps"), Expr::empty(), fx.ctx));
}

#include "reflow/workflow.hpp"

#include <doctest.h>

#include <algorithm>

using namespace reflow;
using namespace reflow::wf;

namespace {

Trace tr(const std::vector<std::string>& names) {
    Trace t;
    for (const auto& n : names) {
        if (n == "TERMINATE")
            t.push_back(Event::term());
        else
            t.push_back(Event::of(*action_from_string(n)));
    }
    return t;
}

const std::vector<Trace>& config1_traces() {
    static const std::vector<Trace> v{
        tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping", "Billing",
            "Archiving", "Confirmation", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "Reject", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Reject", "TERMINATE"}),
    };
    return v;
}

const std::vector<Trace>& config2_traces() {
    static const std::vector<Trace> v{
        tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Billing", "Shipping",
            "Archiving", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping", "Billing",
            "Archiving", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "SupplierCheck", "Reject", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "SupplierCheck", "CreditCheck", "Reject",
            "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "SupplierCheck", "CreditCheck", "Billing",
            "Shipping", "Archiving", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "SupplierCheck", "CreditCheck", "Shipping",
            "Billing", "Archiving", "TERMINATE"}),
        tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Reject", "TERMINATE"}),
    };
    return v;
}

Workflow supplier_subtree() {
    return Element::branch(
        Action::SupplierCheck,
        Element::branch(Action::CreditCheck,
                        Element::par(Action::Billing, Action::Shipping,
                                     Element::simple(Action::Archiving, nullptr)),
                        Element::simple(Action::Reject, nullptr)),
        Element::simple(Action::Reject, nullptr));
}

Workflow bill_ship_par() {
    return Element::par(Action::Billing, Action::Shipping,
                        Element::simple(Action::Archiving, nullptr));
}

} // namespace

TEST_CASE("trace sets of the two configurations") {
    auto t1 = tracesof(Interpreter::configuration1());
    auto t2 = tracesof(Interpreter::configuration2());
    CHECK(t1.size() == 3);
    CHECK(t2.size() == 7);
    CHECK(t1 == std::set<Trace>(config1_traces().begin(), config1_traces().end()));
    CHECK(t2 == std::set<Trace>(config2_traces().begin(), config2_traces().end()));
    CHECK(tracesof(nullptr) == std::set<Trace>{Trace{Event::term()}});
}

TEST_CASE("prefix test") {
    CHECK(prefixof({}, tr({"OrderReceipt"})));
    CHECK(prefixof(tr({"OrderReceipt"}), tr({"OrderReceipt", "InventoryCheck"})));
    CHECK_FALSE(prefixof(tr({"Reject"}), tr({"OrderReceipt"})));
    CHECK_FALSE(prefixof(tr({"OrderReceipt", "InventoryCheck"}), tr({"OrderReceipt"})));
}

TEST_CASE("first and last helpers") {
    CHECK(first(bill_ship_par()) == std::set<Action>{Action::Billing, Action::Shipping});
    CHECK(first(Element::simple(Action::Reject, nullptr)) == std::set<Action>{Action::Reject});
    CHECK(last(tr({"OrderReceipt", "InventoryCheck"})) == Action::InventoryCheck);
    CHECK_THROWS_AS(last(Trace{}), InvariantError);
    CHECK_THROWS_AS(first(nullptr), InvariantError);
}

TEST_CASE("trace and workflow invariants") {
    CHECK(trace_invariant_holds(tr({"OrderReceipt", "TERMINATE"})));
    Trace bad = tr({"TERMINATE", "OrderReceipt"});
    CHECK_FALSE(trace_invariant_holds(bad));
    CHECK(workflow_invariant_holds(Interpreter::configuration1()));
    CHECK(workflow_invariant_holds(Interpreter::configuration2()));
    // duplicated shipping violates the no-duplicates requirement
    auto dup = Element::simple(Action::Shipping, Element::simple(Action::Shipping, nullptr));
    CHECK_FALSE(workflow_invariant_holds(dup));
    CHECK_THROWS_AS(Interpreter::init(dup), InvariantError);
}

TEST_CASE("initialisation") {
    auto s = Interpreter::init(Interpreter::configuration1());
    CHECK(s.trace.empty());
    CHECK(s.workflow == Interpreter::configuration1());
    auto terminal = Interpreter::init(nullptr);
    CHECK(terminal.workflow == nullptr);
}

TEST_CASE("stepping rules") {
    auto picker = first_order_picker();
    auto s = Interpreter::init(Interpreter::configuration1());
    auto [e1, s1] = Interpreter::step(s, Choices::no_problems(), picker);
    CHECK(e1 == Event::of(Action::OrderReceipt));

    // branch selects the arm named by the choice map
    auto [e2, s2] = Interpreter::step(s1, Choices::no_stock(), picker);
    CHECK(e2 == Event::of(Action::InventoryCheck));
    REQUIRE(s2.workflow);
    CHECK(s2.workflow->a == Action::Reject);

    // parallel element emits one action and leaves the other as simple
    auto sp = InterpState{tr({"OrderReceipt", "InventoryCheck", "SupplierCheck",
                              "CreditCheck"}),
                          bill_ship_par()};
    auto [e3, s3] = Interpreter::step(sp, Choices::no_problems(), second_order_picker());
    CHECK(e3 == Event::of(Action::Shipping));
    REQUIRE(s3.workflow);
    CHECK(s3.workflow->kind == Element::Kind::Simple);
    CHECK(s3.workflow->a == Action::Billing);

    CHECK_THROWS_AS(Interpreter::step(Interpreter::init(nullptr), Choices::no_problems(),
                                      picker),
                    StepError);
}

TEST_CASE("complete executions over all choice combinations") {
    auto run = [&](const Workflow& w, const Choices& c, const OrderPicker& p) {
        return Interpreter::execute(Interpreter::init(w), c, p).trace;
    };
    auto c1 = Interpreter::configuration1();
    CHECK(run(c1, Choices::no_problems(), first_order_picker()) ==
          tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping", "Billing",
              "Archiving", "Confirmation", "TERMINATE"}));
    CHECK(run(c1, Choices::no_credit(), first_order_picker()) ==
          tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Reject", "TERMINATE"}));
    CHECK(run(c1, Choices::no_stock(), first_order_picker()) ==
          tr({"OrderReceipt", "InventoryCheck", "Reject", "TERMINATE"}));
    CHECK(run(nullptr, Choices::no_problems(), first_order_picker()) == Trace{Event::term()});

    // every produced trace is a trace of the initial workflow
    std::vector<Choices> combos{Choices::no_problems(), Choices::no_stock(),
                                Choices::no_credit(), Choices::external_stock(),
                                Choices::external_stock_no_credit()};
    for (const auto& w : {Interpreter::configuration1(), Interpreter::configuration2()}) {
        auto valid = tracesof(w);
        std::set<Trace> produced;
        for (const auto& c : combos)
            for (const auto& p : {first_order_picker(), second_order_picker()})
                produced.insert(run(w, c, p));
        for (const auto& t : produced)
            CHECK(valid.count(t) == 1);
    }
    // with both interleavings reachable, the target configuration's full
    // trace set is covered
    std::set<Trace> produced2;
    for (const auto& c : {Choices::no_problems(), Choices::no_stock(), Choices::no_credit(),
                          Choices::external_stock(), Choices::external_stock_no_credit()})
        for (const auto& p : {first_order_picker(), second_order_picker()})
            produced2.insert(run(Interpreter::configuration2(), c, p));
    CHECK(produced2 == tracesof(Interpreter::configuration2()));
}

TEST_CASE("branch check clauses") {
    auto reject = Element::simple(Action::Reject, nullptr);
    auto cc_sub = Element::branch(Action::CreditCheck, bill_ship_par(), reject);
    // failed inventory check: the replacement must begin with the supplier check
    CHECK(Interpreter::branch_check(tr({"OrderReceipt", "InventoryCheck"}), reject,
                                    supplier_subtree()));
    CHECK_FALSE(Interpreter::branch_check(tr({"OrderReceipt", "InventoryCheck"}), reject,
                                          cc_sub));
    // successful credit check with shipping pending
    auto shipping_next = Element::simple(
        Action::Shipping, Element::simple(Action::Billing,
                                          Element::simple(Action::Archiving, nullptr)));
    CHECK(Interpreter::branch_check(tr({"OrderReceipt", "InventoryCheck", "CreditCheck"}),
                                    shipping_next, bill_ship_par()));
    CHECK_FALSE(Interpreter::branch_check(tr({"OrderReceipt", "InventoryCheck",
                                              "CreditCheck"}),
                                          shipping_next, supplier_subtree()));
    // rejected credit check must stay rejected
    CHECK(Interpreter::branch_check(tr({"OrderReceipt", "InventoryCheck", "CreditCheck"}),
                                    reject, reject));
    // empty trace imposes no constraint
    CHECK(Interpreter::branch_check({}, reject, supplier_subtree()));
}

TEST_CASE("accepted reconfiguration after the failed inventory check") {
    auto s = Interpreter::init(Interpreter::configuration1());
    auto c = Choices::external_stock();
    auto picker = first_order_picker();
    s = Interpreter::step(s, c, picker).second;
    s = Interpreter::step(s, c, picker).second;
    CHECK(s.trace == tr({"OrderReceipt", "InventoryCheck"}));

    auto s2 = Interpreter::reconfigure(s, supplier_subtree());
    CHECK(s2.trace == s.trace);
    auto done = Interpreter::execute(s2, c, picker);
    CHECK(done.trace == tr({"OrderReceipt", "InventoryCheck", "SupplierCheck", "CreditCheck",
                            "Billing", "Shipping", "Archiving", "TERMINATE"}));
}

TEST_CASE("rejected reconfiguration after shipping") {
    auto s = Interpreter::init(Interpreter::configuration1());
    auto c = Choices::no_problems();
    auto picker = first_order_picker();
    for (int i = 0; i < 4; ++i)
        s = Interpreter::step(s, c, picker).second;
    CHECK(s.trace == tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping"}));

    try {
        Interpreter::reconfigure(s, bill_ship_par());
        FAIL("reconfiguration should have been rejected");
    } catch (const ReconfigureError& e) {
        REQUIRE(e.invalid_traces.size() == 2);
        CHECK(e.invalid_traces[0] ==
              tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping", "Billing",
                  "Shipping", "Archiving", "TERMINATE"}));
        CHECK(e.invalid_traces[1] ==
              tr({"OrderReceipt", "InventoryCheck", "CreditCheck", "Shipping", "Shipping",
                  "Billing", "Archiving", "TERMINATE"}));
    }
}

TEST_CASE("reconfiguring to the exact remaining workflow is a no-op") {
    auto s = Interpreter::init(Interpreter::configuration2());
    auto c = Choices::no_problems();
    auto picker = first_order_picker();
    s = Interpreter::step(s, c, picker).second; // OrderReceipt
    s = Interpreter::step(s, c, picker).second; // InventoryCheck (true arm)
    auto s2 = Interpreter::reconfigure(s, s.workflow);
    CHECK(s2.trace == s.trace);
    CHECK(s2.workflow == s.workflow);
}

TEST_CASE("scenario runner transcripts") {
    ScenarioOptions ok;
    ok.start = Interpreter::configuration1();
    ok.choices = Choices::external_stock();
    ok.picker = first_order_picker();
    ok.reconfigure_after = Action::InventoryCheck;
    ok.target = supplier_subtree();
    auto res = run_scenario(ok);
    REQUIRE(res.ok);
    REQUIRE(res.lines.size() == 3);
    CHECK(res.lines[0] == "[<OrderReceipt>, <InventoryCheck>]");
    CHECK(res.lines[1] == "Reconfiguring Configuration1 to Configuration2...");
    CHECK(res.lines[2] ==
          "[<OrderReceipt>, <InventoryCheck>, <SupplierCheck>, <CreditCheck>, <Billing>, "
          "<Shipping>, <Archiving>, <TERMINATE>]");

    ScenarioOptions bad;
    bad.start = Interpreter::configuration1();
    bad.choices = Choices::no_problems();
    bad.picker = first_order_picker();
    bad.reconfigure_after = Action::Shipping;
    bad.target = bill_ship_par();
    auto fail = run_scenario(bad);
    CHECK_FALSE(fail.ok);
    REQUIRE(fail.lines.size() == 6);
    CHECK(fail.lines[0] == "[<OrderReceipt>, <InventoryCheck>, <CreditCheck>, <Shipping>]");
    CHECK(fail.lines[1] == "Reconfiguring Configuration1 to Configuration2...");
    CHECK(fail.lines[2] == "These potential traces are not valid under Configuration2:");
    CHECK(fail.lines[3] == "* [<OrderReceipt>, <InventoryCheck>, <CreditCheck>, <Shipping>, "
                           "<Billing>, <Shipping>, <Archiving>]");
    CHECK(fail.lines[4] == "* [<OrderReceipt>, <InventoryCheck>, <CreditCheck>, <Shipping>, "
                           "<Shipping>, <Billing>, <Archiving>]");
    CHECK(fail.lines[5] ==
          "Reconfiguration could generate invalid traces; pre-condition will fail.");
}

TEST_CASE("state invariant holds along every operation") {
    std::vector<Choices> combos{Choices::no_problems(), Choices::no_stock(),
                                Choices::no_credit(), Choices::external_stock(),
                                Choices::external_stock_no_credit()};
    for (const auto& c : combos) {
        auto s = Interpreter::init(Interpreter::configuration2());
        CHECK(Interpreter::state_invariant_holds(s));
        while (s.workflow) {
            auto [e, next] = Interpreter::step(s, c, seeded_order_picker(7));
            CHECK(Interpreter::state_invariant_holds(next));
            // conservation: the old trace extends by exactly the emitted event
            REQUIRE(next.trace.size() == s.trace.size() + 1);
            CHECK(prefixof(s.trace, next.trace));
            CHECK(next.trace.back() == e);
            s = next;
        }
    }
}

TEST_CASE("trace rendering is byte-stable") {
    CHECK(to_string(tr({"OrderReceipt", "TERMINATE"})) == "[<OrderReceipt>, <TERMINATE>]");
    CHECK(to_string(Trace{}) == "[]");
    CHECK(to_string(Event::term()) == "<TERMINATE>");
}

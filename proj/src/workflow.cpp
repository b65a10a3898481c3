#include "reflow/workflow.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace reflow::wf {

namespace {
constexpr std::array<const char*, 9> kActionNames = {
    "OrderReceipt", "InventoryCheck", "Reject",   "CreditCheck", "SupplierCheck",
    "Shipping",     "Billing",        "Archiving", "Confirmation",
};
} // namespace

std::string to_string(Action a) { return kActionNames[static_cast<int>(a)]; }

std::string to_string(const Event& e) {
    return e.terminate ? "<TERMINATE>" : "<" + to_string(e.action) + ">";
}

std::string to_string(const Trace& t) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) os << ", ";
        os << to_string(t[i]);
    }
    os << "]";
    return os.str();
}

std::optional<Action> action_from_string(const std::string& name) {
    for (std::size_t i = 0; i < kActionNames.size(); ++i)
        if (name == kActionNames[i])
            return static_cast<Action>(i);
    return std::nullopt;
}

bool trace_invariant_holds(const Trace& t) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        if (t[i].terminate)
            return false;
    return true;
}

namespace {
struct ElementAccess : Element {};
} // namespace

Workflow Element::simple(Action a, Workflow next) {
    auto e = std::make_shared<ElementAccess>();
    e->kind = Kind::Simple;
    e->a = a;
    e->next = std::move(next);
    return e;
}

Workflow Element::branch(Action a, Workflow on_true, Workflow on_false) {
    auto e = std::make_shared<ElementAccess>();
    e->kind = Kind::Branch;
    e->a = a;
    e->next = std::move(on_true);
    e->on_false = std::move(on_false);
    return e;
}

Workflow Element::par(Action b1, Action b2, Workflow next) {
    auto e = std::make_shared<ElementAccess>();
    e->kind = Kind::Par;
    e->a = b1;
    e->b2 = b2;
    e->next = std::move(next);
    return e;
}

std::set<Trace> tracesof(const Workflow& w) {
    if (!w)
        return {Trace{Event::term()}};
    std::set<Trace> out;
    auto prepend = [&](std::initializer_list<Action> head, const std::set<Trace>& tails) {
        for (const auto& tail : tails) {
            Trace t;
            for (Action a : head)
                t.push_back(Event::of(a));
            t.insert(t.end(), tail.begin(), tail.end());
            out.insert(std::move(t));
        }
    };
    switch (w->kind) {
    case Element::Kind::Simple:
        prepend({w->a}, tracesof(w->next));
        break;
    case Element::Kind::Branch:
        prepend({w->a}, tracesof(w->next));
        prepend({w->a}, tracesof(w->on_false));
        break;
    case Element::Kind::Par: {
        auto tails = tracesof(w->next);
        prepend({w->a, w->b2}, tails);
        prepend({w->b2, w->a}, tails);
        break;
    }
    }
    return out;
}

bool prefixof(const Trace& a, const Trace& b) {
    if (a.size() > b.size())
        return false;
    return std::equal(a.begin(), a.end(), b.begin());
}

std::set<Action> first(const Workflow& w) {
    if (!w)
        throw InvariantError("first() of a terminal workflow");
    switch (w->kind) {
    case Element::Kind::Simple:
    case Element::Kind::Branch:
        return {w->a};
    case Element::Kind::Par:
        return {w->a, w->b2};
    }
    throw InvariantError("unreachable element kind");
}

Action last(const Trace& t) {
    if (t.empty())
        throw InvariantError("last() of an empty trace");
    if (t.back().terminate)
        throw InvariantError("last() of a completed trace");
    return t.back().action;
}

bool workflow_invariant_holds(const Workflow& w) {
    for (const auto& tr : tracesof(w)) {
        std::set<Event> events(tr.begin(), tr.end());
        if (events.size() != tr.size())
            return false;
    }
    return true;
}

bool Choices::at(Action a) const {
    switch (a) {
    case Action::InventoryCheck: return inventory_;
    case Action::CreditCheck: return credit_;
    case Action::SupplierCheck: return supplier_;
    default:
        throw InvariantError("action " + to_string(a) + " is not an external choice");
    }
}

OrderPicker first_order_picker() {
    return [](Action, Action) { return true; };
}

OrderPicker second_order_picker() {
    return [](Action, Action) { return false; };
}

OrderPicker seeded_order_picker(std::uint64_t seed) {
    auto state = std::make_shared<std::uint64_t>(seed);
    return [state](Action, Action) {
        *state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = *state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return (z & 1u) == 0;
    };
}

std::string to_string(Rule r) {
    switch (r) {
    case Rule::Init: return "Init";
    case Rule::Terminate: return "Terminate";
    case Rule::Reset: return "Reset";
    case Rule::Simple: return "Simple";
    case Rule::BranchT: return "Branch-T";
    case Rule::BranchF: return "Branch-F";
    case Rule::Par1: return "Par-1";
    case Rule::Par2: return "Par-2";
    case Rule::Reconfigure: return "Reconfigure";
    }
    return "?";
}

Trace AnnotatedRun::trace() const {
    Trace t;
    for (const auto& e : events)
        t.push_back(e.event);
    return t;
}

namespace {

const Workflow& config1_instance() {
    static const Workflow w = Element::simple(
        Action::OrderReceipt,
        Element::branch(
            Action::InventoryCheck,
            Element::branch(
                Action::CreditCheck,
                Element::simple(
                    Action::Shipping,
                    Element::simple(Action::Billing,
                                    Element::simple(Action::Archiving,
                                                    Element::simple(Action::Confirmation,
                                                                    nullptr)))),
                Element::simple(Action::Reject, nullptr)),
            Element::simple(Action::Reject, nullptr)));
    return w;
}

const Workflow& config2_instance() {
    static const Workflow w = Element::simple(
        Action::OrderReceipt,
        Element::branch(
            Action::InventoryCheck,
            Element::branch(Action::CreditCheck,
                            Element::par(Action::Billing, Action::Shipping,
                                         Element::simple(Action::Archiving, nullptr)),
                            Element::simple(Action::Reject, nullptr)),
            Element::branch(
                Action::SupplierCheck,
                Element::branch(Action::CreditCheck,
                                Element::par(Action::Billing, Action::Shipping,
                                             Element::simple(Action::Archiving, nullptr)),
                                Element::simple(Action::Reject, nullptr)),
                Element::simple(Action::Reject, nullptr))));
    return w;
}

void assert_state_invariant(const InterpState& s) {
    if (!Interpreter::state_invariant_holds(s))
        throw InvariantError("interpreter state admits traces outside both configurations");
}

} // namespace

const Workflow& Interpreter::configuration1() { return config1_instance(); }
const Workflow& Interpreter::configuration2() { return config2_instance(); }

bool Interpreter::state_invariant_holds(const InterpState& s) {
    if (!s.workflow)
        return true;
    static const std::set<Trace> valid = [] {
        std::set<Trace> v = tracesof(config1_instance());
        auto v2 = tracesof(config2_instance());
        v.insert(v2.begin(), v2.end());
        return v;
    }();
    for (const auto& tail : tracesof(s.workflow)) {
        Trace full = s.trace;
        full.insert(full.end(), tail.begin(), tail.end());
        bool some_prefix = std::any_of(valid.begin(), valid.end(),
                                       [&](const Trace& x) { return prefixof(full, x); });
        if (!some_prefix)
            return false;
    }
    return true;
}

InterpState Interpreter::init(const Workflow& w) {
    if (w && !workflow_invariant_holds(w))
        throw InvariantError("workflow admits a trace with duplicate events");
    InterpState s{{}, w};
    assert_state_invariant(s);
    return s;
}

std::pair<Event, InterpState> Interpreter::step(const InterpState& s, const Choices& c,
                                                const OrderPicker& picker) {
    if (!s.workflow)
        throw StepError("step on a terminated workflow");
    InterpState next = s;
    Event ev;
    switch (s.workflow->kind) {
    case Element::Kind::Simple:
        ev = Event::of(s.workflow->a);
        next.workflow = s.workflow->next;
        break;
    case Element::Kind::Branch:
        ev = Event::of(s.workflow->a);
        next.workflow = c.at(s.workflow->a) ? s.workflow->next : s.workflow->on_false;
        break;
    case Element::Kind::Par:
        if (picker(s.workflow->a, s.workflow->b2)) {
            ev = Event::of(s.workflow->a);
            next.workflow = Element::simple(s.workflow->b2, s.workflow->next);
        } else {
            ev = Event::of(s.workflow->b2);
            next.workflow = Element::simple(s.workflow->a, s.workflow->next);
        }
        break;
    }
    next.trace.push_back(ev);
    assert_state_invariant(next);
    return {ev, next};
}

InterpState Interpreter::execute(const InterpState& s, const Choices& c,
                                 const OrderPicker& picker) {
    InterpState cur = s;
    while (cur.workflow)
        cur = step(cur, c, picker).second;
    cur.trace.push_back(Event::term());
    return cur;
}

bool Interpreter::branch_check(const Trace& tr, const Workflow& w, const Workflow& w2) {
    if (tr.empty() || tr.back().terminate || !w || !w2)
        return true;
    Action lastAct = last(tr);
    std::set<Action> fw = first(w);
    std::set<Action> fw2 = first(w2);
    auto subset = [](const std::set<Action>& a, const std::set<Action>& b) {
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    if (lastAct == Action::InventoryCheck && fw == std::set<Action>{Action::Reject} &&
        !fw2.count(Action::SupplierCheck))
        return false;
    if (lastAct == Action::InventoryCheck && fw == std::set<Action>{Action::CreditCheck} &&
        !fw2.count(Action::CreditCheck))
        return false;
    if (lastAct == Action::CreditCheck && fw == std::set<Action>{Action::Reject} &&
        !fw2.count(Action::Reject))
        return false;
    if (lastAct == Action::CreditCheck && fw == std::set<Action>{Action::Shipping} &&
        !subset(fw2, {Action::Billing, Action::Shipping}))
        return false;
    return true;
}

InterpState Interpreter::reconfigure(const InterpState& s, const Workflow& w2,
                                     const Workflow& target_cfg) {
    std::vector<Trace> invalid;
    if (!w2)
        throw ReconfigureError("replacement workflow must be non-terminal", {});
    if (!branch_check(s.trace, s.workflow, w2))
        throw ReconfigureError("replacement ignores the outcome of the last branching action",
                               {});
    std::set<Trace> target_traces = tracesof(target_cfg);
    for (const auto& tail : tracesof(w2)) {
        Trace full = s.trace;
        full.insert(full.end(), tail.begin(), tail.end());
        if (!target_traces.count(full))
            invalid.push_back(std::move(full));
    }
    if (!invalid.empty()) {
        std::sort(invalid.begin(), invalid.end(), [](const Trace& a, const Trace& b) {
            return to_string(a) < to_string(b);
        });
        throw ReconfigureError("reconfiguration could generate invalid traces",
                               std::move(invalid));
    }
    InterpState next{s.trace, w2};
    assert_state_invariant(next);
    return next;
}

ScenarioResult run_scenario(const ScenarioOptions& opts) {
    ScenarioResult result;
    InterpState s = Interpreter::init(opts.start);
    bool pending_reconfigure = false;
    bool reconfigured = false;

    auto record = [&](const Event& ev, Rule rule) {
        result.run.events.push_back({ev, rule, pending_reconfigure});
        pending_reconfigure = false;
    };

    auto rule_of = [](const InterpState& before, const Choices& c, const Event& ev) {
        switch (before.workflow->kind) {
        case Element::Kind::Simple:
            return Rule::Simple;
        case Element::Kind::Branch:
            return c.at(before.workflow->a) ? Rule::BranchT : Rule::BranchF;
        case Element::Kind::Par:
            return ev.action == before.workflow->a ? Rule::Par1 : Rule::Par2;
        }
        return Rule::Simple;
    };

    while (s.workflow) {
        if (!reconfigured && opts.reconfigure_after && !s.trace.empty() &&
            !s.trace.back().terminate && last(s.trace) == *opts.reconfigure_after) {
            result.lines.push_back(to_string(s.trace));
            result.lines.push_back("Reconfiguring Configuration1 to Configuration2...");
            try {
                s = Interpreter::reconfigure(s, opts.target);
            } catch (const ReconfigureError& e) {
                if (!e.invalid_traces.empty()) {
                    result.lines.push_back(
                        "These potential traces are not valid under Configuration2:");
                    for (const auto& t : e.invalid_traces) {
                        Trace shown = t;
                        if (!shown.empty() && shown.back().terminate)
                            shown.pop_back();
                        result.lines.push_back("* " + to_string(shown));
                    }
                }
                result.lines.push_back(
                    "Reconfiguration could generate invalid traces; pre-condition will fail.");
                result.ok = false;
                return result;
            }
            reconfigured = true;
            pending_reconfigure = true;
        }
        InterpState before = s;
        auto [ev, after] = Interpreter::step(s, opts.choices, opts.picker);
        record(ev, rule_of(before, opts.choices, ev));
        s = after;
    }
    if (!reconfigured && opts.reconfigure_after) {
        // The requested reconfiguration point never occurred.
        result.lines.push_back(to_string(s.trace));
        result.lines.push_back("Reconfiguration point not reached.");
        result.ok = false;
        return result;
    }
    s.trace.push_back(Event::term());
    record(Event::term(), Rule::Terminate);
    result.final_trace = s.trace;
    result.lines.push_back(to_string(s.trace));
    result.ok = true;
    return result;
}

} // namespace reflow::wf

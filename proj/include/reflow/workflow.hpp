#pragma once

#include "reflow/errors.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reflow::wf {

enum class Action {
    OrderReceipt,
    InventoryCheck,
    Reject,
    CreditCheck,
    SupplierCheck,
    Shipping,
    Billing,
    Archiving,
    Confirmation,
};

/// An action occurrence or the terminating event.
struct Event {
    bool terminate = false;
    Action action = Action::OrderReceipt;

    static Event of(Action a) { return Event{false, a}; }
    static Event term() { return Event{true, {}}; }

    bool operator==(const Event& o) const {
        return terminate == o.terminate && (terminate || action == o.action);
    }
    bool operator!=(const Event& o) const { return !(*this == o); }
    bool operator<(const Event& o) const {
        if (terminate != o.terminate)
            return !terminate; // actions sort before TERMINATE
        if (terminate)
            return false;
        return action < o.action;
    }
};

using Trace = std::vector<Event>;

std::string to_string(Action a);
std::string to_string(const Event& e);
/// Bracketed quote-list rendering, e.g. [<OrderReceipt>, <TERMINATE>].
std::string to_string(const Trace& t);
std::optional<Action> action_from_string(const std::string& name);

/// TERMINATE, if present, must be the last event.
bool trace_invariant_holds(const Trace& t);

class Element;
/// A workflow tree; the null pointer is the terminal leaf.
using Workflow = std::shared_ptr<const Element>;

class Element {
public:
    enum class Kind { Simple, Branch, Par };

    static Workflow simple(Action a, Workflow next);
    static Workflow branch(Action a, Workflow on_true, Workflow on_false);
    static Workflow par(Action b1, Action b2, Workflow next);

    Kind kind;
    Action a;          // Simple/Branch action, or first parallel action
    Action b2;         // second parallel action (Par only)
    Workflow next;     // Simple/Par continuation, Branch true arm
    Workflow on_false; // Branch false arm

protected:
    Element() = default;
};

/// All traces of a workflow tree (each ends with TERMINATE).
std::set<Trace> tracesof(const Workflow& w);
bool prefixof(const Trace& a, const Trace& b);
/// First action(s) of a non-terminal workflow.
std::set<Action> first(const Workflow& w);
/// Last action of a nonempty trace.
Action last(const Trace& t);

/// The duplicate-free-traces invariant every workflow value must satisfy.
bool workflow_invariant_holds(const Workflow& w);

/// Externally controlled branch outcomes; total on exactly the three
/// choice actions.
class Choices {
public:
    Choices(bool inventory, bool credit, bool supplier)
        : inventory_(inventory), credit_(credit), supplier_(supplier) {}

    bool at(Action a) const;

    static Choices no_problems() { return {true, true, true}; }
    static Choices no_stock() { return {false, false, false}; }
    static Choices no_credit() { return {true, false, false}; }
    static Choices external_stock() { return {false, true, true}; }
    static Choices external_stock_no_credit() { return {false, false, true}; }

private:
    bool inventory_, credit_, supplier_;
};

/// Chooses which branch of a parallel element goes first. Returns true to
/// fire the first action.
using OrderPicker = std::function<bool(Action b1, Action b2)>;

OrderPicker first_order_picker();
OrderPicker second_order_picker();
/// Deterministic pseudo-random picker (splitmix64 stream).
OrderPicker seeded_order_picker(std::uint64_t seed);

enum class Rule { Init, Terminate, Reset, Simple, BranchT, BranchF, Par1, Par2, Reconfigure };

std::string to_string(Rule r);

struct RunEvent {
    Event event;
    Rule rule;
    bool reconfigured_before = false; // a reconfiguration happened immediately before
};

/// A completed, rule-annotated execution (ends with the TERMINATE event).
struct AnnotatedRun {
    std::vector<RunEvent> events;
    Trace trace() const;
};

struct InterpState {
    Trace trace;
    Workflow workflow; // null = nothing left to execute
};

/// Thrown when a requested reconfiguration would permit invalid traces.
class ReconfigureError : public Error {
public:
    ReconfigureError(std::string msg, std::vector<Trace> invalid)
        : Error(std::move(msg)), invalid_traces(std::move(invalid)) {}
    std::vector<Trace> invalid_traces;
};

class StepError : public Error {
public:
    using Error::Error;
};

/// Pure-state interpreter; every operation returns the successor state and
/// asserts the state invariant.
class Interpreter {
public:
    static InterpState init(const Workflow& w);
    static std::pair<Event, InterpState> step(const InterpState& s, const Choices& c,
                                              const OrderPicker& picker);
    static InterpState execute(const InterpState& s, const Choices& c,
                               const OrderPicker& picker);
    /// Replaces the remaining workflow, guarded by the branch check and the
    /// requirement that every potential completed trace is a trace of the
    /// target configuration (Configuration 2 by default).
    static InterpState reconfigure(const InterpState& s, const Workflow& w2,
                                   const Workflow& target_cfg = configuration2());

    static bool branch_check(const Trace& tr, const Workflow& w, const Workflow& w2);
    static bool state_invariant_holds(const InterpState& s);

    static const Workflow& configuration1();
    static const Workflow& configuration2();
};

/// Runs a workflow to completion collecting rule annotations; optionally
/// reconfigures right after the first occurrence of `reconfigure_after`.
struct ScenarioOptions {
    Workflow start;
    Choices choices = Choices::no_problems();
    OrderPicker picker = first_order_picker();
    std::optional<Action> reconfigure_after;
    Workflow target; // replacement workflow when reconfiguring
};

struct ScenarioResult {
    std::vector<std::string> lines; // printable transcript
    AnnotatedRun run;               // only meaningful when ok
    Trace final_trace;
    bool ok = false;
};

ScenarioResult run_scenario(const ScenarioOptions& opts);

} // namespace reflow::wf

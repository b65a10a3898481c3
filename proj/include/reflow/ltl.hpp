#pragma once

#include "reflow/workflow.hpp"

#include <memory>
#include <string>
#include <vector>

namespace reflow::ltl {

/// Atomic propositions over run states.
enum class Atom { Or, Ict, Icf, Cct, Ccf, Sct, Scf, Rj, Tr, Sh, Bi, Ar, Cf, Rc };

std::string to_string(Atom a);

struct KripkeState {
    std::optional<wf::Event> action; // absent on the initial state
    wf::Rule rule = wf::Rule::Init;
    bool reconfigure = false;

    bool satisfies(Atom a) const;
};

/// Linear chain of states whose last state repeats forever; formulas are
/// evaluated from the `initial` index (the first action state).
struct KripkeStructure {
    std::vector<KripkeState> states;
    std::size_t initial = 0;
};

/// Builds the structure of a completed run; the run must end with the
/// terminating event.
KripkeStructure trace_to_kripke(const wf::AnnotatedRun& run);

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
public:
    enum class Kind { Atom, Not, And, Or, Until, Globally };

    static FormulaPtr atom(Atom a);
    static FormulaPtr f_not(FormulaPtr p);
    static FormulaPtr f_and(FormulaPtr p, FormulaPtr q);
    static FormulaPtr f_or(FormulaPtr p, FormulaPtr q);
    static FormulaPtr until(FormulaPtr p, FormulaPtr q);
    static FormulaPtr globally(FormulaPtr p);

    Kind kind;
    Atom a;
    FormulaPtr lhs, rhs;

    std::string to_string() const;
    bool equals(const Formula& o) const;

protected:
    Formula() = default;
};

/// Satisfaction at the structure's initial state under standard LTL
/// semantics on the induced infinite word.
bool check(const KripkeStructure& ks, const FormulaPtr& f);

/// Requirement formulas for the two configurations and their combination.
FormulaPtr cf1();
FormulaPtr cf2();
FormulaPtr rf();

/// Formula DSL: atoms (or, ict, ...), `!`, `&`, `|`, `U`, `G`, parentheses,
/// plus the named presets CF1, CF2, RF.
FormulaPtr parse_formula(std::string_view text);

} // namespace reflow::ltl

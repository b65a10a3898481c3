#include "reflow/ltl.hpp"

#include <cctype>
#include <map>
#include <sstream>

namespace reflow::ltl {

std::string to_string(Atom a) {
    switch (a) {
    case Atom::Or: return "or";
    case Atom::Ict: return "ict";
    case Atom::Icf: return "icf";
    case Atom::Cct: return "cct";
    case Atom::Ccf: return "ccf";
    case Atom::Sct: return "sct";
    case Atom::Scf: return "scf";
    case Atom::Rj: return "rj";
    case Atom::Tr: return "tr";
    case Atom::Sh: return "sh";
    case Atom::Bi: return "bi";
    case Atom::Ar: return "ar";
    case Atom::Cf: return "cf";
    case Atom::Rc: return "rc";
    }
    return "?";
}

bool KripkeState::satisfies(Atom p) const {
    using wf::Action;
    using wf::Rule;
    auto is_action = [&](Action a) {
        return action && !action->terminate && action->action == a;
    };
    switch (p) {
    case Atom::Or: return is_action(Action::OrderReceipt);
    case Atom::Ict: return is_action(Action::InventoryCheck) && rule == Rule::BranchT;
    case Atom::Icf: return is_action(Action::InventoryCheck) && rule == Rule::BranchF;
    case Atom::Cct: return is_action(Action::CreditCheck) && rule == Rule::BranchT;
    case Atom::Ccf: return is_action(Action::CreditCheck) && rule == Rule::BranchF;
    case Atom::Sct: return is_action(Action::SupplierCheck) && rule == Rule::BranchT;
    case Atom::Scf: return is_action(Action::SupplierCheck) && rule == Rule::BranchF;
    case Atom::Rj: return is_action(Action::Reject);
    case Atom::Tr: return action && action->terminate;
    case Atom::Sh: return is_action(Action::Shipping);
    case Atom::Bi: return is_action(Action::Billing);
    case Atom::Ar: return is_action(Action::Archiving);
    case Atom::Cf: return is_action(Action::Confirmation);
    case Atom::Rc: return reconfigure;
    }
    return false;
}

KripkeStructure trace_to_kripke(const wf::AnnotatedRun& run) {
    if (run.events.empty() || !run.events.back().event.terminate)
        throw InvariantError("run does not end with the terminating event");
    KripkeStructure ks;
    ks.states.push_back(KripkeState{std::nullopt, wf::Rule::Init, false});
    for (const auto& e : run.events)
        ks.states.push_back(KripkeState{e.event, e.rule, e.reconfigured_before});
    ks.initial = 1;
    return ks;
}

namespace {
struct FormulaAccess : Formula {};

std::shared_ptr<FormulaAccess> make(Formula::Kind kind) {
    auto f = std::make_shared<FormulaAccess>();
    f->kind = kind;
    return f;
}
} // namespace

FormulaPtr Formula::atom(Atom a) {
    auto f = make(Kind::Atom);
    f->a = a;
    return f;
}
FormulaPtr Formula::f_not(FormulaPtr p) {
    auto f = make(Kind::Not);
    f->lhs = std::move(p);
    return f;
}
FormulaPtr Formula::f_and(FormulaPtr p, FormulaPtr q) {
    auto f = make(Kind::And);
    f->lhs = std::move(p);
    f->rhs = std::move(q);
    return f;
}
FormulaPtr Formula::f_or(FormulaPtr p, FormulaPtr q) {
    auto f = make(Kind::Or);
    f->lhs = std::move(p);
    f->rhs = std::move(q);
    return f;
}
FormulaPtr Formula::until(FormulaPtr p, FormulaPtr q) {
    auto f = make(Kind::Until);
    f->lhs = std::move(p);
    f->rhs = std::move(q);
    return f;
}
FormulaPtr Formula::globally(FormulaPtr p) {
    auto f = make(Kind::Globally);
    f->lhs = std::move(p);
    return f;
}

std::string Formula::to_string() const {
    switch (kind) {
    case Kind::Atom: return ltl::to_string(a);
    case Kind::Not: return "!" + lhs->to_string();
    case Kind::And: return "(" + lhs->to_string() + " & " + rhs->to_string() + ")";
    case Kind::Or: return "(" + lhs->to_string() + " | " + rhs->to_string() + ")";
    case Kind::Until: return "(" + lhs->to_string() + " U " + rhs->to_string() + ")";
    case Kind::Globally: return "G " + lhs->to_string();
    }
    return "?";
}

bool Formula::equals(const Formula& o) const {
    if (kind != o.kind)
        return false;
    switch (kind) {
    case Kind::Atom: return a == o.a;
    case Kind::Not:
    case Kind::Globally: return lhs->equals(*o.lhs);
    default: return lhs->equals(*o.lhs) && rhs->equals(*o.rhs);
    }
}

namespace {

/// Evaluation over the lasso word: positions initial..n-1, with the final
/// state repeating forever.
bool holds(const KripkeStructure& ks, const Formula& f, std::size_t pos,
           std::map<std::pair<const Formula*, std::size_t>, bool>& memo) {
    std::size_t lastPos = ks.states.size() - 1;
    if (pos > lastPos)
        pos = lastPos;
    auto key = std::make_pair(&f, pos);
    auto it = memo.find(key);
    if (it != memo.end())
        return it->second;
    bool r = false;
    switch (f.kind) {
    case Formula::Kind::Atom:
        r = ks.states[pos].satisfies(f.a);
        break;
    case Formula::Kind::Not:
        r = !holds(ks, *f.lhs, pos, memo);
        break;
    case Formula::Kind::And:
        r = holds(ks, *f.lhs, pos, memo) && holds(ks, *f.rhs, pos, memo);
        break;
    case Formula::Kind::Or:
        r = holds(ks, *f.lhs, pos, memo) || holds(ks, *f.rhs, pos, memo);
        break;
    case Formula::Kind::Globally: {
        r = true;
        for (std::size_t i = pos; i <= lastPos; ++i)
            if (!holds(ks, *f.lhs, i, memo)) {
                r = false;
                break;
            }
        break;
    }
    case Formula::Kind::Until: {
        r = false;
        for (std::size_t i = pos; i <= lastPos; ++i) {
            if (holds(ks, *f.rhs, i, memo)) {
                r = true;
                break;
            }
            if (!holds(ks, *f.lhs, i, memo))
                break;
        }
        break;
    }
    }
    memo.emplace(key, r);
    return r;
}

} // namespace

bool check(const KripkeStructure& ks, const FormulaPtr& f) {
    if (ks.states.empty())
        throw InvariantError("empty structure");
    std::map<std::pair<const Formula*, std::size_t>, bool> memo;
    return holds(ks, *f, ks.initial, memo);
}

namespace {

FormulaPtr at(Atom a) { return Formula::atom(a); }

FormulaPtr until_chain(std::vector<FormulaPtr> steps) {
    FormulaPtr f = steps.back();
    for (std::size_t i = steps.size() - 1; i-- > 0;)
        f = Formula::until(steps[i], f);
    return f;
}

} // namespace

FormulaPtr cf1() {
    FormulaPtr gtr = Formula::globally(at(Atom::Tr));
    FormulaPtr c11 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Ict), at(Atom::Cct), at(Atom::Sh), at(Atom::Bi),
                     at(Atom::Ar), at(Atom::Cf), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Rj))));
    FormulaPtr c12 =
        Formula::f_and(until_chain({at(Atom::Or), at(Atom::Icf), at(Atom::Rj), gtr}),
                       Formula::globally(Formula::f_not(at(Atom::Cf))));
    FormulaPtr c13 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Ict), at(Atom::Ccf), at(Atom::Rj), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Cf))));
    return Formula::f_or(c11, Formula::f_or(c12, c13));
}

FormulaPtr cf2() {
    FormulaPtr gtr = Formula::globally(at(Atom::Tr));
    FormulaPtr bi_or_sh = Formula::f_or(at(Atom::Bi), at(Atom::Sh));
    FormulaPtr c21 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Ict), at(Atom::Cct), bi_or_sh, at(Atom::Ar), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Rj))));
    FormulaPtr c22 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Icf), at(Atom::Scf), at(Atom::Rj), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Ar))));
    FormulaPtr c23 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Icf), at(Atom::Sct), at(Atom::Ccf), at(Atom::Rj),
                     gtr}),
        Formula::globally(Formula::f_not(at(Atom::Ar))));
    FormulaPtr c24 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Icf), at(Atom::Sct), at(Atom::Cct), bi_or_sh,
                     at(Atom::Ar), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Rj))));
    FormulaPtr c25 = Formula::f_and(
        until_chain({at(Atom::Or), at(Atom::Ict), at(Atom::Ccf), at(Atom::Rj), gtr}),
        Formula::globally(Formula::f_not(at(Atom::Ar))));
    return Formula::f_or(c21, Formula::f_or(c22, Formula::f_or(c23, Formula::f_or(c24, c25))));
}

FormulaPtr rf() {
    return Formula::f_or(cf2(), Formula::f_and(Formula::f_not(cf2()), cf1()));
}

namespace {

struct FLexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos)
            throw ParseError("expected identifier in formula at offset " +
                             std::to_string(pos));
        return std::string(text.substr(start, pos - start));
    }
    bool peek_ident_is(std::string_view s) {
        skip_ws();
        if (text.substr(pos, s.size()) != s)
            return false;
        std::size_t after = pos + s.size();
        return after >= text.size() ||
               (!std::isalnum(static_cast<unsigned char>(text[after])) && text[after] != '_');
    }
};

class FormulaParser {
public:
    explicit FormulaParser(std::string_view text) : lex_{text} {}

    FormulaPtr parse() {
        FormulaPtr f = disjunction();
        lex_.skip_ws();
        if (lex_.pos != lex_.text.size())
            throw ParseError("trailing input in formula: " +
                             std::string(lex_.text.substr(lex_.pos)));
        return f;
    }

private:
    FormulaPtr disjunction() {
        FormulaPtr f = conjunction();
        while (lex_.peek() == '|') {
            lex_.eat('|');
            f = Formula::f_or(f, conjunction());
        }
        return f;
    }
    FormulaPtr conjunction() {
        FormulaPtr f = until_level();
        while (lex_.peek() == '&') {
            lex_.eat('&');
            f = Formula::f_and(f, until_level());
        }
        return f;
    }
    FormulaPtr until_level() {
        FormulaPtr f = unary();
        if (lex_.peek_ident_is("U")) {
            lex_.ident();
            return Formula::until(f, until_level()); // right-assoc
        }
        return f;
    }
    FormulaPtr unary() {
        if (lex_.eat('!'))
            return Formula::f_not(unary());
        if (lex_.peek_ident_is("G")) {
            lex_.ident();
            return Formula::globally(unary());
        }
        if (lex_.eat('(')) {
            FormulaPtr f = disjunction();
            if (!lex_.eat(')'))
                throw ParseError("expected ')' in formula");
            return f;
        }
        std::string name = lex_.ident();
        if (name == "CF1") return cf1();
        if (name == "CF2") return cf2();
        if (name == "RF") return rf();
        static const std::map<std::string, Atom> atoms = {
            {"or", Atom::Or},   {"ict", Atom::Ict}, {"icf", Atom::Icf}, {"cct", Atom::Cct},
            {"ccf", Atom::Ccf}, {"sct", Atom::Sct}, {"scf", Atom::Scf}, {"rj", Atom::Rj},
            {"tr", Atom::Tr},   {"sh", Atom::Sh},   {"bi", Atom::Bi},   {"ar", Atom::Ar},
            {"cf", Atom::Cf},   {"rc", Atom::Rc},
        };
        auto it = atoms.find(name);
        if (it == atoms.end())
            throw ParseError("unknown atom or preset in formula: " + name);
        return Formula::atom(it->second);
    }

    FLexer lex_;
};

} // namespace

FormulaPtr parse_formula(std::string_view text) { return FormulaParser(text).parse(); }

} // namespace reflow::ltl

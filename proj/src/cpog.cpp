#include "reflow/cpog.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace reflow::cpog {

namespace {
struct ExprAccess : Expr {};

std::shared_ptr<ExprAccess> make(Expr::Kind kind) {
    auto e = std::make_shared<ExprAccess>();
    e->kind = kind;
    return e;
}
} // namespace

ExprPtr Expr::empty() { return make(Kind::Empty); }

ExprPtr Expr::action(std::string name) {
    if (name.empty())
        throw InvariantError("action names must be nonempty");
    auto e = make(Kind::Action);
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::par(ExprPtr lhs, ExprPtr rhs) {
    auto e = make(Kind::Parallel);
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
}

ExprPtr Expr::seq(ExprPtr lhs, ExprPtr rhs) {
    auto e = make(Kind::Sequence);
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
}

ExprPtr Expr::cond(bdd::Bdd guard, ExprPtr body) {
    auto e = make(Kind::Cond);
    e->guard = guard;
    e->lhs = std::move(body);
    return e;
}

std::set<std::string> Expr::actions() const {
    std::set<std::string> out;
    std::vector<const Expr*> stack{this};
    while (!stack.empty()) {
        const Expr* e = stack.back();
        stack.pop_back();
        switch (e->kind) {
        case Kind::Empty:
            break;
        case Kind::Action:
            out.insert(e->name);
            break;
        case Kind::Parallel:
        case Kind::Sequence:
            stack.push_back(e->lhs.get());
            stack.push_back(e->rhs.get());
            break;
        case Kind::Cond:
            stack.push_back(e->lhs.get());
            break;
        }
    }
    return out;
}

void ControlMap::set(const std::string& variable, const std::string& action) {
    auto it = var_to_action_.find(variable);
    if (it != var_to_action_.end() && it->second != action)
        throw InvariantError("variable " + variable + " already controlled by " + it->second);
    var_to_action_[variable] = action;
}

std::optional<std::string> ControlMap::controller_of(const std::string& variable) const {
    auto it = var_to_action_.find(variable);
    if (it == var_to_action_.end())
        return std::nullopt;
    return it->second;
}

std::vector<std::string> ControlMap::variables_of(const std::string& action) const {
    std::vector<std::string> out;
    for (const auto& [v, a] : var_to_action_)
        if (a == action)
            out.push_back(v);
    return out;
}

std::string ControlMap::unique_variable_of(const std::string& action) const {
    auto vars = variables_of(action);
    if (vars.empty())
        throw NameError("no variable controlled by action " + action);
    if (vars.size() > 1)
        throw NameError("action " + action + " controls more than one variable");
    return vars.front();
}

ExprPtr yes_arrow(const bdd::Context& ctx, const ControlMap& ctrl,
                  const std::string& action, ExprPtr then) {
    bdd::Bdd ok = ctx.var(ctrl.unique_variable_of(action));
    return Expr::seq(Expr::action(action), Expr::cond(ok, std::move(then)));
}

ExprPtr no_arrow(const bdd::Context& ctx, const ControlMap& ctrl,
                 const std::string& action, ExprPtr then) {
    bdd::Bdd ok = ctx.var(ctrl.unique_variable_of(action));
    return Expr::seq(Expr::action(action), Expr::cond(!ok, std::move(then)));
}

bdd::Bdd CanonicalForm::vertex(const std::string& a, const bdd::Context& ctx) const {
    auto it = vertices.find(a);
    return it == vertices.end() ? ctx.constant(false) : it->second;
}

bdd::Bdd CanonicalForm::arc(const std::string& a, const std::string& b,
                            const bdd::Context& ctx) const {
    auto it = arcs.find({a, b});
    return it == arcs.end() ? ctx.constant(false) : it->second;
}

std::string CanonicalForm::to_listing() const {
    std::ostringstream os;
    for (const auto& [a, f] : vertices)
        os << "[" << f.to_string() << "] " << a << "\n";
    for (const auto& [ab, f] : arcs)
        os << "[" << f.to_string() << "] " << ab.first << " -> " << ab.second << "\n";
    return os.str();
}

namespace {

struct RawForm {
    std::map<std::string, bdd::Bdd> vertices;
    std::map<std::pair<std::string, std::string>, bdd::Bdd> arcs;
};

void merge_vertex(RawForm& into, const std::string& a, const bdd::Bdd& f) {
    auto [it, inserted] = into.vertices.emplace(a, f);
    if (!inserted)
        it->second = it->second | f;
}

void merge_arc(RawForm& into, const std::string& a, const std::string& b, const bdd::Bdd& f) {
    auto [it, inserted] = into.arcs.emplace(std::make_pair(a, b), f);
    if (!inserted)
        it->second = it->second | f;
}

RawForm build(const Expr& e, const bdd::Context& ctx) {
    switch (e.kind) {
    case Expr::Kind::Empty:
        return {};
    case Expr::Kind::Action: {
        RawForm r;
        r.vertices.emplace(e.name, ctx.constant(true));
        return r;
    }
    case Expr::Kind::Cond: {
        RawForm r = build(*e.lhs, ctx);
        for (auto& [a, f] : r.vertices)
            f = f & e.guard;
        for (auto& [ab, f] : r.arcs)
            f = f & e.guard;
        return r;
    }
    case Expr::Kind::Parallel: {
        RawForm r = build(*e.lhs, ctx);
        RawForm q = build(*e.rhs, ctx);
        for (const auto& [a, f] : q.vertices)
            merge_vertex(r, a, f);
        for (const auto& [ab, f] : q.arcs)
            merge_arc(r, ab.first, ab.second, f);
        return r;
    }
    case Expr::Kind::Sequence: {
        RawForm p = build(*e.lhs, ctx);
        RawForm q = build(*e.rhs, ctx);
        RawForm r = p;
        for (const auto& [a, f] : q.vertices)
            merge_vertex(r, a, f);
        for (const auto& [ab, f] : q.arcs)
            merge_arc(r, ab.first, ab.second, f);
        // Every action of the first operand precedes every action of the
        // second whenever both exist; common actions yield self-loops.
        for (const auto& [a, fa] : p.vertices)
            for (const auto& [b, fb] : q.vertices)
                merge_arc(r, a, b, fa & fb);
        return r;
    }
    }
    throw InvariantError("unreachable expression kind");
}

} // namespace

CanonicalForm canonicalize(const ExprPtr& e, const bdd::Context& ctx) {
    RawForm raw = build(*e, ctx);
    CanonicalForm cf;
    for (const auto& [a, f] : raw.vertices)
        if (!f.is_false())
            cf.vertices.emplace(a, f);
    for (const auto& [ab, f] : raw.arcs) {
        bdd::Bdd g = f & cf.vertex(ab.first, ctx) & cf.vertex(ab.second, ctx);
        if (!g.is_false())
            cf.arcs.emplace(ab, g);
    }
    return cf;
}

CanonicalForm transitive_close(const CanonicalForm& cf, const bdd::Context& ctx) {
    CanonicalForm out = cf;
    std::vector<std::string> names;
    for (const auto& [a, f] : cf.vertices)
        names.push_back(a);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& a : names) {
            for (const auto& b : names) {
                bdd::Bdd fab = out.arc(a, b, ctx);
                if (fab.is_false())
                    continue;
                for (const auto& c : names) {
                    bdd::Bdd fbc = out.arc(b, c, ctx);
                    if (fbc.is_false())
                        continue;
                    bdd::Bdd through = fab & fbc;
                    bdd::Bdd cur = out.arc(a, c, ctx);
                    bdd::Bdd next = cur | through;
                    if (next != cur) {
                        out.arcs[{a, c}] = next;
                        changed = true;
                    }
                }
            }
        }
    }
    return out;
}

CanonicalForm transitive_reduce(const CanonicalForm& cf, const bdd::Context& ctx) {
    // Greedy redundancy elimination over the closed arc set: arcs are
    // weakened one at a time, each against the closure of what currently
    // remains with the arc itself excluded. Rechecking after every removal
    // keeps cyclic dependencies intact (two arcs that each cover the other
    // are never both dropped), so the closure of the result always equals
    // the closure of the input. Starting from the closure makes the result
    // a function of the closure alone, hence stable under further
    // close/reduce rounds.
    CanonicalForm out = transitive_close(cf, ctx);
    out.vertices = cf.vertices;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& [ab, f] : out.arcs)
        order.push_back(ab);
    for (const auto& ab : order) {
        const auto& [a, b] = ab;
        CanonicalForm probe = out;
        probe.arcs.erase(ab);
        CanonicalForm reach = transitive_close(probe, ctx);
        bdd::Bdd implied = ctx.constant(false);
        for (const auto& [m, fm] : out.vertices) {
            if (m == a || m == b)
                continue;
            implied = implied | (reach.arc(a, m, ctx) & reach.arc(m, b, ctx));
        }
        bdd::Bdd g = out.arcs.at(ab) & !implied;
        if (g.is_false())
            out.arcs.erase(ab);
        else
            out.arcs[ab] = g;
    }
    return out;
}

bool equivalent(const ExprPtr& p, const ExprPtr& q, const bdd::Context& ctx) {
    return !first_difference(p, q, ctx).has_value();
}

std::optional<Difference> first_difference(const ExprPtr& p, const ExprPtr& q,
                                           const bdd::Context& ctx) {
    CanonicalForm cp = canonicalize(p, ctx);
    CanonicalForm cq = canonicalize(q, ctx);
    std::set<std::string> names;
    for (const auto& [a, f] : cp.vertices)
        names.insert(a);
    for (const auto& [a, f] : cq.vertices)
        names.insert(a);
    for (const auto& a : names) {
        bdd::Bdd fp = cp.vertex(a, ctx), fq = cq.vertex(a, ctx);
        if (fp != fq)
            return Difference{"vertex " + a, fp.to_string(), fq.to_string()};
    }
    CanonicalForm tp = transitive_close(cp, ctx);
    CanonicalForm tq = transitive_close(cq, ctx);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& [ab, f] : tp.arcs)
        pairs.insert(ab);
    for (const auto& [ab, f] : tq.arcs)
        pairs.insert(ab);
    for (const auto& ab : pairs) {
        bdd::Bdd fp = tp.arc(ab.first, ab.second, ctx);
        bdd::Bdd fq = tq.arc(ab.first, ab.second, ctx);
        if (fp != fq)
            return Difference{"arc " + ab.first + " -> " + ab.second, fp.to_string(),
                              fq.to_string()};
    }
    return std::nullopt;
}

namespace {

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool eat_sym(std::string_view s) {
        skip_ws();
        if (text.substr(pos, s.size()) == s) {
            pos += s.size();
            return true;
        }
        return false;
    }
    bool peek_sym(std::string_view s) {
        skip_ws();
        return text.substr(pos, s.size()) == s;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos)
            throw ParseError("expected identifier at offset " + std::to_string(pos) +
                             " in expression");
        return std::string(text.substr(start, pos - start));
    }
};

class ExprParser {
public:
    ExprParser(std::string_view text, const bdd::Context& ctx, const ControlMap& ctrl,
               const std::set<std::string>& alphabet,
               const std::map<std::string, ExprPtr>& bindings)
        : lex_{text}, ctx_(ctx), ctrl_(ctrl), alphabet_(alphabet), bindings_(bindings) {}

    ExprPtr parse() {
        ExprPtr e = parallel();
        if (!lex_.at_end())
            throw ParseError("trailing input in expression: " +
                             std::string(lex_.text.substr(lex_.pos)));
        return e;
    }

private:
    // p + q, loosest
    ExprPtr parallel() {
        ExprPtr e = arrow();
        while (lex_.peek() == '+') {
            lex_.eat_sym("+");
            e = Expr::par(e, arrow());
        }
        return e;
    }
    // a -yes-> p / a -no-> p, binding looser than ->
    ExprPtr arrow() {
        std::size_t save = lex_.pos;
        lex_.skip_ws();
        if (lex_.pos < lex_.text.size() &&
            (std::isalpha(static_cast<unsigned char>(lex_.text[lex_.pos])) ||
             lex_.text[lex_.pos] == '_')) {
            std::string name = lex_.ident();
            if (lex_.peek_sym("-yes->")) {
                lex_.eat_sym("-yes->");
                return yes_arrow(ctx_, ctrl_, name, arrow());
            }
            if (lex_.peek_sym("-no->")) {
                lex_.eat_sym("-no->");
                return no_arrow(ctx_, ctrl_, name, arrow());
            }
        }
        lex_.pos = save;
        return sequence();
    }
    ExprPtr sequence() {
        ExprPtr e = guarded();
        while (lex_.peek_sym("->") && !lex_.peek_sym("-yes->") && !lex_.peek_sym("-no->")) {
            lex_.eat_sym("->");
            e = Expr::seq(e, guarded());
        }
        return e;
    }
    ExprPtr guarded() {
        if (lex_.peek() == '[') {
            lex_.eat_sym("[");
            std::size_t depth = 1;
            std::size_t start = lex_.pos;
            while (lex_.pos < lex_.text.size() && depth > 0) {
                if (lex_.text[lex_.pos] == '[') ++depth;
                if (lex_.text[lex_.pos] == ']') --depth;
                if (depth > 0) ++lex_.pos;
            }
            if (depth != 0)
                throw ParseError("unbalanced '[' in expression");
            bdd::Bdd g = ctx_.parse(lex_.text.substr(start, lex_.pos - start));
            ++lex_.pos; // ']'
            return Expr::cond(g, guarded());
        }
        return atom();
    }
    ExprPtr atom() {
        if (lex_.peek() == '(') {
            lex_.eat_sym("(");
            ExprPtr e = parallel();
            if (!lex_.eat_sym(")"))
                throw ParseError("expected ')' in expression");
            return e;
        }
        std::string name = lex_.ident();
        if (name == "eps")
            return Expr::empty();
        auto it = bindings_.find(name);
        if (it != bindings_.end())
            return it->second;
        if (!alphabet_.count(name))
            throw NameError("unknown action or binding: " + name);
        return Expr::action(name);
    }

    Lexer lex_;
    const bdd::Context& ctx_;
    const ControlMap& ctrl_;
    const std::set<std::string>& alphabet_;
    const std::map<std::string, ExprPtr>& bindings_;
};

} // namespace

ExprPtr parse_expr(std::string_view text, const bdd::Context& ctx, const ControlMap& ctrl,
                   const std::set<std::string>& alphabet,
                   const std::map<std::string, ExprPtr>& bindings) {
    return ExprParser(text, ctx, ctrl, alphabet, bindings).parse();
}

} // namespace reflow::cpog

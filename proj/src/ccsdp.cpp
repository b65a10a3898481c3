#include "reflow/ccsdp.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <sstream>

namespace reflow::ccsdp {

namespace {

enum class Kind : std::uint8_t { Nil, Sum, Par, Fraction, Const };

struct Branch {
    Label::Kind act;
    std::string name;
    TermId cont;

    bool operator<(const Branch& o) const {
        if (act != o.act) return act < o.act;
        if (name != o.name) return name < o.name;
        return cont < o.cont;
    }
    bool operator==(const Branch& o) const {
        return act == o.act && name == o.name && cont == o.cont;
    }
};

struct TermData {
    Kind kind = Kind::Nil;
    std::vector<Branch> branches;  // Sum
    std::vector<TermId> parts;     // Par
    TermId num = 0, den = 0;       // Fraction
    std::string cname;             // Const
    std::vector<std::string> args; // Const
};

struct Definition {
    std::vector<std::string> params;
    TermId body = 0;
    bool has_body = false;
};

std::string term_key(const TermData& t) {
    std::ostringstream os;
    switch (t.kind) {
    case Kind::Nil:
        os << "0";
        break;
    case Kind::Sum:
        os << "S";
        for (const auto& b : t.branches)
            os << "(" << static_cast<int>(b.act) << "," << b.name << "," << b.cont << ")";
        break;
    case Kind::Par:
        os << "P";
        for (auto p : t.parts)
            os << "," << p;
        break;
    case Kind::Fraction:
        os << "F" << t.num << "/" << t.den;
        break;
    case Kind::Const:
        os << "C" << t.cname;
        for (const auto& a : t.args)
            os << "," << a;
        break;
    }
    return os.str();
}

std::string substitute_name(const std::string& name,
                            const std::map<std::string, std::string>& subst) {
    if (subst.empty())
        return name;
    std::string out;
    std::size_t start = 0;
    while (start <= name.size()) {
        std::size_t end = name.find('_', start);
        if (end == std::string::npos)
            end = name.size();
        std::string seg = name.substr(start, end - start);
        auto it = subst.find(seg);
        if (!out.empty())
            out += "_";
        out += it == subst.end() ? seg : it->second;
        if (end == name.size())
            break;
        start = end + 1;
    }
    return out;
}

} // namespace

struct System::Impl {
    std::vector<TermData> terms;
    std::unordered_map<std::string, TermId> term_ids;

    std::vector<std::vector<TermId>> states;
    std::unordered_map<std::string, StateId> state_ids;

    std::map<std::string, Definition> defs;
    std::vector<std::string> order_ids{"o1"};

    // caches
    std::unordered_map<TermId, StateId> normal_form;
    std::unordered_map<StateId, std::vector<Step>> trans_cache;
    std::unordered_map<StateId, std::vector<Step>> trans_cache_del;
    std::unordered_map<TermId, int> positive_cache;
    std::map<std::pair<StateId, StateId>, bool> of_proven;
    std::set<std::pair<StateId, StateId>> of_failed;
    std::unordered_map<StateId, std::vector<StateId>> tau_closure_cache;
    std::set<StateId> trans_in_progress;

    TermId intern(TermData t) {
        std::string key = term_key(t);
        auto it = term_ids.find(key);
        if (it != term_ids.end())
            return it->second;
        terms.push_back(std::move(t));
        TermId id = static_cast<TermId>(terms.size() - 1);
        term_ids.emplace(std::move(key), id);
        return id;
    }

    StateId intern_state(std::vector<TermId> comps) {
        std::sort(comps.begin(), comps.end());
        std::ostringstream os;
        for (auto c : comps)
            os << c << ",";
        std::string key = os.str();
        auto it = state_ids.find(key);
        if (it != state_ids.end())
            return it->second;
        states.push_back(std::move(comps));
        StateId id = static_cast<StateId>(states.size() - 1);
        state_ids.emplace(std::move(key), id);
        return id;
    }

    TermId substitute(TermId t, const std::map<std::string, std::string>& subst);
    TermId unfold_const(const TermData& d);
    void expand_into(TermId t, std::vector<TermId>& out, std::set<TermId>& visiting);
    void first_visible(TermId t, std::set<std::string>& out) const;
    bool positive(TermId t, std::set<std::string>& visiting);
};

System::System() : impl_(std::make_shared<Impl>()) {
    impl_->intern(TermData{}); // id 0 = Nil
    impl_->intern_state({});   // state 0 = empty multiset
}

TermId System::prefix(Label::Kind kind, const std::string& name, TermId cont) {
    if (kind != Label::Kind::Input && kind != Label::Kind::Output && kind != Label::Kind::Tau)
        throw InvariantError("prefixes must be input, output, or internal actions");
    TermData t;
    t.kind = Kind::Sum;
    t.branches.push_back({kind, name, cont});
    return impl_->intern(std::move(t));
}

TermId System::sum(const std::vector<TermId>& operands) {
    TermData t;
    t.kind = Kind::Sum;
    for (auto op : operands) {
        const TermData& d = impl_->terms[op];
        if (d.kind != Kind::Sum)
            throw InvariantError("summands must be action-prefixed");
        t.branches.insert(t.branches.end(), d.branches.begin(), d.branches.end());
    }
    std::sort(t.branches.begin(), t.branches.end());
    t.branches.erase(std::unique(t.branches.begin(), t.branches.end()), t.branches.end());
    if (t.branches.empty())
        return nil();
    return impl_->intern(std::move(t));
}

TermId System::par(const std::vector<TermId>& parts) {
    std::vector<TermId> flat;
    for (auto p : parts) {
        const TermData& d = impl_->terms[p];
        if (d.kind == Kind::Nil)
            continue;
        if (d.kind == Kind::Par)
            flat.insert(flat.end(), d.parts.begin(), d.parts.end());
        else
            flat.push_back(p);
    }
    if (flat.empty())
        return nil();
    if (flat.size() == 1)
        return flat[0];
    std::sort(flat.begin(), flat.end());
    TermData t;
    t.kind = Kind::Par;
    t.parts = std::move(flat);
    return impl_->intern(std::move(t));
}

TermId System::fraction(TermId num, TermId den) {
    TermData t;
    t.kind = Kind::Fraction;
    t.num = num;
    t.den = den;
    return impl_->intern(std::move(t));
}

TermId System::constant(const std::string& name, const std::vector<std::string>& args) {
    TermData t;
    t.kind = Kind::Const;
    t.cname = name;
    t.args = args;
    return impl_->intern(std::move(t));
}

void System::declare(const std::string& name) {
    impl_->defs.emplace(name, Definition{});
}

bool System::defined(const std::string& name) const {
    return impl_->defs.count(name) != 0;
}

void System::define(const std::string& name, const std::vector<std::string>& params,
                    TermId body) {
    auto& def = impl_->defs[name];
    if (def.has_body)
        throw InvariantError("process " + name + " already defined");
    def.params = params;
    def.body = body;
    def.has_body = true;
    // definitions invalidate semantic caches
    impl_->normal_form.clear();
    impl_->trans_cache.clear();
    impl_->trans_cache_del.clear();
    impl_->positive_cache.clear();
    impl_->of_proven.clear();
    impl_->of_failed.clear();
    impl_->tau_closure_cache.clear();
}

void System::set_order_ids(std::vector<std::string> ids) {
    if (ids.empty())
        throw InvariantError("the order-id set must be nonempty");
    impl_->order_ids = std::move(ids);
}

const std::vector<std::string>& System::order_ids() const { return impl_->order_ids; }

TermId System::Impl::substitute(TermId t, const std::map<std::string, std::string>& subst) {
    if (subst.empty())
        return t;
    const TermData d = terms[t];
    switch (d.kind) {
    case Kind::Nil:
        return t;
    case Kind::Sum: {
        TermData out;
        out.kind = Kind::Sum;
        for (const auto& b : d.branches)
            out.branches.push_back(
                {b.act, substitute_name(b.name, subst), substitute(b.cont, subst)});
        std::sort(out.branches.begin(), out.branches.end());
        out.branches.erase(std::unique(out.branches.begin(), out.branches.end()),
                           out.branches.end());
        return intern(std::move(out));
    }
    case Kind::Par: {
        TermData out;
        out.kind = Kind::Par;
        for (auto p : d.parts)
            out.parts.push_back(substitute(p, subst));
        std::sort(out.parts.begin(), out.parts.end());
        return intern(std::move(out));
    }
    case Kind::Fraction: {
        TermData out;
        out.kind = Kind::Fraction;
        out.num = substitute(d.num, subst);
        out.den = substitute(d.den, subst);
        return intern(std::move(out));
    }
    case Kind::Const: {
        TermData out;
        out.kind = Kind::Const;
        out.cname = d.cname;
        for (const auto& a : d.args) {
            auto it = subst.find(a);
            out.args.push_back(it == subst.end() ? a : it->second);
        }
        return intern(std::move(out));
    }
    }
    throw InvariantError("unreachable term kind");
}

TermId System::Impl::unfold_const(const TermData& d) {
    auto it = defs.find(d.cname);
    if (it == defs.end() || !it->second.has_body)
        throw NameError("undefined process constant: " + d.cname);
    const Definition& def = it->second;
    if (def.params.size() != d.args.size())
        throw InvariantError("arity mismatch instantiating " + d.cname);
    std::map<std::string, std::string> subst;
    for (std::size_t i = 0; i < def.params.size(); ++i)
        subst[def.params[i]] = d.args[i];
    return substitute(def.body, subst);
}

void System::Impl::expand_into(TermId t, std::vector<TermId>& out, std::set<TermId>& visiting) {
    const TermData& d = terms[t];
    switch (d.kind) {
    case Kind::Nil:
        return;
    case Kind::Par:
        for (auto p : d.parts)
            expand_into(p, out, visiting);
        return;
    case Kind::Const: {
        if (!visiting.insert(t).second)
            throw Error("unguarded recursion through process constant " + terms[t].cname);
        expand_into(unfold_const(d), out, visiting);
        visiting.erase(t);
        return;
    }
    default:
        out.push_back(t);
        return;
    }
}

StateId System::state_of(TermId t) {
    auto it = impl_->normal_form.find(t);
    if (it != impl_->normal_form.end())
        return it->second;
    std::vector<TermId> comps;
    std::set<TermId> visiting;
    impl_->expand_into(t, comps, visiting);
    StateId s = impl_->intern_state(std::move(comps));
    impl_->normal_form.emplace(t, s);
    if (impl_->states.size() > bounds.max_states)
        throw BoundError("state count exceeds the unfolding bound");
    return s;
}

const std::vector<TermId>& System::components(StateId s) const { return impl_->states[s]; }

bool System::Impl::positive(TermId t, std::set<std::string>& visiting) {
    auto c = positive_cache.find(t);
    if (c != positive_cache.end())
        return c->second == 1;
    const TermData& d = terms[t];
    switch (d.kind) {
    case Kind::Nil:
        return false;
    case Kind::Sum:
        return !d.branches.empty();
    case Kind::Par:
        for (auto p : d.parts) {
            if (positive(p, visiting))
                return true;
        }
        return false;
    case Kind::Fraction:
        return positive(d.den, visiting);
    case Kind::Const: {
        std::string key = term_key(d);
        // Least fixpoint: a constant revisited on its own evaluation path
        // contributes no behaviour of its own.
        if (!visiting.insert(key).second)
            return false;
        bool r = positive(unfold_const(d), visiting);
        visiting.erase(key);
        return r;
    }
    }
    return false;
}

bool System::is_positive(TermId t) {
    auto known = impl_->positive_cache.find(t);
    if (known != impl_->positive_cache.end())
        return known->second == 1;
    std::set<std::string> visiting;
    bool r = impl_->positive(t, visiting);
    impl_->positive_cache[t] = r ? 1 : 0;
    return r;
}

void System::Impl::first_visible(TermId t, std::set<std::string>& out) const {
    const TermData& d = terms[t];
    if (d.kind != Kind::Sum)
        return;
    for (const auto& b : d.branches) {
        if (b.act == Label::Kind::Input)
            out.insert(b.name);
        else if (b.act == Label::Kind::Output)
            out.insert("'" + b.name);
    }
}

std::vector<Step> System::transitions(StateId s, bool include_deletes) {
    auto& cache = include_deletes ? impl_->trans_cache_del : impl_->trans_cache;
    auto it = cache.find(s);
    if (it != cache.end())
        return it->second;
    if (!impl_->trans_in_progress.insert(s).second)
        throw BoundError("cyclic reconfiguration matching");
    struct Guard {
        std::set<StateId>& set;
        StateId id;
        ~Guard() { set.erase(id); }
    } guard{impl_->trans_in_progress, s};

    const std::vector<TermId> comps = impl_->states[s];
    std::vector<Step> steps;

    auto replace = [&](std::size_t i, TermId t) {
        std::vector<TermId> next = comps;
        next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
        if (impl_->terms[t].kind != Kind::Nil)
            next.push_back(t);
        std::vector<TermId> out;
        std::set<TermId> visiting;
        for (auto c : next)
            impl_->expand_into(c, out, visiting);
        return impl_->intern_state(std::move(out));
    };

    // Component transitions lifted through parallel composition.
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const TermData& d = impl_->terms[comps[i]];
        if (d.kind == Kind::Sum) {
            for (const auto& b : d.branches)
                steps.push_back({Label{b.act, b.name, 0}, replace(i, b.cont)});
        } else if (d.kind == Kind::Fraction) {
            if (is_positive(d.den))
                steps.push_back(
                    {Label{Label::Kind::Create, "", state_of(d.den)}, replace(i, d.num)});
        }
    }

    // Reactions between complementary visible actions.
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const TermData& di = impl_->terms[comps[i]];
        if (di.kind != Kind::Sum)
            continue;
        for (std::size_t j = i + 1; j < comps.size(); ++j) {
            const TermData& dj = impl_->terms[comps[j]];
            if (dj.kind != Kind::Sum)
                continue;
            for (const auto& bi : di.branches) {
                if (bi.act == Label::Kind::Tau)
                    continue;
                for (const auto& bj : dj.branches) {
                    if (bj.act == Label::Kind::Tau || bi.name != bj.name ||
                        bi.act == bj.act)
                        continue;
                    std::vector<TermId> next = comps;
                    next.erase(next.begin() + static_cast<std::ptrdiff_t>(j));
                    next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
                    next.push_back(bi.cont);
                    next.push_back(bj.cont);
                    std::vector<TermId> out;
                    std::set<TermId> visiting;
                    for (auto c : next)
                        impl_->expand_into(c, out, visiting);
                    steps.push_back(
                        {Label{Label::Kind::Tau, "", 0}, impl_->intern_state(std::move(out))});
                }
            }
        }
    }

    // Reconfiguration reactions: a fraction consumes a positive sub-multiset
    // of the other components that matches its denominator.
    auto positive_indices = [&](std::size_t skip) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < comps.size(); ++i)
            if (i != skip && is_positive(comps[i]))
                out.push_back(i);
        return out;
    };

    for (std::size_t i = 0; i < comps.size(); ++i) {
        const TermData& d = impl_->terms[comps[i]];
        if (d.kind != Kind::Fraction || !is_positive(d.den))
            continue;
        StateId den_state = state_of(d.den);
        std::set<std::string> den_vis;
        bool den_has_create = false;
        for (auto c : impl_->states[den_state]) {
            impl_->first_visible(c, den_vis);
            const TermData& dc = impl_->terms[c];
            if (dc.kind == Kind::Fraction && is_positive(dc.den))
                den_has_create = true;
        }
        // Candidate components: those whose immediate offers could be part
        // of a state matching the denominator.
        std::vector<std::size_t> idx;
        for (auto cand : positive_indices(i)) {
            std::set<std::string> vis;
            impl_->first_visible(comps[cand], vis);
            bool subset = std::includes(den_vis.begin(), den_vis.end(), vis.begin(), vis.end());
            if (!subset)
                continue;
            const TermData& dc = impl_->terms[comps[cand]];
            if (dc.kind == Kind::Fraction && !den_has_create)
                continue;
            idx.push_back(cand);
        }
        if (idx.size() > 20)
            throw BoundError("too many parallel components for reconfiguration search");
        for (std::uint32_t bits = 1; bits < (1u << idx.size()); ++bits) {
            std::set<std::string> vis;
            std::vector<std::size_t> chosen;
            for (std::size_t k = 0; k < idx.size(); ++k)
                if ((bits >> k) & 1u) {
                    chosen.push_back(idx[k]);
                    impl_->first_visible(comps[idx[k]], vis);
                }
            if (vis != den_vis)
                continue;
            std::vector<TermId> target_comps;
            for (auto c : chosen)
                target_comps.push_back(comps[c]);
            StateId target = impl_->intern_state(std::move(target_comps));
            if (!strong_of_bisim_states(target, den_state))
                continue;
            std::vector<TermId> next;
            for (std::size_t k = 0; k < comps.size(); ++k) {
                if (k == i || std::find(chosen.begin(), chosen.end(), k) != chosen.end())
                    continue;
                next.push_back(comps[k]);
            }
            next.push_back(d.num);
            std::vector<TermId> out;
            std::set<TermId> visiting;
            for (auto c : next)
                impl_->expand_into(c, out, visiting);
            steps.push_back(
                {Label{Label::Kind::Tau, "", 0}, impl_->intern_state(std::move(out))});
        }
    }

    // Deletion transitions: any nonempty all-positive sub-multiset can be
    // consumed by a matching fraction in the environment.
    if (include_deletes) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < comps.size(); ++i)
            if (is_positive(comps[i]))
                idx.push_back(i);
        if (idx.size() > 20)
            throw BoundError("too many parallel components for deletion enumeration");
        for (std::uint32_t bits = 1; bits < (1u << idx.size()); ++bits) {
            std::vector<std::size_t> chosen;
            for (std::size_t k = 0; k < idx.size(); ++k)
                if ((bits >> k) & 1u)
                    chosen.push_back(idx[k]);
            std::vector<TermId> del_comps;
            for (auto c : chosen)
                del_comps.push_back(comps[c]);
            StateId denom = impl_->intern_state(std::move(del_comps));
            std::vector<TermId> next;
            for (std::size_t k = 0; k < comps.size(); ++k)
                if (std::find(chosen.begin(), chosen.end(), k) == chosen.end())
                    next.push_back(comps[k]);
            steps.push_back(
                {Label{Label::Kind::Delete, "", denom}, impl_->intern_state(std::move(next))});
        }
    }

    std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
        if (!(a.label == b.label))
            return a.label < b.label;
        return a.target < b.target;
    });
    steps.erase(std::unique(steps.begin(), steps.end(),
                            [](const Step& a, const Step& b) {
                                return a.label == b.label && a.target == b.target;
                            }),
                steps.end());
    if (impl_->states.size() > bounds.max_states)
        throw BoundError("state count exceeds the unfolding bound");
    cache.emplace(s, steps);
    return steps;
}

std::string System::term_to_string(TermId t) const {
    const TermData& d = impl_->terms[t];
    switch (d.kind) {
    case Kind::Nil:
        return "0";
    case Kind::Sum: {
        std::ostringstream os;
        for (std::size_t i = 0; i < d.branches.size(); ++i) {
            if (i) os << " + ";
            const auto& b = d.branches[i];
            if (b.act == Label::Kind::Tau)
                os << "tau";
            else
                os << (b.act == Label::Kind::Output ? "'" : "") << b.name;
            if (b.cont != 0) {
                const TermData& c = impl_->terms[b.cont];
                bool paren = c.kind == Kind::Par || (c.kind == Kind::Sum && c.branches.size() > 1);
                os << "." << (paren ? "(" : "") << term_to_string(b.cont) << (paren ? ")" : "");
            }
        }
        return os.str();
    }
    case Kind::Par: {
        std::ostringstream os;
        for (std::size_t i = 0; i < d.parts.size(); ++i) {
            if (i) os << " | ";
            const TermData& c = impl_->terms[d.parts[i]];
            bool paren = c.kind == Kind::Sum && c.branches.size() > 1;
            os << (paren ? "(" : "") << term_to_string(d.parts[i]) << (paren ? ")" : "");
        }
        return os.str();
    }
    case Kind::Fraction:
        return "[" + term_to_string(d.num) + " / " + term_to_string(d.den) + "]";
    case Kind::Const: {
        std::string s = d.cname;
        if (!d.args.empty()) {
            s += "<";
            for (std::size_t i = 0; i < d.args.size(); ++i) {
                if (i) s += ",";
                s += d.args[i];
            }
            s += ">";
        }
        return s;
    }
    }
    return "?";
}

std::string System::state_to_string(StateId s) const {
    const auto& comps = impl_->states[s];
    if (comps.empty())
        return "0";
    std::ostringstream os;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (i) os << " | ";
        os << term_to_string(comps[i]);
    }
    return os.str();
}

std::string System::label_to_string(const Label& l) const {
    switch (l.kind) {
    case Label::Kind::Input: return l.name;
    case Label::Kind::Output: return "'" + l.name;
    case Label::Kind::Tau: return "tau";
    case Label::Kind::Create: return "create(" + state_to_string(l.denom) + ")";
    case Label::Kind::Delete: return "delete(" + state_to_string(l.denom) + ")";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct PLexer {
    std::string_view text;
    std::size_t pos = 0;
    const std::map<std::string, std::string>* subst = nullptr;

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
    bool peek_word(std::string_view w) {
        skip_ws();
        if (text.substr(pos, w.size()) != w)
            return false;
        std::size_t after = pos + w.size();
        return after >= text.size() ||
               (!std::isalnum(static_cast<unsigned char>(text[after])) && text[after] != '_');
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos)
            throw ParseError("expected identifier in process at offset " +
                             std::to_string(pos));
        std::string name(text.substr(start, pos - start));
        return subst ? substitute_name(name, *subst) : name;
    }
};

class ProcParser {
public:
    ProcParser(System& sys, std::string_view text) : sys_(sys) { lex_.text = text; }

    TermId parse() {
        TermId t = parallel();
        lex_.skip_ws();
        if (lex_.pos != lex_.text.size())
            throw ParseError("trailing input in process: " +
                             std::string(lex_.text.substr(lex_.pos)));
        return t;
    }

private:
    TermId parallel() {
        std::vector<TermId> parts{summation()};
        while (lex_.peek() == '|') {
            lex_.eat('|');
            parts.push_back(summation());
        }
        return parts.size() == 1 ? parts[0] : sys_.par(parts);
    }

    TermId summation() {
        std::vector<TermId> ops{summand()};
        while (lex_.peek() == '+') {
            lex_.eat('+');
            ops.push_back(summand());
        }
        return ops.size() == 1 ? ops[0] : sys_.sum(ops);
    }

    // A summand: sum-sugar, a prefixed process, or (when alone) any atom.
    TermId summand() {
        if (lex_.peek_word("sum"))
            return sum_sugar();
        return prefixed();
    }

    TermId sum_sugar() {
        lex_.ident(); // "sum"
        std::string var = lex_.ident();
        if (!lex_.peek_word("in"))
            throw ParseError("expected 'in' in sum sugar");
        lex_.ident();
        if (!lex_.peek_word("O"))
            throw ParseError("expected order-id set O in sum sugar");
        lex_.ident();
        if (!lex_.eat('{'))
            throw ParseError("expected '{' in sum sugar");
        std::size_t start = lex_.pos;
        std::size_t depth = 1;
        while (lex_.pos < lex_.text.size() && depth > 0) {
            if (lex_.text[lex_.pos] == '{') ++depth;
            if (lex_.text[lex_.pos] == '}') --depth;
            if (depth > 0) ++lex_.pos;
        }
        if (depth != 0)
            throw ParseError("unbalanced '{' in sum sugar");
        std::string_view body = lex_.text.substr(start, lex_.pos - start);
        ++lex_.pos; // '}'
        std::vector<TermId> instances;
        for (const auto& oid : sys_.order_ids()) {
            std::map<std::string, std::string> subst;
            if (lex_.subst)
                subst = *lex_.subst;
            subst[var] = oid;
            ProcParser inner(sys_, body);
            inner.lex_.subst = &subst;
            instances.push_back(inner.parallel_public());
        }
        return instances.size() == 1 ? instances[0] : sys_.sum(instances);
    }

    TermId parallel_public() {
        TermId t = parallel();
        lex_.skip_ws();
        if (lex_.pos != lex_.text.size())
            throw ParseError("trailing input in sum sugar body");
        return t;
    }

    TermId prefixed() {
        if (lex_.peek() == '(' || lex_.peek() == '[' || lex_.peek() == '0')
            return atom();
        bool output = false;
        if (lex_.peek() == '\'') {
            lex_.eat('\'');
            output = true;
        }
        std::string name = lex_.ident();
        if (!output && sys_.defined(name)) {
            // process constant reference; optional <args>
            std::vector<std::string> args;
            if (lex_.peek() == '<') {
                lex_.eat('<');
                args.push_back(lex_.ident());
                while (lex_.eat(','))
                    args.push_back(lex_.ident());
                if (!lex_.eat('>'))
                    throw ParseError("expected '>' in constant instantiation");
            }
            return sys_.constant(name, args);
        }
        Label::Kind kind = output ? Label::Kind::Output
                                  : (name == "tau" ? Label::Kind::Tau : Label::Kind::Input);
        if (kind == Label::Kind::Tau)
            name.clear();
        TermId cont = sys_.nil();
        if (lex_.peek() == '.') {
            lex_.eat('.');
            cont = prefixed();
        }
        return sys_.prefix(kind, name, cont);
    }

    TermId atom() {
        if (lex_.eat('0'))
            return sys_.nil();
        if (lex_.eat('(')) {
            TermId t = parallel();
            if (!lex_.eat(')'))
                throw ParseError("expected ')' in process");
            return t;
        }
        if (lex_.eat('[')) {
            TermId num = parallel();
            if (!lex_.eat('/'))
                throw ParseError("expected '/' in fraction");
            TermId den = parallel();
            if (!lex_.eat(']'))
                throw ParseError("expected ']' in fraction");
            return sys_.fraction(num, den);
        }
        throw ParseError("expected process atom");
    }

    System& sys_;
    PLexer lex_;
};

} // namespace

TermId System::parse(std::string_view text) { return ProcParser(*this, text).parse(); }

// ---------------------------------------------------------------------------
// Depth of fractional recursion

namespace {

struct DepthCtx {
    System& sys;
    std::set<StateId> in_progress;
    std::map<StateId, unsigned> sfdr_cache;
};

unsigned fdrdepth_state(DepthCtx& ctx, StateId s);

unsigned sfdrdepth_state(DepthCtx& ctx, StateId s) {
    auto it = ctx.sfdr_cache.find(s);
    if (it != ctx.sfdr_cache.end())
        return it->second;
    if (!ctx.in_progress.insert(s).second)
        throw Error("fractional recursion depth is not well defined (self-referential)");
    // successor set over input/output/tau/create transitions
    std::set<StateId> seen{s};
    std::vector<StateId> frontier{s};
    while (!frontier.empty()) {
        StateId cur = frontier.back();
        frontier.pop_back();
        for (const auto& step : ctx.sys.transitions(cur)) {
            if (step.label.kind == Label::Kind::Delete)
                continue;
            if (seen.insert(step.target).second)
                frontier.push_back(step.target);
        }
        if (seen.size() > ctx.sys.bounds.max_states)
            throw BoundError("successor exploration exceeds the state bound");
    }
    unsigned depth = 0;
    for (auto st : seen)
        depth = std::max(depth, fdrdepth_state(ctx, st));
    ctx.in_progress.erase(s);
    ctx.sfdr_cache.emplace(s, depth);
    return depth;
}

unsigned fdrdepth_state(DepthCtx& ctx, StateId s) {
    unsigned depth = 0;
    bool any = false;
    for (const auto& step : ctx.sys.transitions(s)) {
        if (step.label.kind != Label::Kind::Create)
            continue;
        any = true;
        depth = std::max(depth, 1 + sfdrdepth_state(ctx, step.label.denom));
    }
    return any ? depth : 0;
}

} // namespace

unsigned System::sfdrdepth(TermId t) {
    DepthCtx ctx{*this, {}, {}};
    return sfdrdepth_state(ctx, state_of(t));
}

unsigned System::fdrdepth(TermId t) {
    DepthCtx ctx{*this, {}, {}};
    return fdrdepth_state(ctx, state_of(t));
}

// ---------------------------------------------------------------------------
// Strong of-bisimulation
//
// Coinductive matching over input/output/tau/create transitions; creation
// labels correspond when their denominators are of-bisimilar. Pairs assumed
// bisimilar on a cycle are validated by restarting until no new refuted
// pair appears; refutations are always sound.

namespace {

struct OfChecker {
    System& sys;
    std::map<std::pair<StateId, StateId>, bool>& proven;
    std::set<std::pair<StateId, StateId>>& failed;
    std::set<std::pair<StateId, StateId>> assumed;
    bool new_failures = false;
    std::size_t denom_depth = 0;

    bool label_match(const Label& a, const Label& b) {
        if (a.kind != b.kind)
            return false;
        switch (a.kind) {
        case Label::Kind::Input:
        case Label::Kind::Output:
            return a.name == b.name;
        case Label::Kind::Tau:
            return true;
        case Label::Kind::Create:
            if (denom_depth >= sys.bounds.max_denom_depth)
                throw BoundError("denominator matching recursion exceeds bound");
            ++denom_depth;
            {
                bool r = sys.strong_of_bisim_states(a.denom, b.denom);
                --denom_depth;
                return r;
            }
        case Label::Kind::Delete:
            return false; // never matched in of-bisimulation
        }
        return false;
    }

    bool half(StateId from, StateId to) {
        for (const auto& sa : sys.transitions(from)) {
            if (sa.label.kind == Label::Kind::Delete)
                continue;
            bool matched = false;
            for (const auto& sb : sys.transitions(to)) {
                if (sb.label.kind == Label::Kind::Delete)
                    continue;
                if (label_match(sa.label, sb.label) && dfs(sa.target, sb.target)) {
                    matched = true;
                    break;
                }
            }
            if (!matched)
                return false;
        }
        return true;
    }

    bool dfs(StateId a, StateId b) {
        if (a == b)
            return true;
        auto key = std::make_pair(a, b);
        auto p = proven.find(key);
        if (p != proven.end())
            return p->second;
        if (failed.count(key))
            return false;
        if (assumed.count(key))
            return true; // coinductive hypothesis
        assumed.insert(key);
        bool ok = half(a, b) && half(b, a);
        if (!ok) {
            failed.insert(key);
            failed.insert({b, a});
            new_failures = true;
        }
        assumed.erase(key);
        return ok;
    }
};

} // namespace

bool System::strong_of_bisim_states(StateId a, StateId b) {
    if (a == b)
        return true;
    auto key = std::make_pair(a, b);
    auto proven = impl_->of_proven.find(key);
    if (proven != impl_->of_proven.end())
        return proven->second;
    if (impl_->of_failed.count(key))
        return false;
    for (int attempt = 0; attempt < 1 << 16; ++attempt) {
        OfChecker checker{*this, impl_->of_proven, impl_->of_failed, {}, false, 0};
        bool ok = checker.dfs(a, b);
        if (!ok) {
            impl_->of_proven.emplace(key, false);
            impl_->of_proven.emplace(std::make_pair(b, a), false);
            return false;
        }
        if (!checker.new_failures) {
            impl_->of_proven.emplace(key, true);
            impl_->of_proven.emplace(std::make_pair(b, a), true);
            return true;
        }
        // A success that relied on assumptions invalidated later in the same
        // run must be recomputed against the enlarged refutation set.
    }
    throw BoundError("of-bisimulation fixpoint did not stabilize");
}

bool System::strong_of_bisim(TermId a, TermId b) {
    return strong_of_bisim_states(state_of(a), state_of(b));
}

// ---------------------------------------------------------------------------
// Weak observational bisimulation

const std::vector<StateId>& System::tau_closure(StateId s) {
    auto it = impl_->tau_closure_cache.find(s);
    if (it != impl_->tau_closure_cache.end())
        return it->second;
    std::set<StateId> seen{s};
    std::vector<StateId> frontier{s};
    while (!frontier.empty()) {
        StateId cur = frontier.back();
        frontier.pop_back();
        for (const auto& step : transitions(cur)) {
            if (step.label.kind != Label::Kind::Tau)
                continue;
            if (seen.insert(step.target).second)
                frontier.push_back(step.target);
        }
        if (seen.size() > bounds.max_states)
            throw BoundError("tau closure exceeds the state bound");
    }
    return impl_->tau_closure_cache
        .emplace(s, std::vector<StateId>(seen.begin(), seen.end()))
        .first->second;
}

namespace {

struct WeakChecker {
    System& sys;

    const std::vector<StateId>& tau_closure(StateId s) { return sys.tau_closure(s); }

    /// States reachable by tau* a tau* from s.
    std::vector<StateId> weak_post(StateId s, const Label& a) {
        std::set<StateId> out;
        for (auto pre : tau_closure(s)) {
            for (const auto& step : sys.transitions(pre)) {
                if (!(step.label == a))
                    continue;
                for (auto post : tau_closure(step.target))
                    out.insert(post);
            }
        }
        return {out.begin(), out.end()};
    }

    /// Visible labels weakly available from a closure set.
    std::set<Label> visible_menu(const std::vector<StateId>& closure) {
        std::set<Label> out;
        for (auto s : closure)
            for (const auto& step : sys.transitions(s))
                if (step.label.kind == Label::Kind::Input ||
                    step.label.kind == Label::Kind::Output)
                    out.insert(step.label);
        return out;
    }
};

} // namespace

namespace {

/// Every prefix label occurring syntactically in the definitions and roots;
/// a port is "free" when its complement never occurs, i.e. the environment
/// is its only possible communication partner.
struct FreePortOracle {
    std::set<std::string> inputs, outputs;

    bool is_free(const Label& l) const {
        if (l.kind == Label::Kind::Input)
            return !outputs.count(l.name);
        if (l.kind == Label::Kind::Output)
            return !inputs.count(l.name);
        return false;
    }
};

/// Distinguishing-trace search over the determinized weak-transition
/// systems, restricted to a label filter. Returns all differences found at
/// the shallowest depth where any exists.
std::vector<WeakWitness> weak_trace_diffs(System& sys, WeakChecker& wk, StateId a, StateId b,
                                          const std::function<bool(const Label&)>& admit,
                                          std::size_t max_depth) {
    struct Macro {
        std::vector<StateId> left, right;
        std::vector<std::string> path;
    };
    auto closure_union = [&](const std::vector<StateId>& states,
                             const Label& l) -> std::vector<StateId> {
        std::set<StateId> out;
        for (auto s : states)
            for (auto t : wk.weak_post(s, l))
                out.insert(t);
        return {out.begin(), out.end()};
    };
    std::vector<WeakWitness> found;
    std::size_t found_depth = 0;
    std::set<std::pair<std::vector<StateId>, std::vector<StateId>>> visited;
    std::vector<Macro> queue{{wk.tau_closure(a), wk.tau_closure(b), {}}};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Macro m = queue[qi];
        if (!found.empty() && m.path.size() > found_depth)
            break;
        if (!visited.insert({m.left, m.right}).second)
            continue;
        std::set<Label> menu_l, menu_r;
        for (const auto& l : wk.visible_menu(m.left))
            if (admit(l))
                menu_l.insert(l);
        for (const auto& l : wk.visible_menu(m.right))
            if (admit(l))
                menu_r.insert(l);
        std::vector<WeakWitness> here;
        for (const auto& l : menu_l)
            if (!menu_r.count(l)) {
                WeakWitness w;
                w.sequence = m.path;
                w.sequence.push_back(sys.label_to_string(l));
                w.side = 0;
                here.push_back(std::move(w));
            }
        for (const auto& l : menu_r)
            if (!menu_l.count(l)) {
                WeakWitness w;
                w.sequence = m.path;
                w.sequence.push_back(sys.label_to_string(l));
                w.side = 1;
                here.push_back(std::move(w));
            }
        if (!here.empty()) {
            if (found.empty())
                found_depth = m.path.size();
            found.insert(found.end(), here.begin(), here.end());
            continue;
        }
        if (m.path.size() >= max_depth)
            continue;
        for (const auto& l : menu_l) {
            if (!menu_r.count(l))
                continue;
            Macro next;
            next.left = closure_union(m.left, l);
            next.right = closure_union(m.right, l);
            next.path = m.path;
            next.path.push_back(sys.label_to_string(l));
            queue.push_back(std::move(next));
        }
    }
    // Outputs (observations offered to the environment) first, then inputs,
    // then lexicographic; deterministic primary witness.
    std::stable_sort(found.begin(), found.end(), [](const WeakWitness& x, const WeakWitness& y) {
        bool xo = !x.sequence.empty() && x.sequence.back().rfind('\'', 0) == 0;
        bool yo = !y.sequence.empty() && y.sequence.back().rfind('\'', 0) == 0;
        if (xo != yo)
            return xo;
        if (x.side != y.side)
            return x.side < y.side;
        return x.sequence < y.sequence;
    });
    return found;
}

/// Coinductive pairwise weak bisimulation with refutation accumulation;
/// absent when the exploration exceeds the state bound.
std::optional<bool> pairwise_weak(System& sys, WeakChecker& wk, StateId a, StateId b) {
    std::set<std::pair<StateId, StateId>> failed;
    struct Pairwise {
        System& sys;
        WeakChecker& wk;
        std::set<std::pair<StateId, StateId>>& failed;
        std::set<std::pair<StateId, StateId>> assumed;
        bool new_failures = false;

        bool half(StateId from, StateId to) {
            for (const auto& step : sys.transitions(from)) {
                if (step.label.kind == Label::Kind::Create ||
                    step.label.kind == Label::Kind::Delete)
                    continue;
                bool matched = false;
                if (step.label.kind == Label::Kind::Tau) {
                    for (auto t : wk.tau_closure(to))
                        if (dfs(step.target, t)) {
                            matched = true;
                            break;
                        }
                } else {
                    for (auto t : wk.weak_post(to, step.label))
                        if (dfs(step.target, t)) {
                            matched = true;
                            break;
                        }
                }
                if (!matched)
                    return false;
            }
            return true;
        }

        bool dfs(StateId x, StateId y) {
            if (x == y)
                return true;
            auto key = std::make_pair(x, y);
            if (failed.count(key))
                return false;
            if (assumed.count(key))
                return true;
            assumed.insert(key);
            bool ok = half(x, y) && half(y, x);
            if (!ok) {
                failed.insert(key);
                failed.insert({y, x});
                new_failures = true;
            }
            assumed.erase(key);
            return ok;
        }
    };
    try {
        for (int attempt = 0; attempt < 1 << 16; ++attempt) {
            Pairwise pw{sys, wk, failed, {}, false};
            bool ok = pw.dfs(a, b);
            if (!ok)
                return false;
            if (!pw.new_failures)
                return true;
        }
    } catch (const BoundError&) {
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace

bool System::weakly_performs(TermId t, const std::vector<std::string>& sequence) {
    WeakChecker wk{*this};
    std::set<StateId> cur;
    for (auto s : wk.tau_closure(state_of(t)))
        cur.insert(s);
    for (const auto& entry : sequence) {
        Label l;
        if (!entry.empty() && entry[0] == '\'') {
            l.kind = Label::Kind::Output;
            l.name = entry.substr(1);
        } else {
            l.kind = Label::Kind::Input;
            l.name = entry;
        }
        std::set<StateId> next;
        for (auto s : cur)
            for (auto p : wk.weak_post(s, l))
                next.insert(p);
        if (next.empty())
            return false;
        cur = std::move(next);
    }
    return true;
}

WeakVerdict System::weak_obs_bisim(TermId ta, TermId tb) {
    return weak_obs_bisim_states(state_of(ta), state_of(tb));
}

WeakVerdict System::weak_obs_bisim_states(StateId a, StateId b) {
    WeakChecker wk{*this};
    if (a == b) {
        WeakVerdict v;
        v.bisimilar = true;
        return v;
    }

    // Phase 1: coinductive pairwise weak bisimulation. The equality
    // shortcut keeps this cheap on recursive systems whose matching
    // successors coincide, so it runs before any trace exploration.
    std::optional<bool> pairwise = pairwise_weak(*this, wk, a, b);
    if (pairwise.has_value() && *pairwise) {
        WeakVerdict v;
        v.bisimilar = true;
        return v;
    }

    // Phase 2: distinguishing weak traces as the witness, first over free
    // ports (the environment-facing interface), then over every visible
    // port.
    FreePortOracle free_ports;
    {
        std::set<TermId> seen;
        std::function<void(TermId)> collect = [&](TermId t) {
            if (!seen.insert(t).second)
                return;
            const TermData& d = impl_->terms[t];
            switch (d.kind) {
            case Kind::Nil:
                break;
            case Kind::Sum:
                for (const auto& br : d.branches) {
                    if (br.act == Label::Kind::Input)
                        free_ports.inputs.insert(br.name);
                    else if (br.act == Label::Kind::Output)
                        free_ports.outputs.insert(br.name);
                    collect(br.cont);
                }
                break;
            case Kind::Par:
                for (auto p : d.parts)
                    collect(p);
                break;
            case Kind::Fraction:
                collect(d.num);
                collect(d.den);
                break;
            case Kind::Const:
                break; // definitions are walked separately
            }
        };
        for (const auto& c : impl_->states[a])
            collect(c);
        for (const auto& c : impl_->states[b])
            collect(c);
        for (const auto& [name, def] : impl_->defs)
            if (def.has_body)
                collect(def.body);
    }

    std::vector<WeakWitness> diffs;
    try {
        diffs = weak_trace_diffs(
            *this, wk, a, b, [&](const Label& l) { return free_ports.is_free(l); },
            bounds.max_trace_depth);
        if (diffs.empty())
            diffs = weak_trace_diffs(
                *this, wk, a, b, [](const Label&) { return true; },
                bounds.max_trace_depth);
    } catch (const BoundError&) {
        if (!pairwise.has_value())
            throw;
    }
    if (!diffs.empty()) {
        WeakVerdict v;
        v.bisimilar = false;
        v.witnesses = std::move(diffs);
        return v;
    }
    if (pairwise.has_value() && !*pairwise) {
        // refuted without a trace-level witness inside the depth bound
        WeakVerdict v;
        v.bisimilar = false;
        return v;
    }
    throw BoundError("weak bisimulation undecided within the configured bounds");
}

} // namespace reflow::ccsdp

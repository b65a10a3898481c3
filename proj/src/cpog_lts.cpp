#include "reflow/cpog_lts.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace reflow::cpog {

namespace {

/// Precomputed per-vertex data for bitmask evaluation.
struct Compiled {
    std::vector<std::string> vertex_names;
    std::vector<std::string> var_names; // the full context universe, in order
    std::map<std::string, std::uint32_t> vertex_index;
    std::map<std::string, std::uint32_t> var_index;
    std::vector<bdd::Bdd> vertex_cond;
    std::vector<std::vector<std::pair<std::uint32_t, bdd::Bdd>>> arcs_into; // target -> (source, cond)
    std::vector<std::vector<std::uint32_t>> controlled_by;                  // vertex -> var indices

    bdd::Assignment assignment(std::uint32_t psi) const {
        bdd::Assignment a;
        for (std::size_t i = 0; i < var_names.size(); ++i)
            a[var_names[i]] = (psi >> i) & 1u;
        return a;
    }
};

Compiled compile(const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx,
                 const LtsBounds& bounds) {
    if (cf.vertices.size() > bounds.max_vertices)
        throw BoundError("vertex count " + std::to_string(cf.vertices.size()) +
                         " exceeds the state-space bound of " +
                         std::to_string(bounds.max_vertices));
    Compiled c;
    for (const auto& [a, f] : cf.vertices) {
        c.vertex_index[a] = static_cast<std::uint32_t>(c.vertex_names.size());
        c.vertex_names.push_back(a);
        c.vertex_cond.push_back(f);
    }
    // The assignment universe: every context variable (conditions may refer
    // to any of them; uncontrolled ones stay 0 forever).
    for (const auto& v : ctx.variables()) {
        c.var_index[v] = static_cast<std::uint32_t>(c.var_names.size());
        c.var_names.push_back(v);
    }
    if (c.var_names.size() > 30)
        throw BoundError("variable universe too large for bitmask states");
    c.arcs_into.resize(c.vertex_names.size());
    for (const auto& [ab, f] : cf.arcs) {
        auto si = c.vertex_index.find(ab.first);
        auto ti = c.vertex_index.find(ab.second);
        if (si == c.vertex_index.end() || ti == c.vertex_index.end())
            continue;
        c.arcs_into[ti->second].emplace_back(si->second, f);
    }
    c.controlled_by.resize(c.vertex_names.size());
    for (const auto& [var, action] : ctrl.entries()) {
        auto vi = c.vertex_index.find(action);
        auto xi = c.var_index.find(var);
        if (vi != c.vertex_index.end() && xi != c.var_index.end())
            c.controlled_by[vi->second].push_back(xi->second);
    }
    return c;
}

bool eval_mask(const bdd::Bdd& f, std::uint32_t psi, const Compiled& c) {
    return f.eval(c.assignment(psi));
}

bool enabled(std::uint32_t v, const LtsState& s, const Compiled& c) {
    if ((s.history >> v) & 1u)
        return false;
    if (!eval_mask(c.vertex_cond[v], s.psi, c))
        return false;
    for (const auto& [u, f] : c.arcs_into[v]) {
        if (!eval_mask(c.vertex_cond[u], s.psi, c))
            continue;
        if (!eval_mask(f, s.psi, c))
            continue;
        if (!((s.history >> u) & 1u))
            return false;
    }
    return true;
}

/// Successor assignments when the vertices in `fired` fire: each variable
/// they control may take either value, all others are framed.
std::vector<std::uint32_t> next_psis(std::uint32_t psi, const std::vector<std::uint32_t>& fired,
                                     const Compiled& c) {
    std::vector<std::uint32_t> free_vars;
    for (auto v : fired)
        for (auto x : c.controlled_by[v])
            free_vars.push_back(x);
    std::sort(free_vars.begin(), free_vars.end());
    free_vars.erase(std::unique(free_vars.begin(), free_vars.end()), free_vars.end());
    std::vector<std::uint32_t> out;
    std::uint32_t n = static_cast<std::uint32_t>(free_vars.size());
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        std::uint32_t p = psi;
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uint32_t mask = 1u << free_vars[i];
            if ((bits >> i) & 1u)
                p |= mask;
            else
                p &= ~mask;
        }
        out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::uint32_t mask_of(const std::set<std::string>& names,
                      const std::map<std::string, std::uint32_t>& index, const char* what) {
    std::uint32_t m = 0;
    for (const auto& n : names) {
        auto it = index.find(n);
        if (it == index.end())
            throw NameError(std::string("unknown ") + what + ": " + n);
        m |= 1u << it->second;
    }
    return m;
}

std::uint32_t psi_mask(const bdd::Assignment& a, const Compiled& c) {
    std::uint32_t m = 0;
    for (const auto& [name, val] : a) {
        auto it = c.var_index.find(name);
        if (it == c.var_index.end())
            throw NameError("unknown variable: " + name);
        if (val)
            m |= 1u << it->second;
    }
    return m;
}

std::set<std::string> history_names(std::uint32_t mask, const Compiled& c) {
    std::set<std::string> out;
    for (std::size_t i = 0; i < c.vertex_names.size(); ++i)
        if ((mask >> i) & 1u)
            out.insert(c.vertex_names[i]);
    return out;
}

} // namespace

std::set<std::string> preset(const std::string& v, const bdd::Assignment& psi,
                             const CanonicalForm& cf, const bdd::Context& ctx) {
    if (!cf.vertices.count(v))
        throw NameError("unknown action: " + v);
    std::set<std::string> out;
    for (const auto& [ab, f] : cf.arcs) {
        if (ab.second != v)
            continue;
        const auto& u = ab.first;
        if (cf.vertex(u, ctx).eval(psi) && f.eval(psi))
            out.insert(u);
    }
    return out;
}

std::vector<std::pair<std::string, std::pair<std::set<std::string>, bdd::Assignment>>>
step_single(const std::set<std::string>& history, const bdd::Assignment& psi,
            const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx) {
    Compiled c = compile(cf, ctrl, ctx, {});
    LtsState s{mask_of(history, c.vertex_index, "action"), psi_mask(psi, c)};
    std::vector<std::pair<std::string, std::pair<std::set<std::string>, bdd::Assignment>>> out;
    for (std::uint32_t v = 0; v < c.vertex_names.size(); ++v) {
        if (!enabled(v, s, c))
            continue;
        for (auto p : next_psis(s.psi, {v}, c))
            out.emplace_back(c.vertex_names[v],
                             std::make_pair(history_names(s.history | (1u << v), c),
                                            c.assignment(p)));
    }
    return out;
}

std::vector<std::pair<std::set<std::string>, bdd::Assignment>>
step_set(const std::set<std::string>& history, const bdd::Assignment& psi,
         const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx,
         const std::set<std::string>& w) {
    if (w.empty())
        throw InvariantError("step set must be nonempty");
    Compiled c = compile(cf, ctrl, ctx, {});
    LtsState s{mask_of(history, c.vertex_index, "action"), psi_mask(psi, c)};
    std::vector<std::uint32_t> fired;
    for (const auto& name : w) {
        auto it = c.vertex_index.find(name);
        if (it == c.vertex_index.end())
            throw NameError("unknown action: " + name);
        if (!enabled(it->second, s, c))
            return {};
        fired.push_back(it->second);
    }
    std::uint32_t h = s.history;
    for (auto v : fired)
        h |= 1u << v;
    std::vector<std::pair<std::set<std::string>, bdd::Assignment>> out;
    for (auto p : next_psis(s.psi, fired, c))
        out.emplace_back(history_names(h, c), c.assignment(p));
    return out;
}

Lts reachable(const CanonicalForm& cf, const ControlMap& ctrl, const bdd::Context& ctx,
              bool true_concurrency, const LtsBounds& bounds) {
    Compiled c = compile(cf, ctrl, ctx, bounds);
    Lts lts;
    lts.vertex_names = c.vertex_names;
    lts.var_names = c.var_names;

    std::map<LtsState, std::uint32_t> ids;
    auto intern = [&](const LtsState& s) {
        auto it = ids.find(s);
        if (it != ids.end())
            return it->second;
        if (lts.states.size() >= bounds.max_states)
            throw BoundError("reachable state count exceeds bound");
        std::uint32_t id = static_cast<std::uint32_t>(lts.states.size());
        lts.states.push_back(s);
        ids.emplace(s, id);
        return id;
    };

    intern(LtsState{});
    for (std::uint32_t cur = 0; cur < lts.states.size(); ++cur) {
        LtsState s = lts.states[cur];
        std::vector<std::uint32_t> en;
        for (std::uint32_t v = 0; v < c.vertex_names.size(); ++v)
            if (enabled(v, s, c))
                en.push_back(v);
        if (en.empty()) {
            // Deadlock: some vertex condition still holds but nothing can fire.
            for (std::uint32_t v = 0; v < c.vertex_names.size(); ++v) {
                if (!((s.history >> v) & 1u) && eval_mask(c.vertex_cond[v], s.psi, c)) {
                    lts.deadlocked.push_back(cur);
                    break;
                }
            }
            continue;
        }
        std::vector<std::vector<std::uint32_t>> labels;
        if (!true_concurrency) {
            for (auto v : en)
                labels.push_back({v});
        } else {
            std::uint32_t n = static_cast<std::uint32_t>(en.size());
            if (n > 16)
                throw BoundError("too many simultaneously enabled actions for set-steps");
            for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
                std::vector<std::uint32_t> w;
                for (std::uint32_t i = 0; i < n; ++i)
                    if ((bits >> i) & 1u)
                        w.push_back(en[i]);
                labels.push_back(std::move(w));
            }
        }
        for (const auto& w : labels) {
            std::uint32_t h = s.history;
            for (auto v : w)
                h |= 1u << v;
            for (auto p : next_psis(s.psi, w, c))
                lts.transitions.push_back({cur, w, intern(LtsState{h, p})});
        }
    }

    auto label_names = [&](const std::vector<std::uint32_t>& l) {
        std::vector<std::string> names;
        for (auto v : l)
            names.push_back(c.vertex_names[v]);
        std::sort(names.begin(), names.end());
        return names;
    };
    std::stable_sort(lts.transitions.begin(), lts.transitions.end(),
                     [&](const LtsTransition& x, const LtsTransition& y) {
                         if (x.from != y.from)
                             return x.from < y.from;
                         auto lx = label_names(x.label), ly = label_names(y.label);
                         if (lx != ly)
                             return lx < ly;
                         return x.to < y.to;
                     });
    std::sort(lts.deadlocked.begin(), lts.deadlocked.end());
    return lts;
}

bool Lts::contains_state(const std::set<std::string>& history, const bdd::Assignment& psi) const {
    std::uint32_t h = 0;
    for (const auto& n : history) {
        auto it = std::find(vertex_names.begin(), vertex_names.end(), n);
        if (it == vertex_names.end())
            return false;
        h |= 1u << (it - vertex_names.begin());
    }
    std::uint32_t p = 0;
    for (const auto& [name, val] : psi) {
        auto it = std::find(var_names.begin(), var_names.end(), name);
        if (it == var_names.end())
            throw NameError("unknown variable: " + name);
        if (val)
            p |= 1u << (it - var_names.begin());
    }
    for (const auto& s : states)
        if (s.history == h && s.psi == p)
            return true;
    return false;
}

std::string Lts::state_to_string(std::uint32_t id) const {
    const LtsState& s = states[id];
    std::ostringstream os;
    os << "({";
    bool first = true;
    std::vector<std::string> hist;
    for (std::size_t i = 0; i < vertex_names.size(); ++i)
        if ((s.history >> i) & 1u)
            hist.push_back(vertex_names[i]);
    std::sort(hist.begin(), hist.end());
    for (const auto& n : hist) {
        if (!first) os << ",";
        first = false;
        os << n;
    }
    os << "}, ";
    first = true;
    for (std::size_t i = 0; i < var_names.size(); ++i) {
        if (!first) os << ",";
        first = false;
        os << var_names[i] << "=" << ((s.psi >> i) & 1u);
    }
    os << ")";
    return os.str();
}

std::string Lts::to_text() const {
    std::ostringstream os;
    for (const auto& t : transitions) {
        std::vector<std::string> names;
        for (auto v : t.label)
            names.push_back(vertex_names[v]);
        std::sort(names.begin(), names.end());
        os << state_to_string(t.from) << " --{";
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) os << ",";
            os << names[i];
        }
        os << "}--> " << state_to_string(t.to) << "\n";
    }
    for (auto d : deadlocked)
        os << "deadlock " << state_to_string(d) << "\n";
    return os.str();
}

std::string Lts::to_dot() const {
    std::ostringstream os;
    os << "digraph lts {\n  rankdir=LR;\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        os << "  s" << i << " [label=\"" << state_to_string(static_cast<std::uint32_t>(i))
           << "\"";
        if (std::find(deadlocked.begin(), deadlocked.end(), i) != deadlocked.end())
            os << ", color=red";
        os << "];\n";
    }
    for (const auto& t : transitions) {
        std::vector<std::string> names;
        for (auto v : t.label)
            names.push_back(vertex_names[v]);
        std::sort(names.begin(), names.end());
        os << "  s" << t.from << " -> s" << t.to << " [label=\"{";
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) os << ",";
            os << names[i];
        }
        os << "}\"];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace reflow::cpog

#include "reflow/bdd.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace reflow::bdd {

namespace {
constexpr std::uint32_t kTermVar = 0xffffffffu;

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}
} // namespace

Context::Context(std::vector<std::string> variables) {
    std::sort(variables.begin(), variables.end());
    variables.erase(std::unique(variables.begin(), variables.end()), variables.end());
    for (const auto& v : variables) {
        if (v.empty())
            throw InvariantError("variable names must be nonempty");
    }
    vars_ = std::move(variables);
    for (std::uint32_t i = 0; i < vars_.size(); ++i)
        var_index_[vars_[i]] = i;
    nodes_.push_back({kTermVar, 0, 0}); // 0 = false
    nodes_.push_back({kTermVar, 1, 1}); // 1 = true
}

bool Context::has_variable(const std::string& name) const {
    return var_index_.count(name) != 0;
}

Bdd Context::var(const std::string& name) const {
    auto it = var_index_.find(name);
    if (it == var_index_.end())
        throw NameError("unknown variable: " + name);
    return Bdd(this, mk(it->second, 0, 1));
}

std::uint32_t Context::mk(std::uint32_t var, std::uint32_t lo, std::uint32_t hi) const {
    if (lo == hi)
        return lo;
    std::uint64_t key = (static_cast<std::uint64_t>(var) << 42) ^ pack(lo, hi);
    auto it = unique_.find(key);
    if (it != unique_.end())
        return it->second;
    nodes_.push_back({var, lo, hi});
    std::uint32_t id = static_cast<std::uint32_t>(nodes_.size() - 1);
    unique_.emplace(key, id);
    return id;
}

std::uint32_t Context::apply_and(std::uint32_t a, std::uint32_t b) const {
    if (a == 0 || b == 0) return 0;
    if (a == 1) return b;
    if (b == 1) return a;
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    std::uint64_t key = pack(a, b);
    auto it = and_cache_.find(key);
    if (it != and_cache_.end())
        return it->second;
    const Node na = nodes_[a], nb = nodes_[b];
    std::uint32_t v = std::min(na.var, nb.var);
    std::uint32_t alo = na.var == v ? na.lo : a, ahi = na.var == v ? na.hi : a;
    std::uint32_t blo = nb.var == v ? nb.lo : b, bhi = nb.var == v ? nb.hi : b;
    std::uint32_t r = mk(v, apply_and(alo, blo), apply_and(ahi, bhi));
    and_cache_.emplace(key, r);
    return r;
}

std::uint32_t Context::apply_or(std::uint32_t a, std::uint32_t b) const {
    if (a == 1 || b == 1) return 1;
    if (a == 0) return b;
    if (b == 0) return a;
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    std::uint64_t key = pack(a, b);
    auto it = or_cache_.find(key);
    if (it != or_cache_.end())
        return it->second;
    const Node na = nodes_[a], nb = nodes_[b];
    std::uint32_t v = std::min(na.var, nb.var);
    std::uint32_t alo = na.var == v ? na.lo : a, ahi = na.var == v ? na.hi : a;
    std::uint32_t blo = nb.var == v ? nb.lo : b, bhi = nb.var == v ? nb.hi : b;
    std::uint32_t r = mk(v, apply_or(alo, blo), apply_or(ahi, bhi));
    or_cache_.emplace(key, r);
    return r;
}

std::uint32_t Context::apply_xor(std::uint32_t a, std::uint32_t b) const {
    if (a == b) return 0;
    if (a == 0) return b;
    if (b == 0) return a;
    if (a == 1) return apply_not(b);
    if (b == 1) return apply_not(a);
    if (a > b) std::swap(a, b);
    std::uint64_t key = pack(a, b);
    auto it = xor_cache_.find(key);
    if (it != xor_cache_.end())
        return it->second;
    const Node na = nodes_[a], nb = nodes_[b];
    std::uint32_t v = std::min(na.var, nb.var);
    std::uint32_t alo = na.var == v ? na.lo : a, ahi = na.var == v ? na.hi : a;
    std::uint32_t blo = nb.var == v ? nb.lo : b, bhi = nb.var == v ? nb.hi : b;
    std::uint32_t r = mk(v, apply_xor(alo, blo), apply_xor(ahi, bhi));
    xor_cache_.emplace(key, r);
    return r;
}

std::uint32_t Context::apply_not(std::uint32_t a) const {
    if (a == 0) return 1;
    if (a == 1) return 0;
    auto it = not_cache_.find(a);
    if (it != not_cache_.end())
        return it->second;
    const Node n = nodes_[a];
    std::uint32_t r = mk(n.var, apply_not(n.lo), apply_not(n.hi));
    not_cache_.emplace(a, r);
    return r;
}

std::uint32_t Context::apply_restrict(std::uint32_t a, std::uint32_t var, bool value) const {
    if (a <= 1) return a;
    const Node n = nodes_[a];
    if (n.var > var) return a;
    std::uint64_t key = pack(a, (var << 1) | (value ? 1 : 0));
    auto it = restrict_cache_.find(key);
    if (it != restrict_cache_.end())
        return it->second;
    std::uint32_t r;
    if (n.var == var)
        r = value ? n.hi : n.lo;
    else
        r = mk(n.var, apply_restrict(n.lo, var, value), apply_restrict(n.hi, var, value));
    restrict_cache_.emplace(key, r);
    return r;
}

Bdd Bdd::operator&(const Bdd& o) const { return Bdd(ctx_, ctx_->apply_and(id_, o.id_)); }
Bdd Bdd::operator|(const Bdd& o) const { return Bdd(ctx_, ctx_->apply_or(id_, o.id_)); }
Bdd Bdd::operator^(const Bdd& o) const { return Bdd(ctx_, ctx_->apply_xor(id_, o.id_)); }
Bdd Bdd::operator!() const { return Bdd(ctx_, ctx_->apply_not(id_)); }

Bdd Bdd::restrict_var(const std::string& name, bool value) const {
    auto it = ctx_->var_index_.find(name);
    if (it == ctx_->var_index_.end())
        throw NameError("unknown variable: " + name);
    return Bdd(ctx_, ctx_->apply_restrict(id_, it->second, value));
}

bool Bdd::eval(const Assignment& a) const {
    std::uint32_t id = id_;
    while (id > 1) {
        const auto& n = ctx_->nodes_[id];
        const std::string& name = ctx_->vars_[n.var];
        auto it = a.find(name);
        if (it == a.end())
            throw NameError("unassigned variable: " + name);
        id = it->second ? n.hi : n.lo;
    }
    return id == 1;
}

std::vector<std::string> Bdd::support() const {
    std::set<std::uint32_t> seen;
    std::vector<std::uint32_t> stack{id_};
    std::set<std::uint32_t> vars;
    while (!stack.empty()) {
        std::uint32_t id = stack.back();
        stack.pop_back();
        if (id <= 1 || !seen.insert(id).second)
            continue;
        const auto& n = ctx_->nodes_[id];
        vars.insert(n.var);
        stack.push_back(n.lo);
        stack.push_back(n.hi);
    }
    std::vector<std::string> out;
    for (auto v : vars)
        out.push_back(ctx_->vars_[v]);
    return out;
}

std::string Bdd::to_string() const {
    if (is_false()) return "0";
    if (is_true()) return "1";
    std::vector<std::string> cubes;
    std::vector<std::pair<std::uint32_t, bool>> path; // (var, value)
    // Depth-first enumeration of paths to the true terminal; lo first for
    // a stable rendering.
    struct Frame {
        std::uint32_t id;
        int branch; // 0 = lo next, 1 = hi next, 2 = done
    };
    std::vector<Frame> stack{{id_, 0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.id == 0 || (f.id == 1 && f.branch > 0)) {
            stack.pop_back();
            if (!path.empty()) path.pop_back();
            continue;
        }
        if (f.id == 1) {
            std::ostringstream os;
            bool first = true;
            for (auto& [v, val] : path) {
                if (!first) os << " & ";
                first = false;
                if (!val) os << "!";
                os << ctx_->vars_[v];
            }
            cubes.push_back(os.str());
            f.branch = 2;
            continue;
        }
        const auto& n = ctx_->nodes_[f.id];
        if (f.branch == 0) {
            f.branch = 1;
            path.emplace_back(n.var, false);
            stack.push_back({n.lo, 0});
        } else if (f.branch == 1) {
            f.branch = 2;
            path.emplace_back(n.var, true);
            stack.push_back({n.hi, 0});
        } else {
            stack.pop_back();
            if (!path.empty()) path.pop_back();
        }
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (i) os << " | ";
        os << cubes[i];
    }
    return os.str();
}

namespace {

struct CondLexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos)
            throw ParseError("expected identifier in condition at offset " +
                             std::to_string(pos));
        return std::string(text.substr(start, pos - start));
    }
};

class CondParser {
public:
    CondParser(const Context& ctx, std::string_view text) : ctx_(ctx), lex_{text} {}

    Bdd parse() {
        Bdd e = disjunction();
        lex_.skip_ws();
        if (lex_.pos != lex_.text.size())
            throw ParseError("trailing input in condition: " +
                             std::string(lex_.text.substr(lex_.pos)));
        return e;
    }

private:
    Bdd disjunction() {
        Bdd e = conjunction();
        while (lex_.peek() == '|') {
            lex_.eat('|');
            e = e | conjunction();
        }
        return e;
    }
    Bdd conjunction() {
        Bdd e = unary();
        while (lex_.peek() == '&') {
            lex_.eat('&');
            e = e & unary();
        }
        return e;
    }
    Bdd unary() {
        if (lex_.eat('!'))
            return !unary();
        if (lex_.eat('(')) {
            Bdd e = disjunction();
            if (!lex_.eat(')'))
                throw ParseError("expected ')' in condition");
            return e;
        }
        char c = lex_.peek();
        if (c == '0' || c == '1') {
            std::string tok = lex_.ident();
            if (tok == "0") return ctx_.constant(false);
            if (tok == "1") return ctx_.constant(true);
            throw ParseError("bad constant in condition: " + tok);
        }
        return ctx_.var(lex_.ident());
    }

    const Context& ctx_;
    CondLexer lex_;
};

} // namespace

Bdd Context::parse(std::string_view text) const {
    return CondParser(*this, text).parse();
}

} // namespace reflow::bdd

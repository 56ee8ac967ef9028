#include "specnip/security.hpp"

#include <deque>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "state_hash.hpp"

namespace specnip {

bool low_equivalent(const Program& p, const State& a, const State& b) {
    if (a.pc != b.pc || a.regs != b.regs) return false;
    for (std::size_t c = 0; c < p.cell_count(); ++c)
        if (p.var(p.cell_at(c).first).level == Level::low && a.mem[c] != b.mem[c]) return false;
    return true;
}

SafetyResult check_safety(const Program& p, const State& s0, unsigned max_steps) {
    State s = s0;
    for (unsigned k = 0; k < max_steps; ++k) {
        if (std::holds_alternative<ins::Exit>(p.at(s.pc))) return {SafetyResult::Kind::safe, k};
        auto r = step_spec_free(p, s, Directive::step());
        if (!r) r = step_spec_free(p, s, Directive::branch());
        if (!r) return {SafetyResult::Kind::unsafe, k};
        s = std::move(r->first);
    }
    if (std::holds_alternative<ins::Exit>(p.at(s.pc)))
        return {SafetyResult::Kind::safe, max_steps};
    return {SafetyResult::Kind::bound_exhausted, max_steps};
}

namespace {

struct JointKey {
    SpecState a, b;
    bool operator==(const JointKey&) const = default;
};

struct JointHash {
    std::size_t operator()(const JointKey& k) const {
        std::size_t h = 0;
        detail::hash_into(h, k.a);
        detail::hash_into(h, k.b);
        return h;
    }
};

struct Node {
    JointKey key;
    std::size_t parent;
    Directive via;
    unsigned dist;
};

std::vector<Directive> path_to(const std::vector<Node>& nodes, std::size_t n) {
    std::vector<Directive> out;
    while (n != 0) {
        out.push_back(nodes[n].via);
        n = nodes[n].parent;
    }
    return {out.rbegin(), out.rend()};
}

}  // namespace

SniVerdict check_sni_pair(const Program& p, const State& a, const State& b, const Bounds& bounds) {
    if (!low_equivalent(p, a, b))
        throw std::invalid_argument("initial states are not low-equivalent");
    SniVerdict v;
    v.bounds = bounds;
    v.pairs = 1;
    std::vector<Node> nodes;
    std::unordered_map<JointKey, std::size_t, JointHash> seen;
    nodes.push_back({{single(a), single(b)}, 0, {}, 0});
    seen.emplace(nodes[0].key, 0);
    auto violation = [&](std::vector<Directive> ds, Divergence d) {
        v.kind = SniVerdict::Kind::violation;
        v.first = a;
        v.second = b;
        v.directives = std::move(ds);
        v.divergence = std::move(d);
        v.states = nodes.size();
        return v;
    };
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const SpecState x = nodes[n].key.a;
        const SpecState y = nodes[n].key.b;
        const unsigned dist = nodes[n].dist;
        if (is_final(p, x)) continue;
        if (dist >= bounds.max_steps) {
            ++v.truncated;
            continue;
        }
        auto e1 = enabled_directives(p, x);
        auto e2 = enabled_directives(p, y);
        if (e1 != e2) {
            Divergence d;
            d.kind = Divergence::Kind::different_enabled;
            d.enabled1 = e1;
            d.enabled2 = e2;
            return violation(path_to(nodes, n), std::move(d));
        }
        for (const Directive& d : e1) {
            if (d.kind == DirKind::spec && x.depth() >= bounds.max_depth) {
                ++v.truncated;
                continue;
            }
            auto r1 = step_spec(p, x, d);
            auto r2 = step_spec(p, y, d);
            if (r1->second != r2->second) {
                Divergence div;
                div.kind = Divergence::Kind::different_leak;
                div.leak1 = r1->second;
                div.leak2 = r2->second;
                auto ds = path_to(nodes, n);
                ds.push_back(d);
                return violation(std::move(ds), std::move(div));
            }
            JointKey k{std::move(r1->first), std::move(r2->first)};
            if (seen.count(k)) continue;
            seen.emplace(k, nodes.size());
            nodes.push_back({std::move(k), n, d, dist + 1});
        }
    }
    v.states = nodes.size();
    return v;
}

namespace {

std::vector<std::size_t> high_cells(const Program& p) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < p.cell_count(); ++c)
        if (p.var(p.cell_at(c).first).level == Level::high) out.push_back(c);
    return out;
}

}  // namespace

std::vector<State> high_variants(const Program& p, const State& base, unsigned budget_bits) {
    auto cells = high_cells(p);
    if (cells.size() * p.width() > budget_bits)
        throw std::invalid_argument("exhaustive enumeration needs " +
                                    std::to_string(cells.size() * p.width()) +
                                    " bits, budget is " + std::to_string(budget_bits));
    std::vector<State> out;
    State s = base;
    for (auto c : cells) s.mem[c] = 0;
    while (true) {
        out.push_back(s);
        // Increment with the last high cell least significant.
        std::size_t k = cells.size();
        while (k > 0) {
            auto& v = s.mem[cells[k - 1]];
            if (v < p.max_value()) {
                ++v;
                break;
            }
            v = 0;
            --k;
        }
        if (k == 0) break;
    }
    return out;
}

std::vector<std::pair<State, State>> sample_pairs(const Program& p, const State& base,
                                                  std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto cells = high_cells(p);
    std::vector<std::pair<State, State>> out;
    for (std::size_t k = 0; k < n; ++k) {
        State a = base, b = base;
        for (auto c : cells) a.mem[c] = static_cast<Value>(rng()) & p.max_value();
        for (auto c : cells) b.mem[c] = static_cast<Value>(rng()) & p.max_value();
        out.emplace_back(std::move(a), std::move(b));
    }
    return out;
}

std::vector<std::pair<State, State>> enumerate_pairs(const Program& p, const State& base,
                                                     const PairSource& src) {
    switch (src.mode) {
    case PairSource::Mode::given: return src.pairs;
    case PairSource::Mode::sampled: return sample_pairs(p, base, src.samples, src.seed);
    case PairSource::Mode::exhaustive: break;
    }
    auto vs = high_variants(p, base, src.budget_bits);
    std::vector<std::pair<State, State>> out;
    for (const auto& a : vs)
        for (const auto& b : vs) out.emplace_back(a, b);
    return out;
}

SniVerdict check_sni(const Program& p, const State& base, const PairSource& src,
                     const Bounds& bounds) {
    std::vector<std::pair<State, State>> pairs;
    if (src.mode == PairSource::Mode::exhaustive) {
        auto vs = high_variants(p, base, src.budget_bits);
        for (std::size_t k = 1; k < vs.size(); ++k) pairs.emplace_back(vs[0], vs[k]);
        if (vs.size() == 1) pairs.emplace_back(vs[0], vs[0]);
    } else {
        pairs = enumerate_pairs(p, base, src);
    }
    SniVerdict total;
    total.bounds = bounds;
    for (const auto& [a, b] : pairs) {
        SniVerdict v = check_sni_pair(p, a, b, bounds);
        v.pairs += total.pairs;
        v.states += total.states;
        v.truncated += total.truncated;
        if (!v.secure()) return v;
        total = v;
    }
    return total;
}

}  // namespace specnip

#include "qp/filtration.hpp"

#include <algorithm>

namespace qp {

static int par(int x) { return ((x % 2) + 2) % 2; }

static std::vector<QVec> parity_basis(const SpacePtr& sp, int parity) {
    std::vector<QVec> out;
    for (int i = 0; i < sp->dim(); ++i)
        if (sp->parity(i) == parity) {
            QVec e(sp->dim(), Rat(0));
            e[i] = 1;
            out.push_back(std::move(e));
        }
    return out;
}

std::vector<QVec> Filtration::at(int key) const {
    int p = par(key);
    // closest declared key of the same parity, from the correct side
    std::optional<int> best;
    for (const auto& [k, span] : levels) {
        if (par(k) != p) continue;
        if (increasing) {
            if (k <= key && (!best || k > *best)) best = k;
        } else {
            if (k >= key && (!best || k < *best)) best = k;
        }
    }
    // decreasing: key above the largest declared level is empty; increasing:
    // key below the smallest declared level is empty
    if (!best) return {};
    return levels.at(*best);
}

int Filtration::dim_at(int key) const {
    auto span = at(key);
    if (span.empty()) return 0;
    QMat m(space->dim(), int(span.size()));
    for (size_t j = 0; j < span.size(); ++j)
        for (int i = 0; i < space->dim(); ++i) m.at(i, int(j)) = span[j][i];
    return rank(m);
}

bool Filtration::contains(int key, const QVec& v) const {
    if (vec_is_zero(v)) return true;
    auto span = at(key);
    QMat m(space->dim(), int(span.size()));
    for (size_t j = 0; j < span.size(); ++j)
        for (int i = 0; i < space->dim(); ++i) m.at(i, int(j)) = span[j][i];
    return solve_linear(m, v).consistent;
}

int Filtration::level_of(const QVec& v) const {
    if (!increasing) throw std::logic_error("level_of expects an increasing filtration");
    std::vector<int> ks;
    for (const auto& [k, span] : levels) ks.push_back(k);
    std::sort(ks.begin(), ks.end());
    for (int k : ks)
        if (contains(k, v)) return k;
    throw std::domain_error("vector lies in no declared filtration level");
}

std::vector<int> Filtration::keys(int parity) const {
    std::vector<int> out;
    for (const auto& [k, span] : levels)
        if (par(k) == parity) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
}

Filtration filtration_from_charges(const SpacePtr& H, bool increasing) {
    Filtration f;
    f.increasing = increasing;
    f.space = H;
    for (int p = 0; p < 2; ++p) {
        std::vector<int> charges;
        for (int i = 0; i < H->dim(); ++i)
            if (H->parity(i) == p) charges.push_back(H->charge(i));
        if (charges.empty()) continue;
        int cmin = *std::min_element(charges.begin(), charges.end());
        int cmax = *std::max_element(charges.begin(), charges.end());
        // decreasing: F at key k = span { -c >= k }; staircase over k in
        // [-cmax, -cmin] plus an empty level one step further
        if (!increasing) {
            for (int k = -cmax; k <= -cmin + 2; k += 2) {
                std::vector<QVec> span;
                for (int i = 0; i < H->dim(); ++i)
                    if (H->parity(i) == p && -H->charge(i) >= k) {
                        QVec e(H->dim(), Rat(0));
                        e[i] = 1;
                        span.push_back(std::move(e));
                    }
                f.levels[k] = span;
            }
        } else {
            // increasing complement: W at key k = span { c > -k }, i.e. c >= -k + 2
            for (int k = -cmax; k <= -cmin + 2; k += 2) {
                std::vector<QVec> span;
                for (int i = 0; i < H->dim(); ++i)
                    if (H->parity(i) == p && H->charge(i) >= -k + 2) {
                        QVec e(H->dim(), Rat(0));
                        e[i] = 1;
                        span.push_back(std::move(e));
                    }
                f.levels[k] = span;
            }
        }
    }
    return f;
}

CheckReport opposite_check(const Filtration& F, const Filtration& W) {
    CheckReport rep;
    if (F.increasing || !W.increasing) {
        rep.add("opposedness: orientation", false, "expected decreasing F and increasing W");
        return rep;
    }
    if (!same_space(F.space, W.space)) {
        rep.add("opposedness: spaces match", false, "mismatched class spaces");
        return rep;
    }
    const SpacePtr& H = F.space;
    bool all = true;
    std::string witness;
    for (int p = 0; p < 2; ++p) {
        auto hp = parity_basis(H, p);
        if (hp.empty()) continue;
        std::vector<int> ks = F.keys(p);
        for (int k : W.keys(p)) ks.push_back(k);
        if (ks.empty()) continue;
        std::sort(ks.begin(), ks.end());
        int lo = ks.front() - 2, hi = ks.back() + 2;
        for (int k = lo; k <= hi; k += 2) {
            auto fs = F.at(k);
            auto ws = W.at(k);
            int fd = F.dim_at(k), wd = W.dim_at(k);
            QMat m(H->dim(), int(fs.size() + ws.size()));
            int col = 0;
            for (const auto& v : fs) {
                for (int i = 0; i < H->dim(); ++i) m.at(i, col) = v[i];
                ++col;
            }
            for (const auto& v : ws) {
                for (int i = 0; i < H->dim(); ++i) m.at(i, col) = v[i];
                ++col;
            }
            bool ok = (fd + wd == int(hp.size())) && (rank(m) == int(hp.size()));
            if (!ok && all) {
                all = false;
                witness = "level 2r = " + std::to_string(k);
            }
        }
    }
    rep.add("opposedness: H = F (+) W at every level", all, witness);
    return rep;
}

CheckReport isotropy_check(const Filtration& W, const Bilinear& pairing) {
    CheckReport rep;
    bool all = true;
    std::string witness;
    for (int p1 = 0; p1 < 2 && all; ++p1) {
        for (int k : W.keys(p1)) {
            // pair W_{<= k/2} against W_{<= (-k+2)/2}
            auto a = W.at(k);
            auto b = W.at(-k + 2);
            for (const auto& u : a)
                for (const auto& v : b)
                    if (!is_zero(pairing.apply(u, v)[0])) {
                        if (all) {
                            all = false;
                            witness = "levels 2r = " + std::to_string(k) + " and " +
                                      std::to_string(-k + 2);
                        }
                    }
            if (!all) break;
        }
    }
    rep.add("W isotropic for the pairing", all, witness);
    return rep;
}

} // namespace qp

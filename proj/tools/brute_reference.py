#!/usr/bin/env python3
"""Brute-force reference values for the test suite.

Recomputes, from definitions and with 50-digit arithmetic, the quantities
that the C++ tests pin as literals: risks, tilted densities, Shtarkov sums,
complexities, selector choices, covering numbers and Rademacher averages on
a handful of small fixed problems.  Run it to regenerate the numbers:

    python3 tools/brute_reference.py
"""

import itertools
import json

from mpmath import mp, mpf, exp, log, sqrt

mp.dps = 50


def nstr(x):
    return mp.nstr(mpf(x), 20)


class Problem:
    def __init__(self, p, loss, eta, n):
        self.p = [mpf(v) for v in p]
        self.loss = [[mpf(v) for v in row] for row in loss]
        self.eta = mpf(eta)
        self.n = n
        self.risk = [sum(pz * l for pz, l in zip(self.p, row)) for row in self.loss]
        self.fstar = min(range(len(loss)), key=lambda f: (self.risk[f], f))
        self.excess = [
            [l - ls for l, ls in zip(row, self.loss[self.fstar])] for row in self.loss
        ]
        self.c1 = [
            sum(pz * exp(-self.eta * r) for pz, r in zip(self.p, row))
            for row in self.excess
        ]
        # Tilted single-outcome masses q_f(z) = p(z) e^{-eta R_f(z)} / c1(f).
        self.q = [
            [pz * exp(-self.eta * r) / c for pz, r in zip(self.p, row)]
            for row, c in zip(self.excess, self.c1)
        ]

    def samples(self):
        return itertools.product(range(len(self.p)), repeat=self.n)

    def pmass(self, zs):
        out = mpf(1)
        for z in zs:
            out *= self.p[z]
        return out

    def qmass(self, f, zs):
        out = mpf(1)
        for z in zs:
            out *= self.q[f][z]
        return out

    def loss_sum(self, f, zs):
        return sum(self.loss[f][z] for z in zs)

    def excess_sum(self, f, zs):
        return sum(self.excess[f][z] for z in zs)

    def erm(self, zs):
        return min(range(len(self.loss)), key=lambda f: (self.loss_sum(f, zs), f))


def shtarkov_point(prob, pick, log_w=None):
    """S = sum over samples of q_{pick(zs)}(zs) * w(zs)."""
    total = mpf(0)
    for zs in prob.samples():
        f = pick(zs)
        w = exp(log_w(zs, f)) if log_w else mpf(1)
        total += prob.qmass(f, zs) * w
    return total


def comp_of(prob, log_s, mean_neg_log_w=mpf(0)):
    return (mean_neg_log_w + log_s) / prob.eta


def report_basic(prob):
    return {
        "risk": [nstr(r) for r in prob.risk],
        "fstar": prob.fstar,
        "c1": [nstr(c) for c in prob.c1],
        "q": [[nstr(v) for v in row] for row in prob.q],
    }


def main():
    out = {}

    # --- prob_a: three predictors on two outcomes -------------------------
    a = Problem(p=["0.75", "0.25"],
                loss=[["0.0", "0.5"], ["0.5", "0.0"], ["0.25", "0.25"]],
                eta="0.5", n=2)
    entry = report_basic(a)

    # sup-form complexity: integrate max_f q_f over samples, and record the
    # per-rank argmax (ranks enumerate samples with the last index fastest).
    total = mpf(0)
    argmax = []
    for zs in a.samples():
        vals = [a.qmass(f, zs) for f in range(3)]
        best = max(range(3), key=lambda f: (vals[f], -f))
        argmax.append(best)
        total += vals[best]
    entry["comp_max"] = nstr(log(total) / a.eta)
    entry["comp_max_argmax"] = argmax

    # penalized selector, gamma scaled by 1/eta inside the score
    gamma_a = [mpf("0.3"), mpf("0.0"), mpf("0.05")]
    pen_pick = lambda zs: min(
        range(3), key=lambda f: (a.loss_sum(f, zs) + gamma_a[f] / a.eta, f))
    entry["penalized_selects"] = [pen_pick(zs) for zs in a.samples()]

    # exp(-penalty-of-selected) luckiness around that selector
    log_w = lambda zs, f: -gamma_a[pen_pick(zs)]
    s_pen = shtarkov_point(a, pen_pick, log_w)
    entry["penalty_log_shtarkov"] = nstr(log(s_pen))
    mean_neg_log_w = sum(a.pmass(zs) * gamma_a[pen_pick(zs)] for zs in a.samples())
    entry["penalty_comp"] = nstr(comp_of(a, log(s_pen), mean_neg_log_w))

    # plain ERM Shtarkov sum
    s_erm = shtarkov_point(a, a.erm)
    entry["erm_log_shtarkov"] = nstr(log(s_erm))
    out["prob_a"] = entry

    # --- prob_b: two predictors on three outcomes, posterior quantities ---
    b = Problem(p=["0.5", "0.3", "0.2"],
                loss=[["0.1", "0.2", "0.3"], ["0.3", "0.1", "0.2"]],
                eta="1.0", n=2)
    entry = report_basic(b)

    def gibbs(zs):
        weights = [exp(-b.eta * b.loss_sum(f, zs)) / 2 for f in range(2)]
        tot = sum(weights)
        return [w / tot for w in weights]

    sample = (0, 1)
    post = gibbs(sample)
    entry["gibbs_post_01"] = [nstr(v) for v in post]

    # prior-to-posterior luckiness with the Gibbs posterior
    s_ratio = mpf(0)
    for zs in b.samples():
        pi = gibbs(zs)
        inner = mpf(0)
        for f in range(2):
            if pi[f] > 0:
                inner += pi[f] * (b.eta * b.excess_sum(f, zs) + b.n * log(b.c1[f])
                                  - (log(mpf("0.5")) - log(pi[f])))
        s_ratio += b.pmass(zs) * exp(-inner)
    entry["ratio_log_shtarkov"] = nstr(log(s_ratio))

    kl = sum(v * log(v / mpf("0.5")) for v in post if v > 0)
    expected_excess = sum(post[f] * b.excess_sum(f, sample) for f in range(2))
    entry["info_kl_01"] = nstr(kl)
    entry["info_excess_01"] = nstr(expected_excess)
    entry["info_value_01"] = nstr(expected_excess + kl / b.eta)
    out["prob_b"] = entry

    # --- prob_c: smallest Shtarkov sum by hand ----------------------------
    c = Problem(p=["0.6", "0.4"],
                loss=[["0.1", "0.3"], ["0.4", "0.05"]],
                eta="1.0", n=2)
    entry = report_basic(c)
    s_simple = shtarkov_point(c, c.erm)
    entry["erm_log_shtarkov"] = nstr(log(s_simple))
    entry["erm_comp"] = nstr(comp_of(c, log(s_simple)))
    entry["erm_selects"] = [c.erm(zs) for zs in c.samples()]
    out["prob_c"] = entry

    # --- prob_log: density family, generating member 0 --------------------
    dens = [[mpf("0.7"), mpf("0.3")], [mpf("0.6"), mpf("0.4")]]
    lg = Problem(p=["0.7", "0.3"],
                 loss=[[-log(v) for v in row] for row in dens],
                 eta="1.0", n=2)
    entry = report_basic(lg)
    gamma_lg = [mpf("0.0"), mpf("0.15")]
    pick = lambda zs: min(range(2), key=lambda f: (lg.loss_sum(f, zs) + gamma_lg[f], f))
    log_w = lambda zs, f: -gamma_lg[pick(zs)]
    s = shtarkov_point(lg, pick, log_w)
    entry["penalty_log_shtarkov"] = nstr(log(s))

    # regret of the normalized strategy against the best penalized density
    regrets = []
    for zs in lg.samples():
        f = pick(zs)
        r_mass = lg.qmass(f, zs) * exp(log_w(zs, f)) / s
        best = min(-log(lg.qmass(f, zs)) + gamma_lg[f] for f in range(2))
        regrets.append(-log(r_mass) - best)
    entry["regret_spread"] = nstr(max(regrets) - min(regrets))
    entry["regret_constant"] = nstr(max(regrets))
    out["prob_log"] = entry

    # --- prob_sep: one perfect predictor, Bernstein ratio at beta = 1 -----
    sep = Problem(p=["0.5", "0.5"],
                  loss=[["0.0", "0.0"], ["0.5", "0.0"], ["0.0", "0.5"]],
                  eta="0.5", n=2)
    ratios = []
    for f in range(3):
        if f == sep.fstar:
            continue
        er = sum(pz * r for pz, r in zip(sep.p, sep.excess[f]))
        er2 = sum(pz * r * r for pz, r in zip(sep.p, sep.excess[f]))
        if er > 0:
            ratios.append(er2 / er)
    out["prob_sep"] = {"bernstein_b_beta1": nstr(max(ratios)),
                       "fstar": sep.fstar}

    # --- prob_cover: exhaustive covering numbers in L2(P) -----------------
    cov = Problem(p=["0.5", "0.25", "0.25"],
                  loss=[["0.0", "0.0", "0.0"],
                        ["0.5", "0.0", "0.0"],
                        ["0.0", "0.5", "0.0"],
                        ["0.4", "0.4", "0.4"]],
                  eta="0.5", n=2)

    def l2p(f, g):
        return sqrt(sum(pz * (a1 - b1) ** 2
                        for pz, a1, b1 in zip(cov.p, cov.loss[f], cov.loss[g])))

    dist = [[l2p(f, g) for g in range(4)] for f in range(4)]
    out["prob_cover"] = {
        "dist": [[nstr(v) for v in row] for row in dist],
    }

    def exact_cover(eps):
        best = 4
        for size in range(1, 5):
            for centers in itertools.combinations(range(4), size):
                if all(any(dist[c][f] <= eps for c in centers) for f in range(4)):
                    best = min(best, size)
                    return best
        return best

    for eps in ["0.05", "0.25", "0.4", "0.7"]:
        out["prob_cover"]["exact_n_" + eps] = exact_cover(mpf(eps))

    # --- Rademacher averages on prob_a ------------------------------------
    # cell {0, 1} anchored at predictor 0, the sample (z_1, z_2) = (0, 1)
    h = [[a.loss[0][z] - a.loss[f][z] for z in range(2)] for f in (0, 1)]
    zs = (0, 1)
    total = mpf(0)
    for signs in itertools.product((-1, 1), repeat=2):
        sup = max(abs(sum(s * h[i][z] for s, z in zip(signs, zs))) for i in range(2))
        total += sup / 2
    out["prob_a_rademacher"] = {"cell01_sample01": nstr(total / 4)}

    # H-local average for the full class anchored at the risk minimizer:
    # T(zs) = max_f [ sum_i (l_f0 - l_f)(z_i) - n E_{Q_f0}[l_f0 - l_f] ],
    # averaged over Q_f0^n (equal to P^n since predictor 0 is the minimizer).
    means = [sum(a.q[0][z] * (a.loss[0][z] - a.loss[f][z]) for z in range(2))
             for f in range(3)]
    acc = mpf(0)
    for zs in a.samples():
        t = max(sum(a.loss[0][z] - a.loss[f][z] for z in zs) - a.n * means[f]
                for f in range(3))
        acc += a.qmass(0, zs) * t
    out["prob_a_rademacher"]["h_local_full"] = nstr(acc)

    # --- prob_nested: two-part selection over two blocks ------------------
    nested = Problem(p=["0.6", "0.4"],
                     loss=[["0.1", "0.2"], ["0.05", "0.3"], ["0.3", "0.05"]],
                     eta="1.0", n=2)
    blocks = [[0], [1, 2]]
    pi_k = [mpf("0.5"), mpf("0.5")]

    def block_erm(k, zs):
        return min(blocks[k], key=lambda f: (nested.loss_sum(f, zs), f))

    def comp_max_block(k):
        total = mpf(0)
        for zs in nested.samples():
            total += max(nested.qmass(f, zs) for f in blocks[k])
        return log(total) / nested.eta

    bounds = [comp_max_block(k) for k in range(2)]
    out["prob_nested"] = {
        "risk": [nstr(r) for r in nested.risk],
        "fstar": nested.fstar,
        "comp_bounds": [nstr(v) for v in bounds],
    }

    def two_part(zs, prior):
        best_k, best_score = None, None
        for k in range(2):
            if prior[k] <= 0:
                continue
            f = block_erm(k, zs)
            score = nested.loss_sum(f, zs) - log(prior[k]) / nested.eta + bounds[k]
            if best_score is None or score < best_score:
                best_score, best_k = score, k
        return best_k, block_erm(best_k, zs)

    picks = [two_part(zs, pi_k) for zs in nested.samples()]
    out["prob_nested"]["two_part_blocks"] = [k for k, _ in picks]
    out["prob_nested"]["two_part_predictors"] = [f for _, f in picks]

    mean_excess = lambda sel: sum(
        nested.pmass(zs) * (nested.risk[sel(zs)] - nested.risk[nested.fstar])
        for zs in nested.samples())
    out["prob_nested"]["two_part_excess"] = nstr(
        mean_excess(lambda zs: two_part(zs, pi_k)[1]))
    out["prob_nested"]["erm_full_excess"] = nstr(mean_excess(nested.erm))
    out["prob_nested"]["erm_k0_excess"] = nstr(mean_excess(lambda zs: block_erm(0, zs)))

    # prior mass zero on the best block forces the selector into block 1
    dirac = [mpf(0), mpf(1)]
    out["prob_nested"]["wrong_block_excess"] = nstr(
        mean_excess(lambda zs: two_part(zs, dirac)[1]))

    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()

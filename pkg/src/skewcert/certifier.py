"""Branch-and-bound certification of (eps, delta)-transversality.

A word pair (k, l) is certified transversal over an x-cell when a finite
cover by (subcell, digit-extension) nodes is found on which either the
value difference enclosure stays outside [-eps, eps] or the derivative
difference enclosure stays outside [-delta, delta] for *all* infinite
continuations.  "Unresolved" is always a budget statement, never a
tangency claim.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .interval import Interval, sin2pi
from .series import (
    Code,
    SystemParams,
    Word,
    check_word,
    eval_G,
    reflect_word,
    tail_value,
    tail_deriv,
    word_value,
)


@dataclass(frozen=True)
class Budget:
    d_max: int = 14          # digit-extension depth beyond q
    x_depth_max: int = 20    # cell bisections
    max_nodes: int = 6000    # nodes per (cell, pair) task
    witness_after: int = 256  # nodes before trying a greedy tangency witness


@dataclass(frozen=True)
class CertTask:
    params: SystemParams
    q: int
    cell: Interval
    pair: tuple[Word, Word]
    eps: float
    delta: float
    budget: Budget = Budget()

    def __post_init__(self):
        k, l = self.pair
        check_word(self.params.b, k)
        check_word(self.params.b, l)
        if len(k) != self.q or len(l) != self.q:
            raise ValueError("pair words must have length q")
        if self.eps <= 0 or self.delta <= 0:
            raise ValueError("eps and delta must be positive")


@dataclass(frozen=True)
class Leaf:
    cell_lo: float
    cell_hi: float
    ext_a: Word
    ext_b: Word
    val_lo: float
    val_hi: float
    der_lo: float
    der_hi: float
    margin: str  # "value" or "deriv"


@dataclass
class Certificate:
    status: str  # "transversal" | "unresolved"
    leaves: list[Leaf]
    node_count: int
    task: CertTask
    reason: str = ""
    witness: tuple[float, Word, Word] | None = None  # (x, ext_a, ext_b) tangency data

    @property
    def transversal(self) -> bool:
        return self.status == "transversal"


class _Chain:
    """Prefix sums for one word over one x-set, extended digit by digit."""

    __slots__ = ("p", "dp", "z")

    def __init__(self, p: Interval, dp: Interval, z: Interval):
        self.p = p
        self.dp = dp
        self.z = z


def _build_chain(
    params: SystemParams,
    x: Interval,
    digits: Word,
    cache: dict | None = None,
) -> _Chain:
    """Chain over x for the digit string, memoized on (x, digits).

    The cache pays off because identical chains recur across the pairs of a
    cell (shared base words), across bisection rebuilds, and across the
    rungs of an (eps, delta) ladder.
    """
    if cache is not None:
        key = (x.lo, x.hi, digits)
        hit = cache.get(key)
        if hit is not None:
            return hit
    psi = params.psi
    dpsi = params.dpsi
    b = params.b
    gamma_iv = params.gamma_iv
    step = gamma_iv.scale_div(b)
    p = Interval.point(0.0)
    dp = Interval.point(0.0)
    g = Interval.point(1.0)
    h = Interval.point(1.0).scale_div(b)
    z = x
    for d in digits:
        z = z.shift(float(d)).scale_div(b)
        p = p + g * psi.eval_iv(z)
        dp = dp + h * dpsi.eval_iv(z)
        g = g * gamma_iv
        h = h * step
    out = _Chain(p, dp, z)
    if cache is not None and len(cache) < 400000:
        cache[key] = out
    return out


_LADDER_CACHE: dict = {}


def _params_key(params: SystemParams) -> tuple:
    return (params.b, params.gamma, params.psi.key())


def _pow_ladder(params: SystemParams, q: int, d_max: int):
    """gamma^n and gamma^n b^-(n+1) enclosures plus pair tail radii, n = q..q+d_max."""
    key = (_params_key(params), q, d_max)
    hit = _LADDER_CACHE.get(key)
    if hit is not None:
        return hit
    gamma_iv = params.gamma_iv
    step = gamma_iv.scale_div(params.b)
    gpows = []
    hpows = []
    tv2 = []
    td2 = []
    g = gamma_iv.pow_int(q)
    h = gamma_iv.pow_int(q) / params.b_iv.pow_int(q + 1)
    for n in range(q, q + d_max + 1):
        gpows.append(g)
        hpows.append(h)
        tv2.append(2.0 * tail_value(params, n))
        td2.append(2.0 * tail_deriv(params, n))
        g = g * gamma_iv
        h = h * step
    out = (gpows, hpows, tv2, td2)
    if len(_LADDER_CACHE) > 256:
        _LADDER_CACHE.clear()
    _LADDER_CACHE[key] = out
    return out


_M2_CACHE: dict = {}


def _second_deriv_pair_bound(params: SystemParams) -> float:
    """Upper bound for |d^2/dx^2 (prefix difference)|: 2 ddpsi_sup / (b^2 - gamma)."""
    key = _params_key(params)
    hit = _M2_CACHE.get(key)
    if hit is not None:
        return hit
    ddpsi_sup = params.dpsi.derivative().sup_bound()
    b2 = params.b_iv * params.b_iv
    out = (Interval.point(2.0 * ddpsi_sup) / (b2 - params.gamma_iv)).hi
    if len(_M2_CACHE) > 256:
        _M2_CACHE.clear()
    _M2_CACHE[key] = out
    return out


def _find_tangency_witness(
    params: SystemParams,
    x: float,
    ka: Word,
    lb: Word,
    eps: float,
    delta: float,
    max_depth: int = 900,
) -> tuple[Word, Word] | None:
    """Greedy search for continuations making (ka.u, lb.v) (eps, delta)-tangent at x.

    Descends one digit pair per level, always choosing the extension that
    minimizes the worse of the two scaled margins, until the truncation
    tails are small enough to check the tangency box rigorously.  Returns
    the extended word pair on success, None when the greedy path misses
    (which proves nothing).
    """
    b = params.b
    psi = params.psi
    dpsi = params.dpsi
    gamma_iv = params.gamma_iv
    step = gamma_iv.scale_div(b)
    one_minus_g = Interval.point(1.0) - gamma_iv
    b_minus_g = params.b_iv - gamma_iv
    psi_sup = Interval.point(params.psi_sup)
    dpsi_sup = Interval.point(params.dpsi_sup)

    ca = _build_chain(params, Interval.point(x), ka)
    cb = _build_chain(params, Interval.point(x), lb)
    g = gamma_iv.pow_int(len(ka))
    h = gamma_iv.pow_int(len(ka)) / params.b_iv.pow_int(len(ka) + 1)
    ext_a: list[int] = []
    ext_b: list[int] = []
    for _ in range(max_depth):
        tv2 = 2.0 * (psi_sup * g / one_minus_g).hi
        td2 = 2.0 * (dpsi_sup * h * params.b_iv / b_minus_g).hi
        val = (ca.p - cb.p).mag()
        der = (ca.dp - cb.dp).mag()
        if tv2 <= 0.25 * eps and td2 <= 0.25 * delta:
            if val + tv2 <= eps and der + td2 <= delta:
                return tuple(ext_a), tuple(ext_b)
            return None
        cand_a = []
        cand_b = []
        for dig in range(b):
            za = ca.z.shift(float(dig)).scale_div(b)
            cand_a.append(
                _Chain(ca.p + g * psi.eval_iv(za), ca.dp + h * dpsi.eval_iv(za), za)
            )
            zb = cb.z.shift(float(dig)).scale_div(b)
            cand_b.append(
                _Chain(cb.p + g * psi.eval_iv(zb), cb.dp + h * dpsi.eval_iv(zb), zb)
            )
        best = None
        best_score = math.inf
        for da in range(b):
            for db in range(b):
                score = max(
                    abs(cand_a[da].p.mid() - cand_b[db].p.mid()) / eps,
                    abs(cand_a[da].dp.mid() - cand_b[db].dp.mid()) / delta,
                )
                if score < best_score:
                    best_score = score
                    best = (da, db)
        da, db = best
        ca = cand_a[da]
        cb = cand_b[db]
        ext_a.append(da)
        ext_b.append(db)
        g = g * gamma_iv
        h = h * step
    return None


def pair_diff_enclosure(
    params: SystemParams,
    cell: Interval,
    ka: Word,
    lb: Word,
) -> tuple[Interval, Interval]:
    """Enclosures of {S(x, ka.u) - S(x, lb.v)} and the derivative analogue
    over all x in the cell and all continuation pairs (u, v)."""
    ka = check_word(params.b, ka)
    lb = check_word(params.b, lb)
    if len(ka) != len(lb):
        raise ValueError("extended words must have equal length")
    n = len(ka)
    tv = 2.0 * tail_value(params, n)
    td = 2.0 * tail_deriv(params, n)
    if ka == lb:
        # identical prefixes cancel pointwise; only the tails remain
        return Interval(-tv, tv), Interval(-td, td)
    ca = _build_chain(params, cell, ka)
    cb = _build_chain(params, cell, lb)
    val = (ca.p - cb.p).widen(tv)
    der = (ca.dp - cb.dp).widen(td)
    return val, der


def certify_pair(task: CertTask, _cache: dict | None = None) -> Certificate:
    """Decide (k, l) not-in E(q, cell; eps, delta) by exhaustive covering.

    Each node carries interval prefix chains over its cell *and* thin chains
    at the cell midpoint; the value difference is enclosed with the
    mean-value form D(m) + D'(cell)(x - m), which captures the cancellation
    of the x-dependence that a term-by-term enclosure loses.
    """
    params = task.params
    k, l = task.pair
    if k == l:
        return Certificate("unresolved", [], 0, task, reason="diagonal")
    b = params.b
    budget = task.budget
    gpows, hpows, tv2, td2 = _pow_ladder(params, task.q, budget.d_max)
    m2 = _second_deriv_pair_bound(params)
    psi = params.psi
    dpsi = params.dpsi
    eps = task.eps
    delta = task.delta

    def fresh(cell: Interval, xdepth: int, d: int, ea: Word, eb: Word):
        xm = cell.mid()
        mid = Interval.point(xm)
        return (
            cell,
            xm,
            xdepth,
            d,
            ea,
            eb,
            _build_chain(params, cell, k + ea, _cache),
            _build_chain(params, cell, l + eb, _cache),
            _build_chain(params, mid, k + ea, _cache),
            _build_chain(params, mid, l + eb, _cache),
        )

    leaves: list[Leaf] = []
    nodes = 0
    next_witness_at = budget.witness_after
    stack = [fresh(task.cell, 0, 0, (), ())]
    while stack:
        cell, xm, xdepth, d, ea, eb, ca, cb, ma, mb = stack.pop()
        nodes += 1
        if nodes > budget.max_nodes:
            return Certificate("unresolved", leaves, nodes, task, reason="node budget")
        if nodes == next_witness_at:
            # the search is struggling; look for an actual tangency witness
            # along a single greedy digit path before burning more budget
            next_witness_at *= 4
            found = _find_tangency_witness(params, xm, k + ea, l + eb, eps, delta)
            if found is not None:
                return Certificate(
                    "unresolved",
                    leaves,
                    nodes,
                    task,
                    reason="tangency witness",
                    witness=(xm, ea + found[0], eb + found[1]),
                )
        offs = Interval(
            math.nextafter(cell.lo - xm, -math.inf),
            math.nextafter(cell.hi - xm, math.inf),
        )
        dprefix = ca.dp - cb.dp
        val_pre = (ma.p - mb.p) + dprefix * offs
        val = val_pre.widen(tv2[d])
        if val.abs_lower_bound() > eps:
            leaves.append(
                Leaf(cell.lo, cell.hi, ea, eb, val.lo, val.hi, math.nan, math.nan, "value")
            )
            continue
        der_centered = (ma.dp - mb.dp) + Interval(-m2, m2) * offs
        der = dprefix.meet(der_centered).widen(td2[d])
        if der.abs_lower_bound() > delta:
            leaves.append(
                Leaf(cell.lo, cell.hi, ea, eb, val.lo, val.hi, der.lo, der.hi, "deriv")
            )
            continue
        if -eps <= val.lo and val.hi <= eps and -delta <= der.lo and der.hi <= delta:
            # every x and every continuation pair in this node realizes the
            # tangency box: the pair is (eps, delta)-tangent on this cell
            return Certificate(
                "unresolved", leaves, nodes, task, reason="tangency witness"
            )
        # branch: extend digits while the continuation tail dominates the
        # prefix width, else bisect the cell
        extend = tv2[d] > 0.5 * val_pre.width()
        if extend and d >= budget.d_max:
            extend = False
        if not extend and xdepth >= budget.x_depth_max:
            if d < budget.d_max:
                extend = True
            else:
                return Certificate(
                    "unresolved", leaves, nodes, task, reason="depth budget"
                )
        if extend:
            g = gpows[d]
            h = hpows[d]

            def children(chain: _Chain, xlo: float, xhi: float, base: Word) -> list[_Chain]:
                out = []
                for dig in range(b):
                    key = (xlo, xhi, base + (dig,))
                    ch = _cache.get(key) if _cache is not None else None
                    if ch is None:
                        z = chain.z.shift(float(dig)).scale_div(b)
                        ch = _Chain(
                            chain.p + g * psi.eval_iv(z),
                            chain.dp + h * dpsi.eval_iv(z),
                            z,
                        )
                        if _cache is not None and len(_cache) < 400000:
                            _cache[key] = ch
                    out.append(ch)
                return out

            ext_ca = children(ca, cell.lo, cell.hi, k + ea)
            ext_cb = children(cb, cell.lo, cell.hi, l + eb)
            ext_ma = children(ma, xm, xm, k + ea)
            ext_mb = children(mb, xm, xm, l + eb)
            for da in reversed(range(b)):
                for db in reversed(range(b)):
                    stack.append(
                        (
                            cell,
                            xm,
                            xdepth,
                            d + 1,
                            ea + (da,),
                            eb + (db,),
                            ext_ca[da],
                            ext_cb[db],
                            ext_ma[da],
                            ext_mb[db],
                        )
                    )
        else:
            left, right = cell.bisect()
            stack.append(fresh(right, xdepth + 1, d, ea, eb))
            stack.append(fresh(left, xdepth + 1, d, ea, eb))
    return Certificate("transversal", leaves, nodes, task)


# ---------------------------------------------------------------------
# per-cell tangency graphs and the e(q) upper bound


def all_words(b: int, q: int) -> list[Word]:
    return [tuple(w) for w in itertools.product(range(b), repeat=q)]


@dataclass
class PairGraph:
    """Per-cell sets of word pairs not certified transversal.

    Cells are [j/b^p, (j+1)/b^p); the stored pair sets are symmetric and
    always contain the diagonal.
    """

    b: int
    q: int
    p: int
    eps: float
    delta: float
    unresolved: list[set[tuple[Word, Word]]]
    certificates: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self) -> int:
        return self.b**self.p

    def cell_interval(self, j: int) -> Interval:
        scale = float(self.b**self.p)
        lo = math.nextafter(j / scale, -math.inf)
        hi = math.nextafter((j + 1) / scale, math.inf)
        return Interval(lo, hi)

    def nontrivial_pairs(self, j: int) -> list[tuple[Word, Word]]:
        """Unordered non-diagonal pairs of cell j, lexicographically sorted."""
        return sorted({(k, l) if k < l else (l, k) for (k, l) in self.unresolved[j] if k != l})

    def is_diagonal_only(self, j: int) -> bool:
        return all(k == l for (k, l) in self.unresolved[j])

    def row_degree(self, j: int, k: Word) -> int:
        return sum(1 for (a, _) in self.unresolved[j] if a == k)

    def e_by_cell(self) -> list[int]:
        out = []
        for j in range(self.n_cells):
            rows: dict[Word, int] = {}
            for (a, _) in self.unresolved[j]:
                rows[a] = rows.get(a, 0) + 1
            out.append(max(rows.values()) if rows else 1)
        return out

    def image_cell(self, j: int, w: Word) -> int:
        """Index at level p of the cell containing x(cell_j, w)."""
        return (j + word_value(self.b, w) * self.b**self.p) // (self.b**self.q)


def tangency_graph(
    params: SystemParams,
    q: int,
    p: int,
    eps: float,
    delta: float,
    budget: Budget = Budget(),
    keep_certificates: bool = True,
    prior: PairGraph | None = None,
) -> PairGraph:
    """Certify every word pair over every base-b cell at resolution b^p.

    When `prior` is a graph for the same (q, p) at larger (eps, delta),
    pairs it already certified are inherited: transversality at a larger
    margin implies transversality at any smaller one.
    """
    b = params.b
    words = all_words(b, q)
    n_cells = b**p
    graph = PairGraph(b, q, p, eps, delta, [set() for _ in range(n_cells)])
    if prior is not None and (prior.q != q or prior.p != p or prior.b != b):
        raise ValueError("prior graph shape mismatch")
    for j in range(n_cells):
        cell = graph.cell_interval(j)
        cell_pairs = graph.unresolved[j]
        for w in words:
            cell_pairs.add((w, w))
        cache: dict = {}
        for i, k in enumerate(words):
            for l in words[i + 1 :]:
                if prior is not None and (k, l) not in prior.unresolved[j]:
                    if keep_certificates:
                        inherited = prior.certificates.get((j, k, l))
                        if inherited is not None:
                            graph.certificates[(j, k, l)] = inherited
                    continue
                cert = certify_pair(
                    CertTask(params, q, cell, (k, l), eps, delta, budget), _cache=cache
                )
                if keep_certificates:
                    graph.certificates[(j, k, l)] = cert
                if not cert.transversal:
                    cell_pairs.add((k, l))
                    cell_pairs.add((l, k))
    return graph


def e_upper(graph: PairGraph) -> tuple[list[int], int]:
    """Per-cell and global upper bounds for the tangency count e(q) at (eps, delta)."""
    per_cell = graph.e_by_cell()
    return per_cell, max(per_cell)


# ---------------------------------------------------------------------
# closed-form pruning quantities


def delta_max(
    b: int, gamma: float, tol: float = 1e-9, max_rounds: int = 200
) -> Interval:
    """Rigorous enclosure of max_t (sin(b t) + gamma sin t) over one period."""
    if not (isinstance(b, int) and b >= 1):
        raise ValueError("b must be a positive integer")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    g = Interval.point(gamma)

    def f(s: Interval) -> Interval:
        return sin2pi(s.scale(float(b))) + g * sin2pi(s)

    active = [Interval(0.0, 1.0)]
    best_lo = -math.inf
    upper = math.inf
    for _ in range(max_rounds):
        evals = []
        for cell in active:
            m = Interval.point(cell.mid())
            best_lo = max(best_lo, f(m).lo)
            evals.append((cell, f(cell).hi))
        upper = max((hi for _, hi in evals), default=best_lo)
        if upper - best_lo <= tol:
            break
        nxt = []
        for cell, hi in evals:
            if hi > best_lo:
                a, c = cell.bisect()
                nxt.append(a)
                nxt.append(c)
        if not nxt:
            upper = best_lo
            break
        active = nxt
    return Interval(best_lo, max(best_lo, upper))


def theta_bound(which: int, b: int, gamma: float) -> float:
    """The closed-form quantities theta_0, theta_1, theta_2 (with max(0,.) guard)."""
    if which not in (0, 1, 2):
        raise ValueError("which must be 0, 1 or 2")
    if b < 2:
        raise ValueError("b must be >= 2")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    ratio = gamma * b / (b - gamma)
    if which == 0:
        base = (b * math.sin(math.pi / b)) ** 2
        arg = base - ratio**2
    elif which == 1:
        base = (b * math.sin(math.pi / b)) ** 2
        arg = base - 4.0 * ratio**2
    else:
        base = (b * math.sin(2.0 * math.pi / b)) ** 2
        arg = base - 4.0 * ratio**2
    return math.sqrt(max(0.0, arg))


# ---------------------------------------------------------------------
# non-cohomology witness


class WitnessNotFound(RuntimeError):
    """No grid point produced a certified positive G-gap (inconclusive)."""


@dataclass(frozen=True)
class NoncohomologyWitness:
    x1: float
    gap: float      # certified lower bound for |G(x1, 000...) - G(x1, 100...)| = 5 delta
    delta: float    # gap / 5
    n1: int
    gamma1: float


def noncohomology_witness(
    params: SystemParams, grid: int = 512, depth: int = 40
) -> NoncohomologyWitness:
    """Search for the witness data of the one-missing-pair criterion.

    Grid-maximizes the certified lower bound of |G(x, 000...) - G(x, 100...)|
    and derives the depth N1 and threshold gamma1 satisfying
    2C < delta b^N1 (b-1) and (1 - gamma1^N1) C < delta b (b-1), C = sup|psi'|.
    """
    b = params.b
    code0 = Code.make(params, (0,) * depth)
    code1 = Code.make(params, (1,) + (0,) * (depth - 1))
    best_lb = 0.0
    best_x = None
    for j in range(grid):
        x = Interval.point((j + 0.5) / grid)
        gap_iv = eval_G(params, x, code0) - eval_G(params, x, code1)
        lb = gap_iv.abs_lower_bound()
        if lb > best_lb:
            best_lb = lb
            best_x = x.lo
    if best_x is None or best_lb <= 0.0:
        raise WitnessNotFound(
            f"no certified positive G-gap on a {grid}-point grid at depth {depth}"
        )
    delta = best_lb / 5.0
    c = params.dpsi_sup
    n1 = 1
    while not 2.0 * c < delta * b**n1 * (b - 1):
        n1 += 1
        if n1 > 4000:
            raise WitnessNotFound("no feasible N1 below 4000")
    target = delta * b * (b - 1)
    if c < target:
        gamma1 = 0.0
    else:
        gamma1 = (1.0 - target / c) ** (1.0 / n1)
        while not (1.0 - gamma1**n1) * c < target:
            gamma1 = gamma1 + (1.0 - gamma1) * 1e-9
            if gamma1 >= 1.0:
                raise WitnessNotFound("gamma1 threshold degenerate")
    return NoncohomologyWitness(best_x, best_lb, delta, n1, gamma1)


# ---------------------------------------------------------------------
# graph symmetry helper (odd psi)


def reflected_cell(graph: PairGraph, j: int) -> int:
    return graph.n_cells - 1 - j


def reflected_pairs(graph: PairGraph, j: int) -> set[tuple[Word, Word]]:
    """Image of cell j's pair set under digit reflection (odd-psi symmetry)."""
    return {
        (reflect_word(graph.b, k), reflect_word(graph.b, l))
        for (k, l) in graph.unresolved[j]
    }

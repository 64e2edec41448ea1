"""
Finite-round LOCC protocols as trees of alternating local instruments.

Simulating a protocol propagates the cumulative local Kraus operators along
every branch and records the (x, y) trajectory of the diagonal POVM
parameters, which moves in one coordinate per round. The module also
classifies branches by their first entry into the regions R+ / R- and
audits the chain of inequalities that bounds the performance of any such
protocol.
"""

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import algebra, gap
from .separable import ZERO_P, OutcomeStats, c_bound, mean_residual, outcome_stats

COMPLETENESS_TOL = 1e-10
AUDIT_TOL = 1e-9
DEFAULT_MAX_DEPTH = 8


class MalformedProtocolError(ValueError):
    pass


class Party(enum.Enum):
    ALICE = "A"
    BOB = "B"

    @property
    def other(self):
        return Party.BOB if self is Party.ALICE else Party.ALICE

    @classmethod
    def parse(cls, value):
        if isinstance(value, Party):
            return value
        key = str(value).strip().lower()
        if key in ("a", "alice"):
            return cls.ALICE
        if key in ("b", "bob"):
            return cls.BOB
        raise MalformedProtocolError(f"unknown party {value!r}")


@dataclass(frozen=True)
class LocalInstrument:
    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex).reshape(2, 2) for k in self.kraus)
        for op in ops:
            op.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    def __len__(self):
        return len(self.kraus)

    def completeness_error(self):
        total = sum(algebra.gram(k) for k in self.kraus)
        return float(np.max(np.abs(total - np.eye(2))))

    @classmethod
    def diagonal(cls, weights):
        """Diagonal instrument from per-outcome pairs (P(k|0), P(k|1))."""
        return cls(tuple(np.diag(np.sqrt(np.asarray(w, dtype=float))) for w in weights))


@dataclass
class ProtocolNode:
    party: Party
    instrument: LocalInstrument
    children: dict = field(default_factory=dict)

    def __post_init__(self):
        self.party = Party.parse(self.party)


@dataclass
class LoccProtocol:
    root: ProtocolNode
    max_depth: int = DEFAULT_MAX_DEPTH

    def depth(self):
        def _depth(node):
            return 1 + max((_depth(c) for c in node.children.values()), default=0)

        return _depth(self.root)


def validate(proto: LoccProtocol):
    """Raise :class:`MalformedProtocolError` unless the tree is well formed."""
    if proto.max_depth < 1:
        raise MalformedProtocolError("max_depth must be at least 1")

    def _check(node, depth, history):
        if depth > proto.max_depth:
            raise MalformedProtocolError(
                f"branch {history!r} exceeds max depth {proto.max_depth}"
            )
        if len(node.instrument) == 0:
            raise MalformedProtocolError(f"node {history!r} has an empty instrument")
        err = node.instrument.completeness_error()
        if err > COMPLETENESS_TOL:
            raise MalformedProtocolError(
                f"instrument at {history!r} is incomplete (deviation {err:.3e})"
            )
        for k, child in node.children.items():
            if not isinstance(k, int) or not 0 <= k < len(node.instrument):
                raise MalformedProtocolError(f"child key {k!r} at {history!r} is not an outcome")
            if child.party is node.party:
                raise MalformedProtocolError(
                    f"parties do not alternate at {history + (k,)!r}"
                )
            _check(child, depth + 1, history + (k,))

    _check(proto.root, 1, ())


@dataclass(frozen=True)
class NodeRecord:
    """POVM data after a partial history (the root has the empty history)."""

    history: tuple
    party: Optional[Party]
    a_params: algebra.LocalGramParams
    b_params: algebra.LocalGramParams
    point: tuple

    @property
    def gram(self):
        return algebra.kron2(self.a_params.matrix(), self.b_params.matrix())

    @property
    def w(self):
        return self.a_params.w * self.b_params.w


@dataclass(frozen=True)
class BranchRecord:
    history: tuple
    parties: tuple
    cumulative_a: np.ndarray
    cumulative_b: np.ndarray
    a_params: algebra.LocalGramParams
    b_params: algebra.LocalGramParams
    trajectory: tuple
    path_grams: tuple
    stats: OutcomeStats

    @property
    def w(self):
        return self.a_params.w * self.b_params.w

    @property
    def x(self):
        return self.trajectory[-1][0]

    @property
    def y(self):
        return self.trajectory[-1][1]

    @property
    def gram(self):
        return self.path_grams[-1]

    @property
    def p(self):
        """Success functional w (1 + x y) from the diagonal parameters."""
        return self.w * (1.0 + self.x * self.y)

    @property
    def q(self):
        return self.w * (1.0 - self.x * self.y)


@dataclass
class Simulation:
    branches: list
    nodes: dict
    pruned: int = 0


_ROOT_PARAMS = algebra.LocalGramParams(1.0, 0.0, 0j)


def simulate_full(proto: LoccProtocol) -> Simulation:
    """Simulate every branch of ``proto``; null branches are pruned and counted."""
    validate(proto)
    branches = []
    nodes = {(): NodeRecord((), None, _ROOT_PARAMS, _ROOT_PARAMS, (0.0, 0.0))}
    pruned = 0
    eye = np.eye(2, dtype=complex)
    root_gram = np.eye(4, dtype=complex)

    # explicit stack keeps outcome order deterministic
    stack = [(proto.root, (), (), eye, eye, _ROOT_PARAMS, _ROOT_PARAMS, ((0.0, 0.0),), (root_gram,))]
    while stack:
        node, hist, parties, a_cum, b_cum, a_par, b_par, traj, grams = stack.pop()
        children = []
        for k, op in enumerate(node.instrument.kraus):
            h = hist + (k,)
            new_a, new_b = a_cum, b_cum
            pa, pb = a_par, b_par
            try:
                if node.party is Party.ALICE:
                    new_a = op @ a_cum
                    pa = algebra.gram_params_of_operator(new_a)
                    point = (pa.x, traj[-1][1])
                else:
                    new_b = op @ b_cum
                    pb = algebra.gram_params_of_operator(new_b)
                    point = (traj[-1][0], pb.x)
            except algebra.NullElementError:
                pruned += 1
                continue
            if 4.0 * pa.w * pb.w <= algebra.NULL_TRACE:
                pruned += 1
                continue
            g = algebra.kron2(pa.matrix(), pb.matrix())
            nodes[h] = NodeRecord(h, node.party, pa, pb, point)
            state = (node, h, parties + (node.party,), new_a, new_b, pa, pb, traj + (point,), grams + (g,))
            children.append((k, state))
        for k, state in reversed(children):
            child = node.children.get(k)
            if child is not None:
                stack.append((child,) + state[1:])
            else:
                _, h, pts, a_fin, b_fin, pa, pb, tr, gr = state
                branches.append(
                    BranchRecord(h, pts, a_fin, b_fin, pa, pb, tr, gr, outcome_stats(a_fin, b_fin))
                )
    branches.sort(key=lambda b: b.history)
    return Simulation(branches, nodes, pruned)


def simulate(proto: LoccProtocol):
    """Leaf records of ``proto`` in lexicographic history order."""
    return simulate_full(proto).branches


def leaf_povm_sum(records):
    return sum((r.gram for r in records), np.zeros((4, 4), dtype=complex))


def parent_child_error(sim: Simulation):
    """Largest entrywise mismatch between a node's POVM and the sum over its children.

    Pruned children contribute zero; leaves have no children to compare.
    """
    by_parent = {}
    for h, rec in sim.nodes.items():
        if h:
            by_parent.setdefault(h[:-1], []).append(rec.gram)
    worst = 0.0
    for parent, grams in by_parent.items():
        diff = np.abs(sum(grams) - sim.nodes[parent].gram).max()
        worst = max(worst, float(diff))
    return worst


def verify_zigzag(records):
    """True iff every round leaves the other party's coordinate bitwise unchanged."""
    for rec in records:
        traj = rec.trajectory
        if len(traj) != len(rec.parties) + 1 or traj[0] != (0.0, 0.0):
            return False
        for party, prev, cur in zip(rec.parties, traj, traj[1:]):
            frozen = 1 if party is Party.ALICE else 0
            if cur[frozen] != prev[frozen]:
                return False
    return True


def recompute_trajectory(rec: BranchRecord):
    """(x, y) at each point recomputed from the full 4x4 POVM via partial traces."""
    points = []
    for g in rec.path_grams:
        g4 = g.reshape(2, 2, 2, 2)
        red_a = np.einsum("ijkj->ik", g4)
        red_b = np.einsum("ijil->jl", g4)
        xa = np.real(red_a[0, 0] - red_a[1, 1]) / np.real(np.trace(red_a))
        yb = np.real(red_b[0, 0] - red_b[1, 1]) / np.real(np.trace(red_b))
        points.append((float(xa), float(yb)))
    return points


def trajectory_recompute_error(records):
    worst = 0.0
    for rec in records:
        for (x0, y0), (x1, y1) in zip(rec.trajectory, recompute_trajectory(rec)):
            worst = max(worst, abs(x0 - x1), abs(y0 - y1))
    return worst


@dataclass(frozen=True)
class GammaClassification:
    r: float
    gamma0: frozenset
    gamma_plus: frozenset
    gamma_minus: frozenset
    entry_plus: frozenset
    entry_minus: frozenset

    def label(self, history):
        if history in self.gamma_plus:
            return "+"
        if history in self.gamma_minus:
            return "-"
        return "0"


def first_entry(trajectory, r):
    """Index and sign of the first trajectory point inside R+ or R-.

    Returns ``(None, 0)`` when the trajectory never enters either region.
    Boundary points count as inside.
    """
    for i, (x, y) in enumerate(trajectory):
        if gap.gamma_pm(x, y, r, +1) >= 0.0:
            return i, +1
        if gap.gamma_pm(x, y, r, -1) >= 0.0:
            return i, -1
    return None, 0


def classify(records, r) -> GammaClassification:
    """Partition leaves by the region of their first entry into R+ or R-."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    g0, gp, gm, ep, em = set(), set(), set(), set(), set()
    for rec in records:
        idx, sign = first_entry(rec.trajectory, r)
        if sign == 0:
            g0.add(rec.history)
        elif sign > 0:
            gp.add(rec.history)
            ep.add(rec.history[:idx])
        else:
            gm.add(rec.history)
            em.add(rec.history[:idx])
    return GammaClassification(
        r, frozenset(g0), frozenset(gp), frozenset(gm), frozenset(ep), frozenset(em)
    )


def _prefix_grams(records):
    grams = {}
    for rec in records:
        for i, g in enumerate(rec.path_grams):
            grams.setdefault(rec.history[:i], g)
    return grams


def entry_consistency_error(records, cls: GammaClassification):
    """Mismatch between POVM sums over entry points and over the leaves below them."""
    grams = _prefix_grams(records)
    worst = 0.0
    for entries, leaves in ((cls.entry_plus, cls.gamma_plus), (cls.entry_minus, cls.gamma_minus)):
        lhs = sum((grams[h] for h in entries), np.zeros((4, 4), dtype=complex))
        rhs = sum((grams[h] for h in leaves), np.zeros((4, 4), dtype=complex))
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    applicable: bool = True

    @property
    def passed(self):
        return (not self.applicable) or self.lhs >= self.rhs - AUDIT_TOL

    @property
    def status(self):
        if not self.applicable:
            return "n/a"
        return "pass" if self.passed else "FAIL"


@dataclass(frozen=True)
class AuditReport:
    q: float
    r: float
    alpha: float
    efficiency: float
    meets_efficiency: bool
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def efficiency(records):
    return float(sum(rec.stats.q for rec in records if rec.stats.p <= ZERO_P))


def audit_inequalities(records, classification, q, r, alpha, measure=None) -> AuditReport:
    """Evaluate each inequality of the LOCC bound on simulated leaves.

    Checks are stated as ``lhs >= rhs`` and pass within 1e-9. Checks that
    rely on the protocol meeting the efficiency target are marked not
    applicable when it does not. With ``measure`` given (an E_Q measure at
    the same Q), the checks on mean residual entanglement are added.
    """
    gap.check_feasible(q, r, alpha)
    if classification.r != r:
        raise ValueError("classification was computed for a different r")
    eff = efficiency(records)
    meets = eff >= q - 1e-12
    by_hist = {rec.history: rec for rec in records}
    grams = _prefix_grams(records)
    ratio = (1.0 - r) / (1.0 + r)
    checks = []

    zero_leaves = [rec for rec in records if rec.stats.p <= ZERO_P]
    landed = sum(
        1 for rec in zero_leaves
        if rec.history in classification.gamma_plus or rec.history in classification.gamma_minus
    )
    checks.append(InequalityCheck("landing", float(landed), float(len(zero_leaves))))

    q_pm = {}
    for sign, leaves, entries in (
        ("+", classification.gamma_plus, classification.entry_plus),
        ("-", classification.gamma_minus, classification.entry_minus),
    ):
        sgn = 1 if sign == "+" else -1
        p_sum = sum(by_hist[h].p for h in leaves)
        q_sum = sum(by_hist[h].q for h in leaves)
        q_pm[sign] = q_sum
        checks.append(InequalityCheck(f"p{sign}>=ratio*q{sign}", p_sum, ratio * q_sum))
        f_entries = sum(gap.f_pm(grams[h], r, sgn) for h in entries)
        checks.append(InequalityCheck(f"f{sign}(entries)>=0", f_entries, 0.0))
        bound = sum(
            -alpha * by_hist[h].p
            if not gap.in_enlarged_region(by_hist[h].x, by_hist[h].y, r, alpha, sgn)
            else (1.0 - r * r) / 2.0 * by_hist[h].p
            for h in leaves
        )
        f_leaves = sum(gap.f_pm(by_hist[h].gram, r, sgn) for h in leaves)
        checks.append(InequalityCheck(f"f{sign}-bound>=f{sign}(leaves)", bound, f_leaves))

    checks.append(InequalityCheck("q+ + q- >= Q", q_pm["+"] + q_pm["-"], q, applicable=meets))
    p_region = sum(
        rec.p for rec in records if gap.in_enlarged_union(rec.x, rec.y, r, alpha)
    )
    checks.append(
        InequalityCheck("p(R_alpha) >= p_lower", p_region, gap.p_lower_prefactor(r, alpha) * q,
                        applicable=meets)
    )

    if measure is not None:
        ebar, bound = ebar_locc(records, measure)
        checks.append(InequalityCheck("bound >= ebar", bound, ebar))
        result = gap.delta_low(q, r, alpha)
        mu = result.star.mu_star
        e_target = float(measure(1.0 - q))
        delta_sum = sum(
            rec.p * gap.delta(rec.x, rec.y, measure, q, mu)
            for rec in records if rec.p > ZERO_P
        )
        checks.append(InequalityCheck("E(1-Q) - sum p*delta >= bound", e_target - delta_sum, bound,
                                      applicable=meets))
        checks.append(InequalityCheck("sum p*delta >= delta_low", delta_sum, result.delta_low,
                                      applicable=meets))
        checks.append(InequalityCheck("E(1-Q) - delta_low >= ebar", e_target - result.delta_low,
                                      ebar, applicable=meets))
    return AuditReport(q, r, alpha, eff, meets, tuple(checks))


def ebar_locc(records, m):
    """Mean residual entanglement of the leaves and its diagonal-data upper bound.

    Returns ``(ebar, bound)`` where ``bound`` is the sum of
    ``p_k E(C(x_k, y_k))`` over leaves with nonzero success probability.
    """
    stats = [rec.stats for rec in records]
    ebar = mean_residual(stats, m)
    bound = 0.0
    for rec in records:
        p = rec.p
        if p > ZERO_P:
            bound += p * float(m(c_bound(rec.x, rec.y)))
    return ebar, bound


def global_bound(q, r, alpha, measure=None):
    """E(1-Q) - delta_low: no LOCC protocol meeting efficiency Q exceeds this."""
    from .measures import EQMeasure

    measure = measure or EQMeasure(q)
    return float(measure(1.0 - q)) - gap.delta_low(q, r, alpha).delta_low


# -- protocol families -------------------------------------------------------


def _projective_z():
    return LocalInstrument((algebra.PROJ0, algebra.PROJ1))


def _chain(instruments, first=Party.ALICE):
    """Full tree repeating the instrument list round by round."""
    party = first
    parties = []
    for _ in instruments:
        parties.append(party)
        party = party.other

    def _build(level):
        inst = instruments[level]
        children = {}
        if level + 1 < len(instruments):
            children = {k: _build(level + 1) for k in range(len(inst))}
        return ProtocolNode(parties[level], inst, children)

    return _build(0)


def _random_general_instrument(rng, n):
    ops = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    s = algebra.gram(ops).sum(axis=0)
    vals, vecs = np.linalg.eigh(s)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return LocalInstrument(tuple(op @ inv_sqrt for op in ops))


def _random_diagonal_instrument(rng, n):
    weights = rng.uniform(0.05, 1.0, size=(n, 2))
    weights /= weights.sum(axis=0)
    return LocalInstrument.diagonal(weights)


def _random_instrument(rng, n, kind):
    if kind == "mixed":
        kind = rng.choice(["general", "diagonal", "projective"], p=[0.4, 0.35, 0.25])
    if kind == "general":
        return _random_general_instrument(rng, n)
    if kind == "diagonal":
        return _random_diagonal_instrument(rng, n)
    if kind == "projective":
        return _projective_z()
    raise ValueError(f"unknown instrument kind {kind!r}")


def random_protocol(seed, depth=4, branching=3, kind="mixed", stop_prob=0.35):
    """Seeded random protocol with variable-depth branches."""
    if depth < 1 or branching < 1:
        raise ValueError("depth and branching must be positive")
    rng = np.random.default_rng(seed)
    first = Party.ALICE if rng.random() < 0.5 else Party.BOB

    def _build(level, party):
        n = int(rng.integers(min(2, branching), branching + 1))
        inst = _random_instrument(rng, n, kind)
        children = {}
        if level < depth:
            for k in range(len(inst)):
                if rng.random() >= stop_prob:
                    children[k] = _build(level + 1, party.other)
        return ProtocolNode(party, inst, children)

    return LoccProtocol(_build(1, first), max_depth=max(depth, DEFAULT_MAX_DEPTH))


def build_protocol_family(name, **params):
    """Named protocol fixtures.

    ``projective-zz``
        Alternating projective Z rounds (``depth``, default 2).
    ``partial-diagonal``
        One round per angle in ``thetas`` with Kraus operators
        diag(cos t, sin t) and diag(sin t, cos t).
    ``identity``
        A single trivial round.
    ``random``
        :func:`random_protocol` with ``seed``, ``depth``, ``branching``, ``kind``.
    """
    key = name.lower().replace("_", "-")
    first = Party.parse(params.pop("first", "A"))
    if key == "projective-zz":
        depth = int(params.get("depth", 2))
        proto = LoccProtocol(_chain([_projective_z()] * depth, first), max(depth, DEFAULT_MAX_DEPTH))
    elif key == "partial-diagonal":
        thetas = list(params.get("thetas", [np.pi / 8, np.pi / 8]))
        insts = [
            LocalInstrument(
                (np.diag([np.cos(t), np.sin(t)]), np.diag([np.sin(t), np.cos(t)]))
            )
            for t in thetas
        ]
        proto = LoccProtocol(_chain(insts, first), max(len(insts), DEFAULT_MAX_DEPTH))
    elif key == "identity":
        proto = LoccProtocol(ProtocolNode(first, LocalInstrument((np.eye(2),))))
    elif key == "random":
        proto = random_protocol(
            params.get("seed", 0),
            depth=params.get("depth", 4),
            branching=params.get("branching", 3),
            kind=params.get("kind", "mixed"),
        )
    else:
        raise ValueError(f"unknown protocol family {name!r}")
    validate(proto)
    return proto


# -- JSON --------------------------------------------------------------------


def _node_to_obj(node):
    return {
        "party": node.party.value,
        "kraus": [
            [[float(z.real), float(z.imag)] for z in op.reshape(-1)] for op in node.instrument.kraus
        ],
        "children": {str(k): _node_to_obj(c) for k, c in sorted(node.children.items())},
    }


def _node_from_obj(obj):
    try:
        kraus = []
        for entries in obj["kraus"]:
            if len(entries) != 4:
                raise MalformedProtocolError("each Kraus operator needs four entries")
            kraus.append(np.array([complex(re, im) for re, im in entries]).reshape(2, 2))
        children = {int(k): _node_from_obj(v) for k, v in obj.get("children", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedProtocolError):
            raise
        raise MalformedProtocolError(f"bad protocol node: {exc}") from exc
    return ProtocolNode(Party.parse(obj["party"]), LocalInstrument(tuple(kraus)), children)


def protocol_to_json(proto: LoccProtocol):
    return json.dumps({"max_depth": proto.max_depth, "root": _node_to_obj(proto.root)}, indent=1)


def protocol_from_json(text):
    obj = json.loads(text)
    if "root" in obj:
        proto = LoccProtocol(_node_from_obj(obj["root"]), int(obj.get("max_depth", DEFAULT_MAX_DEPTH)))
    else:
        proto = LoccProtocol(_node_from_obj(obj))
    validate(proto)
    return proto

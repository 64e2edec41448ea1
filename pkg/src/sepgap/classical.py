"""
Classical analogue: public-communication (PC) protocols on private bits.

Alice holds bit i, Bob holds bit j, and outcomes are announced publicly.
A PC protocol is a tree of alternating rounds; each round announces an
outcome drawn from a distribution conditioned on the speaker's bit. The
induced channel P(k | i j) yields per-outcome success/failure
probabilities and the residual privacy K-bar. ``compile_pc_to_locc`` turns
any PC protocol into an LOCC protocol with diagonal Kraus operators that
reproduces those numbers on the quantum task.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import locc
from .algebra import PHI_PLUS, apply_product_kraus
from .locc import LocalInstrument, LoccProtocol, Party, ProtocolNode
from .measures import privacy_k
from .separable import build_optimal_instrument

NORMALIZATION_TOL = 1e-12
ZERO_P = 1e-12
FACTORIZATION_TOL = 1e-12
FIT_RESIDUAL = 1e-10
BITS = ((0, 0), (0, 1), (1, 0), (1, 1))


class MalformedPcProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class ClassicalChannel:
    """Conditional outcome distribution P(k | i j).

    ``table[(i, j)]`` is an array aligned with ``outcomes``.
    """

    outcomes: tuple
    table: dict

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        table = {}
        for key in BITS:
            if key not in self.table:
                raise ValueError(f"channel table lacks input bits {key}")
            row = np.asarray(self.table[key], dtype=float)
            if row.shape != (len(self.outcomes),):
                raise ValueError("table rows must align with the outcome list")
            if np.any(row < 0):
                raise ValueError("probabilities must be nonnegative")
            if abs(row.sum() - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"P(.|{key[0]}{key[1]}) sums to {row.sum()!r}, not 1")
            row.setflags(write=False)
            table[key] = row
        object.__setattr__(self, "table", table)

    def prob(self, k_index, i, j):
        return float(self.table[(i, j)][k_index])

    def matrix(self, k_index):
        """2x2 table M[i, j] = P(k | i j) for one outcome."""
        return np.array([[self.table[(i, j)][k_index] for j in (0, 1)] for i in (0, 1)])


@dataclass
class PcNode:
    """One announcement round.

    ``probs[b][k]`` is the probability of announcing ``k`` when the
    speaker's bit is ``b``.
    """

    party: Party
    probs: np.ndarray
    children: dict = field(default_factory=dict)

    def __post_init__(self):
        self.party = Party.parse(self.party)
        self.probs = np.asarray(self.probs, dtype=float)


@dataclass
class PcProtocol:
    root: PcNode
    max_depth: int = locc.DEFAULT_MAX_DEPTH


def validate_pc(proto: PcProtocol):
    def _check(node, depth, history):
        if depth > proto.max_depth:
            raise MalformedPcProtocolError(f"branch {history!r} exceeds max depth")
        p = node.probs
        if p.ndim != 2 or p.shape[0] != 2 or p.shape[1] == 0:
            raise MalformedPcProtocolError(f"round {history!r} needs a 2 x n probability table")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
            raise MalformedPcProtocolError(f"round {history!r} is not normalized")
        for k, child in node.children.items():
            if not isinstance(k, int) or not 0 <= k < p.shape[1]:
                raise MalformedPcProtocolError(f"child key {k!r} at {history!r} is not an outcome")
            if child.party is node.party:
                raise MalformedPcProtocolError(f"parties do not alternate at {history + (k,)!r}")
            _check(child, depth + 1, history + (k,))

    _check(proto.root, 1, ())


def channel_of_pc(proto: PcProtocol) -> ClassicalChannel:
    """Multiply round probabilities along each history.

    Histories with zero probability for every input pair are dropped.
    """
    validate_pc(proto)
    outcomes = []
    rows = {key: [] for key in BITS}

    def _walk(node, history, probs):
        for k in range(node.probs.shape[1]):
            new = {}
            for i, j in BITS:
                bit = i if node.party is Party.ALICE else j
                new[(i, j)] = probs[(i, j)] * node.probs[bit, k]
            child = node.children.get(k)
            if child is not None:
                _walk(child, history + (k,), new)
            elif any(v > 0 for v in new.values()):
                outcomes.append(history + (k,))
                for key in BITS:
                    rows[key].append(new[key])

    _walk(proto.root, (), {key: 1.0 for key in BITS})
    return ClassicalChannel(tuple(outcomes), {k: np.array(v) for k, v in rows.items()})


@dataclass(frozen=True)
class ClassicalStats:
    outcome: object
    p_cl: float
    q_cl: float
    lambda_cl: object  # None where p_cl vanishes


def channel_stats(ch: ClassicalChannel):
    stats = []
    for n, k in enumerate(ch.outcomes):
        p00, p01, p10, p11 = (ch.table[key][n] for key in BITS)
        p = (p00 + p11) / 2.0
        q = (p01 + p10) / 2.0
        lam = p00 / (2.0 * p) if p > ZERO_P else None
        stats.append(ClassicalStats(k, float(p), float(q), None if lam is None else float(lam)))
    return stats


@dataclass(frozen=True)
class KbarResult:
    kbar: float
    efficiency: float
    efficient: bool

    def __iter__(self):
        return iter((self.kbar, self.efficiency))


def kbar(ch: ClassicalChannel, m, q) -> KbarResult:
    """Mean residual privacy and the failure probability certified by p = 0 outcomes."""
    total = 0.0
    eff = 0.0
    for st in channel_stats(ch):
        if st.p_cl <= ZERO_P:
            eff += st.q_cl
        else:
            total += st.p_cl * float(privacy_k(min(max(st.lambda_cl, 0.0), 1.0), m))
    return KbarResult(total, eff, bool(eff >= q - 1e-12))


@dataclass(frozen=True)
class ClassicalSeparableAgent:
    """Helper announcing k with probability w_k [1 + (-1)^i x_k][1 + (-1)^j y_k]."""

    elements: tuple

    def __post_init__(self):
        elems = tuple((float(w), float(x), float(y)) for w, x, y in self.elements)
        for w, x, y in elems:
            if w < 0 or abs(x) > 1 or abs(y) > 1:
                raise ValueError(f"invalid agent element {(w, x, y)!r}")
        object.__setattr__(self, "elements", elems)
        self.channel()  # normalization check

    def channel(self) -> ClassicalChannel:
        table = {}
        for i, j in BITS:
            si, sj = (-1) ** i, (-1) ** j
            table[(i, j)] = np.array([w * (1 + si * x) * (1 + sj * y) for w, x, y in self.elements])
        return ClassicalChannel(tuple(range(1, len(self.elements) + 1)), table)


def build_classical_separable(q) -> ClassicalSeparableAgent:
    """Agent with the parameters of the optimal quantum separable instrument."""
    inst = build_optimal_instrument(q)
    return ClassicalSeparableAgent(tuple((e.w, e.x, e.y) for e in inst))


def factorization_error(ch: ClassicalChannel):
    """Largest |P(k|00) P(k|11) - P(k|01) P(k|10)| over outcomes."""
    worst = 0.0
    for n in range(len(ch.outcomes)):
        m = ch.matrix(n)
        worst = max(worst, abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    return float(worst)


def fit_separable_agent(ch: ClassicalChannel):
    """Product-form witness (w, x, y) per outcome, or None if the channel is not separable.

    The witness is read off from the marginals of each outcome's 2x2
    table; the channel is separable iff the reconstruction matches within
    1e-10.
    """
    elements = []
    for n in range(len(ch.outcomes)):
        m = ch.matrix(n)
        total = m.sum()
        if total <= 0:
            elements.append((0.0, 0.0, 0.0))
            continue
        x = (m[0].sum() - m[1].sum()) / total
        y = (m[:, 0].sum() - m[:, 1].sum()) / total
        w = total / 4.0
        recon = w * np.outer([1 + x, 1 - x], [1 + y, 1 - y])
        if np.abs(recon - m).max() > FIT_RESIDUAL:
            return None
        elements.append((w, float(np.clip(x, -1, 1)), float(np.clip(y, -1, 1))))
    return ClassicalSeparableAgent(tuple(elements))


def is_separable_channel(ch: ClassicalChannel):
    return factorization_error(ch) <= FACTORIZATION_TOL and fit_separable_agent(ch) is not None


def compile_pc_to_locc(proto: PcProtocol) -> LoccProtocol:
    """LOCC protocol whose round for announcement k applies diag(sqrt P(k|0), sqrt P(k|1))."""
    validate_pc(proto)

    def _convert(node):
        inst = LocalInstrument.diagonal(node.probs.T)
        return ProtocolNode(node.party, inst, {k: _convert(c) for k, c in node.children.items()})

    out = LoccProtocol(_convert(proto.root), proto.max_depth)
    locc.validate(out)
    return out


@dataclass(frozen=True)
class CompileReport:
    """Deviations between the compiled LOCC simulation and the PC channel."""

    max_p_error: float
    max_q_error: float
    max_lambda_error: float
    max_offdiag: float
    unmatched: int
    ebar: float
    kbar: float

    def passed(self, tol=1e-10):
        return (
            self.unmatched == 0
            and max(self.max_p_error, self.max_q_error, self.max_lambda_error, self.max_offdiag) <= tol
            and abs(self.ebar - self.kbar) <= tol
        )


def compile_report(proto: PcProtocol, m, q=0.0) -> CompileReport:
    """Simulate the compiled protocol and compare it outcome by outcome with the channel."""
    ch = channel_of_pc(proto)
    stats = {st.outcome: st for st in channel_stats(ch)}
    records = locc.simulate(compile_pc_to_locc(proto))
    by_hist = {rec.history: rec for rec in records}
    p_err = q_err = lam_err = offdiag = 0.0
    unmatched = len(set(stats) ^ set(by_hist))
    for hist, st in stats.items():
        rec = by_hist.get(hist)
        if rec is None:
            continue
        offdiag = max(offdiag, abs(rec.a_params.xi), abs(rec.b_params.xi))
        p_err = max(p_err, abs(rec.stats.p_plus - st.p_cl), abs(rec.stats.p_minus - st.p_cl))
        q_err = max(q_err, abs(rec.stats.q - st.q_cl))
        if st.lambda_cl is not None:
            psi = apply_product_kraus(rec.cumulative_a, rec.cumulative_b, PHI_PLUS)
            lam = abs(psi[0]) ** 2 / np.sum(np.abs(psi) ** 2)
            lam_err = max(lam_err, abs(lam - st.lambda_cl), abs(psi[1]), abs(psi[2]))
    ebar, _ = locc.ebar_locc(records, m)
    kb = kbar(ch, m, q).kbar
    return CompileReport(p_err, q_err, lam_err, offdiag, unmatched, ebar, kb)


def random_pc_protocol(seed, depth=4, branching=3, stop_prob=0.35, reveal_prob=0.25):
    """Seeded random PC protocol.

    Round distributions are normalized positive samples; with probability
    ``reveal_prob`` a round announces the speaker's bit exactly, so that
    zero-probability outcomes occur.
    """
    rng = np.random.default_rng(seed)
    first = Party.ALICE if rng.random() < 0.5 else Party.BOB

    def _build(level, party):
        if rng.random() < reveal_prob:
            probs = np.eye(2)
        else:
            n = int(rng.integers(min(2, branching), branching + 1))
            probs = rng.uniform(0.05, 1.0, size=(2, n))
            probs /= probs.sum(axis=1, keepdims=True)
        children = {}
        if level < depth:
            for k in range(probs.shape[1]):
                if rng.random() >= stop_prob:
                    children[k] = _build(level + 1, party.other)
        return PcNode(party, probs, children)

    return PcProtocol(_build(1, first), max_depth=max(depth, locc.DEFAULT_MAX_DEPTH))


def full_reveal_protocol(rounds=1, first="A"):
    """Each round announces the speaker's bit; ``rounds`` is 1 or 2."""
    party = Party.parse(first)
    children = {}
    if rounds == 2:
        children = {k: PcNode(party.other, np.eye(2)) for k in (0, 1)}
    elif rounds != 1:
        raise ValueError("rounds must be 1 or 2")
    return PcProtocol(PcNode(party, np.eye(2), children))


def uniform_coin_protocol(first="A"):
    return PcProtocol(PcNode(Party.parse(first), np.full((2, 2), 0.5)))


# -- JSON --------------------------------------------------------------------


def _outcome_to_json(k):
    return list(k) if isinstance(k, tuple) else k


def _outcome_from_json(k):
    return tuple(k) if isinstance(k, list) else k


def channel_to_json(ch: ClassicalChannel):
    return json.dumps(
        {
            "outcomes": [_outcome_to_json(k) for k in ch.outcomes],
            "table": {f"{i}{j}": [float(v) for v in ch.table[(i, j)]] for i, j in BITS},
        },
        indent=1,
    )


def channel_from_json(text):
    obj = json.loads(text)
    table = {(int(key[0]), int(key[1])): row for key, row in obj["table"].items()}
    return ClassicalChannel(tuple(_outcome_from_json(k) for k in obj["outcomes"]), table)


def _pc_node_to_obj(node):
    return {
        "party": node.party.value,
        "probs": [[float(v) for v in row] for row in node.probs],
        "children": {str(k): _pc_node_to_obj(c) for k, c in sorted(node.children.items())},
    }


def _pc_node_from_obj(obj):
    try:
        children = {int(k): _pc_node_from_obj(v) for k, v in obj.get("children", {}).items()}
        return PcNode(obj["party"], np.array(obj["probs"], dtype=float), children)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedPcProtocolError):
            raise
        raise MalformedPcProtocolError(f"bad PC protocol node: {exc}") from exc


def pc_to_json(proto: PcProtocol):
    return json.dumps({"max_depth": proto.max_depth, "root": _pc_node_to_obj(proto.root)}, indent=1)


def pc_from_json(text):
    obj = json.loads(text)
    if "root" in obj:
        proto = PcProtocol(_pc_node_from_obj(obj["root"]), int(obj.get("max_depth", locc.DEFAULT_MAX_DEPTH)))
    else:
        proto = PcProtocol(_pc_node_from_obj(obj))
    validate_pc(proto)
    return proto


def is_pc_document(obj):
    node = obj.get("root", obj)
    return isinstance(node, dict) and "probs" in node

"""Constraint store and fixpoint propagation over interval-like domains.

Constraints are posted against integer variable handles.  Each posted
constraint is queued; running the store pops constraints, executes their
propagators, and re-queues every constraint watching a variable whose
domain changed, until the queue drains (local consistency) or a domain is
wiped out.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .arith import DomainWipeoutError, RealInterval
from .domains import PBOX

__all__ = [
    "Constraint",
    "ConstraintStore",
    "Inconsistent",
    "Kind",
    "PropagationBudgetExceeded",
    "PropagationOutcome",
    "Status",
    "propagate_arith",
    "propagate_add",
    "propagate_eq",
    "propagate_leq",
    "propagate_pos_indicator",
]

LOG = logging.getLogger(__name__)

# Strict positivity threshold for an order variable once its indicator is 1.
POSITIVE_EPS = 1e-6
# Passes a ternary propagator makes before handing back to the queue.
INNER_PASSES = 200


class Kind(enum.Enum):
    EQ = "eq"
    LEQ = "leq"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    POS = "pos"


ARITY = {Kind.EQ: 2, Kind.LEQ: 2, Kind.POS: 2, Kind.ADD: 3, Kind.SUB: 3, Kind.MUL: 3, Kind.DIV: 3}


class Status(enum.Enum):
    CONSISTENT = "consistent"
    RUNNING = "running"
    FAILED = "failed"


class Inconsistent(Exception):
    """A propagator emptied a domain."""

    def __init__(self, reason: str, position: Optional[int] = None):
        super().__init__(reason)
        self.reason = reason
        self.position = position


class PropagationBudgetExceeded(RuntimeError):
    pass


class Constraint(NamedTuple):
    kind: Kind
    args: tuple[int, ...]


@dataclass
class PropagationOutcome:
    changed: set = field(default_factory=set)
    failed: bool = False
    reason: str = ""


# -- propagators ----------------------------------------------------------------
#
# Each takes the algebra and the argument domains and returns the narrowed
# domains in the same order, raising Inconsistent on a wipeout.  Narrowed
# domains that differ from the input only below the update floor are
# returned as the input object so callers can detect "no change" by identity.

def _keep(alg, old, new):
    return new if alg.differs(old, new) else old


def _meet(alg, old, proposal, position, what):
    new = alg.meet(old, proposal)
    if new is None:
        raise Inconsistent(f"{what}: empty intersection", position)
    return _keep(alg, old, new)


def _narrow(alg, old, q: RealInterval, position, what):
    new = alg.narrow_to(old, q)
    if new is None:
        raise Inconsistent(f"{what}: empty intersection", position)
    return _keep(alg, old, new)


def propagate_eq(x, y, alg=PBOX):
    for _ in range(INNER_PASSES):
        nx = _meet(alg, x, y, 0, "equality")
        ny = _meet(alg, y, nx, 1, "equality")
        if nx is x and ny is y:
            break
        x, y = nx, ny
    return x, y


def propagate_leq(x, y, alg=PBOX):
    """``x <= y``: x's upper bound drops to the glb, y's lower bound rises to the lub."""
    res = alg.leq(x, y)
    if res is None:
        raise Inconsistent("ordering wipeout", 0)
    nx, ny = res
    nx, ny = _keep(alg, x, nx), _keep(alg, y, ny)
    # a second pass only matters when dominance repair moved a quantile
    while nx is not x or ny is not y:
        x, y = nx, ny
        res = alg.leq(x, y)
        if res is None:
            raise Inconsistent("ordering wipeout", 0)
        nx, ny = _keep(alg, x, res[0]), _keep(alg, y, res[1])
    return x, y


def _spans_zero(q: RealInterval) -> bool:
    return q.lo <= 0.0 <= q.hi


_FORWARD = {Kind.ADD: "add", Kind.SUB: "sub", Kind.MUL: "mul", Kind.DIV: "div"}


def _backward(kind: Kind, z: RealInterval, x: RealInterval, y: RealInterval):
    """Quantile ranges for x and y implied by ``z = x op y``; ``None`` when skipped."""
    if kind is Kind.ADD:
        return z - y, z - x
    if kind is Kind.SUB:
        return z + y, x - z
    if kind is Kind.MUL:
        return (None if _spans_zero(y) else z / y), (None if _spans_zero(x) else z / x)
    return z * y, (None if _spans_zero(z) else x / z)


def propagate_arith(kind: Kind, z, x, y, alg=PBOX):
    """Ternary ``z = x op y``: forward projection onto z, backward onto x and y.

    The forward projection narrows z with the full interval meet.  Backward
    projections narrow only the quantiles of x and y, computed by plain
    interval arithmetic, and keep their bound lines; this stops cdf values
    creeping round a cycle of constraints.  A backward projection that would
    divide by a range spanning zero is skipped; a forward division by such a
    domain is a wipeout.
    """
    forward = getattr(alg, _FORWARD[kind])
    for _ in range(INNER_PASSES):
        try:
            proposal = forward(x, y)
        except DomainWipeoutError as exc:
            raise Inconsistent(f"{kind.value}: {exc}", 0) from None
        nz = _meet(alg, z, proposal, 0, kind.value)
        qz, qx, qy = (RealInterval(*alg.bounds(d)) for d in (nz, x, y))
        bx, _ = _backward(kind, qz, qx, qy)
        nx = x if bx is None else _narrow(alg, x, bx, 1, kind.value)
        if nx is not x:
            qx = RealInterval(*alg.bounds(nx))
        _, by = _backward(kind, qz, qx, qy)
        ny = y if by is None else _narrow(alg, y, by, 2, kind.value)
        if nz is z and nx is x and ny is y:
            return z, x, y
        z, x, y = nz, nx, ny
    return z, x, y


def propagate_add(z, x, y, alg=PBOX):
    return propagate_arith(Kind.ADD, z, x, y, alg)


def propagate_pos_indicator(x, d, alg=PBOX, eps: float = POSITIVE_EPS):
    """``d = 1`` iff ``x > 0`` for a 0/1 variable ``d``."""
    while True:
        nx, nd = x, d
        x_lo, x_hi = alg.bounds(nx)
        if x_lo > 0.0:
            nd = _meet(alg, nd, alg.point(1.0), 1, "indicator")
        elif x_hi <= 0.0:
            nd = _meet(alg, nd, alg.point(0.0), 1, "indicator")
        d_lo, d_hi = alg.bounds(nd)
        if 0.0 < d_lo < 1.0:
            nd = _meet(alg, nd, alg.point(1.0), 1, "indicator")
        elif 0.0 < d_hi < 1.0:
            nd = _meet(alg, nd, alg.point(0.0), 1, "indicator")
        d_lo, d_hi = alg.bounds(nd)
        if d_hi <= 0.0:
            new = alg.narrow(nx, alg.point(0.0))
            if new is None:
                raise Inconsistent("indicator: positive value with indicator 0", 0)
            nx = _keep(alg, nx, new)
        elif d_lo >= 1.0:
            new = alg.at_least(nx, eps)
            if new is None:
                raise Inconsistent("indicator: indicator 1 but value cannot be positive", 0)
            nx = _keep(alg, nx, new)
        if nx is x and nd is d:
            return x, d
        x, d = nx, nd


def _run_propagator(kind: Kind, doms: Sequence, alg):
    if kind is Kind.LEQ:
        return propagate_leq(doms[0], doms[1], alg)
    if kind is Kind.EQ:
        return propagate_eq(doms[0], doms[1], alg)
    if kind is Kind.POS:
        return propagate_pos_indicator(doms[0], doms[1], alg)
    return propagate_arith(kind, doms[0], doms[1], doms[2], alg)


# -- the store -----------------------------------------------------------------------

class ConstraintStore:
    """Variables, posted constraints and the suspension queue.

    ``algebra`` selects the domain kind (``PBOX`` by default).  The store is
    single-threaded; use one store per concurrent task.
    """

    def __init__(self, algebra=PBOX, max_steps: int = 10_000_000):
        self.algebra = algebra
        self.max_steps = max_steps
        self.domains: list = []
        self.names: list[Optional[str]] = []
        self.constraints: list[Constraint] = []
        self._watch: list[list[int]] = []
        self._queue: deque[int] = deque()
        self._queued: list[bool] = []
        self.status = Status.CONSISTENT
        self.failure: Optional[tuple[Optional[Constraint], str]] = None
        self.steps = 0
        self._constants: dict[float, int] = {}

    # variables

    def new_var(self, domain, name: Optional[str] = None) -> int:
        self.domains.append(domain)
        self.names.append(name)
        self._watch.append([])
        return len(self.domains) - 1

    def constant(self, c: float) -> int:
        """Shared variable fixed to the constant ``c``."""
        c = float(c)
        if c not in self._constants:
            self._constants[c] = self.new_var(self.algebra.point(c), name=f"const({c:g})")
        return self._constants[c]

    def domain(self, var: int):
        return self.domains[var]

    def bounds(self, var: int) -> tuple[float, float]:
        return self.algebra.bounds(self.domains[var])

    def restrict(self, var: int, domain) -> bool:
        """Intersect ``var`` with ``domain`` and wake its watchers.  False on wipeout."""
        new = self.algebra.meet(self.domains[var], domain)
        if new is None:
            self._fail(None, f"restricting {self._label(var)} emptied its domain")
            return False
        self._set(var, new, skip=None)
        return True

    # constraints

    def post(self, kind: Kind, *args: int) -> Constraint:
        if self.status is Status.FAILED:
            raise RuntimeError("cannot post to a failed store")
        if len(args) != ARITY[kind]:
            raise ValueError(f"{kind.value} takes {ARITY[kind]} arguments, got {len(args)}")
        for v in args:
            if not 0 <= v < len(self.domains):
                raise ValueError(f"unknown variable handle {v}")
        c = Constraint(kind, tuple(args))
        idx = len(self.constraints)
        self.constraints.append(c)
        self._queued.append(False)
        for v in set(args):
            self._watch[v].append(idx)
        self._enqueue(idx)
        return c

    def queued(self) -> list[Constraint]:
        return [self.constraints[i] for i in self._queue]

    def _enqueue(self, idx: int):
        if not self._queued[idx]:
            self._queued[idx] = True
            self._queue.append(idx)

    def _set(self, var: int, new, skip: Optional[int]):
        if not self.algebra.differs(self.domains[var], new):
            return False
        self.domains[var] = new
        for idx in self._watch[var]:
            if idx != skip:
                self._enqueue(idx)
        return True

    def _label(self, var: int) -> str:
        return self.names[var] or f"v{var}"

    def _fail(self, constraint: Optional[Constraint], reason: str):
        self.status = Status.FAILED
        self.failure = (constraint, reason)
        self._queue.clear()
        self._queued = [False] * len(self.constraints)

    def propagate(self, idx: int) -> PropagationOutcome:
        """Run one constraint's propagator and write back its narrowed domains."""
        c = self.constraints[idx]
        doms = [self.domains[v] for v in c.args]
        try:
            new = _run_propagator(c.kind, doms, self.algebra)
        except Inconsistent as exc:
            culprit = self._label(c.args[exc.position]) if exc.position is not None else "?"
            reason = f"{exc.reason} ({culprit})"
            self._fail(c, reason)
            return PropagationOutcome(failed=True, reason=reason)
        changed = set()
        for v, old, nd in zip(c.args, doms, new):
            if nd is not old and self._set(v, nd, skip=idx):
                changed.add(v)
        return PropagationOutcome(changed)

    def run_to_fixpoint(self, rng: Optional[random.Random] = None) -> bool:
        """Drain the queue.  Returns True when consistent, False on failure.

        Propagation runs in rounds.  Every constraint queued at the start of
        a round reads the same domains; the narrowings proposed for each
        variable are then combined by an order-independent meet and the
        constraints watching changed variables are queued for the next
        round.  The final domains therefore do not depend on queue order.
        With ``rng`` each round is run in a random order instead of
        first-in first-out, which only affects which failure is reported.
        """
        if self.status is Status.FAILED:
            return False
        self.status = Status.RUNNING
        alg = self.algebra
        queue = self._queue
        while queue:
            batch = list(queue)
            queue.clear()
            if rng is not None:
                rng.shuffle(batch)
            proposals: dict[int, list] = {}
            for idx in batch:
                self._queued[idx] = False
                self.steps += 1
                if self.steps > self.max_steps:
                    raise PropagationBudgetExceeded(f"more than {self.max_steps} propagator runs")
                c = self.constraints[idx]
                doms = [self.domains[v] for v in c.args]
                try:
                    new = _run_propagator(c.kind, doms, alg)
                except Inconsistent as exc:
                    culprit = self._label(c.args[exc.position]) if exc.position is not None else "?"
                    self._fail(c, f"{exc.reason} ({culprit})")
                    LOG.debug("propagation failed: %s", self.failure[1])
                    return False
                for v, old, nd in zip(c.args, doms, new):
                    if nd is not old:
                        proposals.setdefault(v, []).append((idx, nd))
            for v in sorted(proposals):
                props = proposals[v]
                old = self.domains[v]
                merged = alg.combine(old, [nd for _, nd in props])
                if merged is None:
                    self._fail(self.constraints[props[0][0]], f"conflicting narrowings emptied {self._label(v)}")
                    return False
                if not alg.differs(old, merged):
                    continue
                self.domains[v] = merged
                # a lone writer already saw its own result
                source = props[0][0] if len(props) == 1 else None
                for idx in self._watch[v]:
                    if idx != source:
                        self._enqueue(idx)
        self.status = Status.CONSISTENT
        return True

    def enqueue_all(self):
        for idx in range(len(self.constraints)):
            self._enqueue(idx)

    # search support

    def snapshot(self):
        return list(self.domains), self.status, self.failure

    def restore(self, state):
        domains, status, failure = state
        self.domains = list(domains)
        self.status = status
        self.failure = failure
        self._queue.clear()
        self._queued = [False] * len(self.constraints)

    def to_json(self) -> dict:
        alg = self.algebra
        return {
            "algebra": alg.name,
            "status": self.status.value,
            "failure": None if self.failure is None else self.failure[1],
            "variables": [
                {"id": i, "name": self.names[i], "domain": alg.to_json(d)} for i, d in enumerate(self.domains)
            ],
            "constraints": [{"kind": c.kind.value, "args": list(c.args)} for c in self.constraints],
        }

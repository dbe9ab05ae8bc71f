"""Orders on N^2, their axioms, and reconstruction of prime systems.

The powers of g-primes map to N^2 via p_m^n <-> (m, n); every system induces
a total (pre)order there.  Conversely, an order satisfying the finiteness
and monotonicity axioms is induced by some system, recovered constructively:
f_k(n) is the unique integer with (1, f_k(n)) <= (k, n) < (1, f_k(n)+1), the
ratios f_k(n)/n converge with certified speed 1/n, and p_k = p1^{alpha_k}
for an arbitrary base p1 > 1.

External oracles are black boxes; axiom checks are windowed and reported as
verified-on-window only.  Exactly coincident prime-power values surface as
EQ results (logged); the f searches treat EQ as <=.
"""
from __future__ import annotations

import math
import shlex
import subprocess
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import (
    AxiomSearchError,
    IncompleteSystemError,
    ParameterError,
    PreconditionError,
)
from .systems import GPrimeSystem, LOG_TIE_TOL, from_list

LT, EQ, GT = -1, 0, 1
MAX_DOUBLINGS = 64


class OrderOracle:
    """Total-order comparator on N^2 points (m, n), 1-based indices."""

    provenance = "external"

    def compare(self, a: tuple[int, int], b: tuple[int, int]) -> int:
        raise NotImplementedError


class InducedOracle(OrderOracle):
    """Order induced by a system: (m, n) compares as n * log p_m.

    Ties within the float tolerance are declared EQ and counted.  Indices
    beyond the stored primes are resolved through the completeness horizon
    when that decides the comparison (any unlisted prime exceeds `limit`),
    and raise IncompleteSystemError otherwise.
    """

    provenance = "induced-from-system"

    def __init__(self, system: GPrimeSystem):
        if system.nprimes < 1:
            raise ParameterError("induced order needs at least one prime")
        self.system = system
        self.eq_count = 0
        self._log_limit = math.log(system.limit)

    def _key(self, point: tuple[int, int]):
        m, n = point
        if m < 1 or n < 1:
            raise ParameterError(f"N^2 indices are 1-based, got {point}")
        if m <= self.system.nprimes:
            return n * float(self.system._logs[m - 1]), True
        return n * self._log_limit, False  # a strict lower bound

    def compare(self, a, b) -> int:
        ka, exact_a = self._key(a)
        kb, exact_b = self._key(b)
        if exact_a and exact_b:
            if abs(ka - kb) <= LOG_TIE_TOL:
                self.eq_count += 1
                return EQ
            return LT if ka < kb else GT
        if not exact_a and not exact_b:
            raise IncompleteSystemError(
                f"both {a} and {b} lie beyond the stored primes; order unknown"
            )
        if not exact_a:
            if ka >= kb:  # true key exceeds ka
                return GT
            raise IncompleteSystemError(f"{a} is beyond the horizon and may flip")
        if kb >= ka:
            return LT
        raise IncompleteSystemError(f"{b} is beyond the horizon and may flip")


class FunctionOracle(OrderOracle):
    """Wrap a plain comparator function as an oracle."""

    def __init__(self, fn, provenance: str = "external"):
        self._fn = fn
        self.provenance = provenance

    def compare(self, a, b) -> int:
        return int(self._fn(a, b))


class ProcessOracle(OrderOracle):
    """Line-oriented external oracle: send `m n m' n'`, read `<`, `=` or `>`."""

    def __init__(self, cmd: str):
        self._proc = subprocess.Popen(
            shlex.split(cmd),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self.provenance = f"process:{cmd}"

    def compare(self, a, b) -> int:
        self._proc.stdin.write(f"{a[0]} {a[1]} {b[0]} {b[1]}\n")
        self._proc.stdin.flush()
        reply = self._proc.stdout.readline().strip()
        mapping = {"<": LT, "=": EQ, ">": GT}
        if reply not in mapping:
            raise ParameterError(f"oracle protocol violation: reply {reply!r}")
        return mapping[reply]

    def close(self):
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def induced_oracle(system: GPrimeSystem) -> InducedOracle:
    return InducedOracle(system)


@dataclass
class AxiomReport:
    """Windowed verification of the order axioms; never a global claim.

    a3_ok is None when a search hit its cap: undetermined, not failed.
    """

    window: tuple[int, int]
    a1_ok: bool = True
    a2_ok: bool = True
    a3_ok: bool | None = True
    a1_counterexample: tuple | None = None
    a2_counterexample: tuple | None = None
    a3_counterexample: tuple | None = None
    a3_k_witness: dict = field(default_factory=dict)
    a3_l_witness: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok is True


def check_axioms(
    oracle: OrderOracle,
    window: tuple[int, int],
    k_samples: tuple[int, ...] = (2, 3, 5, 8),
    a3_cap: int = 2**16,
) -> AxiomReport:
    """Check A1 exhaustively, A2 on sampled multipliers, A3 by capped search.

    A1: (m,n) <= (m',n') when m <= m' and n <= n', strict when n < n'.
    A2: (m,n) <= (m',n') implies (m,kn) <= (m',kn'), strict preserved.
    A3: for each n a k with (1,n) < (k,1); for each m an l with (m,1) < (1,l).
    """
    M, N = window
    if M < 2 or N < 2:
        raise ParameterError("axiom window needs M, N >= 2")
    if isinstance(oracle, InducedOracle) and M > oracle.system.nprimes:
        raise ParameterError(
            f"window M = {M} exceeds the {oracle.system.nprimes} stored primes"
        )
    report = AxiomReport(window=(M, N))

    points = [(m, n) for m in range(1, M + 1) for n in range(1, N + 1)]
    for a in points:
        for b in points:
            if a[0] <= b[0] and a[1] <= b[1]:
                c = oracle.compare(a, b)
                if c == GT or (a[1] < b[1] and c != LT):
                    report.a1_ok = False
                    report.a1_counterexample = (a, b, c)
                    break
        if not report.a1_ok:
            break

    if report.a1_ok:
        for a in points:
            for b in points:
                base = oracle.compare(a, b)
                if base == GT:
                    continue
                for k in k_samples:
                    scaled = oracle.compare((a[0], k * a[1]), (b[0], k * b[1]))
                    bad = scaled == GT or (base == LT and scaled != LT)
                    if bad:
                        report.a2_ok = False
                        report.a2_counterexample = (a, b, k, base, scaled)
                        break
                if not report.a2_ok:
                    break
            if not report.a2_ok:
                break

    undetermined = False
    for n in range(1, N + 1):
        k, found = 1, False
        while k <= a3_cap:
            try:
                if oracle.compare((1, n), (k, 1)) == LT:
                    report.a3_k_witness[n] = k
                    found = True
                    break
            except IncompleteSystemError:
                break
            k *= 2
        if not found:
            undetermined = True
            report.a3_counterexample = ("A3(i)", n)
            break
    if not undetermined:
        for m in range(1, M + 1):
            l, found = 1, False
            while l <= a3_cap:
                try:
                    if oracle.compare((m, 1), (1, l)) == LT:
                        report.a3_l_witness[m] = l
                        found = True
                        break
                except IncompleteSystemError:
                    break
                l *= 2
            if not found:
                undetermined = True
                report.a3_counterexample = ("A3(ii)", m)
                break
    if undetermined:
        report.a3_ok = None
    return report


def f_k(oracle: OrderOracle, k: int, n: int, max_doublings: int = MAX_DOUBLINGS) -> int:
    """The unique f with (1, f) <= (k, n) < (1, f+1), by doubling + bisection.

    EQ answers count as <=; a doubling search that never escapes suggests an
    A3 violation and raises.
    """
    if k < 1 or n < 1:
        raise ParameterError("f_k needs k, n >= 1")
    hi = 1
    doublings = 0
    while oracle.compare((1, hi), (k, n)) <= EQ:
        hi *= 2
        doublings += 1
        if doublings > max_doublings:
            raise AxiomSearchError(
                f"(1, f) never exceeded ({k}, {n}) after {max_doublings} doublings; "
                "axiom A3 is suspect"
            )
    lo = hi // 2
    if lo == 0:
        raise AxiomSearchError(f"(1,1) already exceeds ({k}, {n}); axiom A1 is suspect")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if oracle.compare((1, mid), (k, n)) <= EQ:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class AlphaInterval:
    """Certified enclosure of alpha_k = log p_k / log p_1.

    The sandwich f_k(n) <= n*alpha_k <= f_k(n)+1 gives the one-sided interval
    [f/n, f/n + 1/n], reported centred with radius 1/(2n).
    """

    value: float
    radius: float
    f: int
    n: int

    @property
    def low(self) -> float:
        return self.value - self.radius

    @property
    def high(self) -> float:
        return self.value + self.radius


def alpha_k(oracle: OrderOracle, k: int, n: int) -> AlphaInterval:
    if k == 1:
        return AlphaInterval(1.0, 0.0, n, n)
    f = f_k(oracle, k, n)
    return AlphaInterval(f / n + 0.5 / n, 0.5 / n, f, n)


@dataclass(frozen=True)
class ReconstructionResult:
    alpha: tuple[AlphaInterval, ...]
    system: GPrimeSystem
    p1: float


def reconstruct(oracle: OrderOracle, p1: float, K: int, n: int) -> ReconstructionResult:
    """Build the system p_k = p1^{alpha_k} from the order alone.

    p1 > 1 is the caller's arbitrary base; the horizon is set just above the
    largest reconstructed prime so induced comparisons stay within it.
    """
    if not (p1 > 1):
        raise ParameterError(f"base prime must exceed 1, got {p1}")
    if K < 1 or n < 1:
        raise ParameterError("reconstruct needs K, n >= 1")
    alphas = [alpha_k(oracle, k, n) for k in range(1, K + 1)]
    primes = [p1**a.value for a in alphas]
    limit = p1 ** (alphas[-1].value + 1.0 / n)
    system = from_list(primes, limit, label=f"reconstructed(p1={p1:g}, n={n})")
    return ReconstructionResult(tuple(alphas), system, p1)


@dataclass(frozen=True)
class CoincidenceResult:
    """Outcome of comparing two induced orderings on a traversal prefix.

    lam satisfies P1 = P2**lam when the orderings coincide (coinciding
    orders only ever differ by a power); witness carries the first
    discordant N^2 pair otherwise.
    """

    coincide: bool
    lam: float | None
    witness: tuple | None
    checked: int
    scaling_verified: bool = False
    max_scaling_deviation: float = 0.0


def _diagonal_points(kmax: int):
    d = 2
    while True:
        for k in range(1, min(d - 1, kmax) + 1):
            yield (k, d - k)
        d += 1


def orderings_coincide(
    system1: GPrimeSystem,
    system2: GPrimeSystem,
    prefix: int,
    certified_radii=None,
) -> CoincidenceResult:
    """Compare the induced orderings on the first `prefix` points of N^2.

    Points are traversed diagonally; at each (k, n) the bracketing integers
    f_k(n) of both systems must agree.  When system2 is a reconstruction,
    pass its certified alpha radii: a point then agrees whenever system1's
    bracket lies inside the integer range the certificate allows, which is
    all a radius-limited reconstruction can promise.  On full agreement the
    scaling exponent lam = log p_1 / log q_1 is returned and p_k = q_k**lam
    is verified on every index checked.
    """
    if prefix < 1:
        raise ParameterError("prefix must be >= 1")
    kmax = min(system1.nprimes, system2.nprimes)
    o1, o2 = InducedOracle(system1), InducedOracle(system2)
    radii = None
    if certified_radii is not None:
        radii = [float(r) for r in certified_radii]
        if len(radii) < kmax:
            raise ParameterError("need one certified radius per compared prime")
    log_q1 = math.log(system2.primes[0])
    checked = 0
    for point in _diagonal_points(kmax):
        if checked >= prefix:
            break
        k, n = point
        f1 = f_k(o1, k, n)
        checked += 1
        if radii is None:
            f2 = f_k(o2, k, n)
            agree = f1 == f2
        else:
            a_hat = math.log(system2.primes[k - 1]) / log_q1
            f_lo = math.floor(n * (a_hat - radii[k - 1]) + 1e-9)
            f_hi = math.floor(n * (a_hat + radii[k - 1]) + 1e-9)
            f2 = f_k(o2, k, n)
            agree = f_lo <= f1 <= f_hi
        if not agree:
            boundary = (1, min(f1, f2) + 1)
            return CoincidenceResult(
                coincide=False,
                lam=None,
                witness=(point, boundary, f1, f2),
                checked=checked,
            )
    lam = math.log(system1.primes[0]) / log_q1
    dev = 0.0
    tol = 1e-9
    for i, (p, q) in enumerate(zip(system1.primes[:kmax], system2.primes[:kmax])):
        dev = max(dev, abs(math.log(p) - lam * math.log(q)) / (1 + abs(math.log(p))))
        if radii is not None:
            tol = max(tol, radii[i] * abs(log_q1) * abs(lam) + 1e-9)
    return CoincidenceResult(True, lam, None, checked, dev <= tol, dev)


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    radius: float


def cauchy_limit(f, n: int, samples=None) -> LimitEstimate:
    """Certified limit of f(n)/n for f with |f(mn)/mn - f(n)/n| <= 1/n.

    The contraction property is spot-checked on sampled (m, n') pairs; a
    violation raises with the witness.  On the checked samples the lemma
    gives |f(n)/n - lim| <= 1/n, returned as (estimate, radius).
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if samples is None:
        base = [1, 2, 3, 5, 8, 13, max(1, n // 7), n]
        mult = [2, 3, 7, 10, 17]
        samples = [(m, q) for q in base for m in mult]
    for m, q in samples:
        lhs = abs(f(m * q) / (m * q) - f(q) / q)
        if lhs > 1.0 / q + 1e-12:
            raise PreconditionError(
                f"|f({m}*{q})/{m * q} - f({q})/{q}| = {lhs:.6g} > 1/{q}",
                witness=(m, q),
            )
    return LimitEstimate(f(n) / n, 1.0 / n)

"""Checkable lower-bound certificates.

For a polynomial analysis outcome this module builds, for any scale
parameter N, one concrete executable path realizing every lower bound at
once: at least N^e instances of each transition with exponent e, and a
final valuation reaching N^e on each variable with exponent e, from an
initial valuation of size O(N).

The construction walks the layer tree bottom-up.  Every node carries one
fixed cycle (an Eulerian traversal of the per-layer multi-cycle solution;
a covering cycle for the root) and one fixed decomposition of that cycle
at the start states of its children's cycles.  A node's contribution for
target layer l repeats each child's contribution N times inside the
decomposition slots, which keeps the result a proper path; the per-layer
paths are concatenated k times each, where the repetition constant k is
chosen so every phase is executable from an O(N) valuation.

For an exponential outcome the module extracts the per-node cycles of the
final layer together with the variable partition (bounded / still growing)
and checks the two growth conditions that force 2^Omega(N) complexity.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .analyzer import AnalysisResult, EXPONENTIAL, LayerRecord, LayerTree, POLYNOMIAL
from .model import (
    Path,
    PrePath,
    Transition,
    Valuation,
    Vass,
    VassError,
    execute_path,
    min_initial_valuation,
    scc_decompose,
)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class WitnessError(VassError):
    """Witness or certificate construction failed an internal self-check."""


class CertificateError(VassError):
    """The extracted cycles violate the exponential-growth conditions."""


@dataclass(frozen=True)
class MultiCycle:
    """A finite set of cycles; its value is the sum of its members' values."""

    cycles: tuple[Path, ...]

    def __post_init__(self):
        for c in self.cycles:
            if not c.is_cycle:
                raise VassError(f"multi-cycle member is not a cycle: {c.steps}")

    def value(self, dimension: int) -> tuple[int, ...]:
        total = [0] * dimension
        for c in self.cycles:
            for i, x in enumerate(c.value(dimension)):
                total[i] += x
        return tuple(total)

    def instances(self) -> Counter:
        counts: Counter = Counter()
        for c in self.cycles:
            counts.update(c.instances())
        return counts


@dataclass(frozen=True)
class WitnessPath:
    """A concrete executable path realizing the polynomial lower bounds."""

    n: int
    k: int
    path: Path
    initial: Valuation
    final: Valuation
    instance_counts: dict[int, int]
    envelope: int  # ceil(norm(initial) / n), the measured O(N) constant

    def dump(self, v: Vass) -> str:
        lines = [f"witness N={self.n} k={self.k}"]
        lines.append("init " + " ".join(str(self.initial[x]) for x in v.variables))
        lines.extend(str(t.tid) for t in self.path.steps)
        lines.append("instances " + " ".join(
            f"{t.tid}={self.instance_counts.get(t.tid, 0)}" for t in v.transitions))
        lines.append("final " + " ".join(str(self.final[x]) for x in v.variables))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExponentialCertificate:
    """Cycles plus a variable partition witnessing at-least-exponential growth.

    Every cycle must be non-decreasing on the bounded variables, and the
    summed cycle values must gain at least 1 on every growing variable.
    `growing` is empty exactly when analysis stalled with all variables
    bounded (only transitions keep repeating, e.g. on zero-effect cycles);
    the gain condition is then vacuous.
    """

    cycles: tuple[Path, ...]
    bounded: tuple[str, ...]
    growing: tuple[str, ...]

    def dump(self) -> str:
        lines = ["exponential-certificate"]
        lines.append("U: " + " ".join(self.bounded))
        lines.append("W: " + " ".join(self.growing))
        for c in self.cycles:
            parts = [c.start or ""]
            for t in c.steps:
                parts.append(f"-[{t.tid}]->")
                parts.append(t.dst)
            lines.append("cycle: " + " ".join(parts))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WitnessCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class WitnessVerification:
    checks: tuple[WitnessCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def dump(self) -> str:
        return "\n".join(
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}"
            for c in self.checks) + "\n"


def _euler_cycle(start: str, edges: Sequence[Transition],
                 counts: Mapping[int, int]) -> list[Transition]:
    """Eulerian circuit over a balanced multigraph, one edge copy per count.

    Edges at each state are consumed in transition-id order, so the circuit
    is deterministic."""
    remaining: dict[str, list[list]] = {}
    total = 0
    for t in sorted(edges, key=lambda t: t.tid):
        c = counts.get(t.tid, 0)
        if c > 0:
            remaining.setdefault(t.src, []).append([t, c])
            total += c
    stack: list[tuple[str, Optional[Transition]]] = [(start, None)]
    reversed_circuit: list[Transition] = []
    while stack:
        state, via = stack[-1]
        chosen = None
        for slot in remaining.get(state, ()):
            if slot[1] > 0:
                chosen = slot[0]
                slot[1] -= 1
                break
        if chosen is None:
            stack.pop()
            if via is not None:
                reversed_circuit.append(via)
        else:
            stack.append((chosen.dst, chosen))
    circuit = list(reversed(reversed_circuit))
    if len(circuit) != total:
        raise WitnessError("multigraph is not connected on its support")
    return circuit


def multicycle_from_solution(v: Vass, transitions: Sequence[Transition],
                             mu: Mapping[int, int]) -> MultiCycle:
    """Cycles containing exactly mu(t) instances of each transition.

    Requires mu >= 0 with balanced flow at every state; each returned cycle
    stays within one strongly connected component of the support graph and
    starts at its lexicographically least state."""
    for tid, count in mu.items():
        if count < 0:
            raise VassError(f"negative count for transition {tid}")
    balance: dict[str, int] = {}
    support = [t for t in transitions if mu.get(t.tid, 0) > 0]
    for t in support:
        c = mu[t.tid]
        if t.src != t.dst:
            balance[t.src] = balance.get(t.src, 0) - c
            balance[t.dst] = balance.get(t.dst, 0) + c
    if any(b != 0 for b in balance.values()):
        raise VassError("flow constraint violated: unbalanced support")

    states = {t.src for t in support} | {t.dst for t in support}
    cycles = []
    for comp_states, comp_transitions in scc_decompose(states, support):
        steps = _euler_cycle(comp_states[0], comp_transitions, mu)
        cycles.append(Path(tuple(steps)))
    result = MultiCycle(tuple(cycles))
    expected = {t.tid: mu[t.tid] for t in support}
    if dict(result.instances()) != expected:
        raise WitnessError("cycle extraction lost transition instances")
    return result


def _shortest_connection(v: Vass, src: str, dst: str) -> Optional[list[Transition]]:
    """BFS path from src to dst; edges explored in transition-id order."""
    if src == dst:
        return []
    parent: dict[str, Transition] = {}
    frontier = [src]
    seen = {src}
    while frontier:
        nxt = []
        for s in frontier:
            for t in v.transitions:
                if t.src == s and t.dst not in seen:
                    seen.add(t.dst)
                    parent[t.dst] = t
                    if t.dst == dst:
                        steps = []
                        cur = dst
                        while cur != src:
                            steps.append(parent[cur])
                            cur = parent[cur].src
                        return list(reversed(steps))
                    nxt.append(t.dst)
        frontier = nxt
    return None


def covering_cycle(v: Vass) -> Path:
    """A cycle through every transition of a connected VASS at least once.

    Greedy: from the lexicographically least state, repeatedly walk a
    shortest connecting path to the source of the not-yet-used transition
    nearest by BFS distance (ties by id), take it, and finally close back
    to the start."""
    if not v.transitions:
        anchor = v.states[0] if v.states else None
        return Path((), anchor)
    start = v.states[0]
    unused = {t.tid: t for t in v.transitions}
    steps: list[Transition] = []
    current = start
    while unused:
        best = None
        for t in sorted(unused.values(), key=lambda t: t.tid):
            hop = _shortest_connection(v, current, t.src)
            if hop is None:
                continue
            key = (len(hop), t.tid)
            if best is None or key < best[0]:
                best = (key, hop, t)
        if best is None:
            raise VassError("VASS is not connected; no covering cycle exists")
        _, hop, t = best
        steps.extend(hop)
        steps.append(t)
        for h in hop:
            unused.pop(h.tid, None)
        unused.pop(t.tid, None)
        current = t.dst
    back = _shortest_connection(v, current, start)
    if back is None:
        raise VassError("VASS is not connected; no covering cycle exists")
    steps.extend(back)
    return Path(tuple(steps), anchor=start)


def node_cycles(tree: LayerTree, layer: int,
                archive: Sequence[LayerRecord], v: Vass) -> dict[int, Path]:
    """The fixed cycle of every node occupying the given layer.

    Layer 0 is the root and gets a covering cycle.  Deeper nodes get the
    Eulerian cycle of the archived multi-cycle solution of the iteration
    that materialized them, restricted to the node's transitions; nodes
    spanning several layers (skipped layers) reuse the same cycle."""
    if layer == 0:
        return {tree.root.nid: covering_cycle(v)}
    records = {rec.layer: rec for rec in archive}
    result: dict[int, Path] = {}
    for node in tree.nodes_at(layer):
        rec = records[node.first_layer]
        counts = {t.tid: rec.mu.counts.get(t.tid, 0) for t in node.vass.transitions}
        if all(c == 0 for c in counts.values()):
            result[node.nid] = Path((), anchor=node.vass.states[0])
            continue
        mc = multicycle_from_solution(v, node.vass.transitions, counts)
        if len(mc.cycles) != 1:
            raise WitnessError(f"node {node.nid} support is not a single component")
        result[node.nid] = mc.cycles[0]
    return result


def _decompose(cycle: Path, children: list[tuple[int, str]]) -> tuple[list[list[Transition]], list[int]]:
    """Split a node's cycle at the first occurrence of each child's start
    state; children are ordered by that occurrence."""
    states = cycle.state_sequence()
    positioned = []
    for nid, child_start in children:
        try:
            pos = states.index(child_start)
        except ValueError:
            raise WitnessError(f"child start state {child_start} not on parent cycle")
        positioned.append((pos, nid))
    positioned.sort()
    segments = []
    order = [nid for _, nid in positioned]
    boundaries = [pos for pos, _ in positioned]
    prev = 0
    for b in boundaries:
        segments.append(list(cycle.steps[prev:b]))
        prev = b
    segments.append(list(cycle.steps[prev:]))
    return segments, order


class _Builder:
    """Shared state for the recursive per-layer path constructions."""

    def __init__(self, result: AnalysisResult, n: int):
        self.v = result.vass
        self.tree = result.tree
        self.archive = result.archive
        self.n = n
        self.max_layer = result.tree.max_layer()
        self._seg_cache: dict[int, tuple] = {}
        self.cycles: dict[int, Path] = {}
        for layer in range(self.max_layer + 1):
            self.cycles.update(node_cycles(self.tree, layer, self.archive, self.v))

    def _children_at(self, nid: int, layer: int) -> list[int]:
        node = self.tree.node(nid)
        if layer < node.last_layer:
            return [nid]
        return list(node.children)

    def sigma(self, nid: int, layer: int, target: int) -> list[Transition]:
        """Pre-path: the node's cycle at the target layer, otherwise the
        children's pre-paths, each repeated N times, concatenated."""
        if layer == target:
            return list(self.cycles[nid].steps)
        out: list[Transition] = []
        children = self._children_at(nid, layer)
        if len(children) == 1 and children[0] == nid:
            return self.sigma(nid, layer + 1, target) * self.n
        order = self._ordered_children(nid)
        for child in order:
            out.extend(self.sigma(child, layer + 1, target) * self.n)
        return out

    def alpha(self, nid: int, layer: int, target: int) -> list[Transition]:
        """Proper path: the node's cycle with each child's path (repeated N
        times) spliced in at the child's start state."""
        if layer == target:
            return list(self.cycles[nid].steps)
        children = self._children_at(nid, layer)
        if len(children) == 1 and children[0] == nid:
            return self.alpha(nid, layer + 1, target) * self.n + list(self.cycles[nid].steps)
        segments, order = self._segments(nid)
        out = list(segments[0])
        for child, segment in zip(order, segments[1:]):
            out.extend(self.alpha(child, layer + 1, target) * self.n)
            out.extend(segment)
        return out

    def _ordered_children(self, nid: int) -> list[int]:
        return self._segments(nid)[1]

    def _segments(self, nid: int):
        if nid not in self._seg_cache:
            node = self.tree.node(nid)
            children = [(c, self.cycles[c].start) for c in node.children]
            self._seg_cache[nid] = _decompose(self.cycles[nid], children)
        return self._seg_cache[nid]

    def tau(self, layer: int) -> PrePath:
        """The layer-l pre-path: the root's pre-path repeated N times (the
        root's covering cycle repeated N times for layer 0)."""
        if layer == 0:
            return PrePath(tuple(list(self.cycles[self.tree.root.nid].steps) * self.n),
                           anchor=self.cycles[self.tree.root.nid].start)
        return PrePath(tuple(self.sigma(self.tree.root.nid, 0, layer) * self.n),
                       anchor=self.cycles[self.tree.root.nid].start)

    def beta(self, layer: int) -> list[Transition]:
        return self.alpha(self.tree.root.nid, 0, layer) * self.n


def choose_k(taus: Mapping[int, PrePath], vexp: Mapping[str, Optional[int]],
             v: Vass, n: int) -> int:
    """Smallest k such that each layer pre-path (layers >= 1) executes from
    the valuation with entries k * N^min(vexp(x), layer); at least 1."""
    k = 1
    for layer, tau in taus.items():
        if layer < 1:
            continue
        needed = min_initial_valuation(v, tau)
        for x in v.variables:
            e = vexp[x]
            power = n ** min(e, layer)
            k = max(k, _ceil_div(needed[x], power))
    return k


def build_witness(result: AnalysisResult, n: int) -> WitnessPath:
    """Construct the lower-bound path for scale parameter n.

    The recorded initial valuation is the pointwise-minimal valuation from
    which the path executes, raised where necessary so the final valuation
    meets every N^vexp threshold (the raise never exceeds the O(N) initial
    envelope the construction guarantees)."""
    if result.report.status != POLYNOMIAL:
        raise WitnessError("witness paths exist only for polynomial status")
    if n < 1:
        raise WitnessError("scale parameter must be >= 1")
    v = result.vass
    if not v.transitions:
        empty = Path((), anchor=v.states[0] if v.states else None)
        zero = Valuation.zero(v.variables)
        return WitnessPath(n, 1, empty, zero, zero, {}, 0)

    builder = _Builder(result, n)
    taus = {layer: builder.tau(layer) for layer in range(builder.max_layer + 1)}
    k = choose_k(taus, result.report.variable_exponents, v, n)

    steps: list[Transition] = []
    for layer in range(builder.max_layer + 1):
        steps.extend(builder.beta(layer) * k)
    path = Path(tuple(steps), anchor=builder.cycles[result.tree.root.nid].start)

    base = min_initial_valuation(v, path)
    total = path.value(v.dimension)
    initial = {}
    for i, x in enumerate(v.variables):
        threshold = n ** result.report.variable_exponents[x]
        initial[x] = max(base[x], threshold - total[i])
    initial_val = Valuation(initial)
    final = execute_path(v, initial_val, path)
    if final is None:
        raise WitnessError("constructed path does not execute from its initial valuation")
    envelope = _ceil_div(initial_val.norm(), n)
    return WitnessPath(n, k, path, initial_val, final,
                       dict(path.instances()), envelope)


def verify_witness(v: Vass, witness: WitnessPath,
                   report) -> WitnessVerification:
    """Independent checks of a witness path against the claimed bounds."""
    checks = []
    n = witness.n
    norm = witness.initial.norm()
    checks.append(WitnessCheck(
        "initial-envelope", norm <= witness.envelope * n,
        f"|initial| = {norm}, envelope {witness.envelope} * N = {witness.envelope * n}"))

    final = execute_path(v, witness.initial, witness.path)
    checks.append(WitnessCheck(
        "executes", final is not None and final == witness.final,
        "path executes and reaches the recorded final valuation" if final is not None
        else "path is not executable from the recorded initial valuation"))

    counts = witness.path.instances()
    for tid, e in report.transition_exponents.items():
        required = n ** e
        have = counts.get(tid, 0)
        checks.append(WitnessCheck(
            f"instances[{tid}]", have >= required,
            f"{have} >= N^{e} = {required}"))

    if final is not None:
        for x, e in report.variable_exponents.items():
            required = n ** e
            checks.append(WitnessCheck(
                f"final[{x}]", final[x] >= required,
                f"{final[x]} >= N^{e} = {required}"))
    return WitnessVerification(tuple(checks))


def exponential_certificate(result: AnalysisResult) -> ExponentialCertificate:
    """Extract and check the cycle certificate after an exponential verdict."""
    if result.report.status != EXPONENTIAL:
        raise CertificateError("certificate exists only for exponential status")
    layer = result.report.exponential_layer
    cycles = tuple(cycle for _, cycle in sorted(
        node_cycles(result.tree, layer, result.archive, result.vass).items()))
    vexp = result.report.variable_exponents
    bounded = tuple(x for x in result.vass.variables if vexp[x] is not None)
    growing = tuple(x for x in result.vass.variables if vexp[x] is None)
    cert = ExponentialCertificate(cycles, bounded, growing)
    problem = check_certificate(result.vass, cert)
    if problem is not None:
        raise CertificateError(problem)
    return cert


def check_certificate(v: Vass, cert: ExponentialCertificate) -> Optional[str]:
    """None if the certificate is valid, else a description of the violation."""
    if sorted(cert.bounded + cert.growing) != sorted(v.variables):
        return "bounded/growing sets do not partition the variables"
    if set(cert.bounded) & set(cert.growing):
        return "bounded and growing sets overlap"
    dim = v.dimension
    index = {x: i for i, x in enumerate(v.variables)}
    totals = [0] * dim
    for c in cert.cycles:
        if not c.is_cycle:
            return "certificate member is not a cycle"
        value = c.value(dim)
        for x in cert.bounded:
            if value[index[x]] < 0:
                return f"cycle decreases bounded variable {x}"
        for i in range(dim):
            totals[i] += value[i]
    for x in cert.growing:
        if totals[index[x]] < 1:
            return f"summed cycle values do not grow variable {x}"
    return None

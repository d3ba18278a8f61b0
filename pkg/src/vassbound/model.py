"""Core data model for vector addition systems with states (VASS).

A VASS is a finite directed graph whose transitions carry integer update
vectors over a fixed list of counter variables.  Executions move along
transitions, adding the update to the current valuation; a step is only
allowed if every counter stays non-negative.

This module provides the immutable model types, the line-based text format,
update/flow matrices, strongly-connected-component decomposition, and
path execution semantics.  All types are immutable after construction and
every operation here is a pure function.
"""

from __future__ import annotations

import re
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence


class VassError(Exception):
    """Base class for errors raised by this package."""


class VassSyntaxError(VassError):
    """Malformed VASS file; carries 1-based line and column of the offence."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NotConnectedError(VassError):
    """Raised by operations that require a connected VASS."""

    def __init__(self, source: str, target: str):
        super().__init__(f"no path from state '{source}' to state '{target}'")
        self.pair = (source, target)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT = re.compile(r"-?\d+\Z")


@dataclass(frozen=True)
class Transition:
    """One transition: source state, integer update vector, target state.

    Transitions carry a stable integer id (file order) so that analysis
    output can reference them deterministically.
    """

    tid: int
    src: str
    update: tuple[int, ...]
    dst: str

    def triple(self) -> tuple[str, tuple[int, ...], str]:
        return (self.src, self.update, self.dst)

    def __str__(self) -> str:
        upd = " ".join(str(c) for c in self.update)
        return f"{self.src} -> {self.dst} : {upd}"


@dataclass(frozen=True)
class Vass:
    """A vector addition system with states.

    `variables` is the declared variable order (it fixes vector indexing),
    `states` is kept sorted, and `transitions` is kept in id order.
    """

    variables: tuple[str, ...]
    states: tuple[str, ...]
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise VassError("duplicate variable names")
        if len(set(self.states)) != len(self.states):
            raise VassError("duplicate state names")
        if tuple(sorted(self.states)) != self.states:
            raise VassError("states must be sorted")
        state_set = set(self.states)
        seen: set[tuple] = set()
        seen_ids: set[int] = set()
        for t in self.transitions:
            if t.src not in state_set or t.dst not in state_set:
                raise VassError(f"transition {t} mentions an undeclared state")
            if len(t.update) != len(self.variables):
                raise VassError(f"transition {t} has update arity {len(t.update)}, "
                                f"expected {len(self.variables)}")
            if t.triple() in seen:
                raise VassError(f"duplicate transition {t}")
            if t.tid in seen_ids:
                raise VassError(f"duplicate transition id {t.tid}")
            seen.add(t.triple())
            seen_ids.add(t.tid)

    @staticmethod
    def from_triples(variables: Sequence[str],
                     triples: Iterable[tuple[str, Sequence[int], str]],
                     extra_states: Iterable[str] = ()) -> "Vass":
        """Build a VASS from (src, update, dst) triples, assigning ids in order."""
        transitions = tuple(
            Transition(i, src, tuple(int(c) for c in update), dst)
            for i, (src, update, dst) in enumerate(triples)
        )
        states = set(extra_states)
        for t in transitions:
            states.add(t.src)
            states.add(t.dst)
        return Vass(tuple(variables), tuple(sorted(states)), transitions)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def transition(self, tid: int) -> Transition:
        for t in self.transitions:
            if t.tid == tid:
                return t
        raise KeyError(tid)

    def restrict(self, states: Iterable[str], transitions: Iterable[Transition]) -> "Vass":
        """Sub-VASS on the given states/transitions; ids and variables are kept."""
        return Vass(self.variables, tuple(sorted(set(states))),
                    tuple(sorted(transitions, key=lambda t: t.tid)))


class Valuation(Mapping[str, int]):
    """An assignment of non-negative integers to variable names."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, int]):
        for name, value in entries.items():
            if value < 0:
                raise VassError(f"negative valuation entry {name} = {value}")
        object.__setattr__(self, "_entries", dict(entries))

    def __getitem__(self, key: str) -> int:
        return self._entries[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if isinstance(other, Mapping):
            return dict(self._entries) == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self._entries.items()))
        return f"Valuation({inner})"

    def norm(self) -> int:
        """Maximum entry (the max-norm); 0 for the empty valuation."""
        return max(self._entries.values(), default=0)

    def as_vector(self, variables: Sequence[str]) -> tuple[int, ...]:
        return tuple(self._entries.get(x, 0) for x in variables)

    @staticmethod
    def zero(variables: Sequence[str]) -> "Valuation":
        return Valuation({x: 0 for x in variables})

    @staticmethod
    def from_vector(variables: Sequence[str], vector: Sequence[int]) -> "Valuation":
        return Valuation(dict(zip(variables, vector)))


@dataclass(frozen=True)
class PrePath:
    """A finite transition sequence without the state-adjacency requirement.

    `anchor` names the start state of an empty sequence, so degenerate
    cycles still know where they live.
    """

    steps: tuple[Transition, ...]
    anchor: Optional[str] = None

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def start(self) -> Optional[str]:
        if self.steps:
            return self.steps[0].src
        return self.anchor

    @property
    def end(self) -> Optional[str]:
        if self.steps:
            return self.steps[-1].dst
        return self.anchor

    def value(self, dimension: int) -> tuple[int, ...]:
        """Component-wise sum of all updates."""
        total = [0] * dimension
        for t in self.steps:
            for i, c in enumerate(t.update):
                total[i] += c
        return tuple(total)

    def instances(self) -> Counter:
        """Number of occurrences of each transition id."""
        return Counter(t.tid for t in self.steps)

    def state_sequence(self) -> list[str]:
        """The visited state sequence (length len(self) + 1 when adjacent)."""
        if not self.steps:
            return [self.anchor] if self.anchor is not None else []
        seq = [self.steps[0].src]
        for t in self.steps:
            seq.append(t.dst)
        return seq


@dataclass(frozen=True)
class Path(PrePath):
    """A PrePath whose consecutive steps are state-adjacent."""

    def __post_init__(self):
        for a, b in zip(self.steps, self.steps[1:]):
            if a.dst != b.src:
                raise VassError(f"non-adjacent steps: {a} then {b}")

    @property
    def is_cycle(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class IntegerMatrix:
    """A dense integer matrix with named row and column labels."""

    row_labels: tuple
    col_labels: tuple
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(set(self.row_labels)) != len(self.row_labels):
            raise VassError("duplicate row labels")
        if len(set(self.col_labels)) != len(self.col_labels):
            raise VassError("duplicate column labels")
        if len(self.rows) != len(self.row_labels):
            raise VassError("row count does not match row labels")
        for row in self.rows:
            if len(row) != len(self.col_labels):
                raise VassError("ragged matrix row")

    def entry(self, row_label, col_label) -> int:
        return self.rows[self.row_labels.index(row_label)][self.col_labels.index(col_label)]

    def row(self, row_label) -> tuple[int, ...]:
        return self.rows[self.row_labels.index(row_label)]

    def column(self, col_label) -> tuple[int, ...]:
        j = self.col_labels.index(col_label)
        return tuple(row[j] for row in self.rows)


def parse_vass(text: str) -> Vass:
    """Parse the VASS text format.

    Format (UTF-8, line based): `#` starts a comment, blank lines are
    ignored, the first significant line is `vars <name>+`, and every
    further significant line is `<src> -> <dst> : <int>{n}` with n integers
    in declared variable order.  States are implicit.
    """
    variables: Optional[tuple[str, ...]] = None
    triples: list[tuple[str, tuple[int, ...], str]] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = line.split()

        def col_of(token_index: int) -> int:
            pos = 0
            for tok in tokens[:token_index]:
                pos = line.index(tok, pos) + len(tok)
            return line.index(tokens[token_index], pos) + 1

        if variables is None:
            if tokens[0] != "vars":
                raise VassSyntaxError("expected 'vars' declaration", lineno, col_of(0))
            if len(tokens) < 2:
                raise VassSyntaxError("at least one variable required", lineno, len(line) + 1)
            names = tokens[1:]
            for i, name in enumerate(names):
                if not _IDENT.match(name):
                    raise VassSyntaxError(f"bad variable name '{name}'", lineno, col_of(1 + i))
                if name in names[:i]:
                    raise VassSyntaxError(f"duplicate variable '{name}'", lineno, col_of(1 + i))
            variables = tuple(names)
            continue

        if len(tokens) < 4:
            raise VassSyntaxError("expected '<src> -> <dst> : <updates>'", lineno)
        src, arrow, dst, colon = tokens[0], tokens[1], tokens[2], tokens[3]
        if not _IDENT.match(src):
            raise VassSyntaxError(f"bad state name '{src}'", lineno, col_of(0))
        if arrow != "->":
            raise VassSyntaxError(f"unknown relation token '{arrow}'", lineno, col_of(1))
        if not _IDENT.match(dst):
            raise VassSyntaxError(f"bad state name '{dst}'", lineno, col_of(2))
        if colon != ":":
            raise VassSyntaxError(f"expected ':' before updates, got '{colon}'", lineno, col_of(3))
        numbers = tokens[4:]
        if len(numbers) != len(variables):
            raise VassSyntaxError(
                f"expected {len(variables)} updates, got {len(numbers)}", lineno)
        update = []
        for i, num in enumerate(numbers):
            if not _INT.match(num):
                raise VassSyntaxError(f"bad integer '{num}'", lineno, col_of(4 + i))
            update.append(int(num))
        triple = (src, tuple(update), dst)
        if triple in triples:
            raise VassSyntaxError(f"duplicate transition '{src} -> {dst}'", lineno)
        triples.append(triple)
        lines.append(lineno)

    if variables is None:
        raise VassSyntaxError("missing 'vars' declaration", 1)
    return Vass.from_triples(variables, triples)


def serialize_vass(v: Vass) -> str:
    """Canonical text form: vars line, then transitions sorted by (src, dst, update)."""
    out = ["vars " + " ".join(v.variables)]
    for t in sorted(v.transitions, key=lambda t: (t.src, t.dst, t.update)):
        out.append(str(t))
    return "\n".join(out) + "\n"


def _successors(v: Vass) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = {s: [] for s in v.states}
    for t in v.transitions:
        succ[t.src].append(t.dst)
    return succ


def _reachable(succ: Mapping[str, list[str]], start: str) -> set[str]:
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for s2 in succ[s]:
            if s2 not in seen:
                seen.add(s2)
                queue.append(s2)
    return seen


def unconnected_pair(v: Vass) -> Optional[tuple[str, str]]:
    """Some ordered state pair (s, s') with no path s -> s', or None."""
    succ = _successors(v)
    for s in v.states:
        reach = _reachable(succ, s)
        for s2 in v.states:
            if s2 not in reach:
                return (s, s2)
    return None


def validate_connected(v: Vass) -> bool:
    """True iff every ordered state pair is joined by a path (vacuous for <= 1 state)."""
    return unconnected_pair(v) is None


def update_matrix(v: Vass) -> IntegerMatrix:
    """Matrix with one row per variable and one column per transition id."""
    cols = tuple(t.tid for t in v.transitions)
    rows = tuple(
        tuple(t.update[i] for t in v.transitions) for i in range(v.dimension)
    )
    return IntegerMatrix(tuple(v.variables), cols, rows)


def flow_matrix(v: Vass) -> IntegerMatrix:
    """Incidence matrix: -1 at the source, +1 at the target, all zero for self-loops."""
    cols = tuple(t.tid for t in v.transitions)
    rows = []
    for s in v.states:
        row = []
        for t in v.transitions:
            if t.src == t.dst:
                row.append(0)
            elif t.src == s:
                row.append(-1)
            elif t.dst == s:
                row.append(1)
            else:
                row.append(0)
        rows.append(tuple(row))
    return IntegerMatrix(tuple(v.states), cols, tuple(rows))


def scc_decompose(states: Iterable[str], transitions: Iterable[Transition]) -> list[tuple[tuple[str, ...], tuple[Transition, ...]]]:
    """Maximal strongly connected sub-VASSs with at least one transition.

    Returns (sorted states, transitions in id order) pairs, ordered by the
    smallest contained state name.  Iterative Tarjan; deterministic.
    """
    state_list = sorted(set(states))
    trans = sorted(transitions, key=lambda t: t.tid)
    succ: dict[str, list[str]] = {s: [] for s in state_list}
    for t in trans:
        if t.src in succ and t.dst in succ:
            succ[t.src].append(t.dst)

    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    components: list[set[str]] = []

    for root in state_list:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_i = work[-1]
            if child_i == 0:
                index[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            children = succ[node]
            while child_i < len(children):
                child = children[child_i]
                child_i += 1
                if child not in index:
                    work[-1] = (node, child_i)
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index[child])
            if advanced:
                continue
            work.pop()
            if lowlink[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                components.append(comp)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])

    result = []
    for comp in components:
        internal = tuple(t for t in trans if t.src in comp and t.dst in comp)
        if internal:
            result.append((tuple(sorted(comp)), internal))
    result.sort(key=lambda pair: pair[0][0])
    return result


def _run_vectors(v: Vass, start: Sequence[int], p: PrePath) -> Optional[tuple[int, ...]]:
    current = list(start)
    for t in p.steps:
        for i, c in enumerate(t.update):
            current[i] += c
            if current[i] < 0:
                return None
    return tuple(current)


def execute_path(v: Vass, start: Valuation, p: PrePath) -> Optional[Valuation]:
    """Final valuation of running p from start, or None if a counter would go negative."""
    final = _run_vectors(v, start.as_vector(v.variables), p)
    if final is None:
        return None
    return Valuation.from_vector(v.variables, final)


def min_initial_valuation(v: Vass, p: PrePath) -> Valuation:
    """The pointwise-minimal valuation from which p executes."""
    running = [0] * v.dimension
    lowest = [0] * v.dimension
    for t in p.steps:
        for i, c in enumerate(t.update):
            running[i] += c
            if running[i] < lowest[i]:
                lowest[i] = running[i]
    return Valuation.from_vector(v.variables, tuple(-m for m in lowest))

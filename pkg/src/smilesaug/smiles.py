"""SMILES text <-> molecular graph.

Covers the organic subset plus bracket atoms, branches, ring closures
(1-9 and %nn) and the four bond symbols. Stereochemistry markers are
consumed and discarded with a diagnostic; multi-fragment input ('.') is
rejected. The writer emits a deterministic depth-first string for a given
atom ordering, and the canonicalizer picks one ordering per structure via
iterative partition refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import (
    AROMATIC,
    DOUBLE,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    Molecule,
    _check_permutation,
)

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
_AROMATIC_CHARS = "bcnops"
_STEREO_CHARS = "/\\@"


class SmilesParseError(ValueError):
    """Input text is not valid SMILES under this grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class SmilesWriteError(ValueError):
    """A molecule cannot be serialized (e.g. ring-digit exhaustion)."""


@dataclass(frozen=True)
class ParseDiagnostics:
    """Non-fatal observations made while parsing."""

    warnings: tuple[tuple[int, str], ...]
    stripped_stereo: bool


@dataclass(frozen=True)
class CanonicalRanks:
    """Per-atom canonical rank; a permutation of range(atom count)."""

    rank: tuple[int, ...]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _resolve_order(sym: str | None, a: Atom, b: Atom, pos: int) -> str:
    if sym is None:
        return AROMATIC if (a.aromatic and b.aromatic) else SINGLE
    if sym == "-":
        return SINGLE
    if sym == "=":
        return DOUBLE
    if sym == "#":
        return TRIPLE
    if sym == ":":
        if not (a.aromatic and b.aromatic):
            raise SmilesParseError("aromatic bond ':' joins non-aromatic atoms", pos)
        return AROMATIC
    raise SmilesParseError(f"unknown bond symbol {sym!r}", pos)


def _parse_bracket(content: str, open_pos: int, warnings: list[tuple[int, str]]) -> Atom:
    # open_pos points at '[' in the (offset-adjusted) input.
    if not content:
        raise SmilesParseError("empty brackets", open_pos)
    i = 0
    m = len(content)

    isotope = None
    j = i
    while j < m and content[j].isdigit():
        j += 1
    if j > i:
        isotope = int(content[i:j])
        if isotope == 0:
            raise SmilesParseError("isotope mass number must be positive", open_pos + 1 + i)
        i = j

    aromatic = False
    if i < m and content[i] in _AROMATIC_CHARS:
        symbol = content[i].upper()
        aromatic = True
        i += 1
    elif i < m and content[i].isupper():
        symbol = content[i]
        i += 1
        if i < m and content[i].islower():
            symbol += content[i]
            i += 1
    else:
        raise SmilesParseError("missing element symbol in brackets", open_pos + 1 + i)

    while i < m and content[i] == "@":
        start = i
        marker = "@@" if (i + 1 < m and content[i + 1] == "@") else "@"
        i += len(marker)
        warnings.append(
            (open_pos + 1 + start, f"stereochemistry marker {marker!r} discarded")
        )

    explicit_h = 0
    if i < m and content[i] == "H":
        i += 1
        j = i
        while j < m and content[j].isdigit():
            j += 1
        explicit_h = int(content[i:j]) if j > i else 1
        i = j

    charge = 0
    if i < m and content[i] in "+-":
        sign_char = content[i]
        sign = 1 if sign_char == "+" else -1
        i += 1
        j = i
        while j < m and content[j].isdigit():
            j += 1
        if j > i:
            charge = sign * int(content[i:j])
            i = j
        else:
            count = 1
            while i < m and content[i] == sign_char:
                count += 1
                i += 1
            charge = sign * count

    if i != m:
        raise SmilesParseError(
            f"unexpected character {content[i]!r} in bracket atom", open_pos + 1 + i
        )
    return Atom(
        element=symbol,
        aromatic=aromatic,
        formal_charge=charge,
        explicit_h=explicit_h,
        isotope=isotope,
        bracket=True,
    )


def parse(text: str) -> tuple[Molecule, ParseDiagnostics]:
    """Parse SMILES text into a molecule plus diagnostics.

    Raises SmilesParseError (with a character position) on malformed input.
    """
    offset = len(text) - len(text.lstrip(" "))
    s = text.strip(" ")
    if not s:
        raise SmilesParseError("empty SMILES string", 0)

    warnings: list[tuple[int, str]] = []
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    bonded: set[tuple[int, int]] = set()
    prev: int | None = None
    # (atom to resume from, atom count at '(') per open branch
    branch_stack: list[tuple[int, int]] = []
    pending: str | None = None
    pending_pos = 0
    # ring number -> (open atom, explicit bond symbol or None, position)
    open_rings: dict[int, tuple[int, str | None, int]] = {}

    def perr(message: str, pos: int):
        raise SmilesParseError(message, pos + offset)

    def add_bond(a: int, b: int, sym: str | None, pos: int):
        if a == b:
            perr("ring closure bonds an atom to itself", pos)
        pair = (a, b) if a < b else (b, a)
        if pair in bonded:
            perr(f"duplicate bond between atoms {pair[0]} and {pair[1]}", pos)
        try:
            order = _resolve_order(sym, atoms[a], atoms[b], pos + offset)
        except SmilesParseError:
            raise
        bonded.add(pair)
        bonds.append(Bond(a, b, order))

    def add_atom(atom: Atom, pos: int):
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending, pos)
        prev = idx
        pending = None

    def set_pending(sym: str, pos: int):
        nonlocal pending, pending_pos
        if prev is None:
            perr(f"bond symbol {sym!r} before any atom", pos)
        if pending is not None:
            perr("two bond symbols in a row", pos)
        pending = sym
        pending_pos = pos

    def handle_ring(num: int, pos: int):
        nonlocal pending
        if prev is None:
            perr("ring-closure digit before any atom", pos)
        if num in open_rings:
            other, other_sym, _ = open_rings.pop(num)
            if pending is not None and other_sym is not None:
                first = _resolve_order(other_sym, atoms[other], atoms[prev], pos + offset)
                second = _resolve_order(pending, atoms[other], atoms[prev], pos + offset)
                if first != second:
                    perr(f"conflicting ring-closure bond symbols for ring {num}", pos)
            sym = pending if pending is not None else other_sym
            add_bond(other, prev, sym, pos)
        else:
            open_rings[num] = (prev, pending, pos)
        pending = None

    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "[":
            j = s.find("]", i)
            if j == -1:
                perr("unclosed bracket", i)
            atom = _parse_bracket(s[i + 1 : j], i + offset, warnings)
            add_atom(atom, i)
            i = j + 1
        elif ch in "-=#:":
            set_pending(ch, i)
            i += 1
        elif ch in "/\\":
            warnings.append((i + offset, f"stereo bond marker {ch!r} discarded"))
            set_pending("-", i)
            i += 1
        elif ch == "@":
            marker = "@@" if s[i : i + 2] == "@@" else "@"
            warnings.append((i + offset, f"stereochemistry marker {marker!r} discarded"))
            i += len(marker)
        elif ch == "%":
            if not (i + 2 < n and s[i + 1].isdigit() and s[i + 2].isdigit()):
                perr("'%' must be followed by two digits", i)
            handle_ring(int(s[i + 1 : i + 3]), i)
            i += 3
        elif ch.isdigit():
            handle_ring(int(ch), i)
            i += 1
        elif ch == "(":
            if prev is None:
                perr("branch before any atom", i)
            if pending is not None:
                perr("bond symbol before '('", pending_pos)
            branch_stack.append((prev, len(atoms)))
            i += 1
        elif ch == ")":
            if pending is not None:
                perr("dangling bond symbol before ')'", pending_pos)
            if not branch_stack:
                perr("unbalanced parentheses: unexpected ')'", i)
            resume, count_at_open = branch_stack.pop()
            if len(atoms) == count_at_open:
                perr("empty branch", i)
            prev = resume
            i += 1
        elif ch == ".":
            perr("multi-fragment SMILES ('.') are not supported", i)
        else:
            two = s[i : i + 2]
            if two in ("Cl", "Br"):
                add_atom(Atom(two), i)
                i += 2
            elif ch in "BCNOPSFI":
                add_atom(Atom(ch), i)
                i += 1
            elif ch in _AROMATIC_CHARS:
                add_atom(Atom(ch.upper(), aromatic=True), i)
                i += 1
            elif ch.isalpha():
                perr(f"unknown element symbol {ch!r}", i)
            else:
                perr(f"unexpected character {ch!r}", i)

    if pending is not None:
        perr("dangling bond symbol at end of input", pending_pos)
    if branch_stack:
        perr("unbalanced parentheses: missing ')'", n - 1)
    if open_rings:
        num, (_, _, pos) = next(iter(open_rings.items()))
        perr(f"unmatched ring-closure digit {num}", pos)

    mol = Molecule(tuple(atoms), tuple(bonds))
    diag = ParseDiagnostics(
        warnings=tuple(warnings),
        stripped_stereo=any(c in text for c in _STEREO_CHARS),
    )
    return mol, diag


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------


def _needs_bracket(atom: Atom) -> bool:
    return atom.bracket or atom.element not in ORGANIC_SUBSET


def _atom_token(atom: Atom) -> str:
    symbol = atom.element.lower() if atom.aromatic else atom.element
    if not _needs_bracket(atom):
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.explicit_h:
        parts.append("H" if atom.explicit_h == 1 else f"H{atom.explicit_h}")
    charge = atom.formal_charge
    if charge:
        sign = "+" if charge > 0 else "-"
        parts.append(sign if abs(charge) == 1 else f"{sign}{abs(charge)}")
    parts.append("]")
    return "".join(parts)


def _bond_token(order: str, a: Atom, b: Atom) -> str:
    if order == SINGLE:
        # implicit single would re-parse as aromatic between two aromatic atoms
        return "-" if (a.aromatic and b.aromatic) else ""
    if order == DOUBLE:
        return "="
    if order == TRIPLE:
        return "#"
    if order == AROMATIC:
        if a.aromatic and b.aromatic:
            return ""
        return ":"
    raise SmilesWriteError(f"unknown bond order {order!r}")


def _digit_token(digit: int) -> str:
    if digit < 10:
        return str(digit)
    if digit < 100:
        return f"%{digit:02d}"
    raise SmilesWriteError("more than 99 simultaneously open ring closures")


def _classify_edges(mol: Molecule, order: list[int]):
    """Depth-first pass: tree children per atom plus ring bonds.

    Traversal starts at order[0]; unvisited neighbors are taken in ascending
    position-in-order. A bond to an already-visited atom becomes a ring bond
    whose opening endpoint is the earlier-visited atom.
    """
    n = len(mol.atoms)
    pos = [0] * n
    for p, atom_idx in enumerate(order):
        pos[atom_idx] = p
    bond_order = {(b.a, b.b): b.order for b in mol.bonds}

    def nbrs(u: int):
        return iter(sorted(mol.adjacency[u], key=lambda v: pos[v]))

    start = order[0]
    visited = [False] * n
    visited[start] = True
    children: list[list[int]] = [[] for _ in range(n)]
    opens: list[list[int]] = [[] for _ in range(n)]
    closes: list[list[int]] = [[] for _ in range(n)]
    ring_bonds: list[tuple[int, int, str]] = []
    consumed: set[tuple[int, int]] = set()
    stack: list[tuple[int, object]] = [(start, nbrs(start))]
    while stack:
        u, it = stack[-1]
        advanced = False
        for v in it:
            pair = (u, v) if u < v else (v, u)
            if pair in consumed:
                continue
            consumed.add(pair)
            if visited[v]:
                rid = len(ring_bonds)
                ring_bonds.append((v, u, bond_order[pair]))
                opens[v].append(rid)
                closes[u].append(rid)
                continue
            visited[v] = True
            children[u].append(v)
            stack.append((v, nbrs(v)))
            advanced = True
            break
        if not advanced:
            stack.pop()
    return children, opens, closes, ring_bonds, pos


def write(mol: Molecule, order: Sequence[int]) -> str:
    """Emit a SMILES string for the molecule under the given atom ordering."""
    n = len(mol.atoms)
    order = _check_permutation(order, n)
    children, opens, closes, ring_bonds, _ = _classify_edges(mol, order)
    bond_order = {(b.a, b.b): b.order for b in mol.bonds}

    digit_of: dict[int, int] = {}
    open_digits: set[int] = set()

    def alloc_digit() -> int:
        d = 1
        while d in open_digits:
            d += 1
        return d

    tokens: list[str] = []
    # stack items: ("text", s) emits s; ("atom", u, prefix) emits an atom subtree
    stack: list[tuple] = [("atom", order[0], "")]
    while stack:
        item = stack.pop()
        if item[0] == "text":
            tokens.append(item[1])
            continue
        _, u, prefix = item
        tokens.append(prefix)
        tokens.append(_atom_token(mol.atoms[u]))
        for rid in sorted(closes[u], key=lambda r: digit_of[r]):
            digit = digit_of[rid]
            tokens.append(_digit_token(digit))
            open_digits.discard(digit)
        for rid in opens[u]:
            digit = alloc_digit()
            digit_of[rid] = digit
            open_digits.add(digit)
            open_atom, close_atom, r_order = ring_bonds[rid]
            sym = _bond_token(r_order, mol.atoms[open_atom], mol.atoms[close_atom])
            tokens.append(sym + _digit_token(digit))
        kids = children[u]
        if kids:
            entries: list[tuple] = []
            for child in kids[:-1]:
                pair = (u, child) if u < child else (child, u)
                sym = _bond_token(bond_order[pair], mol.atoms[u], mol.atoms[child])
                entries.append(("text", "("))
                entries.append(("atom", child, sym))
                entries.append(("text", ")"))
            last = kids[-1]
            pair = (u, last) if u < last else (last, u)
            sym = _bond_token(bond_order[pair], mol.atoms[u], mol.atoms[last])
            entries.append(("atom", last, sym))
            stack.extend(reversed(entries))
    return "".join(tokens)


# ---------------------------------------------------------------------------
# Canonical ranking
# ---------------------------------------------------------------------------

_ORDER_CODE = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC: 4}


def _dense_ranks(keys: list) -> list[int]:
    index = {key: i for i, key in enumerate(sorted(set(keys)))}
    return [index[key] for key in keys]


def _refine(mol: Molecule, ranks: list[int], edge_code: dict[tuple[int, int], int]) -> list[int]:
    n = len(ranks)
    ranks = _dense_ranks(ranks)
    while True:
        keys = [
            (
                ranks[i],
                tuple(sorted((edge_code[(i, j)], ranks[j]) for j in mol.adjacency[i])),
            )
            for i in range(n)
        ]
        new_ranks = _dense_ranks(keys)
        if new_ranks == ranks:
            return ranks
        ranks = new_ranks


def canonical_ranks(mol: Molecule) -> CanonicalRanks:
    """Rank atoms by iterative partition refinement with tie-breaking.

    The initial partition uses per-atom invariants; refinement keys each atom
    on (rank, sorted (bond kind, neighbor rank) multiset) until stable. While
    classes remain, the lowest-index atom of the first non-singleton class is
    promoted to a fresh rank and refinement reruns.
    """
    n = len(mol.atoms)
    edge_code: dict[tuple[int, int], int] = {}
    for bond in mol.bonds:
        code = _ORDER_CODE[bond.order]
        edge_code[(bond.a, bond.b)] = code
        edge_code[(bond.b, bond.a)] = code

    invariants = [
        (
            atom.element,
            mol.degree(i),
            atom.formal_charge,
            int(atom.aromatic),
            -1 if atom.explicit_h is None else atom.explicit_h,
            -1 if atom.isotope is None else atom.isotope,
        )
        for i, atom in enumerate(mol.atoms)
    ]
    ranks = _refine(mol, _dense_ranks(invariants), edge_code)
    while True:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = sorted(r for r, c in counts.items() if c > 1)
        if not tied:
            break
        first_class = tied[0]
        chosen = min(i for i in range(n) if ranks[i] == first_class)
        ranks = [2 * r for r in ranks]
        ranks[chosen] -= 1
        ranks = _refine(mol, ranks, edge_code)
    return CanonicalRanks(rank=tuple(ranks))


def canonical_string(mol: Molecule) -> str:
    """The canonical SMILES of a molecule (rank order drives the writer)."""
    ranks = canonical_ranks(mol).rank
    order = [0] * len(ranks)
    for atom_idx, rank in enumerate(ranks):
        order[rank] = atom_idx
    return write(mol, order)


def canonicalize(text: str) -> str:
    """Parse SMILES text and emit this library's canonical form."""
    mol, _ = parse(text)
    return canonical_string(mol)

"""Molecular graph with explicit atom indexing.

Atoms are kept in a fixed order so the graph can be permuted; permuting the
order is what makes one molecule yield many SMILES strings. The graph is
purely structural: no valence model, no implicit-hydrogen atoms, no 3D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"

BOND_ORDERS = (SINGLE, DOUBLE, TRIPLE, AROMATIC)

# Elements that SMILES can write as a lowercase (aromatic) symbol.
AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S"})


class MoleculeError(ValueError):
    """A molecule or one of its parts violates a structural invariant."""


class InvalidPermutationError(ValueError):
    """An atom ordering is not a permutation of the molecule's indices."""


@dataclass(frozen=True)
class Atom:
    """One heavy atom: element plus the attributes SMILES can express."""

    element: str
    aromatic: bool = False
    formal_charge: int = 0
    explicit_h: int | None = None
    isotope: int | None = None
    bracket: bool = False

    def __post_init__(self):
        if not self.element or not self.element.isalpha():
            raise MoleculeError(f"invalid element symbol {self.element!r}")
        if self.aromatic and self.element not in AROMATIC_ELEMENTS:
            raise MoleculeError(
                f"element {self.element!r} cannot be aromatic (not lowercase-writable)"
            )
        if self.explicit_h is not None and self.explicit_h < 0:
            raise MoleculeError("explicit hydrogen count must be non-negative")
        if self.isotope is not None and self.isotope <= 0:
            raise MoleculeError("isotope mass number must be positive")
        for reason, forced in (
            ("explicit hydrogen count", self.explicit_h is not None),
            ("formal charge", self.formal_charge != 0),
            ("isotope", self.isotope is not None),
        ):
            if forced and not self.bracket:
                raise MoleculeError(f"atom with {reason} must be a bracket atom")


@dataclass(frozen=True)
class Bond:
    """Undirected edge between atom indices ``a`` and ``b``.

    Endpoints are normalized so that ``a < b``.
    """

    a: int
    b: int
    order: str = SINGLE

    def __post_init__(self):
        if self.a == self.b:
            raise MoleculeError(f"self-loop bond on atom {self.a}")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)
        if self.order not in BOND_ORDERS:
            raise MoleculeError(f"unknown bond order {self.order!r}")

    def other(self, idx: int) -> int:
        if idx == self.a:
            return self.b
        if idx == self.b:
            return self.a
        raise ValueError(f"atom {idx} is not an endpoint of this bond")


@dataclass(frozen=True)
class Molecule:
    """Connected molecular graph: ordered atoms, bonds, derived adjacency."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, compare=True)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        bonds = tuple(self.bonds)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", bonds)
        n = len(atoms)
        if n == 0:
            raise MoleculeError("molecule must contain at least one atom")
        seen_pairs = set()
        neighbors: list[list[int]] = [[] for _ in range(n)]
        for bond in bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise MoleculeError(
                    f"bond ({bond.a},{bond.b}) references an atom index >= {n}"
                )
            pair = (bond.a, bond.b)
            if pair in seen_pairs:
                raise MoleculeError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen_pairs.add(pair)
            if bond.order == AROMATIC:
                if not (atoms[bond.a].aromatic and atoms[bond.b].aromatic):
                    raise MoleculeError(
                        f"aromatic bond ({bond.a},{bond.b}) joins non-aromatic atoms"
                    )
            neighbors[bond.a].append(bond.b)
            neighbors[bond.b].append(bond.a)
        adjacency = tuple(tuple(sorted(nbrs)) for nbrs in neighbors)
        object.__setattr__(self, "adjacency", adjacency)
        self._check_connected()

    def _check_connected(self):
        n = len(self.atoms)
        seen = [False] * n
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
        if count != n:
            raise MoleculeError("molecule graph is not connected")

    def __len__(self) -> int:
        return len(self.atoms)

    def bond_between(self, a: int, b: int) -> Bond | None:
        if a > b:
            a, b = b, a
        for bond in self.bonds:
            if bond.a == a and bond.b == b:
                return bond
        return None

    def degree(self, idx: int) -> int:
        return len(self.adjacency[idx])


def _check_permutation(order: Sequence[int], n: int) -> list[int]:
    order = list(order)
    if len(order) != n or sorted(order) != list(range(n)):
        raise InvalidPermutationError(
            f"order {order!r} is not a permutation of range({n})"
        )
    return order


def permute(mol: Molecule, order: Sequence[int]) -> Molecule:
    """Reorder atoms so that new atom ``i`` is old atom ``order[i]``.

    Bonds keep their list positions with endpoints reindexed, so permuting by
    ``p`` and then by the inverse of ``p`` reproduces the input field by field.
    """
    n = len(mol.atoms)
    order = _check_permutation(order, n)
    inverse = [0] * n
    for new_idx, old_idx in enumerate(order):
        inverse[old_idx] = new_idx
    atoms = tuple(mol.atoms[old_idx] for old_idx in order)
    bonds = tuple(
        Bond(inverse[bond.a], inverse[bond.b], bond.order) for bond in mol.bonds
    )
    return Molecule(atoms, bonds)


def identity_order(mol: Molecule) -> list[int]:
    return list(range(len(mol.atoms)))


def same_structure(a: Molecule, b: Molecule) -> bool:
    """True when both molecules map to the same canonical SMILES."""
    from .smiles import canonical_string

    return canonical_string(a) == canonical_string(b)

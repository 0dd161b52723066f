"""Frequency orbits ``k, R0 k, R0^2 k, ...`` and their exact phase data."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .lattice import LatticeRotation
from .spectrum import Freq, ScrewMotion, TruncationSpec, format_rational, unit_phase


@dataclass(frozen=True)
class FrequencyOrbit:
    """A primitive orbit ``k_{j+1} = R0 k_j`` starting at its lexicographic minimum.

    ``phases[j]`` is ``k_{j+1} . t mod 1`` (indices mod L), so the scalar
    factor on step j is ``exp(2 pi i phases[j])``.
    """

    members: tuple[Freq, ...]
    phases: tuple[Fraction, ...]
    phase_sum: Fraction
    rotation: LatticeRotation

    @property
    def length(self) -> int:
        return len(self.members)

    @property
    def rep(self) -> Freq:
        return self.members[0]

    def alphas(self) -> list[complex]:
        return [unit_phase(th) for th in self.phases]

    def to_json(self) -> dict:
        return {
            "rep": list(self.rep),
            "L": self.length,
            "members": [list(k) for k in self.members],
            "phases": [format_rational(th) for th in self.phases],
            "phase_sum": format_rational(self.phase_sum),
        }


def orbit_of(k, screw: ScrewMotion) -> FrequencyOrbit:
    rot = screw.rotation
    k = tuple(int(c) for c in k)
    cycle = [k]
    nxt = rot.apply(k)
    while nxt != k:
        cycle.append(nxt)
        nxt = rot.apply(nxt)
    start = cycle.index(min(cycle))
    members = tuple(cycle[start:] + cycle[:start])
    L = len(members)
    phases = tuple(screw.phase(members[(j + 1) % L]) for j in range(L))
    return FrequencyOrbit(members, phases, sum(phases, Fraction(0)) % 1, rot)


def enumerate_orbits(spec: TruncationSpec, screw: ScrewMotion) -> list[FrequencyOrbit]:
    """Partition of the frequency box into orbits, sorted by representative."""
    seen = set()
    orbits = []
    for k in spec.frequencies():
        if k in seen:
            continue
        orb = orbit_of(k, screw)
        seen.update(orb.members)
        orbits.append(orb)
    orbits.sort(key=lambda o: o.rep)
    return orbits


def orbit_index(orbits) -> dict[Freq, tuple[int, int]]:
    """Map each frequency to ``(orbit position, member position)``."""
    return {k: (i, j) for i, orb in enumerate(orbits) for j, k in enumerate(orb.members)}

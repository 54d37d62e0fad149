"""Clopen sets of Cantor space and classical Martin-Löf tests given by strings."""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import DimensionError


def clopen_measure(k: int, strings) -> mpq:
    """Uniform measure ``|S| 2**-k`` of the clopen set generated by k-bit strings."""
    strings = set(strings)
    for s in strings:
        if len(s) != k:
            raise DimensionError(f"string {s!r} does not have length {k}")
    return mpq(len(strings), 1 << k)


def extend_strings(strings, length: int) -> frozenset[str]:
    """All strings of ``length`` extending some member of ``strings``."""
    out = set()
    for s in strings:
        if len(s) > length:
            raise DimensionError(f"string {s!r} is longer than {length}")
        pad = length - len(s)
        for m in range(1 << pad):
            out.add(s + format(m, f"0{pad}b") if pad else s)
    return frozenset(out)


def union_at_length(stages, length: int) -> frozenset[str]:
    """Strings of ``length`` generating the union of the given ``(k, strings)`` stages."""
    out: set[str] = set()
    for k, strings in stages:
        if k <= length:
            out |= extend_strings(strings, length)
    return frozenset(out)


def covers(stages, prefix_of) -> bool:
    """Whether a sequence (``prefix_of(n)`` gives its first n bits) lies in the union."""
    return any(prefix_of(k) in strings for k, strings in stages)


@dataclass
class ClassicalLevel:
    """One Sigma_1 set: an increasing union of clopen sets ``(k, strings)``."""

    r: int
    stages: list[tuple[int, frozenset[str]]]
    bound: mpq | None = None

    @property
    def max_length(self) -> int:
        return max((k for k, _ in self.stages), default=0)

    def union(self) -> frozenset[str]:
        return union_at_length(self.stages, self.max_length)

    def measure(self) -> mpq:
        return clopen_measure(self.max_length, self.union())

    def is_increasing(self) -> bool:
        """Each stage's clopen set contains the previous one."""
        for (k0, s0), (k1, s1) in zip(self.stages, self.stages[1:]):
            if k1 < k0 or not extend_strings(s0, k1) <= extend_strings(s1, k1):
                return False
        return True

    def to_json(self) -> dict:
        out = {"r": self.r,
               "stages": [{"k": k, "strings": sorted(s)} for k, s in self.stages],
               "measure": _q(self.measure())}
        if self.bound is not None:
            out["bound"] = _q(self.bound)
        return out


@dataclass
class ClassicalMLTest:
    """Levels ``V_r``; level r should have uniform measure at most ``bound(r)``."""

    levels: list[ClassicalLevel] = field(default_factory=list)

    def level(self, r: int) -> ClassicalLevel:
        return self.levels[r]

    def measures(self) -> list[mpq]:
        return [lv.measure() for lv in self.levels]

    def to_json(self) -> dict:
        return {"levels": [lv.to_json() for lv in self.levels]}

    @classmethod
    def from_json(cls, obj: dict) -> "ClassicalMLTest":
        levels = []
        for i, lv in enumerate(obj["levels"]):
            if "stages" in lv:
                stages = [(int(st["k"]), frozenset(st["strings"])) for st in lv["stages"]]
            else:
                stages = [(int(lv["k"]), frozenset(lv["strings"]))]
            bound = lv.get("bound")
            levels.append(ClassicalLevel(int(lv.get("r", i)), stages,
                                         None if bound is None else mpq(bound)))
        return cls(levels)


def _q(x: mpq) -> str:
    return f"{x.numerator}/{x.denominator}"


def prefix_test(max_levels: int, prefix_bit: str = "0") -> ClassicalMLTest:
    """``V_r = [[b^r]]``, measure ``2**-r``: the test failed by ``bbb...``."""
    return ClassicalMLTest([ClassicalLevel(r, [(r, frozenset({prefix_bit * r}))], mpq(1, 1 << r))
                            for r in range(max_levels)])

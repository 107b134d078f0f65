"""LDPC parity-check matrices by progressive edge growth (PEG).

Degree profiles are given per variable node: a regular column weight, or an
irregular list of ``(degree, fraction)`` pairs. Check degrees come out as
balanced as the placement allows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numba
import numpy as np
import scipy.sparse as sp


class ProfileError(ValueError):
    """Degree profile cannot be realized at the requested size."""


@dataclass(frozen=True)
class DegreeProfile:
    """Variable-node degree distribution (node perspective).

    ``row_weight`` is only set for profiles read as ``column_weight row_weight``
    and is used to check the requested rate.
    """

    degrees: tuple[int, ...]
    fractions: tuple[float, ...]
    row_weight: int | None = None

    @classmethod
    def regular(cls, column_weight: int = 3, row_weight: int | None = None) -> "DegreeProfile":
        return cls((int(column_weight),), (1.0,), row_weight)

    def describe(self) -> str:
        if len(self.degrees) == 1:
            rw = f",{self.row_weight}" if self.row_weight else ""
            return f"regular({self.degrees[0]}{rw})"
        return "irregular(" + ";".join(f"{d}:{f:g}" for d, f in zip(self.degrees, self.fractions)) + ")"

    def node_degrees(self, n: int) -> np.ndarray:
        counts = np.floor(np.asarray(self.fractions) * n).astype(int)
        # hand the rounding remainder to the largest fractions first
        rem = n - counts.sum()
        order = np.argsort(-np.asarray(self.fractions), kind="stable")
        for j in range(rem):
            counts[order[j % len(order)]] += 1
        return np.repeat(np.asarray(self.degrees, dtype=np.int64), counts)


def parse_profile(text: str) -> DegreeProfile:
    """Parse a profile description.

    Accepted forms (``#`` starts a comment):

    * one line ``column_weight row_weight`` (two integers), e.g. ``3 6``;
    * one or more ``degree fraction`` lines, e.g. ``2 0.5`` / ``3 0.5``,
      with fractions summing to 1.
    """
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise ProfileError("empty profile")
    if any(len(r) != 2 for r in rows):
        raise ProfileError("each profile line needs exactly two fields")
    if len(rows) == 1 and all(tok.isdigit() for tok in rows[0]):
        cw, rw = int(rows[0][0]), int(rows[0][1])
        if cw < 1 or rw <= cw:
            raise ProfileError(f"regular profile needs 1 <= column_weight < row_weight, got {cw} {rw}")
        return DegreeProfile.regular(cw, rw)
    degrees = tuple(int(r[0]) for r in rows)
    fractions = tuple(float(r[1]) for r in rows)
    if min(degrees) < 1 or min(fractions) < 0:
        raise ProfileError("degrees must be >= 1 and fractions >= 0")
    if abs(sum(fractions) - 1.0) > 1e-6:
        raise ProfileError(f"fractions sum to {sum(fractions)}, expected 1")
    return DegreeProfile(degrees, tuple(f / sum(fractions) for f in fractions))


def load_profile(path) -> DegreeProfile:
    return parse_profile(Path(path).read_text())


@dataclass(frozen=True)
class LdpcCode:
    """Sparse parity-check matrix plus the edge lists used by the decoder.

    ``rate`` is the syndrome rate ``m / n``, i.e. bits sent per source bit
    when the code is used for syndrome (Slepian-Wolf) compression.
    """

    parity: sp.csr_matrix
    n: int
    m: int
    profile: str
    seed: int
    edge_check: np.ndarray = field(repr=False)
    edge_var: np.ndarray = field(repr=False)

    @property
    def rate(self) -> float:
        return self.m / self.n

    @property
    def n_edges(self) -> int:
        return int(self.edge_check.size)

    def four_cycles(self) -> int:
        """Number of length-4 cycles (pairs of columns sharing two checks)."""
        H = self.parity.astype(np.int64)
        G = (H.T @ H).tocoo()
        off = G.row < G.col
        v = G.data[off]
        return int((v * (v - 1) // 2).sum())


@numba.njit(cache=True)
def _peg(var_deg, m, seed, row_cap):
    n = var_deg.size
    np.random.seed(seed)
    max_vd = 0
    for j in range(n):
        if var_deg[j] > max_vd:
            max_vd = var_deg[j]
    v_adj = np.full((n, max_vd), -1, np.int64)
    v_cnt = np.zeros(n, np.int64)
    c_adj = np.full((m, row_cap), -1, np.int64)
    c_cnt = np.zeros(m, np.int64)

    c_seen = np.zeros(m, np.int64)  # visit stamps
    v_seen = np.zeros(n, np.int64)
    frontier = np.empty(m, np.int64)
    nxt = np.empty(m, np.int64)
    cand = np.empty(m, np.int64)
    stamp = 0

    for j in range(n):
        for k in range(var_deg[j]):
            n_cand = 0
            if k == 0:
                for c in range(m):
                    cand[n_cand] = c
                    n_cand += 1
            else:
                stamp += 1
                reached = 0
                n_front = 0
                v_seen[j] = stamp
                for t in range(v_cnt[j]):
                    c = v_adj[j, t]
                    if c_seen[c] != stamp:
                        c_seen[c] = stamp
                        frontier[n_front] = c
                        n_front += 1
                        reached += 1
                while True:
                    n_next = 0
                    for f in range(n_front):
                        c = frontier[f]
                        for t in range(c_cnt[c]):
                            v = c_adj[c, t]
                            if v_seen[v] == stamp:
                                continue
                            v_seen[v] = stamp
                            for s in range(v_cnt[v]):
                                c2 = v_adj[v, s]
                                if c_seen[c2] != stamp:
                                    c_seen[c2] = stamp
                                    nxt[n_next] = c2
                                    n_next += 1
                    if n_next == 0:
                        # expansion stalled: any unreached check keeps the cycle open
                        for c in range(m):
                            if c_seen[c] != stamp:
                                cand[n_cand] = c
                                n_cand += 1
                        break
                    if reached + n_next >= m:
                        # everything reachable: take the checks at the largest depth
                        for f in range(n_next):
                            cand[n_cand] = nxt[f]
                            n_cand += 1
                        break
                    reached += n_next
                    for f in range(n_next):
                        frontier[f] = nxt[f]
                    n_front = n_next
                if n_cand == 0:
                    for c in range(m):
                        if c_seen[c] != stamp:
                            cand[n_cand] = c
                            n_cand += 1
            # lowest current check degree, uniform random tie-break
            best = -1
            best_deg = 1 << 60
            ties = 0
            for t in range(n_cand):
                c = cand[t]
                already = False
                for s in range(v_cnt[j]):
                    if v_adj[j, s] == c:
                        already = True
                        break
                if already:
                    continue
                d = c_cnt[c]
                if d < best_deg:
                    best_deg = d
                    best = c
                    ties = 1
                elif d == best_deg:
                    ties += 1
                    if np.random.randint(0, ties) == 0:
                        best = c
            if best < 0:
                return v_adj, v_cnt, -1
            if c_cnt[best] >= row_cap:
                return v_adj, v_cnt, -2
            v_adj[j, v_cnt[j]] = best
            v_cnt[j] += 1
            c_adj[best, c_cnt[best]] = j
            c_cnt[best] += 1
    return v_adj, v_cnt, 0


def build_ldpc(n: int, target_rate: float, profile: DegreeProfile | str | None = None, seed: int = 0) -> LdpcCode:
    """Construct an ``m x n`` parity-check matrix with ``m = round(target_rate * n)``.

    Parameters
    ----------
    n : block length, at least 1024.
    target_rate : syndrome rate ``m / n`` in (0, 1).
    profile : :class:`DegreeProfile`, profile text, or None for column weight 3.
    seed : construction seed; the same ``(n, rate, profile, seed)`` always
        gives the same matrix.
    """
    if not 0.0 < target_rate < 1.0:
        raise ProfileError(f"target rate must lie in (0, 1), got {target_rate}")
    if n < 1024:
        raise ProfileError("block length n must be >= 1024")
    if profile is None:
        profile = DegreeProfile.regular(3)
    elif isinstance(profile, str):
        profile = parse_profile(profile)
    m = int(round(target_rate * n))
    if m < 1 or m >= n:
        raise ProfileError(f"rate {target_rate} gives m = {m} at n = {n}")
    if profile.row_weight is not None:
        implied = profile.degrees[0] / profile.row_weight
        if abs(implied - m / n) > 1.0 / n + 1e-12:
            raise ProfileError(
                f"profile {profile.describe()} implies rate {implied:.6g}, requested {target_rate:.6g}"
            )
    var_deg = np.sort(profile.node_degrees(n))
    if var_deg.max() > m:
        raise ProfileError(f"column weight {var_deg.max()} exceeds m = {m}")
    n_edges = int(var_deg.sum())
    row_cap = int(math.ceil(n_edges / m)) + 8
    v_adj, v_cnt, status = _peg(var_deg.astype(np.int64), m, int(seed) % (2**32), row_cap)
    if status != 0:
        raise ProfileError(f"PEG placement failed for profile {profile.describe()} (status {status})")
    cols = np.repeat(np.arange(n), v_cnt)
    rows = np.concatenate([v_adj[j, : v_cnt[j]] for j in range(n)])
    H = sp.csr_matrix((np.ones(rows.size, dtype=np.uint8), (rows, cols)), shape=(m, n))
    H.sort_indices()
    coo = H.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return LdpcCode(
        parity=H,
        n=n,
        m=m,
        profile=profile.describe(),
        seed=int(seed),
        edge_check=coo.row[order].astype(np.int64),
        edge_var=coo.col[order].astype(np.int64),
    )


@lru_cache(maxsize=32)
def cached_ldpc(n: int, target_rate: float, profile_text: str | None = None, seed: int = 0) -> LdpcCode:
    """Memoized :func:`build_ldpc` keyed on hashable arguments."""
    return build_ldpc(n, target_rate, profile_text, seed)

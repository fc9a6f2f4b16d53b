"""Structural analysis of the linear models: Krylov ranks, PBH, minimal
realizations, and the closed-form determinant oracles.

Two arithmetic tiers.  Floating point (SVD thresholds) drives scans and the
Kalman staircase; exact rationals certify every rank or determinant verdict
at sampled rational bindings, since genericity claims are best pinned down
by identities rather than tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact, ssm
from .errors import AtypicalParameters, DimensionMismatch, NumericFailure
from .ssm import StateSpaceModel

RATIONAL = dict[str, Fraction]


# -- Krylov matrices --------------------------------------------------------


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[B, AB, ..., A^{n-1}B] as columns."""
    n = a.shape[0]
    cols = [b]
    for _ in range(n - 1):
        cols.append(a @ cols[-1])
    return np.column_stack(cols)

def observability_matrix(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """[C; CA; ...; CA^{n-1}] as rows."""
    n = a.shape[0]
    rows = [c]
    for _ in range(n - 1):
        rows.append(rows[-1] @ a)
    return np.vstack(rows)


def svd_rank(m: np.ndarray) -> int:
    """Rank with threshold sigma_max * dim * eps * 64.

    The generous multiplier guards against false deficiency from entries
    that are products of up to dim couplings.
    """
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0
    tol = s[0] * max(m.shape) * np.finfo(float).eps * 64
    return int(np.count_nonzero(s > tol))


def controllability_rank(model: StateSpaceModel, binding) -> tuple[np.ndarray, int]:
    a, b, _ = ssm.evaluate(model, {k: float(v) for k, v in binding.items()})
    cm = controllability_matrix(a, b)
    return cm, svd_rank(cm)


def observability_rank(model: StateSpaceModel, binding) -> tuple[np.ndarray, int]:
    a, _, c = ssm.evaluate(model, {k: float(v) for k, v in binding.items()})
    om = observability_matrix(a, c)
    return om, svd_rank(om)


# -- exact tier -------------------------------------------------------------

EXACT_RANK_DIM = 12


def exact_controllability_matrix(model: StateSpaceModel, binding: RATIONAL):
    a, b, _ = ssm.evaluate_exact(model, binding)
    cols = [b]
    for _ in range(model.dim - 1):
        cols.append(exact.matvec(a, cols[-1]))
    return [[cols[j][i] for j in range(model.dim)] for i in range(model.dim)]


def exact_observability_matrix(model: StateSpaceModel, binding: RATIONAL):
    a, _, c = ssm.evaluate_exact(model, binding)
    at = exact.transpose(a)
    rows = [list(c)]
    for _ in range(model.dim - 1):
        rows.append(exact.matvec(at, rows[-1]))
    return rows


def exact_observability_rank(model: StateSpaceModel, binding: RATIONAL) -> int:
    if model.dim > EXACT_RANK_DIM:
        raise DimensionMismatch(
            f"exact rank limited to dim <= {EXACT_RANK_DIM}, got {model.dim}"
        )
    return exact.rank(exact_observability_matrix(model, binding))


def det_cm_exact(model: StateSpaceModel, binding: RATIONAL) -> Fraction:
    """Exact determinant of the controllability matrix."""
    return exact.det(exact_controllability_matrix(model, binding))


def det_cm_closed_form(n_chain: int, binding: RATIONAL) -> Fraction:
    """Closed form for det(CM) of the two-qubit ladder scheme.

    The magnitude is h_a^{N+1} h_b^N prod_{i=1}^{N-1} h_i^{N-i}; the sign is
    (-1)^{(N+1)(N+2)/2}, which is what the last-entry recursion of the
    Krylov columns actually yields (each A^k B picks up one factor of -1).
    """
    ha, hb = binding["ha"], binding["hb"]
    value = Fraction(ha) ** (n_chain + 1) * Fraction(hb) ** n_chain
    for i in range(1, n_chain):
        value *= Fraction(binding[f"h{i}"]) ** (n_chain - i)
    sign = -1 if ((n_chain + 1) * (n_chain + 2) // 2) % 2 else 1
    return sign * value


def det_cm_alternate_sign(n_chain: int) -> int:
    """Sign under the alternate convention that takes the parity product
    over k >= 3 only.  Differs from the full-range sign by a global -1."""
    s = 1
    for k in range(3, n_chain + 2):
        s *= (-1) ** k
    return s


# -- PBH test ---------------------------------------------------------------


@dataclass(frozen=True)
class PBHResult:
    lam: complex
    rank: int
    dim: int

    @property
    def deficient(self) -> bool:
        return self.rank < self.dim


def pbh_test(model: StateSpaceModel, binding, lam: complex) -> PBHResult:
    """Column rank of [A - lam I; C] stacked."""
    a, _, c = ssm.evaluate(model, {k: float(v) for k, v in binding.items()})
    stacked = np.vstack([a - lam * np.eye(model.dim), c[None, :]])
    return PBHResult(lam, svd_rank(stacked), model.dim)


def pbh_test_exact(model: StateSpaceModel, binding: RATIONAL, lam: Fraction) -> PBHResult:
    if model.dim > EXACT_RANK_DIM:
        raise DimensionMismatch("exact PBH limited to small models")
    a, _, c = ssm.evaluate_exact(model, binding)
    rows = [[a[i][j] - (lam if i == j else 0) for j in range(model.dim)]
            for i in range(model.dim)]
    rows.append(list(c))
    return PBHResult(complex(lam), exact.rank(rows), model.dim)


# -- even-N observability structure -----------------------------------------


@dataclass
class EvenStructure:
    """Permutation form of the ladder A for even chain length.

    Reordering the basis as (even positions, then odd positions) maps A to
    [[0, T], [-T^t, 0]] with T upper bidiagonal, and C to e_1^t.  Stacking
    the rows e_1^t (-T T^t)^k gives a lower-triangular matrix whose diagonal
    certifies full observability whenever no coupling vanishes.
    """

    permutation: tuple[int, ...]
    t_block: list[list[Fraction]]
    q_stack: list[list[Fraction]]
    q_diagonal: tuple[Fraction, ...]


def even_structure(model: StateSpaceModel, binding: RATIONAL) -> EvenStructure:
    n_chain = model.config.n_chain
    if n_chain % 2 or model.config.capability != "ladder":
        raise DimensionMismatch("even structure applies to the ladder at even N")
    dim = model.dim
    a, _, c = ssm.evaluate_exact(model, binding)
    evens = [i for i in range(dim) if i % 2 == 1]  # 0-based odd index = even position
    odds = [i for i in range(dim) if i % 2 == 0]
    perm = tuple(evens + odds)
    half = dim // 2
    bar = [[a[perm[i]][perm[j]] for j in range(dim)] for i in range(dim)]
    for i in range(half):
        for j in range(half):
            if bar[i][j] != 0 or bar[half + i][half + j] != 0:
                raise NumericFailure("diagonal blocks of the permuted A are not zero")
    t_block = [[bar[i][half + j] for j in range(half)] for i in range(half)]
    for i in range(half):
        for j in range(half):
            if bar[half + i][j] != -t_block[j][i]:
                raise NumericFailure("permuted A is not [[0, T], [-T^t, 0]]")
    # C maps to e_1 under the permutation (measurement sits at position 2)
    c_bar = [c[perm[j]] for j in range(dim)]
    if c_bar[0] != 1 or any(v != 0 for v in c_bar[1:]):
        raise NumericFailure("permuted C is not e_1")
    tt = exact.matmul(t_block, exact.transpose(t_block))
    minus_tt = [[-v for v in row] for row in tt]
    row = [Fraction(1)] + [Fraction(0)] * (half - 1)
    q_stack = [row]
    for _ in range(half - 1):
        row = exact.matvec(exact.transpose(minus_tt), row)
        q_stack.append(row)
    for i, r in enumerate(q_stack):
        if any(r[j] != 0 for j in range(i + 1, half)):
            raise NumericFailure("stacked observability factor is not lower triangular")
    return EvenStructure(
        permutation=perm,
        t_block=t_block,
        q_stack=q_stack,
        q_diagonal=tuple(q_stack[i][i] for i in range(half)),
    )


def even_q_diagonal_closed_form(n_chain: int, binding: RATIONAL) -> tuple[Fraction, ...]:
    """(1, hb*h1, hb*h1*h2*h3, ..., hb*prod_{i<=N-1} h_i).

    Each step down the stack multiplies the diagonal by the next
    superdiagonal entry of -T T^t, which is the (positive) product of the
    two couplings crossed at that depth.
    """
    hb = Fraction(binding["hb"])
    out = [Fraction(1)]
    for k in range(1, n_chain // 2 + 1):
        acc = Fraction(1)
        for i in range(1, 2 * k):
            acc *= Fraction(binding[f"h{i}"])
        out.append(hb * acc)
    return tuple(out)


# -- SPT minimal realization (odd-N ladder) ---------------------------------


@dataclass
class SPTArtifacts:
    """Intermediate objects of the structure-preserving reduction, exact."""

    p_matrix: list[list[Fraction]]
    p_bar: list[list[Fraction]]
    p_vec: list[Fraction]
    q: list[list[Fraction]]
    q_inv: list[list[Fraction]]
    ul: list[list[Fraction]]
    ur: list[Fraction]
    dl: list[Fraction]
    dr: Fraction
    a_tilde: list[list[Fraction]]
    det_p_bar: Fraction
    k_const: Fraction


@dataclass
class MinimalRealization:
    a_min: object
    b_min: object
    c_min: object
    transform: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.diagnostics.get("order", len(self.b_min))


def spt_minimal(
    model: StateSpaceModel, binding: RATIONAL
) -> tuple[MinimalRealization, SPTArtifacts]:
    """Reduce the odd-N ladder by one unobservable direction, exactly.

    Builds the square matrix whose rows are C, CA, ..., CA^N followed by
    the last coordinate row, partitions it as [[Pbar, p], [0, 1]], and
    transforms with Q = [[I, Pbar^{-1} p], [0, 1]].  The reduced triple
    keeps B and C verbatim (their last entries are zero) and its first N
    columns coincide with A's.
    """
    cfg = model.config
    if cfg.capability != "ladder" or cfg.n_chain % 2 == 0:
        raise DimensionMismatch("the SPT reduction applies to the ladder at odd N")
    if any(v == 0 for v in binding.values()):
        raise AtypicalParameters("zero coupling: reduction formulas degenerate")
    dim = model.dim
    a, b, c = ssm.evaluate_exact(model, binding)
    at = exact.transpose(a)
    rows = [list(c)]
    for _ in range(cfg.n_chain):
        rows.append(exact.matvec(at, rows[-1]))
    rows.append([Fraction(0)] * (dim - 1) + [Fraction(1)])
    p_matrix = rows
    p_bar = [r[: dim - 1] for r in rows[:-1]]
    p_vec = [r[dim - 1] for r in rows[:-1]]
    det_p_bar = exact.det(p_bar)
    if det_p_bar == 0:
        raise AtypicalParameters("singular reduced row matrix at this binding")
    w = exact.solve(p_bar, p_vec)  # Pbar^{-1} p
    m = dim - 1
    q = exact.identity(dim)
    q_inv = exact.identity(dim)
    for i in range(m):
        q[i][m] = w[i]
        q_inv[i][m] = -w[i]
    ul = [row[:m] for row in a[:m]]
    ur = [a[i][m] for i in range(m)]
    dl = list(a[m][:m])
    dr = a[m][m]
    a_tilde = [
        [ul[i][j] + w[i] * dl[j] for j in range(m)] for i in range(m)
    ]
    b_min = b[:m]
    c_min = c[:m]
    if b[m] != 0 or c[m] != 0:
        raise NumericFailure("last entries of B or C are unexpectedly nonzero")
    art = SPTArtifacts(
        p_matrix=p_matrix,
        p_bar=p_bar,
        p_vec=p_vec,
        q=q,
        q_inv=q_inv,
        ul=ul,
        ur=ur,
        dl=dl,
        dr=dr,
        a_tilde=a_tilde,
        det_p_bar=det_p_bar,
        k_const=k_const_closed_form(cfg.n_chain, binding),
    )
    minimal = MinimalRealization(
        a_min=a_tilde,
        b_min=b_min,
        c_min=c_min,
        transform=q,
        diagnostics={"order": m, "unobservable_dim": 1, "method": "spt"},
    )
    return minimal, art


def p_vec_closed_form(n_chain: int, binding: RATIONAL) -> list[Fraction]:
    """(0, ..., 0, hb * prod_{i=1}^{N-1} h_i)."""
    tail = Fraction(binding["hb"])
    for i in range(1, n_chain):
        tail *= Fraction(binding[f"h{i}"])
    return [Fraction(0)] * n_chain + [tail]


def det_p_bar_closed_form(n_chain: int, binding: RATIONAL) -> Fraction:
    """Closed-form det(Pbar) for odd N.

    N = 1 reduces to h_a by direct computation; for N >= 3 the pattern is
    h_a h_b^{N-1} h_{N-2}^3 prod_i h_{2i-1}^{N+2-2i} h_{2i}^{N-1-2i}.
    """
    if n_chain % 2 == 0:
        raise DimensionMismatch("closed form applies at odd N")
    if n_chain == 1:
        return Fraction(binding["ha"])
    value = Fraction(binding["ha"]) * Fraction(binding["hb"]) ** (n_chain - 1)
    value *= Fraction(binding[f"h{n_chain - 2}"]) ** 3
    for i in range(1, (n_chain - 3) // 2 + 1):
        value *= Fraction(binding[f"h{2 * i - 1}"]) ** (n_chain + 2 - 2 * i)
        value *= Fraction(binding[f"h{2 * i}"]) ** (n_chain - 1 - 2 * i)
    return value


def k_const_closed_form(n_chain: int, binding: RATIONAL) -> Fraction:
    """K = hb^{N-1} prod_{i=1}^{N-2} h_i^{N-1-i} (1 for N = 1)."""
    if n_chain == 1:
        return Fraction(1)
    value = Fraction(binding["hb"]) ** (n_chain - 1)
    for i in range(1, n_chain - 1):
        value *= Fraction(binding[f"h{i}"]) ** (n_chain - 1 - i)
    return value


def p_bar_inverse_last_column_closed_form(
    n_chain: int, binding: RATIONAL
) -> list[Fraction]:
    """Last column of Pbar^{-1}: row 1 carries -K/det, even rows vanish,
    odd rows k >= 3 scale K by ha/hb times a ratio of alternating couplings."""
    det = det_p_bar_closed_form(n_chain, binding)
    k_const = k_const_closed_form(n_chain, binding)
    out = []
    for k in range(1, n_chain + 2):
        if k == 1:
            out.append(-k_const / det)
        elif k % 2 == 0:
            out.append(Fraction(0))
        else:
            value = -k_const * Fraction(binding["ha"]) / Fraction(binding["hb"])
            for i in range(1, (k - 3) // 2 + 1):
                value *= Fraction(binding[f"h{2 * i - 1}"])
                value /= Fraction(binding[f"h{2 * i}"])
            out.append(value / det)
    return out


def a_tilde_last_column_closed_form(n_chain: int, binding: RATIONAL) -> list[Fraction]:
    """Last column of the reduced matrix for odd N >= 3.

    Even rows vanish (N+1 is even, so the bottom row is zero).  Odd rows
    carry ratios of alternating couplings scaled by h_{N-1}; at row k = N
    the untransformed matrix contributes its superdiagonal entry h_{N-2}
    on top of the correction, giving h_{N-2} + h_{N-1}^2/h_{N-2}.
    """
    if n_chain < 3 or n_chain % 2 == 0:
        raise DimensionMismatch("closed form applies at odd N >= 3")
    n = n_chain
    hlast = Fraction(binding[f"h{n - 1}"])
    hprev = Fraction(binding[f"h{n - 2}"])
    out = []
    for k in range(1, n + 2):
        if k == 1:
            value = Fraction(binding["hb"]) * hlast
            for i in range(1, (n - 1) // 2 + 1):
                value *= Fraction(binding[f"h{2 * i}"])
            den = Fraction(binding["ha"])
            for i in range(1, (n - 1) // 2 + 1):
                den *= Fraction(binding[f"h{2 * i - 1}"])
            out.append(value / den)
        elif k % 2 == 0:
            out.append(Fraction(0))
        elif k == n:
            out.append(hprev + hlast * hlast / hprev)
        else:
            value = hlast
            for i in range((k - 1) // 2, (n - 1) // 2 + 1):
                value *= Fraction(binding[f"h{2 * i}"])
                value /= Fraction(binding[f"h{2 * i - 1}"])
            out.append(value)
    return out


# -- Kalman staircase reduction ---------------------------------------------


def _orth_range(m: np.ndarray, rank: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, :rank]


def _unit_columns(m: np.ndarray) -> np.ndarray:
    """Scale each column to unit norm (zero columns untouched).

    Krylov blocks A^k B span many orders of magnitude, so the raw matrix
    hides genuinely independent but weakly amplified directions below any
    relative rank threshold.  Column scaling leaves the column space (and
    hence the rank) unchanged while making every direction count O(1).
    """
    norms = np.linalg.norm(m, axis=0)
    return m / np.where(norms > 0, norms, 1.0)


def kalman_minimal(
    model_or_triple, binding=None, tol: float | None = None
) -> MinimalRealization:
    """Minimal realization by projecting onto the controllable subspace and
    then the observable subspace, both found by SVD of Krylov matrices."""
    if binding is not None:
        a, b, c = ssm.evaluate(model_or_triple, {k: float(v) for k, v in binding.items()})
    else:
        a, b, c = model_or_triple
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
    cm = _unit_columns(controllability_matrix(a, b))
    rc = svd_rank(cm) if tol is None else int(np.count_nonzero(
        np.linalg.svd(cm, compute_uv=False) > tol))
    vc = _orth_range(cm, rc)
    a1 = vc.T @ a @ vc
    b1 = vc.T @ b
    c1 = c @ vc
    om = _unit_columns(observability_matrix(a1, c1).T).T
    ro = svd_rank(om) if tol is None else int(np.count_nonzero(
        np.linalg.svd(om, compute_uv=False) > tol))
    vo = _orth_range(om.T, ro)
    a2 = vo.T @ a1 @ vo
    b2 = vo.T @ b1
    c2 = c1 @ vo
    probe = min(2 * a.shape[0], 64)
    full = _markov_float(a, b, c, probe)
    red = _markov_float(a2, b2, c2, probe)
    scale = max(1.0, float(np.max(np.abs(full))))
    residual = float(np.max(np.abs(full - red))) / scale
    return MinimalRealization(
        a_min=a2,
        b_min=b2,
        c_min=c2,
        transform=None,
        diagnostics={
            "order": ro,
            "controllable_rank": rc,
            "observable_rank": ro,
            "markov_residual": residual,
            "method": "kalman",
        },
    )


def _markov_float(a, b, c, count: int) -> np.ndarray:
    out = np.empty(count)
    vec = np.array(b, dtype=float)
    for k in range(count):
        out[k] = float(c @ vec)
        vec = a @ vec
    return out


def markov_of_minimal(real: MinimalRealization, count: int) -> np.ndarray:
    a = np.array([[float(v) for v in row] for row in real.a_min]) \
        if not isinstance(real.a_min, np.ndarray) else real.a_min
    b = np.array([float(v) for v in real.b_min]) \
        if not isinstance(real.b_min, np.ndarray) else real.b_min
    c = np.array([float(v) for v in real.c_min]) \
        if not isinstance(real.c_min, np.ndarray) else real.c_min
    return _markov_float(a, b, c, count)

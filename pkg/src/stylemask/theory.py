"""Exact finite-probability verification of the divergence inequalities.

Everything here runs on small discrete instances where each divergence is a
finite sum, so the two central claims become machine-checkable:

* masking claim: conditioning a frozen model on a prefix of independent
  feature components cannot increase the expected divergence, given the
  stated prefix-sufficiency assumption;
* adapter claim: tuning a per-reference (image-side) shift family can never
  do worse than a per-content (text-side) shift family when the content label
  is a function of the reference.

The divergence is instantiated as KL: the claims need only convexity, and KL
admits exact computation on probability tables. Adapter "training" is
replaced by exhaustive minimization over finite shift grids, which turns the
min-over-functions statements into finite enumerations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Callable, Hashable, Mapping

import numpy as np

from .errors import CapacityError, ValidationError

TOLERANCE = 1e-9
PROB_TOLERANCE = 1e-12
EXHAUSTIVE_EVAL_LIMIT = 10_000_000

Statistic = Callable[[tuple[int, int, int]], Hashable]


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats over two discrete distributions; 0*ln(0/x) = 0.

    Mass in p where q is zero yields +inf, reported as a value rather than an
    error.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"shape mismatch: {p.shape} vs {q.shape}")
    total = 0.0
    for pi, qi in zip(p, q):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        total += pi * math.log(pi / qi)
    return max(total, 0.0)


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite joint q(x, c1, c3) with content c2 determined by a map on c1.

    ``probs[x, c1, c3]`` holds the joint mass; ``content_map[c1]`` gives the
    induced content label. Instances produced by :func:`random_instance`
    additionally satisfy marginal independence of c1 and c3.
    """

    probs: np.ndarray
    content_map: tuple[int, ...]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 3:
            raise ValidationError(f"probs must be 3-D (x, c1, c3), got {probs.shape}")
        if np.any(probs < 0.0):
            raise ValidationError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > PROB_TOLERANCE:
            raise ValidationError(f"probabilities sum to {probs.sum()}, not 1")
        cmap = tuple(int(c) for c in self.content_map)
        if len(cmap) != probs.shape[1]:
            raise ValidationError(
                f"content_map covers {len(cmap)} values, c1 alphabet has {probs.shape[1]}"
            )
        if any(c < 0 for c in cmap):
            raise ValidationError("content_map values must be nonnegative indices")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "content_map", cmap)

    @property
    def x_size(self) -> int:
        return self.probs.shape[0]

    @property
    def c1_size(self) -> int:
        return self.probs.shape[1]

    @property
    def c3_size(self) -> int:
        return self.probs.shape[2]

    @property
    def c2_size(self) -> int:
        return max(self.content_map) + 1

    def condition_tuples(self) -> list[tuple[int, int, int]]:
        """All (c1, c2, c3) tuples, c2 induced by the content map."""
        return [
            (c1, self.content_map[c1], c3)
            for c1 in range(self.c1_size)
            for c3 in range(self.c3_size)
        ]

    def cond_weight(self, c1: int, c3: int) -> float:
        return float(self.probs[:, c1, c3].sum())

    def x_given(self, c1: int, c3: int) -> np.ndarray | None:
        """q(x | c1, c3), or None when the pair has zero mass."""
        w = self.cond_weight(c1, c3)
        if w == 0.0:
            return None
        return self.probs[:, c1, c3] / w

    def c1_c3_independence_gap(self) -> float:
        """Max |q(c1,c3) - q(c1)q(c3)|; ~0 for Assumption-style generators."""
        joint = self.probs.sum(axis=0)
        outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
        return float(np.max(np.abs(joint - outer)))


def random_instance(
    seed: int,
    sizes: tuple[int, int, int],
    c2_size: int | None = None,
) -> DiscreteJoint:
    """Deterministic random joint satisfying the independence/determinism structure.

    ``sizes`` is (x_size, c1_size, c3_size). The content map is surjective
    onto ``c2_size`` labels and non-injective by default (c2_size defaults to
    c1_size - 1, floored at 1).
    """
    x_size, c1_size, c3_size = sizes
    for name, value in (("x", x_size), ("c1", c1_size), ("c3", c3_size)):
        if not 1 <= value <= 6:
            raise ValidationError(f"{name}_size must be in [1, 6], got {value}")
    if c2_size is None:
        c2_size = max(1, c1_size - 1)
    if not 1 <= c2_size <= c1_size:
        raise ValidationError(f"c2_size must be in [1, {c1_size}], got {c2_size}")

    rng = np.random.default_rng(seed)
    p_c1 = rng.random(c1_size) + 0.1
    p_c1 /= p_c1.sum()
    p_c3 = rng.random(c3_size) + 0.1
    p_c3 /= p_c3.sum()
    cond_x = rng.random((x_size, c1_size, c3_size)) + 0.05
    cond_x /= cond_x.sum(axis=0, keepdims=True)

    probs = cond_x * p_c1[None, :, None] * p_c3[None, None, :]
    probs /= probs.sum()

    # surjective map: first c2_size labels fixed, remainder drawn at random
    cmap = list(range(c2_size)) + [
        int(v) for v in rng.integers(0, c2_size, size=c1_size - c2_size)
    ]
    return DiscreteJoint(probs=probs, content_map=tuple(cmap))


def optimal_restricted_model(
    q: DiscreteJoint, statistic: Statistic
) -> dict[Hashable, np.ndarray]:
    """Best model that may condition only on ``statistic`` of the conditions.

    Returns p*(x | s) = sum over matching condition tuples of q(x, conds),
    normalized. A statistic value reachable only through zero-probability
    tuples gets a uniform row and a warning.
    """
    buckets: dict[Hashable, np.ndarray] = {}
    weights: dict[Hashable, float] = {}
    for c1, c2, c3 in q.condition_tuples():
        s = statistic((c1, c2, c3))
        vec = q.probs[:, c1, c3]
        if s in buckets:
            buckets[s] = buckets[s] + vec
        else:
            buckets[s] = vec.copy()
        weights[s] = weights.get(s, 0.0) + q.cond_weight(c1, c3)
    model: dict[Hashable, np.ndarray] = {}
    for s, vec in buckets.items():
        if weights[s] == 0.0:
            warnings.warn(f"statistic value {s!r} has zero mass; using uniform row")
            model[s] = np.full(q.x_size, 1.0 / q.x_size)
        else:
            model[s] = vec / weights[s]
    return model


def expected_divergence(
    q: DiscreteJoint,
    model: Mapping[Hashable, np.ndarray],
    statistic: Statistic,
) -> float:
    """E over condition tuples of KL(q(x | conds) || model(x | statistic(conds))).

    Zero-probability tuples contribute nothing. Missing statistic values in
    the model are an error; model zeros under positive q mass yield +inf.
    """
    total = []
    for c1, c2, c3 in q.condition_tuples():
        w = q.cond_weight(c1, c3)
        if w == 0.0:
            continue
        s = statistic((c1, c2, c3))
        if s not in model:
            raise ValidationError(f"model has no row for statistic value {s!r}")
        d = kl_divergence(q.probs[:, c1, c3] / w, model[s])
        if math.isinf(d):
            return math.inf
        total.append(w * d)
    return max(math.fsum(total), 0.0)


@dataclass(frozen=True)
class TheoremReport:
    """Two-sided divergence comparison; holds means d_lhs <= d_rhs + 1e-9."""

    theorem: str
    seed: int
    sizes: dict[str, int]
    d_lhs: float
    d_rhs: float
    holds: bool
    assumption_holds: bool | None = None

    def to_json_dict(self) -> dict:
        doc = {
            "theorem": self.theorem,
            "seed": self.seed,
            "sizes": dict(self.sizes),
            "d_lhs": self.d_lhs,
            "d_rhs": self.d_rhs,
        }
        if self.assumption_holds is not None:
            doc["assumption_holds"] = self.assumption_holds
        doc["holds"] = self.holds
        return doc


# ---------------------------------------------------------------------------
# adapter-family comparison (per-reference vs per-content shift families)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrozenReadout:
    """Frozen map from a quantized scalar feature and c3 to a distribution over x.

    ``table[f, c3]`` is a distribution over x; an incoming feature is snapped
    to the nearest point of ``feature_grid`` (ties to the lower point).
    """

    feature_grid: np.ndarray
    table: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.feature_grid, dtype=np.float64)
        table = np.asarray(self.table, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise ValidationError("feature_grid must be a nonempty 1-D array")
        if table.ndim != 3 or table.shape[0] != grid.size:
            raise ValidationError(
                f"table must be (grid, c3, x)-shaped with {grid.size} grid rows"
            )
        if np.any(table < 0.0) or np.any(
            np.abs(table.sum(axis=2) - 1.0) > PROB_TOLERANCE
        ):
            raise ValidationError("readout rows must be distributions over x")
        object.__setattr__(self, "feature_grid", grid)
        object.__setattr__(self, "table", table)

    def grid_index(self, feature: float) -> int:
        return int(np.argmin(np.abs(self.feature_grid - feature)))

    def row(self, feature: float, c3: int) -> np.ndarray:
        return self.table[self.grid_index(feature), c3]


@dataclass(frozen=True)
class AdapterInstance:
    """A joint, per-reference feature values, a frozen readout, and a shift grid."""

    joint: DiscreteJoint
    e1_values: np.ndarray
    readout: FrozenReadout
    shift_grid: np.ndarray
    seed: int = 0

    def __post_init__(self):
        e1 = np.asarray(self.e1_values, dtype=np.float64)
        shifts = np.asarray(self.shift_grid, dtype=np.float64)
        if e1.shape != (self.joint.c1_size,):
            raise ValidationError(
                f"need one feature value per c1 value ({self.joint.c1_size}), got {e1.shape}"
            )
        if shifts.ndim != 1 or shifts.size == 0:
            raise ValidationError("shift_grid must be a nonempty 1-D array")
        if self.readout.table.shape[1] != self.joint.c3_size:
            raise ValidationError("readout c3 axis disagrees with the joint")
        if self.readout.table.shape[2] != self.joint.x_size:
            raise ValidationError("readout x axis disagrees with the joint")
        object.__setattr__(self, "e1_values", e1)
        object.__setattr__(self, "shift_grid", shifts)

    def sizes(self) -> dict[str, int]:
        return {
            "x": self.joint.x_size,
            "c1": self.joint.c1_size,
            "c2": self.joint.c2_size,
            "c3": self.joint.c3_size,
            "grid": int(self.shift_grid.size),
        }


def _per_choice_divergence(instance: AdapterInstance) -> np.ndarray:
    """partial[c1, g]: contribution of reference c1 under shift index g."""
    joint = instance.joint
    n_shift = instance.shift_grid.size
    partial = np.zeros((joint.c1_size, n_shift))
    for c1 in range(joint.c1_size):
        for g, shift in enumerate(instance.shift_grid):
            row_idx = instance.readout.grid_index(instance.e1_values[c1] - shift)
            acc = []
            for c3 in range(joint.c3_size):
                w = joint.cond_weight(c1, c3)
                if w == 0.0:
                    continue
                acc.append(
                    w
                    * kl_divergence(
                        joint.probs[:, c1, c3] / w,
                        instance.readout.table[row_idx, c3],
                    )
                )
            partial[c1, g] = math.fsum(acc)
    return partial


def _min_over_assignments(
    partial: np.ndarray, groups: list[list[int]], n_shift: int
) -> float:
    """Exhaustive minimum of sum_c1 partial[c1, a(group(c1))] over assignments."""
    best = math.inf
    group_rows = [partial[g, :].sum(axis=0) for g in groups]
    for assignment in iter_product(range(n_shift), repeat=len(groups)):
        total = math.fsum(
            group_rows[gi][choice] for gi, choice in enumerate(assignment)
        )
        if total < best:
            best = total
    return best


def _min_separable(partial: np.ndarray, groups: list[list[int]]) -> float:
    """Fast path: the objective is separable across groups, so minimize per group."""
    return math.fsum(float(partial[g, :].sum(axis=0).min()) for g in groups)


def verify_adapter_superiority(
    instance: AdapterInstance, exhaustive: bool = True
) -> TheoremReport:
    """Compare best per-reference shifts against best per-content shifts.

    d_lhs minimizes over one shift per c1 value (image-side family); d_rhs
    over one shift per c2 value shared across the c1 values mapping to it
    (text-side family). The per-reference family contains every per-content
    assignment, so holds is expected on every valid instance.
    """
    joint = instance.joint
    n_shift = int(instance.shift_grid.size)
    if exhaustive:
        evals = (n_shift ** joint.c1_size + n_shift ** joint.c2_size) * (
            joint.c1_size * joint.c3_size
        )
        if evals > EXHAUSTIVE_EVAL_LIMIT:
            raise CapacityError(
                f"exhaustive search needs ~{evals} evaluations "
                f"(limit {EXHAUSTIVE_EVAL_LIMIT}); use exhaustive=False"
            )
    partial = _per_choice_divergence(instance)

    psi_groups = [[c1] for c1 in range(joint.c1_size)]
    phi_groups: list[list[int]] = [[] for _ in range(joint.c2_size)]
    for c1, c2 in enumerate(joint.content_map):
        phi_groups[c2].append(c1)
    phi_groups = [g for g in phi_groups if g]

    if exhaustive:
        d_lhs = _min_over_assignments(partial, psi_groups, n_shift)
        d_rhs = _min_over_assignments(partial, phi_groups, n_shift)
    else:
        d_lhs = _min_separable(partial, psi_groups)
        d_rhs = _min_separable(partial, phi_groups)

    return TheoremReport(
        theorem="adapter-families",
        seed=instance.seed,
        sizes=instance.sizes(),
        d_lhs=d_lhs,
        d_rhs=d_rhs,
        holds=d_lhs <= d_rhs + TOLERANCE,
    )


def random_adapter_instance(seed: int) -> AdapterInstance:
    """Seeded instance with a non-injective content map and a spiky frozen readout."""
    rng = np.random.default_rng(seed)
    c1_size = int(rng.integers(3, 5))
    c2_size = c1_size - 1
    c3_size = int(rng.integers(2, 4))
    x_size = int(rng.integers(2, 4))
    joint = random_instance(
        int(rng.integers(0, 2**31)), (x_size, c1_size, c3_size), c2_size=c2_size
    )
    e1_values = rng.random(c1_size)
    shift_grid = np.linspace(0.0, 1.0, 5)
    feature_grid = np.linspace(-1.0, 1.0, 9)
    # gamma(0.35) rows are spiky, so different readout rows disagree sharply
    table = rng.gamma(0.35, size=(feature_grid.size, c3_size, x_size)) + 1e-6
    table /= table.sum(axis=2, keepdims=True)
    readout = FrozenReadout(feature_grid=feature_grid, table=table)
    return AdapterInstance(
        joint=joint,
        e1_values=e1_values,
        readout=readout,
        shift_grid=shift_grid,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# masked-conditioning comparison over independent feature components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaskedConditioningInstance:
    """q over independent discrete feature components, plus two model tables.

    ``component_joint`` is the joint over the feature tuple and must factorize
    into a product of per-component marginals (validated). ``cond`` holds
    q(x | components); ``full_model`` conditions on the whole tuple while
    ``subset_model`` conditions on the first ``s`` components only.
    """

    component_joint: np.ndarray
    cond: np.ndarray
    full_model: np.ndarray
    subset_model: np.ndarray
    s: int
    seed: int = 0

    def __post_init__(self):
        joint = np.asarray(self.component_joint, dtype=np.float64)
        cond = np.asarray(self.cond, dtype=np.float64)
        full = np.asarray(self.full_model, dtype=np.float64)
        sub = np.asarray(self.subset_model, dtype=np.float64)
        comp_shape = joint.shape
        d = joint.ndim
        if not 0 <= self.s <= d:
            raise ValidationError(f"s must be in [0, {d}], got {self.s}")
        if abs(float(joint.sum()) - 1.0) > PROB_TOLERANCE or np.any(joint < 0.0):
            raise ValidationError("component joint must be a distribution")
        marginals = _component_marginals(joint)
        product = marginals[0]
        for m in marginals[1:]:
            product = np.multiply.outer(product, m)
        if float(np.max(np.abs(product - joint))) > TOLERANCE:
            raise ValidationError("feature components must be independent")
        for name, table, shape in (
            ("cond", cond, comp_shape),
            ("full_model", full, comp_shape),
            ("subset_model", sub, comp_shape[: self.s]),
        ):
            if table.shape[:-1] != shape:
                raise ValidationError(
                    f"{name} must be indexed by {shape}, got {table.shape[:-1]}"
                )
            if np.any(table < 0.0) or np.any(
                np.abs(table.sum(axis=-1) - 1.0) > 1e-9
            ):
                raise ValidationError(f"{name} rows must be distributions over x")
        object.__setattr__(self, "component_joint", joint)
        object.__setattr__(self, "cond", cond)
        object.__setattr__(self, "full_model", full)
        object.__setattr__(self, "subset_model", sub)

    def sizes(self) -> dict[str, int]:
        return {
            "components": self.component_joint.ndim,
            "s": self.s,
            "x": self.cond.shape[-1],
        }


def _component_marginals(joint: np.ndarray) -> list[np.ndarray]:
    d = joint.ndim
    return [
        joint.sum(axis=tuple(a for a in range(d) if a != axis))
        for axis in range(d)
    ]


def verify_masked_conditioning(instance: MaskedConditioningInstance) -> TheoremReport:
    """Compare divergences of full vs prefix conditioning of a frozen model.

    d_rhs (D1) conditions the model on every feature component; d_lhs (D2)
    conditions on the first s components only. The stated assumption compares
    d_lhs against the prefix-level divergence of the subset model, and the
    report carries whether the assumption held; the claim under test is the
    implication assumption_holds => holds, never holds alone.
    """
    joint = instance.component_joint
    cond = instance.cond
    s = instance.s

    d1_terms, d2_terms = [], []
    for idx in np.ndindex(joint.shape):
        w = float(joint[idx])
        if w == 0.0:
            continue
        d1_terms.append(w * kl_divergence(cond[idx], instance.full_model[idx]))
        d2_terms.append(w * kl_divergence(cond[idx], instance.subset_model[idx[:s]]))
    d1 = math.fsum(d1_terms)
    d2 = math.fsum(d2_terms)

    # assumption RHS: prefix-marginal conditional against the subset model
    suffix_axes = tuple(range(s, joint.ndim))
    prefix_weight = joint.sum(axis=suffix_axes) if suffix_axes else joint
    # q(x | prefix) = sum over suffixes of q(components) q(x | components)
    weighted = joint[..., None] * cond
    prefix_mass = weighted.sum(axis=suffix_axes) if suffix_axes else weighted
    rhs_terms = []
    for idx in np.ndindex(prefix_weight.shape):
        w = float(prefix_weight[idx])
        if w == 0.0:
            continue
        rhs_terms.append(
            w * kl_divergence(prefix_mass[idx] / w, instance.subset_model[idx])
        )
    assumption_rhs = math.fsum(rhs_terms)

    assumption_holds = d2 <= assumption_rhs + TOLERANCE
    return TheoremReport(
        theorem="masked-conditioning",
        seed=instance.seed,
        sizes=instance.sizes(),
        d_lhs=d2,
        d_rhs=d1,
        holds=d2 <= d1 + TOLERANCE,
        assumption_holds=assumption_holds,
    )


def marginalize_full_model(
    component_joint: np.ndarray, full_model: np.ndarray, s: int
) -> np.ndarray:
    """Frozen model under masked conditioning: average rows over suffix components.

    Uses the (independent) suffix marginal as weights, which is exactly what a
    model sees when the masked components are integrated out.
    """
    joint = np.asarray(component_joint, dtype=np.float64)
    d = joint.ndim
    suffix_axes = tuple(range(s, d))
    if not suffix_axes:
        return np.array(full_model, dtype=np.float64, copy=True)
    marginals = _component_marginals(joint)
    weights = marginals[s]
    for m in marginals[s + 1 :]:
        weights = np.multiply.outer(weights, m)
    # contract the suffix axes of full_model against the suffix weight tensor
    expanded = full_model * weights[(None,) * s + (...,) + (None,)]
    return expanded.sum(axis=suffix_axes)


def random_masked_instance(
    seed: int,
    component_sizes: tuple[int, ...] = (2, 2, 2),
    s: int = 2,
    x_size: int = 3,
) -> MaskedConditioningInstance:
    """Seeded instance mixing prefix-sufficient and fully dependent targets.

    Half the seeds make q(x | components) depend only on the first s
    components, so the prefix-sufficiency assumption holds exactly; the other
    half leave it fully dependent, where the assumption generically fails.
    The subset model is always the suffix-marginalized full model, i.e. the
    same frozen model evaluated with masked conditioning.
    """
    rng = np.random.default_rng(seed)
    marginals = []
    for size in component_sizes:
        m = rng.random(size) + 0.2
        marginals.append(m / m.sum())
    joint = marginals[0]
    for m in marginals[1:]:
        joint = np.multiply.outer(joint, m)
    joint /= joint.sum()

    prefix_sufficient = bool(rng.integers(0, 2))
    if prefix_sufficient:
        base = rng.random(tuple(component_sizes[:s]) + (x_size,)) + 0.05
        base /= base.sum(axis=-1, keepdims=True)
        shape = (
            tuple(component_sizes[:s])
            + (1,) * (len(component_sizes) - s)
            + (x_size,)
        )
        cond = np.broadcast_to(
            base.reshape(shape), tuple(component_sizes) + (x_size,)
        ).copy()
    else:
        cond = rng.random(tuple(component_sizes) + (x_size,)) + 0.05
        cond /= cond.sum(axis=-1, keepdims=True)

    full_model = rng.random(tuple(component_sizes) + (x_size,)) + 0.05
    full_model /= full_model.sum(axis=-1, keepdims=True)
    subset_model = marginalize_full_model(joint, full_model, s)

    return MaskedConditioningInstance(
        component_joint=joint,
        cond=cond,
        full_model=full_model,
        subset_model=subset_model,
        s=s,
        seed=seed,
    )

"""Empirical verification of the perturbation analysis behind the bounds.

Four layers of checking, each against a closed form computed here:

* the output-change inequality for admissible per-layer perturbations
  (``lemma2_bound`` / ``lemma2_check``),
* its layer-by-layer proof recursion (``recursion_check``),
* the Gaussian spectral-norm tail bound (``spectral_tail_check``),
* the assembled PAC-Bayes quantities at the prescribed sigma
  (``theorem_sigma`` / ``kl_gaussian`` / ``mc_pacbayes``).

A perturbation U_1..U_d is called admissible when every layer satisfies
|U_i|_2 <= |W_i|_2 / d.  The closed-form output bound is only claimed under
admissibility; checks report violations instead of silently accepting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import derive_seed, gaussian_matrix, spectral_norm
from .network import (
    LabeledDataset,
    Perturbation,
    ReluNetwork,
    apply_perturbation,
    batch_scores,
    layer_outputs,
    margin_loss,
    weight_norm_sq,
)

__all__ = [
    "SLACK",
    "PerturbationTrial",
    "RecursionStep",
    "TailPoint",
    "PacBayesEstimate",
    "admissibility_flags",
    "lemma2_bound",
    "lemma2_check",
    "recursion_check",
    "sample_perturbation",
    "spectral_tail_check",
    "theorem_sigma",
    "kl_gaussian",
    "mc_pacbayes",
    "PACBAYES_REPORT_SCHEMA_VERSION",
]

SLACK = 1e-9
ADMISSIBLE_REL_SLACK = 1e-9
PACBAYES_REPORT_SCHEMA_VERSION = "pacbayes_report_v1"
PERTURBATION_MODES = ("raw", "clipped")


@dataclass(frozen=True)
class PerturbationTrial:
    """One output-change check: norms, admissibility, observed vs bound."""

    sigma: float
    w_spectral: tuple
    u_spectral: tuple
    admissible: tuple
    observed_l2: float
    observed_linf: float
    bound: float
    holds: bool

    @property
    def all_admissible(self) -> bool:
        return all(self.admissible)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "w_spectral": list(self.w_spectral),
            "u_spectral": list(self.u_spectral),
            "admissible": list(self.admissible),
            "observed_l2": self.observed_l2,
            "observed_linf": self.observed_linf,
            "bound": self.bound,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class RecursionStep:
    """Observed layer-i output change against the one-step and closed bounds."""

    layer: int
    delta: float
    step_bound: float
    step_holds: bool
    closed_bound: float
    closed_holds: bool

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "delta": self.delta,
            "step_bound": self.step_bound,
            "step_holds": self.step_holds,
            "closed_bound": self.closed_bound,
            "closed_holds": self.closed_holds,
        }


@dataclass(frozen=True)
class TailPoint:
    """Empirical spectral-norm tail frequency at threshold t versus its bound."""

    t: float
    frequency: float
    bound: float
    stderr: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "frequency": self.frequency,
            "bound": self.bound,
            "stderr": self.stderr,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class PacBayesEstimate:
    """Monte-Carlo estimates of the perturbed loss, survival rate, and bound."""

    sigma: float
    gamma: float
    delta: float
    trials: int
    base_margin_loss: float
    base_zero_loss: float
    mean_perturbed_loss: float
    survival: float
    survival_stderr: float
    kl: float
    bound: float
    survival_ok: bool
    per_trial: tuple = field(repr=False, default=())

    def __post_init__(self):
        for name, p in (("survival", self.survival), ("mean_perturbed_loss", self.mean_perturbed_loss)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {p}")
        if self.kl < 0:
            raise ValueError(f"KL must be nonnegative, got {self.kl}")

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "gamma": self.gamma,
            "delta": self.delta,
            "trials": self.trials,
            "base_margin_loss": self.base_margin_loss,
            "base_zero_loss": self.base_zero_loss,
            "mean_perturbed_loss": self.mean_perturbed_loss,
            "survival": self.survival,
            "survival_stderr": self.survival_stderr,
            "kl": self.kl,
            "bound": self.bound,
            "survival_ok": self.survival_ok,
            "per_trial": [dict(t) for t in self.per_trial],
        }


def admissibility_flags(net: ReluNetwork, pert: Perturbation, w_norms=None, u_norms=None):
    """Per-layer spectral norms of W and U plus |U|_2 <= |W|_2/d flags."""
    pert.check_compatible(net)
    if w_norms is None:
        w_norms = [spectral_norm(w) for w in net.layers]
    if u_norms is None:
        u_norms = [spectral_norm(u) for u in pert.layers]
    d = net.depth
    flags = [
        u <= (w / d) * (1.0 + ADMISSIBLE_REL_SLACK)
        for u, w in zip(u_norms, w_norms)
    ]
    return list(w_norms), list(u_norms), flags


def lemma2_bound(net: ReluNetwork, pert: Perturbation, B: float, w_norms=None, u_norms=None) -> float:
    """Closed-form output-change bound e * B * prod|W|_2 * sum(|U|_2/|W|_2).

    Valid (as a bound on the l2 output change over |x|_2 <= B) only for
    admissible perturbations; the value is computed regardless and callers
    flag admissibility separately.
    """
    if B < 0:
        raise ValueError(f"B must be nonnegative, got {B}")
    pert.check_compatible(net)
    if w_norms is None:
        w_norms = [spectral_norm(w) for w in net.layers]
    if u_norms is None:
        u_norms = [spectral_norm(u) for u in pert.layers]
    for i, w in enumerate(w_norms):
        if w <= 0.0:
            raise ValueError(f"layer {i} has zero spectral norm; the bound is undefined")
    prod = float(np.prod(np.asarray(w_norms)))
    ratio_sum = float(sum(u / w for u, w in zip(u_norms, w_norms)))
    return math.e * B * prod * ratio_sum


def lemma2_check(
    net: ReluNetwork,
    pert: Perturbation,
    data: LabeledDataset,
    sigma: float = float("nan"),
    w_norms=None,
    u_norms=None,
) -> PerturbationTrial:
    """Measure the worst dataset output change and compare to the closed form.

    holds is the l2 comparison with 1e-9 absolute slack; it is only a
    correctness claim when every admissibility flag is true.  Precomputed
    per-layer spectral norms can be passed in to avoid recomputation.
    """
    w_norms, u_norms, flags = admissibility_flags(net, pert, w_norms, u_norms)
    bound = lemma2_bound(net, pert, data.radius, w_norms, u_norms)
    base = batch_scores(net, data.inputs)
    moved = batch_scores(apply_perturbation(net, pert), data.inputs)
    diff = moved - base
    observed_l2 = float(np.max(np.sqrt(np.sum(diff * diff, axis=1))))
    observed_linf = float(np.max(np.abs(diff)))
    return PerturbationTrial(
        sigma=sigma,
        w_spectral=tuple(w_norms),
        u_spectral=tuple(u_norms),
        admissible=tuple(flags),
        observed_l2=observed_l2,
        observed_linf=observed_linf,
        bound=bound,
        holds=bool(observed_l2 <= bound + SLACK),
    )


def recursion_check(net: ReluNetwork, pert: Perturbation, x, w_norms=None, u_norms=None) -> list:
    """Per-layer output changes against the one-step recursion

        delta_{i+1} <= delta_i (|W_{i+1}|_2 + |U_{i+1}|_2) + |U_{i+1}|_2 |f^i(x)|_2

    (delta_0 = 0, f^0(x) = x) and against the closed induction bound

        delta_i <= (1 + 1/d)^i (prod_{j<=i} |W_j|_2) |x|_2 sum_{j<=i} |U_j|_2/|W_j|_2.

    The closed bound is only guaranteed for admissible perturbations; both
    are evaluated unconditionally.  Precomputed per-layer spectral norms can
    be passed in to avoid recomputation.
    """
    w_norms, u_norms, _ = admissibility_flags(net, pert, w_norms, u_norms)
    for i, w in enumerate(w_norms):
        if w <= 0.0:
            raise ValueError(f"layer {i} has zero spectral norm; ratios are undefined")
    outs_base = layer_outputs(net, x)
    outs_moved = layer_outputs(apply_perturbation(net, pert), x)
    x_norm = float(np.linalg.norm(np.asarray(x, dtype=np.float64)))
    d = net.depth
    steps = []
    delta_prev = 0.0
    prev_norm = x_norm
    w_prod = 1.0
    ratio_sum = 0.0
    for i in range(d):
        delta = float(np.linalg.norm(outs_moved[i] - outs_base[i]))
        step_bound = delta_prev * (w_norms[i] + u_norms[i]) + u_norms[i] * prev_norm
        w_prod *= w_norms[i]
        ratio_sum += u_norms[i] / w_norms[i]
        closed = (1.0 + 1.0 / d) ** (i + 1) * w_prod * x_norm * ratio_sum
        steps.append(
            RecursionStep(
                layer=i,
                delta=delta,
                step_bound=step_bound,
                step_holds=bool(delta <= step_bound + SLACK),
                closed_bound=closed,
                closed_holds=bool(delta <= closed + SLACK),
            )
        )
        delta_prev = delta
        prev_norm = float(np.linalg.norm(outs_base[i]))
    return steps


def sample_perturbation(net: ReluNetwork, sigma: float, seed: int, mode: str = "raw"):
    """Per-layer i.i.d. Gaussian perturbation; clipped mode rescales any
    too-large layer down to exactly |W_i|_2/d.

    Layer i draws from a stream keyed by (seed, i), so layer samples are
    independent of each other and of how many layers exist.  Returns
    (Perturbation, per-layer rescale factors); factors are 1.0 where no
    clipping happened.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if mode not in PERTURBATION_MODES:
        raise ValueError(f"mode must be one of {PERTURBATION_MODES}, got {mode!r}")
    mats = []
    factors = []
    for i, w in enumerate(net.layers):
        u = gaussian_matrix(w.shape[0], w.shape[1], sigma, derive_seed(seed, i))
        factor = 1.0
        if mode == "clipped" and sigma > 0:
            u_norm = spectral_norm(u)
            cap = spectral_norm(w) / net.depth
            if u_norm > cap:
                factor = cap / u_norm if u_norm > 0 else 0.0
                u = factor * u
        mats.append(u)
        factors.append(factor)
    return Perturbation(tuple(mats)), factors


def spectral_tail_check(h: int, sigma: float, t_grid, trials: int, seed: int) -> list:
    """Sample h-by-h Gaussian matrices and compare spectral-norm tail
    frequencies to 2h exp(-t^2 / (2 h sigma^2)) at each threshold.

    ok allows 3 binomial standard errors of headroom; the bound itself is
    reported uncapped even when vacuous (> 1).
    """
    if h < 1:
        raise ValueError(f"h must be positive, got {h}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if trials < 100:
        raise ValueError(f"need at least 100 trials for a meaningful tail estimate, got {trials}")
    norms = np.empty(trials)
    for t in range(trials):
        norms[t] = spectral_norm(gaussian_matrix(h, h, sigma, derive_seed(seed, t)))
    points = []
    for t in np.asarray(t_grid, dtype=np.float64):
        if t < 0:
            raise ValueError(f"thresholds must be nonnegative, got {t}")
        freq = float(np.mean(norms > t))
        bound = 2.0 * h * math.exp(-(t * t) / (2.0 * h * sigma * sigma))
        stderr = math.sqrt(freq * (1.0 - freq) / trials)
        points.append(
            TailPoint(
                t=float(t),
                frequency=freq,
                bound=bound,
                stderr=stderr,
                ok=bool(freq <= bound + 3.0 * stderr + SLACK),
            )
        )
    return points


def theorem_sigma(gamma: float, B: float, d: int, h: int, beta_tilde: float) -> float:
    """The prescribed perturbation scale gamma / (42 d B bt^(d-1) sqrt(h ln(4h)))."""
    for name, v in (("gamma", gamma), ("B", B), ("d", d), ("h", h), ("beta_tilde", beta_tilde)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return gamma / (42.0 * d * B * beta_tilde ** (d - 1) * math.sqrt(h * math.log(4.0 * h)))


def kl_gaussian(net: ReluNetwork, sigma: float) -> float:
    """KL between N(w, sigma^2 I) and N(0, sigma^2 I): |w|^2 / (2 sigma^2)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return weight_norm_sq(net) / (2.0 * sigma * sigma)


def mc_pacbayes(
    net: ReluNetwork,
    data: LabeledDataset,
    gamma: float,
    sigma: float,
    trials: int,
    seed: int,
    delta: float = 0.05,
) -> PacBayesEstimate:
    """Monte-Carlo evaluation of the PAC-Bayes ingredients at a fixed sigma.

    Samples raw Gaussian perturbations (trial t uses stream (seed, t)),
    estimates the mean perturbed margin loss at gamma/2 and the survival
    probability P[max dataset output change in sup norm < gamma/4], and
    assembles margin loss + 4 sqrt((KL + ln(6m/delta)) / (m-1)).

    The survival max runs over the dataset, a stated proxy for the max over
    the whole radius-B input domain.  sigma = 0 degenerates to KL = +inf
    (or 0 for an all-zero network) and an unperturbed estimate.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if data.size < 2:
        raise ValueError(f"need at least 2 samples, got {data.size}")
    base_scores = batch_scores(net, data.inputs)
    base_gamma = margin_loss(net, data, gamma)
    base_zero = margin_loss(net, data, 0.0)
    records = []
    losses = np.empty(trials)
    survived = np.empty(trials, dtype=bool)
    for t in range(trials):
        pert, _ = sample_perturbation(net, sigma, derive_seed(seed, t), "raw")
        moved = apply_perturbation(net, pert)
        losses[t] = margin_loss(moved, data, gamma / 2.0)
        max_linf = float(np.max(np.abs(batch_scores(moved, data.inputs) - base_scores)))
        survived[t] = max_linf < gamma / 4.0
        records.append(
            {
                "perturbed_loss": float(losses[t]),
                "max_change_linf": max_linf,
                "survived": bool(survived[t]),
            }
        )
    survival = float(np.mean(survived))
    stderr = math.sqrt(survival * (1.0 - survival) / trials)
    if sigma > 0:
        kl = kl_gaussian(net, sigma)
    else:
        kl = math.inf if weight_norm_sq(net) > 0 else 0.0
    m = data.size
    if math.isinf(kl):
        bound = math.inf
    else:
        bound = base_gamma + 4.0 * math.sqrt((kl + math.log(6.0 * m / delta)) / (m - 1))
    return PacBayesEstimate(
        sigma=sigma,
        gamma=gamma,
        delta=delta,
        trials=trials,
        base_margin_loss=base_gamma,
        base_zero_loss=base_zero,
        mean_perturbed_loss=float(np.mean(losses)),
        survival=survival,
        survival_stderr=stderr,
        kl=kl,
        bound=bound,
        survival_ok=bool(survival >= 0.5),
        per_trial=tuple(records),
    )

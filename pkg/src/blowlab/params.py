"""Constants of the construction: validation, derived quantities, config I/O.

Every other module receives a validated ``Parameters`` instance; nothing
else in the package re-checks the inequalities.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

__all__ = [
    "Parameters",
    "DerivedConstants",
    "ParameterError",
    "validate_parameters",
    "derive_constants",
    "default_eps",
    "read_config",
    "parse_config_text",
    "params_from_config",
    "params_hash",
]

CONFIG_KEYS = ("p", "q", "mu", "dim", "beta", "eps1", "alpha", "eps",
               "k0", "a_const", "s0")


class ParameterError(ValueError):
    """Raised when a parameter set violates one of the admissibility
    inequalities; the message names every violated inequality."""


@dataclass(frozen=True)
class Parameters:
    p: float            # nonlinearity exponent
    q: float            # nonlocal exponent
    mu: float           # perturbation strength
    dim: int = 1        # space dimension, fixed to 1 here
    beta: float = 0.4   # weight exponent of the W^{1,inf}_beta norm
    eps1: float = 0.25  # sharpness parameter in (0, 1/2]
    alpha: float = 0.4  # gradient-profile exponent in (0, 1/2)
    eps: float | None = None   # profile-cutoff exponent; autofilled if None
    k0: float = 2.0     # blow-up-region width
    a_const: float = 20.0      # trap amplitude
    s0: float = 20.0    # initial similarity time, s0 = -log T
    t_blowup: float | None = None  # prescribed blow-up time, e^{-s0}

    @property
    def T(self) -> float:
        return self.t_blowup if self.t_blowup is not None else math.exp(-self.s0)


@dataclass(frozen=True)
class DerivedConstants:
    gamma: float    # decay rate of the nonlocal prefactor e^{-gamma*s}
    kappa: float    # constant-in-space steady state (p-1)^{-1/(p-1)}
    b_coeff: float  # profile curvature (p-1)^2 / (4p)


def default_eps(beta: float, eps1: float) -> float:
    """Half the admissible upper limit; beta = 0 caps the limit at 1."""
    if beta > 0.0:
        return 0.5 * min(1.0, eps1 / beta)
    return 0.5


def validate_parameters(raw: Parameters) -> Parameters:
    """Check every admissibility inequality; fill eps and t_blowup defaults.

    Returns an equivalent Parameters object (idempotent on accepted sets).
    Raises ParameterError naming each violated inequality.
    """
    errors = []
    p, q, mu, n = raw.p, raw.q, raw.mu, raw.dim

    if n != 1:
        errors.append("dim must equal 1 (this artifact fixes N = 1)")
    if not p > 3.0:
        errors.append("p must exceed 3")
    q_lo = 0.5 * n * (p - 1.0) + 1.0
    q_hi = 0.5 * n * (p - 1.0) + 0.5 * (p + 1.0)
    if not (q_lo < q < q_hi):
        errors.append(
            f"q must satisfy N(p-1)/2 + 1 < q < N(p-1)/2 + (p+1)/2 "
            f"(here {q_lo:g} < q < {q_hi:g})")

    beta_hi = 2.0 / (p - 1.0) if p > 1.0 else math.inf
    if mu == 0.0:
        if not (0.0 <= raw.beta < beta_hi):
            errors.append("beta must satisfy 0 <= beta < 2/(p-1) when mu = 0")
    else:
        beta_lo = n / (q - 1.0) if q > 1.0 else math.inf
        if not (beta_lo < raw.beta < beta_hi):
            errors.append(
                "beta must satisfy N/(q-1) < beta < 2/(p-1) when mu != 0")

    if not (0.0 < raw.eps1 <= 0.5):
        errors.append("eps1 must lie in (0, 1/2]")
    if not (0.0 < raw.alpha < 0.5):
        errors.append("alpha must lie in (0, 1/2)")

    eps = raw.eps
    if eps is None and not errors:
        eps = default_eps(raw.beta, raw.eps1)
    if eps is not None:
        eps_hi = min(1.0, raw.eps1 / raw.beta) if raw.beta > 0 else 1.0
        if not (0.0 < eps < eps_hi):
            errors.append(
                "eps must satisfy 0 < eps < min(1, eps1/beta)"
                if raw.beta > 0 else "eps must lie in (0, 1) when beta = 0")

    if not raw.k0 >= 1.0:
        errors.append("k0 must satisfy K0 >= 1")
    if not raw.a_const >= 1.0:
        errors.append("a_const must satisfy A >= 1")
    if not raw.s0 > 1.0:
        errors.append("s0 must exceed 1")

    t = raw.t_blowup
    if t is not None:
        if not t > 0.0:
            errors.append("t_blowup must be positive")
        elif abs(raw.s0 + math.log(t)) > 1e-9 * max(1.0, raw.s0):
            errors.append("t_blowup and s0 disagree (require T = exp(-s0))")
    elif not errors:
        t = math.exp(-raw.s0)

    if errors:
        raise ParameterError("; ".join(errors))
    return replace(raw, eps=eps, t_blowup=t)


def derive_constants(params: Parameters) -> DerivedConstants:
    p, q, n = params.p, params.q, params.dim
    gamma = (p - q) / (p - 1.0) + 0.5 * (n - 1.0)
    kappa = (p - 1.0) ** (-1.0 / (p - 1.0))
    b = (p - 1.0) ** 2 / (4.0 * p)
    return DerivedConstants(gamma=gamma, kappa=kappa, b_coeff=b)


# -- flat key=value configuration files --------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse 'key = value' lines; '#' starts a comment; blank lines skipped."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParameterError(f"line {lineno}: expected key=value, got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        out[key] = value
    return out


def read_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def params_from_config(entries: dict) -> Parameters:
    """Build and validate Parameters from a parsed config mapping.

    Accepts either s0 or t_blowup (they determine each other); unrelated
    keys (solver settings) are ignored so one file can hold a whole run.
    """
    kwargs: dict = {}
    for key in CONFIG_KEYS:
        if key in entries:
            kwargs[key] = int(entries[key]) if key == "dim" else float(entries[key])
    if "t_blowup" in entries:
        kwargs["t_blowup"] = float(entries["t_blowup"])
        kwargs.setdefault("s0", -math.log(kwargs["t_blowup"]))
    missing = [k for k in ("p", "q", "mu") if k not in kwargs]
    if missing:
        raise ParameterError(f"config missing required keys: {', '.join(missing)}")
    return validate_parameters(Parameters(**kwargs))


def params_hash(params: Parameters) -> str:
    """Stable short hash of a validated parameter set, for provenance lines."""
    canon = ",".join(f"{k}={getattr(params, k)!r}" for k in
                     CONFIG_KEYS + ("t_blowup",))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]

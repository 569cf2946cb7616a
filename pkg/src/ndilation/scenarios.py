"""Scenario configs, the verification suites, and the builtin fixtures.

A scenario is a JSON object::

    {"name": "dft-2-2",
     "channel": {"type": "dft", "n": 2, "m": 2},
     "N": 4,
     "suites": ["validate", "factorize", "dilate", "gns", "bridge"],
     "tol": null, "seed": 0, "bridge_N": 2}

``channel.type`` is one of ``dft``, ``random_unitary``, ``schur``, ``kraus``,
``depolarizing``. Matrices are nested ``[re, im]`` arrays; real matrices
may also be given as plain nested numbers.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebra import (
    algebra_from_json,
    full_algebra,
    matrix_tol,
    random_element,
    trace,
)
from .channel import Channel, ChannelError, apply, choi_distance, make_channel
from .dilation import (
    DimensionCapExceeded,
    build_n_dilation,
    commute_identity_check,
    phi_N,
    phi_N_nested,
    verify_n_dilation,
)
from .factorization import (
    CorrelationError,
    FactorizationError,
    UnitaryFactorization,
    depolarizing_pauli,
    depolarizing_swap,
    dft_channel,
    factorization_from_unitary,
    random_unitary_channel,
    rank_one_hull_member,
    real_correlation_factorization,
    schur_channel,
    verify_one_dilation,
)
from .gns import (
    check_conjugation_commutes,
    classify,
    defect_indices,
    kernel_selfadjointness_check,
    multiplicative_domain,
    representing_matrix,
    stable_multiplicative_domain,
    unital_subalgebra_dims,
)
from .randomness import haar_unitary
from .unitary_dilation import bridge_check

SUITES = ("validate", "factorize", "dilate", "gns", "bridge")
PREREQUISITE = {"factorize": "validate", "dilate": "factorize", "gns": "validate", "bridge": "dilate"}
CHANNEL_TYPES = ("dft", "random_unitary", "schur", "kraus", "depolarizing")
RANDOM_SAMPLES = 5


class ConfigError(ValueError):
    def __init__(self, location: str, message: str):
        super().__init__(f"CONFIG_ERROR at {location}: {message}")
        self.location = location


@dataclass
class Scenario:
    name: str
    channel_config: dict
    N: int = 1
    suites: tuple[str, ...] = SUITES
    tol: float | None = None
    seed: int = 0
    bridge_N: int | None = None
    raw: dict = field(default_factory=dict, repr=False)


def _matrix(data, location: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(location, f"not a numeric matrix ({exc})") from None
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ConfigError(location, f"expected a matrix, got array of shape {arr.shape}")


def parse_scenario(cfg: dict, where: str = "$") -> Scenario:
    if not isinstance(cfg, dict):
        raise ConfigError(where, "scenario must be an object")
    chan = cfg.get("channel")
    if not isinstance(chan, dict):
        raise ConfigError(f"{where}.channel", "missing channel object")
    ctype = chan.get("type")
    if ctype not in CHANNEL_TYPES:
        raise ConfigError(f"{where}.channel.type", f"must be one of {CHANNEL_TYPES}, got {ctype!r}")
    suites = tuple(cfg.get("suites", SUITES))
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"{where}.suites", f"unknown suites {bad}")
    N = cfg.get("N", 1)
    if not isinstance(N, int) or N < 1:
        if "dilate" in suites or "bridge" in suites:
            raise ConfigError(f"{where}.N", "N must be a positive integer when dilate is requested")
        N = 1
    tol = cfg.get("tol")
    if tol is not None and not (isinstance(tol, (int, float)) and tol > 0):
        raise ConfigError(f"{where}.tol", "tol must be a positive number")
    bridge_N = cfg.get("bridge_N")
    if bridge_N is not None and (not isinstance(bridge_N, int) or not 1 <= bridge_N):
        raise ConfigError(f"{where}.bridge_N", "bridge_N must be a positive integer")
    ordered = tuple(s for s in SUITES if s in suites)
    return Scenario(cfg.get("name", ctype), chan, N, ordered, tol,
                    int(cfg.get("seed", 0)), bridge_N, cfg)


def load_scenarios(cfg: Any) -> list[Scenario]:
    if isinstance(cfg, dict) and "scenarios" in cfg:
        items = cfg["scenarios"]
        if not isinstance(items, list):
            raise ConfigError("$.scenarios", "must be a list")
        return [parse_scenario(c, f"$.scenarios[{i}]") for i, c in enumerate(items)]
    if isinstance(cfg, list):
        return [parse_scenario(c, f"$[{i}]") for i, c in enumerate(cfg)]
    return [parse_scenario(cfg)]


@dataclass
class Case:
    channel: Channel
    factorization: UnitaryFactorization | None
    details: dict = field(default_factory=dict)
    factorization_error: str | None = None


def build_case(chan: dict, rng: np.random.Generator) -> Case:
    """Channel and (when one is available) a unitary factorization for a channel config."""
    ctype = chan["type"]
    loc = "$.channel"
    try:
        if ctype == "dft":
            fact = dft_channel(int(chan["n"]), int(chan["m"]))
            return Case(fact.channel, fact)
        if ctype == "depolarizing":
            n = int(chan.get("n", 2))
            how = chan.get("factorization", "swap")
            if how == "swap":
                fact = depolarizing_swap(n)
            elif how == "pauli":
                fact = depolarizing_pauli(n)
            else:
                raise ConfigError(f"{loc}.factorization", f"unknown factorization {how!r}")
            return Case(fact.channel, fact)
        if ctype == "random_unitary":
            probs = chan.get("probs")
            if "unitaries" in chan:
                us = [_matrix(u, f"{loc}.unitaries[{i}]") for i, u in enumerate(chan["unitaries"])]
            elif "haar" in chan:
                us = [haar_unitary(int(chan["dim"]), rng) for _ in range(int(chan["haar"]))]
            else:
                raise ConfigError(loc, "random_unitary needs 'unitaries' or 'haar' + 'dim'")
            if probs is None:
                probs = [1.0 / len(us)] * len(us)
            fact = random_unitary_channel(us, probs)
            return Case(fact.channel, fact)
        if ctype == "schur":
            C = _matrix(chan["C"], f"{loc}.C")
            ch = schur_channel(C)
            if np.max(np.abs(C.imag)) <= 1e-12:
                cf = real_correlation_factorization(C.real)
                return Case(ch, cf.factorization, {"clifford_pairing_residual": cf.pairing_residual(C.real),
                                                   "clifford_rank": int(cf.gram.shape[0])})
            fact = rank_one_hull_member(C)
            if fact is None:
                return Case(ch, None, factorization_error="no factorization known: complex correlation of rank > 1")
            return Case(ch, fact)
        if ctype == "kraus":
            alg = algebra_from_json(chan["algebra"]) if "algebra" in chan else full_algebra(int(chan["n"]))
            kraus = [_matrix(k, f"{loc}.kraus[{i}]") for i, k in enumerate(chan["kraus"])]
            ch = make_channel(alg, kraus)
            if "unitary" not in chan:
                return Case(ch, None, factorization_error="no unitary supplied for a kraus channel")
            env = algebra_from_json(chan["environment"])
            fact = factorization_from_unitary(_matrix(chan["unitary"], f"{loc}.unitary"), alg, env)
            return Case(ch, fact)
    except KeyError as exc:
        raise ConfigError(loc, f"missing key {exc}") from None
    raise ConfigError(f"{loc}.type", f"unsupported type {ctype!r}")


# ---------------------------------------------------------------------------
# suites


def _validate(case: Case, sc: Scenario, rng) -> dict:
    rep = case.channel.report
    dom = case.channel.domain
    tp_scalar = 0.0
    for _ in range(RANDOM_SAMPLES):
        X = random_element(dom, rng)
        tp_scalar = max(tp_scalar, abs(trace(dom, apply(case.channel, X)) - trace(dom, X)))
    ok = rep.valid and tp_scalar <= 1e-10
    return {"pass": ok, "unital_residual": rep.unital_residual, "tp_residual": rep.tp_residual,
            "min_choi_eigenvalue": rep.min_choi_eigenvalue, "trace_scalar_residual": tp_scalar,
            "num_kraus": case.channel.num_kraus, "domain": dom.to_json()}


def _factorize(case: Case, sc: Scenario, rng) -> dict:
    fact = case.factorization
    if fact is None:
        return {"pass": False, "error": case.factorization_error}
    rep = verify_one_dilation(fact, tol=sc.tol)
    choi = choi_distance(fact.channel, case.channel)
    choi_tol = sc.tol if sc.tol is not None else matrix_tol(fact.system.concrete_dim ** 2)
    out = {"pass": rep.passed and choi <= choi_tol, "max_residual": rep.max_residual,
           "expectation_residual": rep.expectation_residual, "choi_residual": choi,
           "environment": fact.environment.to_json(), "num_kraus": fact.channel.num_kraus}
    out.update(case.details)
    return out


def _dilate(case: Case, sc: Scenario, rng) -> dict:
    dil = build_n_dilation(case.factorization, sc.N)
    rep = verify_n_dilation(dil, tol=sc.tol)
    nested = 0.0
    for _ in range(RANDOM_SAMPLES):
        X = random_element(dil.big_algebra, rng)
        nested = max(nested, (phi_N(dil, X) - phi_N_nested(dil, X)).norm())
    commute = commute_identity_check(case.factorization.system, case.factorization.environment,
                                     case.factorization.channel, rng, RANDOM_SAMPLES)
    tol = rep.tol
    out = rep.to_json()
    out.update({"pass": rep.passed and nested <= tol and commute <= tol,
                "phi_nested_residual": nested, "commute_residual": commute,
                "big_algebra_concrete_dim": dil.concrete_dim,
                "big_algebra_blocks": dil.big_algebra.num_blocks})
    return out


def _gns(case: Case, sc: Scenario, rng) -> dict:
    ch = case.channel
    T = representing_matrix(ch)
    out: dict[str, Any] = {}
    kron_res = None
    if ch.domain.is_full:
        kron_res = float(np.max(np.abs(T.matrix - representing_matrix(ch, "kronecker").matrix)))
    smax = float(np.linalg.svd(T.matrix, compute_uv=False).max())
    conj = check_conjugation_commutes(T)
    md = multiplicative_domain(ch)
    sd = stable_multiplicative_domain(ch, strict=False)
    kc = kernel_selfadjointness_check(ch)
    ker, coker = defect_indices(T)
    out.update({
        "classification": classify(T).value,
        "sigma_max": smax,
        "kronecker_vs_columns": kron_res,
        "conjugation_residual": conj,
        "mult_dim": md.dim, "mult_angle": md.max_angle, "mult_closure_residual": md.closure_residual,
        "stable_mult_dim": sd.dim, "stable_converged": sd.converged,
        "stable_closed_form_dim": int(sd.closed_form.shape[1]), "stable_closed_form_agrees": sd.agrees,
        "defect_indices": [ker, coker],
        "kernel_selfadjoint": kc.passed,
        "basis": T.metadata(),
    })
    if ch.domain.is_full:
        out["defect_is_subalgebra_dim"] = ker in unital_subalgebra_dims(ch.domain.dims[0])
    ok = (smax <= 1 + 1e-12 and conj <= 1e-10 and md.closure_residual <= 1e-8
          and kc.passed and sd.converged and (kron_res is None or kron_res <= 1e-12))
    out["pass"] = bool(ok)
    return out


def _bridge(case: Case, sc: Scenario, rng) -> dict:
    N = sc.bridge_N if sc.bridge_N is not None else sc.N
    dil = build_n_dilation(case.factorization, N)
    rep = bridge_check(dil, tol=sc.tol)
    return {"pass": rep.passed, "N": N, "residuals": list(rep.residuals),
            "alpha_unitarity": rep.alpha_unitarity, "projection_residual": rep.projection_residual,
            "gns_dim": dil.big_algebra.gns_dim}


SUITE_FUNCS = {"validate": _validate, "factorize": _factorize, "dilate": _dilate,
               "gns": _gns, "bridge": _bridge}

KNOWN_ERRORS = (ChannelError, FactorizationError, CorrelationError, DimensionCapExceeded,
                ValueError, RuntimeError, np.linalg.LinAlgError)


def run_scenario(sc: Scenario | dict) -> dict:
    """Run the requested suites in order; a suite whose prerequisite did not pass is SKIPPED."""
    if isinstance(sc, dict):
        sc = parse_scenario(sc)
    rng = np.random.default_rng(sc.seed)
    report: dict[str, Any] = {"scenario": sc.name, "seed": sc.seed, "N": sc.N, "suites": {}}
    try:
        case = build_case(sc.channel_config, rng)
    except ConfigError:
        raise
    except KNOWN_ERRORS as exc:
        for s in sc.suites:
            report["suites"][s] = {"status": "ERROR" if s == sc.suites[0] else "SKIPPED",
                                   "error": str(exc)}
        report["overall_pass"] = False
        return report
    status: dict[str, str] = {}
    for name in sc.suites:
        pre = PREREQUISITE.get(name)
        # a prerequisite that was not requested is treated as satisfied
        if pre in status and status[pre] != "PASS":
            report["suites"][name] = {"status": "SKIPPED", "reason": f"{pre} did not pass"}
            status[name] = "SKIPPED"
            continue
        if pre == "factorize" and case.factorization is None or name == "bridge" and case.factorization is None:
            report["suites"][name] = {"status": "SKIPPED", "reason": "no factorization"}
            status[name] = "SKIPPED"
            continue
        t0 = time.perf_counter()
        try:
            result = SUITE_FUNCS[name](case, sc, rng)
            result["status"] = "PASS" if result.pop("pass") else "FAIL"
        except KNOWN_ERRORS as exc:
            result = {"status": "ERROR", "error": str(exc)}
        result["timing_s"] = time.perf_counter() - t0
        report["suites"][name] = result
        status[name] = result["status"]
    report["overall_pass"] = all(v == "PASS" for v in status.values())
    return report


# ---------------------------------------------------------------------------
# builtin fixtures

_PAULI = [
    [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
    [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
    [[[0, 0], [0, -1]], [[0, 1], [0, 0]]],
    [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
]


def _identity_fixture() -> dict:
    I2 = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    # a one-dimensional environment keeps the Kraus set {I}, so every residual is exactly 0
    return {"type": "kraus", "algebra": {"blocks": [{"dim": 2, "weight": 1.0}]}, "kraus": [I2],
            "unitary": I2, "environment": {"blocks": [{"dim": 1, "weight": 1.0}]}}


def builtin_fixtures() -> list[dict]:
    return [
        {"name": "depolarizing-swap", "channel": {"type": "depolarizing", "n": 2, "factorization": "swap"},
         "N": 3, "bridge_N": 2},
        {"name": "depolarizing-pauli", "channel": {"type": "depolarizing", "n": 2, "factorization": "pauli"},
         "N": 3, "bridge_N": 2},
        {"name": "dft-2-2", "channel": {"type": "dft", "n": 2, "m": 2}, "N": 4, "bridge_N": 2},
        {"name": "dft-2-3", "channel": {"type": "dft", "n": 2, "m": 3}, "N": 3, "bridge_N": 2},
        {"name": "random-unitary-pauli",
         "channel": {"type": "random_unitary", "unitaries": _PAULI, "probs": [0.25] * 4},
         "N": 3, "bridge_N": 2},
        {"name": "random-unitary-haar",
         "channel": {"type": "random_unitary", "haar": 3, "dim": 2, "probs": [0.2, 0.3, 0.5]},
         "N": 4, "bridge_N": 2, "seed": 7},
        {"name": "schur-real-2", "channel": {"type": "schur", "C": [[1.0, 0.5], [0.5, 1.0]]},
         "N": 3, "bridge_N": 2},
        {"name": "schur-dephasing", "channel": {"type": "schur", "C": [[1.0, 0.0], [0.0, 1.0]]},
         "N": 3, "bridge_N": 2},
        {"name": "identity", "channel": _identity_fixture(), "N": 3, "bridge_N": 2},
    ]


def fixture(name: str) -> dict:
    for f in builtin_fixtures():
        if f["name"] == name:
            return f
    raise KeyError(name)

"""Scenario configuration files and the deterministic run / converge /
compare-dirac drivers behind the CLI.

Configs are strict JSON: unknown keys are fatal and every violation is
reported, not just the first.  CSV output is byte-stable across runs (17
significant digits, '.' decimal separator, '\\n' line endings); together
with the eigenvector sign convention this makes identical configs produce
identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dirac as dirac_mod
from .core import Grid, HamiltonianSpec, PotentialSpec, ScaleProfile, WaveFunction, inner_product
from .eigensolver import EigenBasis, discretize, eigendecompose
from .projection import EvolutionResult, build_schedule, evolve, project, stepwise_hamiltonian

__all__ = [
    "ScenarioConfig",
    "ScenarioError",
    "EngineError",
    "RunSummary",
    "parse_scenario",
    "run_scenario",
    "converge_scenario",
    "compare_dirac_scenario",
    "bundled_scenario_path",
]

DEFAULT_GRID = {"x_min": -12.0, "x_max": 12.0, "points": 1024}
DEFAULT_UNITS = {"hbar": 1.0, "mass": 1.0}
DEFAULT_TRUNCATION = 64
EMIT_CHOICES = ("energy", "coefficients", "summary")


class ScenarioError(ValueError):
    """Invalid scenario configuration; carries the full violation list."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class EngineError(RuntimeError):
    """A run failed after validation (solver or I/O trouble)."""


@dataclass(frozen=True)
class ScenarioConfig:
    raw: dict
    grid: Grid
    hamiltonian: HamiltonianSpec
    profile: ScaleProfile
    t0: float
    t1: float
    slices: int
    averaging: str
    truncation: int | None
    eigenstate: int | None
    amplitude_file: str | None
    out_dir: str
    emit: tuple[str, ...]
    reference: bool
    dirac: dict | None

    @property
    def scenario_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class RunSummary:
    scenario_hash: str
    final_energy_ratio: float
    final_norm: float
    final_coefficients: np.ndarray
    phase_vs_reference: float | None
    wall_time_s: float


def _check_keys(section: dict, allowed: set[str], where: str, errors: list[str]):
    for key in section:
        if key not in allowed:
            errors.append("%s: unknown key %r" % (where, key))


def _num(section, key, where, errors, default=None, positive=False, integer=False):
    if key not in section:
        if default is None:
            errors.append("%s: missing required key %r" % (where, key))
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append("%s.%s: expected a number" % (where, key))
        return default
    if integer and int(val) != val:
        errors.append("%s.%s: expected an integer" % (where, key))
        return default
    if positive and not val > 0:
        errors.append("%s.%s: must be > 0" % (where, key))
        return default
    return int(val) if integer else float(val)


def _parse_profile(section: dict, errors: list[str]) -> ScaleProfile:
    fallback = ScaleProfile.constant()
    if not isinstance(section, dict):
        errors.append("potential.scale: expected an object")
        return fallback
    kind = section.get("kind")
    if kind == "constant":
        _check_keys(section, {"kind", "value"}, "potential.scale", errors)
        value = _num(section, "value", "potential.scale", errors, default=1.0, positive=True)
        return ScaleProfile.constant(value if value else 1.0)
    if kind == "step":
        _check_keys(section, {"kind", "eta", "t_on"}, "potential.scale", errors)
        eta = _num(section, "eta", "potential.scale", errors, positive=True)
        t_on = _num(section, "t_on", "potential.scale", errors, default=0.0)
        return ScaleProfile.step(eta, t_on) if eta else fallback
    if kind == "pulse":
        _check_keys(section, {"kind", "eta", "t_on", "t_off"}, "potential.scale", errors)
        eta = _num(section, "eta", "potential.scale", errors, positive=True)
        t_on = _num(section, "t_on", "potential.scale", errors)
        t_off = _num(section, "t_off", "potential.scale", errors)
        if eta and t_on is not None and t_off is not None and t_on < t_off:
            return ScaleProfile.pulse(eta, t_on, t_off)
        if t_on is not None and t_off is not None and not t_on < t_off:
            errors.append("potential.scale: pulse requires t_on < t_off")
        return fallback
    if kind == "sampled":
        _check_keys(section, {"kind", "times", "values"}, "potential.scale", errors)
        times = section.get("times")
        values = section.get("values")
        try:
            return ScaleProfile.sampled(times, values)
        except (ValueError, TypeError) as exc:
            errors.append("potential.scale: %s" % exc)
            return fallback
    errors.append("potential.scale.kind: must be one of constant/step/pulse/sampled")
    return fallback


def _parse_potential(section: Any, errors: list[str]) -> tuple[PotentialSpec, ScaleProfile]:
    constant = ScaleProfile.constant()
    fallback = (PotentialSpec.harmonic(1.0), constant)
    if not isinstance(section, dict):
        errors.append("potential: expected an object")
        return fallback
    kind = section.get("kind")
    if kind == "harmonic":
        _check_keys(section, {"kind", "k"}, "potential", errors)
        k = _num(section, "k", "potential", errors, default=1.0, positive=True)
        return (PotentialSpec.harmonic(k), constant) if k else fallback
    if kind == "scaled_harmonic":
        _check_keys(section, {"kind", "k", "scale"}, "potential", errors)
        k = _num(section, "k", "potential", errors, default=1.0, positive=True)
        profile = _parse_profile(section.get("scale", {"kind": "constant"}), errors)
        if k:
            return PotentialSpec.scaled_harmonic(k, profile), profile
        return fallback
    if kind == "tabulated":
        _check_keys(section, {"kind", "x_samples", "t_samples", "v_samples"},
                    "potential", errors)
        try:
            pot = PotentialSpec.tabulated(section.get("x_samples"),
                                          section.get("t_samples"),
                                          section.get("v_samples"))
            return pot, constant
        except (ValueError, TypeError) as exc:
            errors.append("potential: %s" % exc)
            return fallback
    errors.append("potential.kind: must be one of harmonic/scaled_harmonic/tabulated")
    return fallback


def parse_scenario(path: str) -> ScenarioConfig:
    """Load and validate a scenario file; raises ScenarioError listing every
    violation found."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(["not valid JSON: %s" % exc])
    if not isinstance(raw, dict):
        raise ScenarioError(["top level must be a JSON object"])

    errors: list[str] = []
    _check_keys(raw, {"grid", "units", "potential", "schedule", "basis",
                      "initial_state", "outputs", "reference", "dirac"},
                "top level", errors)

    grid_cfg = {**DEFAULT_GRID, **raw.get("grid", {})}
    _check_keys(raw.get("grid", {}), {"x_min", "x_max", "points"}, "grid", errors)
    x_min = _num(grid_cfg, "x_min", "grid", errors)
    x_max = _num(grid_cfg, "x_max", "grid", errors)
    points = _num(grid_cfg, "points", "grid", errors, integer=True)
    if points is not None and points < 3:
        errors.append("grid.points: must be >= 3")
    if x_min is not None and x_max is not None and not x_min < x_max:
        errors.append("grid: x_min must be < x_max")

    units_cfg = {**DEFAULT_UNITS, **raw.get("units", {})}
    _check_keys(raw.get("units", {}), {"hbar", "mass"}, "units", errors)
    hbar = _num(units_cfg, "hbar", "units", errors, positive=True)
    mass = _num(units_cfg, "mass", "units", errors, positive=True)

    potential, profile = _parse_potential(raw.get("potential"), errors)

    sched = raw.get("schedule")
    if not isinstance(sched, dict):
        errors.append("schedule: required object missing")
        sched = {}
    _check_keys(sched, {"t0", "t1", "slices", "averaging"}, "schedule", errors)
    t0 = _num(sched, "t0", "schedule", errors)
    t1 = _num(sched, "t1", "schedule", errors)
    slices = _num(sched, "slices", "schedule", errors, integer=True)
    if slices is not None and slices < 1:
        errors.append("schedule.slices: must be >= 1")
    if t0 is not None and t1 is not None and not t0 < t1:
        errors.append("schedule: t0 must be < t1")
    averaging = sched.get("averaging", "integral")
    if averaging not in ("integral", "midpoint_endpoint_mean"):
        errors.append("schedule.averaging: must be integral or midpoint_endpoint_mean")

    basis_cfg = raw.get("basis", {})
    _check_keys(basis_cfg, {"truncation"}, "basis", errors)
    truncation: int | None = DEFAULT_TRUNCATION
    if "truncation" in basis_cfg:
        if basis_cfg["truncation"] is None:
            truncation = None
        else:
            truncation = _num(basis_cfg, "truncation", "basis", errors,
                              integer=True, positive=True)

    init = raw.get("initial_state", {"eigenstate": 0})
    _check_keys(init, {"eigenstate", "amplitude_file"}, "initial_state", errors)
    eigenstate = None
    amplitude_file = None
    if "eigenstate" in init and "amplitude_file" in init:
        errors.append("initial_state: ambiguous initial state "
                      "(both eigenstate and amplitude_file given)")
    elif "amplitude_file" in init:
        amplitude_file = init["amplitude_file"]
        if not isinstance(amplitude_file, str):
            errors.append("initial_state.amplitude_file: expected a path string")
        elif not os.path.exists(os.path.join(os.path.dirname(path), amplitude_file)):
            errors.append("initial_state.amplitude_file: file not found")
        else:
            amplitude_file = os.path.join(os.path.dirname(path), amplitude_file)
    else:
        eigenstate = _num(init, "eigenstate", "initial_state", errors,
                          default=0, integer=True)
        if eigenstate is not None and eigenstate < 0:
            errors.append("initial_state.eigenstate: must be >= 0")

    outputs = raw.get("outputs", {})
    _check_keys(outputs, {"directory", "emit"}, "outputs", errors)
    out_dir = outputs.get("directory", "out")
    emit = tuple(outputs.get("emit", list(EMIT_CHOICES)))
    for item in emit:
        if item not in EMIT_CHOICES:
            errors.append("outputs.emit: unknown output %r" % item)

    reference = raw.get("reference", False)
    if not isinstance(reference, bool):
        errors.append("reference: expected true or false")
        reference = False

    dirac_cfg = raw.get("dirac")
    if dirac_cfg is not None:
        if not isinstance(dirac_cfg, dict):
            errors.append("dirac: expected an object")
            dirac_cfg = None
        else:
            _check_keys(dirac_cfg, {"states", "rk4_steps", "targets", "t1"},
                        "dirac", errors)
            _num(dirac_cfg, "states", "dirac", errors, integer=True, positive=True)
            _num(dirac_cfg, "rk4_steps", "dirac", errors, integer=True, positive=True)
            if "t1" in dirac_cfg:
                _num(dirac_cfg, "t1", "dirac", errors)
            targets = dirac_cfg.get("targets")
            if not isinstance(targets, list) or not targets or not all(
                isinstance(m, int) and not isinstance(m, bool) and m >= 0 for m in targets
            ):
                errors.append("dirac.targets: expected a non-empty list of state indices")

    if errors:
        raise ScenarioError(errors)

    return ScenarioConfig(
        raw=raw,
        grid=Grid(x_min, x_max, points),
        hamiltonian=HamiltonianSpec(mass, hbar, potential),
        profile=profile,
        t0=t0, t1=t1, slices=slices, averaging=averaging,
        truncation=truncation,
        eigenstate=eigenstate, amplitude_file=amplitude_file,
        out_dir=out_dir, emit=emit, reference=reference, dirac=dirac_cfg,
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _initial_state(config: ScenarioConfig) -> WaveFunction:
    if config.amplitude_file is not None:
        with open(config.amplitude_file, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            re_vals, im_vals = [], []
            for row in reader:
                re_vals.append(float(row["re"]))
                im_vals.append(float(row["im"]))
        amps = np.array(re_vals) + 1j * np.array(im_vals)
        return WaveFunction(config.grid, amps)
    n = config.eigenstate
    basis = eigendecompose(discretize(config.hamiltonian, config.grid, config.t0),
                           config.grid, n + 1)
    return basis.state(n)


def _reference_hamiltonian(config: ScenarioConfig) -> HamiltonianSpec:
    """Same Hamiltonian but with the scale frozen at its t0 value."""
    pot = config.hamiltonian.potential
    if pot.kind != "scaled_harmonic":
        return config.hamiltonian
    frozen = ScaleProfile.constant(config.profile(config.t0))
    return HamiltonianSpec(config.hamiltonian.mass, config.hamiltonian.hbar,
                           PotentialSpec.scaled_harmonic(pot.k, frozen))


def _energy_scale(config: ScenarioConfig) -> float:
    """E_0 used for reported energy ratios: the exact hbar omega / 2 of the
    t0-frozen oscillator for harmonic kinds, the grid ground energy
    otherwise."""
    h = config.hamiltonian
    pot = h.potential
    if pot.kind in ("harmonic", "scaled_harmonic"):
        k_eff = pot.k * (config.profile(config.t0) if pot.kind == "scaled_harmonic" else 1.0)
        return 0.5 * h.hbar * math.sqrt(k_eff / h.mass)
    basis = eigendecompose(discretize(h, config.grid, config.t0), config.grid, 1)
    return float(basis.energies[0])


def _run_evolution(config: ScenarioConfig) -> EvolutionResult:
    psi0 = _initial_state(config)
    schedule = build_schedule(config.t0, config.t1, config.slices,
                              config.profile, config.averaging)
    return evolve(psi0, config.hamiltonian, schedule, config.truncation)


def run_scenario(config: ScenarioConfig, out_dir: str | None = None) -> RunSummary:
    """Evolve the scenario and write energy.csv / coefficients.csv /
    summary.json (per the emit list).  Partial files are removed if the
    engine fails."""
    out = out_dir if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)
    written: list[str] = []
    start = time.perf_counter()
    try:
        result = _run_evolution(config)

        phase = None
        if config.reference:
            psi0 = _initial_state(config)
            schedule = build_schedule(config.t0, config.t1, config.slices,
                                      None, config.averaging)
            ref = evolve(psi0, _reference_hamiltonian(config), schedule,
                         config.truncation)
            phase = float(np.angle(inner_product(ref.final_state, result.final_state)))

        last = result.reports[-1]
        summary = RunSummary(
            scenario_hash=config.scenario_hash,
            final_energy_ratio=last.energy / _energy_scale(config),
            final_norm=last.norm_squared,
            final_coefficients=last.coefficients,
            phase_vs_reference=phase,
            wall_time_s=time.perf_counter() - start,
        )

        if "energy" in config.emit:
            path = os.path.join(out, "energy.csv")
            written.append(path)
            _write_csv(path, ["t_end", "energy", "norm"],
                       [(r.t_end, r.energy, r.norm_squared) for r in result.reports])
        if "coefficients" in config.emit:
            path = os.path.join(out, "coefficients.csv")
            written.append(path)
            rows = []
            for r in result.reports:
                for k, c in enumerate(r.coefficients):
                    rows.append((r.slice_index, k, float(c.real), float(c.imag),
                                 float(abs(c) ** 2)))
            _write_csv(path, ["slice", "k", "re", "im", "abs2"], rows)
        if "summary" in config.emit:
            path = os.path.join(out, "summary.json")
            written.append(path)
            doc = {
                "scenario_hash": summary.scenario_hash,
                "final_energy_ratio": summary.final_energy_ratio,
                "final_norm": summary.final_norm,
                "final_coefficients": [
                    [k, float(c.real), float(c.imag)]
                    for k, c in enumerate(summary.final_coefficients)
                ],
                "phase_vs_reference": summary.phase_vs_reference,
                "wall_time_s": summary.wall_time_s,
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
        return summary
    except (RuntimeError, ValueError, OSError) as exc:
        for path in written:
            if os.path.exists(path):
                os.remove(path)
        raise EngineError(str(exc)) from exc


def converge_scenario(config: ScenarioConfig, doublings: int,
                      out_dir: str | None = None) -> list[tuple[int, float]]:
    """Run the scenario at slices x {1, 2, 4, ...} and report the L2 error of
    each rung against a 4x-finer reference run; writes convergence.csv."""
    if doublings < 2:
        raise ScenarioError(["converge requires doublings >= 2"])
    out = out_dir if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)
    try:
        psi0 = _initial_state(config)
        ladder = [config.slices * 2**i for i in range(doublings + 1)]
        ref_slices = ladder[-1] * 4

        def final_state(n_slices: int) -> np.ndarray:
            schedule = build_schedule(config.t0, config.t1, n_slices,
                                      config.profile, config.averaging)
            return evolve(psi0, config.hamiltonian, schedule,
                          config.truncation).final_state.amplitudes

        ref = final_state(ref_slices)
        w = config.grid.weights
        rows = []
        errors = []
        for n_slices in ladder:
            diff = final_state(n_slices) - ref
            err = float(np.sqrt(np.sum(np.abs(diff) ** 2 * w)))
            errors.append(err)
            if len(errors) == 1:
                order = ""
            elif err == 0.0 or errors[-2] == 0.0:
                order = _fmt(0.0)
            else:
                order = _fmt(math.log2(errors[-2] / err))
            rows.append((n_slices, err, order))
        _write_csv(os.path.join(out, "convergence.csv"),
                   ["slices", "l2_error", "observed_order"], rows)
        return [(n, e) for n, e in zip(ladder, errors)]
    except (RuntimeError, ValueError, OSError) as exc:
        raise EngineError(str(exc)) from exc


def compare_dirac_scenario(config: ScenarioConfig,
                           out_dir: str | None = None) -> dirac_mod.DivergenceReport:
    """Compare multi-projection, RK4 amplitude-equation, and first-order
    amplitudes per target state; writes dirac_compare.csv, norm_history.csv
    and divergence_report.json."""
    if config.dirac is None:
        raise ScenarioError(["compare-dirac requires a 'dirac' section "
                             "(states, rk4_steps, targets)"])
    out = out_dir if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)
    try:
        n_states = int(config.dirac["states"])
        rk4_steps = int(config.dirac["rk4_steps"])
        targets = list(config.dirac["targets"])
        t_end = float(config.dirac.get("t1", config.t1))
        h = config.hamiltonian
        t0 = config.t0

        basis0 = eigendecompose(discretize(h, config.grid, t0), config.grid, n_states)
        psi0 = _initial_state(config)
        n_init = config.eigenstate if config.eigenstate is not None else 0

        # multi-projection run over the same window, projected back onto the
        # initial basis
        schedule = build_schedule(t0, t_end, config.slices, config.profile,
                                  config.averaging)
        mp_result = evolve(psi0, h, schedule, config.truncation, final_basis=basis0)
        mp_coeffs = mp_result.final_coefficients

        omegas = basis0.frequencies(h.hbar)

        def v_of_t(t: float) -> np.ndarray:
            return dirac_mod.perturbation_elements(h, basis0, t, t0)

        c0 = np.zeros(n_states, dtype=complex)
        c0[n_init] = project(psi0, basis0)[n_init]
        try:
            traj = dirac_mod.integrate_amplitudes(v_of_t, omegas, c0,
                                                  (t0, t_end), rk4_steps, h.hbar)
            rk4_final = traj.amplitudes[-1] * np.exp(-1j * omegas * (t_end - t0))
        except RuntimeError:
            # amplitude blow-up is itself a reportable outcome
            traj = None
            rk4_final = np.full(n_states, np.nan, dtype=complex)

        rows = []
        for m in targets:
            b_fo = dirac_mod.first_order_amplitude(
                lambda t, m=m: v_of_t(t)[m, n_init], n_init, m, omegas,
                t_end - t0, quadrature_steps=max(rk4_steps, 1000), hbar=h.hbar,
            ) if m != n_init else complex("nan")
            a_mp = abs(mp_coeffs[m])
            a_rk = abs(rk4_final[m])
            a_fo = abs(b_fo)
            rows.append((m, a_mp, a_rk, a_fo,
                         abs(a_mp - a_rk), abs(a_mp - a_fo), abs(a_rk - a_fo)))
        _write_csv(os.path.join(out, "dirac_compare.csv"),
                   ["m", "abs_c_multiproj", "abs_c_rk4", "abs_b_first_order",
                    "diff_mp_rk4", "diff_mp_fo", "diff_rk4_fo"], rows)

        if traj is not None:
            norms = traj.norm_history
            _write_csv(os.path.join(out, "norm_history.csv"), ["t", "norm"],
                       list(zip(traj.times.tolist(), norms.tolist())))
            report = dirac_mod.divergence_diagnostic(traj)
        else:
            report = dirac_mod.DivergenceReport(math.inf, math.inf, float(t0))
        with open(os.path.join(out, "divergence_report.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"max_norm": report.max_norm,
                       "final_norm": report.final_norm,
                       "first_exceedance_time": report.first_exceedance_time},
                      fh, indent=2)
            fh.write("\n")
        return report
    except ScenarioError:
        raise
    except (RuntimeError, ValueError, OSError, KeyError) as exc:
        raise EngineError(str(exc)) from exc


def bundled_scenario_path(name: str) -> str:
    """Filesystem path of a bundled scenario (name with or without .json)."""
    from importlib.resources import files

    if not name.endswith(".json"):
        name += ".json"
    return str(files("mpsolve").joinpath("scenarios", name))

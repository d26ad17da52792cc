"""Seeded, reproducible experiment runner.

Subcommands map onto the standard analyses: ``spectrum`` (cluster structure
across the dissipation-to-coupling ratio), ``sweep-beta`` (weak-dissipation
scaling), ``csr`` (spacing-ratio statistics with synthetic references),
``heisenberg`` (structured Hamiltonian with random dissipation), and
``density`` (self-averaging of the spectral density).

Every run requires an explicit master seed and writes CSV/JSON payloads plus
a manifest with content digests.  Identical config and seed give identical
payload bytes: floats are printed with 17 significant digits, rows are
merged in realization order regardless of worker scheduling, and nothing
timestamped enters the files.

Exit codes: 0 success, 2 configuration or analysis-input error, 3 resource
guardrail, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import ks_2samp

from . import __version__
from .ensemble import (
    STREAM_ANALYSIS,
    STREAM_HAMILTONIAN,
    STREAM_KOSSAKOWSKI,
    HamiltonianSpec,
    KossakowskiSample,
    HEISENBERG_PBC,
    RANDOM_ALL_TO_ALL,
    hamiltonian_to_json_dict,
    heisenberg_hamiltonian,
    kossakowski_to_json_dict,
    sample_kossakowski,
    sample_random_hamiltonian,
    substream,
)
from .errors import ConfigError, NumericalError, ResourceLimitError, SpectralAnalysisError
from .liouvillian import (
    BASIS_PAULI,
    MAX_SUPEROPERATOR_SITES,
    Superoperator,
    assemble,
    assemble_weak,
    build_dissipator,
    build_unitary_part,
    jump_operator_set,
    lambda0,
    pauli_basis_form,
    real_pauli_form,
    unitary_pauli_matrix,
)
from .pauli import PauliBasis
from .perturbation import degenerate_groups, predict
from .spectral import (
    FILTER_IM_POS,
    FILTER_RE_POS,
    CsrHistogram,
    Spectrum,
    cluster_by_centers,
    complex_spacing_ratios,
    csr_reference_ginibre,
    csr_reference_poisson,
    commutant_basis,
    density_total_variation,
    diagonalize,
    persistent_modes,
    random_weight_operator,
    spectral_density,
)

MIN_SITES = 2


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run parameters; every field has one source of truth."""

    sites: int
    seed: int
    out: str
    k_max: int = 2
    hamiltonian: str = RANDOM_ALL_TO_ALL
    alphas: Optional[tuple[float, ...]] = None
    betas: Optional[tuple[float, ...]] = None
    realizations: int = 1
    csr_filter: str = FILTER_IM_POS
    exact_h_norm: bool = False
    bins: int = 20
    re_bins: int = 40
    im_bins: int = 40
    min_ratios: int = 10
    window: float = 0.05
    weight_threshold: float = 0.8
    workers: int = 1
    allow_large: bool = False
    unitary_only: bool = False
    rescale_im: bool = False
    gnuplot: bool = False

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("a master seed is required; there is no wall-clock default")
        if self.sites < MIN_SITES:
            raise ConfigError(f"need at least {MIN_SITES} sites, got {self.sites}")
        if self.sites > MAX_SUPEROPERATOR_SITES and not self.allow_large:
            raise ResourceLimitError(
                f"{self.sites} sites exceeds the dense-spectrum guardrail "
                f"({MAX_SUPEROPERATOR_SITES}); pass --allow-large to override"
            )
        if not 1 <= self.k_max <= self.sites:
            raise ConfigError(f"k_max {self.k_max} out of range for {self.sites} sites")
        if self.hamiltonian not in (RANDOM_ALL_TO_ALL, HEISENBERG_PBC):
            raise ConfigError(f"unknown hamiltonian kind {self.hamiltonian!r}")
        if self.alphas is not None and self.betas is not None:
            raise ConfigError("alpha and beta lists are mutually exclusive")
        if self.realizations < 1:
            raise ConfigError(f"realization count must be positive, got {self.realizations}")
        if min(self.bins, self.re_bins, self.im_bins) < 1:
            raise ConfigError("histogram bin counts must be at least 1")
        if self.workers < 1:
            raise ConfigError("worker count must be at least 1")
        if not self.out:
            raise ConfigError("an output directory is required")

    def require_alphas(self) -> tuple[float, ...]:
        if not self.alphas:
            raise ConfigError("this command needs a non-empty alpha list")
        return self.alphas

    def require_betas(self) -> tuple[float, ...]:
        if not self.betas:
            raise ConfigError("this command needs a non-empty beta list")
        return self.betas


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _tag(x: float) -> str:
    return f"{float(x):g}"


class OutputTracker:
    """Writes payload files and records their digests for the manifest."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> None:
        data = text.encode()
        (self.dir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def write_rows(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        self.write_text(name, buf.getvalue())

    def write_json(self, name: str, payload) -> None:
        self.write_text(name, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _models(cfg: ExperimentConfig, realization: int) -> tuple[KossakowskiSample, HamiltonianSpec]:
    """Draw one realization's model, independent of alpha/beta by stream design."""
    k = sample_kossakowski(
        cfg.sites, cfg.k_max, rng=substream(cfg.seed, realization, STREAM_KOSSAKOWSKI)
    )
    if cfg.hamiltonian == HEISENBERG_PBC:
        h = heisenberg_hamiltonian(cfg.sites)
    else:
        h = sample_random_hamiltonian(
            cfg.sites,
            rng=substream(cfg.seed, realization, STREAM_HAMILTONIAN),
            exact_norm=cfg.exact_h_norm,
        )
    return k, h


def _model_digests(k: KossakowskiSample, h: HamiltonianSpec) -> dict:
    return {
        "kossakowski_sha256": _digest(kossakowski_to_json_dict(k)),
        "hamiltonian_sha256": _digest(hamiltonian_to_json_dict(h)),
    }


def _real_pauli(sup: Superoperator, basis: PauliBasis) -> Superoperator:
    """String-basis form with the exactly-real matrix, for the fast eigensolve."""
    transformed = pauli_basis_form(sup, basis)
    return replace(transformed, matrix=real_pauli_form(transformed))


def _centers_at(num_sites: int, alpha: float) -> list[tuple[int, float]]:
    """Predicted cluster centers per weight; degenerate sectors keep their
    unperturbed center and merge downstream by exact value."""
    pred = predict(num_sites)
    centers = []
    for k in range(num_sites + 1):
        if pred.lambda2_means[k] is None:
            centers.append((k, float(pred.lambda0_values[k])))
        else:
            centers.append((k, pred.center(k, alpha)))
    return centers


def _all_profiles(spectrum: Spectrum, basis: PauliBasis) -> tuple[np.ndarray, np.ndarray]:
    """Weight profiles (modes x weights) and column norms of the right modes."""
    power = np.abs(spectrum.right_modes) ** 2
    norms = np.sqrt(power.sum(axis=0))
    power = power / power.sum(axis=0)
    starts = [basis.sector(k).start for k in basis.weights()]
    return np.add.reduceat(power, starts, axis=0).T, norms


_EMPTY = ""


def _eigen_header(num_sites: int) -> list[str]:
    return (
        ["seed", "alpha_or_beta", "mode_index", "re", "im", "cluster_label"]
        + [f"w{k}" for k in range(num_sites + 1)]
        + ["overlap_w2"]
    )


def _eigen_rows(
    seed: int,
    tag_value: float,
    eigs: np.ndarray,
    labels: Sequence[str],
    profiles: Optional[np.ndarray],
    overlaps: Optional[np.ndarray],
    num_sites: int,
) -> list[list]:
    rows = []
    for i in range(eigs.size):
        row = [seed, _fmt(tag_value), i, _fmt(eigs.real[i]), _fmt(eigs.imag[i]), labels[i]]
        if profiles is None:
            row += [_EMPTY] * (num_sites + 1)
        else:
            row += [_fmt(v) for v in profiles[i]]
        row.append(_EMPTY if overlaps is None else _fmt(overlaps[i]))
        rows.append(row)
    return rows


def _labels_from_report(report, n: int) -> list[str]:
    labels = [_EMPTY] * n
    for idx in report.steady_indices:
        labels[idx] = "steady"
    for cluster in report.clusters:
        for idx in cluster.member_indices:
            labels[idx] = cluster.label
    return labels


def _cluster_payload(report, axis_rescale: Optional[float]) -> dict:
    return {
        "clusters": [
            {
                "label": c.label,
                "target": c.target,
                "population": int(c.population),
                "center_re": None if c.center is None else c.center.real,
                "center_im": None if c.center is None else c.center.imag,
                "std_re": c.std_re,
                "std_im": c.std_im,
            }
            for c in report.clusters
        ],
        "steady_count": int(report.steady_indices.size),
        "separation_score": report.separation_score,
        "im_axis_rescale": axis_rescale,
    }


def _prediction_rows(num_sites: int, alphas: Sequence[float]) -> tuple[list[str], list[list]]:
    pred = predict(num_sites)
    header = ["sites", "k", "lambda0", "h_up", "h_down", "lambda2_mean"] + [
        f"center_a{_tag(a)}" for a in alphas
    ]
    rows = []
    for k in range(num_sites + 1):
        shift = pred.lambda2_means[k]
        row = [
            num_sites,
            k,
            _fmt(float(pred.lambda0_values[k])),
            pred.h_up[k],
            pred.h_down[k],
            _EMPTY if shift is None else _fmt(float(shift)),
        ]
        for a in alphas:
            row.append(_EMPTY if shift is None else _fmt(pred.center(k, a)))
        rows.append(row)
    return header, rows


def _run_pool(worker: Callable, cfg: ExperimentConfig, count: int) -> list:
    """Evaluate realizations, merging results in index order regardless of
    worker completion order."""
    if cfg.workers <= 1:
        return [worker(cfg, r) for r in range(count)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {r: pool.submit(worker, cfg, r) for r in range(count)}
        return [futures[r].result() for r in range(count)]


# --- spectrum ---------------------------------------------------------------


def _spectrum_worker(cfg: ExperimentConfig, realization: int) -> dict:
    k, h = _models(cfg, realization)
    jumps = jump_operator_set(cfg.sites, cfg.k_max)
    l_d = build_dissipator(k, jumps, allow_large=cfg.allow_large)
    l_u = build_unitary_part(h, allow_large=cfg.allow_large)
    basis = PauliBasis(cfg.sites)
    probe = random_weight_operator(basis, 2, substream(cfg.seed, realization, STREAM_ANALYSIS))
    per_alpha = {}
    for alpha in cfg.require_alphas():
        sup = _real_pauli(assemble(alpha, l_u, l_d), basis)
        spectrum = diagonalize(sup)
        profiles, norms = _all_profiles(spectrum, basis)
        overlaps = np.abs(probe @ spectrum.right_modes) / norms
        report = cluster_by_centers(spectrum.eigenvalues, _centers_at(cfg.sites, alpha))
        labels = _labels_from_report(report, spectrum.dim)
        rescale = 1.0 / alpha if alpha > 0 else None
        per_alpha[alpha] = {
            "rows": _eigen_rows(
                cfg.seed, alpha, spectrum.eigenvalues, labels, profiles, overlaps, cfg.sites
            ),
            "clusters": _cluster_payload(report, rescale),
        }
    return {"models": _model_digests(k, h), "per_alpha": per_alpha}


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    alphas = cfg.require_alphas()
    out = OutputTracker(cfg.out)
    results = _run_pool(_spectrum_worker, cfg, cfg.realizations)
    header = _eigen_header(cfg.sites)
    for r, result in enumerate(results):
        for alpha in alphas:
            data = result["per_alpha"][alpha]
            stem = f"r{r:03d}_a{_tag(alpha)}"
            out.write_rows(f"eigenvalues_{stem}.csv", header, data["rows"])
            out.write_json(f"clusters_{stem}.json", data["clusters"])
    pred_header, pred_rows = _prediction_rows(cfg.sites, alphas)
    out.write_rows("predictions.csv", pred_header, pred_rows)
    if cfg.gnuplot:
        out.write_text("plot.gp", _gnuplot_stub(out))
    _write_manifest(out, cfg, "spectrum", [r["models"] for r in results],
                    {"im": {_tag(a): (1.0 / a if a > 0 else None) for a in alphas}})
    return 0


# --- sweep-beta -------------------------------------------------------------


def _beta_worker(cfg: ExperimentConfig, realization: int) -> dict:
    k, h = _models(cfg, realization)
    jumps = jump_operator_set(cfg.sites, cfg.k_max)
    l_d = build_dissipator(k, jumps, allow_large=cfg.allow_large)
    l_u = build_unitary_part(h, allow_large=cfg.allow_large)
    basis = PauliBasis(cfg.sites)
    per_beta = {}
    for beta in cfg.require_betas():
        sup = _real_pauli(assemble_weak(beta, l_u, l_d), basis)
        eigs = diagonalize(sup, vectors=False).eigenvalues
        labels = ["steady" if abs(v) < 1e-8 else _EMPTY for v in eigs]
        per_beta[beta] = {
            "rows": _eigen_rows(cfg.seed, beta, eigs, labels, None, None, cfg.sites),
            "mean_re": float(eigs.real.mean()),
            "std_im": float(eigs.imag.std()),
        }
    return {"models": _model_digests(k, h), "per_beta": per_beta}


def cmd_sweep_beta(cfg: ExperimentConfig) -> int:
    betas = cfg.require_betas()
    out = OutputTracker(cfg.out)
    results = _run_pool(_beta_worker, cfg, cfg.realizations)
    header = _eigen_header(cfg.sites)
    summary = []
    for r, result in enumerate(results):
        for beta in betas:
            data = result["per_beta"][beta]
            out.write_rows(f"eigenvalues_r{r:03d}_b{_tag(beta)}.csv", header, data["rows"])
            summary.append([r, _fmt(beta), _fmt(data["mean_re"]), _fmt(data["std_im"])])
    out.write_rows("summary_beta.csv", ["realization", "beta", "mean_re", "std_im"], summary)
    _write_manifest(out, cfg, "sweep-beta", [r["models"] for r in results],
                    {"re": {_tag(b): (1.0 / b if b > 0 else None) for b in betas}})
    return 0


# --- csr --------------------------------------------------------------------


def _csr_worker(cfg: ExperimentConfig, realization: int) -> dict:
    k, h = _models(cfg, realization)
    jumps = jump_operator_set(cfg.sites, cfg.k_max)
    l_u = build_unitary_part(h, allow_large=cfg.allow_large)
    basis = PauliBasis(cfg.sites)
    ratios = {}
    if cfg.unitary_only:
        sup = _real_pauli(l_u, basis)
        eigs = diagonalize(sup, vectors=False).eigenvalues
        hist = complex_spacing_ratios(
            eigs, cfg.csr_filter, bins=cfg.bins, min_count=cfg.min_ratios
        )
        ratios["unitary"] = hist.ratios
    else:
        l_d = build_dissipator(k, jumps, allow_large=cfg.allow_large)
        for alpha in cfg.require_alphas():
            sup = _real_pauli(assemble(alpha, l_u, l_d), basis)
            eigs = diagonalize(sup, vectors=False).eigenvalues
            hist = complex_spacing_ratios(
                eigs, cfg.csr_filter, bins=cfg.bins, min_count=cfg.min_ratios
            )
            ratios[alpha] = hist.ratios
    return {"models": _model_digests(k, h), "ratios": ratios}


def _hist_rows(hist) -> list[list]:
    rows = []
    density = hist.density
    for i in range(hist.counts.size):
        rows.append(
            [
                _fmt(hist.bin_edges[i]),
                _fmt(hist.bin_edges[i + 1]),
                int(hist.counts[i]),
                _fmt(density[i]),
            ]
        )
    return rows


_HIST_HEADER = ["bin_lo", "bin_hi", "count", "density"]


def cmd_csr(cfg: ExperimentConfig) -> int:
    if not cfg.unitary_only:
        cfg.require_alphas()
    out = OutputTracker(cfg.out)
    results = _run_pool(_csr_worker, cfg, cfg.realizations)
    keys = list(results[0]["ratios"].keys())
    rng = substream(cfg.seed, 0, STREAM_ANALYSIS)
    ginibre = csr_reference_ginibre(128, max(2, cfg.realizations), rng, bins=cfg.bins)
    geometry = "line" if cfg.unitary_only else "disk"
    poisson = csr_reference_poisson(
        128, max(2, cfg.realizations), rng, geometry=geometry, bins=cfg.bins
    )
    out.write_rows("csr_ginibre.csv", _HIST_HEADER, _hist_rows(ginibre))
    out.write_rows("csr_poisson.csv", _HIST_HEADER, _hist_rows(poisson))
    summary = {
        "filter": cfg.csr_filter,
        "bins": cfg.bins,
        "poisson_geometry": geometry,
        "ginibre_mean_ratio": ginibre.mean_ratio,
        "poisson_mean_ratio": poisson.mean_ratio,
        "data": {},
    }
    for key in keys:
        pooled = np.concatenate([res["ratios"][key] for res in results])
        counts, edges = np.histogram(pooled, bins=cfg.bins, range=(0.0, 1.0))
        hist = CsrHistogram(pooled, edges, counts)
        name = "unitary" if key == "unitary" else f"a{_tag(key)}"
        out.write_rows(f"csr_data_{name}.csv", _HIST_HEADER, _hist_rows(hist))
        summary["data"][name] = {
            "mean_ratio": hist.mean_ratio,
            "ratio_count": int(pooled.size),
            "ks_vs_ginibre": float(ks_2samp(pooled, ginibre.ratios).statistic),
            "ks_vs_poisson": float(ks_2samp(pooled, poisson.ratios).statistic),
        }
    out.write_json("csr_summary.json", summary)
    _write_manifest(out, cfg, "csr", [r["models"] for r in results], None)
    return 0


# --- heisenberg -------------------------------------------------------------


def _heisenberg_worker(cfg: ExperimentConfig, realization: int) -> dict:
    k, h = _models(cfg, realization)
    jumps = jump_operator_set(cfg.sites, cfg.k_max)
    l_d = build_dissipator(k, jumps, allow_large=cfg.allow_large)
    l_u = build_unitary_part(h, allow_large=cfg.allow_large)
    basis = PauliBasis(cfg.sites)
    alphas = sorted(cfg.require_alphas())
    sweep = []
    per_alpha = {}
    for alpha in alphas:
        sup = _real_pauli(assemble(alpha, l_u, l_d), basis)
        want_vectors = alpha == alphas[-1]
        spectrum = diagonalize(sup, vectors=want_vectors)
        sweep.append((alpha, spectrum))
        if want_vectors:
            profiles, norms = _all_profiles(spectrum, basis)
            probe = random_weight_operator(
                basis, 2, substream(cfg.seed, realization, STREAM_ANALYSIS)
            )
            overlaps = np.abs(probe @ spectrum.right_modes) / norms
        else:
            profiles, overlaps = None, None
        report = cluster_by_centers(spectrum.eigenvalues, _centers_at(cfg.sites, alpha))
        labels = _labels_from_report(report, spectrum.dim)
        per_alpha[alpha] = {
            "rows": _eigen_rows(
                cfg.seed, alpha, spectrum.eigenvalues, labels, profiles, overlaps, cfg.sites
            )
        }

    h_coeffs = np.zeros(len(basis))
    for string, coupling in h.coefficients.items():
        h_coeffs[basis.index_of(string)] = coupling
    refs = [("H", h_coeffs)]
    commutant_dims = {}
    for weight in range(1, cfg.k_max + 1):
        elements = commutant_basis(h, weight)
        commutant_dims[weight] = int(elements.shape[1])
        sector = basis.sector(weight)
        for i in range(elements.shape[1]):
            emb = np.zeros(len(basis), dtype=complex)
            emb[sector] = elements[:, i]
            refs.append((f"w{weight}_{i}", emb))
    centers = [(kk, lambda0(kk, cfg.sites)) for kk in range(1, cfg.sites + 1)]
    persistence = persistent_modes(
        sweep,
        basis,
        centers,
        window=cfg.window,
        weight_threshold=cfg.weight_threshold,
        reference_operators=refs,
    )
    return {
        "models": _model_digests(k, h),
        "per_alpha": per_alpha,
        "commutant_dims": commutant_dims,
        "persistence": _persistence_payload(persistence),
    }


def _persistence_payload(report) -> dict:
    return {
        "alphas": list(report.alphas),
        "window": report.window,
        "weight_threshold": report.weight_threshold,
        "degenerate_input": report.degenerate_input,
        "total_persistent": report.total_persistent,
        "groups": [
            {
                "label": g.label,
                "center": g.center,
                "counts": list(g.counts),
                "modes": [
                    {
                        "eigenvalue_re": m.eigenvalue.real,
                        "eigenvalue_im": m.eigenvalue.imag,
                        "profile": [float(v) for v in m.profile],
                        "best_reference": None
                        if m.best_reference is None
                        else {"name": m.best_reference[0], "overlap": m.best_reference[1]},
                        "span_overlap": m.span_overlap,
                    }
                    for m in g.modes
                ],
            }
            for g in report.groups
        ],
    }


def _structure_payload(h: HamiltonianSpec, basis: PauliBasis) -> dict:
    """Per-sector-pair census of the analytic commutator matrix."""
    l_u = unitary_pauli_matrix(h, basis).tocsc()
    blocks = {}
    for k_row in basis.weights():
        for k_col in basis.weights():
            block = l_u[basis.sector(k_row), basis.sector(k_col)]
            blocks[f"{k_row},{k_col}"] = {
                "nonzeros": int(block.nnz),
                "max_abs": float(np.abs(block.data).max()) if block.nnz else 0.0,
            }
    return blocks


def cmd_heisenberg(cfg: ExperimentConfig) -> int:
    if cfg.hamiltonian != HEISENBERG_PBC:
        raise ConfigError("the heisenberg command requires --hamiltonian heisenberg")
    alphas = sorted(cfg.require_alphas())
    if len(alphas) < 2:
        raise ConfigError("persistence tracking needs at least 2 alpha values")
    out = OutputTracker(cfg.out)
    results = _run_pool(_heisenberg_worker, cfg, cfg.realizations)
    header = _eigen_header(cfg.sites)
    for r, result in enumerate(results):
        for alpha in alphas:
            stem = f"r{r:03d}_a{_tag(alpha)}"
            out.write_rows(f"eigenvalues_{stem}.csv", header, result["per_alpha"][alpha]["rows"])
        out.write_json(f"persistence_r{r:03d}.json", result["persistence"])
    out.write_json(
        "commutant.json",
        {"dims_by_weight": results[0]["commutant_dims"]},
    )
    basis = PauliBasis(cfg.sites)
    out.write_json("unitary_structure.json", _structure_payload(
        heisenberg_hamiltonian(cfg.sites), basis))
    pred_header, pred_rows = _prediction_rows(cfg.sites, alphas)
    out.write_rows("predictions.csv", pred_header, pred_rows)
    _write_manifest(out, cfg, "heisenberg", [r["models"] for r in results],
                    {"im": {_tag(a): (1.0 / a if a > 0 else None) for a in alphas}})
    return 0


# --- density ----------------------------------------------------------------


def _density_worker(cfg: ExperimentConfig, realization: int) -> dict:
    k, h = _models(cfg, realization)
    jumps = jump_operator_set(cfg.sites, cfg.k_max)
    l_d = build_dissipator(k, jumps, allow_large=cfg.allow_large)
    l_u = build_unitary_part(h, allow_large=cfg.allow_large)
    basis = PauliBasis(cfg.sites)
    eigs = {}
    for alpha in cfg.require_alphas():
        sup = _real_pauli(assemble(alpha, l_u, l_d), basis)
        eigs[alpha] = diagonalize(sup, vectors=False).eigenvalues
    return {"models": _model_digests(k, h), "eigs": eigs}


def _density_rows(density) -> list[list]:
    rows = []
    dens = density.density
    for i in range(density.counts.shape[0]):
        for j in range(density.counts.shape[1]):
            rows.append(
                [
                    _fmt(density.re_edges[i]),
                    _fmt(density.re_edges[i + 1]),
                    _fmt(density.im_edges[j]),
                    _fmt(density.im_edges[j + 1]),
                    int(density.counts[i, j]),
                    _fmt(dens[i, j]),
                ]
            )
    return rows


_DENSITY_HEADER = ["re_lo", "re_hi", "im_lo", "im_hi", "count", "density"]

WIDE_ERROR_BAR_THRESHOLD = 10


def cmd_density(cfg: ExperimentConfig) -> int:
    alphas = cfg.require_alphas()
    if cfg.realizations < 2:
        raise ConfigError("density comparison needs at least 2 realizations")
    out = OutputTracker(cfg.out)
    results = _run_pool(_density_worker, cfg, cfg.realizations)
    summary = {}
    for alpha in alphas:
        im_scale = 1.0 / alpha if (cfg.rescale_im and alpha > 0) else 1.0
        pool = np.concatenate([res["eigs"][alpha] for res in results])
        scaled = pool.real + 1j * pool.imag * im_scale
        re_range = (float(scaled.real.min()), float(scaled.real.max()))
        im_range = (float(scaled.imag.min()), float(scaled.imag.max()))
        if re_range[0] == re_range[1]:
            re_range = (re_range[0] - 0.5, re_range[1] + 0.5)
        if im_range[0] == im_range[1]:
            im_range = (im_range[0] - 0.5, im_range[1] + 0.5)
        pooled = spectral_density(
            pool, cfg.re_bins, cfg.im_bins, re_range, im_range, im_scale=im_scale
        )
        single = spectral_density(
            results[0]["eigs"][alpha], cfg.re_bins, cfg.im_bins, re_range, im_range,
            im_scale=im_scale,
        )
        tag = _tag(alpha)
        out.write_rows(f"density_pooled_a{tag}.csv", _DENSITY_HEADER, _density_rows(pooled))
        out.write_rows(f"density_single_a{tag}.csv", _DENSITY_HEADER, _density_rows(single))
        summary[tag] = {
            "tv_single_vs_pool": density_total_variation(single, pooled),
            "im_scale": im_scale,
        }
    payload = {
        "realizations": cfg.realizations,
        "wide_error_bars": cfg.realizations < WIDE_ERROR_BAR_THRESHOLD,
        "per_alpha": summary,
    }
    out.write_json("density_summary.json", payload)
    if cfg.gnuplot:
        out.write_text("plot.gp", _gnuplot_stub(out))
    _write_manifest(out, cfg, "density", [r["models"] for r in results], None)
    return 0


# --- manifest and entry point -----------------------------------------------


def _gnuplot_stub(out: OutputTracker) -> str:
    lines = ["# minimal plotting stub; adjust columns to taste"]
    for name in sorted(out.files):
        if name.startswith("eigenvalues_"):
            lines.append(f"# plot '{name}' using 4:5 with points")
        if name.startswith("density_pooled"):
            lines.append(f"# splot '{name}' using 1:3:6 with pm3d")
    lines.append("pause -1")
    return "\n".join(lines) + "\n"


def _write_manifest(
    out: OutputTracker,
    cfg: ExperimentConfig,
    command: str,
    models: list[dict],
    axis_rescale: Optional[dict],
) -> None:
    manifest = {
        "version": __version__,
        "command": command,
        "config": asdict(cfg),
        "models": [{"realization": r, **digests} for r, digests in enumerate(models)],
        "axis_rescale": axis_rescale,
        "files": dict(sorted(out.files.items())),
    }
    out.write_json("manifest.json", manifest)


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep-beta": cmd_sweep_beta,
    "csr": cmd_csr,
    "heisenberg": cmd_heisenberg,
    "density": cmd_density,
}


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klindblad",
        description="Reproducible spectral experiments on random Lindblad generators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with defaults; flags override")
        p.add_argument("--sites", type=int)
        p.add_argument("--kmax", type=int, dest="k_max")
        p.add_argument("--alpha", type=_float_list, dest="alphas", metavar="LIST")
        p.add_argument("--beta", type=_float_list, dest="betas", metavar="LIST")
        p.add_argument("--realizations", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--hamiltonian", choices=[RANDOM_ALL_TO_ALL, HEISENBERG_PBC])
        p.add_argument("--csr-filter", choices=[FILTER_IM_POS, FILTER_RE_POS], dest="csr_filter")
        p.add_argument("--exact-h-norm", action="store_const", const=True, dest="exact_h_norm")
        p.add_argument("--bins", type=int)
        p.add_argument("--re-bins", type=int, dest="re_bins")
        p.add_argument("--im-bins", type=int, dest="im_bins")
        p.add_argument("--min-ratios", type=int, dest="min_ratios")
        p.add_argument("--window", type=float)
        p.add_argument("--weight-threshold", type=float, dest="weight_threshold")
        p.add_argument("--workers", type=int)
        p.add_argument("--allow-large", action="store_const", const=True, dest="allow_large")
        p.add_argument("--unitary-only", action="store_const", const=True, dest="unitary_only")
        p.add_argument("--rescale-im", action="store_const", const=True, dest="rescale_im")
        p.add_argument("--gnuplot", action="store_const", const=True, dest="gnuplot")
    return parser


_CONFIG_KEYS = {f for f in ExperimentConfig.__dataclass_fields__}


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in _CONFIG_KEYS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if args.command == "heisenberg":
        values.setdefault("hamiltonian", HEISENBERG_PBC)
    for key in ("alphas", "betas"):
        if values.get(key) is not None:
            values[key] = tuple(float(v) for v in values[key])
    missing = [key for key in ("sites", "seed", "out") if values.get(key) is None]
    if missing:
        raise ConfigError(f"missing required settings: {', '.join(missing)}")
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, SpectralAnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

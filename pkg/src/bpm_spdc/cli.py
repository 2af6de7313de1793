"""Command-line front end: reproducible batch runs producing CSV artifacts.

Subcommands
-----------
- ``pm-solve``: solve the type-1 phase-matching condition for pump wavelength
  (``--mode wavelength``) or propagation angle (``--mode angle``), writing
  ``pm_solution.csv`` with columns theta_deg,lambda_p_nm,lambda_s_nm,residual.
- ``shg``: normalized frequency-doubling efficiency over a fundamental
  wavelength grid, written to ``shg_spectrum.csv`` (lambda_nm,efficiency).
- ``simulate``: generate a timestamp stream from the configured source, write
  it as ``tags.txt`` plus ``metrics.csv`` and ``histogram.csv``.
- ``analyze``: recompute histogram and metrics from an existing tag file.

Exit codes: 0 success, 1 usage/parse/validation error, 2 no phase-matching
solution in range, 3 resource cap exceeded. All CSVs start with comment lines
carrying the tool version, a 12-hex-digit hash of the config (file bytes plus
effective command-line overrides) and the seed, so artifacts are traceable
and byte-identical across reruns.

Config files use the same sectioned key=value grammar as material files:
a top-level ``material`` key (path, name under $BPM_SPDC_MATERIAL_DIR, or
bundled name), ``[waveguide]`` (theta_deg, length_mm, temperature_K,
geometry), ``[source]`` (pair_rate_hz or brightness_hz_per_mw + pump_mw,
losses in dB, detector efficiencies, jitter_ps, dark_hz, dead_time_ns,
splitter_ratio, tau_ns, duration_s, seed) and ``[output]`` (directory).
Units are encoded in key suffixes.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from .dispersion import (
    DispersionError,
    MaterialDispersion,
    MaterialFormatError,
    TabulatedBranch,
    load_material,
)
from .materials import builtin_path
from .montecarlo import (
    MonteCarloError,
    ResourceLimitError,
    SourceModel,
    TagFileError,
    coincidence_histogram,
    count_rates,
    generate_tags,
    read_tags,
    write_tags,
)
from .phasematch import (
    MultipleRootsError,
    NoCrossingError,
    WaveguideConfig,
    shg_spectrum,
    solve_pm_angle,
    solve_pm_wavelength,
)
from .photonstats import LossBudget, PhotonStatsError, compute_metrics
from .sections import SectionedFile, SectionedFormatError, parse_float, parse_sections_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_SOLUTION = 2
EXIT_RESOURCE = 3

MATERIAL_DIR_ENV = "BPM_SPDC_MATERIAL_DIR"

SOLUTION_CSV = "pm_solution.csv"
SPECTRUM_CSV = "shg_spectrum.csv"
METRICS_CSV = "metrics.csv"
HISTOGRAM_CSV = "histogram.csv"
TAGS_FILE = "tags.txt"

_TOP_KEYS = {"material", "interpolation"}
_SECTION_KEYS = {
    "waveguide": {"theta_deg", "length_mm", "temperature_K", "geometry"},
    "source": {
        "pair_rate_hz",
        "brightness_hz_per_mw",
        "pump_mw",
        "on_chip_db",
        "off_chip_signal_db",
        "off_chip_idler_db",
        "eta_d_signal",
        "eta_d_idler1",
        "eta_d_idler2",
        "jitter_ps",
        "dark_hz",
        "dead_time_ns",
        "splitter_ratio",
        "tau_ns",
        "duration_s",
        "seed",
    },
    "output": {"directory"},
}


class CliError(Exception):
    """Validation error that maps to a usage exit."""


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1 (stable contract)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(x: float) -> str:
    """Shortest round-trip decimal form; deterministic for byte-stable CSVs."""
    return repr(float(x))


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header_lines: list[str], columns: str, rows: list[str]) -> str:
    out = [f"# bpm-spdc {__version__}"]
    out.extend(header_lines)
    out.append(columns)
    out.extend(rows)
    return "\n".join(out) + "\n"


def _config_hash(raw: bytes, overrides: dict) -> str:
    h = hashlib.sha256()
    h.update(raw)
    for key in sorted(overrides):
        value = overrides[key]
        if value is None:
            continue
        h.update(f"\x00{key}={value}".encode())
    return h.hexdigest()[:12]


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"func", "command", "config", "out", "tags"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def resolve_material_path(ref: str) -> str:
    """Resolve a material reference: literal path, $BPM_SPDC_MATERIAL_DIR, bundled."""
    tried = []
    if os.path.exists(ref):
        return ref
    tried.append(ref)
    names = [ref] if ref.endswith(".mat") else [ref + ".mat", ref]
    env_dir = os.environ.get(MATERIAL_DIR_ENV)
    if env_dir:
        for name in names:
            candidate = os.path.join(env_dir, name)
            if os.path.exists(candidate):
                return candidate
            tried.append(candidate)
    try:
        return builtin_path(ref)
    except FileNotFoundError:
        pass
    raise CliError(
        f"material {ref!r} not found (tried {', '.join(tried)} and the bundled set)"
    )


def _validate_config_keys(doc: SectionedFile) -> None:
    for key, (_, line) in doc.top.items():
        if key not in _TOP_KEYS:
            raise SectionedFormatError(f"unknown top-level key {key!r}", line, doc.path)
    for section, keys in doc.sections.items():
        if section not in _SECTION_KEYS:
            raise SectionedFormatError(
                f"unknown section [{section}]", doc.section_lines[section], doc.path
            )
        for key, (_, line) in keys.items():
            if key not in _SECTION_KEYS[section]:
                raise SectionedFormatError(
                    f"unknown key {key!r} in section [{section}]", line, doc.path
                )


def load_config(path: str) -> tuple[SectionedFile, bytes]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise CliError(f"config file {path!r} not found") from None
    doc = parse_sections_file(path)
    _validate_config_keys(doc)
    return doc, raw


def _with_interpolation(material: MaterialDispersion, kind: str) -> MaterialDispersion:
    """Override the interpolation of tabulated branches (no-op for closed forms)."""
    if kind not in ("cubic", "linear"):
        raise CliError(f"interpolation must be 'cubic' or 'linear', got {kind!r}")

    def conv(branch):
        if isinstance(branch, TabulatedBranch) and branch.interpolation != kind:
            return replace(branch, interpolation=kind, _spline=None)
        return branch

    return replace(material, ordinary=conv(material.ordinary), extraordinary=conv(material.extraordinary))


def _load_waveguide(doc: SectionedFile, args: argparse.Namespace) -> WaveguideConfig:
    ref = doc.get(None, "material")
    if ref is None:
        raise CliError("config has no 'material' key (required for this command)")
    material = load_material(resolve_material_path(ref))
    interp = getattr(args, "interpolation", None) or doc.get(None, "interpolation")
    if interp is not None:
        material = _with_interpolation(material, interp)

    def fval(key: str, default: float | None = None) -> float | None:
        text = doc.get("waveguide", key)
        if text is None:
            return default
        return parse_float(doc, "waveguide", key, text)

    theta = args.theta_deg if getattr(args, "theta_deg", None) is not None else fval("theta_deg")
    if theta is None:
        raise CliError("no propagation angle: set theta_deg in [waveguide] or pass --theta-deg")
    length_mm = fval("length_mm", 10.0)
    temperature = fval("temperature_K", material.t_ref_K)
    return WaveguideConfig(
        material=material,
        theta_deg=float(theta),
        length_mm=float(length_mm),
        temperature_K=float(temperature),
        geometry=doc.get("waveguide", "geometry"),
    )


def _load_model(doc: SectionedFile, args: argparse.Namespace) -> tuple[SourceModel, float | None]:
    """Build the source model from [source]; returns (model, pump_mW or None)."""
    if "source" not in doc.sections:
        raise CliError("config has no [source] section (required for this command)")

    def fval(key: str, default: float | None = None) -> float | None:
        text = doc.get("source", key)
        if text is None:
            return default
        return parse_float(doc, "source", key, text)

    pair_rate = fval("pair_rate_hz")
    brightness = fval("brightness_hz_per_mw")
    pump_mw = fval("pump_mw")
    if pair_rate is not None and brightness is not None:
        raise CliError("config sets both pair_rate_hz and brightness_hz_per_mw; pick one")
    if pair_rate is None:
        if brightness is None or pump_mw is None:
            raise CliError(
                "config must set pair_rate_hz, or brightness_hz_per_mw together with pump_mw"
            )
        pair_rate = brightness * pump_mw

    loss = LossBudget(
        on_chip_db=fval("on_chip_db", 0.0),
        off_chip_signal_db=fval("off_chip_signal_db", 0.0),
        off_chip_idler_db=fval("off_chip_idler_db", 0.0),
        det_eff_signal=fval("eta_d_signal", 1.0),
        det_eff_idler1=fval("eta_d_idler1", 1.0),
        det_eff_idler2=fval("eta_d_idler2", 1.0),
    )

    seed_text = doc.get("source", "seed")
    seed = 0
    if seed_text is not None:
        try:
            seed = int(seed_text)
        except ValueError:
            raise SectionedFormatError(
                f"key 'seed': expected an integer, got {seed_text!r}",
                doc.line_of("source", "seed"),
                doc.path,
            ) from None
    if getattr(args, "seed", None) is not None:
        seed = args.seed

    tau_ns = fval("tau_ns", 1.0)
    if getattr(args, "tau_ns", None) is not None:
        tau_ns = args.tau_ns
    duration = fval("duration_s", 1.0)
    if getattr(args, "duration_s", None) is not None:
        duration = args.duration_s

    model = SourceModel(
        pair_rate_hz=pair_rate,
        loss=loss,
        splitter_ratio=fval("splitter_ratio", 0.5),
        jitter_sigma_s=fval("jitter_ps", 50.0) * 1e-12,
        dark_rate_hz=fval("dark_hz", 100.0),
        dead_time_s=fval("dead_time_ns", 0.0) * 1e-9,
        coincidence_window_s=tau_ns * 1e-9,
        duration_s=duration,
        seed=seed,
    )
    return model, pump_mw


def _out_dir(doc: SectionedFile | None, args: argparse.Namespace) -> str:
    out = getattr(args, "out", None)
    if out is None and doc is not None:
        out = doc.get("output", "directory")
    out = out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _print_metrics(metrics, seed=None) -> None:
    print(f"{'metric':<24}{'value':>16}{'sigma':>16}")
    for name, value, sigma in metrics.rows():
        print(f"{name:<24}{value:>16.6g}{sigma:>16.6g}")
    if seed is not None:
        print(f"seed = {seed}")


def _histogram_csv(hist, header: list[str]) -> str:
    rows = [f"{int(d)},{int(c)}" for d, c in zip(hist.delays_ps, hist.counts)]
    return _csv_text(header, "delay_ps,counts", rows)


def _metrics_csv(metrics, header: list[str]) -> str:
    rows = [f"{name},{_fmt(value)},{_fmt(sigma)}" for name, value, sigma in metrics.rows()]
    return _csv_text(header, "metric,value,sigma", rows)


def _analysis_outputs(stream, window_s, args, header, out):
    counts = count_rates(stream, window_s)
    hist = coincidence_histogram(
        stream, "S", "I", bin_width_s=window_s, span_s=100.0 * window_s
    )
    metrics = compute_metrics(
        counts,
        hist,
        pair_separation_prob=args.separation_prob,
        splitter_ratio=args.splitter_ratio,
        eta_d_signal=args.eta_d_signal,
        eta_d_idler=args.eta_d_idler,
        pump_mw=args.pump_mw,
    )
    _write_text_atomic(os.path.join(out, METRICS_CSV), _metrics_csv(metrics, header))
    _write_text_atomic(os.path.join(out, HISTOGRAM_CSV), _histogram_csv(hist, header))
    return metrics


def cmd_pm_solve(args: argparse.Namespace) -> int:
    doc, raw = load_config(args.config)
    wg = _load_waveguide(doc, args)
    if args.mode == "angle":
        if args.lambda_p_nm is None:
            raise CliError("--mode angle requires --lambda-p-nm")
        sol = solve_pm_angle(wg, args.lambda_p_nm)
    else:
        sol = solve_pm_wavelength(
            wg, lambda_min_nm=args.lambda_min_nm, lambda_max_nm=args.lambda_max_nm
        )
    header = [f"# config_hash={_config_hash(raw, _overrides(args))}", "# seed=none"]
    row = f"{_fmt(sol.theta_deg)},{_fmt(sol.lambda_p_nm)},{_fmt(sol.lambda_s_nm)},{_fmt(sol.residual_delta_k)}"
    out = _out_dir(doc, args)
    path = os.path.join(out, SOLUTION_CSV)
    _write_text_atomic(path, _csv_text(header, "theta_deg,lambda_p_nm,lambda_s_nm,residual", [row]))
    print(f"theta_deg      = {sol.theta_deg:.6f}")
    print(f"lambda_p_nm    = {sol.lambda_p_nm:.6f}")
    print(f"lambda_s_nm    = {sol.lambda_s_nm:.6f}")
    print(f"lambda_i_nm    = {sol.lambda_i_nm:.6f}")
    print(f"temperature_K  = {sol.temperature_K:.3f}")
    print(f"residual rad/mm = {sol.residual_delta_k:.3e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_shg(args: argparse.Namespace) -> int:
    doc, raw = load_config(args.config)
    wg = _load_waveguide(doc, args)
    if args.lambda_max_nm <= args.lambda_min_nm:
        raise CliError(
            f"inverted grid: --lambda-max-nm ({args.lambda_max_nm}) must exceed "
            f"--lambda-min-nm ({args.lambda_min_nm})"
        )
    if args.step_nm <= 0:
        raise CliError("--step-nm must be positive")
    grid = np.arange(args.lambda_min_nm, args.lambda_max_nm + args.step_nm / 2, args.step_nm)
    spectrum = shg_spectrum(wg, grid)
    header = [f"# config_hash={_config_hash(raw, _overrides(args))}", "# seed=none"]
    rows = [f"{_fmt(lam)},{_fmt(eff)}" for lam, eff in zip(spectrum.lambdas_nm, spectrum.efficiency)]
    out = _out_dir(doc, args)
    path = os.path.join(out, SPECTRUM_CSV)
    _write_text_atomic(path, _csv_text(header, "lambda_nm,efficiency", rows))
    print(f"peak efficiency 1 at {spectrum.peak_lambda_nm:.6f} nm over {grid.size} points")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    doc, raw = load_config(args.config)
    model, pump_mw = _load_model(doc, args)
    if args.pump_mw is None:
        args.pump_mw = pump_mw
    stream = generate_tags(model)
    out = _out_dir(doc, args)
    tag_path = os.path.join(out, TAGS_FILE)
    write_tags(stream, tag_path)
    header = [f"# config_hash={_config_hash(raw, _overrides(args))}", f"# seed={model.seed}"]
    metrics = _analysis_outputs(stream, model.coincidence_window_s, args, header, out)
    print(f"simulated {len(stream)} events over {model.duration_s:g} s -> {tag_path}")
    _print_metrics(metrics, seed=model.seed)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    stream = read_tags(args.tags)
    with open(args.tags, "rb") as fh:
        raw = fh.read()
    window_s = args.tau_ns * 1e-9
    header = [f"# config_hash={_config_hash(raw, _overrides(args))}", "# seed=none"]
    out = _out_dir(None, args)
    metrics = _analysis_outputs(stream, window_s, args, header, out)
    print(f"analyzed {len(stream)} events from {args.tags}")
    _print_metrics(metrics)
    return EXIT_OK


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--separation-prob",
        type=float,
        default=1.0,
        help="probability a pair yields one signal-arm and one idler-arm detection "
        "opportunity; 1.0 for deterministically separated streams (default), "
        "0.5 for a 50:50 pair-splitting beam splitter",
    )
    p.add_argument("--splitter-ratio", type=float, default=0.5, help="idler splitter ratio for the g2 denominator factor")
    p.add_argument("--eta-d-signal", type=float, default=1.0, help="signal detector efficiency divided out of heralding")
    p.add_argument("--eta-d-idler", type=float, default=1.0, help="idler detector efficiency divided out of heralding")
    p.add_argument("--pump-mw", type=float, default=None, help="pump power for the brightness row")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bpm-spdc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"bpm-spdc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("pm-solve", help="solve the phase-matching condition")
    p_solve.add_argument("--config", required=True, help="run config file")
    p_solve.add_argument("--mode", choices=("wavelength", "angle"), default="wavelength")
    p_solve.add_argument("--theta-deg", type=float, default=None, help="override [waveguide] theta_deg")
    p_solve.add_argument("--lambda-p-nm", type=float, default=None, help="target pump wavelength (mode=angle)")
    p_solve.add_argument("--lambda-min-nm", type=float, default=None, help="pump search range lower edge")
    p_solve.add_argument("--lambda-max-nm", type=float, default=None, help="pump search range upper edge")
    p_solve.add_argument("--interpolation", choices=("cubic", "linear"), default=None)
    p_solve.add_argument("--out", default=None, help="output directory")
    p_solve.set_defaults(func=cmd_pm_solve)

    p_shg = sub.add_parser("shg", help="normalized frequency-doubling spectrum")
    p_shg.add_argument("--config", required=True)
    p_shg.add_argument("--lambda-min-nm", type=float, required=True, help="fundamental grid start")
    p_shg.add_argument("--lambda-max-nm", type=float, required=True, help="fundamental grid end")
    p_shg.add_argument("--step-nm", type=float, required=True, help="fundamental grid step")
    p_shg.add_argument("--theta-deg", type=float, default=None)
    p_shg.add_argument("--interpolation", choices=("cubic", "linear"), default=None)
    p_shg.add_argument("--out", default=None)
    p_shg.set_defaults(func=cmd_shg)

    p_sim = sub.add_parser("simulate", help="generate a tag stream and analyze it")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None, help="override [source] seed")
    p_sim.add_argument("--duration-s", type=float, default=None, help="override [source] duration_s")
    p_sim.add_argument("--tau-ns", type=float, default=None, help="override [source] tau_ns")
    p_sim.add_argument("--out", default=None)
    _add_analysis_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="recompute metrics from a tag file")
    p_an.add_argument("--tags", required=True, help="tag-stream file")
    p_an.add_argument("--tau-ns", type=float, default=1.0, help="coincidence window (total width)")
    p_an.add_argument("--out", default=None)
    _add_analysis_flags(p_an)
    p_an.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NoCrossingError, MultipleRootsError) as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (
        CliError,
        SectionedFormatError,
        MaterialFormatError,
        TagFileError,
        DispersionError,
        PhotonStatsError,
        MonteCarloError,
        FileNotFoundError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

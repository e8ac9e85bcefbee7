"""Command-line front end: experiment configs, execution, result export.

Config files are JSON validated against ``CONFIG_SCHEMA``. All outputs are
deterministic for a given effective config (file config plus CLI
overrides): floats are printed with 17 significant digits, rows follow a
fixed order, and aggregation order never depends on the thread count, so
identical runs produce byte-identical files.

Exit codes: 0 success, 2 config error, 3 invariant/structural failure,
4 dense-size cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import jsonschema
import numpy as np

from .capacity import CapacityResult, capacity_sweep
from .channel import (
    ChannelModel,
    NoiseSpec,
    assemble_h_matrix,
    awgn,
    channel_to_json,
    reduce_to_block_channel,
    synthesize,
    trial_rng,
)
from .checks import VerifyContext, run_invariant_checks
from .errors import ConfigError, SizeCapError, StructureError
from .kronops import DENSE_ENTRY_CAP, vec
from .mimo import MimoConfig, mimo_chain, mimo_effective_matrix, stack_grids
from .transceiver import (
    OtfsFrameConfig,
    WindowSpec,
    dd_channel_as_2d_convolution,
    to_frequency_domain,
)

_WINDOW_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["rectangular", "separable", "general"]},
        "time": {"type": "array", "minItems": 1},
        "freq": {"type": "array", "minItems": 1},
        "taps": {"type": "array", "minItems": 1},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["frame"],
    "additionalProperties": False,
    "properties": {
        "frame": {
            "type": "object",
            "required": ["M", "N"],
            "additionalProperties": False,
            "properties": {
                "M": {"type": "integer", "minimum": 1},
                "N": {"type": "integer", "minimum": 1},
                "M_cp": {"type": "integer", "minimum": 0},
            },
        },
        "mimo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_t": {"type": "integer", "minimum": 1},
                "n_r": {"type": "integer", "minimum": 1},
            },
        },
        "window": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tx": _WINDOW_SCHEMA, "rx": _WINDOW_SCHEMA},
        },
        "channel": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["identity", "static-multipath", "doppler-paths",
                                  "block-invariant-doppler"]},
                "L": {"type": "integer", "minimum": 1},
                "P": {"type": "integer", "minimum": 1},
                "nu_max": {"type": "number", "minimum": 0},
                "gains": {"type": "array", "minItems": 1},
                "delays": {"type": "array", "minItems": 1,
                           "items": {"type": "integer", "minimum": 0}},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "oneOf": [{"required": ["snr_db"]}, {"required": ["sigma2"]}],
            "properties": {
                "snr_db": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "sigma2": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "minimum": 0}},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["capacity", "simulate", "verify", "effective-channel"]},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "threads": {"type": "integer", "minimum": 1},
                "emit_trials": {"type": "boolean"},
                "export_channels": {"type": "boolean"},
                "emit_frequency_domain": {"type": "boolean"},
                "symbols": {"enum": ["gaussian", "qpsk"]},
            },
        },
    },
}


def _fmt(x: float) -> str:
    """Round-trip-exact float formatting for CSV cells."""
    return f"{float(x):.17g}"


def _complex_list(values, what: str) -> np.ndarray:
    """Accept a JSON array of numbers or of [re, im] pairs."""
    out = []
    for v in values:
        if isinstance(v, (int, float)):
            out.append(complex(v))
        elif isinstance(v, (list, tuple)) and len(v) == 2:
            out.append(complex(float(v[0]), float(v[1])))
        else:
            raise ConfigError(f"{what}: entries must be numbers or [re, im] pairs, got {v!r}")
    return np.asarray(out, dtype=np.complex128)


def _window_from_doc(doc: Optional[dict], role: str, frame: OtfsFrameConfig) -> WindowSpec:
    if doc is None:
        return WindowSpec.rectangular(role)
    kind = doc["kind"]
    if kind == "rectangular":
        return WindowSpec.rectangular(role)
    if kind == "separable":
        if "time" not in doc or "freq" not in doc:
            raise ConfigError(f"window.{role[:2]}: separable window needs 'time' and 'freq' arrays")
        time = _complex_list(doc["time"], f"window.{role[:2]}.time")
        freq = _complex_list(doc["freq"], f"window.{role[:2]}.freq")
        if time.size != frame.num_symbols:
            raise ConfigError(
                f"window.{role[:2]}.time has {time.size} entries, need N={frame.num_symbols}")
        if freq.size != frame.num_subcarriers:
            raise ConfigError(
                f"window.{role[:2]}.freq has {freq.size} entries, need M={frame.num_subcarriers}")
        return WindowSpec.separable(time, freq, role)
    if "taps" not in doc:
        raise ConfigError(f"window.{role[:2]}: general window needs a 'taps' array")
    taps = _complex_list(doc["taps"], f"window.{role[:2]}.taps")
    if taps.size != frame.grid_size:
        raise ConfigError(
            f"window.{role[:2]}.taps has {taps.size} entries, need M*N={frame.grid_size}")
    return WindowSpec.general(taps, role)


def _channel_from_doc(doc: Optional[dict]) -> ChannelModel:
    if doc is None:
        return ChannelModel.identity()
    kind = doc["kind"]
    if kind == "identity":
        return ChannelModel.identity()
    if kind == "static-multipath":
        if "gains" not in doc or "delays" not in doc:
            raise ConfigError("channel: static-multipath needs 'gains' and 'delays'")
        return ChannelModel.static_multipath(
            _complex_list(doc["gains"], "channel.gains"), doc["delays"])
    if "L" not in doc or "P" not in doc:
        raise ConfigError(f"channel: {kind} needs 'L' (taps) and 'P' (paths)")
    return ChannelModel.doppler_paths(
        num_taps=doc["L"],
        num_paths=doc["P"],
        max_doppler=doc.get("nu_max", 0.0),
        block_invariant=(kind == "block-invariant-doppler"),
    )


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class ExperimentConfig:
    raw: dict
    frame: OtfsFrameConfig
    mcfg: MimoConfig
    tx_window: WindowSpec
    rx_window: WindowSpec
    channel_model: ChannelModel
    sigma2_list: List[float]
    snr_db_list: List[float]
    mode: str
    trials: int
    seed: int
    threads: int
    emit_trials: bool
    export_channels: bool
    emit_frequency_domain: bool
    symbols: str
    hash: str


def load_config_document(path: str) -> dict:
    """Read a config JSON; a summary JSON with an embedded config is
    accepted transparently so results can be reproduced from outputs."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if isinstance(doc, dict) and "config" in doc and "results" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return doc


def parse_config(
    doc: dict,
    mode: str,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> ExperimentConfig:
    """Validate a config document, apply CLI overrides, and build the
    runtime objects. Raises :class:`ConfigError` with an actionable message
    on any schema or cross-field violation."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {path}: {err.message}") from err

    effective = json.loads(json.dumps(doc))  # deep copy via round trip
    run = effective.setdefault("run", {})
    config_mode = run.get("mode")
    if config_mode is not None and config_mode != mode:
        raise ConfigError(
            f"config run.mode is {config_mode!r} but the {mode!r} subcommand was invoked; "
            f"remove run.mode or use the matching subcommand")
    run["mode"] = mode
    if trials is not None:
        run["trials"] = trials
    if seed is not None:
        run["seed"] = seed
    # Threads affect wall time only, never results, so they are not part
    # of the experiment identity (hash or embedded config).
    effective_threads = threads if threads is not None else run.pop("threads", 1)
    run.pop("threads", None)

    frame_doc = effective["frame"]
    frame = OtfsFrameConfig(
        num_subcarriers=frame_doc["M"],
        num_symbols=frame_doc["N"],
        cp_len=frame_doc.get("M_cp", 0),
    )
    mimo_doc = effective.get("mimo", {})
    mcfg = MimoConfig(frame=frame, num_tx=mimo_doc.get("n_t", 1), num_rx=mimo_doc.get("n_r", 1))

    window_doc = effective.get("window", {})
    tx_window = _window_from_doc(window_doc.get("tx"), "transmit", frame)
    rx_window = _window_from_doc(window_doc.get("rx"), "receive", frame)
    model = _channel_from_doc(effective.get("channel"))

    if mode != "verify" and model.channel_length - 1 > frame.cp_len:
        raise ConfigError(
            f"channel length L={model.channel_length} needs M_cp >= {model.channel_length - 1} "
            f"but M_cp={frame.cp_len}; lengthen the CP or shorten the channel")
    if model.kind == "static-multipath" and int(model.delays.max()) >= frame.num_subcarriers:
        raise ConfigError(
            f"largest delay {int(model.delays.max())} must be below M={frame.num_subcarriers}")

    noise_doc = effective.get("noise", {"sigma2": [1.0]})
    if "snr_db" in noise_doc:
        snr_db_list = [float(s) for s in noise_doc["snr_db"]]
        sigma2_list = [10.0 ** (-s / 10.0) for s in snr_db_list]
    else:
        sigma2_list = [float(s) for s in noise_doc["sigma2"]]
        snr_db_list = [(-10.0 * np.log10(s)) if s > 0 else float("inf") for s in sigma2_list]
    if mode == "capacity" and any(s <= 0 for s in sigma2_list):
        raise ConfigError("capacity mode needs strictly positive noise variances")

    return ExperimentConfig(
        raw=effective,
        frame=frame,
        mcfg=mcfg,
        tx_window=tx_window,
        rx_window=rx_window,
        channel_model=model,
        sigma2_list=sigma2_list,
        snr_db_list=snr_db_list,
        mode=mode,
        trials=run.get("trials", 1),
        seed=run.get("seed", 0),
        threads=effective_threads,
        emit_trials=run.get("emit_trials", False),
        export_channels=run.get("export_channels", False),
        emit_frequency_domain=run.get("emit_frequency_domain", False),
        symbols=run.get("symbols", "gaussian"),
        hash=config_hash(effective),
    )


_CSV_HEADER = [
    "snr_db", "sigma2", "record", "trial", "mi_otfs_bits", "mi_ofdm_sum_bits",
    "capacity_bits_per_sample", "ci_halfwidth", "seed", "config_hash",
]


def _capacity_rows(cfg: ExperimentConfig, results: Sequence[CapacityResult]) -> List[List[str]]:
    rows = []
    frame = cfg.frame
    for snr_db, sigma2, res in zip(cfg.snr_db_list, cfg.sigma2_list, results):
        gap = float(np.max(np.abs(res.per_trial_otfs_bits - res.per_trial_ofdm_bits)))
        if gap > 1e-8:
            raise StructureError(
                f"OTFS-route and OFDM-route MI differ by {gap:.3e} > 1e-8", deviation=gap)
        rows.append([
            _fmt(snr_db), _fmt(sigma2), "aggregate", "",
            _fmt(np.mean(res.per_trial_otfs_bits)),
            _fmt(np.mean(res.per_trial_ofdm_bits)),
            _fmt(res.capacity_otfs), _fmt(res.ci_halfwidth),
            str(cfg.seed), cfg.hash,
        ])
        if cfg.emit_trials:
            for trial in range(res.trials):
                rows.append([
                    _fmt(snr_db), _fmt(sigma2), "trial", str(trial),
                    _fmt(res.per_trial_otfs_bits[trial]),
                    _fmt(res.per_trial_ofdm_bits[trial]),
                    _fmt(res.per_trial_otfs_bits[trial] / frame.frame_len),
                    "",
                    str(cfg.seed), cfg.hash,
                ])
    return rows


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue())


def _complex_pairs(values: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values).reshape(-1)]


def run_capacity(cfg: ExperimentConfig, out_dir: Path) -> int:
    results = capacity_sweep(
        cfg.sigma2_list, cfg.channel_model, cfg.tx_window, cfg.mcfg,
        trials=cfg.trials, seed=cfg.seed, threads=cfg.threads)
    rows = _capacity_rows(cfg, results)
    _write_csv(out_dir / "results.csv", _CSV_HEADER, rows)
    summary = {
        "config": cfg.raw,
        "config_hash": cfg.hash,
        "results": [
            {
                "snr_db": snr, "sigma2": sigma2,
                "capacity_otfs_bits_per_sample": res.capacity_otfs,
                "capacity_ofdm_bits_per_sample": res.capacity_ofdm,
                "ci_halfwidth": res.ci_halfwidth,
                "trials": res.trials,
            }
            for snr, sigma2, res in zip(cfg.snr_db_list, cfg.sigma2_list, results)
        ],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if cfg.export_channels:
        chan_dir = out_dir / "channels"
        chan_dir.mkdir(exist_ok=True)
        for trial in range(cfg.trials):
            for r in range(cfg.mcfg.num_rx):
                for t in range(cfg.mcfg.num_tx):
                    ch = synthesize(cfg.channel_model, cfg.frame,
                                    rng=trial_rng(cfg.seed, trial, r, t))
                    name = f"trial{trial:04d}_rx{r}_tx{t}.json"
                    (chan_dir / name).write_text(
                        json.dumps(channel_to_json(ch), sort_keys=True))
    for snr, res in zip(cfg.snr_db_list, results):
        print(f"snr_db={_fmt(snr)} capacity={_fmt(res.capacity_otfs)} "
              f"bits/sample (ci +/- {_fmt(res.ci_halfwidth)}, {res.trials} trials)")
    print(f"wrote {out_dir / 'results.csv'}")
    return 0


def _draw_symbols(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    size = cfg.frame.grid_size * cfg.mcfg.num_tx
    if cfg.symbols == "qpsk":
        bits = rng.integers(0, 2, size=(size, 2))
        return ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / np.sqrt(2)
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _noise_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)).generate_state(1)[0])


def run_simulate(cfg: ExperimentConfig, out_dir: Path, data_path: Optional[str]) -> int:
    mcfg = cfg.mcfg
    frame = cfg.frame
    sigma2 = cfg.sigma2_list[0]
    channels = [
        [synthesize(cfg.channel_model, frame, rng=trial_rng(cfg.seed, 0, r, t))
         for t in range(mcfg.num_tx)]
        for r in range(mcfg.num_rx)
    ]
    if data_path is not None:
        with open(data_path) as fh:
            entries = json.load(fh)
        data = _complex_list(entries, "symbol file")
        if data.size != frame.grid_size * mcfg.num_tx:
            raise ConfigError(
                f"symbol file has {data.size} entries, need M*N*n_t = "
                f"{frame.grid_size * mcfg.num_tx}")
    else:
        data = _draw_symbols(cfg, trial_rng(cfg.seed, 90))
    grids = [
        data[t * frame.grid_size:(t + 1) * frame.grid_size].reshape(
            (frame.num_subcarriers, frame.num_symbols), order="F")
        for t in range(mcfg.num_tx)
    ]
    stacked = stack_grids(grids, mcfg)
    noise = [awgn(frame.frame_len, NoiseSpec(sigma2, seed=_noise_seed(cfg.seed, 91, r)))
             for r in range(mcfg.num_rx)]

    chain = mimo_chain(stacked, channels, cfg.tx_window, cfg.rx_window, mcfg, noise=noise)
    effective = mimo_effective_matrix(channels, cfg.tx_window, cfg.rx_window, mcfg)
    zero = np.zeros_like(stacked)
    noise_only = mimo_chain(zero, channels, cfg.tx_window, cfg.rx_window, mcfg, noise=noise)
    predicted = effective @ vec(stacked) + noise_only.estimate
    residual = float(np.max(np.abs(chain.estimate - predicted)))

    transcript = {
        "config": cfg.raw,
        "config_hash": cfg.hash,
        "sigma2": sigma2,
        "residual_max_abs": residual,
        "stages": {
            "data": _complex_pairs(vec(stacked)),
            "tf_signal": _complex_pairs(chain.tf_signal),
            "tx_windowed": _complex_pairs(chain.tx_windowed),
            "modulated": [_complex_pairs(s) for s in chain.modulated],
            "received": [_complex_pairs(r) for r in chain.received],
            "demodulated": _complex_pairs(chain.demodulated),
            "rx_windowed": _complex_pairs(chain.rx_windowed),
            "estimate": _complex_pairs(chain.estimate),
            "noise_through_receiver": _complex_pairs(noise_only.estimate),
        },
    }
    (out_dir / "transcript.json").write_text(json.dumps(transcript, sort_keys=True) + "\n")
    error = float(np.max(np.abs(chain.estimate - vec(stacked))))
    print(f"max |estimate - data| = {_fmt(error)}")
    print(f"max |estimate - (H_eff @ data + noise_hat)| = {_fmt(residual)}")
    print(f"wrote {out_dir / 'transcript.json'}")
    if residual > 1e-9:
        print(f"FAIL: chain/effective-matrix residual {residual:.3e} exceeds 1e-9",
              file=sys.stderr)
        return 3
    return 0


def run_verify(cfg: ExperimentConfig, out_dir: Path) -> int:
    ctx = VerifyContext(
        mcfg=cfg.mcfg,
        channel_model=cfg.channel_model,
        tx_window=cfg.tx_window,
        rx_window=cfg.rx_window,
        noise_var=cfg.sigma2_list[0] if cfg.sigma2_list[0] > 0 else 1.0,
        seed=cfg.seed,
    )
    results = run_invariant_checks(ctx)
    report = {
        "config": cfg.raw,
        "config_hash": cfg.hash,
        "checks": [r.as_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"[{status}] {r.name}: deviation {r.deviation:.3e} (tol {r.tolerance:.1e})"
        if r.detail:
            line += f" -- {r.detail}"
        print(line)
    print(f"wrote {out_dir / 'report.json'}")
    return 0 if report["all_passed"] else 3


def run_effective_channel(cfg: ExperimentConfig, out_dir: Path, threshold: float = 1e-12) -> int:
    mcfg = cfg.mcfg
    frame = cfg.frame
    rows_out = frame.grid_size * mcfg.num_rx
    cols_out = frame.grid_size * mcfg.num_tx
    if rows_out * cols_out > DENSE_ENTRY_CAP:
        raise SizeCapError(
            f"effective matrix would have {rows_out}x{cols_out} entries "
            f"(cap {DENSE_ENTRY_CAP}); use the matrix-free operators from the library")
    channels = [
        [synthesize(cfg.channel_model, frame, rng=trial_rng(cfg.seed, 0, r, t))
         for t in range(mcfg.num_tx)]
        for r in range(mcfg.num_rx)
    ]
    effective = mimo_effective_matrix(channels, cfg.tx_window, cfg.rx_window, mcfg)
    entries = []
    nz = np.argwhere(np.abs(effective) > threshold)
    for i, j in nz:
        entries.append([str(i), str(j), _fmt(effective[i, j].real), _fmt(effective[i, j].imag)])
    _write_csv(out_dir / "effective_dd.csv", ["row", "col", "re", "im"], entries)
    meta = {"config_hash": cfg.hash, "shape": [int(rows_out), int(cols_out)],
            "entries_above_threshold": len(entries), "threshold": threshold}

    if mcfg.num_tx == 1 and mcfg.num_rx == 1:
        if cfg.tx_window.kind == "rectangular" and cfg.rx_window.kind == "rectangular":
            conv = dd_channel_as_2d_convolution(effective, frame)
            meta["two_d_circulant"] = bool(conv.is_circulant)
            meta["two_d_circulant_deviation"] = conv.max_deviation
        if cfg.emit_frequency_domain:
            blocks = reduce_to_block_channel(assemble_h_matrix(channels[0][0]), frame)
            freq_blocks = to_frequency_domain(blocks)
            m = frame.num_subcarriers
            freq = np.zeros((frame.grid_size, frame.grid_size), dtype=np.complex128)
            for n, blk in enumerate(freq_blocks):
                freq[n * m:(n + 1) * m, n * m:(n + 1) * m] = blk
            freq = (np.diag(cfg.rx_window.diagonal(frame)) @ freq
                    @ np.diag(cfg.tx_window.diagonal(frame)))
            fentries = []
            for i, j in np.argwhere(np.abs(freq) > threshold):
                fentries.append([str(i), str(j), _fmt(freq[i, j].real), _fmt(freq[i, j].imag)])
            _write_csv(out_dir / "effective_freq.csv", ["row", "col", "re", "im"], fentries)
            meta["frequency_domain_file"] = "effective_freq.csv"
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / 'effective_dd.csv'} ({len(entries)} entries above {threshold:g})")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfsim",
        description="OFDM-based OTFS simulation: capacity, chain simulation, "
                    "invariant verification, effective-channel export",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("capacity", "simulate", "verify", "effective-channel"):
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--trials", type=int, default=None, help="override run.trials")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (speed only, never changes results)")
        if mode == "simulate":
            p.add_argument("--data", default=None,
                           help="JSON file of data symbols (numbers or [re, im] pairs)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        doc = load_config_document(args.config)
        cfg = parse_config(doc, mode=args.mode, trials=args.trials,
                           seed=args.seed, threads=args.threads)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.mode == "capacity":
            return run_capacity(cfg, out_dir)
        if args.mode == "simulate":
            return run_simulate(cfg, out_dir, args.data)
        if args.mode == "verify":
            return run_verify(cfg, out_dir)
        return run_effective_channel(cfg, out_dir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except SizeCapError as err:
        print(f"size cap exceeded: {err}", file=sys.stderr)
        return 4
    except StructureError as err:
        print(f"structural invariant violated: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

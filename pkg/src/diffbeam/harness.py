"""Experiment runner: channel -> codeword selection -> feedback coding -> bit accounting.

Config files are INI-style.  ``[experiment]`` holds shared settings and every
``[scenario NAME]`` section one channel scenario::

    [experiment]
    L = 64
    Mt = 4
    Mr = 2
    cluster_sizes = 1, 2, 4
    codebook = cyclic          # cyclic | glp:SEED | path/to/codebook.txt
    codebook_size = 64
    symbols = 100              # OFDM symbols per trial (T)
    trials = 20
    warmup = 500               # symbols used to estimate the frozen code
    seed = 1

    [scenario high-spatial]
    freq = high                # low | high | <adjacent corr> | file:PATH
    spatial = macrocell        # none | macrocell | PATH (R_t block, R_r block)
    modes = pooled, per-index

Trial ``k`` draws its channels from ``stream(seed, 0, k)`` whatever the
scenario, so scenarios are compared on common random numbers; the frozen
code's warm-up stream is ``stream(seed, 1)``.
"""
from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .beamform import ClusterConfig, eigen_switching_rate, select_indices
from .channel import (
    HIGH_ADJACENT_CORR,
    LOW_ADJACENT_CORR,
    CorrelationSpec,
    channel_factor,
    macrocell_spatial_correlation,
    sample_channels,
    stream,
)
from .codebook import (
    Codebook,
    TransitionTable,
    build_transition_table,
    cyclic_codebook,
    generate_glp_codebook,
    load_codebook,
    read_matrix_blocks,
)
from .errors import ConfigError, DiffbeamError, LoadError
from .feedback import (
    MODES,
    POOLED,
    CodecSession,
    differential_decode_indices,
    differential_encode_indices,
    entropy_bits,
    frozen_lengths,
    log2_int,
    transition_symbols,
)

log = logging.getLogger(__name__)

FREQ_PRESETS = {"low": LOW_ADJACENT_CORR, "high": HIGH_ADJACENT_CORR, "white": 0.0}
STEADY_WINDOW = 5
FINAL_WINDOW = 10
STEADY_REL_TOL = 0.05
MIN_CONVERGENCE_SYMBOLS = 30
ORDERING_SIGMAS = 3.0
WARMUP_CHUNK = 2000

REPORT_NOTES = {
    "bits": "mean feedback bits per OFDM symbol over all trials and symbols",
    "huffman_bits_frozen": "same symbols coded with the Huffman code fixed from the warm-up run",
    "entropy": "header + (M-1) * plug-in entropy of the coded symbols (conditional on the "
               "source index in per-index mode); biased low for small samples",
    "ordering_tolerance": f"ordering_ok: adaptive >= frozen - {ORDERING_SIGMAS:g} * adaptive_stderr and "
                          "frozen >= entropy; the frozen code is estimated from the warm-up run, so a "
                          "short warm-up can leave it worse than the adaptive code on near-uniform sources",
}


@dataclass
class Scenario:
    name: str
    freq: str = "low"
    spatial: str = "none"
    modes: tuple[str, ...] = (POOLED,)

    def correlation_spec(self, L: int, Mt: int, Mr: int, base: Path | None = None) -> CorrelationSpec:
        r_t = r_r = None
        if self.spatial == "macrocell":
            r_t, r_r = macrocell_spatial_correlation()
        elif self.spatial != "none":
            blocks = read_matrix_blocks(_resolve(self.spatial, base))
            if len(blocks) != 2:
                raise ConfigError(f"scenario {self.name}: spatial file needs an R_t block and an R_r block")
            r_t, r_r = blocks
        if self.freq.startswith("file:"):
            (r_f,) = read_matrix_blocks(_resolve(self.freq[5:], base))
            return CorrelationSpec(L, Mt, Mr, freq_matrix=r_f, r_t=r_t, r_r=r_r)
        return CorrelationSpec(L, Mt, Mr, adjacent_corr=self.adjacent_corr, r_t=r_t, r_r=r_r)

    @property
    def adjacent_corr(self) -> float:
        if self.freq in FREQ_PRESETS:
            return FREQ_PRESETS[self.freq]
        try:
            return float(self.freq)
        except ValueError:
            raise ConfigError(f"scenario {self.name}: bad freq {self.freq!r}") from None


def _resolve(path: str, base: Path | None) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


@dataclass
class ExperimentConfig:
    scenarios: list[Scenario] = field(default_factory=list)
    L: int = 64
    Mt: int = 4
    Mr: int = 2
    cluster_sizes: tuple[int, ...] = (1, 2, 4)
    codebook: str = "cyclic"
    codebook_size: int = 64
    symbols: int = 100
    trials: int = 20
    warmup: int = 500
    seed: int = 1
    rebuild_every: int = 1
    verify: bool = True
    output: str = "out"
    base_dir: str | None = None

    def validate(self) -> None:
        if min(self.L, self.Mt, self.Mr) < 1:
            raise ConfigError("L, Mt and Mr must be positive")
        for g in self.cluster_sizes:
            if g < 1 or self.L % g:
                raise ConfigError(f"cluster size G={g} does not divide L={self.L}")
        if self.symbols < 1:
            raise ConfigError("symbols (T) must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.warmup < 1:
            raise ConfigError("warmup must be >= 1")
        if self.rebuild_every < 1:
            raise ConfigError("rebuild_every must be >= 1")
        n = self.codebook_size
        if n < 2 or n & (n - 1):
            raise ConfigError(f"codebook_size={n} must be a power of two")
        if not self.scenarios:
            raise ConfigError("no scenarios configured")
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenario names must be unique")
        for s in self.scenarios:
            if not s.modes:
                raise ConfigError(f"scenario {s.name}: no probability modes")
            for m in s.modes:
                if m not in MODES:
                    raise ConfigError(f"scenario {s.name}: unknown mode {m!r}")
            if s.freq not in FREQ_PRESETS and not s.freq.startswith("file:"):
                a = s.adjacent_corr
                if not 0.0 <= a < 1.0:
                    raise ConfigError(f"scenario {s.name}: adjacent correlation {a} outside [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cluster_sizes"] = list(self.cluster_sizes)
        d["scenarios"] = []
        for s in self.scenarios:
            entry = {**asdict(s), "modes": list(s.modes)}
            if not s.freq.startswith("file:"):
                entry["adjacent_corr"] = s.adjacent_corr
            d["scenarios"].append(entry)
        return d


def _split(value: str) -> list[str]:
    return [tok.strip() for tok in value.replace(";", ",").split(",") if tok.strip()]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = ExperimentConfig(base_dir=str(path.parent))
    if parser.has_section("experiment"):
        sec = parser["experiment"]
        ints = ("L", "Mt", "Mr", "codebook_size", "symbols", "trials", "warmup", "seed", "rebuild_every")
        known = {k.lower(): k for k in ints + ("cluster_sizes", "codebook", "verify", "output")}
        for key, value in sec.items():
            if key not in known:
                raise ConfigError(f"{path}: unknown key {key!r} in [experiment]")
            name = known[key]
            try:
                if name in ints:
                    setattr(cfg, name, int(value))
                elif name == "cluster_sizes":
                    cfg.cluster_sizes = tuple(int(v) for v in _split(value))
                elif name == "verify":
                    cfg.verify = sec.getboolean(key)
                else:
                    setattr(cfg, name, value.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {value!r}") from exc
    for section in parser.sections():
        if not section.startswith("scenario"):
            if section != "experiment":
                raise ConfigError(f"{path}: unknown section [{section}]")
            continue
        name = section[len("scenario"):].strip()
        if not name:
            raise ConfigError(f"{path}: scenario section needs a name")
        sec = parser[section]
        unknown = set(sec.keys()) - {"freq", "spatial", "modes"}
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)} in [{section}]")
        cfg.scenarios.append(
            Scenario(
                name=name,
                freq=sec.get("freq", "low").strip(),
                spatial=sec.get("spatial", "none").strip(),
                modes=tuple(_split(sec.get("modes", POOLED))),
            )
        )
    cfg.validate()
    return cfg


def resolve_codebook(cfg: ExperimentConfig) -> Codebook:
    """Codebook named by ``cfg.codebook``: ``cyclic``, ``glp[:SEED]`` or a file path."""
    src = cfg.codebook
    try:
        if src == "cyclic":
            return cyclic_codebook(cfg.Mt, cfg.codebook_size)
        if src == "glp" or src.startswith("glp:"):
            seed = int(src[4:]) if src != "glp" else 0
            return generate_glp_codebook(cfg.Mt, cfg.codebook_size, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"bad codebook spec {src!r}: {exc}") from exc
    cb = load_codebook(_resolve(src, Path(cfg.base_dir) if cfg.base_dir else None))
    if cb.Mt != cfg.Mt:
        raise ConfigError(f"codebook has Mt={cb.Mt}, experiment has Mt={cfg.Mt}")
    return cb


# -- simulation ---------------------------------------------------------------

def run_codec(indices: np.ndarray, tt: TransitionTable, mode: str, rebuild_every: int = 1,
              verify: bool = True) -> np.ndarray:
    """Feed a (T, M) index stream through an encoder (and a checking decoder).

    Returns the message bit counts.  With ``verify`` the decoder output and
    both probability models are compared after every symbol.
    """
    M = indices.shape[1]
    enc = CodecSession("encoder", tt, mode, rebuild_every, M=M)
    dec = CodecSession("decoder", tt, mode, rebuild_every, M=M) if verify else None
    bits = np.empty(indices.shape[0], dtype=np.int64)
    for t, iv in enumerate(indices):
        msg = enc.encode(differential_encode_indices(iv, tt))
        bits[t] = msg.bit_count
        if dec is not None:
            out = differential_decode_indices(dec.decode(msg), tt)
            if not np.array_equal(out, iv):
                raise DiffbeamError(f"decoder output diverged at symbol {t}")
            if enc.model != dec.model:
                raise DiffbeamError(f"probability models diverged at symbol {t}")
    return bits


@dataclass
class _TrialJob:
    spec: CorrelationSpec
    factor: np.ndarray
    codebook: Codebook
    table: TransitionTable
    cluster_sizes: tuple[int, ...]
    modes: tuple[str, ...]
    symbols: int
    seed: int
    trial: int
    rebuild_every: int
    verify: bool


def _run_trial(job: _TrialJob) -> dict:
    h = sample_channels(job.factor, job.spec, stream(job.seed, 0, job.trial), job.symbols)
    out = {}
    for g in job.cluster_sizes:
        idx = select_indices(h, g, job.codebook)
        res = {"indices": idx, "bits": {}}
        for mode in job.modes:
            res["bits"][mode] = run_codec(idx, job.table, mode, job.rebuild_every, job.verify)
        cc = ClusterConfig(job.spec.L, g)
        res["switching"] = eigen_switching_rate(h, cc) if cc.M >= 2 and job.spec.Mr >= 2 else None
        out[g] = res
    return out


def _warmup_counts(factor, spec, cb, tt, cfg: ExperimentConfig, modes) -> dict:
    """Transition counts per (G, mode) from the separate warm-up stream, drawn in chunks."""
    rng = stream(cfg.seed, 1)
    counts = {}
    for start in range(0, cfg.warmup if cfg.cluster_sizes else 0, WARMUP_CHUNK):
        h = sample_channels(factor, spec, rng, min(WARMUP_CHUNK, cfg.warmup - start))
        for g in cfg.cluster_sizes:
            idx = select_indices(h, g, cb)
            for mode in {POOLED, *modes}:
                c = _symbol_counts(idx, tt, mode)
                counts[g, mode] = counts[g, mode] + c if (g, mode) in counts else c
    return counts


def _symbol_counts(indices: np.ndarray, tt: TransitionTable, mode: str) -> np.ndarray:
    n = tt.N
    sym = transition_symbols(indices, tt).ravel()
    if mode == POOLED:
        return np.bincount(sym, minlength=n)
    src = indices[:, :-1].ravel()
    return np.bincount(src * n + sym, minlength=n * n).reshape(n, n)


def _coded_lengths(indices: np.ndarray, tt: TransitionTable, lengths: np.ndarray, mode: str) -> np.ndarray:
    sym = transition_symbols(indices, tt)
    if mode == POOLED:
        return lengths[sym].sum(axis=1)
    return lengths[indices[:, :-1], sym].sum(axis=1)


def _empirical_entropy(counts: np.ndarray) -> float:
    """H(X) for a count vector, H(X | source) for a count matrix."""
    total = counts.sum()
    if total == 0:
        return 0.0
    if counts.ndim == 1:
        return entropy_bits(counts / total)
    rows = counts.sum(axis=1)
    return float(sum(r / total * entropy_bits(c / r) for c, r in zip(counts, rows) if r))


def steady_state_symbol(bits) -> int | None:
    """First t (1-based) whose trailing-5 mean is within 5% of the final-10 mean."""
    bits = np.asarray(bits, dtype=float)
    if bits.size == 0:
        return None
    final = bits[-FINAL_WINDOW:].mean()
    for t in range(1, bits.size + 1):
        trailing = bits[max(0, t - STEADY_WINDOW):t].mean()
        if abs(trailing - final) <= STEADY_REL_TOL * final:
            return t
    return None


@dataclass
class ResultRow:
    scenario: str
    G: int
    mode: str
    M: int
    baseline_bits: int
    huffman_bits_frozen: float
    huffman_bits_adaptive: float
    entropy: float
    adaptive_stderr: float
    adaptive_total_bits: int
    messages: int
    switching_rate: float | None
    steady_state: int | None
    ordering_ok: bool = True
    p_hat: list[float] = field(repr=False, default_factory=list)


@dataclass
class ExperimentReport:
    config: dict
    rows: list[ResultRow]
    convergence: dict[tuple[str, int, str], np.ndarray]
    per_symbol_bits: dict[tuple[str, int, str], np.ndarray] = field(repr=False, default_factory=dict)

    def row(self, scenario: str, G: int, mode: str = POOLED) -> ResultRow:
        for r in self.rows:
            if (r.scenario, r.G, r.mode) == (scenario, G, mode):
                return r
        raise KeyError((scenario, G, mode))


def run_experiment(cfg: ExperimentConfig, threads: int = 1, codebook: Codebook | None = None) -> ExperimentReport:
    """Simulate every scenario, cluster size and probability mode in ``cfg``.

    Adaptive numbers come from the on-the-fly codec; frozen numbers code the
    same symbols with a Huffman code fixed from a separate ``warmup``-symbol
    run; ``entropy`` is the empirical (conditional) entropy lower bound in
    bits per OFDM symbol.
    """
    cfg.validate()
    cb = codebook if codebook is not None else resolve_codebook(cfg)
    if cb.Mt != cfg.Mt:
        raise ConfigError(f"codebook has Mt={cb.Mt}, experiment has Mt={cfg.Mt}")
    header = log2_int(cb.N)
    tt = build_transition_table(cb)
    base = Path(cfg.base_dir) if cfg.base_dir else None
    rows, convergence, per_symbol = [], {}, {}
    for sc in cfg.scenarios:
        spec = sc.correlation_spec(cfg.L, cfg.Mt, cfg.Mr, base)
        factor = channel_factor(spec)
        jobs = [
            _TrialJob(spec, factor, cb, tt, tuple(cfg.cluster_sizes), tuple(sc.modes), cfg.symbols,
                      cfg.seed, k, cfg.rebuild_every, cfg.verify)
            for k in range(cfg.trials)
        ]
        log.info("scenario %s: %d trials x %d symbols", sc.name, cfg.trials, cfg.symbols)
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_run_trial, jobs))
        else:
            results = [_run_trial(j) for j in jobs]

        warm = _warmup_counts(factor, spec, cb, tt, cfg, sc.modes)
        for g in cfg.cluster_sizes:
            M = cfg.L // g
            idx_all = np.concatenate([r[g]["indices"] for r in results])
            sw = [r[g]["switching"] for r in results]
            switching = None if sw[0] is None else float(np.mean(sw))
            pooled_counts = warm[g, POOLED]
            p_hat = ((pooled_counts + 1) / (pooled_counts.sum() + cb.N)).tolist()
            for mode in sc.modes:
                bits = np.stack([r[g]["bits"][mode] for r in results])
                lengths = frozen_lengths(warm[g, mode])
                frozen = header + _coded_lengths(idx_all, tt, lengths, mode)
                h = _empirical_entropy(_symbol_counts(idx_all, tt, mode))
                curve = bits.mean(axis=0)
                stderr = float(bits.std(ddof=1) / math.sqrt(bits.size)) if bits.size > 1 else 0.0
                key = (sc.name, g, mode)
                convergence[key] = curve
                per_symbol[key] = bits
                rows.append(
                    ResultRow(
                        scenario=sc.name,
                        G=g,
                        mode=mode,
                        M=M,
                        baseline_bits=M * header,
                        huffman_bits_frozen=float(frozen.mean()),
                        huffman_bits_adaptive=float(bits.mean()),
                        entropy=header + (M - 1) * h,
                        adaptive_stderr=stderr,
                        adaptive_total_bits=int(bits.sum()),
                        messages=int(bits.size),
                        switching_rate=switching,
                        steady_state=steady_state_symbol(curve),
                        ordering_ok=bool(bits.mean() >= frozen.mean() - ORDERING_SIGMAS * stderr
                                         and frozen.mean() >= header + (M - 1) * h - 1e-9),
                        p_hat=p_hat,
                    )
                )
    return ExperimentReport(cfg.to_dict(), rows, convergence, per_symbol)


def convergence_curve(report: ExperimentReport, scenario: str, G: int, mode: str = POOLED):
    """(t, mean bits) over trials, t = 1..T, and the steady-state symbol."""
    curve = report.convergence[(scenario, G, mode)]
    if curve.size < MIN_CONVERGENCE_SYMBOLS:
        warnings.warn(f"only {curve.size} symbols; steady state needs >= {MIN_CONVERGENCE_SYMBOLS} to be meaningful")
    return np.arange(1, curve.size + 1), curve, steady_state_symbol(curve)


# -- outputs ------------------------------------------------------------------

TABLE_COLUMNS = ["G", "baseline_bits", "huffman_bits_frozen", "huffman_bits_adaptive", "entropy"]
CONVERGENCE_COLUMNS = ["scenario", "G", "mode", "t", "mean_bits"]


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def table_name(scenario: str, mode: str) -> str:
    return f"table_{scenario}_{mode}.csv"


def emit_outputs(report: ExperimentReport, out_dir, plots: bool = True) -> list[Path]:
    """Write per-scenario tables, convergence.csv, report.json and plots."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        groups: dict[tuple[str, str], list[ResultRow]] = {}
        for sc in report.config.get("scenarios", []):
            for mode in sc["modes"]:
                groups[(sc["name"], mode)] = []
        for r in report.rows:
            groups.setdefault((r.scenario, r.mode), []).append(r)
        for (name, mode), rows in groups.items():
            path = out / table_name(name, mode)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(TABLE_COLUMNS)
                for r in rows:
                    w.writerow([_fmt(getattr(r, c)) for c in TABLE_COLUMNS])
            written.append(path)

        path = out / "convergence.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CONVERGENCE_COLUMNS)
            for (name, g, mode), curve in report.convergence.items():
                for t, b in enumerate(curve, start=1):
                    w.writerow([name, g, mode, t, _fmt(b)])
        written.append(path)

        path = out / "report.json"
        payload = {"config": report.config, "notes": REPORT_NOTES, "rows": [asdict(r) for r in report.rows]}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(path)

        if plots and report.convergence:
            written.append(_plot_convergence(report, out / "convergence.png"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write outputs: {exc.strerror}", str(getattr(exc, "filename", out))) from exc
    return written


def _plot_convergence(report: ExperimentReport, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (name, g, mode), curve in report.convergence.items():
        ax.plot(np.arange(1, curve.size + 1), curve, label=f"{name} G={g} {mode}")
    ax.set_xlabel("OFDM symbol")
    ax.set_ylabel("feedback bits per OFDM symbol")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"G": int(r["G"]), "baseline_bits": int(r["baseline_bits"]),
             **{c: float(r[c]) for c in TABLE_COLUMNS[2:]}} for r in rows]

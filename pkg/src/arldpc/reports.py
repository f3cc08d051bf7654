"""Family files, report tables and run manifests."""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import re
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from .density_evolution import DEConfig, threshold
from .ensembles import (
    EnsembleWarning,
    FamilySpec,
    ProtographError,
    edge_spread,
    gcd_spread,
    preset,
)
from .protograph import degree_census, gilbert_varshamov, parse_matrices, parse_matrix
from .weight_enumerator import delta_min, estimate_growth_large_L, scaled_growth

TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Malformed or invalid family file / command-line configuration."""


# ---------------------------------------------------------------------------
# L lists and family files
# ---------------------------------------------------------------------------


def parse_L_list(text: str) -> tuple[int, ...]:
    """Parse ``"3..8, 10 20"`` style lists of termination factors."""
    out: list[int] = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        m = re.fullmatch(r"(\d+)\.\.(\d+)", tok)
        try:
            if m:
                a, b = int(m.group(1)), int(m.group(2))
                if b < a:
                    raise ConfigError(f"empty range {tok!r}")
                out.extend(range(a, b + 1))
            else:
                out.append(int(tok))
        except ValueError:
            raise ConfigError(f"bad termination factor {tok!r}") from None
    if not out or min(out) < 1:
        raise ConfigError(f"termination factors must be positive integers, got {text!r}")
    return tuple(out)


def _key_line(lines: list[str], section: str, key: str) -> int:
    """1-based line of ``key`` inside ``[section]`` (0 if not found)."""
    in_sec = False
    for i, line in enumerate(lines, start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            in_sec = s[1:-1].strip() == section
        elif in_sec and re.match(rf"{re.escape(key)}\s*[=:]", s, flags=re.IGNORECASE):
            return i
    return 0


def parse_family_text(text: str, source: str = "<family file>") -> tuple[list[FamilySpec], list[str]]:
    """Parse an INI-style family file; returns (specs, warnings).

    One section per family::

        [example1]
        family = spread           # gcd | spread | preset
        target =
            3 6
            1 1 1 1 1 1
            ...
        components =              # matrix literals, one after another
            3 6
            ...
        L_list = 2..8, 20

    ``gcd`` sections give ``J`` and ``K``; ``preset`` sections give ``id``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    lines = text.splitlines()
    specs: list[FamilySpec] = []
    notes: list[str] = []
    if not cp.sections():
        raise ConfigError(f"{source}: no family sections found")
    for name in cp.sections():
        sec = cp[name]

        def where(key: str) -> str:
            return f"{source}:{_key_line(lines, name, key)}: [{name}] {key}"

        def matrix_error(key: str, exc: Exception) -> ConfigError:
            # matrix messages count lines within the value, which starts on the key's line
            line = _key_line(lines, name, key)
            msg = str(exc)
            m = re.match(r"line (\d+): ", msg)
            if m:
                line, msg = line + int(m.group(1)) - 1, msg[m.end():]
            return ConfigError(f"{source}:{line}: [{name}] {key}: {msg}")

        def need(key: str) -> str:
            if key not in sec:
                raise ConfigError(f"{source}: [{name}] missing required key {key!r}")
            return sec[key]

        kind = need("family").strip().lower()
        L_list: tuple[int, ...] = ()
        if "L_list" in sec:
            try:
                L_list = parse_L_list(sec["L_list"])
            except ConfigError as exc:
                raise ConfigError(f"{where('L_list')}: {exc}") from None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EnsembleWarning)
            try:
                if kind == "gcd":
                    J_text, K_text = need("J"), need("K")
                    try:
                        J, K = int(J_text), int(K_text)
                    except ValueError:
                        raise ConfigError(f"{source}: [{name}] J and K must be integers") from None
                    conv = gcd_spread(J, K)
                    spec = FamilySpec(name, "gcd", J=J, K=K, L_list=L_list, notes=conv.warnings)
                elif kind == "spread":
                    try:
                        target = parse_matrix(need("target"))
                    except ProtographError as exc:
                        raise matrix_error("target", exc) from None
                    try:
                        comps = tuple(parse_matrices(need("components")))
                    except ProtographError as exc:
                        raise matrix_error("components", exc) from None
                    conv = edge_spread(target, comps)
                    spec = FamilySpec(name, "spread", target=target, components=comps, L_list=L_list,
                                      notes=conv.warnings)
                elif kind == "preset":
                    base = preset(need("id"))
                    spec = FamilySpec(name, base.kind, base.J, base.K, base.target, base.components,
                                      L_list or base.L_list, base.tabulated_as, base.notes)
                else:
                    raise ConfigError(f"{where('family')}: unknown family kind {kind!r} (gcd | spread | preset)")
            except ProtographError as exc:
                raise ConfigError(f"{source}: [{name}] {exc}") from None
        for w in caught:
            notes.append(f"[{name}] {w.message}")
        specs.append(spec)
    return specs, notes


def load_family_file(path: str) -> tuple[list[FamilySpec], list[str]]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read family file: {exc}") from None
    return parse_family_text(text, source=path)


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass
class ReportTable:
    columns: list[str]
    rows: list[dict[str, Any]]
    caption: str = ""
    tags: dict[tuple[int, str], str] = field(default_factory=dict)  # (row, column) -> provenance

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({c: _cell(row.get(c)) for c in self.columns})
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "caption": self.caption,
            "columns": self.columns,
            "rows": [{c: _cell(r.get(c)) for c in self.columns} for r in self.rows],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ConfigError(f"unknown output format {fmt!r}")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def fmt4(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def fmt3(x: float | None) -> str:
    return "" if x is None else f"{x:.3f}"


# ---------------------------------------------------------------------------
# per-(family, L) jobs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdJob:
    family: FamilySpec
    L: int
    cfg: DEConfig


@dataclass(frozen=True)
class GrowthJob:
    family: FamilySpec
    L: int
    tol: float
    seed: int


def run_threshold_job(job: ThresholdJob):
    return threshold(job.family.terminated(job.L).protograph, job.cfg)


def run_growth_job(job: GrowthJob):
    return delta_min(job.family.terminated(job.L).protograph, tol=job.tol, seed=job.seed)


def run_jobs(fn: Callable, jobs: Sequence, workers: int = 1) -> list:
    """Map ``fn`` over ``jobs`` in order; results do not depend on ``workers``."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _rate_cells(rate: Fraction) -> dict[str, Any]:
    return {"rate_num": rate.numerator, "rate_den": rate.denominator, "rate": f"{float(rate):.4f}"}


def threshold_table(families: Sequence[FamilySpec], L_override=None, cfg: DEConfig = DEConfig(),
                    workers: int = 1) -> tuple[ReportTable, list[str]]:
    jobs = [ThresholdJob(f, L, cfg) for f in families for L in (L_override or f.L_list)]
    results = run_jobs(run_threshold_job, jobs, workers)
    rows, status = [], []
    for job, res in zip(jobs, results):
        rate = job.family.rate(job.L)
        shannon = float(1 - rate)
        rows.append({
            "family": job.family.name, "L": job.L, "rate_num": rate.numerator, "rate_den": rate.denominator,
            "epsilon_star": fmt4(res.epsilon), "shannon": fmt4(shannon), "gap": fmt4(shannon - res.epsilon),
            "iterations": res.iterations,
        })
        status.append("zero-threshold" if res.zero_threshold else "ok")
    cols = ["family", "L", "rate_num", "rate_den", "epsilon_star", "shannon", "gap", "iterations"]
    return ReportTable(cols, rows, "BEC density-evolution thresholds"), status


def growth_table(families: Sequence[FamilySpec], L_override=None, tol: float = 1e-5, seed: int = 0,
                 workers: int = 1) -> tuple[ReportTable, list[str]]:
    jobs = [GrowthJob(f, L, tol, seed) for f in families for L in (L_override or f.L_list)]
    results = run_jobs(run_growth_job, jobs, workers)
    rows, status = [], []
    for job, res in zip(jobs, results):
        fam = job.family
        ms = fam.analysis_source().m_s
        Lt = fam.termination_factor(job.L)
        rate = fam.rate(job.L)
        dm = res.delta_min
        rows.append({
            "family": fam.name, "L": job.L, "rate": f"{rate.numerator}/{rate.denominator}",
            "delta_min": fmt4(dm), "scaled": fmt3(None if dm is None else _scaled_limit(dm, Lt, ms)),
            "asymptotically_good": res.asymptotically_good, "solver_status": res.status,
        })
        status.append(res.status)
    cols = ["family", "L", "rate", "delta_min", "scaled", "asymptotically_good", "solver_status"]
    return ReportTable(cols, rows, "Minimum distance growth rates"), status


def family_table(families: Sequence[FamilySpec], L_override=None) -> ReportTable:
    rows = []
    for f in families:
        conv = f.convolutional()
        for L in (L_override or f.L_list):
            ens = f.terminated(L)
            cen = degree_census(ens.protograph)
            rows.append({
                "family": f.name, "kind": f.kind, "m_s": conv.m_s, "b_c": conv.b_c, "b_v": conv.b_v,
                "L": L, "n_c": ens.protograph.n_c, "n_v": ens.protograph.n_v,
                "rate_num": ens.rate.numerator, "rate_den": ens.rate.denominator,
                "rate_nonpositive": ens.rate_nonpositive,
                "check_census": " ".join(f"{d}:{n}" for d, n in cen.checks.items()),
                "var_census": " ".join(f"{d}:{n}" for d, n in cen.variables.items()),
            })
    cols = ["family", "kind", "m_s", "b_c", "b_v", "L", "n_c", "n_v", "rate_num", "rate_den",
            "rate_nonpositive", "check_census", "var_census"]
    return ReportTable(cols, rows, "Terminated ensemble structure")


# ---------------------------------------------------------------------------
# summary tables
# ---------------------------------------------------------------------------

TABLE1_COMPUTED_L = (3, 4, 5, 6, 7, 8)
TABLE1_ESTIMATED_L = (10, 20)
TABLE1_THRESHOLD_L = (3, 4, 5, 6, 7, 8, 9, 10, 20)
TABLE3_L = (2, 3, 4, 5, 6, 7, 8)
TABLE3_ESTIMATED_L = (20,)


def _scaled_limit(dm: float, Lt: int, ms: int) -> float:
    """Scaled growth of the reported (four-decimal) growth rate, at three-decimal precision."""
    return round(scaled_growth(round(dm, 4), Lt, ms), 3)


def table1(computed_L=TABLE1_COMPUTED_L, threshold_L=TABLE1_THRESHOLD_L, estimated_L=TABLE1_ESTIMATED_L,
           tol: float = 1e-5, seed: int = 0, workers: int = 1, cfg: DEConfig = DEConfig()
           ) -> tuple[ReportTable, list[str]]:
    """Rates, growth rates (computed / scaled estimate), thresholds and gaps of the (3,6) GCD family."""
    fam = preset("gcd(3,6)")
    ms = fam.m_s
    all_L = sorted(set(computed_L) | set(threshold_L) | set(estimated_L))
    thr = dict(zip(all_L, run_jobs(run_threshold_job, [ThresholdJob(fam, L, cfg) for L in all_L], workers)))
    gro = dict(zip(computed_L, run_jobs(run_growth_job, [GrowthJob(fam, L, tol, seed) for L in computed_L],
                                        workers)))
    status = [r.status for r in gro.values()] + ["zero-threshold" for r in thr.values() if r.zero_threshold]
    limit = None
    if computed_L and gro[max(computed_L)].delta_min is not None:
        Lmax = max(computed_L)
        limit = _scaled_limit(gro[Lmax].delta_min, Lmax, ms)
    rows, tags = [], {}
    for L in all_L:
        rate = fam.rate(L)
        cap = float(1 - rate)
        row = {"L": str(L), "rate": f"{rate.numerator}/{rate.denominator}", "delta_min": "", "delta_source": "",
               "scaled": "", "epsilon_star": fmt4(thr[L].epsilon), "capacity": fmt4(cap),
               "gap": fmt4(cap - thr[L].epsilon)}
        if L in gro and gro[L].delta_min is not None:
            row["delta_min"] = fmt4(gro[L].delta_min)
            row["scaled"] = fmt3(_scaled_limit(gro[L].delta_min, L, ms))
            row["delta_source"] = "computed"
        elif L in estimated_L and limit is not None:
            row["delta_min"] = fmt4(estimate_growth_large_L(limit, L, ms))
            row["scaled"] = fmt3(limit)
            row["delta_source"] = "scaled-estimate"
        tags[(len(rows), "delta_min")] = row["delta_source"]
        rows.append(row)
    rows.append(_plateau_row(rows, {"rate": "1/2", "capacity": fmt4(0.5)}))
    cols = ["L", "rate", "delta_min", "delta_source", "scaled", "epsilon_star", "capacity", "gap"]
    cap = "Parameters of the terminated (3,6)-regular GCD family"
    return ReportTable(cols, rows, cap, tags), status


def _plateau_row(rows: list[dict], extra: dict) -> dict:
    """The infinity row: thresholds from the largest computed L, growth rate 0."""
    last = rows[-1]
    out = {k: "" for k in last}
    out["L"] = "inf"
    for k, v in last.items():
        if k.startswith("epsilon") or k.endswith("_eps"):
            out[k] = v
        elif k == "delta_min" or k.endswith("_delta"):
            out[k] = "0"
        elif k.endswith("delta_source"):
            out[k] = "plateau"
    out.update(extra)
    if "capacity" in out and "epsilon_star" in out and out["epsilon_star"]:
        out["gap"] = fmt4(float(out["capacity"]) - float(out["epsilon_star"]))
    return out


def table3(computed_L=TABLE3_L, threshold_L=TABLE3_L + TABLE3_ESTIMATED_L, estimated_L=TABLE3_ESTIMATED_L,
           examples=(1, 2, 3, 4), tol: float = 1e-5, seed: int = 0, workers: int = 1,
           cfg: DEConfig = DEConfig()) -> tuple[ReportTable, list[str]]:
    """Thresholds and growth rates of the edge-spreading examples."""
    fams = [preset(e) for e in examples]
    all_L = sorted(set(computed_L) | set(threshold_L) | set(estimated_L))
    tjobs = [ThresholdJob(f, L, cfg) for f in fams for L in all_L]
    gjobs = [GrowthJob(f, L, tol, seed) for f in fams for L in computed_L]
    thr = dict(zip([(j.family.name, j.L) for j in tjobs], run_jobs(run_threshold_job, tjobs, workers)))
    gro = dict(zip([(j.family.name, j.L) for j in gjobs], run_jobs(run_growth_job, gjobs, workers)))
    status = [r.status for r in gro.values()] + ["zero-threshold" for r in thr.values() if r.zero_threshold]
    limits = {}
    for f in fams:
        if computed_L and gro[(f.name, max(computed_L))].delta_min is not None:
            Lmax = max(computed_L)
            limits[f.name] = _scaled_limit(gro[(f.name, Lmax)].delta_min, f.termination_factor(Lmax),
                                           f.analysis_source().m_s)
    rows, tags = [], {}
    cols = ["L", "rate"]
    for f in fams:
        cols += [f"{f.name}_eps", f"{f.name}_delta", f"{f.name}_delta_source"]
    for L in all_L:
        rate = fams[0].rate(L)
        row = {"L": str(L), "rate": f"{rate.numerator}/{rate.denominator}"}
        for f in fams:
            row[f"{f.name}_eps"] = fmt4(thr[(f.name, L)].epsilon)
            g = gro.get((f.name, L))
            if g is not None and g.delta_min is not None:
                row[f"{f.name}_delta"] = fmt4(g.delta_min)
                row[f"{f.name}_delta_source"] = "computed"
            elif L in estimated_L and f.name in limits:
                ms = f.analysis_source().m_s
                row[f"{f.name}_delta"] = fmt4(estimate_growth_large_L(limits[f.name], f.termination_factor(L), ms))
                row[f"{f.name}_delta_source"] = "scaled-estimate"
            else:
                row[f"{f.name}_delta"] = ""
                row[f"{f.name}_delta_source"] = ""
            tags[(len(rows), f"{f.name}_delta")] = row[f"{f.name}_delta_source"]
        rows.append(row)
    inf = _plateau_row(rows, {"rate": "1/2"})
    for f in fams:
        inf[f"{f.name}_delta_source"] = "plateau"
    rows.append(inf)
    return ReportTable(cols, rows, "Edge-spreading examples: thresholds and growth rates", tags), status


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

FIG_DEFAULTS = {
    2: (("gcd(3,6)", "gcd(4,8)", "gcd(5,10)"), "3..8"),
    3: (("gcd(3,6)", "gcd(4,8)", "gcd(5,10)"), "3..20"),
    4: (("gcd(3,9)", "gcd(3,12)", "gcd(4,6)"), "3..20"),
}


def figdata(figure: int, L_text: str | None = None, growth_L_text: str | None = None, tol: float = 1e-5,
            seed: int = 0, workers: int = 1, cfg: DEConfig = DEConfig()) -> tuple[ReportTable, list[str]]:
    """Curve points (family, L, rate, metric, value) plus reference curves."""
    if figure not in FIG_DEFAULTS:
        raise ConfigError(f"figure must be one of {sorted(FIG_DEFAULTS)}, got {figure}")
    names, default_L = FIG_DEFAULTS[figure]
    L_list = parse_L_list(L_text or default_L)
    rows: list[dict[str, Any]] = []
    status: list[str] = []
    fams = [preset(n) for n in names]

    def fam_L(f: FamilySpec, Ls):
        ms = f.m_s
        return [L for L in Ls if float(f.rate(L)) > 0 and L > ms]

    if figure in (3, 4):
        jobs = [ThresholdJob(f, L, cfg) for f in fams for L in fam_L(f, L_list)]
        for job, res in zip(jobs, run_jobs(run_threshold_job, jobs, workers)):
            rate = job.family.rate(job.L)
            rows.append({"family": job.family.name, "L": job.L, "rate": f"{float(rate):.6f}",
                         "metric": "epsilon_star", "value": fmt4(res.epsilon)})
            status.append("zero-threshold" if res.zero_threshold else "ok")
        rates = sorted({float(r["rate"]) for r in rows})
        for R in rates:
            rows.append({"family": "shannon", "L": "", "rate": f"{R:.6f}", "metric": "epsilon_star",
                         "value": fmt4(1 - R)})
    if figure in (2, 4):
        gL = parse_L_list(growth_L_text) if growth_L_text else (parse_L_list("3..8") if figure == 2 else
                                                                  parse_L_list("3..6"))
        jobs = [GrowthJob(f, L, tol, seed) for f in fams for L in fam_L(f, gL)]
        grows = []
        for job, res in zip(jobs, run_jobs(run_growth_job, jobs, workers)):
            rate = job.family.rate(job.L)
            grows.append({"family": job.family.name, "L": job.L, "rate": f"{float(rate):.6f}",
                          "metric": "delta_min", "value": fmt4(res.delta_min)})
            status.append(res.status)
        rows += grows
        for R in sorted({float(r["rate"]) for r in grows}):
            if 0 < R < 1:
                rows.append({"family": "gilbert-varshamov", "L": "", "rate": f"{R:.6f}", "metric": "delta_min",
                             "value": fmt4(gilbert_varshamov(R))})
    cols = ["family", "L", "rate", "metric", "value"]
    return ReportTable(cols, rows, f"Curve data for figure {figure}"), status


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    command_line: list[str]
    config_digest: str
    seed: int
    tool_version: str
    statuses: list[str]
    wall_time: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def digest(*parts: str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode())
        h.update(b"\0")
    return h.hexdigest()

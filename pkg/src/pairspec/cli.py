"""
Command-line front end: sweeps over ``p``, report emission and calibration.

Subcommands ``symbol``, ``phase``, ``asym``, ``spectral``, ``bounds``,
``sweep`` and ``calibrate``.  Every subcommand writes one table; the exit
code is 0 only if every row succeeded.

CSV columns (fixed order; empty cells on failed rows)::

    row        row index
    status     'ok' or 'failed'
    error      error message of a failed row
    d, m_plus, m_minus, p
    xi, xi_err, sigma, sigma_err          phase-space averages
    xi_scaled     xi * p^(-(d+1)/2)
    sigma_scaled  sigma * p^(-(d-1)/2)
    N, S          lattice count and moment
    N_scaled      N * p^(-(d+1)/2)
    S_over_sigma  S / sigma
    bound_<family>                        bound values (constants 1)
    asym_xi, asym_sigma                   leading coefficients
"""
import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, asdict

import numpy as np

from . import bounds, phasespace, spectral
from .potential import (gaussian_potential, load_radial_table, model_potential,
                        radial_potential, smooth_well)
from .symbol import PhysParams, smooth_symbol, symbol_g, symbol_h

__all__ = ["SweepConfig", "parse_potential", "parse_variant", "run_sweep",
           "calibrate_constants", "emit_report", "main"]

ANALYSES = ("phase", "spectral", "bounds", "asym")


def _kv(text):
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        k, _, v = item.partition("=")
        if not _:
            raise ValueError(f"expected key=value, got {item!r}")
        out[k.strip()] = float(v)
    return out


def parse_potential(desc, d=3):
    """Build a potential from ``kind:key=value,...``.

    Kinds: ``model:theta=..,v=..``, ``gaussian:a=..,w=..``,
    ``well:a=..,R=..``, ``zero`` and ``file:PATH`` (radius/value table).
    """
    kind, _, rest = desc.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        return load_radial_table(rest.strip(), d=d)
    if kind == "zero":
        return radial_potential(lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                                d=d, support=1.0, sup=0.0, kind="zero")
    kw = _kv(rest)
    if kind == "model":
        return model_potential(kw.pop("theta"), kw.pop("v", 1.0), d=d)
    if kind == "gaussian":
        return gaussian_potential(kw.get("a", 1.0), kw.get("w", 1.0), d=d)
    if kind == "well":
        return smooth_well(kw.get("a", 1.0), kw.get("R", 1.0), d=d)
    raise ValueError(f"unknown potential kind {kind!r}")


def parse_variant(desc):
    """``h``, ``h-sigma:r=..`` or ``g-sigma:r=..,delta=..`` -> (name, r, delta)."""
    name, _, rest = desc.partition(":")
    kw = _kv(rest)
    if name not in ("h", "h-sigma", "g-sigma"):
        raise ValueError(f"unknown variant {name!r}")
    if name != "h" and "r" not in kw:
        raise ValueError("smoothed variants need r")
    if name == "g-sigma" and "delta" not in kw:
        raise ValueError("g-sigma needs delta")
    return name, kw.get("r"), kw.get("delta")


@dataclass
class SweepConfig:
    """Parameters of a sweep over ``p``.

    ``box`` is the half-width of the lattice box divided by ``p`` (the
    potential support grows linearly with ``p`` in the pair frame).  A
    ``grid_n`` of 0 or ``None`` uses ``grid_n_per_p * p`` rounded up to a
    power of two.
    """
    d: int = 3
    m_plus: float = 0.5
    m_minus: float = 0.5
    p: list = field(default_factory=list)
    potential: str = "gaussian:a=1,w=1"
    analyses: tuple = ("phase",)
    families: tuple = ()
    grid_n: int = 32
    grid_n_per_p: float = 2.0
    box: float = 4.0
    variant: str = "h"
    quad_tol: float = 1e-8
    eig_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        self.p = [float(x) for x in self.p]
        if any(b <= a for a, b in zip(self.p, self.p[1:])):
            raise ValueError("p list must be strictly increasing")
        bad = set(self.analyses) - set(ANALYSES)
        if bad:
            raise ValueError(f"unknown analyses {sorted(bad)}")
        if "bounds" in self.analyses and any(x < self.m_plus + self.m_minus for x in self.p):
            raise ValueError("bound families need p >= M")

    def default_families(self):
        if self.families:
            return tuple(self.families)
        return ("bd13", "bd24") if self.d == 3 else ("bd13d4", "bd245")


def _columns(cfg):
    cols = ["row", "status", "error", "d", "m_plus", "m_minus", "p"]
    if "phase" in cfg.analyses:
        cols += ["xi", "xi_err", "sigma", "sigma_err", "xi_scaled", "sigma_scaled"]
    if "spectral" in cfg.analyses:
        cols += ["N", "S", "N_scaled"]
        if "phase" in cfg.analyses:
            cols += ["S_over_sigma"]
    if "bounds" in cfg.analyses:
        cols += [f"bound_{f}" for f in cfg.default_families()]
    if "asym" in cfg.analyses:
        cols += ["asym_xi", "asym_sigma"]
    return cols


def _grid(cfg, p):
    n = cfg.grid_n
    if not n:
        n = 1 << max(1, math.ceil(math.log2(cfg.grid_n_per_p * p)))
    return spectral.GridSpec(cfg.d, int(n), cfg.box * p)


def _row_seed(seed, row):
    return int(np.random.default_rng([seed, row]).integers(2 ** 31))


def _one_row(cfg, V, i, p):
    params = PhysParams(cfg.m_plus, cfg.m_minus, p)
    d = cfg.d
    row = {"row": i, "status": "ok", "error": "", "d": d,
           "m_plus": cfg.m_plus, "m_minus": cfg.m_minus, "p": p}
    detail = {}
    if "phase" in cfg.analyses:
        rep = phasespace.phase_space(V, params, cfg.quad_tol)
        row.update(xi=rep.xi_value, xi_err=rep.xi_error, sigma=rep.sigma_value,
                   sigma_err=rep.sigma_error,
                   xi_scaled=rep.xi_value * p ** (-(d + 1) / 2),
                   sigma_scaled=rep.sigma_value * p ** (-(d - 1) / 2))
        detail["phase"] = {"xi_value": rep.xi_value, "xi_error": rep.xi_error,
                           "sigma_value": rep.sigma_value, "sigma_error": rep.sigma_error,
                           "region_breakdown": {k: {str(j): float(x) for j, x in v.items()}
                                                for k, v in rep.region_breakdown.items()}}
    if "spectral" in cfg.analyses:
        name, r, delta = parse_variant(cfg.variant)
        op = spectral.build_operator(V, params, _grid(cfg, p), name, r=r, delta=delta)
        spec = spectral.negative_spectrum(op, tol=cfg.eig_tol, seed=_row_seed(cfg.seed, i))
        row.update(N=spec.count, S=spec.moment, N_scaled=spec.count * p ** (-(d + 1) / 2))
        if "phase" in cfg.analyses:
            row["S_over_sigma"] = spec.moment / row["sigma"] if row["sigma"] > 0 else None
        detail["spectrum"] = {"eigenvalues": [float(x) for x in spec.eigenvalues],
                              "count": spec.count, "moment": spec.moment,
                              "residuals": [float(x) for x in spec.residuals],
                              "converged": spec.converged, "eps_count": spec.eps_count,
                              "method": spec.method}
    if "bounds" in cfg.analyses:
        detail["bounds"] = {}
        for fam in cfg.default_families():
            fn = bounds.clr_rhs if fam in bounds.CLR_FAMILIES else bounds.lt_rhs
            rep = fn(V, params, fam)
            row[f"bound_{fam}"] = rep.value
            detail["bounds"][fam] = {"family": rep.family, "value": rep.value,
                                     "terms": [asdict(t) for t in rep.terms],
                                     "constants": rep.constants}
    if "asym" in cfg.analyses:
        row["asym_xi"] = phasespace.asym_leading("xi_std", V=V).value
        row["asym_sigma"] = phasespace.asym_leading("sigma_std", V=V).value
    return row, detail


def run_sweep(cfg):
    """Evaluate the enabled analyses for every ``p``.

    Returns
    -------
    rows : list of dict
        Flat rows keyed by the csv column names.
    details : list of dict
        Nested per-row results for json output.
    """
    V = parse_potential(cfg.potential, cfg.d)
    cols = _columns(cfg)
    rows, details = [], []
    for i, p in enumerate(cfg.p):
        try:
            row, detail = _one_row(cfg, V, i, p)
        except Exception as exc:  # reported per row
            row = {"row": i, "status": "failed", "error": f"{type(exc).__name__}: {exc}",
                   "d": cfg.d, "m_plus": cfg.m_plus, "m_minus": cfg.m_minus, "p": p}
            detail = {}
        rows.append({c: row.get(c) for c in cols})
        details.append(detail)
    return rows, details


def calibrate_constants(rows, families):
    """Smallest multiplier per family making the bound dominate every row.

    The multiplier scales both terms of a family.  Counting families are
    compared with ``N`` and moment families with ``S``.

    Raises
    ------
    ValueError
        If no row succeeded.
    """
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        raise ValueError("no successful rows to calibrate on")
    out = {"label": "empirical", "rows": len(ok), "constants": {}}
    for fam in families:
        key = "N" if fam in bounds.CLR_FAMILIES else "S"
        c = 0.0
        for r in ok:
            b = r.get(f"bound_{fam}")
            m = r.get(key)
            if b is None or m is None:
                raise ValueError(f"rows lack the columns needed for {fam}")
            if m > 0:
                c = max(c, m / b)
        out["constants"][fam] = c
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def emit_report(rows, fmt="csv", path=None, details=None, meta=None):
    """Write the table as csv or json to ``path`` (stdout if ``None``).

    Failed rows keep their identifying columns; numeric cells are empty.
    Floats are written with ``repr`` so values round-trip exactly.
    ``meta`` and ``details`` are added to json output only.
    """
    if fmt == "csv":
        cols = list(rows[0]) if rows else ["row", "status"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in cols])
        text = buf.getvalue()
    elif fmt == "json":
        payload = {"meta": meta or {}, "rows": rows}
        if details is not None:
            payload["details"] = details
        text = json.dumps(_plain(payload), indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.generic):
        return o.item()
    return o


# -- argument handling ------------------------------------------------------------

def _common(ap):
    ap.add_argument("--config", help="INI file; command-line flags override it")
    ap.add_argument("--d", type=int)
    ap.add_argument("--m-plus", type=float)
    ap.add_argument("--m-minus", type=float)
    ap.add_argument("--p", type=float, action="append", help="repeatable")
    ap.add_argument("--potential")
    ap.add_argument("--grid-n", type=int)
    ap.add_argument("--box", type=float, help="box half-width divided by p")
    ap.add_argument("--variant")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--analyses", help="comma-separated subset of phase,spectral,bounds,asym")


def _read_config(path):
    """Read an INI file with sections ``[sweep]``, ``[grid]``, ``[output]``."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    s = cp["sweep"] if cp.has_section("sweep") else {}
    g = cp["grid"] if cp.has_section("grid") else {}
    o = cp["output"] if cp.has_section("output") else {}
    out = {}
    for key, conv in (("d", int), ("m_plus", float), ("m_minus", float), ("potential", str),
                      ("tol", float), ("seed", int)):
        if key in s:
            out[key] = conv(s[key])
    if "p" in s:
        out["p"] = [float(x) for x in s["p"].replace(",", " ").split()]
    for key in ("analyses", "families"):
        if key in s:
            out[key] = tuple(x.strip() for x in s[key].split(",") if x.strip())
    for key, conv in (("n", int), ("box", float), ("variant", str)):
        if key in g:
            out["grid_n" if key == "n" else key] = conv(g[key])
    for key in ("out", "format"):
        if key in o:
            out[key] = o[key]
    return out


def _settings(args, analyses):
    st = {"d": 3, "m_plus": 0.5, "m_minus": 0.5, "p": [], "potential": "gaussian:a=1,w=1",
          "analyses": analyses, "families": (), "grid_n": 32, "box": 4.0, "variant": "h",
          "tol": 1e-8, "seed": 0, "out": None, "format": "csv"}
    if args.config:
        st.update(_read_config(args.config))
        if analyses != ANALYSES:
            st["analyses"] = analyses
    for key in ("d", "m_plus", "m_minus", "p", "potential", "grid_n", "box", "variant",
                "tol", "seed", "out", "format"):
        v = getattr(args, key, None)
        if v is not None:
            st[key] = v
    if getattr(args, "analyses", None):
        st["analyses"] = tuple(a.strip() for a in args.analyses.split(",") if a.strip())
    return st


def _config(st):
    return SweepConfig(d=st["d"], m_plus=st["m_plus"], m_minus=st["m_minus"], p=st["p"],
                       potential=st["potential"], analyses=tuple(st["analyses"]),
                       families=tuple(st["families"]), grid_n=st["grid_n"], box=st["box"],
                       variant=st["variant"], quad_tol=st["tol"], seed=st["seed"])


def _meta(cfg):
    return {"config": asdict(cfg), "threads": os.environ.get("OMP_NUM_THREADS", "default")}


def _cmd_symbol(args):
    st = _settings(args, ("symbol",))
    params = PhysParams(st["m_plus"], st["m_minus"], st["p"][0] if st["p"] else 1.0)
    pts = np.array([[float(c) for c in s.split(",")] for s in args.xi])
    if pts.shape[1] != st["d"]:
        raise ValueError("each --xi needs d components")
    name, r, delta = parse_variant(st["variant"])
    if name == "h":
        vals = symbol_h(pts, params)
    else:
        vals = smooth_symbol(pts, r, params, "H" if name == "h-sigma" else "G",
                             delta=delta, quad_tol=st["tol"])
    rows = [{"row": i, "status": "ok", "error": "", "xi": " ".join(map(repr, x.tolist())),
             "H": float(symbol_h(x, params)), "value": float(v)} for i, (x, v) in enumerate(zip(pts, vals))]
    if args.delta is not None:
        for row, x in zip(rows, pts):
            row["G"] = float(symbol_g(x, params, args.delta))
    emit_report(rows, st["format"], st["out"])
    return 0


def _cmd_asym(args):
    st = _settings(args, ("asym",))
    params = PhysParams(st["m_plus"], st["m_minus"], 1.0)
    pot = st["potential"]
    rows = []
    for i, regime in enumerate(args.regime):
        try:
            if regime.endswith("weak"):
                kw = _kv(pot.partition(":")[2]) if pot.startswith("model") else {}
                c = phasespace.asym_leading(regime, theta=kw.get("theta"), v=kw.get("v", 1.0),
                                            d=st["d"], params=params)
            else:
                c = phasespace.asym_leading(regime, V=parse_potential(pot, st["d"]))
            rows.append({"row": i, "status": "ok", "error": "", "regime": regime,
                         "value": c.value, "power": c.power})
        except Exception as exc:
            rows.append({"row": i, "status": "failed", "error": f"{type(exc).__name__}: {exc}",
                         "regime": regime, "value": None, "power": None})
    emit_report(rows, st["format"], st["out"])
    return int(any(r["status"] != "ok" for r in rows))


def _run_table(args, analyses):
    st = _settings(args, analyses)
    if getattr(args, "families", None):
        st["families"] = tuple(args.families.split(","))
    cfg = _config(st)
    rows, details = run_sweep(cfg)
    emit_report(rows, st["format"], st["out"], details, _meta(cfg))
    return cfg, rows


def _cmd_calibrate(args):
    st = _settings(args, ("spectral", "bounds"))
    if args.families:
        st["families"] = tuple(args.families.split(","))
    st["analyses"] = tuple(sorted(set(st["analyses"]) | {"spectral", "bounds"},
                                  key=ANALYSES.index))
    cfg = _config(st)
    rows, _ = run_sweep(cfg)
    rec = calibrate_constants(rows, cfg.default_families())
    text = json.dumps(rec, indent=1) + "\n"
    if st["out"]:
        with open(st["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return int(any(r["status"] != "ok" for r in rows))


def build_parser():
    ap = argparse.ArgumentParser(prog="pairspec", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("symbol", help="evaluate the kinetic symbol")
    _common(sp)
    sp.add_argument("--xi", action="append", required=True, help="comma-separated point")
    sp.add_argument("--delta", type=float, help="also report the dilated symbol")
    sp = sub.add_parser("asym", help="leading asymptotic coefficients")
    _common(sp)
    sp.add_argument("--regime", action="append",
                    choices=("xi_std", "sigma_std", "xi_weak", "sigma_weak"), required=True)
    for name, help_ in (("phase", "phase-space averages"), ("spectral", "lattice spectra"),
                        ("bounds", "bound right-hand sides"), ("sweep", "all analyses"),
                        ("calibrate", "empirical bound constants")):
        sp = sub.add_parser(name, help=help_)
        _common(sp)
        if name in ("bounds", "sweep", "calibrate"):
            sp.add_argument("--families", help="comma-separated bound families")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "symbol":
            return _cmd_symbol(args)
        if args.command == "asym":
            return _cmd_asym(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        analyses = {"phase": ("phase",), "spectral": ("spectral",), "bounds": ("bounds",),
                    "sweep": ANALYSES}[args.command]
        _, rows = _run_table(args, analyses)
    except (ValueError, FileNotFoundError) as exc:
        print(f"pairspec: error: {exc}", file=sys.stderr)
        return 2
    return int(any(r["status"] != "ok" for r in rows))


if __name__ == "__main__":
    sys.exit(main())

"""How the acceptance quantities move when the box grows from L = 4 to L = 8.

The seed lives in |x| < 2 either way; at fixed n a larger box means a coarser
grid, so the same N can drop below resolution.  Results go to
runs/box_size.json.  About fifteen minutes on one core.

Run: python demos/06_box_size.py
"""
import json
from pathlib import Path

from ipmlab.config import parse_config
from ipmlab.experiments import (check_operator_identity, make_grid, run_sweep, seed_scaling_checks,
                                seed_scaling_rows, sweep_checks)

out = {}
for L in (4.0, 8.0):
    res = {}
    cfg = parse_config(f"grid:\n  n: 1024\n  L: {L}\n")
    res["operator_identity"] = check_operator_identity(make_grid(cfg)).value

    cfg = parse_config(f"grid:\n  n: 2048\n  L: {L}\nseed:\n  N: [4, 6, 8, 10, 12]\n")
    rows = seed_scaling_rows(cfg)
    res["seed_rows_resolved"] = sum(r["status"] == "ok" for r in rows)
    res["seed_scaling"] = {c.name: c.value for c in seed_scaling_checks(rows, cfg)}

    cfg = parse_config(f"grid:\n  L: {L}\n")
    members = run_sweep(cfg)
    res["sweep"] = {c.name: c.value for c in sweep_checks(members, cfg)}
    res["members"] = {m.N: {"eps": m.eps, "M": m.M, "leading": m.leading,
                            "slope_over_leading": (m.slope or float("nan")) / m.leading,
                            "lower_bound_all": all(r["verdict"] for r in m.reports),
                            "M_stride2_drop": m.M_stride_sensitivity} for m in members}
    out[L] = res
    print(f"L = {L:g}:", json.dumps(res, indent=1, default=float))

Path("runs").mkdir(exist_ok=True)
Path("runs/box_size.json").write_text(json.dumps(out, indent=1, sort_keys=True, default=float) + "\n")

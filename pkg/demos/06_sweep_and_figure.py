"""A small beta sweep written to CSV and SVG, the same way `qkl sweep` does."""

# %%
import tempfile
from pathlib import Path

from qkl.sweep import SweepSpec, read_csv, run_sweep, write_csv, write_svg_chart

# %%
spec = SweepSpec(beta_min=1e-6, beta_max=1e-1, points=12, workers=2)
rows = run_sweep(spec)
for row in rows:
    log10 = "" if row.log10_kl is None else f"{row.log10_kl:+.3f}"
    print(f"{row.model:<15} {row.beta:<10.3g} {row.kl:<+14.6e} {log10:<7} {row.deformed_norm:<10.6f} {'|'.join(row.flags)}")

# %% [markdown]
# Rows where the value is not above its error estimate (or is negative)
# have no log10 and drop out of the chart.

# %%
out = Path(tempfile.mkdtemp(prefix="qkl_demo_"))
write_csv(rows, out / "sweep.csv")
write_svg_chart(rows, out / "sweep.svg")
assert read_csv(out / "sweep.csv") == rows
print("wrote", out / "sweep.csv", "and", out / "sweep.svg")

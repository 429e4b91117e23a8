# Where do initial conditions end up? Writes basin.pgm to the working directory.
from pathlib import Path

from heuncap.analysis import BasinSpec, basin_raster, find_sink_orbit

sink = find_sink_orbit()
grid = basin_raster(BasinSpec(resolution=(180, 180)), sink=sink)
for cls, n in grid.counts().items():
    print(f"{cls.name.lower():10s} {n}")
Path("basin.pgm").write_bytes(grid.to_pgm())
# the "undecided" cells settle on a second cycle at x2 = -10, -20 on the
# negative axis, which the classifier does not name

"""
AQI from raw concentrations
===========================

How a pair of hourly PM readings turns into an index and a health category,
and why the 24-hour averaging mode matters.
"""

###########################################################################
# A single reading.  PM2.5 is truncated to one decimal and PM10 to an
# integer before interpolation, so 12.09 ug/m3 still counts as "Good".

from aqf.aqi import DEFAULT_TABLE, aqi_series, composite_aqi, sub_index

for pm25, pm10 in [(5, 22), (12.09, 54.9), (25.0, 80), (75, 197)]:
    r = composite_aqi(pm25, pm10)
    print(f"pm25={pm25:>6} pm10={pm10:>6} -> {r.composite:3d} {r.category.value:<18} (driven by {r.dominant})")

###########################################################################
# The breakpoint table ships as JSON inside the package.

for seg in DEFAULT_TABLE.segments["pm25"]:
    print(f"  {seg.c_lo:>6} .. {seg.c_hi:<6} -> {seg.i_lo:>3} .. {seg.i_hi}")

###########################################################################
# A short pollution episode.  The instantaneous index reacts at once, while
# the trailing 24-hour mean lags behind and peaks lower.

import numpy as np

hours = np.arange(48)
pm25 = 10 + 60 * np.exp(-0.5 * ((hours - 20) / 3) ** 2)
pm10 = 2.5 * pm25
instant = [r.composite for r in aqi_series(pm25, pm10, mode="instant")]
daily = [r.composite for r in aqi_series(pm25, pm10, mode="trailing24h")]
for h in range(12, 36, 4):
    print(f"hour {h:2d}: instant {instant[h]:3d}   trailing24h {daily[h]:3d}")

###########################################################################
# Above the top of the table the index clamps at 500 and says so.

print(sub_index("pm25", 800.0), composite_aqi(800.0, 10).clamped)

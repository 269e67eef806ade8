"""
Exploring an hourly PM dataset
==============================

Correlations, stationarity and grouped means on the synthetic dataset, the
same analysis ``aqf analyze`` writes to disk.
"""

###########################################################################
# Generate the default dataset and clean it (nothing is dropped here, but a
# real file usually loses a few rows).

from aqf.stats import adf_report, format_adf_report, grouped_means, pearson_corr_matrix
from aqf.synth import SynthSpec, synth_generate
from aqf.timeseries import add_ratio_column, clean

frame, report = clean(synth_generate(SynthSpec()))
frame, _ = add_ratio_column(frame)
print(report)

###########################################################################
# Pearson correlations.  PM2.5 tracks PM10 closely and humidity mirrors
# temperature, both by construction of the generator.

cm = pearson_corr_matrix(frame, ("temp", "rh", "ws", "pm25", "pm10"))
print("      " + " ".join(f"{c:>6}" for c in cm.columns))
for name, row in zip(cm.columns, cm.matrix):
    print(f"{name:>6} " + " ".join(f"{v:6.2f}" for v in row))

###########################################################################
# Augmented Dickey-Fuller tests.  With strictly hourly timestamps the
# elapsed-time column is an exact straight line, so its regression is
# singular and reported as such instead of producing a number.

print(format_adf_report(adf_report(frame)))

###########################################################################
# Grouped means: day versus night and by wind sector.

for grouping in ("day_night", "wd_sectors"):
    g = grouped_means(frame, grouping)
    for label in g.labels:
        row = g.row(label)
        print(f"{grouping:>10} {label:<5} n={row['count']:5d}  pm25={row['mean_pm25']:6.1f}  pm10={row['mean_pm10']:6.1f}")

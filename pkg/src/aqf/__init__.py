"""Air-quality analysis and PM2.5/PM10 forecasting.

Submodules
----------
timeseries   CSV ingestion, cleaning and the ``ObservationFrame`` container
preprocess   min-max scaling, chronological splits, lookback windows
stats        Pearson correlation, ADF stationarity test, grouped means
aqi          EPA breakpoint AQI for PM2.5 and PM10
nn           numpy Bi-LSTM with hand-written BPTT and Adam
metrics      regression error metrics
synth        deterministic synthetic hourly dataset
cli          the ``aqf`` command-line tool
"""

__version__ = "0.1.0"

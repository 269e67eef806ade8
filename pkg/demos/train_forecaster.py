"""
Training the Bi-LSTM forecaster
===============================

Scale, window, train, score and forecast.  The full 20-epoch run takes
about a minute on one core; set ``AQF_DEMO_EPOCHS`` to shorten it.
"""

import os

import numpy as np

from aqf.metrics import evaluate
from aqf.nn import BiLstmNetwork, TrainingConfig, one_step_predictions, predict, train
from aqf.preprocess import DEFAULT_FEATURES, chrono_split, fit_scaler, make_windows, transform
from aqf.synth import SynthSpec, synth_generate

###########################################################################
# Chronological 80/20 split.  The scaler only ever sees the training rows.

frame = synth_generate(SynthSpec())
train_part, test_part = chrono_split(frame, 0.8)
scaler = fit_scaler(train_part)
windows = make_windows(transform(scaler, train_part), lookback=24)
print(f"{len(windows)} training windows of shape {windows.inputs.shape[1:]}")

###########################################################################
# Two bidirectional LSTM layers, a wide dense layer, and a sigmoid head for
# the two scaled targets.

net = BiLstmNetwork.build(DEFAULT_FEATURES, 24, seed=0, scaler=scaler)
for spec in net.architecture():
    print(spec)

epochs = int(os.environ.get("AQF_DEMO_EPOCHS", 20))
history = train(net, windows, TrainingConfig(epochs=epochs), progress=lambda r: print(f"epoch {r.epoch:2d}  loss {r.mean_loss:.4e}"))

###########################################################################
# One-step-ahead predictions on the held-out tail, in ug/m3.  Windows that
# end in the test period may start in the training period.

rows, predicted, actual = one_step_predictions(net, frame)
mask = rows >= len(train_part)
report = evaluate(predicted[mask], actual[mask])
for name in ("pooled", "pm25", "pm10"):
    m = report[name]
    print(f"{name:>6}: rmse {m.rmse:6.2f}  mae {m.mae:6.2f}  r2 {m.r2:.4f}")
print(f"pm10 rmse / std: {report['pm10'].rmse / np.std(test_part['pm10']):.3f}")

###########################################################################
# A recursive 12-hour forecast.  Predictions feed back into the PM slots
# of the window while weather features are held at their last values.

fc = predict(net, frame, steps=12)
for t, (p25, p10), a in zip(fc.timestamps, fc.values, fc.aqi):
    print(f"{t}  pm25 {p25:6.1f}  pm10 {p10:6.1f}  AQI {a.composite:3d} {a.category.value}")

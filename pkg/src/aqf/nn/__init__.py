"""From-scratch bidirectional LSTM forecaster."""

from .adam import AdamState, adam_step
from .io import load_model, save_model
from .layers import BiLstmLayer, DenseLayer, LstmCellParams, bilstm_forward, lstm_cell_forward
from .network import DEFAULT_LAYERS, BiLstmNetwork, mse_loss, network_forward
from .train import Forecast, TrainingConfig, TrainingLog, one_step_predictions, predict, train

__all__ = [
    "AdamState",
    "adam_step",
    "load_model",
    "save_model",
    "BiLstmLayer",
    "DenseLayer",
    "LstmCellParams",
    "bilstm_forward",
    "lstm_cell_forward",
    "DEFAULT_LAYERS",
    "BiLstmNetwork",
    "mse_loss",
    "network_forward",
    "Forecast",
    "TrainingConfig",
    "TrainingLog",
    "one_step_predictions",
    "predict",
    "train",
]

"""Small numpy neural-network engine: LSTM, MLP, ADAM training, model files."""

from vchest.neural.io import (ModelFormatError, ModelVersionError, load_model, loads_model,
                              dumps_model, save_model)
from vchest.neural.lstm import (LstmParams, LstmState, init_lstm, lstm_cell, lstm_forward_seq,
                                lstm_step, seq_loss_grad)
from vchest.neural.mlp import MlpParams, init_mlp, mlp_forward, mlp_loss_grad
from vchest.neural.train import (Dataset, GradCheckReport, TrainConfig, TrainingError, grad_check,
                                 train)

__all__ = [
    "Dataset", "GradCheckReport", "LstmParams", "LstmState", "MlpParams", "ModelFormatError",
    "ModelVersionError", "TrainConfig", "TrainingError", "dumps_model", "grad_check",
    "init_lstm", "init_mlp", "load_model", "loads_model", "lstm_cell", "lstm_forward_seq",
    "lstm_step", "mlp_forward", "mlp_loss_grad", "save_model", "seq_loss_grad", "train",
]

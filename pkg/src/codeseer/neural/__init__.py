from .cells import GRUCellParams, RNNCellParams, gru_cell_forward, rnn_cell_forward
from .model import SequenceModel, cross_entropy_bits, new_model
from .training import TrainConfig, train
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "GRUCellParams", "RNNCellParams", "gru_cell_forward", "rnn_cell_forward",
    "SequenceModel", "new_model", "cross_entropy_bits",
    "TrainConfig", "train",
    "Checkpoint", "save_checkpoint", "load_checkpoint",
]

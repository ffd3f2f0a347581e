"""Toy-generator training and export to the solver's weight format."""

from .export import (
    ExportBundle,
    export_layers,
    export_random_generator,
    lower_generator,
    refs_path_for,
    train_toy_generator,
)
from .format import (
    DenseLayer,
    forward_chain,
    read_refs_csv,
    write_refs_csv,
    write_weight_file,
)
from .lowering import lower_module, verify_lowering
from .models import ToyDiscriminator, ToyGenerator

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

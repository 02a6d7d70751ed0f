from .constraints import Primary, Unique, ConstraintFailedError
from .decorator import record
from .model_file import load_model, save_model, save_boundaries

__all__ = [
    # modules
    'commons',
    'constraints',
    'decorator',
    'fetch',
    'mass_actions',
    'model_file',
    # constraints
    'Primary',
    'Unique',
    'ConstraintFailedError',
    # functions
    'record',
    'load_model',
    'save_model',
    'save_boundaries'
]

from .config import PipelineConfig, SyntheticConfig, load_config
from .division import Domain, DomainDecision, divide, generate_osl_prototypes
from .errors import ConfigError, DataError, DomainDivisionError, NumericalError

__version__ = "1.0.0"

__all__ = [
    # modules
    'boundary',
    'cli',
    'config',
    'data',
    'division',
    'embedding',
    'errors',
    'evt',
    'experiment',
    'metrics',
    'pipeline',
    'scorer',
    'store',
    'synthetic',
    # configuration
    'PipelineConfig',
    'SyntheticConfig',
    'load_config',
    # division
    'Domain',
    'DomainDecision',
    'divide',
    'generate_osl_prototypes',
    # errors
    'DomainDivisionError',
    'ConfigError',
    'DataError',
    'NumericalError'
]

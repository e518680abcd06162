from .loading import (
    DatasetLayoutError,
    ImageReadError,
    load_dataset,
    read_manifest,
    save_dataset,
)
from .processing import ProcessingError, process_samples
from .validating import ValidationError, validate_samples

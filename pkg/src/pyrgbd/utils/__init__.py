from .logger import get_logger
from .resolver import resolve_ablation_name, resolve_table_name
from .seeding import sample_rng, seed_everything

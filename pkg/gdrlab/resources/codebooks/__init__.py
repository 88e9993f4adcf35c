from .base import CodebookStrategy, lookup
from .baseline import BaselineCodebook
from .grouped import GroupedCodebook
from .codebook_selector import build_codebook, save_codebook, load_codebook
from .sampling import gumbel_sample, utilization_loss, utilization_histogram, one_hot_grid, tokens_from_hard
from .accounting import param_count, compute_count
